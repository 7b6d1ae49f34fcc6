use std::path::PathBuf;

use trajfda::depth::{build_boxplot, BoxplotConfig};
use trajfda::io::{
    emit_boxplot_svg, emit_msbdwo_json, emit_msbdwo_svg, parse_msbdwo_json, BoxplotFigure, Category,
    MsbdWoFigure, MsbdWoPoint,
};
use trajfda::{PointwiseDepthMethod, TimeGrid, TrajectoryEnsemble};

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against the stored file; `TRAJFDA_BLESS=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var("TRAJFDA_BLESS").is_ok_and(|v| v == "1") {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert!(expected == actual, "{name} differs from the stored golden output");
}

/// Five planar curves on 12 points; `e` carries a high-frequency wiggle.
fn five_curves() -> TrajectoryEnsemble {
    let k = 12;
    let grid = TimeGrid::uniform(0.0, 1.0, k).unwrap();
    let t: Vec<f64> = grid.points().to_vec();
    let shapes: [(&str, f64, f64, f64); 5] =
        [("a", 0.0, 0.0, 0.0), ("b", 0.3, -0.2, 0.0), ("c", -0.25, 0.15, 0.0), ("d", 0.1, 0.35, 0.0), ("e", 0.05, 0.05, 1.2)];
    let raw = shapes
        .iter()
        .map(|&(id, dx, dy, wig)| {
            let rows = t
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    vec![4.0 * s + dx, (3.0 * s).sin() + dy + wig * sign * s]
                })
                .collect();
            (id, rows)
        })
        .collect();
    TrajectoryEnsemble::from_raw(raw, grid).unwrap()
}

fn fixture_boxplot() -> (TrajectoryEnsemble, trajfda::Boxplot) {
    let ens = five_curves();
    let cfg = BoxplotConfig { method: PointwiseDepthMethod::Mahalanobis, ..Default::default() };
    let bp = build_boxplot(&ens, &cfg).unwrap();
    (ens, bp)
}

#[test]
fn boxplot_svg_matches_golden() {
    let (ens, bp) = fixture_boxplot();
    assert_eq!(bp.outlier_ids, vec!["e"]);
    let fig = BoxplotFigure::from_boxplot(&ens, &bp);
    fig.validate().unwrap();
    let svg = emit_boxplot_svg(&fig);
    check_golden("boxplot5.svg", &svg);
    assert_eq!(svg, emit_boxplot_svg(&fig));
}

#[test]
fn median_is_black_and_outliers_dashed_on_top() {
    let (ens, bp) = fixture_boxplot();
    let fig = BoxplotFigure::from_boxplot(&ens, &bp);
    let svg = emit_boxplot_svg(&fig);
    let median_group = svg.lines().find(|l| l.starts_with("<g id=\"median\"")).unwrap();
    assert!(median_group.contains("stroke=\"#000000\""));
    let outlier_group = svg.lines().position(|l| l.starts_with("<g id=\"outlier\"")).unwrap();
    assert!(svg.lines().nth(outlier_group).unwrap().contains("stroke-dasharray"));
    let positions: Vec<usize> = ["outer", "b75", "b50", "b25", "median", "outlier"]
        .iter()
        .filter_map(|g| svg.find(&format!("<g id=\"{g}\"")))
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(svg.matches("stroke-dasharray").count(), 1);
}

#[test]
fn no_outliers_means_no_dashed_paths() {
    let (ens, bp) = fixture_boxplot();
    let mut fig = BoxplotFigure::from_boxplot(&ens, &bp);
    let e = fig.outlier_ids.pop().unwrap();
    fig.outer_ids.push(e);
    fig.validate().unwrap();
    let svg = emit_boxplot_svg(&fig);
    assert!(!svg.contains("stroke-dasharray"));
    assert!(!svg.contains("<g id=\"outlier\""));
}

#[test]
fn figure_partition_matches_boxplot() {
    let (ens, bp) = fixture_boxplot();
    let fig = BoxplotFigure::from_boxplot(&ens, &bp);
    assert_eq!(fig.median_id, bp.bands.median_id);
    assert_eq!(fig.outlier_ids, bp.outlier_ids);
    for id in ens.ids() {
        let expect = if bp.outlier_ids.iter().any(|o| o == id) {
            Category::Outlier
        } else if id == bp.bands.median_id {
            Category::Median
        } else {
            bp.bands.level_of(id).map_or(Category::Outer, Category::Band)
        };
        assert_eq!(fig.category_of(id), Some(expect), "{id}");
    }
    let mut broken = fig.clone();
    broken.outer_ids.push(fig.median_id.clone());
    assert!(broken.validate().is_err());
}

#[test]
fn msbdwo_json_golden_and_round_trip() {
    let (_, bp) = fixture_boxplot();
    let fig = MsbdWoFigure::from_boxplot(&bp);
    let json = emit_msbdwo_json(&fig).unwrap();
    check_golden("msbdwo5.json", &json);
    let parsed = parse_msbdwo_json(&json).unwrap();
    assert_eq!(emit_msbdwo_json(&parsed).unwrap(), json);
    check_golden("msbdwo5.svg", &emit_msbdwo_svg(&fig));

    let exact = MsbdWoFigure {
        levels: vec![25, 50, 75],
        points: vec![
            MsbdWoPoint { id: "m".into(), msbd: 0.75, wo: 0.125, category: Category::Median },
            MsbdWoPoint { id: "x".into(), msbd: 0.0, wo: 96.5, category: Category::Outlier },
        ],
    };
    assert_eq!(parse_msbdwo_json(&emit_msbdwo_json(&exact).unwrap()).unwrap(), exact);
}

#[test]
fn deepest_curve_is_rightmost_point() {
    let (_, bp) = fixture_boxplot();
    let fig = MsbdWoFigure::from_boxplot(&bp);
    let svg = emit_msbdwo_svg(&fig);
    let cx = |id: &str| -> f64 {
        let line = svg.lines().find(|l| l.contains(&format!("data-id=\"{id}\""))).unwrap();
        let start = line.find("cx=\"").unwrap() + 4;
        line[start..].split('"').next().unwrap().parse().unwrap()
    };
    let median = cx(&bp.bands.median_id);
    for p in &fig.points {
        assert!(cx(&p.id) <= median);
    }
    let top = fig.points.iter().max_by(|a, b| a.msbd.total_cmp(&b.msbd)).unwrap();
    assert_eq!(top.category, Category::Median);
}
