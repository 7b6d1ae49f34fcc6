use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use trajfda::depth::{assign_bands, rank, MsbdConfig};
use trajfda::detect::{detect_all, DetectConfig, Rule};
use trajfda::io::{emit_report, ranked_curves, read_tracks, write_tracks, BandsReport, Report, RunConfig, TrackTable};
use trajfda::preprocess::{align_common_start, smooth_resample, Align, Lambda, RawTrack, SmoothingConfig};
use trajfda::{profile_ensemble, PointwiseDepthMethod, TimeGrid, TrajectoryEnsemble, WoConfig};

const WIGGLY: [&str; 2] = ["w07", "w19"];

/// 24 migration-like tracks on irregular, partly overlapping time windows.
fn waterfowl_like(seed: u64) -> Vec<RawTrack> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.02).unwrap();
    (0..24)
        .map(|i| {
            let id = format!("w{i:02}");
            let len = rng.random_range(200..=1000);
            let (t0, t1) = (rng.random_range(0.0..0.1), rng.random_range(0.9..1.0));
            let mut times: Vec<f64> = (0..len).map(|_| rng.random_range(t0..t1)).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let (bend, lon0, lat0) = (rng.random_range(0.8..1.2), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
            let wiggle = if WIGGLY.contains(&id.as_str()) { 0.6 } else { 0.0 };
            let coords = times
                .iter()
                .map(|&t| {
                    let lon = lon0 + 10.0 * t + noise.sample(&mut rng);
                    let lat = lat0 + 4.0 * bend * (std::f64::consts::PI * t).sin()
                        + wiggle * (12.0 * std::f64::consts::PI * t).sin()
                        + noise.sample(&mut rng);
                    vec![lon, lat]
                })
                .collect();
            RawTrack::new(id, times, coords)
        })
        .collect()
}

#[test]
fn ingest_smooth_rank_detect_emit() {
    let tracks = waterfowl_like(11);
    assert!(tracks.iter().all(|t| (190..=1000).contains(&t.len())));
    let table = TrackTable { coord_names: vec!["lon".into(), "lat".into()], tracks };
    let csv = write_tracks(&table).unwrap();
    let read = read_tracks(csv.as_slice()).unwrap();
    assert_eq!(read.tracks.len(), 24);

    let cfg = SmoothingConfig { target_k: 200, lambda: Lambda::Gcv, align: Align::CommonStart };
    let ens = smooth_resample(&read.tracks, &cfg).unwrap();
    assert_eq!((ens.n(), ens.k(), ens.p()), (24, 200, 2));
    let start = ens.trajectories()[0].row(0).to_vec();
    assert!(ens.trajectories().iter().all(|t| t.row(0) == start.as_slice()));

    let method = PointwiseDepthMethod::Projection { directions: 180 };
    let profiles = profile_ensemble(&ens, method, WoConfig::default()).unwrap();
    let ranking = rank(&ens, &MsbdConfig::default()).unwrap();
    let report = detect_all(&ens, &profiles, &ranking, &DetectConfig::default()).unwrap();
    let wo_flagged: Vec<String> = report.flagged(Rule::Wo).into_iter().map(String::from).collect();
    for id in WIGGLY {
        assert!(wo_flagged.iter().any(|f| f == id), "{id} not flagged: {wo_flagged:?}");
    }
    assert!(wo_flagged.len() <= 4, "{wo_flagged:?}");

    let bands = assign_bands(&ranking).unwrap();
    let json = emit_report(&Report {
        config: RunConfig::default(),
        ranking: ranked_curves(&ranking),
        detection: Some(report),
        bands: Some(BandsReport::new(&bands, wo_flagged)),
    })
    .unwrap();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["ranking"].as_array().unwrap().len(), 24);

    let again = smooth_resample(&read_tracks(csv.as_slice()).unwrap().tracks, &cfg).unwrap();
    assert_eq!(again, ens);
}

/// A centre curve with five curves fanning out from it at pentagon angles.
fn fan(k: usize, starts: &[[f64; 2]; 6]) -> TrajectoryEnsemble {
    let grid = TimeGrid::uniform(0.0, 1.0, k).unwrap();
    let raw = (0..6)
        .map(|c| {
            let (r, theta) = if c == 0 { (0.0, 0.0) } else { (1.0, 2.0 * std::f64::consts::PI * c as f64 / 5.0) };
            let rows = grid
                .points()
                .iter()
                .map(|&t| {
                    vec![
                        starts[c][0] + 3.0 * t + r * t * theta.cos(),
                        starts[c][1] + t * t + r * t * theta.sin(),
                    ]
                })
                .collect();
            (format!("f{c}"), rows)
        })
        .collect();
    TrajectoryEnsemble::from_raw(raw, grid).unwrap()
}

#[test]
fn alignment_recovers_the_fan_ordering() {
    let scattered = [[4.0, -3.0], [-6.0, 2.0], [0.5, 7.0], [3.0, 3.0], [-2.0, -5.0], [9.0, 0.0]];
    let ens = fan(30, &scattered);
    let aligned = align_common_start(&ens).unwrap();
    let ranking = rank(&aligned, &MsbdConfig::default()).unwrap();
    assert_eq!(ranking.order[0], "f0");
    let top = ranking.msbd_of("f0").unwrap();
    for c in 1..6 {
        assert!(ranking.msbd_of(&format!("f{c}")).unwrap() < top);
    }
    // Pentagon: 5 of the 10 outer triangles contain the centre; at t = 0 all
    // curves coincide and every triangle does.
    assert!((top - (1.0 + 29.0 * 0.5) / 30.0).abs() < 1e-12, "{top}");
    assert_eq!(assign_bands(&ranking).unwrap().median_id, "f0");

    let unaligned = rank(&ens, &MsbdConfig::default()).unwrap();
    assert_ne!(unaligned.order[0], "f0");
}

#[test]
fn common_translation_leaves_wo_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let starts: [[f64; 2]; 6] = std::array::from_fn(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
    let base = fan(25, &starts);
    let noisy = base.map_curves(|_, r| r.iter().map(|v| v + 0.05 * rng.random_range(-1.0..1.0)).collect()).unwrap();
    let shifted = noisy.map_curves(|_, r| vec![r[0] + 123.25, r[1] - 40.5]).unwrap();
    let method = PointwiseDepthMethod::Projection { directions: 180 };
    for m in [method, PointwiseDepthMethod::Mahalanobis] {
        let a = profile_ensemble(&align_common_start(&noisy).unwrap(), m, WoConfig::default()).unwrap();
        let b = profile_ensemble(&align_common_start(&shifted).unwrap(), m, WoConfig::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.wo - y.wo).abs() <= 1e-8 * x.wo.abs().max(1.0), "{} {} {}", x.curve_id, x.wo, y.wo);
        }
    }
}
