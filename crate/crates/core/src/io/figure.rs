//! Serializable figure models and their SVG/JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::depth::Boxplot;
use crate::ensemble::TrajectoryEnsemble;
use crate::error::{Error, Result};

use super::json::to_json;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 70.0;
const TICKS: usize = 5;

/// Where a curve falls in the boxplot partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Category {
    Median,
    /// Innermost band level holding the curve, in percent.
    Band(u8),
    Outer,
    Outlier,
}

impl From<Category> for String {
    fn from(c: Category) -> String {
        match c {
            Category::Median => "median".into(),
            Category::Band(l) => format!("b{l}"),
            Category::Outer => "outer".into(),
            Category::Outlier => "outlier".into(),
        }
    }
}

impl TryFrom<String> for Category {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        match s.as_str() {
            "median" => Ok(Category::Median),
            "outer" => Ok(Category::Outer),
            "outlier" => Ok(Category::Outlier),
            _ => s
                .strip_prefix('b')
                .and_then(|l| l.parse().ok())
                .map(Category::Band)
                .ok_or_else(|| format!("unknown category '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Style {
    pub median: String,
    /// Innermost band first.
    pub bands: [String; 3],
    pub outer: String,
    pub outlier: String,
    pub outlier_dash: String,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            median: "#000000".into(),
            bands: ["#800080".into(), "#ff00ff".into(), "#ffc0cb".into()],
            outer: "#bdbdbd".into(),
            outlier: "#ff0000".into(),
            outlier_dash: "6 4".into(),
        }
    }
}

impl Style {
    fn color(&self, cat: Category, levels: &[u8]) -> &str {
        match cat {
            Category::Median => &self.median,
            Category::Band(l) => {
                let i = levels.iter().position(|&x| x == l).unwrap_or(2).min(2);
                &self.bands[i]
            }
            Category::Outer => &self.outer,
            Category::Outlier => &self.outlier,
        }
    }
}

/// Drawing order: outer curves at the bottom, outliers on top.
fn draw_order(levels: &[u8]) -> Vec<Category> {
    let mut order = vec![Category::Outer];
    order.extend(levels.iter().rev().map(|&l| Category::Band(l)));
    order.push(Category::Median);
    order.push(Category::Outlier);
    order
}

fn categorize(bp: &Boxplot, id: &str) -> Category {
    if bp.outlier_ids.iter().any(|o| o == id) {
        Category::Outlier
    } else if bp.bands.median_id == id {
        Category::Median
    } else {
        bp.bands.level_of(id).map_or(Category::Outer, Category::Band)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotFigure {
    pub median_id: String,
    /// Curves whose innermost band is the key (the median excluded).
    pub band_members: BTreeMap<u8, Vec<String>>,
    pub outer_ids: Vec<String>,
    pub outlier_ids: Vec<String>,
    /// Planar polylines in ensemble order.
    pub curves: Vec<(String, Vec<[f64; 2]>)>,
    pub style: Style,
}

/// Planar coordinates of a curve: the first two coordinates, or `(t, x)` when `p = 1`.
fn planar(ens: &TrajectoryEnsemble, c: usize) -> Vec<[f64; 2]> {
    let tr = &ens.trajectories()[c];
    let t = ens.grid().points();
    tr.rows()
        .enumerate()
        .map(|(i, r)| if r.len() >= 2 { [r[0], r[1]] } else { [t[i], r[0]] })
        .collect()
}

impl BoxplotFigure {
    pub fn from_boxplot(ens: &TrajectoryEnsemble, bp: &Boxplot) -> Self {
        let mut band_members: BTreeMap<u8, Vec<String>> =
            bp.bands.bands.keys().map(|&l| (l, Vec::new())).collect();
        let mut outer_ids = vec![];
        for id in ens.ids() {
            match categorize(bp, id) {
                Category::Band(l) => band_members.entry(l).or_default().push(id.to_string()),
                Category::Outer => outer_ids.push(id.to_string()),
                _ => {}
            }
        }
        BoxplotFigure {
            median_id: bp.bands.median_id.clone(),
            band_members,
            outer_ids,
            outlier_ids: bp.outlier_ids.clone(),
            curves: (0..ens.n()).map(|c| (ens.ids()[c].to_string(), planar(ens, c))).collect(),
            style: Style::default(),
        }
    }

    pub fn levels(&self) -> Vec<u8> {
        self.band_members.keys().copied().collect()
    }

    pub fn category_of(&self, id: &str) -> Option<Category> {
        if self.median_id == id {
            return Some(Category::Median);
        }
        if self.outlier_ids.iter().any(|o| o == id) {
            return Some(Category::Outlier);
        }
        if self.outer_ids.iter().any(|o| o == id) {
            return Some(Category::Outer);
        }
        self.band_members
            .iter()
            .find(|(_, ids)| ids.iter().any(|b| b == id))
            .map(|(&l, _)| Category::Band(l))
    }

    /// Every curve sits in exactly one category.
    pub fn validate(&self) -> Result<()> {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        let all = std::iter::once(&self.median_id)
            .chain(self.band_members.values().flatten())
            .chain(&self.outer_ids)
            .chain(&self.outlier_ids);
        for id in all {
            *seen.entry(id).or_default() += 1;
        }
        for (id, _) in &self.curves {
            if seen.remove(id.as_str()) != Some(1) {
                return Err(Error::InvalidConfig(format!("curve '{id}' is not in exactly one category")));
            }
        }
        if let Some((id, _)) = seen.into_iter().next() {
            return Err(Error::UnknownId(id.to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsbdWoPoint {
    pub id: String,
    pub msbd: f64,
    pub wo: f64,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsbdWoFigure {
    /// Band levels of the boxplot, innermost first.
    pub levels: Vec<u8>,
    pub points: Vec<MsbdWoPoint>,
}

impl MsbdWoFigure {
    /// Outliers carry their depth relative to the retained curves.
    pub fn from_boxplot(bp: &Boxplot) -> Self {
        let points = bp
            .msbd
            .iter()
            .zip(&bp.profiles)
            .map(|(e, p)| MsbdWoPoint {
                id: e.curve_id.clone(),
                msbd: e.msbd,
                wo: p.wo,
                category: categorize(bp, &e.curve_id),
            })
            .collect();
        MsbdWoFigure { levels: bp.bands.bands.keys().copied().collect(), points }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick label with enough decimals to separate ticks across `span`.
fn tick_label(v: f64, span: f64) -> String {
    let decimals = if span > 0.0 { (2.0 - span.log10().floor()).clamp(0.0, 10.0) as usize } else { 2 };
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        format!("{:.decimals$}", 0.0)
    } else {
        s
    }
}

/// Linear map from a data box to the plotting area (y up).
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for [a, b] in points {
            if a.is_finite() && b.is_finite() {
                x = (x.0.min(a), x.1.max(a));
                y = (y.0.min(b), y.1.max(b));
            }
        }
        let widen = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 <= 0.0 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        Frame { x: widen(x), y: widen(y) }
    }

    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(out, "<g id=\"axes\" stroke=\"#000000\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"11\">");
        let _ = writeln!(out, "<line x1=\"{l:.2}\" y1=\"{b:.2}\" x2=\"{r:.2}\" y2=\"{b:.2}\"/>");
        let _ = writeln!(out, "<line x1=\"{l:.2}\" y1=\"{b:.2}\" x2=\"{l:.2}\" y2=\"{t:.2}\"/>");
        for i in 0..=TICKS {
            let f = i as f64 / TICKS as f64;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            let _ = writeln!(out, "<line x1=\"{xp:.2}\" y1=\"{b:.2}\" x2=\"{xp:.2}\" y2=\"{:.2}\"/>", b + 5.0);
            let _ = writeln!(
                out,
                "<text x=\"{xp:.2}\" y=\"{:.2}\" text-anchor=\"middle\" stroke=\"none\">{}</text>",
                b + 18.0,
                tick_label(xv, self.x.1 - self.x.0)
            );
            let _ = writeln!(out, "<line x1=\"{:.2}\" y1=\"{yp:.2}\" x2=\"{l:.2}\" y2=\"{yp:.2}\"/>", l - 5.0);
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" stroke=\"none\">{}</text>",
                l - 8.0,
                yp + 4.0,
                tick_label(yv, self.y.1 - self.y.0)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" stroke=\"none\">{}</text>",
            WIDTH / 2.0,
            HEIGHT - 20.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" stroke=\"none\" transform=\"rotate(-90 20 {:.2})\">{}</text>",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(y_label)
        );
        out.push_str("</g>\n");
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>");
}

fn category_name(c: Category) -> String {
    String::from(c)
}

/// Trajectory functional boxplot as a standalone SVG document.
pub fn emit_boxplot_svg(fig: &BoxplotFigure) -> String {
    let levels = fig.levels();
    let frame = Frame::fit(fig.curves.iter().flat_map(|(_, pts)| pts.iter().copied()));
    let mut out = String::new();
    header(&mut out, "Trajectory functional boxplot");
    frame.axes(&mut out, "x", "y");
    for cat in draw_order(&levels) {
        let color = fig.style.color(cat, &levels);
        let members: Vec<&(String, Vec<[f64; 2]>)> =
            fig.curves.iter().filter(|(id, _)| fig.category_of(id) == Some(cat)).collect();
        if members.is_empty() {
            continue;
        }
        let (width, dash) = match cat {
            Category::Median => ("2.5", String::new()),
            Category::Outlier => ("1.5", format!(" stroke-dasharray=\"{}\"", fig.style.outlier_dash)),
            _ => ("1", String::new()),
        };
        let _ = writeln!(
            out,
            "<g id=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"{dash}>",
            category_name(cat)
        );
        for (id, pts) in members {
            let coords: Vec<String> =
                pts.iter().map(|&[x, y]| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
            let _ = writeln!(out, "<polyline data-id=\"{}\" points=\"{}\"/>", escape(id), coords.join(" "));
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_msbdwo_json(fig: &MsbdWoFigure) -> Result<String> {
    to_json(fig)
}

pub fn parse_msbdwo_json(text: &str) -> Result<MsbdWoFigure> {
    serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("bad MSBD-WO JSON: {e}")))
}

/// Scatterplot of `(msbd, wo)` colored by category.
pub fn emit_msbdwo_svg(fig: &MsbdWoFigure) -> String {
    let levels = &fig.levels;
    let style = Style::default();
    let frame = Frame::fit(fig.points.iter().map(|p| [p.msbd, p.wo]));
    let mut out = String::new();
    header(&mut out, "MSBD-WO plot");
    frame.axes(&mut out, "MSBD", "WO");
    for cat in draw_order(levels) {
        let members: Vec<&MsbdWoPoint> = fig.points.iter().filter(|p| p.category == cat).collect();
        if members.is_empty() {
            continue;
        }
        let _ = writeln!(out, "<g id=\"{}\" fill=\"{}\">", category_name(cat), style.color(cat, levels));
        for p in members {
            if !(p.msbd.is_finite() && p.wo.is_finite()) {
                continue;
            }
            let _ = writeln!(
                out,
                "<circle data-id=\"{}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\"/>",
                escape(&p.id),
                frame.px(p.msbd),
                frame.py(p.wo)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
