//! File formats: ensemble CSV, label sidecars, JSON reports, run
//! configuration and SVG figures. Emitters return bytes; callers decide
//! where they go.

pub mod config;
pub mod csv;
pub mod figure;
pub mod json;
pub mod report;

pub use self::config::{MethodChoice, RunConfig, CONFIG_KEYS};
pub use self::csv::{
    default_coord_names, ensemble_from_tracks, ingest_csv, read_labels, read_tracks, tracks_from_ensemble,
    write_labels, write_tracks, TrackTable,
};
pub use self::figure::{
    emit_boxplot_svg, emit_msbdwo_json, emit_msbdwo_svg, parse_msbdwo_json, BoxplotFigure, Category,
    MsbdWoFigure, MsbdWoPoint, Style,
};
pub use self::report::{emit_report, ranked_curves, BandsReport, RankedCurve, Report};
