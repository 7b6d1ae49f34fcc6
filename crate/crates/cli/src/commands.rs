use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use trajfda::depth::{assign_bands_at, boxplot_from_flags, rank, Boxplot};
use trajfda::detect::{detect_all, wo_outliers, Rule, WoRuleConfig};
use trajfda::io::{
    default_coord_names, emit_boxplot_svg, emit_msbdwo_json, emit_msbdwo_svg, emit_report, ingest_csv,
    json::to_json, ranked_curves, write_labels, write_tracks, BandsReport, BoxplotFigure, MsbdWoFigure,
    Report, RunConfig, TrackTable,
};
use trajfda::outlyingness::{profile_ensemble, OutlyingnessProfile, WoConfig};
use trajfda::preprocess::smooth_resample;
use trajfda::simgen::{benchmark, generate, gp_sample, BenchmarkResult, MaternSpec};
use trajfda::{Error, RandomSeed, Result, TrajectoryEnsemble};

use crate::args::{
    BenchmarkArgs, BoxplotArgs, Command, DetectArgs, Format, GpSampleArgs, IngestArgs, MsbdwoArgs, RankArgs,
    SimulateArgs,
};

/// GP grid size when the config leaves `k` unset.
const GP_DEFAULT_K: usize = 200;

/// Whole-file write through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// `base` itself for a single alpha, else `stem_alpha<value>.ext`.
pub fn alpha_path(base: &Path, alpha: f64, several: bool) -> PathBuf {
    if !several {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_alpha{alpha}.{}", ext.to_string_lossy()),
        None => format!("{stem}_alpha{alpha}"),
    };
    base.with_file_name(name)
}

fn load_ensemble(path: &Path) -> Result<(TrajectoryEnsemble, Vec<String>)> {
    let table = ingest_csv(path)?;
    Ok((table.to_ensemble()?, table.coord_names))
}

fn ensemble_csv(ens: &TrajectoryEnsemble, names: Vec<String>) -> Result<Vec<u8>> {
    write_tracks(&TrackTable::from_ensemble(ens, names))
}

pub fn run(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a, cfg),
        Command::GpSample(a) => gp(a, cfg),
        Command::Ingest(a) => ingest(a, cfg),
        Command::Rank(a) => rank_cmd(a, cfg),
        Command::Detect(a) => detect(a, cfg),
        Command::Boxplot(a) => boxplot(a, cfg),
        Command::Msbdwo(a) => msbdwo(a, cfg),
        Command::Benchmark(a) => bench(a, cfg),
    }
}

fn simulate(a: &SimulateArgs, cfg: &RunConfig) -> Result<()> {
    let sim = generate(&cfg.model_spec())?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}_seed{}.csv", cfg.model.name(), cfg.seed)));
    let labels = a.labels.clone().unwrap_or_else(|| {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.with_file_name(format!("{stem}.labels.csv"))
    });
    let ens = &sim.ensemble;
    write_atomic(&out, &ensemble_csv(ens, default_coord_names(ens.p()))?)?;
    write_atomic(&labels, &write_labels(&ens.ids(), &sim.outlying))
}

fn gp(a: &GpSampleArgs, cfg: &RunConfig) -> Result<()> {
    let spec = MaternSpec { k: cfg.k.unwrap_or(GP_DEFAULT_K), ..MaternSpec::default() };
    let ens = gp_sample(&spec, cfg.n, RandomSeed(cfg.seed))?;
    emit(a.out.as_deref(), &ensemble_csv(&ens, default_coord_names(2))?)
}

fn ingest(a: &IngestArgs, cfg: &RunConfig) -> Result<()> {
    let table = ingest_csv(&a.input)?;
    let ens = smooth_resample(&table.tracks, &cfg.smoothing())?;
    emit(a.out.as_deref(), &ensemble_csv(&ens, table.coord_names)?)
}

fn with_alpha(cfg: &RunConfig, alpha: f64) -> RunConfig {
    RunConfig { alpha: vec![alpha], ..cfg.clone() }
}

fn rank_cmd(a: &RankArgs, cfg: &RunConfig) -> Result<()> {
    let (ens, _) = load_ensemble(&a.input)?;
    let ranking = rank(&ens, &cfg.msbd())?;
    let bands = assign_bands_at(&ranking, cfg.band_levels)?;
    let report = Report {
        config: cfg.clone(),
        ranking: ranked_curves(&ranking),
        detection: None,
        bands: Some(BandsReport::new(&bands, vec![])),
    };
    emit(a.out.as_deref(), emit_report(&report)?.as_bytes())
}

fn require_out_for_batches(out: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    if out.is_none() && cfg.alpha.len() > 1 {
        return Err(Error::InvalidConfig("several alpha values need --out".into()));
    }
    Ok(())
}

fn detect(a: &DetectArgs, cfg: &RunConfig) -> Result<()> {
    require_out_for_batches(a.out.as_deref(), cfg)?;
    let (ens, _) = load_ensemble(&a.input)?;
    let profiles = profile_ensemble(&ens, cfg.method(None), WoConfig::default())?;
    let ranking = rank(&ens, &cfg.msbd())?;
    let bands = assign_bands_at(&ranking, cfg.band_levels)?;
    let several = cfg.alpha.len() > 1;
    for &alpha in &cfg.alpha {
        let detection = detect_all(&ens, &profiles, &ranking, &cfg.detect(alpha))?;
        let outliers = detection.flagged(Rule::Wo).into_iter().map(String::from).collect();
        let report = Report {
            config: with_alpha(cfg, alpha),
            ranking: ranked_curves(&ranking),
            detection: Some(detection),
            bands: Some(BandsReport::new(&bands, outliers)),
        };
        let path = a.out.as_deref().map(|p| alpha_path(p, alpha, several));
        emit(path.as_deref(), emit_report(&report)?.as_bytes())?;
    }
    Ok(())
}

/// Boxplots for every configured alpha, sharing one set of WO profiles.
fn boxplots(ens: &TrajectoryEnsemble, cfg: &RunConfig) -> Result<Vec<(f64, Boxplot)>> {
    let profiles: Vec<OutlyingnessProfile> = profile_ensemble(ens, cfg.method(None), WoConfig::default())?;
    cfg.alpha
        .iter()
        .map(|&alpha| {
            let flags = wo_outliers(&profiles, &WoRuleConfig { alpha })?;
            let bp = boxplot_from_flags(ens, profiles.clone(), flags, &cfg.msbd(), cfg.band_levels)?;
            Ok((alpha, bp))
        })
        .collect()
}

fn boxplot(a: &BoxplotArgs, cfg: &RunConfig) -> Result<()> {
    let (ens, _) = load_ensemble(&a.input)?;
    let several = cfg.alpha.len() > 1;
    for (alpha, bp) in boxplots(&ens, cfg)? {
        let fig = BoxplotFigure::from_boxplot(&ens, &bp);
        fig.validate()?;
        write_atomic(&alpha_path(&a.out, alpha, several), emit_boxplot_svg(&fig).as_bytes())?;
        if let Some(report_path) = &a.report {
            let report = Report {
                config: with_alpha(cfg, alpha),
                ranking: ranked_curves(&bp.ranking),
                detection: None,
                bands: Some(BandsReport::new(&bp.bands, bp.outlier_ids.clone())),
            };
            write_atomic(&alpha_path(report_path, alpha, several), emit_report(&report)?.as_bytes())?;
        }
    }
    Ok(())
}

fn msbdwo(a: &MsbdwoArgs, cfg: &RunConfig) -> Result<()> {
    let (ens, _) = load_ensemble(&a.input)?;
    let format = a.format.unwrap_or_else(|| {
        match a.out.extension().map(|e| e.to_string_lossy().to_ascii_lowercase()) {
            Some(e) if e == "svg" => Format::Svg,
            _ => Format::Json,
        }
    });
    let several = cfg.alpha.len() > 1;
    for (alpha, bp) in boxplots(&ens, cfg)? {
        let fig = MsbdWoFigure::from_boxplot(&bp);
        let bytes = match format {
            Format::Json => emit_msbdwo_json(&fig)?,
            Format::Svg => emit_msbdwo_svg(&fig),
        };
        write_atomic(&alpha_path(&a.out, alpha, several), bytes.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchmarkOutput<'a> {
    config: &'a RunConfig,
    method: trajfda::PointwiseDepthMethod,
    k: usize,
    result: &'a BenchmarkResult,
}

/// Plain-text rendering in the layout of a rates table.
pub fn benchmark_table(result: &BenchmarkResult, k: usize, method: &str) -> String {
    let mut s = format!(
        "{}  k={}  replicates={}  method={}\n{:<6}{:>16}{:>16}\n",
        result.model.name(),
        k,
        result.replicates,
        method,
        "rule",
        "pc (sd)",
        "pf (sd)"
    );
    for (name, rule) in [("RMD", Rule::Rmd), ("MSBD", Rule::Msbd), ("WO", Rule::Wo)] {
        let r = result.rates(rule);
        s.push_str(&format!(
            "{:<6}{:>16}{:>16}\n",
            name,
            format!("{:.2} ({:.2})", r.pc_mean, r.pc_sd),
            format!("{:.2} ({:.2})", r.pf_mean, r.pf_sd)
        ));
    }
    s
}

fn bench(a: &BenchmarkArgs, cfg: &RunConfig) -> Result<()> {
    let spec = cfg.model_spec();
    let bcfg = cfg.benchmark();
    let result = benchmark(&spec, cfg.replicates, &bcfg)?;
    let method = match bcfg.method {
        trajfda::PointwiseDepthMethod::Projection { directions } => format!("projection({directions})"),
        trajfda::PointwiseDepthMethod::Mahalanobis => "mahalanobis".to_string(),
    };
    emit(None, benchmark_table(&result, spec.k, &method).as_bytes())?;
    if let Some(out) = &a.out {
        let json = to_json(&BenchmarkOutput { config: cfg, method: bcfg.method, k: spec.k, result: &result })?;
        write_atomic(out, json.as_bytes())?;
    }
    Ok(())
}
