//! Ensemble CSV: header `id,t,<c1>,<c2>,...`, one row per observation.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::ensemble::{TimeGrid, Trajectory, TrajectoryEnsemble};
use crate::error::{Error, Result};
use crate::preprocess::RawTrack;

/// Tracks read from one CSV, ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackTable {
    pub coord_names: Vec<String>,
    pub tracks: Vec<RawTrack>,
}

impl TrackTable {
    /// Tracks on one shared time vector become an ensemble directly.
    pub fn to_ensemble(&self) -> Result<TrajectoryEnsemble> {
        ensemble_from_tracks(&self.tracks)
    }

    pub fn from_ensemble(ens: &TrajectoryEnsemble, coord_names: Vec<String>) -> Self {
        TrackTable { coord_names, tracks: tracks_from_ensemble(ens) }
    }
}

/// `x, y, z` for up to three dimensions, otherwise `c1..cp`.
pub fn default_coord_names(p: usize) -> Vec<String> {
    if p <= 3 {
        ["x", "y", "z"][..p].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=p).map(|i| format!("c{i}")).collect()
    }
}

fn malformed(line: u64, reason: impl Into<String>) -> Error {
    Error::MalformedRow { line, reason: reason.into() }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    malformed(line, e.to_string())
}

fn parse_number(field: &str, line: u64, column: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| malformed(line, format!("column '{column}': '{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(malformed(line, format!("column '{column}' is not finite")));
    }
    Ok(v)
}

/// Reads tracks grouped by id, each sorted by time.
pub fn read_tracks<R: Read>(reader: R) -> Result<TrackTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyInput);
    }
    if header.len() < 3 {
        return Err(malformed(1, "header needs id, t and at least one coordinate column"));
    }
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    let width = names.len();
    let mut groups: BTreeMap<String, Vec<(f64, Vec<f64>)>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(malformed(
                line,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(malformed(line, "empty id"));
        }
        let t = parse_number(&record[1], line, &names[1])?;
        let coords = (2..width)
            .map(|j| parse_number(&record[j], line, &names[j]))
            .collect::<Result<Vec<_>>>()?;
        groups.entry(id.to_string()).or_default().push((t, coords));
    }
    if groups.is_empty() {
        return Err(Error::EmptyInput);
    }
    let tracks = groups
        .into_iter()
        .map(|(id, mut rows)| {
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::NonMonotoneTime(id));
            }
            let (times, coords) = rows.into_iter().unzip();
            Ok(RawTrack::new(id, times, coords))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrackTable { coord_names: names[2..].to_vec(), tracks })
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<TrackTable> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_tracks(std::io::BufReader::new(file))
}

/// CSV bytes with rows sorted by `(id, t)` and shortest round-trip numbers.
pub fn write_tracks(table: &TrackTable) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "t".to_string()];
    header.extend(table.coord_names.iter().cloned());
    wtr.write_record(&header).map_err(csv_error)?;
    let mut order: Vec<&RawTrack> = table.tracks.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    for track in order {
        if track.dim() != table.coord_names.len() {
            return Err(Error::GridMismatch(track.id.clone()));
        }
        let mut rows: Vec<usize> = (0..track.len()).collect();
        rows.sort_by(|&a, &b| track.times[a].total_cmp(&track.times[b]));
        for i in rows {
            let mut rec = vec![track.id.clone(), track.times[i].to_string()];
            rec.extend(track.coords[i].iter().map(f64::to_string));
            wtr.write_record(&rec).map_err(csv_error)?;
        }
    }
    wtr.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn tracks_from_ensemble(ens: &TrajectoryEnsemble) -> Vec<RawTrack> {
    let times = ens.grid().points().to_vec();
    ens.trajectories()
        .iter()
        .map(|tr| RawTrack::new(tr.id(), times.clone(), tr.rows().map(<[f64]>::to_vec).collect()))
        .collect()
}

/// Requires every track to share the same time vector; irregular tracks go
/// through [`crate::preprocess::smooth_resample`] instead.
pub fn ensemble_from_tracks(tracks: &[RawTrack]) -> Result<TrajectoryEnsemble> {
    let first = tracks.first().ok_or(Error::EmptyInput)?;
    if let Some(t) = tracks.iter().find(|t| t.times != first.times) {
        return Err(Error::GridMismatch(t.id.clone()));
    }
    let grid = TimeGrid::new(first.times.clone())?;
    let trajectories = tracks
        .iter()
        .map(|t| Trajectory::from_rows(t.id.clone(), &t.coords))
        .collect();
    TrajectoryEnsemble::new(trajectories, grid)
}

/// Label sidecar: `id,clean` or `id,outlier` per line, sorted by id.
pub fn write_labels<S: AsRef<str>>(ids: &[S], outlying: &[bool]) -> Vec<u8> {
    let mut rows: Vec<(&str, bool)> = ids.iter().map(AsRef::as_ref).zip(outlying.iter().copied()).collect();
    rows.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = String::new();
    for (id, o) in rows {
        out.push_str(id);
        out.push_str(if o { ",outlier\n" } else { ",clean\n" });
    }
    out.into_bytes()
}

pub fn read_labels(text: &str) -> Result<BTreeMap<String, bool>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, flag) = line
            .rsplit_once(',')
            .ok_or_else(|| malformed(i as u64 + 1, "expected 'id,flag'"))?;
        let outlying = match flag.trim() {
            "clean" => false,
            "outlier" => true,
            other => return Err(malformed(i as u64 + 1, format!("unknown label '{other}'"))),
        };
        if out.insert(id.trim().to_string(), outlying).is_some() {
            return Err(Error::DuplicateId(id.trim().to_string()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<TrackTable> {
        read_tracks(text.as_bytes())
    }

    #[test]
    fn groups_and_sorts_rows() {
        let t = read("id,t,x,y\nb,2,5,6\na,0,1,2\nb,1,3,4\na,1,1.5,2.5\nb,0,0,0\na,2,2,3\n").unwrap();
        assert_eq!(t.coord_names, vec!["x", "y"]);
        assert_eq!(t.tracks.len(), 2);
        assert_eq!(t.tracks[0].id, "a");
        assert_eq!(t.tracks[1].times, vec![0.0, 1.0, 2.0]);
        assert_eq!(t.tracks[1].coords[2], vec![5.0, 6.0]);
        assert_eq!(t.tracks[0].dim(), 2);
    }

    #[test]
    fn reports_malformed_rows_with_line_numbers() {
        let err = read("id,t,x,y\na,0,1,2\na,1,1\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, .. }), "{err:?}");
        let err = read("id,t,x\na,0,1\na,zz,1\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 3, .. }), "{err:?}");
        assert!(matches!(read("id,t\na,1\n"), Err(Error::MalformedRow { line: 1, .. })));
    }

    #[test]
    fn duplicate_times_and_empty_input() {
        assert_eq!(
            read("id,t,x\na,0,1\na,0,2\n").unwrap_err(),
            Error::NonMonotoneTime("a".into())
        );
        assert_eq!(read("").unwrap_err(), Error::EmptyInput);
        assert_eq!(read("id,t,x\n").unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn writer_round_trips() {
        let table = TrackTable {
            coord_names: vec!["lon".into(), "lat".into()],
            tracks: vec![
                RawTrack::new("a", vec![0.1, 0.2 + 1e-17, 7.0], vec![vec![1.0 / 3.0, -2.5e-12], vec![1e300, 0.0], vec![-0.0, 5.0]]),
                RawTrack::new("b", vec![-1.0, 3.0], vec![vec![std::f64::consts::PI, 2.0], vec![1.0, 1e-320]]),
            ],
        };
        let bytes = write_tracks(&table).unwrap();
        let back = read_tracks(bytes.as_slice()).unwrap();
        assert_eq!(back, table);
        assert!(String::from_utf8(bytes).unwrap().starts_with("id,t,lon,lat\na,0.1,"));
    }

    #[test]
    fn labels_round_trip() {
        let bytes = write_labels(&["3", "1", "2"], &[true, false, false]);
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), "1,clean\n2,clean\n3,outlier\n");
        let map = read_labels(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(map["3"], true);
        assert!(read_labels("1,maybe\n").is_err());
    }

    #[test]
    fn shared_grid_required_for_direct_ensembles() {
        let t = read("id,t,x\na,0,1\na,1,2\na,2,3\nb,0,1\nb,1,2\nb,2,4\nc,0,0\nc,1,0\nc,2,0\n").unwrap();
        let ens = t.to_ensemble().unwrap();
        assert_eq!((ens.n(), ens.k(), ens.p()), (3, 3, 1));
        let t = read("id,t,x\na,0,1\na,1,2\na,2,3\nb,0,1\nb,1.5,2\nb,2,4\nc,0,0\nc,1,0\nc,2,0\n").unwrap();
        assert_eq!(t.to_ensemble().unwrap_err(), Error::GridMismatch("b".into()));
    }
}
