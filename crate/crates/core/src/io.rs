//! On-disk formats: filament snapshots (CSV plus JSON metadata), diagnostic
//! time series, self-similar profiles and JSON reports.
//!
//! Floats are written in shortest round-trip form, so a snapshot read back
//! reproduces the state bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::TimeSeries;
use crate::geometry::{FilamentState, Grid, ModelParams, Vec3};
use crate::integrator::IntegratorConfig;
use crate::selfsim::SelfSimilarProfile;

pub const SNAPSHOT_FORMAT: &str = "vortex-snapshot/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {reason}", path.display())]
    Schema { path: PathBuf, reason: String },
}

impl IoError {
    fn schema(path: &Path, reason: impl Into<String>) -> Self {
        Self::Schema { path: path.to_path_buf(), reason: reason.into() }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    serde_json::from_reader(open(path)?).map_err(|source| IoError::Json { path: path.to_path_buf(), source })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, IoError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_rows<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>, IoError> {
    let mut rd = csv::Reader::from_reader(open(path)?);
    rd.deserialize().collect::<Result<Vec<R>, _>>().map_err(|source| IoError::Csv { path: path.to_path_buf(), source })
}

fn put_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), IoError> {
    let err = |source| IoError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row).map_err(err)?;
    }
    w.flush().map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Plain numeric table with a header row.
pub fn write_table<I>(path: &Path, headers: &[&str], rows: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let err = |source| IoError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    w.write_record(headers).map_err(err)?;
    for row in rows {
        if row.len() != headers.len() {
            return Err(IoError::schema(path, format!("row of {} values for {} columns", row.len(), headers.len())));
        }
        w.serialize(row).map_err(err)?;
    }
    w.flush().map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Numeric table as `(headers, columns)`.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let err = |source| IoError::Csv { path: path.to_path_buf(), source };
    let mut rd = csv::Reader::from_reader(open(path)?);
    let headers: Vec<String> = rd.headers().map_err(err)?.iter().map(str::to_string).collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for rec in rd.records() {
        let rec = rec.map_err(err)?;
        for (c, field) in columns.iter_mut().zip(rec.iter()) {
            let v =
                field.trim().parse::<f64>().map_err(|_| IoError::schema(path, format!("not a number: {field:?}")))?;
            c.push(v);
        }
    }
    Ok((headers, columns))
}

/// Column `name` of a table read with [`read_table`].
pub fn column<'a>(path: &Path, table: &'a (Vec<String>, Vec<Vec<f64>>), name: &str) -> Result<&'a [f64], IoError> {
    table
        .0
        .iter()
        .position(|h| h == name)
        .map(|i| table.1[i].as_slice())
        .ok_or_else(|| IoError::schema(path, format!("missing column {name:?}")))
}

/// JSON record stored next to every snapshot CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub format: String,
    pub params: ModelParams,
    pub grid: Grid,
    pub time: f64,
    pub l0: Vec<f64>,
    pub l0_prime: Vec<f64>,
    /// Integrator settings in force when the snapshot was taken.
    #[serde(default)]
    pub integrator: Option<IntegratorConfig>,
    /// Step proposal at the snapshot time, needed for an exact restart.
    #[serde(default)]
    pub tau_next: Option<f64>,
    /// Full run configuration of the producing command.
    #[serde(default)]
    pub run: Option<serde_json::Value>,
}

impl SnapshotMeta {
    pub fn new(state: &FilamentState, params: &ModelParams) -> Self {
        Self {
            format: SNAPSHOT_FORMAT.to_string(),
            params: *params,
            grid: state.grid,
            time: state.time,
            l0: state.l0.clone(),
            l0_prime: state.l0_prime.clone(),
            integrator: None,
            tau_next: None,
            run: None,
        }
    }

    pub fn with_integrator(mut self, config: &IntegratorConfig, tau_next: f64) -> Self {
        self.integrator = Some(*config);
        self.tau_next = Some(tau_next);
        self
    }

    pub fn with_run<T: Serialize>(mut self, run: &T) -> Self {
        self.run = serde_json::to_value(run).ok();
        self
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotRow {
    s: f64,
    x1: f64,
    x2: f64,
    x3: f64,
    #[serde(rename = "T1")]
    t1: f64,
    #[serde(rename = "T2")]
    t2: f64,
    #[serde(rename = "T3")]
    t3: f64,
    #[serde(rename = "modT")]
    mod_t: f64,
}

/// `(csv, json)` paths of the snapshot `stem` in `dir`.
pub fn snapshot_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}

/// Conventional stem for a snapshot at time `t`.
pub fn snapshot_stem(t: f64) -> String {
    format!("snapshot_t{t:.6}")
}

pub fn write_snapshot(
    dir: &Path,
    stem: &str,
    state: &FilamentState,
    meta: &SnapshotMeta,
) -> Result<(PathBuf, PathBuf), IoError> {
    let (csv_path, json_path) = snapshot_paths(dir, stem);
    if meta.grid != state.grid || meta.time != state.time {
        return Err(IoError::schema(&json_path, "metadata does not describe the state"));
    }
    let rows = (0..state.len()).map(|j| {
        let (x, t) = (state.positions[j], state.tangents[j]);
        SnapshotRow { s: state.grid.param(j), x1: x.x, x2: x.y, x3: x.z, t1: t.x, t2: t.y, t3: t.z, mod_t: t.norm() }
    });
    put_rows(&csv_path, rows)?;
    write_json(&json_path, meta)?;
    Ok((csv_path, json_path))
}

pub fn read_snapshot(dir: &Path, stem: &str) -> Result<(FilamentState, SnapshotMeta), IoError> {
    let (csv_path, json_path) = snapshot_paths(dir, stem);
    let meta: SnapshotMeta = read_json(&json_path)?;
    if meta.format != SNAPSHOT_FORMAT {
        return Err(IoError::schema(&json_path, format!("unknown format {:?}", meta.format)));
    }
    let rows: Vec<SnapshotRow> = csv_rows(&csv_path)?;
    let n = meta.grid.n_nodes();
    if rows.len() != n || meta.l0.len() != n || meta.l0_prime.len() != n {
        return Err(IoError::schema(
            &csv_path,
            format!("grid has {n} nodes but found {} rows, {} l0 values", rows.len(), meta.l0.len()),
        ));
    }
    let h = meta.grid.spacing();
    for (j, r) in rows.iter().enumerate() {
        if (r.s - meta.grid.param(j)).abs() > 1e-9 * h {
            return Err(IoError::schema(&csv_path, format!("row {j}: s = {} is off the grid", r.s)));
        }
        let m = Vec3::new(r.t1, r.t2, r.t3).norm();
        if !((m - r.mod_t).abs() <= 1e-12 * m.max(1.0)) {
            return Err(IoError::schema(&csv_path, format!("row {j}: modT inconsistent with T")));
        }
    }
    let state = FilamentState::new(
        meta.grid,
        rows.iter().map(|r| Vec3::new(r.x1, r.x2, r.x3)).collect(),
        rows.iter().map(|r| Vec3::new(r.t1, r.t2, r.t3)).collect(),
        meta.l0.clone(),
        meta.l0_prime.clone(),
        meta.time,
    )
    .map_err(|e| IoError::schema(&csv_path, e.to_string()))?;
    Ok((state, meta))
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesRow {
    t: f64,
    #[serde(rename = "F1")]
    f1: f64,
    #[serde(rename = "F2")]
    f2: f64,
    #[serde(rename = "F3")]
    f3: f64,
    separation: f64,
    #[serde(rename = "maxT1ratio")]
    max_t1_ratio: f64,
}

pub fn write_timeseries(path: &Path, series: &TimeSeries) -> Result<(), IoError> {
    let n = series.len();
    if [series.impulse.len(), series.separation.len(), series.max_t1_ratio.len()].iter().any(|&l| l != n) {
        return Err(IoError::schema(path, "time series columns differ in length"));
    }
    put_rows(
        path,
        (0..n).map(|i| {
            let f = series.impulse[i];
            SeriesRow {
                t: series.times[i],
                f1: f.x,
                f2: f.y,
                f3: f.z,
                separation: series.separation[i],
                max_t1_ratio: series.max_t1_ratio[i],
            }
        }),
    )
}

/// Read a time series CSV. Window centres are not stored and come back
/// empty.
pub fn read_timeseries(path: &Path) -> Result<TimeSeries, IoError> {
    let rows: Vec<SeriesRow> = csv_rows(path)?;
    if rows.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(IoError::schema(path, "times are not increasing"));
    }
    Ok(TimeSeries {
        times: rows.iter().map(|r| r.t).collect(),
        impulse: rows.iter().map(|r| Vec3::new(r.f1, r.f2, r.f3)).collect(),
        separation: rows.iter().map(|r| r.separation).collect(),
        max_t1_ratio: rows.iter().map(|r| r.max_t1_ratio).collect(),
        centers: Vec::new(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRow {
    eta: f64,
    #[serde(rename = "G1")]
    g1: f64,
    #[serde(rename = "G2")]
    g2: f64,
    #[serde(rename = "G3")]
    g3: f64,
    #[serde(rename = "Gp1")]
    gp1: f64,
    #[serde(rename = "Gp2")]
    gp2: f64,
    #[serde(rename = "Gp3")]
    gp3: f64,
}

pub fn write_profile(path: &Path, profile: &SelfSimilarProfile) -> Result<(), IoError> {
    put_rows(
        path,
        (0..profile.len()).map(|i| {
            let (g, p) = (profile.g[i], profile.g_prime[i]);
            ProfileRow { eta: profile.etas[i], g1: g.x, g2: g.y, g3: g.z, gp1: p.x, gp2: p.y, gp3: p.z }
        }),
    )
}

/// Read a profile CSV; the parameters are not part of the file.
pub fn read_profile(path: &Path, params: &ModelParams) -> Result<SelfSimilarProfile, IoError> {
    let rows: Vec<ProfileRow> = csv_rows(path)?;
    Ok(SelfSimilarProfile {
        etas: rows.iter().map(|r| r.eta).collect(),
        g: rows.iter().map(|r| Vec3::new(r.g1, r.g2, r.g3)).collect(),
        g_prime: rows.iter().map(|r| Vec3::new(r.gp1, r.gp2, r.gp3)).collect(),
        params: ModelParams { r_c: 0.0, ..*params },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{init_pair, WhiteNoise};

    fn noisy_state() -> (FilamentState, ModelParams) {
        let p = ModelParams::reconnection(0.05, 5e-3).unwrap();
        let noise = WhiteNoise { amplitude: 1e-3, seed: 7, max_mode: 20 };
        let mut st = init_pair(&Grid::periodic(64).unwrap(), &p, Some(&noise)).unwrap();
        st.time = 0.1 + 0.2;
        (st, p)
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let (st, p) = noisy_state();
        let meta = SnapshotMeta::new(&st, &p).with_integrator(&IntegratorConfig::default(), 1.0 / 3.0);
        write_snapshot(dir.path(), "a", &st, &meta).unwrap();
        let (back, m) = read_snapshot(dir.path(), "a").unwrap();
        assert_eq!(back, st);
        assert_eq!(m, meta);
        let header = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert!(header.starts_with("s,x1,x2,x3,T1,T2,T3,modT\n"));
    }

    #[test]
    fn snapshot_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (st, p) = noisy_state();
        write_snapshot(dir.path(), "a", &st, &SnapshotMeta::new(&st, &p)).unwrap();
        let csv = dir.path().join("a.csv");
        let text = std::fs::read_to_string(&csv).unwrap();
        let short: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        std::fs::write(&csv, short).unwrap();
        assert!(matches!(read_snapshot(dir.path(), "a"), Err(IoError::Schema { .. })));
        std::fs::write(&csv, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_snapshot(dir.path(), "a"), Err(IoError::Csv { .. })));
        assert!(matches!(read_snapshot(dir.path(), "missing"), Err(IoError::Io { .. })));
        let mut bad = SnapshotMeta::new(&st, &p);
        bad.time = 5.0;
        assert!(write_snapshot(dir.path(), "b", &st, &bad).is_err());
    }

    #[test]
    fn timeseries_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        let ts = TimeSeries {
            times: vec![0.0, 0.1, 0.2],
            impulse: vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(1.0 / 3.0, 0.0, -1.0), Vec3::zeros()],
            separation: vec![0.2, 0.19, 0.18],
            max_t1_ratio: vec![0.0, 0.05, 0.07],
            centers: vec![3, 3, 4],
        };
        write_timeseries(&path, &ts).unwrap();
        let back = read_timeseries(&path).unwrap();
        assert_eq!(back.times, ts.times);
        assert_eq!(back.impulse, ts.impulse);
        assert_eq!(back.max_t1_ratio, ts.max_t1_ratio);
        assert!(back.centers.is_empty());
        std::fs::write(&path, "t,F1,F2,F3,separation,maxT1ratio\n1,0,0,0,0,0\n0,0,0,0,0,0\n").unwrap();
        assert!(matches!(read_timeseries(&path), Err(IoError::Schema { .. })));
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_table(&path, &["a", "b"], vec![vec![0.1, 2.0], vec![1e-17, -3.5]]).unwrap();
        let table = read_table(&path).unwrap();
        assert_eq!(column(&path, &table, "a").unwrap(), &[0.1, 1e-17]);
        assert!(matches!(column(&path, &table, "c"), Err(IoError::Schema { .. })));
        assert!(write_table(&path, &["a"], vec![vec![1.0, 2.0]]).is_err());
        std::fs::write(&path, "a\nx\n").unwrap();
        assert!(matches!(read_table(&path), Err(IoError::Schema { .. })));
    }

    #[test]
    fn profile_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let prof = SelfSimilarProfile {
            etas: vec![0.1, 0.2],
            g: vec![Vec3::new(0.1, 0.0, 0.3), Vec3::new(0.2, 1e-300, 0.7)],
            g_prime: vec![Vec3::z(), Vec3::new(0.1, 0.2, 0.9)],
            params: ModelParams::lia(),
        };
        write_profile(&path, &prof).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("eta,G1,G2,G3,Gp1,Gp2,Gp3\n"));
        assert_eq!(read_profile(&path, &ModelParams::lia()).unwrap(), prof);
    }
}
