//! On-disk formats: diagnostics and snapshot CSVs plus a JSON run manifest.
//!
//! Every CSV starts with a `#` comment line naming the format and its version,
//! followed by a header row. Floats are written in shortest round-trip form,
//! so a reloaded run reproduces the in-memory values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::{Snapshot, Trajectory};
use crate::error::{Error, Result};
use crate::field::{ContourPatch, Field, ParticleField};
use crate::vec2::Vec2;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SNAPSHOT_DIR: &str = "snapshots";
const DIAGNOSTICS_TAG: &str = "# alphapatch diagnostics v1";
const SNAPSHOT_TAG: &str = "# alphapatch snapshot v1";

pub fn diagnostics_header(n_max: usize) -> String {
    let mut h = String::from("t,mass,max_theta,cx,cy,inertia,r_supp");
    for n in 1..=n_max {
        write!(h, ",m{n}").unwrap();
    }
    h
}

pub fn diagnostics_row(r: &DiagnosticsRecord) -> String {
    let mut s = format!(
        "{},{},{},{},{},{},{}",
        r.t, r.mass, r.max_theta, r.center.x1, r.center.x2, r.inertia, r.support_radius
    );
    for m in &r.moments {
        write!(s, ",{m}").unwrap();
    }
    s
}

pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord], n_max: usize) -> Result<()> {
    let mut out = format!("{DIAGNOSTICS_TAG}\n{}\n", diagnostics_header(n_max));
    for r in records {
        out.push_str(&diagnostics_row(r));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Splits a data row into floats, reporting the 1-based field position of
/// the first bad value.
fn parse_row(path: &Path, line_no: usize, line: &str, width: usize) -> Result<Vec<f64>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != width {
        return Err(parse_err(
            path,
            line_no,
            1,
            format!("expected {width} fields, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| parse_err(path, line_no, i + 1, format!("bad number {f:?}: {e}")))
        })
        .collect()
}

pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.starts_with(DIAGNOSTICS_TAG) => {}
        _ => return Err(parse_err(path, 1, 1, "missing diagnostics format line")),
    }
    let header = lines.next().ok_or_else(|| parse_err(path, 2, 1, "missing header row"))?.1;
    let cols: Vec<&str> = header.split(',').collect();
    let n_max = cols.len().saturating_sub(7);
    if header != diagnostics_header(n_max) {
        return Err(parse_err(path, 2, 1, format!("unexpected header {header:?}")));
    }
    if !text.ends_with('\n') {
        return Err(parse_err(path, text.lines().count(), 1, "file is truncated"));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let v = parse_row(path, i + 1, line, cols.len())?;
        records.push(DiagnosticsRecord {
            t: v[0],
            mass: v[1],
            max_theta: v[2],
            center: Vec2::new(v[3], v[4]),
            inertia: v[5],
            support_radius: v[6],
            moments: v[7..].to_vec(),
        });
    }
    Ok(records)
}

pub fn write_snapshot_csv(path: &Path, t: f64, field: &Field) -> Result<()> {
    let mut out = String::new();
    match field {
        Field::Particles(p) => {
            writeln!(
                out,
                "{SNAPSHOT_TAG} kind=particles t={t} eps={} max_theta={}",
                p.eps(),
                p.max_theta_density()
            )
            .unwrap();
            out.push_str("x1,x2,w\n");
            for (x, w) in p.positions().iter().zip(p.weights()) {
                writeln!(out, "{},{},{w}", x.x1, x.x2).unwrap();
            }
        }
        Field::Contours(cs) => {
            let join = |f: &dyn Fn(&ContourPatch) -> f64| cs.iter().map(|c| f(c).to_string()).collect::<Vec<_>>().join(";");
            writeln!(
                out,
                "{SNAPSHOT_TAG} kind=contours t={t} theta0={} spacing={}",
                join(&|c| c.theta0()),
                join(&|c| c.target_spacing())
            )
            .unwrap();
            out.push_str("x1,x2,curve\n");
            for (k, c) in cs.iter().enumerate() {
                for x in c.nodes() {
                    writeln!(out, "{},{},{k}", x.x1, x.x2).unwrap();
                }
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a snapshot back; returns its time and field.
pub fn read_snapshot_csv(path: &Path) -> Result<(f64, Field)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if !text.ends_with('\n') {
        return Err(parse_err(path, text.lines().count(), 1, "file is truncated"));
    }
    let mut lines = text.lines().enumerate();
    let meta = match lines.next() {
        Some((_, l)) if l.starts_with(SNAPSHOT_TAG) => &l[SNAPSHOT_TAG.len()..],
        _ => return Err(parse_err(path, 1, 1, "missing snapshot format line")),
    };
    let get = |key: &str| -> Result<&str> {
        meta.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| parse_err(path, 1, 1, format!("missing {key}")))
    };
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|e| parse_err(path, 1, 1, format!("bad number {s:?}: {e}"))) };
    let t = num(get("t")?)?;
    let _ = lines.next();
    let rows = lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_row(path, i + 1, l, 3))
        .collect::<Result<Vec<_>>>()?;
    let load = |e: Error| Error::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let field = match get("kind")? {
        "particles" => {
            let positions = rows.iter().map(|r| Vec2::new(r[0], r[1])).collect();
            let weights = rows.iter().map(|r| r[2]).collect();
            Field::Particles(ParticleField::new(positions, weights, num(get("eps")?)?, num(get("max_theta")?)?).map_err(load)?)
        }
        "contours" => {
            let theta: Vec<f64> = get("theta0")?.split(';').map(num).collect::<Result<_>>()?;
            let spacing: Vec<f64> = get("spacing")?.split(';').map(num).collect::<Result<_>>()?;
            let mut curves = vec![Vec::new(); theta.len()];
            for r in &rows {
                let k = r[2] as usize;
                curves
                    .get_mut(k)
                    .ok_or_else(|| Error::Load {
                        path: path.to_path_buf(),
                        message: format!("curve index {k} out of range"),
                    })?
                    .push(Vec2::new(r[0], r[1]));
            }
            let patches = curves
                .into_iter()
                .zip(theta.iter().zip(&spacing))
                .map(|(nodes, (th, sp))| ContourPatch::new(nodes, *th, *sp))
                .collect::<Result<Vec<_>>>()
                .map_err(load)?;
            Field::Contours(patches)
        }
        other => return Err(parse_err(path, 1, 1, format!("unknown kind {other:?}"))),
    };
    Ok((t, field))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub step: u64,
    pub t: f64,
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureInfo {
    pub kind: String,
    pub message: String,
    pub step: Option<u64>,
    pub time: Option<f64>,
}

impl FailureInfo {
    pub fn from_error(e: &Error) -> Self {
        let step = match e {
            Error::BlowUp { step, .. } | Error::GeometryFailure { step, .. } => Some(*step),
            _ => None,
        };
        let kind = match e {
            Error::BlowUp { .. } => "blow_up",
            Error::GeometryFailure { .. } => "geometry_failure",
            _ => "error",
        };
        FailureInfo {
            kind: kind.into(),
            message: e.to_string(),
            step,
            time: e.failure_time(),
        }
    }
}

/// Record of one run. Paths are relative to the run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub diagnostics: PathBuf,
    pub snapshots: Vec<SnapshotEntry>,
    pub failure: Option<FailureInfo>,
}

impl RunManifest {
    pub fn new(config: SimConfig) -> Self {
        RunManifest {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: f64::NAN,
            diagnostics: PathBuf::from(DIAGNOSTICS_FILE),
            snapshots: Vec::new(),
            failure: None,
        }
    }

    /// Files the manifest refers to, relative to the run directory.
    pub fn outputs(&self) -> impl Iterator<Item = &Path> {
        std::iter::once(self.diagnostics.as_path()).chain(self.snapshots.iter().map(|s| s.path.as_path()))
    }
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Writes through a temporary file and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let mut m = manifest.clone();
    m.finished_unix = unix_now();
    write_atomic(&dir.join(MANIFEST_FILE), &serde_json::to_string_pretty(&m)?)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::Load {
        path: path.clone(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Streams a run to `dir`: one snapshot file per output plus the diagnostics
/// CSV, which is rewritten after each snapshot so a failed run keeps
/// everything produced before the failure.
pub struct RunWriter {
    dir: PathBuf,
    manifest: RunManifest,
    records: Vec<DiagnosticsRecord>,
}

impl RunWriter {
    pub fn create(dir: &Path, config: &SimConfig) -> Result<Self> {
        fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            manifest: RunManifest::new(config.clone()),
            records: Vec::new(),
        })
    }

    pub fn push(&mut self, s: &Snapshot) -> Result<()> {
        let rel = PathBuf::from(SNAPSHOT_DIR).join(format!("snapshot_{:05}.csv", self.manifest.snapshots.len()));
        write_snapshot_csv(&self.dir.join(&rel), s.t, &s.field)?;
        self.manifest.snapshots.push(SnapshotEntry {
            step: s.step,
            t: s.t,
            path: rel,
        });
        self.records.push(s.record.clone());
        write_diagnostics_csv(
            &self.dir.join(DIAGNOSTICS_FILE),
            &self.records,
            self.manifest.config.n_max,
        )
    }

    /// Writes the manifest; `failure` is recorded when the run stopped early.
    pub fn finish(mut self, failure: Option<&Error>) -> Result<RunManifest> {
        self.manifest.failure = failure.map(FailureInfo::from_error);
        if self.records.is_empty() {
            write_diagnostics_csv(&self.dir.join(DIAGNOSTICS_FILE), &[], self.manifest.config.n_max)?;
        }
        write_manifest(&self.dir, &self.manifest)?;
        read_manifest(&self.dir)
    }
}

/// A run loaded back from disk.
#[derive(Clone, Debug)]
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub trajectory: Trajectory,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let manifest = read_manifest(dir)?;
    let records = read_diagnostics_csv(&dir.join(&manifest.diagnostics))?;
    if records.len() != manifest.snapshots.len() {
        return Err(Error::Load {
            path: dir.join(&manifest.diagnostics),
            message: format!(
                "{} diagnostics rows for {} snapshots",
                records.len(),
                manifest.snapshots.len()
            ),
        });
    }
    let mut snapshots = Vec::with_capacity(records.len());
    for (entry, record) in manifest.snapshots.iter().zip(records) {
        let (t, field) = read_snapshot_csv(&dir.join(&entry.path))?;
        if t != entry.t || t != record.t {
            return Err(Error::Load {
                path: dir.join(&entry.path),
                message: format!("snapshot time {t} disagrees with manifest {}", entry.t),
            });
        }
        snapshots.push(Snapshot {
            step: entry.step,
            t,
            field,
            record,
        });
    }
    Ok(LoadedRun {
        manifest,
        trajectory: Trajectory { snapshots },
    })
}
