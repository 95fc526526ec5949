//! Stable on-disk result formats: CSV data files, a JSON grid sidecar for
//! sweeps, and a JSON run manifest.
//!
//! Formats (bit-exact column order, period decimal separator, locale
//! independent; floats print in Rust's shortest round-trip form):
//!
//! * **Sweeps** — `<base>.csv` in long format with the literal header
//!   `axis1,axis2,observable,value`, one row per (field, axis1, axis2)
//!   with axis2 fastest, fields in recorded order. Failed cells hold
//!   `NaN`. Grid geometry (axis names/units/values, field units, cell
//!   failures, system hash) lives in the sidecar `<base>.meta.json`, so
//!   downstream plotting needs no reshaping metadata.
//! * **Trajectories** — `<base>.csv` (or `<base>_eps<ε>.csv` per probe
//!   amplitude) in wide format: `time_us,<observable>...` columns.
//! * **Curves** — `<base>.csv` with `delay_us,pop_<qubit>` columns.
//! * **Manifest** — `<base>.manifest.json`: config snapshot, resolved
//!   amplitudes, physics hash, code version, wall time, emitted files,
//!   and any per-cell failure diagnostics.
//!
//! All writes are single-writer and atomic: content goes to a temp file
//! in the destination directory, then an atomic rename claims the final
//! path. Rerunning a deterministic (fixed-step) config therefore yields
//! byte-identical data files; only the manifest's timing fields differ.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, RunOutput};
use crate::dynamics::Trajectory;
use crate::protocols::{Axis, CellFailure, FieldSeries, SweepMetadata, SweepResult};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> OutputError {
    OutputError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Rendering (pure string builders)
// ---------------------------------------------------------------------------

/// Shortest round-trip float rendering; `NaN`/`inf` spelled so that Rust's
/// `str::parse::<f64>` reads them back.
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Render a sweep as long-format CSV (`axis1,axis2,observable,value`).
pub fn render_sweep_csv(sweep: &SweepResult) -> String {
    let (n1, n2) = sweep.shape();
    let mut out = String::new();
    out.push_str("axis1,axis2,observable,value\n");
    for field in &sweep.fields {
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(sweep.axis1.values[i1]),
                    fmt_f64(sweep.axis2.values[i2]),
                    field.name,
                    fmt_f64(field.values[i1 * n2 + i2])
                );
            }
        }
    }
    out
}

/// The JSON sidecar: everything about a sweep except the cell values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSidecar {
    pub protocol: String,
    pub axis1: Axis,
    pub axis2: Axis,
    /// Field names and units, in CSV block order.
    pub fields: Vec<FieldMeta>,
    pub failures: Vec<CellFailure>,
    pub metadata: SweepMetadata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldMeta {
    pub name: String,
    pub unit: String,
}

pub fn render_sweep_sidecar(sweep: &SweepResult) -> String {
    let doc = SweepSidecar {
        protocol: sweep.protocol.clone(),
        axis1: sweep.axis1.clone(),
        axis2: sweep.axis2.clone(),
        fields: sweep
            .fields
            .iter()
            .map(|f| FieldMeta {
                name: f.name.clone(),
                unit: f.unit.clone(),
            })
            .collect(),
        failures: sweep.failures.clone(),
        metadata: sweep.metadata.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("sidecar serializes")
}

/// Render a trajectory as wide CSV: `time_us,<observable>...`.
pub fn render_trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str("time_us");
    for (name, _) in &traj.series {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        out.push_str(&fmt_f64(*t));
        for (_, values) in &traj.series {
            out.push(',');
            out.push_str(&fmt_f64(values[k]));
        }
        out.push('\n');
    }
    out
}

/// Render a two-column curve (`delay_us,pop_<qubit>`).
fn render_curve_csv(qubit: &str, delays: &[f64], population: &[f64]) -> String {
    let mut out = format!("delay_us,pop_{qubit}\n");
    for (d, p) in delays.iter().zip(population) {
        let _ = writeln!(out, "{},{}", fmt_f64(*d), fmt_f64(*p));
    }
    out
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// The run manifest: a self-describing snapshot of what produced the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    /// Crate version that produced the run.
    pub code_version: String,
    /// Unix timestamp (seconds) when the manifest was written.
    pub created_unix_s: u64,
    /// Wall-clock duration of the computation in seconds.
    pub wall_time_s: f64,
    pub protocol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub seed: u64,
    /// SHA-256 over the physics-relevant config snapshot (schema version,
    /// seed, system, calibration, protocol — not titles or output paths).
    /// Changes iff something that affects the data changes.
    pub config_sha256: String,
    /// SHA-256 over the system section alone (matches the sweep sidecar).
    pub system_sha256: String,
    /// Every amplitude the run used, resolved to MHz, so baselines do not
    /// depend on the calibration table.
    pub resolved_amplitudes_mhz: BTreeMap<String, Vec<f64>>,
    /// Data files this run emitted (relative to the manifest).
    pub files: Vec<String>,
    /// Per-cell diagnostics for sweep cells that failed (empty otherwise).
    pub cell_failures: Vec<CellFailure>,
    /// The full configuration snapshot.
    pub config: serde_json::Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

/// Hash of the physics-relevant part of a config: everything that can
/// change the emitted numbers, nothing that cannot.
pub fn physics_hash(config: &ExperimentConfig) -> String {
    #[derive(Serialize)]
    struct PhysicsSnapshot<'a> {
        schema_version: u64,
        seed: u64,
        system: &'a crate::model::SystemSpec,
        calibration: &'a crate::config::Calibration,
        protocol: &'a crate::config::ProtocolConfig,
    }
    let snapshot = PhysicsSnapshot {
        schema_version: config.schema_version,
        seed: config.seed,
        system: &config.system,
        calibration: &config.calibration,
        protocol: &config.protocol,
    };
    let canonical = serde_json::to_string(&snapshot).expect("config serializes");
    sha256_hex(canonical.as_bytes())
}

fn system_hash(config: &ExperimentConfig) -> String {
    let canonical =
        serde_json::to_string(&serde_json::to_value(&config.system).expect("system serializes"))
            .expect("JSON serializes");
    sha256_hex(canonical.as_bytes())
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

/// Atomically write `contents` to `path` (temp file + rename, same
/// directory so the rename cannot cross filesystems).
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), OutputError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(contents.as_bytes()).map_err(io_err(path))?;
    tmp.flush().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| OutputError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// Paths produced by [`write_run`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub manifest_path: PathBuf,
    /// Data files (CSV and sidecar), in emission order.
    pub data_paths: Vec<PathBuf>,
}

/// Write a completed run to `dir` under `basename`: the data files first,
/// then the manifest (so a manifest on disk always describes complete
/// data). Returns the paths written.
pub fn write_run(
    config: &ExperimentConfig,
    output: &RunOutput,
    dir: &Path,
    basename: &str,
    wall_time_s: f64,
) -> Result<RunArtifacts, OutputError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let mut cell_failures: Vec<CellFailure> = Vec::new();

    match output {
        RunOutput::Sweep(sweep) => {
            files.push((
                dir.join(format!("{basename}.csv")),
                render_sweep_csv(sweep),
            ));
            files.push((
                dir.join(format!("{basename}.meta.json")),
                render_sweep_sidecar(sweep),
            ));
            cell_failures = sweep.failures.clone();
        }
        RunOutput::Traces(traces) => {
            for trace in traces {
                files.push((
                    dir.join(format!("{basename}_eps{}.csv", trace.eps_mhz)),
                    render_trajectory_csv(&trace.trajectory),
                ));
            }
        }
        RunOutput::Decay(curve) => {
            files.push((
                dir.join(format!("{basename}.csv")),
                render_curve_csv(&curve.qubit, &curve.delay_us, &curve.population),
            ));
        }
        RunOutput::Fringe(curve) => {
            files.push((
                dir.join(format!("{basename}.csv")),
                render_curve_csv(&curve.qubit, &curve.delay_us, &curve.population),
            ));
        }
    }

    let mut data_paths = Vec::with_capacity(files.len());
    for (path, contents) in &files {
        write_atomic(path, contents)?;
        data_paths.push(path.clone());
    }

    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_time_s,
        protocol: config.protocol.name().to_string(),
        title: config.title.clone(),
        seed: config.seed,
        config_sha256: physics_hash(config),
        system_sha256: system_hash(config),
        resolved_amplitudes_mhz: config.resolved_amplitudes_mhz(),
        files: data_paths
            .iter()
            .map(|p| {
                p.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            })
            .collect(),
        cell_failures,
        config: serde_json::to_value(config).expect("config serializes"),
    };
    let manifest_path = dir.join(format!("{basename}.manifest.json"));
    write_atomic(
        &manifest_path,
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;

    Ok(RunArtifacts {
        manifest_path,
        data_paths,
    })
}

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

pub fn read_manifest(path: &Path) -> Result<Manifest, OutputError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))
}

/// Load a sweep back from its long-format CSV and `.meta.json` sidecar
/// (expected next to the CSV). Verifies row order and axis values.
pub fn read_sweep(csv_path: &Path) -> Result<SweepResult, OutputError> {
    let sidecar_path = csv_path.with_extension("").with_extension("meta.json");
    let sidecar_path = if sidecar_path.exists() {
        sidecar_path
    } else {
        // `<base>.csv` → `<base>.meta.json` even when `<base>` has dots.
        let mut p = csv_path.to_path_buf();
        p.set_extension("meta.json");
        p
    };
    let sidecar_text = std::fs::read_to_string(&sidecar_path).map_err(io_err(&sidecar_path))?;
    let sidecar: SweepSidecar = serde_json::from_str(&sidecar_text)
        .map_err(|e| format_err(&sidecar_path, e.to_string()))?;

    let text = std::fs::read_to_string(csv_path).map_err(io_err(csv_path))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(csv_path, "empty file"))?;
    if header != "axis1,axis2,observable,value" {
        return Err(format_err(
            csv_path,
            format!("not a long-format sweep (header {header:?})"),
        ));
    }

    let n1 = sidecar.axis1.values.len();
    let n2 = sidecar.axis2.values.len();
    let mut fields: Vec<FieldSeries> = sidecar
        .fields
        .iter()
        .map(|f| FieldSeries {
            name: f.name.clone(),
            unit: f.unit.clone(),
            values: Vec::with_capacity(n1 * n2),
        })
        .collect();

    let mut row = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(4, ',');
        let (a1, a2, obs, val) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => {
                return Err(format_err(
                    csv_path,
                    format!("line {}: expected 4 columns", lineno + 2),
                ))
            }
        };
        let f_idx = row / (n1 * n2);
        let i1 = (row / n2) % n1;
        let i2 = row % n2;
        let field = fields.get_mut(f_idx).ok_or_else(|| {
            format_err(csv_path, format!("line {}: more rows than the sidecar grid holds", lineno + 2))
        })?;
        if obs != field.name {
            return Err(format_err(
                csv_path,
                format!(
                    "line {}: observable {obs:?} out of order (expected {:?})",
                    lineno + 2,
                    field.name
                ),
            ));
        }
        let parse = |s: &str, what: &str| -> Result<f64, OutputError> {
            s.parse::<f64>()
                .map_err(|_| format_err(csv_path, format!("line {}: bad {what} {s:?}", lineno + 2)))
        };
        let a1 = parse(a1, "axis1 value")?;
        let a2 = parse(a2, "axis2 value")?;
        let val = parse(val, "value")?;
        let want1 = sidecar.axis1.values[i1];
        let want2 = sidecar.axis2.values[i2];
        if a1 != want1 || a2 != want2 {
            return Err(format_err(
                csv_path,
                format!(
                    "line {}: axis values ({a1}, {a2}) do not match the sidecar grid ({want1}, {want2})",
                    lineno + 2
                ),
            ));
        }
        field.values.push(val);
        row += 1;
    }
    if row != fields.len() * n1 * n2 {
        return Err(format_err(
            csv_path,
            format!(
                "expected {} data rows, found {row}",
                fields.len() * n1 * n2
            ),
        ));
    }

    Ok(SweepResult {
        protocol: sidecar.protocol,
        axis1: sidecar.axis1,
        axis2: sidecar.axis2,
        fields,
        failures: sidecar.failures,
        metadata: sidecar.metadata,
    })
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

/// Max/RMS deviation of one observable between two result files.
#[derive(Debug, Clone, Serialize)]
pub struct ObservableDeviation {
    pub name: String,
    pub n: usize,
    pub max_abs: f64,
    pub rms: f64,
    pub pass: bool,
}

/// Per-observable deviation report between two result files.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub file_a: PathBuf,
    pub file_b: PathBuf,
    pub tolerance: f64,
    pub observables: Vec<ObservableDeviation>,
    pub max_abs: f64,
    pub pass: bool,
}

struct Accumulator {
    n: usize,
    max_abs: f64,
    sum_sq: f64,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            n: 0,
            max_abs: 0.0,
            sum_sq: 0.0,
        }
    }

    fn push(&mut self, a: f64, b: f64) {
        // NaN in both files at the same cell (a failed cell in both runs)
        // counts as agreement; NaN on one side only is an infinite
        // deviation.
        let d = if a.is_nan() && b.is_nan() {
            0.0
        } else {
            let d = (a - b).abs();
            if d.is_nan() {
                f64::INFINITY
            } else {
                d
            }
        };
        self.n += 1;
        self.max_abs = self.max_abs.max(d);
        self.sum_sq += if d.is_finite() { d * d } else { f64::INFINITY };
    }

    fn finish(self, name: String, tolerance: f64) -> ObservableDeviation {
        let rms = if self.n > 0 {
            (self.sum_sq / self.n as f64).sqrt()
        } else {
            0.0
        };
        ObservableDeviation {
            name,
            n: self.n,
            max_abs: self.max_abs,
            rms,
            pass: self.max_abs <= tolerance,
        }
    }
}

#[derive(Debug)]
enum Table {
    /// Long format: ordered rows of (axis1, axis2, observable, value).
    Long(Vec<(f64, f64, String, f64)>),
    /// Wide format: header names plus column-major data.
    Wide {
        headers: Vec<String>,
        columns: Vec<Vec<f64>>,
    },
}

fn load_table(path: &Path) -> Result<Table, OutputError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(path, "empty file"))?;
    if header == "axis1,axis2,observable,value" {
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(4, ',');
            let (a1, a2, obs, val) = match (parts.next(), parts.next(), parts.next(), parts.next())
            {
                (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                _ => {
                    return Err(format_err(
                        path,
                        format!("line {}: expected 4 columns", lineno + 2),
                    ))
                }
            };
            let parse = |s: &str| -> Result<f64, OutputError> {
                s.parse::<f64>()
                    .map_err(|_| format_err(path, format!("line {}: bad number {s:?}", lineno + 2)))
            };
            rows.push((parse(a1)?, parse(a2)?, obs.to_string(), parse(val)?));
        }
        Ok(Table::Long(rows))
    } else {
        let headers: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
        if headers.len() < 2 {
            return Err(format_err(
                path,
                format!("unrecognized result header {header:?}"),
            ));
        }
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != headers.len() {
                return Err(format_err(
                    path,
                    format!(
                        "line {}: {} columns, header has {}",
                        lineno + 2,
                        cells.len(),
                        headers.len()
                    ),
                ));
            }
            for (c, cell) in cells.iter().enumerate() {
                let v = cell.parse::<f64>().map_err(|_| {
                    format_err(path, format!("line {}: bad number {cell:?}", lineno + 2))
                })?;
                columns[c].push(v);
            }
        }
        Ok(Table::Wide { headers, columns })
    }
}

/// Compare two result files (either both long-format sweeps or both wide
/// trajectories/curves) observable by observable. The grids must match
/// exactly; values are compared against `tolerance` (max |Δ|).
pub fn compare_files(
    path_a: &Path,
    path_b: &Path,
    tolerance: f64,
) -> Result<CompareReport, OutputError> {
    let a = load_table(path_a)?;
    let b = load_table(path_b)?;
    let observables = match (a, b) {
        (Table::Long(rows_a), Table::Long(rows_b)) => {
            if rows_a.len() != rows_b.len() {
                return Err(OutputError::ShapeMismatch(format!(
                    "{} has {} rows, {} has {}",
                    path_a.display(),
                    rows_a.len(),
                    path_b.display(),
                    rows_b.len()
                )));
            }
            let mut accs: Vec<(String, Accumulator)> = Vec::new();
            for (i, (ra, rb)) in rows_a.iter().zip(&rows_b).enumerate() {
                if ra.2 != rb.2 {
                    return Err(OutputError::ShapeMismatch(format!(
                        "row {}: observable {:?} vs {:?}",
                        i + 1,
                        ra.2,
                        rb.2
                    )));
                }
                let same = |x: f64, y: f64| x == y || (x.is_nan() && y.is_nan());
                if !same(ra.0, rb.0) || !same(ra.1, rb.1) {
                    return Err(OutputError::ShapeMismatch(format!(
                        "row {}: grid points ({}, {}) vs ({}, {})",
                        i + 1,
                        ra.0,
                        ra.1,
                        rb.0,
                        rb.1
                    )));
                }
                match accs.last_mut() {
                    Some((name, acc)) if *name == ra.2 => acc.push(ra.3, rb.3),
                    _ => {
                        let mut acc = Accumulator::new();
                        acc.push(ra.3, rb.3);
                        accs.push((ra.2.clone(), acc));
                    }
                }
            }
            accs.into_iter()
                .map(|(name, acc)| acc.finish(name, tolerance))
                .collect::<Vec<_>>()
        }
        (
            Table::Wide {
                headers: ha,
                columns: ca,
            },
            Table::Wide {
                headers: hb,
                columns: cb,
            },
        ) => {
            if ha != hb {
                return Err(OutputError::ShapeMismatch(format!(
                    "column headers differ: {ha:?} vs {hb:?}"
                )));
            }
            if ca[0].len() != cb[0].len() {
                return Err(OutputError::ShapeMismatch(format!(
                    "{} has {} rows, {} has {}",
                    path_a.display(),
                    ca[0].len(),
                    path_b.display(),
                    cb[0].len()
                )));
            }
            // Column 0 is the time/delay axis: require an identical grid.
            for (i, (x, y)) in ca[0].iter().zip(&cb[0]).enumerate() {
                if x != y {
                    return Err(OutputError::ShapeMismatch(format!(
                        "row {}: {} = {x} vs {y}",
                        i + 1,
                        ha[0]
                    )));
                }
            }
            ha.iter()
                .zip(ca.iter().zip(&cb))
                .skip(1)
                .map(|(name, (col_a, col_b))| {
                    let mut acc = Accumulator::new();
                    for (x, y) in col_a.iter().zip(col_b) {
                        acc.push(*x, *y);
                    }
                    acc.finish(name.clone(), tolerance)
                })
                .collect()
        }
        _ => {
            return Err(OutputError::ShapeMismatch(
                "one file is a long-format sweep, the other a wide-format trajectory".into(),
            ))
        }
    };

    let max_abs = observables.iter().map(|o| o.max_abs).fold(0.0, f64::max);
    let pass = observables.iter().all(|o| o.pass);
    Ok(CompareReport {
        file_a: path_a.to_path_buf(),
        file_b: path_b.to_path_buf(),
        tolerance,
        observables,
        max_abs,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn tiny_config(protocol: &str) -> ExperimentConfig {
        let text = format!(
            r#"
schema_version = 1

[system.resonator]
omega_ghz = 5.668
kappa_mhz = 0.38
cutoff = 6

[[system.qubits]]
name = "Qb"
omega_ghz = 5.7112
g_mhz = 3.76
gamma1_mhz = 0.088
gamma_phi_mhz = 0.036
eta = 1.0

[[system.qubits]]
name = "Qd"
omega_ghz = 5.7255
g_mhz = 0.0
gamma1_mhz = 0.0053
gamma_phi_mhz = 0.0044

[[system.couplings]]
pair = [0, 1]
j_mhz = 3.35

{protocol}
"#
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn sweep_roundtrips_through_csv_and_sidecar() {
        let cfg = tiny_config(
            r#"
[protocol]
type = "rabi-length"
f_drive_ghz = [5.7107, 5.7263]
t_drive_us = { start = 0.0, stop = 0.4, n = 3 }
amplitude = { mhz = 2.0 }

[protocol.options]
shape = "square"
"#,
        );
        let out = cfg.execute().unwrap();
        let RunOutput::Sweep(sweep) = &out else {
            panic!("expected sweep");
        };
        let dir = tempfile::tempdir().unwrap();
        let artifacts = write_run(&cfg, &out, dir.path(), "roundtrip", 0.1).unwrap();
        assert_eq!(artifacts.data_paths.len(), 2);
        let loaded = read_sweep(&artifacts.data_paths[0]).unwrap();
        assert_eq!(loaded.protocol, sweep.protocol);
        assert_eq!(loaded.axis1.values, sweep.axis1.values);
        assert_eq!(loaded.fields.len(), sweep.fields.len());
        for (a, b) in loaded.fields.iter().zip(&sweep.fields) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.values, b.values, "field {} changed in CSV", a.name);
        }
        // The manifest names the emitted files and carries the hashes.
        let manifest = read_manifest(&artifacts.manifest_path).unwrap();
        assert_eq!(manifest.protocol, "rabi-length");
        assert_eq!(manifest.files.len(), 2);
        assert_eq!(manifest.config_sha256.len(), 64);
        assert_eq!(
            manifest.resolved_amplitudes_mhz["drive_amplitude_mhz"],
            vec![2.0]
        );
    }

    #[test]
    fn physics_hash_tracks_physics_only() {
        let base = tiny_config(
            r#"
[protocol]
type = "relaxation"
qubit = 0
delays_us = [0.0, 1.0]
"#,
        );
        let h0 = physics_hash(&base);

        let mut retitled = base.clone();
        retitled.title = Some("renamed".into());
        retitled.output.basename = Some("elsewhere".into());
        assert_eq!(physics_hash(&retitled), h0, "title/output must not matter");

        let mut retuned = base.clone();
        retuned.system.qubits[0].omega_ghz += 1e-6;
        assert_ne!(physics_hash(&retuned), h0, "system change must matter");

        let mut recalibrated = base;
        recalibrated.calibration.amplitude_scale_mhz_per_v = 700.0;
        assert_ne!(
            physics_hash(&recalibrated),
            h0,
            "calibration change must matter"
        );
    }

    #[test]
    fn curves_write_and_compare() {
        let cfg = tiny_config(
            r#"
[protocol]
type = "relaxation"
qubit = 0
delays_us = { start = 0.0, stop = 4.0, n = 9 }
"#,
        );
        let out = cfg.execute().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = write_run(&cfg, &out, dir.path(), "run_a", 0.0).unwrap();
        let b = write_run(&cfg, &out, dir.path(), "run_b", 0.0).unwrap();

        // Identical data: all-zero deviations.
        let report = compare_files(&a.data_paths[0], &b.data_paths[0], 1e-12).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_abs, 0.0);
        assert_eq!(report.observables.len(), 1);
        assert_eq!(report.observables[0].name, "pop_Qb");

        // Perturb one value: the report fails and localizes the column.
        let text = std::fs::read_to_string(&b.data_paths[0]).unwrap();
        let mut lines: Vec<String> = text.lines().map(|s| s.to_string()).collect();
        let last = lines.last_mut().unwrap();
        let (head, _) = last.rsplit_once(',').unwrap();
        *last = format!("{head},0.999");
        std::fs::write(&b.data_paths[0], lines.join("\n") + "\n").unwrap();
        let report = compare_files(&a.data_paths[0], &b.data_paths[0], 1e-6).unwrap();
        assert!(!report.pass);
        assert!(report.max_abs > 0.1);

        // Different grids: shape mismatch, not a numeric report.
        let short = tiny_config(
            r#"
[protocol]
type = "relaxation"
qubit = 0
delays_us = { start = 0.0, stop = 4.0, n = 5 }
"#,
        );
        let out_short = short.execute().unwrap();
        let c = write_run(&short, &out_short, dir.path(), "run_c", 0.0).unwrap();
        let err = compare_files(&a.data_paths[0], &c.data_paths[0], 1e-6).unwrap_err();
        assert!(matches!(err, OutputError::ShapeMismatch(_)), "{err}");
    }

    #[test]
    fn rendering_is_deterministic() {
        let cfg = tiny_config(
            r#"
[protocol]
type = "eigen-diagram"
dv_mv = { start = -1.0, stop = 1.0, n = 5 }

[[protocol.tuning.qubits]]
alpha_ghz = 5.7112
beta_ghz_per_mv = 0.2

[[protocol.tuning.qubits]]
alpha_ghz = 5.7255
beta_ghz_per_mv = 0.0
"#,
        );
        let RunOutput::Sweep(sweep) = cfg.execute().unwrap() else {
            panic!("expected sweep");
        };
        assert_eq!(render_sweep_csv(&sweep), render_sweep_csv(&sweep));
        assert_eq!(render_sweep_sidecar(&sweep), render_sweep_sidecar(&sweep));
        // NaN-free diagram with exact axis values in the CSV.
        let csv = render_sweep_csv(&sweep);
        assert!(csv.starts_with("axis1,axis2,observable,value\n"));
        assert!(!csv.contains("NaN"));
        assert!(csv.contains("\n-1,")); // exact grid endpoint
    }

    #[test]
    fn trace_csv_has_time_and_observables() {
        let cfg = tiny_config(
            r#"
[protocol]
type = "readout-swap"
eps = { grid = [2.0] }

[protocol.options]
t_pulse_us = 0.1
t_end_us = 0.15
excited_qubit = 1
n_samples = 4
"#,
        );
        let out = cfg.execute().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let artifacts = write_run(&cfg, &out, dir.path(), "swap", 0.0).unwrap();
        assert_eq!(artifacts.data_paths.len(), 1);
        assert!(artifacts.data_paths[0]
            .file_name()
            .unwrap()
            .to_string_lossy()
            .contains("eps2"));
        let text = std::fs::read_to_string(&artifacts.data_paths[0]).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("time_us,"), "{header}");
        assert!(header.contains("pop_Qb") && header.contains("pop_Qd"));
        assert!(header.contains("nbar"));
        assert_eq!(text.lines().count(), 5); // header + 4 samples
    }
}
