//! Measurement protocols: full simulated experiments built from the model
//! and dynamics layers.
//!
//! Every protocol in this module is the in-silico version of a bench
//! procedure on a coupled qubit/resonator chip:
//!
//! * [`two_tone_spectroscopy`] — gate-voltage × drive-frequency maps of the
//!   continuously driven system (avoided-crossing spectroscopy).
//! * [`pulsed_spectroscopy`] — drive-power × frequency maps with a pulsed
//!   drive (multi-photon lines appear at high power).
//! * [`rabi_length_frequency`] / [`rabi_amplitude_frequency`] — coherent
//!   Rabi maps (chevrons, amplitude waterfalls, cross-resonance and
//!   two-photon gate calibration).
//! * [`readout_swap`] — time-resolved strong readout pulses and the
//!   photon-induced qubit–qubit swap they can switch on.
//! * [`relaxation_experiment`] / [`ramsey_experiment`] — per-qubit T₁ and
//!   T₂* curves ready for the fitting routines in [`crate::analysis`].
//! * [`eigen_diagram`] — dressed one-excitation branches versus gate
//!   voltage for N coupled qubits.
//!
//! Sweeps evaluate their grid cells in parallel (the cells are independent
//! simulations) and merge results by grid index, so a sweep's output is
//! identical for any worker count; with a fixed-step integrator it is
//! bit-for-bit reproducible.

mod rabi;
mod spectroscopy;
mod timedomain;

pub use rabi::{
    rabi_amplitude_frequency, rabi_length_frequency, AmplitudeRabiOptions, RabiOptions,
};
pub use spectroscopy::{
    eigen_diagram, pulsed_spectroscopy, two_tone_spectroscopy, PulsedSpectroscopyOptions,
    TwoToneOptions,
};
pub use timedomain::{
    ramsey_experiment, readout_swap, relaxation_experiment, DecayCurve, RamseyCurve,
    RamseyOptions, ReadoutSwapOptions, ReadoutSwapTrace, RelaxationOptions,
};

use crate::dynamics::{DynamicsError, Method};
use crate::model::{ModelError, SystemSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors surfaced by protocol drivers.
#[derive(Debug, Error)]
pub enum ProtocolError {
    /// A grid, option, or system parameter is unusable as given.
    #[error("invalid protocol input: {0}")]
    InvalidInput(String),
    /// The system description itself failed validation.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// An integration failed in a context where no per-cell recovery exists
    /// (single-trace protocols; sweeps record per-cell failures instead).
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    /// Every cell of a sweep failed; the first failure message is included.
    #[error("all {count} sweep cells failed; first failure: {first}")]
    AllCellsFailed { count: usize, first: String },
}

// ---------------------------------------------------------------------------
// Sweep results
// ---------------------------------------------------------------------------

/// One named sweep axis with units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    /// Unit string as it should appear in column headers (e.g. `"GHz"`,
    /// `"mV"`, `"us"`, `"dimensionless"`).
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, unit: &str, values: &[f64]) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
            values: values.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One scalar field recorded at every grid cell, stored row-major with the
/// second axis fastest: `values[i1 * axis2.len() + i2]`. Failed cells hold
/// `NaN` and are listed in [`SweepResult::failures`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSeries {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

/// A cell whose simulation failed, with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellFailure {
    pub i1: usize,
    pub i2: usize,
    pub message: String,
}

/// Provenance attached to every sweep: which system produced it and with
/// what parameters, so a result file is interpretable on its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMetadata {
    /// SHA-256 of the canonical JSON serialization of the system.
    pub system_sha256: String,
    /// Full system snapshot.
    pub system: serde_json::Value,
    /// Protocol options snapshot (shape depends on the protocol).
    pub parameters: serde_json::Value,
}

/// A rectangular two-axis sweep: every cell either holds values for all
/// fields or is explicitly marked failed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    /// Protocol identifier (e.g. `"two_tone_spectroscopy"`).
    pub protocol: String,
    /// Slow (outer) axis.
    pub axis1: Axis,
    /// Fast (inner) axis.
    pub axis2: Axis,
    pub fields: Vec<FieldSeries>,
    pub failures: Vec<CellFailure>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    /// `(axis1 length, axis2 length)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.len())
    }

    pub fn field(&self, name: &str) -> Option<&FieldSeries> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Value of `field` at grid cell `(i1, i2)`; `None` if the field or the
    /// indices do not exist. Failed cells return `Some(NaN)`.
    pub fn value(&self, field: &str, i1: usize, i2: usize) -> Option<f64> {
        let (n1, n2) = self.shape();
        if i1 >= n1 || i2 >= n2 {
            return None;
        }
        self.field(field).map(|f| f.values[i1 * n2 + i2])
    }

    /// All values of `field` along axis 2 at fixed `i1` (one "row").
    pub fn fast_axis_slice(&self, field: &str, i1: usize) -> Option<Vec<f64>> {
        let (n1, n2) = self.shape();
        if i1 >= n1 {
            return None;
        }
        self.field(field)
            .map(|f| f.values[i1 * n2..(i1 + 1) * n2].to_vec())
    }

    /// All values of `field` along axis 1 at fixed `i2` (one "column").
    pub fn slow_axis_slice(&self, field: &str, i2: usize) -> Option<Vec<f64>> {
        let (n1, n2) = self.shape();
        if i2 >= n2 {
            return None;
        }
        self.field(field)
            .map(|f| (0..n1).map(|i1| f.values[i1 * n2 + i2]).collect())
    }

    /// Whether the cell at `(i1, i2)` failed.
    pub fn is_failed(&self, i1: usize, i2: usize) -> bool {
        self.failures.iter().any(|c| c.i1 == i1 && c.i2 == i2)
    }

    /// Internal consistency: every field covers the full rectangle.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let (n1, n2) = self.shape();
        if n1 == 0 || n2 == 0 {
            return Err(ProtocolError::InvalidInput(
                "sweep axes must be non-empty".into(),
            ));
        }
        for f in &self.fields {
            if f.values.len() != n1 * n2 {
                return Err(ProtocolError::InvalidInput(format!(
                    "field '{}' has {} values for a {}×{} grid",
                    f.name,
                    f.values.len(),
                    n1,
                    n2
                )));
            }
        }
        Ok(())
    }
}

/// Metadata constructor shared by all sweep protocols.
pub(crate) fn sweep_metadata(spec: &SystemSpec, parameters: serde_json::Value) -> SweepMetadata {
    let system = serde_json::to_value(spec).expect("SystemSpec serializes");
    let canonical = serde_json::to_string(&system).expect("JSON value serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let system_sha256 = format!("{:x}", hasher.finalize());
    SweepMetadata {
        system_sha256,
        system,
        parameters,
    }
}

/// Run an `n1 × n2` grid of independent cells in parallel and assemble the
/// result. `worker(i1, i2)` returns the values of all fields at that cell,
/// in the order of `field_defs`; an `Err` marks the cell failed. Cells are
/// merged by grid index, so the output is independent of scheduling.
pub(crate) fn run_grid<F>(
    protocol: &str,
    axis1: Axis,
    axis2: Axis,
    field_defs: &[(&str, &str)],
    metadata: SweepMetadata,
    worker: F,
) -> Result<SweepResult, ProtocolError>
where
    F: Fn(usize, usize) -> Result<Vec<f64>, String> + Sync,
{
    let (n1, n2) = (axis1.len(), axis2.len());
    if n1 == 0 || n2 == 0 {
        return Err(ProtocolError::InvalidInput(
            "sweep axes must be non-empty".into(),
        ));
    }
    let cells: Vec<Result<Vec<f64>, String>> = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let (i1, i2) = (k / n2, k % n2);
            let out = worker(i1, i2)?;
            if out.len() != field_defs.len() {
                return Err(format!(
                    "internal: worker returned {} values for {} fields",
                    out.len(),
                    field_defs.len()
                ));
            }
            Ok(out)
        })
        .collect();

    let mut fields: Vec<FieldSeries> = field_defs
        .iter()
        .map(|(name, unit)| FieldSeries {
            name: name.to_string(),
            unit: unit.to_string(),
            values: vec![f64::NAN; n1 * n2],
        })
        .collect();
    let mut failures = Vec::new();
    for (k, cell) in cells.into_iter().enumerate() {
        match cell {
            Ok(values) => {
                for (f, v) in fields.iter_mut().zip(values) {
                    f.values[k] = v;
                }
            }
            Err(message) => failures.push(CellFailure {
                i1: k / n2,
                i2: k % n2,
                message,
            }),
        }
    }
    if failures.len() == n1 * n2 {
        return Err(ProtocolError::AllCellsFailed {
            count: failures.len(),
            first: failures[0].message.clone(),
        });
    }
    let result = SweepResult {
        protocol: protocol.to_string(),
        axis1,
        axis2,
        fields,
        failures,
        metadata,
    };
    result.validate()?;
    Ok(result)
}

// ---------------------------------------------------------------------------
// Gate-voltage model
// ---------------------------------------------------------------------------

/// Gate-voltage tuning curve of one qubit: its transition frequency follows
/// the hyperbola `f(ΔV) = √(α² + (β·(ΔV − δ))²)`, with minimum α at the
/// sweet spot ΔV = δ.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitTuning {
    /// Sweet-spot (minimum) frequency α in GHz; must be positive.
    pub alpha_ghz: f64,
    /// Tuning slope β in GHz/mV; must be non-negative (zero = untunable).
    pub beta_ghz_per_mv: f64,
    /// Sweet-spot offset δ in mV.
    #[serde(default)]
    pub delta_mv: f64,
}

/// Maps a shared gate-voltage change ΔV (mV) onto all qubit frequencies.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateVoltageModel {
    pub qubits: Vec<QubitTuning>,
}

impl GateVoltageModel {
    pub fn new(qubits: Vec<QubitTuning>) -> Result<Self, ProtocolError> {
        let model = Self { qubits };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.qubits.is_empty() {
            return Err(ProtocolError::InvalidInput(
                "gate-voltage model needs at least one qubit".into(),
            ));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if !(q.alpha_ghz > 0.0) || !q.alpha_ghz.is_finite() {
                return Err(ProtocolError::InvalidInput(format!(
                    "qubit {i}: alpha_ghz = {} must be a positive frequency",
                    q.alpha_ghz
                )));
            }
            if !(q.beta_ghz_per_mv >= 0.0) || !q.beta_ghz_per_mv.is_finite() {
                return Err(ProtocolError::InvalidInput(format!(
                    "qubit {i}: beta_ghz_per_mv = {} must be ≥ 0",
                    q.beta_ghz_per_mv
                )));
            }
            if !q.delta_mv.is_finite() {
                return Err(ProtocolError::InvalidInput(format!(
                    "qubit {i}: delta_mv must be finite"
                )));
            }
        }
        Ok(())
    }

    /// Frequency of qubit `i` at gate voltage `dv_mv`, in GHz.
    pub fn frequency_ghz(&self, i: usize, dv_mv: f64) -> f64 {
        let q = &self.qubits[i];
        let detune = q.beta_ghz_per_mv * (dv_mv - q.delta_mv);
        (q.alpha_ghz * q.alpha_ghz + detune * detune).sqrt()
    }

    /// All qubit frequencies at `dv_mv`, in GHz.
    pub fn frequencies_ghz(&self, dv_mv: f64) -> Vec<f64> {
        (0..self.qubits.len())
            .map(|i| self.frequency_ghz(i, dv_mv))
            .collect()
    }

    /// A copy of `spec` with every qubit retuned to this model's frequency
    /// at gate voltage `dv_mv`. The model must describe exactly the qubits
    /// of `spec`.
    pub fn apply(&self, spec: &SystemSpec, dv_mv: f64) -> Result<SystemSpec, ProtocolError> {
        self.validate()?;
        if self.qubits.len() != spec.qubits.len() {
            return Err(ProtocolError::InvalidInput(format!(
                "gate-voltage model covers {} qubits but the system has {}",
                self.qubits.len(),
                spec.qubits.len()
            )));
        }
        if !dv_mv.is_finite() {
            return Err(ProtocolError::InvalidInput(format!(
                "gate voltage {dv_mv} mV is not finite"
            )));
        }
        let mut tuned = spec.clone();
        for (i, q) in tuned.qubits.iter_mut().enumerate() {
            q.omega_ghz = self.frequency_ghz(i, dv_mv);
        }
        Ok(tuned)
    }
}

// ---------------------------------------------------------------------------
// Shared options
// ---------------------------------------------------------------------------

/// Integrator settings shared by all protocols.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationOptions {
    /// Relative tolerance of the adaptive integrator.
    pub rtol: f64,
    /// Absolute tolerance of the adaptive integrator.
    pub atol: f64,
    /// If set, integrate with fixed-step RK4 at this step (µs) instead of
    /// the adaptive method; runs become bit-for-bit reproducible.
    pub fixed_step_us: Option<f64>,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-9,
            fixed_step_us: None,
        }
    }
}

impl IntegrationOptions {
    /// Tighter default for single-trace protocols, where a handful of
    /// integrations can afford more accuracy.
    pub fn precise() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            fixed_step_us: None,
        }
    }

    pub fn method(&self) -> Method {
        match self.fixed_step_us {
            Some(dt) => Method::FixedRk4 { dt },
            None => Method::AdaptiveRk45 {
                rtol: self.rtol,
                atol: self.atol,
            },
        }
    }

    pub fn validation_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            issues.push(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            ));
        }
        if let Some(dt) = self.fixed_step_us {
            if !(dt > 0.0) {
                issues.push(format!("fixed step {dt} µs must be positive"));
            }
        }
        issues
    }
}

/// Reference frame a protocol integrates in. Every protocol defaults to
/// the appropriate rotating frame; the lab frame keeps the carrier as an
/// explicit cos(ωt) factor (no rotating-wave approximation), runs orders
/// of magnitude slower, and is meant for convention cross-checks on small
/// reduced models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RunFrame {
    #[default]
    Rotating,
    Lab,
}

/// Which model a sweep integrates per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepModel {
    /// Resonator eliminated (vacuum mode, Lamb-shifted qubits): the right
    /// choice whenever the cavity stays empty, and orders of magnitude
    /// cheaper.
    Reduced,
    /// Full resonator ⊗ qubits space at the configured Fock cutoff.
    Full,
}

/// A square resonator readout pulse.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutPulse {
    /// Probe amplitude ε/2π in MHz.
    pub eps_mhz: f64,
    /// Pulse length in µs.
    pub duration_us: f64,
}

impl Default for ReadoutPulse {
    fn default() -> Self {
        Self {
            eps_mhz: 18.0,
            duration_us: 0.7,
        }
    }
}

impl ReadoutPulse {
    pub fn validation_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.eps_mhz > 0.0) || !self.eps_mhz.is_finite() {
            issues.push(format!(
                "readout amplitude {} MHz must be positive",
                self.eps_mhz
            ));
        }
        if !(self.duration_us > 0.0) || !self.duration_us.is_finite() {
            issues.push(format!(
                "readout duration {} µs must be positive",
                self.duration_us
            ));
        }
        issues
    }
}

/// Shared grid validation: finite values, non-empty.
pub(crate) fn check_grid(name: &str, values: &[f64]) -> Result<(), ProtocolError> {
    if values.is_empty() {
        return Err(ProtocolError::InvalidInput(format!(
            "{name} grid must be non-empty"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ProtocolError::InvalidInput(format!(
            "{name} grid contains non-finite values"
        )));
    }
    Ok(())
}

/// Shared check for strictly increasing delay/length grids.
pub(crate) fn check_increasing(name: &str, values: &[f64]) -> Result<(), ProtocolError> {
    check_grid(name, values)?;
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ProtocolError::InvalidInput(format!(
            "{name} grid must be strictly increasing"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{QubitSpec, ResonatorSpec};

    fn spec2() -> SystemSpec {
        SystemSpec {
            resonator: ResonatorSpec {
                omega_ghz: 5.668,
                kappa_mhz: 0.38,
                cutoff: 4,
            },
            qubits: vec![
                QubitSpec {
                    name: Some("b".into()),
                    omega_ghz: 5.7112,
                    g_mhz: 3.76,
                    gamma1_mhz: 0.088,
                    gamma_phi_mhz: 0.036,
                    eta: 1.0,
                },
                QubitSpec {
                    name: Some("d".into()),
                    omega_ghz: 5.7255,
                    g_mhz: 0.0,
                    gamma1_mhz: 0.0053,
                    gamma_phi_mhz: 0.0044,
                    eta: 0.0,
                },
            ],
            couplings: vec![crate::model::CouplingSpec {
                pair: [0, 1],
                j_mhz: 3.35,
            }],
            probe_scale: crate::model::default_probe_scale(),
        }
    }

    fn model2() -> GateVoltageModel {
        GateVoltageModel {
            qubits: vec![
                QubitTuning {
                    alpha_ghz: 5.70,
                    beta_ghz_per_mv: 1.0,
                    delta_mv: 0.0,
                },
                QubitTuning {
                    alpha_ghz: 5.7255,
                    beta_ghz_per_mv: 0.0,
                    delta_mv: 0.0,
                },
            ],
        }
    }

    #[test]
    fn hyperbola_minimum_and_asymptote() {
        let m = model2();
        // At the sweet spot the frequency is exactly alpha.
        assert_eq!(m.frequency_ghz(0, 0.0), 5.70);
        // Far from it the curve approaches the linear asymptote β·|ΔV − δ|.
        let f = m.frequency_ghz(0, 40.0);
        assert!((f - 40.0).abs() / 40.0 < 0.011, "asymptote violated: {f}");
        // Untunable qubit stays put.
        assert_eq!(m.frequency_ghz(1, 17.0), 5.7255);
    }

    #[test]
    fn hyperbola_offset_shifts_sweet_spot() {
        let m = GateVoltageModel {
            qubits: vec![QubitTuning {
                alpha_ghz: 6.0,
                beta_ghz_per_mv: 1.3,
                delta_mv: -4.0,
            }],
        };
        assert_eq!(m.frequency_ghz(0, -4.0), 6.0);
        assert!(m.frequency_ghz(0, 0.0) > 6.0);
        // Symmetric about the sweet spot.
        let lo = m.frequency_ghz(0, -4.0 - 2.5);
        let hi = m.frequency_ghz(0, -4.0 + 2.5);
        assert!((lo - hi).abs() < 1e-12);
    }

    #[test]
    fn voltage_model_validation() {
        assert!(GateVoltageModel { qubits: vec![] }.validate().is_err());
        let bad_alpha = GateVoltageModel {
            qubits: vec![QubitTuning {
                alpha_ghz: 0.0,
                beta_ghz_per_mv: 1.0,
                delta_mv: 0.0,
            }],
        };
        assert!(bad_alpha.validate().is_err());
        let bad_beta = GateVoltageModel {
            qubits: vec![QubitTuning {
                alpha_ghz: 5.0,
                beta_ghz_per_mv: -1.0,
                delta_mv: 0.0,
            }],
        };
        assert!(bad_beta.validate().is_err());
    }

    #[test]
    fn apply_retunes_all_qubits() {
        let spec = spec2();
        let m = model2();
        let tuned = m.apply(&spec, 0.12).unwrap();
        assert!((tuned.qubits[0].omega_ghz - m.frequency_ghz(0, 0.12)).abs() < 1e-15);
        assert_eq!(tuned.qubits[1].omega_ghz, 5.7255);
        // Everything else untouched.
        assert_eq!(tuned.qubits[0].g_mhz, spec.qubits[0].g_mhz);
        assert_eq!(tuned.resonator.kappa_mhz, spec.resonator.kappa_mhz);

        // Mismatched qubit count is rejected.
        let m1 = GateVoltageModel {
            qubits: vec![m.qubits[0].clone()],
        };
        assert!(m1.apply(&spec, 0.0).is_err());
    }

    #[test]
    fn grid_indexing_and_slices() {
        let axis1 = Axis::new("a", "mV", &[0.0, 1.0]);
        let axis2 = Axis::new("b", "GHz", &[10.0, 20.0, 30.0]);
        let meta = sweep_metadata(&spec2(), serde_json::json!({}));
        let sweep = run_grid(
            "test",
            axis1,
            axis2,
            &[("v", "x")],
            meta,
            |i1, i2| Ok(vec![(i1 * 10 + i2) as f64]),
        )
        .unwrap();
        assert_eq!(sweep.shape(), (2, 3));
        assert_eq!(sweep.value("v", 1, 2), Some(12.0));
        assert_eq!(sweep.fast_axis_slice("v", 0).unwrap(), vec![0.0, 1.0, 2.0]);
        assert_eq!(sweep.slow_axis_slice("v", 1).unwrap(), vec![1.0, 11.0]);
        assert!(sweep.failures.is_empty());
        assert!(sweep.value("v", 2, 0).is_none());
        assert!(sweep.value("nope", 0, 0).is_none());
    }

    #[test]
    fn failed_cells_are_nan_and_listed() {
        let meta = sweep_metadata(&spec2(), serde_json::json!({}));
        let sweep = run_grid(
            "test",
            Axis::new("a", "", &[0.0, 1.0]),
            Axis::new("b", "", &[0.0, 1.0]),
            &[("v", "")],
            meta,
            |i1, i2| {
                if i1 == 1 && i2 == 0 {
                    Err("boom".into())
                } else {
                    Ok(vec![1.0])
                }
            },
        )
        .unwrap();
        assert_eq!(sweep.failures.len(), 1);
        assert_eq!((sweep.failures[0].i1, sweep.failures[0].i2), (1, 0));
        assert!(sweep.is_failed(1, 0));
        assert!(sweep.value("v", 1, 0).unwrap().is_nan());
        assert_eq!(sweep.value("v", 1, 1), Some(1.0));
    }

    #[test]
    fn all_cells_failed_is_an_error() {
        let meta = sweep_metadata(&spec2(), serde_json::json!({}));
        let out = run_grid(
            "test",
            Axis::new("a", "", &[0.0]),
            Axis::new("b", "", &[0.0, 1.0]),
            &[("v", "")],
            meta,
            |_, _| Err("nope".into()),
        );
        match out {
            Err(ProtocolError::AllCellsFailed { count, .. }) => assert_eq!(count, 2),
            other => panic!("expected AllCellsFailed, got {other:?}"),
        }
    }

    #[test]
    fn metadata_hash_tracks_system_identity() {
        let spec = spec2();
        let m1 = sweep_metadata(&spec, serde_json::json!({}));
        let m2 = sweep_metadata(&spec, serde_json::json!({"other": 1}));
        assert_eq!(m1.system_sha256, m2.system_sha256);
        assert_eq!(m1.system_sha256.len(), 64);

        let mut changed = spec.clone();
        changed.qubits[0].omega_ghz += 1e-6;
        let m3 = sweep_metadata(&changed, serde_json::json!({}));
        assert_ne!(m1.system_sha256, m3.system_sha256);
    }

    #[test]
    fn sweep_serializes_round_trip() {
        let meta = sweep_metadata(&spec2(), serde_json::json!({"a_mhz": 0.15}));
        let sweep = run_grid(
            "test",
            Axis::new("x", "mV", &[0.0, 0.5]),
            Axis::new("y", "GHz", &[1.0]),
            &[("v", "pop")],
            meta,
            |i1, _| Ok(vec![i1 as f64]),
        )
        .unwrap();
        let json = serde_json::to_string(&sweep).unwrap();
        let back: SweepResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back.shape(), (2, 1));
        assert_eq!(back.value("v", 1, 0), Some(1.0));
        assert_eq!(back.metadata.system_sha256, sweep.metadata.system_sha256);
    }
}
