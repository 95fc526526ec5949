//! Spectroscopy protocols: continuous two-tone maps versus gate voltage,
//! pulsed power spectroscopy, and dressed-branch eigen-diagrams.

use super::{
    check_grid, run_grid, sweep_metadata, Axis, GateVoltageModel, IntegrationOptions,
    ProtocolError, ReadoutPulse, SweepResult,
};
use crate::dynamics::{evolve, Hamiltonian, IntegratorConfig};
use crate::model::{
    DriveCoefficient, DriveSpec, DriveTarget, DriveTerm, Frame, PulseEnvelope, SystemSpec,
};
use crate::operator::{DensityMatrix, HilbertSpace, Operator, C64};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Two-tone spectroscopy
// ---------------------------------------------------------------------------

/// Options for [`two_tone_spectroscopy`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoToneOptions {
    /// Probe-tone drive amplitude A/2π in MHz on the shared qubit line.
    /// Keep it well below the qubit linewidths' saturation scale for clean
    /// line shapes.
    pub amplitude_mhz: f64,
    /// Continuous-drive window per cell in µs. The system only has to reach
    /// quasi-steady state within it, not full equilibrium.
    pub duration_us: f64,
    /// Trailing fraction of the window that is averaged into the response.
    pub window_fraction: f64,
    /// Number of samples across the averaging window (≥ 2).
    pub window_samples: usize,
    pub integration: IntegrationOptions,
}

impl Default for TwoToneOptions {
    fn default() -> Self {
        Self {
            amplitude_mhz: 0.15,
            duration_us: 15.0,
            window_fraction: 0.2,
            window_samples: 9,
            integration: IntegrationOptions::default(),
        }
    }
}

impl TwoToneOptions {
    fn validate(&self) -> Result<(), ProtocolError> {
        let mut issues = self.integration.validation_issues();
        if !(self.amplitude_mhz > 0.0) || !self.amplitude_mhz.is_finite() {
            issues.push(format!(
                "drive amplitude {} MHz must be positive",
                self.amplitude_mhz
            ));
        }
        if !(self.duration_us > 0.0) || !self.duration_us.is_finite() {
            issues.push(format!(
                "drive window {} µs must be positive",
                self.duration_us
            ));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            issues.push(format!(
                "window fraction {} must lie in (0, 1]",
                self.window_fraction
            ));
        }
        if self.window_samples < 2 {
            issues.push("window_samples must be ≥ 2".into());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ProtocolError::InvalidInput(issues.join("; ")))
        }
    }
}

/// Continuous-wave two-tone spectroscopy versus gate voltage: at every
/// (ΔV, f_drive) cell the qubits are retuned by the gate-voltage model, a
/// weak continuous tone drives the shared qubit line at `f_drive`, and the
/// quasi-steady response is recorded after `duration_us`.
///
/// The simulation runs in the vacuum-resonator reduction (the readout mode
/// stays empty under a weak qubit tone; its only effects are the Lamb shifts
/// already folded into the reduced Hamiltonian), which keeps wide maps cheap.
///
/// Recorded fields, each averaged over the trailing window:
/// * `pop_<qubit>` — excited-state population of every qubit;
/// * `cavity_pull_mhz` — the dispersive readout-mode pull
///   `Σ_i χ_i ⟨σ^z_i⟩` in MHz with `χ_i = g_i²/Δ_i`; the transmission phase
///   a network analyzer would report is `arctan(2·pull/κ)`, a monotone
///   function of this field. Qubits with `g = 0` pull nothing — their lines
///   are invisible in dispersive readout except where hybridization with a
///   coupled bright qubit lends them weight, which is exactly how avoided
///   crossings appear in such maps.
pub fn two_tone_spectroscopy(
    spec: &SystemSpec,
    voltages: &GateVoltageModel,
    dv_mv: &[f64],
    f_drive_ghz: &[f64],
    opts: &TwoToneOptions,
) -> Result<SweepResult, ProtocolError> {
    spec.validate()?;
    voltages.validate()?;
    opts.validate()?;
    check_grid("gate-voltage", dv_mv)?;
    check_grid("drive-frequency", f_drive_ghz)?;
    if voltages.qubits.len() != spec.qubits.len() {
        return Err(ProtocolError::InvalidInput(format!(
            "gate-voltage model covers {} qubits but the system has {}",
            voltages.qubits.len(),
            spec.qubits.len()
        )));
    }

    let mut field_defs: Vec<(String, String)> = spec
        .qubits
        .iter()
        .enumerate()
        .map(|(i, q)| (format!("pop_{}", q.display_name(i)), "1".to_string()))
        .collect();
    field_defs.push(("cavity_pull_mhz".to_string(), "MHz".to_string()));
    let field_refs: Vec<(&str, &str)> = field_defs
        .iter()
        .map(|(n, u)| (n.as_str(), u.as_str()))
        .collect();

    let t_end = opts.duration_us;
    let t0 = t_end * (1.0 - opts.window_fraction);
    let n_s = opts.window_samples;
    let sample_times: Vec<f64> = (0..n_s)
        .map(|k| t0 + (t_end - t0) * k as f64 / (n_s - 1) as f64)
        .collect();

    let metadata = sweep_metadata(
        spec,
        serde_json::json!({
            "protocol": "two_tone_spectroscopy",
            "options": opts,
            "voltage_model": voltages,
        }),
    );

    run_grid(
        "two_tone_spectroscopy",
        Axis::new("delta_v", "mV", dv_mv),
        Axis::new("f_drive", "GHz", f_drive_ghz),
        &field_refs,
        metadata,
        |i1, i2| {
            let dv = dv_mv[i1];
            let f_dr = f_drive_ghz[i2];
            let tuned = voltages.apply(spec, dv).map_err(|e| e.to_string())?;
            let reduced = tuned.qubit_only().map_err(|e| e.to_string())?;
            let h0 = reduced.hamiltonian(f_dr);
            let drive = DriveTerm {
                raising_op: reduced.drive_raising_operator(),
                coeff: DriveCoefficient::Rotating {
                    envelope: PulseEnvelope::square(opts.amplitude_mhz, t_end),
                    t_start: 0.0,
                    scale: 1.0,
                    delta_omega: 0.0,
                },
            };
            let cfg = IntegratorConfig::new(t_end)
                .with_method(opts.integration.method())
                .with_sample_times(sample_times.clone());
            let traj = evolve(
                &DensityMatrix::ground(reduced.space()),
                &Hamiltonian::with_drives(h0, vec![drive]),
                &reduced.collapse_operators(),
                &reduced.observables(),
                &cfg,
            )
            .map_err(|e| e.to_string())?;

            let mut out = Vec::with_capacity(tuned.qubits.len() + 1);
            let mut pull = 0.0;
            for (i, q) in tuned.qubits.iter().enumerate() {
                let series = traj
                    .observable(&format!("pop_{}", q.display_name(i)))
                    .ok_or("population series missing")?;
                let mean = series.iter().sum::<f64>() / series.len() as f64;
                out.push(mean);
                if q.g_mhz != 0.0 {
                    let delta_mhz = (q.omega_ghz - tuned.resonator.omega_ghz) * 1.0e3;
                    let chi = q.g_mhz * q.g_mhz / delta_mhz;
                    pull += chi * (2.0 * mean - 1.0);
                }
            }
            out.push(pull);
            Ok(out)
        },
    )
}

// ---------------------------------------------------------------------------
// Pulsed spectroscopy
// ---------------------------------------------------------------------------

/// Options for [`pulsed_spectroscopy`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulsedSpectroscopyOptions {
    /// Square drive-pulse length in µs.
    pub drive_us: f64,
    /// Simulate in the vacuum-resonator reduction (default) or the full
    /// space. The reduction is required to be `false` to append a readout
    /// pulse.
    pub reduced: bool,
    /// Optional resonator readout pulse appended after the drive; the
    /// post-readout populations are recorded in additional `_ro` fields.
    pub readout: Option<ReadoutPulse>,
    pub integration: IntegrationOptions,
}

impl Default for PulsedSpectroscopyOptions {
    fn default() -> Self {
        Self {
            drive_us: 10.0,
            reduced: true,
            readout: None,
            integration: IntegrationOptions::default(),
        }
    }
}

impl PulsedSpectroscopyOptions {
    fn validate(&self) -> Result<(), ProtocolError> {
        let mut issues = self.integration.validation_issues();
        if !(self.drive_us > 0.0) || !self.drive_us.is_finite() {
            issues.push(format!("drive length {} µs must be positive", self.drive_us));
        }
        if let Some(ro) = &self.readout {
            issues.extend(ro.validation_issues());
            if self.reduced {
                issues.push(
                    "a readout pulse needs the resonator: set reduced = false".to_string(),
                );
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ProtocolError::InvalidInput(issues.join("; ")))
        }
    }
}

/// Pulsed qubit spectroscopy: a square tone of each amplitude in
/// `amplitudes_mhz` drives the shared qubit line at each `f_drive_ghz` for
/// `drive_us`, and the end-of-pulse populations are recorded.
///
/// At low power the map shows one line per (dressed) qubit transition; at
/// high power, multi-photon lines appear — most prominently the two-photon
/// transition to the doubly excited state of an exchange-coupled pair,
/// halfway between the two single-qubit lines.
///
/// Fields: `pop_<qubit>` and `n_total` at the end of the drive pulse, plus
/// `pop_<qubit>_ro` and `nbar_ro` after the readout pulse when one is
/// configured.
pub fn pulsed_spectroscopy(
    spec: &SystemSpec,
    amplitudes_mhz: &[f64],
    f_drive_ghz: &[f64],
    opts: &PulsedSpectroscopyOptions,
) -> Result<SweepResult, ProtocolError> {
    spec.validate()?;
    opts.validate()?;
    check_grid("drive-amplitude", amplitudes_mhz)?;
    check_grid("drive-frequency", f_drive_ghz)?;
    if amplitudes_mhz.iter().any(|&a| a < 0.0) {
        return Err(ProtocolError::InvalidInput(
            "drive amplitudes must be ≥ 0".into(),
        ));
    }

    let mut field_defs: Vec<(String, String)> = spec
        .qubits
        .iter()
        .enumerate()
        .map(|(i, q)| (format!("pop_{}", q.display_name(i)), "1".to_string()))
        .collect();
    field_defs.push(("n_total".to_string(), "1".to_string()));
    if opts.readout.is_some() {
        for (i, q) in spec.qubits.iter().enumerate() {
            field_defs.push((format!("pop_{}_ro", q.display_name(i)), "1".to_string()));
        }
        field_defs.push(("nbar_ro".to_string(), "1".to_string()));
    }
    let field_refs: Vec<(&str, &str)> = field_defs
        .iter()
        .map(|(n, u)| (n.as_str(), u.as_str()))
        .collect();

    let metadata = sweep_metadata(
        spec,
        serde_json::json!({
            "protocol": "pulsed_spectroscopy",
            "options": opts,
        }),
    );

    run_grid(
        "pulsed_spectroscopy",
        Axis::new("a_drive", "MHz", amplitudes_mhz),
        Axis::new("f_drive", "GHz", f_drive_ghz),
        &field_refs,
        metadata,
        |i1, i2| {
            let a = amplitudes_mhz[i1];
            let f_dr = f_drive_ghz[i2];
            if opts.reduced {
                let reduced = spec.qubit_only().map_err(|e| e.to_string())?;
                let h0 = reduced.hamiltonian(f_dr);
                let drive = DriveTerm {
                    raising_op: reduced.drive_raising_operator(),
                    coeff: DriveCoefficient::Rotating {
                        envelope: PulseEnvelope::square(a, opts.drive_us),
                        t_start: 0.0,
                        scale: 1.0,
                        delta_omega: 0.0,
                    },
                };
                let cfg = IntegratorConfig::new(opts.drive_us)
                    .with_method(opts.integration.method())
                    .with_sample_times(vec![opts.drive_us]);
                let traj = evolve(
                    &DensityMatrix::ground(reduced.space()),
                    &Hamiltonian::with_drives(h0, vec![drive]),
                    &reduced.collapse_operators(),
                    &reduced.observables(),
                    &cfg,
                )
                .map_err(|e| e.to_string())?;
                let mut out = Vec::with_capacity(spec.qubits.len() + 1);
                let mut total = 0.0;
                for (i, q) in spec.qubits.iter().enumerate() {
                    let p = traj
                        .observable(&format!("pop_{}", q.display_name(i)))
                        .and_then(|s| s.last().copied())
                        .ok_or("population series missing")?;
                    out.push(p);
                    total += p;
                }
                out.push(total);
                Ok(out)
            } else {
                let h0 = spec.build_rotating_frame(f_dr).map_err(|e| e.to_string())?;
                let mut drives = vec![spec
                    .compile_drive(
                        &DriveSpec {
                            target: DriveTarget::QubitDrive,
                            envelope: PulseEnvelope::square(a, opts.drive_us),
                            carrier_ghz: f_dr,
                            amplitude_scale_mhz_per_v: crate::model::default_amplitude_scale(),
                        },
                        Frame::Rotating(f_dr),
                        0.0,
                    )
                    .map_err(|e| e.to_string())?];
                let mut t_end = opts.drive_us;
                let mut samples = vec![opts.drive_us];
                if let Some(ro) = &opts.readout {
                    drives.push(
                        spec.compile_drive(
                            &DriveSpec {
                                target: DriveTarget::ResonatorProbe,
                                envelope: PulseEnvelope::square(ro.eps_mhz, ro.duration_us),
                                carrier_ghz: spec.resonator.omega_ghz,
                                amplitude_scale_mhz_per_v:
                                    crate::model::default_amplitude_scale(),
                            },
                            Frame::Rotating(f_dr),
                            opts.drive_us,
                        )
                        .map_err(|e| e.to_string())?,
                    );
                    t_end += ro.duration_us;
                    samples.push(t_end);
                }
                let cfg = IntegratorConfig::new(t_end)
                    .with_method(opts.integration.method())
                    .with_sample_times(samples);
                let traj = evolve(
                    &DensityMatrix::ground(spec.space().map_err(|e| e.to_string())?),
                    &Hamiltonian::with_drives(h0, drives),
                    &spec.build_collapse_operators().map_err(|e| e.to_string())?,
                    &spec.observables().map_err(|e| e.to_string())?,
                    &cfg,
                )
                .map_err(|e| e.to_string())?;
                let mut out = Vec::new();
                let mut total = 0.0;
                for (i, q) in spec.qubits.iter().enumerate() {
                    let s = traj
                        .observable(&format!("pop_{}", q.display_name(i)))
                        .ok_or("population series missing")?;
                    out.push(s[0]);
                    total += s[0];
                }
                out.push(total);
                if opts.readout.is_some() {
                    for (i, q) in spec.qubits.iter().enumerate() {
                        let s = traj
                            .observable(&format!("pop_{}", q.display_name(i)))
                            .ok_or("population series missing")?;
                        out.push(*s.last().ok_or("empty series")?);
                    }
                    let nbar = traj.observable("nbar").ok_or("nbar series missing")?;
                    out.push(*nbar.last().ok_or("empty series")?);
                }
                Ok(out)
            }
        },
    )
}

// ---------------------------------------------------------------------------
// Eigen-diagram
// ---------------------------------------------------------------------------

/// Dressed one-excitation spectrum versus gate voltage for N exchange-coupled
/// qubits: at every ΔV the qubits are retuned by the gate-voltage model and
/// the one-excitation block
///
/// ```text
/// H₁[i][i] = f_i(ΔV),   H₁[i][j] = J_ij/1000     (all in GHz)
/// ```
///
/// is diagonalized. The result has one row per ΔV and one branch per qubit,
/// sorted ascending — a labeling symmetric under any relabeling of the
/// qubits. The `bare_ghz` field carries the uncoupled hyperbolas (also
/// sorted) for overlay.
///
/// The readout resonator is intentionally excluded: tuning diagrams of this
/// kind are fits to *measured* line positions, so its dispersive shifts are
/// already absorbed into the per-qubit tuning parameters, and including the
/// mode again would double-count them.
pub fn eigen_diagram(
    spec: &SystemSpec,
    voltages: &GateVoltageModel,
    dv_mv: &[f64],
) -> Result<SweepResult, ProtocolError> {
    spec.validate()?;
    voltages.validate()?;
    check_grid("gate-voltage", dv_mv)?;
    let n = spec.qubits.len();
    if voltages.qubits.len() != n {
        return Err(ProtocolError::InvalidInput(format!(
            "gate-voltage model covers {} qubits but the system has {}",
            voltages.qubits.len(),
            n
        )));
    }

    // Precompute one eigensolve per voltage column.
    let space = HilbertSpace::single(n)
        .map_err(|e| ProtocolError::InvalidInput(format!("one-excitation space: {e}")))?;
    let mut dressed_cols: Vec<Vec<f64>> = Vec::with_capacity(dv_mv.len());
    let mut bare_cols: Vec<Vec<f64>> = Vec::with_capacity(dv_mv.len());
    for &dv in dv_mv {
        let freqs = voltages.frequencies_ghz(dv);
        let mut m = ndarray::Array2::<C64>::zeros((n, n));
        for (i, &f) in freqs.iter().enumerate() {
            m[[i, i]] = C64::new(f, 0.0);
        }
        for c in &spec.couplings {
            let (i, j) = (c.pair[0], c.pair[1]);
            let v = C64::new(c.j_mhz * 1.0e-3, 0.0);
            m[[i, j]] += v;
            m[[j, i]] += v;
        }
        let h1 = Operator::from_elements(space.clone(), m).map_err(|e| {
            ProtocolError::InvalidInput(format!("one-excitation block: {e}"))
        })?;
        let vals = h1
            .eigenvalues_hermitian()
            .map_err(|e| ProtocolError::InvalidInput(format!("eigensolve failed: {e}")))?;
        dressed_cols.push(vals);
        let mut bare = freqs;
        bare.sort_by(|a, b| a.partial_cmp(b).expect("finite frequencies"));
        bare_cols.push(bare);
    }

    let metadata = sweep_metadata(
        spec,
        serde_json::json!({
            "protocol": "eigen_diagram",
            "voltage_model": voltages,
        }),
    );
    let branches: Vec<f64> = (0..n).map(|k| k as f64).collect();
    run_grid(
        "eigen_diagram",
        Axis::new("delta_v", "mV", dv_mv),
        Axis::new("branch", "1", &branches),
        &[("dressed_ghz", "GHz"), ("bare_ghz", "GHz")],
        metadata,
        |i1, i2| Ok(vec![dressed_cols[i1][i2], bare_cols[i1][i2]]),
    )
}
