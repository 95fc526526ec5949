//! Coherent Rabi maps: drive length × frequency chevrons (including
//! cross-resonance and two-photon gate calibration) and drive amplitude ×
//! frequency "waterfall" maps.

use super::{
    check_grid, run_grid, sweep_metadata, Axis, IntegrationOptions, ProtocolError, ReadoutPulse,
    RunFrame, SweepModel, SweepResult,
};
use crate::dynamics::{evolve, Hamiltonian, IntegratorConfig};
use crate::model::{
    DriveCoefficient, DriveSpec, DriveTarget, DriveTerm, EnvelopeShape, Frame, PulseEnvelope,
    SystemSpec,
};
use crate::operator::DensityMatrix;
use serde::{Deserialize, Serialize};

/// Options for [`rabi_length_frequency`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiOptions {
    /// Peak drive amplitude A/2π in MHz on the shared qubit line.
    pub amplitude_mhz: f64,
    /// Pulse envelope shape (the pulse length is the swept axis).
    pub shape: EnvelopeShape,
    /// Simulate in the vacuum-resonator reduction (default) or the full
    /// space; a readout pulse requires the full space.
    pub model: SweepModel,
    /// Optional resonator readout pulse appended after the drive. Adds
    /// post-readout fields `pop_<qubit>_ro` and `nbar_ro`.
    pub readout: Option<ReadoutPulse>,
    /// Integrate in the rotating frame at the drive carrier (default) or
    /// in the lab frame with the explicit cos(ωt) carrier. The lab frame
    /// requires the reduced model without readout, and is vastly slower;
    /// populations agree with the rotating frame to the rotating-wave
    /// correction (A/2ω)², far below 1e-3 at microwave carriers.
    pub frame: RunFrame,
    pub integration: IntegrationOptions,
}

impl Default for RabiOptions {
    fn default() -> Self {
        Self {
            amplitude_mhz: 1.0,
            shape: EnvelopeShape::Gaussian,
            model: SweepModel::Reduced,
            readout: None,
            frame: RunFrame::Rotating,
            integration: IntegrationOptions::default(),
        }
    }
}

/// Options for [`rabi_amplitude_frequency`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplitudeRabiOptions {
    /// Fixed pulse length in µs (the amplitude is the swept axis).
    pub duration_us: f64,
    pub shape: EnvelopeShape,
    /// Instrument conversion from output volts to peak MHz.
    pub amplitude_scale_mhz_per_v: f64,
    pub model: SweepModel,
    pub readout: Option<ReadoutPulse>,
    pub integration: IntegrationOptions,
}

impl Default for AmplitudeRabiOptions {
    fn default() -> Self {
        Self {
            duration_us: 0.8,
            shape: EnvelopeShape::Gaussian,
            amplitude_scale_mhz_per_v: crate::model::default_amplitude_scale(),
            model: SweepModel::Reduced,
            readout: None,
            integration: IntegrationOptions::default(),
        }
    }
}

fn check_model_readout(
    model: SweepModel,
    readout: &Option<ReadoutPulse>,
    integration: &IntegrationOptions,
) -> Result<(), ProtocolError> {
    let mut issues = integration.validation_issues();
    if let Some(ro) = readout {
        issues.extend(ro.validation_issues());
        if model == SweepModel::Reduced {
            issues.push("a readout pulse needs the resonator: use SweepModel::Full".to_string());
        }
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(ProtocolError::InvalidInput(issues.join("; ")))
    }
}

/// Field name/unit list shared by both Rabi maps.
fn rabi_fields(spec: &SystemSpec, readout: bool) -> Vec<(String, String)> {
    let mut defs: Vec<(String, String)> = spec
        .qubits
        .iter()
        .enumerate()
        .map(|(i, q)| (format!("pop_{}", q.display_name(i)), "1".to_string()))
        .collect();
    if readout {
        for (i, q) in spec.qubits.iter().enumerate() {
            defs.push((format!("pop_{}_ro", q.display_name(i)), "1".to_string()));
        }
        defs.push(("nbar_ro".to_string(), "1".to_string()));
    }
    defs
}

/// One Rabi cell: drive pulse (possibly zero-length), optional readout
/// pulse, populations at end of drive and (if requested) end of readout.
fn rabi_cell(
    spec: &SystemSpec,
    f_drive_ghz: f64,
    envelope: PulseEnvelope,
    model: SweepModel,
    readout: &Option<ReadoutPulse>,
    frame: RunFrame,
    integration: &IntegrationOptions,
) -> Result<Vec<f64>, String> {
    let n_q = spec.qubits.len();
    let drive_len = envelope.duration().map_err(|e| e.to_string())?;
    match model {
        SweepModel::Reduced => {
            if drive_len <= 0.0 {
                return Ok(vec![0.0; n_q]);
            }
            let reduced = spec.qubit_only().map_err(|e| e.to_string())?;
            // Populations are frame-invariant observables, so either frame
            // may integrate them; the lab frame keeps the full carrier.
            let (h0, coeff) = match frame {
                RunFrame::Rotating => (
                    reduced.hamiltonian(f_drive_ghz),
                    DriveCoefficient::Rotating {
                        envelope,
                        t_start: 0.0,
                        scale: 1.0,
                        delta_omega: 0.0,
                    },
                ),
                RunFrame::Lab => (
                    reduced.hamiltonian(0.0),
                    DriveCoefficient::Lab {
                        envelope,
                        t_start: 0.0,
                        scale: 1.0,
                        carrier_omega: crate::units::ghz_to_angular(f_drive_ghz),
                    },
                ),
            };
            let drive = DriveTerm {
                raising_op: reduced.drive_raising_operator(),
                coeff,
            };
            let cfg = IntegratorConfig::new(drive_len)
                .with_method(integration.method())
                .with_sample_times(vec![drive_len]);
            let traj = evolve(
                &DensityMatrix::ground(reduced.space()),
                &Hamiltonian::with_drives(h0, vec![drive]),
                &reduced.collapse_operators(),
                &reduced.observables(),
                &cfg,
            )
            .map_err(|e| e.to_string())?;
            let mut out = Vec::with_capacity(n_q);
            for (i, q) in spec.qubits.iter().enumerate() {
                let p = traj
                    .observable(&format!("pop_{}", q.display_name(i)))
                    .and_then(|s| s.last().copied())
                    .ok_or("population series missing")?;
                out.push(p);
            }
            Ok(out)
        }
        SweepModel::Full => {
            let ro_len = readout.map(|r| r.duration_us).unwrap_or(0.0);
            let t_end = drive_len + ro_len;
            let n_fields = n_q + if readout.is_some() { n_q + 1 } else { 0 };
            if t_end <= 0.0 {
                return Ok(vec![0.0; n_fields]);
            }
            let h0 = spec
                .build_rotating_frame(f_drive_ghz)
                .map_err(|e| e.to_string())?;
            let mut drives = Vec::new();
            if drive_len > 0.0 {
                drives.push(
                    spec.compile_drive(
                        &DriveSpec {
                            target: DriveTarget::QubitDrive,
                            envelope,
                            carrier_ghz: f_drive_ghz,
                            amplitude_scale_mhz_per_v: crate::model::default_amplitude_scale(),
                        },
                        Frame::Rotating(f_drive_ghz),
                        0.0,
                    )
                    .map_err(|e| e.to_string())?,
                );
            }
            let mut samples = vec![drive_len];
            if let Some(ro) = readout {
                drives.push(
                    spec.compile_drive(
                        &DriveSpec {
                            target: DriveTarget::ResonatorProbe,
                            envelope: PulseEnvelope::square(ro.eps_mhz, ro.duration_us),
                            carrier_ghz: spec.resonator.omega_ghz,
                            amplitude_scale_mhz_per_v: crate::model::default_amplitude_scale(),
                        },
                        Frame::Rotating(f_drive_ghz),
                        drive_len,
                    )
                    .map_err(|e| e.to_string())?,
                );
                samples.push(t_end);
            }
            let cfg = IntegratorConfig::new(t_end)
                .with_method(integration.method())
                .with_sample_times(samples);
            let traj = evolve(
                &DensityMatrix::ground(spec.space().map_err(|e| e.to_string())?),
                &Hamiltonian::with_drives(h0, drives),
                &spec.build_collapse_operators().map_err(|e| e.to_string())?,
                &spec.observables().map_err(|e| e.to_string())?,
                &cfg,
            )
            .map_err(|e| e.to_string())?;
            let mut out = Vec::with_capacity(n_fields);
            for (i, q) in spec.qubits.iter().enumerate() {
                let s = traj
                    .observable(&format!("pop_{}", q.display_name(i)))
                    .ok_or("population series missing")?;
                out.push(s[0]);
            }
            if readout.is_some() {
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
    }
}

/// Rabi chevron map: a pulse of the configured shape and amplitude drives
/// the shared qubit line at each `f_drive_ghz` for each length in
/// `lengths_us`, and the end-of-pulse populations are recorded
/// (`pop_<qubit>`; plus post-readout `_ro` fields when a readout pulse is
/// configured).
///
/// With the drive parked on a single frequency this is the standard gate
/// calibration scan: on a qubit's own line it traces direct Rabi
/// oscillations; on the line of an exchange-coupled *other* qubit it traces
/// the cross-resonance oscillation; at the pair midpoint with a strong
/// drive it traces the two-photon oscillation to the doubly excited state.
pub fn rabi_length_frequency(
    spec: &SystemSpec,
    f_drive_ghz: &[f64],
    lengths_us: &[f64],
    opts: &RabiOptions,
) -> Result<SweepResult, ProtocolError> {
    spec.validate()?;
    check_grid("drive-frequency", f_drive_ghz)?;
    check_grid("pulse-length", lengths_us)?;
    check_model_readout(opts.model, &opts.readout, &opts.integration)?;
    if opts.frame == RunFrame::Lab && (opts.model == SweepModel::Full || opts.readout.is_some()) {
        return Err(ProtocolError::InvalidInput(
            "lab-frame integration requires the reduced model without readout".into(),
        ));
    }
    if !(opts.amplitude_mhz >= 0.0) || !opts.amplitude_mhz.is_finite() {
        return Err(ProtocolError::InvalidInput(format!(
            "drive amplitude {} MHz must be ≥ 0",
            opts.amplitude_mhz
        )));
    }
    if lengths_us.iter().any(|&l| l < 0.0) {
        return Err(ProtocolError::InvalidInput(
            "pulse lengths must be ≥ 0".into(),
        ));
    }

    let field_defs = rabi_fields(spec, opts.readout.is_some());
    let field_refs: Vec<(&str, &str)> = field_defs
        .iter()
        .map(|(n, u)| (n.as_str(), u.as_str()))
        .collect();
    let metadata = sweep_metadata(
        spec,
        serde_json::json!({
            "protocol": "rabi_length_frequency",
            "options": opts,
        }),
    );

    run_grid(
        "rabi_length_frequency",
        Axis::new("f_drive", "GHz", f_drive_ghz),
        Axis::new("t_drive", "us", lengths_us),
        &field_refs,
        metadata,
        |i1, i2| {
            let envelope = PulseEnvelope {
                shape: opts.shape,
                amplitude_mhz: opts.amplitude_mhz,
                duration_us: Some(lengths_us[i2]),
                sigma_us: None,
            };
            rabi_cell(
                spec,
                f_drive_ghz[i1],
                envelope,
                opts.model,
                &opts.readout,
                opts.frame,
                &opts.integration,
            )
        },
    )
}

/// Rabi waterfall map: a pulse of fixed length drives the shared qubit line
/// at each `f_drive_ghz` with each peak amplitude in `amplitudes_v` (output
/// volts, converted by `amplitude_scale_mhz_per_v`), and the end-of-pulse
/// populations are recorded.
///
/// Rows at increasing amplitude show the line power-broaden, develop
/// multiple Rabi revivals (for smooth envelopes), and ac-Stark shift.
pub fn rabi_amplitude_frequency(
    spec: &SystemSpec,
    amplitudes_v: &[f64],
    f_drive_ghz: &[f64],
    opts: &AmplitudeRabiOptions,
) -> Result<SweepResult, ProtocolError> {
    spec.validate()?;
    check_grid("drive-amplitude", amplitudes_v)?;
    check_grid("drive-frequency", f_drive_ghz)?;
    check_model_readout(opts.model, &opts.readout, &opts.integration)?;
    if !(opts.duration_us > 0.0) || !opts.duration_us.is_finite() {
        return Err(ProtocolError::InvalidInput(format!(
            "pulse length {} µs must be positive",
            opts.duration_us
        )));
    }
    if !(opts.amplitude_scale_mhz_per_v > 0.0) || !opts.amplitude_scale_mhz_per_v.is_finite() {
        return Err(ProtocolError::InvalidInput(format!(
            "amplitude scale {} MHz/V must be positive",
            opts.amplitude_scale_mhz_per_v
        )));
    }
    if amplitudes_v.iter().any(|&a| a < 0.0) {
        return Err(ProtocolError::InvalidInput(
            "drive amplitudes must be ≥ 0 V".into(),
        ));
    }

    let field_defs = rabi_fields(spec, opts.readout.is_some());
    let field_refs: Vec<(&str, &str)> = field_defs
        .iter()
        .map(|(n, u)| (n.as_str(), u.as_str()))
        .collect();
    let metadata = sweep_metadata(
        spec,
        serde_json::json!({
            "protocol": "rabi_amplitude_frequency",
            "options": opts,
        }),
    );

    run_grid(
        "rabi_amplitude_frequency",
        Axis::new("a_drive", "V", amplitudes_v),
        Axis::new("f_drive", "GHz", f_drive_ghz),
        &field_refs,
        metadata,
        |i1, i2| {
            let envelope = PulseEnvelope {
                shape: opts.shape,
                amplitude_mhz: amplitudes_v[i1] * opts.amplitude_scale_mhz_per_v,
                duration_us: Some(opts.duration_us),
                sigma_us: None,
            };
            rabi_cell(
                spec,
                f_drive_ghz[i2],
                envelope,
                opts.model,
                &opts.readout,
                RunFrame::Rotating,
                &opts.integration,
            )
        },
    )
}
