//! Time-domain protocols: strong readout pulses (and the photon-induced
//! qubit–qubit swap they can switch on), relaxation curves, and Ramsey
//! fringes.

use super::{check_increasing, IntegrationOptions, ProtocolError};
use crate::dynamics::{evolve, Hamiltonian, IntegratorConfig, Trajectory};
use crate::model::{
    DriveCoefficient, DriveSpec, DriveTarget, DriveTerm, Frame, PulseEnvelope, QubitOnlyModel,
    SystemSpec,
};
use crate::operator::DensityMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Readout swap
// ---------------------------------------------------------------------------

/// Options for [`readout_swap`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSwapOptions {
    /// Square probe-pulse length in µs.
    pub t_pulse_us: f64,
    /// Total simulated window in µs (≥ the pulse length, so the cavity
    /// ring-down after switch-off is visible).
    pub t_end_us: f64,
    /// Which qubit starts in its excited state.
    pub excited_qubit: usize,
    /// Number of uniform samples across the window.
    pub n_samples: usize,
    pub integration: IntegrationOptions,
}

impl Default for ReadoutSwapOptions {
    fn default() -> Self {
        Self {
            t_pulse_us: 0.7,
            t_end_us: 1.1,
            excited_qubit: 0,
            n_samples: 221,
            integration: IntegrationOptions::default(),
        }
    }
}

/// One readout-swap trace: the probe amplitude and the full trajectory
/// (per-qubit populations, photon number, quadratures).
#[derive(Debug, Clone)]
pub struct ReadoutSwapTrace {
    pub eps_mhz: f64,
    pub trajectory: Trajectory,
}

/// Time-resolved response to a strong, resonant readout pulse, one trace
/// per probe amplitude in `eps_mhz`, starting from one qubit excited and
/// the cavity empty.
///
/// As the pulse fills the cavity, the intracavity photons ac-Stark shift
/// every qubit that couples to the mode. If that shift closes the detuning
/// between the excited qubit and an exchange-coupled partner, the pair is
/// pulled through its avoided crossing *during the measurement itself* and
/// the excitation coherently swaps — visible here as the two population
/// traces crossing while the photon number is high. Below the critical
/// photon number the populations never cross; the threshold amplitude is a
/// sharp function of ε. Note the Fock cutoff must leave headroom above the
/// peak photon number (`n̄ + 5√n̄` is a practical floor).
pub fn readout_swap(
    spec: &SystemSpec,
    eps_mhz: &[f64],
    opts: &ReadoutSwapOptions,
) -> Result<Vec<ReadoutSwapTrace>, ProtocolError> {
    spec.validate()?;
    let mut issues = opts.integration.validation_issues();
    if eps_mhz.is_empty() {
        issues.push("at least one probe amplitude is required".into());
    }
    if eps_mhz.iter().any(|&e| !e.is_finite() || e < 0.0) {
        issues.push("probe amplitudes must be finite and ≥ 0".into());
    }
    if !(opts.t_pulse_us > 0.0) || !opts.t_pulse_us.is_finite() {
        issues.push(format!("pulse length {} µs must be positive", opts.t_pulse_us));
    }
    if !(opts.t_end_us >= opts.t_pulse_us) {
        issues.push(format!(
            "window {} µs must cover the pulse ({} µs)",
            opts.t_end_us, opts.t_pulse_us
        ));
    }
    if opts.excited_qubit >= spec.qubits.len() {
        issues.push(format!(
            "excited_qubit {} out of range for {} qubits",
            opts.excited_qubit,
            spec.qubits.len()
        ));
    }
    if opts.n_samples < 2 {
        issues.push("n_samples must be ≥ 2".into());
    }
    if !issues.is_empty() {
        return Err(ProtocolError::InvalidInput(issues.join("; ")));
    }

    let f_r = spec.resonator.omega_ghz;
    let h0 = spec.build_rotating_frame(f_r)?;
    let collapses = spec.build_collapse_operators()?;
    let observables = spec.observables()?;
    let space = spec.space()?;
    let mut occ = vec![0usize; 1 + spec.qubits.len()];
    occ[1 + opts.excited_qubit] = 1;
    let rho0 = DensityMatrix::pure_basis_state(space, &occ)
        .map_err(|e| ProtocolError::InvalidInput(format!("initial state: {e}")))?;

    eps_mhz
        .par_iter()
        .map(|&eps| {
            let probe = spec.compile_drive(
                &DriveSpec {
                    target: DriveTarget::ResonatorProbe,
                    envelope: PulseEnvelope::square(eps, opts.t_pulse_us),
                    carrier_ghz: f_r,
                    amplitude_scale_mhz_per_v: crate::model::default_amplitude_scale(),
                },
                Frame::Rotating(f_r),
                0.0,
            )?;
            let cfg = IntegratorConfig::new(opts.t_end_us)
                .with_method(opts.integration.method())
                .with_uniform_samples(opts.n_samples);
            let trajectory = evolve(
                &rho0,
                &Hamiltonian::with_drives(h0.clone(), vec![probe]),
                &collapses,
                &observables,
                &cfg,
            )?;
            Ok(ReadoutSwapTrace {
                eps_mhz: eps,
                trajectory,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Relaxation
// ---------------------------------------------------------------------------

/// Options for [`relaxation_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationOptions {
    /// Amplitude of the square π preparation pulse in MHz (length 1/(2A)).
    pub prep_amplitude_mhz: f64,
    /// `false` (default): measure the addressed qubit in isolation, with
    /// exactly its own decay channels. `true`: free-evolve the full coupled
    /// system from the bare excited state instead.
    pub coupled: bool,
    pub integration: IntegrationOptions,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        Self {
            prep_amplitude_mhz: 20.0,
            coupled: false,
            integration: IntegrationOptions::precise(),
        }
    }
}

/// A relaxation curve: excited-state population versus delay, ready for
/// [`crate::analysis::fit_exponential`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayCurve {
    pub qubit: String,
    pub delay_us: Vec<f64>,
    pub population: Vec<f64>,
}

/// T₁ relaxation of one qubit: π-prepare, wait, record the excited-state
/// population at every delay.
///
/// By default the addressed qubit is simulated *in isolation* (a two-level
/// system with its own Γ and Γᶠ, prepared by a resonant square π pulse).
/// That is the experiment whose fitted rate equals the qubit's tabulated
/// decay rate; the tabulated rates are themselves fitted totals from such
/// measurements, so re-simulating them inside the coupled system would
/// double-count every decay path the couplings mediate. The coupled mode
/// (`coupled = true`) does exactly that on purpose: it free-evolves the
/// full system from the bare excited state, and for a long-lived qubit
/// exchange-coupled to a lossy partner the fitted "T₁" comes out visibly
/// shorter than 1/Γ — the hybridized branch inherits sin²θ of the partner's
/// decay. Comparing the two modes measures that inheritance.
pub fn relaxation_experiment(
    spec: &SystemSpec,
    qubit: usize,
    delays_us: &[f64],
    opts: &RelaxationOptions,
) -> Result<DecayCurve, ProtocolError> {
    spec.validate()?;
    if qubit >= spec.qubits.len() {
        return Err(ProtocolError::InvalidInput(format!(
            "qubit {qubit} out of range for {} qubits",
            spec.qubits.len()
        )));
    }
    check_increasing("delay", delays_us)?;
    if delays_us[0] < 0.0 {
        return Err(ProtocolError::InvalidInput("delays must be ≥ 0".into()));
    }
    let issues = opts.integration.validation_issues();
    if !issues.is_empty() {
        return Err(ProtocolError::InvalidInput(issues.join("; ")));
    }
    let name = spec.qubits[qubit].display_name(qubit);
    let pop_name = format!("pop_{name}");

    let population = if opts.coupled {
        let last = *delays_us.last().expect("non-empty grid");
        if !(last > 0.0) {
            return Err(ProtocolError::InvalidInput(
                "coupled relaxation needs a positive final delay".into(),
            ));
        }
        let h0 = spec.build_rotating_frame(spec.resonator.omega_ghz)?;
        let mut occ = vec![0usize; 1 + spec.qubits.len()];
        occ[1 + qubit] = 1;
        let rho0 = DensityMatrix::pure_basis_state(spec.space()?, &occ)
            .map_err(|e| ProtocolError::InvalidInput(format!("initial state: {e}")))?;
        let cfg = IntegratorConfig::new(last)
            .with_method(opts.integration.method())
            .with_sample_times(delays_us.to_vec());
        let traj = evolve(
            &rho0,
            &Hamiltonian::static_only(h0),
            &spec.build_collapse_operators()?,
            &spec.observables()?,
            &cfg,
        )?;
        traj.observable(&pop_name)
            .ok_or_else(|| ProtocolError::InvalidInput("population series missing".into()))?
            .to_vec()
    } else {
        if !(opts.prep_amplitude_mhz > 0.0) || !opts.prep_amplitude_mhz.is_finite() {
            return Err(ProtocolError::InvalidInput(format!(
                "preparation amplitude {} MHz must be positive",
                opts.prep_amplitude_mhz
            )));
        }
        let (model, _) = isolated_qubit(spec, qubit);
        let t_pi = 0.5 / opts.prep_amplitude_mhz;
        let f_q = model.effective_omega_ghz(0);
        let h0 = model.hamiltonian(f_q);
        let prep = DriveTerm {
            raising_op: model.drive_raising_operator(),
            coeff: DriveCoefficient::Rotating {
                envelope: PulseEnvelope::square(opts.prep_amplitude_mhz, t_pi),
                t_start: 0.0,
                scale: 1.0,
                delta_omega: 0.0,
            },
        };
        let samples: Vec<f64> = delays_us.iter().map(|d| t_pi + d).collect();
        let t_end = *samples.last().expect("non-empty grid");
        let cfg = IntegratorConfig::new(t_end)
            .with_method(opts.integration.method())
            .with_sample_times(samples);
        let traj = evolve(
            &DensityMatrix::ground(model.space()),
            &Hamiltonian::with_drives(h0, vec![prep]),
            &model.collapse_operators(),
            &model.observables(),
            &cfg,
        )?;
        traj.observable(&pop_name)
            .ok_or_else(|| ProtocolError::InvalidInput("population series missing".into()))?
            .to_vec()
    };

    Ok(DecayCurve {
        qubit: name,
        delay_us: delays_us.to_vec(),
        population,
    })
}

/// The addressed qubit as a stand-alone two-level system with its own decay
/// channels and unit drive weight (resonator and partners removed).
fn isolated_qubit(spec: &SystemSpec, qubit: usize) -> (QubitOnlyModel, SystemSpec) {
    let mut q = spec.qubits[qubit].clone();
    q.g_mhz = 0.0;
    q.eta = 1.0;
    let sub = SystemSpec {
        resonator: spec.resonator.clone(),
        qubits: vec![q],
        couplings: Vec::new(),
        probe_scale: spec.probe_scale,
    };
    let model = sub.qubit_only().expect("a decoupled qubit always reduces");
    (model, sub)
}

// ---------------------------------------------------------------------------
// Ramsey
// ---------------------------------------------------------------------------

/// Options for [`ramsey_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseyOptions {
    /// Amplitude of the square π/2 pulses in MHz (each of length 1/(4A)).
    pub pi2_amplitude_mhz: f64,
    /// `false` (default): isolated two-level qubit (see
    /// [`relaxation_experiment`] for the rationale). `true`: full coupled
    /// system, driven through the shared qubit line (the addressed qubit
    /// must have a nonzero drive weight η).
    pub coupled: bool,
    pub integration: IntegrationOptions,
}

impl Default for RamseyOptions {
    fn default() -> Self {
        Self {
            pi2_amplitude_mhz: 20.0,
            coupled: false,
            integration: IntegrationOptions::precise(),
        }
    }
}

/// A Ramsey fringe: excited-state population versus free-evolution delay,
/// oscillating at the drive detuning and decaying with T₂*. Ready for
/// [`crate::analysis::fit_damped_sinusoid`] (and
/// [`crate::analysis::fit_multi_frequency`] to test for beating).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RamseyCurve {
    pub qubit: String,
    pub detuning_mhz: f64,
    pub delay_us: Vec<f64>,
    pub population: Vec<f64>,
}

/// Ramsey interferometry on one qubit: π/2 — delay — π/2 with the drive
/// detuned by `detuning_mhz` from the qubit, recording the final
/// excited-state population for every delay.
pub fn ramsey_experiment(
    spec: &SystemSpec,
    qubit: usize,
    detuning_mhz: f64,
    delays_us: &[f64],
    opts: &RamseyOptions,
) -> Result<RamseyCurve, ProtocolError> {
    spec.validate()?;
    if qubit >= spec.qubits.len() {
        return Err(ProtocolError::InvalidInput(format!(
            "qubit {qubit} out of range for {} qubits",
            spec.qubits.len()
        )));
    }
    check_increasing("delay", delays_us)?;
    if delays_us[0] < 0.0 {
        return Err(ProtocolError::InvalidInput("delays must be ≥ 0".into()));
    }
    if !detuning_mhz.is_finite() {
        return Err(ProtocolError::InvalidInput("detuning must be finite".into()));
    }
    let mut issues = opts.integration.validation_issues();
    if !(opts.pi2_amplitude_mhz > 0.0) || !opts.pi2_amplitude_mhz.is_finite() {
        issues.push(format!(
            "π/2 amplitude {} MHz must be positive",
            opts.pi2_amplitude_mhz
        ));
    }
    if opts.coupled && spec.qubits[qubit].eta == 0.0 {
        issues.push(format!(
            "coupled Ramsey drives the shared line, but qubit {qubit} has η = 0"
        ));
    }
    if !issues.is_empty() {
        return Err(ProtocolError::InvalidInput(issues.join("; ")));
    }
    let name = spec.qubits[qubit].display_name(qubit);
    let pop_name = format!("pop_{name}");

    // Per-delay ingredients, built once.
    enum Sys {
        Isolated(QubitOnlyModel),
        Coupled,
    }
    let (sys, carrier, weight) = if opts.coupled {
        let f_q = spec.dressed_qubit_ghz(qubit)?;
        (
            Sys::Coupled,
            f_q + detuning_mhz * 1.0e-3,
            spec.qubits[qubit].eta,
        )
    } else {
        let (model, _) = isolated_qubit(spec, qubit);
        let f_q = model.effective_omega_ghz(0);
        (Sys::Isolated(model), f_q + detuning_mhz * 1.0e-3, 1.0)
    };
    // Each square π/2 pulse rotates by 2π·(A·η)·t = π/2 at t = 1/(4Aη).
    let t_p2 = 0.25 / (opts.pi2_amplitude_mhz * weight);

    let population: Result<Vec<f64>, ProtocolError> = delays_us
        .par_iter()
        .map(|&delay| {
            let t_end = 2.0 * t_p2 + delay;
            // Build the two pulse terms for whichever system we run.
            let traj = match &sys {
                Sys::Isolated(model) => {
                    let h0 = model.hamiltonian(carrier);
                    let mk = |t_start: f64| DriveTerm {
                        raising_op: model.drive_raising_operator(),
                        coeff: DriveCoefficient::Rotating {
                            envelope: PulseEnvelope::square(opts.pi2_amplitude_mhz, t_p2),
                            t_start,
                            scale: 1.0,
                            delta_omega: 0.0,
                        },
                    };
                    let cfg = IntegratorConfig::new(t_end)
                        .with_method(opts.integration.method())
                        .with_sample_times(vec![t_end]);
                    evolve(
                        &DensityMatrix::ground(model.space()),
                        &Hamiltonian::with_drives(h0, vec![mk(0.0), mk(t_p2 + delay)]),
                        &model.collapse_operators(),
                        &model.observables(),
                        &cfg,
                    )?
                }
                Sys::Coupled => {
                    let h0 = spec.build_rotating_frame(carrier)?;
                    let mk = |t_start: f64| -> Result<DriveTerm, ProtocolError> {
                        Ok(spec.compile_drive(
                            &DriveSpec {
                                target: DriveTarget::QubitDrive,
                                envelope: PulseEnvelope::square(
                                    opts.pi2_amplitude_mhz,
                                    t_p2,
                                ),
                                carrier_ghz: carrier,
                                amplitude_scale_mhz_per_v:
                                    crate::model::default_amplitude_scale(),
                            },
                            Frame::Rotating(carrier),
                            t_start,
                        )?)
                    };
                    let cfg = IntegratorConfig::new(t_end)
                        .with_method(opts.integration.method())
                        .with_sample_times(vec![t_end]);
                    evolve(
                        &DensityMatrix::ground(spec.space()?),
                        &Hamiltonian::with_drives(h0, vec![mk(0.0)?, mk(t_p2 + delay)?]),
                        &spec.build_collapse_operators()?,
                        &spec.observables()?,
                        &cfg,
                    )?
                }
            };
            traj.observable(&pop_name)
                .and_then(|s| s.last().copied())
                .ok_or_else(|| ProtocolError::InvalidInput("population series missing".into()))
        })
        .collect();

    Ok(RamseyCurve {
        qubit: name,
        detuning_mhz,
        delay_us: delays_us.to_vec(),
        population: population?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fit_damped_sinusoid, fit_exponential, fit_multi_frequency};
    use crate::model::{CouplingSpec, QubitSpec, ResonatorSpec};
    use crate::units::mhz_to_angular;

    fn pair_spec(cutoff: usize) -> SystemSpec {
        SystemSpec {
            resonator: ResonatorSpec {
                omega_ghz: 5.668,
                kappa_mhz: 0.38,
                cutoff,
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
            couplings: vec![CouplingSpec {
                pair: [0, 1],
                j_mhz: 3.35,
            }],
            probe_scale: crate::model::default_probe_scale(),
        }
    }

    #[test]
    fn relaxation_recovers_tabulated_rates() {
        let spec = pair_spec(4);
        // Bright qubit: T1 = 1/Γ_b.
        let delays: Vec<f64> = (0..25).map(|k| 0.5 * k as f64).collect();
        let curve = relaxation_experiment(&spec, 0, &delays, &RelaxationOptions::default())
            .unwrap();
        let fit = fit_exponential(&curve.delay_us, &curve.population).unwrap();
        assert!(fit.converged, "{}", fit.message);
        let t1 = fit.value("tau").unwrap();
        let expect = 1.0 / mhz_to_angular(0.088);
        assert!(
            (t1 - expect).abs() / expect < 0.02,
            "T1(bright) = {t1} vs {expect}"
        );

        // Dark qubit: T1 = 1/Γ_d ≈ 30 µs.
        let delays: Vec<f64> = (0..25).map(|k| 3.0 * k as f64).collect();
        let curve = relaxation_experiment(&spec, 1, &delays, &RelaxationOptions::default())
            .unwrap();
        let fit = fit_exponential(&curve.delay_us, &curve.population).unwrap();
        let t1 = fit.value("tau").unwrap();
        let expect = 1.0 / mhz_to_angular(0.0053);
        assert!(
            (t1 - expect).abs() / expect < 0.02,
            "T1(dark) = {t1} vs {expect}"
        );
    }

    #[test]
    fn coupled_relaxation_inherits_partner_decay() {
        let spec = pair_spec(3);
        let delays: Vec<f64> = (1..=20).map(|k| 2.0 * k as f64).collect();
        let curve = relaxation_experiment(
            &spec,
            1,
            &delays,
            &RelaxationOptions {
                coupled: true,
                ..RelaxationOptions::default()
            },
        )
        .unwrap();
        let fit = fit_exponential(&curve.delay_us, &curve.population).unwrap();
        let t1 = fit.value("tau").unwrap();
        // Hybridization with the lossy partner (sin²θ ≈ 4.7% of Γ_b) plus
        // dephasing-assisted transfer pull the decay well below 1/Γ_d ≈ 30.
        assert!(
            t1 > 8.0 && t1 < 22.0,
            "coupled dark-qubit decay {t1} µs should sit well below 30 µs"
        );
    }

    #[test]
    fn ramsey_fringe_has_single_tone_at_the_detuning() {
        let spec = pair_spec(4);
        let delays: Vec<f64> = (0..=80).map(|k| 0.25 * k as f64).collect();
        let curve =
            ramsey_experiment(&spec, 1, 0.4, &delays, &RamseyOptions::default()).unwrap();
        let fit = fit_damped_sinusoid(&curve.delay_us, &curve.population).unwrap();
        assert!(fit.converged, "{}", fit.message);
        let f = fit.value("frequency").unwrap();
        let tau = fit.value("tau").unwrap();
        assert!((f - 0.4).abs() < 0.01, "fringe frequency {f} MHz");
        // Coherence decays at Γ/2 from relaxation plus Γᶠ/2 from the
        // projector dephasing channel (Tᶠ = 2/Γᶠ), so T2* = 2/(Γ + Γᶠ).
        let t2 = 1.0 / mhz_to_angular((0.0053 + 0.0044) / 2.0);
        assert!((tau - t2).abs() / t2 < 0.10, "T2* = {tau} vs {t2}");

        // No beating: a second component, if the fit places one, is tiny.
        let multi = fit_multi_frequency(&curve.delay_us, &curve.population, 2).unwrap();
        let a1 = multi.value("amplitude_1").unwrap().abs();
        let a2 = multi.value("amplitude_2").unwrap().abs();
        let (big, small) = if a1 >= a2 { (a1, a2) } else { (a2, a1) };
        assert!(
            small < 0.1 * big,
            "secondary tone {small} vs primary {big}"
        );
    }

    #[test]
    fn readout_swap_traces_ring_up_and_down() {
        let spec = pair_spec(10);
        let traces = readout_swap(
            &spec,
            &[0.0, 3.0],
            &ReadoutSwapOptions {
                n_samples: 111,
                ..ReadoutSwapOptions::default()
            },
        )
        .unwrap();
        assert_eq!(traces.len(), 2);

        // ε = 0: no probe. The bare excited state beats against the
        // polariton, so the photon number oscillates up to
        // 4g²/(Δ² + 4g²) ≈ 0.03 but never actually fills the cavity, and
        // the bright qubit relaxes on its own T1 ≈ 1.8 µs over the window.
        let t0 = &traces[0].trajectory;
        let nbar0 = t0.observable("nbar").unwrap();
        let n_max = nbar0.iter().copied().fold(0.0, f64::max);
        assert!(n_max < 0.035, "unexpected cavity filling at ε = 0: {n_max}");
        let pb0 = t0.observable("pop_b").unwrap();
        assert!(pb0[0] > 0.999);
        let last = *pb0.last().unwrap();
        assert!((0.45..0.65).contains(&last), "pop_b(end) = {last}");

        // ε = 3 MHz: cavity rings up during the pulse and decays after.
        let t1 = &traces[1].trajectory;
        let nbar1 = t1.observable("nbar").unwrap();
        let peak = nbar1.iter().copied().fold(0.0, f64::max);
        assert!(peak > 0.3, "photon peak {peak}");
        assert!(
            *nbar1.last().unwrap() < 0.5 * peak,
            "no ring-down after switch-off"
        );
        assert_eq!(t1.times.len(), 111);
    }

    #[test]
    fn input_validation() {
        let spec = pair_spec(4);
        assert!(relaxation_experiment(&spec, 5, &[0.0, 1.0], &RelaxationOptions::default())
            .is_err());
        assert!(relaxation_experiment(&spec, 0, &[1.0, 0.5], &RelaxationOptions::default())
            .is_err());
        assert!(
            ramsey_experiment(&spec, 1, 0.4, &[0.0, 1.0], &RamseyOptions {
                coupled: true,
                ..RamseyOptions::default()
            })
            .is_err(),
            "coupled Ramsey on an undriven (η = 0) qubit must be rejected"
        );
        assert!(readout_swap(&spec, &[], &ReadoutSwapOptions::default()).is_err());
        assert!(readout_swap(
            &spec,
            &[1.0],
            &ReadoutSwapOptions {
                excited_qubit: 7,
                ..ReadoutSwapOptions::default()
            }
        )
        .is_err());
    }
}
