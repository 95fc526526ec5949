//! Declarative system description and Hamiltonian/collapse-operator builders.
//!
//! A [`SystemSpec`] describes one resonator mode plus N two-level qubits:
//! transition frequencies, resonator couplings `g_i`, transverse qubit–qubit
//! exchange couplings `J_ij`, dissipation rates, and drive-line weights
//! `η_i`. All frequencies are quoted as ordinary (non-angular) values — GHz
//! for transition frequencies, MHz for couplings, rates, and amplitudes —
//! and converted to angular rad/µs only through [`crate::units`].
//!
//! The static Hamiltonian built here is
//!
//! ```text
//! H = ω_r a†a + Σ_i ½ω_i σᶻ_i + Σ_i g_i (a†σ⁻_i + aσ⁺_i)
//!     + Σ_{ij} J_ij (σ⁺_iσ⁻_j + σ⁻_iσ⁺_j)
//! ```
//!
//! (excitation-conserving co-rotating couplings), and the Lindblad collapse
//! channels are `(a, κ)`, `(σ⁻_i, Γ_i)`, and `(σ⁺_iσ⁻_i, Γᶠ_i)` in the
//! convention `dρ/dt = −i[H,ρ] + Σ rate·(LρL† − ½{L†L, ρ})`, so that
//! `T1 = 1/Γ` and `Tφ = 2/Γᶠ`.

use crate::operator::{HilbertSpace, Operator, OperatorError, Pauli, C64};
use crate::units::{ghz_to_angular, mhz_to_angular};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from model validation and construction.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid system spec:\n{}", .0.join("\n"))]
    InvalidSpec(Vec<String>),
    #[error("coupling references qubit index {index}, but the system has {n_qubits} qubits")]
    DanglingCoupling { index: usize, n_qubits: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("{0}")]
    Unsupported(String),
}

// ---------------------------------------------------------------------------
// Spec types
// ---------------------------------------------------------------------------

/// One two-level qubit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSpec {
    /// Display name used in observable columns (defaults to `q<i>`).
    #[serde(default)]
    pub name: Option<String>,
    /// Transition frequency ω/2π in GHz.
    pub omega_ghz: f64,
    /// Resonator coupling g/2π in MHz.
    pub g_mhz: f64,
    /// Relaxation rate Γ/2π in MHz (T1 = 1/Γ).
    pub gamma1_mhz: f64,
    /// Pure-dephasing rate Γᶠ/2π in MHz (Tφ = 2/Γᶠ).
    pub gamma_phi_mhz: f64,
    /// Dimensionless drive-line weight η ∈ [0, 1]; the shared drive couples
    /// as `A(t) Σ_i η_i (σ⁺_i + σ⁻_i)`. Conventionally η_i tracks g_i: the
    /// drive reaches each qubit through the same field that sets g_i.
    #[serde(default)]
    pub eta: f64,
}

impl QubitSpec {
    pub fn display_name(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("q{index}"))
    }
}

/// Transverse exchange coupling between one pair of qubits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    /// Indices of the coupled qubits (into `SystemSpec::qubits`).
    pub pair: [usize; 2],
    /// Coupling strength J/2π in MHz, as the Hamiltonian coefficient of
    /// `σ⁺_iσ⁻_j + σ⁻_iσ⁺_j`. Two degenerate qubits then split by **2J**;
    /// spectroscopy conventions that quote the half-splitting report J
    /// directly (see `analysis::extract_avoided_crossing`, which returns
    /// both).
    pub j_mhz: f64,
}

/// The single resonator mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSpec {
    /// Resonator frequency ω_r/2π in GHz.
    pub omega_ghz: f64,
    /// Total linewidth κ/2π in MHz.
    pub kappa_mhz: f64,
    /// Fock-space truncation (matrix dimension of the mode). Use ≥ 30 for
    /// spectroscopy and ≥ 60 when readout pulses populate the cavity to
    /// n̄ ≈ 20 (headroom ≈ n̄ + 5√n̄).
    pub cutoff: usize,
}

/// Complete system description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub resonator: ResonatorSpec,
    pub qubits: Vec<QubitSpec>,
    #[serde(default)]
    pub couplings: Vec<CouplingSpec>,
    /// Dimensionless normalization applied to resonator-probe amplitudes:
    /// the intracavity drive coefficient is `probe_scale · 2π·ε_MHz` rad/µs.
    /// The default 0.098 maps a quoted probe amplitude of 18 MHz onto the
    /// ~25-photon operating point of a κ/2π ≈ 0.4 MHz readout mode within a
    /// 700 ns pulse — the point where the exact Jaynes–Cummings ac-Stark
    /// shift closes a 14.3 MHz qubit–qubit detuning (the linear estimate
    /// Δ/2χ ≈ 21.7 underestimates the requirement because the coupled
    /// ladder compresses at large photon number). Treat it as part of the
    /// probe-line calibration and adjust per instrument.
    #[serde(default = "default_probe_scale")]
    pub probe_scale: f64,
}

pub(crate) fn default_probe_scale() -> f64 {
    0.098
}

/// Which line a drive addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveTarget {
    /// Shared qubit drive line, weighted per qubit by η_i.
    QubitDrive,
    /// Resonator probe, coupling as ε(t)(a† + a).
    ResonatorProbe,
}

/// Envelope shapes for pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeShape {
    Square,
    Gaussian,
}

/// A real pulse envelope: square, or a Gaussian truncated at ±2.5σ (so the
/// pulse duration is 5σ and the peak sits at duration/2; the envelope is not
/// baseline-subtracted, so it starts at `exp(−3.125) ≈ 0.0439` of the peak).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseEnvelope {
    pub shape: EnvelopeShape,
    /// Peak amplitude in MHz (square pulses: the constant value).
    pub amplitude_mhz: f64,
    /// Total duration in µs. For Gaussian pulses this is 5σ; give either
    /// this or `sigma_us` (or both, consistently).
    #[serde(default)]
    pub duration_us: Option<f64>,
    /// Gaussian width σ in µs (Gaussian only).
    #[serde(default)]
    pub sigma_us: Option<f64>,
}

impl PulseEnvelope {
    pub fn square(amplitude_mhz: f64, duration_us: f64) -> Self {
        Self {
            shape: EnvelopeShape::Square,
            amplitude_mhz,
            duration_us: Some(duration_us),
            sigma_us: None,
        }
    }

    pub fn gaussian(amplitude_mhz: f64, duration_us: f64) -> Self {
        Self {
            shape: EnvelopeShape::Gaussian,
            amplitude_mhz,
            duration_us: Some(duration_us),
            sigma_us: Some(duration_us / 5.0),
        }
    }

    /// Resolved total duration in µs.
    pub fn duration(&self) -> Result<f64, ModelError> {
        match (self.duration_us, self.sigma_us, self.shape) {
            (Some(d), _, EnvelopeShape::Square) => Ok(d),
            (Some(d), None, EnvelopeShape::Gaussian) => Ok(d),
            (None, Some(s), EnvelopeShape::Gaussian) => Ok(5.0 * s),
            (Some(d), Some(s), EnvelopeShape::Gaussian) => {
                if (d - 5.0 * s).abs() > 1e-9 * d.max(1.0) {
                    Err(ModelError::Unsupported(format!(
                        "gaussian envelope with duration {d} µs inconsistent with sigma {s} µs \
                         (truncation is fixed at ±2.5σ, so duration must equal 5σ)"
                    )))
                } else {
                    Ok(d)
                }
            }
            (None, _, EnvelopeShape::Square) | (None, None, EnvelopeShape::Gaussian) => Err(
                ModelError::Unsupported("envelope needs duration_us (or sigma_us)".into()),
            ),
        }
    }

    /// Envelope value in MHz at time `t` µs from pulse start; zero outside
    /// `[0, duration]`.
    pub fn value_mhz(&self, t: f64) -> f64 {
        let dur = match self.duration() {
            Ok(d) => d,
            Err(_) => return 0.0,
        };
        if t < 0.0 || t > dur {
            return 0.0;
        }
        match self.shape {
            EnvelopeShape::Square => self.amplitude_mhz,
            EnvelopeShape::Gaussian => {
                let sigma = dur / 5.0;
                let x = (t - dur / 2.0) / sigma;
                self.amplitude_mhz * (-0.5 * x * x).exp()
            }
        }
    }

    /// Mean of `value(t)/amplitude` over the pulse (square: 1; Gaussian
    /// truncated at ±2.5σ: ≈ 0.4951). Useful for effective-rotation
    /// estimates.
    pub fn mean_fraction(&self) -> f64 {
        match self.shape {
            EnvelopeShape::Square => 1.0,
            EnvelopeShape::Gaussian => {
                // ∫exp(−x²/2)dx over [−2.5, 2.5] divided by 5.
                let n = 20_000;
                let mut acc = 0.0;
                for k in 0..n {
                    let x = -2.5 + 5.0 * (k as f64 + 0.5) / n as f64;
                    acc += (-0.5 * x * x).exp();
                }
                acc / n as f64
            }
        }
    }
}

/// One drive channel: envelope + carrier + which line it addresses.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub target: DriveTarget,
    pub envelope: PulseEnvelope,
    /// Carrier frequency in GHz.
    pub carrier_ghz: f64,
    /// Conversion used when config files quote drive amplitudes in output
    /// volts: `A_MHz = amplitude_scale · 𝒜_V`.
    #[serde(default = "default_amplitude_scale")]
    pub amplitude_scale_mhz_per_v: f64,
}

pub(crate) fn default_amplitude_scale() -> f64 {
    735.0
}

// ---------------------------------------------------------------------------
// Frames and time-dependent coefficients
// ---------------------------------------------------------------------------

/// Reference frame of a simulation segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    /// Absolute (laboratory) frame: carriers appear explicitly as cos(ωt)
    /// factors and no rotating-wave approximation is made. Expensive; meant
    /// for small systems and convention cross-checks.
    Lab,
    /// Frame co-rotating at the given frequency (GHz): diagonal frequencies
    /// shift by the frame frequency, couplings are unchanged, and drives on
    /// their carrier become static `A(t)/2` terms (rotating-wave form).
    Rotating(f64),
}

/// Time-dependent complex coefficient multiplying a drive's raising part:
/// the drive Hamiltonian is `c(t)·D + conj(c(t))·D†`.
#[derive(Debug, Clone)]
pub enum DriveCoefficient {
    /// Rotating frame: `c(t) = ½·2π·scale·A(t−t₀) · e^{i Δω (t−t₀)}` with
    /// `Δω = ω_frame − ω_carrier` (rad/µs). On-carrier drives have Δω = 0
    /// and a purely real coefficient.
    Rotating {
        envelope: PulseEnvelope,
        t_start: f64,
        scale: f64,
        delta_omega: f64,
    },
    /// Lab frame: `c(t) = 2π·scale·A(t−t₀) · cos(ω_c t)` (real; the full
    /// cosine drive, no rotating-wave approximation).
    Lab {
        envelope: PulseEnvelope,
        t_start: f64,
        scale: f64,
        carrier_omega: f64,
    },
}

impl DriveCoefficient {
    /// Evaluate the coefficient at absolute segment time `t` (µs).
    pub fn eval(&self, t: f64) -> C64 {
        match self {
            DriveCoefficient::Rotating {
                envelope,
                t_start,
                scale,
                delta_omega,
            } => {
                let amp = envelope.value_mhz(t - t_start);
                if amp == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let mag = 0.5 * mhz_to_angular(amp * scale);
                let phase = delta_omega * (t - t_start);
                C64::new(mag * phase.cos(), mag * phase.sin())
            }
            DriveCoefficient::Lab {
                envelope,
                t_start,
                scale,
                carrier_omega,
            } => {
                let amp = envelope.value_mhz(t - t_start);
                if amp == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                C64::new(
                    mhz_to_angular(amp * scale) * (carrier_omega * t).cos(),
                    0.0,
                )
            }
        }
    }

    /// Earliest time at which the coefficient can be nonzero.
    pub fn support_start(&self) -> f64 {
        match self {
            DriveCoefficient::Rotating { t_start, .. } | DriveCoefficient::Lab { t_start, .. } => {
                *t_start
            }
        }
    }

    /// Latest time at which the coefficient can be nonzero.
    pub fn support_end(&self) -> f64 {
        match self {
            DriveCoefficient::Rotating {
                envelope, t_start, ..
            }
            | DriveCoefficient::Lab {
                envelope, t_start, ..
            } => t_start + envelope.duration().unwrap_or(0.0),
        }
    }
}

/// A compiled drive term: raising operator + its time-dependent coefficient.
#[derive(Debug, Clone)]
pub struct DriveTerm {
    /// The raising part `D` (e.g. `Σ η_i σ⁺_i` or `a†`); the integrator adds
    /// `c(t)·D + conj(c(t))·D†`.
    pub raising_op: Operator,
    pub coeff: DriveCoefficient,
}

// ---------------------------------------------------------------------------
// SystemSpec construction and builders
// ---------------------------------------------------------------------------

impl SystemSpec {
    /// The tensor-product space: resonator Fock factor first, then qubits in
    /// declaration order.
    pub fn space(&self) -> Result<HilbertSpace, ModelError> {
        Ok(HilbertSpace::resonator_with_qubits(
            self.resonator.cutoff,
            self.qubits.len(),
        )?)
    }

    /// Collect *all* validation problems (empty = valid).
    pub fn validation_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let fin = |x: f64| x.is_finite();
        if !fin(self.resonator.omega_ghz) || self.resonator.omega_ghz <= 0.0 {
            issues.push(format!(
                "resonator.omega_ghz = {} must be finite and > 0",
                self.resonator.omega_ghz
            ));
        }
        if !fin(self.resonator.kappa_mhz) || self.resonator.kappa_mhz < 0.0 {
            issues.push(format!(
                "resonator.kappa_mhz = {} must be finite and >= 0",
                self.resonator.kappa_mhz
            ));
        }
        if self.resonator.cutoff < 2 {
            issues.push(format!(
                "resonator.cutoff = {} must be >= 2",
                self.resonator.cutoff
            ));
        }
        if self.qubits.is_empty() {
            issues.push("system needs at least one qubit".into());
        }
        if !fin(self.probe_scale) || self.probe_scale <= 0.0 {
            issues.push(format!(
                "probe_scale = {} must be finite and > 0",
                self.probe_scale
            ));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            let path = format!("qubits[{i}]");
            if let Some(name) = &q.name {
                if name.is_empty() || name.contains([',', '"', '\n', '\r']) {
                    issues.push(format!(
                        "{path}.name = {name:?} must be non-empty and free of commas, \
                         quotes, and newlines (it names CSV columns)"
                    ));
                }
            }
            if !fin(q.omega_ghz) || q.omega_ghz <= 0.0 {
                issues.push(format!("{path}.omega_ghz = {} must be > 0", q.omega_ghz));
            }
            if !fin(q.g_mhz) {
                issues.push(format!("{path}.g_mhz must be finite"));
            }
            if !fin(q.gamma1_mhz) || q.gamma1_mhz < 0.0 {
                issues.push(format!(
                    "{path}.gamma1_mhz = {} must be >= 0",
                    q.gamma1_mhz
                ));
            }
            if !fin(q.gamma_phi_mhz) || q.gamma_phi_mhz < 0.0 {
                issues.push(format!(
                    "{path}.gamma_phi_mhz = {} must be >= 0",
                    q.gamma_phi_mhz
                ));
            }
            if !fin(q.eta) || !(0.0..=1.0).contains(&q.eta) {
                issues.push(format!("{path}.eta = {} must be in [0, 1]", q.eta));
            }
        }
        for (k, c) in self.couplings.iter().enumerate() {
            let path = format!("couplings[{k}]");
            if c.pair[0] == c.pair[1] {
                issues.push(format!("{path}.pair couples qubit {} to itself", c.pair[0]));
            }
            for &idx in &c.pair {
                if idx >= self.qubits.len() {
                    issues.push(format!(
                        "{path}.pair references qubit {idx}, but the system has {} qubits",
                        self.qubits.len()
                    ));
                }
            }
            if !fin(c.j_mhz) {
                issues.push(format!("{path}.j_mhz must be finite"));
            }
        }
        issues
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let issues = self.validation_issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidSpec(issues))
        }
    }

    // -- elementary embedded operators ------------------------------------

    /// Embedded annihilation operator of the resonator mode.
    pub fn op_annihilation(&self) -> Result<Operator, ModelError> {
        let space = self.space()?;
        Ok(Operator::annihilation(self.resonator.cutoff)?.embed(0, &space)?)
    }

    /// Embedded lowering operator of qubit `i`.
    pub fn op_sigma_minus(&self, i: usize) -> Result<Operator, ModelError> {
        let space = self.space()?;
        Ok(Operator::pauli(Pauli::Minus).embed(1 + i, &space)?)
    }

    /// Embedded excited-state projector of qubit `i`.
    pub fn op_qubit_population(&self, i: usize) -> Result<Operator, ModelError> {
        let space = self.space()?;
        Ok(Operator::qubit_excited_projector().embed(1 + i, &space)?)
    }

    /// Embedded photon-number operator.
    pub fn op_photon_number(&self) -> Result<Operator, ModelError> {
        let space = self.space()?;
        Ok(Operator::number(self.resonator.cutoff)?.embed(0, &space)?)
    }

    /// Total excitation operator `N̂ = a†a + Σ σ⁺_iσ⁻_i`; commutes with the
    /// static Hamiltonian (all couplings are excitation-conserving).
    pub fn op_total_excitation(&self) -> Result<Operator, ModelError> {
        let mut n = self.op_photon_number()?;
        for i in 0..self.qubits.len() {
            let p = self.op_qubit_population(i)?;
            n.add_scaled_inplace(&p, 1.0);
        }
        Ok(n)
    }

    // -- Hamiltonians ------------------------------------------------------

    /// Static Hamiltonian in the lab frame (angular rad/µs).
    ///
    /// Diagonal qubit terms are written as `ω_i σ⁺σ⁻` instead of `½ω_i σᶻ`;
    /// the two differ by a multiple of the identity (a global energy offset)
    /// and produce identical dynamics, while keeping every diagonal entry
    /// equal to the total excitation energy of its basis state.
    pub fn build_static_hamiltonian(&self) -> Result<Operator, ModelError> {
        self.hamiltonian_in_frame(None)
    }

    /// Static Hamiltonian in the frame rotating at `frame_ghz`: every
    /// diagonal frequency (resonator and qubits) shifts by the frame
    /// frequency; coupling terms are unchanged.
    pub fn build_rotating_frame(&self, frame_ghz: f64) -> Result<Operator, ModelError> {
        self.hamiltonian_in_frame(Some(frame_ghz))
    }

    fn hamiltonian_in_frame(&self, frame_ghz: Option<f64>) -> Result<Operator, ModelError> {
        self.validate()?;
        let space = self.space()?;
        let f0 = frame_ghz.unwrap_or(0.0);
        let mut h = Operator::zeros(space.clone());

        let n_phot = self.op_photon_number()?;
        h.add_scaled_inplace(&n_phot, ghz_to_angular(self.resonator.omega_ghz - f0));

        let a = self.op_annihilation()?;
        let a_dag = a.dagger();
        for (i, q) in self.qubits.iter().enumerate() {
            let pop = self.op_qubit_population(i)?;
            h.add_scaled_inplace(&pop, ghz_to_angular(q.omega_ghz - f0));
            if q.g_mhz != 0.0 {
                let sm = self.op_sigma_minus(i)?;
                let sp = sm.dagger();
                let jc = &a_dag.matmul(&sm) + &a.matmul(&sp);
                h.add_scaled_inplace(&jc, mhz_to_angular(q.g_mhz));
            }
        }
        for c in &self.couplings {
            let (i, j) = (c.pair[0], c.pair[1]);
            let sp_i = self.op_sigma_minus(i)?.dagger();
            let sm_j = self.op_sigma_minus(j)?;
            let sp_j = sm_j.dagger();
            let sm_i = self.op_sigma_minus(i)?;
            let exch = &sp_i.matmul(&sm_j) + &sp_j.matmul(&sm_i);
            h.add_scaled_inplace(&exch, mhz_to_angular(c.j_mhz));
        }
        debug_assert!(h.is_hermitian());
        Ok(h)
    }

    // -- drives --------------------------------------------------------------

    /// Raising operator of the shared qubit drive line, `Σ_i η_i σ⁺_i`.
    pub fn drive_raising_operator(&self) -> Result<Operator, ModelError> {
        let space = self.space()?;
        let mut d = Operator::zeros(space);
        for (i, q) in self.qubits.iter().enumerate() {
            if q.eta != 0.0 {
                let sp = self.op_sigma_minus(i)?.dagger();
                d.add_scaled_inplace(&sp, q.eta);
            }
        }
        Ok(d)
    }

    /// Raising operator of the resonator probe line, `a†`.
    pub fn probe_raising_operator(&self) -> Result<Operator, ModelError> {
        Ok(self.op_annihilation()?.dagger())
    }

    /// Compile one drive into an operator + time-dependent coefficient for
    /// the given frame, starting at `t_start` (µs) on the segment clock.
    pub fn compile_drive(
        &self,
        drive: &DriveSpec,
        frame: Frame,
        t_start: f64,
    ) -> Result<DriveTerm, ModelError> {
        let raising_op = match drive.target {
            DriveTarget::QubitDrive => self.drive_raising_operator()?,
            DriveTarget::ResonatorProbe => self.probe_raising_operator()?,
        };
        // Qubit drives: rotating-frame coefficient A(t)/2 (scale 1).
        // Probes: rotating-frame coefficient probe_scale·2π·ε(t), i.e.
        // scale 2·probe_scale through the shared ·½ convention.
        let scale = match drive.target {
            DriveTarget::QubitDrive => 1.0,
            DriveTarget::ResonatorProbe => 2.0 * self.probe_scale,
        };
        let coeff = match frame {
            Frame::Rotating(f_frame) => DriveCoefficient::Rotating {
                envelope: drive.envelope.clone(),
                t_start,
                scale,
                delta_omega: ghz_to_angular(f_frame - drive.carrier_ghz),
            },
            Frame::Lab => DriveCoefficient::Lab {
                envelope: drive.envelope.clone(),
                t_start,
                scale,
                carrier_omega: ghz_to_angular(drive.carrier_ghz),
            },
        };
        Ok(DriveTerm { raising_op, coeff })
    }

    /// The drive Hamiltonian at one instant (rotating frame at the drive
    /// carrier): `A(t)/2 · Σ η_i(σ⁺+σ⁻)` for qubit drives,
    /// `probe_scale·2π·ε(t)·(a†+a)` for probes. Returns the zero operator
    /// outside the pulse support.
    pub fn build_drive_term(&self, drive: &DriveSpec, t: f64) -> Result<Operator, ModelError> {
        let term = self.compile_drive(drive, Frame::Rotating(drive.carrier_ghz), 0.0)?;
        let c = term.coeff.eval(t);
        let mut h = term.raising_op.scaled_complex(c);
        let lowering = term.raising_op.dagger().scaled_complex(c.conj());
        h.add_scaled_inplace(&lowering, 1.0);
        Ok(h)
    }

    // -- dissipation -----------------------------------------------------------

    /// Collapse channels `(L, rate)` with rates in angular rad/µs:
    /// `(a, κ)`, then per qubit `(σ⁻_i, Γ_i)` and `(σ⁺_iσ⁻_i, Γᶠ_i)`.
    /// Zero-rate channels are omitted.
    pub fn build_collapse_operators(&self) -> Result<Vec<(Operator, f64)>, ModelError> {
        self.validate()?;
        let mut out = Vec::new();
        if self.resonator.kappa_mhz > 0.0 {
            out.push((
                self.op_annihilation()?,
                mhz_to_angular(self.resonator.kappa_mhz),
            ));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if q.gamma1_mhz > 0.0 {
                out.push((self.op_sigma_minus(i)?, mhz_to_angular(q.gamma1_mhz)));
            }
            if q.gamma_phi_mhz > 0.0 {
                out.push((
                    self.op_qubit_population(i)?,
                    mhz_to_angular(q.gamma_phi_mhz),
                ));
            }
        }
        Ok(out)
    }

    // -- observables -------------------------------------------------------------

    /// The standard named observables recorded in trajectories: per-qubit
    /// excited-state populations (`pop_<name>`), photon number (`nbar`), and
    /// the two field quadratures.
    pub fn observables(&self) -> Result<Vec<(String, Operator)>, ModelError> {
        let mut obs = Vec::new();
        for (i, q) in self.qubits.iter().enumerate() {
            obs.push((
                format!("pop_{}", q.display_name(i)),
                self.op_qubit_population(i)?,
            ));
        }
        obs.push(("nbar".to_string(), self.op_photon_number()?));
        let a = self.op_annihilation()?;
        let a_dag = a.dagger();
        let x = (&a + &a_dag).scaled(0.5);
        let p = (&a - &a_dag).scaled_complex(C64::new(0.0, 0.5));
        obs.push(("x_quad".to_string(), x));
        obs.push(("p_quad".to_string(), p));
        Ok(obs)
    }

    // -- dressed frequencies ----------------------------------------------------

    /// Transition frequencies (GHz, relative to the dressed ground state) of
    /// the eigenstates with the largest overlap on each requested bare basis
    /// occupation. Used to locate dressed qubit lines and two-photon
    /// resonances in the coupled system.
    pub fn dressed_transition_ghz(&self, targets: &[&[usize]]) -> Result<Vec<f64>, ModelError> {
        let h = self.build_static_hamiltonian()?;
        let space = self.space()?;
        let (vals, vecs) = h.eigen_hermitian()?;
        // Ground state = eigenvector with max overlap on the vacuum.
        let find = |basis_idx: usize| -> usize {
            let mut best = 0;
            let mut best_w = -1.0;
            for k in 0..vals.len() {
                let w = vecs[[basis_idx, k]].norm_sqr();
                if w > best_w {
                    best_w = w;
                    best = k;
                }
            }
            best
        };
        let ground = find(0);
        let mut out = Vec::with_capacity(targets.len());
        for occ in targets {
            let idx = space.basis_index(occ)?;
            let k = find(idx);
            out.push((vals[k] - vals[ground]) / ghz_to_angular(1.0));
        }
        Ok(out)
    }

    /// Dressed transition frequency (GHz) of qubit `i` in the full coupled
    /// system: the line a spectroscopy drive actually addresses.
    pub fn dressed_qubit_ghz(&self, i: usize) -> Result<f64, ModelError> {
        let mut occ = vec![0usize; 1 + self.qubits.len()];
        occ[1 + i] = 1;
        Ok(self.dressed_transition_ghz(&[&occ])?[0])
    }

    // -- qubit-only reduction ------------------------------------------------------

    /// Reduce to the qubit subspace for runs in which the resonator stays in
    /// vacuum (no probe, κ only damps an empty mode). The mode is dropped
    /// and each qubit frequency absorbs its vacuum dispersive (Lamb) shift
    /// `g_i²/Δ_i`; valid to second order in g/Δ and exact for g = 0. Big
    /// sweep protocols use this to cut the Hilbert-space dimension.
    pub fn qubit_only(&self) -> Result<QubitOnlyModel, ModelError> {
        self.validate()?;
        for (i, q) in self.qubits.iter().enumerate() {
            if q.g_mhz != 0.0 && (q.omega_ghz - self.resonator.omega_ghz).abs() < 1e-9 {
                return Err(ModelError::Unsupported(format!(
                    "qubit {i} is resonant with the resonator; the vacuum-mode reduction \
                     requires a dispersive detuning"
                )));
            }
        }
        Ok(QubitOnlyModel { spec: self.clone() })
    }
}

/// A [`SystemSpec`] view with the resonator mode eliminated (vacuum mode,
/// Lamb-shifted qubit frequencies). See [`SystemSpec::qubit_only`].
#[derive(Debug, Clone)]
pub struct QubitOnlyModel {
    spec: SystemSpec,
}

impl QubitOnlyModel {
    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(vec![2; self.spec.qubits.len()]).expect("qubit count >= 1")
    }

    /// Lamb-shifted transition frequency of qubit `i` in GHz.
    pub fn effective_omega_ghz(&self, i: usize) -> f64 {
        let q = &self.spec.qubits[i];
        let delta_mhz = (q.omega_ghz - self.spec.resonator.omega_ghz) * 1.0e3;
        q.omega_ghz
            + if q.g_mhz == 0.0 {
                0.0
            } else {
                (q.g_mhz * q.g_mhz / delta_mhz) * 1.0e-3
            }
    }

    pub fn op_sigma_minus(&self, i: usize) -> Operator {
        Operator::pauli(Pauli::Minus)
            .embed(i, &self.space())
            .expect("slot in range")
    }

    pub fn op_qubit_population(&self, i: usize) -> Operator {
        Operator::qubit_excited_projector()
            .embed(i, &self.space())
            .expect("slot in range")
    }

    pub fn op_total_excitation(&self) -> Operator {
        let mut n = Operator::zeros(self.space());
        for i in 0..self.spec.qubits.len() {
            n.add_scaled_inplace(&self.op_qubit_population(i), 1.0);
        }
        n
    }

    /// Static Hamiltonian in the rotating frame at `frame_ghz`.
    pub fn hamiltonian(&self, frame_ghz: f64) -> Operator {
        let mut h = Operator::zeros(self.space());
        for i in 0..self.spec.qubits.len() {
            h.add_scaled_inplace(
                &self.op_qubit_population(i),
                ghz_to_angular(self.effective_omega_ghz(i) - frame_ghz),
            );
        }
        for c in &self.spec.couplings {
            let (i, j) = (c.pair[0], c.pair[1]);
            let exch = &self.op_sigma_minus(i).dagger().matmul(&self.op_sigma_minus(j))
                + &self.op_sigma_minus(j).dagger().matmul(&self.op_sigma_minus(i));
            h.add_scaled_inplace(&exch, mhz_to_angular(c.j_mhz));
        }
        h
    }

    /// Qubit collapse channels (no resonator decay in the reduced model).
    pub fn collapse_operators(&self) -> Vec<(Operator, f64)> {
        let mut out = Vec::new();
        for (i, q) in self.spec.qubits.iter().enumerate() {
            if q.gamma1_mhz > 0.0 {
                out.push((self.op_sigma_minus(i), mhz_to_angular(q.gamma1_mhz)));
            }
            if q.gamma_phi_mhz > 0.0 {
                out.push((self.op_qubit_population(i), mhz_to_angular(q.gamma_phi_mhz)));
            }
        }
        out
    }

    /// Raising operator of the shared drive line, `Σ η_i σ⁺_i`.
    pub fn drive_raising_operator(&self) -> Operator {
        let mut d = Operator::zeros(self.space());
        for (i, q) in self.spec.qubits.iter().enumerate() {
            if q.eta != 0.0 {
                d.add_scaled_inplace(&self.op_sigma_minus(i).dagger(), q.eta);
            }
        }
        d
    }

    /// Per-qubit population observables (no field observables here).
    pub fn observables(&self) -> Vec<(String, Operator)> {
        self.spec
            .qubits
            .iter()
            .enumerate()
            .map(|(i, q)| {
                (
                    format!("pop_{}", q.display_name(i)),
                    self.op_qubit_population(i),
                )
            })
            .collect()
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }
}
