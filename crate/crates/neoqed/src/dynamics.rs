//! Lindblad master-equation integration.
//!
//! Propagates `dρ/dt = −i[H(t), ρ] + Σ_c rate_c·(L_c ρ L_c† − ½{L_c†L_c, ρ})`
//! with a time-dependent Hamiltonian `H(t) = H₀ + Σ_k c_k(t) D_k + c̄_k(t) D_k†`
//! and records named observable trajectories.
//!
//! Design notes:
//! - The density matrix is propagated directly (right-hand-side callback
//!   form); no `dim² × dim²` superoperator is ever materialized, so systems
//!   up to a few hundred basis states stay cache-friendly.
//! - Although operators are stored dense, the RHS precompiles each operator
//!   into a compressed sparse-row form: `H₀`, drive, and collapse operators
//!   of these models are structurally sparse (≤ a few entries per row), so
//!   each application costs `O(nnz·dim)` instead of `O(dim³)`.
//! - One `evolve` call owns its state exclusively; sweeps parallelize by
//!   running many independent `evolve` calls.
//! - Sample times are decoupled from integration steps via cubic-Hermite
//!   dense output built from the free FSAL stage derivatives.
//! - Hermiticity is enforced structurally: the commutator is assembled as
//!   `−i(M − M†)` with `M = Hρ`, and anticommutators as `N + N†`, so a
//!   roundoff-level asymmetry in ρ is damped rather than amplified.

use crate::model::{DriveTarget, DriveSpec, DriveTerm, Frame, PulseEnvelope, SystemSpec};
use crate::operator::{DensityMatrix, Operator, OperatorError, C64};
use ndarray::Array2;
use thiserror::Error;

/// Errors surfaced by the integrator.
#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid integrator config:\n{}", .0.join("\n"))]
    InvalidConfig(Vec<String>),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(
        "step size underflow at t = {t:.6} µs (h = {h:.3e}); the problem is too stiff \
         for the requested tolerances"
    )]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("trace drift |tr ρ − 1| = {deviation:.3e} at t = {t:.6} µs exceeds {bound:.3e}")]
    TraceDrift { t: f64, deviation: f64, bound: f64 },
    #[error("hermiticity drift ‖ρ−ρ†‖∞ = {deviation:.3e} at t = {t:.6} µs exceeds {bound:.3e}")]
    HermiticityDrift { t: f64, deviation: f64, bound: f64 },
    #[error(
        "positivity violation at t = {t:.6} µs: ρ has an eigenvalue below −1e-5; \
         increase the Fock cutoff or tighten tolerances"
    )]
    PositivityViolation { t: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("{0}")]
    Model(String),
}

impl From<crate::model::ModelError> for DynamicsError {
    fn from(e: crate::model::ModelError) -> Self {
        DynamicsError::Model(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Integration method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Embedded Dormand–Prince 4(5) pair with PI-free step control
    /// (`h ← h·clamp(0.9·err^{−1/5}, 0.2, 5)`); the default.
    AdaptiveRk45 { rtol: f64, atol: f64 },
    /// Classical fixed-step RK4; bit-reproducible regression baseline.
    FixedRk4 { dt: f64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::AdaptiveRk45 {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

/// How much consistency checking to perform at every sample point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationLevel {
    /// No checks (fastest; for throwaway scans).
    None,
    /// Trace and Hermiticity drift checks, O(dim²) per sample; the default.
    #[default]
    Trace,
    /// Trace + Hermiticity + positive-semidefiniteness (shifted Cholesky,
    /// O(dim³) per sample — reserve for small systems or sparse sampling).
    Full,
}

/// Integration window, method, and sampling grid.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    /// End of the integration window in µs.
    pub t_end: f64,
    /// Times (µs, sorted, within [0, t_end]) at which observables are
    /// recorded. May be empty: only the final state is produced then.
    pub sample_times: Vec<f64>,
    /// Optional cap on the adaptive step (µs).
    pub max_step: Option<f64>,
    pub validation: ValidationLevel,
    /// Keep the full density matrix at every sample time (memory-heavy).
    pub store_states: bool,
}

impl IntegratorConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            method: Method::default(),
            t_end,
            sample_times: Vec::new(),
            max_step: None,
            validation: ValidationLevel::default(),
            store_states: false,
        }
    }

    /// Uniform sampling: `n` points from 0 to `t_end` inclusive (n ≥ 2).
    pub fn with_uniform_samples(mut self, n: usize) -> Self {
        let n = n.max(2);
        self.sample_times = (0..n)
            .map(|k| self.t_end * k as f64 / (n - 1) as f64)
            .collect();
        self
    }

    pub fn with_sample_times(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.method = Method::AdaptiveRk45 { rtol, atol };
        self
    }

    pub fn with_validation(mut self, level: ValidationLevel) -> Self {
        self.validation = level;
        self
    }

    pub fn with_store_states(mut self, store: bool) -> Self {
        self.store_states = store;
        self
    }

    pub fn validation_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            issues.push(format!("t_end = {} must be finite and > 0", self.t_end));
        }
        match self.method {
            Method::AdaptiveRk45 { rtol, atol } => {
                if !(rtol.is_finite() && rtol >= 1e-14) {
                    issues.push(format!("rtol = {rtol} must be >= 1e-14"));
                }
                if !(atol.is_finite() && atol > 0.0) {
                    issues.push(format!("atol = {atol} must be > 0"));
                }
            }
            Method::FixedRk4 { dt } => {
                if !(dt.is_finite() && dt > 0.0) {
                    issues.push(format!("dt = {dt} must be > 0"));
                }
            }
        }
        if let Some(h) = self.max_step {
            if !(h.is_finite() && h > 0.0) {
                issues.push(format!("max_step = {h} must be > 0"));
            }
        }
        let mut prev = 0.0;
        for (k, &t) in self.sample_times.iter().enumerate() {
            if !t.is_finite() || t < -1e-12 || t > self.t_end * (1.0 + 1e-12) + 1e-12 {
                issues.push(format!(
                    "sample_times[{k}] = {t} outside [0, t_end = {}]",
                    self.t_end
                ));
            }
            if k > 0 && t < prev {
                issues.push(format!("sample_times[{k}] = {t} not sorted ascending"));
            }
            prev = t;
        }
        issues
    }

    fn rtol(&self) -> f64 {
        match self.method {
            Method::AdaptiveRk45 { rtol, .. } => rtol,
            Method::FixedRk4 { .. } => 1e-8,
        }
    }
}

// ---------------------------------------------------------------------------
// Time-dependent Hamiltonian
// ---------------------------------------------------------------------------

/// `H(t) = static_part + Σ_k c_k(t)·D_k + conj(c_k(t))·D_k†`.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub static_part: Operator,
    pub drives: Vec<DriveTerm>,
}

impl Hamiltonian {
    pub fn static_only(static_part: Operator) -> Self {
        Self {
            static_part,
            drives: Vec::new(),
        }
    }

    pub fn with_drives(static_part: Operator, drives: Vec<DriveTerm>) -> Self {
        Self {
            static_part,
            drives,
        }
    }

    /// Assembled (dense) Hamiltonian snapshot at time `t`; for diagnostics
    /// and tests — the integrator never materializes this per step.
    pub fn at(&self, t: f64) -> Operator {
        let mut h = self.static_part.clone();
        for d in &self.drives {
            let c = d.coeff.eval(t);
            if c.norm_sqr() > 0.0 {
                h.add_scaled_inplace(&d.raising_op.scaled_complex(c), 1.0);
                h.add_scaled_inplace(&d.raising_op.dagger().scaled_complex(c.conj()), 1.0);
            }
        }
        h
    }
}

// ---------------------------------------------------------------------------
// Trajectory output
// ---------------------------------------------------------------------------

/// Integrator work counters.
#[derive(Debug, Clone, Default)]
pub struct IntegrationStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evaluations: usize,
    pub min_step: f64,
    pub max_step: f64,
}

/// Sampled observable trajectories plus the final state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Sample times in µs.
    pub times: Vec<f64>,
    /// Named series, one value per sample time. Always contains a `purity`
    /// series in addition to the caller's observables.
    pub series: Vec<(String, Vec<f64>)>,
    /// |tr ρ − 1| at each sample (diagnostic).
    pub trace_deviation: Vec<f64>,
    /// Full states at sample times when `store_states` was set.
    pub states: Option<Vec<DensityMatrix>>,
    pub final_state: DensityMatrix,
    pub stats: IntegrationStats,
}

impl Trajectory {
    /// Look up a named series.
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Sparse operator actions
// ---------------------------------------------------------------------------

/// Minimal compressed-sparse-row matrix over C64, supporting exactly the two
/// kernels the RHS needs: `out += α·(A @ ρ)` and `out += α·(ρ @ A)`.
#[derive(Debug, Clone)]
struct Csr {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_operator(op: &Operator) -> Self {
        let d = op.dim();
        let el = op.elements();
        let mut row_ptr = Vec::with_capacity(d + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..d {
            for j in 0..d {
                let v = el[[i, j]];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr {
            dim: d,
            row_ptr,
            cols,
            vals,
        }
    }

    #[inline]
    fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out += alpha · (self @ rho)`, flat row-major `d×d` buffers.
    fn axpy_left(&self, alpha: C64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            let out_row = &mut out[i * d..(i + 1) * d];
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let k = self.cols[idx];
                let av = alpha * self.vals[idx];
                let rho_row = &rho[k * d..(k + 1) * d];
                for j in 0..d {
                    out_row[j] += av * rho_row[j];
                }
            }
        }
    }

    /// `out += alpha · (rho @ self)`, flat row-major `d×d` buffers.
    fn axpy_right(&self, alpha: C64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            let rho_row = &rho[i * d..(i + 1) * d];
            let out_row = &mut out[i * d..(i + 1) * d];
            for k in 0..d {
                let s = alpha * rho_row[k];
                for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                    out_row[self.cols[idx]] += s * self.vals[idx];
                }
            }
        }
    }
}

/// Precompiled RHS: CSR forms of the static Hamiltonian, drive raising and
/// lowering parts, and collapse operators (L, L†, L†L with rates).
struct Rhs {
    dim: usize,
    h0: Csr,
    drives: Vec<(Csr, Csr, crate::model::DriveCoefficient)>,
    collapses: Vec<(Csr, Csr, Csr, f64)>,
    // scratch buffers
    m: Vec<C64>,
    q: Vec<C64>,
    n: Vec<C64>,
}

impl Rhs {
    fn new(
        hamiltonian: &Hamiltonian,
        collapses: &[(Operator, f64)],
    ) -> Result<Self, DynamicsError> {
        let dim = hamiltonian.static_part.dim();
        for term in &hamiltonian.drives {
            if term.raising_op.dim() != dim {
                return Err(DynamicsError::DimensionMismatch(format!(
                    "drive operator dim {} != Hamiltonian dim {dim}",
                    term.raising_op.dim()
                )));
            }
        }
        let mut cols = Vec::with_capacity(collapses.len());
        for (l, rate) in collapses {
            if l.dim() != dim {
                return Err(DynamicsError::DimensionMismatch(format!(
                    "collapse operator dim {} != Hamiltonian dim {dim}",
                    l.dim()
                )));
            }
            if !(rate.is_finite() && *rate >= 0.0) {
                return Err(DynamicsError::InvalidConfig(vec![format!(
                    "collapse rate {rate} must be finite and >= 0"
                )]));
            }
            let ldag = l.dagger();
            let ldl = ldag.matmul(l);
            cols.push((
                Csr::from_operator(l),
                Csr::from_operator(&ldag),
                Csr::from_operator(&ldl),
                *rate,
            ));
        }
        let drives = hamiltonian
            .drives
            .iter()
            .map(|term| {
                (
                    Csr::from_operator(&term.raising_op),
                    Csr::from_operator(&term.raising_op.dagger()),
                    term.coeff.clone(),
                )
            })
            .collect();
        let zeros = vec![C64::new(0.0, 0.0); dim * dim];
        Ok(Rhs {
            dim,
            h0: Csr::from_operator(&hamiltonian.static_part),
            drives,
            collapses: cols,
            m: zeros.clone(),
            q: zeros.clone(),
            n: zeros,
        })
    }

    /// Approximate flops per evaluation (for diagnostics).
    #[allow(dead_code)]
    fn work_estimate(&self) -> usize {
        let d = self.dim;
        let mut nnz = self.h0.nnz();
        for (l, ld, ldl, _) in &self.collapses {
            nnz += l.nnz() + ld.nnz() + ldl.nnz();
        }
        8 * nnz * d
    }

    /// `out = dρ/dt` at time `t` for state `y` (flat row-major d×d).
    fn eval(&mut self, t: f64, y: &[C64], out: &mut [C64]) {
        let d = self.dim;
        // M = H(t)·y
        self.m.fill(C64::new(0.0, 0.0));
        self.h0.axpy_left(C64::new(1.0, 0.0), y, &mut self.m);
        for (raise, lower, coeff) in &self.drives {
            let c = coeff.eval(t);
            if c.re != 0.0 || c.im != 0.0 {
                raise.axpy_left(c, y, &mut self.m);
                lower.axpy_left(c.conj(), y, &mut self.m);
            }
        }
        // out = −i(M − M†): commutator assembled from one product.
        for i in 0..d {
            for j in 0..d {
                let v = self.m[i * d + j] - self.m[j * d + i].conj();
                out[i * d + j] = C64::new(v.im, -v.re); // −i·v
            }
        }
        // Dissipators.
        for (l, ldag, ldl, rate) in &self.collapses {
            self.q.fill(C64::new(0.0, 0.0));
            l.axpy_left(C64::new(1.0, 0.0), y, &mut self.q);
            ldag.axpy_right(C64::new(*rate, 0.0), &self.q, out);
            self.n.fill(C64::new(0.0, 0.0));
            ldl.axpy_left(C64::new(1.0, 0.0), y, &mut self.n);
            let half = 0.5 * rate;
            for i in 0..d {
                for j in 0..d {
                    let v = self.n[i * d + j] + self.n[j * d + i].conj();
                    out[i * d + j] -= C64::new(half * v.re, half * v.im);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Dormand–Prince 4(5) coefficients
// ---------------------------------------------------------------------------

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// The 5th-order weights equal the last A row (FSAL): the stage-7 state IS
// the accepted solution, so no separate b5 combination is required.
/// Error weights b5 − b4.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// ---------------------------------------------------------------------------
// Evolution driver
// ---------------------------------------------------------------------------

/// Integrate the master equation and sample observables.
///
/// `observables` are `(name, operator)` pairs evaluated as `Re tr(ρO)` at
/// every sample time; a `purity` series (`tr ρ²`) is appended automatically.
/// The trajectory always carries the final state at `t_end`.
pub fn evolve(
    rho0: &DensityMatrix,
    hamiltonian: &Hamiltonian,
    collapses: &[(Operator, f64)],
    observables: &[(String, Operator)],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    let issues = cfg.validation_issues();
    if !issues.is_empty() {
        return Err(DynamicsError::InvalidConfig(issues));
    }
    let dim = hamiltonian.static_part.dim();
    if rho0.space().total_dim() != dim {
        return Err(DynamicsError::DimensionMismatch(format!(
            "initial state dim {} != Hamiltonian dim {dim}",
            rho0.space().total_dim()
        )));
    }
    for (name, op) in observables {
        if op.dim() != dim {
            return Err(DynamicsError::DimensionMismatch(format!(
                "observable '{name}' dim {} != Hamiltonian dim {dim}",
                op.dim()
            )));
        }
    }

    let mut rhs = Rhs::new(hamiltonian, collapses)?;

    // Flattened observables, pre-transposed so tr(ρO) = Σ_m ρ[m]·Oᵀ[m].
    let obs_flat: Vec<(String, Vec<C64>)> = observables
        .iter()
        .map(|(name, op)| {
            let el = op.elements();
            let mut flat = vec![C64::new(0.0, 0.0); dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    flat[i * dim + j] = el[[j, i]];
                }
            }
            (name.clone(), flat)
        })
        .collect();

    let mut recorder = Recorder::new(cfg, &obs_flat, rho0.space().clone(), dim)?;

    // Flatten the initial state.
    let y0: Vec<C64> = rho0.as_operator().elements().iter().copied().collect();

    // Integration breakpoints at drive support edges: adaptive steps never
    // straddle an envelope discontinuity.
    let mut breaks: Vec<f64> = Vec::new();
    for term in &hamiltonian.drives {
        for t in [term.coeff.support_start(), term.coeff.support_end()] {
            if t > 1e-12 && t < cfg.t_end - 1e-12 {
                breaks.push(t);
            }
        }
    }
    breaks.push(cfg.t_end);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let final_y = match cfg.method {
        Method::AdaptiveRk45 { rtol, atol } => integrate_adaptive(
            &mut rhs,
            y0,
            &breaks,
            rtol,
            atol,
            cfg.max_step,
            &mut recorder,
        )?,
        Method::FixedRk4 { dt } => integrate_fixed(&mut rhs, y0, cfg.t_end, dt, &mut recorder)?,
    };

    recorder.finish(final_y)
}

/// Sample emission: dense-output interpolation, observable evaluation,
/// validation. Shared by both integrators.
struct Recorder<'a> {
    sample_times: &'a [f64],
    cursor: usize,
    obs: &'a [(String, Vec<C64>)],
    space: crate::operator::HilbertSpace,
    dim: usize,
    validation: ValidationLevel,
    trace_bound: f64,
    herm_bound: f64,
    store_states: bool,
    // output accumulators
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    purity: Vec<f64>,
    trace_dev: Vec<f64>,
    states: Vec<DensityMatrix>,
    stats: IntegrationStats,
    scratch: Vec<C64>,
}

impl<'a> Recorder<'a> {
    fn new(
        cfg: &'a IntegratorConfig,
        obs: &'a [(String, Vec<C64>)],
        space: crate::operator::HilbertSpace,
        dim: usize,
    ) -> Result<Self, DynamicsError> {
        let rtol = cfg.rtol();
        Ok(Recorder {
            sample_times: &cfg.sample_times,
            cursor: 0,
            obs,
            space,
            dim,
            validation: cfg.validation,
            trace_bound: (10.0 * rtol).max(1e-8),
            herm_bound: (0.1 * rtol).max(1e-10),
            store_states: cfg.store_states,
            times: Vec::with_capacity(cfg.sample_times.len()),
            values: vec![Vec::with_capacity(cfg.sample_times.len()); obs.len()],
            purity: Vec::with_capacity(cfg.sample_times.len()),
            trace_dev: Vec::with_capacity(cfg.sample_times.len()),
            states: Vec::new(),
            stats: IntegrationStats {
                min_step: f64::INFINITY,
                ..Default::default()
            },
            scratch: vec![C64::new(0.0, 0.0); dim * dim],
        })
    }

    /// Emit every pending sample with time ≤ `t_hi`, interpolating between
    /// (t0, y0, f0) and (t0+h, y1, f1) with a cubic Hermite polynomial.
    #[allow(clippy::too_many_arguments)]
    fn emit_samples(
        &mut self,
        t0: f64,
        h: f64,
        y0: &[C64],
        f0: &[C64],
        y1: &[C64],
        f1: &[C64],
    ) -> Result<(), DynamicsError> {
        let t_hi = t0 + h;
        while self.cursor < self.sample_times.len()
            && self.sample_times[self.cursor] <= t_hi + 1e-12
        {
            let ts = self.sample_times[self.cursor];
            let theta = ((ts - t0) / h).clamp(0.0, 1.0);
            let (th2, th3) = (theta * theta, theta * theta * theta);
            let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
            let h10 = th3 - 2.0 * th2 + theta;
            let h01 = -2.0 * th3 + 3.0 * th2;
            let h11 = th3 - th2;
            for m in 0..self.dim * self.dim {
                self.scratch[m] = y0[m] * h00 + f0[m] * (h10 * h) + y1[m] * h01 + f1[m] * (h11 * h);
            }
            let snapshot = std::mem::take(&mut self.scratch);
            let res = self.record(ts, &snapshot);
            self.scratch = snapshot;
            res?;
            self.cursor += 1;
        }
        Ok(())
    }

    /// Record a sample at exactly the initial state (t = 0 samples).
    fn emit_initial(&mut self, y: &[C64]) -> Result<(), DynamicsError> {
        while self.cursor < self.sample_times.len() && self.sample_times[self.cursor] <= 1e-12 {
            let ts = self.sample_times[self.cursor];
            let snapshot = y.to_vec();
            self.record(ts, &snapshot)?;
            self.cursor += 1;
        }
        Ok(())
    }

    fn record(&mut self, t: f64, y: &[C64]) -> Result<(), DynamicsError> {
        let d = self.dim;
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..d {
            tr += y[i * d + i];
        }
        let trace_dev = (tr - C64::new(1.0, 0.0)).norm();
        if self.validation != ValidationLevel::None && trace_dev > self.trace_bound {
            return Err(DynamicsError::TraceDrift {
                t,
                deviation: trace_dev,
                bound: self.trace_bound,
            });
        }
        if self.validation != ValidationLevel::None {
            let mut herm: f64 = 0.0;
            for i in 0..d {
                for j in i..d {
                    herm = herm.max((y[i * d + j] - y[j * d + i].conj()).norm());
                }
            }
            if herm > self.herm_bound {
                return Err(DynamicsError::HermiticityDrift {
                    t,
                    deviation: herm,
                    bound: self.herm_bound,
                });
            }
        }
        for (k, (_, obs)) in self.obs.iter().enumerate() {
            let mut acc = 0.0;
            for m in 0..d * d {
                // Re(ρ[m]·Oᵀ[m])
                acc += y[m].re * obs[m].re - y[m].im * obs[m].im;
            }
            self.values[k].push(acc);
        }
        let purity: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        self.purity.push(purity);
        self.trace_dev.push(trace_dev);
        self.times.push(t);
        if self.validation == ValidationLevel::Full || self.store_states {
            let arr = Array2::from_shape_vec((d, d), y.to_vec()).expect("d×d buffer");
            let op = Operator::from_elements(self.space.clone(), arr)
                .map_err(DynamicsError::Operator)?;
            if self.validation == ValidationLevel::Full && !op.is_positive_within(1e-5) {
                return Err(DynamicsError::PositivityViolation { t });
            }
            if self.store_states {
                self.states.push(DensityMatrix::from_operator_unchecked(op));
            }
        }
        Ok(())
    }

    fn finish(self, final_y: Vec<C64>) -> Result<Trajectory, DynamicsError> {
        let d = self.dim;
        let arr = Array2::from_shape_vec((d, d), final_y).expect("d×d buffer");
        let final_state = DensityMatrix::from_operator_unchecked(
            Operator::from_elements(self.space.clone(), arr).map_err(DynamicsError::Operator)?,
        );
        let mut series: Vec<(String, Vec<f64>)> = self
            .obs
            .iter()
            .map(|(n, _)| n.clone())
            .zip(self.values)
            .collect();
        if !series.iter().any(|(n, _)| n == "purity") {
            series.push(("purity".to_string(), self.purity));
        }
        Ok(Trajectory {
            times: self.times,
            series,
            trace_deviation: self.trace_dev,
            states: if self.store_states {
                Some(self.states)
            } else {
                None
            },
            final_state,
            stats: self.stats,
        })
    }
}

fn scaled_rms_error(err: &[C64], y0: &[C64], y1: &[C64], rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for m in 0..err.len() {
        let sc = atol + rtol * y0[m].norm().max(y1[m].norm());
        let e = err[m].norm() / sc;
        acc += e * e;
    }
    (acc / err.len() as f64).sqrt()
}

fn integrate_adaptive(
    rhs: &mut Rhs,
    y0: Vec<C64>,
    breaks: &[f64],
    rtol: f64,
    atol: f64,
    max_step: Option<f64>,
    rec: &mut Recorder,
) -> Result<Vec<C64>, DynamicsError> {
    let n = y0.len();
    let t_end = *breaks.last().expect("at least t_end");
    let mut y = y0;
    let mut t = 0.0f64;
    rec.emit_initial(&y)?;

    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![C64::new(0.0, 0.0); n]).collect();
    let mut y_stage = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];
    let mut err = vec![C64::new(0.0, 0.0); n];

    let hard_cap = max_step.unwrap_or(f64::INFINITY);
    let mut h = (t_end / 100.0).min(hard_cap).min(breaks[0]);
    let mut fsal_valid = false;
    let mut break_idx = 0usize;

    while t < t_end - 1e-12 {
        while break_idx < breaks.len() && breaks[break_idx] <= t + 1e-12 {
            break_idx += 1;
            fsal_valid = false; // drive terms may switch discontinuously here
        }
        let stop = breaks[break_idx.min(breaks.len() - 1)];
        h = h.min(stop - t).min(hard_cap);
        if h < 1e-12 * t.max(1.0) {
            return Err(DynamicsError::StepSizeUnderflow { t, h });
        }

        if !fsal_valid {
            rhs.eval(t, &y, &mut k[0]);
            rec.stats.rhs_evaluations += 1;
            fsal_valid = true;
        }
        // Stages 2..7.
        for s in 1..7 {
            for m in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = DP_A[s - 1][j];
                    if a != 0.0 {
                        acc += kj[m] * a;
                    }
                }
                y_stage[m] = y[m] + acc * h;
            }
            if s == 6 {
                // Stage 7 state is the 5th-order solution (FSAL property).
                y_new.copy_from_slice(&y_stage);
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs.eval(t + DP_C[s] * h, &y_stage, &mut tail[0]);
            rec.stats.rhs_evaluations += 1;
        }
        // Error estimate.
        for m in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                if DP_E[j] != 0.0 {
                    acc += kj[m] * DP_E[j];
                }
            }
            err[m] = acc * h;
        }
        let e = scaled_rms_error(&err, &y, &y_new, rtol, atol);
        if e <= 1.0 {
            // Accept: samples first (Hermite over [t, t+h] with f0=k1, f1=k7).
            let (k_first, k_rest) = k.split_at(1);
            rec.emit_samples(t, h, &y, &k_first[0], &y_new, &k_rest[5])?;
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL: k7 becomes next k1
            rec.stats.steps_accepted += 1;
            rec.stats.min_step = rec.stats.min_step.min(h);
            rec.stats.max_step = rec.stats.max_step.max(h);
        } else {
            rec.stats.steps_rejected += 1;
        }
        let factor = if e == 0.0 {
            5.0
        } else {
            (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(y)
}

fn integrate_fixed(
    rhs: &mut Rhs,
    y0: Vec<C64>,
    t_end: f64,
    dt: f64,
    rec: &mut Recorder,
) -> Result<Vec<C64>, DynamicsError> {
    let n = y0.len();
    let mut y = y0;
    let mut t = 0.0f64;
    rec.emit_initial(&y)?;

    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = vec![C64::new(0.0, 0.0); n];
    let mut k3 = vec![C64::new(0.0, 0.0); n];
    let mut k4 = vec![C64::new(0.0, 0.0); n];
    let mut f_next = vec![C64::new(0.0, 0.0); n];
    let mut y_stage = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];

    rhs.eval(0.0, &y, &mut k1);
    rec.stats.rhs_evaluations += 1;

    let n_steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    for step in 0..n_steps {
        let h = if step + 1 == n_steps { t_end - t } else { dt };
        for m in 0..n {
            y_stage[m] = y[m] + k1[m] * (0.5 * h);
        }
        rhs.eval(t + 0.5 * h, &y_stage, &mut k2);
        for m in 0..n {
            y_stage[m] = y[m] + k2[m] * (0.5 * h);
        }
        rhs.eval(t + 0.5 * h, &y_stage, &mut k3);
        for m in 0..n {
            y_stage[m] = y[m] + k3[m] * h;
        }
        rhs.eval(t + h, &y_stage, &mut k4);
        for m in 0..n {
            y_new[m] = y[m] + (k1[m] + (k2[m] + k3[m]) * 2.0 + k4[m]) * (h / 6.0);
        }
        rhs.eval(t + h, &y_new, &mut f_next);
        rec.stats.rhs_evaluations += 4;
        rec.emit_samples(t, h, &y, &k1, &y_new, &f_next)?;
        t += h;
        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut k1, &mut f_next);
        rec.stats.steps_accepted += 1;
        rec.stats.min_step = rec.stats.min_step.min(h);
        rec.stats.max_step = rec.stats.max_step.max(h);
    }
    Ok(y)
}

// ---------------------------------------------------------------------------
// Probe ring-up helper
// ---------------------------------------------------------------------------

/// Result of [`steady_photon_number`].
#[derive(Debug, Clone)]
pub struct ProbeRingUp {
    /// Photon number at the end of the probe window.
    pub nbar_end: f64,
    /// Maximum photon number over the window.
    pub nbar_max: f64,
    /// Population of the top Fock state at the end (cutoff diagnostics).
    pub top_fock_population: f64,
}

impl ProbeRingUp {
    /// True when the Fock truncation is visibly saturated (top-state
    /// population above 1e-4) and the cutoff should be raised.
    pub fn saturation_warning(&self) -> bool {
        self.top_fock_population > 1e-4
    }
}

/// Drive the resonator on resonance with a square probe of amplitude
/// `eps_mhz` for `duration_us` from the ground state and report the
/// intracavity photon number. In the empty-cavity limit and for
/// `probe_scale = 1`, the long-time value approaches `(2ε/κ)²`.
pub fn steady_photon_number(
    spec: &SystemSpec,
    eps_mhz: f64,
    duration_us: f64,
) -> Result<ProbeRingUp, DynamicsError> {
    spec.validate().map_err(DynamicsError::from)?;
    if eps_mhz == 0.0 {
        return Ok(ProbeRingUp {
            nbar_end: 0.0,
            nbar_max: 0.0,
            top_fock_population: 0.0,
        });
    }
    let f_r = spec.resonator.omega_ghz;
    let h0 = spec.build_rotating_frame(f_r)?;
    let probe = DriveSpec {
        target: DriveTarget::ResonatorProbe,
        envelope: PulseEnvelope::square(eps_mhz, duration_us),
        carrier_ghz: f_r,
        amplitude_scale_mhz_per_v: crate::model::default_amplitude_scale(),
    };
    let term = spec.compile_drive(&probe, Frame::Rotating(f_r), 0.0)?;
    let collapses = spec.build_collapse_operators()?;
    let space = spec.space()?;
    let dim = space.total_dim();
    let cutoff = spec.resonator.cutoff;
    // Projector onto the top Fock level (any qubit state).
    let mut top = Operator::zeros(space.clone());
    let stride0 = dim / cutoff;
    for idx in 0..dim {
        if idx / stride0 == cutoff - 1 {
            top.elements_mut()[[idx, idx]] = C64::new(1.0, 0.0);
        }
    }

    let n_op = spec.op_photon_number()?;
    let observables = vec![
        ("nbar".to_string(), n_op),
        ("top_fock".to_string(), top),
    ];
    let cfg = IntegratorConfig::new(duration_us)
        .with_tolerances(1e-6, 1e-9)
        .with_uniform_samples(101);
    let rho0 = DensityMatrix::ground(space);
    let traj = evolve(
        &rho0,
        &Hamiltonian::with_drives(h0, vec![term]),
        &collapses,
        &observables,
        &cfg,
    )?;
    let nbar = traj.observable("nbar").expect("requested series");
    let top_series = traj.observable("top_fock").expect("requested series");
    Ok(ProbeRingUp {
        nbar_end: *nbar.last().expect("samples exist"),
        nbar_max: nbar.iter().copied().fold(0.0, f64::max),
        top_fock_population: *top_series.last().expect("samples exist"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriveCoefficient, QubitSpec, ResonatorSpec};
    use crate::operator::{HilbertSpace, Pauli};
    use crate::units::{ghz_to_angular, mhz_to_angular};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn qubit_space() -> HilbertSpace {
        HilbertSpace::single(2).unwrap()
    }

    fn sigma_plus() -> Operator {
        Operator::pauli(Pauli::Plus)
    }

    fn excited_projector() -> Operator {
        Operator::qubit_excited_projector()
    }

    fn square_drive(amp_mhz: f64, duration: f64, t_start: f64) -> DriveTerm {
        DriveTerm {
            raising_op: sigma_plus(),
            coeff: DriveCoefficient::Rotating {
                envelope: PulseEnvelope::square(amp_mhz, duration),
                t_start,
                scale: 1.0,
                delta_omega: 0.0,
            },
        }
    }

    #[test]
    fn zero_hamiltonian_zero_collapses_is_identity_map() {
        let space = qubit_space();
        let rho0 = DensityMatrix::from_ket(
            space.clone(),
            &[(0, C64::new(0.6, 0.0)), (1, C64::new(0.0, 0.8))],
        )
        .unwrap();
        let h = Hamiltonian::static_only(Operator::zeros(space));
        let cfg = IntegratorConfig::new(2.0).with_uniform_samples(9);
        let obs = vec![("pe".to_string(), excited_projector())];
        let traj = evolve(&rho0, &h, &[], &obs, &cfg).unwrap();
        let pe = traj.observable("pe").unwrap();
        for &v in pe {
            assert_abs_diff_eq!(v, 0.64, epsilon = 1e-14);
        }
        // Final state identical to the initial state to machine precision.
        let diff = traj.final_state.as_operator() - rho0.as_operator();
        assert!(diff.max_abs() < 1e-15);
    }

    /// Resonantly driven lossless qubit: P_e(t) = sin²(π·A·t) for square
    /// amplitude A (MHz) — the analytic two-level Rabi solution.
    #[test]
    fn resonant_rabi_flopping_matches_analytic() {
        let space = qubit_space();
        let rho0 = DensityMatrix::ground(space.clone());
        let amp = 2.0; // MHz → period 0.5 µs
        let t_start = 0.4;
        let h = Hamiltonian::with_drives(
            Operator::zeros(space),
            vec![square_drive(amp, 1.2, t_start)],
        );
        let cfg = IntegratorConfig::new(1.6).with_uniform_samples(33);
        let obs = vec![("pe".to_string(), excited_projector())];
        let traj = evolve(&rho0, &h, &[], &obs, &cfg).unwrap();
        let pe = traj.observable("pe").unwrap();
        for (k, &t) in traj.times.iter().enumerate() {
            let expected = if t <= t_start {
                0.0
            } else {
                let tau = t - t_start;
                (std::f64::consts::PI * amp * tau).sin().powi(2)
            };
            assert_abs_diff_eq!(pe[k], expected, epsilon = 5e-6);
        }
        // π pulse at τ = 1/(2A) = 0.25 µs → t = 0.65 µs: full inversion.
        let idx = traj
            .times
            .iter()
            .position(|&t| (t - 0.65).abs() < 1e-9)
            .unwrap();
        assert_abs_diff_eq!(pe[idx], 1.0, epsilon = 5e-6);
    }

    /// Detuned Rabi: P_max = A²/(A²+δ²), reached at t = π/W with
    /// W = √(A²+δ²) — the generalized Rabi formula.
    #[test]
    fn detuned_rabi_amplitude_and_frequency() {
        let space = qubit_space();
        let rho0 = DensityMatrix::ground(space.clone());
        let (a, delta) = (4.0, 3.0); // MHz; W = 5 MHz
        let mut h0 = Operator::zeros(space);
        h0.add_scaled_inplace(&excited_projector(), mhz_to_angular(delta));
        let h = Hamiltonian::with_drives(h0, vec![square_drive(a, 1.0, 0.0)]);
        // First max at t = 1/(2W) = 0.1 µs.
        let cfg = IntegratorConfig::new(0.2).with_sample_times(vec![0.1]);
        let obs = vec![("pe".to_string(), excited_projector())];
        let traj = evolve(&rho0, &h, &[], &obs, &cfg).unwrap();
        let pe = traj.observable("pe").unwrap();
        assert_abs_diff_eq!(pe[0], (a * a) / (a * a + delta * delta), epsilon = 1e-6);
    }

    /// T1 decay: an excited qubit with relaxation rate Γ/2π = 0.088 MHz has
    /// T1 = 1/(2π·0.088 µs⁻¹) = 1.8086 µs; P_e(T1) = 1/e.
    #[test]
    fn relaxation_t1_convention() {
        let space = qubit_space();
        let rho0 = DensityMatrix::pure_basis_state(space.clone(), &[1]).unwrap();
        let h = Hamiltonian::static_only(Operator::zeros(space));
        let gamma = mhz_to_angular(0.088);
        let t1 = 1.0 / gamma;
        assert_relative_eq!(t1, 1.8086, max_relative = 1e-4);
        let collapses = vec![(Operator::pauli(Pauli::Minus), gamma)];
        let cfg = IntegratorConfig::new(t1).with_sample_times(vec![0.5 * t1, t1]);
        let obs = vec![("pe".to_string(), excited_projector())];
        let traj = evolve(&rho0, &h, &collapses, &obs, &cfg).unwrap();
        let pe = traj.observable("pe").unwrap();
        // pe[0] lands mid-step and is interpolated; pe[1] is the integration
        // endpoint, which the dense output reproduces exactly.
        assert_relative_eq!(pe[0], (-0.5f64).exp(), max_relative = 1e-6);
        assert_relative_eq!(pe[1], (-1.0f64).exp(), max_relative = 1e-7);
    }

    /// Pure dephasing at rate Γᶠ decays coherences as e^{−Γᶠt/2}, i.e.
    /// Tφ = 2/Γᶠ, without touching populations.
    #[test]
    fn dephasing_tphi_convention() {
        let space = qubit_space();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let rho0 = DensityMatrix::from_ket(
            space.clone(),
            &[(0, C64::new(inv_sqrt2, 0.0)), (1, C64::new(inv_sqrt2, 0.0))],
        )
        .unwrap();
        let h = Hamiltonian::static_only(Operator::zeros(space.clone()));
        let gphi = mhz_to_angular(0.2);
        let collapses = vec![(Operator::qubit_excited_projector(), gphi)];
        // ⟨σx⟩ = 2 Re ρ01 decays as e^{−Γᶠ t / 2}.
        let mut sx = Operator::zeros(space);
        sx.add_scaled_inplace(&Operator::pauli(Pauli::Plus), 1.0);
        sx.add_scaled_inplace(&Operator::pauli(Pauli::Minus), 1.0);
        let t_probe = 2.0 / gphi; // = Tφ
        let cfg = IntegratorConfig::new(t_probe).with_sample_times(vec![t_probe]);
        let obs = vec![
            ("sx".to_string(), sx),
            ("pe".to_string(), excited_projector()),
        ];
        let traj = evolve(&rho0, &h, &collapses, &obs, &cfg).unwrap();
        assert_relative_eq!(
            traj.observable("sx").unwrap()[0],
            (-1.0f64).exp(),
            max_relative = 1e-7
        );
        // Populations untouched by pure dephasing.
        assert_abs_diff_eq!(traj.observable("pe").unwrap()[0], 0.5, epsilon = 1e-9);
    }

    /// Resonant vacuum Rabi in a lossless Jaynes–Cummings pair: |e,0⟩ fully
    /// swaps to |g,1⟩ at t = π/(2g).
    #[test]
    fn vacuum_rabi_swap() {
        let spec = SystemSpec {
            resonator: ResonatorSpec {
                omega_ghz: 5.0,
                kappa_mhz: 0.0,
                cutoff: 3,
            },
            qubits: vec![QubitSpec {
                name: None,
                omega_ghz: 5.0,
                g_mhz: 3.0,
                gamma1_mhz: 0.0,
                gamma_phi_mhz: 0.0,
                eta: 0.0,
            }],
            couplings: vec![],
            probe_scale: 1.0,
        };
        let h0 = spec.build_rotating_frame(5.0).unwrap();
        let space = spec.space().unwrap();
        let rho0 = DensityMatrix::pure_basis_state(space, &[0, 1]).unwrap();
        let g_ang = mhz_to_angular(3.0);
        let t_swap = std::f64::consts::FRAC_PI_2 / g_ang;
        let cfg = IntegratorConfig::new(t_swap).with_sample_times(vec![t_swap]);
        let obs = vec![
            ("pe".to_string(), spec.op_qubit_population(0).unwrap()),
            ("nbar".to_string(), spec.op_photon_number().unwrap()),
        ];
        let traj = evolve(&rho0, &Hamiltonian::static_only(h0), &[], &obs, &cfg).unwrap();
        assert_abs_diff_eq!(traj.observable("pe").unwrap()[0], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(traj.observable("nbar").unwrap()[0], 1.0, epsilon = 1e-8);
    }

    /// Closed system with a static Hamiltonian conserves ⟨H⟩ and ⟨N̂⟩.
    #[test]
    fn closed_system_conserves_energy_and_excitation() {
        let spec = crate::model::tests::two_qubit_spec(3);
        let h0 = spec.build_rotating_frame(5.70).unwrap();
        let space = spec.space().unwrap();
        let i1 = space.basis_index(&[0, 1, 0]).unwrap();
        let i2 = space.basis_index(&[1, 0, 0]).unwrap();
        let rho0 = DensityMatrix::from_ket(
            space.clone(),
            &[(i1, C64::new(0.8, 0.0)), (i2, C64::new(0.0, 0.6))],
        )
        .unwrap();
        let n_tot = spec.op_total_excitation().unwrap();
        let obs = vec![
            ("energy".to_string(), h0.clone()),
            ("n_tot".to_string(), n_tot),
        ];
        let cfg = IntegratorConfig::new(3.0).with_uniform_samples(31);
        let traj = evolve(&rho0, &Hamiltonian::static_only(h0), &[], &obs, &cfg).unwrap();
        let e = traj.observable("energy").unwrap();
        let n = traj.observable("n_tot").unwrap();
        let scale = e[0].abs().max(1.0);
        for k in 1..e.len() {
            assert!(
                (e[k] - e[0]).abs() < 1e-8 * scale,
                "energy drift at sample {k}: {} vs {}",
                e[k],
                e[0]
            );
            assert!((n[k] - n[0]).abs() < 1e-8, "excitation drift at sample {k}");
        }
        // Purity stays 1 in a closed system, up to accumulated step error
        // (the method does not enforce unitarity) plus dense-output
        // interpolation error at mid-interval samples.
        let purity = traj.observable("purity").unwrap();
        for &p in purity {
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-5);
        }
    }

    /// Driven, dissipative two-qubit run passes Full validation (trace,
    /// Hermiticity, positivity) at every sample.
    #[test]
    fn full_validation_on_driven_dissipative_system() {
        let spec = crate::model::tests::two_qubit_spec(3);
        let h0 = spec.build_rotating_frame(5.7255).unwrap();
        let drive = DriveTerm {
            raising_op: spec.drive_raising_operator().unwrap(),
            coeff: DriveCoefficient::Rotating {
                envelope: PulseEnvelope::square(3.0, 1.5),
                t_start: 0.0,
                scale: 1.0,
                delta_omega: 0.0,
            },
        };
        let collapses = spec.build_collapse_operators().unwrap();
        let rho0 = DensityMatrix::ground(spec.space().unwrap());
        let obs = spec.observables().unwrap();
        let cfg = IntegratorConfig::new(1.5)
            .with_uniform_samples(16)
            .with_validation(ValidationLevel::Full);
        let traj = evolve(
            &rho0,
            &Hamiltonian::with_drives(h0, vec![drive]),
            &collapses,
            &obs,
            &cfg,
        )
        .unwrap();
        for &dev in &traj.trace_deviation {
            assert!(dev < 1e-8);
        }
        // Populations physical.
        for name in ["pop_Qb", "pop_Qd"] {
            for &v in traj.observable(name).unwrap() {
                assert!((-1e-6..=1.0 + 1e-6).contains(&v), "{name} = {v}");
            }
        }
    }

    /// Gaussian-envelope π-pulse: with the 5σ truncated window the rotation
    /// angle is 2π·A_pk·⟨frac⟩·T, so A_pk = 1/(2·0.4951·T) inverts the qubit.
    #[test]
    fn gaussian_pulse_area_inversion() {
        let space = qubit_space();
        let rho0 = DensityMatrix::ground(space.clone());
        let t_pulse = 0.8;
        let frac = PulseEnvelope::gaussian(1.0, 1.0).mean_fraction();
        let a_pk = 1.0 / (2.0 * frac * t_pulse);
        let drive = DriveTerm {
            raising_op: sigma_plus(),
            coeff: DriveCoefficient::Rotating {
                envelope: PulseEnvelope::gaussian(a_pk, t_pulse),
                t_start: 0.0,
                scale: 1.0,
                delta_omega: 0.0,
            },
        };
        let h = Hamiltonian::with_drives(Operator::zeros(space), vec![drive]);
        let cfg = IntegratorConfig::new(t_pulse).with_sample_times(vec![t_pulse]);
        let obs = vec![("pe".to_string(), excited_projector())];
        let traj = evolve(&rho0, &h, &[], &obs, &cfg).unwrap();
        assert_abs_diff_eq!(traj.observable("pe").unwrap()[0], 1.0, epsilon = 1e-6);
    }

    /// Lab-frame cross-check: the full-cosine drive reproduces the rotating
    /// frame result up to Bloch–Siegert corrections of order (A/4ω)².
    #[test]
    fn lab_frame_pi_pulse_matches_rwa() {
        let space = qubit_space();
        let rho0 = DensityMatrix::ground(space.clone());
        let omega_ghz = 0.05; // 50 MHz carrier keeps the lab run cheap
        let amp = 5.0; // MHz → t_π = 0.1 µs
        let mut h0 = Operator::zeros(space);
        h0.add_scaled_inplace(&excited_projector(), ghz_to_angular(omega_ghz));
        let drive = DriveTerm {
            raising_op: sigma_plus(),
            coeff: DriveCoefficient::Lab {
                envelope: PulseEnvelope::square(amp, 0.1),
                t_start: 0.0,
                scale: 1.0,
                carrier_omega: ghz_to_angular(omega_ghz),
            },
        };
        let h = Hamiltonian::with_drives(h0, vec![drive]);
        let cfg = IntegratorConfig::new(0.1).with_sample_times(vec![0.1]);
        let obs = vec![("pe".to_string(), excited_projector())];
        let traj = evolve(&rho0, &h, &[], &obs, &cfg).unwrap();
        let pe = traj.observable("pe").unwrap()[0];
        assert!(pe > 0.99, "lab-frame π pulse reached only P_e = {pe}");
    }

    /// Adaptive tolerance consistency: loosening rtol from 1e-8 to 1e-6
    /// moves sampled observables by less than 4× the looser tolerance.
    #[test]
    fn tolerance_consistency() {
        let spec = crate::model::tests::two_qubit_spec(3);
        let h0 = spec.build_rotating_frame(5.7255).unwrap();
        let drive = DriveTerm {
            raising_op: spec.drive_raising_operator().unwrap(),
            coeff: DriveCoefficient::Rotating {
                envelope: PulseEnvelope::square(2.0, 1.0),
                t_start: 0.0,
                scale: 1.0,
                delta_omega: 0.0,
            },
        };
        let collapses = spec.build_collapse_operators().unwrap();
        let rho0 = DensityMatrix::ground(spec.space().unwrap());
        let obs = vec![("pop".to_string(), spec.op_qubit_population(1).unwrap())];
        let run = |rtol: f64| {
            let cfg = IntegratorConfig::new(1.0)
                .with_tolerances(rtol, 1e-12)
                .with_uniform_samples(11);
            evolve(
                &rho0,
                &Hamiltonian::with_drives(h0.clone(), vec![drive.clone()]),
                &collapses,
                &obs,
                &cfg,
            )
            .unwrap()
        };
        let loose = run(1e-6);
        let tight = run(1e-8);
        let a = loose.observable("pop").unwrap();
        let b = tight.observable("pop").unwrap();
        for k in 0..a.len() {
            assert!(
                (a[k] - b[k]).abs() < 4e-6,
                "sample {k}: {} vs {}",
                a[k],
                b[k]
            );
        }
    }

    /// Fixed-step RK4 halving check: dt → dt/2 changes observables by a
    /// bounded amount and both agree with the adaptive reference.
    #[test]
    fn fixed_step_convergence() {
        let space = qubit_space();
        let rho0 = DensityMatrix::ground(space.clone());
        let h = Hamiltonian::with_drives(
            Operator::zeros(space),
            vec![square_drive(2.0, 1.0, 0.0)],
        );
        let obs = vec![("pe".to_string(), excited_projector())];
        let run = |dt: f64| {
            let cfg = IntegratorConfig::new(1.0)
                .with_method(Method::FixedRk4 { dt })
                .with_uniform_samples(11);
            evolve(&rho0, &h, &[], &obs, &cfg).unwrap()
        };
        let coarse = run(1e-2);
        let fine = run(5e-3);
        let a = coarse.observable("pe").unwrap();
        let b = fine.observable("pe").unwrap();
        for k in 0..a.len() {
            let t = k as f64 * 0.1;
            let exact = (std::f64::consts::PI * 2.0 * t).sin().powi(2);
            // Halving dt must not worsen the error anywhere; the absolute
            // bound on the coarse run is a sanity cap on RK4 global error
            // accumulated over the full second (~5e-6 observed).
            assert!((b[k] - exact).abs() <= (a[k] - exact).abs() + 1e-12);
            assert_abs_diff_eq!(a[k], exact, epsilon = 2e-5);
        }
    }

    /// Fixed-step runs are bit-reproducible.
    #[test]
    fn fixed_step_determinism() {
        let spec = crate::model::tests::two_qubit_spec(3);
        let h0 = spec.build_rotating_frame(5.7255).unwrap();
        let collapses = spec.build_collapse_operators().unwrap();
        let rho0 = DensityMatrix::pure_basis_state(spec.space().unwrap(), &[0, 1, 0]).unwrap();
        let obs = vec![("pop".to_string(), spec.op_qubit_population(0).unwrap())];
        let run = || {
            let cfg = IntegratorConfig::new(0.5)
                .with_method(Method::FixedRk4 { dt: 1e-3 })
                .with_uniform_samples(6);
            evolve(
                &rho0,
                &Hamiltonian::static_only(h0.clone()),
                &collapses,
                &obs,
                &cfg,
            )
            .unwrap()
        };
        let t1 = run();
        let t2 = run();
        for (a, b) in t1
            .observable("pop")
            .unwrap()
            .iter()
            .zip(t2.observable("pop").unwrap())
        {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let mut cfg = IntegratorConfig::new(-1.0);
        cfg.sample_times = vec![0.5, 0.2, 7.0];
        let issues = cfg.validation_issues();
        assert!(issues.len() >= 3, "issues: {issues:?}");
    }

    /// Empty-cavity ring-up approaches n̄ = (2ε/κ)² for probe_scale = 1.
    #[test]
    fn empty_cavity_steady_state_photon_number() {
        let spec = SystemSpec {
            resonator: ResonatorSpec {
                omega_ghz: 5.0,
                kappa_mhz: 2.0,
                cutoff: 8,
            },
            // Far-detuned uncoupled spectator qubit: the cavity is empty.
            qubits: vec![QubitSpec {
                name: None,
                omega_ghz: 9.0,
                g_mhz: 0.0,
                gamma1_mhz: 0.0,
                gamma_phi_mhz: 0.0,
                eta: 0.0,
            }],
            couplings: vec![],
            probe_scale: 1.0,
        };
        let eps = 0.5; // MHz → n̄_ss = (2·0.5/2)² = 0.25
        let result = steady_photon_number(&spec, eps, 4.0).unwrap();
        assert_relative_eq!(result.nbar_end, 0.25, max_relative = 1e-3);
        assert!(!result.saturation_warning());
        // ε = 0 → exactly empty.
        let zero = steady_photon_number(&spec, 0.0, 1.0).unwrap();
        assert_eq!(zero.nbar_end, 0.0);
    }

    /// Drive support boundaries act as integration breakpoints: a pulse
    /// turning on abruptly long after t=0 is not smoothed over.
    #[test]
    fn late_pulse_edge_is_sharp() {
        let space = qubit_space();
        let rho0 = DensityMatrix::ground(space.clone());
        let h = Hamiltonian::with_drives(
            Operator::zeros(space),
            vec![square_drive(10.0, 0.05, 1.0)], // π pulse entirely in [1, 1.05]
        );
        let cfg = IntegratorConfig::new(1.1).with_sample_times(vec![0.999, 1.05]);
        let obs = vec![("pe".to_string(), excited_projector())];
        let traj = evolve(&rho0, &h, &[], &obs, &cfg).unwrap();
        let pe = traj.observable("pe").unwrap();
        assert_abs_diff_eq!(pe[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pe[1], 1.0, epsilon = 1e-6);
    }
}
