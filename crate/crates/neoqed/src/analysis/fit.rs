//! Nonlinear least-squares fits for simulated time series.
//!
//! Three models cover the decoherence and Rabi analyses:
//!
//! * [`fit_exponential`] — `y = a·exp(−t/τ) + c` (relaxation),
//! * [`fit_damped_sinusoid`] — `y = a·cos(2πf·t + φ)·exp(−t/τ) + c`
//!   (Rabi and Ramsey fringes),
//! * [`fit_multi_frequency`] — a sum of K ≤ 4 damped cosines with a shared
//!   decay constant, independent amplitudes and phases (beating fringes).
//!
//! The optimizer is a damped Gauss–Newton (Levenberg–Marquardt) iteration
//! with analytic Jacobians. Initial guesses come from log-linear regression
//! (exponential) or a zero-padded discrete Fourier transform with parabolic
//! peak refinement (sinusoids). Failure to converge within 200 iterations is
//! reported through [`FitResult::converged`] — never as a silently wrong
//! answer.

use nalgebra::{DMatrix, DVector};

use super::AnalysisError;
use crate::operator::C64;

/// One fitted parameter with its 1σ uncertainty.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    /// 1σ uncertainty from the linearized covariance at the solution
    /// (non-negative; infinite when the normal matrix is singular).
    pub sigma: f64,
}

/// Outcome of a nonlinear least-squares fit.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FitResult {
    /// Model identifier (`"exponential"`, `"damped_sinusoid"`,
    /// `"multi_frequency_k"`).
    pub model: String,
    pub parameters: Vec<FitParameter>,
    /// Euclidean norm of the residual vector at the solution.
    pub residual_norm: f64,
    /// Whether the iteration met its convergence criteria. A `false` value
    /// means the parameters are the best found but should not be trusted;
    /// `message` says why.
    pub converged: bool,
    pub iterations: usize,
    /// Human-readable convergence or degeneracy note.
    pub message: String,
}

impl FitResult {
    /// Look up a parameter by name.
    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Value of a parameter by name.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameter(name).map(|p| p.value)
    }
}

/// A fit model: value and gradient of the model function at one abscissa.
trait Model {
    fn name(&self) -> String;
    fn param_names(&self) -> Vec<String>;
    /// Reject parameter vectors outside the model's domain (e.g. τ ≤ 0);
    /// the optimizer treats a step into an invalid region as a failed step.
    fn valid(&self, p: &[f64]) -> bool;
    fn eval(&self, p: &[f64], t: f64) -> f64;
    fn grad(&self, p: &[f64], t: f64, out: &mut [f64]);
}

/// `y = a·exp(−t/τ) + c`, parameters `[a, τ, c]`.
struct Exponential;

impl Model for Exponential {
    fn name(&self) -> String {
        "exponential".into()
    }
    fn param_names(&self) -> Vec<String> {
        vec!["amplitude".into(), "tau".into(), "offset".into()]
    }
    fn valid(&self, p: &[f64]) -> bool {
        p.iter().all(|v| v.is_finite()) && p[1] > 0.0
    }
    fn eval(&self, p: &[f64], t: f64) -> f64 {
        p[0] * (-t / p[1]).exp() + p[2]
    }
    fn grad(&self, p: &[f64], t: f64, out: &mut [f64]) {
        let e = (-t / p[1]).exp();
        out[0] = e;
        out[1] = p[0] * e * t / (p[1] * p[1]);
        out[2] = 1.0;
    }
}

/// Sum of K damped cosines with shared decay:
/// `y = Σ_k a_k·cos(2πf_k·t + φ_k)·exp(−t/τ) + c`,
/// parameters `[a_1, f_1, φ_1, …, a_K, f_K, φ_K, τ, c]`.
struct DampedCosines {
    k: usize,
}

impl Model for DampedCosines {
    fn name(&self) -> String {
        if self.k == 1 {
            "damped_sinusoid".into()
        } else {
            format!("multi_frequency_{}", self.k)
        }
    }
    fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(3 * self.k + 2);
        for i in 1..=self.k {
            if self.k == 1 {
                names.push("amplitude".into());
                names.push("frequency".into());
                names.push("phase".into());
            } else {
                names.push(format!("amplitude_{i}"));
                names.push(format!("frequency_{i}"));
                names.push(format!("phase_{i}"));
            }
        }
        names.push("tau".into());
        names.push("offset".into());
        names
    }
    fn valid(&self, p: &[f64]) -> bool {
        p.iter().all(|v| v.is_finite()) && p[3 * self.k] > 0.0
    }
    fn eval(&self, p: &[f64], t: f64) -> f64 {
        let tau = p[3 * self.k];
        let e = (-t / tau).exp();
        let mut y = p[3 * self.k + 1];
        for i in 0..self.k {
            let (a, f, phi) = (p[3 * i], p[3 * i + 1], p[3 * i + 2]);
            y += a * (std::f64::consts::TAU * f * t + phi).cos() * e;
        }
        y
    }
    fn grad(&self, p: &[f64], t: f64, out: &mut [f64]) {
        let tau = p[3 * self.k];
        let e = (-t / tau).exp();
        let mut sum = 0.0;
        for i in 0..self.k {
            let (a, f, phi) = (p[3 * i], p[3 * i + 1], p[3 * i + 2]);
            let theta = std::f64::consts::TAU * f * t + phi;
            let (sin, cos) = theta.sin_cos();
            out[3 * i] = cos * e;
            out[3 * i + 1] = -a * sin * std::f64::consts::TAU * t * e;
            out[3 * i + 2] = -a * sin * e;
            sum += a * cos;
        }
        out[3 * self.k] = sum * e * t / (tau * tau);
        out[3 * self.k + 1] = 1.0;
    }
}

/// Damped Gauss–Newton core. Returns the best parameters, the undamped
/// normal matrix at the solution (for the covariance), the final cost, the
/// iteration count, and a (converged, message) verdict.
fn levenberg_marquardt(
    t: &[f64],
    y: &[f64],
    model: &dyn Model,
    p0: Vec<f64>,
    max_iter: usize,
) -> (Vec<f64>, DMatrix<f64>, f64, usize, bool, String) {
    let n = t.len();
    let m = p0.len();

    let residuals = |p: &[f64]| -> Option<DVector<f64>> {
        if !model.valid(p) {
            return None;
        }
        let mut r = DVector::zeros(n);
        for i in 0..n {
            let v = model.eval(p, t[i]) - y[i];
            if !v.is_finite() {
                return None;
            }
            r[i] = v;
        }
        Some(r)
    };
    let jacobian = |p: &[f64]| -> DMatrix<f64> {
        let mut j = DMatrix::zeros(n, m);
        let mut row = vec![0.0; m];
        for i in 0..n {
            model.grad(p, t[i], &mut row);
            for (jj, &g) in row.iter().enumerate() {
                j[(i, jj)] = g;
            }
        }
        j
    };

    let mut p = p0;
    let mut r = match residuals(&p) {
        Some(r) => r,
        None => {
            // The initializer produced an invalid point; report it honestly
            // with an identity normal matrix (covariance will be flagged).
            return (
                p,
                DMatrix::identity(m, m),
                f64::INFINITY,
                0,
                false,
                "initial parameters are outside the model domain".into(),
            );
        }
    };
    let mut cost = 0.5 * r.norm_squared();
    let mut lambda = 1e-3;
    let mut iters = 0;
    let mut converged = false;
    let mut message = format!("no convergence within {max_iter} iterations");

    while iters < max_iter {
        iters += 1;
        let j = jacobian(&p);
        let a = j.transpose() * &j;
        let g = j.transpose() * &r;
        if g.amax() <= 1e-12 * (1.0 + cost) {
            converged = true;
            message = "gradient below tolerance".into();
            break;
        }

        let mut accepted = false;
        for _ in 0..30 {
            let mut damped = a.clone();
            for d in 0..m {
                damped[(d, d)] += lambda * damped[(d, d)].max(1e-12);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let cand: Vec<f64> = p.iter().zip(step.iter()).map(|(pi, si)| pi + si).collect();
            match residuals(&cand) {
                Some(rc) => {
                    let cost_c = 0.5 * rc.norm_squared();
                    if cost_c < cost {
                        let improvement = cost - cost_c;
                        let step_small = step.norm() <= 1e-12 * (1.0 + p.iter().map(|v| v * v).sum::<f64>().sqrt());
                        p = cand;
                        r = rc;
                        cost = cost_c;
                        lambda = (lambda / 3.0).max(1e-14);
                        accepted = true;
                        if improvement <= 1e-14 + 1e-12 * cost || step_small {
                            converged = true;
                            message = "cost improvement below tolerance".into();
                        }
                        break;
                    }
                    lambda *= 10.0;
                }
                None => lambda *= 10.0,
            }
            if lambda > 1e14 {
                break;
            }
        }
        if converged {
            break;
        }
        if !accepted {
            // No downhill step exists at any damping: we are at a (possibly
            // flat) stationary point.
            converged = true;
            message = "no downhill step found (stationary point)".into();
            break;
        }
    }

    let j = jacobian(&p);
    let a = j.transpose() * &j;
    (p, a, cost, iters, converged, message)
}

/// Assemble a [`FitResult`] with covariance-based 1σ uncertainties.
fn finish_fit(
    model: &dyn Model,
    p: Vec<f64>,
    normal: DMatrix<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
    mut message: String,
    n_samples: usize,
) -> FitResult {
    let m = p.len();
    let dof = n_samples.saturating_sub(m);
    let sigmas: Vec<f64> = if dof == 0 {
        message = format!("{message}; no degrees of freedom for uncertainties");
        vec![f64::INFINITY; m]
    } else {
        let s2 = 2.0 * cost / dof as f64;
        match normal.try_inverse() {
            Some(cov) => (0..m).map(|i| (s2 * cov[(i, i)]).max(0.0).sqrt()).collect(),
            None => {
                message = format!("{message}; singular normal matrix, uncertainties unavailable");
                vec![f64::INFINITY; m]
            }
        }
    };
    let parameters = model
        .param_names()
        .into_iter()
        .zip(p.iter().zip(sigmas.iter()))
        .map(|(name, (&value, &sigma))| FitParameter { name, value, sigma })
        .collect();
    FitResult {
        model: model.name(),
        parameters,
        residual_norm: (2.0 * cost).sqrt(),
        converged,
        iterations,
        message,
    }
}

fn validate_series(t: &[f64], y: &[f64], min_samples: usize) -> Result<(), AnalysisError> {
    if t.len() != y.len() {
        return Err(AnalysisError::InvalidInput(format!(
            "abscissa and ordinate lengths differ ({} vs {})",
            t.len(),
            y.len()
        )));
    }
    if t.len() < min_samples {
        return Err(AnalysisError::TooFewSamples {
            needed: min_samples,
            got: t.len(),
        });
    }
    if t.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(AnalysisError::InvalidInput(
            "series contains non-finite values".into(),
        ));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidInput(
            "abscissae must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Peak-to-peak spread that counts as "no signal" relative to the data
/// magnitude.
fn degenerate_spread(y: &[f64]) -> Option<(f64, f64)> {
    let max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = y.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if max - min <= 1e-10 * (1.0 + scale) {
        Some((min, max))
    } else {
        None
    }
}

/// Fit `y = a·exp(−t/τ) + c`.
///
/// Initialization: the offset starts at the last sample (the tail is
/// closest to the asymptote) and a log-linear regression of `ln|y − c|`
/// against `t` seeds the amplitude and decay time. Constant data is
/// reported as a degenerate-amplitude fit with `converged = false` rather
/// than an error.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> Result<FitResult, AnalysisError> {
    validate_series(t, y, 8)?;
    let model = Exponential;
    let n = t.len();
    let span = t[n - 1] - t[0];

    if degenerate_spread(y).is_some() {
        let mean = y.iter().sum::<f64>() / n as f64;
        return Ok(FitResult {
            model: model.name(),
            parameters: vec![
                FitParameter {
                    name: "amplitude".into(),
                    value: 0.0,
                    sigma: 0.0,
                },
                FitParameter {
                    name: "tau".into(),
                    value: span,
                    sigma: f64::INFINITY,
                },
                FitParameter {
                    name: "offset".into(),
                    value: mean,
                    sigma: 0.0,
                },
            ],
            residual_norm: y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt(),
            converged: false,
            iterations: 0,
            message: "degenerate amplitude: data are constant".into(),
        });
    }

    // Offset seed: the tail sample. Log-linear regression on the remainder.
    let c0 = y[n - 1];
    let spread = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - y.iter().cloned().fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y.iter())
        .filter(|(_, &yi)| (yi - c0).abs() > 1e-3 * spread)
        .map(|(&ti, &yi)| (ti, (yi - c0).abs().ln()))
        .collect();
    let sign = if y[0] >= c0 { 1.0 } else { -1.0 };
    let (mut a0, mut tau0) = (sign * spread, span / 3.0);
    if pts.len() >= 3 {
        let np = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = np * sxx - sx * sx;
        if denom > 0.0 {
            let slope = (np * sxy - sx * sy) / denom;
            let intercept = (sy - slope * sx) / np;
            if slope < -1e-12 {
                tau0 = (-1.0 / slope).clamp(span / 100.0, 100.0 * span);
                a0 = sign * intercept.exp();
            }
        }
    }

    let (p, normal, cost, iters, converged, message) =
        levenberg_marquardt(t, y, &model, vec![a0, tau0, c0], 200);
    Ok(finish_fit(&model, p, normal, cost, iters, converged, message, n))
}

/// Fit a single damped cosine `y = a·cos(2πf·t + φ)·exp(−t/τ) + c`.
///
/// The frequency, amplitude, and phase are seeded from the dominant peak of
/// a zero-padded discrete Fourier transform (with parabolic interpolation
/// around the peak bin); the decay from the ratio of RMS amplitudes in the
/// two halves of the record. The returned amplitude is non-negative, the
/// frequency non-negative, and the phase wrapped to (−π, π].
pub fn fit_damped_sinusoid(t: &[f64], y: &[f64]) -> Result<FitResult, AnalysisError> {
    validate_series(t, y, 8)?;
    fit_cosines(t, y, 1)
}

/// Fit a sum of `k ≤ 4` damped cosines with one shared decay constant and
/// independent amplitudes/phases. Components in the result are sorted by
/// increasing frequency.
pub fn fit_multi_frequency(t: &[f64], y: &[f64], k: usize) -> Result<FitResult, AnalysisError> {
    if k == 0 || k > 4 {
        return Err(AnalysisError::InvalidInput(format!(
            "component count must be between 1 and 4, got {k}"
        )));
    }
    validate_series(t, y, (3 * k + 3).max(8))?;
    fit_cosines(t, y, k)
}

fn fit_cosines(t: &[f64], y: &[f64], k: usize) -> Result<FitResult, AnalysisError> {
    let model = DampedCosines { k };
    let n = t.len();
    let span = t[n - 1] - t[0];
    let mean = y.iter().sum::<f64>() / n as f64;

    if degenerate_spread(y).is_some() {
        let mut parameters = Vec::new();
        for name in model.param_names() {
            let value = if name == "offset" {
                mean
            } else if name == "tau" {
                span
            } else {
                0.0
            };
            parameters.push(FitParameter {
                name,
                value,
                sigma: f64::INFINITY,
            });
        }
        return Ok(FitResult {
            model: model.name(),
            parameters,
            residual_norm: 0.0,
            converged: false,
            iterations: 0,
            message: "degenerate amplitude: data are constant".into(),
        });
    }

    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let peaks = dominant_frequencies(t, &centered, k);
    if peaks.is_empty() {
        return Ok(FitResult {
            model: model.name(),
            parameters: Vec::new(),
            residual_norm: f64::NAN,
            converged: false,
            iterations: 0,
            message: "no oscillation peak found in the spectrum".into(),
        });
    }

    // Decay seed: compare RMS amplitude of the two record halves.
    let half = n / 2;
    let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    let (r1, r2) = (rms(&centered[..half]), rms(&centered[half..]));
    let tau0 = if r1 > 0.0 && r2 > 0.0 && r2 < r1 {
        (-(span / 2.0) / (r2 / r1).ln()).clamp(span / 20.0, 20.0 * span)
    } else {
        2.0 * span
    };

    let mut p0 = Vec::with_capacity(3 * k + 2);
    let strongest = peaks[0];
    for i in 0..k {
        if let Some(&(f, a, phi)) = peaks.get(i) {
            p0.extend_from_slice(&[a, f, phi]);
        } else {
            // Fewer distinct spectral peaks than requested components:
            // seed the remainder as weak satellites of the strongest peak,
            // offset by one spectral resolution element each.
            let off = (i - peaks.len() + 1) as f64 / span;
            p0.extend_from_slice(&[0.1 * strongest.1, strongest.0 + off, strongest.2]);
        }
    }
    p0.push(tau0);
    p0.push(mean);

    let (mut p, normal, cost, iters, converged, message) =
        levenberg_marquardt(t, y, &model, p0, 200);

    // Canonical form: a_k ≥ 0, f_k ≥ 0, φ_k ∈ (−π, π], components sorted by
    // frequency.
    for i in 0..k {
        if p[3 * i] < 0.0 {
            p[3 * i] = -p[3 * i];
            p[3 * i + 2] += std::f64::consts::PI;
        }
        if p[3 * i + 1] < 0.0 {
            p[3 * i + 1] = -p[3 * i + 1];
            p[3 * i + 2] = -p[3 * i + 2];
        }
        let two_pi = std::f64::consts::TAU;
        let mut phi = p[3 * i + 2] % two_pi;
        if phi > std::f64::consts::PI {
            phi -= two_pi;
        } else if phi <= -std::f64::consts::PI {
            phi += two_pi;
        }
        p[3 * i + 2] = phi;
    }
    // Sort components by frequency (stable mapping of triples).
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p[3 * a + 1].partial_cmp(&p[3 * b + 1]).unwrap());
    let mut sorted = Vec::with_capacity(p.len());
    for &i in &order {
        sorted.extend_from_slice(&p[3 * i..3 * i + 3]);
    }
    sorted.push(p[3 * k]);
    sorted.push(p[3 * k + 1]);

    // Re-evaluate the normal matrix ordering: parameter permutation permutes
    // rows/columns of the covariance identically, so permute the diagonal by
    // rebuilding from the sorted parameters.
    let permuted_normal = {
        let mut idx: Vec<usize> = Vec::with_capacity(3 * k + 2);
        for &i in &order {
            idx.extend_from_slice(&[3 * i, 3 * i + 1, 3 * i + 2]);
        }
        idx.push(3 * k);
        idx.push(3 * k + 1);
        DMatrix::from_fn(3 * k + 2, 3 * k + 2, |r, c| normal[(idx[r], idx[c])])
    };

    Ok(finish_fit(
        &model,
        sorted,
        permuted_normal,
        cost,
        iters,
        converged,
        message,
        n,
    ))
}

/// Locate up to `k` dominant spectral peaks of a (mean-removed) series.
///
/// Evaluates the discrete Fourier transform on a frequency grid eight times
/// denser than the natural resolution (the zero-padding equivalent, valid
/// for non-uniform sampling too), finds local maxima of the power spectrum
/// separated by at least half a resolution element, refines each peak
/// position parabolically, and returns `(frequency, amplitude, phase)`
/// triples sorted by decreasing power.
fn dominant_frequencies(t: &[f64], centered: &[f64], k: usize) -> Vec<(f64, f64, f64)> {
    let n = t.len();
    let span = t[n - 1] - t[0];
    if span <= 0.0 {
        return Vec::new();
    }
    let mut dts: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    dts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dt_med = dts[dts.len() / 2];
    let f_nyq = 0.5 / dt_med;
    let nf = (8 * n).clamp(256, 16384);
    let df = f_nyq / nf as f64;

    let transform = |f: f64| -> C64 {
        let mut z = C64::new(0.0, 0.0);
        for (&ti, &yi) in t.iter().zip(centered.iter()) {
            let theta = -std::f64::consts::TAU * f * ti;
            z += C64::new(yi * theta.cos(), yi * theta.sin());
        }
        z
    };

    let power: Vec<f64> = (0..=nf).map(|j| transform(j as f64 * df).norm_sqr()).collect();

    // Candidate peaks: interior local maxima at resolvable frequencies.
    let f_min = 0.5 / span;
    let mut candidates: Vec<(f64, usize)> = (1..nf)
        .filter(|&j| {
            power[j] > power[j - 1] && power[j] >= power[j + 1] && j as f64 * df >= f_min
        })
        .map(|j| (power[j], j))
        .collect();
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    // Greedy selection with a minimum separation of half a resolution
    // element, so sidelobes of an already-selected peak are skipped.
    let sep = 0.5 / span;
    let mut picked: Vec<usize> = Vec::new();
    for &(_, j) in &candidates {
        if picked.len() >= k {
            break;
        }
        let fj = j as f64 * df;
        if picked.iter().all(|&pj| (fj - pj as f64 * df).abs() >= sep) {
            picked.push(j);
        }
    }

    picked
        .into_iter()
        .map(|j| {
            // Parabolic refinement on log power around the peak bin.
            let (pm, p0, pp) = (power[j - 1], power[j], power[j + 1]);
            let mut f = j as f64 * df;
            if pm > 0.0 && pp > 0.0 && p0 > 0.0 {
                let (lm, l0, lp) = (pm.ln(), p0.ln(), pp.ln());
                let denom = lm - 2.0 * l0 + lp;
                if denom < 0.0 {
                    let delta = 0.5 * (lm - lp) / denom;
                    if delta.abs() <= 1.0 {
                        f += delta * df;
                    }
                }
            }
            let z = transform(f);
            (f, 2.0 * z.norm() / n as f64, z.arg())
        })
        .collect()
}
