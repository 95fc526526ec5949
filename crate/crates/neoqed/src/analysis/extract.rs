//! Feature extraction from sweep data: avoided crossings in two-dimensional
//! spectroscopy maps, oscillation counting along sweep axes, and parabolic
//! peak refinement.
//!
//! All routines operate on plain slices so they are agnostic to where the
//! data came from (a simulation sweep or an imported CSV), and all are
//! invariant under adding a constant background to the response values:
//! only differences of values are ever used.

use super::AnalysisError;

/// Result of an avoided-crossing extraction.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AvoidedCrossing {
    /// Minimum separation of the two spectral branches, in MHz.
    pub gap_mhz: f64,
    /// Half the minimum separation, in MHz. Both values are reported
    /// because the literature quotes either the full branch separation or
    /// the coupling J = gap/2, depending on convention; callers compare
    /// whichever matches their definition.
    pub half_gap_mhz: f64,
    /// Sweep coordinate (e.g. gate-voltage detuning) at which the branch
    /// separation is smallest.
    pub at_x: f64,
    /// Per-column branch separations: `(x, Some(separation_mhz))` where two
    /// branches were resolved, `(x, None)` where not.
    pub per_column: Vec<(f64, Option<f64>)>,
}

/// Locate the two tallest interior peaks of one spectroscopy column and
/// return their refined positions (in the `freq` axis units), lower first.
///
/// Peaks are strict interior local maxima refined by three-point parabolic
/// interpolation. The two-peak pattern counts as resolved only if the
/// branches are at least two grid steps apart and the response dips between
/// them.
fn two_branch_positions(freq: &[f64], col: &[f64]) -> Option<(f64, f64)> {
    let n = freq.len();
    let mut maxima: Vec<usize> = (1..n - 1)
        .filter(|&i| col[i] > col[i - 1] && col[i] >= col[i + 1])
        .collect();
    if maxima.len() < 2 {
        return None;
    }
    maxima.sort_by(|&a, &b| col[b].partial_cmp(&col[a]).unwrap());
    let (mut i1, mut i2) = (maxima[0], maxima[1]);
    if i1 > i2 {
        std::mem::swap(&mut i1, &mut i2);
    }
    if i2 - i1 < 2 {
        return None;
    }
    // A genuine doublet has a dip between the branches.
    let dip = col[i1 + 1..i2].iter().cloned().fold(f64::INFINITY, f64::min);
    if !(dip < col[i1] && dip < col[i2]) {
        return None;
    }
    Some((refine_peak(freq, col, i1), refine_peak(freq, col, i2)))
}

/// Three-point parabolic refinement of a peak position at interior index `i`.
fn refine_peak(x: &[f64], v: &[f64], i: usize) -> f64 {
    let denom = v[i - 1] - 2.0 * v[i] + v[i + 1];
    if denom < 0.0 {
        let delta = 0.5 * (v[i - 1] - v[i + 1]) / denom;
        if delta.abs() <= 1.0 {
            // Local grid step (handles non-uniform axes adequately near i).
            let step = 0.5 * (x[i + 1] - x[i - 1]);
            return x[i] + delta * step;
        }
    }
    x[i]
}

/// Extract an avoided crossing from a two-dimensional sweep.
///
/// * `x` — sweep coordinate of each column (monotone, e.g. ΔV in mV),
/// * `freq_ghz` — frequency axis shared by all columns (strictly
///   increasing, GHz),
/// * `response` — one response column per `x` entry, indexed like
///   `response[column][frequency]`.
///
/// Each column is reduced to its two tallest interior peaks; the reported
/// gap is the smallest branch separation over the columns that resolve two
/// branches, refined parabolically across `x` when the minimum is interior.
/// Columns where the branches merge (fewer than two resolvable peaks) are
/// skipped; if no column resolves, the extraction fails with
/// [`AnalysisError::Unresolved`].
pub fn extract_avoided_crossing(
    x: &[f64],
    freq_ghz: &[f64],
    response: &[Vec<f64>],
) -> Result<AvoidedCrossing, AnalysisError> {
    if response.len() != x.len() {
        return Err(AnalysisError::InvalidInput(format!(
            "{} columns but {} sweep coordinates",
            response.len(),
            x.len()
        )));
    }
    if x.len() < 3 {
        return Err(AnalysisError::TooFewSamples {
            needed: 3,
            got: x.len(),
        });
    }
    if freq_ghz.len() < 5 {
        return Err(AnalysisError::TooFewSamples {
            needed: 5,
            got: freq_ghz.len(),
        });
    }
    if freq_ghz.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidInput(
            "frequency axis must be strictly increasing".into(),
        ));
    }
    for (k, col) in response.iter().enumerate() {
        if col.len() != freq_ghz.len() {
            return Err(AnalysisError::InvalidInput(format!(
                "column {k} has {} entries, frequency axis has {}",
                col.len(),
                freq_ghz.len()
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(AnalysisError::InvalidInput(format!(
                "column {k} contains non-finite values"
            )));
        }
    }

    let mut per_column: Vec<(f64, Option<f64>)> = Vec::with_capacity(x.len());
    let mut resolved: Vec<(usize, f64)> = Vec::new();
    for (k, col) in response.iter().enumerate() {
        match two_branch_positions(freq_ghz, col) {
            Some((lo, hi)) => {
                let sep_mhz = (hi - lo) * 1e3;
                per_column.push((x[k], Some(sep_mhz)));
                resolved.push((k, sep_mhz));
            }
            None => per_column.push((x[k], None)),
        }
    }
    if resolved.is_empty() {
        return Err(AnalysisError::Unresolved(
            "no column shows two resolvable branches".into(),
        ));
    }

    let (min_pos, &(min_k, min_sep)) = resolved
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .expect("resolved is non-empty");

    // If the smallest resolved separation sits next to a column where the
    // branches merged, the true minimum is inside the merged region and the
    // gap is below the resolution of the scan.
    let merged_neighbor = (min_k > 0 && per_column[min_k - 1].1.is_none())
        || (min_k + 1 < per_column.len() && per_column[min_k + 1].1.is_none());
    if merged_neighbor {
        return Err(AnalysisError::Unresolved(format!(
            "branches merge below resolution near x = {}",
            x[min_k]
        )));
    }

    // Refine across the sweep axis when the minimum is interior and its
    // neighbors in `resolved` are adjacent columns (a clean local scan).
    let mut gap = min_sep;
    let mut at_x = x[min_k];
    if min_pos > 0 && min_pos + 1 < resolved.len() {
        let (kl, sl) = resolved[min_pos - 1];
        let (kr, sr) = resolved[min_pos + 1];
        if kl + 1 == min_k && min_k + 1 == kr {
            let denom = sl - 2.0 * min_sep + sr;
            if denom > 0.0 {
                let delta = 0.5 * (sl - sr) / denom;
                if delta.abs() <= 1.0 {
                    let step = 0.5 * (x[kr] - x[kl]);
                    at_x = x[min_k] + delta * step;
                    gap = min_sep - 0.125 * (sl - sr) * (sl - sr) / denom;
                }
            }
        }
    }

    Ok(AvoidedCrossing {
        gap_mhz: gap,
        half_gap_mhz: 0.5 * gap,
        at_x,
        per_column,
    })
}

/// Count interior local extrema of a series whose excursion exceeds
/// `min_prominence` within a window of `window` samples on each side.
///
/// An interior point is an extremum when the slope changes sign across it;
/// it counts only if it is the largest (respectively smallest) value in its
/// window and the window's full range exceeds `min_prominence`. This
/// suppresses noise wiggles while counting genuine oscillation lobes, e.g.
/// phase reversals along the amplitude axis of a Rabi map.
pub fn count_interior_extrema(values: &[f64], min_prominence: f64, window: usize) -> usize {
    let n = values.len();
    if n < 3 {
        return 0;
    }
    let mut count = 0;
    for k in 1..n - 1 {
        if (values[k] - values[k - 1]) * (values[k + 1] - values[k]) >= 0.0 {
            continue;
        }
        let lo = k.saturating_sub(window);
        let hi = (k + window + 1).min(n);
        let wmin = values[lo..hi].iter().cloned().fold(f64::INFINITY, f64::min);
        let wmax = values[lo..hi]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let is_max = values[k] == wmax && wmax - wmin > min_prominence;
        let is_min = values[k] == wmin && wmax - wmin > min_prominence;
        if is_max || is_min {
            count += 1;
        }
    }
    count
}

/// Position and value of the maximum of a sampled curve, refined by
/// three-point parabolic interpolation when the maximum is interior.
///
/// Returns `None` for empty or mismatched inputs.
pub fn parabolic_peak(x: &[f64], v: &[f64]) -> Option<(f64, f64)> {
    if x.is_empty() || x.len() != v.len() {
        return None;
    }
    let i = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?
        .0;
    if i == 0 || i + 1 == v.len() {
        return Some((x[i], v[i]));
    }
    let denom = v[i - 1] - 2.0 * v[i] + v[i + 1];
    if denom < 0.0 {
        let delta = 0.5 * (v[i - 1] - v[i + 1]) / denom;
        if delta.abs() <= 1.0 {
            let step = 0.5 * (x[i + 1] - x[i - 1]);
            let peak_v = v[i] - 0.125 * (v[i - 1] - v[i + 1]) * (v[i - 1] - v[i + 1]) / denom;
            return Some((x[i] + delta * step, peak_v));
        }
    }
    Some((x[i], v[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Synthetic two-branch map: Lorentzian responses at the hyperbola
    /// branches ½(f_b+f_d) ± ½√((f_b−f_d)² + 4J²).
    fn synthetic_sweep(
        j_mhz: f64,
        background: f64,
    ) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let f_d: f64 = 5.7255;
        let beta = 1.0e-3; // GHz per mV of sweep coordinate
        let x: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let freq: Vec<f64> = (0..161)
            .map(|i| 5.705 + 0.25e-3 * i as f64)
            .collect();
        let width = 0.4e-3; // GHz line width
        let cols = x
            .iter()
            .map(|&xi| {
                let f_b = f_d + beta * xi; // bare bright-qubit line crosses f_d at x = 0
                let mid = 0.5 * (f_b + f_d);
                let half = 0.5
                    * ((f_b - f_d) * (f_b - f_d) + 4.0 * (j_mhz * 1e-3) * (j_mhz * 1e-3)).sqrt();
                freq.iter()
                    .map(|&f| {
                        let l1 = 1.0 / (1.0 + ((f - (mid - half)) / width).powi(2));
                        let l2 = 1.0 / (1.0 + ((f - (mid + half)) / width).powi(2));
                        background + l1 + l2
                    })
                    .collect()
            })
            .collect();
        (x, freq, cols)
    }

    #[test]
    fn recovers_gap_and_location() {
        let (x, freq, cols) = synthetic_sweep(3.35, 0.0);
        let ac = extract_avoided_crossing(&x, &freq, &cols).unwrap();
        // Minimum branch separation is 2J = 6.7 MHz at the crossing x = 0.
        assert_abs_diff_eq!(ac.gap_mhz, 6.7, epsilon = 0.15);
        assert_abs_diff_eq!(ac.half_gap_mhz, 3.35, epsilon = 0.075);
        assert_abs_diff_eq!(ac.at_x, 0.0, epsilon = 0.05);
        assert_eq!(ac.per_column.len(), x.len());
    }

    #[test]
    fn invariant_under_constant_background() {
        let (x, freq, cols) = synthetic_sweep(3.35, 0.0);
        let (_, _, cols_bg) = synthetic_sweep(3.35, 7.25);
        let a = extract_avoided_crossing(&x, &freq, &cols).unwrap();
        let b = extract_avoided_crossing(&x, &freq, &cols_bg).unwrap();
        assert_abs_diff_eq!(a.gap_mhz, b.gap_mhz, epsilon = 1e-12);
        assert_abs_diff_eq!(a.at_x, b.at_x, epsilon = 1e-12);
    }

    #[test]
    fn merged_branches_are_unresolved() {
        // Zero coupling: every column shows a single line, so no column
        // resolves two branches.
        let (x, freq, cols) = synthetic_sweep(0.0, 0.0);
        match extract_avoided_crossing(&x, &freq, &cols) {
            Err(AnalysisError::Unresolved(_)) => {}
            other => panic!("expected Unresolved, got {other:?}"),
        }
    }

    #[test]
    fn shape_validation() {
        let (x, freq, mut cols) = synthetic_sweep(3.35, 0.0);
        cols[3].pop();
        assert!(matches!(
            extract_avoided_crossing(&x, &freq, &cols),
            Err(AnalysisError::InvalidInput(_))
        ));
    }

    #[test]
    fn extrema_counting_with_prominence() {
        // Two full oscillation periods sampled densely: 4 interior extrema.
        let v: Vec<f64> = (0..81)
            .map(|i| (std::f64::consts::TAU * 2.0 * i as f64 / 80.0).sin())
            .collect();
        assert_eq!(count_interior_extrema(&v, 0.5, 10), 4);
        // Tiny ripples below the prominence threshold are ignored.
        let r: Vec<f64> = (0..81)
            .map(|i| 0.01 * (std::f64::consts::TAU * 2.0 * i as f64 / 80.0).sin())
            .collect();
        assert_eq!(count_interior_extrema(&r, 0.5, 10), 0);
        // Monotone data has none.
        let m: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(count_interior_extrema(&m, 0.0, 6), 0);
    }

    #[test]
    fn parabolic_peak_refines_interior_maximum() {
        // Quadratic with vertex at x = 0.37 sampled on a coarse grid: the
        // three-point refinement recovers the vertex exactly.
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = x.iter().map(|&xi| 1.0 - (xi - 0.37) * (xi - 0.37)).collect();
        let (px, pv) = parabolic_peak(&x, &v).unwrap();
        assert_abs_diff_eq!(px, 0.37, epsilon = 1e-12);
        assert_abs_diff_eq!(pv, 1.0, epsilon = 1e-12);
        // Edge maximum is returned unrefined.
        let rising: Vec<f64> = x.clone();
        let (ex, _) = parabolic_peak(&x, &rising).unwrap();
        assert_abs_diff_eq!(ex, 1.0, epsilon = 1e-12);
    }
}
