//! Closed-form perturbative oracles.
//!
//! These are the textbook dispersive-regime formulas for a resonator
//! exchange-coupled to two-level qubits. They are deliberately independent
//! of the simulation engine: acceptance tests compare full Lindblad
//! dynamics against these expressions, so nothing here may call into
//! [`crate::dynamics`].
//!
//! All inputs and outputs are plain `/2π` frequencies in MHz (every formula
//! is homogeneous, so any single consistent unit works).

use super::AnalysisError;

/// Dispersive shift χ = g²/Δ of a resonator coupled to a detuned qubit.
///
/// `g` is the exchange coupling and `delta` the qubit–resonator detuning,
/// both in MHz. Errors on zero detuning (the formula is the leading term of
/// an expansion in g/Δ and has no meaning at Δ = 0).
pub fn dispersive_shift(g_mhz: f64, delta_mhz: f64) -> Result<f64, AnalysisError> {
    if delta_mhz == 0.0 {
        return Err(AnalysisError::ZeroDetuning);
    }
    Ok(g_mhz * g_mhz / delta_mhz)
}

/// Cross-resonance oscillation frequency Ω_CR = A·J/(Δ_bd + 2J²/Δ_bd).
///
/// `a` is the drive amplitude seen by the driven qubit, `j` the transverse
/// qubit–qubit coupling, and `delta_bd` the qubit–qubit detuning, all in
/// MHz. A π rotation of the target qubit takes 1/(2Ω_CR).
pub fn cr_frequency(a_mhz: f64, j_mhz: f64, delta_bd_mhz: f64) -> Result<f64, AnalysisError> {
    if delta_bd_mhz == 0.0 {
        return Err(AnalysisError::ZeroDetuning);
    }
    Ok(a_mhz * j_mhz / (delta_bd_mhz + 2.0 * j_mhz * j_mhz / delta_bd_mhz))
}

/// Two-photon bSWAP oscillation frequency Ω_bSWAP = 2A²J/(Δ_bd + 2J²/Δ_bd)².
///
/// Same arguments as [`cr_frequency`]; the rate is quadratic in the drive
/// amplitude because the |00⟩ → |11⟩ transition is a two-photon process.
pub fn bswap_frequency(a_mhz: f64, j_mhz: f64, delta_bd_mhz: f64) -> Result<f64, AnalysisError> {
    if delta_bd_mhz == 0.0 {
        return Err(AnalysisError::ZeroDetuning);
    }
    let denom = delta_bd_mhz + 2.0 * j_mhz * j_mhz / delta_bd_mhz;
    Ok(2.0 * a_mhz * a_mhz * j_mhz / (denom * denom))
}

/// Resonator-mediated virtual-photon exchange J_virt = g_b·g_d·(1/Δ_b + 1/Δ_d)/2.
///
/// Used to check whether an observed qubit–qubit coupling could be mediated
/// by the shared resonator: when one qubit's resonator coupling is
/// negligible, this vanishes and the observed J must be direct.
pub fn virtual_exchange(
    g_b_mhz: f64,
    g_d_mhz: f64,
    delta_b_mhz: f64,
    delta_d_mhz: f64,
) -> Result<f64, AnalysisError> {
    if delta_b_mhz == 0.0 || delta_d_mhz == 0.0 {
        return Err(AnalysisError::ZeroDetuning);
    }
    Ok(0.5 * g_b_mhz * g_d_mhz * (1.0 / delta_b_mhz + 1.0 / delta_d_mhz))
}

/// ac-Stark shift 2n̄χ of a dispersively coupled qubit with `n_bar` photons
/// in the resonator. Positive χ (qubit above the resonator) gives a blue
/// shift that grows linearly with photon number.
pub fn ac_stark(n_bar: f64, chi_mhz: f64) -> f64 {
    2.0 * n_bar * chi_mhz
}

/// Frequency √(Δ_bd² + 4J²) of the weak population exchange between two
/// detuned, transversely coupled qubits (the generalized Rabi frequency of
/// the one-excitation doublet).
pub fn swap_frequency(delta_bd_mhz: f64, j_mhz: f64) -> f64 {
    (delta_bd_mhz * delta_bd_mhz + 4.0 * j_mhz * j_mhz).sqrt()
}

/// Photon number n̄* = Δ_bd/(2χ) at which the linear ac-Stark shift closes a
/// qubit–qubit detuning Δ_bd — the first-order threshold for the
/// Stark-mediated population swap.
pub fn swap_threshold(delta_bd_mhz: f64, chi_mhz: f64) -> Result<f64, AnalysisError> {
    if chi_mhz == 0.0 {
        return Err(AnalysisError::ZeroDetuning);
    }
    Ok(delta_bd_mhz / (2.0 * chi_mhz))
}

/// Exact Jaynes–Cummings ac-Stark shift of the qubit transition with `n`
/// photons present:
///
/// shift(n) = ½·[√(Δ² + 4g²(n+1)) + √(Δ² + 4g²n)] − Δ.
///
/// This is the nonperturbative version of [`ac_stark`]: it reduces to
/// (2n+1)·g²/Δ for g²n ≪ Δ² and grows more slowly at large n because the
/// coupled ladder compresses. Simulations that work near the critical
/// photon number (Δ/2g)² cross resonance at the photon number predicted by
/// this formula, noticeably above the linear estimate Δ_bd/2χ.
pub fn jc_stark_shift(n: f64, g_mhz: f64, delta_mhz: f64) -> f64 {
    let d2 = delta_mhz * delta_mhz;
    0.5 * ((d2 + 4.0 * g_mhz * g_mhz * (n + 1.0)).sqrt() + (d2 + 4.0 * g_mhz * g_mhz * n).sqrt())
        - delta_mhz.abs()
}
