//! Frequency-unit conventions and conversions.
//!
//! Every public interface in this crate quotes frequencies the way they are
//! quoted on hardware: *ordinary* (non-angular) frequencies `f = ω/2π`, with
//! carrier frequencies in **GHz** and couplings, linewidths, rates, and
//! drive amplitudes in **MHz**. Internally, Hamiltonian matrix elements and
//! collapse rates are *angular* frequencies in **rad/µs**, and time is in
//! **µs**.
//!
//! The functions below are the only place the factor of 2π (and the 10³
//! GHz→MHz step) enters the codebase; everything else passes angular values
//! around. The pleasant numerical coincidence `1 MHz ↔ 2π rad/µs` keeps the
//! internal numbers O(1)–O(10⁴) across all shipped systems.

/// 2π.
pub const TAU: f64 = std::f64::consts::TAU;

/// Convert an ordinary frequency in GHz (e.g. a qubit or resonator
/// transition frequency) to angular rad/µs.
#[inline]
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    TAU * 1.0e3 * f_ghz
}

/// Convert an ordinary frequency in MHz (couplings, rates, linewidths,
/// drive amplitudes) to angular rad/µs.
#[inline]
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Inverse of [`mhz_to_angular`]: angular rad/µs back to ordinary MHz.
#[inline]
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / TAU
}

/// Inverse of [`ghz_to_angular`]: angular rad/µs back to ordinary GHz.
#[inline]
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / (TAU * 1.0e3)
}

/// Difference of two GHz-quoted frequencies, expressed in MHz.
///
/// Detunings between ~5.7 GHz carriers are MHz-scale; computing them in GHz
/// and converting keeps the subtraction in the callers readable.
#[inline]
pub fn detuning_mhz(f_a_ghz: f64, f_b_ghz: f64) -> f64 {
    (f_a_ghz - f_b_ghz) * 1.0e3
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ghz_roundtrip() {
        let w = ghz_to_angular(5.7112);
        assert_relative_eq!(w, TAU * 5711.2, max_relative = 1e-15);
        assert_relative_eq!(angular_to_ghz(w), 5.7112, max_relative = 1e-15);
    }

    #[test]
    fn mhz_roundtrip() {
        let w = mhz_to_angular(3.35);
        assert_relative_eq!(w, TAU * 3.35, max_relative = 1e-15);
        assert_relative_eq!(angular_to_mhz(w), 3.35, max_relative = 1e-15);
    }

    #[test]
    fn one_mhz_is_tau_rad_per_us() {
        assert_relative_eq!(mhz_to_angular(1.0), TAU, max_relative = 1e-15);
    }

    #[test]
    fn ghz_is_thousand_mhz() {
        assert_relative_eq!(
            ghz_to_angular(1.0),
            mhz_to_angular(1000.0),
            max_relative = 1e-15
        );
    }

    #[test]
    fn detunings_in_mhz() {
        // 5.7255 GHz − 5.7112 GHz = 14.3 MHz.
        assert_relative_eq!(detuning_mhz(5.7255, 5.7112), 14.3, max_relative = 1e-9);
    }

    /// A relaxation rate of Γ/2π = 0.088 MHz must correspond to
    /// T1 = 1/Γ = 1.8086 µs under these conventions.
    #[test]
    fn rate_to_lifetime_convention() {
        let gamma = mhz_to_angular(0.088); // rad/µs
        assert_relative_eq!(1.0 / gamma, 1.8086, max_relative = 1e-4);
    }
}
