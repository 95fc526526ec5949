//! Relaxation (T₁) and Ramsey (T₂*) experiments with curve fits.
//!
//! Runs the textbook decoherence measurements on both qubits of the
//! two-qubit device: π-pulse → wait → measure for T₁, and
//! π/2 → wait → π/2 at a detuned drive for the Ramsey fringe. The decay
//! constants fitted from the simulated curves must land on the rates the
//! device table puts in (T₁ = 1/Γ₁, 1/T₂* = Γ₁/2 + Γ_φ/2), which closes
//! the loop between the Lindblad channels and what an experiment reports.
//!
//! ```text
//! cargo run --release --example decoherence
//! ```

use neoqed::analysis::fit::{fit_damped_sinusoid, fit_exponential, fit_multi_frequency};
use neoqed::presets;
use neoqed::protocols::{ramsey_experiment, relaxation_experiment, RamseyOptions, RelaxationOptions};
use neoqed::units::TAU;

fn main() {
    let system = presets::load("two_qubit_tableS1").unwrap().system;

    println!("Decoherence of the two-qubit device");
    println!("===================================");

    for (i, q) in system.qubits.iter().enumerate() {
        // Expected constants from the Lindblad rates (quoted as Γ/2π in
        // MHz, so lifetimes are 1/(2π·Γ_MHz) µs).
        let t1 = 1.0 / (TAU * q.gamma1_mhz);
        let t2 = 2.0 / (TAU * (q.gamma1_mhz + q.gamma_phi_mhz));

        let delays: Vec<f64> = (0..81).map(|k| k as f64 * (4.0 * t1 / 80.0)).collect();
        let curve = relaxation_experiment(&system, i, &delays, &RelaxationOptions::default())
            .expect("relaxation runs");
        let fit = fit_exponential(&curve.delay_us, &curve.population).expect("decay fits");
        let tau = fit.value("tau").unwrap();
        println!(
            "{}:  T1 fit {:7.3} µs   (1/Γ1 = {:7.3} µs, deviation {:+.2}%)",
            curve.qubit,
            tau,
            t1,
            (tau / t1 - 1.0) * 100.0
        );

        // Ramsey at a 0.25 MHz detuning: fringes at the detuning, envelope
        // decaying with T2*.
        let detuning = 0.25;
        let delays: Vec<f64> = (0..201).map(|k| k as f64 * (2.0 * t2 / 200.0)).collect();
        let fringe = ramsey_experiment(&system, i, detuning, &delays, &RamseyOptions::default())
            .expect("ramsey runs");
        let fit =
            fit_damped_sinusoid(&fringe.delay_us, &fringe.population).expect("fringe fits");
        let f_fit = fit.value("frequency").unwrap();
        let t2_fit = fit.value("tau").unwrap();
        println!(
            "{}:  T2* fit {:6.2} µs   (2/(Γ1+Γφ) = {:6.2} µs, deviation {:+.2}%)   fringe {:.4} MHz (set {:.2})",
            fringe.qubit,
            t2_fit,
            t2,
            (t2_fit / t2 - 1.0) * 100.0,
            f_fit,
            detuning
        );

        // A two-frequency fit should NOT beat the single-frequency fit in
        // any meaningful way: an isolated qubit shows one fringe frequency.
        // (Beating appears only when a drive addresses both hybridized
        // qubits at once.)
        if let Ok(two) = fit_multi_frequency(&fringe.delay_us, &fringe.population, 2) {
            let a1 = two.value("amplitude_1").unwrap().abs();
            let a2 = two.value("amplitude_2").unwrap().abs();
            let minor = a2.min(a1) / a2.max(a1);
            println!("{}:  second-tone amplitude ratio {minor:.4} (≪ 1 ⇒ no beating)", fringe.qubit);
        }
        println!();
    }
}
