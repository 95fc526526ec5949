//! Bundled, ready-to-run experiment configurations.
//!
//! Every preset is a complete TOML document (see [`crate::config`]) and
//! doubles as worked documentation of the format. `neoqed presets list`
//! enumerates them; `neoqed presets show <name>` prints the TOML, which
//! can be redirected to a file, edited, and run with `neoqed run`.
//!
//! The catalog models one published two-qubit device (a strongly coupled
//! "bright" qubit Qb and a resonator-decoupled "dark" qubit Qd sharing a
//! 5.668 GHz readout mode, exchange-coupled at J = 3.35 MHz) and one
//! three-qubit device. Presets whose sections are not fixed by measured
//! device tables say so in their comments.

use crate::config::{parse_config, ConfigError, ExperimentConfig};

/// One bundled configuration.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    /// Catalog name, as accepted by `presets show` and `run --preset`.
    pub name: &'static str,
    /// One-line description for `presets list`.
    pub summary: &'static str,
    /// The complete TOML document.
    pub toml: &'static str,
}

/// The full catalog, in display order.
pub fn all() -> &'static [Preset] {
    &[
        Preset {
            name: "two_qubit_tableS1",
            summary: "Two-qubit device: cross-resonance Rabi chevron at the calibrated π anchor",
            toml: include_str!("../presets/two_qubit_tableS1.toml"),
        },
        Preset {
            name: "three_qubit_tableS2",
            summary: "Three-qubit device: eigenfrequency diagram vs gate voltage",
            toml: include_str!("../presets/three_qubit_tableS2.toml"),
        },
        Preset {
            name: "avoided_crossing",
            summary: "Two-tone spectroscopy through the qubit-qubit avoided crossing",
            toml: include_str!("../presets/avoided_crossing.toml"),
        },
        Preset {
            name: "power_spectroscopy",
            summary: "Pulsed spectroscopy vs drive power (two-photon line emerges)",
            toml: include_str!("../presets/power_spectroscopy.toml"),
        },
        Preset {
            name: "readout_swap",
            summary: "Readout-induced excitation swap at 5.6/10/18 MHz probe amplitudes",
            toml: include_str!("../presets/readout_swap.toml"),
        },
        Preset {
            name: "waterfall_gaussian",
            summary: "Gaussian-envelope amplitude-Rabi waterfall (phase reversals)",
            toml: include_str!("../presets/waterfall_gaussian.toml"),
        },
        Preset {
            name: "waterfall_square",
            summary: "Square-envelope amplitude-Rabi waterfall (red-shifted two-photon stripe)",
            toml: include_str!("../presets/waterfall_square.toml"),
        },
        Preset {
            name: "relaxation_qb",
            summary: "Bright-qubit T1 relaxation (fits to 1.81 µs)",
            toml: include_str!("../presets/relaxation_qb.toml"),
        },
        Preset {
            name: "ramsey_qd",
            summary: "Dark-qubit Ramsey fringes (T2* ≈ 33 µs, single frequency)",
            toml: include_str!("../presets/ramsey_qd.toml"),
        },
    ]
}

/// Look a preset up by name.
pub fn find(name: &str) -> Option<&'static Preset> {
    all().iter().find(|p| p.name == name)
}

/// Parse and validate a preset into a runnable config.
pub fn load(name: &str) -> Result<ExperimentConfig, ConfigError> {
    let preset = find(name).ok_or_else(|| {
        ConfigError::Invalid(vec![format!(
            "no preset named `{name}` (available: {})",
            all()
                .iter()
                .map(|p| p.name)
                .collect::<Vec<_>>()
                .join(", ")
        )])
    })?;
    parse_config(preset.toml)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ProtocolConfig, SCHEMA_VERSION};

    #[test]
    fn every_preset_parses_and_validates() {
        for preset in all() {
            let cfg = load(preset.name)
                .unwrap_or_else(|e| panic!("preset {} rejected: {e}", preset.name));
            assert_eq!(cfg.schema_version, SCHEMA_VERSION);
            assert!(cfg.estimated_cells() > 0, "{}", preset.name);
        }
    }

    #[test]
    fn roundtrip_is_identity_on_every_preset() {
        for preset in all() {
            let cfg = load(preset.name).unwrap();
            let cfg2 = parse_config(&cfg.to_toml())
                .unwrap_or_else(|e| panic!("{} re-parse failed: {e}", preset.name));
            assert_eq!(
                serde_json::to_value(&cfg).unwrap(),
                serde_json::to_value(&cfg2).unwrap(),
                "round-trip changed preset {}",
                preset.name
            );
        }
    }

    #[test]
    fn names_are_unique_and_findable() {
        let names: Vec<_> = all().iter().map(|p| p.name).collect();
        let mut deduped = names.clone();
        deduped.sort();
        deduped.dedup();
        assert_eq!(deduped.len(), names.len());
        assert!(find("two_qubit_tableS1").is_some());
        assert!(find("nonexistent").is_none());
        assert!(load("nonexistent").is_err());
    }

    #[test]
    fn two_qubit_preset_carries_the_device_table() {
        let cfg = load("two_qubit_tableS1").unwrap();
        let s = &cfg.system;
        assert_eq!(s.resonator.omega_ghz, 5.668);
        assert_eq!(s.resonator.kappa_mhz, 0.38);
        let qb = &s.qubits[0];
        let qd = &s.qubits[1];
        assert_eq!(qb.omega_ghz, 5.7112);
        assert_eq!(qb.g_mhz, 3.76);
        assert_eq!(qb.gamma1_mhz, 0.088);
        assert_eq!(qb.gamma_phi_mhz, 0.036);
        assert_eq!(qd.omega_ghz, 5.7255);
        assert_eq!(qd.g_mhz, 0.0);
        assert_eq!(qd.gamma1_mhz, 0.0053);
        assert_eq!(qd.gamma_phi_mhz, 0.0044);
        assert_eq!(s.couplings[0].j_mhz, 3.35);
        // The dBm amplitude resolves to the calibrated π-anchor value.
        let amps = cfg.resolved_amplitudes_mhz();
        let a = amps["drive_amplitude_mhz"][0];
        assert!((a - 2.961).abs() < 1e-9, "resolved {a}");
    }

    #[test]
    fn three_qubit_preset_carries_the_device_table() {
        let cfg = load("three_qubit_tableS2").unwrap();
        let s = &cfg.system;
        assert_eq!(s.qubits.len(), 3);
        assert_eq!(s.couplings[0].j_mhz, 62.5);
        assert_eq!(s.couplings[1].j_mhz, 5.0);
        match &cfg.protocol {
            ProtocolConfig::EigenDiagram(p) => {
                let t = &p.tuning.qubits;
                assert_eq!(t[0].alpha_ghz, 6.130);
                assert_eq!(t[1].alpha_ghz, 6.135);
                assert_eq!(t[2].alpha_ghz, 5.915);
                assert_eq!(t[0].beta_ghz_per_mv, 1.325);
                assert_eq!(t[1].beta_ghz_per_mv, 0.218);
                assert_eq!(t[2].beta_ghz_per_mv, 1.30);
                assert_eq!(t[1].delta_mv, -4.0);
            }
            other => panic!("unexpected protocol {}", other.name()),
        }
    }
}
