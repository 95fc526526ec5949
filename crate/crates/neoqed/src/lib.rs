//! # neoqed
//!
//! A simulation engine for driven, dissipative coupled qubit/resonator
//! systems of the kind realized by single electrons trapped on solid neon:
//! one microwave resonator mode exchange-coupled to N two-level qubits, with
//! transverse qubit–qubit coupling, microwave drives, and Lindblad-type
//! relaxation and dephasing.
//!
//! The crate is organized as a small stack of layers:
//!
//! * [`units`] — the single place where quoted GHz/MHz frequencies are
//!   converted to the internal angular rad/µs convention.
//! * [`operator`] — dense complex operator algebra on tensor-product Hilbert
//!   spaces (ladder/Pauli operators, embedding, Hermitian eigensolves,
//!   density matrices).
//! * [`model`] — declarative [`model::SystemSpec`] and builders that turn it
//!   into lab-frame or rotating-frame Hamiltonians, drive terms, and
//!   collapse operators.
//! * [`dynamics`] — Lindblad master-equation integration (adaptive
//!   Dormand–Prince 5(4) or fixed-step RK4) with trajectory recording and
//!   numerical-sanity validation.
//! * [`protocols`] — the measurement protocols built from the layers below:
//!   two-tone and pulsed spectroscopy, length/amplitude Rabi maps, readout
//!   swap, relaxation, Ramsey, and gate-voltage eigen-diagrams.
//! * [`analysis`] — closed-form cross-check oracles, nonlinear
//!   least-squares fits, and feature extraction (avoided crossings,
//!   oscillation counting).
//! * [`config`], [`presets`], [`output`], [`cli`] — declarative experiment
//!   configuration, shipped parameter sets, stable on-disk result formats,
//!   and the command-line front end.
//!
//! Most users should start from the runnable programs in `examples/`, each
//! of which exercises one capability end to end, or from a shipped preset:
//!
//! ```text
//! use neoqed::presets;
//!
//! let config = presets::load("two_qubit_tableS1").unwrap();
//! assert_eq!(config.system.qubits.len(), 2);
//! ```

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod model;
pub mod operator;
pub mod output;
pub mod presets;
pub mod protocols;
pub mod units;

/// Convenient re-exports of the types used by almost every caller.
pub mod prelude {
    pub use crate::analysis::fit::{fit_damped_sinusoid, fit_exponential, fit_multi_frequency};
    pub use crate::analysis::oracles;
    pub use crate::config::ExperimentConfig;
    pub use crate::dynamics::{evolve, IntegratorConfig, Trajectory, ValidationLevel};
    pub use crate::model::{
        CouplingSpec, DriveSpec, PulseEnvelope, QubitSpec, ResonatorSpec, SystemSpec,
    };
    pub use crate::operator::{C64, DensityMatrix, HilbertSpace, Operator, Pauli};
    pub use crate::protocols::SweepResult;
}
