//! Stability certification for ad hoc DC microgrids with constant-power
//! loads.
//!
//! Networks built from tightly regulated power converters draw constant
//! power, whose negative incremental resistance destabilizes DC grids when
//! line inductance is accounted for. This crate certifies transient
//! stability for such networks *without knowing the topology*: it computes
//! per-load capacitance bounds that guarantee the system returns to its
//! stable equilibrium after any admissible single-load switching event, and
//! validates every certificate with a nonlinear transient simulator.
//!
//! # Modules
//!
//! * [`network`] — graph model, incidence structure, and validation of the
//!   design assumptions.
//! * [`equilibrium`] — two-bus closed forms, nose curve, Newton power flow,
//!   and convexity of the resistive co-content.
//! * [`potential`] — the mixed-potential Lyapunov machinery: co-content,
//!   transient terms, decay rate, and the weighting matrix.
//! * [`certify`] — capacitance lower bounds (decay, transient, necessary),
//!   critical loadability, design curves, and whole-network certification.
//! * [`simulate`] — adaptive transient integration of the circuit
//!   equations with switching events, and randomized certificate fuzzing.
//!
//! # Example
//!
//! ```
//! use dcgrid_core::{certify_network, Globals, Line, LoadParams, NetworkSpec, Node};
//!
//! let spec = NetworkSpec::new(
//!     vec![
//!         Node::Source,
//!         Node::Load(LoadParams { p_nominal: 0.05, p_max: 0.1, capacitance: 1.0 }),
//!     ],
//!     vec![Line { from: 0, to: 1, resistance: 1.0, inductance: 0.5 }],
//!     Globals { v0: 1.0, r_max: 1.0, tau_max: 1.0, p_max: 0.1, v_min: 0.75, v_tr: 0.66 },
//! );
//! let report = certify_network(&spec).unwrap();
//! assert!(report.all_certified());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
mod dynamics;
pub mod equilibrium;
pub mod network;
pub mod potential;
pub mod simulate;

#[cfg(test)]
pub(crate) mod testutil;

pub use certify::{
    certify_network, critical_loadability, design_curves, CertificationReport, CertifyError,
    DesignCurveSample, DesignCurves, LoadCertificate, SwitchScenario, TransientBound, Verdict,
};
pub use equilibrium::{
    apex_power, max_loadability, nose_curve, solve_power_flow, two_bus_v_high, two_bus_v_low,
    Classification, EquilibriumError, EquilibriumResult, NoseCurve, NoseSample,
};
pub use network::{
    incidence_matrix, validate, Globals, Line, LoadParams, NetworkSpec, Node, Violation,
};
pub use potential::{
    co_content, co_content_losses_form, potential_sample, PotentialError, PotentialSample,
    SystemState,
};
pub use simulate::{
    integrate, simulate_from_equilibrium, verify_certificate, FuzzReport, IntegrateOptions,
    Outcome, SimulateError, SwitchingEvent, Trajectory,
};
