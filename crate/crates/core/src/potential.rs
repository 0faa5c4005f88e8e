//! The Brayton-Moser machinery: resistive co-content, the mixed potential
//! with its transient terms, the decay rate, and the weighting matrix whose
//! definiteness certifies that the potential is a Lyapunov function.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dynamics::state_derivative;
use crate::equilibrium::{co_content_gradient, EquilibriumResult};
use crate::network::{load_incidence, NetworkSpec};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PotentialError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("voltage profile is not an equilibrium (residual {residual:.3e})")]
    NotAtEquilibrium { residual: f64 },
}

/// Instantaneous electrical state: load voltages and line currents.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// Load-bus voltages on the load axis, volts. Must stay positive.
    pub v_loads: DVector<f64>,
    /// Line currents in declared edge order, amperes.
    pub i_lines: DVector<f64>,
    /// Seconds.
    pub time: f64,
}

/// The potential machinery evaluated at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSample {
    /// Resistive co-content.
    pub g: f64,
    /// Mixed potential: co-content plus the quadratic transient terms.
    pub p_total: f64,
    /// Decay rate of the mixed potential along the flow.
    pub p_dot: f64,
    /// Whether the weighting matrix is positive definite at this state, so
    /// `p_dot <= 0` is guaranteed.
    pub q_definite: bool,
}

/// Resistive co-content: line losses integrated over voltage drops plus the
/// logarithmic load terms,
/// `sum (v_i - v_j)^2 / (2 R_ij) + sum p_k log v_k`.
pub fn co_content(
    spec: &NetworkSpec,
    v_full: &DVector<f64>,
    p: &[f64],
) -> Result<f64, PotentialError> {
    let mut g = 0.0;
    for e in spec.edges() {
        let d = v_full[e.from] - v_full[e.to];
        g += d * d / (2.0 * e.resistance);
    }
    for (col, (node, _)) in spec.loads().enumerate() {
        let v = v_full[node];
        if !(v > 0.0) {
            return Err(PotentialError::Domain(format!(
                "non-positive voltage {v} at load {node}"
            )));
        }
        g += p[col] * v.ln();
    }
    Ok(g)
}

/// Co-content expressed through per-load injections,
/// `sum p_i (v0 - v_i) / (2 v_i) + p_i log v_i`.
///
/// Valid only at an equilibrium, where line losses equal the source energy
/// balance; rejects profiles whose power-flow residual is out of tolerance.
pub fn co_content_losses_form(
    spec: &NetworkSpec,
    eq: &EquilibriumResult,
    p: &[f64],
) -> Result<f64, PotentialError> {
    let tol = 100.0 * crate::equilibrium::residual_tolerance(spec);
    let residual = co_content_gradient(spec, &eq.v_sep, p).amax();
    if residual > tol {
        return Err(PotentialError::NotAtEquilibrium { residual });
    }
    let mut g = 0.0;
    for (col, (node, _)) in spec.loads().enumerate() {
        let v = eq.v_sep[node];
        if !(v > 0.0) {
            return Err(PotentialError::Domain(format!(
                "non-positive voltage {v} at load {node}"
            )));
        }
        g += p[col] / v * (spec.v0() - v) / 2.0 + p[col] * v.ln();
    }
    Ok(g)
}

/// Evaluate the mixed potential, its decay rate, and the definiteness flag
/// at a state under load powers `p`.
///
/// The transient terms use the derivatives of the actual flow:
/// `P = G + 1/2 sum (tau_max - tau_a) L_a (di_a)^2 + tau_max/2 sum C_k (dv_k)^2`,
/// and the decay rate comes from the quadratic form of the weighting matrix,
/// whose antisymmetric off-diagonal blocks drop out:
/// `Pdot = -sum (tau_max R_a - L_a) (di_a)^2 - sum (C_k - tau_max p_k / v_k^2) (dv_k)^2`.
pub fn potential_sample(
    spec: &NetworkSpec,
    state: &SystemState,
    p: &[f64],
) -> Result<PotentialSample, PotentialError> {
    let (di, dv) = state_derivative(spec, state, p)
        .ok_or_else(|| PotentialError::Domain("non-positive load voltage".to_string()))?;
    let v_full = crate::equilibrium::full_voltage(spec, &state.v_loads);
    let g = co_content(spec, &v_full, p)?;

    let tau_max = spec.tau_max();
    let mut transient = 0.0;
    let mut dissipation = 0.0;
    for (a, e) in spec.edges().iter().enumerate() {
        let tau = e.time_constant();
        transient += 0.5 * (tau_max - tau) * e.inductance * di[a] * di[a];
        dissipation += (tau_max * e.resistance - e.inductance) * di[a] * di[a];
    }
    let mut definite = spec
        .edges()
        .iter()
        .all(|e| tau_max * e.resistance - e.inductance > 0.0);
    for (col, (_, load)) in spec.loads().enumerate() {
        let v = state.v_loads[col];
        transient += 0.5 * tau_max * load.capacitance * dv[col] * dv[col];
        let weight = load.capacitance - tau_max * p[col] / (v * v);
        dissipation += weight * dv[col] * dv[col];
        definite &= weight > 0.0;
    }

    Ok(PotentialSample {
        g,
        p_total: g + transient,
        p_dot: -dissipation,
        q_definite: definite,
    })
}

/// Decay rate alone, skipping the co-content evaluation; used by the
/// integrator when sampling the rate inside accepted steps.
pub(crate) fn decay_rate(spec: &NetworkSpec, state: &SystemState, p: &[f64]) -> Option<f64> {
    let (di, dv) = state_derivative(spec, state, p)?;
    let tau_max = spec.tau_max();
    let mut dissipation = 0.0;
    for (a, e) in spec.edges().iter().enumerate() {
        dissipation += (tau_max * e.resistance - e.inductance) * di[a] * di[a];
    }
    for (col, (_, load)) in spec.loads().enumerate() {
        let v = state.v_loads[col];
        dissipation += (load.capacitance - tau_max * p[col] / (v * v)) * dv[col] * dv[col];
    }
    Some(-dissipation)
}

/// The weighting matrix of the quasi-gradient form, blockwise:
/// `[[diag(tau_max R_a - L_a), -tau_max incidence_L],
///   [tau_max incidence_L^T,   diag(C_k - tau_max p_k / v_k^2)]]`.
pub fn q_matrix(
    spec: &NetworkSpec,
    state: &SystemState,
    p: &[f64],
) -> Result<DMatrix<f64>, PotentialError> {
    let n_e = spec.edge_count();
    let n_l = spec.load_count();
    if state.v_loads.iter().any(|&v| !(v > 0.0)) {
        return Err(PotentialError::Domain(
            "non-positive load voltage".to_string(),
        ));
    }
    let tau_max = spec.tau_max();
    let nabla_l = load_incidence(spec);
    let mut q = DMatrix::zeros(n_e + n_l, n_e + n_l);
    for (a, e) in spec.edges().iter().enumerate() {
        q[(a, a)] = tau_max * e.resistance - e.inductance;
    }
    for a in 0..n_e {
        for k in 0..n_l {
            q[(a, n_e + k)] = -tau_max * nabla_l[(a, k)];
            q[(n_e + k, a)] = tau_max * nabla_l[(a, k)];
        }
    }
    for (col, (_, load)) in spec.loads().enumerate() {
        let v = state.v_loads[col];
        q[(n_e + col, n_e + col)] = load.capacitance - tau_max * p[col] / (v * v);
    }
    Ok(q)
}

/// Positive definiteness of the weighting matrix.
///
/// The off-diagonal blocks are antisymmetric, so they vanish in the
/// quadratic form; the matrix is definite exactly when every diagonal entry
/// is strictly positive.
pub fn q_positive_definite(
    spec: &NetworkSpec,
    state: &SystemState,
    p: &[f64],
) -> Result<bool, PotentialError> {
    if state.v_loads.iter().any(|&v| !(v > 0.0)) {
        return Err(PotentialError::Domain(
            "non-positive load voltage".to_string(),
        ));
    }
    let tau_max = spec.tau_max();
    let lines_ok = spec
        .edges()
        .iter()
        .all(|e| tau_max * e.resistance - e.inductance > 0.0);
    let loads_ok = spec.loads().enumerate().all(|(col, (_, load))| {
        let v = state.v_loads[col];
        load.capacitance - tau_max * p[col] / (v * v) > 0.0
    });
    Ok(lines_ok && loads_ok)
}
