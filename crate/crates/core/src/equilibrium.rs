//! Equilibrium power flow: closed two-bus forms, the nose curve, a Newton
//! solver for the high-voltage equilibrium of arbitrary networks, and
//! convexity checks of the resistive co-content.
//!
//! The co-content is strictly convex on the domain where every load voltage
//! stays above `v0/2` and the total load is below the apex, so Newton
//! started from a flat profile converges to the unique high-voltage
//! equilibrium.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::network::{incidence_matrix, NetworkSpec};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EquilibriumError {
    #[error("power {p} exceeds the loadability apex {apex}")]
    InfeasiblePower { p: f64, apex: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "Newton iteration did not converge after {iterations} steps (residual {residual:.3e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },
}

/// Maximum power a single line of resistance `r` fed at `v0` can deliver:
/// the apex of the nose curve, `v0^2 / (4 r)`.
pub fn apex_power(r: f64, v0: f64) -> f64 {
    v0 * v0 / (4.0 * r)
}

/// High-voltage equilibrium of the two-bus system, `v0/2 (1 + sqrt(1 - p/P0))`.
pub fn two_bus_v_high(p: f64, r: f64, v0: f64) -> Result<f64, EquilibriumError> {
    two_bus_branch(p, r, v0, 1.0)
}

/// Low-voltage equilibrium of the two-bus system, `v0/2 (1 - sqrt(1 - p/P0))`.
pub fn two_bus_v_low(p: f64, r: f64, v0: f64) -> Result<f64, EquilibriumError> {
    two_bus_branch(p, r, v0, -1.0)
}

fn two_bus_branch(p: f64, r: f64, v0: f64, sign: f64) -> Result<f64, EquilibriumError> {
    if p < 0.0 {
        return Err(EquilibriumError::Domain(format!("negative power {p}")));
    }
    let apex = apex_power(r, v0);
    if p > apex {
        return Err(EquilibriumError::InfeasiblePower { p, apex });
    }
    let s = (1.0 - p / apex).max(0.0).sqrt();
    Ok(v0 / 2.0 * (1.0 + sign * s))
}

/// Largest total load for which an equilibrium with every bus at or above
/// `v_min` exists in any admissible topology: `v_min (v0 - v_min) / r_max`.
pub fn max_loadability(v_min: f64, v0: f64, r_max: f64) -> Result<f64, EquilibriumError> {
    if !(v0 / 2.0 <= v_min && v_min < v0) {
        return Err(EquilibriumError::Domain(format!(
            "v_min {v_min} outside [v0/2, v0) for v0 {v0}"
        )));
    }
    Ok(v_min * (v0 - v_min) / r_max)
}

/// Which equilibrium branch a solved operating point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Every load voltage exceeds the two-bus high branch at the same total
    /// load and the full resistance budget; this is the unique stable
    /// equilibrium.
    HighVoltage,
    LowVoltageOrOther,
}

/// A solved operating point.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    /// Voltage at every bus, sources pinned at `v0`.
    pub v_sep: DVector<f64>,
    /// Current on every line, `diag(1/R) * incidence * v_sep`.
    pub i_sep: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Infinity norm of the co-content gradient at the solution.
    pub residual_norm: f64,
    pub classification: Classification,
}

impl EquilibriumResult {
    /// Load-bus voltages on the load axis.
    pub fn load_voltages(&self, spec: &NetworkSpec) -> DVector<f64> {
        DVector::from_iterator(
            spec.load_count(),
            spec.load_nodes().iter().map(|&k| self.v_sep[k]),
        )
    }
}

/// Gradient of the co-content with respect to the load voltages, evaluated
/// at a full voltage profile. Zero exactly at power-flow solutions.
pub(crate) fn co_content_gradient(
    spec: &NetworkSpec,
    v_full: &DVector<f64>,
    p: &[f64],
) -> DVector<f64> {
    let loads = spec.load_nodes();
    let mut g = DVector::zeros(loads.len());
    for (col, &node) in loads.iter().enumerate() {
        g[col] = p[col] / v_full[node];
    }
    for e in spec.edges() {
        let flow = (v_full[e.from] - v_full[e.to]) / e.resistance;
        if let Some(col) = spec.load_position(e.from) {
            g[col] += flow;
        }
        if let Some(col) = spec.load_position(e.to) {
            g[col] -= flow;
        }
    }
    g
}

pub(crate) fn full_voltage(spec: &NetworkSpec, v_loads: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::from_element(spec.node_count(), spec.v0());
    for (col, &node) in spec.load_nodes().iter().enumerate() {
        v[node] = v_loads[col];
    }
    v
}

/// Newton convergence threshold; the residual has units of current, so the
/// threshold is scaled by `p_max / v0`.
pub(crate) fn residual_tolerance(spec: &NetworkSpec) -> f64 {
    1e-10 * spec.p_max() / spec.v0()
}

const MAX_NEWTON_ITERATIONS: usize = 100;

/// Solve the equilibrium power-flow equations for the load powers `p`
/// (load-axis order).
///
/// Newton iteration on the load voltages from a flat start `v = v0`,
/// minimizing the co-content on its convexity domain; steps are halved if
/// an iterate would leave `v > v0/2`.
pub fn solve_power_flow(
    spec: &NetworkSpec,
    p: &[f64],
) -> Result<EquilibriumResult, EquilibriumError> {
    let n_loads = spec.load_count();
    if p.len() != n_loads {
        return Err(EquilibriumError::Domain(format!(
            "power vector has {} entries for {} loads",
            p.len(),
            n_loads
        )));
    }
    if let Some(bad) = p.iter().find(|&&x| !(x >= 0.0)) {
        return Err(EquilibriumError::Domain(format!(
            "negative load power {bad}"
        )));
    }
    let p_sigma: f64 = p.iter().sum();
    let apex = apex_power(spec.r_max(), spec.v0());
    if p_sigma > apex {
        return Err(EquilibriumError::InfeasiblePower { p: p_sigma, apex });
    }
    if p_sigma > spec.p_max() * (1.0 + 1e-12) {
        return Err(EquilibriumError::Domain(format!(
            "total power {p_sigma} exceeds the system bound {}",
            spec.p_max()
        )));
    }

    let tol = residual_tolerance(spec);
    let floor = spec.v0() / 2.0;
    let mut v_loads = DVector::from_element(n_loads, spec.v0());
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    for iter in 0..=MAX_NEWTON_ITERATIONS {
        let v_full = full_voltage(spec, &v_loads);
        let g = co_content_gradient(spec, &v_full, p);
        residual = g.amax();
        iterations = iter;
        if residual <= tol {
            converged = true;
            break;
        }
        if iter == MAX_NEWTON_ITERATIONS {
            break;
        }
        let h = co_content_hessian(spec, &v_full, p)?;
        let mut step = h
            .lu()
            .solve(&(-&g))
            .ok_or(EquilibriumError::NonConvergence {
                iterations: iter,
                residual,
            })?;
        let mut halvings = 0;
        while v_loads
            .iter()
            .zip(step.iter())
            .any(|(v, d)| !(v + d).is_finite() || v + d <= floor)
        {
            step *= 0.5;
            halvings += 1;
            if halvings > 80 {
                return Err(EquilibriumError::NonConvergence {
                    iterations: iter,
                    residual,
                });
            }
        }
        v_loads += step;
    }

    if !converged {
        return Err(EquilibriumError::NonConvergence {
            iterations,
            residual,
        });
    }

    let v_sep = full_voltage(spec, &v_loads);
    let nabla = incidence_matrix(spec);
    let mut i_sep = &nabla * &v_sep;
    for (a, e) in spec.edges().iter().enumerate() {
        i_sep[a] /= e.resistance;
    }

    let v_floor = two_bus_v_high(p_sigma.min(apex), spec.r_max(), spec.v0())?;
    let high = spec
        .load_nodes()
        .iter()
        .all(|&k| v_sep[k] > v_floor - 1e-9 * spec.v0());
    Ok(EquilibriumResult {
        v_sep,
        i_sep,
        converged,
        iterations,
        residual_norm: residual,
        classification: if high {
            Classification::HighVoltage
        } else {
            Classification::LowVoltageOrOther
        },
    })
}

/// One point of the nose curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoseSample {
    pub p: f64,
    pub v_high: f64,
    pub v_low: f64,
}

/// Equilibrium load voltage against load power for the two-bus system, both
/// branches, swept from no load to the apex.
#[derive(Debug, Clone, PartialEq)]
pub struct NoseCurve {
    pub samples: Vec<NoseSample>,
    /// Apex power `v0^2 / (4 r)`; the last sample sits exactly there.
    pub p0: f64,
}

pub fn nose_curve(r: f64, v0: f64, n: usize) -> NoseCurve {
    assert!(n >= 2, "nose curve needs at least two samples");
    let p0 = apex_power(r, v0);
    let samples = (0..n)
        .map(|i| {
            let p = if i + 1 == n {
                p0
            } else {
                p0 * i as f64 / (n - 1) as f64
            };
            NoseSample {
                p,
                v_high: two_bus_v_high(p, r, v0).expect("p <= p0"),
                v_low: two_bus_v_low(p, r, v0).expect("p <= p0"),
            }
        })
        .collect();
    NoseCurve { samples, p0 }
}

/// Hessian of the co-content over the load voltages: the weighted graph
/// Laplacian restricted to loads minus `diag(p_k / v_k^2)`.
pub fn co_content_hessian(
    spec: &NetworkSpec,
    v_full: &DVector<f64>,
    p: &[f64],
) -> Result<DMatrix<f64>, EquilibriumError> {
    let loads = spec.load_nodes();
    for (col, &node) in loads.iter().enumerate() {
        if !(v_full[node] > 0.0) {
            return Err(EquilibriumError::Domain(format!(
                "non-positive voltage {} at load {}",
                v_full[node], node
            )));
        }
        debug_assert!(col < p.len());
    }
    let mut h = DMatrix::zeros(loads.len(), loads.len());
    for e in spec.edges() {
        let w = 1.0 / e.resistance;
        let a = spec.load_position(e.from);
        let b = spec.load_position(e.to);
        if let Some(i) = a {
            h[(i, i)] += w;
        }
        if let Some(j) = b {
            h[(j, j)] += w;
        }
        if let (Some(i), Some(j)) = (a, b) {
            h[(i, j)] -= w;
            h[(j, i)] -= w;
        }
    }
    for (col, &node) in loads.iter().enumerate() {
        let v = v_full[node];
        h[(col, col)] -= p[col] / (v * v);
    }
    Ok(h)
}

/// Positive definiteness of the co-content Hessian at a voltage profile.
/// The smallest eigenvalue must exceed `1e-12` times the largest.
pub fn is_convex_at(
    spec: &NetworkSpec,
    v_full: &DVector<f64>,
    p: &[f64],
) -> Result<bool, EquilibriumError> {
    let h = co_content_hessian(spec, v_full, p)?;
    if h.nrows() == 0 {
        return Ok(true);
    }
    let eig = h.symmetric_eigenvalues();
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min > 1e-12 * max)
}
