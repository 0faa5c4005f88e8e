//! Capacitance sizing bounds and network certification.
//!
//! Three bounds matter for each load with switching magnitude `p`:
//!
//! * the decay bound `tau_max p / v_tr^2`, which makes the mixed potential
//!   a strictly decreasing Lyapunov function above `v_tr`;
//! * the transient bound, the worst case over admissible switching
//!   scenarios of the capacitance that keeps the post-switch potential
//!   inside the largest invariant sublevel set above `v_tr`;
//! * the necessary bound `tau_max p / v_min^2`, below which even small
//!   disturbances destabilize a two-bus system.
//!
//! Installing more than the first two certifies the network for any
//! admissible topology; falling below the third rules it out.

mod optim;

use thiserror::Error;

use crate::equilibrium::{apex_power, max_loadability, two_bus_v_high};
use crate::network::{validate, NetworkSpec, Violation};
use optim::maximize_box_band;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CertifyError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("power {p} exceeds the loadability apex {apex}")]
    InfeasiblePower { p: f64, apex: f64 },
    #[error("network fails validation with {} violation(s)", .0.len())]
    InvalidSpec(Vec<Violation>),
}

/// A total-load switching scenario: the aggregate load just before and just
/// after the switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchScenario {
    pub p_sigma_minus: f64,
    pub p_sigma_plus: f64,
}

/// Result of a transient capacitance bound: a finite requirement with the
/// scenario that attains it, or the finding that no capacitance certifies.
///
/// `Uncertifiable` is a value, not an error; design curves plot it as a
/// divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransientBound {
    Finite {
        capacitance: f64,
        scenario: SwitchScenario,
    },
    Uncertifiable,
}

impl TransientBound {
    pub fn capacitance(&self) -> Option<f64> {
        match self {
            TransientBound::Finite { capacitance, .. } => Some(*capacitance),
            TransientBound::Uncertifiable => None,
        }
    }

    /// The bound as a plain number, `inf` when uncertifiable.
    pub fn as_f64(&self) -> f64 {
        self.capacitance().unwrap_or(f64::INFINITY)
    }

    pub fn is_uncertifiable(&self) -> bool {
        matches!(self, TransientBound::Uncertifiable)
    }
}

/// Capacitance above which the mixed potential decays everywhere in the
/// transient domain: `tau_max p_max_k / v_tr^2`.
pub fn c_decay_bound(p_max_k: f64, tau_max: f64, v_tr: f64) -> Result<f64, CertifyError> {
    if !(v_tr > 0.0) {
        return Err(CertifyError::Domain(format!("non-positive v_tr {v_tr}")));
    }
    if p_max_k < 0.0 {
        return Err(CertifyError::Domain(format!("negative power {p_max_k}")));
    }
    Ok(tau_max * p_max_k / (v_tr * v_tr))
}

/// Capacitance below which stability is impossible in an ad hoc setting:
/// `tau p_max_k / v_min^2`.
pub fn c_necessary_bound(p_max_k: f64, tau: f64, v_min: f64) -> Result<f64, CertifyError> {
    if !(v_min > 0.0) {
        return Err(CertifyError::Domain(format!("non-positive v_min {v_min}")));
    }
    if p_max_k < 0.0 {
        return Err(CertifyError::Domain(format!("negative power {p_max_k}")));
    }
    Ok(tau * p_max_k / (v_min * v_min))
}

/// Scalar parameters the scenario bounds depend on.
#[derive(Debug, Clone, Copy)]
struct BoundParams {
    v0: f64,
    r_max: f64,
    tau_max: f64,
    v_tr: f64,
}

impl BoundParams {
    fn of(spec: &NetworkSpec) -> Self {
        BoundParams {
            v0: spec.v0(),
            r_max: spec.r_max(),
            tau_max: spec.tau_max(),
            v_tr: spec.v_tr(),
        }
    }

    fn apex(&self) -> f64 {
        apex_power(self.r_max, self.v0)
    }

    /// Lowest co-content any network can reach on the boundary of the
    /// transient domain.
    fn boundary(&self, p_sigma_plus: f64) -> f64 {
        let d = self.v_tr - self.v0;
        d * d / (2.0 * self.r_max) + p_sigma_plus * self.v_tr.ln()
    }

    /// Upper bound on the co-content right after a switch from equilibrium.
    /// `None` when the pre-switch load has no equilibrium.
    fn initial(&self, p_sigma_minus: f64, p_sigma_plus: f64) -> Option<f64> {
        let v_high = two_bus_v_high(p_sigma_minus, self.r_max, self.v0).ok()?;
        Some(p_sigma_minus / 2.0 * (self.v0 - v_high) / v_high + p_sigma_plus * self.v0.ln())
    }

    /// Energy margin between the transient boundary and the post-switch
    /// level; certification requires it positive.
    fn margin(&self, p_sigma_minus: f64, p_sigma_plus: f64) -> Option<f64> {
        Some(self.boundary(p_sigma_plus) - self.initial(p_sigma_minus, p_sigma_plus)?)
    }
}

/// Lower bound of the co-content on the boundary of the transient domain,
/// `(v_tr - v0)^2 / (2 r_max) + p_sigma_plus log v_tr`.
pub fn boundary_co_content(spec: &NetworkSpec, p_sigma_plus: f64) -> f64 {
    BoundParams::of(spec).boundary(p_sigma_plus)
}

/// Upper bound of the co-content evaluated just after a switching event
/// from equilibrium,
/// `p_sigma_minus/2 (v0 - v_high)/v_high + p_sigma_plus log v0`.
pub fn initial_co_content_bound(
    spec: &NetworkSpec,
    p_sigma_minus: f64,
    p_sigma_plus: f64,
) -> Result<f64, CertifyError> {
    let params = BoundParams::of(spec);
    params
        .initial(p_sigma_minus, p_sigma_plus)
        .ok_or_else(|| CertifyError::InfeasiblePower {
            p: p_sigma_minus,
            apex: params.apex(),
        })
}

const SCENARIO_GRID: usize = 200;

fn transient_bound_raw(params: &BoundParams, p_max_k: f64, p_max: f64) -> TransientBound {
    // The margin decreases in both loadings, so its minimum over the box
    // sits at the joint-maximum corner; a non-positive value there means no
    // finite capacitance can certify.
    match params.margin(p_max, p_max) {
        Some(m) if m > 0.0 => {}
        _ => return TransientBound::Uncertifiable,
    }

    let objective = |p_minus: f64, p_plus: f64| -> f64 {
        let Ok(v_high) = two_bus_v_high(p_minus, params.r_max, params.v0) else {
            return f64::NEG_INFINITY;
        };
        let Some(margin) = params.margin(p_minus, p_plus) else {
            return f64::NEG_INFINITY;
        };
        if margin <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let jump = (p_minus - p_plus) / v_high;
        let value = params.tau_max * jump * jump / (2.0 * margin);
        if value.is_finite() {
            value
        } else {
            f64::NEG_INFINITY
        }
    };

    let ((p_minus, p_plus), value) =
        maximize_box_band(&objective, p_max, p_max, p_max_k, SCENARIO_GRID);
    TransientBound::Finite {
        capacitance: value.max(0.0),
        scenario: SwitchScenario {
            p_sigma_minus: p_minus,
            p_sigma_plus: p_plus,
        },
    }
}

/// Worst-case capacitance bound over all admissible switching scenarios for
/// a load that can change by at most `p_max_k`:
/// maximize `tau_max ((p- - p+)/v_high)^2 / (2 (boundary - initial))`
/// subject to `p-, p+ <= p_max` and `|p+ - p-| <= p_max_k`.
pub fn c_transient_bound(p_max_k: f64, spec: &NetworkSpec) -> Result<TransientBound, CertifyError> {
    let params = BoundParams::of(spec);
    let p_max = spec.p_max();
    if p_max >= params.apex() {
        return Err(CertifyError::InfeasiblePower {
            p: p_max,
            apex: params.apex(),
        });
    }
    if !(0.0..=p_max).contains(&p_max_k) {
        return Err(CertifyError::Domain(format!(
            "switching magnitude {p_max_k} outside [0, p_max]"
        )));
    }
    Ok(transient_bound_raw(&params, p_max_k, p_max))
}

const P_CRIT_RELATIVE_TOLERANCE: f64 = 1e-6;

/// Largest total loading below which every admissible scenario keeps a
/// positive energy margin, found by bisection on the diagonal scenario
/// `p- = p+ = P` (the margin decreases in both loadings, so the diagonal
/// corner binds). Returns the upper bracket end, so the value itself is on
/// the uncertifiable side within `1e-6` of the apex-relative tolerance.
pub fn critical_loadability_for(v_tr: f64, v0: f64, r_max: f64) -> f64 {
    let params = BoundParams {
        v0,
        r_max,
        tau_max: 1.0,
        v_tr,
    };
    let apex = params.apex();
    let diag = |p: f64| params.margin(p, p).unwrap_or(f64::NEG_INFINITY);
    let mut lo = 0.0;
    let mut hi = apex * (1.0 - 1e-12);
    if diag(hi) > 0.0 {
        return hi;
    }
    while hi - lo > P_CRIT_RELATIVE_TOLERANCE * apex {
        let mid = 0.5 * (lo + hi);
        if diag(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// [`critical_loadability_for`] with the network's own parameters.
pub fn critical_loadability(spec: &NetworkSpec) -> f64 {
    critical_loadability_for(spec.v_tr(), spec.v0(), spec.r_max())
}

/// Two-bus co-content at load voltage `v` under post-switch power `p_plus`.
fn two_bus_co_content(params: &BoundParams, v: f64, p_plus: f64) -> f64 {
    let d = params.v0 - v;
    d * d / (2.0 * params.r_max) + p_plus * v.ln()
}

/// Capacitance that keeps a two-bus system inside the transient domain for
/// one specific switching event, using the exact two-bus co-content rather
/// than the network-wide bounds.
pub fn two_bus_transient_bound(
    p_minus: f64,
    p_plus: f64,
    spec: &NetworkSpec,
) -> Result<TransientBound, CertifyError> {
    let params = BoundParams::of(spec);
    if spec.p_max() >= params.apex() {
        return Err(CertifyError::InfeasiblePower {
            p: spec.p_max(),
            apex: params.apex(),
        });
    }
    for p in [p_minus, p_plus] {
        if !(0.0..=spec.p_max()).contains(&p) {
            return Err(CertifyError::Domain(format!(
                "power {p} outside [0, p_max]"
            )));
        }
    }
    let v_high = two_bus_v_high(p_minus, params.r_max, params.v0).map_err(|_| {
        CertifyError::InfeasiblePower {
            p: p_minus,
            apex: params.apex(),
        }
    })?;
    let denom = two_bus_co_content(&params, params.v_tr, p_plus)
        - two_bus_co_content(&params, v_high, p_plus);
    if denom <= 0.0 {
        return Ok(TransientBound::Uncertifiable);
    }
    let jump = (p_minus - p_plus) / v_high;
    Ok(TransientBound::Finite {
        capacitance: params.tau_max * jump * jump / (2.0 * denom),
        scenario: SwitchScenario {
            p_sigma_minus: p_minus,
            p_sigma_plus: p_plus,
        },
    })
}

/// Worst case of [`two_bus_transient_bound`] over the box
/// `p-, p+ in [0, p_max]^2`.
pub fn two_bus_worst_case_bound(spec: &NetworkSpec) -> Result<TransientBound, CertifyError> {
    let params = BoundParams::of(spec);
    let p_max = spec.p_max();
    if p_max >= params.apex() {
        return Err(CertifyError::InfeasiblePower {
            p: p_max,
            apex: params.apex(),
        });
    }

    // The exact denominator is not monotone in the pre-switch load, so scan
    // a fine grid for a sign change before optimizing.
    let n = 600;
    for i in 0..n {
        let p_minus = p_max * i as f64 / (n - 1) as f64;
        let v_high = two_bus_v_high(p_minus, params.r_max, params.v0).expect("p <= apex");
        for j in 0..n {
            let p_plus = p_max * j as f64 / (n - 1) as f64;
            let denom = two_bus_co_content(&params, params.v_tr, p_plus)
                - two_bus_co_content(&params, v_high, p_plus);
            if denom <= 0.0 {
                return Ok(TransientBound::Uncertifiable);
            }
        }
    }

    let objective = |p_minus: f64, p_plus: f64| -> f64 {
        let Ok(v_high) = two_bus_v_high(p_minus, params.r_max, params.v0) else {
            return f64::NEG_INFINITY;
        };
        let denom = two_bus_co_content(&params, params.v_tr, p_plus)
            - two_bus_co_content(&params, v_high, p_plus);
        if denom <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let jump = (p_minus - p_plus) / v_high;
        let value = params.tau_max * jump * jump / (2.0 * denom);
        if value.is_finite() {
            value
        } else {
            f64::NEG_INFINITY
        }
    };
    let ((p_minus, p_plus), value) =
        maximize_box_band(&objective, p_max, p_max, 2.0 * p_max, SCENARIO_GRID);
    Ok(TransientBound::Finite {
        capacitance: value.max(0.0),
        scenario: SwitchScenario {
            p_sigma_minus: p_minus,
            p_sigma_plus: p_plus,
        },
    })
}

/// One sample of the sizing curves, all capacitances normalized by
/// `c0 = tau_max / r_max` and the event magnitude by `p0 = v0^2 / (4 r_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignCurveSample {
    pub delta_p_over_p0: f64,
    pub c_vtr_over_c0: f64,
    /// Full sufficient requirement: the larger of the decay bound and the
    /// worst-case transient bound. Infinite where no capacitance certifies.
    pub c_transient_over_c0: f64,
    pub c_necessary_over_c0: f64,
}

/// Normalized capacitance sizing curves against switching magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignCurves {
    pub samples: Vec<DesignCurveSample>,
    /// Capacitance unit `tau_max / r_max`.
    pub c0: f64,
    /// Power unit `v0^2 / (4 r_max)`.
    pub p0: f64,
}

/// Sweep the three sizing bounds over event magnitudes up to the critical
/// loadability.
///
/// Each sample treats the switching load as the dominant unit of its
/// system: the event magnitude is both the load's own bound and the total
/// loading bound, the two-bus-equivalent worst case. The final sample sits
/// at the critical loadability, where the transient requirement diverges.
pub fn design_curves(spec: &NetworkSpec, n: usize) -> DesignCurves {
    design_curves_impl(spec, n, None)
}

/// [`design_curves`] with the total loading bound pinned to `p_max` for
/// every sample instead of tracking the event magnitude.
pub fn design_curves_fixed_loading(spec: &NetworkSpec, n: usize, p_max: f64) -> DesignCurves {
    design_curves_impl(spec, n, Some(p_max))
}

fn design_curves_impl(spec: &NetworkSpec, n: usize, fixed_p_max: Option<f64>) -> DesignCurves {
    assert!(n >= 2, "design curves need at least two samples");
    let params = BoundParams::of(spec);
    let c0 = spec.tau_max() / spec.r_max();
    let p0 = params.apex();
    let p_crit = critical_loadability_for(params.v_tr, params.v0, params.r_max);

    let samples = (1..=n)
        .map(|i| {
            let dp = p_crit * i as f64 / n as f64;
            let p_max = fixed_p_max.unwrap_or(dp);
            let bound = transient_bound_raw(&params, dp.min(p_max), p_max);
            let c_vtr = c_decay_bound(dp, spec.tau_max(), spec.v_tr()).expect("v_tr > 0");
            let c_nec = c_necessary_bound(dp, spec.tau_max(), spec.v_min()).expect("v_min > 0");
            DesignCurveSample {
                delta_p_over_p0: dp / p0,
                c_vtr_over_c0: c_vtr / c0,
                c_transient_over_c0: c_vtr.max(bound.as_f64()) / c0,
                c_necessary_over_c0: c_nec / c0,
            }
        })
        .collect();
    DesignCurves { samples, c0, p0 }
}

/// How an installed capacitance compares with the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Above both sufficient bounds: stability certified for any admissible
    /// topology and single-load switching.
    Certified,
    /// Above the necessary bound only: inside the gap where neither
    /// stability nor instability is established.
    NecessaryOnlyMet,
    /// At or below the necessary bound: stability impossible in an ad hoc
    /// setting.
    Fails,
}

/// Per-load certification outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadCertificate {
    /// Node index of the load bus.
    pub node: usize,
    pub p_max_k: f64,
    pub installed: f64,
    pub c_vtr: f64,
    pub c_transient: TransientBound,
    pub c_necessary: f64,
    pub verdict: Verdict,
}

/// Certification of a whole network: per-load bounds and verdicts,
/// equilibrium feasibility, the critical loadability, and the switching
/// scenario that binds the largest transient requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub loads: Vec<LoadCertificate>,
    pub p_crit: f64,
    /// Loadability limit for the configured `v_min`.
    pub loadability_limit: f64,
    /// Whether `p_max` stays within the loadability limit, so a feasible
    /// equilibrium exists for every admissible loading.
    pub feasible: bool,
    pub binding_scenario: Option<SwitchScenario>,
}

impl CertificationReport {
    /// True when the equilibrium is feasible and every load is certified.
    pub fn all_certified(&self) -> bool {
        self.feasible && self.loads.iter().all(|l| l.verdict == Verdict::Certified)
    }
}

/// Compute every bound and verdict for a validated network.
pub fn certify_network(spec: &NetworkSpec) -> Result<CertificationReport, CertifyError> {
    let violations: Vec<Violation> = validate(spec)
        .into_iter()
        .filter(|v| !v.is_informational())
        .collect();
    if !violations.is_empty() {
        return Err(CertifyError::InvalidSpec(violations));
    }

    let limit = max_loadability(spec.v_min(), spec.v0(), spec.r_max())
        .map_err(|e| CertifyError::Domain(e.to_string()))?;
    let mut loads = Vec::new();
    let mut binding: Option<(f64, SwitchScenario)> = None;
    for (node, load) in spec.loads() {
        let c_vtr = c_decay_bound(load.p_max, spec.tau_max(), spec.v_tr())?;
        let c_nec = c_necessary_bound(load.p_max, spec.tau_max(), spec.v_min())?;
        let c_tr = c_transient_bound(load.p_max, spec)?;
        if let TransientBound::Finite {
            capacitance,
            scenario,
        } = c_tr
        {
            if binding.is_none_or(|(best, _)| capacitance > best) {
                binding = Some((capacitance, scenario));
            }
        }
        let sufficient = c_vtr.max(c_tr.as_f64());
        let verdict = if load.capacitance > sufficient {
            Verdict::Certified
        } else if load.capacitance > c_nec {
            Verdict::NecessaryOnlyMet
        } else {
            Verdict::Fails
        };
        loads.push(LoadCertificate {
            node,
            p_max_k: load.p_max,
            installed: load.capacitance,
            c_vtr,
            c_transient: c_tr,
            c_necessary: c_nec,
            verdict,
        });
    }

    Ok(CertificationReport {
        loads,
        p_crit: critical_loadability(spec),
        loadability_limit: limit,
        feasible: spec.p_max() <= limit,
        binding_scenario: binding.map(|(_, s)| s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Globals;
    use crate::testutil::{two_bus_globals, two_bus_spec, two_bus_spec_with};
    use proptest::prelude::*;

    #[test]
    fn decay_bound_examples() {
        let c = c_decay_bound(0.1875, 1.0, 0.66).unwrap();
        assert!((c - 0.1875 / 0.4356).abs() < 1e-12);
        assert!((c - 0.430441).abs() < 1e-5);
        assert_eq!(c_decay_bound(0.0, 1.0, 0.66).unwrap(), 0.0);
        let doubled = c_decay_bound(0.1875, 2.0, 0.66).unwrap();
        assert!((doubled - 2.0 * c).abs() < 1e-15);
        assert!(c_decay_bound(0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn necessary_bound_examples() {
        let c = c_necessary_bound(0.1875, 1.0, 0.75).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-5);
        assert_eq!(c_necessary_bound(0.0, 1.0, 0.75).unwrap(), 0.0);
        assert!(c_necessary_bound(0.1, 1.0, -0.1).is_err());
    }

    proptest! {
        /// The necessary bound never exceeds the decay bound when
        /// `v_min >= v_tr`.
        #[test]
        fn necessary_below_decay_bound(
            p in 0.0..1.0f64,
            tau in 0.1..10.0f64,
            v_tr in 0.5..0.9f64,
            extra in 0.0..0.1f64,
        ) {
            let v_min = v_tr + extra;
            let nec = c_necessary_bound(p, tau, v_min).unwrap();
            let dec = c_decay_bound(p, tau, v_tr).unwrap();
            prop_assert!(nec <= dec + 1e-15);
        }
    }

    #[test]
    fn boundary_co_content_example() {
        let spec = two_bus_spec(0.0, 0.1, 0.5, 1.0, 0.5);
        let g = boundary_co_content(&spec, 0.2);
        assert!((g - (0.0578 + 0.2 * 0.66f64.ln())).abs() < 1e-15);
        assert!((g - (-0.0253031)).abs() < 1e-6);
        // Decreasing in the post-switch load when v_tr < v0.
        assert!(boundary_co_content(&spec, 0.21) < g);
    }

    #[test]
    fn initial_co_content_bound_examples() {
        let spec = two_bus_spec(0.0, 0.1, 0.5, 1.0, 0.5);
        let g = initial_co_content_bound(&spec, 0.1, 0.2).unwrap();
        assert!((g - 0.0063508).abs() < 1e-6);
        assert_eq!(initial_co_content_bound(&spec, 0.0, 0.2).unwrap(), 0.0);
        let mut prev = -1.0;
        for i in 0..20 {
            let p_minus = 0.24 * i as f64 / 19.0;
            let g = initial_co_content_bound(&spec, p_minus, 0.1).unwrap();
            assert!(g > prev - 1e-15);
            prev = g;
        }
        assert!(initial_co_content_bound(&spec, 0.26, 0.1).is_err());
    }

    #[test]
    fn transient_bound_uncertifiable_at_high_loading() {
        // At p_max = 0.12 with v_tr = 0.66 the margin at the diagonal
        // corner is negative, so no capacitance certifies.
        let g = Globals {
            p_max: 0.12,
            ..two_bus_globals()
        };
        let spec = two_bus_spec_with(g, 0.05, 0.12, 0.5, 1.0, 0.5);
        let bound = c_transient_bound(0.12, &spec).unwrap();
        assert!(bound.is_uncertifiable());
    }

    #[test]
    fn transient_bound_zero_magnitude() {
        let spec = two_bus_spec(0.05, 0.1, 0.5, 1.0, 0.5);
        let bound = c_transient_bound(0.0, &spec).unwrap();
        match bound {
            TransientBound::Finite { capacitance, .. } => assert_eq!(capacitance, 0.0),
            TransientBound::Uncertifiable => panic!("margin is positive at p_max = 0.1"),
        }
    }

    #[test]
    fn transient_bound_worst_case_matches_switch_on_pattern() {
        let g = Globals {
            p_max: 0.1,
            ..two_bus_globals()
        };
        let spec = two_bus_spec_with(g, 0.0, 0.1, 0.5, 1.0, 0.5);
        let bound = c_transient_bound(0.04, &spec).unwrap();
        let TransientBound::Finite {
            capacitance,
            scenario,
        } = bound
        else {
            panic!("certifiable loading");
        };
        // Worst case: the load switches on to its full magnitude, bringing
        // the system to its loading bound.
        assert!((scenario.p_sigma_minus - 0.06).abs() < 1e-5, "{scenario:?}");
        assert!((scenario.p_sigma_plus - 0.1).abs() < 1e-5, "{scenario:?}");
        assert!(capacitance > 0.0);
    }

    /// Oracle: dense brute-force grid over the feasible band.
    #[test]
    fn transient_bound_matches_brute_force() {
        let g = Globals {
            p_max: 0.1,
            ..two_bus_globals()
        };
        let spec = two_bus_spec_with(g, 0.0, 0.1, 0.5, 1.0, 0.5);
        let params = BoundParams::of(&spec);
        let p_max = 0.1;
        let p_max_k = 0.07;

        let n = 300;
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..n {
                let pm = p_max * i as f64 / (n - 1) as f64;
                let pp = p_max * j as f64 / (n - 1) as f64;
                if (pp - pm).abs() > p_max_k {
                    continue;
                }
                let vh = two_bus_v_high(pm, 1.0, 1.0).unwrap();
                let margin = params.margin(pm, pp).unwrap();
                let v = ((pm - pp) / vh).powi(2) / (2.0 * margin);
                if v > best.2 {
                    best = (pm, pp, v);
                }
            }
        }

        let bound = c_transient_bound(p_max_k, &spec).unwrap();
        let TransientBound::Finite {
            capacitance,
            scenario,
        } = bound
        else {
            panic!("certifiable loading");
        };
        let cell = p_max / (n - 1) as f64;
        assert!(capacitance >= best.2 - 1e-12);
        assert!((scenario.p_sigma_minus - best.0).abs() <= cell);
        assert!((scenario.p_sigma_plus - best.1).abs() <= cell);
    }

    #[test]
    fn critical_loadability_reproduces_reference_point() {
        let p_crit = critical_loadability_for(0.66, 1.0, 1.0);
        let p0 = 0.25;
        assert!((p_crit / p0 - 0.468).abs() < 0.01, "{}", p_crit / p0);
        // Upper bracket: the returned value itself is already uncertifiable.
        let params = BoundParams {
            v0: 1.0,
            r_max: 1.0,
            tau_max: 1.0,
            v_tr: 0.66,
        };
        assert!(params.margin(p_crit, p_crit).unwrap() <= 0.0);
        assert!(
            params
                .margin(p_crit - 3e-6 * p0, p_crit - 3e-6 * p0)
                .unwrap()
                > 0.0
        );
    }

    #[test]
    fn critical_loadability_monotone_in_v_tr() {
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let v_tr = 0.51 + 0.38 * i as f64 / 19.0;
            let p = critical_loadability_for(v_tr, 1.0, 1.0);
            assert!(p < prev, "p_crit must strictly decrease in v_tr");
            assert!(p < 0.25, "p_crit stays below the apex");
            prev = p;
        }
    }

    #[test]
    fn two_bus_transient_bound_examples() {
        let spec = two_bus_spec(0.0, 0.1, 0.5, 1.0, 0.5);
        // Equal pre/post powers need no transient capacitance.
        match two_bus_transient_bound(0.05, 0.05, &spec).unwrap() {
            TransientBound::Finite { capacitance, .. } => assert_eq!(capacitance, 0.0),
            TransientBound::Uncertifiable => panic!("loading below critical"),
        }
        // Switch-on from idle.
        let TransientBound::Finite { capacitance, .. } =
            two_bus_transient_bound(0.0, 0.1, &spec).unwrap()
        else {
            panic!("loading below critical");
        };
        let denom = 0.0578 + 0.1 * 0.66f64.ln();
        assert!((capacitance - 0.01 / (2.0 * denom)).abs() < 1e-12);
        assert!((capacitance - 0.307722).abs() < 1e-5);
    }

    /// On a two-bus network whose single load spans the whole loading
    /// bound, the exact worst case and the network-wide bound coincide:
    /// the binding scenario starts from no load, where the initial-energy
    /// bound is tight.
    #[test]
    fn two_bus_worst_case_equals_network_bound() {
        let spec = two_bus_spec(0.0, 0.1, 0.5, 1.0, 0.5);
        let exact = two_bus_worst_case_bound(&spec).unwrap();
        let network = c_transient_bound(0.1, &spec).unwrap();
        let (a, b) = (exact.as_f64(), network.as_f64());
        assert!((a - b).abs() <= 1e-9 * a.max(b), "{a} vs {b}");
    }

    #[test]
    fn design_curves_shapes() {
        let spec = two_bus_spec(0.0, 0.1, 0.5, 1.0, 0.5);
        let curves = design_curves(&spec, 50);
        assert_eq!(curves.samples.len(), 50);
        assert!((curves.c0 - 1.0).abs() < 1e-15);
        assert!((curves.p0 - 0.25).abs() < 1e-15);

        let mut prev = DesignCurveSample {
            delta_p_over_p0: 0.0,
            c_vtr_over_c0: 0.0,
            c_transient_over_c0: 0.0,
            c_necessary_over_c0: 0.0,
        };
        for s in &curves.samples {
            assert!(s.c_transient_over_c0 >= s.c_necessary_over_c0);
            assert!(s.c_vtr_over_c0 >= prev.c_vtr_over_c0);
            assert!(s.c_transient_over_c0 >= prev.c_transient_over_c0);
            assert!(s.c_necessary_over_c0 >= prev.c_necessary_over_c0);
            prev = *s;
        }
        // The final sample sits at the critical loadability, where the
        // transient requirement diverges.
        let last = curves.samples.last().unwrap();
        assert!(last.c_transient_over_c0.is_infinite());
        assert!((last.delta_p_over_p0 - 0.468).abs() < 0.01);
    }

    #[test]
    fn design_curves_with_fixed_loading() {
        let spec = two_bus_spec(0.0, 0.1, 0.5, 1.0, 0.5);
        // Pinned above the critical loadability: nothing certifies.
        let over = design_curves_fixed_loading(&spec, 10, 0.2);
        assert!(over
            .samples
            .iter()
            .all(|s| s.c_transient_over_c0.is_infinite()));
        // Pinned below: every sample stays finite.
        let under = design_curves_fixed_loading(&spec, 10, 0.08);
        assert!(under
            .samples
            .iter()
            .all(|s| s.c_transient_over_c0.is_finite()));
    }

    #[test]
    fn certify_two_bus_with_margin() {
        let spec = two_bus_spec(0.05, 0.1, 1.0, 1.0, 0.5);
        let report = certify_network(&spec).unwrap();
        assert_eq!(report.loads.len(), 1);
        let load = &report.loads[0];
        let needed = load.c_vtr.max(load.c_transient.as_f64());

        let sized = two_bus_spec(0.05, 0.1, 2.0 * needed, 1.0, 0.5);
        let report = certify_network(&sized).unwrap();
        assert_eq!(report.loads[0].verdict, Verdict::Certified);
        assert!(report.all_certified());
        assert!(report.feasible);
        assert!(report.binding_scenario.is_some());
    }

    #[test]
    fn certify_below_necessary_fails() {
        let spec = two_bus_spec(0.05, 0.1, 1.0, 1.0, 0.5);
        let nec = certify_network(&spec).unwrap().loads[0].c_necessary;
        let starved = two_bus_spec(0.05, 0.1, 0.5 * nec, 1.0, 0.5);
        let report = certify_network(&starved).unwrap();
        assert_eq!(report.loads[0].verdict, Verdict::Fails);
        assert!(!report.all_certified());
    }

    #[test]
    fn certify_gap_region_is_necessary_only() {
        let spec = two_bus_spec(0.05, 0.1, 1.0, 1.0, 0.5);
        let load = &certify_network(&spec).unwrap().loads[0];
        let between = 0.5 * (load.c_necessary + load.c_vtr.max(load.c_transient.as_f64()));
        let mid = two_bus_spec(0.05, 0.1, between, 1.0, 0.5);
        let report = certify_network(&mid).unwrap();
        assert_eq!(report.loads[0].verdict, Verdict::NecessaryOnlyMet);
    }

    #[test]
    fn certify_rejects_invalid_spec() {
        let mut g = two_bus_globals();
        g.v_tr = 0.4; // below v0/2
        let spec = two_bus_spec_with(g, 0.05, 0.1, 0.5, 1.0, 0.5);
        assert!(matches!(
            certify_network(&spec),
            Err(CertifyError::InvalidSpec(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// The combined sufficient requirement dominates the necessary one.
        #[test]
        fn sufficient_dominates_necessary(
            v_tr in 0.55..0.85f64,
            load_frac in 0.1..0.95f64,
            event_frac in 0.05..1.0f64,
            v_min_frac in 0.0..1.0f64,
        ) {
            let p_crit = critical_loadability_for(v_tr, 1.0, 1.0);
            let p_max = load_frac * p_crit;
            let p_max_k = event_frac * p_max;
            let v_min_cap = two_bus_v_high(p_max, 1.0, 1.0).unwrap();
            let v_min = v_tr + v_min_frac * (v_min_cap - v_tr);
            let g = Globals { v0: 1.0, r_max: 1.0, tau_max: 1.0, p_max, v_min, v_tr };
            let spec = two_bus_spec_with(g, 0.0, p_max_k, 1.0, 1.0, 0.5);

            let c_vtr = c_decay_bound(p_max_k, 1.0, v_tr).unwrap();
            let c_tr = c_transient_bound(p_max_k, &spec).unwrap();
            let c_nec = c_necessary_bound(p_max_k, 1.0, v_min).unwrap();
            prop_assert!(c_vtr.max(c_tr.as_f64()) >= c_nec - 1e-12);
        }

        /// Raising v_tr loosens the decay bound and tightens the transient
        /// bound.
        #[test]
        fn v_tr_trade_off(step in 0.01..0.1f64) {
            let low = 0.6;
            let high = low + step;
            let p_max = 0.8 * critical_loadability_for(high, 1.0, 1.0);
            let make = |v_tr: f64| {
                let g = Globals {
                    v0: 1.0, r_max: 1.0, tau_max: 1.0,
                    p_max, v_min: 0.96, v_tr,
                };
                two_bus_spec_with(g, 0.0, p_max, 1.0, 1.0, 0.5)
            };
            let dec_low = c_decay_bound(p_max, 1.0, low).unwrap();
            let dec_high = c_decay_bound(p_max, 1.0, high).unwrap();
            prop_assert!(dec_high <= dec_low);

            let tr_low = c_transient_bound(p_max, &make(low)).unwrap().as_f64();
            let tr_high = c_transient_bound(p_max, &make(high)).unwrap().as_f64();
            prop_assert!(tr_high >= tr_low - 1e-12);
        }
    }
}
