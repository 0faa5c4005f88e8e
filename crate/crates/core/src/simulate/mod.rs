//! Nonlinear transient simulation of the circuit equations with load
//! switching events, plus the randomized harness that validates
//! certificates empirically.
//!
//! The integrator is an adaptive Dormand-Prince 5(4) pair. Line dynamics
//! are fast against certified capacitor dynamics, so the step is capped at
//! a fifth of the smallest line time constant; correctness over speed at
//! desk scale.

pub mod random;

use nalgebra::DVector;
use thiserror::Error;

use crate::certify::certify_network;
use crate::dynamics::{pack, packed_derivative, unpack};
use crate::equilibrium::{solve_power_flow, two_bus_v_high, EquilibriumError};
use crate::network::NetworkSpec;
use crate::potential::{potential_sample, PotentialSample, SystemState};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "step size underflow at t = {t:.6e} (h = {h:.3e}): dynamics too stiff for the tolerances"
    )]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("event at t = {time}: expected pre-switch power {expected}, found {found}")]
    EventMismatch {
        time: f64,
        expected: f64,
        found: f64,
    },
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("network is not certified; nothing to verify")]
    NotCertified,
    #[error("certificate violation on run {run}: {detail}")]
    CertificateViolation {
        run: usize,
        detail: String,
        trajectory: Box<Trajectory>,
    },
}

/// A single load changing its power instantaneously. State variables are
/// continuous across the event; only the power vector jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingEvent {
    /// Node index of the switching load.
    pub load: usize,
    pub p_before: f64,
    pub p_after: f64,
    /// Seconds.
    pub time: f64,
}

/// How a simulated trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Settled at the stable equilibrium.
    ConvergedToSep,
    /// Some load voltage fell to `v_tr` or below.
    LeftTransientDomain,
    /// Voltage collapse or unbounded state.
    Diverged,
    /// Reached the time horizon without settling.
    TimedOut,
}

/// Marker tying an applied event to its row in the trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventMarker {
    /// Row index of the first sample evaluated with the post-switch power.
    pub row: usize,
    pub load: usize,
    pub p_before: f64,
    pub p_after: f64,
    pub time: f64,
}

/// Recorded run: one row per accepted step (plus one extra row at each
/// event, re-evaluating the potential under the post-switch power).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SystemState>,
    pub potentials: Vec<PotentialSample>,
    pub events: Vec<EventMarker>,
    pub verdict: Outcome,
    /// Analytic decay rate at the interior eighth points of the step
    /// ending at each row, from the integrator's dense output;
    /// `(end row, values)`.
    pub step_mid_pdots: Vec<(usize, [f64; 7])>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SystemState {
        self.states.last().expect("trajectory records its start")
    }

    pub fn min_load_voltage(&self) -> f64 {
        self.states
            .iter()
            .flat_map(|s| s.v_loads.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest increase of the mixed potential between consecutive rows at
    /// or after `from_row`. Zero for a perfectly monotone decay.
    pub fn max_potential_rise(&self, from_row: usize) -> f64 {
        self.potentials[from_row..]
            .windows(2)
            .map(|w| w[1].p_total - w[0].p_total)
            .fold(0.0, f64::max)
    }

    /// Compare the analytic decay rate with the finite difference of the
    /// recorded potential over each accepted step, from `from_row` on.
    ///
    /// The analytic side is the Simpson average of the decay rate over the
    /// step (endpoints plus the dense-output midpoint), which the finite
    /// difference must match to fourth order in the step size. Returns
    /// `(worst relative mismatch, pairs checked)`.
    ///
    /// A relative comparison needs signal. Each accepted step carries an
    /// absolute potential-change noise of roughly the state tolerances
    /// times the potential gradient, regardless of how small the remaining
    /// decay is; a step is therefore skipped when its potential change
    /// falls below `3e-5` of the potential magnitude or `1e-10` of
    /// `power_scale`, whichever is larger.
    pub fn pdot_consistency(&self, from_row: usize, power_scale: f64) -> (f64, usize) {
        let mids: std::collections::HashMap<usize, [f64; 7]> =
            self.step_mid_pdots.iter().copied().collect();
        let mut worst = 0.0f64;
        let mut checked = 0;
        for i in from_row..self.times.len().saturating_sub(1) {
            let dt = self.times[i + 1] - self.times[i];
            if dt <= 0.0 {
                continue;
            }
            let p0 = self.potentials[i].p_total;
            let p1 = self.potentials[i + 1].p_total;
            let floor = (3e-5 * p0.abs().max(p1.abs())).max(1e-10 * power_scale);
            if (p1 - p0).abs() <= floor {
                continue;
            }
            let fd = (p1 - p0) / dt;
            let ends = 0.5 * (self.potentials[i].p_dot + self.potentials[i + 1].p_dot);
            let analytic = match mids.get(&(i + 1)) {
                // Composite Simpson over eight panels.
                Some(&q) => {
                    let odd = q[0] + q[2] + q[4] + q[6];
                    let even = q[1] + q[3] + q[5];
                    (self.potentials[i].p_dot
                        + 4.0 * odd
                        + 2.0 * even
                        + self.potentials[i + 1].p_dot)
                        / 24.0
                }
                None => ends,
            };
            let scale = fd.abs().max(analytic.abs());
            worst = worst.max((fd - analytic).abs() / scale);
            checked += 1;
        }
        (worst, checked)
    }
}

/// Integrator controls. `None` fields fall back to the contract defaults:
/// `atol = 1e-10 v0` and `max_step = tau_min / 5`.
#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: Option<f64>,
    pub max_step: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-8,
            atol: None,
            max_step: None,
        }
    }
}

/// Time derivatives `(di_lines, dv_loads)` of a state under load powers `p`.
pub fn rhs(
    spec: &NetworkSpec,
    state: &SystemState,
    p: &[f64],
) -> Result<(DVector<f64>, DVector<f64>), SimulateError> {
    crate::dynamics::state_derivative(spec, state, p)
        .ok_or_else(|| SimulateError::Domain("non-positive load voltage".to_string()))
}

// Dormand-Prince 5(4) tableau. The dynamics are autonomous, so the stage
// time offsets never enter.
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
// Dense-output weights for the quartic interpolant.
const DP_D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Interpolated state at fraction `theta` of an accepted step.
fn dense_state(
    y0: &DVector<f64>,
    y1: &DVector<f64>,
    ks: &[DVector<f64>],
    h: f64,
    theta: f64,
) -> DVector<f64> {
    let dy = y1 - y0;
    let bspl = h * &ks[0] - &dy;
    let mut cont5 = DVector::zeros(y0.len());
    for (k, &d) in ks.iter().zip(DP_D.iter()) {
        if d != 0.0 {
            cont5.axpy(h * d, k, 1.0);
        }
    }
    let inner2 = (&dy - h * &ks[6] - &bspl) + (1.0 - theta) * cont5;
    let inner1 = bspl + theta * inner2;
    y0 + theta * (dy + (1.0 - theta) * inner1)
}

const CONVERGENCE_RHS_SCALE: f64 = 1e-8;
const CONVERGENCE_STREAK: usize = 5;
const DIVERGENCE_NORM_SCALE: f64 = 1e6;

/// An in-progress simulation: integrate, apply switching events, then take
/// the recorded trajectory.
pub struct Simulation<'a> {
    spec: &'a NetworkSpec,
    p: Vec<f64>,
    y: DVector<f64>,
    t: f64,
    h: f64,
    atol: f64,
    rtol: f64,
    max_step: f64,
    convergence_eps: f64,
    streak: usize,
    times: Vec<f64>,
    states: Vec<SystemState>,
    potentials: Vec<PotentialSample>,
    events: Vec<EventMarker>,
    mid_pdots: Vec<(usize, [f64; 7])>,
    verdict: Option<Outcome>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        spec: &'a NetworkSpec,
        initial: SystemState,
        p: Vec<f64>,
        options: IntegrateOptions,
    ) -> Result<Self, SimulateError> {
        if p.len() != spec.load_count() {
            return Err(SimulateError::Domain(format!(
                "power vector has {} entries for {} loads",
                p.len(),
                spec.load_count()
            )));
        }
        let max_step = options
            .max_step
            .unwrap_or_else(|| spec.tau_min().unwrap_or(spec.tau_max()) / 5.0);
        let atol = options.atol.unwrap_or(1e-10 * spec.v0());
        let mut sim = Simulation {
            spec,
            p,
            y: pack(spec, &initial),
            t: initial.time,
            h: max_step / 100.0,
            atol,
            rtol: options.rtol,
            max_step,
            convergence_eps: CONVERGENCE_RHS_SCALE * spec.v0() / spec.tau_max(),
            streak: 0,
            times: Vec::new(),
            states: Vec::new(),
            potentials: Vec::new(),
            events: Vec::new(),
            mid_pdots: Vec::new(),
            verdict: None,
        };
        sim.check_and_record()?;
        Ok(sim)
    }

    pub fn verdict(&self) -> Option<Outcome> {
        self.verdict
    }

    fn eval(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        packed_derivative(self.spec, &self.p, y)
    }

    /// Record the current state and run the termination checks. The state
    /// is not recorded when it is already divergent (non-finite or
    /// non-positive voltage), where the potential is undefined.
    fn check_and_record(&mut self) -> Result<(), SimulateError> {
        let n_e = self.spec.edge_count();
        let n_l = self.spec.load_count();
        if self.y.iter().any(|x| !x.is_finite())
            || (0..n_l).any(|k| self.y[n_e + k] <= 0.0)
            || self.y.amax() > DIVERGENCE_NORM_SCALE * self.spec.v0()
        {
            self.verdict = Some(Outcome::Diverged);
            return Ok(());
        }
        let state = unpack(self.spec, &self.y, self.t);
        let sample = potential_sample(self.spec, &state, &self.p)
            .map_err(|e| SimulateError::Domain(e.to_string()))?;
        self.times.push(self.t);
        self.states.push(state);
        self.potentials.push(sample);

        if (0..n_l).any(|k| self.y[n_e + k] <= self.spec.v_tr()) {
            self.verdict = Some(Outcome::LeftTransientDomain);
            return Ok(());
        }
        let f = self
            .eval(&self.y)
            .ok_or_else(|| SimulateError::Domain("non-positive load voltage".to_string()))?;
        // Residual dynamics in common units of volts per second: the line
        // term is the voltage imbalance across the line over tau_max, which
        // keeps small inductances from amplifying integration noise above
        // the threshold forever.
        let mut residual = 0.0f64;
        for (a, e) in self.spec.edges().iter().enumerate() {
            residual = residual.max((f[a] * e.inductance).abs() / self.spec.tau_max());
        }
        for k in 0..n_l {
            residual = residual.max(f[n_e + k].abs());
        }
        if residual < self.convergence_eps {
            self.streak += 1;
            if self.streak >= CONVERGENCE_STREAK {
                self.verdict = Some(Outcome::ConvergedToSep);
            }
        } else {
            self.streak = 0;
        }
        Ok(())
    }

    /// Integrate until `t_target` or a terminal condition, recording every
    /// accepted step.
    pub fn run_until(&mut self, t_target: f64) -> Result<(), SimulateError> {
        let h_min = 1e-10 * self.max_step;
        while self.verdict.is_none() && self.t < t_target - 1e-14 * t_target.abs().max(1.0) {
            let h = self.h.min(self.max_step).min(t_target - self.t);
            let Some(k1) = self.eval(&self.y) else {
                self.h *= 0.25;
                if self.h < h_min {
                    self.verdict = Some(Outcome::Diverged);
                    return Ok(());
                }
                continue;
            };

            let mut ks: Vec<DVector<f64>> = Vec::with_capacity(7);
            ks.push(k1);
            let mut failed_stage = false;
            for s in 1..7 {
                let mut y_stage = self.y.clone();
                for (j, k) in ks.iter().enumerate() {
                    let a = DP_A[s - 1][j];
                    if a != 0.0 {
                        y_stage.axpy(h * a, k, 1.0);
                    }
                }
                match self.eval(&y_stage) {
                    Some(k) => ks.push(k),
                    None => {
                        failed_stage = true;
                        break;
                    }
                }
            }
            if failed_stage {
                self.h = h * 0.25;
                if self.h < h_min {
                    // Stages keep leaving the voltage domain: collapse.
                    self.verdict = Some(Outcome::Diverged);
                    return Ok(());
                }
                continue;
            }

            let mut y5 = self.y.clone();
            let mut err = DVector::zeros(self.y.len());
            for (k, (&b5, &b4)) in ks.iter().zip(DP_B5.iter().zip(DP_B4.iter())) {
                if b5 != 0.0 {
                    y5.axpy(h * b5, k, 1.0);
                }
                if b5 != b4 {
                    err.axpy(h * (b5 - b4), k, 1.0);
                }
            }
            let mut norm_sq = 0.0;
            for i in 0..err.len() {
                let scale = self.atol + self.rtol * self.y[i].abs().max(y5[i].abs());
                let e = err[i] / scale;
                norm_sq += e * e;
            }
            let err_norm = (norm_sq / err.len() as f64).sqrt();

            if err_norm <= 1.0 {
                let interior = |theta: f64| {
                    let y_q = dense_state(&self.y, &y5, &ks, h, theta);
                    crate::potential::decay_rate(
                        self.spec,
                        &unpack(self.spec, &y_q, self.t + theta * h),
                        &self.p,
                    )
                };
                let mut mid_pdots = Some([0.0; 7]);
                for k in 1..8 {
                    match interior(k as f64 / 8.0) {
                        Some(q) => {
                            if let Some(arr) = mid_pdots.as_mut() {
                                arr[k - 1] = q;
                            }
                        }
                        None => {
                            mid_pdots = None;
                            break;
                        }
                    }
                }
                self.t += h;
                self.y = y5;
                let factor = (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0);
                self.h = (h * factor).min(self.max_step);
                let rows_before = self.times.len();
                self.check_and_record()?;
                if self.times.len() > rows_before {
                    if let Some(pdots) = mid_pdots {
                        self.mid_pdots.push((self.times.len() - 1, pdots));
                    }
                }
            } else {
                let factor = (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.5);
                self.h = h * factor;
                if self.h < h_min {
                    return Err(SimulateError::StepSizeUnderflow {
                        t: self.t,
                        h: self.h,
                    });
                }
            }
        }
        Ok(())
    }

    /// Resume a run that settled at equilibrium, advancing the clock to `t`
    /// with the state held. Settled means the residual dynamics sit below
    /// the detection threshold, so holding the state is exact to that
    /// tolerance. Hard terminal outcomes cannot be resumed.
    pub fn resume_at(&mut self, t: f64) -> Result<(), SimulateError> {
        match self.verdict {
            Some(Outcome::ConvergedToSep) => {}
            Some(other) => {
                return Err(SimulateError::InvalidEvent(format!(
                    "cannot resume a {other:?} trajectory"
                )))
            }
            None => {}
        }
        self.verdict = None;
        self.streak = 0;
        if t > self.t {
            self.t = t;
            self.check_and_record()?;
        }
        Ok(())
    }

    /// Switch one load's power discontinuously. The state is carried over
    /// unchanged and the potential is re-evaluated under the post-switch
    /// power as an extra row at the same instant.
    pub fn apply_event(&mut self, event: &SwitchingEvent) -> Result<(), SimulateError> {
        if self.verdict.is_some() {
            return Err(SimulateError::InvalidEvent(
                "simulation already terminated".to_string(),
            ));
        }
        let col = self.spec.load_position(event.load).ok_or_else(|| {
            SimulateError::InvalidEvent(format!("node {} is not a load", event.load))
        })?;
        let load = self.spec.nodes()[event.load].load().expect("load node");
        if event.p_before == event.p_after {
            return Err(SimulateError::InvalidEvent(
                "switching event must change the power".to_string(),
            ));
        }
        if !(0.0..=load.p_max).contains(&event.p_after) {
            return Err(SimulateError::InvalidEvent(format!(
                "post-switch power {} outside [0, {}]",
                event.p_after, load.p_max
            )));
        }
        let current = self.p[col];
        if (current - event.p_before).abs() > 1e-9 * current.abs().max(1.0) {
            return Err(SimulateError::EventMismatch {
                time: event.time,
                expected: event.p_before,
                found: current,
            });
        }
        let p_sigma: f64 = self.p.iter().sum::<f64>() - current + event.p_after;
        if p_sigma > self.spec.p_max() * (1.0 + 1e-12) {
            return Err(SimulateError::InvalidEvent(format!(
                "post-switch total {} exceeds p_max {}",
                p_sigma,
                self.spec.p_max()
            )));
        }

        self.p[col] = event.p_after;
        self.streak = 0;
        self.events.push(EventMarker {
            row: self.times.len(),
            load: event.load,
            p_before: event.p_before,
            p_after: event.p_after,
            time: self.t,
        });
        self.check_and_record()
    }

    /// Finish and take the recorded trajectory; a run that never hit a
    /// terminal condition times out.
    pub fn into_trajectory(self) -> Trajectory {
        Trajectory {
            times: self.times,
            states: self.states,
            potentials: self.potentials,
            events: self.events,
            verdict: self.verdict.unwrap_or(Outcome::TimedOut),
            step_mid_pdots: self.mid_pdots,
        }
    }
}

/// Integrate from `initial` under constant powers `p` until `t_end` or a
/// terminal condition.
pub fn integrate(
    spec: &NetworkSpec,
    initial: SystemState,
    p: &[f64],
    t_end: f64,
    options: IntegrateOptions,
) -> Result<Trajectory, SimulateError> {
    let mut sim = Simulation::new(spec, initial, p.to_vec(), options)?;
    sim.run_until(t_end)?;
    Ok(sim.into_trajectory())
}

/// Build the equilibrium state for load powers `p` (load axis).
pub fn equilibrium_state(spec: &NetworkSpec, p: &[f64]) -> Result<SystemState, SimulateError> {
    let eq = solve_power_flow(spec, p)?;
    Ok(SystemState {
        v_loads: eq.load_voltages(spec),
        i_lines: eq.i_sep,
        time: 0.0,
    })
}

/// Start at the equilibrium of `p0` and play the events in time order.
pub fn simulate_from_equilibrium(
    spec: &NetworkSpec,
    p0: &[f64],
    events: &[SwitchingEvent],
    t_end: f64,
    options: IntegrateOptions,
) -> Result<Trajectory, SimulateError> {
    let mut ordered: Vec<&SwitchingEvent> = events.iter().collect();
    ordered.sort_by(|a, b| a.time.total_cmp(&b.time));
    if let Some(e) = ordered.iter().find(|e| e.time < 0.0 || e.time > t_end) {
        return Err(SimulateError::InvalidEvent(format!(
            "event time {} outside [0, {t_end}]",
            e.time
        )));
    }

    let initial = equilibrium_state(spec, p0)?;
    let mut sim = Simulation::new(spec, initial, p0.to_vec(), options)?;
    for event in ordered {
        sim.run_until(event.time)?;
        match sim.verdict() {
            None => {}
            // A run settled before the event keeps going; anything else is
            // final.
            Some(Outcome::ConvergedToSep) => sim.resume_at(event.time)?,
            Some(_) => break,
        }
        sim.apply_event(event)?;
    }
    if sim.verdict().is_none() {
        sim.run_until(t_end)?;
    }
    Ok(sim.into_trajectory())
}

/// Summary of one randomized switching run.
#[derive(Debug, Clone, Copy)]
pub struct RunSummary {
    pub run: usize,
    pub load: usize,
    pub p_before: f64,
    pub p_after: f64,
    pub p_sigma_minus: f64,
    pub p_sigma_plus: f64,
    pub verdict: Outcome,
    pub rows: usize,
    pub max_potential_rise: f64,
    pub max_pdot_mismatch: f64,
}

/// Outcome of the randomized certificate validation.
#[derive(Debug, Clone)]
pub struct FuzzReport {
    pub runs: Vec<RunSummary>,
    /// Worst increase of the potential between consecutive recorded rows
    /// across all runs (should sit at integration-noise level).
    pub max_potential_rise: f64,
    /// Worst relative disagreement between the analytic decay rate and the
    /// finite-differenced potential.
    pub max_pdot_mismatch: f64,
    pub fd_pairs_checked: usize,
}

const FUZZ_HORIZON_TAU: f64 = 500.0;
const DECAY_SLACK: f64 = 1e-9;

/// Fire `n_events` randomized admissible single-load switches from
/// equilibrium and verify the certificate empirically: every run must
/// settle back at the stable equilibrium, the potential must decay
/// monotonically after the switch, and no load voltage may touch `v_tr`.
///
/// The integrator runs tighter than the contract defaults (`rtol = 1e-11`,
/// `atol = 1e-13 v0`) so the decay and consistency checks have headroom
/// over integration noise. Deterministic given `seed`.
pub fn verify_certificate(
    spec: &NetworkSpec,
    n_events: usize,
    seed: u64,
) -> Result<FuzzReport, SimulateError> {
    use rand::{RngExt, SeedableRng};

    let report = certify_network(spec).map_err(|e| SimulateError::Domain(e.to_string()))?;
    if !report.all_certified() {
        return Err(SimulateError::NotCertified);
    }
    let n_loads = spec.load_count();
    if n_loads == 0 {
        return Err(SimulateError::Domain("network has no loads".to_string()));
    }
    let bounds = spec.load_power_bounds();
    let load_nodes = spec.load_nodes();
    // Besides the line-constant cap, resolve the fastest possible LC
    // ringing so the decay-rate consistency check sees several samples per
    // oscillation.
    let l_min = spec
        .edges()
        .iter()
        .map(|e| e.inductance)
        .fold(f64::INFINITY, f64::min);
    let c_min = spec
        .capacitances()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let t_ringing = std::f64::consts::TAU * (l_min * c_min).sqrt();
    let options = IntegrateOptions {
        rtol: 1e-11,
        atol: Some(1e-13 * spec.v0()),
        max_step: Some((spec.tau_min().unwrap_or(spec.tau_max()) / 5.0).min(t_ringing / 15.0)),
    };
    let t_end = FUZZ_HORIZON_TAU * spec.tau_max();
    let power_scale = crate::equilibrium::apex_power(spec.r_max(), spec.v0());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    let mut runs = Vec::with_capacity(n_events);
    let mut worst_rise = 0.0f64;
    let mut worst_fd = 0.0f64;
    let mut fd_pairs = 0usize;

    for run in 0..n_events {
        // Admissible pre-switch load vector.
        let mut p_minus: Vec<f64> = bounds
            .iter()
            .map(|&b| rng.random_range(0.0..=1.0) * b)
            .collect();
        let total: f64 = p_minus.iter().sum();
        if total > spec.p_max() {
            let scale = spec.p_max() / total * 0.999;
            for p in &mut p_minus {
                *p *= scale;
            }
        }

        // Single-load switch keeping the total admissible.
        let col = rng.random_range(0..n_loads);
        let rest: f64 = p_minus.iter().sum::<f64>() - p_minus[col];
        let hi = bounds[col].min(spec.p_max() - rest);
        let mut p_after = rng.random_range(0.0..=1.0) * hi;
        for _ in 0..16 {
            if (p_after - p_minus[col]).abs() > 1e-3 * bounds[col] {
                break;
            }
            p_after = rng.random_range(0.0..=1.0) * hi;
        }
        if (p_after - p_minus[col]).abs() <= 1e-3 * bounds[col] {
            p_after = if p_minus[col] > 0.5 * hi { 0.0 } else { hi };
        }
        let event = SwitchingEvent {
            load: load_nodes[col],
            p_before: p_minus[col],
            p_after,
            time: 0.0,
        };

        let initial = equilibrium_state(spec, &p_minus)?;
        let mut sim = Simulation::new(spec, initial, p_minus.clone(), options)?;
        sim.apply_event(&event)?;
        sim.run_until(t_end)?;
        let traj = sim.into_trajectory();

        let post_row = traj.events[0].row;
        let rise = traj.max_potential_rise(post_row);
        let (fd, pairs) = traj.pdot_consistency(post_row, power_scale);
        let p_sigma_minus: f64 = p_minus.iter().sum();
        let p_sigma_plus = p_sigma_minus - p_minus[col] + p_after;

        let violation = if traj.verdict != Outcome::ConvergedToSep {
            Some(format!(
                "trajectory ended {:?} instead of converging",
                traj.verdict
            ))
        } else if rise > DECAY_SLACK {
            Some(format!("potential rose by {rise:.3e} between steps"))
        } else if traj.min_load_voltage() <= spec.v_tr() {
            Some(format!(
                "voltage {} left the transient domain",
                traj.min_load_voltage()
            ))
        } else {
            // Settled voltages must clear the network-wide floor.
            let floor = two_bus_v_high(p_sigma_plus, spec.r_max(), spec.v0())
                .map(|v| v - 1e-6 * spec.v0())
                .unwrap_or(0.0);
            let v_final = traj
                .final_state()
                .v_loads
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            (v_final <= floor)
                .then(|| format!("settled voltage {v_final} below the equilibrium floor {floor}"))
        };
        if let Some(detail) = violation {
            return Err(SimulateError::CertificateViolation {
                run,
                detail: format!(
                    "load {} switching {:.6} -> {:.6}: {detail}",
                    event.load, event.p_before, event.p_after
                ),
                trajectory: Box::new(traj),
            });
        }

        worst_rise = worst_rise.max(rise);
        worst_fd = worst_fd.max(fd);
        fd_pairs += pairs;
        runs.push(RunSummary {
            run,
            load: event.load,
            p_before: event.p_before,
            p_after,
            p_sigma_minus,
            p_sigma_plus,
            verdict: traj.verdict,
            rows: traj.times.len(),
            max_potential_rise: rise,
            max_pdot_mismatch: fd,
        });
    }

    Ok(FuzzReport {
        runs,
        max_potential_rise: worst_rise,
        max_pdot_mismatch: worst_fd,
        fd_pairs_checked: fd_pairs,
    })
}
