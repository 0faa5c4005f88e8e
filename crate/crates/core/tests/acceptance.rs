//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test -p dcgrid-core --test acceptance`
//! (add `-- --nocapture` to see the lines for passing criteria).

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dcgrid_core::certify::{
    c_necessary_bound, c_transient_bound, critical_loadability_for, design_curves, TransientBound,
};
use dcgrid_core::equilibrium::{apex_power, co_content_hessian, solve_power_flow, two_bus_v_high};
use dcgrid_core::potential::{co_content, co_content_losses_form};
use dcgrid_core::simulate::random::{random_certified_spec, RandomNetworkConfig};
use dcgrid_core::simulate::{
    simulate_from_equilibrium, verify_certificate, IntegrateOptions, Outcome, SwitchingEvent,
};
use dcgrid_core::{Globals, Line, LoadParams, NetworkSpec, Node};
use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, ok: bool, detail: &str) {
    println!(
        "[criterion {criterion}] {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion}: {detail}");
}

fn two_bus(globals: Globals, p_max_k: f64, capacitance: f64, inductance: f64) -> NetworkSpec {
    NetworkSpec::new(
        vec![
            Node::Source,
            Node::Load(LoadParams {
                p_nominal: 0.0,
                p_max: p_max_k,
                capacitance,
            }),
        ],
        vec![Line {
            from: 0,
            to: 1,
            resistance: globals.r_max,
            inductance,
        }],
        globals,
    )
}

/// Criterion 1: critical loadability reproduces the reference point
/// 0.468 P0 (within 0.01 P0) at v_tr = 0.66 v0, in under a second.
#[test]
fn criterion_1_critical_loadability() {
    let start = Instant::now();
    let p_crit = critical_loadability_for(0.66, 1.0, 1.0);
    let elapsed = start.elapsed();
    let p0 = 0.25;
    let ok = (p_crit - 0.468 * p0).abs() <= 0.01 * p0 && elapsed < Duration::from_secs(1);
    report(
        1,
        ok,
        &format!(
            "p_crit = {:.6} = {:.4} P0 in {elapsed:?}",
            p_crit,
            p_crit / p0
        ),
    );
}

/// Criterion 2: the Newton power flow matches the closed two-bus form to
/// 1e-9 across 100 loads up to 0.99 P0, in under a second.
#[test]
fn criterion_2_two_bus_oracle() {
    let apex = apex_power(1.0, 1.0);
    let globals = Globals {
        v0: 1.0,
        r_max: 1.0,
        tau_max: 1.0,
        p_max: 0.995 * apex,
        v_min: 0.52,
        v_tr: 0.51,
    };
    let spec = two_bus(globals, 0.995 * apex, 1.0, 0.5);

    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let p = 0.99 * apex * i as f64 / 99.0;
        let eq = solve_power_flow(&spec, &[p]).expect("feasible loading");
        let expect = two_bus_v_high(p, 1.0, 1.0).unwrap();
        worst = worst.max((eq.v_sep[1] - expect).abs());
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-9 && elapsed < Duration::from_secs(1);
    report(
        2,
        ok,
        &format!("max |v_newton - v_closed| = {worst:.3e} in {elapsed:?}"),
    );
}

/// Criterion 3: the loss-form identity for the co-content holds at the
/// Newton equilibrium of 200 randomized networks of up to 8 buses,
/// relative tolerance 1e-9.
#[test]
fn criterion_3_losses_identity() {
    let mut worst = 0.0f64;
    for seed in 0..200u64 {
        let cfg = RandomNetworkConfig {
            n_nodes: 2 + (seed as usize % 7),
            loading_fraction: 0.3 + 0.003 * seed as f64,
            ..RandomNetworkConfig::default()
        };
        let spec = random_certified_spec(&cfg, seed);
        let p = spec.nominal_powers();
        let eq = solve_power_flow(&spec, &p).expect("generated loading is feasible");
        let direct = co_content(&spec, &eq.v_sep, &p).unwrap();
        let losses = co_content_losses_form(&spec, &eq, &p).unwrap();
        let rel = (direct - losses).abs() / direct.abs().max(losses.abs()).max(1e-15);
        worst = worst.max(rel);
    }
    report(3, worst <= 1e-9, &format!("max relative gap = {worst:.3e}"));
}

struct FuzzAggregate {
    failures: Vec<String>,
    max_rise: f64,
    max_fd_mismatch: f64,
    fd_pairs: usize,
    runs: usize,
    elapsed: Duration,
}

fn fuzz_campaign() -> &'static FuzzAggregate {
    static CAMPAIGN: OnceLock<FuzzAggregate> = OnceLock::new();
    CAMPAIGN.get_or_init(|| {
        let start = Instant::now();
        let mut agg = FuzzAggregate {
            failures: Vec::new(),
            max_rise: 0.0,
            max_fd_mismatch: 0.0,
            fd_pairs: 0,
            runs: 0,
            elapsed: Duration::ZERO,
        };
        for seed in 0..50u64 {
            let cfg = RandomNetworkConfig {
                n_nodes: 3 + (seed as usize % 5),
                n_sources: 1 + (seed as usize % 2),
                loading_fraction: 0.4 + 0.01 * seed as f64,
                capacitance_margin: 1.5 + 0.03 * seed as f64,
                ..RandomNetworkConfig::default()
            };
            let spec = random_certified_spec(&cfg, seed);
            match verify_certificate(&spec, 20, 1_000 + seed) {
                Ok(report) => {
                    agg.max_rise = agg.max_rise.max(report.max_potential_rise);
                    agg.max_fd_mismatch = agg.max_fd_mismatch.max(report.max_pdot_mismatch);
                    agg.fd_pairs += report.fd_pairs_checked;
                    agg.runs += report.runs.len();
                }
                Err(e) => agg.failures.push(format!("seed {seed}: {e}")),
            }
        }
        agg.elapsed = start.elapsed();
        agg
    })
}

/// Criterion 4: across 50 randomized certified networks with 20 admissible
/// single-load switches each, every trajectory settles back at the stable
/// equilibrium and the potential never rises between steps (slack 1e-9),
/// all inside five minutes.
#[test]
fn criterion_4_lyapunov_decay() {
    let agg = fuzz_campaign();
    let ok = agg.failures.is_empty()
        && agg.runs == 1_000
        && agg.max_rise <= 1e-9
        && agg.elapsed < Duration::from_secs(300);
    report(
        4,
        ok,
        &format!(
            "{} runs, max potential rise {:.3e}, {:?}{}",
            agg.runs,
            agg.max_rise,
            agg.elapsed,
            if agg.failures.is_empty() {
                String::new()
            } else {
                format!("; failures: {:?}", agg.failures)
            }
        ),
    );
}

/// Criterion 5: halving the necessary capacitance loses stability under
/// the worst-case switch-on, demonstrated by simulation.
#[test]
fn criterion_5_necessity() {
    let p_max = 0.15;
    let v_min = two_bus_v_high(p_max, 1.0, 1.0).unwrap();
    let globals = Globals {
        v0: 1.0,
        r_max: 1.0,
        tau_max: 1.0,
        p_max,
        v_min,
        v_tr: 0.66,
    };
    let c = 0.5 * c_necessary_bound(p_max, 1.0, v_min).unwrap();
    let spec = two_bus(globals, p_max, c, 0.9);
    let traj = simulate_from_equilibrium(
        &spec,
        &[0.0],
        &[SwitchingEvent {
            load: 1,
            p_before: 0.0,
            p_after: p_max,
            time: 0.1,
        }],
        300.0,
        IntegrateOptions::default(),
    )
    .expect("simulation runs");
    let ok = traj.verdict != Outcome::ConvergedToSep;
    report(
        5,
        ok,
        &format!("verdict {:?} with C = 0.5 necessary = {c:.4}", traj.verdict),
    );
}

/// Criterion 6: design-curve shape at v_tr = 0.66 v0 — the transient curve
/// dominates the necessary curve, all curves are nondecreasing, and the
/// transient requirement exceeds 10 C0 within 0.02 P0 of the critical
/// loadability.
#[test]
fn criterion_6_design_curve_shapes() {
    let globals = Globals {
        v0: 1.0,
        r_max: 1.0,
        tau_max: 1.0,
        p_max: 0.1,
        v_min: 0.75,
        v_tr: 0.66,
    };
    let spec = two_bus(globals, 0.1, 1.0, 0.5);
    let curves = design_curves(&spec, 60);
    let p_crit = critical_loadability_for(0.66, 1.0, 1.0);

    let dominance = curves
        .samples
        .iter()
        .all(|s| s.c_transient_over_c0 >= s.c_necessary_over_c0);
    let monotone = curves.samples.windows(2).all(|w| {
        w[1].c_vtr_over_c0 >= w[0].c_vtr_over_c0
            && w[1].c_transient_over_c0 >= w[0].c_transient_over_c0
            && w[1].c_necessary_over_c0 >= w[0].c_necessary_over_c0
    });
    let diverges = curves.samples.iter().any(|s| {
        (s.delta_p_over_p0 * curves.p0 - p_crit).abs() <= 0.02 * curves.p0
            && s.c_transient_over_c0 > 10.0
    });
    report(
        6,
        dominance && monotone && diverges,
        &format!("dominance {dominance}, monotone {monotone}, divergence near p_crit {diverges}"),
    );
}

/// Criterion 7: the scenario optimizer agrees with a 400x400 brute-force
/// grid within one cell on 20 randomized parameter sets, and lands on the
/// switch-on-to-full-loading pattern whenever the grid does.
#[test]
fn criterion_7_optimizer_against_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut worst_cells = 0.0f64;
    let mut remark_checked = 0;
    for set in 0..20 {
        let v0 = rng.random_range(0.8..2.0);
        let v_tr = v0 * rng.random_range(0.55..0.8);
        let r_max = rng.random_range(0.5..2.0);
        let tau_max = rng.random_range(0.5..2.0);
        let p_crit = critical_loadability_for(v_tr, v0, r_max);
        let p_max = rng.random_range(0.3..0.95) * p_crit;
        let p_max_k = rng.random_range(0.15..1.0) * p_max;
        let globals = Globals {
            v0,
            r_max,
            tau_max,
            p_max,
            v_min: v_tr,
            v_tr,
        };
        let spec = two_bus(globals, p_max, 1.0, 0.4 * tau_max * r_max);

        // Brute-force oracle over the feasible band.
        let n = 400;
        let cell = p_max / (n - 1) as f64;
        let objective = |p_minus: f64, p_plus: f64| -> f64 {
            let v_high = two_bus_v_high(p_minus, r_max, v0).unwrap();
            let boundary = (v_tr - v0).powi(2) / (2.0 * r_max) + p_plus * v_tr.ln();
            let initial = p_minus / 2.0 * (v0 - v_high) / v_high + p_plus * v0.ln();
            tau_max * ((p_minus - p_plus) / v_high).powi(2) / (2.0 * (boundary - initial))
        };
        let mut brute = (0.0, 0.0, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..n {
                let pm = cell * i as f64;
                let pp = cell * j as f64;
                if (pp - pm).abs() > p_max_k * (1.0 + 1e-12) {
                    continue;
                }
                let v = objective(pm, pp);
                if v > brute.2 {
                    brute = (pm, pp, v);
                }
            }
        }

        let bound = c_transient_bound(p_max_k, &spec).expect("loading below critical");
        let TransientBound::Finite {
            capacitance,
            scenario,
        } = bound
        else {
            panic!("set {set}: loading below critical must certify");
        };
        assert!(
            capacitance >= brute.2 - 1e-12 * brute.2.abs(),
            "set {set}: optimizer {capacitance} below grid {}",
            brute.2
        );
        let d_minus = (scenario.p_sigma_minus - brute.0).abs();
        let d_plus = (scenario.p_sigma_plus - brute.1).abs();
        worst_cells = worst_cells.max(d_minus.max(d_plus) / cell);

        // Switch-on-to-full-loading pattern.
        let remark = (p_max - p_max_k, p_max);
        if (brute.0 - remark.0).abs() <= cell && (brute.1 - remark.1).abs() <= cell {
            remark_checked += 1;
            assert!(
                (scenario.p_sigma_minus - remark.0).abs() <= cell
                    && (scenario.p_sigma_plus - remark.1).abs() <= cell,
                "set {set}: scenario {scenario:?} misses the worst-case pattern {remark:?}"
            );
        }
    }
    let ok = worst_cells <= 1.0 + 1e-9;
    report(
        7,
        ok,
        &format!(
            "max argmax offset {worst_cells:.3} cells; worst-case pattern confirmed on {remark_checked}/20 sets"
        ),
    );
}

/// Criterion 8: the co-content Hessian is positive definite at 1000 random
/// points with every load voltage above v0/2 and total load below the
/// apex.
#[test]
fn criterion_8_hessian_convexity() {
    let mut rng = ChaCha8Rng::seed_from_u64(888);
    let mut min_eig = f64::INFINITY;
    for seed in 0..25u64 {
        let cfg = RandomNetworkConfig {
            n_nodes: 3 + (seed as usize % 6),
            ..RandomNetworkConfig::default()
        };
        let spec = random_certified_spec(&cfg, 10_000 + seed);
        let apex = apex_power(spec.r_max(), spec.v0());
        let n_loads = spec.load_count();
        for _ in 0..40 {
            let v_loads: Vec<f64> = (0..n_loads)
                .map(|_| spec.v0() * rng.random_range(0.505..1.0))
                .collect();
            let mut v_full = DVector::from_element(spec.node_count(), spec.v0());
            for (col, &node) in spec.load_nodes().iter().enumerate() {
                v_full[node] = v_loads[col];
            }
            let raw: Vec<f64> = (0..n_loads).map(|_| rng.random_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let target = rng.random_range(0.1..0.98) * apex;
            let p: Vec<f64> = raw.iter().map(|w| w / total * target).collect();

            let h = co_content_hessian(&spec, &v_full, &p).unwrap();
            let eig = h.symmetric_eigenvalues();
            min_eig = min_eig.min(eig.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    report(
        8,
        min_eig > 0.0,
        &format!("smallest eigenvalue over 1000 samples = {min_eig:.3e}"),
    );
}

/// Criterion 9: the analytic decay rate agrees with the finite-differenced
/// potential on every accepted step of the criterion-4 runs, within 1e-4
/// relative.
#[test]
fn criterion_9_pdot_consistency() {
    let agg = fuzz_campaign();
    let ok = agg.failures.is_empty() && agg.fd_pairs > 0 && agg.max_fd_mismatch <= 1e-4;
    report(
        9,
        ok,
        &format!(
            "max relative mismatch {:.3e} over {} step pairs",
            agg.max_fd_mismatch, agg.fd_pairs
        ),
    );
}
