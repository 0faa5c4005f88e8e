//! Randomized network generation for fuzzing: uniform spanning trees with
//! extra edges, parameters drawn inside the certification assumptions, and
//! capacitors sized with margin over the sufficient bounds.

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certify::{c_decay_bound, c_transient_bound, critical_loadability_for};
use crate::network::{Globals, Line, LoadParams, NetworkSpec, Node};

/// Knobs for [`random_certified_spec`].
#[derive(Debug, Clone, Copy)]
pub struct RandomNetworkConfig {
    /// Total buses, at least 2.
    pub n_nodes: usize,
    /// Source buses, at least 1 and below `n_nodes`.
    pub n_sources: usize,
    pub v0: f64,
    pub r_max: f64,
    pub tau_max: f64,
    pub v_tr: f64,
    pub v_min: f64,
    /// Total loading bound as a fraction of the critical loadability,
    /// strictly below 1 so the transient bound stays finite.
    pub loading_fraction: f64,
    /// Installed capacitance over the sufficient bound; above 1 certifies.
    pub capacitance_margin: f64,
    /// Chance of adding each candidate non-tree edge.
    pub extra_edge_probability: f64,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        RandomNetworkConfig {
            n_nodes: 5,
            n_sources: 1,
            v0: 1.0,
            r_max: 1.0,
            tau_max: 1.0,
            v_tr: 0.66,
            v_min: 0.75,
            loading_fraction: 0.7,
            capacitance_margin: 2.0,
            extra_edge_probability: 0.3,
        }
    }
}

/// Decode a uniform random tree over `n` labeled nodes from its sequence
/// representation.
fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    assert!(n >= 2);
    if n == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut leaves: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
        .filter(|&k| degree[k] == 1)
        .map(std::cmp::Reverse)
        .collect();
    for &s in &seq {
        let std::cmp::Reverse(leaf) = leaves.pop().expect("tree sequence leaves a leaf");
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.push(std::cmp::Reverse(s));
        }
    }
    let std::cmp::Reverse(a) = leaves.pop().unwrap();
    let std::cmp::Reverse(b) = leaves.pop().unwrap();
    edges.push((a, b));
    edges
}

/// Generate a random connected network whose capacitors carry the
/// configured margin over the sufficient bounds, so that certification
/// holds by construction. Deterministic given the seed.
pub fn random_certified_spec(cfg: &RandomNetworkConfig, seed: u64) -> NetworkSpec {
    assert!(cfg.n_nodes >= 2 && cfg.n_sources >= 1 && cfg.n_sources < cfg.n_nodes);
    assert!(cfg.loading_fraction > 0.0 && cfg.loading_fraction < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n_nodes;

    let mut pairs = random_tree(n, &mut rng);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(cfg.extra_edge_probability) {
                pairs.push((i, j));
            }
        }
    }

    // Random orientations; resistances scaled into the budget.
    let raw: Vec<f64> = pairs.iter().map(|_| rng.random_range(0.5..1.5)).collect();
    let budget = cfg.r_max * rng.random_range(0.55..0.95);
    let scale = budget / raw.iter().sum::<f64>();
    let edges: Vec<Line> = pairs
        .iter()
        .zip(&raw)
        .map(|(&(a, b), &w)| {
            let (from, to) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            let resistance = w * scale;
            let tau = cfg.tau_max * rng.random_range(0.2..0.9);
            Line {
                from,
                to,
                resistance,
                inductance: tau * resistance,
            }
        })
        .collect();

    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let source_set: Vec<usize> = ids[..cfg.n_sources].to_vec();

    let p_crit = critical_loadability_for(cfg.v_tr, cfg.v0, cfg.r_max);
    let p_target = cfg.loading_fraction * p_crit;
    let n_loads = n - cfg.n_sources;
    let weights: Vec<f64> = (0..n_loads).map(|_| rng.random_range(0.2..1.0)).collect();
    let weight_sum: f64 = weights.iter().sum();
    let bounds: Vec<f64> = weights.iter().map(|w| p_target * w / weight_sum).collect();
    // The system bound is the exact float sum, so every per-load bound and
    // their total stay admissible to the last ulp.
    let p_max: f64 = bounds.iter().sum();

    let globals = Globals {
        v0: cfg.v0,
        r_max: cfg.r_max,
        tau_max: cfg.tau_max,
        p_max,
        v_min: cfg.v_min,
        v_tr: cfg.v_tr,
    };

    let mut load_idx = 0;
    let nodes: Vec<Node> = (0..n)
        .map(|k| {
            if source_set.contains(&k) {
                Node::Source
            } else {
                let p_max_k = bounds[load_idx];
                load_idx += 1;
                Node::Load(LoadParams {
                    p_nominal: rng.random_range(0.2..0.9) * p_max_k,
                    p_max: p_max_k,
                    capacitance: 1.0,
                })
            }
        })
        .collect();
    let draft = NetworkSpec::new(nodes, edges, globals);

    // Size the capacitors against the bounds computed on the draft.
    let sized: Vec<Node> = draft
        .nodes()
        .iter()
        .map(|node| match node {
            Node::Source => Node::Source,
            Node::Load(l) => {
                let c_vtr = c_decay_bound(l.p_max, cfg.tau_max, cfg.v_tr).expect("v_tr > 0");
                let c_tr = c_transient_bound(l.p_max, &draft)
                    .expect("loading below critical")
                    .as_f64();
                Node::Load(LoadParams {
                    capacitance: cfg.capacitance_margin * c_vtr.max(c_tr),
                    ..*l
                })
            }
        })
        .collect();
    NetworkSpec::new(sized, draft.edges().to_vec(), globals)
}
