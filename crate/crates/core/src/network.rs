//! Electrical network model: buses, RL lines, and the design assumptions an
//! ad hoc DC grid must satisfy before any certification result applies.
//!
//! A network is a connected graph of voltage-source buses and constant-power
//! load buses joined by resistive-inductive lines. The global parameters
//! ([`Globals`]) carry the system-wide design budgets: source setpoint `v0`,
//! aggregate line-resistance budget `r_max`, line time-constant bound
//! `tau_max`, loadability bound `p_max`, and the equilibrium/transient
//! voltage floors `v_min` and `v_tr`.

use std::fmt;

use nalgebra::DMatrix;

/// Parameters of a constant-power load attached to a bus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadParams {
    /// Power drawn in normal operation, watts.
    pub p_nominal: f64,
    /// Hard upper bound on the power this load may draw, watts.
    pub p_max: f64,
    /// Parallel capacitance installed at the load bus, farads.
    pub capacitance: f64,
}

/// A bus. Node indices are dense and 0-based; sources and loads share one
/// index space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Perfect voltage source pinned at the global setpoint `v0`.
    Source,
    /// Constant-power load with a parallel capacitor.
    Load(LoadParams),
}

impl Node {
    pub fn is_source(&self) -> bool {
        matches!(self, Node::Source)
    }

    pub fn load(&self) -> Option<&LoadParams> {
        match self {
            Node::Source => None,
            Node::Load(l) => Some(l),
        }
    }
}

/// A power line between two buses, modeled as a series RL branch.
///
/// Orientation is as declared; all downstream math is orientation-covariant.
/// Parallel lines between the same pair of buses are permitted, self-loops
/// are not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Ohms, must be positive.
    pub resistance: f64,
    /// Henries, must be positive.
    pub inductance: f64,
}

impl Line {
    /// Line time constant L/R, seconds.
    pub fn time_constant(&self) -> f64 {
        self.inductance / self.resistance
    }
}

/// System-wide design parameters shared by every unit in the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Globals {
    /// Source voltage setpoint, volts.
    pub v0: f64,
    /// Upper bound on the aggregate line resistance, ohms.
    pub r_max: f64,
    /// Strict upper bound on every line time constant, seconds.
    pub tau_max: f64,
    /// Upper bound on the total instantaneous load, watts.
    pub p_max: f64,
    /// Minimum acceptable equilibrium voltage, volts.
    pub v_min: f64,
    /// Minimum acceptable voltage during transients, volts.
    pub v_tr: f64,
}

/// Immutable description of a microgrid. Construct once, validate, share.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    nodes: Vec<Node>,
    edges: Vec<Line>,
    globals: Globals,
}

impl NetworkSpec {
    pub fn new(nodes: Vec<Node>, edges: Vec<Line>, globals: Globals) -> Self {
        NetworkSpec {
            nodes,
            edges,
            globals,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Line] {
        &self.edges
    }

    pub fn globals(&self) -> &Globals {
        &self.globals
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn v0(&self) -> f64 {
        self.globals.v0
    }

    pub fn r_max(&self) -> f64 {
        self.globals.r_max
    }

    pub fn tau_max(&self) -> f64 {
        self.globals.tau_max
    }

    pub fn p_max(&self) -> f64 {
        self.globals.p_max
    }

    pub fn v_min(&self) -> f64 {
        self.globals.v_min
    }

    pub fn v_tr(&self) -> f64 {
        self.globals.v_tr
    }

    /// Node indices of the load buses, ascending.
    pub fn load_nodes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| !n.is_source())
            .map(|(k, _)| k)
            .collect()
    }

    /// Iterator over `(node index, load parameters)` for every load bus.
    pub fn loads(&self) -> impl Iterator<Item = (usize, &LoadParams)> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(k, n)| n.load().map(|l| (k, l)))
    }

    pub fn load_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_source()).count()
    }

    /// Position of a node on the dense load axis, if it is a load.
    pub fn load_position(&self, node: usize) -> Option<usize> {
        self.nodes.get(node)?.load()?;
        Some(self.nodes[..node].iter().filter(|n| !n.is_source()).count())
    }

    /// Per-load nominal powers on the load axis.
    pub fn nominal_powers(&self) -> Vec<f64> {
        self.loads().map(|(_, l)| l.p_nominal).collect()
    }

    /// Per-load power bounds on the load axis.
    pub fn load_power_bounds(&self) -> Vec<f64> {
        self.loads().map(|(_, l)| l.p_max).collect()
    }

    /// Per-load capacitances on the load axis.
    pub fn capacitances(&self) -> Vec<f64> {
        self.loads().map(|(_, l)| l.capacitance).collect()
    }

    /// Smallest line time constant, if the network has any lines.
    pub fn tau_min(&self) -> Option<f64> {
        self.edges
            .iter()
            .map(Line::time_constant)
            .min_by(|a, b| a.total_cmp(b))
    }

    /// True when [`validate`] reports no hard violations.
    pub fn is_valid(&self) -> bool {
        validate(self).iter().all(Violation::is_informational)
    }
}

/// A failed (or noteworthy) design assumption found by [`validate`].
///
/// Violations are data, not errors: callers decide what to do with them.
/// Informational entries flag unusual but permitted constructions.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// No source bus anywhere in the network.
    NoSource,
    /// Node unreachable from every source bus.
    NotStronglyConnected {
        node: usize,
    },
    /// Line with identical endpoints.
    SelfLoop {
        edge: usize,
    },
    NonPositiveResistance {
        edge: usize,
    },
    NonPositiveInductance {
        edge: usize,
    },
    /// Line time constant at or above `tau_max`.
    TimeConstantExceedsBudget {
        edge: usize,
        tau: f64,
    },
    /// Total line resistance above `r_max`.
    ResistanceBudgetExceeded {
        total: f64,
    },
    /// The ordering `v0/2 < v_tr <= v_min < v0` does not hold.
    VoltageBandInvalid,
    NonPositiveCapacitance {
        node: usize,
    },
    NegativeNominalPower {
        node: usize,
    },
    /// Nominal power above the load's own bound.
    NominalExceedsLoadBound {
        node: usize,
    },
    /// A single load's bound exceeds the system loadability bound.
    LoadBoundExceedsSystemBound {
        node: usize,
    },
    /// `p_max` at or above the two-bus loadability apex `v0^2 / (4 r_max)`.
    LoadabilityExceedsApex {
        p_max: f64,
        apex: f64,
    },
    /// Informational: line joining two source buses.
    SourceToSourceLine {
        edge: usize,
    },
    /// Informational: the per-load bounds sum to less than `p_max`, so the
    /// system bound is not attainable and certificates are conservative.
    LoadBoundsBelowSystemBound {
        total: f64,
    },
}

impl Violation {
    pub fn is_informational(&self) -> bool {
        matches!(
            self,
            Violation::SourceToSourceLine { .. } | Violation::LoadBoundsBelowSystemBound { .. }
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoSource => write!(f, "network has no source bus"),
            Violation::NotStronglyConnected { node } => {
                write!(f, "node {node} is not connected to any source")
            }
            Violation::SelfLoop { edge } => write!(f, "edge {edge} is a self-loop"),
            Violation::NonPositiveResistance { edge } => {
                write!(f, "edge {edge} has non-positive resistance")
            }
            Violation::NonPositiveInductance { edge } => {
                write!(f, "edge {edge} has non-positive inductance")
            }
            Violation::TimeConstantExceedsBudget { edge, tau } => {
                write!(f, "edge {edge} time constant {tau} is not below tau_max")
            }
            Violation::ResistanceBudgetExceeded { total } => {
                write!(f, "total line resistance {total} exceeds r_max")
            }
            Violation::VoltageBandInvalid => {
                write!(f, "voltage bounds must satisfy v0/2 < v_tr <= v_min < v0")
            }
            Violation::NonPositiveCapacitance { node } => {
                write!(f, "load {node} has non-positive capacitance")
            }
            Violation::NegativeNominalPower { node } => {
                write!(f, "load {node} has negative nominal power")
            }
            Violation::NominalExceedsLoadBound { node } => {
                write!(f, "load {node} nominal power exceeds its own bound")
            }
            Violation::LoadBoundExceedsSystemBound { node } => {
                write!(f, "load {node} power bound exceeds the system bound p_max")
            }
            Violation::LoadabilityExceedsApex { p_max, apex } => {
                write!(f, "p_max {p_max} is not below the loadability apex {apex}")
            }
            Violation::SourceToSourceLine { edge } => {
                write!(f, "note: edge {edge} joins two source buses")
            }
            Violation::LoadBoundsBelowSystemBound { total } => {
                write!(
                    f,
                    "note: load bounds sum to {total}, below p_max; the system bound is not attainable"
                )
            }
        }
    }
}

/// Check every design assumption and report all violations found.
///
/// The list is empty exactly when the network satisfies all assumptions;
/// informational entries do not count against validity (see
/// [`Violation::is_informational`]). Deterministic and order-independent
/// over node/edge permutations.
pub fn validate(spec: &NetworkSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = spec.globals;

    let sources: Vec<usize> = (0..spec.node_count())
        .filter(|&k| spec.nodes[k].is_source())
        .collect();
    if sources.is_empty() {
        out.push(Violation::NoSource);
    }

    // Connectivity to a source, treating lines as undirected conductors.
    let mut reached = vec![false; spec.node_count()];
    let mut stack = sources.clone();
    for &s in &sources {
        reached[s] = true;
    }
    while let Some(k) = stack.pop() {
        for e in &spec.edges {
            for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                if a == k && a != b && !reached[b] {
                    reached[b] = true;
                    stack.push(b);
                }
            }
        }
    }
    for (k, r) in reached.iter().enumerate() {
        if !r {
            out.push(Violation::NotStronglyConnected { node: k });
        }
    }

    let mut r_total = 0.0;
    for (idx, e) in spec.edges.iter().enumerate() {
        if e.from == e.to {
            out.push(Violation::SelfLoop { edge: idx });
        }
        if !(e.resistance > 0.0) {
            out.push(Violation::NonPositiveResistance { edge: idx });
        }
        if !(e.inductance > 0.0) {
            out.push(Violation::NonPositiveInductance { edge: idx });
        }
        if e.resistance > 0.0 {
            r_total += e.resistance;
            let tau = e.time_constant();
            if !(tau < g.tau_max) {
                out.push(Violation::TimeConstantExceedsBudget { edge: idx, tau });
            }
        }
        if spec.nodes.get(e.from).is_some_and(Node::is_source)
            && spec.nodes.get(e.to).is_some_and(Node::is_source)
        {
            out.push(Violation::SourceToSourceLine { edge: idx });
        }
    }
    if r_total > g.r_max {
        out.push(Violation::ResistanceBudgetExceeded { total: r_total });
    }

    if !(g.v0 / 2.0 < g.v_tr && g.v_tr <= g.v_min && g.v_min < g.v0) {
        out.push(Violation::VoltageBandInvalid);
    }

    let apex = g.v0 * g.v0 / (4.0 * g.r_max);
    if !(g.p_max < apex) {
        out.push(Violation::LoadabilityExceedsApex {
            p_max: g.p_max,
            apex,
        });
    }

    let mut bound_sum = 0.0;
    for (k, l) in spec.loads() {
        if !(l.capacitance > 0.0) {
            out.push(Violation::NonPositiveCapacitance { node: k });
        }
        if l.p_nominal < 0.0 {
            out.push(Violation::NegativeNominalPower { node: k });
        }
        if l.p_nominal > l.p_max {
            out.push(Violation::NominalExceedsLoadBound { node: k });
        }
        if l.p_max > g.p_max {
            out.push(Violation::LoadBoundExceedsSystemBound { node: k });
        }
        bound_sum += l.p_max;
    }
    if spec.load_count() > 0 && bound_sum < g.p_max {
        out.push(Violation::LoadBoundsBelowSystemBound { total: bound_sum });
    }

    out
}

/// Oriented incidence matrix, one row per line and one column per bus.
///
/// Row `a` holds +1 at `from(a)` and -1 at `to(a)`. Applied to a voltage
/// vector it yields per-line potential differences; its transpose applied to
/// line currents yields the net current leaving each bus.
pub fn incidence_matrix(spec: &NetworkSpec) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(spec.edge_count(), spec.node_count());
    for (a, e) in spec.edges().iter().enumerate() {
        m[(a, e.from)] += 1.0;
        m[(a, e.to)] -= 1.0;
    }
    m
}

/// Columns of the incidence matrix restricted to load buses, in load-axis
/// order.
pub fn load_incidence(spec: &NetworkSpec) -> DMatrix<f64> {
    let loads = spec.load_nodes();
    let mut m = DMatrix::zeros(spec.edge_count(), loads.len());
    for (a, e) in spec.edges().iter().enumerate() {
        for (col, &node) in loads.iter().enumerate() {
            if e.from == node {
                m[(a, col)] += 1.0;
            }
            if e.to == node {
                m[(a, col)] -= 1.0;
            }
        }
    }
    m
}
