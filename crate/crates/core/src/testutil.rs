//! Small constructors shared by unit tests.

use crate::network::{Globals, Line, LoadParams, NetworkSpec, Node};

pub fn two_bus_globals() -> Globals {
    Globals {
        v0: 1.0,
        r_max: 1.0,
        tau_max: 1.0,
        p_max: 0.1,
        v_min: 0.75,
        v_tr: 0.66,
    }
}

/// One source feeding one load over a single line. The line carries the
/// whole resistance budget (`r_max = r`).
pub fn two_bus_spec(p_nominal: f64, p_max_k: f64, capacitance: f64, r: f64, l: f64) -> NetworkSpec {
    let mut globals = two_bus_globals();
    globals.r_max = r;
    globals.p_max = p_max_k;
    two_bus_spec_with(globals, p_nominal, p_max_k, capacitance, r, l)
}

pub fn two_bus_spec_with(
    globals: Globals,
    p_nominal: f64,
    p_max_k: f64,
    capacitance: f64,
    r: f64,
    l: f64,
) -> NetworkSpec {
    NetworkSpec::new(
        vec![
            Node::Source,
            Node::Load(LoadParams {
                p_nominal,
                p_max: p_max_k,
                capacitance,
            }),
        ],
        vec![Line {
            from: 0,
            to: 1,
            resistance: r,
            inductance: l,
        }],
        globals,
    )
}
