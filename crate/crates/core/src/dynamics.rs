//! Shared right-hand side of the circuit equations, used by both the
//! potential machinery and the transient simulator.
//!
//! The packed layout puts line currents first and load voltages second:
//! `y = [i_0 .. i_{E-1}, v_0 .. v_{L-1}]`.

use nalgebra::DVector;

use crate::network::NetworkSpec;
use crate::potential::SystemState;

/// Time derivative of the packed state under load powers `p` (load axis),
/// with sources pinned at `v0`.
///
/// Line `a`:  L_a di_a = -R_a i_a + (v_from - v_to)
/// Load `k`:  C_k dv_k = -p_k / v_k - (net current leaving k)
///
/// Returns `None` if any load voltage is non-positive, where the
/// constant-power model is undefined.
pub(crate) fn packed_derivative(
    spec: &NetworkSpec,
    p: &[f64],
    y: &DVector<f64>,
) -> Option<DVector<f64>> {
    let n_e = spec.edge_count();
    let n_l = spec.load_count();
    if (0..n_l).any(|k| !(y[n_e + k] > 0.0)) {
        return None;
    }
    let mut dy = DVector::zeros(n_e + n_l);
    for (a, e) in spec.edges().iter().enumerate() {
        let volt = |node: usize| match spec.load_position(node) {
            Some(col) => y[n_e + col],
            None => spec.v0(),
        };
        let drop = volt(e.from) - volt(e.to);
        dy[a] = (-e.resistance * y[a] + drop) / e.inductance;
        if let Some(col) = spec.load_position(e.from) {
            dy[n_e + col] -= y[a];
        }
        if let Some(col) = spec.load_position(e.to) {
            dy[n_e + col] += y[a];
        }
    }
    for (col, (_, load)) in spec.loads().enumerate() {
        let v = y[n_e + col];
        dy[n_e + col] = (dy[n_e + col] - p[col] / v) / load.capacitance;
    }
    Some(dy)
}

/// Structured `(di_lines, dv_loads)` form of [`packed_derivative`].
pub(crate) fn state_derivative(
    spec: &NetworkSpec,
    state: &SystemState,
    p: &[f64],
) -> Option<(DVector<f64>, DVector<f64>)> {
    let y = pack(spec, state);
    let dy = packed_derivative(spec, p, &y)?;
    let n_e = spec.edge_count();
    Some((
        DVector::from_fn(n_e, |a, _| dy[a]),
        DVector::from_fn(spec.load_count(), |k, _| dy[n_e + k]),
    ))
}

pub(crate) fn pack(spec: &NetworkSpec, state: &SystemState) -> DVector<f64> {
    let n_e = spec.edge_count();
    let n_l = spec.load_count();
    DVector::from_fn(n_e + n_l, |i, _| {
        if i < n_e {
            state.i_lines[i]
        } else {
            state.v_loads[i - n_e]
        }
    })
}

pub(crate) fn unpack(spec: &NetworkSpec, y: &DVector<f64>, time: f64) -> SystemState {
    let n_e = spec.edge_count();
    SystemState {
        v_loads: DVector::from_fn(spec.load_count(), |k, _| y[n_e + k]),
        i_lines: DVector::from_fn(n_e, |a, _| y[a]),
        time,
    }
}
