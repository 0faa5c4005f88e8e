//! CSV and text rendering. All numeric CSV fields carry 12 significant
//! digits so identical inputs produce byte-identical output.

use std::path::{Path, PathBuf};

use dcgrid_core::certify::{CertificationReport, DesignCurves, TransientBound, Verdict};
use dcgrid_core::simulate::{FuzzReport, Trajectory};
use dcgrid_core::{EquilibriumResult, NetworkSpec, NoseCurve};

/// Fixed 12-significant-digit scientific form; infinities render as `inf`.
pub fn fmt12(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.11e}")
}

/// Resolve a `--out` path against `DCGRID_OUT_DIR` when it is relative.
pub fn resolve_out(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var("DCGRID_OUT_DIR") {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path.to_path_buf()
}

pub fn nose_csv(curve: &NoseCurve) -> String {
    let mut out = String::from("p,v_high,v_low\n");
    for s in &curve.samples {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt12(s.p),
            fmt12(s.v_high),
            fmt12(s.v_low)
        ));
    }
    out
}

pub fn design_csv(curves: &DesignCurves) -> String {
    let mut out =
        String::from("delta_p_over_p0,c_vtr_over_c0,c_transient_over_c0,c_necessary_over_c0\n");
    for s in &curves.samples {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt12(s.delta_p_over_p0),
            fmt12(s.c_vtr_over_c0),
            fmt12(s.c_transient_over_c0),
            fmt12(s.c_necessary_over_c0)
        ));
    }
    out
}

pub fn equilibrium_csv(spec: &NetworkSpec, eq: &EquilibriumResult) -> String {
    let mut out = String::from("quantity,id,value\n");
    for k in 0..spec.node_count() {
        out.push_str(&format!("v,{k},{}\n", fmt12(eq.v_sep[k])));
    }
    for a in 0..spec.edge_count() {
        out.push_str(&format!("i,{a},{}\n", fmt12(eq.i_sep[a])));
    }
    out
}

pub fn equilibrium_text(spec: &NetworkSpec, eq: &EquilibriumResult) -> String {
    let mut out = format!(
        "converged in {} iterations, residual {}, classification {:?}\n",
        eq.iterations,
        fmt12(eq.residual_norm),
        eq.classification
    );
    for (k, node) in spec.nodes().iter().enumerate() {
        let kind = if node.is_source() { "source" } else { "load" };
        out.push_str(&format!("node {k} ({kind}): v = {}\n", fmt12(eq.v_sep[k])));
    }
    for (a, e) in spec.edges().iter().enumerate() {
        out.push_str(&format!(
            "edge {a} ({}->{}): i = {}\n",
            e.from,
            e.to,
            fmt12(eq.i_sep[a])
        ));
    }
    out
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Certified => "Certified",
        Verdict::NecessaryOnlyMet => "NecessaryOnlyMet",
        Verdict::Fails => "Fails",
    }
}

pub fn certify_csv(report: &CertificationReport) -> String {
    let mut out = String::from("load,p_max_k,installed,c_vtr,c_transient,c_necessary,verdict\n");
    for l in &report.loads {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            l.node,
            fmt12(l.p_max_k),
            fmt12(l.installed),
            fmt12(l.c_vtr),
            fmt12(l.c_transient.as_f64()),
            fmt12(l.c_necessary),
            verdict_name(l.verdict)
        ));
    }
    out
}

pub fn certify_text(report: &CertificationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "critical loadability p_crit = {}\n",
        fmt12(report.p_crit)
    ));
    out.push_str(&format!(
        "equilibrium feasibility: p_max within limit {} -> {}\n",
        fmt12(report.loadability_limit),
        if report.feasible { "ok" } else { "INFEASIBLE" }
    ));
    if let Some(s) = report.binding_scenario {
        out.push_str(&format!(
            "binding scenario: total load {} -> {}\n",
            fmt12(s.p_sigma_minus),
            fmt12(s.p_sigma_plus)
        ));
    }
    for l in &report.loads {
        let transient = match l.c_transient {
            TransientBound::Finite { capacitance, .. } => fmt12(capacitance),
            TransientBound::Uncertifiable => "uncertifiable".into(),
        };
        out.push_str(&format!(
            "load {}: installed {} | decay bound {} | transient bound {} | necessary {} => {}\n",
            l.node,
            fmt12(l.installed),
            fmt12(l.c_vtr),
            transient,
            fmt12(l.c_necessary),
            verdict_name(l.verdict)
        ));
    }
    out.push_str(if report.all_certified() {
        "verdict: Certified\n"
    } else {
        "verdict: NOT certified\n"
    });
    out
}

pub fn trajectory_csv(spec: &NetworkSpec, traj: &Trajectory) -> String {
    let mut header = String::from("time");
    for node in spec.load_nodes() {
        header.push_str(&format!(",v_{node}"));
    }
    for a in 0..spec.edge_count() {
        header.push_str(&format!(",i_{a}"));
    }
    header.push_str(",G,P,Pdot,event\n");

    let mut out = header;
    for (row, time) in traj.times.iter().enumerate() {
        let state = &traj.states[row];
        let sample = &traj.potentials[row];
        let mut line = fmt12(*time);
        for v in state.v_loads.iter() {
            line.push(',');
            line.push_str(&fmt12(*v));
        }
        for i in state.i_lines.iter() {
            line.push(',');
            line.push_str(&fmt12(*i));
        }
        line.push_str(&format!(
            ",{},{},{},",
            fmt12(sample.g),
            fmt12(sample.p_total),
            fmt12(sample.p_dot)
        ));
        if let Some(event) = traj.events.iter().find(|e| e.row == row) {
            line.push_str(&format!(
                "load {} {} -> {}",
                event.load,
                fmt12(event.p_before),
                fmt12(event.p_after)
            ));
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}

pub fn fuzz_csv(report: &FuzzReport) -> String {
    let mut out = String::from(
        "run,load,p_before,p_after,p_sigma_minus,p_sigma_plus,verdict,rows,max_potential_rise,max_pdot_mismatch\n",
    );
    for r in &report.runs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:?},{},{},{}\n",
            r.run,
            r.load,
            fmt12(r.p_before),
            fmt12(r.p_after),
            fmt12(r.p_sigma_minus),
            fmt12(r.p_sigma_plus),
            r.verdict,
            r.rows,
            fmt12(r.max_potential_rise),
            fmt12(r.max_pdot_mismatch)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt12_is_fixed_width_significand() {
        assert_eq!(fmt12(0.25), "2.50000000000e-1");
        assert_eq!(fmt12(1.0), "1.00000000000e0");
        assert_eq!(fmt12(f64::INFINITY), "inf");
        assert_eq!(fmt12(-0.1170506195068359), "-1.17050619507e-1");
    }
}
