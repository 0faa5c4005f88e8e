//! Coarse-grid scan plus Nelder-Mead refinement for the 2-D switching
//! scenario maximizations. The objectives are smooth on their feasible
//! boxes and the maxima sit on corners or edges, which the penalty wall
//! handles by contracting the simplex back inside.

/// Maximize `f` over `x in [0, x_hi], y in [0, y_hi], |y - x| <= band`.
///
/// `f` may return `f64::NEG_INFINITY` to mark invalid points. Returns the
/// argmax and the value; with an empty feasible set (negative bounds) the
/// value is `NEG_INFINITY`.
pub(crate) fn maximize_box_band(
    f: &dyn Fn(f64, f64) -> f64,
    x_hi: f64,
    y_hi: f64,
    band: f64,
    grid_n: usize,
) -> ((f64, f64), f64) {
    let feasible = |x: f64, y: f64| {
        (0.0..=x_hi).contains(&x) && (0.0..=y_hi).contains(&y) && (y - x).abs() <= band
    };
    let penalized = |x: f64, y: f64| {
        if feasible(x, y) {
            f(x, y)
        } else {
            f64::NEG_INFINITY
        }
    };

    let n = grid_n.max(2);
    let mut best = ((0.0, 0.0), f64::NEG_INFINITY);
    for i in 0..n {
        let x = x_hi * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let y = y_hi * j as f64 / (n - 1) as f64;
            let v = penalized(x, y);
            if v > best.1 {
                best = ((x, y), v);
            }
        }
    }
    if !best.1.is_finite() {
        return best;
    }

    let cell = (x_hi.max(y_hi) / (n - 1) as f64).max(1e-12);
    let (refined, value) = nelder_mead_max(&penalized, best.0, cell);
    if value > best.1 {
        best = (
            (refined.0.clamp(0.0, x_hi), refined.1.clamp(0.0, y_hi)),
            value,
        );
    }

    // The maximum often sits on a vertex of the feasible polygon, where the
    // simplex can stall on a flat ridge; evaluate the vertices exactly.
    let vertices = [
        (0.0, 0.0),
        (x_hi, y_hi),
        (0.0, band.min(y_hi)),
        (band.min(x_hi), 0.0),
        ((y_hi - band).max(0.0), y_hi),
        (x_hi, (x_hi - band).max(0.0)),
        ((y_hi + band).min(x_hi), y_hi),
        (x_hi, (x_hi + band).min(y_hi)),
    ];
    for (x, y) in vertices {
        let v = penalized(x, y);
        if v > best.1 {
            best = ((x, y), v);
        }
    }
    best
}

fn nelder_mead_max(
    f: &dyn Fn(f64, f64) -> f64,
    start: (f64, f64),
    scale: f64,
) -> ((f64, f64), f64) {
    type P = (f64, f64);
    let eval = |p: P| -> f64 { f(p.0, p.1) };
    let mut simplex: Vec<(P, f64)> = [
        start,
        (start.0 + scale, start.1),
        (start.0, start.1 + scale),
    ]
    .into_iter()
    .map(|p| (p, eval(p)))
    .collect();

    for _ in 0..400 {
        // Descending by value: best first, worst last.
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let spread = (simplex[0].1 - simplex[2].1).abs();
        let size = (simplex[0].0 .0 - simplex[2].0 .0).abs()
            + (simplex[0].0 .1 - simplex[2].0 .1).abs()
            + (simplex[0].0 .0 - simplex[1].0 .0).abs()
            + (simplex[0].0 .1 - simplex[1].0 .1).abs();
        if size < 1e-13 * (1.0 + start.0.abs() + start.1.abs())
            || (simplex[0].1.is_finite() && spread < 1e-15 * (1.0 + simplex[0].1.abs()))
        {
            break;
        }

        let centroid = (
            0.5 * (simplex[0].0 .0 + simplex[1].0 .0),
            0.5 * (simplex[0].0 .1 + simplex[1].0 .1),
        );
        let worst = simplex[2];
        let shifted = |t: f64| {
            (
                centroid.0 + t * (centroid.0 - worst.0 .0),
                centroid.1 + t * (centroid.1 - worst.0 .1),
            )
        };

        let reflected = shifted(1.0);
        let fr = eval(reflected);
        if fr > simplex[0].1 {
            let expanded = shifted(2.0);
            let fe = eval(expanded);
            simplex[2] = if fe > fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr > simplex[1].1 {
            simplex[2] = (reflected, fr);
        } else {
            let contracted = if fr > worst.1 {
                shifted(0.5)
            } else {
                shifted(-0.5)
            };
            let fc = eval(contracted);
            if fc > worst.1.max(fr) {
                simplex[2] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                for k in 1..3 {
                    let p = (
                        0.5 * (simplex[0].0 .0 + simplex[k].0 .0),
                        0.5 * (simplex[0].0 .1 + simplex[k].0 .1),
                    );
                    simplex[k] = (p, eval(p));
                }
            }
        }
    }

    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    (simplex[0].0, simplex[0].1)
}
