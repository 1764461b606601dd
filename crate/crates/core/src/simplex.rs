//! Nelder-Mead simplex descent with box projection.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Converged once every vertex lies within this (max-norm) distance of the best one.
    pub diameter_tol: f64,
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: 500,
            diameter_tol: 1e-6,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `f` over the box `[lower, upper]` starting at `x0`.
///
/// Trial points are clamped into the box. Non-finite objective values are
/// treated as `+inf`.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let project = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut start = x0.to_vec();
    project(&mut start);
    let f0 = eval(&start);
    if n == 0 {
        return SimplexResult {
            x: start,
            fx: f0,
            iterations: 0,
            converged: true,
        };
    }

    let mut pts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    pts.push((start.clone(), f0));
    for i in 0..n {
        let mut v = start.clone();
        v[i] += opts.initial_step;
        if v[i] > upper[i] {
            v[i] = start[i] - opts.initial_step;
        }
        project(&mut v);
        let fv = eval(&v);
        pts.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = pts[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&pts[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &pts[..n] {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }
        let worst = pts[n].clone();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..n)
                .map(|i| centroid[i] + t * (worst.0[i] - centroid[i]))
                .collect();
            project(&mut x);
            x
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < pts[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            pts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < pts[n - 1].1 {
            pts[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < worst.1.min(fr) {
            pts[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best = pts[0].0.clone();
        for (v, fv) in pts.iter_mut().skip(1) {
            for i in 0..n {
                v[i] = best[i] + 0.5 * (v[i] - best[i]);
            }
            *fv = eval(v);
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = pts.swap_remove(0);
    SimplexResult {
        x,
        fx,
        iterations,
        converged,
    }
}
