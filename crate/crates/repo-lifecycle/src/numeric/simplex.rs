/// Options for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Per-dimension offsets used to build the initial simplex around the start point.
    pub initial_steps: Vec<f64>,
    pub max_iterations: usize,
    /// Stop when the simplex's objective spread falls below
    /// `f_tol_abs + f_tol_rel * |f_best|`.
    pub f_tol_abs: f64,
    pub f_tol_rel: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_steps: Vec::new(),
            max_iterations: 500,
            f_tol_abs: 1e-14,
            f_tol_rel: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best objective value after each iteration. Non-increasing.
    pub best_history: Vec<f64>,
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

/// Derivative-free simplex minimization with box bounds.
///
/// Standard reflection/expansion/contraction/shrink with coefficients
/// (1, 2, 0.5, 0.5); every candidate vertex is projected onto the bounds
/// before evaluation, so the search never leaves the box. The incumbent
/// best vertex is only ever replaced by a better one, which keeps the
/// best-objective history monotone.
pub fn nelder_mead<F>(
    mut objective: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    assert!(n > 0 && lower.len() == n && upper.len() == n);
    let steps: Vec<f64> = if opts.initial_steps.len() == n {
        opts.initial_steps.clone()
    } else {
        start.iter().map(|v| 0.1 * v.abs().max(1.0)).collect()
    };

    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let f = objective(x);
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    };

    // initial simplex: start plus one offset vertex per dimension
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    clamp(&mut x0, lower, upper);
    let f0 = eval(&x0);
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut v = x0.clone();
        v[i] += steps[i];
        if v[i] > upper[i] {
            v[i] = (x0[i] - steps[i]).max(lower[i]);
        }
        clamp(&mut v, lower, upper);
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let mut best_history = Vec::new();
    let mut iterations = 0;
    for _ in 0..opts.max_iterations {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[n].1;
        best_history.push(f_best);
        if f_best.is_finite()
            && (f_worst - f_best) <= opts.f_tol_abs + opts.f_tol_rel * f_best.abs()
        {
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }

        let worst = simplex[n].0.clone();
        let mut reflected: Vec<f64> = (0..n).map(|i| 2.0 * centroid[i] - worst[i]).collect();
        clamp(&mut reflected, lower, upper);
        let f_reflected = eval(&reflected);

        if f_reflected < simplex[0].1 {
            let mut expanded: Vec<f64> =
                (0..n).map(|i| 3.0 * centroid[i] - 2.0 * worst[i]).collect();
            clamp(&mut expanded, lower, upper);
            let f_expanded = eval(&expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[n - 1].1 {
            simplex[n] = (reflected, f_reflected);
        } else {
            // contraction: outside if the reflection improved on the worst
            let towards = if f_reflected < simplex[n].1 {
                &reflected
            } else {
                &worst
            };
            let mut contracted: Vec<f64> =
                (0..n).map(|i| 0.5 * (centroid[i] + towards[i])).collect();
            clamp(&mut contracted, lower, upper);
            let f_contracted = eval(&contracted);
            if f_contracted < simplex[n].1.min(f_reflected) {
                simplex[n] = (contracted, f_contracted);
            } else {
                // shrink towards the best vertex
                let best = simplex[0].0.clone();
                for (v, fv) in simplex.iter_mut().skip(1) {
                    for i in 0..n {
                        v[i] = 0.5 * (v[i] + best[i]);
                    }
                    clamp(v, lower, upper);
                    *fv = eval(v);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    best_history.push(simplex[0].1);
    NelderMeadResult {
        x: simplex[0].0.clone(),
        f: simplex[0].1,
        iterations,
        evaluations,
        best_history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn minimizes_rosenbrock() {
        let opts = NelderMeadOptions {
            max_iterations: 2000,
            ..Default::default()
        };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-4, "x={:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn respects_bounds() {
        // unconstrained minimum at (3, 3) lies outside the box
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] - 3.0).powi(2);
        let r = nelder_mead(
            f,
            &[0.0, 0.0],
            &[-1.0, -1.0],
            &[1.0, 2.0],
            &Default::default(),
        );
        assert!(r.x[0] <= 1.0 + 1e-12 && r.x[1] <= 2.0 + 1e-12);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn best_history_is_monotone() {
        let r = nelder_mead(
            rosenbrock,
            &[-1.2, 1.0],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &Default::default(),
        );
        for w in r.best_history.windows(2) {
            assert!(w[1] <= w[0], "history not monotone: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn nan_objective_treated_as_infinite() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { x[0] * x[0] };
        let r = nelder_mead(f, &[2.0], &[-10.0], &[10.0], &Default::default());
        assert!(r.f < 1e-8);
    }
}
