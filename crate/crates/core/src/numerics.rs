//! Small numerical utilities shared across modules: local minimizers,
//! least-squares lines, percentiles, and a seed mixer.

/// SplitMix64 step, used to derive per-instance seeds from a base seed.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Linear-interpolation percentile (the common "R-7" estimator).
///
/// `q` in [0,1]; `sorted` must be ascending and non-empty.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least-squares line through `(xs, ys)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept, r2 }
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_gradient<F>(f: &mut F, x: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let fp = f(&probe);
        probe[i] = x[i] - step;
        let fm = f(&probe);
        probe[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
    g
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: u64,
    pub converged: bool,
}

/// BFGS with central-difference gradients and Armijo backtracking.
///
/// Stops when the objective improves by less than `tol_f` over an iteration,
/// when the gradient max-norm drops below `gtol`, or when the evaluation
/// budget is exhausted. Deterministic for a deterministic objective.
pub fn bfgs_minimize<F>(
    f: &mut F,
    x0: &[f64],
    grad_step: f64,
    tol_f: f64,
    gtol: f64,
    max_evals: u64,
) -> MinimizeResult
where
    F: FnMut(&[f64]) -> f64,
{
    // Borrow-splitting shim: route both closures at the same callable.
    let cell = std::cell::RefCell::new(f);
    let mut obj = |x: &[f64]| (cell.borrow_mut())(x);
    let mut grad = |x: &[f64], evals: &mut u64| {
        *evals += 2 * x.len() as u64;
        let mut wrapped = |p: &[f64]| (cell.borrow_mut())(p);
        central_gradient(&mut wrapped, x, grad_step)
    };
    bfgs_minimize_with_grad(&mut obj, &mut grad, x0, tol_f, gtol, max_evals)
}

/// BFGS with a caller-supplied gradient.
///
/// `grad` receives the evaluation point and the running evaluation counter;
/// it must add its own cost to the counter.
pub fn bfgs_minimize_with_grad<F, G>(
    f: &mut F,
    grad: &mut G,
    x0: &[f64],
    tol_f: f64,
    gtol: f64,
    max_evals: u64,
) -> MinimizeResult
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64], &mut u64) -> Vec<f64>,
{
    let dim = x0.len();
    let mut evals: u64 = 0;
    let mut eval = |x: &[f64], evals: &mut u64| {
        *evals += 1;
        f(x)
    };

    let mut x = x0.to_vec();
    let mut fx = eval(&x, &mut evals);
    // Inverse-Hessian approximation, dense row-major.
    let mut hinv = vec![0.0; dim * dim];
    for i in 0..dim {
        hinv[i * dim + i] = 1.0;
    }

    let mut g = grad(&x, &mut evals);
    let mut converged = false;

    while evals < max_evals {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax < gtol {
            converged = true;
            break;
        }
        // Direction d = -Hinv g.
        let mut d = vec![0.0; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..dim {
                acc += hinv[i * dim + j] * g[j];
            }
            d[i] = -acc;
        }
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dmax == 0.0 || !dmax.is_finite() {
            break;
        }
        // Keep the first probe within half a radian per coordinate.
        let mut alpha = (0.5 / dmax).min(1.0);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // Not a descent direction; reset the curvature model.
            for v in hinv.iter_mut() {
                *v = 0.0;
            }
            for i in 0..dim {
                hinv[i * dim + i] = 1.0;
            }
            for i in 0..dim {
                d[i] = -g[i];
            }
        }

        let mut xn = x.clone();
        let mut fn_ = fx;
        let mut accepted = false;
        for _ in 0..30 {
            for i in 0..dim {
                xn[i] = x[i] + alpha * d[i];
            }
            fn_ = eval(&xn, &mut evals);
            let armijo: f64 = 1e-4 * alpha * slope.min(0.0);
            if fn_ <= fx + armijo && fn_.is_finite() {
                accepted = true;
                break;
            }
            alpha *= 0.5;
            if evals >= max_evals {
                break;
            }
        }
        if !accepted {
            converged = true; // no further descent possible at this resolution
            break;
        }

        let gn = grad(&xn, &mut evals);

        // BFGS update with curvature guard.
        let mut s = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        for i in 0..dim {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let yy: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * ss * yy && sy.is_finite() {
            // Hinv <- (I - s yᵀ/sy) Hinv (I - y sᵀ/sy) + s sᵀ/sy
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; dim];
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..dim {
                    acc += hinv[i * dim + j] * y[j];
                }
                hy[i] = acc;
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                for j in 0..dim {
                    let term = s[i] * hy[j] + hy[i] * s[j];
                    hinv[i * dim + j] +=
                        -rho * term + rho * rho * (yhy + sy) * s[i] * s[j];
                }
            }
        }

        let improvement = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if improvement < tol_f {
            converged = true;
            break;
        }
    }

    MinimizeResult { x, f: fx, evals, converged }
}

/// Nelder–Mead simplex minimizer with standard coefficients.
///
/// The initial simplex is `x0` plus `init_step` along each axis; fully
/// deterministic. Non-finite objective values are treated as +inf.
pub fn nelder_mead<F>(
    f: &mut F,
    x0: &[f64],
    init_step: f64,
    tol_f: f64,
    max_evals: u64,
) -> MinimizeResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evals: u64 = 0;
    let mut eval = |x: &[f64], evals: &mut u64| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += init_step;
        simplex.push(v);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;

    while evals < max_evals {
        // Order ascending by objective (stable: ties keep insertion order).
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap());
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        if (fvals[worst] - fvals[best]).abs() < tol_f {
            converged = true;
            break;
        }

        // Centroid of all but the worst point.
        let mut centroid = vec![0.0; dim];
        for &idx in order.iter().take(dim) {
            for i in 0..dim {
                centroid[i] += simplex[idx][i];
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let reflect: Vec<f64> = (0..dim)
            .map(|i| centroid[i] + alpha * (centroid[i] - simplex[worst][i]))
            .collect();
        let f_reflect = eval(&reflect, &mut evals);

        if f_reflect < fvals[best] {
            let expand: Vec<f64> = (0..dim)
                .map(|i| centroid[i] + gamma * (reflect[i] - centroid[i]))
                .collect();
            let f_expand = eval(&expand, &mut evals);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                fvals[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                fvals[worst] = f_reflect;
            }
        } else if f_reflect < fvals[second_worst] {
            simplex[worst] = reflect;
            fvals[worst] = f_reflect;
        } else {
            let contract: Vec<f64> = (0..dim)
                .map(|i| centroid[i] + rho * (simplex[worst][i] - centroid[i]))
                .collect();
            let f_contract = eval(&contract, &mut evals);
            if f_contract < fvals[worst] {
                simplex[worst] = contract;
                fvals[worst] = f_contract;
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[best].clone();
                for idx in 0..=dim {
                    if idx == best {
                        continue;
                    }
                    for i in 0..dim {
                        simplex[idx][i] =
                            best_point[i] + sigma * (simplex[idx][i] - best_point[i]);
                    }
                    fvals[idx] = eval(&simplex[idx].clone(), &mut evals);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=dim {
        if fvals[i] < fvals[best] {
            best = i;
        }
    }
    MinimizeResult {
        x: simplex[best].clone(),
        f: fvals[best],
        evals,
        converged,
    }
}
