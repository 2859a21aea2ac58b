//! Integrated-angle trajectories, the universal polar curve, and continuous
//! annealing schedules.
//!
//! A `p`-layer schedule defines a path in Hamiltonian space through its
//! cumulative angles `Theta_k = (1/2) sum_{m<=k} theta_m` and
//! `Gamma_k = sum_{m<=k} gamma_m`, with the endpoint `(Theta_max, Gamma_max)`
//! playing the role of protocol resources. Paths normalized to their
//! endpoints collapse (for converged, canonicalized schedules) onto a nearly
//! circular universal curve `R = 1 + eps * (1 - cos 4*phi)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::AngleSchedule;

/// Cumulative integrated-angle path of a schedule.
#[derive(Debug, Clone)]
pub struct TrajectoryPath {
    pub p: usize,
    /// `Theta_0..Theta_p`, starting at 0.
    pub theta_cum: Vec<f64>,
    /// `Gamma_0..Gamma_p`, starting at 0.
    pub gamma_cum: Vec<f64>,
    pub theta_max: f64,
    pub gamma_max: f64,
    /// True when both cumulative sequences are nondecreasing. Schedules that
    /// wander backwards are flagged, not rejected.
    pub monotone: bool,
}

/// Cumulative sums `Theta_k = (1/2) sum_{m<=k} theta_m`,
/// `Gamma_k = sum_{m<=k} gamma_m` for `k = 0..=p`.
pub fn cumulative_path(s: &AngleSchedule) -> TrajectoryPath {
    let p = s.p();
    let mut theta_cum = Vec::with_capacity(p + 1);
    let mut gamma_cum = Vec::with_capacity(p + 1);
    theta_cum.push(0.0);
    gamma_cum.push(0.0);
    let mut th = 0.0;
    let mut ga = 0.0;
    for i in 0..p {
        th += 0.5 * s.theta()[i];
        ga += s.gamma()[i];
        theta_cum.push(th);
        gamma_cum.push(ga);
    }
    let monotone = theta_cum.windows(2).all(|w| w[1] >= w[0])
        && gamma_cum.windows(2).all(|w| w[1] >= w[0]);
    TrajectoryPath {
        p,
        theta_max: th,
        gamma_max: ga,
        theta_cum,
        gamma_cum,
        monotone,
    }
}

/// Divide all cost angles by `zeta_gamma` and all mixer angles by
/// `zeta_theta`, shortening the Hamiltonian path while preserving its shape.
pub fn rescale_schedule(
    s: &AngleSchedule,
    zeta_gamma: f64,
    zeta_theta: f64,
) -> Result<AngleSchedule> {
    if zeta_gamma <= 0.0 || !zeta_gamma.is_finite() {
        return Err(Error::NonPositiveRescale(zeta_gamma));
    }
    if zeta_theta <= 0.0 || !zeta_theta.is_finite() {
        return Err(Error::NonPositiveRescale(zeta_theta));
    }
    AngleSchedule::new(
        s.gamma().iter().map(|g| g / zeta_gamma).collect(),
        s.theta().iter().map(|t| t / zeta_theta).collect(),
    )
}

/// Polar form of a set of plane points already normalized to [0,1]^2-ish
/// coordinates: `R = sqrt(x^2 + y^2)`, `phi = atan2(y, x)`.
fn polar_of(x: f64, y: f64) -> (f64, f64) {
    ((x * x + y * y).sqrt(), y.atan2(x))
}

/// Polar coordinates `(R_k, phi_k)` of every path point in
/// endpoint-normalized coordinates `(Theta/Theta_max, Gamma/Gamma_max)`.
///
/// The origin point has `R = 0`; its angle is taken as the limit along the
/// first path segment (`pi/2` when the interaction angle grows first).
pub fn polar_coords(path: &TrajectoryPath) -> Result<Vec<(f64, f64)>> {
    if path.theta_max <= 0.0 || path.gamma_max <= 0.0 {
        return Err(Error::InsufficientData(format!(
            "degenerate path resources (theta_max {}, gamma_max {})",
            path.theta_max, path.gamma_max
        )));
    }
    let mut out = Vec::with_capacity(path.p + 1);
    for k in 0..=path.p {
        let x = path.theta_cum[k] / path.theta_max;
        let y = path.gamma_cum[k] / path.gamma_max;
        if k == 0 {
            // Angle limit along the first segment.
            let x1 = path.theta_cum[1] / path.theta_max;
            let y1 = path.gamma_cum[1] / path.gamma_max;
            let phi0 = if x1 == 0.0 && y1 == 0.0 {
                0.0
            } else {
                y1.atan2(x1)
            };
            out.push((0.0, phi0));
        } else {
            out.push(polar_of(x, y));
        }
    }
    Ok(out)
}

/// Polar coordinates of the path in *passage* coordinates: point `k` is
/// `(Theta_k/Theta_max, 1 - Gamma_k/Gamma_max)`: accumulated mixer angle
/// against remaining interaction angle.
///
/// This is the plane in which converged schedules trace a quarter turn of an
/// almost perfect unit circle, from `(0, 1)` (`phi = pi/2`, nothing mixed,
/// all interaction ahead) to `(1, 0)` (`phi = 0`, passage complete). Both
/// endpoints sit at `R = 1` by construction; the deviation parameter lives in
/// the interior points.
pub fn passage_polar_coords(path: &TrajectoryPath) -> Result<Vec<(f64, f64)>> {
    if path.theta_max <= 0.0 || path.gamma_max <= 0.0 {
        return Err(Error::InsufficientData(format!(
            "degenerate path resources (theta_max {}, gamma_max {})",
            path.theta_max, path.gamma_max
        )));
    }
    Ok((0..=path.p)
        .map(|k| {
            let x = path.theta_cum[k] / path.theta_max;
            let y = 1.0 - path.gamma_cum[k] / path.gamma_max;
            polar_of(x, y)
        })
        .collect())
}

/// Least-squares fit of the deviation parameter in
/// `R = 1 + eps * (1 - cos 4*phi)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CircleFit {
    pub epsilon: f64,
    pub rms_residual: f64,
    /// Qubit count label (0 when unlabeled).
    pub n: usize,
    /// Layer count of the fitted paths (0 when mixed).
    pub p: usize,
    /// Number of points entering the fit.
    pub points: usize,
}

/// Fit `eps` over a cloud of polar points `(R, phi)`.
pub fn fit_circle_points(points: &[(f64, f64)]) -> Result<CircleFit> {
    if points.is_empty() {
        return Err(Error::InsufficientData(
            "circle fit needs at least one point".into(),
        ));
    }
    // Minimize sum ((1 + eps*b(phi)) - R)^2 with b = 1 - cos 4 phi.
    let mut num = 0.0;
    let mut den = 0.0;
    for &(r, phi) in points {
        let b = 1.0 - (4.0 * phi).cos();
        num += b * (r - 1.0);
        den += b * b;
    }
    let epsilon = if den > 0.0 { num / den } else { 0.0 };
    let mut ss = 0.0;
    for &(r, phi) in points {
        let b = 1.0 - (4.0 * phi).cos();
        let resid = r - 1.0 - epsilon * b;
        ss += resid * resid;
    }
    let rms_residual = (ss / points.len() as f64).sqrt();
    Ok(CircleFit {
        epsilon,
        rms_residual,
        n: 0,
        p: 0,
        points: points.len(),
    })
}

/// Fit the universal curve over the interior passage points (see
/// [`passage_polar_coords`]) of one or more paths. Endpoints are excluded:
/// they sit at `R = 1` at the curve's pinned angles by construction and carry
/// no information about the deviation parameter.
pub fn fit_circle(paths: &[&TrajectoryPath]) -> Result<CircleFit> {
    if paths.is_empty() {
        return Err(Error::InsufficientData("no paths to fit".into()));
    }
    let mut pts = Vec::new();
    for path in paths {
        if path.p < 5 {
            return Err(Error::InsufficientData(format!(
                "circle fit needs p >= 5, got {}",
                path.p
            )));
        }
        let polar = passage_polar_coords(path)?;
        pts.extend_from_slice(&polar[1..path.p]);
    }
    let p0 = paths[0].p;
    let mut fit = fit_circle_points(&pts)?;
    fit.p = if paths.iter().all(|t| t.p == p0) { p0 } else { 0 };
    Ok(fit)
}

// ---------------------------------------------------------------------------
// Monotone piecewise-cubic interpolation (shape-preserving Hermite).

pub(crate) mod pchip {
    /// Shape-preserving tangents for strictly increasing `xs`.
    ///
    /// Interior tangents are the weighted harmonic mean of adjacent secants
    /// (zero across local extrema); endpoint tangents use the one-sided
    /// three-point formula clamped to preserve monotonicity. Affine data
    /// reproduces exactly.
    pub fn tangents(xs: &[f64], ys: &[f64]) -> Vec<f64> {
        let n = xs.len();
        assert!(n >= 2);
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = ys
            .windows(2)
            .zip(&h)
            .map(|(w, &hh)| (w[1] - w[0]) / hh)
            .collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = delta[0];
            m[1] = delta[0];
            return m;
        }
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                m[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        m[0] = endpoint_tangent(h[0], h[1], delta[0], delta[1]);
        m[n - 1] = endpoint_tangent(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        m
    }

    fn endpoint_tangent(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
        let mut m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if m * d0 <= 0.0 {
            m = 0.0;
        } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
            m = 3.0 * d0;
        }
        m
    }

    /// Locate the segment containing `x` (clamped to the knot range).
    pub fn segment(xs: &[f64], x: f64) -> usize {
        let n = xs.len();
        if x <= xs[0] {
            return 0;
        }
        if x >= xs[n - 1] {
            return n - 2;
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Cubic Hermite value on the segment starting at knot `i`.
    pub fn eval(xs: &[f64], ys: &[f64], m: &[f64], x: f64) -> f64 {
        let i = segment(xs, x);
        let h = xs[i + 1] - xs[i];
        let t = ((x - xs[i]) / h).clamp(0.0, 1.0);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        h00 * ys[i] + h10 * h * m[i] + h01 * ys[i + 1] + h11 * h * m[i + 1]
    }

    /// Derivative of the Hermite interpolant at `x`.
    pub fn eval_derivative(xs: &[f64], ys: &[f64], m: &[f64], x: f64) -> f64 {
        let i = segment(xs, x);
        let h = xs[i + 1] - xs[i];
        let t = ((x - xs[i]) / h).clamp(0.0, 1.0);
        let d00 = (6.0 * t * t - 6.0 * t) / h;
        let d10 = 3.0 * t * t - 4.0 * t + 1.0;
        let d01 = (6.0 * t - 6.0 * t * t) / h;
        let d11 = 3.0 * t * t - 2.0 * t;
        d00 * ys[i] + d10 * m[i] + d01 * ys[i + 1] + d11 * m[i + 1]
    }
}

/// Interpolation rule for a continuous schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpKind {
    /// Shape-preserving piecewise cubic (default).
    MonotoneCubic,
    /// Piecewise linear; derivative is constant on each segment.
    Linear,
}

/// A continuous annealing schedule: a monotone map `Gamma(Theta)` on
/// `[0, Theta_max]` built from path knots.
#[derive(Debug, Clone)]
pub struct ContinuousSchedule {
    knots_theta: Vec<f64>,
    knots_gamma: Vec<f64>,
    tangents: Vec<f64>,
    kind: InterpKind,
    theta_max: f64,
    gamma_max: f64,
}

impl ContinuousSchedule {
    /// Build a schedule from knot pairs `(Theta, Gamma)`.
    ///
    /// Knots must start at `(0, 0)`, be strictly increasing in `Theta`
    /// (exact duplicates with equal `Gamma` are merged), and nondecreasing in
    /// `Gamma`. Violations report the offending knot indices.
    pub fn from_knots(knots: &[(f64, f64)], kind: InterpKind) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InsufficientData(
                "continuous schedule needs at least two knots".into(),
            ));
        }
        let mut kt = Vec::with_capacity(knots.len());
        let mut kg = Vec::with_capacity(knots.len());
        let mut offending = Vec::new();
        for (i, &(t, g)) in knots.iter().enumerate() {
            if let (Some(&pt), Some(&pg)) = (kt.last(), kg.last()) {
                if t == pt && g == pg {
                    continue; // duplicate knot
                }
                if t <= pt || g < pg {
                    offending.push(i);
                    continue;
                }
            }
            kt.push(t);
            kg.push(g);
        }
        if !offending.is_empty() {
            return Err(Error::NonMonotonePath { indices: offending });
        }
        if kt.len() < 2 || kt[0] != 0.0 || kg[0] != 0.0 {
            return Err(Error::InsufficientData(
                "schedule knots must start at (0, 0)".into(),
            ));
        }
        let theta_max = *kt.last().unwrap();
        let gamma_max = *kg.last().unwrap();
        let tangents = match kind {
            InterpKind::MonotoneCubic => pchip::tangents(&kt, &kg),
            InterpKind::Linear => Vec::new(),
        };
        Ok(Self {
            knots_theta: kt,
            knots_gamma: kg,
            tangents,
            kind,
            theta_max,
            gamma_max,
        })
    }

    pub fn kind(&self) -> InterpKind {
        self.kind
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    pub fn knots(&self) -> Vec<(f64, f64)> {
        self.knots_theta
            .iter()
            .zip(&self.knots_gamma)
            .map(|(&t, &g)| (t, g))
            .collect()
    }

    /// `Gamma(Theta)`, clamped to the knot range.
    pub fn gamma_at(&self, theta: f64) -> f64 {
        match self.kind {
            InterpKind::MonotoneCubic => {
                pchip::eval(&self.knots_theta, &self.knots_gamma, &self.tangents, theta)
            }
            InterpKind::Linear => {
                let i = pchip::segment(&self.knots_theta, theta);
                let h = self.knots_theta[i + 1] - self.knots_theta[i];
                let t = ((theta - self.knots_theta[i]) / h).clamp(0.0, 1.0);
                self.knots_gamma[i] + t * (self.knots_gamma[i + 1] - self.knots_gamma[i])
            }
        }
    }

    /// Local interaction weight `dGamma/dTheta` at `theta`.
    pub fn slope_at(&self, theta: f64) -> f64 {
        match self.kind {
            InterpKind::MonotoneCubic => pchip::eval_derivative(
                &self.knots_theta,
                &self.knots_gamma,
                &self.tangents,
                theta,
            ),
            InterpKind::Linear => {
                let i = pchip::segment(&self.knots_theta, theta);
                (self.knots_gamma[i + 1] - self.knots_gamma[i])
                    / (self.knots_theta[i + 1] - self.knots_theta[i])
            }
        }
    }
}

/// Monotone interpolation of a cumulative path into a continuous schedule,
/// pinned at `(0,0)` and `(Theta_max, Gamma_max)`.
pub fn continuous_schedule(path: &TrajectoryPath) -> Result<ContinuousSchedule> {
    let knots: Vec<(f64, f64)> = path
        .theta_cum
        .iter()
        .zip(&path.gamma_cum)
        .map(|(&t, &g)| (t, g))
        .collect();
    ContinuousSchedule::from_knots(&knots, InterpKind::MonotoneCubic)
}

/// Cumulative knots with sub-tolerance backtracking removed.
///
/// Optimized schedules occasionally carry a marginally negative increment
/// (for example a last mixer angle settling at -1e-9); such knots are
/// dropped when the backtrack is below `rel_tol` of the endpoint resources.
/// Material backtracking still reports [`Error::NonMonotonePath`] with the
/// offending knot indices.
pub fn sanitized_knots(path: &TrajectoryPath, rel_tol: f64) -> Result<Vec<(f64, f64)>> {
    let tol_t = rel_tol * path.theta_max.abs();
    let tol_g = rel_tol * path.gamma_max.abs();
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(path.p + 1);
    let mut offending = Vec::new();
    for k in 0..=path.p {
        let (t, g) = (path.theta_cum[k], path.gamma_cum[k]);
        match out.last() {
            None => out.push((t, g)),
            Some(&(pt, pg)) => {
                if t > pt && g >= pg {
                    out.push((t, g));
                } else if t < pt - tol_t || g < pg - tol_g {
                    offending.push(k);
                } // else: sub-tolerance backtrack, knot dropped
            }
        }
    }
    if !offending.is_empty() {
        return Err(Error::NonMonotonePath { indices: offending });
    }
    // The endpoint must survive; if it was dropped, restore it by clamping.
    if let Some(&(t, _)) = out.last() {
        if t < path.theta_max {
            out.push((path.theta_max, path.gamma_max.max(out.last().unwrap().1)));
        }
    }
    Ok(out)
}

/// Affinely rescale both axes of a schedule so its endpoint becomes
/// `(theta_max_target, gamma_max_target)`. The normalized shape is preserved
/// pointwise.
pub fn rescale_continuous(
    cs: &ContinuousSchedule,
    theta_max_target: f64,
    gamma_max_target: f64,
) -> Result<ContinuousSchedule> {
    if theta_max_target <= 0.0 || !theta_max_target.is_finite() {
        return Err(Error::NonPositiveRescale(theta_max_target));
    }
    if gamma_max_target <= 0.0 || !gamma_max_target.is_finite() {
        return Err(Error::NonPositiveRescale(gamma_max_target));
    }
    let st = theta_max_target / cs.theta_max;
    let sg = gamma_max_target / cs.gamma_max;
    let knots: Vec<(f64, f64)> = cs
        .knots_theta
        .iter()
        .zip(&cs.knots_gamma)
        .map(|(&t, &g)| (t * st, g * sg))
        .collect();
    ContinuousSchedule::from_knots(&knots, cs.kind)
}

/// Resample a polyline onto `m` evenly spaced arclength nodes (inclusive of
/// both endpoints). Used to compare paths with different layer counts.
pub fn resample_arclength(points: &[(f64, f64)], m: usize) -> Vec<(f64, f64)> {
    assert!(points.len() >= 2 && m >= 2);
    let mut cum = Vec::with_capacity(points.len());
    cum.push(0.0);
    for w in points.windows(2) {
        let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        cum.push(cum.last().unwrap() + (dx * dx + dy * dy).sqrt());
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(m);
    let mut seg = 0;
    for k in 0..m {
        let target = total * k as f64 / (m - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        out.push((
            points[seg].0 + t * (points[seg + 1].0 - points[seg].0),
            points[seg].1 + t * (points[seg + 1].1 - points[seg].1),
        ));
    }
    out
}

/// RMS distance between two equal-length point lists.
pub fn rms_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ss: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| {
            let (dx, dy) = (p.0 - q.0, p.1 - q.1);
            dx * dx + dy * dy
        })
        .sum();
    (ss / a.len() as f64).sqrt()
}
