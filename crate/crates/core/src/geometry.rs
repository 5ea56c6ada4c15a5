//! Projections onto sublevel sets and minima tubes, the radial truncation map,
//! and the transition markers of a profile.

use serde::{Deserialize, Serialize};

use crate::auditor::StructuralConstants;
use crate::energy::Profile;
use crate::error::{Error, Result};
use crate::potential::{MinimaGeometry, PotentialModel};

/// Slack on threshold comparisons.
pub const THRESHOLD_SLACK: f64 = 1e-8;
/// KKT residual accepted by the k >= 2 projection.
pub const KKT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Minus,
    Plus,
}

/// The branch W^{h,-} or W^{h,+} of {W <= h}. For k = 1 the component interval is
/// located once at construction.
#[derive(Clone, Debug)]
pub struct SublevelSet<'a> {
    pub potential: &'a PotentialModel,
    pub level: f64,
    pub branch: Branch,
    interval: Option<(f64, f64)>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl<'a> SublevelSet<'a> {
    pub fn new(potential: &'a PotentialModel, level: f64, branch: Branch) -> Result<SublevelSet<'a>> {
        let mut s = SublevelSet { potential, level, branch, interval: None };
        let set = s.minima();
        let reference = match branch {
            Branch::Minus => potential.depth,
            Branch::Plus => 0.0,
        };
        if level < reference {
            return Err(Error::InvalidParameter(format!("sublevel set at {level} is empty (minimum level {reference})")));
        }
        if potential.dim == 1 {
            let (lo, hi) = match &set.geometry {
                MinimaGeometry::Interval { lo, hi } => (*lo, *hi),
                g => {
                    let pts = match g {
                        MinimaGeometry::Points(p) | MinimaGeometry::Polyline(p) => p,
                        _ => unreachable!(),
                    };
                    let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
                    (xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
                }
            };
            let step = set.tube_radius.max(1e-3) / 256.0;
            let limit = 4.0 * potential.growth_radius + lo.abs().max(hi.abs());
            let l = march_to_level(potential, level, lo, -step, limit)?;
            let r = march_to_level(potential, level, hi, step, limit)?;
            s.interval = Some((l, r));
        }
        Ok(s)
    }

    fn minima(&self) -> &crate::potential::MinimaSet {
        match self.branch {
            Branch::Minus => &self.potential.minima_minus,
            Branch::Plus => &self.potential.minima_plus,
        }
    }

    /// Endpoints of the component for k = 1.
    pub fn interval(&self) -> Option<(f64, f64)> {
        self.interval
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        if let Some((l, r)) = self.interval {
            return u[0] >= l && u[0] <= r;
        }
        self.in_component(u, 0.0)
    }

    /// Membership with slack on the level. For k >= 2 the component is identified by the
    /// segment from the nearest minimum staying inside the sublevel set.
    pub fn in_component(&self, u: &[f64], slack: f64) -> bool {
        let h = self.level + slack;
        if let Some((l, r)) = self.interval {
            return u[0] >= l && u[0] <= r
                || self.potential.eval(u) <= h && segment_below(self.potential, &[u[0].clamp(l, r)], u, h);
        }
        if self.potential.eval(u) > h {
            return false;
        }
        let a = self.minima().project(u);
        segment_below(self.potential, &a, u, h)
    }

    /// Outward unit normal at a boundary point (k >= 2), or the sign for k = 1.
    pub fn outward_normal(&self, u: &[f64]) -> Vec<f64> {
        if let Some((l, r)) = self.interval {
            return vec![if (u[0] - l).abs() <= (u[0] - r).abs() { -1.0 } else { 1.0 }];
        }
        let g = self.potential.grad_vec(u);
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            g.iter().map(|x| x / n).collect()
        } else {
            g
        }
    }

    /// True when `u` lies on the boundary of the set (within the threshold slack).
    pub fn on_boundary(&self, u: &[f64]) -> bool {
        if let Some((l, r)) = self.interval {
            let tol = THRESHOLD_SLACK * (1.0 + u[0].abs());
            return (u[0] - l).abs() <= tol || (u[0] - r).abs() <= tol;
        }
        self.potential.eval(u) >= self.level - THRESHOLD_SLACK
    }
}

fn segment_below(p: &PotentialModel, a: &[f64], b: &[f64], h: f64) -> bool {
    const PROBES: usize = 32;
    (1..PROBES).all(|j| {
        let t = j as f64 / PROBES as f64;
        let x: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
        p.eval(&x) <= h
    })
}

fn march_to_level(p: &PotentialModel, level: f64, start: f64, step: f64, limit: f64) -> Result<f64> {
    let mut inside = start;
    let mut x = start;
    loop {
        x += step;
        if x.abs() > limit {
            return Err(Error::InvalidParameter(format!("sublevel set at {level} is unbounded or not separated (reached {x})")));
        }
        if p.eval(&[x]) > level {
            break;
        }
        inside = x;
    }
    let (mut a, mut b) = (inside, x);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if p.eval(&[m]) <= level {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a)
}

/// Nearest point of the sublevel set in the Euclidean norm.
pub fn project_sublevel(set: &SublevelSet, u: &[f64]) -> Result<Vec<f64>> {
    if let Some((l, r)) = set.interval {
        return Ok(vec![u[0].clamp(l, r)]);
    }
    if set.contains(u) {
        return Ok(u.to_vec());
    }
    let p = set.potential;
    let anchor = set.minima().project(u);
    let retract = |y: &[f64]| -> Vec<f64> {
        let (mut a, mut b) = (0.0, 1.0);
        let at = |s: f64| -> Vec<f64> { anchor.iter().zip(y).map(|(x0, yi)| x0 + s * (yi - x0)).collect() };
        if p.eval(y) <= set.level {
            return y.to_vec();
        }
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if p.eval(&at(m)) <= set.level {
                a = m;
            } else {
                b = m;
            }
        }
        at(a)
    };
    // tangential part of u - x at a boundary point x, and its norm (the KKT residual)
    let tangent = |x: &[f64]| -> Option<Tangent> {
        let g = p.grad_vec(x);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn == 0.0 {
            return None;
        }
        let d: Vec<f64> = u.iter().zip(x).map(|(a, b)| a - b).collect();
        let dn: f64 = d.iter().zip(&g).map(|(a, b)| a * b / gn).sum();
        let tang: Vec<f64> = d.iter().zip(&g).map(|(a, b)| a - dn * b / gn).collect();
        let res = tang.iter().map(|v| v * v).sum::<f64>().sqrt();
        Some((tang, res))
    };
    // descent along the boundary: tangential step, radial retraction, step halved until the
    // distance to u drops and regrown gently after each success. Once distances tie to roundoff,
    // a smaller residual decides.
    let mut x = retract(u);
    let mut res = f64::INFINITY;
    let mut step = 1.0;
    let Some(mut cur) = tangent(&x) else { return Ok(x) };
    for _ in 0..5000 {
        res = cur.1;
        if res <= 1e-13 {
            break;
        }
        let here = sq_dist(&x, u);
        let mut moved = false;
        while step > 1e-16 {
            let y: Vec<f64> = x.iter().zip(&cur.0).map(|(a, b)| a + step * b).collect();
            let xn = retract(&y);
            let there = sq_dist(&xn, u);
            let next = tangent(&xn);
            let better = there < here || (there <= here * (1.0 + 8.0 * f64::EPSILON) && next.as_ref().is_some_and(|n| n.1 < res));
            if better {
                x = xn;
                match next {
                    Some(n) => cur = n,
                    None => return Ok(x),
                }
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
        step = (1.25 * step).min(1.0);
    }
    res = res.min(cur.1);
    if res > 1e-13 {
        if let Some((xn, rn)) = newton_polish(set, u, &x, &tangent) {
            if rn < res {
                x = xn;
                res = rn;
            }
        }
    }
    if res > KKT_TOL {
        return Err(Error::NonConvergence { what: "sublevel projection", residual: res, iterate: x });
    }
    Ok(x)
}

/// Tangential part of u - x at a boundary point and its norm.
type Tangent = (Vec<f64>, f64);

/// Newton on x - u + lambda grad W(x) = 0, W(x) = level from a point near the projection.
/// Returns the best iterate by tangential residual.
fn newton_polish(
    set: &SublevelSet,
    u: &[f64],
    start: &[f64],
    tangent: &dyn Fn(&[f64]) -> Option<Tangent>,
) -> Option<(Vec<f64>, f64)> {
    let p = set.potential;
    let k = u.len();
    let mut x = start.to_vec();
    let g = p.grad_vec(&x);
    let gg: f64 = g.iter().map(|v| v * v).sum();
    if gg == 0.0 {
        return None;
    }
    let mut lambda = u.iter().zip(&x).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum::<f64>() / gg;
    let mut best = (x.clone(), tangent(&x)?.1);
    for _ in 0..30 {
        let g = p.grad_vec(&x);
        let h = p.hessian_fd(&x);
        let mut jac = nalgebra::DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = nalgebra::DVector::<f64>::zeros(k + 1);
        for i in 0..k {
            for j in 0..k {
                jac[(i, j)] = lambda * h[i][j] + if i == j { 1.0 } else { 0.0 };
            }
            jac[(i, k)] = g[i];
            jac[(k, i)] = g[i];
            rhs[i] = -(x[i] - u[i] + lambda * g[i]);
        }
        rhs[k] = -(p.eval(&x) - set.level);
        let delta = jac.lu().solve(&rhs)?;
        for i in 0..k {
            x[i] += delta[i];
        }
        lambda += delta[k];
        let r = tangent(&x)?.1;
        if !r.is_finite() || !x.iter().all(|v| v.is_finite()) {
            return Some(best);
        }
        if r < best.1 && (p.eval(&x) - set.level).abs() <= 1e-12 * (1.0 + set.level.abs()) {
            best = (x.clone(), r);
        }
        if r <= 1e-13 {
            break;
        }
    }
    Some(best)
}

/// Nearest point of the closed tube of radius `radius` around the given minima set.
pub fn project_tube(set: &crate::potential::MinimaSet, radius: f64, u: &[f64]) -> Vec<f64> {
    let p = set.project(u);
    let d = sq_dist(&p, u).sqrt();
    if d <= radius {
        return u.to_vec();
    }
    let s = radius / d;
    p.iter().zip(u).map(|(a, b)| a + s * (b - a)).collect()
}

/// Radial retraction onto the ball of radius growth_radius.
pub fn truncation_map(potential: &PotentialModel, u: &[f64]) -> Vec<f64> {
    let r = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r0 = potential.growth_radius;
    if r <= r0 {
        u.to_vec()
    } else {
        u.iter().map(|x| r0 * x / r).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionMarkers {
    pub t1_minus: Option<f64>,
    pub t2_minus: Option<f64>,
    pub t_plus: Option<f64>,
    pub alpha_minus: f64,
    pub alpha_0: f64,
    pub eps0_plus: f64,
}

fn cross(t0: f64, t1: f64, f0: f64, f1: f64) -> f64 {
    if f1 == f0 {
        t1
    } else {
        (t0 + (t1 - t0) * f0 / (f0 - f1)).clamp(t0.min(t1), t0.max(t1))
    }
}

/// Transition markers of a profile: t2- (first time the deep branch reaches level alpha_0),
/// t1- (last time before t2- at or below alpha_-) and t+ (first time within eps0+ of level 0
/// and within half the shallow tube).
pub fn transition_markers(profile: &Profile, potential: &PotentialModel, k: &StructuralConstants) -> TransitionMarkers {
    let g = &profile.grid;
    let n = g.n;
    let w: Vec<f64> = (0..n).map(|i| potential.eval(profile.node(i))).collect();
    let dplus: Vec<f64> = (0..n).map(|i| potential.minima_plus.dist(profile.node(i))).collect();
    let (a_m, a_0, e_p) = (k.h_minus, k.h0, k.eps0_plus);
    let half = potential.minima_plus.tube_radius / 2.0;

    let deep = SublevelSet::new(potential, a_0, Branch::Minus).ok();
    let mut t2 = None;
    let mut i2 = n;
    for i in 1..n {
        let on_branch = match &deep {
            Some(set) => set.in_component(profile.node(i - 1), THRESHOLD_SLACK),
            None => potential.nearer_minus(profile.node(i - 1)),
        };
        if w[i - 1] < a_0 && w[i] >= a_0 - THRESHOLD_SLACK && on_branch {
            t2 = Some(cross(g.t(i - 1), g.t(i), w[i - 1] - a_0, w[i] - a_0));
            i2 = i;
            break;
        }
    }
    let mut t1 = None;
    if t2.is_some() {
        for i in (1..i2).rev() {
            if w[i - 1] <= a_m + THRESHOLD_SLACK {
                t1 = Some(if w[i] <= a_m { g.t(i) } else { cross(g.t(i - 1), g.t(i), w[i - 1] - a_m, w[i] - a_m) });
                break;
            }
        }
    }
    let ok = |i: usize| w[i] <= e_p + THRESHOLD_SLACK && dplus[i] <= half + THRESHOLD_SLACK;
    let mut tp = None;
    for i in 0..n {
        if ok(i) {
            tp = Some(if i == 0 {
                g.t(0)
            } else {
                let mut t = g.t(i - 1);
                if w[i - 1] > e_p {
                    t = t.max(cross(g.t(i - 1), g.t(i), w[i - 1] - e_p, w[i] - e_p));
                }
                if dplus[i - 1] > half {
                    t = t.max(cross(g.t(i - 1), g.t(i), dplus[i - 1] - half, dplus[i] - half));
                }
                t
            });
            break;
        }
    }
    TransitionMarkers { t1_minus: t1, t2_minus: t2, t_plus: tp, alpha_minus: a_m, alpha_0: a_0, eps0_plus: e_p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{make_planar_tilted, make_plateau_scalar, make_tilted_cubic};
    use approx::assert_abs_diff_eq;

    #[test]
    fn truncation_example() {
        let mut m = make_planar_tilted([1.0, 0.0], [0.0, 0.0], 0.1).unwrap();
        m.growth_radius = 2.0;
        let v = truncation_map(&m, &[3.0, 4.0]);
        assert_abs_diff_eq!(v[0], 1.2, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.6, epsilon = 1e-15);
        assert_eq!(truncation_map(&m, &[0.5, -0.5]), vec![0.5, -0.5]);
    }

    #[test]
    fn cubic_projection_left_endpoint() {
        let m = make_tilted_cubic(0.25).unwrap();
        let s = SublevelSet::new(&m, -1.0 / 48.0, Branch::Minus).unwrap();
        let p = project_sublevel(&s, &[0.5]).unwrap()[0];
        assert!(p > 0.25 && p < 1.0);
        assert!((m.eval(&[p]) + 1.0 / 48.0).abs() < 1e-14);
        // independent oracle: bisection of W + 1/48 on [0.25, 1]
        let (mut a, mut b) = (0.25, 1.0);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if m.eval(&[c]) + 1.0 / 48.0 > 0.0 {
                a = c;
            } else {
                b = c;
            }
        }
        assert_abs_diff_eq!(p, b, epsilon = 1e-14);
        assert_eq!(project_sublevel(&s, &[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn plateau_sublevel_contains_plateau() {
        let m = make_plateau_scalar([-2.0, -1.0], -0.05).unwrap();
        let s = SublevelSet::new(&m, -0.04, Branch::Minus).unwrap();
        let (l, r) = s.interval().unwrap();
        assert!(l < -2.0 && r > -1.0);
        assert_eq!(project_sublevel(&s, &[-1.5]).unwrap(), vec![-1.5]);
    }

    #[test]
    fn planar_projection_satisfies_kkt() {
        let m = make_planar_tilted([1.0, 0.0], [0.0, 0.0], 0.1).unwrap();
        let h = 0.5 * m.depth;
        let s = SublevelSet::new(&m, h, Branch::Minus).unwrap();
        let u = [0.6, 0.3];
        let p = project_sublevel(&s, &u).unwrap();
        assert!((m.eval(&p) - h).abs() < 1e-9);
        let g = m.grad_vec(&p);
        let d = [u[0] - p[0], u[1] - p[1]];
        // d parallel to grad W
        assert!((d[0] * g[1] - d[1] * g[0]).abs() < 1e-9);
        assert!(d[0] * g[0] + d[1] * g[1] > 0.0);
    }

    #[test]
    fn empty_sublevel_rejected() {
        let m = make_tilted_cubic(0.25).unwrap();
        assert!(SublevelSet::new(&m, -0.5, Branch::Minus).is_err());
    }
}
