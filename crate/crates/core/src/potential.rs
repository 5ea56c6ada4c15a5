//! Double-well potentials W: R^k -> R with a deep minima set at level `depth < 0`
//! and a shallow one at level 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 7th-order smoothstep: S(0)=0, S(1)=1, derivatives 1..3 vanish at both ends.
pub(crate) fn smoothstep7(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let x4 = x * x * x * x;
    x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
}

pub(crate) fn smoothstep7_d(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    let y = x * (1.0 - x);
    140.0 * y * y * y
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimaKind {
    Point,
    FinitePointList,
    Segment1d,
    ParametricCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimaGeometry {
    Points(Vec<Vec<f64>>),
    /// Closed interval of the real line (k = 1).
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Curve given by ordered vertices; projection is exact onto the polyline.
    Polyline(Vec<Vec<f64>>),
}

/// A minima set together with its tube radius and coercivity constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaSet {
    pub kind: MinimaKind,
    pub geometry: MinimaGeometry,
    pub tube_radius: f64,
    pub coercivity_const: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn project_segment(u: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|x| x * x).sum();
    let s = if len2 > 0.0 {
        (u.iter().zip(a).zip(&ab).map(|((ui, ai), di)| (ui - ai) * di).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    a.iter().zip(&ab).map(|(ai, di)| ai + s * di).collect()
}

impl MinimaSet {
    pub fn point(p: Vec<f64>, tube_radius: f64, coercivity_const: f64) -> Self {
        MinimaSet { kind: MinimaKind::Point, geometry: MinimaGeometry::Points(vec![p]), tube_radius, coercivity_const }
    }

    pub fn interval(lo: f64, hi: f64, tube_radius: f64, coercivity_const: f64) -> Self {
        MinimaSet { kind: MinimaKind::Segment1d, geometry: MinimaGeometry::Interval { lo, hi }, tube_radius, coercivity_const }
    }

    /// Nearest point of the set. Ties resolve to the first candidate.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        match &self.geometry {
            MinimaGeometry::Points(pts) => {
                let mut best = &pts[0];
                let mut bd = dist(u, best);
                for p in &pts[1..] {
                    let d = dist(u, p);
                    if d < bd {
                        bd = d;
                        best = p;
                    }
                }
                best.clone()
            }
            MinimaGeometry::Interval { lo, hi } => vec![u[0].clamp(*lo, *hi)],
            MinimaGeometry::Polyline(vs) => {
                if vs.len() == 1 {
                    return vs[0].clone();
                }
                let mut best = project_segment(u, &vs[0], &vs[1]);
                let mut bd = dist(u, &best);
                for w in vs.windows(2).skip(1) {
                    let q = project_segment(u, &w[0], &w[1]);
                    let d = dist(u, &q);
                    if d < bd {
                        bd = d;
                        best = q;
                    }
                }
                best
            }
        }
    }

    pub fn dist(&self, u: &[f64]) -> f64 {
        dist(u, &self.project(u))
    }

    /// Point of the set used as a Dirichlet anchor when facing `toward`.
    pub fn anchor_toward(&self, toward: &[f64]) -> Vec<f64> {
        self.project(toward)
    }

    /// Deterministic finite sample of the set (vertices, endpoints, evenly spaced points).
    pub fn sample_points(&self, m: usize) -> Vec<Vec<f64>> {
        match &self.geometry {
            MinimaGeometry::Points(pts) => pts.clone(),
            MinimaGeometry::Interval { lo, hi } => {
                let m = m.max(2);
                (0..m).map(|j| vec![lo + (hi - lo) * j as f64 / (m - 1) as f64]).collect()
            }
            MinimaGeometry::Polyline(vs) => vs.clone(),
        }
    }

    /// Point of the set at parameter `s` in [0,1] (uniform over vertices/length).
    pub fn point_at(&self, s: f64) -> Vec<f64> {
        match &self.geometry {
            MinimaGeometry::Points(pts) => {
                let j = ((s * pts.len() as f64) as usize).min(pts.len() - 1);
                pts[j].clone()
            }
            MinimaGeometry::Interval { lo, hi } => vec![lo + (hi - lo) * s.clamp(0.0, 1.0)],
            MinimaGeometry::Polyline(vs) => {
                if vs.len() == 1 {
                    return vs[0].clone();
                }
                let x = s.clamp(0.0, 1.0) * (vs.len() - 1) as f64;
                let j = (x.floor() as usize).min(vs.len() - 2);
                let f = x - j as f64;
                vs[j].iter().zip(&vs[j + 1]).map(|(a, b)| a + f * (b - a)).collect()
            }
        }
    }

    pub fn is_singleton(&self) -> bool {
        match &self.geometry {
            MinimaGeometry::Points(p) => p.len() == 1,
            MinimaGeometry::Interval { lo, hi } => lo == hi,
            MinimaGeometry::Polyline(v) => v.len() == 1,
        }
    }

    /// Largest norm of a point of the set.
    pub fn extent(&self) -> f64 {
        self.sample_points(2).iter().map(|p| norm(p)).fold(0.0, f64::max)
    }
}

/// Cubic Hermite table for custom k=1 potentials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    /// Curvature of the quadratic extension outside the table.
    pub tail_curvature: f64,
}

impl Table {
    fn locate(&self, x: f64) -> usize {
        match self.u.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.u.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.u.len() - 2),
        }
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.u.len();
        if x < self.u[0] {
            let d = x - self.u[0];
            let k = self.tail_curvature;
            return (self.w[0] + self.dw[0] * d + 0.5 * k * d * d, self.dw[0] + k * d);
        }
        if x > self.u[n - 1] {
            let d = x - self.u[n - 1];
            let k = self.tail_curvature;
            return (self.w[n - 1] + self.dw[n - 1] * d + 0.5 * k * d * d, self.dw[n - 1] + k * d);
        }
        let i = self.locate(x);
        let h = self.u[i + 1] - self.u[i];
        let s = (x - self.u[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let w = h00 * self.w[i] + h10 * h * self.dw[i] + h01 * self.w[i + 1] + h11 * h * self.dw[i + 1];
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        let dw = d00 * self.w[i] + d10 * self.dw[i] + d01 * self.w[i + 1] + d11 * self.dw[i + 1];
        (w, dw)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    TiltedCubic {
        beta: f64,
    },
    Plateau {
        p1: f64,
        p2: f64,
        depth: f64,
        /// Coefficient of the quadratic A (x-1)^2 around the shallow well.
        outer: f64,
        /// Coefficient of the quadratic growth left of the plateau.
        left: f64,
    },
    Planar {
        a_minus: Vec<f64>,
        a_plus: Vec<f64>,
        tilt: f64,
    },
    Tabulated {
        table: Table,
        shift: f64,
    },
    Scaled {
        factor: f64,
        inner: Box<Shape>,
    },
}

impl Shape {
    fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Shape::TiltedCubic { beta } => {
                let x = u[0];
                let x2 = x * x;
                x2 * x2 / 4.0 - (1.0 + beta) * x2 * x / 3.0 + beta * x2 / 2.0
            }
            Shape::Plateau { p1, p2, depth, outer, left } => {
                let x = u[0];
                if x <= *p1 {
                    let s = p1 - x;
                    depth + left * s * s * smoothstep7(s)
                } else if x <= *p2 {
                    *depth
                } else {
                    let xi = (x - p2) / (1.0 - p2);
                    let sg = smoothstep7(xi);
                    let q = outer * (x - 1.0) * (x - 1.0);
                    depth * (1.0 - sg) + q * sg
                }
            }
            Shape::Planar { a_minus, a_plus, tilt } => {
                let (s, _, _) = planar_axis(u, a_minus, a_plus);
                let dm: f64 = u.iter().zip(a_minus).map(|(x, a)| (x - a) * (x - a)).sum();
                let dp: f64 = u.iter().zip(a_plus).map(|(x, a)| (x - a) * (x - a)).sum();
                0.25 * dm * dp - tilt * smoothstep7(s)
            }
            Shape::Tabulated { table, shift } => table.eval(u[0]).0 - shift,
            Shape::Scaled { factor, inner } => factor * inner.eval(u),
        }
    }

    fn grad(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Shape::TiltedCubic { beta } => {
                let x = u[0];
                out[0] = x * (x - 1.0) * (x - beta);
            }
            Shape::Plateau { p1, p2, depth, outer, left } => {
                let x = u[0];
                out[0] = if x <= *p1 {
                    let s = p1 - x;
                    -left * (2.0 * s * smoothstep7(s) + s * s * smoothstep7_d(s))
                } else if x <= *p2 {
                    0.0
                } else {
                    let l = 1.0 - p2;
                    let xi = (x - p2) / l;
                    let sg = smoothstep7(xi);
                    let q = outer * (x - 1.0) * (x - 1.0);
                    (q - depth) * smoothstep7_d(xi) / l + 2.0 * outer * (x - 1.0) * sg
                };
            }
            Shape::Planar { a_minus, a_plus, tilt } => {
                let (s, e, d) = planar_axis(u, a_minus, a_plus);
                let dm: f64 = u.iter().zip(a_minus).map(|(x, a)| (x - a) * (x - a)).sum();
                let dp: f64 = u.iter().zip(a_plus).map(|(x, a)| (x - a) * (x - a)).sum();
                let ds = smoothstep7_d(s);
                for i in 0..u.len() {
                    out[i] = 0.5 * ((u[i] - a_minus[i]) * dp + (u[i] - a_plus[i]) * dm) - tilt * ds * e[i] / d;
                }
            }
            Shape::Tabulated { table, .. } => out[0] = table.eval(u[0]).1,
            Shape::Scaled { factor, inner } => {
                inner.grad(u, out);
                for g in out.iter_mut() {
                    *g *= factor;
                }
            }
        }
    }

    fn hess_bound(&self, u: &[f64]) -> Option<f64> {
        match self {
            Shape::TiltedCubic { beta } => {
                let x = u[0];
                Some(3.0 * x * x - 2.0 * (1.0 + beta) * x + beta)
            }
            Shape::Scaled { factor, inner } => inner.hess_bound(u).map(|h| factor * h),
            _ => None,
        }
    }
}

/// Returns (s, e, d): coordinate along the axis from a+ (s=0) to a- (s=1), unit axis, distance.
fn planar_axis(u: &[f64], a_minus: &[f64], a_plus: &[f64]) -> (f64, Vec<f64>, f64) {
    let d = dist(a_minus, a_plus);
    let e: Vec<f64> = a_minus.iter().zip(a_plus).map(|(m, p)| (m - p) / d).collect();
    let s = u.iter().zip(a_plus).zip(&e).map(|((x, p), ei)| (x - p) * ei).sum::<f64>() / d;
    (s, e, d)
}

/// Potential model: the map W, its gradient, both minima sets and structural constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub name: String,
    pub dim: usize,
    pub shape: Shape,
    pub minima_minus: MinimaSet,
    pub minima_plus: MinimaSet,
    pub depth: f64,
    pub growth_radius: f64,
    pub growth_coeff: f64,
}

impl PotentialModel {
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.shape.eval(u)
    }

    pub fn grad(&self, u: &[f64], out: &mut [f64]) {
        self.shape.grad(u, out)
    }

    pub fn grad_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.grad(u, &mut g);
        g
    }

    /// Largest Hessian eigenvalue at `u`, when available in closed form.
    pub fn hess_diag_bound(&self, u: &[f64]) -> Option<f64> {
        self.shape.hess_bound(u)
    }

    /// Symmetric Hessian by central differences of the gradient.
    pub fn hessian_fd(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let k = self.dim;
        let mut h = vec![vec![0.0; k]; k];
        let mut x = u.to_vec();
        let mut gp = vec![0.0; k];
        let mut gm = vec![0.0; k];
        for j in 0..k {
            let step = 1e-5 * (1.0 + u[j].abs());
            x[j] = u[j] + step;
            self.grad(&x, &mut gp);
            x[j] = u[j] - step;
            self.grad(&x, &mut gm);
            x[j] = u[j];
            for i in 0..k {
                h[i][j] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        for i in 0..k {
            for j in 0..i {
                let s = 0.5 * (h[i][j] + h[j][i]);
                h[i][j] = s;
                h[j][i] = s;
            }
        }
        h
    }

    /// Smallest and largest eigenvalue of the finite-difference Hessian.
    pub fn hessian_extremes(&self, u: &[f64]) -> (f64, f64) {
        let k = self.dim;
        let h = self.hessian_fd(u);
        let m = nalgebra::DMatrix::from_fn(k, k, |i, j| h[i][j]);
        let ev = m.symmetric_eigenvalues();
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Curvature bound at `u`: closed form when available, else finite-difference probe.
    pub fn curvature_at(&self, u: &[f64]) -> f64 {
        match self.hess_diag_bound(u) {
            Some(h) => h,
            None => self.hessian_extremes(u).1,
        }
    }

    /// Right Dirichlet anchor: the point of the shallow set nearest to the deep set.
    pub fn anchor_plus(&self) -> Vec<f64> {
        let am = self.minima_minus.point_at(0.0);
        self.minima_plus.anchor_toward(&am)
    }

    /// Left Dirichlet anchor: the point of the deep set nearest to the right anchor.
    pub fn anchor_minus(&self) -> Vec<f64> {
        self.minima_minus.anchor_toward(&self.anchor_plus())
    }

    /// Potential s2 * W. Wave speeds scale by sqrt(s2), profile lengths by 1/sqrt(s2).
    pub fn scaled(&self, s2: f64) -> Result<PotentialModel> {
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor must be > 0, got {s2}")));
        }
        let mut m = self.clone();
        m.name = format!("{}*{}", s2, self.name);
        m.shape = Shape::Scaled { factor: s2, inner: Box::new(self.shape.clone()) };
        m.depth = s2 * self.depth;
        m.growth_coeff = s2 * self.growth_coeff;
        m.minima_minus.coercivity_const /= s2;
        m.minima_plus.coercivity_const /= s2;
        Ok(m)
    }

    /// Which minima set is nearer; ties go to the deep set.
    pub fn nearer_minus(&self, u: &[f64]) -> bool {
        self.minima_minus.dist(u) <= self.minima_plus.dist(u)
    }
}

/// Max of dist^2 / (W - level) on a deterministic set of tube points.
/// Returns infinity when W - level <= 0 at a point off the set.
pub(crate) fn fit_coercivity(model: &PotentialModel, set: &MinimaSet, level: f64) -> f64 {
    let rho = set.tube_radius;
    let k = model.dim;
    let dirs = unit_directions(k, 64);
    let bases = set.sample_points(16);
    let mut worst: f64 = 0.0;
    for b in &bases {
        for d in &dirs {
            for j in 1..=64 {
                let r = rho * j as f64 / 64.0;
                let u: Vec<f64> = b.iter().zip(d).map(|(x, e)| x + r * e).collect();
                let dd = set.dist(&u);
                if dd <= 1e-14 || dd > rho {
                    continue;
                }
                let gap = model.eval(&u) - level;
                if gap <= 0.0 {
                    return f64::INFINITY;
                }
                worst = worst.max(dd * dd / gap);
            }
        }
    }
    worst
}

/// Deterministic unit directions: +-1 for k=1, evenly spaced angles for k=2,
/// coordinate and diagonal directions otherwise.
pub(crate) fn unit_directions(k: usize, m: usize) -> Vec<Vec<f64>> {
    match k {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..m)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut v = Vec::new();
            for i in 0..k {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; k];
                    e[i] = s;
                    v.push(e);
                }
            }
            let c = 1.0 / (k as f64).sqrt();
            v.push(vec![c; k]);
            v.push(vec![-c; k]);
            v
        }
    }
}

fn certify_growth(model: &PotentialModel, r0: f64) -> f64 {
    let dirs = unit_directions(model.dim, 64);
    let mut g = vec![0.0; model.dim];
    let mut lo = f64::INFINITY;
    for d in &dirs {
        for f in [1.0, 1.5, 2.0, 3.0, 4.0] {
            let u: Vec<f64> = d.iter().map(|e| f * r0 * e).collect();
            model.grad(&u, &mut g);
            let r2: f64 = u.iter().map(|x| x * x).sum();
            let ip: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
            lo = lo.min(ip / r2);
        }
    }
    lo
}

/// Unbalanced scalar double well W(u) = u^4/4 - (1+b)u^3/3 + b u^2/2 with wells at 0 (level 0)
/// and 1 (level (2b-1)/12).
pub fn make_tilted_cubic(beta: f64) -> Result<PotentialModel> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0, 1/2), got {beta}: the wells would swap or balance")));
    }
    let depth = (2.0 * beta - 1.0) / 12.0;
    let mut m = PotentialModel {
        name: format!("tilted_cubic(beta={beta})"),
        dim: 1,
        shape: Shape::TiltedCubic { beta },
        minima_minus: MinimaSet::point(vec![1.0], (1.0 - beta) / 2.0, 0.0),
        minima_plus: MinimaSet::point(vec![0.0], beta / 2.0, 0.0),
        depth,
        growth_radius: 2.0,
        growth_coeff: 1.0,
    };
    let cm = fit_coercivity(&m, &m.minima_minus, depth);
    let cp = fit_coercivity(&m, &m.minima_plus, 0.0);
    m.minima_minus.coercivity_const = 1.01 * cm;
    m.minima_plus.coercivity_const = 1.01 * cp;
    Ok(m)
}

/// Scalar potential whose deep minima form the interval [p1, p2] and whose shallow well sits at 1.
pub fn make_plateau_scalar(plateau: [f64; 2], depth: f64) -> Result<PotentialModel> {
    let [p1, p2] = plateau;
    if !(p1 < p2 && p2 < 0.0) {
        return Err(Error::InvalidParameter(format!("plateau must satisfy p1 < p2 < 0, got [{p1}, {p2}]")));
    }
    if !(depth < 0.0 && depth.is_finite()) {
        return Err(Error::InvalidParameter("depth must be < 0".into()));
    }
    let outer = 0.5;
    let left = 0.5;
    let shape = Shape::Plateau { p1, p2, depth, outer, left };
    // locate the barrier on a fine grid of (p2, 1)
    let n = 20_000;
    let mut xb = p2;
    let mut wb = f64::NEG_INFINITY;
    let mut maxima = 0;
    let mut prev_slope = 0.0;
    let mut g = [0.0];
    for j in 1..n {
        let x = p2 + (1.0 - p2) * j as f64 / n as f64;
        let w = shape.eval(&[x]);
        if w > wb {
            wb = w;
            xb = x;
        }
        shape.grad(&[x], &mut g);
        if prev_slope > 0.0 && g[0] <= 0.0 {
            maxima += 1;
        }
        if g[0] != 0.0 {
            prev_slope = g[0];
        }
    }
    if wb <= 0.0 {
        return Err(Error::InvalidParameter(format!("fitted barrier maximum {wb:.3e} <= 0; the shallow well is not separated")));
    }
    if maxima != 1 {
        return Err(Error::InvalidParameter(format!("expected a single barrier between plateau and well, found {maxima}")));
    }
    let rho_plus = (0.5 * (1.0 - xb)).min(0.5);
    let rho_minus = (0.5 * (xb - p2)).min(0.5);
    let r0 = 2.0 * (p1.abs() + 1.0);
    let mut m = PotentialModel {
        name: format!("plateau(p1={p1},p2={p2},depth={depth})"),
        dim: 1,
        shape,
        minima_minus: MinimaSet::interval(p1, p2, rho_minus, 0.0),
        minima_plus: MinimaSet::point(vec![1.0], rho_plus, 0.0),
        depth,
        growth_radius: r0,
        growth_coeff: outer.min(left),
    };
    m.minima_minus.coercivity_const = 1.01 * fit_coercivity(&m, &m.minima_minus, depth);
    m.minima_plus.coercivity_const = 1.01 * fit_coercivity(&m, &m.minima_plus, 0.0);
    Ok(m)
}

/// Planar double well 1/4|u-a-|^2|u-a+|^2 lowered at a- by a smoothstep tilt along the axis.
pub fn make_planar_tilted(well_minus: [f64; 2], well_plus: [f64; 2], tilt: f64) -> Result<PotentialModel> {
    let am = well_minus.to_vec();
    let ap = well_plus.to_vec();
    let d = dist(&am, &ap);
    if !(d > 0.0) {
        return Err(Error::InvalidParameter("wells must be distinct".into()));
    }
    if !tilt.is_finite() {
        return Err(Error::InvalidParameter("tilt must be finite".into()));
    }
    let shape = Shape::Planar { a_minus: am.clone(), a_plus: ap.clone(), tilt };
    let shift = shape.eval(&ap);
    if shift.abs() > 1e-14 {
        return Err(Error::InvalidParameter(format!("normalization failed: W(a+)={shift}")));
    }
    let depth = shape.eval(&am);
    if !(depth < 0.0) {
        return Err(Error::InvalidParameter(format!("depth must be < 0 (got {depth})")));
    }
    let rho = 0.2 * d;
    let r0 = 2.0 * (norm(&am).max(norm(&ap)) + d);
    let mut m = PotentialModel {
        name: format!("planar_tilted(tilt={tilt})"),
        dim: 2,
        shape,
        minima_minus: MinimaSet::point(am.clone(), rho, 0.0),
        minima_plus: MinimaSet::point(ap.clone(), rho, 0.0),
        depth,
        growth_radius: r0,
        growth_coeff: 1.0,
    };
    for w in [&am, &ap] {
        let (lo, _) = m.hessian_extremes(w);
        let gn = norm(&m.grad_vec(w));
        if !(lo > 0.0) || gn > 1e-10 {
            return Err(Error::InvalidParameter(format!("well at {w:?} vanished after tilt (min Hessian eigenvalue {lo:.3e})")));
        }
    }
    let c0 = certify_growth(&m, r0);
    if !(c0 > 0.0) {
        return Err(Error::InvalidParameter("radial growth condition fails at growth_radius".into()));
    }
    m.growth_coeff = 0.5 * c0;
    // a flattened well can make these infinite; the auditor reports it with a witness
    m.minima_minus.coercivity_const = 1.01 * fit_coercivity(&m, &m.minima_minus, depth);
    m.minima_plus.coercivity_const = 1.01 * fit_coercivity(&m, &m.minima_plus, 0.0);
    Ok(m)
}

/// Custom k=1 potential from tabulated (u, W, W') rows, cubic Hermite in between.
/// W is shifted so that W(a_plus) = 0.
pub fn make_tabulated(rows: &[(f64, f64, f64)], a_minus: f64, a_plus: f64) -> Result<PotentialModel> {
    if rows.len() < 4 {
        return Err(Error::InvalidParameter("tabulated potential needs at least 4 rows".into()));
    }
    if rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidParameter("tabulated u values must be strictly increasing".into()));
    }
    if rows.iter().any(|r| !(r.0.is_finite() && r.1.is_finite() && r.2.is_finite())) {
        return Err(Error::InvalidParameter("tabulated potential contains non-finite values".into()));
    }
    let table = Table {
        u: rows.iter().map(|r| r.0).collect(),
        w: rows.iter().map(|r| r.1).collect(),
        dw: rows.iter().map(|r| r.2).collect(),
        tail_curvature: 1.0,
    };
    let shift = table.eval(a_plus).0;
    let shape = Shape::Tabulated { table: table.clone(), shift };
    let depth = shape.eval(&[a_minus]);
    if !(depth < 0.0) {
        return Err(Error::InvalidParameter(format!("depth must be < 0 (got {depth})")));
    }
    let d = (a_minus - a_plus).abs();
    let lo = table.u[0].min(a_minus.min(a_plus));
    let hi = table.u[table.u.len() - 1].max(a_minus.max(a_plus));
    let r0 = 2.0 * lo.abs().max(hi.abs()) + 1.0;
    let mut m = PotentialModel {
        name: "tabulated".into(),
        dim: 1,
        shape,
        minima_minus: MinimaSet::point(vec![a_minus], 0.25 * d, 0.0),
        minima_plus: MinimaSet::point(vec![a_plus], 0.25 * d, 0.0),
        depth,
        growth_radius: r0,
        growth_coeff: 1.0,
    };
    let c0 = certify_growth(&m, r0);
    if !(c0 > 0.0) {
        return Err(Error::InvalidParameter("radial growth condition fails at growth_radius".into()));
    }
    m.growth_coeff = 0.5 * c0;
    m.minima_minus.coercivity_const = 1.01 * fit_coercivity(&m, &m.minima_minus, depth);
    m.minima_plus.coercivity_const = 1.01 * fit_coercivity(&m, &m.minima_plus, 0.0);
    Ok(m)
}
