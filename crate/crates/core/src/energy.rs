//! Discrete weighted energy E_c(v) = sum over cells of (|v'|^2/2 + W(v)) e^{c t} dt
//! on a truncated uniform grid, with midpoint evaluation of both W and the weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialModel;

/// Weights below this are clamped to zero.
pub const WEIGHT_FLOOR: f64 = 1e-300;
/// Largest admissible exponent c * t_max.
pub const MAX_WEIGHT_EXPONENT: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(t_min: f64, t_max: f64, n: usize) -> Result<Grid> {
        if !(t_min.is_finite() && t_max.is_finite() && t_min < 0.0 && 0.0 < t_max) {
            return Err(Error::InvalidParameter(format!("grid needs t_min < 0 < t_max, got [{t_min}, {t_max}]")));
        }
        if n < 3 {
            return Err(Error::InvalidParameter(format!("grid needs n >= 3 nodes, got {n}")));
        }
        Ok(Grid { t_min, t_max, n })
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.t_max
        } else {
            self.t_min + i as f64 * self.dt()
        }
    }

    /// Center of cell i (between nodes i and i+1).
    pub fn t_mid(&self, i: usize) -> f64 {
        self.t_min + (i as f64 + 0.5) * self.dt()
    }

    pub fn cells(&self) -> usize {
        self.n - 1
    }
}

/// Sampled curve on a grid, stored node-major: values[i*dim + j] is component j at node i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub grid: Grid,
    pub dim: usize,
    pub values: Vec<f64>,
    pub pin_left: Vec<f64>,
    pub pin_right: Vec<f64>,
    pub pinned: bool,
}

impl Profile {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>, pin_left: Vec<f64>, pin_right: Vec<f64>) -> Result<Profile> {
        if values.len() != grid.n * dim || pin_left.len() != dim || pin_right.len() != dim {
            return Err(Error::InvalidProfile(format!(
                "expected {} values of dimension {dim}, got {}",
                grid.n * dim,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite entry".into()));
        }
        let mut p = Profile { grid, dim, values, pin_left, pin_right, pinned: true };
        p.apply_pins();
        Ok(p)
    }

    pub fn from_fn(
        grid: Grid,
        dim: usize,
        pin_left: Vec<f64>,
        pin_right: Vec<f64>,
        f: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Profile> {
        let mut values = Vec::with_capacity(grid.n * dim);
        for i in 0..grid.n {
            let u = f(grid.t(i));
            if u.len() != dim {
                return Err(Error::InvalidProfile("sample has wrong dimension".into()));
            }
            values.extend_from_slice(&u);
        }
        Profile::new(grid, dim, values, pin_left, pin_right)
    }

    pub fn constant(grid: Grid, point: &[f64]) -> Profile {
        let dim = point.len();
        let values = point.iter().copied().cycle().take(grid.n * dim).collect();
        Profile { grid, dim, values, pin_left: point.to_vec(), pin_right: point.to_vec(), pinned: true }
    }

    /// Piecewise-linear guess: pin_left for t <= -1, pin_right for t >= 1, linear in between.
    /// The ramp shrinks to [t_min/2, t_max/2] on windows narrower than [-2, 2].
    pub fn psi(grid: Grid, pin_left: &[f64], pin_right: &[f64]) -> Profile {
        let lo = (-1.0f64).max(grid.t_min / 2.0);
        let hi = 1.0f64.min(grid.t_max / 2.0);
        let dim = pin_left.len();
        let mut values = Vec::with_capacity(grid.n * dim);
        for i in 0..grid.n {
            let s = ((grid.t(i) - lo) / (hi - lo)).clamp(0.0, 1.0);
            for j in 0..dim {
                values.push(pin_left[j] + s * (pin_right[j] - pin_left[j]));
            }
        }
        Profile { grid, dim, values, pin_left: pin_left.to_vec(), pin_right: pin_right.to_vec(), pinned: true }
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn apply_pins(&mut self) {
        if self.pinned {
            let (k, n) = (self.dim, self.grid.n);
            self.values[..k].copy_from_slice(&self.pin_left);
            self.values[(n - 1) * k..].copy_from_slice(&self.pin_right);
        }
    }

    /// Number of leading and trailing nodes that equal their pins exactly.
    pub fn flat_extent(&self) -> (usize, usize) {
        let n = self.grid.n;
        let left = (0..n).take_while(|&i| self.node(i) == self.pin_left.as_slice()).count();
        let right = (0..n).rev().take_while(|&i| self.node(i) == self.pin_right.as_slice()).count();
        (left, right)
    }

    /// Profile t -> v(t + m dt) on the same window, padded with the pins.
    pub fn shifted(&self, m: i64) -> Profile {
        let (n, k) = (self.grid.n as i64, self.dim);
        let mut out = self.clone();
        for i in 0..n {
            let src = i + m;
            let dst = &mut out.values[i as usize * k..(i as usize + 1) * k];
            if src < 0 {
                dst.copy_from_slice(&self.pin_left);
            } else if src >= n {
                dst.copy_from_slice(&self.pin_right);
            } else {
                dst.copy_from_slice(self.node(src as usize));
            }
        }
        out
    }

    /// Unweighted kinetic integral sum |du/dt|^2 dt.
    pub fn kinetic_integral(&self) -> f64 {
        let dt = self.grid.dt();
        let k = self.dim;
        (0..self.grid.cells())
            .map(|i| {
                let a = self.node(i);
                let b = self.node(i + 1);
                (0..k).map(|j| (b[j] - a[j]) * (b[j] - a[j])).sum::<f64>() / dt
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnergyReport {
    pub c: f64,
    /// Discrete energy on the window.
    pub total: f64,
    pub kinetic: f64,
    pub potential: f64,
    /// Closed-form midpoint sum of depth * e^{ct} dt over the cells left of the window.
    /// Adding it to `total` gives the energy of the profile continued by its left pin.
    pub tail: f64,
    pub per_cell: Vec<f64>,
    pub weight_floor_hit: bool,
}

impl WeightedEnergyReport {
    /// Energy of the profile continued by its pins to the whole line.
    pub fn completed(&self) -> f64 {
        self.total + self.tail
    }
}

/// JSON record for an energy evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub c: f64,
    pub total: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub weight_floor_hit: bool,
}

impl From<&WeightedEnergyReport> for EnergyRecord {
    fn from(r: &WeightedEnergyReport) -> Self {
        EnergyRecord { c: r.c, total: r.total, kinetic: r.kinetic, potential: r.potential, weight_floor_hit: r.weight_floor_hit }
    }
}

pub(crate) fn check_speed(grid: &Grid, c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("speed must be > 0, got {c}")));
    }
    if c * grid.t_max > MAX_WEIGHT_EXPONENT {
        return Err(Error::DomainTooLong(c * grid.t_max));
    }
    Ok(())
}

/// Cell weights e^{c t_mid}; the flag is set when any weight was clamped to zero.
pub fn cell_weights(grid: &Grid, c: f64) -> (Vec<f64>, bool) {
    let mut hit = false;
    let w = (0..grid.cells())
        .map(|i| {
            let w = (c * grid.t_mid(i)).exp();
            if w < WEIGHT_FLOOR {
                hit = true;
                0.0
            } else {
                w
            }
        })
        .collect();
    (w, hit)
}

/// Midpoint-rule mass of depth * e^{ct} over the infinitely many cells left of the window.
pub fn left_tail(grid: &Grid, depth: f64, c: f64) -> f64 {
    let dt = grid.dt();
    depth * dt * (c * (grid.t_min - 0.5 * dt)).exp() / (-(-c * dt).exp_m1())
}

pub fn energy(profile: &Profile, potential: &PotentialModel, c: f64) -> Result<WeightedEnergyReport> {
    let grid = &profile.grid;
    check_speed(grid, c)?;
    let (w, hit) = cell_weights(grid, c);
    let dt = grid.dt();
    let k = profile.dim;
    let mut mid = vec![0.0; k];
    let mut per_cell = Vec::with_capacity(grid.cells());
    let (mut kin, mut pot) = (0.0, 0.0);
    for i in 0..grid.cells() {
        let a = profile.node(i);
        let b = profile.node(i + 1);
        let mut d2 = 0.0;
        for j in 0..k {
            let d = b[j] - a[j];
            d2 += d * d;
            mid[j] = 0.5 * (a[j] + b[j]);
        }
        let wv = potential.eval(&mid);
        if !wv.is_finite() {
            return Err(Error::InvalidProfile(format!("W is not finite at cell {i}")));
        }
        let ki = 0.5 * d2 / (dt * dt) * w[i] * dt;
        let pi = wv * w[i] * dt;
        kin += ki;
        pot += pi;
        per_cell.push(ki + pi);
    }
    Ok(WeightedEnergyReport {
        c,
        total: kin + pot,
        kinetic: kin,
        potential: pot,
        tail: left_tail(grid, potential.depth, c),
        per_cell,
        weight_floor_hit: hit,
    })
}

/// Exact gradient of the discrete energy with respect to node values; pinned rows are zero.
pub fn energy_gradient(profile: &Profile, potential: &PotentialModel, c: f64) -> Result<Vec<f64>> {
    check_speed(&profile.grid, c)?;
    let (w, _) = cell_weights(&profile.grid, c);
    let mut g = vec![0.0; profile.values.len()];
    gradient_into(profile, potential, &w, &mut g)?;
    Ok(g)
}

pub(crate) fn gradient_into(profile: &Profile, potential: &PotentialModel, w: &[f64], g: &mut [f64]) -> Result<()> {
    let grid = &profile.grid;
    let dt = grid.dt();
    let k = profile.dim;
    let mut mid = vec![0.0; k];
    let mut gw = vec![0.0; k];
    g.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..grid.cells() {
        if w[i] == 0.0 {
            continue;
        }
        let (a, b) = (i * k, (i + 1) * k);
        for j in 0..k {
            mid[j] = 0.5 * (profile.values[a + j] + profile.values[b + j]);
        }
        potential.grad(&mid, &mut gw);
        let wd = w[i] * dt;
        for j in 0..k {
            let slope = (profile.values[b + j] - profile.values[a + j]) / (dt * dt);
            let half = 0.5 * gw[j];
            if !half.is_finite() {
                return Err(Error::InvalidProfile(format!("grad W is not finite at cell {i}")));
            }
            g[a + j] += wd * (-slope + half);
            g[b + j] += wd * (slope + half);
        }
    }
    if profile.pinned {
        let n = grid.n;
        g[..k].iter_mut().for_each(|x| *x = 0.0);
        g[(n - 1) * k..].iter_mut().for_each(|x| *x = 0.0);
    }
    Ok(())
}

/// Gradient divided by the node weight e^{c t_i} dt: the discrete Euler-Lagrange residual
/// -c u' - u'' + grad W(u) at interior nodes (zero at the ends).
pub fn weighted_gradient(profile: &Profile, potential: &PotentialModel, c: f64) -> Result<Vec<f64>> {
    let g = energy_gradient(profile, potential, c)?;
    let grid = &profile.grid;
    let k = profile.dim;
    let dt = grid.dt();
    let mut out = vec![0.0; g.len()];
    for i in 1..grid.n - 1 {
        let nw = (c * grid.t(i)).exp() * dt;
        if nw < WEIGHT_FLOOR {
            continue;
        }
        for j in 0..k {
            out[i * k + j] = g[i * k + j] / nw;
        }
    }
    Ok(out)
}

/// Largest pointwise norm of the weighted gradient.
pub fn max_weighted_gradient_norm(profile: &Profile, potential: &PotentialModel, c: f64) -> Result<f64> {
    let wg = weighted_gradient(profile, potential, c)?;
    Ok(wg.chunks(profile.dim).map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max))
}

/// Relative defect |E(v(.+m dt)) - e^{-c m dt} E(v)| / (|E(v)| + eps) of the translation identity,
/// with E the energy continued by the pins and eps the roundoff scale of the cell sum.
pub fn translation_identity_check(profile: &Profile, potential: &PotentialModel, c: f64, m: i64) -> Result<f64> {
    if m == 0 {
        return Ok(0.0);
    }
    let need = m.unsigned_abs() as usize + 1;
    let (l, r) = profile.flat_extent();
    if l < need || r < need {
        return Err(Error::TailNotFlat { needed: need - 1 });
    }
    let e0 = energy(profile, potential, c)?;
    let e1 = energy(&profile.shifted(m), potential, c)?;
    let tau = m as f64 * profile.grid.dt();
    let scale: f64 = e0.per_cell.iter().map(|x| x.abs()).sum::<f64>() + e0.tail.abs();
    let eps = f64::EPSILON * scale + f64::MIN_POSITIVE;
    let a = e0.completed();
    let b = e1.completed();
    Ok((b - (-c * tau).exp() * a).abs() / (a.abs() + eps))
}
