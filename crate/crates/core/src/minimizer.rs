//! Projected descent for the discrete weighted energy over the constrained class:
//! left tail (t <= -T) in the deep sublevel set, right tail (t >= T) in the half tube
//! around the shallow minima, both ends pinned.
//!
//! Search directions are preconditioned by the weighted H^1 operator K + mu M, so that
//! smooth modes relax at a mesh-independent rate.

use serde::{Deserialize, Serialize};

use crate::auditor::split_levels;
use crate::energy::{cell_weights, check_speed, energy, gradient_into, Grid, Profile, WeightedEnergyReport, WEIGHT_FLOOR};
use crate::error::{Error, Result};
use crate::geometry::{project_sublevel, project_tube, truncation_map, Branch, SublevelSet, THRESHOLD_SLACK};
use crate::linalg::solve_tridiagonal;
use crate::potential::PotentialModel;

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Consecutive energy increases that count as divergence.
pub const DIVERGENCE_RUN: usize = 50;
/// Iterations over which constraint activity is reported.
const ACTIVITY_WINDOW: usize = 10;
/// Iterations between attempted translation moves.
const TRANSLATION_PERIOD: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    Fixed { step: f64 },
    Backtracking,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeConfig {
    /// Constraint onset time T; `None` selects min(|t_min|, t_max)/4.
    pub t_constraint: Option<f64>,
    pub max_iters: usize,
    /// Threshold on the sup norm of the weighted gradient (the pointwise Euler-Lagrange residual).
    pub grad_tol: f64,
    pub step_rule: StepRule,
    pub enforce_truncation: bool,
    pub enforce_left_constraint: bool,
    pub enforce_right_constraint: bool,
    /// Level of the left constraint set; `None` derives h_- from the half-tube shell.
    pub left_level: Option<f64>,
    /// Stop as soon as the completed energy drops below minus this multiple of the energy mass.
    pub stop_below: Option<f64>,
    /// Interleave exact whole-cell translations with the gradient steps.
    pub translation_moves: bool,
    pub log_iterations: bool,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            t_constraint: None,
            max_iters: 20_000,
            grad_tol: 1e-6,
            step_rule: StepRule::Backtracking,
            enforce_truncation: true,
            enforce_left_constraint: true,
            enforce_right_constraint: true,
            left_level: None,
            stop_below: None,
            translation_moves: true,
            log_iterations: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub profile: Profile,
    pub c: f64,
    /// Discrete energy on the window.
    pub energy: f64,
    /// Window energy plus the closed-form left tail: the energy of the pinned continuation.
    pub completed_energy: f64,
    /// Sum of |per-cell energy| plus |tail|: the scale against which the sign of
    /// `completed_energy` is judged.
    pub energy_mass: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Stopped early because the completed energy fell below `stop_below`.
    pub stopped_below: bool,
    /// Stopped early because the extrapolated limit of the completed energy stays above
    /// `stop_below` (see [`sign_settled_above`]).
    pub stopped_above: bool,
    pub grad_norm: f64,
    pub constraint_active_left: bool,
    pub constraint_active_right: bool,
    pub ode_residual: f64,
    /// Largest cellwise-summed energy change over accepted steps; <= 0 under Armijo.
    pub max_step_change: f64,
    /// Largest energy increase caused by the left projection over the run, measured on cells
    /// with both nodes in the constrained region (the onset cell can gain a jump).
    pub max_projection_increase: f64,
    pub t_constraint: f64,
    pub left_level: f64,
    pub log: Vec<IterRecord>,
}

/// Weighted L2 norm of -c u' - u'' + grad W(u) at interior nodes, central differences,
/// weight e^{ct} normalized by its sum.
pub fn residual(profile: &Profile, potential: &PotentialModel, c: f64) -> f64 {
    let g = &profile.grid;
    let dt = g.dt();
    let k = profile.dim;
    let mut gw = vec![0.0; k];
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..g.n - 1 {
        let (a, u, b) = (profile.node(i - 1), profile.node(i), profile.node(i + 1));
        potential.grad(u, &mut gw);
        let w = (c * g.t(i)).exp();
        let mut r2 = 0.0;
        for j in 0..k {
            let r = -c * (b[j] - a[j]) / (2.0 * dt) - (b[j] - 2.0 * u[j] + a[j]) / (dt * dt) + gw[j];
            r2 += r * r;
        }
        num += w * r2;
        den += w;
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Iterations between energy samples for the early sign decision.
pub const SIGN_WINDOW: usize = 100;
/// Largest window-to-window contraction accepted by the extrapolation.
pub const SIGN_CONTRACTION: f64 = 0.9;

/// With energies a >= b >= c sampled one window apart and decreasing geometrically, the
/// remaining decrease is about (b - c) rho / (1 - rho), rho = (b - c)/(a - b). The limit is
/// settled at or above -`scale` when c minus twice that estimate still is.
pub fn sign_settled_above(a: f64, b: f64, c: f64, scale: f64) -> bool {
    let (d1, d2) = (a - b, b - c);
    if d1 == 0.0 && d2 == 0.0 {
        return c >= -scale;
    }
    if !(d1 > 0.0 && d2 >= 0.0) {
        return false;
    }
    let rho = d2 / d1;
    if rho > SIGN_CONTRACTION {
        return false;
    }
    c - 2.0 * d2 * rho / (1.0 - rho) >= -scale
}

/// Sum of absolute cell contributions and the tail.
pub fn energy_mass(e: &WeightedEnergyReport) -> f64 {
    e.per_cell.iter().map(|x| x.abs()).sum::<f64>() + e.tail.abs()
}

/// Constraint onset used when none is configured: a quarter of the shorter half-window.
pub fn default_t(grid: &Grid) -> f64 {
    grid.t_min.abs().min(grid.t_max) / 4.0
}

/// Left constraint level: the configured one, else h_- from the half-tube shell.
pub fn resolve_left_level(potential: &PotentialModel, config: &MinimizeConfig) -> Result<f64> {
    match config.left_level {
        Some(h) => Ok(h),
        None => split_levels(potential).1.ok_or(Error::MissingConstant("h_minus")),
    }
}

struct Constraints<'a> {
    left: Option<SublevelSet<'a>>,
    right_radius: Option<f64>,
    /// Nodes [0, il) are left-constrained, nodes [ir, n) right-constrained.
    il: usize,
    ir: usize,
    truncate: bool,
}

impl Constraints<'_> {
    /// Projects every node; returns whether the left / right projections moved any node.
    fn project(&self, p: &PotentialModel, prof: &mut Profile) -> Result<(bool, bool)> {
        let n = prof.grid.n;
        let (mut fl, mut fr) = (false, false);
        for i in 0..n {
            let mut u = prof.node(i).to_vec();
            if self.truncate {
                u = truncation_map(p, &u);
            }
            if i < self.il {
                if let Some(set) = &self.left {
                    let v = project_sublevel(set, &u)?;
                    fl |= v != u;
                    u = v;
                }
            }
            if i >= self.ir {
                if let Some(r) = self.right_radius {
                    let v = project_tube(&p.minima_plus, r, &u);
                    fr |= v != u;
                    u = v;
                }
            }
            prof.node_mut(i).copy_from_slice(&u);
        }
        prof.apply_pins();
        Ok((fl, fr))
    }

    /// Nodes on a constraint boundary whose steepest-descent direction points outward.
    fn binding(&self, p: &PotentialModel, prof: &Profile, g: &[f64]) -> Vec<bool> {
        let k = prof.dim;
        let mut d: Vec<f64> = g.iter().map(|x| -x).collect();
        let before = d.clone();
        self.trim_outward(p, prof, &mut d);
        (0..prof.grid.n).map(|i| d[i * k..(i + 1) * k] != before[i * k..(i + 1) * k]).collect()
    }

    /// Whether any constrained node sits on the boundary of its constraint set.
    fn on_boundary(&self, p: &PotentialModel, prof: &Profile) -> (bool, bool) {
        let left = self.left.as_ref().is_some_and(|set| (0..self.il).any(|i| set.on_boundary(prof.node(i))));
        let right = self
            .right_radius
            .is_some_and(|r| (self.ir..prof.grid.n).any(|i| p.minima_plus.dist(prof.node(i)) >= r - THRESHOLD_SLACK));
        (left, right)
    }

    /// Removes the outward normal component of `d` at nodes on an active constraint
    /// boundary when `d` points outward.
    fn trim_outward(&self, p: &PotentialModel, prof: &Profile, d: &mut [f64]) {
        let k = prof.dim;
        let n = prof.grid.n;
        for i in 0..n {
            let u = prof.node(i);
            let di = &mut d[i * k..(i + 1) * k];
            if i < self.il {
                if let Some(set) = &self.left {
                    if set.on_boundary(u) && set.contains_with_slack(u) {
                        remove_outward(di, &set.outward_normal(u));
                    }
                }
            }
            if i >= self.ir {
                if let Some(r) = self.right_radius {
                    let a = p.minima_plus.project(u);
                    let off: Vec<f64> = u.iter().zip(&a).map(|(x, y)| x - y).collect();
                    let dist = off.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if dist >= r - THRESHOLD_SLACK && dist > 0.0 {
                        let nrm: Vec<f64> = off.iter().map(|x| x / dist).collect();
                        remove_outward(di, &nrm);
                    }
                }
            }
        }
    }
}

fn remove_outward(d: &mut [f64], n: &[f64]) {
    let dn: f64 = d.iter().zip(n).map(|(a, b)| a * b).sum();
    if dn > 0.0 {
        for (x, y) in d.iter_mut().zip(n) {
            *x -= dn * y;
        }
    }
}

impl SublevelSet<'_> {
    fn contains_with_slack(&self, u: &[f64]) -> bool {
        self.in_component(u, THRESHOLD_SLACK)
    }
}

/// Weighted H^1 preconditioner (K + mu M) with identity rows at pinned nodes.
struct Preconditioner {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    scratch: Vec<f64>,
    rhs: Vec<f64>,
}

impl Preconditioner {
    fn new(grid: &Grid, w: &[f64], mu: f64) -> Preconditioner {
        let n = grid.n;
        let dt = grid.dt();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for i in 0..n - 1 {
            let kk = w[i] / dt;
            let m = 0.5 * mu * w[i] * dt;
            diag[i] += kk + m;
            diag[i + 1] += kk + m;
            sup[i] = -kk;
            sub[i + 1] = -kk;
        }
        for i in [0, n - 1] {
            diag[i] = 1.0;
            sub[i] = 0.0;
            sup[i] = 0.0;
        }
        for i in 0..n {
            if diag[i] < WEIGHT_FLOOR {
                diag[i] = 1.0;
                sub[i] = 0.0;
                sup[i] = 0.0;
            }
        }
        Preconditioner { sub, diag, sup, scratch: Vec::new(), rhs: vec![0.0; n] }
    }

    /// d = -P^{-1} g, componentwise, with binding nodes decoupled: they receive the
    /// diagonally scaled gradient, the free nodes the reduced solve.
    fn apply(&mut self, g: &[f64], k: usize, binding: &[bool], d: &mut [f64]) {
        let n = self.diag.len();
        let mut sub = self.sub.clone();
        let mut sup = self.sup.clone();
        for i in 0..n {
            if binding[i] {
                sub[i] = 0.0;
                sup[i] = 0.0;
                if i > 0 {
                    sup[i - 1] = 0.0;
                }
                if i + 1 < n {
                    sub[i + 1] = 0.0;
                }
            }
        }
        for j in 0..k {
            for i in 0..n {
                self.rhs[i] = -g[i * k + j];
            }
            self.rhs[0] = 0.0;
            self.rhs[n - 1] = 0.0;
            solve_tridiagonal(&sub, &self.diag, &sup, &mut self.rhs, &mut self.scratch);
            for i in 0..n {
                d[i * k + j] = self.rhs[i];
            }
        }
    }
}

/// Shifts the profile by a doubling number of cells in the direction that lowers the pinned
/// continuation's energy (E(v(.+tau)) = e^{-c tau} E(v)); keeps the best projected shift
/// that lowers the window energy.
fn translate(
    cons: &Constraints,
    p: &PotentialModel,
    prof: &Profile,
    e: &WeightedEnergyReport,
    c: f64,
) -> Result<Option<(Profile, WeightedEnergyReport)>> {
    let dir: i64 = if e.completed() > 0.0 { 1 } else { -1 };
    let mut best: Option<(Profile, WeightedEnergyReport, f64)> = None;
    let mut m = 1i64;
    while (m as usize) < prof.grid.n / 4 {
        let mut trial = prof.shifted(dir * m);
        cons.project(p, &mut trial)?;
        let et = energy(&trial, p, c)?;
        let change: f64 = et.per_cell.iter().zip(&e.per_cell).map(|(a, b)| a - b).sum();
        if change >= best.as_ref().map_or(0.0, |b| b.2) {
            break;
        }
        best = Some((trial, et, change));
        m *= 2;
    }
    Ok(best.map(|(a, b, _)| (a, b)))
}

/// Largest curvature of W along the profile: analytic bound where available,
/// else the top eigenvalue of the difference Hessian.
fn curvature_scale(p: &PotentialModel, prof: &Profile) -> f64 {
    let n = prof.grid.n;
    let stride = if p.dim == 1 { 1 } else { (n / 200).max(1) };
    let mut mu: f64 = 0.0;
    for i in (0..n).step_by(stride) {
        mu = mu.max(p.curvature_at(prof.node(i)));
    }
    for set in [&p.minima_minus, &p.minima_plus] {
        for a in set.sample_points(5) {
            mu = mu.max(p.curvature_at(&a));
        }
    }
    mu.max(1e-3)
}

/// Stationarity: largest pointwise norm of g_i / (e^{c t_i} dt) at interior nodes, i.e. of the
/// discrete Euler-Lagrange residual.
fn stationarity(grid: &Grid, c: f64, k: usize, g: &[f64]) -> f64 {
    let dt = grid.dt();
    let mut m: f64 = 0.0;
    for i in 1..grid.n - 1 {
        let nw = (c * grid.t(i)).exp() * dt;
        if nw < WEIGHT_FLOOR {
            continue;
        }
        let r2: f64 = g[i * k..(i + 1) * k].iter().map(|x| x * x).sum();
        m = m.max(r2.sqrt() / nw);
    }
    m
}

/// Gradient with the outward normal components at active constraints removed.
fn tangent_gradient(cons: &Constraints, p: &PotentialModel, prof: &Profile, g: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = g.iter().map(|x| -x).collect();
    cons.trim_outward(p, prof, &mut d);
    d.iter().map(|x| -x).collect()
}

/// Minimizes the discrete energy at speed `c` over the constrained class; `init = None`
/// starts from the piecewise-linear profile between the pins.
pub fn minimize(
    potential: &PotentialModel,
    grid: &Grid,
    c: f64,
    config: &MinimizeConfig,
    init: Option<&Profile>,
) -> Result<MinimizeResult> {
    check_speed(grid, c)?;
    let t_c = config.t_constraint.unwrap_or_else(|| default_t(grid));
    let span = grid.t_min.abs().min(grid.t_max);
    if !(t_c >= 1.0 && t_c < span) {
        return Err(Error::InvalidParameter(format!("constraint onset T={t_c} must lie in [1, {span})")));
    }
    if !(config.grad_tol > 0.0) {
        return Err(Error::InvalidParameter("grad_tol must be > 0".into()));
    }
    if config.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
    }
    let k = potential.dim;
    let left_level = resolve_left_level(potential, config)?;
    let mut prof = match init {
        Some(p) => {
            if p.grid != *grid || p.dim != k {
                return Err(Error::InvalidProfile("initial profile does not match grid and dimension".into()));
            }
            p.clone()
        }
        None => Profile::psi(*grid, &potential.anchor_minus(), &potential.anchor_plus()),
    };
    prof.pinned = true;
    prof.apply_pins();

    let il = (0..grid.n).take_while(|&i| grid.t(i) <= -t_c).count();
    let ir = (0..grid.n).position(|i| grid.t(i) >= t_c).unwrap_or(grid.n);
    let cons = Constraints {
        left: if config.enforce_left_constraint { Some(SublevelSet::new(potential, left_level, Branch::Minus)?) } else { None },
        right_radius: config.enforce_right_constraint.then(|| potential.minima_plus.tube_radius / 2.0),
        il,
        ir,
        truncate: config.enforce_truncation,
    };
    cons.project(potential, &mut prof)?;

    let (w, _) = cell_weights(grid, c);
    let mu = curvature_scale(potential, &prof);
    let mut pre = Preconditioner::new(grid, &w, mu);
    let nv = prof.values.len();
    let mut g = vec![0.0; nv];
    let mut d = vec![0.0; nv];
    let mut e = energy(&prof, potential, c)?;
    let tail = e.tail;
    let mut log = Vec::new();
    let mut activity: Vec<(bool, bool)> = Vec::new();
    let mut increases = 0usize;
    let mut max_proj_inc: f64 = 0.0;
    let mut max_step_change = f64::NEG_INFINITY;
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut stopped_below = false;
    let mut stopped_above = false;
    let mut window_energies: Vec<f64> = Vec::new();
    let mut gnorm;

    loop {
        gradient_into(&prof, potential, &w, &mut g)?;
        let gt = tangent_gradient(&cons, potential, &prof, &g);
        gnorm = stationarity(grid, c, k, &gt);
        if config.log_iterations {
            log.push(IterRecord { iter: iterations, energy: e.total, grad_norm: gnorm, step });
        }
        if let Some(f) = config.stop_below {
            let m = e.total + tail;
            let scale = f * energy_mass(&e);
            if m < -scale {
                stopped_below = true;
                break;
            }
            if iterations % SIGN_WINDOW == 0 {
                window_energies.push(m);
                if let [.., a, b, c2] = window_energies[..] {
                    if sign_settled_above(a, b, c2, scale) {
                        stopped_above = true;
                        break;
                    }
                }
            }
        }
        if gnorm <= config.grad_tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iters {
            break;
        }
        iterations += 1;

        let binding = cons.binding(potential, &prof, &g);
        pre.apply(&g, k, &binding, &mut d);
        cons.trim_outward(potential, &prof, &mut d);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            // the preconditioned direction is not a descent direction for the projected problem
            d.iter_mut().zip(&gt).for_each(|(x, y)| *x = -y);
        }

        let mut s = match config.step_rule {
            StepRule::Fixed { step } => step,
            StepRule::Backtracking => (4.0 * step).min(1.0),
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial = prof.clone();
            for (x, y) in trial.values.iter_mut().zip(&d) {
                *x += s * y;
            }
            trial.apply_pins();
            let before_left = if cons.left.is_some() && il > 0 { Some(trial.clone()) } else { None };
            let (fl, fr) = cons.project(potential, &mut trial)?;
            let et = match energy(&trial, potential, c) {
                Ok(v) => v,
                Err(Error::InvalidProfile(_)) => {
                    s *= 0.5;
                    continue;
                }
                Err(err) => return Err(err),
            };
            let decrease: f64 = g.iter().zip(trial.values.iter().zip(&prof.values)).map(|(gi, (a, b))| gi * (a - b)).sum();
            // cellwise difference: exact zeros where nothing moved, so tiny steps stay resolvable
            let change: f64 = et.per_cell.iter().zip(&e.per_cell).map(|(a, b)| a - b).sum();
            let ok = match config.step_rule {
                StepRule::Fixed { .. } => true,
                StepRule::Backtracking => change <= ARMIJO * decrease.min(0.0),
            };
            if ok {
                if let (true, Some(raw)) = (fl, before_left) {
                    // energy change from the projection on cells whose both nodes are constrained
                    if let Ok(er) = energy(&raw, potential, c) {
                        let cells = cons.il.saturating_sub(1);
                        let inc: f64 = (0..cells).map(|i| et.per_cell[i] - er.per_cell[i]).sum();
                        max_proj_inc = max_proj_inc.max(inc);
                    }
                }
                accepted = Some((trial, et, fl, fr));
                break;
            }
            s *= 0.5;
        }
        let Some((trial, et, fl, fr)) = accepted else {
            return Err(Error::LineSearch { iteration: iterations, profile: Box::new(prof) });
        };
        let change: f64 = et.per_cell.iter().zip(&e.per_cell).map(|(a, b)| a - b).sum();
        max_step_change = max_step_change.max(change);
        if change > 0.0 {
            increases += 1;
            if increases >= DIVERGENCE_RUN {
                return Err(Error::Divergence(increases));
            }
        } else {
            increases = 0;
        }
        step = s;
        activity.push((fl, fr));
        if activity.len() > ACTIVITY_WINDOW {
            activity.remove(0);
        }
        prof = trial;
        e = et;

        if config.translation_moves && iterations % TRANSLATION_PERIOD == 0 {
            if let Some((tp, te)) = translate(&cons, potential, &prof, &e, c)? {
                max_step_change = max_step_change.max(te.per_cell.iter().zip(&e.per_cell).map(|(a, b)| a - b).sum());
                prof = tp;
                e = te;
            }
        }
    }

    let recent_left = activity.iter().any(|a| a.0);
    let recent_right = activity.iter().any(|a| a.1);
    let (bound_left, bound_right) = cons.on_boundary(potential, &prof);
    Ok(MinimizeResult {
        ode_residual: residual(&prof, potential, c),
        c,
        energy: e.total,
        completed_energy: e.total + tail,
        energy_mass: energy_mass(&e),
        iterations,
        converged,
        stopped_below,
        stopped_above,
        grad_norm: gnorm,
        constraint_active_left: recent_left || bound_left,
        constraint_active_right: recent_right || bound_right,
        max_step_change,
        max_projection_increase: max_proj_inc,
        t_constraint: t_c,
        left_level,
        log,
        profile: prof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::make_tilted_cubic;

    fn nagumo(grid: Grid) -> Profile {
        Profile::from_fn(grid, 1, vec![1.0], vec![0.0], |t| vec![1.0 / (1.0 + (t / 2f64.sqrt()).exp())]).unwrap()
    }

    #[test]
    fn residual_of_constant_is_zero() {
        let m = make_tilted_cubic(0.25).unwrap();
        let g = Grid::new(-5.0, 5.0, 101).unwrap();
        assert_eq!(residual(&Profile::constant(g, &[0.0]), &m, 0.7), 0.0);
    }

    #[test]
    fn nagumo_residual_floor() {
        let m = make_tilted_cubic(0.25).unwrap();
        let g = Grid::new(-40.0, 40.0, 4001).unwrap();
        let r = residual(&nagumo(g), &m, 2f64.sqrt() * 0.25);
        assert!(r <= 5e-4, "{r}");
    }

    #[test]
    fn rejects_bad_config() {
        let m = make_tilted_cubic(0.25).unwrap();
        let g = Grid::new(-10.0, 10.0, 201).unwrap();
        let cfg = MinimizeConfig { t_constraint: Some(20.0), ..Default::default() };
        assert!(minimize(&m, &g, 0.3, &cfg, None).is_err());
        let cfg = MinimizeConfig { grad_tol: 0.0, ..Default::default() };
        assert!(minimize(&m, &g, 0.3, &cfg, None).is_err());
    }

    #[test]
    fn energy_never_increases() {
        let m = make_tilted_cubic(0.25).unwrap();
        let g = Grid::new(-20.0, 20.0, 801).unwrap();
        let cfg = MinimizeConfig { max_iters: 300, log_iterations: true, ..Default::default() };
        let r = minimize(&m, &g, 0.4, &cfg, None).unwrap();
        assert!(r.iterations > 0 && r.max_step_change <= 0.0, "{}", r.max_step_change);
        assert!(r.constraint_active_left);
        // window totals agree up to summation roundoff
        for w in r.log.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-15 * w[0].energy.abs(), "{:?}", w);
        }
        assert!(r.max_projection_increase <= 1e-10, "{}", r.max_projection_increase);
    }
}
