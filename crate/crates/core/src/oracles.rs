//! Independent speed computations: RK4 shooting along the stable manifold of the shallow
//! well (k = 1), and a method-of-lines parabolic solver tracking a level crossing.

use serde::{Deserialize, Serialize};

use crate::energy::Profile;
use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::potential::{smoothstep7, PotentialModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub integrator: Integrator,
    pub dt_ode: f64,
    /// Seed distance from a+ along the stable direction.
    pub start_offset: f64,
    /// Escape radius for the overshoot class, as a multiple of the growth radius R0.
    pub escape_factor: f64,
    /// Longest backward integration time per trial speed.
    pub s_max: f64,
    /// Upper end of the speed search interval.
    pub c_search_max: f64,
}

impl ShootingConfig {
    pub fn new(c_search_max: f64) -> ShootingConfig {
        ShootingConfig {
            integrator: Integrator::Rk4,
            dt_ode: 1e-2,
            start_offset: 1e-8,
            escape_factor: 2.0,
            s_max: 4000.0,
            c_search_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fate {
    /// Velocity reverses before reaching a-: the speed is too small.
    Undershoot,
    /// The orbit passes a- or escapes: the speed is too large.
    Overshoot,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FateReport {
    pub fate: Fate,
    /// Whether the orbit entered the tube of radius rho-/4 around the deep set.
    pub entered_deep_tube: bool,
    pub s_end: f64,
}

fn check_scalar(p: &PotentialModel) -> Result<()> {
    if p.dim != 1 {
        return Err(Error::InvalidParameter(format!("shooting is implemented for k = 1 only (k = {})", p.dim)));
    }
    Ok(())
}

fn validate(p: &PotentialModel, cfg: &ShootingConfig) -> Result<f64> {
    check_scalar(p)?;
    if !(cfg.dt_ode > 0.0) {
        return Err(Error::InvalidParameter("dt_ode must be > 0".into()));
    }
    let rho = p.minima_plus.tube_radius;
    if !(cfg.start_offset > 1e-10 && cfg.start_offset < rho / 2.0) {
        return Err(Error::InvalidParameter(format!("start_offset must lie in (1e-10, {})", rho / 2.0)));
    }
    let curv = p.hessian_extremes(&p.anchor_plus()).0;
    if !(curv > 0.0) {
        return Err(Error::InvalidParameter(format!("a+ is not hyperbolic: W''(a+) = {curv:.3e}")));
    }
    Ok(curv)
}

/// Right-hand side of the profile system in reversed time s = -t:
/// du/ds = -p, dp/ds = c p - W'(u).
fn rhs(p: &PotentialModel, c: f64, x: [f64; 2]) -> [f64; 2] {
    let mut g = [0.0];
    p.grad(&[x[0]], &mut g);
    [-x[1], c * x[1] - g[0]]
}

fn rk4_step(p: &PotentialModel, c: f64, x: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = rhs(p, c, x);
    let k2 = rhs(p, c, add(x, k1, 0.5 * h));
    let k3 = rhs(p, c, add(x, k2, 0.5 * h));
    let k4 = rhs(p, c, add(x, k3, h));
    [x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]), x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])]
}

/// Seed on the stable manifold of a+: u - a+ = eps sigma, u' = -b eps sigma with
/// b = (c + sqrt(c^2 + 4 W''(a+)))/2 and sigma pointing toward a-.
fn seed(p: &PotentialModel, c: f64, curv: f64, eps: f64) -> [f64; 2] {
    let ap = p.anchor_plus()[0];
    let am = p.anchor_minus()[0];
    let sigma = (am - ap).signum();
    let b = 0.5 * (c + (c * c + 4.0 * curv).sqrt());
    [ap + eps * sigma, -b * eps * sigma]
}

/// State (u, u') after integrating for reversed time `s_end` from the seed.
pub fn shoot_state(p: &PotentialModel, c: f64, cfg: &ShootingConfig, s_end: f64) -> Result<[f64; 2]> {
    let curv = validate(p, cfg)?;
    let mut x = seed(p, c, curv, cfg.start_offset);
    let steps = (s_end / cfg.dt_ode).round() as usize;
    for _ in 0..steps {
        x = rk4_step(p, c, x, cfg.dt_ode);
    }
    Ok(x)
}

/// Classifies the backward orbit from a+ at speed c.
pub fn classify(p: &PotentialModel, c: f64, cfg: &ShootingConfig) -> Result<FateReport> {
    let curv = validate(p, cfg)?;
    let am = p.anchor_minus()[0];
    let ap = p.anchor_plus()[0];
    let sigma = (am - ap).signum();
    let escape = cfg.escape_factor * p.growth_radius;
    let tube = p.minima_minus.tube_radius / 4.0;
    let mut x = seed(p, c, curv, cfg.start_offset);
    let mut s = 0.0;
    let mut entered = false;
    let steps = (cfg.s_max / cfg.dt_ode).ceil() as usize;
    for _ in 0..steps {
        x = rk4_step(p, c, x, cfg.dt_ode);
        s += cfg.dt_ode;
        entered |= p.minima_minus.dist(&[x[0]]) <= tube;
        if sigma * (x[0] - am) > 0.0 || x[0].abs() > escape {
            return Ok(FateReport { fate: Fate::Overshoot, entered_deep_tube: entered, s_end: s });
        }
        // du/ds = -p must keep pointing toward a-
        if sigma * (-x[1]) <= 0.0 {
            return Ok(FateReport { fate: Fate::Undershoot, entered_deep_tube: entered, s_end: s });
        }
    }
    Ok(FateReport { fate: Fate::Undetermined, entered_deep_tube: entered, s_end: s })
}

/// Bisects the speed on the fate flip over [0, c_search_max].
pub fn shoot_speed(p: &PotentialModel, cfg: &ShootingConfig, c_tol: f64) -> Result<f64> {
    validate(p, cfg)?;
    if !(c_tol > 0.0) {
        return Err(Error::InvalidParameter("c_tol must be > 0".into()));
    }
    let (mut lo, mut hi) = (0.0, cfg.c_search_max);
    let f_lo = classify(p, lo, cfg)?.fate;
    let f_hi = classify(p, hi, cfg)?.fate;
    if f_lo != Fate::Undershoot || f_hi != Fate::Overshoot {
        return Err(Error::NoHeteroclinic { lo, hi });
    }
    while hi - lo > c_tol {
        let mid = 0.5 * (lo + hi);
        match classify(p, mid, cfg)?.fate {
            Fate::Undershoot => lo = mid,
            Fate::Overshoot => hi = mid,
            // the orbit shadows the heteroclinic for the whole horizon
            Fate::Undetermined => return Ok(mid),
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SemiImplicit,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    pub dx: f64,
    pub dt_pde: f64,
    /// Domain is [-X, X].
    pub half_length: f64,
    pub t_end: f64,
    /// Front = leftmost x with |w - a+| <= level * |a- - a+|.
    pub level: f64,
    pub scheme: Scheme,
    /// Steps between recorded front positions.
    pub record_every: usize,
    /// Steps between stored snapshots; 0 disables them.
    pub snapshot_every: usize,
    /// Closest admissible distance of the front to either boundary.
    pub boundary_margin: f64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            dx: 0.05,
            dt_pde: 0.01,
            half_length: 100.0,
            t_end: 150.0,
            level: 0.5,
            scheme: Scheme::SemiImplicit,
            record_every: 10,
            snapshot_every: 0,
            boundary_margin: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeResult {
    pub speed: f64,
    /// (t, x_front) samples.
    pub trajectory: Vec<(f64, f64)>,
    pub x: Vec<f64>,
    /// Final state, node-major.
    pub state: Vec<f64>,
    pub dim: usize,
    /// Largest excursion beyond the hull of the two anchors, per component.
    pub max_excursion: f64,
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

fn front_position(x: &[f64], w: &[f64], k: usize, ap: &[f64], thr: f64) -> Option<f64> {
    let dist = |i: usize| -> f64 { (0..k).map(|j| (w[i * k + j] - ap[j]).powi(2)).sum::<f64>().sqrt() };
    let mut prev = dist(0);
    if prev <= thr {
        return None;
    }
    for i in 1..x.len() {
        let d = dist(i);
        if d <= thr {
            let f = (prev - thr) / (prev - d);
            return Some(x[i - 1] + f * (x[i] - x[i - 1]));
        }
        prev = d;
    }
    None
}

/// Least-squares slope of y against x.
pub fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Runs the parabolic problem from a mollified step at x0 = -X/2 and fits the front speed
/// over the final half of the run.
pub fn pde_front_speed(p: &PotentialModel, cfg: &PdeConfig) -> Result<PdeResult> {
    let (dx, dt, xl) = (cfg.dx, cfg.dt_pde, cfg.half_length);
    if !(dx > 0.0 && dt > 0.0 && xl > 0.0 && cfg.t_end > 0.0 && cfg.record_every > 0) {
        return Err(Error::InvalidParameter("dx, dt_pde, X, T_end and record_every must be positive".into()));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::InvalidParameter(format!("tracking level must lie in (0, 1), got {}", cfg.level)));
    }
    if cfg.scheme == Scheme::Explicit && dt > 0.5 * dx * dx {
        return Err(Error::InvalidParameter(format!("explicit scheme needs dt <= dx^2/2 = {}", 0.5 * dx * dx)));
    }
    let n = (2.0 * xl / dx).round() as usize + 1;
    let k = p.dim;
    let x: Vec<f64> = (0..n).map(|i| -xl + i as f64 * dx).collect();
    let am = p.anchor_minus();
    let ap = p.anchor_plus();
    let gap = am.iter().zip(&ap).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let thr = cfg.level * gap;
    let x0 = -0.5 * xl;
    let width = 10.0 * dx;
    let mut w = vec![0.0; n * k];
    for i in 0..n {
        let s = smoothstep7((x[i] - x0) / width + 0.5);
        for j in 0..k {
            w[i * k + j] = am[j] + s * (ap[j] - am[j]);
        }
    }
    let lo: Vec<f64> = (0..k).map(|j| am[j].min(ap[j])).collect();
    let hi: Vec<f64> = (0..k).map(|j| am[j].max(ap[j])).collect();

    // (I - dt D2) with reflecting ends
    let r = dt / (dx * dx);
    let mut sub = vec![-r; n];
    let mut sup = vec![-r; n];
    let diag = vec![1.0 + 2.0 * r; n];
    sub[0] = 0.0;
    sup[0] = -2.0 * r;
    sub[n - 1] = -2.0 * r;
    sup[n - 1] = 0.0;

    let steps = (cfg.t_end / dt).round() as usize;
    let mut traj = Vec::new();
    let mut snaps = Vec::new();
    let mut g = vec![0.0; k];
    let mut col = vec![0.0; n];
    let mut scratch = Vec::new();
    let mut next = vec![0.0; n * k];
    let mut excursion: f64 = 0.0;
    for step in 1..=steps {
        match cfg.scheme {
            Scheme::SemiImplicit => {
                for i in 0..n {
                    p.grad(&w[i * k..(i + 1) * k], &mut g);
                    for j in 0..k {
                        next[i * k + j] = w[i * k + j] - dt * g[j];
                    }
                }
                for j in 0..k {
                    for i in 0..n {
                        col[i] = next[i * k + j];
                    }
                    solve_tridiagonal(&sub, &diag, &sup, &mut col, &mut scratch);
                    for i in 0..n {
                        next[i * k + j] = col[i];
                    }
                }
            }
            Scheme::Explicit => {
                for i in 0..n {
                    p.grad(&w[i * k..(i + 1) * k], &mut g);
                    for j in 0..k {
                        let l = if i == 0 { w[k + j] } else { w[(i - 1) * k + j] };
                        let rr = if i == n - 1 { w[(n - 2) * k + j] } else { w[(i + 1) * k + j] };
                        let c = w[i * k + j];
                        next[i * k + j] = c + dt * ((l - 2.0 * c + rr) / (dx * dx) - g[j]);
                    }
                }
            }
        }
        std::mem::swap(&mut w, &mut next);
        for i in 0..n {
            for j in 0..k {
                let v = w[i * k + j];
                excursion = excursion.max(lo[j] - v).max(v - hi[j]);
            }
        }
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::NonConvergence { what: "parabolic solver", residual: f64::INFINITY, iterate: Vec::new() });
        }
        if cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0 {
            snaps.push((step as f64 * dt, w.clone()));
        }
        if step % cfg.record_every == 0 {
            let t = step as f64 * dt;
            match front_position(&x, &w, k, &ap, thr) {
                Some(xf) if xf < xl - cfg.boundary_margin && xf > -xl + cfg.boundary_margin => traj.push((t, xf)),
                other => {
                    let position = other.unwrap_or(if traj.last().map_or(0.0, |l| l.1) >= 0.0 { xl } else { -xl });
                    return Err(Error::DomainTooShort { position, time: t, trajectory: traj });
                }
            }
        }
    }
    let half: Vec<(f64, f64)> = traj.iter().copied().filter(|(t, _)| *t >= 0.5 * cfg.t_end).collect();
    if half.len() < 2 {
        return Err(Error::Fit("front: fewer than two samples in the fit window".into()));
    }
    Ok(PdeResult {
        speed: ls_slope(&half),
        trajectory: traj,
        x,
        state: w,
        dim: k,
        max_excursion: excursion.max(0.0),
        snapshots: snaps,
    })
}

/// Smallest sup-norm distance between the PDE state and the profile translated by a shift,
/// over shifts on a grid of the profile spacing and over the profile window; returns (shift, sup).
pub fn aligned_sup_distance(pde: &PdeResult, profile: &Profile) -> (f64, f64) {
    let k = pde.dim;
    let g = &profile.grid;
    let dt = g.dt();
    let interp = |t: f64, j: usize| -> f64 {
        let s = ((t - g.t_min) / dt).clamp(0.0, (g.n - 1) as f64);
        let i = (s.floor() as usize).min(g.n - 2);
        let f = s - i as f64;
        (1.0 - f) * profile.values[i * k + j] + f * profile.values[(i + 1) * k + j]
    };
    let sup_at = |shift: f64| -> f64 {
        let mut m: f64 = 0.0;
        for (i, &xi) in pde.x.iter().enumerate() {
            let t = xi - shift;
            if t < g.t_min || t > g.t_max {
                continue;
            }
            for j in 0..k {
                m = m.max((pde.state[i * k + j] - interp(t, j)).abs());
            }
        }
        m
    };
    // coarse scan over shifts, then golden refinement
    let x_lo = pde.x[0] - g.t_min;
    let x_hi = pde.x[pde.x.len() - 1] - g.t_max;
    let (a, b) = (x_lo.min(x_hi), x_lo.max(x_hi));
    let mut best = (a, f64::INFINITY);
    let samples = 2000;
    for j in 0..=samples {
        let s = a + (b - a) * j as f64 / samples as f64;
        let v = sup_at(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    let h = (b - a) / samples as f64;
    let (mut l, mut r) = (best.0 - h, best.0 + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let m1 = r - phi * (r - l);
        let m2 = l + phi * (r - l);
        if sup_at(m1) < sup_at(m2) {
            r = m2;
        } else {
            l = m1;
        }
    }
    let s = 0.5 * (l + r);
    let v = sup_at(s);
    if v < best.1 {
        (s, v)
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{make_planar_tilted, make_tilted_cubic};

    #[test]
    fn fates_bracket_the_speed() {
        let m = make_tilted_cubic(0.25).unwrap();
        let cfg = ShootingConfig::new(2.0);
        assert_eq!(classify(&m, 0.2, &cfg).unwrap().fate, Fate::Undershoot);
        assert_eq!(classify(&m, 0.5, &cfg).unwrap().fate, Fate::Overshoot);
    }

    #[test]
    fn shooting_rejects_planar_and_bad_offset() {
        let m = make_planar_tilted([1.0, 0.0], [0.0, 0.0], 0.1).unwrap();
        assert!(shoot_speed(&m, &ShootingConfig::new(1.0), 1e-6).is_err());
        let m = make_tilted_cubic(0.25).unwrap();
        let cfg = ShootingConfig { start_offset: 1.0, ..ShootingConfig::new(1.0) };
        assert!(shoot_speed(&m, &cfg, 1e-6).is_err());
    }

    #[test]
    fn no_heteroclinic_in_short_range() {
        let m = make_tilted_cubic(0.25).unwrap();
        let e = shoot_speed(&m, &ShootingConfig::new(0.1), 1e-6).unwrap_err();
        assert!(e.to_string().contains("no heteroclinic detected"));
    }

    #[test]
    fn explicit_scheme_stability_guard() {
        let m = make_tilted_cubic(0.25).unwrap();
        let cfg = PdeConfig { scheme: Scheme::Explicit, dt_pde: 0.01, dx: 0.05, ..Default::default() };
        assert!(pde_front_speed(&m, &cfg).is_err());
    }

    #[test]
    fn short_domain_reports_trajectory() {
        let m = make_tilted_cubic(0.25).unwrap();
        let cfg = PdeConfig { half_length: 20.0, t_end: 150.0, boundary_margin: 5.0, ..Default::default() };
        match pde_front_speed(&m, &cfg) {
            Err(Error::DomainTooShort { trajectory, .. }) => assert!(!trajectory.is_empty()),
            other => panic!("expected domain too short, got {other:?}"),
        }
    }
}
