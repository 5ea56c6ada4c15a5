//! Wave-speed selection: bisection on the sign of the constrained minimum energy,
//! the speed identity c = -depth / int |u'|^2, tail decay fits and the explicit
//! transition-time bounds.

use serde::{Deserialize, Serialize};

use crate::auditor::StructuralConstants;
use crate::energy::{Grid, Profile, MAX_WEIGHT_EXPONENT};
use crate::error::{Error, Result};
use crate::geometry::{transition_markers, TransitionMarkers};
use crate::minimizer::{minimize, MinimizeConfig, MinimizeResult};
use crate::potential::PotentialModel;

/// The completed energy counts as negative below -SIGN_FACTOR times the energy mass.
pub const SIGN_FACTOR: f64 = 1e-6;
/// Inflation of the a-priori speed bound used as the initial upper bracket.
pub const BRACKET_INFLATION: f64 = 1.5;
/// Smallest kinetic integral accepted by the speed identity.
pub const MIN_KINETIC: f64 = 1e-14;
/// Nodes required by the tail fit.
pub const MIN_FIT_NODES: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedConfig {
    pub c_tol: f64,
    /// Initial upper bracket; usually `BRACKET_INFLATION * bracket_bound`.
    pub c_hi: f64,
    pub minimize: MinimizeConfig,
    pub max_bisections: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub c: f64,
    /// Completed energy at the last iterate.
    pub m: f64,
    pub negative: bool,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted exponential rate b of |u(t) - a+| ~ e^{-b t}.
    pub rate: f64,
    /// Linearization prediction (c + sqrt(c^2 + 4 lambda_min))/2.
    pub prediction: f64,
    pub nodes: usize,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedResult {
    pub c_star: f64,
    pub bracket: (f64, f64),
    pub formula_speed: f64,
    pub shooting_speed: Option<f64>,
    pub pde_speed: Option<f64>,
    pub profile: Profile,
    pub decay_rate: f64,
    pub decay: Option<DecayFit>,
    /// Completed energy of the minimizer at c_star and the zero-energy certificate bound.
    pub m_at_c_star: f64,
    pub m_tol: f64,
    pub minimizer_converged: bool,
    pub ode_residual: f64,
    pub steps: Vec<BisectionStep>,
}

/// Zero-energy certificate scale 1e-6 |depth| (e^{c t_max} - e^{c t_min}) / c.
pub fn m_tol(potential: &PotentialModel, grid: &Grid, c: f64) -> f64 {
    1e-6 * potential.depth.abs() * ((c * grid.t_max).exp() - (c * grid.t_min).exp()) / c
}

/// The bisection predicate on a minimizer.
pub fn is_negative(r: &MinimizeResult) -> bool {
    r.stopped_below || r.completed_energy < -SIGN_FACTOR * r.energy_mass
}

/// Minimizes at `c`, stopping as soon as the completed energy certifies c < c*.
pub fn evaluate_sign(
    potential: &PotentialModel,
    grid: &Grid,
    c: f64,
    config: &MinimizeConfig,
) -> Result<(BisectionStep, MinimizeResult)> {
    let cfg = MinimizeConfig { stop_below: Some(SIGN_FACTOR), ..config.clone() };
    let r = minimize(potential, grid, c, &cfg, None)?;
    let negative = is_negative(&r);
    let step = BisectionStep { c, m: r.completed_energy, negative, iterations: r.iterations, converged: r.converged };
    Ok((step, r))
}

/// Bisection for c* on the predicate "completed constrained minimum < -SIGN_FACTOR * energy mass".
pub fn bisect_speed(potential: &PotentialModel, grid: &Grid, config: &SpeedConfig) -> Result<SpeedResult> {
    let c_tol = config.c_tol;
    if !(c_tol > 0.0 && config.c_hi > c_tol) {
        return Err(Error::InvalidParameter(format!("need 0 < c_tol < c_hi, got c_tol={c_tol}, c_hi={}", config.c_hi)));
    }
    if config.c_hi * grid.t_max > MAX_WEIGHT_EXPONENT {
        return Err(Error::DomainTooLong(config.c_hi * grid.t_max));
    }
    let mut steps = Vec::new();
    let (lo, _) = evaluate_sign(potential, grid, c_tol, &config.minimize)?;
    let (hi, _) = evaluate_sign(potential, grid, config.c_hi, &config.minimize)?;
    steps.push(lo);
    steps.push(hi);
    if !lo.negative || hi.negative {
        return Err(Error::BracketInvalid { m_lo: lo.m, m_hi: hi.m });
    }
    let (mut c_lo, mut c_hi) = (c_tol, config.c_hi);
    let mut count = 0;
    while c_hi - c_lo > c_tol {
        if count >= config.max_bisections {
            return Err(Error::NonConvergence { what: "speed bisection", residual: c_hi - c_lo, iterate: vec![c_lo, c_hi] });
        }
        count += 1;
        let mid = 0.5 * (c_lo + c_hi);
        let (s, _) = evaluate_sign(potential, grid, mid, &config.minimize)?;
        steps.push(s);
        if s.negative {
            c_lo = mid;
        } else {
            c_hi = mid;
        }
    }
    let c_star = 0.5 * (c_lo + c_hi);
    let r = minimize(potential, grid, c_star, &config.minimize, None)?;
    let formula = speed_formula(&r.profile, potential)?;
    let decay = decay_rate(&r.profile, potential, c_star).ok();
    Ok(SpeedResult {
        c_star,
        bracket: (c_lo, c_hi),
        formula_speed: formula,
        shooting_speed: None,
        pde_speed: None,
        decay_rate: decay.map_or(f64::NAN, |d| d.rate),
        decay,
        m_at_c_star: r.completed_energy,
        m_tol: m_tol(potential, grid, c_star),
        minimizer_converged: r.converged,
        ode_residual: r.ode_residual,
        profile: r.profile,
        steps,
    })
}

/// Speed identity -depth / sum |du/dt|^2 dt.
pub fn speed_formula(profile: &Profile, potential: &PotentialModel) -> Result<f64> {
    let k = profile.kinetic_integral();
    if !(k >= MIN_KINETIC) {
        return Err(Error::DegenerateProfile(k));
    }
    Ok(-potential.depth / k)
}

/// A-priori bound sqrt(-2 depth) / d_alpha0 on the speed set.
pub fn bracket_bound(potential: &PotentialModel, constants: &StructuralConstants) -> Result<f64> {
    bound_from_distance(potential, constants.d_alpha0)
}

/// Same bound from the measured distance alone, for potentials whose full constant set is
/// unavailable.
pub fn bound_from_distance(potential: &PotentialModel, d_alpha0: f64) -> Result<f64> {
    if !(d_alpha0 > 0.0) {
        return Err(Error::Audit(format!("d_alpha0 = {d_alpha0} is not positive")));
    }
    Ok((-2.0 * potential.depth).sqrt() / d_alpha0)
}

/// (T1, T2, T**) with T1 = (2Rc + 2 sqrt(R^2 c^2 + 2 R omega))/omega, T2 = ln(-a/alpha_ss + 1)/c.
pub fn transition_time_bounds(c: f64, r: f64, omega: f64, a: f64, alpha_ss: f64) -> Result<(f64, f64, f64)> {
    if !(c > 0.0 && r > 0.0 && omega > 0.0 && a < 0.0 && alpha_ss > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "transition bounds need c, R, omega, alpha** > 0 and a < 0 (c={c}, R={r}, omega={omega}, a={a}, alpha**={alpha_ss})"
        )));
    }
    let t1 = (2.0 * r * c + 2.0 * (r * r * c * c + 2.0 * r * omega).sqrt()) / omega;
    let t2 = (-a / alpha_ss + 1.0).ln() / c;
    Ok((t1, t2, t1 + t2))
}

/// Least-squares exponential rate of the right tail over nodes with |u - a+| in [1e-8, 1e-3].
pub fn decay_rate(profile: &Profile, potential: &PotentialModel, c: f64) -> Result<DecayFit> {
    const HI: f64 = 1e-3;
    const LO: f64 = 1e-8;
    let g = &profile.grid;
    let set = &potential.minima_plus;
    // only the final monotone approach: start after the last node above HI
    let d: Vec<f64> = (0..g.n).map(|i| set.dist(profile.node(i))).collect();
    let start = (0..g.n).rev().find(|&i| d[i] > HI).map_or(0, |i| i + 1);
    let mut pts = Vec::new();
    for i in start..g.n {
        if d[i] < LO {
            break;
        }
        pts.push((g.t(i), d[i].ln()));
    }
    if pts.len() < MIN_FIT_NODES {
        return Err(Error::Fit(format!("decay: only {} tail nodes with distance in [{LO:e}, {HI:e}]", pts.len())));
    }
    let nf = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let rate = -sxy / sxx;
    let lam = potential.hessian_extremes(&potential.anchor_plus()).0;
    Ok(DecayFit {
        rate,
        prediction: 0.5 * (c + (c * c + 4.0 * lam).sqrt()),
        nodes: pts.len(),
        window: (pts[0].0, pts[pts.len() - 1].0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub c: f64,
    pub m: f64,
    pub converged: bool,
    /// The bisection predicate at this speed.
    pub negative: bool,
}

/// Converged completed energies m(c) on the given speeds, computed on up to `workers` threads.
pub fn scan(
    potential: &PotentialModel,
    grid: &Grid,
    config: &MinimizeConfig,
    speeds: &[f64],
    workers: usize,
) -> Result<Vec<ScanPoint>> {
    let run = |c: f64| -> Result<ScanPoint> {
        let r = minimize(potential, grid, c, config, None)?;
        let negative = is_negative(&r);
        Ok(ScanPoint { c, m: r.completed_energy, converged: r.converged, negative })
    };
    let workers = workers.max(1).min(speeds.len().max(1));
    if workers == 1 {
        return speeds.iter().map(|&c| run(c)).collect();
    }
    let chunk = speeds.len().div_ceil(workers);
    let parts: Vec<Result<Vec<ScanPoint>>> = std::thread::scope(|s| {
        let handles: Vec<_> = speeds.chunks(chunk).map(|cs| s.spawn(move || cs.iter().map(|&c| run(c)).collect())).collect();
        handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(speeds.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Evenly spaced speeds on [lo, hi].
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
}

/// Number of flips of the bisection predicate along the scan.
pub fn sign_changes(points: &[ScanPoint]) -> usize {
    points.windows(2).filter(|w| w[0].negative != w[1].negative).count()
}

/// Speeds bracketing each predicate flip.
pub fn sign_change_brackets(points: &[ScanPoint]) -> Vec<(f64, f64)> {
    points.windows(2).filter(|w| w[0].negative != w[1].negative).map(|w| (w[0].c, w[1].c)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthStudy {
    /// (half-length L, c*(L)) for each window [-L, L].
    pub runs: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Doubles the half-length of the window [-L, L] at fixed dt until successive speeds differ by
/// at most c_tol.
pub fn length_study(
    potential: &PotentialModel,
    half_length: f64,
    dt: f64,
    config: &SpeedConfig,
    max_doublings: usize,
) -> Result<LengthStudy> {
    let mut runs = Vec::new();
    let mut l = half_length;
    for _ in 0..=max_doublings {
        let n = (2.0 * l / dt).round() as usize + 1;
        let grid = Grid::new(-l, l, n)?;
        let r = bisect_speed(potential, &grid, config)?;
        runs.push((l, r.c_star));
        if runs.len() >= 2 {
            let (a, b) = (runs[runs.len() - 2].1, runs[runs.len() - 1].1);
            if (a - b).abs() <= config.c_tol {
                return Ok(LengthStudy { runs, converged: true });
            }
        }
        l *= 2.0;
    }
    Ok(LengthStudy { runs, converged: false })
}

/// Slack on the comparison thresholds.
pub const COMPARISON_SLACK: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub markers: TransitionMarkers,
    pub t1_bound: f64,
    pub t2_bound: f64,
    pub tss_bound: f64,
    /// max W(V(t)) - alpha_- over t <= t1-; must be <= slack.
    pub left_excess: Option<f64>,
    /// min W(V(t)) over t >= t2-; must be >= -slack.
    pub right_floor: Option<f64>,
    pub gap_t2_t1: Option<f64>,
    pub gap_tplus_t1: Option<f64>,
    /// Largest decrease of W(V(t)) as t increases on t <= t1-.
    pub left_monotonicity_defect: Option<f64>,
    pub passed: bool,
}

/// Comparison structure of a minimizer at speed c against the audited bounds.
pub fn comparison_suite(
    profile: &Profile,
    potential: &PotentialModel,
    constants: &StructuralConstants,
    c: f64,
) -> Result<ComparisonReport> {
    let markers = transition_markers(profile, potential, constants);
    let (t1b, t2b, tssb) = transition_time_bounds(c, constants.r_bound, constants.omega, constants.depth, constants.alpha_ss)?;
    let g = &profile.grid;
    let w: Vec<f64> = (0..g.n).map(|i| potential.eval(profile.node(i))).collect();
    let left: Vec<f64> = markers.t1_minus.map_or(Vec::new(), |t1| (0..g.n).filter(|&i| g.t(i) <= t1).map(|i| w[i]).collect());
    let left_excess = markers.t1_minus.map(|_| left.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v - markers.alpha_minus)));
    let right_floor = markers.t2_minus.map(|t2| (0..g.n).filter(|&i| g.t(i) >= t2).map(|i| w[i]).fold(f64::INFINITY, f64::min));
    let left_monotonicity_defect = markers.t1_minus.map(|_| left.windows(2).map(|p| p[0] - p[1]).fold(0.0, f64::max));
    let gap_t2_t1 = markers.t1_minus.zip(markers.t2_minus).map(|(a, b)| b - a);
    let gap_tplus_t1 = markers.t1_minus.zip(markers.t_plus).map(|(a, b)| b - a);
    let dt = g.dt();
    let passed = left_excess.is_some_and(|v| v <= COMPARISON_SLACK)
        && right_floor.is_some_and(|v| v >= -COMPARISON_SLACK)
        && gap_t2_t1.is_some_and(|v| v <= t1b + dt)
        && gap_tplus_t1.is_some_and(|v| v <= tssb + dt)
        && left_monotonicity_defect.is_some_and(|v| v <= COMPARISON_SLACK);
    Ok(ComparisonReport {
        markers,
        t1_bound: t1b,
        t2_bound: t2b,
        tss_bound: tssb,
        left_excess,
        right_floor,
        gap_t2_t1,
        gap_tplus_t1,
        left_monotonicity_defect,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::make_tilted_cubic;
    use approx::assert_abs_diff_eq;

    #[test]
    fn transition_bounds_examples() {
        let (t1, _, _) = transition_time_bounds(0.35, 1.0, 0.5, -1.0 / 24.0, 0.01).unwrap();
        assert_abs_diff_eq!(t1, (0.7 + 2.0 * 1.1225f64.sqrt()) / 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t1, 5.638, epsilon = 5e-4);
        let (_, t2, tss) = transition_time_bounds(0.353553, 1.0, 0.5, -1.0 / 24.0, 0.01).unwrap();
        assert_abs_diff_eq!(t2, 5.166_666_666_666_667f64.ln() / 0.353553, epsilon = 1e-12);
        // the quoted 4.644 truncates 4.64493
        assert_abs_diff_eq!(t2, 4.644, epsilon = 1e-3);
        assert!(tss > t2);
        let (t1, _, _) = transition_time_bounds(0.35, 1.0, 1e12, -1.0, 0.01).unwrap();
        assert!(t1 < 1e-5);
        assert!(transition_time_bounds(0.35, 1.0, 0.5, 0.1, 0.01).is_err());
        assert!(transition_time_bounds(0.0, 1.0, 0.5, -0.1, 0.01).is_err());
    }

    #[test]
    fn formula_on_constant_is_degenerate() {
        let m = make_tilted_cubic(0.25).unwrap();
        let p = Profile::constant(Grid::new(-5.0, 5.0, 11).unwrap(), &[0.0]);
        assert!(matches!(speed_formula(&p, &m), Err(Error::DegenerateProfile(_))));
        assert!(decay_rate(&p, &m, 0.3).is_err());
    }

    #[test]
    fn sign_change_count() {
        let pts: Vec<ScanPoint> =
            [-2.0, -1.0, 0.5, 1.0].iter().map(|&m| ScanPoint { c: 0.0, m, converged: true, negative: m < 0.0 }).collect();
        assert_eq!(sign_changes(&pts), 1);
    }
}
