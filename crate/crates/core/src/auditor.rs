//! Sampling-based certification of the structural hypotheses on W and evaluation of
//! every derived constant used by the comparison bounds.
//!
//! A fail verdict always carries a witness point. A pass is statistical.

use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{truncation_map, Branch, SublevelSet};
use crate::potential::{unit_directions, MinimaSet, PotentialModel};

pub const MIN_SAMPLES: usize = 10_000;
/// Coercivity ratios above this count as unbounded.
pub const COERCIVITY_CAP: f64 = 1e6;
/// Half-width of the local window for the monotonicity-derivative probe.
pub const LOCAL_WINDOW: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub measured: Option<f64>,
    pub witness: Option<Vec<f64>>,
    /// Non-gating checks are reported but do not affect `AuditReport::passed`.
    pub gating: bool,
    pub note: String,
}

/// Measured inputs to the constant formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditInputs {
    pub depth: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub h0: Option<f64>,
    pub h_minus: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma_of_h: Vec<(f64, f64)>,
    pub r_bound: Option<f64>,
    pub d_alpha0: Option<f64>,
    pub set_distance: f64,
    /// Sampled (distance to set, W) pairs in each tube, sorted by distance.
    #[serde(skip)]
    pub shell_minus: Vec<(f64, f64)>,
    #[serde(skip)]
    pub shell_plus: Vec<(f64, f64)>,
}

/// Every named constant of the comparison argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    pub depth: f64,
    pub h0: f64,
    pub h_minus: f64,
    pub sigma: f64,
    pub sigma_of_h: Vec<(f64, f64)>,
    pub kappa_minus: Vec<(f64, f64)>,
    pub kappa_plus: Vec<(f64, f64)>,
    pub c_minus: f64,
    pub c_plus: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub eta0_minus: f64,
    pub eta0_plus: f64,
    pub r_hat_minus: f64,
    pub r_hat_plus: f64,
    /// Coercivity margins min{W - level} over the shells [r, rho] at r = r_hat and r = eta0.
    pub margin_minus: (f64, f64),
    pub margin_plus: (f64, f64),
    pub eps0_minus: f64,
    pub eps0_plus: f64,
    pub sf_c_minus: f64,
    pub sf_c_plus: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub d0: f64,
    pub d_alpha0: f64,
    pub r_bound: f64,
    pub omega: f64,
    pub alpha_ss: f64,
    /// eta of the boundary-condition check at -infinity.
    pub eta_bc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub potential: String,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub inputs: AuditInputs,
    pub constants: Option<StructuralConstants>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.gating || c.verdict != Verdict::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn constants(&self) -> Result<&StructuralConstants> {
        self.constants.as_ref().ok_or(Error::MissingConstant("constants"))
    }
}

fn check(name: &str, verdict: Verdict, measured: Option<f64>, witness: Option<Vec<f64>>, note: impl Into<String>) -> Check {
    Check { name: name.into(), verdict, measured, witness, gating: true, note: note.into() }
}

fn random_dir(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    a.iter().zip(d).map(|(x, y)| x + s * y).collect()
}

/// Tube samples: half uniform in radius, half log-uniform down to 1e-4 rho.
fn tube_samples(p: &PotentialModel, set: &MinimaSet, n: usize, rng: &mut ChaCha8Rng) -> Vec<(Vec<f64>, f64, f64)> {
    let rho = set.tube_radius;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let base = set.point_at(rng.random::<f64>());
        let dir = random_dir(rng, p.dim);
        let r = if i % 2 == 0 { rho * rng.random::<f64>().max(1e-12) } else { rho * 10f64.powf(-4.0 * rng.random::<f64>()) };
        let u = axpy(&base, r, &dir);
        let d = set.dist(&u);
        if d <= rho {
            let w = p.eval(&u);
            out.push((u, d, w));
        }
    }
    out
}

struct CoercivityFit {
    c: f64,
    witness: Option<Vec<f64>>,
    bad_sign: bool,
}

fn fit_c(samples: &[(Vec<f64>, f64, f64)], level: f64) -> CoercivityFit {
    let mut best = CoercivityFit { c: 0.0, witness: None, bad_sign: false };
    for (u, d, w) in samples {
        if *d <= 1e-9 {
            continue;
        }
        let gap = w - level;
        if gap <= 0.0 {
            return CoercivityFit { c: f64::INFINITY, witness: Some(u.clone()), bad_sign: true };
        }
        let r = d * d / gap;
        if r > best.c {
            best.c = r;
            best.witness = Some(u.clone());
        }
    }
    best
}

/// Minimum of W - level over shell samples with distance in [r, rho].
fn shell_min(shell: &[(f64, f64)], r: f64) -> Option<f64> {
    let start = shell.partition_point(|(d, _)| *d < r);
    shell[start..].iter().map(|(_, w)| *w).reduce(f64::min)
}

type Points = Vec<Vec<f64>>;

/// Points of W^{h,-}: exact interval for k = 1, rejection in a ball around the deep set otherwise.
fn sublevel_pool(p: &PotentialModel, h: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<(Points, Points)> {
    if p.dim == 1 {
        let s = SublevelSet::new(p, h, Branch::Minus)?;
        let (l, r) = s.interval().unwrap();
        let pts = (0..n).map(|_| vec![l + (r - l) * rng.random::<f64>()]).collect();
        return Ok((pts, vec![vec![l], vec![r]]));
    }
    let set = SublevelSet::new(p, h, Branch::Minus)?;
    // boundary points by marching along rays from the deep anchor
    let a = p.minima_minus.point_at(0.5);
    let mut boundary = Vec::new();
    let mut reach: f64 = 0.0;
    for d in unit_directions(p.dim, 256) {
        let mut lo = 0.0;
        let mut hi = p.minima_minus.tube_radius / 64.0;
        while p.eval(&axpy(&a, hi, &d)) <= h {
            lo = hi;
            hi *= 1.25;
            if hi > 4.0 * p.growth_radius {
                break;
            }
        }
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            let x = axpy(&a, m, &d);
            if p.eval(&x) <= h {
                lo = m;
            } else {
                hi = m;
            }
        }
        reach = reach.max(hi);
        boundary.push(axpy(&a, lo, &d));
    }
    let radius = 1.2 * reach + p.minima_minus.extent();
    let mut pts = Vec::with_capacity(n);
    let mut tries = 0usize;
    while pts.len() < n && tries < 200 * n {
        tries += 1;
        let dir = random_dir(rng, p.dim);
        let r = radius * rng.random::<f64>().powf(1.0 / p.dim as f64);
        let u = axpy(&a, r, &dir);
        if set.contains(&u) {
            pts.push(u);
        }
    }
    Ok((pts, boundary))
}

fn shell_min_on(p: &PotentialModel, set: &MinimaSet, r: f64, dirs: &[Vec<f64>]) -> Option<f64> {
    let mut m = f64::INFINITY;
    for b in set.sample_points(17) {
        for d in dirs {
            let u = axpy(&b, r, d);
            if (set.dist(&u) - r).abs() <= 1e-12 * (1.0 + r) {
                m = m.min(p.eval(&u));
            }
        }
    }
    m.is_finite().then_some(m)
}

/// Deterministic (h0, h_-) from the half-tube shells; coincides with the audited levels for k <= 2.
pub fn split_levels(p: &PotentialModel) -> (Option<f64>, Option<f64>) {
    let dirs = unit_directions(p.dim, 512);
    let h0 = shell_min_on(p, &p.minima_plus, p.minima_plus.tube_radius / 2.0, &dirs).map(|m| 0.5 * m);
    let hm = shell_min_on(p, &p.minima_minus, p.minima_minus.tube_radius / 2.0, &dirs).map(|m| 0.5 * (p.depth + m.min(0.0)));
    (h0, hm)
}

/// Audits a potential with `samples` random draws per check from a ChaCha8 stream seeded by `seed`.
pub fn audit(p: &PotentialModel, samples: usize, seed: u64) -> Result<AuditReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("audit needs at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let k = p.dim;
    let depth = p.depth;
    let (rm, rp) = (p.minima_minus.tube_radius, p.minima_plus.tube_radius);

    // minima levels
    let mut worst: (f64, Option<Vec<f64>>) = (0.0, None);
    for (set, level) in [(&p.minima_minus, depth), (&p.minima_plus, 0.0)] {
        for a in set.sample_points(33) {
            let e = (p.eval(&a) - level).abs();
            if e > worst.0 {
                worst = (e, Some(a));
            }
        }
    }
    checks.push(if worst.0 <= 1e-12 {
        check("minima_levels", Verdict::Pass, Some(worst.0), None, "W = depth on the deep set and 0 on the shallow set")
    } else {
        check("minima_levels", Verdict::Fail, Some(worst.0), worst.1, "W differs from its level on a minima set")
    });

    // global lower bound and gradient consistency on a box of radius 2 R0
    let box_r = 2.0 * p.growth_radius;
    let mut low = (f64::INFINITY, Vec::new());
    let mut gerr = (0.0f64, Vec::new());
    for i in 0..samples {
        let u: Vec<f64> = (0..k).map(|_| box_r * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let w = p.eval(&u);
        if w < low.0 {
            low = (w, u.clone());
        }
        if i % 10 == 0 {
            let g = p.grad_vec(&u);
            let mut x = u.clone();
            let mut e: f64 = 0.0;
            for j in 0..k {
                let h = 1e-5 * (1.0 + u[j].abs());
                x[j] = u[j] + h;
                let wp = p.eval(&x);
                x[j] = u[j] - h;
                let wm = p.eval(&x);
                x[j] = u[j];
                let fd = (wp - wm) / (2.0 * h);
                e = e.max((g[j] - fd).abs() / g[j].abs().max(1.0));
            }
            if e > gerr.0 {
                gerr = (e, u);
            }
        }
    }
    checks.push(if low.0 >= depth - 1e-9 {
        check("global_lower_bound", Verdict::Pass, Some(low.0), None, "sampled min W >= depth")
    } else {
        check("global_lower_bound", Verdict::Fail, Some(low.0), Some(low.1), "W below depth")
    });
    checks.push(if gerr.0 <= 1e-6 {
        check("gradient_consistency", Verdict::Pass, Some(gerr.0), None, "grad W vs central differences")
    } else {
        check("gradient_consistency", Verdict::Fail, Some(gerr.0), Some(gerr.1), "grad W disagrees with differences of W")
    });

    // radial growth and truncation monotonicity
    let mut rg = (f64::INFINITY, Vec::new());
    let mut trunc = (f64::NEG_INFINITY, Vec::new());
    for i in 0..samples / 4 {
        let f = [1.0, 2.0, 4.0][i % 3];
        let u: Vec<f64> = random_dir(&mut rng, k).iter().map(|x| f * p.growth_radius * x).collect();
        let ratio = dot(&p.grad_vec(&u), &u) / dot(&u, &u);
        if ratio < rg.0 {
            rg = (ratio, u.clone());
        }
        let s = 1.0 + 3.0 * rng.random::<f64>();
        let v: Vec<f64> = u.iter().map(|x| x * s / f).collect();
        let inc = p.eval(&truncation_map(p, &v)) - p.eval(&v);
        if inc > trunc.0 {
            trunc = (inc, v);
        }
    }
    checks.push(if rg.0 >= p.growth_coeff * (1.0 - 1e-12) {
        check("radial_growth", Verdict::Pass, Some(rg.0), None, "<grad W(u), u>/|u|^2 >= growth_coeff at |u| = R0*{1,2,4}")
    } else {
        check("radial_growth", Verdict::Fail, Some(rg.0), Some(rg.1), "radial growth below growth_coeff")
    });
    checks.push(if trunc.0 <= 1e-12 {
        check("truncation_decreases_w", Verdict::Pass, Some(trunc.0), None, "W(P u) <= W(u) for |u| in [R0, 4 R0]")
    } else {
        check("truncation_decreases_w", Verdict::Fail, Some(trunc.0), Some(trunc.1), "radial retraction raises W")
    });

    // coercivity, with a stability check under doubling of the sample count
    let mut c_fit = [0.0; 2];
    let mut shells: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for (idx, (set, level, name)) in
        [(&p.minima_minus, depth, "coercivity_minus"), (&p.minima_plus, 0.0, "coercivity_plus")].into_iter().enumerate()
    {
        let all = tube_samples(p, set, 2 * samples, &mut rng);
        let half = fit_c(&all[..all.len() / 2], level);
        let full = fit_c(&all, level);
        let mut sh: Vec<(f64, f64)> = all.iter().map(|(_, d, w)| (*d, *w)).collect();
        sh.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        shells[idx] = sh;
        c_fit[idx] = full.c;
        let ch = if full.bad_sign {
            check(name, Verdict::Fail, None, full.witness, "W - level <= 0 inside the tube")
        } else if full.c > COERCIVITY_CAP {
            check(name, Verdict::Fail, Some(full.c), full.witness, "dist^2/(W - level) unbounded near the set")
        } else if (full.c - half.c).abs() > 0.1 * half.c {
            check(name, Verdict::Inconclusive, Some(full.c), full.witness, "fitted constant unstable under doubling samples")
        } else {
            check(name, Verdict::Pass, Some(full.c), None, "fitted constant stable under doubling samples")
        };
        checks.push(ch);
    }

    // h0 from the half-tube shell of the shallow set, h_minus from that of the deep set
    let shell_level = |set: &MinimaSet, r: f64, rng: &mut ChaCha8Rng| -> Option<f64> {
        let dirs: Vec<Vec<f64>> =
            if k <= 2 { unit_directions(k, 512) } else { (0..samples).map(|_| random_dir(rng, k)).collect() };
        shell_min_on(p, set, r, &dirs)
    };
    let h0 = shell_level(&p.minima_plus, rp / 2.0, &mut rng).map(|m| 0.5 * m);
    checks.push(match h0 {
        Some(h) if h > 0.0 => {
            check("level_split_h0", Verdict::Pass, Some(h), None, "h0 = half the min of W on the shallow half-tube shell")
        }
        Some(h) => check(
            "level_split_h0",
            Verdict::Fail,
            Some(h),
            Some(p.minima_plus.point_at(0.0)),
            "W <= 0 on the shallow half-tube shell",
        ),
        None => check("level_split_h0", Verdict::Inconclusive, None, None, "empty shell"),
    });
    let h_minus = shell_level(&p.minima_minus, rm / 2.0, &mut rng).map(|m| 0.5 * (depth + m.min(0.0)));

    let mut sigma = None;
    let mut sigma_of_h = Vec::new();
    let mut r_bound = None;
    let mut d_alpha0 = None;
    if let (Some(h0v), Some(hm)) = (h0.filter(|h| *h > 0.0), h_minus) {
        let (pool, boundary) = sublevel_pool(p, h0v, samples, &mut rng)?;
        let (pool_m, _) = sublevel_pool(p, hm, samples, &mut rng)?;

        // W^{h_-} inside the deep half-tube
        let mut far = (0.0f64, None);
        for u in pool_m.iter() {
            let d = p.minima_minus.dist(u);
            if d > far.0 {
                far = (d, Some(u.clone()));
            }
        }
        checks.push(if pool_m.is_empty() {
            check("deep_sublevel_in_tube", Verdict::Inconclusive, Some(hm), None, "no samples in W^{h_-}")
        } else if far.0 <= rm / 2.0 {
            check("deep_sublevel_in_tube", Verdict::Pass, Some(far.0), None, format!("h_- = {hm:.6e}"))
        } else {
            check("deep_sublevel_in_tube", Verdict::Fail, Some(far.0), far.1, "W^{h_-} leaves the deep half-tube")
        });

        // convexity of W^{h,-} by midpoint sampling
        for (name, h) in [("convexity_h0", h0v), ("convexity_h_minus", hm), ("convexity_half_depth", 0.5 * depth)] {
            let set = SublevelSet::new(p, h, Branch::Minus)?;
            let members: Vec<&Vec<f64>> = pool.iter().filter(|u| set.contains(u)).collect();
            if members.len() < 2 {
                checks.push(check(name, Verdict::Inconclusive, Some(h), None, "fewer than two samples in the set"));
                continue;
            }
            let mut bad = None;
            for _ in 0..samples {
                let x = members[rng.random_range(0..members.len())];
                let y = members[rng.random_range(0..members.len())];
                let mid: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
                if !set.in_component(&mid, 1e-8) {
                    bad = Some([x.clone(), y.clone()].concat());
                    break;
                }
            }
            checks.push(match bad {
                None => check(name, Verdict::Pass, Some(h), None, "midpoint sampling (statistical)"),
                Some(w) => check(name, Verdict::Fail, Some(h), Some(w), "midpoint of two members leaves the set"),
            });
        }

        // monotonicity along segments from the deep set
        let lvl = 0.5 * (depth + hm);
        let set0 = SublevelSet::new(p, h0v, Branch::Minus)?;
        let mut smin = (f64::INFINITY, None);
        let mut count = 0;
        for _ in 0..samples {
            let v = &pool[rng.random_range(0..pool.len())];
            if p.eval(v) <= lvl {
                continue;
            }
            let a = p.minima_minus.point_at(rng.random::<f64>());
            let th = 1.0 - rng.random::<f64>();
            let dv: Vec<f64> = v.iter().zip(&a).map(|(x, y)| x - y).collect();
            let x = axpy(&a, th, &dv);
            if p.eval(&x) <= lvl || !set0.contains(&x) {
                continue;
            }
            count += 1;
            let dd = dot(&p.grad_vec(&x), &dv);
            if dd < smin.0 {
                smin = (dd, Some(v.clone()));
            }
        }
        checks.push(if count == 0 {
            check("segment_monotonicity", Verdict::Inconclusive, None, None, "no admissible segment samples")
        } else if smin.0 > 0.0 {
            sigma = Some(smin.0);
            check("segment_monotonicity", Verdict::Pass, Some(smin.0), None, "theta sampled in A ∩ (0,1]")
        } else {
            check("segment_monotonicity", Verdict::Fail, Some(smin.0), smin.1, "W not increasing along a segment")
        });

        // local monotonicity at levels h in (depth, h_-]
        let mut local_ok = true;
        for j in 1..=8 {
            let h = depth + (hm - depth) * j as f64 / 8.0;
            let mut m = f64::INFINITY;
            for v in pool_m.iter().filter(|v| p.eval(v) >= h) {
                let a = p.minima_minus.project(v);
                let th = 1.0 + LOCAL_WINDOW * (2.0 * rng.random::<f64>() - 1.0);
                let dv: Vec<f64> = v.iter().zip(&a).map(|(x, y)| x - y).collect();
                m = m.min(dot(&p.grad_vec(&axpy(&a, th, &dv)), &dv));
            }
            if m.is_finite() {
                local_ok &= m > 0.0;
                sigma_of_h.push((h, m));
            }
        }
        checks.push(if sigma_of_h.is_empty() {
            check("local_monotonicity", Verdict::Inconclusive, None, None, "no samples above the levels")
        } else if local_ok {
            let m = sigma_of_h.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            check("local_monotonicity", Verdict::Pass, Some(m), None, "window (1-1e-3, 1+1e-3) used as a proxy for delta(u)")
        } else {
            let w = sigma_of_h.iter().find(|x| x.1 <= 0.0).map(|x| vec![x.0]);
            check("local_monotonicity", Verdict::Fail, None, w, "non-positive derivative at some level")
        });

        let reach = pool.iter().chain(boundary.iter()).map(|u| p.minima_minus.dist(u)).fold(0.0, f64::max);
        r_bound = Some(1.1 * reach);
        let gap =
            pool.iter().chain(boundary.iter()).map(|u| (p.minima_plus.dist(u) - rp / 2.0).max(0.0)).fold(f64::INFINITY, f64::min);
        d_alpha0 = Some(gap);
    }

    let set_distance = {
        let a = p.minima_minus.sample_points(65).iter().map(|x| p.minima_plus.dist(x)).fold(f64::INFINITY, f64::min);
        let b = p.minima_plus.sample_points(65).iter().map(|x| p.minima_minus.dist(x)).fold(f64::INFINITY, f64::min);
        a.min(b)
    };

    let inputs = AuditInputs {
        depth,
        rho_minus: rm,
        rho_plus: rp,
        c_minus: c_fit[0],
        c_plus: c_fit[1],
        h0,
        h_minus,
        sigma,
        sigma_of_h,
        r_bound,
        d_alpha0,
        set_distance,
        shell_minus: shells[0].clone(),
        shell_plus: shells[1].clone(),
    };
    let mut report = AuditReport { potential: p.name.clone(), samples, seed, checks, inputs, constants: None };
    if let Ok(k) = constants(p, &report) {
        // boundary behaviour at -infinity: reported, never gating
        let mut ch = if p.minima_minus.is_singleton() {
            check("boundary_condition_minus", Verdict::Pass, None, None, "deep minima set is a single point")
        } else {
            let rhs = 0.5 * (k.d_alpha0 * k.eta_bc).powi(2);
            if -depth < rhs {
                check("boundary_condition_minus", Verdict::Pass, Some(rhs), None, "-depth < (d eta)^2/2")
            } else {
                check(
                    "boundary_condition_minus",
                    Verdict::Fail,
                    Some(rhs),
                    Some(p.minima_minus.point_at(0.0)),
                    "-depth >= (d eta)^2/2; convergence at -infinity is unverified",
                )
            }
        };
        ch.gating = false;
        report.checks.push(ch);
        report.constants = Some(k);
    }
    Ok(report)
}

/// Evaluates every constant from the audited inputs.
pub fn constants(p: &PotentialModel, audit: &AuditReport) -> Result<StructuralConstants> {
    let i = &audit.inputs;
    let a = i.depth;
    let h0 = i.h0.ok_or(Error::MissingConstant("h0"))?;
    let h_minus = i.h_minus.ok_or(Error::MissingConstant("h_minus"))?;
    let sigma = i.sigma.ok_or(Error::MissingConstant("sigma"))?;
    let r_bound = i.r_bound.ok_or(Error::MissingConstant("r_bound"))?;
    let d_alpha0 = i.d_alpha0.ok_or(Error::MissingConstant("d_alpha0"))?;
    if i.shell_minus.is_empty() || i.shell_plus.is_empty() {
        return Err(Error::MissingConstant("tube samples"));
    }
    let (rm, rp) = (i.rho_minus, i.rho_plus);
    let (cm, cp) = (i.c_minus, i.c_plus);
    if !(cm.is_finite() && cp.is_finite()) {
        return Err(Error::MissingConstant("finite coercivity constants"));
    }
    let kappa_m = |r: f64| shell_min(&i.shell_minus, r).ok_or(Error::MissingConstant("kappa_minus"));
    let kappa_p = |r: f64| shell_min(&i.shell_plus, r).ok_or(Error::MissingConstant("kappa_plus"));

    let eta0_minus = (E.recip() * (rm / 4.0) * (2.0 * (kappa_m(rm / 4.0)? - a)).sqrt()).sqrt().min(rm / 4.0);
    let eta0_plus = (E.recip() * (rp / 4.0) * (2.0 * kappa_p(rp / 4.0)?).sqrt()).sqrt().min(rp / 4.0);
    let r_hat_minus = rm / (cm + 1.0);
    let r_hat_plus = rp / (cp + 1.0);
    let margin_minus = (kappa_m(r_hat_minus)? - a, kappa_m(eta0_minus)? - a);
    let margin_plus = (kappa_p(r_hat_plus)?, kappa_p(eta0_plus)?);
    let eps0_minus = (eta0_minus * eta0_minus / 4.0).min(kappa_m(eta0_minus)? - a).min(margin_minus.0).min(margin_minus.1)
        / (cm * cm * (cm + 1.0));
    let eps0_plus =
        (eta0_plus * eta0_plus / 4.0).min(kappa_p(eta0_plus)?).min(margin_plus.0).min(margin_plus.1) / (cp * cp * (cp + 1.0));
    let sf = |c: f64| 0.5 * c * c * (c * c + (c + 1.0) * (c + 1.0));
    let (sf_c_minus, sf_c_plus) = (sf(cm), sf(cp));
    let kgrid = |shell: &[(f64, f64)], rho: f64| -> Vec<(f64, f64)> {
        (1..=10)
            .filter_map(|j| {
                let r = rho * j as f64 / 10.0;
                shell_min(shell, r).map(|v| (r, v))
            })
            .collect()
    };
    let d0 = (i.set_distance - rp / 2.0 - rm / 2.0).max(0.0);
    let _ = p;
    Ok(StructuralConstants {
        depth: a,
        h0,
        h_minus,
        sigma,
        sigma_of_h: i.sigma_of_h.clone(),
        kappa_minus: kgrid(&i.shell_minus, rm),
        kappa_plus: kgrid(&i.shell_plus, rp),
        c_minus: cm,
        c_plus: cp,
        rho_minus: rm,
        rho_plus: rp,
        eta0_minus,
        eta0_plus,
        r_hat_minus,
        r_hat_plus,
        margin_minus,
        margin_plus,
        eps0_minus,
        eps0_plus,
        sf_c_minus,
        sf_c_plus,
        gamma_minus: 1.0 / (cm + sf_c_minus),
        gamma_plus: 1.0 / (E * (cp + sf_c_plus)),
        d0,
        d_alpha0,
        r_bound,
        omega: sigma,
        alpha_ss: h0.min(eps0_plus),
        eta_bc: 1.0 / (sf_c_minus + cm),
    })
}

/// Coefficient 1/(C/2 (C^2 + (C+1)^2) + C) of the boundary-condition check.
pub fn eta_bc(c_minus: f64) -> f64 {
    1.0 / (0.5 * c_minus * c_minus * (c_minus * c_minus + (c_minus + 1.0) * (c_minus + 1.0)) + c_minus)
}
