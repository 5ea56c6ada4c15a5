mod common;

use common::{exact_speed, nagumo, window, SQRT2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavefront_core::auditor::audit;
use wavefront_core::energy::{energy, Grid, Profile};
use wavefront_core::geometry::transition_markers;
use wavefront_core::minimizer::{minimize, residual, MinimizeConfig};
use wavefront_core::potential::make_tilted_cubic;
use wavefront_core::speed::{
    bisect_speed, bound_from_distance, bracket_bound, decay_rate, length_study, linspace, scan, sign_change_brackets,
    sign_changes, speed_formula, transition_time_bounds, SpeedConfig,
};
use wavefront_core::Error;

fn speed_config(c_hi: f64) -> SpeedConfig {
    SpeedConfig { c_tol: 1e-4, c_hi, minimize: MinimizeConfig::default(), max_bisections: 60 }
}

#[test]
fn exact_profile_kinetic_integral_and_formula() {
    // int |u'|^2 = 1/(6 sqrt 2), and -depth = 1/24 gives sqrt(2)/4
    let m = make_tilted_cubic(0.25).unwrap();
    let p = nagumo(window(8001));
    let kin = p.kinetic_integral();
    assert!((kin - 1.0 / (6.0 * SQRT2)).abs() / kin < 1e-5, "kinetic {kin}");
    let f = speed_formula(&p, &m).unwrap();
    assert!((f - SQRT2 / 4.0).abs() <= 1e-6, "formula {f}");
}

#[test]
fn exact_profile_residual_floor() {
    let m = make_tilted_cubic(0.25).unwrap();
    let r = residual(&nagumo(window(4001)), &m, exact_speed(0.25));
    assert!(r <= 5e-4, "residual {r}");
}

#[test]
fn exact_profile_is_a_minimizer() {
    let m = make_tilted_cubic(0.25).unwrap();
    let c = exact_speed(0.25);
    let init = nagumo(window(4001));
    let r = minimize(&m, &init.grid, c, &MinimizeConfig::default(), Some(&init)).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 5, "{} iterations", r.iterations);
    assert!(r.completed_energy.abs() <= 1e-3 * m.depth.abs() / c, "energy {}", r.completed_energy);
}

/// Monotone random profile from 1 to 0: cumulative sums of random positive increments.
fn random_monotone(grid: Grid, rng: &mut ChaCha8Rng) -> Profile {
    let n = grid.n;
    let lo = rng.random_range(-15.0..-2.0);
    let hi = rng.random_range(2.0..15.0);
    let mut inc: Vec<f64> = (0..n).map(|i| if grid.t(i) > lo && grid.t(i) < hi { rng.random::<f64>() } else { 0.0 }).collect();
    let total: f64 = inc.iter().sum();
    inc.iter_mut().for_each(|x| *x /= total);
    let mut acc = 0.0;
    let values = inc
        .iter()
        .map(|d| {
            acc += d;
            (1.0 - acc).clamp(0.0, 1.0)
        })
        .collect();
    Profile::new(grid, 1, values, vec![1.0], vec![0.0]).unwrap()
}

#[test]
fn sign_of_minimum_around_the_speed() {
    let m = make_tilted_cubic(0.25).unwrap();
    let c = exact_speed(0.25);
    let g = window(4001);
    let below = minimize(&m, &g, 0.9 * c, &MinimizeConfig::default(), None).unwrap();
    assert!(below.completed_energy < 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let init = random_monotone(g, &mut rng);
        let above = minimize(&m, &g, 1.1 * c, &MinimizeConfig::default(), Some(&init)).unwrap();
        assert!(above.converged);
        assert!(above.completed_energy > 0.0, "m = {}", above.completed_energy);
    }
}

#[test]
fn balanced_limit_speed_is_small() {
    let m = make_tilted_cubic(0.49).unwrap();
    let r = bisect_speed(&m, &window(4001), &speed_config(0.1)).unwrap();
    assert!(r.c_star < 0.03, "c* = {}", r.c_star);
}

#[test]
fn scaling_covariance() {
    // s^2 W with s = 2 doubles the speed
    let m = make_tilted_cubic(0.25).unwrap().scaled(4.0).unwrap();
    let r = bisect_speed(&m, &window(4001), &speed_config(1.5)).unwrap();
    let want = 2.0 * exact_speed(0.25);
    assert!((r.c_star - want).abs() <= 2e-4 + 1e-3 * want, "c* = {}", r.c_star);
}

#[test]
fn length_doubling_converges() {
    let m = make_tilted_cubic(0.25).unwrap();
    let s = length_study(&m, 20.0, 0.02, &speed_config(0.9), 3).unwrap();
    assert!(s.converged, "{:?}", s.runs);
    let (l, c) = *s.runs.last().unwrap();
    assert!(l >= 40.0);
    assert!((c - exact_speed(0.25)).abs() / exact_speed(0.25) < 1e-2);
}

#[test]
fn scan_changes_sign_once() {
    let m = make_tilted_cubic(0.25).unwrap();
    let c = exact_speed(0.25);
    let pts = scan(&m, &window(4001), &MinimizeConfig::default(), &linspace(0.5 * c, 1.5 * c, 21), 1).unwrap();
    assert_eq!(sign_changes(&pts), 1);
    let (lo, hi) = sign_change_brackets(&pts)[0];
    assert!(lo < c && c <= hi + 1e-4);
}

#[test]
fn scan_above_bound_is_positive() {
    let m = make_tilted_cubic(0.25).unwrap();
    let k = audit(&m, 10_000, 3).unwrap();
    let b = bracket_bound(&m, k.constants().unwrap()).unwrap();
    let pts = scan(&m, &window(4001), &MinimizeConfig::default(), &linspace(b, 1.5 * b, 5), 1).unwrap();
    assert!(pts.iter().all(|p| !p.negative && p.m > 0.0));
}

#[test]
fn sign_change_stable_under_refinement() {
    let m = make_tilted_cubic(0.25).unwrap();
    let c = exact_speed(0.25);
    let c_tol = 1e-4;
    let speeds = linspace(c - 1e-3, c + 1e-3, 21);
    let mids: Vec<f64> = [2001, 4001, 8001]
        .iter()
        .map(|&n| {
            let pts = scan(&m, &window(n), &MinimizeConfig::default(), &speeds, 1).unwrap();
            assert_eq!(sign_changes(&pts), 1, "n = {n}");
            let (a, b) = sign_change_brackets(&pts)[0];
            0.5 * (a + b)
        })
        .collect();
    assert!((mids[0] - mids[1]).abs() <= c_tol + 1e-12, "{mids:?}");
    assert!((mids[2] - mids[1]).abs() <= c_tol + 1e-12, "{mids:?}");
}

#[test]
fn bound_examples() {
    let m = make_tilted_cubic(0.25).unwrap();
    let k = audit(&m, 10_000, 1).unwrap();
    let b = bracket_bound(&m, k.constants().unwrap()).unwrap();
    assert!(b >= exact_speed(0.25));
    let d = k.constants().unwrap().d_alpha0;
    let deeper = m.scaled(2.0).unwrap();
    let b2 = bound_from_distance(&deeper, d).unwrap();
    assert!((b2 / b - SQRT2).abs() < 1e-12);
    assert!(matches!(bound_from_distance(&m, 0.0), Err(Error::Audit(_))));
}

#[test]
fn exact_profile_decay_rate() {
    let m = make_tilted_cubic(0.25).unwrap();
    let fit = decay_rate(&nagumo(window(4001)), &m, exact_speed(0.25)).unwrap();
    assert!((fit.rate - 1.0 / SQRT2).abs() / (1.0 / SQRT2) < 0.05, "rate {}", fit.rate);
    // (c + sqrt(c^2 + 4 * 0.25)) / 2 at c = sqrt(2)/4
    assert!((fit.prediction - 1.0 / SQRT2).abs() < 1e-4);
    assert!(fit.rate > exact_speed(0.25) / 2.0);
}

#[test]
fn constant_profile_has_no_tail_signal() {
    let m = make_tilted_cubic(0.25).unwrap();
    let p = Profile::constant(window(401), &[0.0]);
    assert!(matches!(decay_rate(&p, &m, 0.3), Err(Error::Fit(_))));
    assert!(matches!(speed_formula(&p, &m), Err(Error::DegenerateProfile(_))));
}

#[test]
fn exact_profile_markers_within_bounds() {
    let m = make_tilted_cubic(0.25).unwrap();
    let rep = audit(&m, 10_000, 1).unwrap();
    let k = rep.constants().unwrap();
    let c = exact_speed(0.25);
    let mk = transition_markers(&nagumo(window(4001)), &m, k);
    let (t1, t2, tp) = (mk.t1_minus.unwrap(), mk.t2_minus.unwrap(), mk.t_plus.unwrap());
    assert!(t1 <= t2 && t2 < tp);
    let (_, _, tss) = transition_time_bounds(c, k.r_bound, k.omega, k.depth, k.alpha_ss).unwrap();
    assert!(tp - t1 <= tss);
}

#[test]
fn bisection_reports_invalid_bracket() {
    let m = make_tilted_cubic(0.25).unwrap();
    // c_hi below c*: m(c_hi) is still negative
    let e = bisect_speed(&m, &window(4001), &speed_config(0.2)).unwrap_err();
    assert!(e.to_string().starts_with("bracket invalid; increase domain or audit potential"));
}

#[test]
fn energy_of_pins_is_finite_for_the_exact_profile() {
    let m = make_tilted_cubic(0.25).unwrap();
    let e = energy(&nagumo(window(4001)), &m, exact_speed(0.25)).unwrap();
    assert!(e.completed().is_finite());
    assert!(!e.weight_floor_hit);
}

#[test]
fn scan_is_independent_of_worker_count() {
    let m = make_tilted_cubic(0.25).unwrap();
    let g = Grid::new(-20.0, 20.0, 801).unwrap();
    let speeds = linspace(0.2, 0.5, 5);
    let one = scan(&m, &g, &MinimizeConfig::default(), &speeds, 1).unwrap();
    let three = scan(&m, &g, &MinimizeConfig::default(), &speeds, 3).unwrap();
    assert_eq!(one, three);
}
