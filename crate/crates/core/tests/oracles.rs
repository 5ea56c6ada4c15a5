mod common;

use common::{exact_speed, window};
use wavefront_core::minimizer::{minimize, MinimizeConfig};
use wavefront_core::oracles::{
    aligned_sup_distance, classify, pde_front_speed, shoot_speed, shoot_state, Fate, PdeConfig, Scheme, ShootingConfig,
};
use wavefront_core::potential::{make_plateau_scalar, make_tilted_cubic};
use wavefront_core::speed::{bisect_speed, SpeedConfig};
use wavefront_core::Error;

#[test]
fn shooting_matches_closed_form() {
    for beta in [0.25, 0.4] {
        let m = make_tilted_cubic(beta).unwrap();
        let c = shoot_speed(&m, &ShootingConfig::new(2.0), 1e-9).unwrap();
        assert!((c - exact_speed(beta)).abs() <= 1e-6, "beta {beta}: {c}");
    }
}

#[test]
fn rk4_error_contracts_at_fourth_order() {
    let m = make_tilted_cubic(0.25).unwrap();
    let base = ShootingConfig::new(2.0);
    let at = |dt: f64| shoot_state(&m, 0.3, &ShootingConfig { dt_ode: dt, ..base.clone() }, 30.0).unwrap();
    let (a, b, c) = (at(0.02), at(0.01), at(0.005));
    let e1 = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
    let e2 = (b[0] - c[0]).abs().max((b[1] - c[1]).abs());
    assert!(e1 / e2 >= 14.0, "contraction {}", e1 / e2);
}

#[test]
fn fate_flips_across_the_speed() {
    let m = make_tilted_cubic(0.25).unwrap();
    let cfg = ShootingConfig::new(2.0);
    let c = exact_speed(0.25);
    assert_eq!(classify(&m, c - 1e-4, &cfg).unwrap().fate, Fate::Undershoot);
    assert_eq!(classify(&m, c + 1e-4, &cfg).unwrap().fate, Fate::Overshoot);
    assert!(classify(&m, c - 1e-4, &cfg).unwrap().entered_deep_tube);
}

#[test]
fn plateau_shooting_matches_bisection() {
    // no closed form: the variational speed is the reference
    let m = make_plateau_scalar([-2.0, -1.0], -0.05).unwrap();
    let c = shoot_speed(&m, &ShootingConfig::new(2.0), 1e-8).unwrap();
    let cfg = SpeedConfig { c_tol: 1e-4, c_hi: 0.4, minimize: MinimizeConfig::default(), max_bisections: 60 };
    let b = bisect_speed(&m, &window(4001), &cfg).unwrap();
    assert!((c - b.c_star).abs() <= 1e-3, "shooting {c}, bisection {}", b.c_star);
}

#[test]
fn pde_front_speed_within_two_percent() {
    for beta in [0.25, 0.4] {
        let m = make_tilted_cubic(beta).unwrap();
        let r = pde_front_speed(&m, &PdeConfig::default()).unwrap();
        let want = exact_speed(beta);
        assert!((r.speed - want).abs() <= 0.02 * want, "beta {beta}: {}", r.speed);
        // the scalar scheme keeps the solution between the wells up to roundoff
        assert!(r.max_excursion < 1e-12);
    }
}

#[test]
fn pde_balanced_limit() {
    let m = make_tilted_cubic(0.49).unwrap();
    let r = pde_front_speed(&m, &PdeConfig::default()).unwrap();
    assert!(r.speed.abs() < 0.04);
}

#[test]
fn pde_profile_matches_minimizer() {
    let m = make_tilted_cubic(0.25).unwrap();
    let c = exact_speed(0.25);
    let pde = pde_front_speed(&m, &PdeConfig::default()).unwrap();
    let min = minimize(&m, &window(4001), c, &MinimizeConfig::default(), None).unwrap();
    let (_, sup) = aligned_sup_distance(&pde, &min.profile);
    assert!(sup <= 0.02, "sup {sup}");
}

#[test]
fn explicit_and_semi_implicit_agree() {
    let m = make_tilted_cubic(0.25).unwrap();
    let base = PdeConfig { dx: 0.1, half_length: 60.0, t_end: 80.0, ..Default::default() };
    let semi = pde_front_speed(&m, &base).unwrap();
    let expl = pde_front_speed(&m, &PdeConfig { scheme: Scheme::Explicit, dt_pde: 0.004, record_every: 25, ..base }).unwrap();
    assert!((semi.speed - expl.speed).abs() < 2e-3, "{} vs {}", semi.speed, expl.speed);
}

#[test]
fn short_domain_is_reported() {
    let m = make_tilted_cubic(0.25).unwrap();
    let cfg = PdeConfig { half_length: 20.0, boundary_margin: 5.0, ..Default::default() };
    match pde_front_speed(&m, &cfg) {
        Err(Error::DomainTooShort { trajectory, time, .. }) => {
            assert!(!trajectory.is_empty());
            assert!(time < cfg.t_end);
        }
        other => panic!("expected domain too short, got {other:?}"),
    }
}
