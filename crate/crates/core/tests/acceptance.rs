//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::{exact_speed, nagumo, smooth_front, window, SQRT2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use wavefront_core::auditor::{audit, AuditReport};
use wavefront_core::energy::{energy, energy_gradient, translation_identity_check, Grid, Profile};
use wavefront_core::geometry::{project_sublevel, truncation_map, Branch, SublevelSet};
use wavefront_core::io::RunConfig;
use wavefront_core::minimizer::{minimize, resolve_left_level, MinimizeConfig};
use wavefront_core::oracles::{pde_front_speed, shoot_speed, PdeConfig, ShootingConfig};
use wavefront_core::potential::{make_planar_tilted, make_plateau_scalar, make_tilted_cubic, PotentialModel};
use wavefront_core::run::{execute, Command};
use wavefront_core::speed::{
    bisect_speed, bound_from_distance, comparison_suite, speed_formula, SpeedConfig, SpeedResult, BRACKET_INFLATION,
};

const SEED: u64 = 1;
const AUDIT_SAMPLES: usize = 10_000;

// criterion tolerances
const SPEED_REL: f64 = 1e-2;
const SPEED_SECONDS: u64 = 60;
const FORMULA_REL: f64 = 1e-2;
const FORMULA_EXACT_ABS: f64 = 1e-6;
const SHOOT_BISECT_ABS: f64 = 1e-3;
const PDE_BISECT_REL: f64 = 2e-2;
const SHOOT_EXACT_ABS: f64 = 1e-6;
const DECAY_REL: f64 = 5e-2;
const DECAY_EXACT: f64 = std::f64::consts::FRAC_1_SQRT_2;
const TRANSLATION_REL: f64 = 1e-8;
const CERTIFICATE_FACTOR: f64 = 1e-6;
const PROJECTION_SLACK: f64 = 1e-12;
const IDEMPOTENCE_SLACK: f64 = 1e-10;
const PROJECTION_PAIRS: usize = 10_000;
const GRADIENT_REL: f64 = 1e-6;
const GRADIENT_DIRECTIONS: usize = 20;

struct Case {
    name: &'static str,
    potential: PotentialModel,
    report: AuditReport,
    bound: f64,
    result: SpeedResult,
}

fn solve_case(name: &'static str, potential: PotentialModel) -> Case {
    let report = audit(&potential, AUDIT_SAMPLES, SEED).unwrap();
    let bound = bound_from_distance(&potential, report.inputs.d_alpha0.unwrap()).unwrap();
    let cfg =
        SpeedConfig { c_tol: 1e-4, c_hi: BRACKET_INFLATION * bound, minimize: MinimizeConfig::default(), max_bisections: 60 };
    let result = bisect_speed(&potential, &window(4001), &cfg).unwrap();
    Case { name, potential, report, bound, result }
}

fn planar() -> PotentialModel {
    make_planar_tilted([1.0, 0.0], [0.0, 0.0], 0.1).unwrap()
}

fn plateau() -> PotentialModel {
    make_plateau_scalar([-2.0, -1.0], -0.05).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

type Verdict = (bool, String);

fn speed_recovery(c025: &Case, elapsed: Duration) -> Verdict {
    let want = exact_speed(0.25);
    let rel = (c025.result.c_star - want).abs() / want;
    let ok = rel <= SPEED_REL && elapsed.as_secs() <= SPEED_SECONDS;
    (ok, format!("c* = {:.7} (rel err {rel:.2e}), {:.1} s", c025.result.c_star, elapsed.as_secs_f64()))
}

fn formula_identity(c025: &Case) -> Verdict {
    let r = &c025.result;
    let rel = (r.formula_speed - r.c_star).abs() / r.c_star;
    let m = make_tilted_cubic(0.25).unwrap();
    let exact = speed_formula(&nagumo(window(8001)), &m).unwrap();
    let err = (exact - SQRT2 / 4.0).abs();
    (
        r.minimizer_converged && rel <= FORMULA_REL && err <= FORMULA_EXACT_ABS,
        format!("minimizer rel {rel:.2e}, exact profile err {err:.2e}"),
    )
}

fn oracle_triangle(cases: &[&Case]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (beta, case) in [0.25, 0.4].into_iter().zip(cases) {
        let cb = case.result.c_star;
        let cs = shoot_speed(&case.potential, &ShootingConfig::new(2.0), 1e-9).unwrap();
        let cp = pde_front_speed(&case.potential, &PdeConfig::default()).unwrap().speed;
        let (ds, dp, de) = ((cb - cs).abs(), (cb - cp).abs() / cb, (cs - exact_speed(beta)).abs());
        ok &= ds <= SHOOT_BISECT_ABS && dp <= PDE_BISECT_REL && de <= SHOOT_EXACT_ABS;
        parts.push(format!("beta {beta}: |b-s| {ds:.1e}, |b-p|/b {dp:.1e}, |s-exact| {de:.1e}"));
    }
    (ok, parts.join("; "))
}

fn exponential_convergence(cases: &[&Case]) -> Verdict {
    let c025 = cases[0];
    let rate = c025.result.decay_rate;
    let mut ok = (rate - DECAY_EXACT).abs() / DECAY_EXACT <= DECAY_REL;
    let mut parts = vec![format!("beta 0.25 rate {rate:.5}")];
    for case in cases.iter().filter(|c| c.result.minimizer_converged) {
        let (b, half) = (case.result.decay_rate, case.result.c_star / 2.0);
        ok &= b > half;
        parts.push(format!("{} {b:.4} > {half:.4}", case.name));
    }
    (ok, parts.join(", "))
}

fn translation_identity() -> Verdict {
    let m = make_tilted_cubic(0.25).unwrap();
    let p = smooth_front(window(4001), &[1.0], &[0.0], 5.0);
    let mut worst: f64 = 0.0;
    for c in [0.1, exact_speed(0.25), 0.7] {
        for shift in [1, 5, 10] {
            worst = worst.max(translation_identity_check(&p, &m, c, shift).unwrap());
        }
    }
    (worst <= TRANSLATION_REL, format!("max relative defect {worst:.2e}"))
}

fn zero_energy_certificate(c025: &Case) -> Verdict {
    let r = &c025.result;
    let g = window(4001);
    let (c, depth) = (r.c_star, c025.potential.depth);
    let bound = CERTIFICATE_FACTOR * depth.abs() * ((c * g.t_max).exp() - (c * g.t_min).exp()) / c;
    let below = minimize(&c025.potential, &g, 0.8 * c, &MinimizeConfig::default(), None).unwrap().completed_energy;
    let above = minimize(&c025.potential, &g, 1.2 * c, &MinimizeConfig::default(), None).unwrap().completed_energy;
    (
        r.m_at_c_star.abs() <= bound && below < 0.0 && above > 0.0,
        format!("|m(c*)| {:.2e} <= {bound:.2e}, m(0.8c*) {below:.3e}, m(1.2c*) {above:.3e}", r.m_at_c_star.abs()),
    )
}

fn comparison_structure(cases: &[&Case]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for case in cases {
        let k = case.report.constants().unwrap();
        let rep = comparison_suite(&case.result.profile, &case.potential, k, case.result.c_star).unwrap();
        ok &= rep.passed;
        let show = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.2e}"));
        parts.push(format!(
            "{}: gaps {}/{:.0} {}/{:.0}, left excess {}, defect {}",
            case.name,
            show(rep.gap_t2_t1),
            rep.t1_bound,
            show(rep.gap_tplus_t1),
            rep.tss_bound,
            show(rep.left_excess),
            show(rep.left_monotonicity_defect)
        ));
    }
    (ok, parts.join("; "))
}

fn projection_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut expand, mut idem, mut fp): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let scalar = make_tilted_cubic(0.25).unwrap();
    let plane = planar();
    for m in [&scalar, &plane] {
        let level = resolve_left_level(m, &MinimizeConfig::default()).unwrap();
        let set = SublevelSet::new(m, level, Branch::Minus).unwrap();
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..m.dim).map(|_| rng.random_range(-1.5..2.5)).collect() };
        for _ in 0..PROJECTION_PAIRS {
            let (x, y) = (draw(&mut rng), draw(&mut rng));
            let (px, py) = (project_sublevel(&set, &x).unwrap(), project_sublevel(&set, &y).unwrap());
            expand = expand.max(dist(&px, &py) - dist(&x, &y));
            idem = idem.max(dist(&project_sublevel(&set, &px).unwrap(), &px));
        }
        // truncation: lowers W, 1-Lipschitz, identity on both minima sets
        let far = 2.0 * m.growth_radius;
        for _ in 0..PROJECTION_PAIRS {
            let x: Vec<f64> = (0..m.dim).map(|_| rng.random_range(-far..far)).collect();
            let y: Vec<f64> = (0..m.dim).map(|_| rng.random_range(-far..far)).collect();
            let (tx, ty) = (truncation_map(m, &x), truncation_map(m, &y));
            fp = fp.max(m.eval(&tx) - m.eval(&x)).max(dist(&tx, &ty) - dist(&x, &y));
        }
        for set in [&m.minima_minus, &m.minima_plus] {
            for a in set.sample_points(25) {
                fp = fp.max(dist(&truncation_map(m, &a), &a));
            }
        }
    }
    let plat = plateau();
    for a in plat.minima_minus.sample_points(25) {
        fp = fp.max(dist(&truncation_map(&plat, &a), &a));
    }
    (
        expand <= PROJECTION_SLACK && idem <= IDEMPOTENCE_SLACK && fp <= PROJECTION_SLACK,
        format!("expansion {expand:.1e}, idempotence {idem:.1e}, truncation defect {fp:.1e}"),
    )
}

fn gradient_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let grid = Grid::new(-20.0, 20.0, 401).unwrap();
    let mut worst: f64 = 0.0;
    for (m, c) in [(make_tilted_cubic(0.25).unwrap(), 0.35), (plateau(), 0.06), (planar(), 0.68)] {
        let (a, b) = (m.anchor_minus(), m.anchor_plus());
        let mut p: Profile = smooth_front(grid, &a, &b, 8.0);
        let k = m.dim;
        let interior = k..(grid.n - 1) * k;
        for v in p.values[interior.clone()].iter_mut() {
            *v += 0.05 * rng.random_range(-1.0..1.0);
        }
        let g = energy_gradient(&p, &m, c).unwrap();
        for _ in 0..GRADIENT_DIRECTIONS {
            let dir: Vec<f64> =
                (0..p.values.len()).map(|i| if interior.contains(&i) { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
            let along = |h: f64| {
                let mut q = p.clone();
                q.values.iter_mut().zip(&dir).for_each(|(v, d)| *v += h * d);
                energy(&q, &m, c).unwrap().total
            };
            let h = 1e-5;
            let fd = (along(h) - along(-h)) / (2.0 * h);
            let an: f64 = g.iter().zip(&dir).map(|(x, y)| x * y).sum();
            worst = worst.max((fd - an).abs() / an.abs());
        }
    }
    (worst <= GRADIENT_REL, format!("max relative error {worst:.2e} over 3 potentials"))
}

fn config(pairs: &[(&str, &str)], dir: &std::path::Path) -> RunConfig {
    let mut map: BTreeMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    map.insert("out_dir".into(), dir.display().to_string());
    RunConfig::from_entries(&map).unwrap()
}

fn degenerate_minima() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&[("potential", "plateau")], &dir.path().join("plateau"));
    let out = execute(Command::Solve, &cfg).unwrap();
    let res = &out.manifest.results;
    let tail = &res["left_tail"];
    let inside = tail["in_deep_sublevel_set"] == Value::Bool(true);
    let reported = tail["max_distance_to_deep_set"].is_number() && tail["distance_at_left_end"].is_number();
    (
        out.error.is_none() && inside && reported && res["c_star"].is_number(),
        format!(
            "c* = {}, left tail in deep set: {inside}, distance to deep set {} (reported)",
            res["c_star"], tail["max_distance_to_deep_set"]
        ),
    )
}

fn bracket_bound(cases: &[&Case]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for case in cases {
        ok &= case.report.passed() && case.bound >= case.result.c_star;
        parts.push(format!("{}: {:.4} >= {:.4}", case.name, case.bound, case.result.c_star));
    }
    (ok, parts.join(", "))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let cfg = config(&[("beta", "0.25"), ("seed", "7"), ("workers", "1")], &dir.path().join(sub));
        let out = execute(Command::Solve, &cfg).unwrap();
        let files: Vec<(String, String)> = out.manifest.artifacts.iter().map(|a| (a.file.clone(), a.sha256.clone())).collect();
        (files, serde_json::to_string(&out.manifest.results).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    (a == b && !a.0.is_empty(), format!("{} artifacts, checksums and results identical: {}", a.0.len(), a == b))
}

fn main() {
    let start = Instant::now();
    let c025 = solve_case("beta 0.25", make_tilted_cubic(0.25).unwrap());
    let elapsed = start.elapsed();
    let c04 = solve_case("beta 0.4", make_tilted_cubic(0.4).unwrap());
    let c_plateau = solve_case("plateau", plateau());
    let c_planar = solve_case("planar", planar());

    let verdicts: Vec<(&str, Verdict)> = vec![
        ("speed recovery", speed_recovery(&c025, elapsed)),
        ("speed-formula identity", formula_identity(&c025)),
        ("oracle triangle", oracle_triangle(&[&c025, &c04])),
        ("exponential convergence", exponential_convergence(&[&c025, &c04, &c_plateau, &c_planar])),
        ("translation identity", translation_identity()),
        ("zero-energy certificate", zero_energy_certificate(&c025)),
        ("comparison structure", comparison_structure(&[&c025, &c04, &c_planar])),
        ("projection and truncation", projection_properties()),
        ("gradient correctness", gradient_correctness()),
        ("degenerate minima", degenerate_minima()),
        ("bracket bound", bracket_bound(&[&c025, &c04, &c_planar])),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, (ok, detail))) in verdicts.iter().enumerate() {
        println!("criterion {}: {} {name}: {detail}", i + 1, if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("acceptance: {} of {} criteria pass", verdicts.len() - failed, verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
