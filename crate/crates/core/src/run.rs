//! Batch commands. Each run validates first (a config error leaves no files behind), then
//! writes its artifacts and a manifest into the output directory. Module errors after that
//! point end the run with an error record in the manifest.

use std::fs;
use std::path::Path;

use serde_json::json;

use crate::auditor::{audit, AuditReport, Verdict};
use crate::energy::Profile;
use crate::error::{Error, Result};
use crate::geometry::{transition_markers, Branch, SublevelSet};
use crate::io::{
    unix_now, write_constants_csv, write_json, write_log_csv, write_pairs_csv, write_profile_csv, write_scan_csv,
    write_state_csv, ErrorRecord, RunConfig, RunManifest,
};
use crate::minimizer::{default_t, minimize, resolve_left_level};
use crate::oracles::{pde_front_speed, shoot_speed, PdeResult};
use crate::potential::PotentialModel;
use crate::speed::{
    bisect_speed, bound_from_distance, comparison_suite, linspace, scan, sign_change_brackets, sign_changes, SpeedConfig,
    SpeedResult, BRACKET_INFLATION,
};

/// Agreement tolerances between the three speeds.
pub const SHOOT_AGREEMENT: f64 = 1e-3;
pub const PDE_AGREEMENT_REL: f64 = 2e-2;
pub const FORMULA_AGREEMENT_REL: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Scan,
    Oracle,
    Audit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Scan => "scan",
            Command::Oracle => "oracle",
            Command::Audit => "audit",
        }
    }
}

/// Result of a run that got past validation.
pub struct Outcome {
    pub manifest: RunManifest,
    pub error: Option<Error>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    p: PotentialModel,
    dir: &'a Path,
    manifest: RunManifest,
}

impl Ctx<'_> {
    fn artifact(&mut self, file: &str) -> Result<()> {
        self.manifest.add_artifact(self.dir, file)
    }

    fn json<T: serde::Serialize>(&mut self, file: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(file), value)?;
        self.artifact(file)
    }

    fn record<T: serde::Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.manifest.record(key, value)
    }
}

fn preflight(cmd: Command, cfg: &RunConfig) -> Result<PotentialModel> {
    let p = cfg.build_potential()?;
    match cmd {
        Command::Scan if cfg.scan.is_none() => return Err(Error::Config("scan needs scan_lo and scan_hi".into())),
        Command::Oracle => {
            if !cfg.shooting && !cfg.pde {
                return Err(Error::Config("oracle needs shooting = true or pde = true".into()));
            }
            if cfg.shooting && p.dim != 1 {
                return Err(Error::Config(format!("shooting needs k = 1 (potential has k = {}); set shooting = false", p.dim)));
            }
            if cfg.triangle && !(cfg.shooting && cfg.pde) {
                return Err(Error::Config("triangle needs both shooting and pde".into()));
            }
        }
        _ => {}
    }
    if cfg.out_dir.exists() && !cfg.out_dir.is_dir() {
        return Err(Error::Config(format!("out_dir {} is not a directory", cfg.out_dir.display())));
    }
    Ok(p)
}

/// Runs a command. `Err` means nothing was written (validation failure or an unwritable
/// output directory); module errors come back inside the `Outcome`.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    let p = preflight(cmd, cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut ctx = Ctx { cfg, p, dir: &cfg.out_dir, manifest: RunManifest::new(cmd.name(), cfg) };
    let res = match cmd {
        Command::Solve => solve(&mut ctx),
        Command::Scan => run_scan(&mut ctx),
        Command::Oracle => oracle(&mut ctx),
        Command::Audit => audit_stage(&mut ctx).map(|_| ()),
    };
    let error = match res {
        Ok(()) => {
            ctx.manifest.status = "ok".into();
            None
        }
        Err(e) => {
            partial_outputs(&mut ctx, &e);
            ctx.manifest.status = "error".into();
            ctx.manifest.error = Some(ErrorRecord { kind: e.kind().into(), message: e.to_string() });
            Some(e)
        }
    };
    ctx.manifest.finished_unix = unix_now();
    ctx.manifest.write(ctx.dir)?;
    Ok(Outcome { manifest: ctx.manifest, error })
}

/// Best-effort artifacts carried by an error.
fn partial_outputs(ctx: &mut Ctx, e: &Error) {
    let written = match e {
        Error::DomainTooShort { trajectory, .. } => {
            let f = "front_trajectory_partial.csv";
            write_pairs_csv(&ctx.dir.join(f), ["t", "x_front"], trajectory).map(|_| f)
        }
        Error::LineSearch { profile, .. } => {
            let f = "profile_last.csv";
            write_profile_csv(&ctx.dir.join(f), profile).map(|_| f)
        }
        _ => return,
    };
    if let Ok(f) = written {
        let _ = ctx.artifact(f);
    }
}

fn audit_stage(ctx: &mut Ctx) -> Result<AuditReport> {
    let report = audit(&ctx.p, ctx.cfg.audit_samples, ctx.cfg.seed)?;
    ctx.json("audit.json", &report)?;
    if let Some(k) = &report.constants {
        write_constants_csv(&ctx.dir.join("constants.csv"), k)?;
        ctx.artifact("constants.csv")?;
    }
    ctx.manifest.constants = report.constants.clone();
    let failures: Vec<&str> =
        report.checks.iter().filter(|c| c.gating && c.verdict == Verdict::Fail).map(|c| c.name.as_str()).collect();
    ctx.record("audit_passed", &report.passed())?;
    ctx.record("audit_failures", &failures)?;
    Ok(report)
}

fn speed_bound(ctx: &mut Ctx, report: &AuditReport) -> Result<f64> {
    let d = report.inputs.d_alpha0.ok_or(Error::MissingConstant("d_alpha0"))?;
    let bound = bound_from_distance(&ctx.p, d)?;
    ctx.record("bracket_bound", &bound)?;
    Ok(bound)
}

fn bisect(ctx: &mut Ctx, report: &AuditReport) -> Result<SpeedResult> {
    let bound = speed_bound(ctx, report)?;
    let cfg = ctx.cfg;
    let sc = SpeedConfig {
        c_tol: cfg.c_tol,
        c_hi: cfg.c_hi.unwrap_or(BRACKET_INFLATION * bound),
        minimize: cfg.minimize.clone(),
        max_bisections: cfg.max_bisections,
    };
    let r = bisect_speed(&ctx.p, &cfg.grid, &sc)?;
    ctx.record("bound_dominates_c_star", &(bound >= r.c_star))?;
    Ok(r)
}

/// Left-tail diagnostics on t <= -T: the deep-level membership and the distance to the deep set.
fn left_tail(ctx: &mut Ctx, profile: &Profile) -> Result<()> {
    let g = profile.grid;
    let t_c = ctx.cfg.minimize.t_constraint.unwrap_or_else(|| default_t(&g));
    let level = resolve_left_level(&ctx.p, &ctx.cfg.minimize)?;
    let set = SublevelSet::new(&ctx.p, level, Branch::Minus)?;
    let nodes: Vec<usize> = (0..g.n).filter(|&i| g.t(i) <= -t_c).collect();
    let inside = nodes.iter().all(|&i| set.in_component(profile.node(i), 1e-8));
    let dist = nodes.iter().map(|&i| ctx.p.minima_minus.dist(profile.node(i))).fold(0.0, f64::max);
    ctx.record(
        "left_tail",
        &json!({
            "t_constraint": t_c,
            "level": level,
            "in_deep_sublevel_set": inside,
            "max_distance_to_deep_set": dist,
            "distance_at_left_end": ctx.p.minima_minus.dist(profile.node(0)),
        }),
    )
}

fn solve(ctx: &mut Ctx) -> Result<()> {
    let report = audit_stage(ctx)?;
    let cfg = ctx.cfg;
    if let Some(c) = cfg.c {
        let r = minimize(&ctx.p, &cfg.grid, c, &cfg.minimize, None)?;
        write_profile_csv(&ctx.dir.join("profile.csv"), &r.profile)?;
        ctx.artifact("profile.csv")?;
        if cfg.minimize.log_iterations {
            write_log_csv(&ctx.dir.join("iterations.csv"), &r.log)?;
            ctx.artifact("iterations.csv")?;
        }
        let summary = json!({
            "c": r.c,
            "energy": r.energy,
            "completed_energy": r.completed_energy,
            "iterations": r.iterations,
            "converged": r.converged,
            "grad_norm": r.grad_norm,
            "constraint_active_left": r.constraint_active_left,
            "constraint_active_right": r.constraint_active_right,
            "ode_residual": r.ode_residual,
            "max_step_change": r.max_step_change,
            "max_projection_increase": r.max_projection_increase,
            "t_constraint": r.t_constraint,
            "left_level": r.left_level,
        });
        ctx.json("minimize_result.json", &summary)?;
        ctx.record("minimize", &summary)?;
        if let Some(k) = &report.constants {
            ctx.record("markers", &transition_markers(&r.profile, &ctx.p, k))?;
        }
        return left_tail(ctx, &r.profile);
    }

    let r = bisect(ctx, &report)?;
    write_profile_csv(&ctx.dir.join("profile.csv"), &r.profile)?;
    ctx.artifact("profile.csv")?;
    ctx.json("speed_result.json", &r)?;
    let formula_rel = (r.formula_speed - r.c_star).abs() / r.c_star;
    ctx.record("c_star", &r.c_star)?;
    ctx.record("bracket", &r.bracket)?;
    ctx.record("formula_speed", &r.formula_speed)?;
    ctx.record("formula_agrees", &(formula_rel <= FORMULA_AGREEMENT_REL))?;
    ctx.record("decay", &r.decay)?;
    ctx.record("decay_exceeds_half_speed", &(r.decay_rate > r.c_star / 2.0))?;
    ctx.record("m_at_c_star", &r.m_at_c_star)?;
    ctx.record("m_tol", &r.m_tol)?;
    ctx.record("zero_energy_certificate", &(r.m_at_c_star.abs() <= r.m_tol))?;
    ctx.record("minimizer_converged", &r.minimizer_converged)?;
    ctx.record("ode_residual", &r.ode_residual)?;
    if let Some(k) = &report.constants {
        match comparison_suite(&r.profile, &ctx.p, k, r.c_star) {
            Ok(cmp) => ctx.record("comparison", &cmp)?,
            Err(e) => ctx.record("comparison", &json!({ "unavailable": e.to_string() }))?,
        }
    } else {
        ctx.record("comparison", &json!({ "unavailable": "audited constants missing" }))?;
    }
    left_tail(ctx, &r.profile)
}

fn run_scan(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let (lo, hi) = cfg.scan.expect("checked in preflight");
    let points = scan(&ctx.p, &cfg.grid, &cfg.minimize, &linspace(lo, hi, cfg.scan_points), cfg.workers)?;
    write_scan_csv(&ctx.dir.join("scan.csv"), &points)?;
    ctx.artifact("scan.csv")?;
    ctx.record("sign_changes", &sign_changes(&points))?;
    ctx.record("sign_change_brackets", &sign_change_brackets(&points))?;
    ctx.record("all_positive", &points.iter().all(|p| !p.negative))?;
    ctx.record("all_converged", &points.iter().all(|p| p.converged))
}

fn write_pde(ctx: &mut Ctx, r: &PdeResult) -> Result<()> {
    write_pairs_csv(&ctx.dir.join("front_trajectory.csv"), ["t", "x_front"], &r.trajectory)?;
    ctx.artifact("front_trajectory.csv")?;
    write_state_csv(&ctx.dir.join("pde_final.csv"), &r.x, &r.state, r.dim)?;
    ctx.artifact("pde_final.csv")?;
    for (j, (t, w)) in r.snapshots.iter().enumerate() {
        let f = format!("pde_snapshot_{j:04}.csv");
        write_state_csv(&ctx.dir.join(&f), &r.x, w, r.dim)?;
        ctx.artifact(&f)?;
        ctx.record(&format!("snapshot_{j:04}_time"), t)?;
    }
    Ok(())
}

fn oracle(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let shoot = if cfg.shooting {
        let c = shoot_speed(&ctx.p, &cfg.shooting_config, cfg.shoot_tol)?;
        ctx.record("shooting_speed", &c)?;
        Some(c)
    } else {
        None
    };
    let pde = if cfg.pde {
        let r = pde_front_speed(&ctx.p, &cfg.pde_config)?;
        write_pde(ctx, &r)?;
        ctx.record("pde_speed", &r.speed)?;
        ctx.record("pde_max_excursion", &r.max_excursion)?;
        Some(r.speed)
    } else {
        None
    };
    if cfg.triangle {
        let report = audit_stage(ctx)?;
        let mut r = bisect(ctx, &report)?;
        r.shooting_speed = shoot;
        r.pde_speed = pde;
        write_profile_csv(&ctx.dir.join("profile.csv"), &r.profile)?;
        ctx.artifact("profile.csv")?;
        ctx.json("speed_result.json", &r)?;
        let (cs, cp) = (shoot.expect("checked in preflight"), pde.expect("checked in preflight"));
        let cb = r.c_star;
        let shoot_ok = (cb - cs).abs() <= SHOOT_AGREEMENT;
        let pde_ok = (cb - cp).abs() <= PDE_AGREEMENT_REL * cb;
        let formula_ok = (cb - r.formula_speed).abs() <= FORMULA_AGREEMENT_REL * cb;
        ctx.record("c_star", &cb)?;
        ctx.record(
            "triangle",
            &json!({
                "bisection": cb,
                "shooting": cs,
                "pde": cp,
                "formula": r.formula_speed,
                "shooting_agrees": shoot_ok,
                "pde_agrees": pde_ok,
                "formula_agrees": formula_ok,
                "passed": shoot_ok && pde_ok && formula_ok,
            }),
        )?;
    }
    Ok(())
}
