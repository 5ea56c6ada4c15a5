//! Run configuration (flat `key = value` text), CSV and JSON artifacts, and the run manifest
//! with SHA-256 checksums of every artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::auditor::StructuralConstants;
use crate::energy::{Grid, Profile};
use crate::error::{Error, Result};
use crate::minimizer::{IterRecord, MinimizeConfig, StepRule};
use crate::oracles::{PdeConfig, Scheme, ShootingConfig};
use crate::potential::{make_planar_tilted, make_plateau_scalar, make_tabulated, make_tilted_cubic, PotentialModel};
use crate::speed::ScanPoint;

/// Every key the configuration accepts, with its default (empty = no default).
pub const KEYS: &[(&str, &str)] = &[
    ("potential", "tilted_cubic"),
    ("beta", "0.25"),
    ("plateau_lo", "-2"),
    ("plateau_hi", "-1"),
    ("depth", "-0.05"),
    ("well_minus", "1,0"),
    ("well_plus", "0,0"),
    ("tilt", "0.1"),
    ("table", ""),
    ("a_minus", ""),
    ("a_plus", ""),
    ("scale", "1"),
    ("t_min", "-40"),
    ("t_max", "40"),
    ("n", "4001"),
    ("c", ""),
    ("t_constraint", ""),
    ("left_level", ""),
    ("max_iters", "20000"),
    ("grad_tol", "1e-6"),
    ("step_rule", "backtracking"),
    ("step", "1e-3"),
    ("enforce_truncation", "true"),
    ("enforce_left_constraint", "true"),
    ("enforce_right_constraint", "true"),
    ("translation_moves", "true"),
    ("log_iterations", "false"),
    ("c_tol", "1e-4"),
    ("c_hi", ""),
    ("max_bisections", "60"),
    ("scan_lo", ""),
    ("scan_hi", ""),
    ("scan_points", "21"),
    ("shooting", "true"),
    ("pde", "true"),
    ("triangle", "false"),
    ("dt_ode", "1e-2"),
    ("start_offset", "1e-8"),
    ("c_search_max", "2"),
    ("shoot_tol", "1e-9"),
    ("pde_dx", "0.05"),
    ("pde_dt", "0.01"),
    ("pde_half_length", "100"),
    ("pde_t_end", "150"),
    ("pde_level", "0.5"),
    ("pde_scheme", "semi_implicit"),
    ("pde_margin", "10"),
    ("pde_snapshot_every", "0"),
    ("audit_samples", "10000"),
    ("seed", "1"),
    ("workers", "1"),
    ("out_dir", "out"),
];

/// Parses `key = value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {k:?}", no + 1)));
        }
    }
    Ok(map)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PotentialKind {
    TiltedCubic { beta: f64 },
    Plateau { lo: f64, hi: f64, depth: f64 },
    PlanarTilted { well_minus: [f64; 2], well_plus: [f64; 2], tilt: f64 },
    Tabulated { path: PathBuf, a_minus: f64, a_plus: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub potential: PotentialKind,
    /// W is replaced by scale * W.
    pub scale: f64,
    pub grid: Grid,
    /// Fixed speed; `None` runs the bisection.
    pub c: Option<f64>,
    pub minimize: MinimizeConfig,
    pub c_tol: f64,
    pub c_hi: Option<f64>,
    pub max_bisections: usize,
    pub scan: Option<(f64, f64)>,
    pub scan_points: usize,
    pub shooting: bool,
    pub pde: bool,
    /// Also bisect and compare the three speeds in the oracle command.
    pub triangle: bool,
    pub shooting_config: ShootingConfig,
    pub shoot_tol: f64,
    pub pde_config: PdeConfig,
    pub audit_samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    /// Fully resolved key/value echo, defaults included.
    pub entries: BTreeMap<String, String>,
}

struct Fields<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Fields<'_> {
    fn raw(&self, key: &str) -> &str {
        self.map.get(key).map(String::as_str).unwrap_or("")
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let v = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Config(format!("{key}: expected a finite number, got {v:?}")))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let v = self.raw(key);
        v.parse().map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got {v:?}")))
    }

    fn u64(&self, key: &str) -> Result<u64> {
        let v = self.raw(key);
        v.parse().map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got {v:?}")))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
        }
    }

    fn pair(&self, key: &str) -> Result<[f64; 2]> {
        let v = self.raw(key);
        let parts: Vec<f64> = v.split(',').filter_map(|s| s.trim().parse().ok()).collect();
        match parts.as_slice() {
            [a, b] if a.is_finite() && b.is_finite() => Ok([*a, *b]),
            _ => Err(Error::Config(format!("{key}: expected two comma-separated numbers, got {v:?}"))),
        }
    }
}

impl RunConfig {
    /// Reads a config file (if any) and applies `overrides` on top of it.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
        let mut map = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                parse_kv(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        RunConfig::from_entries(&map)
    }

    pub fn from_entries(given: &BTreeMap<String, String>) -> Result<RunConfig> {
        if let Some(k) = given.keys().find(|k| !KEYS.iter().any(|(name, _)| name == k)) {
            return Err(Error::Config(format!("unknown key {k:?}")));
        }
        let mut map: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        map.extend(given.iter().map(|(k, v)| (k.clone(), v.clone())));
        let f = Fields { map: &map };

        let potential = match f.raw("potential") {
            "tilted_cubic" => PotentialKind::TiltedCubic { beta: f.f64("beta")? },
            "plateau" => PotentialKind::Plateau { lo: f.f64("plateau_lo")?, hi: f.f64("plateau_hi")?, depth: f.f64("depth")? },
            "planar_tilted" => PotentialKind::PlanarTilted {
                well_minus: f.pair("well_minus")?,
                well_plus: f.pair("well_plus")?,
                tilt: f.f64("tilt")?,
            },
            "tabulated" => {
                let path = PathBuf::from(f.raw("table"));
                if f.raw("table").is_empty() {
                    return Err(Error::Config("tabulated potential needs `table`".into()));
                }
                if !path.is_file() {
                    return Err(Error::Config(format!("potential file {} does not exist", path.display())));
                }
                PotentialKind::Tabulated { path, a_minus: f.f64("a_minus")?, a_plus: f.f64("a_plus")? }
            }
            other => return Err(Error::Config(format!("unknown potential {other:?}"))),
        };
        let scale = f.f64("scale")?;
        if !(scale > 0.0) {
            return Err(Error::Config("scale must be > 0".into()));
        }
        let grid = Grid::new(f.f64("t_min")?, f.f64("t_max")?, f.usize("n")?).map_err(|e| Error::Config(e.to_string()))?;
        let c = f.opt_f64("c")?;
        if c.is_some_and(|c| c <= 0.0) {
            return Err(Error::Config("c must be > 0".into()));
        }
        let step_rule = match f.raw("step_rule") {
            "backtracking" => StepRule::Backtracking,
            "fixed" => StepRule::Fixed { step: f.f64("step")? },
            other => return Err(Error::Config(format!("step_rule: expected backtracking or fixed, got {other:?}"))),
        };
        let minimize = MinimizeConfig {
            t_constraint: f.opt_f64("t_constraint")?,
            max_iters: f.usize("max_iters")?,
            grad_tol: f.f64("grad_tol")?,
            step_rule,
            enforce_truncation: f.bool("enforce_truncation")?,
            enforce_left_constraint: f.bool("enforce_left_constraint")?,
            enforce_right_constraint: f.bool("enforce_right_constraint")?,
            left_level: f.opt_f64("left_level")?,
            stop_below: None,
            translation_moves: f.bool("translation_moves")?,
            log_iterations: f.bool("log_iterations")?,
        };
        if !(minimize.grad_tol > 0.0) || minimize.max_iters == 0 {
            return Err(Error::Config("grad_tol and max_iters must be positive".into()));
        }
        if let Some(t) = minimize.t_constraint {
            if !(t >= 1.0 && t < grid.t_min.abs().min(grid.t_max)) {
                return Err(Error::Config(format!("t_constraint must lie in [1, min(|t_min|, t_max)), got {t}")));
            }
        }
        let c_tol = f.f64("c_tol")?;
        if !(c_tol > 0.0) {
            return Err(Error::Config("c_tol must be > 0".into()));
        }
        let c_hi = f.opt_f64("c_hi")?;
        if c_hi.is_some_and(|h| h <= c_tol) {
            return Err(Error::Config("c_hi must exceed c_tol".into()));
        }
        let scan = match (f.opt_f64("scan_lo")?, f.opt_f64("scan_hi")?) {
            (Some(lo), Some(hi)) if lo > 0.0 && hi > lo => Some((lo, hi)),
            (None, None) => None,
            _ => return Err(Error::Config("scan range needs 0 < scan_lo < scan_hi".into())),
        };
        let scan_points = f.usize("scan_points")?;
        if scan_points < 2 {
            return Err(Error::Config("scan_points must be >= 2".into()));
        }
        let shooting_config = ShootingConfig {
            dt_ode: f.f64("dt_ode")?,
            start_offset: f.f64("start_offset")?,
            c_search_max: f.f64("c_search_max")?,
            ..ShootingConfig::new(0.0)
        };
        if !(shooting_config.dt_ode > 0.0 && shooting_config.start_offset > 0.0 && shooting_config.c_search_max > 0.0) {
            return Err(Error::Config("dt_ode, start_offset and c_search_max must be positive".into()));
        }
        let shoot_tol = f.f64("shoot_tol")?;
        let pde_config = PdeConfig {
            dx: f.f64("pde_dx")?,
            dt_pde: f.f64("pde_dt")?,
            half_length: f.f64("pde_half_length")?,
            t_end: f.f64("pde_t_end")?,
            level: f.f64("pde_level")?,
            scheme: match f.raw("pde_scheme") {
                "semi_implicit" => Scheme::SemiImplicit,
                "explicit" => Scheme::Explicit,
                other => return Err(Error::Config(format!("pde_scheme: expected semi_implicit or explicit, got {other:?}"))),
            },
            record_every: 10,
            snapshot_every: f.usize("pde_snapshot_every")?,
            boundary_margin: f.f64("pde_margin")?,
        };
        if !(pde_config.dx > 0.0 && pde_config.dt_pde > 0.0 && pde_config.half_length > 0.0 && pde_config.t_end > 0.0) {
            return Err(Error::Config("pde_dx, pde_dt, pde_half_length and pde_t_end must be positive".into()));
        }
        if !(pde_config.level > 0.0 && pde_config.level < 1.0) {
            return Err(Error::Config("pde_level must lie in (0, 1)".into()));
        }
        let workers = f.usize("workers")?;
        if workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        let out_dir = PathBuf::from(f.raw("out_dir"));
        if f.raw("out_dir").is_empty() {
            return Err(Error::Config("out_dir must not be empty".into()));
        }
        let cfg = RunConfig {
            potential,
            scale,
            grid,
            c,
            minimize,
            c_tol,
            c_hi,
            max_bisections: f.usize("max_bisections")?,
            scan,
            scan_points,
            shooting: f.bool("shooting")?,
            pde: f.bool("pde")?,
            triangle: f.bool("triangle")?,
            shooting_config,
            shoot_tol,
            pde_config,
            audit_samples: f.usize("audit_samples")?,
            seed: f.u64("seed")?,
            workers,
            out_dir,
            entries: map.clone(),
        };
        // constructor preconditions are config errors too
        cfg.build_potential()?;
        Ok(cfg)
    }

    pub fn build_potential(&self) -> Result<PotentialModel> {
        let built = match &self.potential {
            PotentialKind::TiltedCubic { beta } => make_tilted_cubic(*beta),
            PotentialKind::Plateau { lo, hi, depth } => make_plateau_scalar([*lo, *hi], *depth),
            PotentialKind::PlanarTilted { well_minus, well_plus, tilt } => make_planar_tilted(*well_minus, *well_plus, *tilt),
            PotentialKind::Tabulated { path, a_minus, a_plus } => {
                let rows = read_table(path)?;
                make_tabulated(&rows, *a_minus, *a_plus)
            }
        };
        let model = built.map_err(|e| Error::Config(e.to_string()))?;
        if self.scale == 1.0 {
            Ok(model)
        } else {
            model.scaled(self.scale).map_err(|e| Error::Config(e.to_string()))
        }
    }
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))
}

fn parse_row(path: &Path, rec: &csv::StringRecord) -> Result<Vec<f64>> {
    rec.iter().map(|s| s.trim().parse::<f64>().map_err(|e| csv_err(path, format!("{s:?}: {e}")))).collect()
}

/// Tabulated potential rows `u, W, W'`, with an optional header line.
pub fn read_table(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let mut rd =
        csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_path(path).map_err(|e| csv_err(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if i == 0 && rec.get(0).is_some_and(|s| s.trim().parse::<f64>().is_err()) {
            continue;
        }
        match parse_row(path, &rec)?.as_slice() {
            [u, w, dw] => rows.push((*u, *w, *dw)),
            other => return Err(csv_err(path, format!("expected 3 columns, got {}", other.len()))),
        }
    }
    Ok(rows)
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut wr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    wr.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        wr.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    wr.flush()?;
    Ok(())
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rd.headers().map_err(|e| csv_err(path, e))?.iter().map(String::from).collect();
    let rows = rd.records().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| csv_err(path, e))?;
    Ok((header, rows))
}

/// Columns `t, u0, u1, ...`. Floats are written in shortest round-trip form.
pub fn write_profile_csv(path: &Path, profile: &Profile) -> Result<()> {
    let k = profile.dim;
    let header: Vec<String> = std::iter::once("t".to_string()).chain((0..k).map(|j| format!("u{j}"))).collect();
    let g = profile.grid;
    write_rows(
        path,
        &header,
        (0..g.n).map(|i| std::iter::once(g.t(i)).chain(profile.node(i).iter().copied()).map(|x| x.to_string()).collect()),
    )
}

/// Returns (t, values node-major, dim).
pub fn read_profile_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let (header, rows) = read_rows(path)?;
    let k = header
        .len()
        .checked_sub(1)
        .filter(|&k| k > 0)
        .ok_or_else(|| csv_err(path, "profile needs t and at least one u column"))?;
    let mut t = Vec::with_capacity(rows.len());
    let mut v = Vec::with_capacity(rows.len() * k);
    for r in &rows {
        let x = parse_row(path, r)?;
        t.push(x[0]);
        v.extend_from_slice(&x[1..]);
    }
    Ok((t, v, k))
}

pub fn write_scan_csv(path: &Path, points: &[ScanPoint]) -> Result<()> {
    let header = ["c", "m", "converged", "negative"].map(String::from);
    write_rows(
        path,
        &header,
        points.iter().map(|p| vec![p.c.to_string(), p.m.to_string(), p.converged.to_string(), p.negative.to_string()]),
    )
}

pub fn read_scan_csv(path: &Path) -> Result<Vec<ScanPoint>> {
    let (_, rows) = read_rows(path)?;
    rows.iter()
        .map(|r| {
            let num = |i: usize| r.get(i).unwrap_or("").parse::<f64>().map_err(|e| csv_err(path, e));
            let flag = |i: usize| r.get(i).unwrap_or("").parse::<bool>().map_err(|e| csv_err(path, e));
            Ok(ScanPoint { c: num(0)?, m: num(1)?, converged: flag(2)?, negative: flag(3)? })
        })
        .collect()
}

/// Two-column numeric CSV, used for front trajectories.
pub fn write_pairs_csv(path: &Path, names: [&str; 2], pairs: &[(f64, f64)]) -> Result<()> {
    write_rows(path, &names.map(String::from), pairs.iter().map(|(a, b)| vec![a.to_string(), b.to_string()]))
}

pub fn read_pairs_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let (_, rows) = read_rows(path)?;
    rows.iter()
        .map(|r| match parse_row(path, r)?.as_slice() {
            [a, b] => Ok((*a, *b)),
            other => Err(csv_err(path, format!("expected 2 columns, got {}", other.len()))),
        })
        .collect()
}

pub fn write_log_csv(path: &Path, log: &[IterRecord]) -> Result<()> {
    let header = ["iter", "energy", "grad_norm", "step"].map(String::from);
    write_rows(
        path,
        &header,
        log.iter().map(|r| vec![r.iter.to_string(), r.energy.to_string(), r.grad_norm.to_string(), r.step.to_string()]),
    )
}

/// Columns `x, w0, ...` of a parabolic state.
pub fn write_state_csv(path: &Path, x: &[f64], state: &[f64], dim: usize) -> Result<()> {
    let header: Vec<String> = std::iter::once("x".to_string()).chain((0..dim).map(|j| format!("w{j}"))).collect();
    write_rows(
        path,
        &header,
        x.iter().enumerate().map(|(i, xi)| {
            std::iter::once(*xi).chain(state[i * dim..(i + 1) * dim].iter().copied()).map(|v| v.to_string()).collect()
        }),
    )
}

/// `name, value` rows; tuple and table entries get `_i` / `_i_j` suffixes.
pub fn write_constants_csv(path: &Path, constants: &StructuralConstants) -> Result<()> {
    fn flatten(prefix: &str, v: &serde_json::Value, out: &mut Vec<Vec<String>>) {
        match v {
            serde_json::Value::Array(items) => {
                for (i, it) in items.iter().enumerate() {
                    flatten(&format!("{prefix}_{i}"), it, out);
                }
            }
            other => out.push(vec![prefix.to_string(), other.to_string()]),
        }
    }
    let mut rows = Vec::new();
    if let serde_json::Value::Object(map) = serde_json::to_value(constants)? {
        for (k, v) in &map {
            flatten(k, v, &mut rows);
        }
    }
    write_rows(path, &["name", "value"].map(String::from), rows.into_iter())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub constants: Option<StructuralConstants>,
    pub results: BTreeMap<String, serde_json::Value>,
    pub artifacts: Vec<Artifact>,
    pub status: String,
    pub error: Option<ErrorRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn unix_now() -> f64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> RunManifest {
        RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix: unix_now(),
            finished_unix: 0.0,
            seed: config.seed,
            config: config.entries.clone(),
            constants: None,
            results: BTreeMap::new(),
            artifacts: Vec::new(),
            status: "running".into(),
            error: None,
        }
    }

    pub fn record<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.results.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Checksums `dir/file` and lists it.
    pub fn add_artifact(&mut self, dir: &Path, file: &str) -> Result<()> {
        let path = dir.join(file);
        let bytes = fs::metadata(&path)?.len();
        self.artifacts.push(Artifact { file: file.into(), sha256: sha256_file(&path)?, bytes });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }

    pub fn read(dir: &Path) -> Result<RunManifest> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }
}

/// Problems found when re-checking the artifacts listed in a manifest; empty means valid.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let m = RunManifest::read(dir)?;
    let mut problems = Vec::new();
    for a in &m.artifacts {
        let path = dir.join(&a.file);
        if !path.is_file() {
            problems.push(format!("missing {}", a.file));
        } else if sha256_file(&path)? != a.sha256 {
            problems.push(format!("checksum mismatch {}", a.file));
        }
    }
    Ok(problems)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_comments_and_errors() {
        let m = parse_kv("# header\nbeta = 0.3  # tilt\n\n n=11\n").unwrap();
        assert_eq!(m["beta"], "0.3");
        assert_eq!(m["n"], "11");
        assert!(parse_kv("beta 0.3").is_err());
        assert!(parse_kv("a=1\na=2").is_err());
    }

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::from_entries(&BTreeMap::new()).unwrap();
        assert_eq!(c.potential, PotentialKind::TiltedCubic { beta: 0.25 });
        assert_eq!(c.grid.n, 4001);
        assert!(c.c.is_none());
        assert_eq!(c.entries.len(), KEYS.len());
    }

    #[test]
    fn config_errors() {
        let bad = |k: &str, v: &str| {
            let m = BTreeMap::from([(k.to_string(), v.to_string())]);
            matches!(RunConfig::from_entries(&m), Err(Error::Config(_)))
        };
        assert!(bad("bogus", "1"));
        assert!(bad("beta", "0.7"));
        assert!(bad("n", "-3"));
        assert!(bad("step_rule", "newton"));
        assert!(bad("potential", "ring"));
        assert!(bad("t_constraint", "50"));
        let m = BTreeMap::from([
            ("potential".to_string(), "tabulated".to_string()),
            ("table".to_string(), "/nonexistent/w.csv".to_string()),
        ]);
        let e = RunConfig::from_entries(&m).unwrap_err();
        assert!(e.to_string().contains("does not exist"));
    }

    #[test]
    fn manifest_detects_missing_and_changed_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::from_entries(&BTreeMap::new()).unwrap();
        let mut m = RunManifest::new("solve", &cfg);
        for f in ["a.csv", "b.csv"] {
            fs::write(dir.path().join(f), f).unwrap();
            m.add_artifact(dir.path(), f).unwrap();
        }
        m.write(dir.path()).unwrap();
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        fs::remove_file(dir.path().join("a.csv")).unwrap();
        fs::write(dir.path().join("b.csv"), "changed").unwrap();
        let p = verify_manifest(dir.path()).unwrap();
        assert_eq!(p, vec!["missing a.csv".to_string(), "checksum mismatch b.csv".to_string()]);
    }
}
