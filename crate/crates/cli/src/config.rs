//! Run configuration: sectioned `key = value` files and their fully
//! resolved JSON form.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use ini::Ini;
use nematic_core::initial::{build, InitialKind, InitialSpec};
use nematic_core::verification::{CompatibilityMode, Horizon};
use nematic_core::{Boundary, DtPolicy, Error, FlowState, Grid, Result, SolverConfig, Viscosity};
use serde::{Deserialize, Serialize};

/// Density floor applied when the initial density touches zero, relative to
/// the upper bound `ρ̄`.
pub const VACUUM_FLOOR_FRACTION: f64 = 1e-3;
pub const DEFAULT_SNAPSHOT_EVERY: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub length: Vec<f64>,
    pub boundary: Boundary,
}

impl GridSection {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, &self.cells, &self.length, self.boundary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub horizon: Horizon,
    /// Snapshot cadence in steps; the first and last states are always kept.
    pub snapshot_every: usize,
}

/// Everything a run depends on, with every default made explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridSection,
    pub physics: SolverConfig,
    pub initial: InitialSpec,
    pub compatibility: CompatibilityMode,
    pub run: RunSection,
}

fn err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Real number, optionally followed by `pi` (`2pi`, `0.5pi`, `pi`).
fn parse_real(key: &str, s: &str) -> Result<f64> {
    let t = s.trim();
    let v = match t.strip_suffix("pi") {
        Some("") => PI,
        Some(m) => m.trim_end_matches('*').trim().parse::<f64>().map(|m| m * PI).ok().unwrap_or(f64::NAN),
        None => t.parse::<f64>().unwrap_or(f64::NAN),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err(format!("`{key}` expects a finite number, got `{s}`")))
    }
}

fn parse_uint(key: &str, s: &str) -> Result<u64> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| err(format!("`{key}` expects a non-negative integer, got `{s}`")))
}

fn parse_list<T>(key: &str, s: &str, one: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(|p| one(key, p)).collect()
}

/// Per-axis value: one entry broadcast to `dim`, or exactly `dim` entries.
fn per_axis<T: Clone>(key: &str, v: Vec<T>, dim: usize) -> Result<Vec<T>> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); dim]),
        n if n == dim => Ok(v),
        n => Err(err(format!("`{key}` needs 1 or {dim} entries, got {n}"))),
    }
}

/// Keys of one section, consumed as they are read so that leftovers can be
/// reported as unknown.
struct Section {
    name: &'static str,
    keys: BTreeMap<String, String>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(String, String)> {
        self.keys
            .remove(key)
            .map(|v| (format!("{}.{key}", self.name), v))
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|(k, v)| parse_real(&k, &v)).transpose()
    }

    fn finish(self) -> Result<()> {
        match self.keys.keys().next() {
            Some(k) => Err(err(format!("unknown key `{k}` in section [{}]", self.name))),
            None => Ok(()),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read config `{}`: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sectioned text, or JSON holding either a resolved config or a run
    /// summary that embeds one under `config`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let v: serde_json::Value =
                serde_json::from_str(text).map_err(|e| err(format!("invalid JSON config: {e}")))?;
            let inner = v.get("config").cloned().unwrap_or(v);
            let cfg: RunConfig =
                serde_json::from_value(inner).map_err(|e| err(format!("invalid resolved config: {e}")))?;
            cfg.validate()?;
            return Ok(cfg);
        }
        Self::parse_ini(text)
    }

    pub fn parse_ini(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| err(format!("malformed config: {e}")))?;
        let mut sections: BTreeMap<&'static str, Section> = ["grid", "physics", "initial", "run"]
            .into_iter()
            .map(|n| {
                (
                    n,
                    Section {
                        name: n,
                        keys: BTreeMap::new(),
                    },
                )
            })
            .collect();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    return Err(err("keys must appear inside a [grid], [physics], [initial] or [run] section"));
                }
                continue;
            };
            let sec = sections
                .get_mut(name.trim())
                .ok_or_else(|| err(format!("unknown section [{name}]")))?;
            for (k, v) in props.iter() {
                if sec.keys.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                    return Err(err(format!("duplicate key `{k}` in [{name}]")));
                }
            }
        }
        let mut take = |n: &str| sections.remove(n).expect("section list is fixed");
        let (mut g, mut p, mut i, mut r) = (take("grid"), take("physics"), take("initial"), take("run"));

        let dim = g.take("dim").map(|(k, v)| parse_uint(&k, &v)).transpose()?.unwrap_or(2) as usize;
        if dim != 2 && dim != 3 {
            return Err(err(format!("grid.dim must be 2 or 3, got {dim}")));
        }
        let (ck, cv) = g.take("cells").ok_or_else(|| err("grid.cells is required"))?;
        let cells = per_axis(&ck, parse_list(&ck, &cv, |k, s| parse_uint(k, s).map(|n| n as usize))?, dim)?;
        let length = match g.take("length") {
            Some((k, v)) => per_axis(&k, parse_list(&k, &v, parse_real)?, dim)?,
            None => vec![1.0; dim],
        };
        let boundary = match g.take("boundary").map(|(_, v)| v) {
            None => Boundary::Periodic,
            Some(v) => match v.as_str() {
                "periodic" => Boundary::Periodic,
                "box" | "dirichlet_box" => Boundary::DirichletBox,
                _ => return Err(err(format!("grid.boundary must be `periodic` or `box`, got `{v}`"))),
            },
        };
        g.finish()?;
        let grid = GridSection {
            dim,
            cells,
            length,
            boundary,
        };

        let mut physics = SolverConfig::default();
        for (key, slot) in [
            ("nu", &mut physics.nu),
            ("lambda", &mut physics.lambda),
            ("gamma", &mut physics.gamma),
            ("unit_tol", &mut physics.unit_tol),
            ("poisson_tol", &mut physics.poisson_tol),
            ("eps0", &mut physics.eps0),
            ("blowup_cap", &mut physics.blowup_cap),
        ] {
            if let Some(v) = p.real(key)? {
                *slot = v;
            }
        }
        physics.div_tol = p.real("div_tol")?;
        let rho_floor = p.real("rho_floor")?;
        if let Some((k, v)) = p.take("d_star") {
            let d = parse_list(&k, &v, parse_real)?;
            physics.d_star = d
                .try_into()
                .map_err(|_| err("physics.d_star needs exactly 3 components"))?;
        }
        if let Some((_, v)) = p.take("viscosity") {
            physics.viscosity = match v.as_str() {
                "explicit" => Viscosity::Explicit,
                "implicit" => Viscosity::Implicit,
                _ => return Err(err(format!("physics.viscosity must be `explicit` or `implicit`, got `{v}`"))),
            };
        }
        p.finish()?;

        let mut initial = InitialSpec::default();
        if let Some((_, v)) = i.take("kind") {
            initial.kind = v.parse::<InitialKind>()?;
        }
        if let Some(v) = i.real("amplitude")? {
            initial.amplitude = v;
        }
        if let Some(v) = i.real("rho_bar")? {
            initial.rho_bar = v;
        }
        if let Some((k, v)) = i.take("wavenumber") {
            initial.wavenumber = u32::try_from(parse_uint(&k, &v)?).map_err(|_| err("initial.wavenumber is too large"))?;
        }
        if let Some((k, v)) = i.take("seed") {
            initial.seed = parse_uint(&k, &v)?;
        }
        let compatibility = match i.take("compatibility") {
            Some((_, v)) => v.parse()?,
            None => CompatibilityMode::Reject,
        };
        i.finish()?;

        let fixed_dt = r.real("dt")?;
        let safety = r.real("cfl_safety")?;
        physics.dt_policy = match (fixed_dt, safety) {
            (Some(_), Some(_)) => return Err(err("run.dt and run.cfl_safety are mutually exclusive")),
            (Some(dt), None) => DtPolicy::Fixed(dt),
            (None, Some(s)) => DtPolicy::Cfl { safety: s },
            (None, None) => SolverConfig::default().dt_policy,
        };
        let t_end = r.real("t_end")?;
        let steps = r.take("steps").map(|(k, v)| parse_uint(&k, &v)).transpose()?;
        let horizon = match (t_end, steps) {
            (Some(t), None) => Horizon::Time(t),
            (None, Some(n)) => Horizon::Steps(n as usize),
            _ => return Err(err("exactly one of run.t_end and run.steps is required")),
        };
        let snapshot_every = match r.take("snapshot_every") {
            Some((k, v)) => parse_uint(&k, &v)? as usize,
            None => DEFAULT_SNAPSHOT_EVERY,
        };
        r.finish()?;

        let mut cfg = RunConfig {
            grid,
            physics,
            initial,
            compatibility,
            run: RunSection {
                horizon,
                snapshot_every,
            },
        };
        cfg.physics.rho_floor = match rho_floor {
            Some(f) => f,
            None => {
                let s = cfg.initial_state_unchecked()?;
                if s.rho.min() <= 0.0 {
                    VACUUM_FLOOR_FRACTION * cfg.initial.rho_bar
                } else {
                    0.0
                }
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn initial_state_unchecked(&self) -> Result<FlowState> {
        let grid = self.grid.grid()?;
        build(&self.initial, &grid, self.physics.d_star)
    }

    /// Grid sanity, positive constants, `|d*| = 1`, horizon and catalogue.
    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.grid.grid()?;
        match self.run.horizon {
            Horizon::Time(t) if !(t.is_finite() && t > 0.0) => {
                return Err(err(format!("run.t_end must be positive, got {t}")));
            }
            Horizon::Steps(0) => return Err(err("run.steps must be positive")),
            _ => {}
        }
        if self.run.snapshot_every == 0 {
            return Err(err("run.snapshot_every must be positive"));
        }
        self.initial_state_unchecked()?;
        Ok(())
    }

    pub fn initial_state(&self) -> Result<FlowState> {
        self.initial_state_unchecked()
    }

    /// Sectioned text that parses back to `self` exactly.
    pub fn to_ini(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let p = &self.physics;
        let mut s = String::new();
        s += "[grid]\n";
        s += &format!("dim = {}\n", self.grid.dim);
        s += &format!("cells = {}\n", join(self.grid.cells.iter().map(|c| c.to_string()).collect()));
        s += &format!("length = {}\n", join(self.grid.length.iter().map(|l| format!("{l:?}")).collect()));
        s += &format!("boundary = {}\n\n[physics]\n", self.grid.boundary.as_str());
        for (k, v) in [
            ("nu", p.nu),
            ("lambda", p.lambda),
            ("gamma", p.gamma),
            ("rho_floor", p.rho_floor),
            ("unit_tol", p.unit_tol),
            ("poisson_tol", p.poisson_tol),
            ("eps0", p.eps0),
            ("blowup_cap", p.blowup_cap),
        ] {
            s += &format!("{k} = {v:?}\n");
        }
        if let Some(t) = p.div_tol {
            s += &format!("div_tol = {t:?}\n");
        }
        s += &format!("d_star = {}\n", join(p.d_star.iter().map(|v| format!("{v:?}")).collect()));
        s += &format!(
            "viscosity = {}\n\n[initial]\n",
            match p.viscosity {
                Viscosity::Explicit => "explicit",
                Viscosity::Implicit => "implicit",
            }
        );
        let i = &self.initial;
        s += &format!("kind = {}\n", i.kind.as_str());
        s += &format!("amplitude = {:?}\nrho_bar = {:?}\n", i.amplitude, i.rho_bar);
        s += &format!("wavenumber = {}\nseed = {}\n", i.wavenumber, i.seed);
        s += &format!(
            "compatibility = {}\n\n[run]\n",
            match self.compatibility {
                CompatibilityMode::Reject => "reject",
                CompatibilityMode::Warn => "warn",
            }
        );
        match p.dt_policy {
            DtPolicy::Fixed(dt) => s += &format!("dt = {dt:?}\n"),
            DtPolicy::Cfl { safety } => s += &format!("cfl_safety = {safety:?}\n"),
        }
        match self.run.horizon {
            Horizon::Time(t) => s += &format!("t_end = {t:?}\n"),
            Horizon::Steps(n) => s += &format!("steps = {n}\n"),
        }
        s += &format!("snapshot_every = {}\n", self.run.snapshot_every);
        s
    }
}
