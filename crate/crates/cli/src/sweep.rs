//! Amplitude sweep: scale the initial data, run each amplitude to the
//! configured horizon, tabulate smallness against blow-up.

use std::io::Write;

use nematic_core::parallel::parallel_map;
use nematic_core::verification::{config_hash, TableWriter};
use nematic_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::runner::{execute, RunStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub c0: f64,
    pub h1_level: f64,
    pub smallness: String,
    pub max_e1: f64,
    pub blew_up: bool,
}

/// Comma separated reals, strictly increasing.
pub fn parse_amplitudes(s: &str) -> Result<Vec<f64>> {
    let a: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("amplitude `{p}` is not a finite number")))
        })
        .collect::<Result<_>>()?;
    check_monotone(&a)?;
    Ok(a)
}

fn check_monotone(a: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Config("the amplitude grid is empty".into()));
    }
    if let Some(w) = a.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!(
            "the amplitude grid must be strictly increasing; {} is followed by {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// One run per amplitude on up to `threads` workers; rows in amplitude order.
/// Runtime failures other than blow-up abort the sweep.
pub fn sweep(cfg: &RunConfig, amplitudes: &[f64], threads: usize) -> Result<Vec<SweepRow>> {
    check_monotone(amplitudes)?;
    let results = parallel_map(amplitudes, threads, |&a| {
        let mut c = cfg.clone();
        c.initial.amplitude = a;
        let s = execute(&c, None)?;
        if let (RunStatus::Failed, Some(f)) = (s.status, &s.failure) {
            return Err(Error::InternalScheme(format!("amplitude {a}: {f}")));
        }
        Ok(SweepRow {
            amplitude: a,
            c0: s.smallness.c0,
            h1_level: s.smallness.h1_level,
            smallness: s.smallness.verdict,
            max_e1: s.max_e1,
            blew_up: s.status == RunStatus::Blowup,
        })
    });
    results.into_iter().collect()
}

/// CSV with a `# config_hash=...` metadata line.
pub fn write_table<W: Write>(w: W, cfg: &RunConfig, rows: &[SweepRow]) -> Result<W> {
    let meta = [
        ("table", "sweep".to_string()),
        ("config_hash", config_hash(cfg)?),
        ("eps0", format!("{:?}", cfg.physics.eps0)),
        ("horizon", format!("{:?}", cfg.run.horizon)),
    ];
    let mut t = TableWriter::new(w, &meta)?;
    for r in rows {
        t.row(r)?;
    }
    t.finish()
}
