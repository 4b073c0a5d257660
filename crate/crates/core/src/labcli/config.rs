//! `key = value` scenario files with `#` comments.

use std::collections::BTreeMap;
use std::fmt;

use crate::interface::{IterationConfig, Variant};
use crate::mesh::{constant_source, piecewise_diffusion, ProblemSpec, Theta};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Converge,
    Equivalence,
    Spectrum,
    Coercivity,
    Mms,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "converge" => Scenario::Converge,
            "equivalence" => Scenario::Equivalence,
            "spectrum" => Scenario::Spectrum,
            "coercivity" => Scenario::Coercivity,
            "mms" => Scenario::Mms,
            other => return Err(Error::Config(format!("unknown scenario '{other}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Converge => "converge",
            Scenario::Equivalence => "equivalence",
            Scenario::Spectrum => "spectrum",
            Scenario::Coercivity => "coercivity",
            Scenario::Mms => "mms",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsSweep {
    Space,
    Time,
}

/// Recognized keys with their defaults (the desk problem).
pub const KEYS: &[(&str, &str, &str)] = &[
    ("scenario", "converge", "converge | equivalence | spectrum | coercivity | mms"),
    ("dimension", "2", "1 or 2"),
    ("lx", "1", "domain length in x"),
    ("ly", "1", "domain length in y (2D)"),
    ("nx", "16", "cells in x"),
    ("ny", "16", "cells in y (2D)"),
    ("gamma_x", "0.5", "interface position"),
    ("alpha_left", "1", "diffusion left of the interface"),
    ("alpha_right", "3", "diffusion right of the interface"),
    ("source", "1", "constant source f"),
    ("t_final", "1", "final time T"),
    ("n_steps", "16", "time steps N_t"),
    ("theta", "1", "1 (implicit Euler) or 0.5 (Crank-Nicolson)"),
    ("s", "1", "Robin parameter"),
    ("tol", "1e-10", "stopping tolerance on the H-norm increment"),
    ("max_iter", "2000", "iteration cap"),
    ("variant", "pr", "pr (interface Peaceman-Rachford) or pde (Robin-Robin sweep)"),
    ("s_list", "0.1,1,10", "Robin parameters for the spectrum scenario"),
    ("levels", "8,16,32", "mms refinement levels: nx (space) or N_t (time)"),
    ("mms_sweep", "space", "space or time"),
    ("subdomain", "1", "subdomain of the coercivity scenario (1 or 2)"),
    ("samples", "50", "random fields of the coercivity scenario"),
    ("phi", "0.1", "angle of the coercivity multiplier"),
    ("pad", "8", "padding factor of the temporal window"),
    ("seed", "0", "seed of the random generator"),
    ("output", "", "file name of the CSV (default <scenario>.csv)"),
];

#[derive(Clone)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub spec: ProblemSpec,
    pub iteration: IterationConfig,
    pub s_list: Vec<f64>,
    pub levels: Vec<usize>,
    pub mms_sweep: MmsSweep,
    pub subdomain: usize,
    pub samples: usize,
    pub phi: f64,
    pub pad: usize,
    pub seed: u64,
    pub output: String,
    values: BTreeMap<String, String>,
}

impl fmt::Debug for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScenarioConfig").field("values", &self.values).finish()
    }
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let out: Vec<T> = v.split(',').map(|x| number(key, x.trim())).collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(out)
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.iter().any(|(name, _, _)| *name == k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", lineno + 1)));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
        }
        for (k, d, _) in KEYS {
            values.entry(k.to_string()).or_insert_with(|| d.to_string());
        }
        Self::from_values(values)
    }

    fn from_values(values: BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| values[k].as_str();
        let scenario = Scenario::parse(get("scenario"))?;
        let gamma_x: f64 = number("gamma_x", get("gamma_x"))?;
        let alpha = [number::<f64>("alpha_left", get("alpha_left"))?, number::<f64>("alpha_right", get("alpha_right"))?];
        let theta = Theta::from_value(number("theta", get("theta"))?).map_err(|e| Error::Config(e.to_string()))?;
        let spec = ProblemSpec {
            dimension: number("dimension", get("dimension"))?,
            lx: number("lx", get("lx"))?,
            ly: number("ly", get("ly"))?,
            nx: number("nx", get("nx"))?,
            ny: number("ny", get("ny"))?,
            gamma_x,
            diffusion: piecewise_diffusion(gamma_x, alpha[0], alpha[1]),
            source: constant_source(number("source", get("source"))?),
            t_final: number("t_final", get("t_final"))?,
            n_steps: number("n_steps", get("n_steps"))?,
            theta,
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !alpha.iter().all(|a| *a > 0.0 && a.is_finite()) {
            return Err(Error::Config("diffusion must be positive".into()));
        }
        let variant = match get("variant") {
            "pr" => Variant::PrInterface,
            "pde" => Variant::RrPde,
            other => return Err(Error::Config(format!("variant: unknown '{other}'"))),
        };
        let iteration =
            IterationConfig::new(number("s", get("s"))?, number("tol", get("tol"))?, number("max_iter", get("max_iter"))?, variant);
        iteration.validate().map_err(|e| Error::Config(e.to_string()))?;
        let s_list: Vec<f64> = list("s_list", get("s_list"))?;
        if s_list.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("s_list: values must be positive".into()));
        }
        let levels: Vec<usize> = list("levels", get("levels"))?;
        if levels.iter().any(|&l| l < 2) {
            return Err(Error::Config("levels: values must be at least 2".into()));
        }
        let mms_sweep = match get("mms_sweep") {
            "space" => MmsSweep::Space,
            "time" => MmsSweep::Time,
            other => return Err(Error::Config(format!("mms_sweep: unknown '{other}'"))),
        };
        let subdomain: usize = number("subdomain", get("subdomain"))?;
        if !(1..=2).contains(&subdomain) {
            return Err(Error::Config("subdomain must be 1 or 2".into()));
        }
        let samples: usize = number("samples", get("samples"))?;
        let phi: f64 = number("phi", get("phi"))?;
        if !(phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config("phi must lie in (0, pi/2)".into()));
        }
        let pad: usize = number("pad", get("pad"))?;
        if pad < 4 {
            return Err(Error::Config("pad must be at least 4".into()));
        }
        let output = match get("output") {
            "" => format!("{}.csv", scenario.name()),
            name => name.to_string(),
        };
        Ok(ScenarioConfig {
            scenario,
            spec,
            iteration,
            s_list,
            levels,
            mms_sweep,
            subdomain: subdomain - 1,
            samples,
            phi,
            pad,
            seed: number("seed", get("seed"))?,
            output,
            values,
        })
    }

    /// Overrides the seed, keeping the echo in sync.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.values.insert("seed".into(), seed.to_string());
        self
    }

    /// Every key with its effective value, in key order; parsing this text
    /// reproduces the configuration.
    pub fn echo(&self) -> Vec<String> {
        self.values.iter().map(|(k, v)| format!("{k}={v}")).collect()
    }
}

/// Key reference for `--help`.
pub fn key_help() -> String {
    let mut out = String::from("config keys (key=value, '#' starts a comment):\n");
    for (k, d, help) in KEYS {
        out.push_str(&format!("  {k:<12} {help} [default: {d}]\n"));
    }
    out
}
