//! Run configuration and the small value parsers behind the CLI flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::Serialize;
use topoclust::{Family, TimeBudget};

/// Parameters of the built-in Gaussian-bump ensemble generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub n_members: usize,
    pub n_patterns: usize,
    pub dims: [usize; 3],
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_members: 30,
            n_patterns: 3,
            dims: [64, 64, 1],
            noise: 0.05,
        }
    }
}

/// `gaussians[:key=value,...]` with keys `n`, `patterns`, `grid` (`NXxNY[xNZ]`)
/// and `noise`.
impl FromStr for SynthSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        ensure!(kind == "gaussians", "unknown generator '{kind}', expected 'gaussians'");
        let mut spec = SynthSpec::default();
        for item in args.split(',').filter(|a| !a.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("generator option '{item}' is not key=value"))?;
            let bad = || format!("invalid value '{value}' for generator option '{key}'");
            match key.trim() {
                "n" => spec.n_members = value.parse().with_context(bad)?,
                "patterns" => spec.n_patterns = value.parse().with_context(bad)?,
                "noise" => spec.noise = value.parse().with_context(bad)?,
                "grid" => {
                    let parts: Vec<usize> = value
                        .split('x')
                        .map(str::parse)
                        .collect::<Result<_, _>>()
                        .with_context(bad)?;
                    spec.dims = match parts[..] {
                        [x, y] => [x, y, 1],
                        [x, y, z] => [x, y, z],
                        _ => bail!(bad()),
                    };
                }
                other => bail!("unknown generator option '{other}'"),
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for SynthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.dims;
        write!(
            f,
            "gaussians:n={},patterns={},grid={x}x{y}x{z},noise={}",
            self.n_members, self.n_patterns, self.noise
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Path(PathBuf),
    Synth(SynthSpec),
}

impl fmt::Display for InputSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSource::Path(p) => write!(f, "{}", p.display()),
            InputSource::Synth(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySelection {
    Minima,
    #[default]
    Maxima,
    Both,
}

impl FamilySelection {
    pub fn families(self) -> Vec<Family> {
        match self {
            FamilySelection::Minima => vec![Family::Minima],
            FamilySelection::Maxima => vec![Family::Maxima],
            FamilySelection::Both => vec![Family::Minima, Family::Maxima],
        }
    }
}

/// Points with persistence at or below the threshold are discarded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Fraction of each member's scalar range.
    Auto(f64),
    Absolute(f64),
}

pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.01;

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Auto(DEFAULT_THRESHOLD_FRACTION)
    }
}

/// `auto`, `auto:FRACTION` or an absolute value.
impl FromStr for Threshold {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = match s.strip_prefix("auto") {
            Some("") => Threshold::default(),
            Some(rest) => {
                let frac = rest
                    .strip_prefix(':')
                    .ok_or_else(|| anyhow!("expected 'auto:FRACTION'"))?;
                Threshold::Auto(frac.parse().with_context(|| format!("invalid fraction '{frac}'"))?)
            }
            None => Threshold::Absolute(s.parse().with_context(|| format!("invalid threshold '{s}'"))?),
        };
        let (Threshold::Auto(v) | Threshold::Absolute(v)) = t;
        ensure!(
            v.is_finite() && v >= 0.0,
            "persistence threshold must be finite and >= 0"
        );
        Ok(t)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Auto(frac) => write!(f, "auto:{frac}"),
            Threshold::Absolute(v) => write!(f, "{v}"),
        }
    }
}

/// Effective dimension of diagram space used by the information criteria.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Dim {
    #[default]
    Auto,
    Fixed(f64),
}

impl FromStr for Dim {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Dim::Auto);
        }
        let d: f64 = s.parse().with_context(|| format!("invalid dimension '{s}'"))?;
        ensure!(d.is_finite() && d > 0.0, "dimension must be positive");
        Ok(Dim::Fixed(d))
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Auto => write!(f, "auto"),
            Dim::Fixed(d) => write!(f, "{d}"),
        }
    }
}

/// Worker thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

impl FromStr for Threads {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        let n: usize = s.parse().with_context(|| format!("invalid thread count '{s}'"))?;
        ensure!(n > 0, "thread count must be positive");
        Ok(Threads::Count(n))
    }
}

/// `500ms`, `10s`, `2m`, `1h`, a bare number of seconds, or `none` for no
/// limit.
pub fn parse_budget(s: &str) -> Result<TimeBudget> {
    let s = s.trim();
    if matches!(s, "none" | "inf" | "unbounded") {
        return Ok(TimeBudget::Unbounded);
    }
    let split = s.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(s.len());
    let (number, unit) = s.split_at(split);
    let value: f64 = number.parse().with_context(|| format!("invalid duration '{s}'"))?;
    let scale = match unit {
        "" | "s" => 1.0,
        "ms" => 1e-3,
        "us" => 1e-6,
        "m" | "min" => 60.0,
        "h" => 3600.0,
        _ => bail!("unknown duration unit '{unit}' in '{s}'"),
    };
    TimeBudget::from_secs_f64(value * scale).map_err(Into::into)
}

pub fn budget_seconds(budget: TimeBudget) -> Option<f64> {
    budget.max_duration().map(|d: Duration| d.as_secs_f64())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSource,
    pub family: FamilySelection,
    pub k_min: usize,
    pub k_max: usize,
    /// Budget of each k's clustering.
    pub t_max: TimeBudget,
    pub alpha: f64,
    pub threshold: Threshold,
    pub dim: Dim,
    pub include_global_pair: bool,
    pub seed: u64,
    pub threads: Threads,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn new(input: InputSource, output: PathBuf) -> Self {
        Self {
            input,
            family: FamilySelection::default(),
            k_min: 1,
            k_max: 10,
            t_max: TimeBudget::Unbounded,
            alpha: 0.0,
            threshold: Threshold::default(),
            dim: Dim::default(),
            include_global_pair: true,
            seed: 0,
            threads: Threads::default(),
            output,
        }
    }

    /// Checks everything that does not depend on the loaded ensemble.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.k_min >= 1, "--kmin must be at least 1");
        ensure!(
            self.k_min <= self.k_max,
            "--kmin ({}) must not exceed --kmax ({})",
            self.k_min,
            self.k_max
        );
        ensure!((0.0..=1.0).contains(&self.alpha), "--alpha must lie in [0, 1]");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_specs() {
        assert_eq!("gaussians".parse::<SynthSpec>().unwrap(), SynthSpec::default());
        let s: SynthSpec = "gaussians:n=12,patterns=4,grid=32x16,noise=0".parse().unwrap();
        assert_eq!(
            s,
            SynthSpec {
                n_members: 12,
                n_patterns: 4,
                dims: [32, 16, 1],
                noise: 0.0
            }
        );
        assert_eq!(s.to_string().parse::<SynthSpec>().unwrap(), s);
        for bad in [
            "blobs",
            "gaussians:n",
            "gaussians:n=x",
            "gaussians:grid=3",
            "gaussians:colour=red",
        ] {
            assert!(bad.parse::<SynthSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn durations() {
        let secs = |s: &str| budget_seconds(parse_budget(s).unwrap());
        assert_eq!(secs("10s"), Some(10.0));
        assert_eq!(secs("500ms"), Some(0.5));
        assert_eq!(secs("0.5"), Some(0.5));
        assert_eq!(secs("2m"), Some(120.0));
        assert_eq!(secs("none"), None);
        for bad in ["", "0s", "-1s", "10 parsecs", "s"] {
            assert!(parse_budget(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn thresholds_dims_threads() {
        assert_eq!("auto".parse::<Threshold>().unwrap(), Threshold::Auto(0.01));
        assert_eq!("auto:0.05".parse::<Threshold>().unwrap(), Threshold::Auto(0.05));
        assert_eq!("0.3".parse::<Threshold>().unwrap(), Threshold::Absolute(0.3));
        assert!("-1".parse::<Threshold>().is_err());
        assert!("autox".parse::<Threshold>().is_err());
        assert_eq!("auto".parse::<Dim>().unwrap(), Dim::Auto);
        assert_eq!("4".parse::<Dim>().unwrap(), Dim::Fixed(4.0));
        assert!("0".parse::<Dim>().is_err());
        assert_eq!("3".parse::<Threads>().unwrap(), Threads::Count(3));
        assert!("0".parse::<Threads>().is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::new(InputSource::Synth(SynthSpec::default()), "out".into());
        c.validate().unwrap();
        c.k_min = 5;
        c.k_max = 2;
        assert!(c.validate().is_err());
        c.k_min = 0;
        assert!(c.validate().is_err());
        c.k_min = 1;
        c.k_max = 3;
        c.alpha = 1.5;
        assert!(c.validate().is_err());
    }
}
