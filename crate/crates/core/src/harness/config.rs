//! Plain-text scenario files.
//!
//! ```text
//! # basin-metric-lab v1
//! numerator = 1; 0; 1
//! scenario = basin-of-infinity
//! depth = 12
//! ```
//!
//! One `key = value` per line, `#` starts a comment. Complex numbers are
//! written `re,im` (or just `re`), `inf` is the point at infinity and
//! coefficient lists are ascending and separated by `;`.

use crate::grid::GridSpec;
use crate::orbit::DEFAULT_NODE_BUDGET;
use crate::{Complex64, Point, RationalMap64, FORMAT_HEADER};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {key}: {message}")]
    Parse { line: usize, key: String, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// The immediate basin of a finite attracting point.
    FiniteBasin,
    /// Basin of infinity of a polynomial, with the annulus coverage check.
    BasinOfInfinity,
    /// The largest components of the basin.
    PerComponent,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::FiniteBasin => "finite-basin",
            Scenario::BasinOfInfinity => "basin-of-infinity",
            Scenario::PerComponent => "per-component",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AttractorChoice {
    /// First attracting fixed point in the map's fixed-point order
    /// (infinity for the basin-of-infinity scenario).
    Auto,
    Explicit(Point),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasePolicy {
    /// The attracting point itself when it has another preimage in its
    /// immediate basin, otherwise `Offset(0.1)`.
    Default,
    FixedPoint,
    /// Chart offset of this length towards the neighbour cell farthest from
    /// the basin boundary.
    Offset(f64),
    Explicit(Point),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub numerator: Vec<Complex64>,
    pub denominator: Vec<Complex64>,
    pub attracting_point: AttractorChoice,
    pub base_point: BasePolicy,
    pub scenario: Scenario,
    pub grid: GridSpec,
    pub depth: usize,
    pub sample_count: usize,
    pub sample_seed: u64,
    /// Components studied by the per-component scenario.
    pub components: usize,
    pub n_max: usize,
    /// Outer Green level; `None` picks one away from the critical levels.
    pub t0: Option<f64>,
    pub node_budget: usize,
    /// Extra resolutions rerun for the resolution series.
    pub resolution_series: Vec<usize>,
    pub output: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            numerator: vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            denominator: vec![Complex64::new(1.0, 0.0)],
            attracting_point: AttractorChoice::Auto,
            base_point: BasePolicy::Default,
            scenario: Scenario::FiniteBasin,
            grid: GridSpec::new(512),
            depth: 10,
            sample_count: 200,
            sample_seed: 1,
            components: 10,
            n_max: 6,
            t0: None,
            node_budget: DEFAULT_NODE_BUDGET,
            resolution_series: Vec::new(),
            output: PathBuf::from("out"),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"))
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.trim().parse::<usize>().map_err(|e| format!("bad integer {s:?}: {e}"))
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let mut parts = s.split(',');
    let re = parse_f64(parts.next().unwrap_or(""))?;
    let im = parts.next().map(parse_f64).transpose()?.unwrap_or(0.0);
    if parts.next().is_some() {
        return Err(format!("expected re,im, got {s:?}"));
    }
    Ok(Complex64::new(re, im))
}

fn parse_point(s: &str) -> Result<Point, String> {
    if s.trim().eq_ignore_ascii_case("inf") {
        return Ok(Point::infinity());
    }
    Ok(Point::finite(parse_complex(s)?))
}

fn parse_coeffs(s: &str) -> Result<Vec<Complex64>, String> {
    s.split(';').map(parse_complex).collect()
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{},{}", z.re, z.im)
    }
}

fn fmt_point(p: &Point) -> String {
    match p.to_finite() {
        Some(z) => fmt_complex(z),
        None => "inf".into(),
    }
}

impl ScenarioConfig {
    pub fn map(&self) -> Result<RationalMap64, crate::map::MapError> {
        RationalMap64::new(self.numerator.clone(), self.denominator.clone())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim().trim_start_matches('#').trim() == FORMAT_HEADER => {}
            other => {
                return Err(ConfigError::Parse {
                    line: other.map_or(1, |(i, _)| i + 1),
                    key: "header".into(),
                    message: format!("expected \"# {FORMAT_HEADER}\""),
                })
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in lines {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |key: &str, message: String| ConfigError::Parse {
                line: i + 1,
                key: key.to_string(),
                message,
            };
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(line, "expected key = value".into()));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(key, "duplicate key".into()));
            }
            cfg.set(key, value).map_err(|m| err(key, m))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "name" => {
                if value.is_empty() || value.contains([',', '\n']) {
                    return Err("name must be non-empty without commas".into());
                }
                self.name = value.to_string();
            }
            "numerator" => self.numerator = parse_coeffs(value)?,
            "denominator" => self.denominator = parse_coeffs(value)?,
            "attracting_point" => {
                self.attracting_point = match value {
                    "auto" => AttractorChoice::Auto,
                    v => AttractorChoice::Explicit(parse_point(v)?),
                }
            }
            "base_point" => {
                self.base_point = match value {
                    "default" => BasePolicy::Default,
                    "fixed-point" => BasePolicy::FixedPoint,
                    v => match v.strip_prefix("offset:") {
                        Some(r) => BasePolicy::Offset(parse_f64(r)?),
                        None => BasePolicy::Explicit(parse_point(v)?),
                    },
                }
            }
            "scenario" => {
                self.scenario = match value {
                    "finite-basin" => Scenario::FiniteBasin,
                    "basin-of-infinity" => Scenario::BasinOfInfinity,
                    "per-component" => Scenario::PerComponent,
                    v => return Err(format!("unknown scenario {v:?}")),
                }
            }
            "resolution" => self.grid.resolution = parse_usize(value)?,
            "epsilon_attract" => self.grid.epsilon_attract = parse_f64(value)?,
            "max_iter" => self.grid.max_iter = parse_usize(value)?,
            "depth" => self.depth = parse_usize(value)?,
            "sample_count" => self.sample_count = parse_usize(value)?,
            "sample_seed" => self.sample_seed = value.parse().map_err(|e| format!("bad seed {value:?}: {e}"))?,
            "components" => self.components = parse_usize(value)?,
            "n_max" => self.n_max = parse_usize(value)?,
            "t0" => {
                self.t0 = match value {
                    "auto" => None,
                    v => Some(parse_f64(v)?),
                }
            }
            "node_budget" => self.node_budget = parse_usize(value)?,
            "resolution_series" => {
                self.resolution_series = if value.is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(parse_usize).collect::<Result<_, _>>()?
                }
            }
            "output" => self.output = PathBuf::from(value),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Validation(m.to_string()));
        self.grid.validate().map_err(|e| ConfigError::Validation(e.to_string()))?;
        for &r in &self.resolution_series {
            GridSpec { resolution: r, ..self.grid.clone() }
                .validate()
                .map_err(|e| ConfigError::Validation(format!("resolution_series: {e}")))?;
        }
        if self.sample_count == 0 {
            return bad("sample_count must be at least 1");
        }
        if !(1..=24).contains(&self.depth) {
            return bad("depth must lie in [1, 24]");
        }
        if self.components == 0 {
            return bad("components must be at least 1");
        }
        if !(1..=64).contains(&self.n_max) {
            return bad("n_max must lie in [1, 64]");
        }
        if let Some(t) = self.t0 {
            if !(t > 0.0 && t.is_finite()) {
                return bad("t0 must be positive");
            }
        }
        if self.node_budget == 0 {
            return bad("node_budget must be positive");
        }
        if let BasePolicy::Offset(r) = self.base_point {
            if !(r > 0.0 && r < 1.0) {
                return bad("base offset must lie in (0, 1)");
            }
        }
        let map = self.map().map_err(|e| ConfigError::Validation(e.to_string()))?;
        map.require_dynamical().map_err(|e| ConfigError::Validation(e.to_string()))?;
        if self.scenario == Scenario::BasinOfInfinity {
            if !map.is_polynomial() {
                return bad("basin-of-infinity needs a polynomial map");
            }
            if let AttractorChoice::Explicit(p) = self.attracting_point {
                if !p.is_infinity() {
                    return bad("basin-of-infinity needs attracting_point = inf or auto");
                }
            }
        }
        Ok(())
    }

    /// Resolved values in the config format; parses back to `self`.
    pub fn echo(&self) -> String {
        let coeffs = |c: &[Complex64]| c.iter().map(|z| fmt_complex(*z)).collect::<Vec<_>>().join("; ");
        let mut s = String::new();
        let _ = writeln!(s, "# {FORMAT_HEADER}");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "numerator = {}", coeffs(&self.numerator));
        let _ = writeln!(s, "denominator = {}", coeffs(&self.denominator));
        let att = match &self.attracting_point {
            AttractorChoice::Auto => "auto".into(),
            AttractorChoice::Explicit(p) => fmt_point(p),
        };
        let _ = writeln!(s, "attracting_point = {att}");
        let _ = writeln!(s, "base_point = {}", self.base_point);
        let _ = writeln!(s, "scenario = {}", self.scenario.name());
        let _ = writeln!(s, "resolution = {}", self.grid.resolution);
        let _ = writeln!(s, "epsilon_attract = {}", self.grid.epsilon_attract);
        let _ = writeln!(s, "max_iter = {}", self.grid.max_iter);
        let _ = writeln!(s, "depth = {}", self.depth);
        let _ = writeln!(s, "sample_count = {}", self.sample_count);
        let _ = writeln!(s, "sample_seed = {}", self.sample_seed);
        let _ = writeln!(s, "components = {}", self.components);
        let _ = writeln!(s, "n_max = {}", self.n_max);
        let _ = writeln!(s, "t0 = {}", self.t0.map_or("auto".to_string(), |t| t.to_string()));
        let _ = writeln!(s, "node_budget = {}", self.node_budget);
        let series: Vec<String> = self.resolution_series.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(s, "resolution_series = {}", series.join(","));
        let _ = writeln!(s, "output = {}", self.output.display());
        s
    }
}

impl fmt::Display for BasePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasePolicy::Default => write!(f, "default"),
            BasePolicy::FixedPoint => write!(f, "fixed-point"),
            BasePolicy::Offset(r) => write!(f, "offset:{r}"),
            BasePolicy::Explicit(p) => write!(f, "{}", fmt_point(p)),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ScenarioConfig::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = ScenarioConfig::parse("# basin-metric-lab v1\nnumerator = 0; 0; 1\nscenario = finite-basin\n").unwrap();
        assert_eq!(cfg.grid.resolution, 512);
        assert_eq!((cfg.depth, cfg.sample_count, cfg.sample_seed), (10, 200, 1));
        assert_eq!(cfg.grid.epsilon_attract, 1e-3);
        assert_eq!(cfg.grid.max_iter, 2000);
    }

    #[test]
    fn newton_map_parses() {
        let cfg = ScenarioConfig::parse(
            "basin-metric-lab v1\nnumerator = 1; 0; 0; 2\ndenominator = 0;0;3 # Newton map of z^3 - 1\nattracting_point = 1,0\n",
        )
        .unwrap();
        assert_eq!(cfg.map().unwrap().degree(), 3);
        assert_eq!(cfg.attracting_point, AttractorChoice::Explicit(Point::finite(Complex64::new(1.0, 0.0))));
    }

    #[test]
    fn errors_name_line_and_key() {
        let e = ScenarioConfig::parse("# basin-metric-lab v1\n\ndepth = ten\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 3, ref key, .. } if key == "depth"), "{e}");
        let e = ScenarioConfig::parse("# basin-metric-lab v1\nshape = round\n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 2, .. }));
        assert!(matches!(ScenarioConfig::parse("depth = 3\n"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(
            ScenarioConfig::parse("# basin-metric-lab v1\ndepth = 3\ndepth = 4\n"),
            Err(ConfigError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn validation() {
        let v = |body: &str| ScenarioConfig::parse(&format!("# basin-metric-lab v1\n{body}\n"));
        assert!(matches!(v("sample_count = 0"), Err(ConfigError::Validation(_))));
        assert!(matches!(v("depth = 0"), Err(ConfigError::Validation(_))));
        assert!(matches!(v("resolution = 4"), Err(ConfigError::Validation(_))));
        assert!(matches!(v("numerator = 1; 1"), Err(ConfigError::Validation(_))));
        assert!(matches!(
            v("numerator = 1; 0; 0; 2\ndenominator = 0; 0; 3\nscenario = basin-of-infinity"),
            Err(ConfigError::Validation(_))
        ));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ScenarioConfig::parse(
            "# basin-metric-lab v1\nname = n3\nnumerator = 1; 0; 0; 2\ndenominator = 0; 0; 3\nattracting_point = 1\n\
             base_point = offset:0.2\nscenario = per-component\nt0 = 0.25\nresolution_series = 128,256\n",
        )
        .unwrap();
        assert_eq!(ScenarioConfig::parse(&cfg.echo()).unwrap(), cfg);
        let inf = ScenarioConfig::parse("# basin-metric-lab v1\nnumerator = 1;0;1\nbase_point = inf\n").unwrap();
        assert_eq!(ScenarioConfig::parse(&inf.echo()).unwrap(), inf);
    }
}
