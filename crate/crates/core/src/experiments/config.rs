//! Experiment configuration: presets and the flat `key = value` file format.
//!
//! One key per line, `#` starts a comment. Keys:
//!
//! ```text
//! scenario          case1 | case1-small | case2 | custom
//! truth_source      egm2008 | random
//! truth_path        coefficient file (egm2008 only)
//! truth_degree      maximum degree of the reference potential
//! decay_exponent    random truth: coefficients scaled by (n+1)^-decay
//! truth_seed        random truth generator seed
//! r, R              ground and satellite radius [km]
//! rho               cap parameter, 0 < rho < 2
//! deg_sat           kernel degree N_k
//! deg_ground        kernel degree M_k
//! cap_exactness     polynomial exactness of the ground cap rule
//! sphere_bandwidth  bandwidth B of the satellite sphere rule (exact to 2B-1)
//! sphere_style      equiangular | gauss_legendre
//! eps1, eps2        relative noise of ground and satellite data
//! noise_seed        noise generator seed
//! alpha_grid        comma list, or log:<lo>:<hi>:<count> (log10 bounds)
//! alpha_tilde_grid  same
//! beta_grid         same
//! pair_tolerance    relative threshold for degenerate candidate pairs
//! localization_anchor  point the ground kernel's outside-cap penalty is
//!                   anchored at; only `center` is implemented
//! output_dir        where artifacts are written
//! ```
//!
//! `scenario` is applied first so that the remaining keys override the preset.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quadrature::SphereStyle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Case1,
    Case1Small,
    Case2,
    Custom,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "case1" => Ok(Self::Case1),
            "case1-small" => Ok(Self::Case1Small),
            "case2" => Ok(Self::Case2),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!("unknown scenario `{other}`"))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Case1 => "case1",
            Self::Case1Small => "case1-small",
            Self::Case2 => "case2",
            Self::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TruthSource {
    Egm2008 { path: PathBuf, degree: usize },
    Random { degree: usize, decay_exponent: f64, seed: u64 },
}

impl TruthSource {
    pub fn degree(&self) -> usize {
        match self {
            Self::Egm2008 { degree, .. } | Self::Random { degree, .. } => *degree,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub truth_source: TruthSource,
    pub r: f64,
    pub big_r: f64,
    pub rho: f64,
    pub deg_sat: usize,
    pub deg_ground: usize,
    pub cap_exactness: usize,
    pub sphere_bandwidth: usize,
    pub sphere_style: SphereStyle,
    pub eps1: f64,
    pub eps2: f64,
    pub noise_seed: u64,
    pub alpha_grid: Vec<f64>,
    pub alpha_tilde_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub pair_tolerance: f64,
    pub localization_anchor: LocalizationAnchor,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizationAnchor {
    Center,
}

impl FromStr for LocalizationAnchor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(Self::Center),
            other => Err(Error::Config(format!("unsupported localization_anchor `{other}`"))),
        }
    }
}

/// `count` points log-equispaced between `10^lo` and `10^hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// Bandwidth whose sphere rule is exact through `degree`.
pub fn bandwidth_for(degree: usize) -> usize {
    degree / 2 + 1
}

impl ExperimentConfig {
    pub fn preset(scenario: Scenario) -> Self {
        let case1 = Self {
            scenario,
            truth_source: TruthSource::Random {
                degree: 30,
                decay_exponent: 2.0,
                seed: 1,
            },
            r: 6371.0,
            big_r: 12371.0,
            rho: 1.0,
            deg_sat: 80,
            deg_ground: 80,
            cap_exactness: 110,
            sphere_bandwidth: bandwidth_for(110),
            sphere_style: SphereStyle::Equiangular,
            eps1: 0.001,
            eps2: 0.001,
            noise_seed: 1,
            alpha_grid: log_grid(1.0, 8.0, 5),
            alpha_tilde_grid: log_grid(1.0, 8.0, 5),
            beta_grid: log_grid(-2.0, 3.0, 4),
            pair_tolerance: crate::chooser::DEFAULT_PAIR_TOLERANCE,
            localization_anchor: LocalizationAnchor::Center,
            output_dir: PathBuf::from("out"),
        };
        match scenario {
            Scenario::Case1 | Scenario::Custom => case1,
            Scenario::Case1Small => Self {
                deg_sat: 40,
                deg_ground: 40,
                cap_exactness: 70,
                sphere_bandwidth: bandwidth_for(70),
                alpha_grid: log_grid(1.0, 8.0, 3),
                alpha_tilde_grid: log_grid(1.0, 8.0, 3),
                beta_grid: log_grid(-2.0, 3.0, 3),
                ..case1
            },
            Scenario::Case2 => Self {
                truth_source: TruthSource::Random {
                    degree: 130,
                    decay_exponent: 2.0,
                    seed: 1,
                },
                big_r: 7071.0,
                rho: 0.3,
                deg_sat: 150,
                deg_ground: 150,
                cap_exactness: 280,
                sphere_bandwidth: bandwidth_for(280),
                ..case1
            },
        }
    }

    pub fn n_candidates(&self) -> usize {
        self.alpha_grid.len() * self.alpha_tilde_grid.len() * self.beta_grid.len()
    }

    pub fn truth_degree(&self) -> usize {
        self.truth_source.degree()
    }

    /// Cap exactness at which every candidate integral is exact.
    pub fn required_cap_exactness(&self) -> usize {
        self.deg_ground + self.truth_degree()
    }

    pub fn required_sphere_exactness(&self) -> usize {
        self.deg_sat + self.truth_degree()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.r > 0.0 && self.r < self.big_r) {
            return fail(format!("need 0 < r < R, got r={} R={}", self.r, self.big_r));
        }
        if !(self.rho > 0.0 && self.rho < 2.0) {
            return fail(format!("rho = {} outside (0, 2)", self.rho));
        }
        if self.deg_sat > self.deg_ground {
            return fail("deg_sat must not exceed deg_ground".into());
        }
        if self.sphere_bandwidth == 0 {
            return fail("sphere_bandwidth must be positive".into());
        }
        if !(self.eps1 >= 0.0 && self.eps2 >= 0.0) {
            return fail("noise levels must be non-negative".into());
        }
        for (name, grid) in [
            ("alpha_grid", &self.alpha_grid),
            ("alpha_tilde_grid", &self.alpha_tilde_grid),
        ] {
            if grid.is_empty() || grid.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return fail(format!("{name} must be a non-empty list of positive values"));
            }
        }
        if self.beta_grid.is_empty() || self.beta_grid.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return fail("beta_grid must be a non-empty list of non-negative values".into());
        }
        if !(self.pair_tolerance >= 0.0) {
            return fail("pair_tolerance must be non-negative".into());
        }
        Ok(())
    }

    /// Parses the flat text format; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        let scenario = entries
            .iter()
            .find(|(k, _)| k == "scenario")
            .map(|(_, v)| v.parse())
            .transpose()?
            .unwrap_or(Scenario::Custom);
        let mut cfg = Self::preset(scenario);
        cfg.apply(&entries)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `key = value` overrides on top of the current values.
    pub fn apply(&mut self, entries: &[(String, String)]) -> Result<()> {
        // truth fields may arrive in any order; collect then rebuild
        let (mut src, mut path, mut degree, mut decay, mut tseed) = match &self.truth_source {
            TruthSource::Egm2008 { path, degree } => {
                ("egm2008".to_string(), Some(path.clone()), *degree, 2.0, 1)
            }
            TruthSource::Random {
                degree,
                decay_exponent,
                seed,
            } => ("random".to_string(), None, *degree, *decay_exponent, *seed),
        };
        for (k, v) in entries {
            let bad = || Error::Config(format!("invalid value `{v}` for key `{k}`"));
            let float = || v.parse::<f64>().map_err(|_| bad());
            let uint = || v.parse::<usize>().map_err(|_| bad());
            let seed = || v.parse::<u64>().map_err(|_| bad());
            match k.as_str() {
                "scenario" => self.scenario = v.parse()?,
                "truth_source" => src = v.clone(),
                "truth_path" => path = Some(PathBuf::from(v)),
                "truth_degree" => degree = uint()?,
                "decay_exponent" => decay = float()?,
                "truth_seed" => tseed = seed()?,
                "r" => self.r = float()?,
                "R" => self.big_r = float()?,
                "rho" => self.rho = float()?,
                "deg_sat" => self.deg_sat = uint()?,
                "deg_ground" => self.deg_ground = uint()?,
                "cap_exactness" => self.cap_exactness = uint()?,
                "sphere_bandwidth" => self.sphere_bandwidth = uint()?,
                "sphere_style" => self.sphere_style = v.parse()?,
                "eps1" => self.eps1 = float()?,
                "eps2" => self.eps2 = float()?,
                "noise_seed" => self.noise_seed = seed()?,
                "alpha_grid" => self.alpha_grid = parse_grid(v).ok_or_else(bad)?,
                "alpha_tilde_grid" => self.alpha_tilde_grid = parse_grid(v).ok_or_else(bad)?,
                "beta_grid" => self.beta_grid = parse_grid(v).ok_or_else(bad)?,
                "pair_tolerance" => self.pair_tolerance = float()?,
                "localization_anchor" => self.localization_anchor = v.parse()?,
                "output_dir" => self.output_dir = PathBuf::from(v),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        self.truth_source = match src.as_str() {
            "egm2008" => TruthSource::Egm2008 {
                path: path.ok_or_else(|| {
                    Error::Config("truth_source = egm2008 needs truth_path".into())
                })?,
                degree,
            },
            "random" => TruthSource::Random {
                degree,
                decay_exponent: decay,
                seed: tseed,
            },
            other => return Err(Error::Config(format!("unknown truth_source `{other}`"))),
        };
        self.validate()
    }

    /// Full snapshot in the same text format; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let grid = |g: &[f64]| g.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "scenario = {}", self.scenario);
        match &self.truth_source {
            TruthSource::Egm2008 { path, degree } => {
                let _ = writeln!(s, "truth_source = egm2008");
                let _ = writeln!(s, "truth_path = {}", path.display());
                let _ = writeln!(s, "truth_degree = {degree}");
            }
            TruthSource::Random {
                degree,
                decay_exponent,
                seed,
            } => {
                let _ = writeln!(s, "truth_source = random");
                let _ = writeln!(s, "truth_degree = {degree}");
                let _ = writeln!(s, "decay_exponent = {decay_exponent:e}");
                let _ = writeln!(s, "truth_seed = {seed}");
            }
        }
        let _ = writeln!(s, "r = {:e}", self.r);
        let _ = writeln!(s, "R = {:e}", self.big_r);
        let _ = writeln!(s, "rho = {:e}", self.rho);
        let _ = writeln!(s, "deg_sat = {}", self.deg_sat);
        let _ = writeln!(s, "deg_ground = {}", self.deg_ground);
        let _ = writeln!(s, "cap_exactness = {}", self.cap_exactness);
        let _ = writeln!(s, "sphere_bandwidth = {}", self.sphere_bandwidth);
        let _ = writeln!(s, "sphere_style = {}", self.sphere_style);
        let _ = writeln!(s, "eps1 = {:e}", self.eps1);
        let _ = writeln!(s, "eps2 = {:e}", self.eps2);
        let _ = writeln!(s, "noise_seed = {}", self.noise_seed);
        let _ = writeln!(s, "alpha_grid = {}", grid(&self.alpha_grid));
        let _ = writeln!(s, "alpha_tilde_grid = {}", grid(&self.alpha_tilde_grid));
        let _ = writeln!(s, "beta_grid = {}", grid(&self.beta_grid));
        let _ = writeln!(s, "pair_tolerance = {:e}", self.pair_tolerance);
        let _ = writeln!(s, "localization_anchor = center");
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        s
    }
}

fn parse_grid(v: &str) -> Option<Vec<f64>> {
    if let Some(spec) = v.strip_prefix("log:") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return None;
        }
        let lo = parts[0].trim().parse().ok()?;
        let hi = parts[1].trim().parse().ok()?;
        let count = parts[2].trim().parse().ok()?;
        return Some(log_grid(lo, hi, count));
    }
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

/// Splits a `key=value` command line override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Error::Config(format!("override `{s}` is not of the form key=value")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_one_hundred_candidates() {
        let c = ExperimentConfig::preset(Scenario::Case1);
        assert_eq!(c.n_candidates(), 100);
        assert_eq!(c.required_cap_exactness(), 110);
        assert!(2 * c.sphere_bandwidth > c.required_sphere_exactness());
        assert_eq!(c.alpha_grid.first(), Some(&10.0));
        assert!((c.alpha_grid[4] / 1e8 - 1.0).abs() < 1e-12);
        assert!((c.beta_grid[0] - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn small_preset() {
        let c = ExperimentConfig::preset(Scenario::Case1Small);
        assert_eq!(c.n_candidates(), 27);
        assert_eq!(c.required_cap_exactness(), c.cap_exactness);
    }

    #[test]
    fn case2_preset_is_certified() {
        let c = ExperimentConfig::preset(Scenario::Case2);
        assert_eq!(c.required_cap_exactness(), 280);
        assert!(2 * c.sphere_bandwidth > c.required_sphere_exactness());
    }

    #[test]
    fn snapshot_round_trips() {
        let mut c = ExperimentConfig::preset(Scenario::Case1Small);
        c.eps1 = 0.1;
        c.noise_seed = 99;
        let back = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn parse_with_overrides_and_comments() {
        let text = "# demo\nscenario = case1\neps1 = 0.1  # ground\nbeta_grid = 1, 10\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.eps1, 0.1);
        assert_eq!(c.beta_grid, vec![1.0, 10.0]);
        assert_eq!(c.deg_ground, 80);
    }

    #[test]
    fn bad_configs() {
        assert!(matches!(ExperimentConfig::parse("nonsense = 1"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("rho = 3"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("truth_source = egm2008"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("alpha_grid = "), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("no equals sign"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("localization_anchor = uniform"), Err(Error::Config(_))));
    }

    #[test]
    fn log_grid_spec() {
        assert_eq!(parse_grid("log:0:2:3").unwrap(), vec![1.0, 10.0, 100.0]);
        assert!(parse_grid("log:0:2").is_none());
    }
}
