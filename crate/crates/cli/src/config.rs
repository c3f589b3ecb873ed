//! Scenario configuration (TOML) and its conversion to library types.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use quantrack::measures::{Atom, Density, Domain};
use quantrack::regimes::{DemandSignal, Grid, Scenario};
use serde::{Deserialize, Serialize};

/// A configuration problem, reported with the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub alpha: f64,
    pub horizon: Horizon,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: GridConfig,
    pub domain: DomainConfig,
    pub resource: MeasureConfig,
    pub demand: DemandConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// A length of time, or `"periodic"` to use one demand period.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum Horizon {
    Time(f64),
    Keyword(String),
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_nt")]
    pub nt: usize,
    #[serde(default = "default_harmonics")]
    pub n_harmonics: usize,
}

fn default_nx() -> usize {
    Grid::default().nx
}
fn default_nt() -> usize {
    Grid::default().nt
}
fn default_harmonics() -> usize {
    Grid::default().n_harmonics
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nx: default_nx(),
            nt: default_nt(),
            n_harmonics: default_harmonics(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lo: f64,
    pub hi: f64,
}

/// Mixture of Dirac atoms (`var = 0`) and Gaussian bumps (`var > 0`)
/// discretized on `cells` uniform cells. Weights are normalized.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default = "default_cells")]
    pub cells: usize,
    pub components: Vec<Component>,
}

fn default_cells() -> usize {
    400
}

/// One mixture component. Under a periodic demand its weight and mean
/// oscillate as `w + weight_amp sin(2 pi k t / P + phase)`, likewise the mean.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    #[serde(default)]
    pub var: f64,
    #[serde(default)]
    pub weight_amp: f64,
    #[serde(default)]
    pub mean_amp: f64,
    #[serde(default = "default_harmonic")]
    pub harmonic: u32,
    #[serde(default)]
    pub phase: f64,
}

fn default_harmonic() -> u32 {
    1
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DemandConfig {
    Static {
        #[serde(default = "default_cells")]
        cells: usize,
        components: Vec<Component>,
    },
    Periodic {
        period: f64,
        #[serde(default = "default_cells")]
        cells: usize,
        components: Vec<Component>,
    },
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub horizon: Option<f64>,
    pub nt: Option<usize>,
    pub nx: Option<usize>,
    pub harmonics: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// `name=value` for each override given, in a fixed order.
    pub fn applied(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Some(x) = self.alpha {
            v.push(format!("alpha={x}"));
        }
        if let Some(x) = self.horizon {
            v.push(format!("horizon={x}"));
        }
        if let Some(x) = self.nt {
            v.push(format!("grid.nt={x}"));
        }
        if let Some(x) = self.nx {
            v.push(format!("grid.nx={x}"));
        }
        if let Some(x) = self.harmonics {
            v.push(format!("grid.n_harmonics={x}"));
        }
        if let Some(x) = self.seed {
            v.push(format!("seed={x}"));
        }
        if let Some(x) = &self.out {
            v.push(format!("output_dir={}", x.display()));
        }
        v
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .map_or_else(|| "<document>".to_string(), |line| format!("<line {line}>"));
            bad(field, e.message().to_string())
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(x) = o.alpha {
            self.alpha = x;
        }
        if let Some(x) = o.horizon {
            self.horizon = Horizon::Time(x);
        }
        if let Some(x) = o.nt {
            self.grid.nt = x;
        }
        if let Some(x) = o.nx {
            self.grid.nx = x;
        }
        if let Some(x) = o.harmonics {
            self.grid.n_harmonics = x;
        }
        if let Some(x) = o.seed {
            self.seed = x;
        }
        if let Some(x) = &o.out {
            self.output_dir = x.clone();
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn domain(&self) -> Result<Domain, ConfigError> {
        let d = self.domain;
        if !(d.lo.is_finite() && d.hi.is_finite() && d.hi > d.lo) {
            return Err(bad("domain", format!("need finite lo < hi, got [{}, {}]", d.lo, d.hi)));
        }
        Ok(Domain::new(d.lo, d.hi).expect("checked above"))
    }

    pub fn period(&self) -> Option<f64> {
        match &self.demand {
            DemandConfig::Periodic { period, .. } => Some(*period),
            DemandConfig::Static { .. } => None,
        }
    }

    pub fn horizon(&self) -> Result<f64, ConfigError> {
        match &self.horizon {
            Horizon::Time(t) if t.is_finite() && *t > 0.0 => Ok(*t),
            Horizon::Time(t) => Err(bad("horizon", format!("must be positive, got {t}"))),
            Horizon::Keyword(k) if k == "periodic" => self
                .period()
                .ok_or_else(|| bad("horizon", "\"periodic\" needs demand.kind = \"periodic\"")),
            Horizon::Keyword(k) => Err(bad("horizon", format!("expected a number or \"periodic\", got {k:?}"))),
        }
    }

    pub fn resource(&self) -> Result<Density, ConfigError> {
        let r = &self.resource;
        check_components("resource.components", &r.components)?;
        build_measure(self.domain()?, r.cells, &r.components, 0.0, 1.0).map_err(|e| bad("resource", e.to_string()))
    }

    /// Demand at a single time (time zero for periodic demand).
    pub fn demand_density(&self) -> Result<Density, ConfigError> {
        let dom = self.domain()?;
        match &self.demand {
            DemandConfig::Static { cells, components } => {
                check_components("demand.components", components)?;
                build_measure(dom, *cells, components, 0.0, 1.0).map_err(|e| bad("demand", e.to_string()))
            }
            DemandConfig::Periodic { period, cells, components } => {
                check_components("demand.components", components)?;
                build_measure(dom, *cells, components, 0.0, *period).map_err(|e| bad("demand", e.to_string()))
            }
        }
    }

    pub fn demand(&self) -> Result<DemandSignal, ConfigError> {
        let dom = self.domain()?;
        match &self.demand {
            DemandConfig::Static { .. } => Ok(DemandSignal::Static(self.demand_density()?)),
            DemandConfig::Periodic { period, cells, components } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(bad("demand.period", format!("must be positive, got {period}")));
                }
                check_components("demand.components", components)?;
                // every phase must give a valid measure
                for k in 0..16 {
                    let t = *period * k as f64 / 16.0;
                    build_measure(dom, *cells, components, t, *period)
                        .map_err(|e| bad("demand.components", format!("at t={t}: {e}")))?;
                }
                let (p, n, comps) = (*period, *cells, components.clone());
                DemandSignal::periodic_rule(p, move |t| build_measure(dom, n, &comps, t, p))
                    .map_err(|e| bad("demand", e.to_string()))
            }
        }
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        let g = self.grid;
        if g.nt == 0 {
            return Err(bad("grid.nt", "must be at least 1"));
        }
        if g.nx == 0 {
            return Err(bad("grid.nx", "must be at least 1"));
        }
        Ok(Grid {
            nx: g.nx,
            nt: g.nt,
            n_harmonics: g.n_harmonics,
        })
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(bad("alpha", format!("must be positive, got {}", self.alpha)));
        }
        let sc = Scenario {
            resource: self.resource()?,
            demand: self.demand()?,
            alpha: self.alpha,
            horizon: self.horizon()?,
            grid: self.grid()?,
        };
        sc.validate().map_err(|e| bad("scenario", e.to_string()))?;
        Ok(sc)
    }
}

fn check_components(field: &str, comps: &[Component]) -> Result<(), ConfigError> {
    if comps.is_empty() {
        return Err(bad(field, "needs at least one component"));
    }
    for (i, c) in comps.iter().enumerate() {
        let f = |name: &str| format!("{field}[{i}].{name}");
        if !(c.weight.is_finite() && c.weight >= 0.0) {
            return Err(bad(f("weight"), format!("must be nonnegative, got {}", c.weight)));
        }
        if !c.mean.is_finite() {
            return Err(bad(f("mean"), "must be finite"));
        }
        if !(c.var.is_finite() && c.var >= 0.0) {
            return Err(bad(f("var"), format!("must be nonnegative, got {}", c.var)));
        }
        if c.harmonic == 0 {
            return Err(bad(f("harmonic"), "must be at least 1"));
        }
    }
    Ok(())
}

/// Mixture density at time `t` of a signal with period `period`.
pub fn build_measure(
    dom: Domain,
    cells: usize,
    comps: &[Component],
    t: f64,
    period: f64,
) -> quantrack::Result<Density> {
    let at = |c: &Component| {
        let s = (2.0 * PI * c.harmonic as f64 * t / period + c.phase).sin();
        (c.weight + c.weight_amp * s, c.mean + c.mean_amp * s)
    };
    let mut atoms = Vec::new();
    let mut bumps = Vec::new();
    for c in comps {
        let (w, m) = at(c);
        if w <= 0.0 {
            continue;
        }
        if c.var == 0.0 {
            atoms.push(Atom { position: m, mass: w });
        } else {
            bumps.push((w, m, c.var));
        }
    }
    let (mut edges, mut values) = (Vec::new(), Vec::new());
    if !bumps.is_empty() {
        let n = cells.max(1);
        let h = dom.len() / n as f64;
        edges = (0..=n).map(|i| dom.lo + h * i as f64).collect();
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                let x = dom.lo + h * (i as f64 + 0.5);
                bumps
                    .iter()
                    .map(|&(w, m, v)| w * (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt())
                    .sum()
            })
            .collect();
        // scale so the histogram carries exactly the bump weight
        let mass: f64 = raw.iter().sum::<f64>() * h;
        let want: f64 = bumps.iter().map(|b| b.0).sum();
        values = raw.iter().map(|v| v * want / mass.max(f64::MIN_POSITIVE)).collect();
    }
    Density::normalized(dom, atoms, edges, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
alpha = 1.5
horizon = 2.0

[domain]
lo = 0.0
hi = 1.0

[resource]
components = [{ weight = 1.0, mean = 0.2 }, { weight = 1.0, mean = 0.6 }]

[demand]
kind = "static"
components = [{ weight = 1.0, mean = 0.5, var = 0.01 }]
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = Config::parse(MINIMAL).unwrap();
        assert_eq!(cfg.grid, GridConfig::default());
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc.resource.atoms().len(), 2);
        assert!((sc.resource.atoms()[0].mass - 0.5).abs() < 1e-15);
        assert!(sc.demand.is_static());
    }

    #[test]
    fn overrides_replace_fields() {
        let mut cfg = Config::parse(MINIMAL).unwrap();
        let o = Overrides {
            alpha: Some(0.3),
            nt: Some(50),
            ..Overrides::default()
        };
        cfg.apply(&o);
        assert_eq!(cfg.alpha, 0.3);
        assert_eq!(cfg.grid.nt, 50);
        assert_eq!(o.applied(), vec!["alpha=0.3", "grid.nt=50"]);
        let again = Config::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn negative_alpha_names_the_field() {
        let cfg = Config::parse(&MINIMAL.replace("alpha = 1.5", "alpha = -1.0")).unwrap();
        let e = cfg.scenario().unwrap_err();
        assert_eq!(e.field, "alpha");
    }

    #[test]
    fn periodic_keyword_needs_periodic_demand() {
        let cfg = Config::parse(&MINIMAL.replace("horizon = 2.0", "horizon = \"periodic\"")).unwrap();
        assert_eq!(cfg.horizon().unwrap_err().field, "horizon");
    }

    #[test]
    fn unknown_field_is_rejected() {
        assert!(Config::parse(&format!("{MINIMAL}\nbogus = 1\n")).is_err());
    }
}
