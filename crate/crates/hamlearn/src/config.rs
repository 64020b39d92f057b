//! Run configuration: one TOML file, `--set key=value` overrides, every
//! field validated before any work starts.

use std::path::{Path, PathBuf};

use hamlearn_core::dataset::{cell_seed, uniform_times, BasesSpec, Engine};
use hamlearn_core::exact::ExactConfig;
use hamlearn_core::hamiltonian::{draw_target, Heisenberg, HamiltonianModel};
use hamlearn_core::learner::OptimizerConfig;
use hamlearn_core::linalg_ad::SvdJvpConfig;
use hamlearn_core::tebd::SimConfig;
use hamlearn_core::{Pauli, PauliBasis};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Seeds,
    pub model: ModelConfig,
    pub protocol: ProtocolConfig,
    pub generator: GeneratorConfig,
    pub simulator: SimulatorConfig,
    pub optimizer: OptimizerConfig,
    pub learn: LearnConfig,
    pub scaling: ScalingConfig,
    pub landscape: LandscapeConfig,
    pub selftest: SelftestConfig,
}

/// `master` comes from `--seed`; the others default to streams derived from it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bases: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inits: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub n: usize,
    /// Target parameters; drawn from `seeds.target` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { name: "heisenberg".into(), n: 6, theta_star: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Number of time stamps `J`, spaced by `tau`.
    pub stamps: usize,
    pub tau: f64,
    /// Explicit stamps; overrides `stamps` and `tau`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Number of random bases `K`.
    pub bases: usize,
    /// Explicit bases such as `"XYZZXY"`; overrides `bases`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis_list: Option<Vec<String>>,
    /// Bit-strings per `(j, k)` cell.
    pub samples: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { stamps: 5, tau: 0.2, times: None, bases: 100, basis_list: None, samples: 100 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    /// Exact up to `exact_max_sites`, TEBD above.
    Auto,
    Exact,
    Tebd,
}

/// Simulator used to produce synthetic data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub engine: EngineKind,
    pub exact_max_sites: usize,
    pub dt: f64,
    pub chi: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self { engine: EngineKind::Auto, exact_max_sites: 12, dt: 0.005, chi: 64 }
    }
}

/// Simulator inside the loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    pub dt: f64,
    pub chi: usize,
    pub discard_alarm: f64,
    /// Splitting of the regularized inverse singular values.
    pub svd_alpha: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        let s = SimConfig::default();
        Self { dt: s.dt, chi: s.chi, discard_alarm: s.discard_alarm, svd_alpha: s.svd.alpha }
    }
}

impl SimulatorConfig {
    pub fn sim(&self) -> SimConfig {
        SimConfig { dt: self.dt, chi: self.chi, discard_alarm: self.discard_alarm, svd: SvdJvpConfig { alpha: self.svd_alpha, ..SvdJvpConfig::default() } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnConfig {
    /// Dataset to learn from; synthesized from the protocol when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub inits: usize,
    pub outlier_threshold: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self { dataset: None, inits: 10, outlier_threshold: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    /// Total dataset sizes `d`; each is split evenly over the `J·K` cells.
    pub sizes: Vec<usize>,
    /// Independent datasets per size.
    pub repetitions: usize,
    /// Random inits per dataset; `learn.inits` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inits: Option<usize>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { sizes: vec![1_000, 3_000, 10_000, 30_000, 100_000], repetitions: 1, inits: None }
    }
}

/// One grid axis. `param` is a parameter name, or `h` for a field uniform
/// over all sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.min + i as f64 * step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub x: Axis,
    pub y: Axis,
    pub max_points: usize,
    /// Each letter is one uniform basis, `"XYZ"` meaning all-X, all-Y, all-Z.
    pub uniform_bases: String,
    pub samples: usize,
    pub dt: f64,
    pub chi: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            x: Axis { param: "h".into(), min: -1.0, max: 1.0, points: 21 },
            y: Axis { param: "jz".into(), min: -1.0, max: 1.0, points: 21 },
            max_points: 2_500,
            uniform_bases: "XYZ".into(),
            samples: 1000,
            dt: 0.05,
            chi: 10,
            dataset: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestConfig {
    /// Test hook: tighten this suite's tolerance until it must fail.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt: Option<String>,
}

/// Parses `key=value` where the value is TOML (`3`, `0.5`, `"x"`, `[1, 2]`)
/// or, failing that, a bare string.
pub fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| cfg_err(format!("override {s:?} is not key=value")))?;
    let k = k.trim();
    if k.is_empty() || k.split('.').any(str::is_empty) {
        return Err(cfg_err(format!("bad override key {k:?}")));
    }
    let v = v.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {v}")) {
        Ok(mut t) => t.remove("v").expect("key v"),
        Err(_) => toml::Value::String(v.into()),
    };
    Ok((k.into(), value))
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts = key.split('.').peekable();
    let mut t = table;
    while let Some(p) = parts.next() {
        if parts.peek().is_none() {
            t.insert(p.into(), value);
            return Ok(());
        }
        let e = t.entry(p).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = e.as_table_mut().ok_or_else(|| cfg_err(format!("{key}: {p} is not a table")))?;
    }
    unreachable!("split yields at least one part")
}

impl RunConfig {
    /// Reads `path` (if any), applies overrides, sets the master seed and
    /// validates.
    pub fn load(path: Option<&Path>, overrides: &[String], seed: u64) -> Result<Self> {
        // Layered on the defaults so a partial table keeps its other fields.
        let mut table = toml::Table::try_from(RunConfig::default()).map_err(|e| cfg_err(e.to_string()))?;
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            let file = text.parse::<toml::Table>().map_err(|e| cfg_err(format!("{}: {e}", p.display())))?;
            merge(&mut table, file);
        }
        for o in overrides {
            let (k, v) = parse_override(o)?;
            set_path(&mut table, &k, v)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| cfg_err(e.message().to_string()))?;
        cfg.seeds.master = seed;
        cfg.resolve_seeds();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fills unset seeds with streams of the master seed. Derived seeds keep
    /// 63 bits so the resolved config stays valid TOML.
    pub fn resolve_seeds(&mut self) {
        let m = self.seeds.master;
        let s = &mut self.seeds;
        s.target.get_or_insert(cell_seed(m, 1, 0) >> 1);
        s.bases.get_or_insert(cell_seed(m, 2, 0) >> 1);
        s.data.get_or_insert(cell_seed(m, 3, 0) >> 1);
        s.inits.get_or_insert(cell_seed(m, 4, 0) >> 1);
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.seeds;
        if [Some(s.master), s.target, s.bases, s.data, s.inits].into_iter().flatten().any(|x| x > i64::MAX as u64) {
            return Err(cfg_err(format!("seeds must not exceed {}", i64::MAX)));
        }
        let m = &self.model;
        if m.name != "heisenberg" {
            return Err(cfg_err(format!("unknown model {:?}; available: heisenberg", m.name)));
        }
        if m.n < 2 {
            return Err(cfg_err("model.n must be at least 2"));
        }
        if let Some(t) = &m.theta_star {
            if t.len() != 3 + m.n || t.iter().any(|x| !x.is_finite()) {
                return Err(cfg_err(format!("model.theta_star needs {} finite entries", 3 + m.n)));
            }
        }
        let p = &self.protocol;
        match &p.times {
            Some(t) => {
                if t.is_empty() || t.iter().any(|x| !(x.is_finite() && *x > 0.0)) || t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(cfg_err("protocol.times must be positive and strictly ascending"));
                }
            }
            None => {
                if p.stamps == 0 || !(p.tau > 0.0 && p.tau.is_finite()) {
                    return Err(cfg_err("protocol.stamps and protocol.tau must be positive"));
                }
            }
        }
        match &p.basis_list {
            Some(list) => {
                if list.is_empty() {
                    return Err(cfg_err("protocol.basis_list is empty"));
                }
                for b in list {
                    let parsed: PauliBasis = b.parse().map_err(|e| cfg_err(format!("protocol.basis_list: {e}")))?;
                    if parsed.len() != m.n {
                        return Err(cfg_err(format!("basis {b} has length {}, expected {}", parsed.len(), m.n)));
                    }
                }
            }
            None if p.bases == 0 => return Err(cfg_err("protocol.bases must be positive")),
            None => {}
        }
        if p.samples == 0 {
            return Err(cfg_err("protocol.samples must be positive"));
        }
        let g = &self.generator;
        if !(g.dt > 0.0) || g.chi == 0 {
            return Err(cfg_err("generator.dt and generator.chi must be positive"));
        }
        if g.engine == EngineKind::Exact && m.n > g.exact_max_sites {
            return Err(cfg_err(format!("exact generator refuses n = {} above generator.exact_max_sites = {}", m.n, g.exact_max_sites)));
        }
        let s = &self.simulator;
        if !(s.dt > 0.0) || s.chi == 0 || !(s.discard_alarm > 0.0) || !(0.0..=1.0).contains(&s.svd_alpha) {
            return Err(cfg_err("simulator: dt, chi, discard_alarm must be positive and svd_alpha in [0, 1]"));
        }
        self.optimizer.validate().map_err(|e| cfg_err(format!("optimizer: {e}")))?;
        let l = &self.learn;
        if l.inits == 0 || !(l.outlier_threshold > 0.0) {
            return Err(cfg_err("learn.inits and learn.outlier_threshold must be positive"));
        }
        let sc = &self.scaling;
        if sc.sizes.contains(&0) || sc.repetitions == 0 || sc.inits == Some(0) {
            return Err(cfg_err("scaling.sizes, scaling.repetitions and scaling.inits must be positive"));
        }
        let ls = &self.landscape;
        let names = self.model()?.theta_names();
        for (label, a) in [("x", &ls.x), ("y", &ls.y)] {
            if a.param != "h" && !names.contains(&a.param) {
                return Err(cfg_err(format!("landscape.{label}.param {:?} is not one of h, {}", a.param, names.join(", "))));
            }
            if a.points == 0 || !(a.min.is_finite() && a.max.is_finite()) || (a.points > 1 && !(a.max > a.min)) {
                return Err(cfg_err(format!("landscape.{label}: need points ≥ 1 and min < max")));
            }
        }
        if ls.x.param == ls.y.param {
            return Err(cfg_err("landscape axes must differ"));
        }
        if ls.uniform_bases.is_empty() || ls.uniform_bases.chars().any(|c| Pauli::from_char(c).is_none()) {
            return Err(cfg_err("landscape.uniform_bases must be letters from XYZ"));
        }
        if ls.samples == 0 || !(ls.dt > 0.0) || ls.chi == 0 {
            return Err(cfg_err("landscape: samples, dt and chi must be positive"));
        }
        if let Some(c) = &self.selftest.corrupt {
            if !crate::selftest::SUITES.contains(&c.as_str()) {
                return Err(cfg_err(format!("selftest.corrupt: unknown suite {c:?}")));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Heisenberg> {
        Ok(Heisenberg::new(self.model.n)?)
    }

    pub fn theta_star(&self) -> Result<Vec<f64>> {
        match &self.model.theta_star {
            Some(t) => Ok(t.clone()),
            None => Ok(draw_target(self.model.n, self.seed(self.seeds.target))?.to_theta()),
        }
    }

    fn seed(&self, s: Option<u64>) -> u64 {
        s.expect("seeds resolved in load")
    }

    pub fn data_seed(&self) -> u64 {
        self.seed(self.seeds.data)
    }

    pub fn init_seed(&self) -> u64 {
        self.seed(self.seeds.inits)
    }

    pub fn times(&self) -> Vec<f64> {
        match &self.protocol.times {
            Some(t) => t.clone(),
            None => uniform_times(self.protocol.stamps, self.protocol.tau),
        }
    }

    pub fn bases_spec(&self) -> Result<BasesSpec> {
        Ok(match &self.protocol.basis_list {
            Some(list) => BasesSpec::Explicit(list.iter().map(|b| b.parse()).collect::<Result<_, _>>()?),
            None => BasesSpec::Random { count: self.protocol.bases, seed: self.seed(self.seeds.bases) },
        })
    }

    pub fn engine(&self) -> Engine {
        let g = &self.generator;
        let exact = match g.engine {
            EngineKind::Exact => true,
            EngineKind::Tebd => false,
            EngineKind::Auto => self.model.n <= g.exact_max_sites,
        };
        if exact {
            Engine::Exact(ExactConfig { max_sites: g.exact_max_sites.max(self.model.n), ..ExactConfig::default() })
        } else {
            Engine::Tebd(SimConfig::new(g.dt, g.chi))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::load(None, &[], 1).unwrap();
        assert_eq!(c.model.n, 6);
        assert_eq!(c.times(), vec![0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert!(c.seeds.data.is_some());
    }

    #[test]
    fn overrides_apply_typed_values() {
        let sets: Vec<String> = ["model.n=4", "optimizer.adam.learning_rate=0.1", "protocol.basis_list=[\"XYZZ\"]", "learn.dataset=data/x.txt"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let c = RunConfig::load(None, &sets, 1).unwrap();
        assert_eq!(c.model.n, 4);
        assert_eq!(c.optimizer.adam.learning_rate, 0.1);
        assert_eq!(c.protocol.basis_list.as_deref(), Some(&["XYZZ".to_string()][..]));
        assert_eq!(c.learn.dataset.as_deref(), Some(Path::new("data/x.txt")));
    }

    #[test]
    fn invalid_fields_are_rejected() {
        for bad in ["model.n=1", "protocol.tau=-1", "model.bogus=1", "optimizer.bfgs.c1=0.95", "protocol.basis_list=[\"XW\"]", "landscape.x.param=q", "learn.inits=0"] {
            assert!(matches!(RunConfig::load(None, &[bad.to_string()], 1), Err(Error::Config(_))), "{bad}");
        }
        assert!(parse_override("novalue").is_err());
        assert!(matches!(RunConfig::load(None, &[], u64::MAX), Err(Error::Config(_))));
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = RunConfig::load(None, &["model.theta_star=[1.0, 0.5, 0.25, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]".into()], 9).unwrap();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn seeds_follow_the_master() {
        let a = RunConfig::load(None, &[], 1).unwrap();
        let b = RunConfig::load(None, &[], 2).unwrap();
        assert_ne!(a.theta_star().unwrap(), b.theta_star().unwrap());
        assert_eq!(a.theta_star().unwrap(), RunConfig::load(None, &[], 1).unwrap().theta_star().unwrap());
        let pinned = RunConfig::load(None, &["seeds.target=5".into()], 1).unwrap();
        assert_eq!(pinned.seeds.target, Some(5));
    }
}
