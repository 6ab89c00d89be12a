//! Run configuration: built-in defaults, an optional TOML file, `--set`
//! overrides and dedicated flags, applied in that order and validated before
//! anything is computed.
//!
//! ```toml
//! [model]
//! n_spins = 170
//! zeta = 4.0            # |zeta|; or zeta_sq_over_n = 0.094
//! zeta_phase = 0.0
//! omega = 1.0
//! omega_qubit = 1.0
//! lambda = 1.0
//!
//! [time]
//! t_start = 0.0
//! t_end_over_t0 = 2.5   # or t_end = 30.0
//! samples = 5001
//!
//! [sweep]
//! n_values = [5, 10, 15]
//! ratios = [0.0, 0.1, 0.2]
//! cross_section_n = [5, 6, 7]
//! cross_section_ratio = 0.5
//!
//! [series]
//! n_values = [12, 40, 70, 100]
//! zeta_sq = 6.0
//! t_end_over_t0 = 2.0
//! samples = 2001
//!
//! [sphere]
//! n_theta = 64
//! n_phi = 128
//! panels = [{ n_spins = 12, zeta_sq = 6.0 }, { n_spins = 40, zeta_sq_over_n = 0.16 }]
//!
//! [jc]
//! enabled = false
//! cutoff = 400
//!
//! [run]
//! out = "revival-out"
//! workers = 4
//! oracle = false
//! ```

use std::path::{Path, PathBuf};

use revival_core::dicke::min_fock_cutoff;
use revival_core::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_spins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_sq_over_n: Option<f64>,
    pub zeta_phase: f64,
    pub omega: f64,
    pub omega_qubit: f64,
    pub lambda: f64,
}

impl ModelConfig {
    /// Complex `zeta` of the initial state `|N, zeta/sqrt(N)>`.
    pub fn zeta(&self) -> C64 {
        let modulus = match (self.zeta, self.zeta_sq_over_n) {
            (Some(z), _) => z,
            (None, Some(x)) => (x * self.n_spins as f64).sqrt(),
            (None, None) => 0.0,
        };
        C64::from_polar(modulus, self.zeta_phase)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_over_t0: Option<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    /// `|zeta|^2 / N`; cells outside the physical range fail individually.
    pub ratios: Vec<f64>,
    pub cross_section_n: Vec<usize>,
    pub cross_section_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub n_values: Vec<usize>,
    pub zeta_sq: f64,
    pub t_end_over_t0: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelConfig {
    pub n_spins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_sq_over_n: Option<f64>,
}

impl PanelConfig {
    pub fn zeta_sq(&self) -> f64 {
        self.zeta_sq.or(self.zeta_sq_over_n.map(|x| x * self.n_spins as f64)).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_phi: Option<usize>,
    pub panels: Vec<PanelConfig>,
}

impl SphereConfig {
    /// Grid for a panel of `n_spins`: explicit sizes win, otherwise at least
    /// `2N + 2` polar nodes (exact quadrature of `W^2`) and twice as many in
    /// azimuth.
    pub fn resolution(&self, n_spins: usize) -> (usize, usize) {
        let n_theta = self.n_theta.unwrap_or((2 * n_spins + 2).max(64));
        (n_theta, self.n_phi.unwrap_or(2 * n_theta))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JcConfig {
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub oracle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub time: TimeConfig,
    pub sweep: SweepConfig,
    pub series: SeriesConfig,
    pub sphere: SphereConfig,
    pub jc: JcConfig,
    pub run: RunSection,
}

pub const DEFAULT_OUT: &str = "revival-out";

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig {
                n_spins: 170,
                zeta: Some(4.0),
                zeta_sq_over_n: None,
                zeta_phase: 0.0,
                omega: 1.0,
                omega_qubit: 1.0,
                lambda: 1.0,
            },
            time: TimeConfig { t_start: 0.0, t_end: None, t_end_over_t0: Some(2.5), samples: 5001 },
            sweep: SweepConfig {
                n_values: (1..=20).map(|k| 5 * k).collect(),
                ratios: (0..=50).map(|k| k as f64 / 50.0).collect(),
                cross_section_n: (5..=30).collect(),
                cross_section_ratio: 0.5,
            },
            series: SeriesConfig { n_values: vec![12, 40, 70, 100], zeta_sq: 6.0, t_end_over_t0: 2.0, samples: 2001 },
            sphere: SphereConfig {
                n_theta: None,
                n_phi: None,
                panels: vec![
                    PanelConfig { n_spins: 12, zeta_sq: Some(6.0), zeta_sq_over_n: None },
                    PanelConfig { n_spins: 20, zeta_sq: None, zeta_sq_over_n: Some(0.16) },
                    PanelConfig { n_spins: 40, zeta_sq: None, zeta_sq_over_n: Some(0.16) },
                ],
            },
            jc: JcConfig { enabled: false, cutoff: None },
            run: RunSection { out: None, workers: None, oracle: false },
        }
    }
}

/// Keys that replace each other when set in a later layer.
const EXCLUSIVE: [(&str, &str, &str); 4] = [
    ("model", "zeta", "zeta_sq_over_n"),
    ("model", "zeta_sq_over_n", "zeta"),
    ("time", "t_end", "t_end_over_t0"),
    ("time", "t_end_over_t0", "t_end"),
];

fn merge(base: &mut Table, layer: Table) {
    for (key, value) in layer {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(l)) => {
                for (section, set, cleared) in EXCLUSIVE {
                    if key == section && l.contains_key(set) && !l.contains_key(cleared) {
                        b.remove(cleared);
                    }
                }
                merge(b, l);
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// `section.key=value` into a one-entry nested table; values parse as TOML
/// and fall back to a plain string.
pub fn parse_override(spec: &str) -> Result<Table, CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| config_error(format!("override `{spec}` is not key=value")))?;
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let mut keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_error(format!("override `{spec}` has an empty key")));
    }
    let last = keys.pop().expect("nonempty split");
    let mut table = Table::new();
    table.insert(last.to_string(), value);
    for k in keys.into_iter().rev() {
        let mut outer = Table::new();
        outer.insert(k.to_string(), Value::Table(table));
        table = outer;
    }
    Ok(table)
}

/// Builder for the layered configuration.
#[derive(Debug)]
pub struct ConfigLayers {
    table: Table,
}

impl ConfigLayers {
    pub fn new(defaults: &RunConfig) -> Self {
        let table = Table::try_from(defaults).expect("defaults serialize");
        Self { table }
    }

    pub fn file(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let layer: Table = text.parse().map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        merge(&mut self.table, layer);
        Ok(self)
    }

    pub fn layer(&mut self, layer: Table) -> &mut Self {
        merge(&mut self.table, layer);
        self
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<Value>) -> &mut Self {
        let mut inner = Table::new();
        inner.insert(key.into(), value.into());
        let mut outer = Table::new();
        outer.insert(section.into(), Value::Table(inner));
        self.layer(outer)
    }

    pub fn build(&self) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = Value::Table(self.table.clone()).try_into().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be a positive number, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be finite, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        if m.n_spins < 1 {
            return Err(config_error("model.n_spins must be at least 1"));
        }
        match (m.zeta, m.zeta_sq_over_n) {
            (Some(_), Some(_)) => return Err(config_error("set only one of model.zeta and model.zeta_sq_over_n")),
            (None, None) => return Err(config_error("one of model.zeta or model.zeta_sq_over_n is required")),
            (Some(z), None) if !(z.is_finite() && z >= 0.0) => {
                return Err(config_error(format!("model.zeta must be >= 0, got {z}")))
            }
            (None, Some(x)) if !(x.is_finite() && x >= 0.0) => {
                return Err(config_error(format!("model.zeta_sq_over_n must be >= 0, got {x}")))
            }
            _ => {}
        }
        finite("model.zeta_phase", m.zeta_phase)?;
        finite("model.omega", m.omega)?;
        finite("model.omega_qubit", m.omega_qubit)?;
        positive("model.lambda", m.lambda)?;

        let t = &self.time;
        finite("time.t_start", t.t_start)?;
        match (t.t_end, t.t_end_over_t0) {
            (Some(_), Some(_)) => return Err(config_error("set only one of time.t_end and time.t_end_over_t0")),
            (None, None) => return Err(config_error("one of time.t_end or time.t_end_over_t0 is required")),
            (Some(end), None) if !(end.is_finite() && end > t.t_start) => {
                return Err(config_error(format!("time grid [{}, {end}] is empty", t.t_start)))
            }
            (None, Some(r)) => positive("time.t_end_over_t0", r)?,
            _ => {}
        }
        if t.samples < 2 {
            return Err(config_error(format!("time.samples must be at least 2, got {}", t.samples)));
        }

        let s = &self.sweep;
        if s.n_values.is_empty() || s.ratios.is_empty() || s.cross_section_n.is_empty() {
            return Err(config_error("sweep axes must be nonempty"));
        }
        if s.n_values.contains(&0) || s.cross_section_n.contains(&0) {
            return Err(config_error("sweep N values must be at least 1"));
        }
        for &r in &s.ratios {
            finite("sweep.ratios", r)?;
        }
        if !(s.cross_section_ratio.is_finite() && s.cross_section_ratio >= 0.0) {
            return Err(config_error("sweep.cross_section_ratio must be >= 0"));
        }

        let se = &self.series;
        if se.n_values.is_empty() || se.n_values.contains(&0) {
            return Err(config_error("series.n_values must be nonempty and >= 1"));
        }
        if !(se.zeta_sq.is_finite() && se.zeta_sq > 0.0) {
            return Err(config_error("series.zeta_sq must be > 0"));
        }
        positive("series.t_end_over_t0", se.t_end_over_t0)?;
        if se.samples < 2 {
            return Err(config_error("series.samples must be at least 2"));
        }

        let sp = &self.sphere;
        if sp.n_theta == Some(0) || sp.n_phi == Some(0) {
            return Err(config_error("sphere grid must have at least one node in each direction"));
        }
        if sp.panels.is_empty() {
            return Err(config_error("sphere.panels must be nonempty"));
        }
        for p in &sp.panels {
            if p.n_spins < 1 {
                return Err(config_error("panel n_spins must be at least 1"));
            }
            match (p.zeta_sq, p.zeta_sq_over_n) {
                (Some(v), None) | (None, Some(v)) if v.is_finite() && v >= 0.0 => {}
                _ => {
                    return Err(config_error(format!(
                        "panel N={} needs exactly one nonnegative zeta_sq or zeta_sq_over_n",
                        p.n_spins
                    )))
                }
            }
        }

        if let Some(cutoff) = self.jc.cutoff {
            let needed = min_fock_cutoff(m.zeta());
            if cutoff < needed {
                return Err(config_error(format!("jc.cutoff {cutoff} is below the minimum {needed} for |zeta| = {}", m.zeta().norm())));
            }
        }
        if self.run.workers == Some(0) {
            return Err(config_error("run.workers must be at least 1"));
        }
        Ok(())
    }

    /// Fock cutoff for the oscillator reference.
    pub fn jc_cutoff(&self) -> usize {
        self.jc.cutoff.unwrap_or_else(|| min_fock_cutoff(self.model.zeta()).max(400))
    }

    /// Hash of everything that affects numerical output (output directory
    /// and worker count excluded).
    pub fn hash(&self, command: &str, modes: &[&str]) -> String {
        let mut canonical = self.clone();
        canonical.run.out = None;
        canonical.run.workers = None;
        let body = serde_json::json!({ "command": command, "modes": modes, "config": canonical });
        let digest = Sha256::digest(body.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
