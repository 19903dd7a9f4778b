//! JSON run configuration.

use std::path::{Path, PathBuf};

use fastham::protocols::circuit::LayeredCircuit;
use serde::Deserialize;

pub const MAX_GRID_POINTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    FastCz,
    Fanout,
    Ghz,
    W,
    Toffoli,
    MsExact,
    FourierLayer,
    CircuitSeq,
    CircuitPar,
    LrProbe,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::FastCz => "fast-cz",
            Protocol::Fanout => "fanout",
            Protocol::Ghz => "ghz",
            Protocol::W => "w",
            Protocol::Toffoli => "toffoli",
            Protocol::MsExact => "ms-exact",
            Protocol::FourierLayer => "fourier-layer",
            Protocol::CircuitSeq => "circuit-seq",
            Protocol::CircuitPar => "circuit-par",
            Protocol::LrProbe => "lr-probe",
        }
    }

    pub fn randomized(self) -> bool {
        matches!(self, Protocol::FourierLayer)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(rename = "N", default)]
    pub n_anc: Vec<usize>,
    #[serde(rename = "K", default)]
    pub k: Vec<usize>,
    #[serde(rename = "delta_T", default)]
    pub delta_t: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub protocol: Protocol,
    /// Ancilla count.
    #[serde(rename = "N")]
    pub n_anc: usize,
    #[serde(rename = "K", default)]
    pub k: Option<usize>,
    #[serde(rename = "delta_T", default)]
    pub delta_t: Option<f64>,
    #[serde(rename = "d_V", default)]
    pub d_v: Option<usize>,
    #[serde(default)]
    pub realization: Option<String>,
    /// Targets for fast-cz/fanout, qubits for ghz/w, controls for toffoli.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub circuit: Option<LayeredCircuit>,
    /// Path of a circuit JSON file, relative to the config file.
    #[serde(default)]
    pub circuit_file: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dump_state: bool,
    #[serde(default)]
    pub grid: Option<Grid>,
}

/// A malformed config, with the position of the problem when known.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn at(path: &Path, line: usize, col: usize, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{}:{line}:{col}: {msg}", path.display()))
}

/// Line of the first occurrence of `"key"` in `text`, for semantic errors.
fn key_line(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Config = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.rfind(" at line ").map_or(msg.clone(), |p| msg[..p].to_string());
            at(path, e.line(), e.column(), msg)
        })?;
        let bad = |key: &str, msg: String| at(path, key_line(text, key), 1, msg);
        if let Some(dt) = cfg.delta_t {
            if !(dt > 0.0 && dt < 1.0) {
                return Err(bad("delta_T", format!("delta_T = {dt} is outside the allowed range (0,1)")));
            }
        }
        if let Some(g) = &cfg.grid {
            if let Some(dt) = g.delta_t.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
                return Err(bad("delta_T", format!("grid delta_T = {dt} is outside the allowed range (0,1)")));
            }
        }
        if let Some(r) = &cfg.realization {
            if r != "boson" && r != "spin" {
                return Err(bad("realization", format!("realization `{r}` must be `boson` or `spin`")));
            }
        }
        if let Some(dv) = cfg.d_v {
            if dv % 2 == 0 {
                return Err(bad("d_V", format!("d_V = {dv} must be odd")));
            }
        }
        if let Some(file) = cfg.circuit_file.take() {
            if cfg.circuit.is_some() {
                return Err(bad("circuit_file", "give either `circuit` or `circuit_file`, not both".into()));
            }
            let full = path.parent().unwrap_or(Path::new(".")).join(&file);
            let ctext = std::fs::read_to_string(&full).map_err(|e| ConfigError(format!("{}: {e}", full.display())))?;
            let c = LayeredCircuit::from_json(&ctext).map_err(|e| ConfigError(format!("{}: {e}", full.display())))?;
            cfg.circuit = Some(c);
        }
        if let Some(c) = &cfg.circuit {
            c.validate().map_err(|e| bad("circuit", e.to_string()))?;
        }
        if matches!(cfg.protocol, Protocol::CircuitSeq | Protocol::CircuitPar) && cfg.circuit.is_none() {
            return Err(bad("protocol", format!("protocol `{}` needs `circuit` or `circuit_file`", cfg.protocol.name())));
        }
        Ok(cfg)
    }

    /// Grid points `(N, K, δ_T)`; missing axes take the base value.
    pub fn grid_points(&self) -> Result<Vec<(usize, Option<usize>, Option<f64>)>, ConfigError> {
        let g = self.grid.clone().unwrap_or_default();
        let ns = if g.n_anc.is_empty() { vec![self.n_anc] } else { g.n_anc };
        let ks: Vec<Option<usize>> = if g.k.is_empty() { vec![self.k] } else { g.k.into_iter().map(Some).collect() };
        let dts: Vec<Option<f64>> = if g.delta_t.is_empty() { vec![self.delta_t] } else { g.delta_t.into_iter().map(Some).collect() };
        let total = ns.len().saturating_mul(ks.len()).saturating_mul(dts.len());
        if total > MAX_GRID_POINTS {
            return Err(ConfigError(format!("grid has {total} points; at most {MAX_GRID_POINTS} are allowed")));
        }
        let mut pts = Vec::with_capacity(total);
        for &n in &ns {
            for &k in &ks {
                for &dt in &dts {
                    pts.push((n, k, dt));
                }
            }
        }
        Ok(pts)
    }

    pub fn at_point(&self, (n, k, dt): (usize, Option<usize>, Option<f64>)) -> Config {
        Config { n_anc: n, k, delta_t: dt, grid: None, ..self.clone() }
    }
}
