//! Run configuration: one TOML file drives every subcommand.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use hedgepath::analysis::SweepSpec;
use hedgepath::escape::EscapeParams;
use hedgepath::graph::{BuildOptions, DubinOptions};
use hedgepath::market_data::{ChartSchema, DiscretizationParams, GbmParams, TimeGrid};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSection,
    pub grid: GridSection,
    pub model: ModelSection,
    #[serde(default)]
    pub build: BuildSection,
    #[serde(default)]
    pub gbm: Option<GbmSection>,
    #[serde(default)]
    pub price: PriceSection,
    #[serde(default)]
    pub pnl: PnlSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    pub output: OutputSection,
    /// Reserved worker-thread count; the pipeline currently runs on one.
    #[serde(default = "one")]
    pub threads: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub chart: PathBuf,
    /// Index of the numeraire price column (0 = s0).
    #[serde(default)]
    pub numeraire: usize,
    #[serde(default)]
    pub iso_timestamps: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub delta_minutes: i64,
    pub steps_per_window: usize,
    pub dhat1: String,
    pub dhat2: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// "A" (absolute asset-1 / relative asset-2 thresholds) or "B" (joint
    /// relative threshold).
    pub kind: String,
    pub delta: Option<f64>,
    pub delta0: Option<f64>,
    pub delta1: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BuildSection {
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default)]
    pub hull_shrink: f64,
    #[serde(default)]
    pub tree_mode: bool,
    /// Apply the historical pruning tables while growing the graph.
    #[serde(default = "yes")]
    pub use_tables: bool,
    #[serde(default)]
    pub dubin: Option<DubinSection>,
}

fn default_n_max() -> u32 {
    3
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DubinSection {
    pub alpha: f64,
    pub beta: f64,
    pub threshold: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbmSection {
    #[serde(default)]
    pub mu1: f64,
    pub sigma1: f64,
    #[serde(default)]
    pub mu2: f64,
    pub sigma2: f64,
    pub s0: [f64; 3],
    pub days: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceSection {
    /// asset1 | asset2 | call | put (call/put are on asset 2 at `strike`).
    #[serde(default = "asset2")]
    pub target: String,
    #[serde(default)]
    pub strike: f64,
    #[serde(default = "asset2")]
    pub trade: String,
}

fn asset2() -> String {
    "asset2".into()
}

impl Default for PriceSection {
    fn default() -> Self {
        PriceSection {
            target: asset2(),
            strike: 0.0,
            trade: asset2(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PnlSection {
    /// "upper", "lower", or a fixed number.
    #[serde(default = "upper")]
    pub capital: toml::Value,
    /// Added to the resolved capital.
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub epsilon: f64,
}

fn upper() -> toml::Value {
    toml::Value::String("upper".into())
}

fn default_samples() -> usize {
    1000
}

impl Default for PnlSection {
    fn default() -> Self {
        PnlSection {
            capital: upper(),
            offset: 0.0,
            samples: default_samples(),
            seed: 0,
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub deltas: Option<Vec<f64>>,
    pub delta0s: Option<Vec<f64>>,
    pub delta1s: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

pub struct LoadedConfig {
    pub config: RunConfig,
    /// Truncated SHA-256 of the raw config bytes; stamped into every output.
    pub hash: String,
}

pub fn load(path: &Path) -> Result<LoadedConfig, String> {
    let raw = std::fs::read(path)
        .map_err(|e| format!("cannot read config `{}`: {e}", path.display()))?;
    let config: RunConfig =
        toml::from_str(std::str::from_utf8(&raw).map_err(|e| format!("config not UTF-8: {e}"))?)
            .map_err(|e| format!("config `{}`: {e}", path.display()))?;
    if config.threads == 0 {
        return Err("threads: must be >= 1".into());
    }
    let mut hasher = Sha256::new();
    hasher.update(&raw);
    let hash = hasher
        .finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(LoadedConfig { config, hash })
}

impl RunConfig {
    pub fn grid(&self) -> Result<TimeGrid, String> {
        TimeGrid::new(self.grid.delta_minutes, self.grid.steps_per_window)
            .map_err(|e| format!("grid: {e}"))
    }

    pub fn disc(&self) -> Result<DiscretizationParams, String> {
        DiscretizationParams::new(&self.grid.dhat1, &self.grid.dhat2)
            .map_err(|e| format!("grid: {e}"))
    }

    pub fn schema(&self) -> ChartSchema {
        ChartSchema {
            iso_timestamps: self.input.iso_timestamps,
            ..ChartSchema::default()
        }
    }

    pub fn escape_params(&self) -> Result<EscapeParams, String> {
        let params = match self.model.kind.as_str() {
            "A" | "a" => EscapeParams::ModelA {
                delta0: self.model.delta0.ok_or("model.delta0: required for model A")?,
                delta1: self.model.delta1.ok_or("model.delta1: required for model A")?,
            },
            "B" | "b" => EscapeParams::ModelB {
                delta: self.model.delta.ok_or("model.delta: required for model B")?,
            },
            other => return Err(format!("model.kind: unknown model `{other}`")),
        };
        params.validate().map_err(|e| format!("model: {e}"))?;
        Ok(params)
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            n_max: self.build.n_max,
            hull_shrink: self.build.hull_shrink,
            tree_mode: self.build.tree_mode,
            dubin: self.build.dubin.as_ref().map(|d| DubinOptions {
                alpha: d.alpha,
                beta: d.beta,
                threshold: d.threshold,
            }),
        }
    }

    pub fn gbm_params(&self) -> Result<GbmParams, String> {
        let g = self.gbm.as_ref().ok_or("gbm: section required for simulate-gbm")?;
        Ok(GbmParams {
            mu1: g.mu1,
            sigma1: g.sigma1,
            mu2: g.mu2,
            sigma2: g.sigma2,
            s0: g.s0,
            days: g.days,
            seed: g.seed,
        })
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, String> {
        let s = self.sweep.as_ref().ok_or("sweep: section required for calibrate")?;
        match self.model.kind.as_str() {
            "A" | "a" => Ok(SweepSpec::ModelA {
                delta0s: s.delta0s.clone().ok_or("sweep.delta0s: required for model A")?,
                delta1s: s.delta1s.clone().ok_or("sweep.delta1s: required for model A")?,
            }),
            _ => Ok(SweepSpec::ModelB {
                deltas: s.deltas.clone().ok_or("sweep.deltas: required for model B")?,
            }),
        }
    }
}

pub const SCHEMA: &str = r#"# Configuration schema (TOML). All commands read the same file.

[input]
chart = "chart.csv"      # price chart CSV: timestamp,s0,s1,s2
numeraire = 0            # which price column discounts the other two (0..2)
iso_timestamps = false   # false: integer minutes; true: ISO-8601

[grid]
delta_minutes = 3        # bar spacing
steps_per_window = 130   # steps per trading window (window = this + 1 bars)
dhat1 = "0.01"           # price grid step for discounted asset 1 (decimal text)
dhat2 = "0.01"           # price grid step for discounted asset 2

[model]
kind = "B"               # "A": |dx1| >= delta0 or |dx2|/x2 >= delta1
                         # "B": max(|dx1|/x1, |dx2|/x2) >= delta
delta = 0.011            # model B threshold
#delta0 = 0.01           # model A absolute threshold (asset 1)
#delta1 = 0.02           # model A relative threshold (asset 2)

[build]                  # optional; defaults shown
n_max = 3                # rebalances to the horizon
hull_shrink = 0.0        # epsilon in [0,1): scale observed moves by (1-eps)
tree_mode = false        # true: no node merging (path-dependent payoffs)
use_tables = true        # apply historical pruning envelopes
#[build.dubin]           # optional cone-crossing truncation
#alpha = 0.5
#beta = 1.5
#threshold = 0.01

[gbm]                    # only for simulate-gbm
mu1 = 0.0                # per-step log drifts and volatilities
sigma1 = 0.004
mu2 = 0.0
sigma2 = 0.004
s0 = [1.0, 1.0, 1.0]     # numeraire, asset 1, asset 2
days = 12                # one day = one window of bars
seed = 0

[price]                  # optional; defaults shown
target = "asset2"        # asset1 | asset2 | call | put (call/put on asset 2)
strike = 0.0
trade = "asset2"         # asset1 | asset2

[pnl]                    # optional; defaults shown
capital = "upper"        # "upper" | "lower" | fixed number
offset = 0.0             # added to the resolved capital
samples = 1000
seed = 0
epsilon = 0.0            # profit classification slack

[sweep]                  # only for calibrate
deltas = [0.005, 0.01, 0.02]    # model B
#delta0s = [0.01, 0.02]         # model A
#delta1s = [0.02, 0.04]

[output]
dir = "out"              # artifact directory, created if missing

threads = 1              # reserved; the pipeline is single-threaded
"#;
