//! JSON experiment configs, one schema per subcommand. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use sensorq::design::{BvpOptions, Target};
use sensorq::io::{load_quantizer, load_two_column};
use sensorq::pbpo::{Cost, DiscreteProblem, Estimator, Mode};
use sensorq::prob::{HciModel, NoiseModel, ParamPrior};
use sensorq::quadrature::DEFAULT_NODES;
use sensorq::quantizer::BinaryQuantizer;
use sensorq::rate::Candidate;
use sensorq::simulate::{default_ladder, DEFAULT_RUNS, DEFAULT_SEED};

pub type Result<T> = sensorq::Result<T>;

/// Resolves relative table paths against the config file's directory.
#[derive(Clone, Debug)]
pub struct Ctx {
    base: PathBuf,
}

impl Ctx {
    pub fn new(config: Option<&Path>) -> Self {
        let base = config
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Self { base }
    }

    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    TruncatedGaussian {
        mean: f64,
        variance: f64,
        lo: f64,
        hi: f64,
    },
    PointMass {
        at: f64,
    },
    Tabulated {
        csv: PathBuf,
    },
}

impl PriorSpec {
    pub fn build(&self, ctx: &Ctx) -> Result<ParamPrior> {
        match self {
            PriorSpec::Uniform { lo, hi } => ParamPrior::uniform(*lo, *hi),
            PriorSpec::Gaussian { mean, variance } => ParamPrior::gaussian(*mean, *variance),
            PriorSpec::TruncatedGaussian {
                mean,
                variance,
                lo,
                hi,
            } => ParamPrior::truncated_gaussian(*mean, *variance, *lo, *hi),
            PriorSpec::PointMass { at } => ParamPrior::point_mass(*at),
            PriorSpec::Tabulated { csv } => {
                let (xs, ds) = load_two_column(&ctx.path(csv))?;
                ParamPrior::tabulated(xs, ds)
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Delta,
    Gaussian { variance: f64 },
    RaisedCosine { center: f64 },
    Tabulated { csv: PathBuf },
}

impl NoiseSpec {
    pub fn build(&self, ctx: &Ctx) -> Result<NoiseModel> {
        match self {
            NoiseSpec::Delta => Ok(NoiseModel::delta()),
            NoiseSpec::Gaussian { variance } => NoiseModel::gaussian(*variance),
            NoiseSpec::RaisedCosine { center } => NoiseModel::raised_cosine(*center),
            NoiseSpec::Tabulated { csv } => {
                let (xs, ds) = load_two_column(&ctx.path(csv))?;
                NoiseModel::tabulated(xs, ds)
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuantizerSpec {
    Threshold { at: f64 },
    Sine { lo: f64, hi: f64 },
    Tabulated { csv: PathBuf },
}

impl QuantizerSpec {
    pub fn build(&self, ctx: &Ctx) -> Result<BinaryQuantizer> {
        match self {
            QuantizerSpec::Threshold { at } => BinaryQuantizer::threshold(*at),
            QuantizerSpec::Sine { lo, hi } => BinaryQuantizer::sine(*lo, *hi),
            QuantizerSpec::Tabulated { csv } => load_quantizer(&ctx.path(csv)),
        }
    }
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    LeastFavorable,
    Bayes {
        #[serde(default)]
        require_maximum: bool,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub prior: PriorSpec,
    pub noise: NoiseSpec,
    #[serde(default = "least_favorable")]
    pub target: TargetSpec,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn least_favorable() -> TargetSpec {
    TargetSpec::LeastFavorable
}

impl DesignConfig {
    pub fn target(&self) -> Target {
        match self.target {
            TargetSpec::LeastFavorable => Target::LeastFavorable,
            TargetSpec::Bayes { require_maximum } => Target::Bayes(BvpOptions {
                nodes: self.nodes,
                require_maximum,
                ..BvpOptions::default()
            }),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquicorrelatedSpec {
    pub sensors: usize,
    pub variance: f64,
    pub rhos: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherConfig {
    pub prior: PriorSpec,
    pub noise: NoiseSpec,
    pub quantizer: QuantizerSpec,
    pub sensors: usize,
    /// Fusion-center information; 0 when absent.
    pub f0: Option<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    pub equicorrelated: Option<EquicorrelatedSpec>,
}

fn reference_prior() -> PriorSpec {
    PriorSpec::Uniform { lo: -1.0, hi: 1.0 }
}

fn reference_noise() -> NoiseSpec {
    NoiseSpec::RaisedCosine { center: 0.0 }
}

fn reference_quantizer() -> QuantizerSpec {
    QuantizerSpec::Threshold { at: 0.0 }
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Every field defaults to the reference experiment.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "reference_prior")]
    pub prior: PriorSpec,
    #[serde(default = "reference_noise")]
    pub noise: NoiseSpec,
    #[serde(default = "reference_quantizer")]
    pub quantizer: QuantizerSpec,
    #[serde(default = "default_ladder")]
    pub sensors: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    SquaredError,
    AbsoluteError,
    Constant(f64),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    Mmse,
    /// `θ̂` per output tuple, sensor 0 most significant, symbols 1-based.
    Table(Vec<f64>),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Independent,
    Dependent,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub thetas: Vec<f64>,
    pub prior: Vec<f64>,
    /// `p(λ | θ)` rows; absent for conditionally independent sensors.
    pub latent: Option<Vec<Vec<f64>>>,
    /// Per sensor, `p(y | θ)` rows (or `p(y | λ)` with a latent table).
    pub sensors: Vec<Vec<Vec<f64>>>,
    pub levels: Vec<usize>,
    pub estimator: EstimatorSpec,
    #[serde(default = "squared")]
    pub cost: CostSpec,
}

fn squared() -> CostSpec {
    CostSpec::SquaredError
}

impl ProblemSpec {
    pub fn build(&self) -> Result<DiscreteProblem> {
        let estimator = match &self.estimator {
            EstimatorSpec::Mmse => Estimator::Mmse,
            EstimatorSpec::Table(t) => Estimator::Table(t.clone()),
        };
        let cost = match self.cost {
            CostSpec::SquaredError => Cost::SquaredError,
            CostSpec::AbsoluteError => Cost::AbsoluteError,
            CostSpec::Constant(c) => Cost::Constant(c),
        };
        match &self.latent {
            None => DiscreteProblem::independent(
                self.thetas.clone(),
                self.prior.clone(),
                self.sensors.clone(),
                self.levels.clone(),
                estimator,
                cost,
            ),
            Some(latent) => {
                let model = HciModel::new(
                    self.thetas.clone(),
                    self.prior.clone(),
                    latent.clone(),
                    self.sensors.clone(),
                )?;
                DiscreteProblem::hci(model, self.levels.clone(), estimator, cost)
            }
        }
    }
}

fn default_sweeps() -> usize {
    100
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PbpoConfig {
    pub problem: ProblemSpec,
    /// Defaults to `dependent` for latent-variable problems.
    pub mode: Option<ModeSpec>,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    /// Random restarts in addition to the all-ones start.
    #[serde(default)]
    pub starts: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub brute_force: bool,
}

impl PbpoConfig {
    pub fn mode(&self) -> Mode {
        match (self.mode, &self.problem.latent) {
            (Some(ModeSpec::Independent), _) | (None, None) => Mode::Independent,
            (Some(ModeSpec::Dependent), _) | (None, Some(_)) => Mode::Dependent,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    pub levels: u32,
    pub count: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub budget: u64,
    pub prior: PriorSpec,
    /// Gaussian observation noise variance.
    pub variance: f64,
    pub candidates: Vec<CandidateSpec>,
}

impl RateConfig {
    pub fn candidates(&self) -> Vec<Candidate> {
        self.candidates
            .iter()
            .map(|c| Candidate {
                levels: c.levels,
                count: c.count,
            })
            .collect()
    }
}

fn default_orders() -> Vec<u32> {
    vec![2, 3]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            orders: default_orders(),
        }
    }
}
