use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use periodica::simulation::CoverageRule;
use periodica::{Candidates, PValueEstimator, SimDesign};

#[derive(Debug, Parser)]
#[command(name = "periodica", version, about = "Confidence sets for the period of unevenly sampled signals")]
pub struct Cli {
    /// Directory that receives every output file.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads; defaults to all cores. Never changes results.
    #[arg(long, global = true, env = "PERIODICA_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Profiled least-squares periodogram and its filtered peaks.
    Periodogram(PeriodogramArgs),
    /// Sign-flip randomization p-values and the confidence set.
    Confset(ConfsetArgs),
    /// Permutation test within phase classes for one period.
    Nptest(NptestArgs),
    /// Simplest jitter / augmentation design that identifies a period.
    Design(DesignArgs),
    /// Draw one synthetic series.
    Simulate(SimulateArgs),
    /// Coverage of the confidence set on synthetic data.
    Coverage(CoverageArgs),
    /// Sampling distribution of the periodogram peak.
    Peakdist(PeakdistArgs),
    /// Repeat a run from its manifest.json.
    #[serde(skip)]
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Periodogram(_) => "periodogram",
            Command::Confset(_) => "confset",
            Command::Nptest(_) => "nptest",
            Command::Design(_) => "design",
            Command::Simulate(_) => "simulate",
            Command::Coverage(_) => "coverage",
            Command::Peakdist(_) => "peakdist",
            Command::Rerun(_) => "rerun",
        }
    }

    pub fn input(&self) -> Option<&PathBuf> {
        match self {
            Command::Periodogram(a) => Some(&a.input),
            Command::Confset(a) => Some(&a.input),
            Command::Nptest(a) => Some(&a.input),
            Command::Design(a) => Some(&a.input),
            _ => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Periodogram(_) | Command::Rerun(_) => None,
            Command::Confset(a) => Some(a.seed),
            Command::Nptest(a) => Some(a.seed),
            Command::Design(a) => Some(a.seed),
            Command::Simulate(a) => Some(a.seed),
            Command::Coverage(a) => Some(a.seed),
            Command::Peakdist(a) => Some(a.seed),
        }
    }

    /// Fill every defaulted option so the manifest records the full config.
    pub fn resolve(&mut self) {
        match self {
            Command::Periodogram(a) => a.grid.resolve(DATA_GRID),
            Command::Confset(a) => a.grid.resolve(DATA_GRID),
            Command::Nptest(a) => a.grid.resolve(DATA_GRID),
            Command::Design(a) => a.grid.resolve(DATA_GRID),
            Command::Simulate(a) => a.sim.resolve(),
            Command::Coverage(a) => {
                a.sim.resolve_with_span(180);
                a.grid.resolve(COVERAGE_GRID);
            }
            Command::Peakdist(a) => {
                a.sim.resolve();
                a.grid.resolve(PEAK_GRID);
            }
            Command::Rerun(_) => {}
        }
    }
}

const DATA_GRID: (f64, f64, usize) = (0.1, 1000.0, 25_000);
const COVERAGE_GRID: (f64, f64, usize) = (0.5, 20.0, 2_500);
const PEAK_GRID: (f64, f64, usize) = (0.3, 5.0, 5_000);

/// Log-uniform period grid. Unset values take the command's defaults.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GridArgs {
    /// Smallest trial period (days).
    #[arg(long)]
    pub theta_min: Option<f64>,
    /// Largest trial period (days).
    #[arg(long)]
    pub theta_max: Option<f64>,
    /// Number of log-uniform grid points.
    #[arg(long = "grid")]
    pub points: Option<usize>,
}

impl GridArgs {
    fn resolve(&mut self, (lo, hi, g): (f64, f64, usize)) {
        self.theta_min.get_or_insert(lo);
        self.theta_max.get_or_insert(hi);
        self.points.get_or_insert(g);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    AddOne,
    Mean,
}

impl From<EstimatorArg> for PValueEstimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::AddOne => PValueEstimator::AddOne,
            EstimatorArg::Mean => PValueEstimator::PlugInMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidatesArg {
    Peaks,
    All,
}

impl From<CandidatesArg> for Candidates {
    fn from(c: CandidatesArg) -> Self {
        match c {
            CandidatesArg::Peaks => Candidates::Peaks,
            CandidatesArg::All => Candidates::AllGrid,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InferenceArgs {
    /// Test level; periods with p > alpha are accepted.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Monte Carlo replicates per tested period.
    #[arg(long, default_value_t = 10_000)]
    pub replicates: u64,
    /// Peaks below gamma times the highest peak are not tested.
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::AddOne)]
    pub estimator: EstimatorArg,
    #[arg(long, value_enum, default_value_t = CandidatesArg::Peaks)]
    pub candidates: CandidatesArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PeriodogramArgs {
    /// CSV with header `t,y,sigma`.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 0.2)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ConfsetArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct NptestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Null period.
    #[arg(long)]
    pub theta0: f64,
    /// Phase lattice width (days) deciding which times are congruent.
    #[arg(long, default_value_t = periodica::permutation::DEFAULT_QUANTUM)]
    pub quantum: f64,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: u64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::AddOne)]
    pub estimator: EstimatorArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMode {
    Jitter,
    Augment,
    Both,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DesignArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    /// Period assumed true when generating synthetic data.
    #[arg(long)]
    pub theta_hat: f64,
    #[arg(long, value_enum, default_value_t = DesignMode::Both)]
    pub mode: DesignMode,
    /// Accepted periods farther than this from theta-hat count as failures.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// A nuisance period that eps must separate from theta-hat.
    #[arg(long)]
    pub nuisance: Option<f64>,
    /// Synthetic datasets per design.
    #[arg(long, default_value_t = 100)]
    pub r_design: u64,
    /// Jitter half-widths to try (days); default 0, 0.02, ..., 0.30.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Extra observation counts to try; default 0, 5, ..., 150.
    #[arg(long, value_delimiter = ',')]
    pub extra: Option<Vec<usize>>,
    #[arg(long, default_value_t = 90)]
    pub window_days: u32,
    #[arg(long, default_value_t = 0.01)]
    pub micro_jitter: f64,
    /// Generate synthetic values without noise.
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignArg {
    Example1,
    #[value(alias = "1", name = "i")]
    I,
    #[value(alias = "2", name = "ii")]
    Ii,
    #[value(alias = "3", name = "iii")]
    Iii,
}

impl From<DesignArg> for SimDesign {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::Example1 => SimDesign::Example1,
            DesignArg::I => SimDesign::NightUniform,
            DesignArg::Ii => SimDesign::NightSinusoid,
            DesignArg::Iii => SimDesign::MidnightWindow,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimArgs {
    #[arg(long, value_enum)]
    pub design: DesignArg,
    #[arg(long)]
    pub n: usize,
    /// Signal period; defaults to sqrt(2).
    #[arg(long)]
    pub theta_star: Option<f64>,
    /// Noise standard deviation; defaults to 1 for example1, 1.5 otherwise.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Observing nights to draw from.
    #[arg(long)]
    pub span: Option<u32>,
    /// Period of the observing schedule (days).
    #[arg(long, default_value_t = 1.0)]
    pub theta_obs: f64,
}

impl SimArgs {
    fn resolve(&mut self) {
        let base = periodica::SimulationSpec::new(self.design.into(), self.n);
        self.theta_star.get_or_insert(base.theta_star);
        self.sigma.get_or_insert(base.sigma);
        self.span.get_or_insert(base.span_days);
    }

    fn resolve_with_span(&mut self, span: u32) {
        self.span.get_or_insert(span);
        self.resolve();
    }

    pub fn spec(&self) -> periodica::SimulationSpec {
        let mut spec = periodica::SimulationSpec::new(self.design.into(), self.n);
        spec.theta_star = self.theta_star.unwrap_or(spec.theta_star);
        spec.sigma = self.sigma.unwrap_or(spec.sigma);
        spec.span_days = self.span.unwrap_or(spec.span_days);
        spec.theta_obs = self.theta_obs;
        spec
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    /// Covered when the test at the grid point nearest theta* accepts.
    Nearest,
    /// Covered when that point is also a tested peak.
    Peaks,
}

impl From<RuleArg> for CoverageRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Nearest => CoverageRule::NearestPoint,
            RuleArg::Peaks => CoverageRule::PeakFiltered,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long, default_value_t = 500)]
    pub reps: u64,
    #[arg(long, value_enum, default_value_t = RuleArg::Nearest)]
    pub rule: RuleArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PeakdistArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    /// Argmax values closer than this share a mode.
    #[arg(long, default_value_t = 0.05)]
    pub merge_width: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// manifest.json written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
}
