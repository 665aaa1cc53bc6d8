//! Library side of the `jbshap` command-line tool: config loading, the six
//! subcommand runners and output writing.
//!
//! Every runner computes all of its artifacts in memory first; nothing is
//! written to the output directory unless the whole run succeeded.

pub mod config;
pub mod dataset;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use jbshap::attack::{hiding_unfairness_experiment, AttackConfig};
use jbshap::axioms::{builder_by_name, check_transfer, run_battery, AxiomReport, GameInstanceGenerator};
use jbshap::density::{
    categorical_product, nce_density, nce_train, smoothed_empirical, empirical_density, ClassifierDoc,
    ConstantDensity, NoiseSpec, OodClassifier, TableDensity,
};
use jbshap::field::{LinearField, TableField};
use jbshap::learners::{FeedForwardNet, NetworkDoc};
use jbshap::metrics::{auc, deletion_curve, sensitivity_n, Auc, DeletionCurve};
use jbshap::seed::{derive, derive_named};
use jbshap::shapley::{GlobalAttribution, MAX_EXACT_DIM};
use jbshap::value_functions::{
    ces_supervised_fit, Bshap, CesEmpirical, CesSample, CesSupervised, Jbshap, Rbshap, Rjbshap, SampleSupport,
    SurrogateDoc, SurrogateValueFunction,
};
use jbshap::{
    exact_shapley, global_shapley, permutation_shapley, truncated_permutation_jbshap, AttributionVector, Baseline,
    BaselineDistribution, Coalition, DataPoint, Dataset, Density, Error, Field, GameContext, ValueFunction,
};
use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

pub use config::*;
pub use dataset::{load_dataset_csv, write_dataset_csv, DatasetError};

#[derive(Debug, ThisError)]
pub enum CliError {
    /// The config is unreadable, malformed or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A pipeline stage failed on a valid config.
    #[error("{0}")]
    Run(Error),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) | CliError::Output { .. } => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::Config(msg) => CliError::Config(msg.clone()),
            _ => CliError::Run(e),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Explain,
    Attack,
    Axioms,
    Metrics,
    TrainDensity,
    TrainSurrogate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Explain => "explain",
            Command::Attack => "attack",
            Command::Axioms => "axioms",
            Command::Metrics => "metrics",
            Command::TrainDensity => "train-density",
            Command::TrainSurrogate => "train-surrogate",
        }
    }
}

/// Files to write plus a human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
}

impl RunOutput {
    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Run(Error::InvalidInput(e.to_string())))?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    /// Creates `dir` if needed and writes every file.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| CliError::Output { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io(&path))?;
        }
        Ok(())
    }
}

pub fn load_config(cmd: Command, path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    let err = |e: serde_json::Error| bad(format!("{}: {e}", path.display()));
    Ok(match cmd {
        Command::Explain => ExperimentConfig::Explain(serde_json::from_str(&text).map_err(err)?),
        Command::Attack => ExperimentConfig::Attack(serde_json::from_str(&text).map_err(err)?),
        Command::Axioms => ExperimentConfig::Axioms(serde_json::from_str(&text).map_err(err)?),
        Command::Metrics => ExperimentConfig::Metrics(serde_json::from_str(&text).map_err(err)?),
        Command::TrainDensity => ExperimentConfig::TrainDensity(serde_json::from_str(&text).map_err(err)?),
        Command::TrainSurrogate => ExperimentConfig::TrainSurrogate(serde_json::from_str(&text).map_err(err)?),
    })
}

/// Loads the config at `path` and runs `cmd`; paths inside the config are
/// taken relative to the config's directory.
pub fn run(cmd: Command, path: &Path, seed: u64) -> Result<RunOutput, CliError> {
    let cfg = load_config(cmd, path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run_config(cfg, &base, seed)
}

pub fn run_config(cfg: ExperimentConfig, base: &Path, seed: u64) -> Result<RunOutput, CliError> {
    match cfg {
        ExperimentConfig::Explain(c) => run_explain(&c, base, seed),
        ExperimentConfig::Attack(c) => run_attack(c, seed),
        ExperimentConfig::Axioms(c) => run_axioms(&c, seed),
        ExperimentConfig::Metrics(c) => run_metrics(&c, base, seed),
        ExperimentConfig::TrainDensity(c) => run_train_density(&c, base, seed),
        ExperimentConfig::TrainSurrogate(c) => run_train_surrogate(&c, base, seed),
    }
}

fn read_json<D: for<'de> Deserialize<'de>>(base: &Path, p: &Path) -> Result<D, CliError> {
    let path = resolve(base, p);
    let text = fs::read_to_string(&path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
}

fn load_dataset(base: &Path, p: &Option<PathBuf>) -> Result<Option<Arc<Dataset>>, CliError> {
    p.as_ref()
        .map(|p| load_dataset_csv(&resolve(base, p)).map(Arc::new).map_err(CliError::from))
        .transpose()
}

fn require<'a>(data: &'a Option<Arc<Dataset>>, what: &str) -> Result<&'a Arc<Dataset>, CliError> {
    data.as_ref().ok_or_else(|| bad(format!("{what} needs a `dataset`")))
}

fn point(values: &[f64]) -> Result<DataPoint, CliError> {
    Ok(DataPoint::new(values.to_vec())?)
}

pub fn build_field(spec: &ModelSpec, base: &Path) -> Result<Field, CliError> {
    Ok(match spec {
        ModelSpec::Linear { weights, bias } => Arc::new(LinearField::new(weights.clone(), *bias)?),
        ModelSpec::Table { entries, default } => {
            let dim = entries.first().map(|e| e.point.len()).ok_or_else(|| bad("model table is empty"))?;
            Arc::new(TableField::new(dim, entries.iter().map(|e| (e.point.clone(), e.value)), *default)?)
        }
        ModelSpec::Network { path } => {
            let doc: NetworkDoc = read_json(base, path)?;
            Arc::new(FeedForwardNet::from_doc(&doc)?)
        }
    })
}

pub fn build_density(spec: &DensitySpec, base: &Path, data: &Option<Arc<Dataset>>) -> Result<Density, CliError> {
    Ok(match spec {
        DensitySpec::Table { entries } => {
            let dim = entries.first().map(|e| e.point.len()).ok_or_else(|| bad("density table is empty"))?;
            Arc::new(TableDensity::new(dim, entries.iter().map(|e| (e.point.clone(), e.value)))?)
        }
        DensitySpec::Constant { value } => Arc::new(ConstantDensity(*value)),
        DensitySpec::Categorical { tables } => Arc::new(categorical_product::<f64>(tables)?),
        DensitySpec::Empirical => Arc::new(empirical_density(require(data, "empirical density")?)?),
        DensitySpec::Smoothed { sigma } => Arc::new(smoothed_empirical(require(data, "smoothed density")?, *sigma)?),
        DensitySpec::Classifier { path } => {
            let doc: ClassifierDoc = read_json(base, path)?;
            Arc::new(nce_density(OodClassifier::from_doc(&doc)?))
        }
    })
}

pub fn build_baseline(spec: &BaselineSpec, data: &Option<Arc<Dataset>>) -> Result<Baseline, CliError> {
    Ok(match spec {
        BaselineSpec::Point { values } => Baseline::Fixed(point(values)?),
        BaselineSpec::Mean => Baseline::Fixed(require(data, "mean baseline")?.mean()?),
        BaselineSpec::Distribution { points, weights } => {
            let pts = points.iter().map(|p| point(p)).collect::<Result<Vec<_>, _>>()?;
            Baseline::Distribution(match weights {
                Some(w) => BaselineDistribution::new(pts, w.clone())?,
                None => BaselineDistribution::uniform(pts)?,
            })
        }
        BaselineSpec::Grid { supports } => Baseline::Distribution(BaselineDistribution::uniform_grid(supports)?),
        BaselineSpec::Dataset => {
            Baseline::Distribution(BaselineDistribution::uniform(require(data, "dataset baseline")?.rows().to_vec())?)
        }
    })
}

fn support(spec: &SupportSpec) -> SampleSupport {
    match spec {
        SupportSpec::Discrete { values } => SampleSupport::Discrete(values.clone()),
        SupportSpec::Box { lo, hi } => SampleSupport::Box {
            lo: lo.clone(),
            hi: hi.clone(),
        },
    }
}

/// Everything one explicand's game needs besides the explicand itself.
struct GameParts {
    field: Field,
    density: Option<Density>,
    baseline: Baseline,
    data: Option<Arc<Dataset>>,
    surrogate: Option<Arc<SurrogateValueFunction>>,
}

impl GameParts {
    fn check(&self, spec: &ValueFunctionSpec) -> Result<(), CliError> {
        if spec.needs_density() && self.density.is_none() {
            return Err(bad(format!("value function `{}` needs a `density`", spec.name())));
        }
        let distribution = matches!(self.baseline, Baseline::Distribution(_));
        if spec.needs_distribution() != distribution && !matches!(spec, ValueFunctionSpec::CesEmpirical | ValueFunctionSpec::CesSample { .. } | ValueFunctionSpec::CesSupervised { .. }) {
            let want = if distribution { "a fixed" } else { "a distribution" };
            return Err(bad(format!("value function `{}` needs {want} baseline", spec.name())));
        }
        if matches!(spec, ValueFunctionSpec::CesEmpirical) && self.data.is_none() {
            return Err(bad("value function `ces_empirical` needs a `dataset`"));
        }
        Ok(())
    }

    fn game(&self, spec: &ValueFunctionSpec, x: DataPoint, seed: u64) -> Result<Box<dyn ValueFunction>, CliError> {
        let mut ctx = GameContext::new(self.field.clone(), x, self.baseline.clone())?;
        if let Some(p) = &self.density {
            ctx = ctx.with_density(p.clone());
        }
        Ok(match spec {
            ValueFunctionSpec::Bshap => Box::new(Bshap::new(ctx)?),
            ValueFunctionSpec::Jbshap => Box::new(Jbshap::new(ctx)?),
            ValueFunctionSpec::Rbshap { samples } => Box::new(Rbshap::new(ctx, *samples, seed)?),
            ValueFunctionSpec::Rjbshap { samples } => Box::new(Rjbshap::new(ctx, *samples, seed)?),
            ValueFunctionSpec::CesEmpirical => Box::new(CesEmpirical::new(ctx, require(&self.data, "ces_empirical")?.clone())?),
            ValueFunctionSpec::CesSample { support: s, samples } => Box::new(CesSample::new(ctx, support(s), *samples, seed)?),
            ValueFunctionSpec::CesSupervised { .. } => {
                let sur = self.surrogate.clone().ok_or_else(|| bad("surrogate not loaded"))?;
                Box::new(CesSupervised::new(sur, ctx)?)
            }
        })
    }
}

fn estimate(v: &dyn ValueFunction, spec: &EstimatorSpec, seed: u64) -> Result<AttributionVector, CliError> {
    let d = v.dim();
    Ok(match spec {
        EstimatorSpec::Exact => {
            if d > MAX_EXACT_DIM {
                return Err(bad(format!("exact estimator supports d ≤ {MAX_EXACT_DIM}, got {d}")));
            }
            exact_shapley(v, d)?
        }
        EstimatorSpec::Permutation { permutations } => permutation_shapley(v, d, *permutations, seed)?,
        EstimatorSpec::Truncated { permutations, frac } => truncated_permutation_jbshap(v, d, *permutations, *frac, seed)?,
    })
}

fn game_parts(
    base: &Path,
    data: Option<Arc<Dataset>>,
    model: &ModelSpec,
    density: &Option<DensitySpec>,
    baseline: Baseline,
    vf: &ValueFunctionSpec,
) -> Result<GameParts, CliError> {
    let parts = GameParts {
        field: build_field(model, base)?,
        density: density.as_ref().map(|d| build_density(d, base, &data)).transpose()?,
        baseline,
        surrogate: match vf {
            ValueFunctionSpec::CesSupervised { path } => {
                let doc: SurrogateDoc = read_json(base, path)?;
                Some(Arc::new(SurrogateValueFunction::from_doc(&doc)?))
            }
            _ => None,
        },
        data,
    };
    parts.check(vf)?;
    Ok(parts)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplainedPoint {
    pub x: Vec<f64>,
    pub attribution: AttributionVector,
}

/// Contents of `attributions.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributionsReport {
    pub value_function: String,
    pub seed: u64,
    pub feature_names: Option<Vec<String>>,
    pub explicands: Vec<ExplainedPoint>,
    pub global: GlobalAttribution,
}

fn run_explain(cfg: &ExplainConfig, base: &Path, seed: u64) -> Result<RunOutput, CliError> {
    let data = load_dataset(base, &cfg.dataset)?;
    let baseline = build_baseline(&cfg.baseline, &data)?;
    let parts = game_parts(base, data.clone(), &cfg.model, &cfg.density, baseline, &cfg.value_function)?;
    let xs: Vec<DataPoint> = match &cfg.explicands {
        ExplicandSpec::Points { points } => points.iter().map(|p| point(p)).collect::<Result<_, _>>()?,
        ExplicandSpec::Rows { rows } => {
            let d = require(&data, "row explicands")?;
            rows.iter()
                .map(|&r| d.rows().get(r).cloned().ok_or_else(|| bad(format!("row {r} out of range ({} rows)", d.len()))))
                .collect::<Result<_, _>>()?
        }
        ExplicandSpec::AllRows => require(&data, "row explicands")?.rows().to_vec(),
    };
    if xs.is_empty() {
        return Err(bad("no explicands"));
    }
    let vf_seed = derive_named(seed, "value-function");
    let est_seed = derive_named(seed, "estimator");
    let mut explained = Vec::with_capacity(xs.len());
    for (k, x) in xs.into_iter().enumerate() {
        let v = parts.game(&cfg.value_function, x.clone(), derive(vf_seed, k as u64))?;
        let attribution = estimate(v.as_ref(), &cfg.estimator, derive(est_seed, k as u64)).map_err(|e| match e {
            CliError::Run(e) => CliError::Run(e.in_stage("explain")),
            e => e,
        })?;
        explained.push(ExplainedPoint {
            x: x.into_values(),
            attribution,
        });
    }
    let attrs: Vec<AttributionVector> = explained.iter().map(|e| e.attribution.clone()).collect();
    let global = global_shapley(&attrs, cfg.normalize_global)?;
    let report = AttributionsReport {
        value_function: cfg.value_function.name().to_string(),
        seed,
        feature_names: data.as_ref().and_then(|d| d.names().map(<[String]>::to_vec)),
        explicands: explained,
        global,
    };
    let mut out = RunOutput::default();
    let _ = writeln!(out.summary, "value function: {}", report.value_function);
    let _ = writeln!(out.summary, "{:<10} {:>14}", "feature", "global phi");
    for (j, phi) in report.global.phi.iter().enumerate() {
        let name = report.feature_names.as_ref().map_or_else(|| format!("x{j}"), |n| n[j].clone());
        let _ = writeln!(out.summary, "{name:<10} {phi:>14.6}");
    }
    out.json("attributions.json", &report)?;
    Ok(out)
}

fn run_attack(mut cfg: AttackConfig, seed: u64) -> Result<RunOutput, CliError> {
    cfg.seed = seed;
    let report = hiding_unfairness_experiment(&cfg)?;
    let mut out = RunOutput::default();
    let _ = writeln!(out.summary, "agreement rate: {:.4}", report.agreement_rate);
    let _ = writeln!(out.summary, "{:<16} {:>10} {:>10} {:>10}", "value function", "before", "after", "rel change");
    for s in &report.shifts {
        let p = report.protected;
        let _ = writeln!(
            out.summary,
            "{:<16} {:>10.4} {:>10.4} {:>10.4}",
            s.value_function.name(),
            s.before[p],
            s.after[p],
            s.relative_change
        );
    }
    out.json("attack_report.json", &report)?;
    out.text("attack_bars.csv", report.bar_chart_csv());
    Ok(out)
}

fn run_axioms(cfg: &AxiomsConfig, seed: u64) -> Result<RunOutput, CliError> {
    if cfg.builders.is_empty() || cfg.trials == 0 {
        return Err(bad("axioms needs at least one builder and one trial"));
    }
    if !(cfg.tolerance >= 0.0) {
        return Err(bad("tolerance must be nonnegative"));
    }
    if cfg.min_dim < 2 || cfg.min_dim > cfg.max_dim || cfg.max_dim > 6 {
        return Err(bad("dimensions must satisfy 2 ≤ min_dim ≤ max_dim ≤ 6"));
    }
    let gen = GameInstanceGenerator::new(derive_named(seed, "axioms"))
        .with_dims(cfg.min_dim, cfg.max_dim)
        .with_density_floor(cfg.density_floor);
    let mut reports: Vec<AxiomReport> = Vec::new();
    for name in &cfg.builders {
        let builder = builder_by_name(name).ok_or_else(|| bad(format!("unknown value function `{name}`")))?;
        reports.extend(run_battery(builder.as_ref(), &gen, cfg.trials, cfg.tolerance).map_err(|e| e.in_stage(name))?);
        if cfg.transfer {
            reports.push(check_transfer(builder.as_ref(), &gen, cfg.trials, cfg.tolerance).map_err(|e| e.in_stage(name))?);
        }
    }
    let mut out = RunOutput::default();
    let _ = writeln!(out.summary, "{:<14} {:<20} {:>6} {:>12}  result", "builder", "axiom", "n", "max viol");
    for r in &reports {
        let _ = writeln!(
            out.summary,
            "{:<14} {:<20} {:>6} {:>12.3e}  {}",
            r.builder,
            format!("{:?}", r.axiom),
            r.instances,
            r.max_violation,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    out.json("axioms.json", &reports)?;
    Ok(out)
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub value_function: String,
    pub attribution: AttributionVector,
    pub curve: DeletionCurve,
    pub auc: Auc,
    pub sensitivity_n: Option<f64>,
}

fn run_metrics(cfg: &MetricsConfig, base: &Path, seed: u64) -> Result<RunOutput, CliError> {
    let data = load_dataset(base, &cfg.dataset)?;
    let baseline = Baseline::Fixed(point(&cfg.baseline)?);
    let parts = game_parts(base, data, &cfg.model, &cfg.density, baseline.clone(), &cfg.value_function)?;
    let x = point(&cfg.explicand)?;
    let v = parts.game(&cfg.value_function, x.clone(), derive_named(seed, "value-function"))?;
    let attribution = estimate(v.as_ref(), &cfg.estimator, derive_named(seed, "estimator"))?;
    let mut ctx = GameContext::new(parts.field.clone(), x, baseline)?;
    if let Some(p) = &parts.density {
        ctx = ctx.with_density(p.clone());
    }
    let curve = deletion_curve(&attribution, &ctx, &cfg.fractions, cfg.target, cfg.order).map_err(|e| e.in_stage("deletion"))?;
    let area = auc(&curve)?;
    let sens = cfg
        .sensitivity
        .as_ref()
        .map(|s| sensitivity_n(&attribution, v.as_ref(), &s.fracs, s.trials, derive_named(seed, "sensitivity")))
        .transpose()
        .map_err(|e| e.in_stage("sensitivity"))?;
    let report = MetricsReport {
        value_function: cfg.value_function.name().to_string(),
        attribution,
        auc: area,
        sensitivity_n: sens,
        curve,
    };
    let mut out = RunOutput::default();
    let _ = writeln!(out.summary, "{:<10} {:>12}", "fraction", "value");
    for (q, v) in report.curve.fractions.iter().zip(&report.curve.values) {
        let _ = writeln!(out.summary, "{q:<10.3} {v:>12.6}");
    }
    let _ = writeln!(out.summary, "AUC: {:.6}", report.auc.value);
    if let Some(s) = report.sensitivity_n {
        let _ = writeln!(out.summary, "sensitivity-n: {s:.6}");
    }
    out.text("deletion_curve.csv", report.curve.to_csv());
    out.json("metrics.json", &report)?;
    Ok(out)
}

fn run_train_density(cfg: &TrainDensityConfig, base: &Path, seed: u64) -> Result<RunOutput, CliError> {
    let data = load_dataset(base, &Some(cfg.dataset.clone()))?.expect("dataset path given");
    if cfg.noise_ratio == 0 {
        return Err(bad("noise_ratio must be positive"));
    }
    cfg.nce.trainer.validate()?;
    let mut noise = NoiseSpec::new(build_baseline(&cfg.baseline, &Some(data.clone()))?, derive_named(seed, "noise"));
    noise.ratio = cfg.noise_ratio;
    let clf = nce_train(&data, &noise, &cfg.nce, derive_named(seed, "nce")).map_err(|e| e.in_stage("nce"))?;
    let held_noise = NoiseSpec {
        seed: derive_named(seed, "noise-check"),
        ..noise
    }
    .generate(&data)?;
    let accuracy = clf.accuracy(data.rows(), &held_noise);
    let mut out = RunOutput::default();
    let _ = writeln!(out.summary, "rows: {}  noise ratio: {}", data.len(), cfg.noise_ratio);
    if let Some(r) = clf.report() {
        let _ = writeln!(out.summary, "loss: {:.6} -> {:.6}", r.initial.total, r.last.total);
    }
    let _ = writeln!(out.summary, "accuracy vs fresh noise: {accuracy:.4}");
    out.json("density.json", &clf.to_doc())?;
    Ok(out)
}

fn run_train_surrogate(cfg: &TrainSurrogateConfig, base: &Path, seed: u64) -> Result<RunOutput, CliError> {
    let data = load_dataset(base, &Some(cfg.dataset.clone()))?.expect("dataset path given");
    cfg.surrogate.trainer.validate()?;
    let field = build_field(&cfg.model, base)?;
    let sur = ces_supervised_fit(field.as_ref(), &data, &cfg.surrogate, derive_named(seed, "surrogate"))
        .map_err(|e| e.in_stage("surrogate"))?;
    let mut out = RunOutput::default();
    let _ = writeln!(out.summary, "rows: {}  dim: {}", data.len(), data.dim());
    if let Some(r) = sur.report() {
        let _ = writeln!(out.summary, "loss: {:.6} -> {:.6}  ({} epochs)", r.initial.total, r.last.total, r.epochs);
    }
    out.json("surrogate.json", &sur.to_doc())?;
    Ok(out)
}

/// `v(∅)` and `v([d])` of a game, for quick sanity output.
pub fn endpoints(v: &dyn ValueFunction) -> Result<(f64, f64), Error> {
    let d = v.dim();
    Ok((v.value(&Coalition::empty(d))?, v.value(&Coalition::full(d))?))
}
