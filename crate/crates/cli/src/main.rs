//! `hdfl`: generate manifold data, train classifiers, probe and attack them,
//! estimate intrinsic dimension, and run reproducible dimension sweeps.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

mod plot;

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hdfl::attacks::{
    gradient_sign_attack, minimal_linear_attack, transfer_attack, write_attack_csv, AttackRecord,
    AttackResult,
};
use hdfl::classifiers::{
    train_decision_tree, train_logistic_regression, train_mlp, Classifier, Init, Model, TrainConfig,
};
use hdfl::geometry::{FoldParams, GaussianParams, ManifoldKind, SphereParams};
use hdfl::harness::{read_rows, run_experiment_with_workers, ExperimentConfig};
use hdfl::lid::{lid_mle, lid_mle_member, twonn, write_lid_csv, LidRecord};
use hdfl::probe::{
    auto_radius, fragility_stats, local_complexity, off_manifold_decomposition, DEFAULT_RHO,
};
use hdfl::{stats, Dataset, ErrorClass, ManifoldSpec, SeedSpec};

use plot::{render_svg, PlotError, PlotOptions, Scale};

#[derive(Parser)]
#[command(
    name = "hdfl",
    version,
    about = "Classifier fragility on low-dimensional data manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a labelled dataset from a manifold family.
    Gen(GenArgs),
    /// Fit a classifier to a dataset.
    Train(TrainArgs),
    /// Margins, off-manifold weight mass and local complexity.
    Probe(ProbeArgs),
    /// Perturb each point and optionally test transfer to other models.
    Attack(AttackArgs),
    /// Intrinsic-dimension estimates.
    Lid(LidArgs),
    /// Run a configured sweep and write result CSV plus provenance sidecar.
    Experiment(ExperimentArgs),
    /// Draw a result CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: String,
    /// Ambient dimension N.
    #[arg(long)]
    n: usize,
    /// Intrinsic dimension M (subspace_gaussians).
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    #[arg(long, env = "HDFL_SEED")]
    seed: u64,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    ambient_noise: Option<f64>,
    #[arg(long)]
    inner_radius: Option<f64>,
    #[arg(long)]
    outer_radius: Option<f64>,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    segment_length: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Logistic,
    Mlp,
    Tree,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "logistic")]
    model: ModelKind,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    hidden: Vec<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long, env = "HDFL_SEED")]
    seed: Option<u64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Also count independent hyperplanes near every point.
    #[arg(long)]
    complexity: bool,
    /// Neighbourhood radius, or `auto` for the median hyperplane distance.
    #[arg(long, default_value = "auto")]
    radius: String,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    /// Write per-point margins (linear models).
    #[arg(long)]
    margins: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackKind {
    Minimal,
    GradientSign,
}

impl AttackKind {
    fn name(self) -> &'static str {
        match self {
            AttackKind::Minimal => "minimal",
            AttackKind::GradientSign => "gradient_sign",
        }
    }
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "minimal")]
    kind: AttackKind,
    /// Step size of the gradient-sign attack.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = hdfl::attacks::DEFAULT_OVERSHOOT)]
    overshoot: f64,
    /// Multiply each perturbation before recording and transferring it.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Models to test each perturbation against.
    #[arg(long)]
    transfer_to: Vec<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LidEstimator {
    Mle,
    Twonn,
}

#[derive(Args)]
struct LidArgs {
    #[arg(value_enum)]
    estimator: LidEstimator,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = hdfl::lid::DEFAULT_K)]
    k: usize,
    /// Points scored against `--data` instead of its own members (MLE).
    #[arg(long)]
    query: Option<PathBuf>,
    #[arg(long)]
    group: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "HDFL_SEED")]
    seed: u64,
    /// `key=value` override of a config field; repeatable, last wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, short)]
    out: PathBuf,
    /// Provenance file; defaults to the output path with a `.json` extension.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    /// Metrics to draw; repeatable. Default: all.
    #[arg(long)]
    metric: Vec<String>,
    #[arg(long)]
    logx: bool,
    #[arg(long, conflicts_with = "logx")]
    loglog: bool,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    ylabel: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
    Core(hdfl::Error),
}

impl From<hdfl::Error> for Failure {
    fn from(e: hdfl::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Core(e) => match e.class() {
                ErrorClass::Data => 3,
                ErrorClass::Numeric => 4,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Data(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    Dataset::from_json_reader(open(path)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> CliResult<Model> {
    Model::from_json_reader(open(path)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            w.write_all(bytes)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let kind: ManifoldKind = a.kind.parse().map_err(|_| {
        Failure::Usage(format!(
            "unknown --kind `{}` (expected subspace_gaussians, concentric_spheres or folded_curve)",
            a.kind
        ))
    })?;
    let basis_seed = SeedSpec::new(a.seed, 0);
    let spec = match kind {
        ManifoldKind::SubspaceGaussians => {
            let mut p = GaussianParams::separated(
                a.m,
                a.separation.unwrap_or(GaussianParams::DEFAULT_SEPARATION),
                a.scale.unwrap_or(1.0),
            );
            p.ambient_noise = a.ambient_noise.unwrap_or(0.0);
            ManifoldSpec::subspace_gaussians(a.n, a.m, p, basis_seed)?
        }
        ManifoldKind::ConcentricSpheres => {
            let d = SphereParams::default();
            ManifoldSpec::concentric_spheres(
                a.n,
                SphereParams {
                    inner_radius: a.inner_radius.unwrap_or(d.inner_radius),
                    outer_radius: a.outer_radius.unwrap_or(d.outer_radius),
                },
            )?
        }
        ManifoldKind::FoldedCurve => {
            let base = FoldParams::with_gap(a.gap.unwrap_or(FoldParams::default().gap));
            let p = FoldParams {
                segment_length: a.segment_length.unwrap_or(base.segment_length),
                noise: a.noise.unwrap_or(base.noise),
                ..base
            };
            ManifoldSpec::folded_curve(a.n, p, basis_seed)?
        }
        ManifoldKind::Custom => {
            return Err(Failure::Usage("--kind custom cannot be generated".into()))
        }
    };
    let data = spec.generate(a.per_class, SeedSpec::new(a.seed, 1))?;
    let mut bytes = data.to_json_string()?.into_bytes();
    bytes.push(b'\n');
    emit(a.out.as_deref(), &bytes)
}

fn cmd_train(a: TrainArgs) -> CliResult {
    let data = read_dataset(&a.data)?;
    let model = match a.model {
        ModelKind::Tree => Model::Tree(train_decision_tree(&data)?),
        kind => {
            let seed = a.seed.ok_or_else(|| {
                Failure::Usage("--seed (or HDFL_SEED) is required to train this model".into())
            })?;
            let base = match kind {
                ModelKind::Logistic => TrainConfig::logistic(SeedSpec::new(seed, 0)),
                _ => TrainConfig::mlp(SeedSpec::new(seed, 0)),
            };
            let cfg = TrainConfig {
                learning_rate: a.lr.unwrap_or(base.learning_rate),
                epochs: a.epochs.unwrap_or(base.epochs),
                batch_size: a.batch_size.or(base.batch_size),
                init: a
                    .init_scale
                    .map(|scale| Init::Gaussian { scale })
                    .unwrap_or(base.init),
                ..base
            };
            match kind {
                ModelKind::Logistic => Model::Linear(train_logistic_regression(&data, &cfg)?),
                _ => Model::Mlp(train_mlp(&data, &a.hidden, &cfg)?),
            }
        }
    };
    let mut bytes = model.to_json_string()?.into_bytes();
    bytes.push(b'\n');
    emit(a.out.as_deref(), &bytes)
}

fn model_kind(m: &Model) -> &'static str {
    match m {
        Model::Linear(_) => "linear",
        Model::Mlp(_) => "mlp",
        Model::Tree(_) => "tree",
    }
}

fn cmd_probe(a: ProbeArgs) -> CliResult {
    let model = read_model(&a.model)?;
    let data = read_dataset(&a.data)?;
    let mut report = json!({
        "model": model_kind(&model),
        "points": data.len(),
        "accuracy": model.accuracy(&data)?,
    });
    match &model {
        Model::Linear(lin) => {
            let fs = fragility_stats(lin, &data, a.epsilon)?;
            let mut frag = json!({
                "min_margin": fs.min_margin,
                "median_margin": stats::median(&fs.margins),
                "epsilon": fs.epsilon,
                "frac_below": fs.frac_below,
            });
            if let Some(basis) = data.basis() {
                let dec = off_manifold_decomposition(lin, basis)?;
                frag["shrink_factor"] = json!(dec.shrink_factor);
                frag["angle"] = json!(dec.angle);
            }
            report["fragility"] = frag;
            if let Some(path) = &a.margins {
                let f = File::create(path)
                    .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
                fs.write_margins_csv(&data, BufWriter::new(f))?;
            }
        }
        _ if a.margins.is_some() => {
            return Err(Failure::Usage("--margins needs a linear model".into()));
        }
        _ => {}
    }
    if a.complexity {
        let fixed = if a.radius == "auto" {
            None
        } else {
            Some(a.radius.parse::<f64>().map_err(|_| {
                Failure::Usage(format!(
                    "--radius must be a number or `auto`, got `{}`",
                    a.radius
                ))
            })?)
        };
        let mut anchors = Vec::with_capacity(data.len());
        let mut counts = Vec::with_capacity(data.len());
        let mut complex = 0usize;
        for (i, x) in data.points().iter().enumerate() {
            let radius = match fixed {
                Some(r) => r,
                None => auto_radius(&model, x)?,
            };
            let r = local_complexity(&model, x, radius, a.rho)?;
            counts.push(r.independent_count as f64);
            complex += usize::from(r.is_locally_complex);
            anchors.push(json!({
                "index": i,
                "radius": r.radius,
                "nearby_count": r.nearby_count,
                "independent_count": r.independent_count,
                "ratio": r.ratio,
                "is_locally_complex": r.is_locally_complex,
            }));
        }
        report["complexity"] = json!({
            "radius": a.radius,
            "rho": a.rho,
            "min_independent_count": counts.iter().cloned().fold(f64::INFINITY, f64::min),
            "median_independent_count": stats::median(&counts),
            "max_independent_count": counts.iter().cloned().fold(0.0, f64::max),
            "locally_complex_fraction": complex as f64 / data.len().max(1) as f64,
            "anchors": anchors,
        });
    }
    let mut bytes = serde_json::to_string_pretty(&report)
        .map_err(hdfl::Error::from)?
        .into_bytes();
    bytes.push(b'\n');
    emit(a.out.as_deref(), &bytes)
}

fn cmd_attack(a: AttackArgs) -> CliResult {
    let model = read_model(&a.model)?;
    let data = read_dataset(&a.data)?;
    let targets = a
        .transfer_to
        .iter()
        .map(|p| Ok((p.display().to_string(), read_model(p)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut records = Vec::new();
    for (i, (x, y)) in data.iter().enumerate() {
        let result: AttackResult = match (a.kind, &model) {
            (AttackKind::Minimal, Model::Linear(lin)) => {
                minimal_linear_attack(lin, x, a.overshoot)?
            }
            (AttackKind::Minimal, _) => {
                return Err(Failure::Usage("--kind minimal needs a linear model".into()));
            }
            (AttackKind::GradientSign, m) => match gradient_sign_attack(m, x, y, a.epsilon) {
                Ok(r) => r,
                Err(hdfl::Error::NoGradientDirection) => continue,
                Err(e) => return Err(e.into()),
            },
        };
        let result = if a.scale == 1.0 {
            result
        } else {
            result.scaled(&model, a.scale)
        };
        records.push(AttackRecord {
            point_index: i,
            attack_kind: a.kind.name().into(),
            norm: result.norm,
            success: result.success,
            transfer_target: None,
            transferred: None,
        });
        for (name, target) in &targets {
            records.push(AttackRecord {
                point_index: i,
                attack_kind: a.kind.name().into(),
                norm: result.norm,
                success: result.success,
                transfer_target: Some(name.clone()),
                transferred: Some(transfer_attack(&result, target)?),
            });
        }
    }
    let mut buf = Vec::new();
    write_attack_csv(&records, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn cmd_lid(a: LidArgs) -> CliResult {
    let data = read_dataset(&a.data)?;
    let records = match a.estimator {
        LidEstimator::Twonn => {
            if a.query.is_some() {
                return Err(Failure::Usage(
                    "--query applies to the mle estimator only".into(),
                ));
            }
            let e = twonn(&data)?;
            vec![LidRecord {
                anchor_index: None,
                group: a.group.unwrap_or_else(|| "all".into()),
                estimator: e.estimator,
                k: e.k,
                value: e.value,
            }]
        }
        LidEstimator::Mle => match &a.query {
            Some(q) => {
                let query = read_dataset(q)?;
                let group = a.group.unwrap_or_else(|| "query".into());
                query
                    .points()
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let e = lid_mle(x, &data, a.k)?;
                        Ok(LidRecord {
                            anchor_index: Some(i),
                            group: group.clone(),
                            estimator: e.estimator,
                            k: a.k,
                            value: e.value,
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?
            }
            None => {
                let group = a.group.unwrap_or_else(|| "reference".into());
                (0..data.len())
                    .map(|i| {
                        let e = lid_mle_member(&data, i, a.k)?;
                        Ok(LidRecord {
                            anchor_index: Some(i),
                            group: group.clone(),
                            estimator: e.estimator,
                            k: a.k,
                            value: e.value,
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()?
            }
        },
    };
    let mut buf = Vec::new();
    write_lid_csv(&records, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn cmd_experiment(a: ExperimentArgs) -> CliResult {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| Failure::Data(format!("{}: {e}", a.config.display())))?;
    let cfg = ExperimentConfig::from_json_str(&text)?.with_overrides(&a.overrides)?;
    let result = run_experiment_with_workers(&cfg, a.seed, a.workers)?;
    let sidecar = a
        .sidecar
        .clone()
        .unwrap_or_else(|| a.out.with_extension("json"));
    if sidecar == a.out {
        return Err(Failure::Usage("--sidecar must differ from --out".into()));
    }
    if sidecar == a.config || a.out == a.config {
        return Err(Failure::Usage(format!(
            "output would overwrite the config file {}",
            a.config.display()
        )));
    }
    result.write(&a.out, &sidecar)?;
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> CliResult {
    let rows = read_rows(open(&a.input)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", a.input.display())))?;
    let scale = if a.loglog {
        Scale::LogLog
    } else if a.logx {
        Scale::LogX
    } else {
        Scale::Linear
    };
    let y_label = a
        .ylabel
        .clone()
        .unwrap_or_else(|| match a.metric.as_slice() {
            [single] => single.clone(),
            _ => "value".into(),
        });
    let title = a.title.clone().unwrap_or_else(|| {
        rows.first()
            .map(|r| r.experiment.as_str().to_string())
            .unwrap_or_default()
    });
    let svg = render_svg(
        &rows,
        &a.metric,
        &PlotOptions {
            scale,
            title,
            y_label,
        },
    )
    .map_err(|e| match e {
        PlotError::UnknownMetric(_) => Failure::Usage(e.to_string()),
        _ => Failure::Data(e.to_string()),
    })?;
    emit(a.out.as_deref(), svg.as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Lid(a) => cmd_lid(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hdfl: {}", f.message().replace('\n', " "));
            ExitCode::from(f.exit_code())
        }
    }
}
