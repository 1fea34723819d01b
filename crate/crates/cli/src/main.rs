use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gbclust::{
    ablate, load_dataset, run, sweep, write_ablation, write_dataset, write_run, write_sweep, write_tree,
    AblationParams, Grid, InputOptions, LabelColumn, Lambda, MethodOptions, SelectBy,
};
use granular_ball::{synthetic, AbnormalPolicy, NmiNormalization, Variant};

#[derive(Parser)]
#[command(name = "gbclust", version, about = "Granular-ball clustering by local quality peaks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster once and write labels, a summary and plot data.
    Run(RunArgs),
    /// Evaluate a (lambda, k) grid against ground truth.
    Sweep(SweepArgs),
    /// Compare the full method with its ablated variants.
    Ablate(AblateArgs),
    /// Write a generated benchmark dataset as CSV (features then label).
    Synth(SynthArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV file of numeric features.
    #[arg(long)]
    input: PathBuf,
    /// Ground-truth column (0-based index or `last`); excluded from features.
    #[arg(long)]
    label_column: Option<LabelColumn>,
    /// First line is a header.
    #[arg(long)]
    header: bool,
    /// Field separator: a single character, or `tab`.
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// Use raw feature values instead of z-scores.
    #[arg(long)]
    no_standardize: bool,
}

impl InputArgs {
    fn options(&self) -> Result<InputOptions> {
        let delimiter = match self.delimiter.as_str() {
            "tab" | "\\t" => b'\t',
            s if s.len() == 1 => s.as_bytes()[0],
            s => bail!("delimiter must be one byte or `tab`, got {s:?}"),
        };
        Ok(InputOptions {
            path: self.input.clone(),
            label_column: self.label_column,
            header: self.header,
            delimiter,
            standardize: !self.no_standardize,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    PojgPlus,
    Jia,
    XieTkde,
    XieIcde,
    Combined,
    None,
}

impl From<PolicyArg> for AbnormalPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::PojgPlus => AbnormalPolicy::PojgPlus,
            PolicyArg::Jia => AbnormalPolicy::Jia,
            PolicyArg::XieTkde => AbnormalPolicy::XieTkde,
            PolicyArg::XieIcde => AbnormalPolicy::XieIcde,
            PolicyArg::Combined => AbnormalPolicy::Combined,
            PolicyArg::None => AbnormalPolicy::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Arithmetic,
    Geometric,
    Min,
    Max,
}

impl From<NormArg> for NmiNormalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Arithmetic => NmiNormalization::Arithmetic,
            NormArg::Geometric => NmiNormalization::Geometric,
            NormArg::Min => NmiNormalization::Min,
            NormArg::Max => NmiNormalization::Max,
        }
    }
}

#[derive(Args)]
struct MethodArgs {
    /// Number of clusters.
    #[arg(long, short = 'c')]
    clusters: usize,
    /// Offset added to the infimum of the adapted granularity range.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Abnormal-ball rule (ignored when --variant selects one).
    #[arg(long, value_enum, default_value = "pojg-plus")]
    policy: PolicyArg,
    /// full, or v1..v8.
    #[arg(long, default_value = "full")]
    variant: Variant,
    /// NMI normalization.
    #[arg(long, value_enum, default_value = "arithmetic")]
    nmi_norm: NormArg,
}

impl MethodArgs {
    fn options(&self) -> Result<MethodOptions> {
        if self.clusters == 0 {
            bail!("--clusters must be at least 1");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            bail!("--epsilon must be positive");
        }
        Ok(MethodOptions {
            clusters: self.clusters,
            epsilon: self.epsilon,
            policy: self.policy.into(),
            variant: self.variant,
        })
    }
}

#[derive(Args)]
struct LambdaArgs {
    /// Penalty coefficient, as a multiple of n^(1/3).
    #[arg(long)]
    lambda: Option<f64>,
    /// Read --lambda and the lambda grid as absolute values.
    #[arg(long)]
    absolute_lambda: bool,
}

impl LambdaArgs {
    fn spec(&self) -> Result<Option<Lambda>> {
        match self.lambda {
            None => Ok(None),
            Some(v) if v.is_nan() || v < 0.0 => bail!("--lambda must be non-negative"),
            Some(v) if self.absolute_lambda => Ok(Some(Lambda::Absolute(v))),
            Some(v) => Ok(Some(Lambda::Relative(v))),
        }
    }
}

#[derive(Args)]
struct GridArgs {
    /// Comma-separated lambda grid (default 0, 0.01, ..., 0.3 times n^(1/3)).
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Comma-separated k grid (default 1..20).
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<usize>>,
}

impl GridArgs {
    fn grid(&self, absolute: bool) -> Result<Grid> {
        let mut g = Grid::default();
        if let Some(l) = &self.lambda_grid {
            if l.iter().any(|v| v.is_nan() || *v < 0.0) {
                bail!("lambda grid values must be non-negative");
            }
            g.lambdas = l.clone();
        }
        if let Some(k) = &self.k_grid {
            if k.contains(&0) {
                bail!("k grid values must be at least 1");
            }
            g.ks = k.clone();
        }
        g.absolute = absolute;
        Ok(g)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    lambda: LambdaArgs,
    /// Number of nearest neighbors.
    #[arg(long, short = 'k')]
    k: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write the division tree to tree.csv.
    #[arg(long)]
    dump_tree: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    absolute_lambda: bool,
    /// Metric that picks the best cell.
    #[arg(long, value_enum, default_value = "nmi")]
    select_by: SelectArg,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectArg {
    Nmi,
    Ari,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    lambda: LambdaArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Fixed k; with --lambda, skips tuning.
    #[arg(long, short = 'k')]
    k: Option<usize>,
    /// Tune every variant on the grid instead of reusing the full method's best cell.
    #[arg(long)]
    tune_each: bool,
    /// Comma-separated variants (default: full and v1..v8).
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    /// Output CSV.
    #[arg(long, default_value = "out/ablation.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    TwoSpirals,
    ThreeSpirals,
    TwoMoons,
    JainLike,
    FlameLike,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    shape: Shape,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points per arm or moon, where applicable.
    #[arg(long, default_value_t = 150)]
    size: usize,
    /// Gaussian jitter, where applicable.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(a) => {
            let d = load_dataset(&a.input.options()?)?;
            let method = a.method.options()?;
            let Some(lambda) = a.lambda.spec()? else {
                bail!("run needs --lambda");
            };
            if a.k == 0 {
                bail!("-k must be at least 1");
            }
            let outcome = run(&d, &method, lambda, a.k, a.method.nmi_norm.into())?;
            write_run(&a.out, &outcome)?;
            if a.dump_tree {
                write_tree(&a.out.join("tree.csv"), &d, &method, lambda.resolve(d.n()))?;
            }
            let s = &outcome.summary;
            match s.metrics {
                Some(m) => println!("p={} gamma={} nmi={:.2} ari={:.2}", s.balls, s.gamma, m.nmi, m.ari),
                None => println!("p={} gamma={}", s.balls, s.gamma),
            }
        }
        Command::Sweep(a) => {
            let d = load_dataset(&a.input.options()?)?;
            let method = a.method.options()?;
            let grid = a.grid.grid(a.absolute_lambda)?;
            let select = match a.select_by {
                SelectArg::Nmi => SelectBy::Nmi,
                SelectArg::Ari => SelectBy::Ari,
            };
            let report = sweep(&d, &method, &grid, select, a.method.nmi_norm.into())?;
            write_sweep(&a.out, &report)?;
            match &report.best {
                Some(b) => println!(
                    "best lambda={} ({}) k={} nmi={:.2} ari={:.2} p={} [{} cells, {:.2}s]",
                    b.lambda,
                    b.lambda_grid,
                    b.k,
                    b.nmi.unwrap_or(0.0),
                    b.ari.unwrap_or(0.0),
                    b.balls,
                    report.cells.len(),
                    report.seconds_total
                ),
                None => bail!("no grid cell produced at least {} balls", method.clusters),
            }
        }
        Command::Ablate(a) => {
            let d = load_dataset(&a.input.options()?)?;
            let method = a.method.options()?;
            let grid = a.grid.grid(a.lambda.absolute_lambda)?;
            let params = match (a.lambda.spec()?, a.k) {
                (Some(lambda), Some(k)) => AblationParams::Fixed { lambda, k },
                (None, None) if a.tune_each => AblationParams::TuneEach(grid),
                (None, None) => AblationParams::TuneFull(grid),
                _ => bail!("give both --lambda and -k, or neither"),
            };
            let variants = a.variants.unwrap_or_else(|| Variant::ALL.to_vec());
            let rows = ablate(&d, &method, &variants, &params, a.method.nmi_norm.into())?;
            write_ablation(&a.out, &rows)?;
            for r in &rows {
                println!(
                    "{:<5} nmi={:>6} ari={:>6} p={:>5} {}",
                    r.variant.to_string(),
                    r.nmi.map_or("-".into(), |v| format!("{v:.2}")),
                    r.ari.map_or("-".into(), |v| format!("{v:.2}")),
                    r.balls.map_or("-".into(), |p| p.to_string()),
                    r.status
                );
            }
        }
        Command::Synth(a) => {
            let d = match a.shape {
                Shape::TwoSpirals => synthetic::two_spirals(a.size, a.noise, a.seed)?,
                Shape::ThreeSpirals => synthetic::spirals(3, a.size, std::f64::consts::PI / 2.0, 1.5, a.noise, a.seed)?,
                Shape::TwoMoons => synthetic::two_moons(a.size, a.noise, a.seed)?,
                Shape::JainLike => synthetic::jain_like(a.seed)?,
                Shape::FlameLike => synthetic::flame_like(a.seed)?,
            };
            if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_dataset(&a.out, &d)?;
        }
    }
    Ok(())
}
