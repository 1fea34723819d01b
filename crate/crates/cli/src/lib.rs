//! Runs, parameter sweeps and ablation studies over CSV datasets, plus the
//! writers for their result files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use granular_ball::generation::GenerationStats;
use granular_ball::graph::cluster_balls;
use granular_ball::{
    ari, cluster, generate, nmi_with, AbnormalPolicy, ClusterConfig, ClusteringResult64, Dataset64, NmiNormalization,
    QualityConfig, Variant,
};
use rayon::prelude::*;
use serde::Serialize;

/// How `--lambda` is read.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Lambda {
    /// Multiple of `n^(1/3)`.
    Relative(f64),
    Absolute(f64),
}

impl Lambda {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Lambda::Relative(m) => m * (n as f64).cbrt(),
            Lambda::Absolute(v) => v,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InputOptions {
    pub path: PathBuf,
    pub label_column: Option<LabelColumn>,
    pub header: bool,
    pub delimiter: u8,
    pub standardize: bool,
}

/// Column index, where `Last` is resolved once the width is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "last" | "-1" => Ok(LabelColumn::Last),
            _ => s
                .parse()
                .map(LabelColumn::Index)
                .map_err(|_| format!("expected a column index or 'last', got {s:?}")),
        }
    }
}

fn first_record_width(path: &Path, delimiter: u8) -> Result<usize> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().any(|c| !c.trim().is_empty()) {
            return Ok(rec.len());
        }
    }
    bail!("{} has no rows", path.display())
}

pub fn load_dataset(opts: &InputOptions) -> Result<Dataset64> {
    let label_column = match opts.label_column {
        None => None,
        Some(LabelColumn::Index(i)) => Some(i),
        Some(LabelColumn::Last) => Some(first_record_width(&opts.path, opts.delimiter)?.saturating_sub(1)),
    };
    let d = Dataset64::load_delimited(&opts.path, opts.delimiter, opts.header, label_column)
        .with_context(|| format!("loading {}", opts.path.display()))?;
    Ok(if opts.standardize { d.standardize() } else { d })
}

#[derive(Clone, Copy, Debug)]
pub struct MethodOptions {
    pub clusters: usize,
    pub epsilon: f64,
    pub policy: AbnormalPolicy,
    pub variant: Variant,
}

impl MethodOptions {
    /// Configuration for one run. A variant other than the full method
    /// overrides `policy`.
    pub fn config(&self, lambda: f64, k: usize) -> ClusterConfig<f64> {
        let mut cfg = ClusterConfig::new(self.clusters, lambda, k);
        cfg.generation.epsilon = self.epsilon;
        cfg.generation.policy = self.policy;
        if self.variant != Variant::Full {
            cfg = self.variant.configure(&cfg);
        }
        cfg
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Scores {
    /// Percent, as in the usual tables.
    pub nmi: f64,
    pub ari: f64,
}

pub fn score(truth: &[i64], labels: &[usize], norm: NmiNormalization) -> Result<Scores> {
    let pred: Vec<i64> = labels.iter().map(|&l| l as i64).collect();
    Ok(Scores {
        nmi: 100.0 * nmi_with(truth, &pred, norm)?,
        ari: 100.0 * ari(truth, &pred)?,
    })
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub n: usize,
    pub m: usize,
    pub clusters: usize,
    pub variant: Variant,
    pub policy: AbnormalPolicy,
    pub lambda: f64,
    pub lambda_spec: Lambda,
    pub k_requested: usize,
    pub k_effective: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub balls: usize,
    pub metrics: Option<Scores>,
    pub generation: Option<GenerationStats>,
    pub seconds_total: f64,
    pub seconds_generation: f64,
    pub seconds_graph: f64,
    pub seconds_distances: f64,
    pub seconds_assignment: f64,
}

pub struct RunOutcome {
    pub result: ClusteringResult64,
    pub summary: RunSummary,
}

pub fn run(
    d: &Dataset64,
    method: &MethodOptions,
    lambda: Lambda,
    k: usize,
    norm: NmiNormalization,
) -> Result<RunOutcome> {
    let t = Instant::now();
    let cfg = method.config(lambda.resolve(d.n()), k);
    let result = cluster(d, &cfg)?;
    let seconds_total = t.elapsed().as_secs_f64();
    let metrics = d
        .labels()
        .map(|truth| score(truth, &result.instance_labels, norm))
        .transpose()?;
    let summary = RunSummary {
        n: d.n(),
        m: d.m(),
        clusters: method.clusters,
        variant: method.variant,
        policy: cfg.generation.policy,
        lambda: cfg.generation.lambda,
        lambda_spec: lambda,
        k_requested: k,
        k_effective: result.k,
        gamma: result.gamma,
        epsilon: method.epsilon,
        balls: result.balls.len(),
        metrics,
        generation: result.generation.clone(),
        seconds_total,
        seconds_generation: result.timings.seconds_generation,
        seconds_graph: result.timings.seconds_graph,
        seconds_distances: result.timings.seconds_distances,
        seconds_assignment: result.timings.seconds_assignment,
    };
    Ok(RunOutcome { result, summary })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["index", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

/// Writes labels.csv, result.json, balls.csv, edges.csv and decision.csv.
pub fn write_run(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let r = &outcome.result;
    write_labels(&dir.join("labels.csv"), &r.instance_labels)?;
    write_json(&dir.join("result.json"), &outcome.summary)?;

    let mut w = csv_writer(&dir.join("balls.csv"))?;
    let m = r.balls.first().map_or(0, |b| b.dim());
    let mut header = vec![
        "ball".to_string(),
        "label".into(),
        "size".into(),
        "avg_radius".into(),
        "max_radius".into(),
        "quality".into(),
    ];
    header.extend((0..m).map(|j| format!("c{j}")));
    w.write_record(&header)?;
    for (i, b) in r.balls.iter().enumerate() {
        let mut rec = vec![
            i.to_string(),
            r.ball_labels[i].to_string(),
            b.len().to_string(),
            b.avg_radius().to_string(),
            b.max_radius().to_string(),
            r.quality[i].to_string(),
        ];
        rec.extend(b.center().iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join("edges.csv"))?;
    w.write_record(["source", "target", "weight"])?;
    for &(s, t, wt) in &r.edges {
        w.write_record([s.to_string(), t.to_string(), wt.to_string()])?;
    }
    w.flush()?;

    let mut w = csv_writer(&dir.join("decision.csv"))?;
    w.write_record([
        "ball",
        "relative_quality",
        "relative_distance",
        "relative_neighbor",
        "decision_value",
        "center",
    ])?;
    for i in 0..r.balls.len() {
        let center = r.centers.iter().position(|&c| c == i).map_or(0, |l| l + 1);
        w.write_record([
            i.to_string(),
            r.relative_quality[i].to_string(),
            r.relative_distance[i].to_string(),
            r.relative_neighbor[i].to_string(),
            r.decision_value[i].to_string(),
            center.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the division tree as `node,parent,depth,size,avg_radius,max_radius,penalized_quality`.
pub fn write_tree(path: &Path, d: &Dataset64, method: &MethodOptions, lambda: f64) -> Result<()> {
    let cfg = method.config(lambda, 1);
    let gen = generate(d, &cfg.generation)?;
    let qcfg = gen.quality_config(&cfg.generation.quality);
    let mut w = csv_writer(path)?;
    w.write_record([
        "node",
        "parent",
        "depth",
        "size",
        "avg_radius",
        "max_radius",
        "penalized_quality",
    ])?;
    for (id, node) in gen.tree.nodes().iter().enumerate() {
        let pq = granular_ball::quality::penalized_quality(&node.ball, &qcfg, lambda);
        w.write_record([
            id.to_string(),
            node.parent.map_or(String::new(), |p| p.to_string()),
            node.depth.to_string(),
            node.ball.len().to_string(),
            node.ball.avg_radius().to_string(),
            node.ball.max_radius().to_string(),
            pq.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Grid axes. `lambdas` are multiples of `n^(1/3)` unless `absolute`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub lambdas: Vec<f64>,
    pub ks: Vec<usize>,
    pub absolute: bool,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            lambdas: (0..=30).map(|i| i as f64 / 100.0).collect(),
            ks: (1..=20).collect(),
            absolute: false,
        }
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.lambdas.len() * self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn spec(&self, v: f64) -> Lambda {
        if self.absolute {
            Lambda::Absolute(v)
        } else {
            Lambda::Relative(v)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectBy {
    #[default]
    Nmi,
    Ari,
}

#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    /// Grid value as given (multiple of `n^(1/3)` for relative grids).
    pub lambda_grid: f64,
    pub lambda: f64,
    pub k: usize,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub balls: usize,
    pub gamma: f64,
    /// Generation time for the row plus this cell's clustering time.
    pub seconds: f64,
    pub status: String,
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub cells: Vec<Cell>,
    pub best: Option<Cell>,
    pub select_by: SelectBy,
    pub variant: Variant,
    pub seconds_total: f64,
}

fn better(a: &Cell, b: &Cell, by: SelectBy) -> bool {
    let key = |c: &Cell| match by {
        SelectBy::Nmi => (c.nmi, c.ari),
        SelectBy::Ari => (c.ari, c.nmi),
    };
    let (a1, a2) = key(a);
    let (b1, b2) = key(b);
    let (a1, a2, b1, b2) = (
        a1.unwrap_or(f64::NEG_INFINITY),
        a2.unwrap_or(f64::NEG_INFINITY),
        b1.unwrap_or(f64::NEG_INFINITY),
        b2.unwrap_or(f64::NEG_INFINITY),
    );
    // Cells arrive in (lambda, k) order, so strict improvement keeps the
    // smaller lambda and k on ties.
    a1 > b1 || (a1 == b1 && a2 > b2)
}

/// Evaluates every grid cell. Balls are generated once per penalty value and
/// shared across `k`.
pub fn sweep(
    d: &Dataset64,
    method: &MethodOptions,
    grid: &Grid,
    select_by: SelectBy,
    norm: NmiNormalization,
) -> Result<SweepReport> {
    let Some(truth) = d.labels() else {
        bail!("sweep needs ground-truth labels; pass --label-column");
    };
    if grid.is_empty() {
        bail!("empty sweep grid");
    }
    let t = Instant::now();
    let rows: Vec<Vec<Cell>> = grid
        .lambdas
        .par_iter()
        .map(|&lv| sweep_row(d, truth, method, grid.spec(lv), lv, &grid.ks, norm))
        .collect::<Result<_>>()?;
    let cells: Vec<Cell> = rows.into_iter().flatten().collect();
    let mut best: Option<&Cell> = None;
    for c in cells.iter().filter(|c| c.status == "ok") {
        if best.is_none_or(|b| better(c, b, select_by)) {
            best = Some(c);
        }
    }
    Ok(SweepReport {
        best: best.cloned(),
        cells,
        select_by,
        variant: method.variant,
        seconds_total: t.elapsed().as_secs_f64(),
    })
}

fn sweep_row(
    d: &Dataset64,
    truth: &[i64],
    method: &MethodOptions,
    spec: Lambda,
    lambda_grid: f64,
    ks: &[usize],
    norm: NmiNormalization,
) -> Result<Vec<Cell>> {
    let lambda = spec.resolve(d.n());
    let base = method.config(lambda, 1);
    let t = Instant::now();
    let gen = generate(d, &base.generation)?;
    let gen_seconds = t.elapsed().as_secs_f64();
    let qcfg: QualityConfig<f64> = gen.quality_config(&base.generation.quality);
    ks.iter()
        .map(|&k| {
            let t = Instant::now();
            let mut cell = Cell {
                lambda_grid,
                lambda,
                k,
                nmi: None,
                ari: None,
                balls: gen.balls.len(),
                gamma: gen.gamma,
                seconds: 0.0,
                status: "ok".into(),
            };
            match cluster_balls(d.n(), gen.balls.clone(), &qcfg, method.clusters, k, base.ablation) {
                Ok(res) => {
                    let s = score(truth, &res.instance_labels, norm)?;
                    cell.nmi = Some(s.nmi);
                    cell.ari = Some(s.ari);
                }
                Err(granular_ball::Error::TooFewBallsForClusters { .. }) => {
                    cell.status = "too_few_balls".into();
                }
                Err(e) => return Err(e.into()),
            }
            cell.seconds = gen_seconds + t.elapsed().as_secs_f64();
            Ok(cell)
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn write_sweep(dir: &Path, report: &SweepReport) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = csv_writer(&dir.join("grid.csv"))?;
    w.write_record([
        "lambda_grid",
        "lambda",
        "k",
        "nmi",
        "ari",
        "p",
        "gamma",
        "seconds",
        "status",
    ])?;
    for c in &report.cells {
        w.write_record([
            c.lambda_grid.to_string(),
            c.lambda.to_string(),
            c.k.to_string(),
            opt(c.nmi),
            opt(c.ari),
            c.balls.to_string(),
            c.gamma.to_string(),
            format!("{:.6}", c.seconds),
            c.status.clone(),
        ])?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct Best<'a> {
        best: &'a Option<Cell>,
        select_by: SelectBy,
        variant: Variant,
        cells: usize,
        seconds_total: f64,
    }
    write_json(
        &dir.join("best.json"),
        &Best {
            best: &report.best,
            select_by: report.select_by,
            variant: report.variant,
            cells: report.cells.len(),
            seconds_total: report.seconds_total,
        },
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub policy: AbnormalPolicy,
    pub lambda: f64,
    pub k: usize,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub balls: Option<usize>,
    pub seconds: f64,
    pub status: String,
}

/// Parameters for each variant in an ablation study.
#[derive(Clone, Debug)]
pub enum AblationParams {
    /// Same penalty and `k` for every variant.
    Fixed { lambda: Lambda, k: usize },
    /// Each variant picks its best grid cell.
    TuneEach(Grid),
    /// Tune the full method on the grid, then reuse its cell for all variants.
    TuneFull(Grid),
}

pub fn ablate(
    d: &Dataset64,
    method: &MethodOptions,
    variants: &[Variant],
    params: &AblationParams,
    norm: NmiNormalization,
) -> Result<Vec<AblationRow>> {
    if d.labels().is_none() {
        bail!("ablate needs ground-truth labels; pass --label-column");
    }
    let fixed = match params {
        AblationParams::Fixed { lambda, k } => Some((lambda.resolve(d.n()), *k)),
        AblationParams::TuneFull(grid) => {
            let full = MethodOptions {
                variant: Variant::Full,
                ..*method
            };
            let report = sweep(d, &full, grid, SelectBy::Nmi, norm)?;
            let best = report.best.context("no grid cell produced enough balls")?;
            Some((best.lambda, best.k))
        }
        AblationParams::TuneEach(_) => None,
    };
    variants
        .iter()
        .map(|&variant| {
            let opts = MethodOptions { variant, ..*method };
            let policy = opts.config(0.0, 1).generation.policy;
            let t = Instant::now();
            let (lambda, k, outcome) = match (fixed, params) {
                (Some((lambda, k)), _) => {
                    let out = run(d, &opts, Lambda::Absolute(lambda), k, norm);
                    (
                        lambda,
                        k,
                        out.map(|o| (o.summary.metrics.unwrap_or_default(), o.summary.balls)),
                    )
                }
                (None, AblationParams::TuneEach(grid)) => {
                    let report = sweep(d, &opts, grid, SelectBy::Nmi, norm)?;
                    match report.best {
                        Some(b) => (
                            b.lambda,
                            b.k,
                            Ok((
                                Scores {
                                    nmi: b.nmi.unwrap_or(0.0),
                                    ari: b.ari.unwrap_or(0.0),
                                },
                                b.balls,
                            )),
                        ),
                        None => (f64::NAN, 0, Err(anyhow::anyhow!("no grid cell produced enough balls"))),
                    }
                }
                (None, _) => unreachable!("fixed parameters resolved above"),
            };
            let seconds = t.elapsed().as_secs_f64();
            Ok(match outcome {
                Ok((s, balls)) => AblationRow {
                    variant,
                    policy,
                    lambda,
                    k,
                    nmi: Some(s.nmi),
                    ari: Some(s.ari),
                    balls: Some(balls),
                    seconds,
                    status: "ok".into(),
                },
                Err(e) => AblationRow {
                    variant,
                    policy,
                    lambda,
                    k,
                    nmi: None,
                    ari: None,
                    balls: None,
                    seconds,
                    status: format!("error: {e:#}"),
                },
            })
        })
        .collect()
}

pub fn write_ablation(path: &Path, rows: &[AblationRow]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv_writer(path)?;
    w.write_record([
        "variant", "policy", "lambda", "k", "nmi", "ari", "p", "seconds", "status",
    ])?;
    for r in rows {
        w.write_record([
            r.variant.to_string(),
            serde_json::to_value(r.policy)?.as_str().unwrap_or_default().to_string(),
            r.lambda.to_string(),
            r.k.to_string(),
            opt(r.nmi),
            opt(r.ari),
            r.balls.map_or(String::new(), |p| p.to_string()),
            format!("{:.6}", r.seconds),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a dataset as `x0,...,label` without a header.
pub fn write_dataset(path: &Path, d: &Dataset64) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for (i, row) in d.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        if let Some(l) = d.labels() {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
