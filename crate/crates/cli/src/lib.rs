//! Command-line front end for the graph relation classifier.
//!
//! Every command reads one [`RunConfig`] (defaults, an optional JSON file and
//! `--set section.key=value` overrides) and writes its artifacts under
//! `output_dir`. Exit codes: 0 success, 1 usage error, 2 data error.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use graphrel::analysis::{
    classification_metrics, km_estimate, logrank_test, ward_cluster, ConfusionMatrix, KmCurve, LogRankResult,
};
use graphrel::data::{gen_synthetic, load_real_dataset, read_matrix_csv, read_survival_csv, Dataset, IngestReport};
use graphrel::graph::WeightedGraph;
use graphrel::model::{
    evaluate, monte_carlo_cv, stratified_split, train_with, CvReport, GaussianNbMethod, HybridModel, KnnMethod,
    Method, ModelConfig, ModelMethod, RelationKind, TrainReport,
};
use graphrel::numerics::{Checkpoint, SeededRng};
use ndarray::{s, Axis};
use serde::Serialize;

pub use config::RunConfig;

const HOLDOUT_STREAM: u64 = 0x686f_6c64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] graphrel::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(e) if e.is_data_error() => 2,
            CliError::Lib(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "graphrel", version, about = "Graph convolution + relation network classifier")]
pub struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set model.epochs=10` (repeatable).
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and graph as CSV/TSV files.
    SynthGen,
    /// Train on a stratified 90/10 split; writes a checkpoint and run manifest.
    Train,
    /// Score the checkpoint on the held-out split; writes metrics.json.
    Eval,
    /// Monte-Carlo cross-validation of the configured methods.
    Cv,
    /// Cross-validation over a grid of vertex counts and centroid distances.
    Sweep,
    /// Cross-validate the configured simple baseline (gnb or knn).
    Baseline,
    /// Ward clustering of exported feature maps, Kaplan-Meier and log-rank.
    Survival,
    /// Write the last convolution layer's feature map for every sample.
    ExportEmbeddings,
    /// Write the learned pair attentions, largest magnitude first.
    ExportAttention,
    /// Configuration utilities.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConfigAction {
    /// Print the effective configuration with every default spelled out.
    Dump,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Command::Config { action: ConfigAction::Dump } = cli.command {
        println!("{}", cfg.to_json_pretty());
        return Ok(());
    }
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| graphrel::Error::io(&cfg.output_dir, e))?;
    match cli.command {
        Command::SynthGen => synth_gen(&cfg),
        Command::Train => train_cmd(&cfg),
        Command::Eval => eval_cmd(&cfg),
        Command::Cv => cv_cmd(&cfg),
        Command::Sweep => sweep_cmd(&cfg),
        Command::Baseline => baseline_cmd(&cfg),
        Command::Survival => survival_cmd(&cfg),
        Command::ExportEmbeddings => export_embeddings(&cfg),
        Command::ExportAttention => export_attention(&cfg),
        Command::Config { .. } => unreachable!(),
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| graphrel::Error::io(path, e))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    write_file(path, &text)
}

struct Loaded {
    dataset: Dataset,
    graph: WeightedGraph,
    report: Option<IngestReport>,
}

fn load_data(cfg: &RunConfig) -> CliResult<Loaded> {
    let d = &cfg.data;
    match (&d.expression, &d.labels, &d.edges) {
        (Some(expr), Some(labels), Some(edges)) => {
            let real = load_real_dataset(expr, labels, edges, d.survival.as_deref())?;
            for w in &real.report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(Loaded {
                dataset: real.dataset,
                graph: real.graph,
                report: Some(real.report),
            })
        }
        (None, None, None) => {
            let s = gen_synthetic(&cfg.synthetic)?;
            Ok(Loaded {
                dataset: s.dataset,
                graph: s.graph,
                report: None,
            })
        }
        _ => Err(CliError::Usage(
            "data.expression, data.labels and data.edges must be given together".into(),
        )),
    }
}

fn synth_gen(cfg: &RunConfig) -> CliResult<()> {
    let s = gen_synthetic(&cfg.synthetic)?;
    let expr = cfg.out_path("expression.csv");
    let labels = cfg.out_path("labels.csv");
    s.dataset.write_csv(&expr, &labels)?;
    eprintln!("wrote {} and {}", expr.display(), labels.display());
    let edges = cfg.out_path("edges.tsv");
    s.graph.write_edge_list(&s.dataset.feature_names, &edges)?;
    eprintln!("wrote {}", edges.display());
    #[derive(Serialize)]
    struct Meta<'a> {
        spec: &'a graphrel::data::SyntheticSpec,
        samples: usize,
        vertices: usize,
        edges: usize,
        psd_repairs: &'a [graphrel::data::PsdRepair],
    }
    write_json(
        &cfg.out_path("synthetic_meta.json"),
        &Meta {
            spec: &cfg.synthetic,
            samples: s.dataset.num_samples(),
            vertices: s.graph.num_vertices(),
            edges: s.graph.num_edges(),
            psd_repairs: &s.covariances.repairs,
        },
    )
}

/// Deterministic hold-out used by `train`, `eval` and the exports.
fn holdout(cfg: &RunConfig, data: &Dataset) -> CliResult<(Vec<usize>, Vec<usize>)> {
    let mut rng = SeededRng::with_stream(cfg.model.seed, HOLDOUT_STREAM);
    Ok(stratified_split(&data.y, data.num_classes(), &mut rng)?)
}

fn build_model(cfg: &RunConfig, loaded: &Loaded) -> CliResult<HybridModel> {
    Ok(HybridModel::new(&loaded.graph, loaded.dataset.num_classes(), &cfg.model)?)
}

fn load_trained(cfg: &RunConfig, loaded: &Loaded) -> CliResult<HybridModel> {
    let mut model = build_model(cfg, loaded)?;
    let ck = Checkpoint::read(cfg.out_path("checkpoint.json"))?;
    model.load_checkpoint(&ck)?;
    Ok(model)
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
    train_samples: usize,
    validation_samples: usize,
    ingest_report: Option<&'a IngestReport>,
    train_loss: &'a [f64],
    val_accuracy: &'a [f64],
    peak_accuracy: f64,
    final_accuracy: f64,
}

fn train_cmd(cfg: &RunConfig) -> CliResult<()> {
    let loaded = load_data(cfg)?;
    let (tr, va) = holdout(cfg, &loaded.dataset)?;
    let (train_set, val) = (loaded.dataset.subset(&tr), loaded.dataset.subset(&va));
    let mut model = build_model(cfg, &loaded)?;
    eprintln!(
        "training on {} samples, validating on {} ({} parameters)",
        tr.len(),
        va.len(),
        model.num_parameters()
    );
    let report: TrainReport = train_with(&mut model, &train_set, Some(&val), |e, loss, acc| {
        eprintln!("epoch {:>4}  loss {loss:.6}  val_acc {acc:.4}", e + 1)
    })?;
    eprintln!("training took {:.1}s", report.wall_time_secs);
    model.to_checkpoint().write(cfg.out_path("checkpoint.json"))?;
    eprintln!("wrote {}", cfg.out_path("checkpoint.json").display());
    write_json(
        &cfg.out_path("run_manifest.json"),
        &RunManifest {
            command: "train",
            config: cfg,
            train_samples: tr.len(),
            validation_samples: va.len(),
            ingest_report: loaded.report.as_ref(),
            train_loss: &report.train_loss,
            val_accuracy: &report.val_accuracy,
            peak_accuracy: report.peak_accuracy,
            final_accuracy: report.final_accuracy,
        },
    )
}

#[derive(Serialize)]
struct EvalMetrics {
    split: &'static str,
    samples: usize,
    accuracy: f64,
    f1_weighted: f64,
    f1_macro: f64,
    per_class_f1: Vec<f64>,
    class_names: Vec<String>,
    confusion: Vec<Vec<u64>>,
}

fn eval_cmd(cfg: &RunConfig) -> CliResult<()> {
    let loaded = load_data(cfg)?;
    let model = load_trained(cfg, &loaded)?;
    let (_, va) = holdout(cfg, &loaded.dataset)?;
    let val = loaded.dataset.subset(&va);
    let (pred, _) = evaluate(&model, &val)?;
    let cm = ConfusionMatrix::from_predictions(&val.y, &pred, val.num_classes())?;
    let m = classification_metrics(&cm)?;
    eprintln!("accuracy {:.4}  f1_weighted {:.4}  f1_macro {:.4}", m.accuracy, m.f1_weighted, m.f1_macro);
    write_json(
        &cfg.out_path("metrics.json"),
        &EvalMetrics {
            split: "validation",
            samples: val.num_samples(),
            accuracy: m.accuracy,
            f1_weighted: m.f1_weighted,
            f1_macro: m.f1_macro,
            per_class_f1: m.per_class_f1,
            class_names: val.class_names.clone(),
            confusion: cm.counts,
        },
    )
}

fn method_for(name: &str, cfg: &RunConfig, graph: &WeightedGraph) -> CliResult<Box<dyn Method>> {
    let model = |kind: RelationKind| -> CliResult<Box<dyn Method>> {
        let mc: ModelConfig = cfg.model.clone().with_relation(kind);
        Ok(Box::new(ModelMethod::new(name, graph.clone(), mc)?))
    };
    match name {
        "hybrid" => model(RelationKind::Modified),
        "gcnn" => model(RelationKind::None),
        "gcnn_rn" => model(RelationKind::Vanilla),
        "gnb" => Ok(Box::new(GaussianNbMethod)),
        "knn" => Ok(Box::new(KnnMethod { k: cfg.baseline.k })),
        other => Err(CliError::Usage(format!(
            "unknown method `{other}` (expected hybrid, gcnn, gcnn_rn, gnb or knn)"
        ))),
    }
}

fn run_cv(cfg: &RunConfig, data: &Dataset, graph: &WeightedGraph, methods: &[String], splits: usize, seed: u64) -> CliResult<Vec<CvReport>> {
    methods
        .iter()
        .map(|name| {
            let method = method_for(name, cfg, graph)?;
            let r = monte_carlo_cv(data, method.as_ref(), splits, seed)?;
            eprintln!(
                "{name}: final accuracy {:.4} ± {:.4}, peak {:.4} ± {:.4}",
                r.summary.final_accuracy.mean,
                r.summary.final_accuracy.std,
                r.summary.peak_accuracy.mean,
                r.summary.peak_accuracy.std
            );
            Ok(r)
        })
        .collect()
}

fn cv_table(reports: &[CvReport]) -> String {
    let mut out = String::from(
        "method,splits,peak_accuracy_mean,peak_accuracy_std,final_accuracy_mean,final_accuracy_std,f1_weighted_mean,f1_weighted_std,f1_macro_mean,f1_macro_std\n",
    );
    for r in reports {
        let s = &r.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.splits.len(),
            s.peak_accuracy.mean,
            s.peak_accuracy.std,
            s.final_accuracy.mean,
            s.final_accuracy.std,
            s.f1_weighted.mean,
            s.f1_weighted.std,
            s.f1_macro.mean,
            s.f1_macro.std
        );
    }
    out
}

fn cv_cmd(cfg: &RunConfig) -> CliResult<()> {
    let loaded = load_data(cfg)?;
    let reports = run_cv(cfg, &loaded.dataset, &loaded.graph, &cfg.cv.methods, cfg.cv.splits, cfg.cv.seed)?;
    write_json(&cfg.out_path("cv_metrics.json"), &reports)?;
    write_file(&cfg.out_path("cv_table.csv"), &cv_table(&reports))
}

fn baseline_cmd(cfg: &RunConfig) -> CliResult<()> {
    if !matches!(cfg.baseline.method.as_str(), "gnb" | "knn") {
        return Err(CliError::Usage(format!(
            "baseline.method must be gnb or knn, got `{}`",
            cfg.baseline.method
        )));
    }
    let loaded = load_data(cfg)?;
    let reports = run_cv(
        cfg,
        &loaded.dataset,
        &loaded.graph,
        std::slice::from_ref(&cfg.baseline.method),
        cfg.cv.splits,
        cfg.cv.seed,
    )?;
    write_json(&cfg.out_path("baseline_metrics.json"), &reports)?;
    write_file(&cfg.out_path("baseline_table.csv"), &cv_table(&reports))
}

#[derive(Serialize)]
struct SweepPoint {
    n: usize,
    d: f64,
    reports: Vec<CvReport>,
}

fn sweep_cmd(cfg: &RunConfig) -> CliResult<()> {
    if cfg.data.expression.is_some() {
        return Err(CliError::Usage("sweep runs on synthetic data only; unset data.*".into()));
    }
    let sw = &cfg.sweep;
    let mut points = Vec::new();
    let mut csv = String::from("n,d,method,splits,final_accuracy_mean,final_accuracy_std,peak_accuracy_mean,peak_accuracy_std,f1_weighted_mean,f1_macro_mean\n");
    for &n in &sw.n_values {
        for &d in &sw.d_values {
            let spec = graphrel::data::SyntheticSpec {
                n,
                centroid_distance: d,
                ..cfg.synthetic.clone()
            };
            eprintln!("sweep point n={n} d={d}");
            let s = gen_synthetic(&spec)?;
            let reports = run_cv(cfg, &s.dataset, &s.graph, &sw.methods, sw.splits, sw.seed)?;
            for r in &reports {
                let m = &r.summary;
                let _ = writeln!(
                    csv,
                    "{n},{d},{},{},{},{},{},{},{},{}",
                    r.method,
                    r.splits.len(),
                    m.final_accuracy.mean,
                    m.final_accuracy.std,
                    m.peak_accuracy.mean,
                    m.peak_accuracy.std,
                    m.f1_weighted.mean,
                    m.f1_macro.mean
                );
            }
            points.push(SweepPoint { n, d, reports });
        }
    }
    write_json(&cfg.out_path("sweep.json"), &points)?;
    write_file(&cfg.out_path("sweep.csv"), &csv)
}

fn export_embeddings(cfg: &RunConfig) -> CliResult<()> {
    let loaded = load_data(cfg)?;
    let model = load_trained(cfg, &loaded)?;
    let data = &loaded.dataset;
    let (objects, channels) = {
        let probe = model.infer(data.x.slice(s![0..1, ..]).view())?;
        let (_, o, c) = probe.feature_map.dim();
        (o, c)
    };
    let mut out = String::from("sample_id");
    for o in 0..objects {
        for c in 0..channels {
            let _ = write!(out, ",v{o}_c{c}");
        }
    }
    out.push('\n');
    let chunk = 256;
    for start in (0..data.num_samples()).step_by(chunk) {
        let end = (start + chunk).min(data.num_samples());
        let fm = model.infer(data.x.slice(s![start..end, ..]).view())?.feature_map;
        for (i, s) in (start..end).enumerate() {
            out.push_str(&data.sample_ids[s]);
            for v in fm.index_axis(Axis(0), i).iter() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    write_file(&cfg.out_path("embeddings.csv"), &out)
}

fn export_attention(cfg: &RunConfig) -> CliResult<()> {
    let loaded = load_data(cfg)?;
    let model = load_trained(cfg, &loaded)?;
    let head = model
        .relation_head()
        .ok_or_else(|| CliError::Usage("export-attention needs model.relation = \"modified\"".into()))?;
    let names: Vec<String> = model
        .coarse_members()
        .iter()
        .map(|m| {
            m.iter()
                .map(|&v| loaded.dataset.feature_names[v].as_str())
                .collect::<Vec<_>>()
                .join("+")
        })
        .collect();
    let mut rows: Vec<(usize, f64)> = head.epsilon.value.iter().copied().enumerate().collect();
    rows.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    let mut out = String::from("node_a,node_b,epsilon\n");
    for (k, eps) in rows {
        let (i, j) = head.pairs[k];
        let _ = writeln!(out, "{},{},{eps}", names[i], names[j]);
    }
    write_file(&cfg.out_path("attention.csv"), &out)
}

#[derive(Serialize)]
struct ClusterSurvival {
    cluster: usize,
    size: usize,
    km: KmCurve,
}

#[derive(Serialize)]
struct PairTest {
    cluster_a: usize,
    cluster_b: usize,
    #[serde(flatten)]
    result: LogRankResult,
}

#[derive(Serialize)]
struct SurvivalReport {
    samples: usize,
    clusters: Vec<ClusterSurvival>,
    logrank: Vec<PairTest>,
}

fn survival_cmd(cfg: &RunConfig) -> CliResult<()> {
    let emb_path = cfg
        .survival
        .embeddings
        .clone()
        .unwrap_or_else(|| cfg.out_path("embeddings.csv"));
    let surv_path = cfg
        .data
        .survival
        .as_ref()
        .ok_or_else(|| CliError::Usage("survival needs data.survival (sample_id,time_days,event)".into()))?;
    let (ids, _, features) = read_matrix_csv(&emb_path)?;
    let records: std::collections::HashMap<String, graphrel::data::SurvivalRecord> =
        read_survival_csv(surv_path)?.into_iter().collect();
    let keep: Vec<usize> = (0..ids.len()).filter(|&i| records.contains_key(&ids[i])).collect();
    if keep.len() < cfg.survival.clusters {
        return Err(graphrel::Error::EmptyIntersection.into());
    }
    if keep.len() < ids.len() {
        eprintln!("warning: {} embedded samples have no survival record", ids.len() - keep.len());
    }
    let points = features.select(Axis(0), &keep);
    let ward = ward_cluster(points.view(), cfg.survival.clusters)?;
    let k = cfg.survival.clusters;
    let mut groups: Vec<Vec<graphrel::data::SurvivalRecord>> = vec![Vec::new(); k];
    let mut assign_csv = String::from("sample_id,cluster\n");
    for (row, &i) in keep.iter().enumerate() {
        let c = ward.assignments[row];
        groups[c].push(records[&ids[i]]);
        let _ = writeln!(assign_csv, "{},{c}", ids[i]);
    }
    let mut clusters = Vec::with_capacity(k);
    let mut km_csv = String::from("cluster,time,survival,at_risk,events\n");
    for (c, g) in groups.iter().enumerate() {
        let km = km_estimate(g)?;
        for t in 0..km.times.len() {
            let _ = writeln!(km_csv, "{c},{},{},{},{}", km.times[t], km.survival[t], km.at_risk[t], km.events[t]);
        }
        clusters.push(ClusterSurvival {
            cluster: c,
            size: g.len(),
            km,
        });
    }
    let mut logrank = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let result = logrank_test(&groups[a], &groups[b])?;
            eprintln!("log-rank cluster {a} vs {b}: chi2 {:.4}, p {:.4}", result.statistic, result.p_value);
            logrank.push(PairTest {
                cluster_a: a,
                cluster_b: b,
                result,
            });
        }
    }
    write_file(&cfg.out_path("clusters.csv"), &assign_csv)?;
    write_file(&cfg.out_path("km.csv"), &km_csv)?;
    write_json(
        &cfg.out_path("survival.json"),
        &SurvivalReport {
            samples: keep.len(),
            clusters,
            logrank,
        },
    )
}
