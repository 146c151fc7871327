use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dpts_core::autodiff::Tensor;
use dpts_core::data::{parse_ts, serialize_ts, Split, TimeSeriesDataset};
use dpts_core::metrics::{distance_stats, fid, inception_score, tsne, weighted_f1, DistanceScope, FourWayReport};
use dpts_core::nets::{load_checkpoint, save_checkpoint, Checkpoint, Classifier, Generator, GeneratorArch, NetworkArch};
use dpts_core::privacy::{PrivacyParams, RdpAccountant};
use dpts_core::train::{
    four_way_eval_datasets, generate_dataset, train_classifier, train_gan, ClassifierOutcome, GanOutcome, Regime,
};
use dpts_core::{Error, Result};

use crate::config::{RunConfig, SweepMethod};
use crate::manifest::{num, write_atomic, Csv, RunDir, RunManifest, StoppingSummary};
use crate::svg;

pub const BASELINE_CHECKPOINT: &str = "baseline.dtsf";

/// Everything resolved from a config before a command runs.
pub struct Context {
    pub cfg: RunConfig,
    pub dir: RunDir,
    pub train: TimeSeriesDataset,
    pub test: TimeSeriesDataset,
}

impl Context {
    pub fn new(cfg: RunConfig, out: &Path) -> Result<Self> {
        cfg.validate()?;
        let (train, test) = cfg.datasets()?;
        let dir = RunDir::create(out)?;
        Ok(Self { cfg, dir, train, test })
    }

    fn manifest(&self, command: &str) -> Result<RunManifest> {
        RunManifest::new(command, &self.cfg, self.cfg.seed, self.train.content_hash())
    }

    fn baseline_path(&self) -> PathBuf {
        self.cfg.baseline.clone().unwrap_or_else(|| self.dir.checkpoint(BASELINE_CHECKPOINT))
    }

    /// The baseline classifier if one was trained for this run.
    pub fn baseline(&self) -> Result<Option<Classifier>> {
        let path = self.baseline_path();
        if !path.exists() {
            return Ok(None);
        }
        load_classifier(&path).map(Some)
    }
}

pub fn load_classifier(path: &Path) -> Result<Classifier> {
    match load_checkpoint(path)? {
        Checkpoint { arch: NetworkArch::Classifier(a), params } => Classifier::from_params(a, params),
        _ => Err(Error::Config(format!("{} is not a classifier checkpoint", path.display()))),
    }
}

pub fn load_generator(path: &Path) -> Result<Generator> {
    match load_checkpoint(path)? {
        Checkpoint { arch: NetworkArch::Generator(a), params } => Generator::from_params(a, params),
        _ => Err(Error::Config(format!("{} is not a generator checkpoint", path.display()))),
    }
}

fn save_generator(g: &Generator, path: &Path) -> Result<()> {
    save_checkpoint(&Checkpoint { arch: NetworkArch::Generator(g.arch().clone()), params: g.params.clone() }, path)
}

fn f1_on(c: &Classifier, d: &TimeSeriesDataset) -> Result<f64> {
    weighted_f1(d.labels(), &c.predict(d.samples())?, d.num_classes())
}

fn classifier_history(out: &ClassifierOutcome, path: &Path) -> Result<()> {
    let mut csv = Csv::new(&["epoch", "train_loss", "val_f1", "val_loss", "epsilon"]);
    for r in &out.history {
        csv.row(&[r.epoch.to_string(), num(r.train_loss), num(r.val_f1), num(r.val_loss), num(r.epsilon)]);
    }
    csv.write(path)
}

/// Train and store the private baseline classifier.
pub fn cmd_baseline(ctx: &Context) -> Result<RunManifest> {
    let mut m = ctx.manifest("baseline")?;
    let arch = ctx.cfg.classifier_arch(&ctx.train);
    let out = train_classifier(&ctx.train, &arch, &ctx.cfg.classifier_training)?;
    let f1 = f1_on(&out.classifier, &ctx.test)?;
    info!("baseline test f1 {f1:.4} (best epoch {})", out.best_epoch);
    let path = ctx.dir.checkpoint(BASELINE_CHECKPOINT);
    save_checkpoint(&Checkpoint { arch: NetworkArch::Classifier(arch), params: out.classifier.params.clone() }, &path)?;
    classifier_history(&out, &ctx.dir.history())?;
    m.metrics.insert("test_f1".into(), f1);
    m.metrics.insert("best_epoch".into(), out.best_epoch as f64);
    m.epsilon = out.epsilon.unwrap_or(0.0);
    m.delta = out.delta;
    m.artifact("checkpoint", &path);
    m.artifact("history", &ctx.dir.history());
    m.finish(&ctx.dir.manifest())
}

/// Train one GAN regime and store its checkpoints and history.
pub fn cmd_train_gan(ctx: &Context, method: Regime) -> Result<(RunManifest, GanOutcome)> {
    let mut m = ctx.manifest(&format!("train-gan {method}"))?;
    let monitor = ctx.baseline()?;
    if ctx.cfg.training.stopping.needs_classifier() && monitor.is_none() {
        return Err(Error::Config(format!(
            "{:?} stopping needs a baseline classifier at {}; run `baseline` first",
            ctx.cfg.training.stopping,
            ctx.baseline_path().display()
        )));
    }
    let gen_arch = ctx.cfg.generator_arch(&ctx.train);
    let critic_arch = ctx.cfg.critic_arch(&ctx.train);
    let out = train_gan(method, &ctx.train, &gen_arch, &critic_arch, &ctx.cfg.training, monitor.as_ref())?;
    let s = &out.state;
    let mut csv = Csv::new(&["iteration", "critic_loss", "generator_loss", "metric", "epsilon"]);
    for r in &s.history {
        csv.row(&[r.iteration.to_string(), num(r.critic_loss), num(r.generator_loss), num(r.metric), num(r.epsilon)]);
    }
    csv.write(&ctx.dir.history())?;
    let best = ctx.dir.checkpoint("generator_best.dtsf");
    let last = ctx.dir.checkpoint("generator_final.dtsf");
    let critic = ctx.dir.checkpoint("critic_final.dtsf");
    save_generator(&out.generator, &best)?;
    save_generator(&out.final_generator, &last)?;
    save_checkpoint(&Checkpoint { arch: NetworkArch::Critic(out.critic.arch().clone()), params: out.critic.params.clone() }, &critic)?;
    m.epsilon = s.epsilon;
    m.delta = s.delta;
    m.accountant = s.accountant.as_ref().map(serde_json::to_value).transpose()?;
    m.stopping = Some(StoppingSummary {
        reason: serde_json::to_value(s.stop_reason)?.as_str().unwrap_or_default().to_string(),
        iterations: s.iteration,
        best_iteration: s.best_iteration,
        best_value: s.best_value,
    });
    if let Some(r) = s.history.last() {
        m.metrics.insert(format!("final_{:?}", s.metric_kind).to_lowercase(), r.metric);
    }
    if let Some(b) = s.best_value {
        m.metrics.insert(format!("best_{:?}", s.metric_kind).to_lowercase(), b);
    }
    m.artifact("generator_best", &best);
    m.artifact("generator_final", &last);
    m.artifact("critic_final", &critic);
    m.artifact("history", &ctx.dir.history());
    Ok((m.finish(&ctx.dir.manifest())?, out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateSidecar {
    pub checkpoint: String,
    pub checkpoint_sha256: String,
    pub seed: u64,
    pub n: usize,
    pub class_counts: Vec<usize>,
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Labels cycling through the classes, so counts differ by at most one.
pub fn balanced_labels(n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| i % k).collect()
}

/// Write `n` generated samples as `.ts` plus a JSON sidecar.
pub fn cmd_generate(checkpoint: &Path, n: usize, seed: u64, out: &Path, class_names: Option<&[String]>) -> Result<GenerateSidecar> {
    let bytes = std::fs::read(checkpoint)?;
    let g = load_generator(checkpoint)?;
    let k = g.arch().num_classes;
    let names = class_names.map_or_else(|| TimeSeriesDataset::numbered_classes(k), <[String]>::to_vec);
    if names.len() != k {
        return Err(Error::Config(format!("{} class names for a {k}-class generator", names.len())));
    }
    let labels = balanced_labels(n, k);
    let ds = generate_dataset(&g, &labels, &names, Split::Train, seed)?;
    write_atomic(out, serialize_ts(&ds).as_bytes())?;
    let side = GenerateSidecar {
        checkpoint: checkpoint.display().to_string(),
        checkpoint_sha256: hex_digest(&bytes),
        seed,
        n,
        class_counts: ds.class_counts(),
    };
    write_atomic(&out.with_extension("json"), serde_json::to_string_pretty(&side)?.as_bytes())?;
    Ok(side)
}

/// Public train/test splits: explicit files, or drawn from a generator with
/// the private splits' label counts.
pub enum PublicSource<'a> {
    Files { train: &'a Path, test: &'a Path },
    Generator(&'a Path),
}

pub fn public_splits(ctx: &Context, src: &PublicSource) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    match src {
        PublicSource::Files { train, test } => {
            let read = |p: &Path, split| parse_ts(&std::fs::read_to_string(p)?, split);
            Ok((read(train, Split::Train)?, read(test, Split::Test)?))
        }
        PublicSource::Generator(path) => generated_splits(ctx, &load_generator(path)?),
    }
}

fn write_four_way(ctx: &Context, r: &FourWayReport) -> Result<()> {
    let mut csv = Csv::new(&["metric", "value"]);
    for (k, v) in r.rows() {
        csv.row(&[k.to_string(), num(v)]);
    }
    csv.write(&ctx.dir.report("four_way.csv"))?;
    write_atomic(&ctx.dir.report("four_way.json"), serde_json::to_string_pretty(r)?.as_bytes())
}

/// Four-way evaluation; the baseline column comes from the stored baseline
/// classifier when present.
pub fn cmd_evaluate(ctx: &Context, src: &PublicSource) -> Result<FourWayReport> {
    let (pub_train, pub_test) = public_splits(ctx, src)?;
    let arch = ctx.cfg.classifier_arch(&ctx.train);
    let mut r = four_way_eval_datasets(&ctx.train, &ctx.test, &pub_train, &pub_test, &arch, &ctx.cfg.classifier_training)?;
    if let Some(b) = ctx.baseline()? {
        r.baseline = f1_on(&b, &ctx.test)?;
    }
    write_four_way(ctx, &r)?;
    Ok(r)
}

fn flat_rows(d: &TimeSeriesDataset) -> Result<Tensor> {
    let n = d.len();
    d.samples().clone().reshape(vec![n, d.channels() * d.length()])
}

fn check_shape(a: &TimeSeriesDataset, b: &TimeSeriesDataset) -> Result<()> {
    if a.channels() != b.channels() || a.length() != b.length() {
        return Err(Error::Dimension(format!(
            "private [{}, {}] and public [{}, {}] shapes differ",
            a.channels(),
            a.length(),
            b.channels(),
            b.length()
        )));
    }
    Ok(())
}

/// Within-private, within-public and cross L2 statistics.
pub fn cmd_distances(ctx: &Context, public: &TimeSeriesDataset) -> Result<Vec<(DistanceScope, dpts_core::metrics::DistanceStats)>> {
    check_shape(&ctx.train, public)?;
    let a = flat_rows(&ctx.train)?;
    let b = flat_rows(public)?;
    let rows = vec![
        (DistanceScope::WithinPrivate, distance_stats(&a, None)?),
        (DistanceScope::WithinPublic, distance_stats(&b, None)?),
        (DistanceScope::Cross, distance_stats(&a, Some(&b))?),
    ];
    let mut csv = Csv::new(&["scope", "min", "mean", "max", "pairs"]);
    for (scope, s) in &rows {
        let name = serde_json::to_value(scope)?.as_str().unwrap_or_default().to_string();
        csv.row(&[name, num(s.min), num(s.mean), num(s.max), s.pairs.to_string()]);
    }
    csv.write(&ctx.dir.report("distances.csv"))?;
    Ok(rows)
}

/// t-SNE over the union of both sets plus three scatter plots.
pub fn cmd_embed(ctx: &Context, public: &TimeSeriesDataset) -> Result<Tensor> {
    check_shape(&ctx.train, public)?;
    let a = flat_rows(&ctx.train)?;
    let b = flat_rows(public)?;
    let union = Tensor::concat_rows(&[&a, &b])?;
    let y = tsne(&union, &ctx.cfg.tsne)?;
    let np = ctx.train.len();
    let label = |i: usize| if i < np { ctx.train.labels()[i] } else { public.labels()[i - np] };
    let mut csv = Csv::new(&["x", "y", "label", "source"]);
    for i in 0..union.shape()[0] {
        let source = if i < np { "private" } else { "public" };
        csv.row(&[num(y.row(i)[0]), num(y.row(i)[1]), label(i).to_string(), source.to_string()]);
    }
    csv.write(&ctx.dir.report("embedding.csv"))?;
    let pts = |range: std::ops::Range<usize>, by_source: bool| -> Vec<(f64, f64, usize)> {
        range.map(|i| (y.row(i)[0], y.row(i)[1], if by_source { usize::from(i >= np) } else { label(i) })).collect()
    };
    let n = union.shape()[0];
    let classes = ctx.train.class_names().to_vec();
    let plots = [
        ("tsne_source.svg", "private vs public", pts(0..n, true), vec!["private".to_string(), "public".to_string()]),
        ("tsne_private_class.svg", "private by class", pts(0..np, false), classes.clone()),
        ("tsne_public_class.svg", "public by class", pts(np..n, false), classes),
    ];
    for (file, title, p, groups) in plots {
        write_atomic(&ctx.dir.plot(file), svg::scatter(title, &p, &groups).as_bytes())?;
    }
    Ok(y)
}

/// Per class and channel: `k` private series in grey and one generated
/// series highlighted. Returns the files written.
pub fn cmd_plot_samples(ctx: &Context, public: &TimeSeriesDataset, k: usize) -> Result<Vec<PathBuf>> {
    check_shape(&ctx.train, public)?;
    let (lo, hi) = ctx.train.samples().data().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let private = ctx.train.class_indices();
    let generated = public.class_indices();
    let (c, l) = (ctx.train.channels(), ctx.train.length());
    let mut files = Vec::new();
    for (class, members) in private.iter().enumerate() {
        let Some(&g) = generated.get(class).and_then(|m| m.first()) else {
            warn!("class {class} has no generated sample; skipped");
            continue;
        };
        if members.is_empty() {
            warn!("class {class} has no private samples; skipped");
            continue;
        }
        for ch in 0..c {
            let series = |d: &TimeSeriesDataset, i: usize| d.sample(i)[ch * l..(ch + 1) * l].to_vec();
            let bg: Vec<Vec<f64>> = members.iter().take(k).map(|&i| series(&ctx.train, i)).collect();
            let refs: Vec<&[f64]> = bg.iter().map(Vec::as_slice).collect();
            let title = format!("class {} channel {ch}", ctx.train.class_names()[class]);
            let path = ctx.dir.plot(&format!("samples_class{class}_ch{ch}.svg"));
            write_atomic(&path, svg::overlay(&title, &refs, &series(public, g), lo, hi).as_bytes())?;
            files.push(path);
        }
    }
    Ok(files)
}

/// Print-ready ε and the minimizing order.
pub fn cmd_accountant(q: f64, sigma: f64, steps: u64, delta: f64, orders: Option<Vec<u32>>) -> Result<(f64, Option<u32>)> {
    let p = PrivacyParams { sampling_rate: Some(q), delta: Some(delta), ..PrivacyParams::new(sigma) };
    p.validate()?;
    let mut acct = match orders {
        Some(o) => RdpAccountant::with_orders(o)?,
        None => RdpAccountant::new(),
    };
    if steps == 0 {
        return Ok((0.0, None));
    }
    acct.step_many(q, sigma, steps)?;
    let (eps, order) = acct.epsilon_with_order(delta)?;
    Ok((eps, Some(order)))
}

/// Outcome of one grid or sweep cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub metrics: BTreeMap<String, f64>,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cell", rename_all = "snake_case")]
pub enum CellSpec {
    /// Train the configured GAN and evaluate four ways plus FID and IS.
    Gan { method: Regime },
    /// DP classifier scored on the private test split.
    DpClassifier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellJob {
    pub spec: CellSpec,
    pub config: RunConfig,
}

/// Public train/test splits drawn from `g` with the private label vectors.
pub fn generated_splits(ctx: &Context, g: &Generator) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    let names = ctx.train.class_names();
    let seed = ctx.cfg.seed;
    Ok((
        generate_dataset(g, ctx.train.labels(), names, Split::Train, seed)?,
        generate_dataset(g, ctx.test.labels(), names, Split::Test, seed.wrapping_add(1))?,
    ))
}

/// Four-way report for a generator, plus FID and IS on its test split when a
/// baseline classifier is available.
pub fn gan_report(ctx: &Context, g: &Generator) -> Result<(FourWayReport, BTreeMap<String, f64>)> {
    let (pub_train, pub_test) = generated_splits(ctx, g)?;
    let arch = ctx.cfg.classifier_arch(&ctx.train);
    let mut r = four_way_eval_datasets(&ctx.train, &ctx.test, &pub_train, &pub_test, &arch, &ctx.cfg.classifier_training)?;
    let mut extra = BTreeMap::new();
    if let Some(b) = ctx.baseline()? {
        r.baseline = f1_on(&b, &ctx.test)?;
        let (_, real_latent) = b.infer(ctx.test.samples(), 256)?;
        let (_, fake_latent) = b.infer(pub_test.samples(), 256)?;
        extra.insert("fid".into(), fid(&real_latent, &fake_latent)?);
        extra.insert("is".into(), inception_score(&b.probabilities(pub_test.samples())?)?);
    }
    Ok((r, extra))
}

/// Run one cell in `out`; the baseline classifier must be reachable through
/// `config.baseline`.
pub fn run_cell(job: &CellJob, out: &Path) -> Result<CellResult> {
    let ctx = Context::new(job.config.clone(), out)?;
    let mut res = CellResult::default();
    match &job.spec {
        CellSpec::DpClassifier => {
            let arch = ctx.cfg.classifier_arch(&ctx.train);
            let out = dpts_core::train::train_classifier_dp(&ctx.train, &arch, &ctx.cfg.classifier_training)?;
            classifier_history(&out, &ctx.dir.history())?;
            res.metrics.insert("m-d-".into(), f1_on(&out.classifier, &ctx.test)?);
            res.epsilon = out.epsilon.unwrap_or(0.0);
        }
        CellSpec::Gan { method } => {
            let (m, gan) = cmd_train_gan(&ctx, *method)?;
            res.epsilon = m.epsilon;
            let (r, extra) = gan_report(&ctx, &gan.generator)?;
            write_four_way(&ctx, &r)?;
            res.metrics = extra;
            for (k, v) in r.rows() {
                res.metrics.insert(k.into(), v);
            }
        }
    }
    write_atomic(&ctx.dir.report("cell.json"), serde_json::to_string_pretty(&res)?.as_bytes())?;
    Ok(res)
}

/// Child-process parallelism bound from `DPTS_THREADS` (default 1).
pub fn thread_budget() -> usize {
    std::env::var("DPTS_THREADS").ok().and_then(|v| v.parse().ok()).filter(|&n| n > 0).unwrap_or(1)
}

/// Run cells in order, in-process when the budget is 1 and as child
/// processes of `exe` otherwise. Failed cells yield `Err` entries.
pub fn run_cells(jobs: &[(CellJob, PathBuf)], exe: Option<&Path>) -> Vec<std::result::Result<CellResult, String>> {
    let threads = thread_budget();
    let cached: Vec<Option<CellResult>> = jobs.iter().map(|(job, dir)| cached_result(job, dir)).collect();
    let pending: Vec<(CellJob, PathBuf)> =
        jobs.iter().zip(&cached).filter(|(_, c)| c.is_none()).map(|(j, _)| j.clone()).collect();
    let fresh = match exe {
        Some(exe) if threads > 1 => run_children(&pending, exe, threads),
        _ => pending
            .iter()
            .map(|(job, dir)| {
                write_job(job, dir).map_err(|e| e.to_string())?;
                run_cell(job, dir).map_err(|e| e.to_string())
            })
            .collect(),
    };
    let mut fresh = fresh.into_iter();
    cached.into_iter().map(|c| c.map_or_else(|| fresh.next().unwrap_or_else(|| Err("not run".into())), Ok)).collect()
}

fn write_job(job: &CellJob, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("cell_job.json");
    write_atomic(&path, &serde_json::to_vec_pretty(job)?)?;
    Ok(path)
}

/// A finished cell whose recorded job equals `job` is not rerun.
fn cached_result(job: &CellJob, dir: &Path) -> Option<CellResult> {
    let recorded: CellJob = serde_json::from_str(&std::fs::read_to_string(dir.join("cell_job.json")).ok()?).ok()?;
    if &recorded != job {
        return None;
    }
    serde_json::from_str(&std::fs::read_to_string(dir.join("reports").join("cell.json")).ok()?).ok()
}

fn run_children(jobs: &[(CellJob, PathBuf)], exe: &Path, threads: usize) -> Vec<std::result::Result<CellResult, String>> {
    let mut results: Vec<Option<std::result::Result<CellResult, String>>> = vec![None; jobs.len()];
    let mut running: Vec<(usize, std::process::Child)> = Vec::new();
    let mut next = 0;
    let spawn = |i: usize| -> std::result::Result<std::process::Child, String> {
        let (job, dir) = &jobs[i];
        let spec = write_job(job, dir).map_err(|e| e.to_string())?;
        std::process::Command::new(exe)
            .arg("run-cell")
            .arg("--job")
            .arg(&spec)
            .arg("--out")
            .arg(dir)
            .env("DPTS_THREADS", "1")
            .stdout(std::process::Stdio::null())
            .stderr(std::fs::File::create(dir.join("stderr.log")).map_err(|e| e.to_string())?)
            .spawn()
            .map_err(|e| e.to_string())
    };
    while next < jobs.len() || !running.is_empty() {
        while running.len() < threads && next < jobs.len() {
            match spawn(next) {
                Ok(child) => running.push((next, child)),
                Err(e) => results[next] = Some(Err(e)),
            }
            next += 1;
        }
        if let Some((i, mut child)) = (!running.is_empty()).then(|| running.remove(0)) {
            let status = child.wait().map_err(|e| e.to_string());
            let dir = &jobs[i].1;
            results[i] = Some(match status {
                Ok(s) if s.success() => std::fs::read_to_string(dir.join("reports").join("cell.json"))
                    .map_err(|e| e.to_string())
                    .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string())),
                Ok(s) => Err(std::fs::read_to_string(dir.join("stderr.log")).unwrap_or_else(|_| format!("exit status {s}"))),
                Err(e) => Err(e),
            });
        }
    }
    results.into_iter().map(|r| r.unwrap_or_else(|| Err("not run".into()))).collect()
}

/// Make sure a baseline checkpoint exists for cells and return its path.
pub fn ensure_baseline(ctx: &Context) -> Result<PathBuf> {
    let path = ctx.baseline_path();
    if !path.exists() {
        cmd_baseline(ctx)?;
    }
    Ok(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub z_dim: usize,
    pub filters: Vec<usize>,
    pub kernel_sizes: Vec<usize>,
    pub result: std::result::Result<CellResult, String>,
}

fn dashed(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// Architecture grid over conv generators. Writes `reports/grid.csv`
/// sorted by m+d− and `reports/failures.csv`.
pub fn cmd_grid(ctx: &Context, exe: Option<&Path>) -> Result<Vec<GridRow>> {
    let grid = ctx.cfg.grid.clone().ok_or_else(|| Error::Config("at `grid`: missing grid specification".into()))?;
    let baseline = ensure_baseline(ctx)?;
    let method = ctx.cfg.method.unwrap_or(Regime::Gswgan);
    let mut cells = Vec::new();
    for &z in &grid.z_dims {
        for f in &grid.filters {
            for k in &grid.kernel_sizes {
                cells.push((z, f.clone(), k.clone()));
            }
        }
    }
    let jobs: Vec<(CellJob, PathBuf)> = cells
        .iter()
        .enumerate()
        .map(|(i, (z, f, k))| {
            let mut config = ctx.cfg.clone().with_seed(cell_seed(ctx.cfg.seed, i as u64));
            config.dataset = ctx.cfg.dataset.clone();
            config.baseline = Some(baseline.clone());
            config.generator = Some(GeneratorArch::conv(*z, ctx.train.num_classes(), f.clone(), k.clone(), ctx.train.channels(), ctx.train.length()));
            config.grid = None;
            (CellJob { spec: CellSpec::Gan { method }, config }, ctx.dir.root.join("cells").join(format!("cell{i:03}")))
        })
        .collect();
    let results = run_cells(&jobs, exe);
    let mut rows: Vec<GridRow> = cells
        .into_iter()
        .zip(results)
        .map(|((z_dim, filters, kernel_sizes), result)| GridRow { z_dim, filters, kernel_sizes, result })
        .collect();
    let key = |r: &GridRow| r.result.as_ref().ok().and_then(|c| c.metrics.get("m+d-").copied()).unwrap_or(f64::NEG_INFINITY);
    rows.sort_by(|a, b| key(b).total_cmp(&key(a)));
    let mut csv = Csv::new(&["z_dim", "filters", "kernel_sizes", "m-d+", "m+d-", "fid", "is"]);
    let mut failures = Csv::new(&["z_dim", "filters", "kernel_sizes", "error"]);
    for r in &rows {
        match &r.result {
            Ok(c) => {
                let get = |k: &str| c.metrics.get(k).copied().map_or_else(|| "nan".to_string(), num);
                csv.row(&[r.z_dim.to_string(), dashed(&r.filters), dashed(&r.kernel_sizes), get("m-d+"), get("m+d-"), get("fid"), get("is")]);
            }
            Err(e) => {
                warn!("grid cell z={} filters={} failed: {e}", r.z_dim, dashed(&r.filters));
                let msg = e.replace(['\n', ','], " ");
                failures.row(&[r.z_dim.to_string(), dashed(&r.filters), dashed(&r.kernel_sizes), msg]);
            }
        }
    }
    csv.write(&ctx.dir.report("grid.csv"))?;
    failures.write(&ctx.dir.report("failures.csv"))?;
    Ok(rows)
}

/// Seed of cell `i` under a master seed.
pub fn cell_seed(master: u64, i: u64) -> u64 {
    use rand::RngCore;
    dpts_core::rng::stream(master, 1000 + i).next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub method: SweepMethod,
    pub sigma: f64,
    pub result: std::result::Result<CellResult, String>,
}

impl SweepCell {
    /// m+d− for generators, test f1 for the DP classifier.
    pub fn f1(&self) -> Option<f64> {
        let key = if self.method == SweepMethod::Dp { "m-d-" } else { "m+d-" };
        self.result.as_ref().ok().and_then(|c| c.metrics.get(key).copied())
    }
}

/// Cells of the noise sweep in method-major order, with their directories.
pub fn sweep_jobs(ctx: &Context, baseline: &Path) -> Vec<((SweepMethod, f64), (CellJob, PathBuf))> {
    let sweep = &ctx.cfg.sweep;
    let mut out = Vec::new();
    for &method in &sweep.methods {
        for &sigma in &sweep.multipliers {
            let mut config = ctx.cfg.clone();
            config.baseline = Some(baseline.to_path_buf());
            let privacy = |base: &Option<PrivacyParams>| PrivacyParams { noise_multiplier: sigma, ..base.clone().unwrap_or_else(|| PrivacyParams::new(sigma)) };
            let spec = match method {
                SweepMethod::Dp => {
                    if let Some(c) = &sweep.dp_classifier_training {
                        config.classifier_training = c.clone();
                    }
                    config.classifier_training.privacy = Some(privacy(&config.classifier_training.privacy));
                    CellSpec::DpClassifier
                }
                SweepMethod::Dpwgan | SweepMethod::Gswgan => {
                    config.training.privacy = Some(privacy(&ctx.cfg.training.privacy));
                    CellSpec::Gan { method: if method == SweepMethod::Dpwgan { Regime::Dpwgan } else { Regime::Gswgan } }
                }
            };
            let dir = ctx.dir.root.join("cells").join(format!("{}_{sigma}", method.name()));
            out.push(((method, sigma), (CellJob { spec, config }, dir)));
        }
    }
    out
}

/// Noise sweep: every (method, σ) cell, summarized as method rows by σ
/// columns in `reports/noise_sweep.csv`.
pub fn cmd_noise_sweep(ctx: &Context, exe: Option<&Path>) -> Result<Vec<SweepCell>> {
    let sweep = ctx.cfg.sweep.clone();
    let baseline = ensure_baseline(ctx)?;
    let planned = sweep_jobs(ctx, &baseline);
    let (keys, jobs): (Vec<(SweepMethod, f64)>, Vec<(CellJob, PathBuf)>) = planned.into_iter().unzip();
    let results = run_cells(&jobs, exe);
    let cells: Vec<SweepCell> = keys.into_iter().zip(results).map(|((method, sigma), result)| SweepCell { method, sigma, result }).collect();
    let mut header = vec!["method".to_string(), "value".to_string()];
    header.extend(sweep.multipliers.iter().map(|s| s.to_string()));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    for &method in &sweep.methods {
        let row: Vec<&SweepCell> = cells.iter().filter(|c| c.method == method).collect();
        let mut f1 = vec![method.name().to_string(), "f1".to_string()];
        let mut eps = vec![method.name().to_string(), "epsilon".to_string()];
        for c in row {
            f1.push(c.f1().map_or_else(|| "nan".into(), num));
            eps.push(c.result.as_ref().map_or_else(|_| "nan".into(), |r| num(r.epsilon)));
        }
        csv.row(&f1);
        csv.row(&eps);
    }
    csv.write(&ctx.dir.report("noise_sweep.csv"))?;
    let failed: Vec<String> = cells
        .iter()
        .filter_map(|c| c.result.as_ref().err().map(|e| format!("{} σ={}: {e}", c.method.name(), c.sigma)))
        .collect();
    for f in &failed {
        warn!("sweep cell failed: {f}");
    }
    Ok(cells)
}

pub(crate) fn read_public(path: &Path) -> Result<TimeSeriesDataset> {
    parse_ts(&std::fs::read_to_string(path)?, Split::Train)
}
