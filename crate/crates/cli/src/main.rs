use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use powerprint::descriptors::{Descriptor, DescriptorKind, DEFAULT_BSIF_SEED, DEFAULT_LTEP_THRESHOLD};
use powerprint::eval::{
    compare_descriptors, comparison_csv, comparison_timings_csv, extract_all, kfold_eval, ncc_matrix, sample_per_class,
    Classifier, DEFAULT_FOLDS,
};
use powerprint::eventdetect::{detect_edges, segment_between, DEFAULT_SMOOTH_WINDOW, DEFAULT_THRESHOLD_WATTS};
use powerprint::iknn::{fit, IknnConfig, KnnMetric, DEFAULT_K};
use powerprint::signal::{load_csv, save_csv, Dataset, PowerSignal};
use powerprint::store::{
    load_histograms, load_model, save_histograms, save_model, training_set, HistogramRecord, TrainedModel,
};
use powerprint::synth::{benchmark_archetypes, generate_synthetic, SynthConfig};
use powerprint::transform::{normalize_signal, ShapePolicy};

#[derive(Parser)]
#[command(
    name = "powerprint",
    version,
    about = "Appliance identification from power signatures"
)]
struct Cli {
    /// Worker threads (defaults to one per core). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic signature corpus.
    Synth(SynthArgs),
    /// Compute one histogram per signature.
    Extract(ExtractArgs),
    /// Fit a classifier and save it.
    Train(TrainArgs),
    /// Classify signatures or histograms with a saved model.
    Predict(PredictArgs),
    /// Stratified k-fold evaluation of one descriptor.
    Eval(EvalArgs),
    /// Evaluate several descriptors on the same folds.
    Compare(CompareArgs),
    /// Intra-class correlation of raw signals and of their LPH histograms.
    Ncc(NccArgs),
    /// Find on/off edges in aggregate signals and cut event windows.
    Detect(DetectArgs),
    /// Time histogram extraction per descriptor.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of classes (the first N archetypes) or comma-separated archetype names; all when omitted.
    #[arg(long)]
    classes: Option<String>,
    /// Signatures per class.
    #[arg(long, default_value_t = 40)]
    per_class: usize,
    /// Samples per signature.
    #[arg(long, default_value_t = 400)]
    length: usize,
    /// Output signal CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct DescriptorArgs {
    /// lph, lbp, ldp, ltep, ltrp or bsif.
    #[arg(long, default_value = "lph")]
    descriptor: String,
    /// Dead-zone half-width for ltep, on the normalized scale.
    #[arg(long, default_value_t = DEFAULT_LTEP_THRESHOLD)]
    ltep_threshold: f64,
    /// Seed of the bsif filter bank.
    #[arg(long, default_value_t = DEFAULT_BSIF_SEED)]
    bsif_seed: u64,
    /// `square` or `rows:R`.
    #[arg(long, default_value = "square")]
    shape: ShapePolicy,
}

impl DescriptorArgs {
    fn build(&self, name: &str) -> Result<Descriptor> {
        let kind = match name.parse::<DescriptorKind>()? {
            DescriptorKind::Ltep { .. } => DescriptorKind::Ltep {
                threshold: self.ltep_threshold,
            },
            DescriptorKind::Bsif { .. } => DescriptorKind::Bsif { seed: self.bsif_seed },
            k => k,
        };
        Ok(Descriptor::new(kind)?.with_policy(self.shape))
    }

    fn descriptor(&self) -> Result<Descriptor> {
        self.build(&self.descriptor)
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    d: DescriptorArgs,
    /// Input signal CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output histogram CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ClassifierArgs {
    /// iknn, or knn-euclidean, knn-cosine, knn-weighted-euclidean.
    #[arg(long, default_value = "iknn")]
    classifier: String,
    /// Neighbors per vote.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Subgroup count; sqrt of the training size when omitted.
    #[arg(long)]
    m: Option<usize>,
    /// Seed for subgroup clustering.
    #[arg(long, default_value_t = 0)]
    cluster_seed: u64,
}

impl ClassifierArgs {
    fn build(&self) -> Result<Classifier> {
        if self.classifier == "iknn" {
            return Ok(Classifier::Iknn(IknnConfig {
                k: self.k,
                m: self.m,
                seed: self.cluster_seed,
            }));
        }
        match self.classifier.strip_prefix("knn-") {
            Some(metric) => Ok(Classifier::Knn {
                k: self.k,
                metric: metric.parse::<KnnMetric>()?,
            }),
            None => bail!(
                "unknown classifier {:?}; expected iknn, knn-euclidean, knn-cosine or knn-weighted-euclidean",
                self.classifier
            ),
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    d: DescriptorArgs,
    /// Neighbors per vote.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Subgroup count; sqrt of the training size when omitted.
    #[arg(long)]
    m: Option<usize>,
    /// Seed for subgroup clustering.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Labeled histogram CSV produced by `extract` with the same descriptor.
    #[arg(long = "in", conflicts_with = "signals", required_unless_present = "signals")]
    input: Option<PathBuf>,
    /// Labeled signal CSV; histograms are computed with `--descriptor`.
    #[arg(long)]
    signals: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Histogram CSV produced by `extract` with the model's descriptor.
    #[arg(long = "in", conflicts_with = "signals")]
    input: Option<PathBuf>,
    /// Signal CSV; histograms are computed with the model's descriptor.
    #[arg(long)]
    signals: Option<PathBuf>,
    /// Prediction CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    d: DescriptorArgs,
    #[command(flatten)]
    c: ClassifierArgs,
    /// Number of folds; reduced to the smallest class size if needed.
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Seed for the fold assignment.
    #[arg(long, default_value_t = 3)]
    seed: u64,
    /// Labeled signal CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Report CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-fold wall-clock timings CSV.
    #[arg(long)]
    timings_out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    d: DescriptorArgs,
    #[command(flatten)]
    c: ClassifierArgs,
    /// Comma-separated descriptor names, or `all`.
    #[arg(long, default_value = "all")]
    descriptors: String,
    /// Number of folds; reduced to the smallest class size if needed.
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Seed for the fold assignment.
    #[arg(long, default_value_t = 3)]
    seed: u64,
    /// Labeled signal CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Comparison table CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-descriptor wall-clock timings CSV.
    #[arg(long)]
    timings_out: Option<PathBuf>,
}

#[derive(Args)]
struct NccArgs {
    /// Labeled signal CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Signatures sampled per class.
    #[arg(long, default_value_t = 6)]
    per_class: usize,
    /// Seed for the sampler.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the per-class matrices and the summary.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Signal CSV; every row is one aggregate recording.
    #[arg(long = "in")]
    input: PathBuf,
    /// Minimum step between consecutive smoothed samples.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_WATTS)]
    threshold_watts: f64,
    /// Odd moving-median window.
    #[arg(long, default_value_t = DEFAULT_SMOOTH_WINDOW)]
    smooth_window: usize,
    /// Event CSV.
    #[arg(long)]
    out: PathBuf,
    /// Signal CSV of the baseline-subtracted event windows.
    #[arg(long)]
    segments_out: Option<PathBuf>,
    /// Label each window with this model.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    d: DescriptorArgs,
    /// Comma-separated descriptor names, or `all`.
    #[arg(long, default_value = "all")]
    descriptors: String,
    /// Signal CSV; the synthetic benchmark corpus when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Timed passes per descriptor; the fastest is reported.
    #[arg(long, default_value_t = 5)]
    repeat: usize,
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn descriptor_list(d: &DescriptorArgs, spec: &str) -> Result<Vec<Descriptor>> {
    if spec == "all" {
        return DescriptorKind::NAMES.iter().map(|n| d.build(n)).collect();
    }
    spec.split(',').map(|n| d.build(n.trim())).collect()
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut classes = benchmark_archetypes();
    if let Some(n) = a.classes.as_deref().and_then(|c| c.parse::<usize>().ok()) {
        if n == 0 || n > classes.len() {
            bail!("--classes must be between 1 and {}, got {n}", classes.len());
        }
        classes.truncate(n);
    } else if let Some(list) = &a.classes {
        let wanted: Vec<&str> = list.split(',').map(str::trim).collect();
        for w in &wanted {
            if !classes.iter().any(|c| c.name == *w) {
                let known: Vec<&str> = classes.iter().map(|c| c.name.as_str()).collect();
                bail!("unknown archetype {w:?}; expected one of {}", known.join(", "));
            }
        }
        classes.retain(|c| wanted.contains(&c.name.as_str()));
    }
    let cfg = SynthConfig {
        seed: a.seed,
        classes,
        signatures_per_class: a.per_class,
        signal_length: a.length,
    };
    save_csv(&generate_synthetic(&cfg)?, &a.out)?;
    Ok(())
}

fn records(dataset: &Dataset, histograms: Vec<Vec<f64>>) -> Vec<HistogramRecord> {
    dataset
        .signals()
        .iter()
        .zip(histograms)
        .map(|(s, bins)| HistogramRecord {
            label: s.label().map(str::to_string),
            source_id: s.source_id().to_string(),
            bins,
        })
        .collect()
}

fn extract(a: ExtractArgs) -> Result<()> {
    let descriptor = a.d.descriptor()?;
    let data = load_csv(&a.input)?;
    let hist = extract_all(&data, &descriptor)?;
    save_histograms(&records(&data, hist), &a.out)?;
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let descriptor = a.d.descriptor()?;
    let recs = match (&a.input, &a.signals) {
        (Some(path), None) => {
            let recs = load_histograms(path)?;
            let (want, got) = (descriptor.histogram_length(), recs[0].bins.len());
            if want != got {
                bail!(
                    "dimension mismatch: {} histograms have {want} bins, {} has {got}",
                    descriptor.kind(),
                    path.display()
                );
            }
            recs
        }
        (None, Some(path)) => {
            let data = load_csv(path)?;
            records(&data, extract_all(&data, &descriptor)?)
        }
        _ => bail!("give exactly one of --in or --signals"),
    };
    let set = training_set(&recs)?;
    let model = fit(
        &set,
        IknnConfig {
            k: a.k,
            m: a.m,
            seed: a.seed,
        },
    )?;
    save_model(&TrainedModel { descriptor, model }, &a.out)?;
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let trained = load_model(&a.model)?;
    let recs = match (&a.input, &a.signals) {
        (Some(path), None) => load_histograms(path)?,
        (None, Some(path)) => {
            let data = load_csv(path)?;
            let hist = extract_all(&data, &trained.descriptor)?;
            records(&data, hist)
        }
        _ => bail!("give exactly one of --in or --signals"),
    };
    let queries: Vec<Vec<f64>> = recs.iter().map(|r| r.bins.clone()).collect();
    let predictions = trained.model.predict_batch(&queries)?;

    let mut csv = String::from("source_id,label,predicted,score\n");
    let (mut labeled, mut correct) = (0usize, 0usize);
    for (r, p) in recs.iter().zip(&predictions) {
        let truth = r.label.as_deref().unwrap_or("");
        let _ = writeln!(csv, "{},{},{},{}", r.source_id, truth, p.label, p.score);
        if r.label.is_some() {
            labeled += 1;
            correct += usize::from(truth == p.label);
        }
    }
    let summary = (labeled > 0).then(|| format!("accuracy {} ({correct}/{labeled})", correct as f64 / labeled as f64));
    match &a.out {
        Some(path) => {
            write_file(path, csv)?;
            if let Some(s) = summary {
                println!("{s}");
            }
        }
        None => {
            print!("{csv}");
            if let Some(s) = summary {
                eprintln!("{s}");
            }
        }
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let descriptor = a.d.descriptor()?;
    let data = load_csv(&a.input)?;
    let report = kfold_eval(&data, &descriptor, a.c.build()?, a.folds, a.seed)?;
    print!("{}", report.to_text());
    eprintln!("{}", report.timing_summary());
    if let Some(path) = &a.out {
        write_file(path, report.to_csv())?;
    }
    if let Some(path) = &a.timings_out {
        write_file(path, report.timings_csv())?;
    }
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let descriptors = descriptor_list(&a.d, &a.descriptors)?;
    let data = load_csv(&a.input)?;
    let reports = compare_descriptors(&data, &descriptors, a.c.build()?, a.folds, a.seed)?;
    println!("{:<6} {:>5} {:>9} {:>9}", "desc", "bins", "accuracy", "macro-F1");
    for r in &reports {
        println!(
            "{:<6} {:>5} {:>9.4} {:>9.4}",
            r.descriptor, r.histogram_length, r.accuracy, r.macro_f1
        );
        eprintln!("{}", r.timing_summary());
    }
    if let Some(r) = reports.first() {
        println!("fold hash {}", r.fold_hash);
        for w in &r.warnings {
            println!("warning: {w}");
        }
    }
    if let Some(path) = &a.out {
        write_file(path, comparison_csv(&reports))?;
    }
    if let Some(path) = &a.timings_out {
        write_file(path, comparison_timings_csv(&reports))?;
    }
    Ok(())
}

fn ncc(a: NccArgs) -> Result<()> {
    let data = load_csv(&a.input)?;
    let labels = data.label_indices()?;
    let samples = sample_per_class(&labels, data.class_names().len(), a.per_class, a.seed);
    let lph = Descriptor::new(DescriptorKind::Lph)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;

    let mut summary = String::from("class,n,raw_mean_ncc,lph_mean_ncc\n");
    for (name, members) in data.class_names().iter().zip(&samples) {
        if members.len() < 2 {
            bail!("class {name:?} has fewer than 2 signatures");
        }
        let signals: Vec<&PowerSignal> = members.iter().map(|&i| &data.signals()[i]).collect();
        let raw: Vec<Vec<f64>> = signals.iter().map(|s| normalize_signal(s)).collect();
        let hist = signals
            .iter()
            .map(|s| lph.extract(s).map(|h| h.bins))
            .collect::<powerprint::Result<Vec<_>>>()?;
        let raw_m = ncc_matrix(&raw).with_context(|| format!("raw signals of class {name}"))?;
        let lph_m = ncc_matrix(&hist)?;
        write_file(&a.out_dir.join(format!("raw_{name}.csv")), raw_m.to_csv())?;
        write_file(&a.out_dir.join(format!("lph_{name}.csv")), lph_m.to_csv())?;
        let (r, l) = (raw_m.mean_off_diagonal(), lph_m.mean_off_diagonal());
        let _ = writeln!(summary, "{name},{},{r},{l}", members.len());
        println!("{name:<16} raw {r:.4}  lph {l:.4}");
    }
    write_file(&a.out_dir.join("summary.csv"), summary)
}

fn detect(a: DetectArgs) -> Result<()> {
    let data = load_csv(&a.input)?;
    let model = a.model.as_deref().map(load_model).transpose()?;
    let mut events_csv = String::from("source_id,index,delta_watts,kind\n");
    let mut windows = Vec::new();
    for s in data.signals() {
        let events =
            detect_edges(s, a.threshold_watts, a.smooth_window).with_context(|| format!("signal {}", s.source_id()))?;
        for e in &events {
            let _ = writeln!(
                events_csv,
                "{},{},{},{}",
                s.source_id(),
                e.index,
                e.delta_watts,
                e.kind.as_str()
            );
        }
        for seg in segment_between(s, &events) {
            let w = seg.to_signal(s.source_id())?;
            let label = match &model {
                Some(m) => Some(m.model.predict(&m.descriptor.extract(&w)?.bins)?.label),
                None => None,
            };
            windows.push(PowerSignal::new(
                w.samples().to_vec(),
                label,
                w.source_id(),
                w.sample_rate_hz(),
            )?);
        }
    }
    println!("{} events, {} windows", events_csv.lines().count() - 1, windows.len());
    write_file(&a.out, events_csv)?;
    if let Some(path) = &a.segments_out {
        let mut text = Vec::new();
        if !windows.is_empty() {
            powerprint::signal::write_csv(&Dataset::from_signals(windows)?, &mut text)?;
        }
        write_file(path, text)?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let descriptors = descriptor_list(&a.d, &a.descriptors)?;
    let data = match &a.input {
        Some(p) => load_csv(p)?,
        None => generate_synthetic(&SynthConfig::benchmark())?,
    };
    if a.repeat == 0 {
        bail!("--repeat must be >= 1");
    }
    // interleave descriptors so drift in machine load affects all of them alike
    let mut best = vec![f64::INFINITY; descriptors.len()];
    for _ in 0..a.repeat {
        for (d, b) in descriptors.iter().zip(best.iter_mut()) {
            let t = Instant::now();
            extract_all(&data, d)?;
            *b = b.min(t.elapsed().as_secs_f64());
        }
    }
    println!("descriptor,signatures,best_secs");
    for (d, b) in descriptors.iter().zip(&best) {
        println!("{},{},{b}", d.kind().name(), data.len());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => compare(a),
        Command::Ncc(a) => ncc(a),
        Command::Detect(a) => detect(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(anyhow::anyhow!("--threads must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot start thread pool")
            .and_then(|pool| pool.install(|| run(cli))),
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already embed their source, so skip repeated causes
            let mut msg = String::new();
            for cause in e.chain() {
                let text = cause.to_string().replace('\n', " ");
                if !msg.contains(&text) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&text);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
