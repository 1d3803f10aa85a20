//! `distscore`: noise-anchored distributional scoring of speech corpora.
//!
//! Machine-readable JSON goes to stdout, human summaries to stderr.
//! Exit codes: 0 success, 1 failure, 2 bad arguments, 3 I/O, 4 missing feature.

mod error;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use distscore::analysis::{loocv_domains, rank_table, RatingsTable};
use distscore::features::{generate_noise_corpus, write_noise_corpus, NoiseKind};
use distscore::pairing::{apply_filter_hooks, filter_duration, select_speaker_pairs, split_pairs, FilterHook};
use distscore::scoring::{split_half_selfcheck, DatasetFeatures, ExtractorSettings, SummaryCache};
use distscore::{
    ttsds2_score, w2_auto, DatasetManifest, DatasetRole, FactorConfig, FeatureTable, NoiseReferenceSet,
    PreparedFeatures, ScoreReport,
};

use error::{exit, CliError};

#[derive(Parser)]
#[command(name = "distscore", version, about = "Distributional scoring of synthetic speech against real and noise references")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate noise reference corpora.
    Noise(NoiseArgs),
    /// Extract built-in features of a manifest into TTSF files.
    Extract(ExtractArgs),
    /// W2 distance between two TTSF files.
    Distance(DistanceArgs),
    /// Score synthetic datasets against a real reference and noise.
    Score(ScoreArgs),
    /// Score one random half of a real corpus against the other.
    Selfcheck(SelfcheckArgs),
    /// Filter a manifest and build reference/synthesis speaker pairs.
    Pairs(PairsArgs),
    /// Spearman correlations between system scores and ratings.
    Correlate(CorrelateArgs),
    /// Leave-one-domain-out evaluation of learned factor weights.
    Loocv(LoocvArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    All,
    Uniform,
    Gaussian,
    Ones,
    Zeros,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Output directory; each kind goes to `<out>/<kind>/`.
    #[arg(long)]
    out: PathBuf,
    /// Clips per kind.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,
    #[arg(long, default_value_t = 3.0)]
    min_duration: f64,
    #[arg(long, default_value_t = 10.0)]
    max_duration: f64,
}

/// Feature selection shared by the commands that resolve datasets.
#[derive(Args)]
struct FeatureArgs {
    /// Factor config JSON; `default` for the full factor set, `builtin` (the
    /// default) for audio-only features.
    #[arg(long, default_value = "builtin")]
    config: String,
    /// Root of precomputed features: `<dir>/<dataset_id>/<feature_id>.ttsf`.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Writes `<out>/<dataset_id>/<feature_id>.ttsf`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args)]
struct DistanceArgs {
    a: PathBuf,
    b: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    synthetic: Vec<PathBuf>,
    /// Directory of noise corpora, one `manifest.jsonl` per subdirectory.
    #[arg(long)]
    noise: PathBuf,
    /// Also write the reports to this `.json` or `.csv` file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args)]
struct SelfcheckArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    noise: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Per-feature CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args)]
struct PairsArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = distscore::pairing::DEFAULT_PAIR_COUNT)]
    count: usize,
    #[arg(long, default_value_t = distscore::pairing::MIN_DURATION_S)]
    min_duration: f64,
    #[arg(long, default_value_t = distscore::pairing::MAX_DURATION_S)]
    max_duration: f64,
    /// Drop every utterance of this speaker (repeatable).
    #[arg(long)]
    exclude_speaker: Vec<String>,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Ratings CSV: system id, optional `domain`, then one column per metric.
    #[arg(long)]
    ratings: PathBuf,
    /// Scores CSV in the same layout.
    #[arg(long, required_unless_present = "reports", conflicts_with = "reports")]
    scores: Option<PathBuf>,
    /// JSON reports written by `score`.
    #[arg(long, num_args = 1..)]
    reports: Vec<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    permutations: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct LoocvArgs {
    /// CSV: system id, `domain`, factor columns, target column.
    #[arg(long)]
    table: PathBuf,
    /// Comma-separated factor columns.
    #[arg(long, value_delimiter = ',', default_value = "Generic,Speaker,Prosody,Intelligibility")]
    factors: Vec<String>,
    #[arg(long, default_value = "MOS")]
    target: String,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Noise(a) => cmd_noise(a),
        Command::Extract(a) => with_jobs(a.features.jobs, || cmd_extract(&a)),
        Command::Distance(a) => cmd_distance(a),
        Command::Score(a) => with_jobs(a.features.jobs, || cmd_score(&a)),
        Command::Selfcheck(a) => with_jobs(a.features.jobs, || cmd_selfcheck(&a)),
        Command::Pairs(a) => cmd_pairs(a),
        Command::Correlate(a) => with_jobs(a.jobs, || cmd_correlate(&a)),
        Command::Loocv(a) => cmd_loocv(a),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    match jobs {
        None => f(),
        Some(0) => Err(CliError::usage("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError { code: exit::FAILURE, message: e.to_string() })?
            .install(f),
    }
}

fn print_json<T: Serialize + ?Sized>(value: &T) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn load_config(spec: &str) -> Result<FactorConfig, CliError> {
    Ok(match spec {
        "builtin" => FactorConfig::builtin_only(),
        "default" => FactorConfig::default_factors(),
        path => FactorConfig::load(path)?,
    })
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::io(path, "no such file"))
    }
}

/// `<dir>/manifest.jsonl` if present, otherwise every `<dir>/*/manifest.jsonl`.
fn noise_manifests(dir: &Path) -> Result<Vec<DatasetManifest>, CliError> {
    let own = dir.join("manifest.jsonl");
    let mut paths = Vec::new();
    if own.is_file() {
        paths.push(own);
    } else {
        let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
        for entry in entries {
            let p = entry.map_err(|e| CliError::io(dir, e))?.path().join("manifest.jsonl");
            if p.is_file() {
                paths.push(p);
            }
        }
    }
    if paths.is_empty() {
        return Err(CliError::io(dir, "no noise manifests found"));
    }
    paths.sort();
    paths
        .iter()
        .map(|p| Ok(DatasetManifest::read(p)?.with_role(DatasetRole::Noise)))
        .collect()
}

struct Resolver {
    config: FactorConfig,
    features_dir: Option<PathBuf>,
    settings: ExtractorSettings,
    cache: SummaryCache,
}

impl Resolver {
    fn new(args: &FeatureArgs) -> Result<Self, CliError> {
        Ok(Self {
            config: load_config(&args.config)?,
            features_dir: args.features.clone(),
            settings: ExtractorSettings::default(),
            cache: SummaryCache::from_env(),
        })
    }

    fn features(&self, manifest: &DatasetManifest) -> Result<DatasetFeatures, CliError> {
        let f = DatasetFeatures::resolve(&self.config, manifest, self.features_dir.as_deref(), &self.settings)?;
        for (feature, n) in f.skipped.iter().filter(|(_, n)| **n > 0) {
            eprintln!("{}: `{feature}` has no values for {n} of {} utterances", f.dataset_id, f.n_utterances);
        }
        Ok(f)
    }

    fn prepared(&self, manifest: &DatasetManifest) -> Result<PreparedFeatures, CliError> {
        Ok(PreparedFeatures::prepare(&self.features(manifest)?, &self.cache)?)
    }

    fn noise(&self, dir: &Path) -> Result<NoiseReferenceSet, CliError> {
        let prepared = noise_manifests(dir)?
            .iter()
            .map(|m| self.prepared(m))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NoiseReferenceSet::new(prepared)?)
    }
}

#[derive(Serialize)]
struct NoiseOutput {
    kind: String,
    manifest: PathBuf,
    clips: usize,
}

fn cmd_noise(a: NoiseArgs) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let kinds: Vec<NoiseKind> = match a.kind {
        KindArg::All => NoiseKind::ALL.to_vec(),
        KindArg::Uniform => vec![NoiseKind::Uniform],
        KindArg::Gaussian => vec![NoiseKind::Gaussian],
        KindArg::Ones => vec![NoiseKind::Ones],
        KindArg::Zeros => vec![NoiseKind::Zeros],
    };
    let mut written = Vec::new();
    for kind in kinds {
        let corpus = generate_noise_corpus(kind, a.n, (a.min_duration, a.max_duration), a.sample_rate, a.seed)?;
        let manifest = write_noise_corpus(&corpus, a.out.join(kind.name()))?;
        eprintln!("{kind}: {} clips -> {}", a.n, manifest.display());
        written.push(NoiseOutput { kind: kind.name().to_owned(), manifest, clips: a.n });
    }
    print_json(&written)
}

#[derive(Serialize)]
struct ExtractOutput {
    feature_id: String,
    path: PathBuf,
    rows: usize,
    skipped_utterances: usize,
}

fn cmd_extract(a: &ExtractArgs) -> Result<(), CliError> {
    let resolver = Resolver::new(&a.features)?;
    let manifest = DatasetManifest::read(&a.manifest)?;
    let features = resolver.features(&manifest)?;
    let dir = a.out.join(&manifest.id);
    let mut written = Vec::new();
    for spec in resolver.config.features().filter(|s| s.source.is_builtin()) {
        let Some(column) = features.column(&spec.id) else { continue };
        let path = dir.join(format!("{}.ttsf", spec.id));
        write_file(&path, column.table.to_bytes())?;
        eprintln!("{}: {} values -> {}", spec.id, column.table.rows(), path.display());
        written.push(ExtractOutput {
            feature_id: spec.id.clone(),
            path,
            rows: column.table.rows(),
            skipped_utterances: features.skipped.get(&spec.id).copied().unwrap_or(0),
        });
    }
    print_json(&written)
}

#[derive(Serialize)]
struct DistanceOutput<'a> {
    feature_id: &'a str,
    w2: f64,
}

fn cmd_distance(a: DistanceArgs) -> Result<(), CliError> {
    require_file(&a.a)?;
    require_file(&a.b)?;
    let ta = FeatureTable::read(&a.a)?;
    let tb = FeatureTable::read(&a.b)?;
    let w2 = w2_auto(&ta, &tb)?;
    eprintln!("W2({}) = {w2}", ta.feature_id());
    print_json(&DistanceOutput { feature_id: ta.feature_id(), w2 })
}

fn cmd_score(a: &ScoreArgs) -> Result<(), CliError> {
    let resolver = Resolver::new(&a.features)?;
    let real_manifest = DatasetManifest::read(&a.real)?.with_role(DatasetRole::Real);
    let real = resolver.prepared(&real_manifest)?;
    let noise = resolver.noise(&a.noise)?;

    let mut reports = Vec::with_capacity(a.synthetic.len());
    for path in &a.synthetic {
        let manifest = DatasetManifest::read(path)?;
        let synthetic = resolver.prepared(&manifest)?;
        let report = ttsds2_score(&resolver.config, &synthetic, &real, &noise)?;
        eprint!("{}: overall {:.2}", report.dataset_id, report.overall);
        for f in &report.per_factor {
            eprint!("  {} {:.2}", f.name, f.score);
        }
        eprintln!();
        reports.push(report);
    }

    if let Some(out) = &a.out {
        write_reports(out, &reports)?;
    }
    print_json(&reports)
}

/// JSON: the report array. CSV: one file per report; with several reports
/// the dataset id is appended to the file stem.
fn write_reports(out: &Path, reports: &[ScoreReport]) -> Result<(), CliError> {
    let is_csv = out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return write_file(out, serde_json::to_string_pretty(reports)? + "\n");
    }
    if let [report] = reports {
        return write_file(out, report.to_csv());
    }
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    for r in reports {
        write_file(&out.with_file_name(format!("{stem}_{}.csv", r.dataset_id)), r.to_csv())?;
    }
    Ok(())
}

fn cmd_selfcheck(a: &SelfcheckArgs) -> Result<(), CliError> {
    let resolver = Resolver::new(&a.features)?;
    let manifest = DatasetManifest::read(&a.manifest)?.with_role(DatasetRole::Real);
    let features = resolver.features(&manifest)?;
    let noise = resolver.noise(&a.noise)?;
    let report = split_half_selfcheck(&resolver.config, &features, &noise, a.seed, &resolver.cache)?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for f in &report.features {
        eprintln!("{:<24} {:>7.2}  {}", f.feature_id, f.score, if f.pass { "pass" } else { "FAIL" });
    }
    if let Some(path) = &a.csv {
        let mut csv = String::from("feature_id,factor,w2_real,w2_noise,noise_id,score,pass\n");
        for f in &report.features {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                f.feature_id, f.factor, f.w2_real, f.w2_noise_min, f.noise_id_argmin, f.score, f.pass
            ));
        }
        write_file(path, csv)?;
    }
    print_json(&report)
}

#[derive(Serialize)]
struct PairsOutput {
    reference: PathBuf,
    synthesis: PathBuf,
    audit: PathBuf,
    pairs: usize,
    duration_rejected: usize,
}

fn cmd_pairs(a: PairsArgs) -> Result<(), CliError> {
    let manifest = DatasetManifest::read(&a.manifest)?;
    let filtered = filter_duration(&manifest, a.min_duration, a.max_duration)?;
    let duration_rejected = manifest.len() - filtered.len();

    let excluded = &a.exclude_speaker;
    let hooks = [FilterHook::new("exclude_speaker", |e| !excluded.contains(&e.speaker))];
    let (kept, audit) = apply_filter_hooks(&filtered, &hooks);
    let kept = kept.ok_or(distscore::pairing::PairingError::EmptyResult)?;

    let pairs = select_speaker_pairs(&kept, a.count, a.seed)?;
    let (reference, synthesis) = split_pairs(&manifest.id, &pairs)?;

    let ref_path = a.out.join("reference.jsonl");
    let syn_path = a.out.join("synthesis.jsonl");
    let audit_path = a.out.join("audit.csv");
    write_file(&ref_path, reference.to_jsonl())?;
    write_file(&syn_path, synthesis.to_jsonl())?;
    let mut csv = format!("hook,rejected\nduration,{duration_rejected}\n");
    for (name, n) in &audit.rejections {
        csv.push_str(&format!("{name},{n}\n"));
    }
    write_file(&audit_path, csv)?;

    eprintln!("{} pairs ({duration_rejected} utterances outside duration bounds)", pairs.len());
    print_json(&PairsOutput {
        reference: ref_path,
        synthesis: syn_path,
        audit: audit_path,
        pairs: pairs.len(),
        duration_rejected,
    })
}

fn cmd_correlate(a: &CorrelateArgs) -> Result<(), CliError> {
    require_file(&a.ratings)?;
    let ratings = RatingsTable::read_path(&a.ratings)?;
    let scores = match &a.scores {
        Some(path) => {
            require_file(path)?;
            RatingsTable::read_path(path)?
        }
        None => {
            let mut reports = Vec::new();
            for path in &a.reports {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let batch: Vec<ScoreReport> = serde_json::from_str(&text)?;
                reports.extend(batch);
            }
            RatingsTable::from_reports(&reports)?
        }
    };
    let grid = rank_table(&scores, &ratings, a.permutations, a.seed)?;
    for c in &grid {
        eprintln!(
            "{:<12} {:<16} {:<8} rho {:>7.4}  p {:.4}{}",
            c.domain,
            c.score_metric,
            c.rating_metric,
            c.rho,
            c.p_value,
            if c.significant { " *" } else { "" }
        );
    }
    if let Some(path) = &a.csv {
        let mut csv = String::from("domain,score_metric,rating_metric,n,rho,p_value,significant\n");
        for c in &grid {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.domain, c.score_metric, c.rating_metric, c.n, c.rho, c.p_value, c.significant
            ));
        }
        write_file(path, csv)?;
    }
    print_json(&grid)
}

fn cmd_loocv(a: LoocvArgs) -> Result<(), CliError> {
    require_file(&a.table)?;
    let table = RatingsTable::read_path(&a.table)?;
    let factors: Vec<&str> = a.factors.iter().map(String::as_str).collect();
    let folds = loocv_domains(&table.domain_data(&factors, &a.target)?)?;
    for f in &folds {
        eprintln!(
            "{:<12} baseline {:.3}  learned {:.3}{}",
            f.held_out,
            f.baseline_rho,
            f.learned_rho,
            if f.rank_deficient { "  (rank deficient)" } else { "" }
        );
    }
    if let Some(path) = &a.csv {
        let mut csv = format!("held_out,baseline_rho,learned_rho,intercept,{}\n", a.factors.join(","));
        for f in &folds {
            let w: Vec<String> = f.weights.weights.iter().map(f64::to_string).collect();
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                f.held_out,
                f.baseline_rho,
                f.learned_rho,
                f.weights.intercept,
                w.join(",")
            ));
        }
        write_file(path, csv)?;
    }
    print_json(&folds)
}
