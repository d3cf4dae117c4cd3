//! Command-line front end for the hazard-review pipeline.
//!
//! Every subcommand writes its artifacts into `--out-dir` together with a
//! `config_echo.txt` that records the exact configuration, so any run can be
//! reproduced from its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use hazrev_core::corpus::{load_corpus, load_recalls, Corpus, CorpusKind};
use hazrev_core::eval::{
    load_labeled_reviews, results_csv, roc_csv, roc_points, run_trials, tau_label, GridPoint,
    LabeledEvalSet, Method,
};
use hazrev_core::informed_prior::{apply_transform, fit_informed, load_transform, save_transform};
use hazrev_core::linmodel::{fit, load_model, predict_proba, save_model, top_terms_csv, FitParams};
use hazrev_core::pu_train::{build_training_set, save_sampled_ids, PuConfig};
use hazrev_core::recall_match::{
    cumulative_csv, lead_time, load_matches, load_products, match_recalls, offsets_csv,
    save_matches, ReviewPrediction, DEFAULT_CATEGORY_KEYWORDS,
};
use hazrev_core::synthgen::{generate, write_synth_corpus, SynthConfig};
use hazrev_core::vectorizer::{
    build_vocabulary, load_vocabulary, save_vocabulary, vectorize, Vocabulary,
    DEFAULT_MAX_DF_RATIO, DEFAULT_MIN_DF,
};

#[derive(Parser)]
#[command(
    name = "hazrev",
    about = "Detect product-safety hazard reports in consumer reviews",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the n-gram vocabulary from a reviews file
    BuildVocab(BuildVocabArgs),
    /// Train a baseline or informed-prior classifier
    Train(TrainArgs),
    /// Score a reviews file with a trained model
    Predict(PredictArgs),
    /// Run a multi-trial evaluation grid against a labeled review file
    Evaluate(EvaluateArgs),
    /// Match recall records to product listings by shared title terms
    MatchRecalls(MatchRecallsArgs),
    /// Lead-time analytics for scored reviews of recalled products
    Leadtime(LeadtimeArgs),
    /// Generate a synthetic corpus with a planted selection bias
    Synth(SynthArgs),
}

/// Star-rating threshold: 1..=5 or "none".
#[derive(Clone, Copy, Debug)]
struct TauArg(Option<u8>);

impl std::str::FromStr for TauArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(TauArg(None));
        }
        match s.parse::<u8>() {
            Ok(v) if (1..=5).contains(&v) => Ok(TauArg(Some(v))),
            _ => Err(format!("tau must be 1..=5 or 'none', got {s:?}")),
        }
    }
}

impl std::fmt::Display for TauArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&tau_label(self.0))
    }
}

#[derive(Args)]
struct VocabParams {
    /// Existing vocabulary file; built from the reviews when absent
    #[arg(long)]
    vocab: Option<PathBuf>,

    /// Minimum document frequency for a term
    #[arg(long, default_value_t = DEFAULT_MIN_DF)]
    min_df: usize,

    /// Maximum fraction of documents a term may appear in
    #[arg(long, default_value_t = DEFAULT_MAX_DF_RATIO)]
    max_df_ratio: f64,
}

impl VocabParams {
    /// Loads the vocabulary or builds it from `reviews`, saving the built
    /// one to `out_dir/vocab.txt`.
    fn resolve(&self, reviews: &Corpus, out_dir: &Path) -> Result<Vocabulary> {
        match &self.vocab {
            Some(path) => load_vocabulary(path).context("loading vocabulary"),
            None => {
                let vocab = build_vocabulary(reviews, self.min_df, self.max_df_ratio)
                    .context("building vocabulary")?;
                save_vocabulary(&vocab, out_dir.join("vocab.txt")).context("saving vocabulary")?;
                Ok(vocab)
            }
        }
    }

    fn echo(&self) -> Vec<(String, String)> {
        vec![
            ("vocab".into(), display_opt_path(&self.vocab)),
            ("min_df".into(), self.min_df.to_string()),
            ("max_df_ratio".into(), self.max_df_ratio.to_string()),
        ]
    }
}

#[derive(Args)]
struct FitFlags {
    /// L2 regularization strength
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,

    /// Gradient-descent learning rate
    #[arg(long, default_value_t = 0.1)]
    lr: f64,

    /// Gradient-descent epochs
    #[arg(long, default_value_t = 200)]
    epochs: usize,
}

impl FitFlags {
    fn params(&self, seed: u64) -> FitParams {
        FitParams {
            lambda: self.lambda,
            lr: self.lr,
            epochs: self.epochs,
            seed,
        }
    }

    fn echo(&self) -> Vec<(String, String)> {
        vec![
            ("lambda".into(), self.lambda.to_string()),
            ("lr".into(), self.lr.to_string()),
            ("epochs".into(), self.epochs.to_string()),
        ]
    }
}

#[derive(Args)]
struct BuildVocabArgs {
    /// Reviews file (one JSON object per line)
    #[arg(long)]
    reviews: PathBuf,

    #[arg(long, default_value_t = DEFAULT_MIN_DF)]
    min_df: usize,

    #[arg(long, default_value_t = DEFAULT_MAX_DF_RATIO)]
    max_df_ratio: f64,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    complaints: PathBuf,

    #[arg(long)]
    reviews: PathBuf,

    #[command(flatten)]
    vocab: VocabParams,

    /// baseline or informed
    #[arg(long, default_value = "informed")]
    method: Method,

    /// Minimum star rating for sampled negatives (1..=5 or "none")
    #[arg(long, default_value = "5")]
    tau: TauArg,

    /// Number of negatives to sample
    #[arg(long, default_value_t = 20_000)]
    num_neg: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[command(flatten)]
    fit: FitFlags,

    /// Decision threshold for the hard labels fed to the informed prior
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,

    /// Rows in the top-terms report
    #[arg(long, default_value_t = 20)]
    top_terms: usize,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,

    #[arg(long)]
    vocab: PathBuf,

    /// Transform CSV from informed training; applied before scoring
    #[arg(long)]
    transform: Option<PathBuf>,

    #[arg(long)]
    reviews: PathBuf,

    #[arg(long, default_value_t = 0.5)]
    threshold: f64,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    complaints: PathBuf,

    #[arg(long)]
    reviews: PathBuf,

    /// Labeled reviews file: {id, text, label} per line
    #[arg(long)]
    eval: PathBuf,

    #[command(flatten)]
    vocab: VocabParams,

    #[arg(long, default_value = "informed")]
    method: Method,

    /// Grid values; repeat the flag to sweep (1..=5 or "none")
    #[arg(long = "tau", default_values = ["5"])]
    taus: Vec<TauArg>,

    /// Grid values; repeat the flag to sweep
    #[arg(long = "num-neg", default_values_t = [20_000usize])]
    num_negs: Vec<usize>,

    #[arg(long, default_value_t = 3)]
    trials: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[command(flatten)]
    fit: FitFlags,

    #[arg(long, default_value_t = 0.5)]
    threshold: f64,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MatchRecallsArgs {
    /// Recall records file: {recall_id, recall_date, title, reason?}
    #[arg(long)]
    recalls: PathBuf,

    /// Product listings file: {product_id, title}
    #[arg(long)]
    products: PathBuf,

    /// Comma-separated category keywords filtering recall titles; an empty
    /// string disables the filter
    #[arg(long)]
    keywords: Option<String>,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct LeadtimeArgs {
    /// Scores CSV produced by `predict`
    #[arg(long)]
    scores: PathBuf,

    /// Matches file produced by `match-recalls`
    #[arg(long)]
    matches: PathBuf,

    #[arg(long)]
    recalls: PathBuf,

    /// Products with fewer total reviews are excluded
    #[arg(long, default_value_t = 10)]
    min_reviews: usize,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 2_000)]
    n_complaints: usize,

    #[arg(long, default_value_t = 100_000)]
    n_reviews: usize,

    #[arg(long, default_value_t = 0.01)]
    hazard_rate: f64,

    #[arg(long)]
    out_dir: PathBuf,
}

fn display_opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "(none)".to_string())
}

fn write_echo(out_dir: &Path, command: &str, entries: &[(String, String)]) -> Result<()> {
    let mut body = format!("command={command}\n");
    for (k, v) in entries {
        body.push_str(&format!("{k}={v}\n"));
    }
    fs::write(out_dir.join("config_echo.txt"), body).context("writing config echo")?;
    Ok(())
}

fn prepare_out_dir(out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))
}

fn cmd_build_vocab(args: &BuildVocabArgs) -> Result<()> {
    prepare_out_dir(&args.out_dir)?;
    let reviews = load_corpus(&args.reviews, CorpusKind::Unlabeled).context("loading reviews")?;
    let vocab = build_vocabulary(&reviews, args.min_df, args.max_df_ratio)
        .context("building vocabulary")?;
    save_vocabulary(&vocab, args.out_dir.join("vocab.txt")).context("saving vocabulary")?;
    write_echo(
        &args.out_dir,
        "build-vocab",
        &[
            ("reviews".into(), args.reviews.display().to_string()),
            ("min_df".into(), args.min_df.to_string()),
            ("max_df_ratio".into(), args.max_df_ratio.to_string()),
        ],
    )?;
    println!(
        "vocabulary: {} terms from {} reviews",
        vocab.len(),
        reviews.len()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    prepare_out_dir(&args.out_dir)?;
    let complaints =
        load_corpus(&args.complaints, CorpusKind::PositiveLabeled).context("loading complaints")?;
    let reviews = load_corpus(&args.reviews, CorpusKind::Unlabeled).context("loading reviews")?;
    let vocab = args.vocab.resolve(&reviews, &args.out_dir)?;

    let pu = PuConfig {
        tau: args.tau.0,
        num_neg: args.num_neg,
        seed: args.seed,
    };
    let params = args.fit.params(args.seed);

    match args.method {
        Method::Baseline => {
            let ts = build_training_set(&complaints, &reviews, &vocab, &pu)
                .context("building training set")?;
            let model = fit(&ts.rows, &params).context("fitting baseline model")?;
            save_model(&model, args.out_dir.join("model.txt")).context("saving model")?;
            save_sampled_ids(&ts.sampled_ids, args.out_dir.join("sampled_ids.txt"))
                .context("saving sampled ids")?;
            fs::write(
                args.out_dir.join("top_terms.csv"),
                top_terms_csv(&model, &vocab, args.top_terms),
            )
            .context("writing top terms")?;
            println!(
                "baseline model: {} features, intercept {}",
                model.dim(),
                model.intercept()
            );
        }
        Method::Informed => {
            let run = fit_informed(&complaints, &reviews, &vocab, &pu, &params, args.threshold)
                .context("fitting informed model")?;
            save_model(&run.baseline, args.out_dir.join("baseline_model.txt"))
                .context("saving baseline model")?;
            save_model(&run.informed, args.out_dir.join("informed_model.txt"))
                .context("saving informed model")?;
            save_transform(&run.transform, &vocab, args.out_dir.join("transform.csv"))
                .context("saving transform")?;
            save_sampled_ids(
                &run.training.sampled_ids,
                args.out_dir.join("sampled_ids.txt"),
            )
            .context("saving sampled ids")?;
            fs::write(
                args.out_dir.join("top_terms.csv"),
                top_terms_csv(&run.informed, &vocab, args.top_terms),
            )
            .context("writing top terms")?;
            println!(
                "informed model: {} features, rho {}",
                run.informed.dim(),
                run.transform.rho()
            );
        }
    }

    let mut echo = vec![
        ("complaints".into(), args.complaints.display().to_string()),
        ("reviews".into(), args.reviews.display().to_string()),
        ("method".into(), args.method.as_str().to_string()),
        ("tau".into(), args.tau.to_string()),
        ("num_neg".into(), args.num_neg.to_string()),
        ("seed".into(), args.seed.to_string()),
        ("threshold".into(), args.threshold.to_string()),
        ("top_terms".into(), args.top_terms.to_string()),
    ];
    echo.extend(args.vocab.echo());
    echo.extend(args.fit.echo());
    write_echo(&args.out_dir, "train", &echo)
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    prepare_out_dir(&args.out_dir)?;
    let vocab = load_vocabulary(&args.vocab).context("loading vocabulary")?;
    let model = load_model(&args.model).context("loading model")?;
    let transform = match &args.transform {
        Some(path) => Some(load_transform(path, &vocab).context("loading transform")?),
        None => None,
    };
    let reviews = load_corpus(&args.reviews, CorpusKind::Unlabeled).context("loading reviews")?;

    let scores_path = args.out_dir.join("scores.csv");
    let mut writer = csv::Writer::from_path(&scores_path).context("creating scores file")?;
    writer
        .write_record(["review_id", "product_id", "date", "score", "label"])
        .context("writing scores header")?;
    let mut positives = 0usize;
    for doc in reviews.iter() {
        let mut x = vectorize(doc, &vocab);
        if let Some(t) = &transform {
            x = apply_transform(&x, t).context("applying transform")?;
        }
        let score = predict_proba(&model, &x).context("scoring review")?;
        let label = score >= args.threshold;
        positives += label as usize;
        writer
            .write_record([
                doc.id.as_str(),
                doc.product_id.as_deref().unwrap_or(""),
                &doc.date.map(|d| d.to_string()).unwrap_or_default(),
                &score.to_string(),
                if label { "1" } else { "0" },
            ])
            .context("writing score row")?;
    }
    writer.flush().context("flushing scores")?;

    write_echo(
        &args.out_dir,
        "predict",
        &[
            ("model".into(), args.model.display().to_string()),
            ("vocab".into(), args.vocab.display().to_string()),
            ("transform".into(), display_opt_path(&args.transform)),
            ("reviews".into(), args.reviews.display().to_string()),
            ("threshold".into(), args.threshold.to_string()),
        ],
    )?;
    println!(
        "scored {} reviews; {} predicted hazardous",
        reviews.len(),
        positives
    );
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    prepare_out_dir(&args.out_dir)?;
    let complaints =
        load_corpus(&args.complaints, CorpusKind::PositiveLabeled).context("loading complaints")?;
    let reviews = load_corpus(&args.reviews, CorpusKind::Unlabeled).context("loading reviews")?;
    let vocab = args.vocab.resolve(&reviews, &args.out_dir)?;

    let labeled = load_labeled_reviews(&args.eval).context("loading eval file")?;
    let texts: Vec<(&str, bool)> = labeled
        .iter()
        .map(|r| (r.text.as_str(), r.label == 1))
        .collect();
    let eval_set = LabeledEvalSet::from_texts(&texts, &vocab);

    let grid: Vec<GridPoint> = args
        .taus
        .iter()
        .flat_map(|tau| {
            args.num_negs.iter().map(|&num_neg| GridPoint {
                method: args.method,
                tau: tau.0,
                num_neg,
            })
        })
        .collect();

    let params = args.fit.params(args.seed);
    let reports = run_trials(
        &complaints,
        &reviews,
        &vocab,
        &eval_set,
        &grid,
        args.trials,
        args.seed,
        &params,
        args.threshold,
    )
    .context("running evaluation trials")?;

    fs::write(args.out_dir.join("results.csv"), results_csv(&reports))
        .context("writing results")?;
    let gold = eval_set.gold();
    for report in &reports {
        let points = roc_points(&report.first_trial_scores, &gold);
        let name = format!(
            "roc_{}_tau{}_s{}.csv",
            report.method.as_str(),
            tau_label(report.tau),
            report.num_neg
        );
        fs::write(args.out_dir.join(name), roc_csv(&points)).context("writing ROC points")?;
    }

    let mut echo = vec![
        ("complaints".into(), args.complaints.display().to_string()),
        ("reviews".into(), args.reviews.display().to_string()),
        ("eval".into(), args.eval.display().to_string()),
        ("method".into(), args.method.as_str().to_string()),
        (
            "tau".into(),
            args.taus
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        (
            "num_neg".into(),
            args.num_negs
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("trials".into(), args.trials.to_string()),
        ("seed".into(), args.seed.to_string()),
        ("threshold".into(), args.threshold.to_string()),
    ];
    echo.extend(args.vocab.echo());
    echo.extend(args.fit.echo());
    write_echo(&args.out_dir, "evaluate", &echo)?;

    print!("{}", results_csv(&reports));
    Ok(())
}

fn cmd_match_recalls(args: &MatchRecallsArgs) -> Result<()> {
    prepare_out_dir(&args.out_dir)?;
    let recalls = load_recalls(&args.recalls).context("loading recalls")?;
    let products = load_products(&args.products).context("loading products")?;
    let keywords: Vec<String> = match &args.keywords {
        Some(s) => s
            .split(',')
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .map(str::to_lowercase)
            .collect(),
        None => DEFAULT_CATEGORY_KEYWORDS
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };

    let matches = match_recalls(&recalls, &products, &keywords);
    save_matches(&matches, args.out_dir.join("matches.jsonl")).context("saving matches")?;

    write_echo(
        &args.out_dir,
        "match-recalls",
        &[
            ("recalls".into(), args.recalls.display().to_string()),
            ("products".into(), args.products.display().to_string()),
            ("keywords".into(), keywords.join(",")),
        ],
    )?;
    println!(
        "{} candidate matches across {} recalls and {} products (all unverified)",
        matches.len(),
        recalls.len(),
        products.len()
    );
    Ok(())
}

fn read_scores(path: &Path) -> Result<Vec<ReviewPrediction>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening scores file {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.context("reading scores row")?;
        if record.len() < 5 {
            bail!(
                "scores row {} has {} fields, expected 5",
                i + 2,
                record.len()
            );
        }
        let date = match &record[2] {
            "" => None,
            s => Some(
                s.parse::<NaiveDate>()
                    .with_context(|| format!("bad date {s:?} in scores row {}", i + 2))?,
            ),
        };
        rows.push(ReviewPrediction {
            review_id: record[0].to_string(),
            product_id: record[1].to_string(),
            date,
            hazardous: &record[4] == "1",
        });
    }
    Ok(rows)
}

fn cmd_leadtime(args: &LeadtimeArgs) -> Result<()> {
    prepare_out_dir(&args.out_dir)?;
    let scores = read_scores(&args.scores)?;
    let matches = load_matches(&args.matches).context("loading matches")?;
    let recalls = load_recalls(&args.recalls).context("loading recalls")?;

    // Only reviews of matched products enter the analysis.
    let matched_products: std::collections::HashSet<&str> =
        matches.iter().map(|m| m.product_id.as_str()).collect();
    let relevant: Vec<ReviewPrediction> = scores
        .into_iter()
        .filter(|p| matched_products.contains(p.product_id.as_str()))
        .collect();

    let report = lead_time(&relevant, &matches, &recalls, args.min_reviews)
        .context("computing lead times")?;

    fs::write(args.out_dir.join("offsets.csv"), offsets_csv(&report)).context("writing offsets")?;
    fs::write(args.out_dir.join("cumulative.csv"), cumulative_csv(&report))
        .context("writing cumulative series")?;

    write_echo(
        &args.out_dir,
        "leadtime",
        &[
            ("scores".into(), args.scores.display().to_string()),
            ("matches".into(), args.matches.display().to_string()),
            ("recalls".into(), args.recalls.display().to_string()),
            ("min_reviews".into(), args.min_reviews.to_string()),
        ],
    )?;

    for row in &report.offsets {
        println!(
            "{} {} {} days ({} vs recall {})",
            row.product_id, row.review_id, row.offset_days, row.review_date, row.recall_date
        );
    }
    println!(
        "pre-recall detection: {}/{} products ({:.1}%)",
        report.products_with_pre_recall_review,
        report.products_included,
        100.0 * report.pre_recall_fraction()
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    prepare_out_dir(&args.out_dir)?;
    let cfg = SynthConfig {
        seed: args.seed,
        n_complaints: args.n_complaints,
        n_reviews: args.n_reviews,
        hazard_rate: args.hazard_rate,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg).context("generating synthetic corpus")?;
    write_synth_corpus(&corpus, &args.out_dir).context("writing synthetic corpus")?;
    write_echo(
        &args.out_dir,
        "synth",
        &[
            ("seed".into(), args.seed.to_string()),
            ("n_complaints".into(), args.n_complaints.to_string()),
            ("n_reviews".into(), args.n_reviews.to_string()),
            ("hazard_rate".into(), args.hazard_rate.to_string()),
        ],
    )?;
    println!(
        "synthetic corpus: {} complaints, {} reviews ({} hidden positives), bias token {:?}",
        corpus.complaints.len(),
        corpus.reviews.len(),
        corpus.hidden_positive_count(),
        corpus.bias_token()
    );
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::BuildVocab(args) => cmd_build_vocab(args).context("stage build-vocab"),
        Command::Train(args) => cmd_train(args).context("stage train"),
        Command::Predict(args) => cmd_predict(args).context("stage predict"),
        Command::Evaluate(args) => cmd_evaluate(args).context("stage evaluate"),
        Command::MatchRecalls(args) => cmd_match_recalls(args).context("stage match-recalls"),
        Command::Leadtime(args) => cmd_leadtime(args).context("stage leadtime"),
        Command::Synth(args) => cmd_synth(args).context("stage synth"),
    }
}

fn main() {
    env_logger::init();
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
