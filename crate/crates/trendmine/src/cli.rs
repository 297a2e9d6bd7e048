//! Command-line driver. Every command writes into `--out` through a
//! [`RunWriter`], which stamps outputs and finishes with a manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use trendmine_core::geo::GeoOptions;
use trendmine_core::record::{PollRecord, TweetRecord};
use trendmine_core::synth::{self, ScenarioSpec};
use trendmine_core::text::{CandidatePair, TextPipeline};

use crate::artifacts::{csv_table, RunMeta, RunWriter};
use crate::config::{OutputFormat, Overrides, RunConfig, SEED_ENV};
use crate::error::{Error, Result};
use crate::io::{self, TweetFormat};
use crate::pipeline::{self, GeoReport, Report, SentimentReport, TopicsReport, TrendsReport};
use crate::serve;

#[derive(Debug, Parser)]
#[command(name = "trendmine", version, about = "Tweet corpus trends, sentiment, state calls and topics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic corpus with its ground truth.
    Synth(SynthArgs),
    /// Train a polarity model from labelled text.
    Train(RunArgs),
    /// Hold-out accuracy of a model trained on labelled text.
    Eval(EvalArgs),
    /// Daily volume, peaks, mentions, hashtags, sources and poll summaries.
    Trends(RunArgs),
    /// Daily polarity counts per candidate and agreement with polls.
    SentimentTrend(RunArgs),
    /// Per-state calls from geo-tagged records.
    Geo(GeoArgs),
    /// LDA topics over the sampled records.
    Topics(RunArgs),
    /// Every analysis in one run directory.
    Report(GeoArgs),
    /// Serve finished run directories over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Tweet file (tab-delimited or JSON lines).
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub polls: Option<PathBuf>,
    /// State anchor CSV; the built-in 51 anchors when absent.
    #[arg(long)]
    pub states: Option<PathBuf>,
    #[arg(long)]
    pub labeled: Option<PathBuf>,
    /// Model JSON written by `train`; overrides `--labeled`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sample_size: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "iters")]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Every n-th usable example is held out.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GeoArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Actual state winners (JSON or `code,winner` CSV) to score against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scenario JSON; the built-in election scenario when absent.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Geo-tagged records per state.
    #[arg(long)]
    pub records_per_state: Option<u32>,
    /// Records per ordinary day before spikes.
    #[arg(long)]
    pub base_volume: Option<u32>,
    /// Labelled training rows to write.
    #[arg(long, default_value_t = 3000)]
    pub labeled_count: usize,
    #[arg(long, value_enum, default_value_t = TweetLayout::Tsv)]
    pub layout: TweetLayout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TweetLayout {
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// A run directory or a directory of run directories.
    #[arg(long, default_value = "out")]
    pub runs: PathBuf,
    #[arg(long, default_value_t = serve::DEFAULT_PORT)]
    pub port: u16,
}

/// Parses `argv` and runs it, returning the process exit code.
pub fn run_subcommand<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn log(stage: &str, detail: impl std::fmt::Display) {
    eprintln!("[{stage}] {detail}");
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth_cmd(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Eval(a) => eval_cmd(&a),
        Command::Trends(a) => analysis_cmd("trends", &a, None),
        Command::SentimentTrend(a) => analysis_cmd("sentiment-trend", &a, None),
        Command::Geo(a) => analysis_cmd("geo", &a.run, a.truth.as_deref()),
        Command::Topics(a) => analysis_cmd("topics", &a, None),
        Command::Report(a) => analysis_cmd("report", &a.run, a.truth.as_deref()),
        Command::Serve(a) => serve_cmd(&a),
    }
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            sample_size: self.sample_size,
            format: self.format,
            tweets: self.input.clone(),
            polls: self.polls.clone(),
            labeled: self.labeled.clone(),
            model: self.model.clone(),
            states: self.states.clone(),
            k: self.k,
            iterations: self.iterations,
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let env = std::env::var(SEED_ENV).ok();
        RunConfig::resolve(self.config.as_deref(), env.as_deref(), &self.overrides())
    }
}

fn writer(out: &Path, command: &str, cfg: &RunConfig) -> Result<RunWriter> {
    RunWriter::new(out, RunMeta::new(command, cfg.seed, cfg.hash()))
}

fn record_inputs(w: &mut RunWriter, cfg: &RunConfig) -> Result<()> {
    let i = &cfg.input;
    for (name, path) in [
        ("tweets", &i.tweets),
        ("polls", &i.polls),
        ("labeled", &i.labeled),
        ("model", &i.model),
        ("states", &i.states),
        ("stop_words", &i.stop_words),
        ("negation_cues", &i.negation_cues),
    ] {
        if let Some(p) = path {
            if p.is_file() {
                w.record_input(name, p)?;
            }
        }
    }
    Ok(())
}

fn synth_cmd(a: &SynthArgs) -> Result<()> {
    let mut spec = match &a.scenario {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<ScenarioSpec>(&text)
                .map_err(|e| Error::invalid(format!("{}: {e}", p.display())))?
        }
        None => {
            let env = std::env::var(SEED_ENV).ok();
            let cfg = RunConfig::resolve(None, env.as_deref(), &Overrides::default())?;
            ScenarioSpec::election_2012(cfg.seed)
        }
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(n) = a.records_per_state {
        for s in &mut spec.states {
            s.records = n;
        }
    }
    if let Some(v) = a.base_volume {
        spec.volume.base = v;
    }
    log("synth", format_args!("seed {}", spec.seed));
    let scenario = synth::generate(&spec).map_err(Error::invalid)?;
    let labeled = synth::generate_labeled(&spec, a.labeled_count).map_err(Error::invalid)?;
    let spec_json = serde_json::to_vec(&spec).map_err(Error::invalid)?;
    let meta = RunMeta::new("synth", spec.seed, crate::artifacts::sha256_hex(&spec_json));
    let mut w = RunWriter::new(&a.out, meta)?;
    let (name, layout) = match a.layout {
        TweetLayout::Tsv => ("tweets.tsv", TweetFormat::Delimited),
        TweetLayout::Jsonl => ("tweets.jsonl", TweetFormat::JsonLine),
    };
    w.write_raw(name, &io::format_tweets(&scenario.tweets, layout))?;
    w.write_raw("polls.csv", &io::format_polls(&scenario.polls))?;
    w.write_raw("labeled.tsv", &io::format_labeled(&labeled))?;
    w.write_json("scenario.json", "scenario", &spec)?;
    w.write_json("truth.json", "truth", &scenario.truth)?;
    w.set_data_span(pipeline::data_span(&scenario.tweets));
    w.finish()?;
    log(
        "synth",
        format_args!(
            "{} records, {} polls, {} labelled rows in {}",
            scenario.tweets.len(),
            scenario.polls.len(),
            labeled.len(),
            a.out.display()
        ),
    );
    Ok(())
}

fn train_cmd(a: &RunArgs) -> Result<()> {
    let cfg = a.resolve()?;
    let text = pipeline::load_text_pipeline(&cfg)?;
    let pair = cfg.candidate_pair()?;
    let path = pipeline::require(&cfg.input.labeled, "--labeled")?;
    let rows = io::read_labeled(path)?;
    log("train", format_args!("{} labelled rows", rows.len()));
    let (model, stats) = pipeline::train_model(&rows, &text, &pair, cfg.prior)?;
    log(
        "train",
        format_args!("{} used, {} skipped, vocabulary {}", stats.used, stats.skipped, model.vocabulary_size()),
    );
    let mut w = writer(&a.out, "train", &cfg)?;
    record_inputs(&mut w, &cfg)?;
    w.write_json("model.json", "model", &model)?;
    w.write_json("train.json", "train", &stats)?;
    w.finish()?;
    Ok(())
}

fn eval_cmd(a: &EvalArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    let text = pipeline::load_text_pipeline(&cfg)?;
    let pair = cfg.candidate_pair()?;
    let path = pipeline::require(&cfg.input.labeled, "--labeled")?;
    let rows = io::read_labeled(path)?;
    let report = pipeline::evaluate_labeled(&rows, &text, &pair, cfg.prior, a.folds)?;
    log(
        "eval",
        format_args!(
            "accuracy {:.4} over {} held-out rows",
            report.evaluation.accuracy, report.evaluation.total
        ),
    );
    let mut w = writer(&a.run.out, "eval", &cfg)?;
    record_inputs(&mut w, &cfg)?;
    w.write_json("eval.json", "eval", &report)?;
    if cfg.format == OutputFormat::Csv {
        let labels = ["negative", "neutral", "positive"];
        let rows = (0..3).map(|t| {
            let mut row = vec![labels[t].to_string()];
            row.extend(report.evaluation.confusion[t].iter().map(u64::to_string));
            row
        });
        w.write_csv("confusion.csv", &csv_table(&["true", "negative", "neutral", "positive"], rows))?;
    }
    w.finish()?;
    Ok(())
}

/// Inputs shared by the analysis commands.
struct Loaded {
    cfg: RunConfig,
    text: TextPipeline,
    pair: CandidatePair,
    tweets: Vec<TweetRecord>,
    polls: Option<Vec<PollRecord>>,
}

fn load(a: &RunArgs) -> Result<Loaded> {
    let cfg = a.resolve()?;
    let text = pipeline::load_text_pipeline(&cfg)?;
    let pair = cfg.candidate_pair()?;
    let path = pipeline::require(&cfg.input.tweets, "--in")?;
    let tweets = io::read_tweets(path)?;
    log("load", format_args!("{} records from {}", tweets.len(), path.display()));
    let polls = match &cfg.input.polls {
        Some(p) => {
            let polls = io::load_polls(p)?;
            log("load", format_args!("{} polls from {}", polls.len(), p.display()));
            Some(polls)
        }
        None => None,
    };
    Ok(Loaded {
        cfg,
        text,
        pair,
        tweets,
        polls,
    })
}

fn analysis_cmd(command: &str, a: &RunArgs, truth: Option<&Path>) -> Result<()> {
    let l = load(a)?;
    let cfg = &l.cfg;
    let window = cfg.window.window()?;
    let daily = pipeline::daily_samples(&l.tweets, &window, cfg.sample_size, cfg.seed)?;
    log(
        "bucket",
        format_args!(
            "{} days, {} in window, {} out of window, {} duplicate ids",
            daily.bucketed.buckets.len(),
            daily.bucketed.total_bucketed(),
            daily.bucketed.out_of_window,
            daily.bucketed.duplicate_ids
        ),
    );
    let mut w = writer(&a.out, command, cfg)?;
    record_inputs(&mut w, cfg)?;
    w.set_data_span(pipeline::data_span(&l.tweets));
    let polls = l.polls.as_deref();
    let truth = truth.map(pipeline::read_truth).transpose()?;
    let csv = cfg.format == OutputFormat::Csv;
    let needs_model = matches!(command, "sentiment-trend" | "geo" | "report");
    let model = if needs_model {
        let m = pipeline::obtain_model(cfg, &l.text, &l.pair)?;
        log("model", format_args!("vocabulary {}", m.vocabulary_size()));
        Some(m)
    } else {
        None
    };

    let trends = if matches!(command, "trends" | "report") {
        let t = pipeline::trends_report(&daily, polls, &l.pair, cfg.trends.top_n, cfg.trends.peak_prominence)?;
        log("trends", format_args!("{} peaks", t.peaks.as_ref().map_or(0, Vec::len)));
        write_trends(&mut w, &t, &l.pair, csv)?;
        Some(t)
    } else {
        None
    };
    let sentiment = match (&model, command) {
        (Some(m), "sentiment-trend" | "report") => {
            let s = pipeline::sentiment_report(&daily, m, &l.text, &l.pair, polls)?;
            log(
                "sentiment",
                format_args!("negative/positive {}", s.negative_to_positive.map_or("n/a".into(), |r| format!("{r:.3}"))),
            );
            write_sentiment(&mut w, &s, csv)?;
            Some(s)
        }
        _ => None,
    };
    let geo = match (&model, command) {
        (Some(m), "geo" | "report") => {
            let states = pipeline::load_states(cfg)?;
            let tree = pipeline::build_tree(states)?;
            let options = GeoOptions {
                metric: cfg.geo.metric,
                max_anchor_distance: cfg.geo.max_anchor_distance,
            };
            let g = pipeline::geo_report(&daily.in_window, m, &l.text, &tree, &l.pair, &options, truth.as_ref())?;
            let decided = g.calls.iter().filter(|c| c.winner != trendmine_core::Winner::Undecided).count();
            log("geo", format_args!("{} states, {decided} decided", g.calls.len()));
            if let Some(s) = &g.score {
                log("geo", format_args!("{} of {} correct", s.correct, s.total));
            }
            write_geo(&mut w, &g, csv)?;
            Some(g)
        }
        _ => None,
    };
    let topics = if matches!(command, "topics" | "report") {
        let records: Vec<&TweetRecord> = daily.samples.iter().flat_map(|(_, s)| s.iter().copied()).collect();
        let lda = cfg.lda_config();
        log("topics", format_args!("k={} over {} records, {} sweeps", lda.k, records.len(), lda.iterations));
        let t = pipeline::topics_report(&records, &l.text, &lda)?;
        write_topics(&mut w, &t, csv)?;
        Some(t)
    } else {
        None
    };
    if let (Some(trends), Some(sentiment), Some(geo), Some(topics)) = (trends, sentiment, geo, topics) {
        let report = Report {
            mention_leaders: pipeline::mention_leaders(&trends, &l.pair),
            trends,
            sentiment,
            geo,
            topics,
        };
        w.write_json("report.json", "report", &report)?;
    }
    let dir = w.dir().display().to_string();
    let manifest = w.finish()?;
    log("done", format_args!("{} files in {dir}", manifest.files.len()));
    Ok(())
}

fn write_trends(w: &mut RunWriter, t: &TrendsReport, pair: &CandidatePair, csv: bool) -> Result<()> {
    w.write_json("trends/daily.json", "trends", t)?;
    if !csv {
        return Ok(());
    }
    let peaks: std::collections::BTreeSet<_> = t.peaks.iter().flatten().collect();
    let freq = t.days.iter().map(|d| {
        vec![
            d.day.to_string(),
            d.records.to_string(),
            d.sampled.to_string(),
            u8::from(peaks.contains(&d.day)).to_string(),
        ]
    });
    w.write_csv("trends/frequency.csv", &csv_table(&["day", "records", "sampled", "peak"], freq))?;
    let (a, b) = (&pair.a().name, &pair.b().name);
    let mentions = t
        .days
        .iter()
        .map(|d| vec![d.day.to_string(), format!("{:.4}", d.mentions[a]), format!("{:.4}", d.mentions[b])]);
    w.write_csv("trends/mentions.csv", &csv_table(&["day", a, b], mentions))?;
    let hist_rows = |pick: fn(&pipeline::DayRow) -> &trendmine_core::Histogram| {
        let mut rows = Vec::new();
        for d in &t.days {
            for (rank, bin) in pick(d).bins.iter().enumerate() {
                rows.push(vec![
                    d.day.to_string(),
                    (rank + 1).to_string(),
                    bin.key.clone(),
                    bin.count.to_string(),
                    format!("{:.4}", bin.share),
                ]);
            }
        }
        rows
    };
    w.write_csv(
        "trends/hashtags.csv",
        &csv_table(&["day", "rank", "hashtag", "count", "share"], hist_rows(|d| &d.hashtags)),
    )?;
    w.write_csv(
        "trends/sources.csv",
        &csv_table(&["day", "rank", "source", "count", "share"], hist_rows(|d| &d.sources)),
    )?;
    if let Some(p) = &t.polls {
        let rows = p
            .leaders
            .iter()
            .map(|(day, leader, margin)| vec![day.to_string(), format!("{leader:?}"), format!("{margin:.4}")]);
        w.write_csv("trends/poll_leaders.csv", &csv_table(&["day", "leader", "mean_margin"], rows))?;
    }
    Ok(())
}

fn write_sentiment(w: &mut RunWriter, s: &SentimentReport, csv: bool) -> Result<()> {
    w.write_json("sentiment.json", "sentiment", s)?;
    if csv {
        let rows = s.days.iter().map(|d| {
            vec![
                d.day.to_string(),
                d.pos_a.to_string(),
                d.neg_a.to_string(),
                d.pos_b.to_string(),
                d.neg_b.to_string(),
                format!("{:?}", d.leader),
            ]
        });
        let (a, b) = (&s.candidate_a, &s.candidate_b);
        let header = [
            "day".to_string(),
            format!("positive_{a}"),
            format!("negative_{a}"),
            format!("positive_{b}"),
            format!("negative_{b}"),
            "leader".to_string(),
        ];
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        w.write_csv("sentiment.csv", &csv_table(&header, rows))?;
    }
    Ok(())
}

fn write_geo(w: &mut RunWriter, g: &GeoReport, csv: bool) -> Result<()> {
    w.write_json("geo/calls.json", "calls", &g.calls)?;
    let summary = BTreeMap::from([
        ("offshore", serde_json::json!(g.offshore)),
        ("skipped_no_geo", serde_json::json!(g.skipped_no_geo)),
        ("score", serde_json::to_value(&g.score).map_err(Error::invalid)?),
    ]);
    w.write_json("geo/summary.json", "geo", &summary)?;
    if csv {
        w.write_csv("geo/calls.csv", &io::format_calls(&g.calls, ""))?;
    }
    Ok(())
}

fn write_topics(w: &mut RunWriter, t: &TopicsReport, csv: bool) -> Result<()> {
    w.write_json("topics.json", "topics", t)?;
    if csv {
        let rows = t.topics.iter().enumerate().flat_map(|(k, words)| {
            words
                .iter()
                .enumerate()
                .map(move |(rank, ww)| vec![k.to_string(), (rank + 1).to_string(), ww.word.clone(), format!("{:.6}", ww.weight)])
        });
        w.write_csv("topics.csv", &csv_table(&["topic", "rank", "word", "weight"], rows))?;
    }
    Ok(())
}

fn serve_cmd(a: &ServeArgs) -> Result<()> {
    let store = serve::RunStore::open(&a.runs)?;
    log("serve", format_args!("runs {:?} on 127.0.0.1:{}", store.run_ids().collect::<Vec<_>>(), a.port));
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io(&a.runs, e))?;
    rt.block_on(serve::serve(store, a.port))
}
