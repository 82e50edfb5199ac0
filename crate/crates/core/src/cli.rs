//! Command-line front end.
//!
//! Every subcommand resolves its parameters from flags, then an optional
//! TOML config file, then built-in defaults, and writes its artifacts plus a
//! `manifest.json` into the output directory. Artifacts are rendered in
//! memory first so a failed run leaves no partial files behind.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{self, Post, StopWords, Timestamp, TokenizedPost};
use crate::detect::{self, AnomalousReport, DetectConfig, RmConfig};
use crate::ett;
use crate::groups::{self, GroupAnalysis};
use crate::narrowness;
use crate::netgraph::{self, Category, MentionGraph, Pattern};
use crate::report::{self, SummaryRow};
use crate::synth::{self, SynthConfig};
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const DEFAULT_MAI: &str = "1d";
pub const DEFAULT_PERIOD: &str = "7d";
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(
    name = "ettscope",
    version,
    about = "Extreme tweeter and anomalous group analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-MAI extreme-tweeter flags with TETTI and LETTI per user.
    Ett {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Anomalous users of the window.
    Detect {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Mention graphs, coreness and coreness CCDFs for Types I, II and III.
    Graph {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Anomalous group coreness, CNR and DR per period.
    Group {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        graph: GraphInputArgs,
        /// Period length for post input [default: 7d]
        #[arg(long)]
        period: Option<String>,
    },
    /// Percentage, null-text and hashtag tables with histograms and CCDFs.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Synthetic corpus with planted anomalous group and ground truth.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        synth: SynthArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Post file(s), one JSON object per line
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML config; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Global seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalysisArgs {
    /// Window start: epoch seconds, RFC 3339 or YYYY-MM-DD [default: first post]
    #[arg(long)]
    pub window_start: Option<String>,
    /// Window end, exclusive [default: one second after the last post]
    #[arg(long)]
    pub window_end: Option<String>,
    /// MAI length: seconds or a number with suffix s, m, h, d or w [default: 1d]
    #[arg(long)]
    pub mai: Option<String>,
    /// ETT selectivity [default: 1.5]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Narrowness selectivity [default: 1]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Energy threshold of the exact method [default: 0.8]
    #[arg(long)]
    pub d: Option<f64>,
    /// Largest N x D scored exactly [default: 10000000]
    #[arg(long)]
    pub matrix_budget: Option<u64>,
    /// Randomized rank [default: max(10, ceil(p/10))]
    #[arg(long)]
    pub rm_k: Option<usize>,
    /// Randomized oversampling [default: 10]
    #[arg(long)]
    pub rm_oversample: Option<usize>,
    /// Randomized power iterations [default: 2]
    #[arg(long)]
    pub rm_power: Option<usize>,
    /// Stop-word list, one word per line [default: built-in English list]
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GraphInputArgs {
    /// Edge list CSV (`u,v`); repeat for several graphs
    #[arg(long)]
    pub edges: Vec<PathBuf>,
    /// Node label CSV (`user_id,category`), one per edge list or one shared
    #[arg(long)]
    pub labels: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReportArgs {
    /// Period length [default: 7d]
    #[arg(long)]
    pub period: Option<String>,
    /// Histogram bin width [default: 0.05]
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Narrowness cut of the null-text cohort [default: 0.8]
    #[arg(long)]
    pub narrowness_cut: Option<f64>,
    /// Null-text share cut of the null-text cohort [default: 0.8]
    #[arg(long)]
    pub null_fraction_cut: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthArgs {
    /// Regular users [default: 1000]
    #[arg(long)]
    pub n_regular: Option<usize>,
    /// High-volume users with spread-out vocabulary [default: 50]
    #[arg(long)]
    pub n_diffuse: Option<usize>,
    /// Members of the planted group, at least 3 [default: 12]
    #[arg(long)]
    pub n_planted: Option<usize>,
}

/// A time or duration value from a config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Text(String),
}

impl Scalar {
    fn text(self) -> String {
        match self {
            Scalar::Int(i) => i.to_string(),
            Scalar::Text(s) => s,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    input: Option<Vec<PathBuf>>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    window_start: Option<Scalar>,
    window_end: Option<Scalar>,
    mai: Option<Scalar>,
    period: Option<Scalar>,
    delta: Option<f64>,
    lambda: Option<f64>,
    d: Option<f64>,
    matrix_budget: Option<u64>,
    rm_k: Option<usize>,
    rm_oversample: Option<usize>,
    rm_power: Option<usize>,
    stopwords: Option<PathBuf>,
    edges: Option<Vec<PathBuf>>,
    labels: Option<Vec<PathBuf>>,
    bin_width: Option<f64>,
    narrowness_cut: Option<f64>,
    null_fraction_cut: Option<f64>,
    synth: Option<SynthConfig>,
}

/// Effective parameters of one run, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub window_start: Option<Timestamp>,
    pub window_end: Option<Timestamp>,
    pub mai: i64,
    pub period: i64,
    pub delta: f64,
    pub lambda: f64,
    pub d: f64,
    pub matrix_budget: u64,
    pub rm_k: Option<usize>,
    pub rm_oversample: usize,
    pub rm_power: usize,
    pub stopwords: Option<PathBuf>,
    pub stopwords_version: String,
    pub edges: Vec<PathBuf>,
    pub labels: Vec<PathBuf>,
    pub bin_width: f64,
    pub narrowness_cut: f64,
    pub null_fraction_cut: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
}

impl RunConfig {
    fn detect_config(&self, start: Timestamp, end: Timestamp) -> DetectConfig {
        DetectConfig {
            period: (start, end),
            delta: self.delta,
            lambda: self.lambda,
            matrix_budget: self.matrix_budget,
            d: self.d,
            rm: RmConfig {
                k: self.rm_k,
                oversample: self.rm_oversample,
                power_iters: self.rm_power,
            },
            seed: self.seed,
        }
    }
}

/// Epoch seconds, RFC 3339, naive `YYYY-MM-DDTHH:MM:SS` (UTC) or `YYYY-MM-DD`.
pub fn parse_time(s: &str) -> Result<Timestamp> {
    let s = s.trim();
    if let Ok(t) = s.parse::<i64>() {
        return Ok(t);
    }
    if let Some(t) = corpus::parse_iso_timestamp(s) {
        return Ok(t);
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
        .ok_or_else(|| Error::Config(format!("cannot parse time {s:?}")))
}

/// Seconds, or a positive number with suffix `s`, `m`, `h`, `d` or `w`.
pub fn parse_duration(s: &str) -> Result<i64> {
    let s = s.trim();
    let (num, unit) = match s.char_indices().last() {
        Some((i, c)) if c.is_ascii_alphabetic() => (&s[..i], c),
        _ => (s, 's'),
    };
    let scale = match unit {
        's' => 1,
        'm' => 60,
        'h' => 3_600,
        'd' => 86_400,
        'w' => 604_800,
        _ => return Err(Error::Config(format!("unknown duration unit in {s:?}"))),
    };
    match num.parse::<i64>() {
        Ok(n) if n > 0 => n
            .checked_mul(scale)
            .ok_or_else(|| Error::Config(format!("duration {s:?} overflows"))),
        _ => Err(Error::Config(format!(
            "duration must be a positive integer, got {s:?}"
        ))),
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Merge flags over the config file over defaults.
pub fn resolve(command: &Command) -> Result<RunConfig> {
    let empty_analysis = AnalysisArgs::default();
    let empty_graph = GraphInputArgs::default();
    let empty_report = ReportArgs::default();
    let (name, common, analysis, graph, report, synth_args, group_period) = match command {
        Command::Ett { common, analysis } => (
            "ett",
            common,
            analysis,
            &empty_graph,
            &empty_report,
            None,
            None,
        ),
        Command::Detect { common, analysis } => (
            "detect",
            common,
            analysis,
            &empty_graph,
            &empty_report,
            None,
            None,
        ),
        Command::Graph { common, analysis } => (
            "graph",
            common,
            analysis,
            &empty_graph,
            &empty_report,
            None,
            None,
        ),
        Command::Group {
            common,
            analysis,
            graph,
            period,
        } => (
            "group",
            common,
            analysis,
            graph,
            &empty_report,
            None,
            period.as_deref(),
        ),
        Command::Report {
            common,
            analysis,
            report,
        } => ("report", common, analysis, &empty_graph, report, None, None),
        Command::Synth { common, synth } => (
            "synth",
            common,
            &empty_analysis,
            &empty_graph,
            &empty_report,
            Some(synth),
            None,
        ),
    };
    let file = load_file_config(common.config.as_deref())?;

    let pick_time = |flag: &Option<String>, cfg: Option<Scalar>| -> Result<Option<Timestamp>> {
        flag.clone()
            .or(cfg.map(Scalar::text))
            .map(|s| parse_time(&s))
            .transpose()
    };
    let pick_duration = |flag: Option<&str>, cfg: Option<Scalar>, default: &str| -> Result<i64> {
        parse_duration(
            &flag
                .map(String::from)
                .or(cfg.map(Scalar::text))
                .unwrap_or_else(|| default.into()),
        )
    };

    let seed = common.seed.or(file.seed).unwrap_or(0);
    let synth = synth_args.map(|a| {
        let base = file.synth.clone().unwrap_or_default();
        SynthConfig {
            seed,
            n_regular: a.n_regular.unwrap_or(base.n_regular),
            n_diffuse: a.n_diffuse.unwrap_or(base.n_diffuse),
            n_planted: a.n_planted.unwrap_or(base.n_planted),
            ..base
        }
    });
    let stopwords = analysis.stopwords.clone().or(file.stopwords);
    let out = common
        .out
        .clone()
        .or(file.out)
        .ok_or_else(|| Error::Config("an output directory is required (--out)".into()))?;

    let config = RunConfig {
        subcommand: name.to_string(),
        inputs: if common.input.is_empty() {
            file.input.unwrap_or_default()
        } else {
            common.input.clone()
        },
        out,
        seed,
        window_start: pick_time(&analysis.window_start, file.window_start)?,
        window_end: pick_time(&analysis.window_end, file.window_end)?,
        mai: pick_duration(analysis.mai.as_deref(), file.mai, DEFAULT_MAI)?,
        period: pick_duration(
            report.period.as_deref().or(group_period),
            file.period,
            DEFAULT_PERIOD,
        )?,
        delta: analysis
            .delta
            .or(file.delta)
            .unwrap_or(detect::DEFAULT_DELTA),
        lambda: analysis
            .lambda
            .or(file.lambda)
            .unwrap_or(detect::DEFAULT_LAMBDA),
        d: analysis
            .d
            .or(file.d)
            .unwrap_or(narrowness::DEFAULT_ENERGY_THRESHOLD),
        matrix_budget: analysis
            .matrix_budget
            .or(file.matrix_budget)
            .unwrap_or(detect::DEFAULT_MATRIX_BUDGET),
        rm_k: analysis.rm_k.or(file.rm_k),
        rm_oversample: analysis
            .rm_oversample
            .or(file.rm_oversample)
            .unwrap_or(narrowness::DEFAULT_OVERSAMPLE),
        rm_power: analysis
            .rm_power
            .or(file.rm_power)
            .unwrap_or(narrowness::DEFAULT_POWER_ITERS),
        stopwords_version: match &stopwords {
            Some(_) => "custom".into(),
            None => corpus::STOPWORDS_VERSION.into(),
        },
        stopwords,
        edges: if graph.edges.is_empty() {
            file.edges.unwrap_or_default()
        } else {
            graph.edges.clone()
        },
        labels: if graph.labels.is_empty() {
            file.labels.unwrap_or_default()
        } else {
            graph.labels.clone()
        },
        bin_width: report
            .bin_width
            .or(file.bin_width)
            .unwrap_or(DEFAULT_BIN_WIDTH),
        narrowness_cut: report
            .narrowness_cut
            .or(file.narrowness_cut)
            .unwrap_or(report::DEFAULT_NARROWNESS_CUT),
        null_fraction_cut: report
            .null_fraction_cut
            .or(file.null_fraction_cut)
            .unwrap_or(report::DEFAULT_NULL_FRACTION_CUT),
        synth,
    };
    config.detect_config(0, 1).validate()?;
    if !(config.bin_width > 0.0 && config.bin_width.is_finite()) {
        return Err(Error::Config(format!(
            "bin width must be > 0, got {}",
            config.bin_width
        )));
    }
    Ok(config)
}

#[derive(Debug, Clone, Serialize)]
struct Digest256 {
    path: String,
    sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    parameters: &'a RunConfig,
    inputs: Vec<Digest256>,
    outputs: Vec<Digest256>,
    notices: &'a [String],
}

/// Inputs read so far, with their digests.
#[derive(Default)]
struct Inputs {
    digests: Vec<Digest256>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        self.digests.push(Digest256 {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }
}

/// Rendered artifacts keyed by file name.
#[derive(Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
    pub notices: Vec<String>,
}

impl Artifacts {
    fn add(
        &mut self,
        name: impl Into<String>,
        f: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.files.insert(name.into(), buf);
        Ok(())
    }

    fn notice(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.notices.push(msg);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }
}

/// Outcome of a successful run.
#[derive(Debug)]
pub struct RunOutcome {
    pub out: PathBuf,
    pub written: Vec<String>,
    pub notices: Vec<String>,
}

/// Execute a parsed command line.
pub fn run(cli: &Cli) -> Result<RunOutcome> {
    let mut config = resolve(&cli.command)?;
    let mut inputs = Inputs::default();
    let artifacts = build_artifacts(&mut config, &mut inputs)?;
    persist(&config, &inputs, artifacts)
}

/// Render every artifact; fills in the window when it came from the data.
fn build_artifacts(config: &mut RunConfig, inputs: &mut Inputs) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    match config.subcommand.clone().as_str() {
        "synth" => run_synth(config, &mut art)?,
        "group" if !config.edges.is_empty() => run_group_from_files(config, inputs, &mut art)?,
        name => {
            let corpus = load_corpus(config, inputs, &mut art)?;
            config.window_start = Some(corpus.window.0);
            config.window_end = Some(corpus.window.1);
            let config = &*config;
            match name {
                "ett" => run_ett(config, &corpus, &mut art)?,
                "detect" => run_detect(config, &corpus, &mut art)?,
                "graph" => run_graph(config, &corpus, &mut art)?,
                "group" => run_group(config, &corpus, &mut art)?,
                "report" => run_report(config, &corpus, &mut art)?,
                other => return Err(Error::Config(format!("unknown subcommand {other}"))),
            }
        }
    }
    Ok(art)
}

fn persist(config: &RunConfig, inputs: &Inputs, art: Artifacts) -> Result<RunOutcome> {
    let outputs: Vec<Digest256> = art
        .files
        .iter()
        .map(|(name, bytes)| Digest256 {
            path: name.clone(),
            sha256: sha256_hex(bytes),
        })
        .collect();
    let manifest = Manifest {
        tool: "ettscope",
        version: env!("CARGO_PKG_VERSION"),
        parameters: config,
        inputs: inputs.digests.clone(),
        outputs,
        notices: &art.notices,
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest)?;
    manifest_bytes.push(b'\n');

    let dir = &config.out;
    let created_dir = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = art
        .files
        .iter()
        .map(|(n, b)| (n.as_str(), b.as_slice()))
        .chain(std::iter::once((MANIFEST_NAME, manifest_bytes.as_slice())))
        .try_for_each(|(name, bytes)| {
            let path = dir.join(name);
            written.push(path.clone());
            fs::write(&path, bytes)
        });
    if let Err(e) = result {
        for p in &written {
            let _ = fs::remove_file(p);
        }
        if created_dir {
            let _ = fs::remove_dir(dir);
        }
        return Err(e.into());
    }
    Ok(RunOutcome {
        out: dir.clone(),
        written: art
            .files
            .keys()
            .cloned()
            .chain([MANIFEST_NAME.to_string()])
            .collect(),
        notices: art.notices,
    })
}

struct Corpus {
    posts: Vec<TokenizedPost>,
    window: (Timestamp, Timestamp),
}

fn load_corpus(config: &RunConfig, inputs: &mut Inputs, art: &mut Artifacts) -> Result<Corpus> {
    if config.inputs.is_empty() {
        return Err(Error::Config("at least one --input is required".into()));
    }
    let stopwords = match &config.stopwords {
        Some(path) => StopWords::parse(&String::from_utf8_lossy(&inputs.read(path)?)),
        None => StopWords::english(),
    };
    let mut posts: Vec<Post> = Vec::new();
    for path in &config.inputs {
        let bytes = inputs.read(path)?;
        let parsed = corpus::parse_posts(BufReader::new(bytes.as_slice()))?;
        if parsed.malformed > 0 {
            art.notice(format!(
                "{}: skipped {} malformed line(s)",
                path.display(),
                parsed.malformed
            ));
        }
        posts.extend(parsed.posts);
    }
    if posts.is_empty() {
        art.notice("input contains no posts");
    }
    let first = posts.iter().map(|p| p.timestamp).min();
    let last = posts.iter().map(|p| p.timestamp).max();
    let start = config.window_start.or(first).unwrap_or(0);
    let end = config
        .window_end
        .or(last.map(|t| t.saturating_add(1)))
        .unwrap_or(start.saturating_add(1));
    if start >= end {
        return Err(Error::Config(format!(
            "window start {start} must precede window end {end}"
        )));
    }
    let posts = corpus::tokenize_all(&posts, &stopwords);
    Ok(Corpus {
        posts,
        window: (start, end),
    })
}

fn period_label(start: Timestamp, end: Timestamp) -> String {
    let day = |t: Timestamp| {
        DateTime::from_timestamp(t, 0)
            .map_or_else(|| t.to_string(), |d| d.format("%Y-%m-%d").to_string())
    };
    format!("{}..{}", day(start), day(end - 1))
}

fn periods(window: (Timestamp, Timestamp), length: i64) -> Vec<(Timestamp, Timestamp)> {
    let mut out = Vec::new();
    let mut s = window.0;
    while s < window.1 {
        let e = s.saturating_add(length).min(window.1);
        out.push((s, e));
        s = e;
    }
    out
}

fn run_ett(config: &RunConfig, corpus: &Corpus, art: &mut Artifacts) -> Result<()> {
    let (start, end) = corpus.window;
    let partition = corpus::TimePartition::new(start, end, config.mai)?;
    let mut buckets = vec![Vec::new(); partition.len()];
    let mut dropped = 0;
    for p in &corpus.posts {
        match partition.mai_index(p.timestamp) {
            Some(i) => buckets[i].push(p.clone()),
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        art.notice(format!("{dropped} post(s) outside the window were ignored"));
    }
    let activity = ett::ActivityMatrix::from_buckets(&buckets);
    let classification = ett::classify_ett(&activity, config.delta)?;
    let summary = ett::summarize(&activity, &classification);
    art.add("ett_intervals.csv", |w| ett::write_ett_csv(w, &summary))?;
    art.add("ett_thresholds.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["mai", "start", "end", "active_users", "threshold"])?;
        for (i, ((s, e), th)) in partition
            .boundaries
            .iter()
            .zip(&classification.thresholds)
            .enumerate()
        {
            out.write_record([
                (i + 1).to_string(),
                s.to_string(),
                e.to_string(),
                activity.population(i).len().to_string(),
                th.map_or_else(|| "n/a".into(), |t| t.to_string()),
            ])?;
        }
        out.flush()?;
        Ok(())
    })
}

fn detect_period(
    config: &RunConfig,
    corpus: &Corpus,
    period: (Timestamp, Timestamp),
) -> Result<AnomalousReport> {
    detect::detect_anomalous(&corpus.posts, &config.detect_config(period.0, period.1))
}

fn run_detect(config: &RunConfig, corpus: &Corpus, art: &mut Artifacts) -> Result<()> {
    let report = detect_period(config, corpus, corpus.window)?;
    for n in &report.notices {
        art.notice(n.clone());
    }
    art.add("anomalous_report.csv", |w| {
        detect::write_report_csv(w, &report)
    })?;
    art.add("detect_summary.json", |w| {
        detect::write_summary_json(w, &report)
    })
}

fn pattern_file(kind: &str, pattern: Pattern) -> String {
    format!("{kind}_type_{pattern}.csv")
}

fn run_graph(config: &RunConfig, corpus: &Corpus, art: &mut Artifacts) -> Result<()> {
    let report = detect_period(config, corpus, corpus.window)?;
    for n in &report.notices {
        art.notice(n.clone());
    }
    let graph = netgraph::build_mention_graph(&corpus.posts, &report.labels(), Some(corpus.window));
    art.add("node_labels.csv", |w| {
        netgraph::write_node_labels(w, &graph)
    })?;
    for pattern in Pattern::ALL {
        let sub = netgraph::extract_pattern(&graph, pattern);
        let coreness = netgraph::core_decomposition(&sub.graph);
        let anomalous = sub.graph.nodes_with_label(Category::Anomalous);
        art.add(pattern_file("edges", pattern), |w| {
            netgraph::write_edge_list(w, &sub.graph)
        })?;
        art.add(pattern_file("coreness", pattern), |w| {
            netgraph::write_coreness_csv(w, &sub.graph, &coreness)
        })?;
        art.add(pattern_file("ccdf", pattern), |w| {
            netgraph::write_ccdf_csv(w, &netgraph::coreness_ccdf(&coreness, &anomalous))
        })?;
    }
    Ok(())
}

fn run_group_from_files(
    config: &RunConfig,
    inputs: &mut Inputs,
    art: &mut Artifacts,
) -> Result<()> {
    if config.labels.len() != 1 && config.labels.len() != config.edges.len() {
        return Err(Error::Config(format!(
            "expected one --labels file or one per --edges file, got {} for {}",
            config.labels.len(),
            config.edges.len()
        )));
    }
    let mut rows = Vec::new();
    for (i, edges_path) in config.edges.iter().enumerate() {
        let labels_path = &config.labels[if config.labels.len() == 1 { 0 } else { i }];
        let edges = netgraph::read_edge_list(BufReader::new(inputs.read(edges_path)?.as_slice()))?;
        let labels =
            netgraph::read_node_labels(BufReader::new(inputs.read(labels_path)?.as_slice()))?;
        let graph = MentionGraph::from_edges(labels, edges);
        let name = edges_path.file_stem().map_or_else(
            || edges_path.display().to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        rows.push((name, groups::analyze(&graph)?));
    }
    write_group_outputs(art, &rows)
}

fn write_group_outputs(
    art: &mut Artifacts,
    rows: &[(String, Option<GroupAnalysis>)],
) -> Result<()> {
    for (period, a) in rows {
        if a.is_none() {
            art.notice(format!("{period}: no anomalous group"));
        }
    }
    art.add("groups.csv", |w| groups::write_group_csv(w, rows))?;
    art.add("group_metrics.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "period",
            "pattern",
            "group_size",
            "k1",
            "k",
            "core_size",
            "cnr",
            "dr",
        ])?;
        for (period, a) in rows {
            let Some(a) = a else { continue };
            for m in [&a.type2, &a.type3] {
                out.write_record([
                    period.clone(),
                    m.pattern.to_string(),
                    a.group.members.len().to_string(),
                    a.group.k1.to_string(),
                    m.k.to_string(),
                    m.core_size.to_string(),
                    m.r.map_or_else(|| "n/a".into(), |x| x.to_string()),
                    m.beta.map_or_else(|| "n/a".into(), |x| x.to_string()),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    })
}

struct PeriodAnalysis {
    label: String,
    range: (Timestamp, Timestamp),
    report: AnomalousReport,
    graph: MentionGraph,
    group: Option<GroupAnalysis>,
}

fn analyze_periods(
    config: &RunConfig,
    corpus: &Corpus,
    art: &mut Artifacts,
) -> Result<Vec<PeriodAnalysis>> {
    let mut out = Vec::new();
    for range in periods(corpus.window, config.period) {
        let label = period_label(range.0, range.1);
        let report = detect_period(config, corpus, range)?;
        for n in &report.notices {
            art.notice(format!("{label}: {n}"));
        }
        let graph = netgraph::build_mention_graph(&corpus.posts, &report.labels(), Some(range));
        let group = groups::analyze(&graph)?;
        out.push(PeriodAnalysis {
            label,
            range,
            report,
            graph,
            group,
        });
    }
    Ok(out)
}

fn run_group(config: &RunConfig, corpus: &Corpus, art: &mut Artifacts) -> Result<()> {
    let rows: Vec<(String, Option<GroupAnalysis>)> = analyze_periods(config, corpus, art)?
        .into_iter()
        .map(|p| (p.label, p.group))
        .collect();
    write_group_outputs(art, &rows)
}

type PeriodSeries = (String, Vec<(u32, f64)>);

fn run_report(config: &RunConfig, corpus: &Corpus, art: &mut Artifacts) -> Result<()> {
    let analyses = analyze_periods(config, corpus, art)?;
    let summary: Vec<SummaryRow> =
        report::summary_table(analyses.iter().map(|a| (a.label.as_str(), &a.report)));
    art.add("summary.csv", |w| report::write_summary_csv(w, &summary))?;

    let mut null_rows = Vec::new();
    let mut narrowness_hist = Vec::new();
    let mut count_hist = Vec::new();
    let mut hashtag_rows = Vec::new();
    let mut hashtag_stats = Vec::new();
    let mut ccdf: BTreeMap<Pattern, Vec<PeriodSeries>> = BTreeMap::new();
    for a in &analyses {
        let posts: Vec<TokenizedPost> = corpus
            .posts
            .iter()
            .filter(|p| p.timestamp >= a.range.0 && p.timestamp < a.range.1)
            .cloned()
            .collect();
        null_rows.push(report::null_text_row(
            a.label.clone(),
            &a.report,
            &posts,
            config.narrowness_cut,
            config.null_fraction_cut,
        ));
        let values: Vec<f64> = a.report.rows.iter().filter_map(|r| r.narrowness).collect();
        narrowness_hist.push((
            a.label.clone(),
            report::histogram(&values, config.bin_width)?,
        ));
        let counts: Vec<f64> = a.report.rows.iter().map(|r| r.tweet_count as f64).collect();
        count_hist.push((a.label.clone(), report::histogram(&counts, 1.0)?));
        if let Some(g) = &a.group {
            let dists = report::hashtag_distributions(&g.group.members, &posts, &a.report.labels());
            hashtag_stats.push((a.label.clone(), report::hashtag_stats(&dists)));
            hashtag_rows.push((a.label.clone(), dists));
        }
        for pattern in Pattern::ALL {
            let sub = netgraph::extract_pattern(&a.graph, pattern);
            let coreness = netgraph::core_decomposition(&sub.graph);
            let anomalous = sub.graph.nodes_with_label(Category::Anomalous);
            ccdf.entry(pattern).or_default().push((
                a.label.clone(),
                netgraph::coreness_ccdf(&coreness, &anomalous),
            ));
        }
    }
    art.add("null_text.csv", |w| {
        report::write_null_text_csv(w, &null_rows)
    })?;
    art.add("narrowness_histogram.csv", |w| {
        report::write_series_csv(w, "bin_start", "count", &narrowness_hist)
    })?;
    art.add("tweet_count_histogram.csv", |w| {
        report::write_series_csv(w, "bin_start", "count", &count_hist)
    })?;
    art.add("hashtag_stats.csv", |w| {
        report::write_hashtag_stats_csv(w, &hashtag_stats)
    })?;
    art.add("hashtag_distributions.csv", |w| {
        report::write_hashtag_distributions_csv(w, &hashtag_rows)
    })?;
    for (pattern, series) in &ccdf {
        art.add(pattern_file("coreness_ccdf", *pattern), |w| {
            report::write_series_csv(w, "k", "fraction", series)
        })?;
    }
    let rows: Vec<(String, Option<GroupAnalysis>)> =
        analyses.into_iter().map(|a| (a.label, a.group)).collect();
    write_group_outputs(art, &rows)
}

fn run_synth(config: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let synth_config = config.synth.clone().unwrap_or_default();
    let corpus = synth::generate(&synth_config)?;
    art.add("posts.jsonl", |w| corpus::write_posts(w, &corpus.posts))?;
    art.add("ground_truth.csv", |w| {
        synth::write_ground_truth_csv(w, &corpus.truth)
    })
}
