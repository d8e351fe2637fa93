use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mindstate_core::setting::{parse_setting_text, SettingRecord};
use mindstate_core::{parse_setting, Episode, Split, SynthConfig, Verb};
use mindstate_harness::config::ScorerKind;
use mindstate_harness::convert::{convert, ConvertOptions};
use mindstate_harness::evaluate::EvalSettings;
use mindstate_harness::{
    evaluate, generate, ingest, replay, Config, EvalFlags, EvalReport, HarnessError, ReplayMode, Session, UtilityChoice,
};
use mindstate_nn::{train, GraphMode, Model, RunOptions};
use mindstate_utility::{HeuristicScorer, Lexicon, RemoteScorer, UtilityQuery, UtilityScorer};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "mindstate",
    version,
    about = "Mental-state engine for LIGHT-style text adventures"
)]
struct Cli {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a setting (flat text, SettingRecord JSON or Episode JSON) and print G0
    Parse {
        path: PathBuf,
        /// Print the canonical JSON snapshot instead of the edge list
        #[arg(long)]
        snapshot: bool,
    },
    /// Convert a LIGHT JSON export to episode JSONL
    ConvertLight {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 19)]
        distractors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Validate an episode JSONL file and print per-split counts
    Ingest {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Replay episodes through the rule engine
    Replay {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Strict)]
        mode: ModeArg,
        /// Only this episode
        #[arg(long)]
        episode: Option<String>,
        /// Replay only the first N turns
        #[arg(long)]
        turns: Option<usize>,
        /// Print the full trace as JSON
        #[arg(long)]
        trace: bool,
    },
    /// Write synthetic episodes as JSONL
    Generate {
        #[arg(short = 'n', long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        objects: usize,
        #[arg(long, default_value_t = 2)]
        targets: usize,
        #[arg(long, default_value_t = 20)]
        candidates: usize,
        #[arg(long, default_value = "train")]
        split: String,
        /// Comma-separated gold verbs
        #[arg(long)]
        verbs: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train a model and save a checkpoint
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Recall@1 per task for each flag combination
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        data: PathBuf,
        /// Only episodes of this split
        #[arg(long)]
        split: Option<String>,
        #[arg(long, value_enum, default_value_t = Toggle::Both)]
        mask: Toggle,
        #[arg(long, value_enum, default_value_t = Toggle::Off)]
        utility: Toggle,
        /// Comma-separated graph modes
        #[arg(long, default_value = "discrete")]
        graph: String,
        #[arg(long)]
        json: bool,
    },
    /// Play the self agent of a setting interactively
    Play {
        setting: PathBuf,
        /// Write accepted command lines here on exit
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Score three candidates for a context with the configured utility scorer
    ScoreUtility {
        #[arg(long)]
        context: String,
        #[arg(num_args = 3, required = true)]
        candidates: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Strict,
    Lenient,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Toggle {
    On,
    Off,
    Both,
}

impl Toggle {
    fn values(self) -> Vec<bool> {
        match self {
            Toggle::On => vec![true],
            Toggle::Off => vec![false],
            Toggle::Both => vec![false, true],
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<HarnessError>().map_or(2, HarnessError::exit_code);
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Parse { path, snapshot } => cmd_parse(&path, snapshot, &config),
        Command::ConvertLight {
            input,
            output,
            distractors,
            seed,
        } => {
            let raw = read(&input)?;
            let episodes = convert(&raw, ConvertOptions { distractors, seed })?;
            write(&output, &generate::to_jsonl(&episodes))?;
            println!("converted {} conversations to {}", episodes.len(), output.display());
            Ok(())
        }
        Command::Ingest { path, json } => {
            let report = ingest(&path, config.graph)?.report();
            if json {
                println!("{}", serde_json::to_string(&report)?);
            } else {
                print!("{}", report.table());
            }
            Ok(())
        }
        Command::Replay {
            path,
            mode,
            episode,
            turns,
            trace,
        } => cmd_replay(&path, mode, episode, turns, trace, &config),
        Command::Generate {
            episodes,
            seed,
            objects,
            targets,
            candidates,
            split,
            verbs,
            output,
        } => {
            let mut synth = SynthConfig {
                n_episodes: episodes,
                seed,
                n_objects: objects,
                targets,
                candidates,
                split: parse_split(&split)?,
                ..SynthConfig::default()
            };
            if let Some(v) = verbs {
                synth.verbs = v
                    .split(',')
                    .map(|s| Verb::parse(s.trim()).ok_or_else(|| HarnessError::Config(format!("unknown verb {s:?}"))))
                    .collect::<Result<_, _>>()?;
            }
            let out = generate::generate(&synth);
            match output {
                Some(p) => write(&p, &out),
                None => {
                    print!("{out}");
                    Ok(())
                }
            }
        }
        Command::Train {
            train: t,
            valid,
            output,
        } => cmd_train(&t, &valid, &output, &config),
        Command::Eval {
            checkpoint,
            data,
            split,
            mask,
            utility,
            graph,
            json,
        } => cmd_eval(&checkpoint, &data, split, mask, utility, &graph, json, &config),
        Command::Play { setting, transcript } => cmd_play(&setting, transcript, &config),
        Command::ScoreUtility { context, candidates } => {
            let scorer = scorer(&config)?.context("the utility scorer is off in the config")?;
            let cands: [String; 3] = candidates.try_into().expect("clap enforces three candidates");
            let scores = scorer.score(&UtilityQuery::new(context, cands)?)?;
            println!("{}", serde_json::to_string(&serde_json::json!({ "scores": scores }))?);
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?)
}

fn write(path: &Path, content: &str) -> Result<()> {
    Ok(std::fs::write(path, content).map_err(|e| HarnessError::io(path, e))?)
}

fn parse_split(s: &str) -> Result<Split, HarnessError> {
    Split::parse(s).ok_or_else(|| HarnessError::Config(format!("unknown split {s:?}")))
}

/// Flat text, a SettingRecord, or an Episode's embedded setting.
fn load_setting(path: &Path) -> Result<SettingRecord> {
    let raw = read(path)?;
    if raw.trim_start().starts_with('{') {
        if let Ok(ep) = serde_json::from_str::<Episode>(&raw) {
            return Ok(ep.setting);
        }
        let record: SettingRecord = serde_json::from_str(&raw).map_err(|e| {
            HarnessError::Schema(vec![mindstate_harness::RecordProblem {
                line: e.line(),
                episode: None,
                message: format!("setting JSON: {e}"),
            }])
        })?;
        return Ok(record);
    }
    Ok(parse_setting_text(&raw).map_err(HarnessError::from)?)
}

fn cmd_parse(path: &Path, snapshot: bool, config: &Config) -> Result<()> {
    let record = load_setting(path)?;
    let graph = parse_setting(&record, config.graph).map_err(HarnessError::from)?;
    if snapshot {
        println!("{}", String::from_utf8_lossy(&graph.snapshot()));
    } else {
        for line in graph.describe_edges() {
            println!("{line}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ReplaySummary<'a> {
    episode: &'a str,
    turns: usize,
    mask_valid_rate: Option<f64>,
    forced: usize,
}

fn cmd_replay(
    path: &Path,
    mode: ModeArg,
    only: Option<String>,
    turns: Option<usize>,
    full: bool,
    config: &Config,
) -> Result<()> {
    let dataset = ingest(path, config.graph)?;
    let mode = match mode {
        ModeArg::Strict => ReplayMode::Strict,
        ModeArg::Lenient => ReplayMode::Lenient,
    };
    let episodes: Vec<&Episode> = dataset
        .episodes
        .iter()
        .filter(|e| only.as_deref().is_none_or(|id| e.id == id))
        .collect();
    if let Some(id) = &only {
        if episodes.is_empty() {
            return Err(HarnessError::Config(format!("no episode {id:?}")).into());
        }
    }
    for ep in episodes {
        let trace = replay(ep, mode, config.graph, turns)?;
        for line in &trace.log {
            eprintln!("{}: {line}", ep.id);
        }
        if full {
            println!("{}", serde_json::to_string(&trace)?);
        } else {
            let summary = ReplaySummary {
                episode: &ep.id,
                turns: trace.turns.len(),
                mask_valid_rate: trace.mask_valid_rate(),
                forced: trace.log.len(),
            };
            println!("{}", serde_json::to_string(&summary)?);
        }
    }
    Ok(())
}

fn cmd_train(train_path: &Path, valid_path: &Path, output: &Path, config: &Config) -> Result<()> {
    let train_set = ingest(train_path, config.graph)?.episodes;
    let valid_set = ingest(valid_path, config.graph)?.episodes;
    let mut model = Model::new(config.model_config()).map_err(HarnessError::from)?;
    let options = RunOptions {
        mode: config.model.graph_mode,
        ..RunOptions::default()
    };
    let report =
        train(&mut model, &train_set, &valid_set, options, config.train_config()).map_err(HarnessError::from)?;
    for e in &report.epochs {
        let mut line = serde_json::json!({ "epoch": e.epoch, "mean_loss": e.mean_loss });
        for m in e.valid.lines("valid") {
            line[format!("valid_{}", m.task)] = serde_json::json!(m.recall_at_1);
        }
        println!("{line}");
    }
    model.save(output).map_err(HarnessError::from)?;
    println!("saved {}", output.display());
    Ok(())
}

fn scorer(config: &Config) -> Result<Option<Box<dyn UtilityScorer>>> {
    Ok(match config.utility.scorer {
        ScorerKind::Off => None,
        ScorerKind::Heuristic => Some(Box::new(match &config.utility.lexicon {
            Some(p) => HeuristicScorer::new(Lexicon::load(Path::new(p))?),
            None => HeuristicScorer::builtin(),
        })),
        ScorerKind::Remote => Some(Box::new(RemoteScorer::new(config.remote_config()))),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    checkpoint: &Path,
    data: &Path,
    split: Option<String>,
    mask: Toggle,
    utility: Toggle,
    graph: &str,
    json: bool,
    config: &Config,
) -> Result<()> {
    let model = Model::load(checkpoint).map_err(HarnessError::from)?;
    let mut episodes = ingest(data, config.graph)?.episodes;
    if let Some(s) = split {
        let s = parse_split(&s)?;
        episodes.retain(|e| e.split == s);
    }
    let modes: Vec<GraphMode> = graph
        .split(',')
        .map(|m| GraphMode::parse(m.trim()).ok_or_else(|| HarnessError::Config(format!("unknown graph mode {m:?}"))))
        .collect::<Result<_, _>>()?;
    let scorer = scorer(config)?;
    let mut choices = Vec::new();
    for on in utility.values() {
        match (on, &scorer) {
            (false, _) => choices.push(UtilityChoice::Off),
            (true, Some(s)) => choices.push(UtilityChoice::On {
                name: format!("{:?}", config.utility.scorer).to_lowercase(),
                scorer: s.as_ref(),
            }),
            (true, None) => {
                return Err(HarnessError::Config("utility requested but utility.scorer is off".into()).into())
            }
        }
    }
    let rephrase = config.rephrase_config();
    let settings = EvalSettings {
        k: config.ranker.k,
        mask_mode: config.ranker.mask,
        rephrase: &rephrase,
    };
    let mut report = EvalReport::default();
    for &mode in &modes {
        for m in mask.values() {
            for choice in &choices {
                let flags = EvalFlags { mask: m, graph: mode };
                report.merge(evaluate(&model, &episodes, flags, choice, &settings)?);
            }
        }
    }
    if json {
        print!("{}", report.json_lines());
    } else {
        print!("{}", report.table());
        if report.all_masked > 0 {
            println!(
                "{} turn(s) had every candidate masked and were ranked unmasked",
                report.all_masked
            );
        }
        if report.utility_fallbacks > 0 {
            println!(
                "{} utility call(s) fell back to the ranker's choice",
                report.utility_fallbacks
            );
        }
    }
    Ok(())
}

fn cmd_play(path: &Path, transcript: Option<PathBuf>, config: &Config) -> Result<()> {
    let setting = load_setting(path)?;
    let mut session = Session::new(setting, config.graph)?;
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    println!(
        "you are {} in the {}. type help for commands.",
        session.setting.self_name(),
        session.setting.setting_name
    );
    loop {
        print!("> ");
        out.flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            break;
        }
        let reply = session.execute(&line)?;
        if !reply.text.is_empty() {
            println!("{}", reply.text);
        }
        if reply.quit {
            break;
        }
    }
    if let Some(p) = transcript {
        write(&p, &(session.transcript.join("\n") + "\n"))?;
    }
    Ok(())
}
