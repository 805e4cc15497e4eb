//! Command-line front end. Every subcommand reads an optional JSON run
//! configuration (`--config`); flags override its values.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::evaluator::ExternalConfig;
use crate::lattice::parse_solution;
use crate::llm::{Backend, JsonlLog};
use crate::objective::EvaluationResult;
use crate::optimize::{random_solution, TrialSeed};
use crate::prompt::{build_meta_prompt, PromptStrategy, SolutionArchive};
use crate::trials::{regenerate_reports, run_single, run_trials, Engine, EvaluatorConfig, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "lattice-opro", version, about = "Prompt-driven optimization of BWR fuel-lattice designs")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one solution and print kinf, ppf and score as JSON.
    Evaluate {
        /// Fifteen comma-separated values.
        #[arg(long)]
        solution: String,
        #[command(flatten)]
        over: Overrides,
    },
    /// Run a single optimization trial.
    Optimize {
        #[command(flatten)]
        over: Overrides,
        /// Write the full trial report (JSON) here.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Append prompts and responses (JSONL) here.
        #[arg(long, value_name = "FILE")]
        runlog: Option<PathBuf>,
    },
    /// Run a multi-trial experiment and write its reports.
    Trials {
        #[command(flatten)]
        over: Overrides,
        #[arg(long)]
        trials: Option<usize>,
        /// Trials run concurrently.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_name = "DIR")]
        output_dir: Option<PathBuf>,
    },
    /// Print the meta-prompt built from a freshly seeded archive.
    Prompt {
        #[command(flatten)]
        over: Overrides,
    },
    /// Regenerate summary and progression files from stored trial JSON.
    Report {
        #[arg(long, value_name = "DIR")]
        run_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Overrides {
    /// opro, ga or random.
    #[arg(long)]
    engine: Option<Engine>,
    /// no_context or detailed_context.
    #[arg(long)]
    strategy: Option<PromptStrategy>,
    /// mock, replay or http.
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    api_key_env: Option<String>,
    /// JSONL transcript for the replay backend.
    #[arg(long, value_name = "FILE")]
    transcript: Option<PathBuf>,
    /// Base seed (trial i uses seed + i).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Half-lattice map file.
    #[arg(long, value_name = "FILE")]
    map: Option<PathBuf>,
    /// External evaluator command line, split on whitespace.
    #[arg(long, value_name = "CMD")]
    external_command: Option<String>,
}

impl Overrides {
    fn apply(self, cfg: &mut RunConfig) {
        if let Some(v) = self.engine {
            cfg.engine = v;
        }
        if let Some(v) = self.strategy {
            cfg.strategy = v;
        }
        if let Some(v) = self.backend {
            cfg.generator.backend = v;
        }
        if let Some(v) = self.endpoint {
            cfg.generator.endpoint = Some(v);
        }
        if let Some(v) = self.model {
            cfg.generator.model = Some(v);
        }
        if let Some(v) = self.api_key_env {
            cfg.generator.api_key_env = Some(v);
        }
        if let Some(v) = self.transcript {
            cfg.generator.transcript = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.base_seed = v;
        }
        if let Some(v) = self.max_steps {
            cfg.loop_cfg.max_steps = v;
        }
        if let Some(v) = self.batch_size {
            cfg.loop_cfg.batch_size = v;
        }
        if let Some(v) = self.generations {
            cfg.ga.generations = v;
        }
        if let Some(v) = self.map {
            cfg.problem.map_path = Some(v);
        }
        if let Some(v) = self.external_command {
            let base = match &cfg.evaluator {
                EvaluatorConfig::External(c) => c.clone(),
                EvaluatorConfig::Surrogate(_) => ExternalConfig::default(),
            };
            cfg.evaluator = EvaluatorConfig::External(ExternalConfig {
                command: v.split_whitespace().map(str::to_string).collect(),
                ..base
            });
        }
    }
}

/// Parses `argv` and runs the command. Returns the process exit code:
/// 0 on success, 1 on usage errors, 2 on runtime errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            let mut help = Cli::command();
            eprintln!("\n{}", help.render_help());
            return 1;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", error_message(&e));
            2
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_file(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

/// Joins the error chain, dropping causes whose text an outer message already embeds.
fn error_message(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
    }
    msg
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_ref())?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Evaluate { solution, over } => {
            over.apply(&mut cfg);
            let problem = cfg.load_problem()?;
            let sol = parse_solution(&solution, &problem.grid)?;
            let evaluator = cfg.build_evaluator(&problem.map)?;
            let resp = evaluator.evaluate(&sol)?;
            let r = EvaluationResult::new(resp.kinf, resp.ppf, &problem.scoring)?;
            let doc = json!({"solution": sol.serialize(), "kinf": r.kinf, "ppf": r.ppf, "score": r.score});
            writeln!(out, "{doc}")?;
        }
        Command::Optimize { over, output, runlog } => {
            over.apply(&mut cfg);
            cfg.trials = 1;
            cfg.validate()?;
            let problem = cfg.load_problem()?;
            let evaluator = cfg.build_evaluator(&problem.map)?;
            let id = TrialSeed {
                trial: 0,
                seed: cfg.base_seed,
            };
            let report = match runlog {
                Some(path) => {
                    let mut log = JsonlLog::append_to(&path)?;
                    run_single(&cfg, &problem, evaluator.as_ref(), id, &mut log)?
                }
                None => run_single(&cfg, &problem, evaluator.as_ref(), id, &mut Vec::new())?,
            };
            if let Some(path) = output {
                fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            let doc = json!({
                "engine": report.engine,
                "seed": report.seed,
                "best_solution": report.best_solution,
                "best_kinf": report.best_kinf,
                "best_ppf": report.best_ppf,
                "best_score": report.best_score,
                "steps_to_best": report.steps_to_best,
                "total_steps": report.total_steps,
                "total_evaluations": report.total_evaluations,
            });
            writeln!(out, "{doc}")?;
        }
        Command::Trials {
            over,
            trials,
            jobs,
            output_dir,
        } => {
            over.apply(&mut cfg);
            if let Some(v) = trials {
                cfg.trials = v;
            }
            if let Some(v) = jobs {
                cfg.jobs = v;
            }
            if let Some(v) = output_dir {
                cfg.output_dir = v;
            }
            let outcome = run_trials(&cfg)?;
            writeln!(out, "run directory: {}\n", outcome.dir.display())?;
            write!(out, "{}", outcome.summary)?;
        }
        Command::Prompt { over } => {
            over.apply(&mut cfg);
            cfg.validate()?;
            let problem = cfg.load_problem()?;
            let evaluator = cfg.build_evaluator(&problem.map)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed);
            let mut archive = SolutionArchive::new(cfg.loop_cfg.archive_capacity);
            for _ in 0..cfg.loop_cfg.initial_solutions {
                let sol = random_solution(&problem.grid, &mut rng);
                let resp = evaluator.evaluate(&sol)?;
                archive.insert(sol, EvaluationResult::new(resp.kinf, resp.ppf, &problem.scoring)?);
            }
            let prompt = build_meta_prompt(cfg.strategy, &archive, cfg.loop_cfg.batch_size, &problem.map)?;
            write!(out, "{}", prompt.text)?;
        }
        Command::Report { run_dir } => {
            if !run_dir.is_dir() {
                bail!("{} is not a directory", run_dir.display());
            }
            let summary = regenerate_reports(&run_dir)?;
            write!(out, "{summary}")?;
        }
    }
    out.flush()?;
    Ok(())
}
