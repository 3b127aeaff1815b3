use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};

use domain_recon::describe::{describe, describe_predicates, DescriptionClass, DomainAnnotation};
use domain_recon::eval::{AreMode, Evaluator};
use domain_recon::experiment::{self, BackendConfig, ExperimentConfig, ExperimentError};
use domain_recon::grounding::{parse_plan, plans_to_text, validate_plan};
use domain_recon::pddl::{parse_domain, parse_problem, Domain, Problem};
use domain_recon::planner::{top_k_plans, PlannerConfig};
use domain_recon::report::{aggregate, emit_reports};
use domain_recon::Corpus;

#[derive(Parser)]
#[command(name = "domain-recon", version, about = "Generate and grade PDDL actions from natural language")]
struct Cli {
    /// Log level filter, e.g. `info` or `debug`.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Http,
    Replay,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config and write its reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Use this backend for every model instead of the configured ones.
        #[arg(long, value_enum)]
        backend: Option<BackendKind>,
        #[arg(long)]
        replay_file: Option<PathBuf>,
        /// Replace the configured models with a single one of this tag.
        #[arg(long)]
        model_tag: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_tokens: Option<usize>,
        /// Stop sequence; repeat for several.
        #[arg(long)]
        stop: Vec<String>,
    },
    /// Aggregate a records.jsonl file into the report files.
    Report {
        #[arg(long)]
        records: PathBuf,
        /// Output directory; defaults to the records file's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print descriptions of a domain's actions.
    Describe {
        #[arg(long)]
        domain: PathBuf,
        /// Defaults to `<dir>.ann.json` next to the domain file.
        #[arg(long)]
        annotation: Option<PathBuf>,
        /// Only this action; all actions when omitted.
        #[arg(long)]
        action: Option<String>,
        #[arg(long, default_value = "base")]
        class: DescriptionClass,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also print the allowed-predicates block.
        #[arg(long)]
        predicates: bool,
    },
    /// Classify a model response for one action of a domain.
    Classify {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        action: String,
        #[arg(long)]
        response: PathBuf,
        /// Problem files; defaults to the `p*.pddl` files next to the domain.
        #[arg(long)]
        problem: Vec<PathBuf>,
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value = "literal")]
        are_rename: AreMode,
        /// Print the full classification as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write the k cheapest plans of a problem.
    Plan {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Defaults to the optimal cost plus 4.
        #[arg(long)]
        max_cost: Option<usize>,
        /// Standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a plan against a problem.
    Validate {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Print every prompt of an experiment as JSON lines with its replay key.
    Prompts {
        #[arg(long)]
        config: PathBuf,
    },
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: e.into() }
}

fn io(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: e.into() }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure { code: e.exit_code() as u8, error: e.into() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| io(anyhow!("{}: {e}", path.display())))
}

fn load_domain(path: &Path) -> Result<Domain, Failure> {
    parse_domain(&read(path)?).map_err(|e| config(anyhow!("{}: {e}", path.display())))
}

fn load_problem(path: &Path, domain: &Domain) -> Result<Problem, Failure> {
    let p = parse_problem(&read(path)?).map_err(|e| config(anyhow!("{}: {e}", path.display())))?;
    p.check(domain).map_err(|e| config(anyhow!("{}: {e}", path.display())))?;
    Ok(p)
}

fn sibling_problems(domain: &Path) -> Result<Vec<PathBuf>, Failure> {
    let dir = domain.parent().unwrap_or(Path::new("."));
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io(anyhow!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let n = p.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
            n.starts_with('p') && n.ends_with(".pddl")
        })
        .collect();
    out.sort();
    Ok(out)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io(anyhow!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report(records_path: &Path, out: &Path) -> Result<(), Failure> {
    let records = experiment::read_records(records_path)?;
    let table = aggregate(&records).map_err(config)?;
    let files = emit_reports(&table, &records, out).map_err(io)?;
    for f in files {
        log::info!("wrote {}", f.display());
    }
    print!("{}", domain_recon::report::summary(&table));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config: path, backend, replay_file, model_tag, seed, max_tokens, stop } => {
            let mut cfg = ExperimentConfig::load(&path)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(m) = max_tokens {
                cfg.completion.max_new_tokens = m;
            }
            if !stop.is_empty() {
                cfg.completion.stop = stop;
            }
            let override_backend = match backend {
                Some(BackendKind::Replay) => {
                    let file = replay_file.ok_or_else(|| config(anyhow!("--backend replay needs --replay-file")))?;
                    Some(BackendConfig::Replay { path: file })
                }
                Some(BackendKind::Http) => Some(BackendConfig::Http { url: None, token_env: None }),
                None => None,
            };
            if let Some(tag) = model_tag {
                let backend = override_backend
                    .clone()
                    .or_else(|| cfg.models.first().map(|m| m.backend.clone()))
                    .ok_or_else(|| config(anyhow!("--model-tag needs a backend")))?;
                cfg.models = vec![experiment::ModelConfig { tag, backend }];
            } else if let Some(b) = override_backend {
                for m in &mut cfg.models {
                    m.backend = b.clone();
                }
            }
            let summary = experiment::run_experiment(&cfg)?;
            log::info!("{} records written, {} already present", summary.written, summary.skipped);
            report(&summary.records_path, &cfg.output_dir)
        }
        Command::Report { records, out } => {
            let out = out.unwrap_or_else(|| records.parent().unwrap_or(Path::new(".")).to_path_buf());
            report(&records, &out)
        }
        Command::Describe { domain, annotation, action, class, seed, predicates } => {
            let d = load_domain(&domain)?;
            let ann_path = match annotation {
                Some(p) => p,
                None => {
                    let dir = domain.parent().unwrap_or(Path::new("."));
                    let name = dir.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
                    dir.join(format!("{name}.ann.json"))
                }
            };
            let ann = DomainAnnotation::load(&ann_path).map_err(config)?;
            ann.validate(&d).map_err(config)?;
            if predicates {
                println!("{}", describe_predicates(&d, &ann).map_err(config)?);
            }
            let actions: Vec<_> = match &action {
                Some(name) => vec![d
                    .action(&name.to_lowercase())
                    .ok_or_else(|| config(anyhow!("no action `{name}` in {}", d.name)))?],
                None => d.actions.iter().collect(),
            };
            for a in actions {
                println!("{}", describe(a, &ann, class, seed).map_err(config)?.text);
            }
            Ok(())
        }
        Command::Classify { domain, action, response, problem, k, are_rename, json } => {
            let d = load_domain(&domain)?;
            let paths = if problem.is_empty() { sibling_problems(&domain)? } else { problem };
            let problems = paths.iter().map(|p| load_problem(p, &d)).collect::<Result<Vec<_>, _>>()?;
            let raw = read(&response)?;
            let ev = Evaluator::new(d, problems, PlannerConfig::with_k(k)).map_err(config)?.with_are_mode(are_rename);
            let c = ev.classify(&raw, &action).map_err(config)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&c).map_err(io)?);
            } else {
                let are = c.are.map_or_else(|| "-".to_string(), |a| a.to_string());
                println!("{}\tARE={are}\t{}", c.result, c.diagnostics);
            }
            Ok(())
        }
        Command::Plan { domain, problem, k, max_cost, out } => {
            let d = load_domain(&domain)?;
            let p = load_problem(&problem, &d)?;
            let cfg = PlannerConfig { k, max_cost, ..PlannerConfig::default() };
            let r = top_k_plans(&p, &d, &cfg).map_err(config)?;
            if r.exhausted {
                log::info!("only {} plans within cost {}", r.plans.len(), r.max_cost);
            }
            write_out(out.as_deref(), &plans_to_text(&r.plans))
        }
        Command::Validate { domain, problem, plan } => {
            let d = load_domain(&domain)?;
            let p = load_problem(&problem, &d)?;
            let plan = parse_plan(&read(&plan)?).map_err(config)?;
            println!("{}", validate_plan(&p, &d, &plan));
            Ok(())
        }
        Command::Prompts { config: path } => {
            let cfg = ExperimentConfig::load(&path)?;
            let corpus = Corpus::load(&cfg.corpus_dir, cfg.domains.as_deref()).map_err(config)?;
            for p in experiment::plan_prompts(&cfg, &corpus)? {
                let line = serde_json::json!({ "prompt_id": p.prompt_id, "key": p.key(), "text": p.text });
                println!("{line}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
