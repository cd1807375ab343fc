use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use parcc_cli::api::{self, exit, AppError, TemplateChoice};
use parcc_cli::service;
use parcc_core::formula::Spec;
use parcc_core::geometry::{Demonstration, DEFAULT_TAU};
use parcc_core::inference::{
    candidate_space_size, count_clauses, enumerate_clauses, sample_rand_demos, InferenceParams, SamplingOptions,
    Template,
};
use parcc_core::io;
use parcc_core::synthesizer::DEFAULT_BUDGET;

#[derive(Parser)]
#[command(name = "parcc", version, about = "Check, infer and synthesize PARCC spatial specifications")]
struct Cli {
    /// Print machine-readable errors as JSON on stderr.
    #[arg(long, global = true)]
    json: bool,
    /// Contact tolerance for touching edges.
    #[arg(long, global = true, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a demonstration against a spec.
    Check {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        demo: PathBuf,
    },
    /// Infer a spec from a directory of demonstrations.
    Infer(InferArgs),
    /// Emit random re-placements of the given demonstrations.
    SampleRandom {
        #[arg(long)]
        demos: PathBuf,
        #[arg(short = 'n', long = "count", default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write documents into this directory instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reject layouts with overlapping objects.
        #[arg(long)]
        collision_free: bool,
        /// Also move objects of fixed classes.
        #[arg(long)]
        resample_fixed: bool,
    },
    /// Synthesize layouts of an inventory that satisfy a spec.
    Place {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        inventory: PathBuf,
        #[arg(short = 'n', long = "count", default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Candidate evaluations allowed per layout.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        /// Write documents into this directory instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List or count the candidate clauses of a template.
    Enumerate {
        #[arg(long, default_value = "original")]
        template: String,
        /// TOML file with extra `[[template]]` definitions.
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Comma-separated class names.
        #[arg(long, value_delimiter = ',', required = true)]
        classes: Vec<String>,
        #[arg(long)]
        max_len: Option<usize>,
        /// Print only the number of candidates.
        #[arg(long)]
        count_only: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = service::BIND_ENV, default_value = service::DEFAULT_BIND)]
        bind: String,
    },
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    demos: PathBuf,
    #[arg(long, default_value = "original")]
    template: String,
    /// TOML file with extra `[[template]]` definitions.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Override the template's maximum clause length.
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pc: f64,
    #[arg(long, default_value_t = 100)]
    kr: usize,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reject random layouts with overlapping objects.
    #[arg(long)]
    collision_free: bool,
    /// Also move objects of fixed classes when sampling.
    #[arg(long)]
    resample_fixed: bool,
    /// Spec output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report output file (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
}

fn load_templates(path: Option<&Path>) -> Result<Vec<Template>, AppError> {
    let Some(path) = path else { return Ok(Vec::new()) };
    let text = std::fs::read_to_string(path).map_err(|e| AppError::input(format!("{}: {e}", path.display())))?;
    Template::from_toml(&text).map_err(|e| AppError::input(format!("{}: {e}", path.display())))
}

fn template(name: &str, file: Option<&Path>, max_len: Option<usize>) -> Result<Template, AppError> {
    let t = TemplateChoice::Name(name.into()).resolve(&load_templates(file)?)?;
    let t = match max_len {
        Some(n) => t.with_max_len(n),
        None => t,
    };
    t.validate().map_err(|e| AppError::at("template", e.to_string()))?;
    Ok(t)
}

fn load_demos(dir: &Path) -> Result<Vec<Demonstration>, AppError> {
    Ok(io::load_demo_dir(dir)?.into_iter().map(|(_, d)| d).collect())
}

fn load_spec(path: &Path) -> Result<Spec, AppError> {
    Ok(io::load_spec(path)?)
}

fn emit_demos(demos: &[Demonstration], out: Option<&Path>) -> Result<(), AppError> {
    match out {
        Some(dir) => {
            io::save_demo_dir(demos, dir)?;
        }
        None => {
            let docs: Vec<_> = demos.iter().map(io::demo_to_value).collect();
            println!("{}", serde_json::to_string_pretty(&docs).expect("serializes"));
        }
    }
    Ok(())
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializes"));
}

fn run(cli: Cli) -> Result<i32, AppError> {
    let tau = cli.tau;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(AppError::at("--tau", "must be a finite, non-negative number"));
    }
    match cli.command {
        Command::Check { spec, demo } => {
            let spec = load_spec(&spec)?;
            let demo = io::load_demo(&demo)?;
            let outcome = api::check(&spec, &demo, tau)?;
            if cli.json {
                print_json(&outcome);
            } else if outcome.satisfied {
                println!("satisfied ({} clauses)", spec.len());
            } else {
                for v in &outcome.violations {
                    println!("unsatisfied: {}", v.clause);
                    for o in &v.per_atom_detail {
                        println!("  {} fails {}", o.object_id, o.failed_atoms.join(", "));
                    }
                }
            }
            Ok(if outcome.satisfied { exit::OK } else { exit::UNSATISFIED })
        }
        Command::Infer(args) => {
            let template = template(&args.template, args.templates.as_deref(), args.max_len)?;
            let demos = load_demos(&args.demos)?;
            let params = InferenceParams {
                p_cutoff: args.pc,
                epsilon: args.eps,
                k_r: args.kr,
                seed: args.seed,
                collision_free_sampling: args.collision_free,
                resample_fixed_classes: args.resample_fixed,
            };
            let out = api::run_infer(&demos, &template, &params, tau)?;
            match &args.out {
                Some(path) => std::fs::write(path, &out.spec_text)
                    .map_err(|e| AppError::input(format!("{}: {e}", path.display())))?,
                None => print!("{}", out.spec_text),
            }
            if let Some(path) = &args.report {
                io::save_report(&out.report, path)?;
            }
            let s = &out.report.stats;
            eprintln!("{} candidates, {} accepted ({} enumerated)", s.candidates, s.accepted, s.enumerated);
            Ok(exit::OK)
        }
        Command::SampleRandom { demos, n, seed, out, collision_free, resample_fixed } => {
            let demos = load_demos(&demos)?;
            let options = SamplingOptions { collision_free, resample_fixed_classes: resample_fixed };
            let random = sample_rand_demos(&demos, n, seed, &options).map_err(|e| AppError::Semantic(e.to_string()))?;
            emit_demos(&random, out.as_deref())?;
            Ok(exit::OK)
        }
        Command::Place { spec, inventory, n, seed, budget, out } => {
            if n == 0 {
                return Err(AppError::at("--count", "must be at least 1"));
            }
            let spec = load_spec(&spec)?;
            let inventory = io::load_inventory(&inventory)?;
            let (outcome, demos) = api::run_place(&spec, &inventory, n, seed, budget, tau)?;
            if outcome.is_infeasible() {
                if cli.json {
                    print_json(&outcome);
                } else if let api::PlaceOutcome::Infeasible { index, detail, .. } = &outcome {
                    let kind = if detail.proven { "proven infeasible" } else { "no layout found" };
                    println!("infeasible: layout {index}: {kind}: {}", detail.reason);
                    println!(
                        "best partial layout: {} objects placed, {}/{} clauses satisfied",
                        detail.best_placed, detail.best_satisfied, detail.total_clauses
                    );
                }
                return Ok(exit::INFEASIBLE);
            }
            emit_demos(&demos, out.as_deref())?;
            Ok(exit::OK)
        }
        Command::Enumerate { template: name, templates, classes, max_len, count_only } => {
            let t = template(&name, templates.as_deref(), max_len)?;
            let mut seen = std::collections::BTreeSet::new();
            if let Some(dup) = classes.iter().find(|c| !seen.insert(c.as_str())) {
                return Err(AppError::at("--classes", format!("class `{dup}` listed twice")));
            }
            if count_only {
                if cli.json {
                    let per_len: Vec<u128> = (1..=t.max_len).map(|n| count_clauses(&t, &classes, n)).collect();
                    print_json(&serde_json::json!({
                        "template": t.name,
                        "total": candidate_space_size(&t, &classes).to_string(),
                        "per_length": per_len.iter().map(u128::to_string).collect::<Vec<_>>(),
                    }));
                } else {
                    println!("{}", candidate_space_size(&t, &classes));
                }
            } else {
                for n in 1..=t.max_len {
                    for c in enumerate_clauses(&t, &classes, n) {
                        println!("{c}");
                    }
                }
            }
            Ok(exit::OK)
        }
        Command::Serve { bind } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| AppError::input(e.to_string()))?;
            rt.block_on(service::serve(&bind)).map_err(|e| AppError::input(format!("{bind}: {e}")))?;
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    let json = cli.json;
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if json {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
