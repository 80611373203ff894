use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use modclass_cli::commands::{self, CommandOutput};
use modclass_cli::env::Env;
use modclass_cli::{parse_scenario, runner, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "modclass", version, about = "Modular classes of Lie algebroids and their morphisms")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every randomized rank or zero test.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Polynomial degree of the ansatz used to look for primitives.
    #[arg(long, global = true, default_value_t = 4)]
    ansatz_degree: u32,
    /// Number of Fourier modes per periodic coordinate in the ansatz.
    #[arg(long, global = true, default_value_t = 4)]
    fourier_modes: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Include wall-clock timings (makes reports nondeterministic).
    #[arg(long, global = true)]
    timings: bool,
    /// Worker threads for `run`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check axioms of every algebroid, morphism and representation in a scenario.
    Validate { file: PathBuf },
    /// Modular cocycle of an algebroid with respect to a choice of sections.
    Modular {
        file: PathBuf,
        algebroid: String,
        #[arg(long)]
        sections: Option<String>,
    },
    /// Relative modular cocycle of a morphism and its class.
    Relmod { file: PathBuf, morphism: String },
    /// Presentation of a pull-back algebroid and its projection.
    Pullback { file: PathBuf, pullback: String },
    /// Characteristic cocycle of a representation on a line bundle.
    Char {
        file: PathBuf,
        rep: String,
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Adjoint, top and induced representations of an extension.
    Extension { file: PathBuf, extension: String },
    /// Modular cochain of a diagram and its coboundary.
    Diagram { file: PathBuf, diagram: String },
    /// Evaluate every assertion in one or more scenarios.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn load(path: &Path) -> Result<(String, Scenario), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let sc = parse_scenario(&text).map_err(|e| format!("{}:{}: {}", path.display(), e.line, e.message))?;
    let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok((name, sc))
}

fn emit(out: &CommandOutput, format: Format) {
    match format {
        Format::Text => write_out(&out.to_text()),
        Format::Json => write_out(&format!("{}\n", out.to_json())),
    }
}

// a closed pipe (e.g. `| head`) is not an error worth a panic
fn write_out(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let opts = RunOptions {
        seed: g.seed,
        ansatz_degree: g.ansatz_degree,
        fourier_modes: g.fourier_modes,
        timings: g.timings,
        threads: g.jobs.max(1),
    };
    match dispatch(&cli.command, &opts, g.format) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: &Command, opts: &RunOptions, format: Format) -> Result<bool, String> {
    if let Command::Run { files } = cmd {
        let mut ok = true;
        let mut json = vec![];
        for f in files {
            let (name, sc) = load(f)?;
            let rep = runner::run(&sc, &name, opts);
            ok &= rep.all_passed();
            match format {
                Format::Text => write_out(&rep.to_text()),
                Format::Json => json.push(rep),
            }
        }
        if let Format::Json = format {
            let s = if json.len() == 1 { json[0].to_json() } else { serde_json::to_string_pretty(&json).expect("reports serialize") };
            write_out(&format!("{s}\n"));
        }
        return Ok(ok);
    }
    let file = match cmd {
        Command::Validate { file }
        | Command::Modular { file, .. }
        | Command::Relmod { file, .. }
        | Command::Pullback { file, .. }
        | Command::Char { file, .. }
        | Command::Extension { file, .. }
        | Command::Diagram { file, .. } => file,
        Command::Run { .. } => unreachable!(),
    };
    let (name, sc) = load(file)?;
    let env = Env::build(&sc, opts.seed);
    let out = match cmd {
        Command::Validate { .. } => commands::validate(&sc, &name, &env),
        Command::Modular { algebroid, sections, .. } => commands::modular(&sc, &name, &env, algebroid, sections.as_deref(), opts),
        Command::Relmod { morphism, .. } => commands::relmod(&sc, &name, &env, morphism, opts),
        Command::Pullback { pullback, .. } => commands::pullback(&name, &env, pullback),
        Command::Char { rep, lambda, .. } => commands::char_cmd(&sc, &name, &env, rep, lambda.as_deref(), opts),
        Command::Extension { extension, .. } => commands::extension(&sc, &name, &env, extension, opts),
        Command::Diagram { diagram, .. } => commands::diagram(&name, &env, diagram, opts),
        Command::Run { .. } => unreachable!(),
    }
    .map_err(|e| e.to_string())?;
    emit(&out, format);
    Ok(out.ok)
}
