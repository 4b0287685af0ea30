use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dirac_lab::config::{ConfigError, Format, RunConfig};
use dirac_lab::report;
use dirac_lab::run::{run_converge, run_sweep, run_verify};
use dirac_lab::LabError;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_SCHEMA: u8 = 4;
const EXIT_IO: u8 = 5;
const EXIT_INPUT: u8 = 6;

#[derive(Parser)]
#[command(name = "dirac-lab", version, about = "Lattice Dirac-field gauge and energy laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output path prefix; files are PREFIX.<command>.csv and .json.
    #[arg(long, global = true, value_name = "PREFIX")]
    out: Option<String>,

    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run every identity check and probe.
    Verify,
    /// Sweep the amplitude f of chi = f div<J>.
    Sweep,
    /// Refinement studies of the energy shift and the vacuum shift.
    Converge,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Converge => "converge",
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

enum Failure {
    Config(ConfigError),
    Io(PathBuf, std::io::Error),
    Input(LabError),
}

impl Failure {
    fn report(&self) -> u8 {
        match self {
            Failure::Config(e) => {
                eprintln!("error: {e}");
                match e {
                    ConfigError::Io { .. } => EXIT_IO,
                    ConfigError::Parse { .. } => EXIT_PARSE,
                    ConfigError::Schema { .. } => EXIT_SCHEMA,
                }
            }
            Failure::Io(path, e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                EXIT_IO
            }
            Failure::Input(e) => {
                eprintln!("error: {e}");
                if matches!(e, LabError::DegenerateConstruction { .. }) {
                    eprintln!(
                        "hint: chi = f div<J> needs a state that carries current; set [state] kind = \"wavepacket\""
                    );
                }
                EXIT_INPUT
            }
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(prefix) = &cli.out {
        config.output.prefix = prefix.clone();
    }
    if let Some(f) = cli.format {
        config.output.formats = match f {
            FormatArg::Csv => vec![Format::Csv],
            FormatArg::Json => vec![Format::Json],
            FormatArg::Both => vec![Format::Csv, Format::Json],
        };
    }
    config.validate(&cli.config.as_ref().map_or("defaults".into(), |p| p.display().to_string()))?;
    Ok(config)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(dir.to_path_buf(), e))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::Io(path.to_path_buf(), e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn emit(config: &RunConfig, command: &str, csv: impl Fn() -> String, json: impl Fn() -> String) -> Result<(), Failure> {
    for format in &config.output.formats {
        let (ext, body) = match format {
            Format::Csv => ("csv", csv()),
            Format::Json => ("json", json()),
        };
        write(&PathBuf::from(format!("{}.{command}.{ext}", config.output.prefix)), &body)?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    let config = resolve(cli).map_err(Failure::Config)?;
    let command = cli.command.name();
    match cli.command {
        Command::Verify => {
            let run = run_verify(&config).map_err(Failure::Input)?;
            print!("{}", report::checks_table(&run));
            emit(&config, command, || report::checks_csv(&config, &run), || report::checks_json(&config, &run))?;
            Ok(run.passed())
        }
        Command::Sweep => {
            let sweep = run_sweep(&config).map_err(Failure::Input)?;
            print!("{}", report::sweep_table(&sweep));
            emit(&config, command, || report::sweep_csv(&config, &sweep), || report::sweep_json(&config, &sweep))?;
            Ok(true)
        }
        Command::Converge => {
            let run = run_converge(&config).map_err(Failure::Input)?;
            print!("{}", report::converge_table(&run));
            emit(&config, command, || report::converge_csv(&config, &run), || report::converge_json(&config, &run))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(f) => ExitCode::from(f.report()),
    }
}
