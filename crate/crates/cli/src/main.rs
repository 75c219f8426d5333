use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sdpi_est_cli::{parse_config, parse_flag_pairs, parse_output, run, CliError, CliResult, Config, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "sdpi-est", version, about = "Converse bounds and simulations for estimation over noisy channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a named bound over parameter grids.
    Bound {
        /// bayes, mi-single, mi-multi, cor1..cor6, cor8, duchi, error-exponent, case2
        target: String,
        #[command(flatten)]
        common: Common,
    },
    /// Contraction coefficients of a channel.
    Sdpi {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo risk of a scheme, paired with a lower bound.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Tables behind the figures: fig2, example1-table.
    Figure {
        target: String,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run the config embedded in an output CSV.
    Replay {
        file: PathBuf,
        /// Compare the regenerated rows with the file instead of printing them.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; relative paths go under $SDPI_EST_OUT_DIR when set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Exit 0 even when some row has valid=false.
    #[arg(long)]
    allow_invalid: bool,
    /// Parameters as `--key value` pairs, e.g. `--p 0.3 --delta-grid 0.4:1:61`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    params: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Common {
    /// Once the first `--key value` pair starts the trailing list, clap stops
    /// matching its own flags; pull them back out here so order does not matter.
    fn hoist_flags(&mut self) -> CliResult<()> {
        let mut rest = Vec::with_capacity(self.params.len());
        let mut args = std::mem::take(&mut self.params).into_iter();
        while let Some(arg) = args.next() {
            let (name, inline) = match arg.split_once('=') {
                Some((n, v)) => (n.to_string(), Some(v.to_string())),
                None => (arg.clone(), None),
            };
            if name == "--allow-invalid" && inline.is_none() {
                self.allow_invalid = true;
                continue;
            }
            if !matches!(name.as_str(), "--format" | "--out" | "--config") {
                rest.push(arg);
                continue;
            }
            let value = match inline.or_else(|| args.next()) {
                Some(v) => v,
                None => return Err(CliError::Usage(format!("{name} needs a value"))),
            };
            match name.as_str() {
                "--format" => {
                    self.format = Format::from_str(&value, true)
                        .map_err(|_| CliError::Usage(format!("unknown format {value:?}; expected csv or json")))?
                }
                "--out" => self.out = Some(value.into()),
                _ => self.config = Some(value.into()),
            }
        }
        self.params = rest;
        Ok(())
    }
}

fn build_config(command: &str, target: Option<&str>, common: &Common) -> CliResult<Config> {
    let mut config = match &common.config {
        Some(path) => parse_config(&fs::read_to_string(path)?)?,
        None => Config::new(),
    };
    for (key, fixed) in [("command", Some(command)), ("target", target)] {
        match (config.get(key), fixed) {
            (Some(given), Some(fixed)) if given != fixed => {
                return Err(CliError::Usage(format!("config says {key} = {given}, command line says {fixed}")));
            }
            (Some(_), None) => return Err(CliError::Usage(format!("{command} takes no {key}"))),
            _ => {}
        }
        if let Some(fixed) = fixed {
            config.set(key, fixed)?;
        }
    }
    for (key, value) in parse_flag_pairs(&common.params)? {
        if matches!(key.as_str(), "command" | "target") {
            return Err(CliError::Usage(format!("--{key} cannot be overridden")));
        }
        config.set(&key, &value)?;
    }
    Ok(config)
}

fn output_path(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if out.is_relative() => Path::new(&dir).join(out),
        _ => out.to_path_buf(),
    }
}

fn execute(cli: Cli) -> CliResult<u8> {
    let (command, target, mut common) = match cli.command {
        Command::Bound { target, common } => ("bound", Some(target), common),
        Command::Sdpi { common } => ("sdpi", None, common),
        Command::Simulate { common } => ("simulate", None, common),
        Command::Figure { target, common } => ("figure", Some(target), common),
        Command::Replay { file, check } => return replay(&file, check),
    };
    common.hoist_flags()?;
    let config = build_config(command, target.as_deref(), &common)?;
    let report = run(&config)?;
    let text = match common.format {
        Format::Csv => report.table.to_csv(&config),
        Format::Json => report.table.to_json(&config)?,
    };
    match &common.out {
        Some(out) => {
            let path = output_path(out);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, text)?;
            eprintln!("wrote {} rows to {}", report.table.rows.len(), path.display());
        }
        None => print!("{text}"),
    }
    if report.uncertified_rows > 0 {
        eprintln!("{} row(s) not certified: risk + CI below the lower bound", report.uncertified_rows);
        return Ok(1);
    }
    if report.invalid_rows > 0 && !common.allow_invalid {
        eprintln!("{} row(s) with valid=false; pass --allow-invalid to accept", report.invalid_rows);
        return Ok(1);
    }
    Ok(0)
}

fn replay(file: &Path, check: bool) -> CliResult<u8> {
    let original = parse_output(&fs::read_to_string(file)?)?;
    let report = run(&original.config)?;
    if !check {
        print!("{}", report.table.to_csv(&original.config));
        return Ok(0);
    }
    let header = report.table.header_line();
    if header != original.columns.join(",") {
        eprintln!("header differs:\n  file:  {}\n  rerun: {header}", original.columns.join(","));
        return Ok(1);
    }
    let fresh = report.table.data_lines();
    if fresh.len() != original.rows.len() {
        eprintln!("row count differs: file {}, rerun {}", original.rows.len(), fresh.len());
        return Ok(1);
    }
    for (i, (a, b)) in original.rows.iter().zip(&fresh).enumerate() {
        if a != b {
            eprintln!("row {} differs:\n  file:  {a}\n  rerun: {b}", i + 1);
            return Ok(1);
        }
    }
    eprintln!("{} rows reproduced", fresh.len());
    Ok(0)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
