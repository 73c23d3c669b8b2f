//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lopcoint::data::PricePanel;
use lopcoint::johansen::RankPolicy;
use lopcoint::simulate::{generate, SimulationSpec};

use crate::config::{Format, PipelineConfig};
use crate::error::{exit, CliError, StageExt};
use crate::pipeline::{self, Context, PipelineOptions};
use crate::report::{emit_table, write_file, Table};

#[derive(Debug, Parser)]
#[command(name = "lopcoint", version, about = "Cointegration and law-of-one-price analysis of regional price panels")]
pub struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; tables go to stdout when absent (except `pipeline`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Random seed for `simulate`.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Significance level overriding every level in the config.
    #[arg(long, global = true)]
    pub level: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum FormatArg {
    Text,
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ADF and PP tests on levels and first differences.
    UnitRoot,
    /// Levels VAR: lag selection, estimation, diagnostics.
    Var {
        #[command(subcommand)]
        command: VarCommand,
    },
    /// Johansen rank tests.
    Coint {
        #[command(subcommand)]
        command: CointCommand,
    },
    /// Error-correction model and tests on it.
    Vecm {
        #[command(subcommand)]
        command: VecmCommand,
    },
    /// Generate a price panel from a data-generating process.
    Simulate(SimulateArgs),
    /// Run every stage and write all tables plus summary.json.
    Pipeline {
        /// Add lags until the LM tests at lags 1-4 pass at 5% and add
        /// impulse dummies at large standardised residuals.
        #[arg(long)]
        auto_respec: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum VarCommand {
    SelectLag,
    Fit(OrderArg),
    Diagnose(OrderArg),
}

#[derive(Debug, Args)]
pub struct OrderArg {
    /// VAR order; defaults to the configured final order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Leave the configured dummies out.
    #[arg(long)]
    pub no_dummies: bool,
}

#[derive(Debug, Subcommand)]
pub enum CointCommand {
    Test(CaseArg),
}

#[derive(Debug, Args)]
pub struct CaseArg {
    /// Deterministic case 1..=5.
    #[arg(long)]
    pub case: Option<u8>,
    /// trace, max-eigen or agree
    #[arg(long, value_parser = parse_policy)]
    pub rank_policy: Option<RankPolicy>,
}

fn parse_policy(s: &str) -> Result<RankPolicy, String> {
    match s {
        "trace" => Ok(RankPolicy::Trace),
        "max-eigen" => Ok(RankPolicy::MaxEigen),
        "agree" => Ok(RankPolicy::Agree),
        _ => Err(format!("`{s}`: expected trace, max-eigen or agree")),
    }
}

#[derive(Debug, Args)]
pub struct RankArg {
    #[command(flatten)]
    pub case: CaseArg,
    /// Cointegration rank; selected by the Johansen tests when absent.
    #[arg(long)]
    pub rank: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum VecmCommand {
    Fit(RankArg),
    Granger(RankArg),
    Lop {
        #[command(flatten)]
        rank: RankArg,
        /// Unit-slope test for every pair of regions (rank 1 only)
        #[arg(long, conflicts_with = "joint", required_unless_present = "joint")]
        pairs: bool,
        /// All regions pairwise integrated at once (rank K-1 only)
        #[arg(long)]
        joint: bool,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation spec (TOML, or JSON by extension).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::OTHER } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("--config is required for this command".into()))?;
    let mut config = PipelineConfig::from_file(path)?;
    if let Some(level) = cli.level {
        config.set_level(level);
        config.validate()?;
    }
    Ok(config)
}

fn apply_case(config: &mut PipelineConfig, arg: &CaseArg) -> Result<(), CliError> {
    if let Some(c) = arg.case {
        config.johansen.case = c;
    }
    if let Some(p) = arg.rank_policy {
        config.johansen.rank_policy = p;
    }
    config.validate()
}

fn emit(cli: &Cli, tables: &[Table]) -> Result<(), CliError> {
    let format = cli.format.map_or(Format::Text, Format::from);
    match &cli.out {
        Some(dir) => {
            for t in tables {
                emit_table(t, dir, format)?;
            }
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for (i, t) in tables.iter().enumerate() {
                if i > 0 && format == Format::Text {
                    let _ = writeln!(stdout);
                }
                let _ = write!(stdout, "{}", t.render(format));
            }
            Ok(())
        }
    }
}

fn rank_for(ctx: &Context, requested: Option<usize>) -> Result<usize, CliError> {
    if let Some(r) = requested {
        return Ok(r);
    }
    let jo = pipeline::johansen(ctx)?;
    let (_, trace, max_eig) = pipeline::rank_tests(ctx, &jo)?;
    let choice = pipeline::choose_rank(ctx, &trace, &max_eig)?;
    if let Some(w) = choice.warning {
        eprintln!("warning: {w}");
    }
    Ok(choice.rank)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(args) => simulate(cli, args),
        Command::Pipeline { auto_respec } => {
            let config = load_config(cli)?;
            let bundle = pipeline::run_pipeline(
                &config,
                PipelineOptions {
                    auto_respec: *auto_respec,
                },
            )?;
            let dir = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());
            let formats = match cli.format {
                Some(f) => vec![f.into()],
                None => config.output.formats.clone(),
            };
            pipeline::write_bundle(&bundle, &dir, &formats)?;
            for line in &bundle.summary.narrative {
                println!("{line}");
            }
            Ok(())
        }
        Command::UnitRoot => {
            let ctx = pipeline::ingest(&load_config(cli)?)?;
            let (t, _) = pipeline::unit_roots(&ctx)?;
            emit(cli, &[t])
        }
        Command::Var { command } => {
            let ctx = pipeline::ingest(&load_config(cli)?)?;
            match command {
                VarCommand::SelectLag => emit(cli, &[pipeline::lag_selection(&ctx)?.0]),
                VarCommand::Fit(a) => {
                    let order = a.order.unwrap_or_else(|| ctx.config.var_order());
                    let model = pipeline::var_model(&ctx, order, !a.no_dummies)?;
                    emit(cli, &[pipeline::var_tables(&model, "")])
                }
                VarCommand::Diagnose(a) => {
                    let order = a.order.unwrap_or_else(|| ctx.config.var_order());
                    let model = pipeline::var_model(&ctx, order, !a.no_dummies)?;
                    let (tables, _) = pipeline::diagnostics(&model, ctx.config.var.lm_lags, "")?;
                    emit(cli, &tables)
                }
            }
        }
        Command::Coint {
            command: CointCommand::Test(arg),
        } => {
            let mut config = load_config(cli)?;
            apply_case(&mut config, arg)?;
            let ctx = pipeline::ingest(&config)?;
            let jo = pipeline::johansen(&ctx)?;
            let (tables, trace, max_eig) = pipeline::rank_tests(&ctx, &jo)?;
            let choice = pipeline::choose_rank(&ctx, &trace, &max_eig)?;
            emit(cli, &tables)?;
            eprintln!("selected rank: {}", choice.rank);
            if let Some(w) = choice.warning {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
        Command::Vecm { command } => {
            let arg = match command {
                VecmCommand::Fit(a) | VecmCommand::Granger(a) => a,
                VecmCommand::Lop { rank, .. } => rank,
            };
            let mut config = load_config(cli)?;
            apply_case(&mut config, &arg.case)?;
            let ctx = pipeline::ingest(&config)?;
            let r = rank_for(&ctx, arg.rank)?;
            match command {
                VecmCommand::Fit(_) => {
                    let model = pipeline::vecm(&ctx, r)?;
                    let mut tables = pipeline::vecm_tables(&model);
                    tables.push(pipeline::ect_table(&model));
                    emit(cli, &tables)
                }
                VecmCommand::Granger(_) => {
                    let model = pipeline::vecm(&ctx, r)?;
                    emit(cli, &[pipeline::granger(&ctx, &model)?.0])
                }
                VecmCommand::Lop { pairs, .. } => {
                    let table = if *pairs {
                        pipeline::lop_pairs(&ctx, r)?.0
                    } else {
                        pipeline::lop_joint(&ctx, r)?.0
                    };
                    emit(cli, &[table])
                }
            }
        }
    }
}

pub fn read_simulation_spec(path: &Path) -> Result<SimulationSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let json = path.extension().is_some_and(|e| e == "json");
    let parsed = if json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// CSV with a `date` column and one column per series.
pub fn panel_csv(panel: &PricePanel) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once("date")
        .chain(panel.names().iter().map(String::as_str))
        .collect();
    w.write_record(&header).expect("in-memory csv");
    let v = panel.values();
    for (i, d) in panel.dates().iter().enumerate() {
        let row: Vec<String> = std::iter::once(d.to_string())
            .chain((0..panel.n_series()).map(|k| v[(i, k)].to_string()))
            .collect();
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<(), CliError> {
    let spec = read_simulation_spec(&args.spec)?;
    let panel = generate(&spec, cli.seed, args.replication).stage("simulate")?;
    let csv = panel_csv(&panel);
    match &args.output {
        Some(path) => write_file(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
