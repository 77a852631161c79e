//! `gapload`: channel evaluation, gap tables, single scenarios, length
//! sweeps and variant comparisons from the command line.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gapload::channel::write_gain_csv;
use gapload::coding::build_gap_table;
use gapload::config::ScenarioFile;
use gapload::loading::write_allocation_csv;
use gapload::scenario::{
    compare_variants, energy_comparison, length_sweep, run_scenario, write_energy_csv,
    write_summary_csv, write_throughput_csv,
};
use gapload::{to_db, Channel, ScenarioResult};

#[derive(Debug, Parser)]
#[command(
    name = "gapload",
    version,
    about = "Coded bit and energy loading for (LP-)DMT links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file; defaults apply when omitted.
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<PathBuf>,
    /// Override a setting after the file is read, e.g. `--set lc=1`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Directory for CSV output; nothing is written without it.
    #[arg(long, value_name = "DIR", global = true)]
    out: Option<PathBuf>,
    /// Suppress summary lines.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate |H(f)|^2 on the subcarrier grid.
    Channel {
        /// Channel parameter file, instead of the configured channel.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        /// Write the gains here (defaults to channel.csv in --out).
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Print uncoded and coded gaps per constellation order as CSV.
    GapTable,
    /// Run the configured scenario.
    Run,
    /// Throughput against link length for every variant.
    Sweep,
    /// All four variants on the configured channel.
    Compare,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gapload: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    let scenario = match &common.config {
        Some(path) => ScenarioFile::load(path, &common.overrides)
            .with_context(|| format!("loading {}", path.display()))?,
        None => ScenarioFile::from_overrides(&common.overrides)?,
    };
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    match &cli.command {
        Command::Channel { model, csv } => {
            channel(&scenario, common, model.as_deref(), csv.as_deref())
        }
        Command::GapTable => gap_table(&scenario, common),
        Command::Run => run(&scenario, common),
        Command::Sweep => sweep(&scenario, common),
        Command::Compare => compare(&scenario, common),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> gapload::Result<()>,
) -> Result<()> {
    let path = dir.join(name);
    let mut out = create(&path)?;
    body(&mut out).with_context(|| format!("writing {}", path.display()))?;
    out.flush()?;
    Ok(())
}

fn write_echo(dir: &Path, scenario: &ScenarioFile) -> Result<()> {
    fs::write(dir.join("config.cfg"), scenario.to_text()).context("writing config echo")
}

fn channel(
    scenario: &ScenarioFile,
    common: &Common,
    model: Option<&Path>,
    csv: Option<&Path>,
) -> Result<()> {
    let channel = match model {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Channel::from_param_text(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => scenario.channel.build()?,
    };
    let grid = scenario.system.grid()?;
    let gains = channel.subchannel_gains(&grid);
    let target = csv
        .map(Path::to_path_buf)
        .or_else(|| common.out.as_ref().map(|d| d.join("channel.csv")));
    if let Some(path) = target {
        let mut out = create(&path)?;
        write_gain_csv(&mut out, &grid, &gains)
            .with_context(|| format!("writing {}", path.display()))?;
        out.flush()?;
    }
    if !common.quiet {
        let db: Vec<f64> = gains.iter().map(|&g| to_db(g)).collect();
        let max = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = db.iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "channel paths={} carriers={} gain_db max={max:.2} min={min:.2}",
            channel.paths().len(),
            gains.len()
        );
    }
    Ok(())
}

fn gap_table(scenario: &ScenarioFile, common: &Common) -> Result<()> {
    let sys = &scenario.system;
    let uncoded = build_gap_table(&sys.coding, false, sys.b_max)?;
    let coded = build_gap_table(&sys.coding, true, sys.b_max)?;
    let mut text = String::from("order_bits,gap_db_uncoded,gap_db_coded\n");
    for b in 1..=sys.b_max {
        text.push_str(&format!(
            "{b},{:.16e},{:.16e}\n",
            uncoded.gap_db(b)?,
            coded.gap_db(b)?
        ));
    }
    if let Some(dir) = &common.out {
        fs::write(dir.join("gap_table.csv"), &text).context("writing gap_table.csv")?;
    }
    if !common.quiet {
        io::stdout().write_all(text.as_bytes())?;
    }
    Ok(())
}

fn write_allocation(dir: &Path, name: &str, r: &ScenarioResult) -> Result<()> {
    write_file(dir, name, |out| {
        write_allocation_csv(out, &r.allocation, &r.gap_table)
    })
}

fn run(scenario: &ScenarioFile, common: &Common) -> Result<()> {
    let result = run_scenario(&scenario.system, &scenario.channel.build()?)?;
    if let Some(dir) = &common.out {
        write_allocation(dir, "allocation.csv", &result)?;
        write_file(dir, "summary.csv", |out| {
            write_summary_csv(out, std::slice::from_ref(&result))
        })?;
        write_echo(dir, scenario)?;
    }
    if !common.quiet {
        println!("{}", result.summary_line());
    }
    Ok(())
}

fn sweep(scenario: &ScenarioFile, common: &Common) -> Result<()> {
    let rows = length_sweep(
        &scenario.system,
        &scenario.sweep.profiles,
        &scenario.sweep.distances_m,
        scenario.channel.propagation_speed(),
    )?;
    if let Some(dir) = &common.out {
        write_file(dir, "throughput.csv", |out| {
            write_throughput_csv(out, &rows)
        })?;
        write_echo(dir, scenario)?;
    }
    if !common.quiet {
        for r in &rows {
            println!(
                "{} d={} {} raw={} useful={:.1}",
                r.profile, r.distance_m, r.variant, r.raw_bits, r.useful_bits
            );
        }
    }
    Ok(())
}

fn compare(scenario: &ScenarioFile, common: &Common) -> Result<()> {
    let channel = scenario.channel.build()?;
    let results = compare_variants(&scenario.system, &channel)?;
    if let Some(dir) = &common.out {
        for r in &results {
            write_allocation(dir, &format!("allocation_{}.csv", r.variant), r)?;
        }
        write_file(dir, "summary.csv", |out| write_summary_csv(out, &results))?;
        let energy = energy_comparison(&scenario.system, &channel)?;
        write_file(dir, "energy.csv", |out| write_energy_csv(out, &energy))?;
        write_echo(dir, scenario)?;
    }
    if !common.quiet {
        for r in &results {
            println!("{}", r.summary_line());
        }
    }
    Ok(())
}
