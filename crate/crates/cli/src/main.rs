use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use magnon_cli::commands::{self, CommandOutput};
use magnon_cli::{Backend, CliResult, Overrides, RunConfig};
use magnon_core::hamiltonian::AChoice;

/// Magnon spectra of honeycomb chromium tri-halides from effective spin rings.
#[derive(Parser)]
#[command(name = "magnon", version)]
struct Cli {
    /// JSON config; missing entries take the defaults printed by `magnon defaults`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config file).
    #[arg(long, global = true, env = "MAGNON_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    material: Option<String>,
    #[arg(long, global = true, value_parser = parse_a_choice)]
    a_choice: Option<AChoice>,
    /// q labels (gamma, k, m), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    q: Option<Vec<String>>,
    /// Unit-cell counts (N = 2 n_cells), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    n_cells: Option<Vec<usize>>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
    /// Noise preset name or alias.
    #[arg(long, global = true)]
    noise: Option<String>,
    #[arg(long, global = true)]
    twirls: Option<usize>,
    /// Shots per circuit execution.
    #[arg(long, global = true)]
    shots: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build effective ring models and write them as JSON.
    Model,
    /// Time evolution with the selected backend; writes C(t) traces.
    Evolve,
    /// Spectra of the traces, with peaks and one-magnon levels.
    Spectrum {
        /// Instead, sweep Γ→K→M→Γ with this many Krylov points per segment.
        #[arg(long)]
        q_path: Option<usize>,
    },
    /// Damping-fit cosine similarity of the backend against the reference.
    Compare,
    /// Wall time per ring size.
    Scaling,
    /// Print the embedded default config.
    Defaults,
}

fn parse_a_choice(s: &str) -> Result<AChoice, String> {
    s.parse().map_err(|e: magnon_core::Error| e.to_string())
}

/// Stdout errors (e.g. a closed pipe) are ignored; the files are already written.
fn report(out: CommandOutput) {
    let mut w = std::io::stdout().lock();
    for l in &out.lines {
        let _ = writeln!(w, "{l}");
    }
    let _ = writeln!(w, "manifest {} ({} files)", out.manifest.hash, out.files.len());
}

fn run(cli: Cli) -> CliResult<()> {
    if let Command::Defaults = cli.command {
        let _ = writeln!(std::io::stdout().lock(), "{}", commands::cmd_defaults()?);
        return Ok(());
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        material: cli.material,
        a_choice: cli.a_choice,
        q_points: cli.q,
        n_cells: cli.n_cells,
        n_steps: cli.steps,
        backend: cli.backend,
        noise: cli.noise,
        twirls: cli.twirls,
        shots: cli.shots,
        seed: cli.seed,
        output_dir: cli.out,
    });
    match cli.command {
        Command::Model => report(commands::cmd_model(&cfg)?),
        Command::Evolve => report(commands::cmd_evolve(&cfg)?),
        Command::Spectrum { q_path: Some(n) } => report(commands::cmd_qpath(&cfg, n)?),
        Command::Spectrum { q_path: None } => report(commands::cmd_spectrum(&cfg)?),
        Command::Compare => report(commands::cmd_compare(&cfg)?),
        Command::Scaling => report(commands::cmd_scaling(&cfg)?.0),
        Command::Defaults => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
