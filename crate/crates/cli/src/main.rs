//! `rpam`: seeded experiments for the rough parabolic Anderson model.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 contract violation. Wall time goes to stderr so result files stay
//! byte-identical across reruns.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::Ctx;
use config::*;
use error::CliError;
use output::Sink;

#[derive(Parser)]
#[command(name = "rpam", version, about = "Parabolic Anderson model with rough fractional noise")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    /// TOML file with a [global] table and one table per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one noise realization.
    Noise(NoiseArgs),
    /// Besov regularity scan of the noise.
    BesovScan(BesovArgs),
    /// Solve the mollified equation from u0 = 1.
    Pde(PdeArgs),
    /// Principal eigenvalue of 1/2 d^2/dx^2 + V on (-t, t).
    Eigen(EigenArgs),
    /// Feynman-Kac estimate of u_t(x).
    Fk(FkArgs),
    /// Maximize the variational energy.
    Variational(VariationalArgs),
    /// Sweep lambda(Q_t) over box sizes and replicas.
    Sweep(SweepArgs),
    /// Lyapunov exponent over eigenvalue, along a t-ladder.
    Ratio(RatioArgs),
    /// Fit the growth law to a sweep record.
    Fit(FitArgs),
}

#[derive(Serialize)]
struct Echo<'a, P: Serialize> {
    global: &'a Global,
    params: P,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let global = cli.global.resolve(file.global.as_ref())?;
    if global.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(global.threads)
            .build_global()
            .map_err(|e| CliError::field("global.threads", e))?;
    }

    macro_rules! dispatch {
        ($name:literal, $args:expr, $section:expr, |$ctx:ident, $cfg:ident| $body:expr) => {{
            let $cfg = $args.resolve($section.as_ref());
            let echo = serde_json::to_value(Echo { global: &global, params: &$cfg })?;
            let mut $ctx = Ctx {
                command: $name,
                global: global.clone(),
                echo,
                sink: Sink::new(global.out.clone(), $name)?,
            };
            let res = $body;
            $ctx.sink.finish(res.is_ok())?;
            res
        }};
    }

    match &cli.command {
        Command::Noise(a) => dispatch!("noise", a, file.noise, |ctx, c| commands::noise(&mut ctx, &c)),
        Command::BesovScan(a) => dispatch!("besov-scan", a, file.besov_scan, |ctx, c| commands::besov_scan(&mut ctx, &c)),
        Command::Pde(a) => dispatch!("pde", a, file.pde, |ctx, c| commands::pde(&mut ctx, &c)),
        Command::Eigen(a) => dispatch!("eigen", a, file.eigen, |ctx, c| commands::eigen(&mut ctx, &c)),
        Command::Fk(a) => dispatch!("fk", a, file.fk, |ctx, c| commands::fk(&mut ctx, &c)),
        Command::Variational(a) => {
            dispatch!("variational", a, file.variational, |ctx, c| commands::variational(&mut ctx, &c))
        }
        Command::Sweep(a) => dispatch!("sweep", a, file.sweep, |ctx, c| commands::sweep(&mut ctx, &c)),
        Command::Ratio(a) => dispatch!("ratio", a, file.ratio, |ctx, c| commands::ratio(&mut ctx, &c)),
        Command::Fit(a) => {
            let given = cli.global.hurst_given(file.global.as_ref());
            dispatch!("fit", a, file.fit, |ctx, c| commands::fit(&mut ctx, &c, given))
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let start = Instant::now();
    let res = run(cli);
    eprintln!("runtime: {:.3} s", start.elapsed().as_secs_f64());
    if let Err(e) = res {
        eprintln!("rpam: {e}");
        std::process::exit(e.exit_code());
    }
}
