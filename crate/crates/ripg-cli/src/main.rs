use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use ripg_cli::commands::{cmd_boundcheck, cmd_generate, cmd_reference, cmd_replay, cmd_solve};
use ripg_cli::manifest::{BoundcheckParams, GenerateParams, ReferenceParams, SolveParams};

#[derive(Parser)]
#[command(
    name = "ripg",
    version,
    about = "Row-action tomographic reconstruction toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a parallel-beam test problem bundle.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        projections: usize,
        #[arg(long)]
        rays: usize,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a row-action method on a problem bundle.
    Solve {
        /// Problem bundle directory written by `generate`.
        problem: PathBuf,
        /// One of: art, damped-art, block-kaczmarz, damped-block, l1-art,
        /// huber-art, dist-art, dist-sq-art, tv-art, block-tv,
        /// block-tv-prox.
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        #[arg(long, default_value = "constant")]
        schedule: String,
        #[arg(long, default_value = "cyclic")]
        control: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        cycles: usize,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long)]
        tau: Option<f64>,
        /// Row blocks for the block methods; defaults to one block per
        /// projection angle.
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value = "ripg1")]
        variant: String,
        /// none, nonneg or box:lo:hi.
        #[arg(long, default_value = "none")]
        constraint: String,
        /// Record an iterate snapshot every this many cycles.
        #[arg(long)]
        snapshot_stride: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the TV-regularized problem with the primal-dual reference
    /// method for a grid of regularization weights.
    Reference {
        problem: PathBuf,
        /// Comma-separated regularization weights, e.g. 1,3.16,10.
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value = "nonneg")]
        constraint: String,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the randomized descent-bound suite and write a pass/fail table.
    Boundcheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0x0b5e_55ed)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-execute the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            n,
            projections,
            rays,
            eta,
            seed,
            out,
        } => cmd_generate(
            &GenerateParams {
                n,
                projections,
                rays,
                eta,
                seed,
            },
            &out,
        ),
        Command::Solve {
            problem,
            method,
            rho,
            t0,
            schedule,
            control,
            seed,
            cycles,
            lambda,
            tau,
            blocks,
            mu,
            variant,
            constraint,
            snapshot_stride,
            out,
        } => cmd_solve(
            &problem,
            &SolveParams {
                method,
                rho,
                t0,
                schedule,
                control,
                seed,
                cycles,
                lambda,
                tau,
                blocks,
                mu,
                variant,
                constraint,
                snapshot_stride,
            },
            &out,
        ),
        Command::Reference {
            problem,
            lambda,
            constraint,
            max_iters,
            tol,
            out,
        } => {
            let lambdas = lambda
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            cmd_reference(
                &problem,
                &ReferenceParams {
                    lambdas,
                    constraint,
                    max_iters,
                    tol,
                },
                &out,
            )
        }
        Command::Boundcheck { cases, seed, out } => {
            cmd_boundcheck(&BoundcheckParams { cases, seed }, &out)
        }
        Command::Replay { manifest, out } => cmd_replay(&manifest, &out),
    }
}
