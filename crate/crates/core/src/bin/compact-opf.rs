use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use compact_opf::report;

/// Global optimal power flow by compact convex reformulation and spatial branch-and-bound.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one case to global optimality.
    Solve {
        case: PathBuf,
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long)]
        node_limit: Option<usize>,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, value_enum)]
        fix_reference: Option<OnOff>,
        #[arg(long)]
        workers: Option<usize>,
        /// Result document path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the root gap and check the compact relaxation against the SDP bound.
    Gap {
        case: PathBuf,
        #[arg(long)]
        reference: Option<f64>,
    },
    /// Solve every case file of a directory and print the summary table.
    Bench {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        node_limit: Option<usize>,
        #[arg(long)]
        time_limit: Option<f64>,
    },
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("[cli-report] cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COPF_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Solve { case, gap, node_limit, time_limit, fix_reference, workers, out } => {
            let cfg = report::make_config(gap, node_limit, time_limit, fix_reference.map(|v| matches!(v, OnOff::On)), workers);
            report::cmd_solve(&case, &cfg).map_err(|e| e.to_string()).and_then(|rec| {
                eprintln!("{}: {} objective {} lower bound {:.6} nodes {}", rec.instance, rec.status.as_str(), rec.objective.map_or("-".into(), |v| format!("{v:.6}")), rec.lower_bound, rec.nodes);
                write_out(&out, &rec.to_document()).map(|_| rec.exit_code())
            })
        }
        Cmd::Gap { case, reference } => report::cmd_gap(&case, reference).map_err(|e| e.to_string()).map(|r| {
            print!("{r}");
            if r.passes() { 0 } else { 1 }
        }),
        Cmd::Bench { dir, out, node_limit, time_limit } => {
            let cfg = report::make_config(None, node_limit, time_limit, None, None);
            report::cmd_bench(&dir, &cfg).map_err(|e| e.to_string()).and_then(|t| write_out(&out, &t).map(|_| 0))
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
