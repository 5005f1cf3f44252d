//! Full pipeline: SDP, compact relaxation, spatial branch-and-bound.

use compact_opf::bnb::{solve_global, Config};
use compact_opf::matpower::{read_case, to_per_unit};
use compact_opf::network::assemble_opf;

mod common;

fn main() -> compact_opf::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COPF_LOG", "info")).init();
    let opf = assemble_opf(&to_per_unit(&read_case(common::case_path("caseWB2"))?)?)?;
    let cfg = Config { log_interval: 10, ..Config::default() };
    let res = solve_global(&opf, &cfg)?;
    println!("{}: {}", opf.name, res.termination.as_str());
    println!("  UB {:.6}  LB {:.6}  gap {:.2e}", res.ub, res.lb, res.gap());
    println!("  SDP {:.6}  root {:.6}  nodes {}", res.sdp_value, res.root_value, res.nodes);
    println!("  seconds: sdp {:.3} ub {:.3} total {:.3}", res.timings.sdp_seconds, res.timings.ub_seconds, res.timings.total_seconds);
    if let Some(p) = &res.incumbent {
        let n = opf.n;
        for i in 0..n {
            println!("  bus {i}: V = {:.5} {:+.5}j", p.x[i], p.x[i + n]);
        }
    }
    Ok(())
}
