//! Read a MATPOWER file, convert it to per-unit data and write it back.
//!
//! `cargo run --example parse_case -- case6ww`

use compact_opf::matpower::{emit, parse_case, read_case, to_per_unit};

mod common;

fn main() -> compact_opf::Result<()> {
    let path = common::case_path("case6ww");
    let raw = read_case(&path)?;
    let net = to_per_unit(&raw)?;
    println!("{}: base {} MVA", net.name, net.base_mva);
    println!("  {} buses, {} generator units, {} branches, reference bus {}", net.n_bus(), net.n_units(), net.branches.len(), net.reference);
    for u in &net.units {
        println!("  unit at bus {}: p in [{:.3}, {:.3}] pu, cost {:.2} p² + {:.2} p + {:.2}", u.bus, u.pmin, u.pmax, u.cost.c2, u.cost.c1, u.cost.c0);
    }
    let again = parse_case(&emit(&raw))?;
    println!("round trip identical: {}", again == raw);
    Ok(())
}
