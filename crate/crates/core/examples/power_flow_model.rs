//! Assemble the rectangular quadratic model and evaluate it at a flat start.

use compact_opf::matpower::{read_case, to_per_unit};
use compact_opf::network::{assemble_opf, build_admittance, Point};

mod common;

fn main() -> compact_opf::Result<()> {
    let net = to_per_unit(&read_case(common::case_path("caseWB2"))?)?;
    let y = build_admittance(&net);
    println!("G =\n{}B =\n{}", y.g, y.b);

    let opf = assemble_opf(&net)?;
    println!("{} balance rows over x = (e, f) of length {} and y = (p, q) of length {}", opf.constraints.len(), opf.dim_x(), opf.dim_y());
    let mut x = vec![0.0; opf.dim_x()];
    x[..opf.n].iter_mut().for_each(|e| *e = 1.0);
    let flat = Point { x, y: vec![0.0; opf.dim_y()] };
    for (r, v) in opf.residual(&flat)?.iter().enumerate() {
        println!("  row {r} (bus {}): residual {v:+.4}", opf.balance_bus(r));
    }
    Ok(())
}
