//! Build the compact relaxation from the SDP multipliers and compare its root
//! value with the SDP bound.

use compact_opf::matpower::{read_case, to_per_unit};
use compact_opf::network::assemble_opf;
use compact_opf::qcqp::{solve_convex, NodeTols};
use compact_opf::reform::{build_relaxation, root_bounds, ReformParams};
use compact_opf::sdp::{build_rank_relaxation, solve_sdp, SdpSettings};

mod common;

fn main() -> compact_opf::Result<()> {
    let opf = assemble_opf(&to_per_unit(&read_case(common::case_path("caseWB2"))?)?)?;
    let sdp = solve_sdp(&build_rank_relaxation(&opf), &SdpSettings::default())?;
    let params = ReformParams::from_sdp(&opf, &sdp)?;
    for r in 0..opf.constraints.len() {
        println!("row {r}: φ = {:+.4}, shifts {:.4} / {:.4}", params.phi[r], params.shift_pos[r], params.shift_neg[r]);
    }
    let (lo, hi) = root_bounds(&opf);
    let rel = build_relaxation(&opf, &params, &lo, &hi, 1e-7)?;
    println!("{} shifted rows, {} McCormick pairs, |z| = {}", rel.shifted.len(), rel.mccormick.len(), 2 * opf.n);
    let node = solve_convex(&rel, &NodeTols::default())?;
    println!("SDP {:.6}  compact root {:.6}  difference {:.2e}", sdp.dual_value, node.value, (node.value - sdp.dual_value).abs());
    let worst = node.square_violation().into_iter().fold(0.0f64, f64::max);
    println!("largest z_i - x_i² at the root: {worst:.4}");
    Ok(())
}
