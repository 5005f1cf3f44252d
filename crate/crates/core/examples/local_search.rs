//! Round the SDP solution to a rank-one point and repair it with the local solver.

use compact_opf::local::{local_feasible, LocalSettings};
use compact_opf::matpower::{read_case, to_per_unit};
use compact_opf::network::assemble_opf;
use compact_opf::sdp::{build_rank_relaxation, solve_sdp, SdpSettings};

mod common;

fn main() -> compact_opf::Result<()> {
    let opf = assemble_opf(&to_per_unit(&read_case(common::case_path("pglib_opf_case5_pjm"))?)?)?;
    let sdp = solve_sdp(&build_rank_relaxation(&opf), &SdpSettings::default())?;
    let start = sdp.rounded()?;
    println!("rounded point: violation {:.3e}", opf.max_violation(&start)?);
    let pt = local_feasible(&opf, &start, &LocalSettings::default())?;
    println!("local point:   violation {:.3e}, cost {:.4} (SDP bound {:.4})", opf.max_violation(&pt)?, opf.objective(&pt.y), sdp.dual_value);
    Ok(())
}
