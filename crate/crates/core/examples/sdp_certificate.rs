//! Solve the rank relaxation and print its dual certificate.

use compact_opf::matpower::{read_case, to_per_unit};
use compact_opf::network::assemble_opf;
use compact_opf::sdp::{build_rank_relaxation, certify, solve_sdp, SdpSettings};

mod common;

fn main() -> compact_opf::Result<()> {
    let opf = assemble_opf(&to_per_unit(&read_case(common::case_path("pglib_opf_case14_ieee"))?)?)?;
    let t = std::time::Instant::now();
    let sol = solve_sdp(&build_rank_relaxation(&opf), &SdpSettings::default())?;
    println!("{}: primal {:.6}  dual {:.6}  ({} iterations, {:.2?})", opf.name, sol.primal_value, sol.dual_value, sol.iterations, t.elapsed());
    let cert = certify(&opf, &sol, 1e-7)?;
    println!("relative gap      {:.2e}", cert.rel_gap);
    println!("balance residual  {:.2e}", cert.max_residual);
    println!("bound violation   {:.2e}", cert.bound_violation);
    println!("λmin(X)           {:.2e}", cert.min_eig_x);
    println!("λmin(W)           {:.2e}  PSD: {}", cert.min_eig_w, cert.w_psd);
    Ok(())
}
