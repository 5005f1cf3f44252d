//! Smallest-eigenvalue shift of an indefinite balance row.

use compact_opf::linalg::{eigen, is_psd};
use compact_opf::matpower::{read_case, to_per_unit};
use compact_opf::network::assemble_opf;

mod common;

fn main() -> compact_opf::Result<()> {
    let opf = assemble_opf(&to_per_unit(&read_case(common::case_path("caseWB2"))?)?)?;
    for (r, con) in opf.constraints.iter().enumerate() {
        let (vals, _) = eigen(&con.a)?;
        let lmin = vals[0];
        let mut shifted = con.a.clone();
        shifted.add_diag(-lmin.min(0.0));
        println!("row {r}: spectrum {vals:.4?}, shifted PSD: {}", is_psd(&shifted, 1e-12));
    }
    Ok(())
}
