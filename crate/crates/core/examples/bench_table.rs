//! Root gaps and a benchmark table over the bundled cases.

use std::path::PathBuf;

use compact_opf::report::{cmd_bench, cmd_gap, make_config};

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("cases");
    for name in ["caseWB2", "pglib_opf_case3_lmbd", "case6ww"] {
        match cmd_gap(&dir.join(format!("{name}.m")), None) {
            Ok(r) => println!("{r}"),
            Err(e) => eprintln!("{name}: {e}"),
        }
    }
    let cfg = make_config(None, Some(2000), Some(60.0), None, None);
    match cmd_bench(&dir, &cfg) {
        Ok(table) => print!("{table}"),
        Err(e) => eprintln!("{e}"),
    }
}
