// Shared by the examples: resolve a case name or path.
use std::path::PathBuf;

#[allow(dead_code)]
pub fn case_path(default: &str) -> PathBuf {
    let arg = std::env::args().nth(1).unwrap_or_else(|| default.to_string());
    let p = PathBuf::from(&arg);
    if p.exists() {
        return p;
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("cases").join(format!("{arg}.m"))
}
