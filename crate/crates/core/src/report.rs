//! Run records, result documents and the command implementations behind the
//! `compact-opf` binary.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::bnb::{solve_global, Config, GlobalResult, Termination};
use crate::error::{Error, Result};
use crate::matpower::{read_case, to_per_unit, Network};
use crate::network::{assemble_opf, OpfQcqp};
use crate::qcqp::{solve_convex, NodeStatus};
use crate::reform::{build_relaxation, root_bounds, ReformParams};
use crate::sdp::{build_rank_relaxation, root_gap, solve_sdp, SdpSettings};

pub const SCHEMA_VERSION: u32 = 1;
const HEADER: &str = "compact-opf result";

/// Published global optima in $/h. The two `caseWB` entries that were
/// published divided by 100 are stored rescaled.
pub const REFERENCE_OPTIMA: &[(&str, f64)] = &[
    ("caseWB2", 905.67),
    ("caseWB3", 417.2453),
    ("pglib_opf_case3_lmbd", 5694.5249),
    ("caseWB5", 1377.97),
    ("pglib_opf_case5_pjm", 14997.0431),
    ("case6ww", 3126.3145),
    ("pglib_opf_case14_ieee", 2178.0893),
    ("pglib_opf_case24_ieee_rts", 63344.6382),
    ("pglib_opf_case30_as", 801.5451),
    ("pglib_opf_case30_ieee", 6592.9534),
    ("pglib_opf_case39_epri", 133801.7063),
    ("pglib_opf_case57_ieee", 37589.3248),
    ("pglib_opf_case73_ieee_rts", 189741.3755),
    ("pglib_opf_case89_pegase", 106696.9325),
    ("pglib_opf_case118_ieee", 96881.5257),
    ("pglib_opf_case162_ieee_dtc", 84785.2377),
    ("pglib_opf_case179_goc", 750158.5809),
    ("pglib_opf_case200_activ", 27557.5673),
];

pub const REFERENCE_NOTE: &str = "reference optimum transcribed from the published benchmark table";

pub fn reference_optimum(name: &str) -> Option<f64> {
    REFERENCE_OPTIMA.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
}

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|error| StageError { stage: name, error })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigEcho {
    pub rel_gap: f64,
    pub node_limit: usize,
    pub time_limit_seconds: f64,
    pub fix_reference: bool,
    pub workers: usize,
}

impl From<&Config> for ConfigEcho {
    fn from(c: &Config) -> Self {
        Self { rel_gap: c.rel_gap, node_limit: c.node_limit, time_limit_seconds: c.time_limit.as_secs_f64(), fix_reference: c.fix_reference, workers: c.workers }
    }
}

/// One solved instance.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub buses: usize,
    pub generators: usize,
    pub lines: usize,
    pub z_count: usize,
    /// Root gap in percent against the reference optimum, when one is known.
    pub gap_root: Option<f64>,
    pub reference: Option<f64>,
    pub ub_seconds: f64,
    pub sdp_seconds: f64,
    pub total_seconds: f64,
    pub nodes: usize,
    pub status: Termination,
    pub objective: Option<f64>,
    pub lower_bound: f64,
    pub sdp_value: f64,
    pub root_value: f64,
    pub config: ConfigEcho,
    pub lb_history: Vec<f64>,
    pub ub_history: Vec<f64>,
    /// Incumbent voltages `(e, f)`, empty when none was found.
    pub voltages: Vec<f64>,
}

impl RunRecord {
    pub fn from_result(net: &Network, res: &GlobalResult, cfg: &Config, reference: Option<f64>) -> Self {
        let gap_root = reference.and_then(|r| root_gap(r, res.sdp_value).ok());
        Self {
            instance: net.name.clone(),
            buses: net.n_bus(),
            generators: net.n_units(),
            lines: net.branches.len(),
            z_count: 2 * net.n_bus(),
            gap_root,
            reference,
            ub_seconds: res.timings.ub_seconds,
            sdp_seconds: res.timings.sdp_seconds,
            total_seconds: res.timings.total_seconds,
            nodes: res.nodes,
            status: res.termination,
            objective: res.ub.is_finite().then_some(res.ub),
            lower_bound: res.lb,
            sdp_value: res.sdp_value,
            root_value: res.root_value,
            config: cfg.into(),
            lb_history: res.lb_history.clone(),
            ub_history: res.ub_history.clone(),
            voltages: res.incumbent.as_ref().map(|p| p.x.clone()).unwrap_or_default(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Termination::GapClosed => 0,
            Termination::NodeLimit | Termination::TimeLimit | Termination::Exhausted => 2,
            Termination::Infeasible => 1,
        }
    }

    /// Serializes to the versioned text document.
    pub fn to_document(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{HEADER}");
        let _ = writeln!(s, "schema = {SCHEMA_VERSION}");
        let _ = writeln!(s, "[run]");
        let kv = |s: &mut String, k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv(&mut s, "instance", self.instance.clone());
        kv(&mut s, "buses", self.buses.to_string());
        kv(&mut s, "generators", self.generators.to_string());
        kv(&mut s, "lines", self.lines.to_string());
        kv(&mut s, "z_count", self.z_count.to_string());
        kv(&mut s, "gap_root", opt(self.gap_root));
        kv(&mut s, "reference", opt(self.reference));
        kv(&mut s, "ub_seconds", num(self.ub_seconds));
        kv(&mut s, "sdp_seconds", num(self.sdp_seconds));
        kv(&mut s, "total_seconds", num(self.total_seconds));
        kv(&mut s, "nodes", self.nodes.to_string());
        kv(&mut s, "status", self.status.as_str().to_string());
        kv(&mut s, "objective", opt(self.objective));
        kv(&mut s, "lower_bound", num(self.lower_bound));
        kv(&mut s, "sdp_value", num(self.sdp_value));
        kv(&mut s, "root_value", num(self.root_value));
        let _ = writeln!(s, "[config]");
        kv(&mut s, "rel_gap", num(self.config.rel_gap));
        kv(&mut s, "node_limit", self.config.node_limit.to_string());
        kv(&mut s, "time_limit_seconds", num(self.config.time_limit_seconds));
        kv(&mut s, "fix_reference", self.config.fix_reference.to_string());
        kv(&mut s, "workers", self.config.workers.to_string());
        let _ = writeln!(s, "[table history]");
        let _ = writeln!(s, "series\tindex\tvalue");
        for (name, series) in [("lb", &self.lb_history), ("ub", &self.ub_history), ("voltage", &self.voltages)] {
            for (i, v) in series.iter().enumerate() {
                let _ = writeln!(s, "{name}\t{i}\t{}", num(*v));
            }
        }
        s
    }

    /// Parses a document written by [`RunRecord::to_document`].
    pub fn from_document(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Document(m);
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(bad("missing header".into()));
        }
        let mut section = String::new();
        let mut kv = std::collections::HashMap::new();
        let mut hist: [Vec<f64>; 3] = Default::default();
        let mut seen_table_header = false;
        for (k, line) in lines.enumerate() {
            if line.starts_with('[') {
                section = line.trim_matches(|c| c == '[' || c == ']').to_string();
                continue;
            }
            if section == "table history" {
                if !seen_table_header {
                    seen_table_header = true;
                    continue;
                }
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() != 3 {
                    return Err(bad(format!("line {}: expected 3 columns", k + 2)));
                }
                let slot = match cols[0] {
                    "lb" => 0,
                    "ub" => 1,
                    "voltage" => 2,
                    other => return Err(bad(format!("unknown series `{other}`"))),
                };
                let idx: usize = cols[1].parse().map_err(|_| bad(format!("line {}: bad index", k + 2)))?;
                if idx != hist[slot].len() {
                    return Err(bad(format!("line {}: series `{}` out of order", k + 2, cols[0])));
                }
                hist[slot].push(parse_num(cols[2])?);
                continue;
            }
            let (key, value) = line.split_once(" = ").ok_or_else(|| bad(format!("line {}: expected `key = value`", k + 2)))?;
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            kv.insert(full, value.to_string());
        }
        let get = |k: &str| kv.get(k).cloned().ok_or_else(|| bad(format!("missing key `{k}`")));
        let int = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| bad(format!("bad integer for `{k}`"))) };
        let float = |k: &str| -> Result<f64> { parse_num(&get(k)?) };
        let opt_float = |k: &str| -> Result<Option<f64>> {
            let v = get(k)?;
            if v == "-" {
                Ok(None)
            } else {
                parse_num(&v).map(Some)
            }
        };
        let schema: u32 = get("schema")?.parse().map_err(|_| bad("bad schema".into()))?;
        if schema != SCHEMA_VERSION {
            return Err(bad(format!("unsupported schema {schema}")));
        }
        let status = get("run.status")?;
        let [lb_history, ub_history, voltages] = hist;
        Ok(Self {
            instance: get("run.instance")?,
            buses: int("run.buses")?,
            generators: int("run.generators")?,
            lines: int("run.lines")?,
            z_count: int("run.z_count")?,
            gap_root: opt_float("run.gap_root")?,
            reference: opt_float("run.reference")?,
            ub_seconds: float("run.ub_seconds")?,
            sdp_seconds: float("run.sdp_seconds")?,
            total_seconds: float("run.total_seconds")?,
            nodes: int("run.nodes")?,
            status: Termination::parse(&status).ok_or_else(|| bad(format!("unknown status `{status}`")))?,
            objective: opt_float("run.objective")?,
            lower_bound: float("run.lower_bound")?,
            sdp_value: float("run.sdp_value")?,
            root_value: float("run.root_value")?,
            config: ConfigEcho {
                rel_gap: float("config.rel_gap")?,
                node_limit: int("config.node_limit")?,
                time_limit_seconds: float("config.time_limit_seconds")?,
                fix_reference: get("config.fix_reference")?.parse().map_err(|_| bad("bad fix_reference".into()))?,
                workers: int("config.workers")?,
            },
            lb_history,
            ub_history,
            voltages,
        })
    }
}

// `{:?}` prints the shortest string that parses back to the same f64
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), num)
}

fn parse_num(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "NaN" => Ok(f64::NAN),
        _ => s.parse().map_err(|_| Error::Document(format!("bad number `{s}`"))),
    }
}

fn load(path: &Path) -> std::result::Result<(Network, OpfQcqp), StageError> {
    let raw = stage("matpower-io", read_case(path))?;
    let net = stage("matpower-io", to_per_unit(&raw))?;
    let opf = stage("network-model", assemble_opf(&net))?;
    Ok((net, opf))
}

/// Full pipeline on one case file.
pub fn cmd_solve(path: &Path, cfg: &Config) -> std::result::Result<RunRecord, StageError> {
    let (net, opf) = load(path)?;
    let res = stage("bnb-engine", solve_global(&opf, cfg))?;
    Ok(RunRecord::from_result(&net, &res, cfg, reference_optimum(&net.name)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub instance: String,
    pub sdp_value: f64,
    pub compact_value: f64,
    pub reference: f64,
    pub reference_embedded: bool,
    pub gap_percent: f64,
    pub tolerance: f64,
}

impl GapReport {
    pub fn difference(&self) -> f64 {
        (self.compact_value - self.sdp_value).abs()
    }

    pub fn passes(&self) -> bool {
        self.difference() <= self.tolerance
    }
}

impl fmt::Display for GapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instance     {}", self.instance)?;
        writeln!(f, "sdp          {:.6}", self.sdp_value)?;
        writeln!(f, "compact      {:.6}", self.compact_value)?;
        writeln!(f, "difference   {:.3e} (tolerance {:.3e}) {}", self.difference(), self.tolerance, if self.passes() { "PASS" } else { "FAIL" })?;
        let src = if self.reference_embedded { REFERENCE_NOTE } else { "reference optimum given on the command line" };
        writeln!(f, "reference    {:.4} ({src})", self.reference)?;
        writeln!(f, "gap          {:.3} %", self.gap_percent)
    }
}

/// Root values of the rank relaxation and of the compact relaxation with
/// its multipliers, both solved fresh, plus the root gap.
pub fn root_values(opf: &OpfQcqp) -> Result<(f64, f64)> {
    let sdp = solve_sdp(&build_rank_relaxation(opf), &SdpSettings::default())?;
    let params = ReformParams::from_sdp(opf, &sdp)?;
    let (l, u) = root_bounds(opf);
    let rel = build_relaxation(opf, &params, &l, &u, 1e-7)?;
    let mut node = solve_convex(&rel, &Default::default())?;
    if node.status == NodeStatus::MaxIter {
        node = solve_convex(&rel, &crate::qcqp::NodeTols::default().relaxed())?;
    }
    if node.status != NodeStatus::Optimal {
        return Err(Error::Solver(format!("root relaxation ended with {:?}", node.status)));
    }
    Ok((sdp.dual_value, node.value))
}

pub fn cmd_gap(path: &Path, reference: Option<f64>) -> std::result::Result<GapReport, StageError> {
    let (net, opf) = load(path)?;
    let (reference, embedded) = match reference {
        Some(r) => (r, false),
        None => match reference_optimum(&net.name) {
            Some(r) => (r, true),
            None => return Err(StageError { stage: "cli-report", error: Error::InvalidData(format!("no reference optimum known for `{}`; pass --reference", net.name)) }),
        },
    };
    let (sdp_value, compact_value) = stage("compact-reform", root_values(&opf))?;
    let gap_percent = stage("cli-report", root_gap(reference, sdp_value))?;
    Ok(GapReport { instance: net.name, sdp_value, compact_value, reference, reference_embedded: embedded, gap_percent, tolerance: 1e-4 * (1.0 + sdp_value.abs()) })
}

pub const BENCH_COLUMNS: &[&str] = &["instance", "gap", "z", "ub_s", "sdp_s", "cpu_s", "nodes", "status", "objective"];

/// One benchmark row; failed instances keep their name and the error text.
pub fn bench_row(name: &str, rec: std::result::Result<&RunRecord, &StageError>) -> String {
    match rec {
        Ok(r) => {
            let solved = r.status == Termination::GapClosed;
            let gap = r.gap_root.map_or("-".to_string(), |g| format!("{g:.3}"));
            let cpu = if solved { format!("{:.2}", r.total_seconds) } else { "-".to_string() };
            let obj = r.objective.map_or("-".to_string(), |v| format!("{v:.4}"));
            format!("{name},{gap},{},{:.2},{:.2},{cpu},{},{},{obj}", r.z_count, r.ub_seconds, r.sdp_seconds, r.nodes, r.status.as_str())
        }
        Err(e) => format!("{name},-,-,-,-,-,-,error,\"{}\"", e.to_string().replace('"', "'")),
    }
}

/// Case files (`*.m`) of a directory, sorted by name.
pub fn list_cases(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "m"))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::InvalidData(format!("no case files in {}", dir.display())));
    }
    Ok(out)
}

/// Runs every case of `dir` and returns the comma-separated table.
pub fn cmd_bench(dir: &Path, cfg: &Config) -> std::result::Result<String, StageError> {
    let cases = stage("cli-report", list_cases(dir))?;
    let mut out = BENCH_COLUMNS.join(",");
    out.push('\n');
    for path in cases {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let t = Instant::now();
        let rec = cmd_solve(&path, cfg);
        log::info!("bench: {name} finished in {:.2?}", t.elapsed());
        out.push_str(&bench_row(&name, rec.as_ref()));
        out.push('\n');
    }
    Ok(out)
}

/// Builds the solver configuration from command-line values.
pub fn make_config(gap: Option<f64>, node_limit: Option<usize>, time_limit: Option<f64>, fix_reference: Option<bool>, workers: Option<usize>) -> Config {
    let d = Config::default();
    Config {
        rel_gap: gap.unwrap_or(d.rel_gap),
        node_limit: node_limit.unwrap_or(d.node_limit),
        time_limit: time_limit.map_or(d.time_limit, Duration::from_secs_f64),
        fix_reference: fix_reference.unwrap_or(d.fix_reference),
        workers: workers.unwrap_or(d.workers),
        ..d
    }
}
