//! MATPOWER case files: parsing, emitting and per-unit conversion.
//!
//! Rows are kept as raw numeric vectors so that a parsed case can be written
//! back without loss. Typed access goes through the column constants below.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub mod col {
    pub const BUS_I: usize = 0;
    pub const BUS_TYPE: usize = 1;
    pub const PD: usize = 2;
    pub const QD: usize = 3;
    pub const GS: usize = 4;
    pub const BS: usize = 5;
    pub const VMAX: usize = 11;
    pub const VMIN: usize = 12;

    pub const GEN_BUS: usize = 0;
    pub const QMAX: usize = 3;
    pub const QMIN: usize = 4;
    pub const GEN_STATUS: usize = 7;
    pub const PMAX: usize = 8;
    pub const PMIN: usize = 9;

    pub const F_BUS: usize = 0;
    pub const T_BUS: usize = 1;
    pub const BR_R: usize = 2;
    pub const BR_X: usize = 3;
    pub const BR_B: usize = 4;
    pub const TAP: usize = 8;
    pub const SHIFT: usize = 9;
    pub const BR_STATUS: usize = 10;

    pub const MODEL: usize = 0;
    pub const NCOST: usize = 3;
    pub const COST: usize = 4;
}

const MIN_BUS_COLS: usize = 13;
const MIN_GEN_COLS: usize = 10;
const MIN_BRANCH_COLS: usize = 11;
const MIN_GENCOST_COLS: usize = 5;

/// A case file as written, in MW / MVAr / p.u. voltage.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCase {
    pub name: String,
    pub base_mva: f64,
    pub bus: Vec<Vec<f64>>,
    pub gen: Vec<Vec<f64>>,
    pub branch: Vec<Vec<f64>>,
    pub gencost: Vec<Vec<f64>>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses MATPOWER text. Unknown blocks (names, version strings, cell arrays)
/// are skipped.
pub fn parse_case(text: &str) -> Result<RawCase> {
    let lines: Vec<&str> = text.lines().map(strip_comment).collect();
    let mut name = String::from("case");
    let mut base_mva = None;
    let mut blocks: std::collections::HashMap<String, Vec<Vec<f64>>> = Default::default();

    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim();
        if let Some(rest) = line.strip_prefix("function") {
            if let Some(eq) = rest.find('=') {
                name = rest[eq + 1..].trim().trim_end_matches(';').to_string();
            }
            i += 1;
            continue;
        }
        let Some(rest) = line.strip_prefix("mpc.") else {
            i += 1;
            continue;
        };
        let Some(eq) = rest.find('=') else {
            return Err(Error::Parse { line: i + 1, msg: "expected `=` after field name".into() });
        };
        let field = rest[..eq].trim().to_string();
        let value = rest[eq + 1..].trim();
        if let Some(body) = value.strip_prefix('[') {
            let start = i;
            let mut rows = Vec::new();
            let mut chunk = body.to_string();
            loop {
                let (content, done) = match chunk.find(']') {
                    Some(k) => (chunk[..k].to_string(), true),
                    None => (chunk.clone(), false),
                };
                for piece in content.split(';') {
                    let toks: Vec<&str> = piece.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
                    if toks.is_empty() {
                        continue;
                    }
                    let mut row = Vec::with_capacity(toks.len());
                    for t in toks {
                        let v: f64 = parse_number(t).ok_or_else(|| Error::Parse { line: i + 1, msg: format!("bad number `{t}` in mpc.{field}") })?;
                        row.push(v);
                    }
                    rows.push(row);
                }
                if done {
                    break;
                }
                i += 1;
                if i >= lines.len() {
                    return Err(Error::Parse { line: start + 1, msg: format!("unterminated matrix mpc.{field}") });
                }
                chunk = lines[i].to_string();
            }
            blocks.insert(field, rows);
        } else if value.starts_with('{') {
            // cell array: skip to the closing brace
            while !lines[i].contains('}') {
                i += 1;
                if i >= lines.len() {
                    return Err(Error::Parse { line: i, msg: format!("unterminated cell array mpc.{field}") });
                }
            }
        } else if field == "baseMVA" {
            let v = value.trim_end_matches(';').trim();
            base_mva = Some(parse_number(v).ok_or_else(|| Error::Parse { line: i + 1, msg: format!("bad baseMVA `{v}`") })?);
        }
        i += 1;
    }

    let base_mva = base_mva.ok_or_else(|| Error::MissingBlock("baseMVA".into()))?;
    let mut take = |k: &str, min_cols: usize| -> Result<Vec<Vec<f64>>> {
        let rows = blocks.remove(k).ok_or_else(|| Error::MissingBlock(k.into()))?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() < min_cols {
                return Err(Error::Parse { line: 0, msg: format!("mpc.{k} row {} has {} columns, need {min_cols}", r + 1, row.len()) });
            }
        }
        Ok(rows)
    };
    let bus = take("bus", MIN_BUS_COLS)?;
    let gen = take("gen", MIN_GEN_COLS)?;
    let branch = take("branch", MIN_BRANCH_COLS)?;
    let gencost = take("gencost", MIN_GENCOST_COLS)?;
    Ok(RawCase { name, base_mva, bus, gen, branch, gencost })
}

fn parse_number(t: &str) -> Option<f64> {
    match t {
        "Inf" | "inf" => Some(f64::INFINITY),
        "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
        _ => t.parse().ok(),
    }
}

pub fn read_case(path: impl AsRef<Path>) -> Result<RawCase> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut case = parse_case(&text)?;
    if case.name == "case" {
        if let Some(stem) = path.as_ref().file_stem() {
            case.name = stem.to_string_lossy().into_owned();
        }
    }
    Ok(case)
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    // shortest representation that parses back to the same value
    format!("{v:?}")
}

/// Writes a case in MATPOWER syntax. `parse_case(&emit(c)) == c`.
pub fn emit(case: &RawCase) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "function mpc = {}", case.name);
    let _ = writeln!(out, "mpc.version = '2';");
    let _ = writeln!(out, "mpc.baseMVA = {};", fmt_num(case.base_mva));
    for (field, rows) in [("bus", &case.bus), ("gen", &case.gen), ("branch", &case.branch), ("gencost", &case.gencost)] {
        let _ = writeln!(out, "mpc.{field} = [");
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
            let _ = writeln!(out, "\t{};", cells.join("\t"));
        }
        let _ = writeln!(out, "];");
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BusKind {
    Load,
    Generator,
    Reference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    /// External bus number from the case file.
    pub id: i64,
    pub kind: BusKind,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
    pub vmin: f64,
    pub vmax: f64,
}

/// Quadratic cost `c2 p² + c1 p + c0` with `p` in per unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadCost {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

/// One in-service generating unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Unit {
    pub bus: usize,
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
    pub cost: QuadCost,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub b: f64,
    pub ratio: f64,
    pub shift_deg: f64,
}

/// In-service network in per unit, buses indexed 0..n.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub units: Vec<Unit>,
    pub branches: Vec<Branch>,
    pub reference: usize,
}

impl Network {
    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    /// Buses hosting at least one unit, ascending.
    pub fn generator_buses(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.units.iter().map(|u| u.bus).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Converts back to a case file in MW. Out-of-service elements are gone,
    /// so only in-service data survives the round trip.
    pub fn to_raw(&self) -> RawCase {
        let base = self.base_mva;
        let bus = self
            .buses
            .iter()
            .map(|b| {
                let t = match b.kind {
                    BusKind::Load => 1.0,
                    BusKind::Generator => 2.0,
                    BusKind::Reference => 3.0,
                };
                vec![b.id as f64, t, b.pd * base, b.qd * base, b.gs * base, b.bs * base, 1.0, 1.0, 0.0, 0.0, 1.0, b.vmax, b.vmin]
            })
            .collect();
        let gen = self
            .units
            .iter()
            .map(|u| vec![self.buses[u.bus].id as f64, 0.0, 0.0, u.qmax * base, u.qmin * base, 1.0, base, 1.0, u.pmax * base, u.pmin * base])
            .collect();
        let branch = self
            .branches
            .iter()
            .map(|br| {
                vec![self.buses[br.from].id as f64, self.buses[br.to].id as f64, br.r, br.x, br.b, 0.0, 0.0, 0.0, br.ratio, br.shift_deg, 1.0, -360.0, 360.0]
            })
            .collect();
        let gencost = self
            .units
            .iter()
            .map(|u| vec![2.0, 0.0, 0.0, 3.0, u.cost.c2 / (base * base), u.cost.c1 / base, u.cost.c0])
            .collect();
        RawCase { name: self.name.clone(), base_mva: base, bus, gen, branch, gencost }
    }
}

/// Drops out-of-service elements, renumbers buses and converts to per unit.
/// Each in-service generator becomes its own injection unit.
pub fn to_per_unit(case: &RawCase) -> Result<Network> {
    let base = case.base_mva;
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::InvalidData(format!("baseMVA must be positive, got {base}")));
    }
    let mut index = std::collections::HashMap::new();
    let mut buses = Vec::with_capacity(case.bus.len());
    let mut reference = None;
    for row in &case.bus {
        let id = row[col::BUS_I] as i64;
        let kind = match row[col::BUS_TYPE] as i64 {
            1 => BusKind::Load,
            2 => BusKind::Generator,
            3 => BusKind::Reference,
            4 => return Err(Error::InvalidData(format!("bus {id} is isolated (type 4)"))),
            t => return Err(Error::InvalidData(format!("bus {id} has unknown type {t}"))),
        };
        let (vmin, vmax) = (row[col::VMIN], row[col::VMAX]);
        if !(vmin >= 0.0 && vmin <= vmax && vmax.is_finite()) {
            return Err(Error::InvalidData(format!("bus {id} has voltage bounds [{vmin}, {vmax}]")));
        }
        if index.insert(id, buses.len()).is_some() {
            return Err(Error::InvalidData(format!("duplicate bus number {id}")));
        }
        if kind == BusKind::Reference && reference.is_none() {
            reference = Some(buses.len());
        }
        buses.push(Bus {
            id,
            kind,
            pd: row[col::PD] / base,
            qd: row[col::QD] / base,
            gs: row[col::GS] / base,
            bs: row[col::BS] / base,
            vmin,
            vmax,
        });
    }
    if buses.is_empty() {
        return Err(Error::InvalidData("case has no buses".into()));
    }
    let lookup = |id: f64, what: &str| -> Result<usize> {
        index.get(&(id as i64)).copied().ok_or_else(|| Error::InvalidData(format!("{what} refers to unknown bus {id}")))
    };

    if case.gencost.len() < case.gen.len() {
        return Err(Error::InvalidData(format!("{} generators but only {} gencost rows", case.gen.len(), case.gencost.len())));
    }
    let mut units = Vec::new();
    for (g, row) in case.gen.iter().enumerate() {
        if row[col::GEN_STATUS] <= 0.0 {
            continue;
        }
        let bus = lookup(row[col::GEN_BUS], "generator")?;
        let cost = parse_cost(&case.gencost[g], g, base)?;
        let (pmin, pmax, qmin, qmax) = (row[col::PMIN] / base, row[col::PMAX] / base, row[col::QMIN] / base, row[col::QMAX] / base);
        if pmin > pmax || qmin > qmax {
            return Err(Error::InvalidData(format!("generator {} has inverted limits", g + 1)));
        }
        units.push(Unit { bus, pmin, pmax, qmin, qmax, cost });
    }

    let mut branches = Vec::new();
    for row in &case.branch {
        if row[col::BR_STATUS] <= 0.0 {
            continue;
        }
        let from = lookup(row[col::F_BUS], "branch")?;
        let to = lookup(row[col::T_BUS], "branch")?;
        let (r, x) = (row[col::BR_R], row[col::BR_X]);
        if r == 0.0 && x == 0.0 {
            return Err(Error::InvalidData(format!("branch {}-{} has zero impedance", row[0], row[1])));
        }
        let ratio = if row[col::TAP] == 0.0 { 1.0 } else { row[col::TAP] };
        branches.push(Branch { from, to, r, x, b: row[col::BR_B], ratio, shift_deg: row[col::SHIFT] });
    }

    let reference = match reference {
        Some(r) => r,
        None => {
            let r = units.first().map(|u| u.bus).unwrap_or(0);
            log::warn!("no reference bus in {}; using bus {}", case.name, buses[r].id);
            r
        }
    };
    Ok(Network { name: case.name.clone(), base_mva: base, buses, units, branches, reference })
}

fn parse_cost(row: &[f64], g: usize, base: f64) -> Result<QuadCost> {
    let model = row[col::MODEL] as i64;
    if model != 2 {
        return Err(Error::UnsupportedCost(format!("generator {} uses model {model}; only polynomial (2) is supported", g + 1)));
    }
    let ncost = row[col::NCOST] as usize;
    if ncost > 3 {
        return Err(Error::UnsupportedCost(format!("generator {} has a degree-{} polynomial cost", g + 1, ncost - 1)));
    }
    if row.len() < col::COST + ncost {
        return Err(Error::InvalidData(format!("gencost row {} is shorter than NCOST", g + 1)));
    }
    // coefficients are listed highest degree first
    let mut c = [0.0; 3];
    for k in 0..ncost {
        c[ncost - 1 - k] = row[col::COST + k];
    }
    Ok(QuadCost { c2: c[2] * base * base, c1: c[1] * base, c0: c[0] })
}
