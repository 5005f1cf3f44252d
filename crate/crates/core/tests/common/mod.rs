#![allow(dead_code)]

use compact_opf::matpower::{read_case, to_per_unit, Network, RawCase};
use compact_opf::network::{assemble_opf, OpfQcqp};

pub const SMALL_CASES: [&str; 7] = ["caseWB2", "caseWB3", "pglib_opf_case3_lmbd", "caseWB5", "pglib_opf_case5_pjm", "case6ww", "pglib_opf_case14_ieee"];

pub fn case_file(name: &str) -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("cases").join(format!("{name}.m"))
}

pub fn raw(name: &str) -> RawCase {
    read_case(case_file(name)).unwrap()
}

pub fn load(name: &str) -> (Network, OpfQcqp) {
    let net = to_per_unit(&raw(name)).unwrap();
    let opf = assemble_opf(&net).unwrap();
    (net, opf)
}

/// Minimal complex arithmetic for the independent oracles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C(pub f64, pub f64);

impl C {
    pub fn conj(self) -> C {
        C(self.0, -self.1)
    }
    pub fn abs2(self) -> f64 {
        self.0 * self.0 + self.1 * self.1
    }
    pub fn inv(self) -> C {
        let d = self.abs2();
        C(self.0 / d, -self.1 / d)
    }
    pub fn polar(r: f64, deg: f64) -> C {
        let t = deg.to_radians();
        C(r * t.cos(), r * t.sin())
    }
}

impl std::ops::Add for C {
    type Output = C;
    fn add(self, o: C) -> C {
        C(self.0 + o.0, self.1 + o.1)
    }
}
impl std::ops::Sub for C {
    type Output = C;
    fn sub(self, o: C) -> C {
        C(self.0 - o.0, self.1 - o.1)
    }
}
impl std::ops::Mul for C {
    type Output = C;
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
}
impl std::ops::Mul<f64> for C {
    type Output = C;
    fn mul(self, a: f64) -> C {
        C(self.0 * a, self.1 * a)
    }
}

/// Bus admittance matrix straight from the raw MATPOWER columns (branch pi model).
pub fn ybus(raw: &RawCase) -> Vec<Vec<C>> {
    let ids: Vec<usize> = raw.bus.iter().map(|b| b[0] as usize).collect();
    let idx = |id: f64| ids.iter().position(|&b| b == id as usize).unwrap();
    let n = ids.len();
    let mut y = vec![vec![C(0.0, 0.0); n]; n];
    for br in &raw.branch {
        if br[10] == 0.0 {
            continue;
        }
        let (f, t) = (idx(br[0]), idx(br[1]));
        let ys = C(br[2], br[3]).inv();
        let bc = C(0.0, br[4] / 2.0);
        let tap = if br[8] == 0.0 { 1.0 } else { br[8] };
        let tt = C::polar(tap, br[9]);
        y[f][f] = y[f][f] + (ys + bc) * (1.0 / (tap * tap));
        y[t][t] = y[t][t] + ys + bc;
        y[f][t] = y[f][t] - ys * tt.conj().inv();
        y[t][f] = y[t][f] - ys * tt.inv();
    }
    for (i, b) in raw.bus.iter().enumerate() {
        y[i][i] = y[i][i] + C(b[4], b[5]) * (1.0 / raw.base_mva);
    }
    y
}

/// Complex injections `S_i = V_i conj((Y V)_i)`.
pub fn injections(y: &[Vec<C>], v: &[C]) -> Vec<C> {
    (0..v.len())
        .map(|i| {
            let iy = (0..v.len()).fold(C(0.0, 0.0), |a, k| a + y[i][k] * v[k]);
            v[i] * iy.conj()
        })
        .collect()
}

/// A feasible point found by the two-bus search, in the model's variable order.
#[derive(Clone, Debug)]
pub struct OraclePoint {
    pub cost: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Brute-force search on the two-bus fixture: `e_1` on a 1e-3 grid over its
/// magnitude range (`f_1 = 0` fixes the rotation), then [`two_bus_points`] at
/// each grid value. Returns the feasible points sorted by cost.
pub fn two_bus_search() -> Vec<OraclePoint> {
    let raw = raw("caseWB2");
    let (lo, hi) = (raw.bus[0][12], raw.bus[0][11]);
    let steps = ((hi - lo) / 1e-3).round() as usize;
    let mut out: Vec<OraclePoint> = (0..=steps).flat_map(|k| two_bus_points(lo + k as f64 * 1e-3)).collect();
    out.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    out
}

/// Feasible two-bus points with the given `e_1` (and `f_1 = 0`): bus-2
/// voltage from its two balance equations by multi-start Newton, slack
/// injections from the bus-1 balance, then every bound is checked.
pub fn two_bus_points(e1: f64) -> Vec<OraclePoint> {
    let raw = raw("caseWB2");
    let y = ybus(&raw);
    let base = raw.base_mva;
    let (pd2, qd2) = (raw.bus[1][2] / base, raw.bus[1][3] / base);
    let (vmin, vmax) = ((raw.bus[0][12], raw.bus[0][11]), (raw.bus[1][12], raw.bus[1][11]));
    let g = &raw.gen[0];
    let (pmax, pmin, qmax, qmin) = (g[8] / base, g[9] / base, g[3] / base, g[4] / base);
    let c1 = raw.gencost[0][5] * base;
    let mut out = Vec::new();
    {
        let mut roots: Vec<C> = Vec::new();
        for start in [C(1.0, 0.0), C(0.5, -0.8), C(0.8, -0.5), C(0.3, -0.3), C(0.6, 0.6), C(1.0, -1.0)] {
            let mut v2 = start;
            for _ in 0..60 {
                let f = |v2: C| {
                    let s = injections(&y, &[C(e1, 0.0), v2]);
                    (s[1].0 + pd2, s[1].1 + qd2)
                };
                let (r0, r1) = f(v2);
                if r0.abs().max(r1.abs()) < 1e-14 {
                    break;
                }
                let h = 1e-7;
                let (a0, a1) = f(C(v2.0 + h, v2.1));
                let (b0, b1) = f(C(v2.0, v2.1 + h));
                let (j00, j10, j01, j11) = ((a0 - r0) / h, (a1 - r1) / h, (b0 - r0) / h, (b1 - r1) / h);
                let det = j00 * j11 - j01 * j10;
                if det.abs() < 1e-14 {
                    break;
                }
                v2 = C(v2.0 - (j11 * r0 - j01 * r1) / det, v2.1 - (-j10 * r0 + j00 * r1) / det);
            }
            let s = injections(&y, &[C(e1, 0.0), v2]);
            if (s[1].0 + pd2).abs().max((s[1].1 + qd2).abs()) < 1e-10 && !roots.iter().any(|r| (*r - v2).abs2() < 1e-16) {
                roots.push(v2);
            }
        }
        for v2 in roots {
            let s = injections(&y, &[C(e1, 0.0), v2]);
            let (p1, q1) = (s[0].0 + raw.bus[0][2] / base, s[0].1 + raw.bus[0][3] / base);
            let m2 = v2.abs2().sqrt();
            let feasible = m2 >= vmax.0 - 1e-12 && m2 <= vmax.1 + 1e-12 && e1 >= vmin.0 - 1e-12 && e1 <= vmin.1 + 1e-12 && (pmin..=pmax).contains(&p1) && (qmin..=qmax).contains(&q1);
            if feasible {
                out.push(OraclePoint { cost: c1 * p1, x: vec![e1, v2.0, 0.0, v2.1], y: vec![p1, q1] });
            }
        }
    }
    out
}
