//! Node solver for [`ConvexRelaxation`]: every convex quadratic row is written
//! as a rotated second-order cone and handed to the conic engine.
//!
//! Variable layout: `w = (x[2n], y[2m], z[2n], t)`, where `t` is the epigraph
//! of the quadratic part of the objective.

use crate::conic::{self, Cones, ConicProblem, SparseRows, Status};
use crate::error::Result;
use crate::linalg::{psd_factor, SymMatrix};
use crate::reform::ConvexRelaxation;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeTols {
    pub feas: f64,
    pub gap: f64,
    pub max_iter: usize,
}

impl Default for NodeTols {
    fn default() -> Self {
        Self { feas: 1e-7, gap: 1e-7, max_iter: 200 }
    }
}

impl NodeTols {
    pub fn relaxed(self) -> Self {
        Self { feas: self.feas * 100.0, gap: self.gap * 100.0, max_iter: self.max_iter * 2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct NodeSolution {
    pub status: NodeStatus,
    /// Lower bound on the node: the smaller of the primal and dual objectives.
    pub value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl NodeSolution {
    /// `z_i − x_i²` per coordinate.
    pub fn square_violation(&self) -> Vec<f64> {
        self.x.iter().zip(&self.z).map(|(x, z)| z - x * x).collect()
    }
}

struct Layout {
    nx: usize,
    ny: usize,
}

impl Layout {
    fn x(&self, i: usize) -> usize {
        i
    }
    fn y(&self, j: usize) -> usize {
        self.nx + j
    }
    fn z(&self, i: usize) -> usize {
        self.nx + self.ny + i
    }
    fn t(&self) -> usize {
        2 * self.nx + self.ny
    }
    fn ncols(&self) -> usize {
        2 * self.nx + self.ny + 1
    }
}

#[derive(Default)]
struct Builder {
    nonneg: Vec<(Vec<(usize, f64)>, f64)>,
    socs: Vec<Vec<(Vec<(usize, f64)>, f64)>>,
    eq: Vec<(Vec<(usize, f64)>, f64)>,
}

impl Builder {
    /// `g·w ≤ h`.
    fn le(&mut self, g: Vec<(usize, f64)>, h: f64) {
        self.nonneg.push((g, h));
    }

    fn eq(&mut self, a: Vec<(usize, f64)>, b: f64) {
        self.eq.push((a, b));
    }

    /// `‖F_rows · w‖² ≤ h0 − g·w`.
    fn rotated(&mut self, f_rows: Vec<Vec<(usize, f64)>>, g: &[(usize, f64)], h0: f64) {
        let mut block = Vec::with_capacity(f_rows.len() + 2);
        block.push((g.iter().map(|&(j, v)| (j, 0.5 * v)).collect(), 0.5 * (1.0 + h0)));
        block.push((g.iter().map(|&(j, v)| (j, -0.5 * v)).collect(), 0.5 * (1.0 - h0)));
        for row in f_rows {
            block.push((row.into_iter().map(|(j, v)| (j, -v)).collect(), 0.0));
        }
        self.socs.push(block);
    }

    fn finish(self, c: Vec<f64>) -> ConicProblem {
        let ncols = c.len();
        let mut a = SparseRows::new(ncols);
        let mut b = Vec::new();
        for (row, rhs) in self.eq {
            a.push(row);
            b.push(rhs);
        }
        let mut g = SparseRows::new(ncols);
        let mut h = Vec::new();
        let mut cones = Cones { nonneg: self.nonneg.len(), ..Cones::default() };
        for (row, rhs) in self.nonneg {
            g.push(row);
            h.push(rhs);
        }
        for block in self.socs {
            cones.soc.push(block.len());
            for (row, rhs) in block {
                g.push(row);
                h.push(rhs);
            }
        }
        ConicProblem { c, a, b, g, h, cones }
    }
}

fn factor_rows(p: &SymMatrix, scale: f64, offset: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let f = psd_factor(&p.scaled(scale), 1e-13)?;
    Ok((0..f.nrows())
        .map(|r| (0..f.ncols()).filter(|&c| f[(r, c)] != 0.0).map(|c| (offset + c, f[(r, c)])).collect())
        .filter(|row: &Vec<(usize, f64)>| !row.is_empty())
        .collect())
}

fn is_fixed(lo: f64, hi: f64) -> bool {
    (hi - lo).abs() <= 1e-12 * (1.0 + lo.abs())
}

/// Engine-form encoding of `rel`, plus the objective scale it uses.
pub fn encode(rel: &ConvexRelaxation) -> Result<(ConicProblem, f64)> {
    let n = rel.n;
    let lay = Layout { nx: 2 * n, ny: 2 * rel.m };
    let obj = &rel.objective;
    let mut scale: f64 = 1.0;
    scale = scale.max(obj.q.max_abs());
    for v in obj.quad_y.iter().chain(&obj.lin_y).chain(&obj.lin_z) {
        scale = scale.max(v.abs());
    }
    let scale = 1.0 / scale;

    let mut bld = Builder::default();
    let mut c = vec![0.0; lay.ncols()];
    c[lay.t()] = 1.0;
    for (j, v) in obj.lin_y.iter().enumerate() {
        c[lay.y(j)] = scale * v;
    }
    for (i, v) in obj.lin_z.iter().enumerate() {
        c[lay.z(i)] = scale * v;
    }

    // objective epigraph
    let mut rows = factor_rows(&obj.q, scale, lay.x(0))?;
    for (j, &cj) in obj.quad_y.iter().enumerate() {
        if cj != 0.0 {
            rows.push(vec![(lay.y(j), (scale * cj).sqrt())]);
        }
    }
    bld.rotated(rows, &[(lay.t(), -1.0)], 0.0);

    // shifted balance halves; with every x fixed the two halves of a row
    // collapse to one linear equality in y
    let all_fixed = (0..2 * n).all(|i| is_fixed(rel.lower[i], rel.upper[i]));
    for sc in rel.shifted.iter().filter(|_| all_fixed) {
        if sc.sign < 0.0 {
            continue;
        }
        let x = &rel.lower;
        let z: f64 = x.iter().map(|v| v * v).sum();
        let constant = sc.p.quad(x) + sc.shift * z - sc.rhs;
        if sc.lin.is_empty() {
            if constant.abs() > 1e-9 * (1.0 + sc.rhs.abs()) {
                // a load row that cannot balance
                bld.le(vec![], -constant.abs());
            }
            continue;
        }
        bld.eq(sc.lin.iter().map(|&(j, v)| (lay.y(j), v)).collect(), -constant);
    }
    for sc in rel.shifted.iter().filter(|_| !all_fixed) {
        let mut g: Vec<(usize, f64)> = sc.lin.iter().map(|&(j, v)| (lay.y(j), v)).collect();
        if sc.shift != 0.0 {
            g.extend((0..2 * n).map(|i| (lay.z(i), sc.shift)));
        }
        bld.rotated(factor_rows(&sc.p, 1.0, lay.x(0))?, &g, sc.rhs);
    }

    // boxes, envelopes and z ≥ x²
    for r in &rel.mccormick {
        let i = r.i;
        let (l, u) = (rel.lower[i], rel.upper[i]);
        if is_fixed(l, u) {
            bld.eq(vec![(lay.x(i), 1.0)], l);
            bld.eq(vec![(lay.z(i), 1.0)], l * l);
            continue;
        }
        bld.le(vec![(lay.x(i), 1.0)], u);
        bld.le(vec![(lay.x(i), -1.0)], -l);
        bld.le(vec![(lay.z(i), 1.0), (lay.x(i), -r.slope)], r.intercept);
        bld.rotated(vec![vec![(lay.x(i), 1.0)]], &[(lay.z(i), -1.0)], 0.0);
    }

    // voltage magnitudes
    for i in 0..n {
        let pair = |s: f64| vec![(lay.z(i), s), (lay.z(i + n), s)];
        let (lo, hi) = (rel.vmin_sq[i], rel.vmax_sq[i]);
        let both_fixed = is_fixed(rel.lower[i], rel.upper[i]) && is_fixed(rel.lower[i + n], rel.upper[i + n]);
        if both_fixed {
            continue;
        }
        if is_fixed(lo, hi) {
            bld.eq(pair(1.0), hi);
        } else {
            bld.le(pair(1.0), hi);
            bld.le(pair(-1.0), -lo);
        }
    }

    // injection boxes
    for j in 0..2 * rel.m {
        let (lo, hi) = (rel.y_lo[j], rel.y_hi[j]);
        if lo.is_finite() && hi.is_finite() && is_fixed(lo, hi) {
            bld.eq(vec![(lay.y(j), 1.0)], hi);
            continue;
        }
        if hi.is_finite() {
            bld.le(vec![(lay.y(j), 1.0)], hi);
        }
        if lo.is_finite() {
            bld.le(vec![(lay.y(j), -1.0)], -lo);
        }
    }

    Ok((bld.finish(c), scale))
}

/// Solves the node relaxation.
pub fn solve_convex(rel: &ConvexRelaxation, tols: &NodeTols) -> Result<NodeSolution> {
    let (prob, scale) = encode(rel)?;
    let settings = conic::Settings { max_iter: tols.max_iter, feas_tol: tols.feas * 0.1, gap_tol: tols.gap * 0.1, ..conic::Settings::default() };
    let sol = conic::solve(&prob, &settings);
    let nx = 2 * rel.n;
    let ny = 2 * rel.m;
    let x = sol.x[..nx].to_vec();
    let y = sol.x[nx..nx + ny].to_vec();
    let z = sol.x[nx + ny..2 * nx + ny].to_vec();
    let unscale = |v: f64| v / scale + rel.objective.constant;
    let primal_residual = rel.violation(&x, &y, &z);
    let status = match sol.status {
        Status::PrimalInfeasible => NodeStatus::Infeasible,
        Status::Optimal => NodeStatus::Optimal,
        _ if sol.rel_gap() <= tols.gap && primal_residual <= tols.feas && sol.dual_res <= tols.feas => NodeStatus::Optimal,
        _ => NodeStatus::MaxIter,
    };
    let value = match status {
        NodeStatus::Infeasible => f64::INFINITY,
        _ => unscale(sol.primal_obj.min(sol.dual_obj)),
    };
    log::trace!("node solve: {:?} value {value} after {} iterations", sol.status, sol.iterations);
    Ok(NodeSolution { status, value, x, y, z, primal_residual, dual_residual: sol.dual_res, iterations: sol.iterations })
}
