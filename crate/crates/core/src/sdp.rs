//! Rank relaxation of the OPF and its dual certificate.
//!
//! The relaxation replaces `xxᵀ` by `X ⪰ 0` and `yyᵀ` by `Y` with
//! `[[1, yᵀ], [y, Y]] ⪰ 0`. It is solved through its dual: multipliers `φ`
//! on the balance rows, `γ̄/γ̲` on the magnitude bounds, `θ̄/θ̲` on the
//! injection boxes and `ρ`, subject to
//!
//! ```text
//! W = [[ρ,  ½(c + θ̄ − θ̲ + Σφ_r a_r)ᵀ, 0              ],
//!      [·,  diag(C),                    0              ],
//!      [0,  0,                          Σφ_r A_r + d(γ')]] ⪰ 0,
//! ```
//!
//! with `γ' = (γ̄ − γ̲, γ̄ − γ̲)`. The primal matrices come back as the
//! cone multipliers of the interior-point engine.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::conic::{self, svec_index, svec_len, svec_scale, Cones, ConicProblem, SparseRows, Status};
use crate::error::{Error, Result};
use crate::linalg::{eigen, is_psd, min_eigenvalue, SymMatrix};
use crate::network::{OpfQcqp, Point};

/// Bounds closer than this are treated as an equality.
const EQ_BOUND_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct SdpSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { feas_tol: 1e-7, gap_tol: 1e-7, max_iter: 200, step_fraction: 0.98 }
    }
}

/// Where a multiplier lives in the dual variable vector.
#[derive(Clone, Copy, Debug)]
enum Mult {
    /// Two sign-constrained variables (upper, lower).
    Pair(usize, usize),
    /// One free variable standing for upper − lower.
    Free(usize),
}

/// The dual program in engine form plus the bookkeeping to read it back.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub opf: OpfQcqp,
    conic: ConicProblem,
    n_phi: usize,
    gamma: Vec<Mult>,
    theta: Vec<Mult>,
    rho: usize,
    /// Units whose p enters the arrow block (positive quadratic cost).
    quad_units: Vec<usize>,
    /// Equality row per y entry not in the arrow block.
    eq_row: Vec<Option<usize>>,
    arrow_dim: usize,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: Status,
    /// Primal relaxation matrix for `xxᵀ`.
    pub x: SymMatrix,
    /// Relaxed injections.
    pub y: Vec<f64>,
    /// Diagonal of the relaxed `yyᵀ` block (p entries, length m).
    pub y_sq: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub phi: Vec<f64>,
    pub gamma_up: Vec<f64>,
    pub gamma_lo: Vec<f64>,
    pub theta_up: Vec<f64>,
    pub theta_lo: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

impl SdpSolution {
    /// `γ̄ − γ̲` per bus.
    pub fn gamma_net(&self) -> Vec<f64> {
        self.gamma_up.iter().zip(&self.gamma_lo).map(|(u, l)| u - l).collect()
    }

    /// False when the returned point is the best iterate of a run that missed
    /// the tolerances. The multipliers are still repaired to an exactly
    /// feasible dual point, so `dual_value` remains a valid bound.
    pub fn certified(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn rel_gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs() / (1.0 + self.primal_value.abs())
    }

    /// Rank-one rounding: `√λ_max · v_max` of `X`, paired with the relaxed
    /// injections.
    pub fn rounded(&self) -> Result<Point> {
        let (vals, vecs) = eigen(&self.x)?;
        let k = vals.len() - 1;
        let scale = vals[k].max(0.0).sqrt();
        let x = (0..vals.len()).map(|i| scale * vecs[(i, k)]).collect();
        Ok(Point { x, y: self.y.clone() })
    }
}

/// Dual program of the rank relaxation.
pub fn build_rank_relaxation(opf: &OpfQcqp) -> SdpProblem {
    let n = opf.n;
    let m = opf.m;
    let nx = 2 * n;
    let ny = 2 * m;
    let mut nvar = 0;
    let mut next = |k: usize| {
        let s = nvar;
        nvar += k;
        s
    };
    let phi0 = next(nx);
    let mut gamma = Vec::with_capacity(n);
    for i in 0..n {
        gamma.push(if opf.vmax_sq[i] - opf.vmin_sq[i] > EQ_BOUND_TOL { Mult::Pair(next(1), next(1)) } else { Mult::Free(next(1)) });
    }
    let mut theta = Vec::with_capacity(ny);
    for j in 0..ny {
        theta.push(if opf.y_hi[j] - opf.y_lo[j] > EQ_BOUND_TOL { Mult::Pair(next(1), next(1)) } else { Mult::Free(next(1)) });
    }
    let rho = next(1);

    let quad_units: Vec<usize> = (0..m).filter(|&j| opf.cost_quad[j] > 0.0).collect();
    let arrow_dim = 1 + quad_units.len();

    // objective: Σφ b + ρ + Σ(γ̄ v̄ − γ̲ v̲) + Σ(θ̄ hi − θ̲ lo)
    let mut c = vec![0.0; nvar];
    for r in 0..nx {
        c[phi0 + r] = opf.constraints[r].rhs;
    }
    c[rho] = 1.0;
    for i in 0..n {
        match gamma[i] {
            Mult::Pair(u, l) => {
                c[u] = opf.vmax_sq[i];
                c[l] = -opf.vmin_sq[i];
            }
            Mult::Free(v) => c[v] = opf.vmax_sq[i],
        }
    }
    for j in 0..ny {
        match theta[j] {
            Mult::Pair(u, l) => {
                c[u] = opf.y_hi[j];
                c[l] = -opf.y_lo[j];
            }
            Mult::Free(v) => c[v] = opf.y_hi[j],
        }
    }

    // linear cost per y entry and which balance rows touch it
    let lin_cost = |j: usize| if j < m { opf.cost_lin[j] } else { 0.0 };
    let mut touching: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ny];
    for (r, con) in opf.constraints.iter().enumerate() {
        for &(j, v) in &con.lin {
            touching[j].push((r, v));
        }
    }
    let theta_terms = |j: usize| -> Vec<(usize, f64)> {
        match theta[j] {
            Mult::Pair(u, l) => vec![(u, 1.0), (l, -1.0)],
            Mult::Free(v) => vec![(v, 1.0)],
        }
    };

    // equalities: θ_j + Σ_r φ_r a_rj = −c_j for entries outside the arrow block
    let mut a = SparseRows::new(nvar);
    let mut b = Vec::new();
    let mut eq_row = vec![None; ny];
    let in_arrow: Vec<Option<usize>> = (0..ny).map(|j| quad_units.iter().position(|&u| u == j)).collect();
    for j in 0..ny {
        if in_arrow[j].is_some() {
            continue;
        }
        let mut row = theta_terms(j);
        row.extend(touching[j].iter().map(|&(r, v)| (phi0 + r, v)));
        eq_row[j] = Some(a.push(row));
        b.push(-lin_cost(j));
    }

    // cones: sign constraints, arrow block, voltage block
    let mut g = SparseRows::new(nvar);
    let mut h = Vec::new();
    let mut n_nonneg = 0;
    for mult in gamma.iter().chain(theta.iter()) {
        if let Mult::Pair(u, l) = *mult {
            g.push(vec![(u, -1.0)]);
            g.push(vec![(l, -1.0)]);
            h.extend([0.0, 0.0]);
            n_nonneg += 2;
        }
    }

    let a_len = svec_len(arrow_dim);
    let a_off = g.nrows();
    g.rows.extend(std::iter::repeat_with(Vec::new).take(a_len));
    h.extend(std::iter::repeat_n(0.0, a_len));
    g.rows[a_off + svec_index(arrow_dim, 0, 0)].push((rho, -1.0));
    for (k, &j) in quad_units.iter().enumerate() {
        let pos = a_off + svec_index(arrow_dim, 1 + k, 0);
        let w = 0.5 * svec_scale(1 + k, 0);
        h[pos] = w * lin_cost(j);
        for (v, s) in theta_terms(j) {
            g.rows[pos].push((v, -w * s));
        }
        for &(r, s) in &touching[j] {
            g.rows[pos].push((phi0 + r, -w * s));
        }
        h[a_off + svec_index(arrow_dim, 1 + k, 1 + k)] = opf.cost_quad[j];
    }

    let v_len = svec_len(nx);
    let v_off = g.nrows();
    g.rows.extend(std::iter::repeat_with(Vec::new).take(v_len));
    h.extend(std::iter::repeat_n(0.0, v_len));
    for (r, con) in opf.constraints.iter().enumerate() {
        let am = con.a.as_matrix();
        for jc in 0..nx {
            for ic in jc..nx {
                let v = am[(ic, jc)];
                if v != 0.0 {
                    g.rows[v_off + svec_index(nx, ic, jc)].push((phi0 + r, -svec_scale(ic, jc) * v));
                }
            }
        }
    }
    for i in 0..n {
        for d in [i, i + n] {
            let pos = v_off + svec_index(nx, d, d);
            match gamma[i] {
                Mult::Pair(u, l) => {
                    g.rows[pos].push((u, -1.0));
                    g.rows[pos].push((l, 1.0));
                }
                Mult::Free(v) => g.rows[pos].push((v, -1.0)),
            }
        }
    }

    let conic = ConicProblem { c, a, b, g, h, cones: Cones { nonneg: n_nonneg, soc: vec![], psd: vec![arrow_dim, nx] } };
    SdpProblem { opf: opf.clone(), conic, n_phi: nx, gamma, theta, rho, quad_units, eq_row, arrow_dim }
}

fn mult_value(x: &[f64], m: Mult) -> (f64, f64) {
    match m {
        Mult::Pair(u, l) => (x[u].max(0.0), x[l].max(0.0)),
        Mult::Free(v) => (x[v].max(0.0), (-x[v]).max(0.0)),
    }
}

pub fn solve_sdp(prob: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    let st = conic::Settings { max_iter: settings.max_iter, feas_tol: settings.feas_tol * 1e-2, gap_tol: settings.gap_tol * 1e-2, step_fraction: settings.step_fraction };
    let sol = conic::solve(&prob.conic, &st);
    match sol.status {
        Status::DualInfeasible => return Err(Error::Infeasible("relaxation is infeasible (dual unbounded)".into())),
        Status::PrimalInfeasible => return Err(Error::Solver("relaxation dual is infeasible".into())),
        _ => {}
    }
    let opf = &prob.opf;
    let n = opf.n;
    let m = opf.m;
    let nx = 2 * n;
    let ny = 2 * m;
    let x = &sol.x;
    let phi = x[..prob.n_phi].to_vec();
    let (mut gamma_up, mut gamma_lo) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        (gamma_up[i], gamma_lo[i]) = mult_value(x, prob.gamma[i]);
    }
    let (mut theta_up, mut theta_lo) = (vec![0.0; ny], vec![0.0; ny]);
    for j in 0..ny {
        (theta_up[j], theta_lo[j]) = mult_value(x, prob.theta[j]);
    }

    // primal matrices from the cone multipliers
    let nn = prob.conic.cones.nonneg;
    let a_len = svec_len(prob.arrow_dim);
    let arrow = conic::svec_to_mat(&sol.z[nn..nn + a_len], prob.arrow_dim);
    let xmat = conic::svec_to_mat(&sol.z[nn + a_len..], nx);
    let mut y = vec![0.0; ny];
    let mut y_sq = vec![0.0; m];
    for j in 0..ny {
        if let Some(r) = prob.eq_row[j] {
            y[j] = -sol.y[r];
        }
    }
    for (k, &j) in prob.quad_units.iter().enumerate() {
        y[j] = arrow[(1 + k, 0)];
        y_sq[j] = arrow[(1 + k, 1 + k)];
    }
    let mut out = SdpSolution {
        status: sol.status,
        x: SymMatrix::new(xmat)?,
        y,
        y_sq,
        primal_value: 0.0,
        dual_value: 0.0,
        phi,
        gamma_up,
        gamma_lo,
        theta_up,
        theta_lo,
        rho: x[prob.rho],
        iterations: sol.iterations,
    };
    polish_primal(opf, &mut out);
    repair_dual(opf, &prob.quad_units, &mut out)?;
    for j in 0..m {
        if prob.eq_row[j].is_some() || out.y_sq[j] < out.y[j] * out.y[j] {
            out.y_sq[j] = out.y[j] * out.y[j];
        }
    }
    out.primal_value = opf.cost_const + (0..m).map(|j| opf.cost_quad[j] * out.y_sq[j] + opf.cost_lin[j] * out.y[j]).sum::<f64>();
    out.dual_value = dual_objective(opf, &out);
    let cert = certify(opf, &out, settings.feas_tol)?;
    log::debug!("sdp {}: engine {:?} in {} iterations, {cert:?}", opf.name, sol.status, sol.iterations);
    out.status = if cert.passes(settings.gap_tol * 10.0, settings.feas_tol) {
        Status::Optimal
    } else {
        log::warn!("sdp {}: certificate missed the tolerances after {} iterations ({:?}): {cert:?}", opf.name, sol.iterations, sol.status);
        match sol.status {
            Status::Optimal => Status::NumericalError,
            s => s,
        }
    };
    Ok(out)
}

/// Least-squares correction of (X, y) onto the balance rows.
fn polish_primal(opf: &OpfQcqp, sol: &mut SdpSolution) {
    let k = opf.constraints.len();
    let ny = 2 * opf.m;
    let movable: Vec<bool> = (0..ny).map(|j| opf.y_hi[j] - opf.y_lo[j] > EQ_BOUND_TOL).collect();
    let res: Vec<f64> = opf.constraints.iter().map(|c| c.a.dot(&sol.x) + c.lin_dot(&sol.y) - c.rhs).collect();
    let mut gram = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let ca = &opf.constraints[a];
            let cb = &opf.constraints[b];
            let mut v = ca.a.dot(&cb.a);
            for &(ja, va) in &ca.lin {
                for &(jb, vb) in &cb.lin {
                    if ja == jb && movable[ja] {
                        v += va * vb;
                    }
                }
            }
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    let Ok(g) = SymMatrix::new(gram) else { return };
    let Ok(mu) = crate::linalg::solve_sym(&g, &res) else { return };
    let mut dx = SymMatrix::zeros(2 * opf.n);
    for (r, c) in opf.constraints.iter().enumerate() {
        dx = dx.axpy(-mu[r], &c.a);
        for &(j, v) in &c.lin {
            if movable[j] {
                sol.y[j] -= mu[r] * v;
            }
        }
    }
    sol.x = sol.x.axpy(1.0, &dx);
}

/// Moves the multipliers to an exactly feasible dual point so that the dual
/// value is a valid bound: linear-cost rows of W get zero off-diagonals,
/// the voltage block is shifted to PSD through γ̄, and ρ covers the arrow block.
fn repair_dual(opf: &OpfQcqp, quad_units: &[usize], sol: &mut SdpSolution) -> Result<()> {
    let m = opf.m;
    let ny = 2 * m;
    let mut off = vec![0.0; ny];
    for j in 0..ny {
        off[j] = if j < m { opf.cost_lin[j] } else { 0.0 };
    }
    for (r, con) in opf.constraints.iter().enumerate() {
        for &(j, v) in &con.lin {
            off[j] += sol.phi[r] * v;
        }
    }
    for j in 0..ny {
        if !quad_units.contains(&j) {
            let d = -off[j];
            sol.theta_up[j] = d.max(0.0);
            sol.theta_lo[j] = (-d).max(0.0);
        }
    }
    let q = voltage_block(opf, &sol.phi, &sol.gamma_net());
    let lmin = min_eigenvalue(&q)?;
    if lmin < 0.0 {
        let shift = -lmin + 1e-14 * (1.0 + q.max_abs());
        sol.gamma_up.iter_mut().for_each(|g| *g += shift);
    }
    let mut need = 0.0;
    for &j in quad_units {
        let w = off[j] + sol.theta_up[j] - sol.theta_lo[j];
        need += w * w / (4.0 * opf.cost_quad[j]);
    }
    if sol.rho < need {
        sol.rho = need * (1.0 + 1e-12) + 1e-14;
    }
    Ok(())
}

/// Dual objective of the rank relaxation (plus constant cost terms).
pub fn dual_objective(opf: &OpfQcqp, sol: &SdpSolution) -> f64 {
    let term = |mult: f64, bound: f64| if mult == 0.0 { 0.0 } else { mult * bound };
    let mut v = opf.cost_const - sol.rho;
    for j in 0..2 * opf.m {
        v += term(sol.theta_lo[j], opf.y_lo[j]) - term(sol.theta_up[j], opf.y_hi[j]);
    }
    for i in 0..opf.n {
        v += term(sol.gamma_lo[i], opf.vmin_sq[i]) - term(sol.gamma_up[i], opf.vmax_sq[i]);
    }
    for (r, con) in opf.constraints.iter().enumerate() {
        v -= sol.phi[r] * con.rhs;
    }
    v
}

/// Assembles the full dual matrix `W` of size `1 + 2m + 2n`.
pub fn dual_matrix(opf: &OpfQcqp, sol: &SdpSolution) -> SymMatrix {
    let m = opf.m;
    let nx = 2 * opf.n;
    let ny = 2 * m;
    let dim = 1 + ny + nx;
    let mut w = DMatrix::zeros(dim, dim);
    w[(0, 0)] = sol.rho;
    let mut off = vec![0.0; ny];
    for j in 0..ny {
        off[j] = if j < m { opf.cost_lin[j] } else { 0.0 } + sol.theta_up[j] - sol.theta_lo[j];
    }
    for (r, con) in opf.constraints.iter().enumerate() {
        for &(j, v) in &con.lin {
            off[j] += sol.phi[r] * v;
        }
    }
    for j in 0..ny {
        w[(0, 1 + j)] = 0.5 * off[j];
        w[(1 + j, 0)] = 0.5 * off[j];
        if j < m {
            w[(1 + j, 1 + j)] = opf.cost_quad[j];
        }
    }
    let q = voltage_block(opf, &sol.phi, &sol.gamma_net());
    let qm = q.as_matrix();
    for a in 0..nx {
        for b in 0..nx {
            w[(1 + ny + a, 1 + ny + b)] = qm[(a, b)];
        }
    }
    SymMatrix::from_lower(&w)
}

/// `Σ φ_r A_r + d(γ')` with `γ'` the per-bus net magnitude multipliers.
pub fn voltage_block(opf: &OpfQcqp, phi: &[f64], gamma_net: &[f64]) -> SymMatrix {
    let n = opf.n;
    let mut q = SymMatrix::zeros(2 * n);
    for (r, con) in opf.constraints.iter().enumerate() {
        if phi[r] != 0.0 {
            q = q.axpy(phi[r], &con.a);
        }
    }
    for i in 0..n {
        q.add_sym(i, i, gamma_net[i]);
        q.add_sym(i + n, i + n, gamma_net[i]);
    }
    q
}

/// Checks of a solved relaxation against its own dual.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub rel_gap: f64,
    pub max_residual: f64,
    pub bound_violation: f64,
    pub min_eig_x: f64,
    pub min_eig_w: f64,
    pub w_psd: bool,
}

impl Certificate {
    pub fn passes(&self, gap_tol: f64, feas_tol: f64) -> bool {
        self.rel_gap <= gap_tol && self.max_residual <= feas_tol && self.bound_violation <= feas_tol && self.w_psd
    }
}

pub fn certify(opf: &OpfQcqp, sol: &SdpSolution, psd_tol: f64) -> Result<Certificate> {
    let mut max_residual = 0.0f64;
    for con in &opf.constraints {
        let r = con.a.dot(&sol.x) + con.lin_dot(&sol.y) - con.rhs;
        max_residual = max_residual.max(r.abs());
    }
    let xm = sol.x.as_matrix();
    let mut bound_violation = 0.0f64;
    for i in 0..opf.n {
        let v = xm[(i, i)] + xm[(i + opf.n, i + opf.n)];
        bound_violation = bound_violation.max(opf.vmin_sq[i] - v).max(v - opf.vmax_sq[i]);
    }
    for j in 0..2 * opf.m {
        bound_violation = bound_violation.max(opf.y_lo[j] - sol.y[j]).max(sol.y[j] - opf.y_hi[j]);
    }
    let w = dual_matrix(opf, sol);
    Ok(Certificate {
        rel_gap: (sol.primal_value - sol.dual_value).abs() / (1.0 + sol.primal_value.abs()),
        max_residual,
        bound_violation,
        min_eig_x: min_eigenvalue(&sol.x)?,
        min_eig_w: min_eigenvalue(&w)?,
        w_psd: is_psd(&w, psd_tol),
    })
}

/// Percentage gap `|(opt − relax)/opt|·100`.
pub fn root_gap(opt: f64, relax: f64) -> Result<f64> {
    if opt == 0.0 || !opt.is_finite() || !relax.is_finite() {
        return Err(Error::InvalidData(format!("root gap undefined for opt={opt}, relax={relax}")));
    }
    Ok(((opt - relax) / opt).abs() * 100.0)
}

/// Writes the primal relaxation in SDPA sparse format (block 1: X, block 2:
/// the arrow matrix over all y, block 3: diagonal slack-free bounds).
pub fn write_sdpa(opf: &OpfQcqp) -> String {
    let n = opf.n;
    let nx = 2 * n;
    let ny = 2 * opf.m;
    let arrow = 1 + ny;
    let nbound = 2 * n + 2 * ny;
    let mut out = String::new();
    let rows = nx + 1;
    let _ = writeln!(out, "\"rank relaxation of {}\"", opf.name);
    let _ = writeln!(out, "{rows}");
    let _ = writeln!(out, "3");
    let _ = writeln!(out, "{nx} {arrow} -{nbound}");
    // right-hand sides: balance rows, then the arrow corner
    let rhs: Vec<String> = opf.constraints.iter().map(|c| format!("{:e}", c.rhs)).chain(std::iter::once("1".to_string())).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));
    // objective (SDPA maximizes tr(F0 · ·) in the dual; we list the primal cost)
    for j in 0..opf.m {
        if opf.cost_lin[j] != 0.0 {
            let _ = writeln!(out, "0 2 1 {} {:e}", 2 + j, 0.5 * opf.cost_lin[j]);
        }
        if opf.cost_quad[j] != 0.0 {
            let _ = writeln!(out, "0 2 {} {} {:e}", 2 + j, 2 + j, opf.cost_quad[j]);
        }
    }
    for (r, con) in opf.constraints.iter().enumerate() {
        let am = con.a.as_matrix();
        for jc in 0..nx {
            for ic in jc..nx {
                if am[(ic, jc)] != 0.0 {
                    let _ = writeln!(out, "{} 1 {} {} {:e}", r + 1, jc + 1, ic + 1, am[(ic, jc)]);
                }
            }
        }
        for &(j, v) in &con.lin {
            let _ = writeln!(out, "{} 2 1 {} {:e}", r + 1, 2 + j, 0.5 * v);
        }
    }
    let _ = writeln!(out, "{} 2 1 1 1", rows);
    out
}
