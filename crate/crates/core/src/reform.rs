//! Compact convex relaxation parametrized by SDP multipliers.
//!
//! With `z_i` standing for `x_i²`, every balance row is split into two
//! inequalities and made convex by an eigenvalue shift:
//!
//! ```text
//!  xᵀ( A_r − λ̂_r I)x + λ̂_r Σz + a_rᵀy ≤  b_r,   λ̂_r  = min(0, λ_min( A_r))
//!  xᵀ(−A_r − λ̂'_r I)x + λ̂'_r Σz − a_rᵀy ≤ −b_r,  λ̂'_r = min(0, λ_min(−A_r))
//! ```
//!
//! The objective adds `⟨Σφ_r A_r + d(γ'), xxᵀ⟩ + Σφ_r(a_rᵀy − b_r) − γ'ᵀz`
//! to the generation cost, which leaves it unchanged on `z = x²`.

use crate::error::{Error, Result};
use crate::linalg::{eigen, is_psd, min_eigenvalue, SymMatrix};
use crate::network::OpfQcqp;
use crate::sdp::{voltage_block, SdpSolution};

/// Multipliers `φ` (one per balance row), net magnitude multipliers `γ'`
/// (length 2n, the per-bus value repeated for the `e` and `f` halves) and the
/// clamped eigenvalue shifts of both halves of every balance row.
#[derive(Clone, Debug, PartialEq)]
pub struct ReformParams {
    pub phi: Vec<f64>,
    pub gamma: Vec<f64>,
    pub shift_pos: Vec<f64>,
    pub shift_neg: Vec<f64>,
}

impl ReformParams {
    /// `gamma_bus` holds `γ̄_i − γ̲_i` per bus.
    pub fn new(opf: &OpfQcqp, phi: Vec<f64>, gamma_bus: &[f64]) -> Result<Self> {
        let n = opf.n;
        if phi.len() != 2 * n || gamma_bus.len() != n {
            return Err(Error::Dimension(format!("params ({}, {}) for {n} buses", phi.len(), gamma_bus.len())));
        }
        let mut shift_pos = Vec::with_capacity(2 * n);
        let mut shift_neg = Vec::with_capacity(2 * n);
        for con in &opf.constraints {
            let (lo, hi) = extreme_eigenvalues(&con.a)?;
            shift_pos.push(lo.min(0.0));
            shift_neg.push((-hi).min(0.0));
        }
        let gamma = gamma_bus.iter().chain(gamma_bus).copied().collect();
        Ok(Self { phi, gamma, shift_pos, shift_neg })
    }

    pub fn from_sdp(opf: &OpfQcqp, sol: &SdpSolution) -> Result<Self> {
        Self::new(opf, sol.phi.clone(), &sol.gamma_net())
    }

    /// Zero multipliers: the plain shifted relaxation.
    pub fn zero(opf: &OpfQcqp) -> Result<Self> {
        Self::new(opf, vec![0.0; 2 * opf.n], &vec![0.0; opf.n])
    }

    pub fn gamma_bus(&self) -> &[f64] {
        &self.gamma[..self.gamma.len() / 2]
    }

    /// `Σφ_r A_r + d(γ')`.
    pub fn hessian(&self, opf: &OpfQcqp) -> SymMatrix {
        voltage_block(opf, &self.phi, self.gamma_bus())
    }

    /// Checks `Σφ_r A_r + d(γ') ⪰ −tol·I`.
    pub fn certify(&self, opf: &OpfQcqp, tol: f64) -> Result<()> {
        if self.phi.len() != 2 * opf.n || self.gamma.len() != 2 * opf.n {
            return Err(Error::Dimension(format!("params ({}, {}) for {} buses", self.phi.len(), self.gamma.len(), opf.n)));
        }
        if self.shift_pos.iter().chain(&self.shift_neg).any(|&l| l > 0.0) {
            return Err(Error::Uncertified("positive eigenvalue shift".into()));
        }
        let q = self.hessian(opf);
        if !is_psd(&q, tol) {
            let lmin = min_eigenvalue(&q).unwrap_or(f64::NAN);
            return Err(Error::Uncertified(format!("λ_min(Σφ A + d(γ')) = {lmin:e}")));
        }
        Ok(())
    }
}

fn extreme_eigenvalues(a: &SymMatrix) -> Result<(f64, f64)> {
    let (vals, _) = eigen(a)?;
    Ok((vals[0], vals[vals.len() - 1]))
}

/// One convexified half of a balance row:
/// `xᵀ P x + shift·Σz + lin·y ≤ rhs` with `P = sign·A_r − shift·I ⪰ 0`.
#[derive(Clone, Debug)]
pub struct ShiftedConstraint {
    pub row: usize,
    pub sign: f64,
    pub shift: f64,
    pub p: SymMatrix,
    pub lin: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl ShiftedConstraint {
    pub fn eval(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        self.p.quad(x) + self.shift * z.iter().sum::<f64>() + self.lin.iter().map(|&(j, v)| v * y[j]).sum::<f64>() - self.rhs
    }
}

/// Both shifted halves of every balance row, in row order (`+` then `−`).
pub fn convexify_constraints(opf: &OpfQcqp, params: &ReformParams) -> Result<Vec<ShiftedConstraint>> {
    let mut out = Vec::with_capacity(2 * opf.constraints.len());
    for (r, con) in opf.constraints.iter().enumerate() {
        for (sign, shift) in [(1.0, params.shift_pos[r]), (-1.0, params.shift_neg[r])] {
            let mut p = con.a.scaled(sign);
            p.add_diag(-shift);
            if !is_psd(&p, 1e-9) && !is_psd(&p, 1e-7) {
                return Err(Error::Uncertified(format!("shifted Hessian of row {r} (sign {sign})")));
            }
            out.push(ShiftedConstraint {
                row: r,
                sign,
                shift,
                p,
                lin: con.lin.iter().map(|&(j, v)| (j, sign * v)).collect(),
                rhs: sign * con.rhs,
            });
        }
    }
    Ok(out)
}

/// `h_{φ,γ}(x, y, z) = xᵀQx + Σ C_j p_j² + lin·y + zlin·z + constant`.
#[derive(Clone, Debug)]
pub struct ParamObjective {
    pub q: SymMatrix,
    pub quad_y: Vec<f64>,
    pub lin_y: Vec<f64>,
    pub lin_z: Vec<f64>,
    pub constant: f64,
}

impl ParamObjective {
    pub fn eval(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let mut v = self.constant + self.q.quad(x);
        for (j, &c) in self.quad_y.iter().enumerate() {
            v += c * y[j] * y[j];
        }
        v += self.lin_y.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        v += self.lin_z.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        v
    }
}

pub fn build_objective(opf: &OpfQcqp, params: &ReformParams, psd_tol: f64) -> Result<ParamObjective> {
    params.certify(opf, psd_tol)?;
    let n = opf.n;
    let m = opf.m;
    let mut q = params.hessian(opf);
    // absorb a tiny certified negative part through γ' so that Q is exactly PSD
    // while keeping the objective identical on z = x²
    let mut gamma = params.gamma.clone();
    let lmin = min_eigenvalue(&q)?;
    if lmin < 0.0 {
        let s = -lmin;
        q.add_diag(s);
        gamma.iter_mut().for_each(|g| *g += s);
    }
    debug_assert_eq!(gamma.len(), 2 * n);
    let mut lin_y = vec![0.0; 2 * m];
    lin_y[..m].copy_from_slice(&opf.cost_lin);
    let mut constant = opf.cost_const;
    for (r, con) in opf.constraints.iter().enumerate() {
        for &(j, v) in &con.lin {
            lin_y[j] += params.phi[r] * v;
        }
        constant -= params.phi[r] * con.rhs;
    }
    let lin_z = gamma.iter().map(|g| -g).collect();
    Ok(ParamObjective { q, quad_y: opf.cost_quad.clone(), lin_y, lin_z, constant })
}

/// `z_i ≤ slope·x_i + intercept`, the secant of `x_i²` over `[ℓ_i, u_i]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McCormickRow {
    pub i: usize,
    pub slope: f64,
    pub intercept: f64,
}

pub fn mccormick_rows(lower: &[f64], upper: &[f64]) -> Result<Vec<McCormickRow>> {
    if lower.len() != upper.len() {
        return Err(Error::Dimension("bound vectors differ in length".into()));
    }
    lower
        .iter()
        .zip(upper)
        .enumerate()
        .map(|(i, (&l, &u))| {
            if !(l.is_finite() && u.is_finite()) || l > u {
                return Err(Error::InvalidData(format!("bad bounds [{l}, {u}] on x_{i}")));
            }
            Ok(McCormickRow { i, slope: u + l, intercept: -u * l })
        })
        .collect()
}

/// The convex program solved at a branch-and-bound node.
#[derive(Clone, Debug)]
pub struct ConvexRelaxation {
    pub n: usize,
    pub m: usize,
    pub objective: ParamObjective,
    pub shifted: Vec<ShiftedConstraint>,
    pub mccormick: Vec<McCormickRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub vmin_sq: Vec<f64>,
    pub vmax_sq: Vec<f64>,
    pub y_lo: Vec<f64>,
    pub y_hi: Vec<f64>,
}

/// Root box `±√v̄` on every coordinate.
pub fn root_bounds(opf: &OpfQcqp) -> (Vec<f64>, Vec<f64>) {
    let n = opf.n;
    let mut u = vec![0.0; 2 * n];
    for i in 0..n {
        u[i] = opf.vmax_sq[i].sqrt();
        u[i + n] = u[i];
    }
    (u.iter().map(|v| -v).collect(), u)
}

/// Pre-computed pieces shared by all nodes of one run.
#[derive(Clone, Debug)]
pub struct ReformTemplate {
    pub objective: ParamObjective,
    pub shifted: Vec<ShiftedConstraint>,
}

impl ReformTemplate {
    pub fn new(opf: &OpfQcqp, params: &ReformParams, psd_tol: f64) -> Result<Self> {
        Ok(Self { objective: build_objective(opf, params, psd_tol)?, shifted: convexify_constraints(opf, params)? })
    }

    pub fn at(&self, opf: &OpfQcqp, lower: &[f64], upper: &[f64]) -> Result<ConvexRelaxation> {
        if lower.len() != opf.dim_x() || upper.len() != opf.dim_x() {
            return Err(Error::Dimension("node bounds do not match 2n".into()));
        }
        Ok(ConvexRelaxation {
            n: opf.n,
            m: opf.m,
            objective: self.objective.clone(),
            shifted: self.shifted.clone(),
            mccormick: mccormick_rows(lower, upper)?,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            vmin_sq: opf.vmin_sq.clone(),
            vmax_sq: opf.vmax_sq.clone(),
            y_lo: opf.y_lo.clone(),
            y_hi: opf.y_hi.clone(),
        })
    }
}

pub fn build_relaxation(opf: &OpfQcqp, params: &ReformParams, lower: &[f64], upper: &[f64], psd_tol: f64) -> Result<ConvexRelaxation> {
    ReformTemplate::new(opf, params, psd_tol)?.at(opf, lower, upper)
}

impl ConvexRelaxation {
    /// Largest constraint violation of `(x, y, z)`.
    pub fn violation(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let n = self.n;
        let mut v = 0.0f64;
        for c in &self.shifted {
            v = v.max(c.eval(x, y, z));
        }
        for r in &self.mccormick {
            v = v.max(z[r.i] - r.slope * x[r.i] - r.intercept);
            v = v.max(x[r.i] * x[r.i] - z[r.i]);
        }
        for i in 0..n {
            let s = z[i] + z[i + n];
            v = v.max(self.vmin_sq[i] - s).max(s - self.vmax_sq[i]);
        }
        for i in 0..2 * n {
            v = v.max(self.lower[i] - x[i]).max(x[i] - self.upper[i]);
        }
        for j in 0..2 * self.m {
            v = v.max(self.y_lo[j] - y[j]).max(y[j] - self.y_hi[j]);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mccormick_secant() {
        let rows = mccormick_rows(&[-1.0, 0.5], &[2.0, 0.5]).unwrap();
        assert_eq!(rows[0], McCormickRow { i: 0, slope: 1.0, intercept: 2.0 });
        // degenerate interval pins z = x²
        assert_eq!(rows[1].slope * 0.5 + rows[1].intercept, 0.25);
        assert!(mccormick_rows(&[1.0], &[0.0]).is_err());
        assert!(mccormick_rows(&[f64::NEG_INFINITY], &[0.0]).is_err());
    }
}
