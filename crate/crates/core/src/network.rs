//! Rectangular-coordinate AC OPF as a quadratically constrained program.
//!
//! With `x = (e, f) ∈ R^{2n}` (real and imaginary bus voltages) and
//! `y = (p, q) ∈ R^{2m}` (unit injections), every bus contributes two balance
//! rows `xᵀA_r x + a_rᵀy = b_r`: the active row first for all buses, then
//! the reactive rows. `a_r` holds −1 for each unit at the bus and
//! `b_r = −demand`.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::matpower::Network;

/// Bus admittance matrix `Y = G + jB`.
#[derive(Clone, Debug)]
pub struct Admittance {
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

pub fn build_admittance(net: &Network) -> Admittance {
    let n = net.n_bus();
    let mut y = DMatrix::<Complex<f64>>::zeros(n, n);
    for br in &net.branches {
        let ys = Complex::new(1.0, 0.0) / Complex::new(br.r, br.x);
        let tap = Complex::from_polar(br.ratio, br.shift_deg.to_radians());
        let ytt = ys + Complex::new(0.0, br.b / 2.0);
        let yff = ytt / (tap * tap.conj());
        let yft = -ys / tap.conj();
        let ytf = -ys / tap;
        y[(br.from, br.from)] += yff;
        y[(br.to, br.to)] += ytt;
        y[(br.from, br.to)] += yft;
        y[(br.to, br.from)] += ytf;
    }
    for (i, bus) in net.buses.iter().enumerate() {
        y[(i, i)] += Complex::new(bus.gs, bus.bs);
    }
    Admittance { g: y.map(|c| c.re), b: y.map(|c| c.im) }
}

/// `⟨A, xxᵀ⟩ + Σ lin·y = rhs`.
#[derive(Clone, Debug)]
pub struct QuadConstraint {
    pub a: SymMatrix,
    /// Sparse linear coefficients on `y`.
    pub lin: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl QuadConstraint {
    pub fn lin_dot(&self, y: &[f64]) -> f64 {
        self.lin.iter().map(|&(j, v)| v * y[j]).sum()
    }

    /// Dense linear coefficient vector of length `len`.
    pub fn lin_dense(&self, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        for &(j, c) in &self.lin {
            v[j] += c;
        }
        v
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.a.quad(x) + self.lin_dot(y) - self.rhs
    }
}

/// The nonconvex OPF program.
#[derive(Clone, Debug)]
pub struct OpfQcqp {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub reference: usize,
    pub constraints: Vec<QuadConstraint>,
    /// Squared voltage magnitude bounds per bus.
    pub vmin_sq: Vec<f64>,
    pub vmax_sq: Vec<f64>,
    /// Bounds on `y = (p, q)`, length `2m`.
    pub y_lo: Vec<f64>,
    pub y_hi: Vec<f64>,
    /// Per-unit quadratic and linear cost on `p`, length `m`.
    pub cost_quad: Vec<f64>,
    pub cost_lin: Vec<f64>,
    /// Sum of constant cost terms.
    pub cost_const: f64,
}

/// A candidate OPF point.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

// Adds the bilinear term v·x_r·x_c to the symmetric form.
fn term(a: &mut SymMatrix, r: usize, c: usize, v: f64) {
    a.add_sym(r, c, if r == c { v } else { 0.5 * v });
}

pub fn assemble_opf(net: &Network) -> Result<OpfQcqp> {
    let n = net.n_bus();
    let m = net.n_units();
    if n == 0 {
        return Err(Error::InvalidData("network has no buses".into()));
    }
    let adm = build_admittance(net);
    let (g, b) = (&adm.g, &adm.b);
    let mut constraints = Vec::with_capacity(2 * n);
    for i in 0..n {
        // P_i = e_i Σ(G e_k − B f_k) + f_i Σ(G f_k + B e_k)
        let mut a = SymMatrix::zeros(2 * n);
        for k in 0..n {
            let (gik, bik) = (g[(i, k)], b[(i, k)]);
            if gik == 0.0 && bik == 0.0 {
                continue;
            }
            term(&mut a, i, k, gik);
            term(&mut a, i, n + k, -bik);
            term(&mut a, n + i, n + k, gik);
            term(&mut a, n + i, k, bik);
        }
        let lin = net.units.iter().enumerate().filter(|(_, u)| u.bus == i).map(|(j, _)| (j, -1.0)).collect();
        constraints.push(QuadConstraint { a, lin, rhs: -net.buses[i].pd });
    }
    for i in 0..n {
        // Q_i = f_i Σ(G e_k − B f_k) − e_i Σ(G f_k + B e_k)
        let mut a = SymMatrix::zeros(2 * n);
        for k in 0..n {
            let (gik, bik) = (g[(i, k)], b[(i, k)]);
            if gik == 0.0 && bik == 0.0 {
                continue;
            }
            term(&mut a, n + i, k, gik);
            term(&mut a, n + i, n + k, -bik);
            term(&mut a, i, n + k, -gik);
            term(&mut a, i, k, -bik);
        }
        let lin = net.units.iter().enumerate().filter(|(_, u)| u.bus == i).map(|(j, _)| (m + j, -1.0)).collect();
        constraints.push(QuadConstraint { a, lin, rhs: -net.buses[i].qd });
    }
    let mut y_lo = vec![0.0; 2 * m];
    let mut y_hi = vec![0.0; 2 * m];
    for (j, u) in net.units.iter().enumerate() {
        y_lo[j] = u.pmin;
        y_hi[j] = u.pmax;
        y_lo[m + j] = u.qmin;
        y_hi[m + j] = u.qmax;
    }
    Ok(OpfQcqp {
        name: net.name.clone(),
        n,
        m,
        reference: net.reference,
        constraints,
        vmin_sq: net.buses.iter().map(|b| b.vmin * b.vmin).collect(),
        vmax_sq: net.buses.iter().map(|b| b.vmax * b.vmax).collect(),
        y_lo,
        y_hi,
        cost_quad: net.units.iter().map(|u| u.cost.c2).collect(),
        cost_lin: net.units.iter().map(|u| u.cost.c1).collect(),
        cost_const: net.units.iter().map(|u| u.cost.c0).sum(),
    })
}

impl OpfQcqp {
    pub fn dim_x(&self) -> usize {
        2 * self.n
    }

    pub fn dim_y(&self) -> usize {
        2 * self.m
    }

    /// Generation cost h(p) including constant terms.
    pub fn objective(&self, y: &[f64]) -> f64 {
        let mut v = self.cost_const;
        for j in 0..self.m {
            v += self.cost_quad[j] * y[j] * y[j] + self.cost_lin[j] * y[j];
        }
        v
    }

    /// Balance residuals `⟨A_r, xxᵀ⟩ + a_rᵀy − b_r`.
    pub fn residual(&self, p: &Point) -> Result<Vec<f64>> {
        if p.x.len() != self.dim_x() || p.y.len() != self.dim_y() {
            return Err(Error::Dimension(format!("point ({}, {}) vs problem ({}, {})", p.x.len(), p.y.len(), self.dim_x(), self.dim_y())));
        }
        Ok(self.constraints.iter().map(|c| c.eval(&p.x, &p.y)).collect())
    }

    /// Largest violation over balance rows, magnitude bounds and injection boxes.
    pub fn max_violation(&self, p: &Point) -> Result<f64> {
        let mut v = self.residual(p)?.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        for i in 0..self.n {
            let mag = p.x[i] * p.x[i] + p.x[i + self.n] * p.x[i + self.n];
            v = v.max(self.vmin_sq[i] - mag).max(mag - self.vmax_sq[i]);
        }
        for j in 0..self.dim_y() {
            v = v.max(self.y_lo[j] - p.y[j]).max(p.y[j] - self.y_hi[j]);
        }
        Ok(v)
    }

    /// Bus indices r for the active (r < n) and reactive rows.
    pub fn balance_bus(&self, r: usize) -> usize {
        r % self.n
    }
}
