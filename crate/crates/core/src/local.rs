//! Local solver used for incumbents: a bound-constrained augmented Lagrangian
//! over `w = (x, y, σ)` with `σ_i = e_i² + f_i²` carried as a slack inside
//! `[v̲_i, v̄_i]`, followed by a minimum-norm Gauss–Newton polish.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::{OpfQcqp, Point};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalSettings {
    pub outer_iter: usize,
    pub inner_iter: usize,
    /// Componentwise balance-residual target of the returned point.
    pub residual_tol: f64,
    pub bound_tol: f64,
}

impl Default for LocalSettings {
    fn default() -> Self {
        Self { outer_iter: 40, inner_iter: 60, residual_tol: 1e-6, bound_tol: 1e-8 }
    }
}

struct Problem<'a> {
    opf: &'a OpfQcqp,
    lo: Vec<f64>,
    hi: Vec<f64>,
    fscale: f64,
}

impl<'a> Problem<'a> {
    fn new(opf: &'a OpfQcqp) -> Self {
        let n = opf.n;
        let dx = 2 * n;
        let dy = 2 * opf.m;
        let mut lo = Vec::with_capacity(dx + dy + n);
        let mut hi = Vec::with_capacity(dx + dy + n);
        for k in 0..dx {
            let r = opf.vmax_sq[k % n].sqrt();
            lo.push(-r);
            hi.push(r);
        }
        lo.extend(&opf.y_lo);
        hi.extend(&opf.y_hi);
        lo.extend(&opf.vmin_sq);
        hi.extend(&opf.vmax_sq);
        // fix the rotation: f_ref = 0, e_ref ≥ 0
        lo[n + opf.reference] = 0.0;
        hi[n + opf.reference] = 0.0;
        lo[opf.reference] = 0.0;
        let mut fscale = 1.0f64;
        for j in 0..opf.m {
            fscale = fscale.max(opf.cost_lin[j].abs()).max(opf.cost_quad[j].abs());
        }
        Self { opf, lo, hi, fscale }
    }

    fn dims(&self) -> (usize, usize, usize) {
        (2 * self.opf.n, 2 * self.opf.m, self.opf.n)
    }

    fn split<'w>(&self, w: &'w [f64]) -> (&'w [f64], &'w [f64], &'w [f64]) {
        let (dx, dy, _) = self.dims();
        (&w[..dx], &w[dx..dx + dy], &w[dx + dy..])
    }

    fn project(&self, w: &mut [f64]) {
        for (k, v) in w.iter_mut().enumerate() {
            *v = v.clamp(self.lo[k], self.hi[k]);
        }
    }

    fn objective(&self, w: &[f64]) -> f64 {
        let (_, y, _) = self.split(w);
        (self.opf.objective(y) - self.opf.cost_const) / self.fscale
    }

    fn objective_grad(&self, w: &[f64]) -> DVector<f64> {
        let (dx, _, _) = self.dims();
        let (_, y, _) = self.split(w);
        let mut g = DVector::zeros(w.len());
        for j in 0..self.opf.m {
            g[dx + j] = (2.0 * self.opf.cost_quad[j] * y[j] + self.opf.cost_lin[j]) / self.fscale;
        }
        g
    }

    /// Balance rows followed by `e_i² + f_i² − σ_i`.
    fn constraints(&self, w: &[f64]) -> DVector<f64> {
        let n = self.opf.n;
        let (x, y, s) = self.split(w);
        let mut c = DVector::zeros(3 * n);
        for (r, con) in self.opf.constraints.iter().enumerate() {
            c[r] = con.eval(x, y);
        }
        for i in 0..n {
            c[2 * n + i] = x[i] * x[i] + x[i + n] * x[i + n] - s[i];
        }
        c
    }

    fn jacobian(&self, w: &[f64]) -> DMatrix<f64> {
        let n = self.opf.n;
        let (dx, dy, _) = self.dims();
        let (x, _, _) = self.split(w);
        let mut j = DMatrix::zeros(3 * n, w.len());
        for (r, con) in self.opf.constraints.iter().enumerate() {
            let ax = con.a.mul_vec(x);
            for k in 0..dx {
                j[(r, k)] = 2.0 * ax[k];
            }
            for &(k, v) in &con.lin {
                j[(r, dx + k)] += v;
            }
        }
        for i in 0..n {
            j[(2 * n + i, i)] = 2.0 * x[i];
            j[(2 * n + i, i + n)] = 2.0 * x[i + n];
            j[(2 * n + i, dx + dy + i)] = -1.0;
        }
        j
    }

    /// Hessian of `Σ_k μ_k c_k`.
    fn constraint_hessian(&self, mult: &DVector<f64>) -> DMatrix<f64> {
        let n = self.opf.n;
        let dim = self.lo.len();
        let mut h = DMatrix::zeros(dim, dim);
        for (r, con) in self.opf.constraints.iter().enumerate() {
            if mult[r] != 0.0 {
                let a = con.a.as_matrix();
                for c in 0..2 * n {
                    for k in 0..2 * n {
                        h[(k, c)] += 2.0 * mult[r] * a[(k, c)];
                    }
                }
            }
        }
        for i in 0..n {
            h[(i, i)] += 2.0 * mult[2 * n + i];
            h[(i + n, i + n)] += 2.0 * mult[2 * n + i];
        }
        h
    }

    fn objective_hessian(&self) -> DMatrix<f64> {
        let dim = self.lo.len();
        let (dx, _, _) = self.dims();
        let mut h = DMatrix::zeros(dim, dim);
        for j in 0..self.opf.m {
            h[(dx + j, dx + j)] = 2.0 * self.opf.cost_quad[j] / self.fscale;
        }
        h
    }

    fn at_bound(&self, w: &[f64], g: &DVector<f64>, k: usize) -> bool {
        let eps = 1e-12 * (1.0 + w[k].abs());
        (w[k] <= self.lo[k] + eps && g[k] > 0.0) || (w[k] >= self.hi[k] - eps && g[k] < 0.0) || self.hi[k] - self.lo[k] <= eps
    }

    fn projected_gradient_norm(&self, w: &[f64], g: &DVector<f64>) -> f64 {
        let mut t: Vec<f64> = w.iter().zip(g.iter()).map(|(a, b)| a - b).collect();
        self.project(&mut t);
        t.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn augmented(p: &Problem, w: &[f64], lam: &DVector<f64>, mu: f64) -> f64 {
    let c = p.constraints(w);
    p.objective(w) + lam.dot(&c) + 0.5 * mu * c.norm_squared()
}

/// Damped projected Newton on the augmented Lagrangian.
fn inner(p: &Problem, w: &mut Vec<f64>, lam: &DVector<f64>, mu: f64, iters: usize, tol: f64) {
    let h_obj = p.objective_hessian();
    for _ in 0..iters {
        let c = p.constraints(w);
        let jac = p.jacobian(w);
        let mult = lam + &c * mu;
        let g = p.objective_grad(w) + jac.transpose() * &mult;
        if p.projected_gradient_norm(w, &g) <= tol {
            return;
        }
        let free: Vec<usize> = (0..w.len()).filter(|&k| !p.at_bound(w, &g, k)).collect();
        if free.is_empty() {
            return;
        }
        let h = &h_obj + p.constraint_hessian(&mult) + jac.transpose() * &jac * mu;
        let hf = h.select_rows(&free).select_columns(&free);
        let gf = DVector::from_iterator(free.len(), free.iter().map(|&k| g[k]));
        let scale = (0..free.len()).fold(1e-12f64, |a, k| a.max(hf[(k, k)].abs()));
        let mut shift = 0.0;
        let dir = loop {
            let mut m = hf.clone();
            for k in 0..free.len() {
                m[(k, k)] += shift;
            }
            if let Some(ch) = m.cholesky() {
                break ch.solve(&(-&gf));
            }
            shift = if shift == 0.0 { 1e-8 * scale } else { shift * 10.0 };
            if shift > 1e12 * scale {
                return;
            }
        };
        let f0 = augmented(p, w, lam, mu);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = w.clone();
            for (idx, &k) in free.iter().enumerate() {
                trial[k] += alpha * dir[idx];
            }
            p.project(&mut trial);
            let decrease: f64 = trial.iter().zip(w.iter()).zip(g.iter()).map(|((t, a), gk)| gk * (t - a)).sum();
            if augmented(p, &trial, lam, mu) <= f0 + 1e-4 * decrease.min(0.0) {
                *w = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return;
        }
    }
}

/// Minimum-norm Gauss–Newton on `c(w) = 0`. A variable on a bound moves
/// only when the step leaves it inside.
fn polish(p: &Problem, w: &mut Vec<f64>, iters: usize) {
    for _ in 0..iters {
        let c = p.constraints(w);
        if c.amax() <= 1e-13 {
            return;
        }
        let jac = p.jacobian(w);
        let mut free: Vec<usize> = (0..w.len()).filter(|&k| p.hi[k] > p.lo[k]).collect();
        let mut step = None;
        while !free.is_empty() {
            let jf = jac.select_columns(&free);
            let mut gram = &jf * jf.transpose();
            let reg = 1e-14 * (1.0 + gram.diagonal().amax());
            for k in 0..gram.nrows() {
                gram[(k, k)] += reg;
            }
            let Some(ch) = gram.cholesky() else { return };
            let s = jf.transpose() * ch.solve(&c);
            // w − s must not leave the box for variables already on it
            let eps = |k: usize| 1e-10 * (1.0 + w[k].abs());
            let blocked: Vec<usize> = (0..free.len())
                .filter(|&idx| {
                    let k = free[idx];
                    (w[k] <= p.lo[k] + eps(k) && s[idx] > 0.0) || (w[k] >= p.hi[k] - eps(k) && s[idx] < 0.0)
                })
                .collect();
            if blocked.is_empty() {
                step = Some(s);
                break;
            }
            free = free.iter().enumerate().filter(|(idx, _)| !blocked.contains(idx)).map(|(_, &k)| k).collect();
        }
        let Some(step) = step else { return };
        let before = c.amax();
        let mut alpha = 1.0;
        loop {
            let mut trial = w.clone();
            for (idx, &k) in free.iter().enumerate() {
                trial[k] -= alpha * step[idx];
            }
            p.project(&mut trial);
            if p.constraints(&trial).amax() < before {
                *w = trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return;
            }
        }
    }
}

/// Rotates all voltages so that `f_ref = 0` and `e_ref ≥ 0`.
pub fn rotate_to_reference(opf: &OpfQcqp, x: &mut [f64]) {
    let n = opf.n;
    let r = opf.reference;
    let (e, f) = (x[r], x[r + n]);
    let norm = e.hypot(f);
    if norm == 0.0 {
        return;
    }
    let (c, s) = (e / norm, -f / norm);
    for i in 0..n {
        let (a, b) = (x[i], x[i + n]);
        x[i] = c * a - s * b;
        x[i + n] = s * a + c * b;
    }
}

/// Checks residuals, injection boxes and magnitude bounds.
pub fn verify(opf: &OpfQcqp, pt: &Point, settings: &LocalSettings) -> Result<()> {
    let res = opf.residual(pt)?;
    let worst = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    if !(worst <= settings.residual_tol) {
        return Err(Error::Infeasible(format!("balance residual {worst:e}")));
    }
    let n = opf.n;
    for i in 0..n {
        let v = pt.x[i] * pt.x[i] + pt.x[i + n] * pt.x[i + n];
        if v < opf.vmin_sq[i] - settings.bound_tol || v > opf.vmax_sq[i] + settings.bound_tol {
            return Err(Error::Infeasible(format!("voltage magnitude at bus {i}")));
        }
    }
    for (j, &v) in pt.y.iter().enumerate() {
        if v < opf.y_lo[j] - settings.bound_tol || v > opf.y_hi[j] + settings.bound_tol {
            return Err(Error::Infeasible(format!("injection {j} outside its box")));
        }
    }
    Ok(())
}

/// Searches for a feasible point near `start`, lowering the cost on the way.
pub fn local_feasible(opf: &OpfQcqp, start: &Point, settings: &LocalSettings) -> Result<Point> {
    let n = opf.n;
    if start.x.len() != 2 * n || start.y.len() != 2 * opf.m {
        return Err(Error::Dimension("start point does not match the network".into()));
    }
    let p = Problem::new(opf);
    let mut x0 = start.x.clone();
    rotate_to_reference(opf, &mut x0);
    let mut w: Vec<f64> = x0.iter().chain(&start.y).copied().collect();
    w.extend((0..n).map(|i| x0[i] * x0[i] + x0[i + n] * x0[i + n]));
    p.project(&mut w);

    // a polished copy of the start competes with the augmented-Lagrangian result
    let mut direct = w.clone();
    polish(&p, &mut direct, 30);

    let mut lam = multiplier_estimate(&p, &w);
    let mut mu = 100.0;
    let mut prev = p.constraints(&w).amax();
    for outer in 0..settings.outer_iter {
        let tol = (1e-3 / (outer as f64 + 1.0).powi(2)).max(1e-10);
        inner(&p, &mut w, &lam, mu, settings.inner_iter, tol);
        let c = p.constraints(&w);
        let viol = c.amax();
        log::trace!("local: outer {outer} viol {viol:e} mu {mu:e} obj {}", p.objective(&w));
        if viol <= 1e-10 && tol <= 1e-8 {
            break;
        }
        lam += &c * mu;
        if viol > 0.25 * prev {
            mu = (mu * 10.0).min(1e10);
        }
        prev = viol;
    }
    polish(&p, &mut w, 30);

    let (dx, dy, _) = p.dims();
    let to_point = |w: &[f64]| Point { x: w[..dx].to_vec(), y: w[dx..dx + dy].to_vec() };
    let mut best: Option<Point> = None;
    let mut last_err = None;
    for cand in [to_point(&w), to_point(&direct)] {
        match verify(opf, &cand, settings) {
            Ok(()) => {
                if best.as_ref().is_none_or(|b| opf.objective(&cand.y) < opf.objective(&b.y)) {
                    best = Some(cand);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("no candidate verified and no error recorded"))
}

/// Least-squares `λ` minimizing `‖∇f + Jᵀλ‖` over variables off their bounds.
fn multiplier_estimate(p: &Problem, w: &[f64]) -> DVector<f64> {
    let rows = 3 * p.opf.n;
    let jac = p.jacobian(w);
    let g = p.objective_grad(w);
    let free: Vec<usize> = (0..w.len()).filter(|&k| p.hi[k] - p.lo[k] > 1e-12 && w[k] > p.lo[k] && w[k] < p.hi[k]).collect();
    if free.is_empty() {
        return DVector::zeros(rows);
    }
    let jf = jac.select_columns(&free);
    let gf = DVector::from_iterator(free.len(), free.iter().map(|&k| g[k]));
    let mut gram = &jf * jf.transpose();
    let reg = 1e-10 * (1.0 + gram.diagonal().amax());
    for k in 0..rows {
        gram[(k, k)] += reg;
    }
    match gram.cholesky() {
        Some(ch) => -ch.solve(&(&jf * gf)),
        None => DVector::zeros(rows),
    }
}
