//! Homogeneous self-dual interior-point engine for
//!
//! ```text
//!     minimize    cᵀx
//!     subject to  A x = b
//!                 h − G x = s ∈ K
//! ```
//!
//! where `K` is a product of a nonnegative orthant, second-order cones and
//! positive semidefinite cones (stored as `svec`, lower triangle by columns
//! with off-diagonals scaled by √2). Nesterov–Todd scaling, Mehrotra
//! predictor–corrector.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{eigen, SymMatrix};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Cone layout of the slack vector `s`, in this order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cones {
    pub nonneg: usize,
    pub soc: Vec<usize>,
    pub psd: Vec<usize>,
}

impl Cones {
    pub fn dim(&self) -> usize {
        self.nonneg + self.soc.iter().sum::<usize>() + self.psd.iter().map(|&d| svec_len(d)).sum::<usize>()
    }

    /// Barrier degree ν.
    pub fn degree(&self) -> usize {
        self.nonneg + self.soc.len() + self.psd.iter().sum::<usize>()
    }

    fn blocks(&self) -> Vec<Block> {
        let mut out = Vec::new();
        let mut off = 0;
        if self.nonneg > 0 {
            out.push(Block { kind: Kind::Nonneg, off, len: self.nonneg });
            off += self.nonneg;
        }
        for &k in &self.soc {
            out.push(Block { kind: Kind::Soc, off, len: k });
            off += k;
        }
        for &d in &self.psd {
            out.push(Block { kind: Kind::Psd(d), off, len: svec_len(d) });
            off += svec_len(d);
        }
        out
    }
}

pub fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Position of entry (i, j) (any order) inside `svec` of a d×d matrix.
pub fn svec_index(d: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    c * d - c * c.saturating_sub(1) / 2 + (r - c)
}

/// Coefficient that multiplies matrix entry (i, j) when stored in `svec`.
pub fn svec_scale(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        SQRT2
    }
}

pub fn mat_to_svec(m: &DMatrix<f64>, out: &mut [f64]) {
    let d = m.nrows();
    let mut k = 0;
    for j in 0..d {
        out[k] = m[(j, j)];
        k += 1;
        for i in j + 1..d {
            out[k] = SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            k += 1;
        }
    }
}

pub fn svec_to_mat(v: &[f64], d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..d {
            let x = v[k] / SQRT2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

/// Sparse matrix stored as rows of (column, value).
#[derive(Clone, Debug, Default)]
pub struct SparseRows {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<(usize, f64)>) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect()
    }

    fn mul_t(&self, y: &[f64], out: &mut [f64]) {
        for (r, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for &(j, v) in r {
                    out[j] += v * yi;
                }
            }
        }
    }
}

/// Problem data. Rows of `g` follow the layout of `cones`.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub c: Vec<f64>,
    pub a: SparseRows,
    pub b: Vec<f64>,
    pub g: SparseRows,
    pub h: Vec<f64>,
    pub cones: Cones,
}

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub max_iter: usize,
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub step_fraction: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self { max_iter: 200, feas_tol: 1e-8, gap_tol: 1e-8, step_fraction: 0.98 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    NumericalError,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub iterations: usize,
}

impl ConicSolution {
    /// Relative duality gap.
    pub fn rel_gap(&self) -> f64 {
        (self.primal_obj - self.dual_obj).abs() / (1.0 + self.primal_obj.abs().min(self.dual_obj.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Nonneg,
    Soc,
    Psd(usize),
}

#[derive(Clone, Copy, Debug)]
struct Block {
    kind: Kind,
    off: usize,
    len: usize,
}

/// Nesterov–Todd scaling of one block: `W z = W⁻ᵀ s = λ`.
enum Scaling {
    Nonneg { w: Vec<f64> },
    Soc { eta: f64, wb: Vec<f64> },
    Psd { g: DMatrix<f64>, ginv: DMatrix<f64> },
}

fn soc_jnorm(v: &[f64]) -> f64 {
    let t = v[0] * v[0] - v[1..].iter().map(|x| x * x).sum::<f64>();
    t.max(0.0).sqrt()
}

// H(w) v with H(w) = [[w0, w1ᵀ], [w1, I + w1 w1ᵀ/(1+w0)]] for unit-J-norm w.
fn soc_hmul(wb: &[f64], sign: f64, v: &[f64], out: &mut [f64]) {
    let w0 = wb[0];
    let mut dot = 0.0;
    for i in 1..v.len() {
        dot += sign * wb[i] * v[i];
    }
    out[0] = w0 * v[0] + dot;
    let coef = v[0] + dot / (1.0 + w0);
    for i in 1..v.len() {
        out[i] = v[i] + coef * sign * wb[i];
    }
}

impl Scaling {
    fn compute(kind: Kind, s: &[f64], z: &[f64]) -> Option<Self> {
        match kind {
            Kind::Nonneg => {
                let w = s.iter().zip(z).map(|(a, b)| (a / b).sqrt()).collect::<Vec<_>>();
                if w.iter().all(|v| v.is_finite() && *v > 0.0) {
                    Some(Scaling::Nonneg { w })
                } else {
                    None
                }
            }
            Kind::Soc => {
                let sn = soc_jnorm(s);
                let zn = soc_jnorm(z);
                if !(sn > 0.0 && zn > 0.0) {
                    return None;
                }
                let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / zn).collect();
                let dot: f64 = sb.iter().zip(&zb).map(|(a, b)| a * b).sum();
                let gamma = ((1.0 + dot) / 2.0).sqrt();
                let mut wb: Vec<f64> = (0..s.len())
                    .map(|i| {
                        let jz = if i == 0 { zb[0] } else { -zb[i] };
                        (sb[i] + jz) / (2.0 * gamma)
                    })
                    .collect();
                // renormalize to unit J-norm against rounding
                let n1: f64 = wb[1..].iter().map(|x| x * x).sum();
                wb[0] = (1.0 + n1).sqrt();
                let eta = (sn / zn).sqrt();
                Some(Scaling::Soc { eta, wb })
            }
            Kind::Psd(d) => {
                let sm = svec_to_mat(s, d);
                let zm = svec_to_mat(z, d);
                let l = sm.cholesky()?.l();
                let ltzl = l.transpose() * &zm * &l;
                let (vals, q) = eigen(&SymMatrix::from_lower(&ltzl)).ok()?;
                if vals.iter().any(|v| !(*v > 0.0)) {
                    return None;
                }
                let dsq: Vec<f64> = vals.iter().map(|v| v.sqrt()).collect();
                // G = L Q D^{-1/2}, G⁻¹ = D^{1/2} Qᵀ L⁻¹
                let mut lq = &l * &q;
                for c in 0..d {
                    let f = 1.0 / dsq[c].sqrt();
                    for r in 0..d {
                        lq[(r, c)] *= f;
                    }
                }
                let linv = l.solve_lower_triangular(&DMatrix::identity(d, d))?;
                let mut qt_linv = q.transpose() * linv;
                for r in 0..d {
                    let f = dsq[r].sqrt();
                    for c in 0..d {
                        qt_linv[(r, c)] *= f;
                    }
                }
                Some(Scaling::Psd { g: lq, ginv: qt_linv })
            }
        }
    }

    /// W v.
    fn w(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => out.iter_mut().enumerate().for_each(|(i, o)| *o = w[i] * v[i]),
            Scaling::Soc { eta, wb } => {
                soc_hmul(wb, 1.0, v, out);
                out.iter_mut().for_each(|o| *o *= eta);
            }
            Scaling::Psd { g, .. } => {
                let d = g.nrows();
                let m = g.transpose() * svec_to_mat(v, d) * g;
                mat_to_svec(&m, out);
            }
        }
    }

    /// Wᵀ v.
    fn wt(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Psd { g, .. } => {
                let d = g.nrows();
                let m = g * svec_to_mat(v, d) * g.transpose();
                mat_to_svec(&m, out);
            }
            _ => self.w(v, out),
        }
    }

    /// W⁻ᵀ v.
    fn winv_t(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::Nonneg { w } => out.iter_mut().enumerate().for_each(|(i, o)| *o = v[i] / w[i]),
            Scaling::Soc { eta, wb } => {
                soc_hmul(wb, -1.0, v, out);
                out.iter_mut().for_each(|o| *o /= eta);
            }
            Scaling::Psd { ginv, .. } => {
                let d = ginv.nrows();
                let m = ginv * svec_to_mat(v, d) * ginv.transpose();
                mat_to_svec(&m, out);
            }
        }
    }


    /// (WᵀW)⁻¹ applied to a matrix in the PSD case: Wi V Wi with Wi = G⁻ᵀG⁻¹.
    fn psd_wi(&self) -> DMatrix<f64> {
        match self {
            Scaling::Psd { ginv, .. } => ginv.transpose() * ginv,
            _ => unreachable!(),
        }
    }
}

/// Jordan product u ∘ v on one block.
fn jprod(kind: Kind, u: &[f64], v: &[f64], out: &mut [f64]) {
    match kind {
        Kind::Nonneg => out.iter_mut().enumerate().for_each(|(i, o)| *o = u[i] * v[i]),
        Kind::Soc => {
            out[0] = u.iter().zip(v).map(|(a, b)| a * b).sum();
            for i in 1..u.len() {
                out[i] = u[0] * v[i] + v[0] * u[i];
            }
        }
        Kind::Psd(d) => {
            let a = svec_to_mat(u, d);
            let b = svec_to_mat(v, d);
            let ab = &a * &b;
            let m = (&ab + ab.transpose()) * 0.5;
            mat_to_svec(&m, out);
        }
    }
}

/// Solves λ ∘ u = r for u, where λ is the scaled point (diagonal in the PSD case).
fn jdiv(kind: Kind, lam: &[f64], r: &[f64], out: &mut [f64]) {
    match kind {
        Kind::Nonneg => out.iter_mut().enumerate().for_each(|(i, o)| *o = r[i] / lam[i]),
        Kind::Soc => {
            let l0 = lam[0];
            let det = l0 * l0 - lam[1..].iter().map(|x| x * x).sum::<f64>();
            let dot: f64 = lam[1..].iter().zip(&r[1..]).map(|(a, b)| a * b).sum();
            let u0 = (l0 * r[0] - dot) / det;
            out[0] = u0;
            for i in 1..lam.len() {
                out[i] = (r[i] - u0 * lam[i]) / l0;
            }
        }
        Kind::Psd(d) => {
            let lm = svec_to_mat(lam, d);
            let rm = svec_to_mat(r, d);
            let mut um = DMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    um[(i, j)] = 2.0 * rm[(i, j)] / (lm[(i, i)] + lm[(j, j)]);
                }
            }
            mat_to_svec(&um, out);
        }
    }
}

fn identity(kind: Kind, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    match kind {
        Kind::Nonneg => out.iter_mut().for_each(|o| *o = 1.0),
        Kind::Soc => out[0] = 1.0,
        Kind::Psd(d) => {
            for j in 0..d {
                out[svec_index(d, j, j)] = 1.0;
            }
        }
    }
}

/// Largest α ≥ 0 with λ + α d in the cone (λ interior, diagonal for PSD).
fn max_step(kind: Kind, lam: &[f64], d: &[f64]) -> f64 {
    match kind {
        Kind::Nonneg => {
            let mut a = f64::INFINITY;
            for (l, di) in lam.iter().zip(d) {
                if *di < 0.0 {
                    a = a.min(-l / di);
                }
            }
            a
        }
        Kind::Soc => {
            // normalize λ to unit J-norm, then the step is governed by
            // d̂0 = ⟨λ̄, J d⟩ and the component orthogonal to λ̄
            let ln = soc_jnorm(lam);
            let lb: Vec<f64> = lam.iter().map(|v| v / ln).collect();
            let jd0: f64 = lb[0] * d[0] - lb[1..].iter().zip(&d[1..]).map(|(a, b)| a * b).sum::<f64>();
            let jd0 = jd0 / ln;
            // ρ = (d̂0, d̂1 − ((d̂0 + d̂'0)/(λ̄0+1)) λ̄1) per standard formula
            let dn: Vec<f64> = d.iter().map(|v| v / ln).collect();
            let factor = (jd0 + dn[0]) / (lb[0] + 1.0);
            let mut r1 = 0.0;
            for i in 1..d.len() {
                let t = dn[i] - factor * lb[i];
                r1 += t * t;
            }
            let r1 = r1.sqrt();
            let m = r1 - jd0;
            if m > 0.0 {
                1.0 / m
            } else {
                f64::INFINITY
            }
        }
        Kind::Psd(dd) => {
            let lm = svec_to_mat(lam, dd);
            let mut m = svec_to_mat(d, dd);
            let isq: Vec<f64> = (0..dd).map(|i| 1.0 / lm[(i, i)].sqrt()).collect();
            for i in 0..dd {
                for j in 0..dd {
                    m[(i, j)] *= isq[i] * isq[j];
                }
            }
            match eigen(&SymMatrix::from_lower(&m)) {
                Ok((vals, _)) => {
                    if vals[0] < 0.0 {
                        -1.0 / vals[0]
                    } else {
                        f64::INFINITY
                    }
                }
                Err(_) => 0.0,
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Columns of G restricted to one block, dense in the block coordinates.
struct BlockCols {
    cols: Vec<(usize, Vec<f64>)>,
}

fn split_columns(g: &SparseRows, blocks: &[Block]) -> Vec<BlockCols> {
    let mut out = Vec::with_capacity(blocks.len());
    for blk in blocks {
        let mut map: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for r in blk.off..blk.off + blk.len {
            for &(j, v) in &g.rows[r] {
                map.entry(j).or_insert_with(|| vec![0.0; blk.len])[r - blk.off] += v;
            }
        }
        out.push(BlockCols { cols: map.into_iter().collect() });
    }
    out
}

/// Factorization of the reduced KKT matrix [[H, Aᵀ], [A, 0]] with
/// `H = BᵀB`, `B = W⁻ᵀG`. `H` is never formed: a QR factor of `B` keeps the
/// conditioning at cond(B) instead of cond(B)².
struct Kkt {
    b: DMatrix<f64>,
    r: DMatrix<f64>,
    rs: Option<DMatrix<f64>>,
    at_cols: Vec<DVector<f64>>, // H⁻¹ Aᵀ columns
}

/// Upper-triangular factor of `[m; √reg·I]`.
fn qr_factor(m: &DMatrix<f64>, reg: f64) -> Option<DMatrix<f64>> {
    let (rows, n) = m.shape();
    let mut st = DMatrix::zeros(rows + n, n);
    st.view_mut((0, 0), (rows, n)).copy_from(m);
    let sr = reg.sqrt();
    for i in 0..n {
        st[(rows + i, i)] = sr;
    }
    let r = st.qr().r();
    let dmax = (0..n).fold(0.0f64, |a, i| a.max(r[(i, i)].abs()));
    if (0..n).any(|i| !(r[(i, i)].abs() > 1e-300 && r[(i, i)].abs() > 1e-15 * dmax)) || r.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(r)
}

/// `(RᵀR)⁻¹ v` for upper-triangular `r`.
fn rtr_solve(r: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let w = r.tr_solve_upper_triangular(v).expect("nonsingular triangular factor");
    r.solve_upper_triangular(&w).expect("nonsingular triangular factor")
}

impl Kkt {
    fn factor(b: DMatrix<f64>, a: &SparseRows, reg: f64) -> Option<Self> {
        let n = b.ncols();
        let r = qr_factor(&b, reg)?;
        let p = a.nrows();
        let mut c = DMatrix::zeros(n, p);
        let mut at_cols = Vec::with_capacity(p);
        for (k, row) in a.rows.iter().enumerate() {
            let mut v = DVector::zeros(n);
            for &(j, val) in row {
                v[j] += val;
            }
            let ck = r.tr_solve_upper_triangular(&v)?;
            at_cols.push(r.solve_upper_triangular(&ck)?);
            c.set_column(k, &ck);
        }
        // S = A H⁻¹ Aᵀ = CᵀC with C = R⁻ᵀAᵀ
        let rs = if p > 0 { Some(qr_factor(&c, reg)?) } else { None };
        Some(Self { b, r, rs, at_cols })
    }

    fn solve_once(&self, a: &SparseRows, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = r1.len();
        let hinv_r1 = rtr_solve(&self.r, &DVector::from_column_slice(r1));
        let p = a.nrows();
        if p == 0 {
            return (hinv_r1.as_slice().to_vec(), vec![]);
        }
        // A H⁻¹ r1 − r2 = S dy
        let mut rhs = DVector::zeros(p);
        for i in 0..p {
            rhs[i] = a.rows[i].iter().map(|&(j, v)| v * hinv_r1[j]).sum::<f64>() - r2[i];
        }
        let dy = rtr_solve(self.rs.as_ref().unwrap(), &rhs);
        let mut dx = hinv_r1;
        for i in 0..p {
            dx -= &self.at_cols[i] * dy[i];
        }
        debug_assert_eq!(dx.len(), n);
        (dx.as_slice().to_vec(), dy.as_slice().to_vec())
    }

    /// Solves with a few steps of iterative refinement against the
    /// unregularized system.
    fn solve(&self, a: &SparseRows, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut dx, mut dy) = self.solve_once(a, r1, r2);
        for _ in 0..3 {
            let bdx = &self.b * DVector::from_column_slice(&dx);
            let hdx = self.b.tr_mul(&bdx);
            let mut e1: Vec<f64> = (0..r1.len()).map(|i| r1[i] - hdx[i]).collect();
            let mut aty = vec![0.0; r1.len()];
            a.mul_t(&dy, &mut aty);
            e1.iter_mut().zip(&aty).for_each(|(e, v)| *e -= v);
            let adx = a.mul(&dx);
            let e2: Vec<f64> = (0..r2.len()).map(|i| r2[i] - adx[i]).collect();
            let err = norm_inf(&e1).max(norm_inf(&e2));
            if err < 1e-14 * (1.0 + norm_inf(r1).max(norm_inf(r2))) {
                break;
            }
            let (cx, cy) = self.solve_once(a, &e1, &e2);
            dx.iter_mut().zip(&cx).for_each(|(d, c)| *d += c);
            dy.iter_mut().zip(&cy).for_each(|(d, c)| *d += c);
        }
        (dx, dy)
    }
}

struct Dir {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

impl Dir {
    fn add(&self, o: &Dir) -> Dir {
        let f = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Dir { x: f(&self.x, &o.x), y: f(&self.y, &o.y), z: f(&self.z, &o.z), s: f(&self.s, &o.s), tau: self.tau + o.tau, kappa: self.kappa + o.kappa }
    }
}

/// Right-hand side of the Newton system, complementarity row in scaled form.
struct Rhs {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    u: Vec<f64>,
    tau: f64,
    kappa: f64,
}

impl Rhs {
    fn sub(&self, o: &Rhs) -> Rhs {
        let f = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Rhs { x: f(&self.x, &o.x), y: f(&self.y, &o.y), z: f(&self.z, &o.z), u: f(&self.u, &o.u), tau: self.tau - o.tau, kappa: self.kappa - o.kappa }
    }

    fn norm_inf(&self) -> f64 {
        norm_inf(&self.x).max(norm_inf(&self.y)).max(norm_inf(&self.z)).max(norm_inf(&self.u)).max(self.tau.abs()).max(self.kappa.abs())
    }
}

struct Engine<'a> {
    p: &'a ConicProblem,
    blocks: Vec<Block>,
    gcols: Vec<BlockCols>,
}

impl<'a> Engine<'a> {
    fn gx(&self, x: &[f64]) -> Vec<f64> {
        self.p.g.mul(x)
    }

    fn gtz(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p.c.len()];
        self.p.g.mul_t(z, &mut out);
        out
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        self.p.a.mul(x)
    }

    fn aty(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p.c.len()];
        self.p.a.mul_t(y, &mut out);
        out
    }

    /// H = Gᵀ (WᵀW)⁻¹ G.
    /// `W⁻ᵀG` as a dense matrix.
    fn scaled_g(&self, sc: &[Scaling]) -> DMatrix<f64> {
        let n = self.p.c.len();
        let mut b = DMatrix::zeros(self.p.h.len(), n);
        for (bi, blk) in self.blocks.iter().enumerate() {
            let mut out = vec![0.0; blk.len];
            for (j, v) in &self.gcols[bi].cols {
                sc[bi].winv_t(v, &mut out);
                b.view_mut((blk.off, *j), (blk.len, 1)).copy_from_slice(&out);
            }
        }
        b
    }

    fn apply_blocks(&self, sc: &[Scaling], v: &[f64], op: fn(&Scaling, &[f64], &mut [f64])) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (bi, blk) in self.blocks.iter().enumerate() {
            let r = blk.off..blk.off + blk.len;
            op(&sc[bi], &v[r.clone()], &mut out[r]);
        }
        out
    }

    fn wtw_inv(&self, sc: &[Scaling], v: &[f64]) -> Vec<f64> {
        // (WᵀW)⁻¹ v = W⁻¹ W⁻ᵀ v; for symmetric W blocks W⁻¹ = W⁻ᵀ, for PSD use Wi V Wi.
        let mut out = vec![0.0; v.len()];
        for (bi, blk) in self.blocks.iter().enumerate() {
            let r = blk.off..blk.off + blk.len;
            match blk.kind {
                Kind::Psd(d) => {
                    let wi = sc[bi].psd_wi();
                    let m = &wi * svec_to_mat(&v[r.clone()], d) * &wi;
                    mat_to_svec(&m, &mut out[r]);
                }
                _ => {
                    let mut tmp = vec![0.0; blk.len];
                    sc[bi].winv_t(&v[r.clone()], &mut tmp);
                    sc[bi].winv_t(&tmp, &mut out[r]);
                }
            }
        }
        out
    }

    fn blockwise(&self, a: &[f64], b: &[f64], f: fn(Kind, &[f64], &[f64], &mut [f64])) -> Vec<f64> {
        let mut out = vec![0.0; a.len()];
        for blk in &self.blocks {
            let r = blk.off..blk.off + blk.len;
            f(blk.kind, &a[r.clone()], &b[r.clone()], &mut out[r]);
        }
        out
    }

    fn identity(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.p.h.len()];
        for blk in &self.blocks {
            identity(blk.kind, &mut e[blk.off..blk.off + blk.len]);
        }
        e
    }

    fn max_step(&self, lam: &[f64], d: &[f64]) -> f64 {
        let mut a = f64::INFINITY;
        for blk in &self.blocks {
            let r = blk.off..blk.off + blk.len;
            a = a.min(max_step(blk.kind, &lam[r.clone()], &d[r]));
        }
        a
    }
}

/// Column scaling of the free variables and scalar scaling of the data.
struct Equilibration {
    col: Vec<f64>,
    cscale: f64,
    bscale: f64,
}

fn equilibrate(p: &ConicProblem) -> (ConicProblem, Equilibration) {
    let n = p.c.len();
    let mut colnorm = vec![0.0f64; n];
    for r in p.a.rows.iter().chain(p.g.rows.iter()) {
        for &(j, v) in r {
            colnorm[j] = colnorm[j].max(v.abs());
        }
    }
    let col: Vec<f64> = colnorm.iter().map(|&v| if v > 0.0 { 1.0 / v.sqrt().max(1e-8) } else { 1.0 }).collect();
    let scale_rows = |m: &SparseRows| SparseRows {
        ncols: m.ncols,
        rows: m.rows.iter().map(|r| r.iter().map(|&(j, v)| (j, v * col[j])).collect()).collect(),
    };
    let a = scale_rows(&p.a);
    let g = scale_rows(&p.g);
    let c: Vec<f64> = (0..n).map(|j| p.c[j] * col[j]).collect();
    let cscale = norm_inf(&c).max(1e-8).recip().min(1e8).max(1e-8);
    let cscale = if norm_inf(&c) < 1.0 { 1.0 } else { cscale };
    let bmax = norm_inf(&p.b).max(norm_inf(&p.h));
    let bscale = if bmax > 1.0 { 1.0 / bmax } else { 1.0 };
    let scaled = ConicProblem {
        c: c.iter().map(|v| v * cscale).collect(),
        a,
        b: p.b.iter().map(|v| v * bscale).collect(),
        g,
        h: p.h.iter().map(|v| v * bscale).collect(),
        cones: p.cones.clone(),
    };
    (scaled, Equilibration { col, cscale, bscale })
}

/// Solves the conic program.
pub fn solve(problem: &ConicProblem, settings: &Settings) -> ConicSolution {
    let (sp, eq) = equilibrate(problem);
    let mut sol = solve_scaled(&sp, settings);
    // undo scaling: x = D x̃ / bscale, (y, z) = ỹ / cscale, s = s̃ / bscale
    for (j, v) in sol.x.iter_mut().enumerate() {
        *v *= eq.col[j] / eq.bscale;
    }
    sol.s.iter_mut().for_each(|v| *v /= eq.bscale);
    sol.y.iter_mut().for_each(|v| *v /= eq.cscale);
    sol.z.iter_mut().for_each(|v| *v /= eq.cscale);
    let f = 1.0 / (eq.cscale * eq.bscale);
    sol.primal_obj *= f;
    sol.dual_obj *= f;
    if sol.status == Status::Optimal || sol.status == Status::IterationLimit || sol.status == Status::NumericalError {
        sol.primal_obj = dot(&problem.c, &sol.x);
        sol.dual_obj = -dot(&problem.b, &sol.y) - dot(&problem.h, &sol.z);
        let mut rx = problem.a.mul(&sol.x);
        rx.iter_mut().zip(&problem.b).for_each(|(r, b)| *r -= b);
        let mut rz = problem.g.mul(&sol.x);
        rz.iter_mut().zip(problem.h.iter().zip(&sol.s)).for_each(|(r, (h, s))| *r += s - h);
        sol.primal_res = norm_inf(&rx).max(norm_inf(&rz));
        let mut rd = problem.c.clone();
        problem.a.mul_t(&sol.y, &mut rd);
        problem.g.mul_t(&sol.z, &mut rd);
        sol.dual_res = norm_inf(&rd);
    }
    sol
}

fn solve_scaled(p: &ConicProblem, st: &Settings) -> ConicSolution {
    let n = p.c.len();
    let m = p.h.len();
    let np = p.b.len();
    assert_eq!(p.cones.dim(), m, "cone layout does not match G rows");
    assert_eq!(p.g.nrows(), m);
    assert_eq!(p.a.nrows(), np);
    let blocks = p.cones.blocks();
    let gcols = split_columns(&p.g, &blocks);
    let eng = Engine { p, blocks, gcols };
    let nu = p.cones.degree() as f64;

    let mut x = vec![0.0; n];
    let mut y = vec![0.0; np];
    let mut s = eng.identity();
    let mut z = eng.identity();
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let bnorm = 1.0 + norm(&p.b).max(norm(&p.h));
    let cnorm = 1.0 + norm(&p.c);
    let mut status = Status::IterationLimit;
    let mut iters = 0;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;
    let mut best_it = 0;

    for it in 0..st.max_iter {
        iters = it;
        // residuals of the embedding
        let aty = eng.aty(&y);
        let gtz = eng.gtz(&z);
        let fx: Vec<f64> = (0..n).map(|i| aty[i] + gtz[i] + p.c[i] * tau).collect();
        let ax = eng.ax(&x);
        let fy: Vec<f64> = (0..np).map(|i| -ax[i] + p.b[i] * tau).collect();
        let gx = eng.gx(&x);
        let fz: Vec<f64> = (0..m).map(|i| -gx[i] + p.h[i] * tau - s[i]).collect();
        let cx = dot(&p.c, &x);
        let by = dot(&p.b, &y);
        let hz = dot(&p.h, &z);
        let ft = -cx - by - hz - kappa;
        let mu = (dot(&s, &z) + tau * kappa) / (nu + 1.0);

        // convergence tests on the dehomogenized point
        let pres = norm(&fy).max(norm(&fz)) / tau / bnorm;
        let dres = norm(&fx) / tau / cnorm;
        let pcost = cx / tau;
        let dcost = -(by + hz) / tau;
        let gap = (pcost - dcost).abs();
        let relgap = gap / (1.0 + pcost.abs().min(dcost.abs()));
        log::trace!("ipm it={it} pcost={pcost:.8e} dcost={dcost:.8e} pres={pres:.2e} dres={dres:.2e} gap={relgap:.2e} tau={tau:.2e} kappa={kappa:.2e}");
        let merit = pres.max(dres).max(relgap);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone(), s.clone(), z.clone(), tau));
            best_it = it;
        } else if it > best_it + 6 && tau >= kappa {
            // τ < κ means the iterates head for an infeasibility certificate
            status = Status::NumericalError;
            break;
        }
        if pres <= st.feas_tol && dres <= st.feas_tol && (relgap <= st.gap_tol || gap <= st.gap_tol) {
            status = Status::Optimal;
            break;
        }
        // infeasibility certificates
        let bh = by + hz;
        if bh < 0.0 {
            let r: Vec<f64> = (0..n).map(|i| aty[i] + gtz[i]).collect();
            if norm(&r) / -bh <= st.feas_tol && tau < kappa {
                status = Status::PrimalInfeasible;
                break;
            }
        }
        if cx < 0.0 {
            let ax_n = norm(&ax);
            let gs: Vec<f64> = (0..m).map(|i| gx[i] + s[i]).collect();
            if ax_n.max(norm(&gs)) / -cx <= st.feas_tol && tau < kappa {
                status = Status::DualInfeasible;
                break;
            }
        }

        // scaling
        let mut sc = Vec::with_capacity(eng.blocks.len());
        let mut ok = true;
        for blk in &eng.blocks {
            let r = blk.off..blk.off + blk.len;
            match Scaling::compute(blk.kind, &s[r.clone()], &z[r]) {
                Some(w) => sc.push(w),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            status = Status::NumericalError;
            break;
        }
        let lam = eng.apply_blocks(&sc, &z, Scaling::w);

        let bmat = eng.scaled_g(&sc);
        let hmax = (0..n).fold(0.0f64, |a, j| a.max(bmat.column(j).norm_squared()));
        let reg = 1e-14 * (1.0 + hmax);
        let kkt = match Kkt::factor(bmat, &p.a, reg) {
            Some(k) => k,
            None => {
                status = Status::NumericalError;
                break;
            }
        };

        // second right-hand side, shared by predictor and corrector
        let wh = eng.wtw_inv(&sc, &p.h);
        let gwh = eng.gtz(&wh);
        let r2x: Vec<f64> = (0..n).map(|i| gwh[i] - p.c[i]).collect();
        let (dx2, dy2) = kkt.solve(&p.a, &r2x, &p.b);
        let gdx2 = eng.gx(&dx2);
        let dz2_raw: Vec<f64> = (0..m).map(|i| gdx2[i] - p.h[i]).collect();
        let dz2 = eng.wtw_inv(&sc, &dz2_raw);

        // One linear solve of the Newton system for a right-hand side given in
        // the scaled-complementarity form (u = λ⧹d_s).
        let solve_lin = |r: &Rhs| -> Option<Dir> {
            let wtu = eng.apply_blocks(&sc, &r.u, Scaling::wt);
            let t: Vec<f64> = (0..m).map(|i| r.z[i] + wtu[i]).collect();
            let wt = eng.wtw_inv(&sc, &t);
            let gwt = eng.gtz(&wt);
            let r1x: Vec<f64> = (0..n).map(|i| r.x[i] - gwt[i]).collect();
            let r1y: Vec<f64> = r.y.iter().map(|v| -v).collect();
            let (dx1, dy1) = kkt.solve(&p.a, &r1x, &r1y);
            let gdx1 = eng.gx(&dx1);
            let t1: Vec<f64> = (0..m).map(|i| t[i] + gdx1[i]).collect();
            let dz1 = eng.wtw_inv(&sc, &t1);
            let num = r.tau + dot(&p.c, &dx1) + dot(&p.b, &dy1) + dot(&p.h, &dz1) + r.kappa / tau;
            let den = -dot(&p.c, &dx2) - dot(&p.b, &dy2) - dot(&p.h, &dz2) + kappa / tau;
            let dtau = num / den;
            if !dtau.is_finite() {
                return None;
            }
            let dx: Vec<f64> = (0..n).map(|i| dx1[i] + dx2[i] * dtau).collect();
            let dy: Vec<f64> = (0..np).map(|i| dy1[i] + dy2[i] * dtau).collect();
            let dz: Vec<f64> = (0..m).map(|i| dz1[i] + dz2[i] * dtau).collect();
            let wdz = eng.apply_blocks(&sc, &dz, Scaling::w);
            let uw: Vec<f64> = (0..m).map(|i| r.u[i] - wdz[i]).collect();
            let ds = eng.apply_blocks(&sc, &uw, Scaling::wt);
            let dkappa = (r.kappa - kappa * dtau) / tau;
            Some(Dir { x: dx, y: dy, z: dz, s: ds, tau: dtau, kappa: dkappa })
        };
        let apply_lin = |d: &Dir| -> Rhs {
            let aty = eng.aty(&d.y);
            let gtz = eng.gtz(&d.z);
            let ax = eng.ax(&d.x);
            let gx = eng.gx(&d.x);
            let wis = eng.apply_blocks(&sc, &d.s, Scaling::winv_t);
            let wz = eng.apply_blocks(&sc, &d.z, Scaling::w);
            Rhs {
                x: (0..n).map(|i| aty[i] + gtz[i] + p.c[i] * d.tau).collect(),
                y: (0..np).map(|i| -ax[i] + p.b[i] * d.tau).collect(),
                z: (0..m).map(|i| -gx[i] + p.h[i] * d.tau - d.s[i]).collect(),
                u: (0..m).map(|i| wis[i] + wz[i]).collect(),
                tau: -dot(&p.c, &d.x) - dot(&p.b, &d.y) - dot(&p.h, &d.z) - d.kappa,
                kappa: kappa * d.tau + tau * d.kappa,
            }
        };
        let direction = |ds_rhs: &[f64], dk_rhs: f64, res_factor: f64| -> Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> {
            let rhs = Rhs {
                x: fx.iter().map(|v| -res_factor * v).collect(),
                y: fy.iter().map(|v| -res_factor * v).collect(),
                z: fz.iter().map(|v| -res_factor * v).collect(),
                u: eng.blockwise(&lam, ds_rhs, jdiv),
                tau: -res_factor * ft,
                kappa: dk_rhs,
            };
            let mut d = solve_lin(&rhs)?;
            let scale = 1.0 + rhs.norm_inf();
            let mut err = rhs.sub(&apply_lin(&d));
            for _ in 0..3 {
                let e = err.norm_inf();
                if e <= 1e-14 * scale {
                    break;
                }
                let corr = solve_lin(&err)?;
                let trial = d.add(&corr);
                let terr = rhs.sub(&apply_lin(&trial));
                if terr.norm_inf() >= e {
                    break;
                }
                d = trial;
                err = terr;
            }
            Some((d.x, d.y, d.z, d.s, d.tau, d.kappa))
        };

        let step_len = |dz: &[f64], ds: &[f64], dtau: f64, dkappa: f64| -> f64 {
            let wdz = eng.apply_blocks(&sc, dz, Scaling::w);
            let wds = eng.apply_blocks(&sc, ds, Scaling::winv_t);
            let mut a = eng.max_step(&lam, &wdz).min(eng.max_step(&lam, &wds));
            if dtau < 0.0 {
                a = a.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-kappa / dkappa);
            }
            a
        };

        // predictor
        let lamsq = eng.blockwise(&lam, &lam, jprod);
        let ds_aff: Vec<f64> = lamsq.iter().map(|v| -v).collect();
        let Some((_, _, dz_a, ds_a, dtau_a, dkappa_a)) = direction(&ds_aff, -tau * kappa, 1.0) else {
            status = Status::NumericalError;
            break;
        };
        let alpha_a = step_len(&dz_a, &ds_a, dtau_a, dkappa_a).min(1.0);
        let sigma = (1.0 - alpha_a).powi(3).clamp(0.0, 1.0);

        // corrector
        let wds_a = eng.apply_blocks(&sc, &ds_a, Scaling::winv_t);
        let wdz_a = eng.apply_blocks(&sc, &dz_a, Scaling::w);
        let cross = eng.blockwise(&wds_a, &wdz_a, jprod);
        let e = eng.identity();
        let ds_c: Vec<f64> = (0..m).map(|i| -lamsq[i] - cross[i] + sigma * mu * e[i]).collect();
        let dk_c = -tau * kappa - dtau_a * dkappa_a + sigma * mu;
        let Some((dx, dy, dz, ds, dtau, dkappa)) = direction(&ds_c, dk_c, 1.0 - sigma) else {
            status = Status::NumericalError;
            break;
        };
        let amax = step_len(&dz, &ds, dtau, dkappa);
        let alpha = (st.step_fraction * amax).min(1.0);
        if !(alpha > 1e-12) {
            status = Status::NumericalError;
            break;
        }
        for i in 0..n {
            x[i] += alpha * dx[i];
        }
        for i in 0..np {
            y[i] += alpha * dy[i];
        }
        for i in 0..m {
            s[i] += alpha * ds[i];
            z[i] += alpha * dz[i];
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        iters = it + 1;
    }

    if matches!(status, Status::IterationLimit | Status::NumericalError) {
        if let Some((_, bx, by, bs, bz, bt)) = best {
            x = bx;
            y = by;
            s = bs;
            z = bz;
            tau = bt;
        }
    }
    let (x, y, s, z) = match status {
        Status::PrimalInfeasible | Status::DualInfeasible => (x, y, s, z),
        _ => (
            x.iter().map(|v| v / tau).collect(),
            y.iter().map(|v| v / tau).collect(),
            s.iter().map(|v| v / tau).collect(),
            z.iter().map(|v| v / tau).collect(),
        ),
    };
    let primal_obj = dot(&p.c, &x);
    let dual_obj = -dot(&p.b, &y) - dot(&p.h, &z);
    ConicSolution { status, x, y, s, z, primal_obj, dual_obj, primal_res: f64::NAN, dual_res: f64::NAN, iterations: iters }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[(usize, f64)]) -> Vec<(usize, f64)> {
        v.to_vec()
    }

    #[test]
    fn svec_roundtrip_and_index() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let mut v = vec![0.0; 6];
        mat_to_svec(&m, &mut v);
        assert!((svec_to_mat(&v, 3) - &m).abs().max() < 1e-15);
        assert_eq!(svec_index(3, 0, 0), 0);
        assert_eq!(svec_index(3, 2, 1), 4);
        assert_eq!(svec_index(3, 1, 2), 4);
        assert_eq!(svec_index(3, 2, 2), 5);
        assert!((v[svec_index(3, 2, 0)] - 3.0 * SQRT2).abs() < 1e-15);
    }

    #[test]
    fn soc_scaling_maps_z_to_s() {
        let s = [3.0, 1.0, -0.5, 0.2];
        let z = [2.0, -0.3, 0.9, 0.1];
        let sc = Scaling::compute(Kind::Soc, &s, &z).unwrap();
        let mut wz = [0.0; 4];
        let mut wis = [0.0; 4];
        sc.w(&z, &mut wz);
        sc.winv_t(&s, &mut wis);
        for i in 0..4 {
            assert!((wz[i] - wis[i]).abs() < 1e-12, "{wz:?} {wis:?}");
        }
    }

    #[test]
    fn psd_scaling_maps_z_to_s() {
        let sm = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let zm = DMatrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 3.0]);
        let mut s = [0.0; 3];
        let mut z = [0.0; 3];
        mat_to_svec(&sm, &mut s);
        mat_to_svec(&zm, &mut z);
        let sc = Scaling::compute(Kind::Psd(2), &s, &z).unwrap();
        let mut wz = [0.0; 3];
        let mut wis = [0.0; 3];
        sc.w(&z, &mut wz);
        sc.winv_t(&s, &mut wis);
        for i in 0..3 {
            assert!((wz[i] - wis[i]).abs() < 1e-12);
        }
        // λ is diagonal
        assert!(wz[1].abs() < 1e-12);
    }

    #[test]
    fn small_lp() {
        // min -x1 - x2  s.t. x1 + 2 x2 <= 4, 3 x1 + x2 <= 6, x >= 0  -> (1.6, 1.2), -2.8
        let mut g = SparseRows::new(2);
        g.push(row(&[(0, 1.0), (1, 2.0)]));
        g.push(row(&[(0, 3.0), (1, 1.0)]));
        g.push(row(&[(0, -1.0)]));
        g.push(row(&[(1, -1.0)]));
        let p = ConicProblem {
            c: vec![-1.0, -1.0],
            a: SparseRows::new(2),
            b: vec![],
            g,
            h: vec![4.0, 6.0, 0.0, 0.0],
            cones: Cones { nonneg: 4, ..Default::default() },
        };
        let sol = solve(&p, &Settings::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.primal_obj + 2.8).abs() < 1e-7, "{}", sol.primal_obj);
        assert!((sol.x[0] - 1.6).abs() < 1e-6 && (sol.x[1] - 1.2).abs() < 1e-6);
    }

    #[test]
    fn lp_with_equality() {
        // min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0 -> 1
        let mut a = SparseRows::new(2);
        a.push(row(&[(0, 1.0), (1, 1.0)]));
        let mut g = SparseRows::new(2);
        g.push(row(&[(0, -1.0)]));
        g.push(row(&[(1, -1.0)]));
        let p = ConicProblem { c: vec![1.0, 2.0], a, b: vec![1.0], g, h: vec![0.0, 0.0], cones: Cones { nonneg: 2, ..Default::default() } };
        let sol = solve(&p, &Settings::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.primal_obj - 1.0).abs() < 1e-7);
        assert!((sol.y[0] + 1.0).abs() < 1e-6, "{:?}", sol.y);
    }

    #[test]
    fn socp_min_norm_point() {
        // min t s.t. ||(x1 - 1, x2 - 2)|| <= t -> 0; add x1 + x2 = 0 -> t = 3/sqrt(2)
        let mut a = SparseRows::new(3);
        a.push(row(&[(1, 1.0), (2, 1.0)]));
        let mut g = SparseRows::new(3);
        g.push(row(&[(0, -1.0)]));
        g.push(row(&[(1, -1.0)]));
        g.push(row(&[(2, -1.0)]));
        let p = ConicProblem {
            c: vec![1.0, 0.0, 0.0],
            a,
            b: vec![0.0],
            g,
            h: vec![0.0, -1.0, -2.0],
            cones: Cones { soc: vec![3], ..Default::default() },
        };
        let sol = solve(&p, &Settings::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.primal_obj - 3.0 / 2f64.sqrt()).abs() < 1e-7, "{}", sol.primal_obj);
    }

    #[test]
    fn sdp_min_eigenvalue() {
        // max t s.t. M - t I >= 0  -> t = λmin(M)
        let mm = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let mut h = vec![0.0; 6];
        mat_to_svec(&mm, &mut h);
        let mut g = SparseRows::new(1);
        for k in 0..6 {
            g.push(vec![]);
            let _ = k;
        }
        for j in 0..3 {
            g.rows[svec_index(3, j, j)].push((0, 1.0));
        }
        let p = ConicProblem { c: vec![-1.0], a: SparseRows::new(1), b: vec![], g, h, cones: Cones { psd: vec![3], ..Default::default() } };
        let sol = solve(&p, &Settings::default());
        assert_eq!(sol.status, Status::Optimal);
        let lmin = crate::linalg::min_eigenvalue(&SymMatrix::new(mm).unwrap()).unwrap();
        assert!((sol.x[0] - lmin).abs() < 1e-6, "{} vs {}", sol.x[0], lmin);
        // dual is the projector onto the bottom eigenvector: trace 1
        let zm = svec_to_mat(&sol.z, 3);
        assert!((zm.trace() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_lp_detected() {
        // x >= 1 and x <= 0
        let mut g = SparseRows::new(1);
        g.push(row(&[(0, -1.0)]));
        g.push(row(&[(0, 1.0)]));
        let p = ConicProblem { c: vec![1.0], a: SparseRows::new(1), b: vec![], g, h: vec![-1.0, 0.0], cones: Cones { nonneg: 2, ..Default::default() } };
        assert_eq!(solve(&p, &Settings::default()).status, Status::PrimalInfeasible);
    }

    #[test]
    fn unbounded_lp_detected() {
        // min -x s.t. x >= 0
        let mut g = SparseRows::new(1);
        g.push(row(&[(0, -1.0)]));
        let p = ConicProblem { c: vec![-1.0], a: SparseRows::new(1), b: vec![], g, h: vec![0.0], cones: Cones { nonneg: 1, ..Default::default() } };
        assert_eq!(solve(&p, &Settings::default()).status, Status::DualInfeasible);
    }
}
