//! First-order conic SDP solver over named Hermitian matrix blocks.
//!
//! Problems are stated as
//!   min Σ_b Tr[C_b X_b]
//!   s.t. Σ_b Tr[A_b X_b] = r        (equality constraints)
//!        Σ_b op_b(X_b) ⪰ 0          (cone constraints)
//! where every op is a real-linear, Frobenius-self-adjoint map — a scaled
//! identity or a scaled partial transpose. That covers decomposable-witness
//! programs without any general-purpose canonicalization layer.
//!
//! The method is ADMM in scaled-dual form. Stacking the affine maps into
//! M: (blocks) → (equality rows ++ cone matrices) with offset g, iterate
//!   x ← argmin c·x + (σ/2)‖Mx − g − z + u‖²     (CG on M'M, warm started)
//!   ŵ ← α(Mx − g) + (1 − α)z                    (over-relaxation)
//!   z ← Π_K(ŵ + u),  u ← u + ŵ − z
//! with K = {0} × PSD × … × PSD. Divergence certificates are read off the
//! drift of u (Farkas direction: M'y = 0, y ∈ K*, ⟨g,y⟩ > 0).

use crate::linalg::{self, cr, CMat, LinalgError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("unknown block '{0}' referenced by a constraint")]
    UnknownBlock(String),
    #[error("duplicate block name '{0}'")]
    DuplicateBlock(String),
    #[error("block '{block}': matrix is {got}x{got2}, expected {dim}x{dim}")]
    WrongDim { block: String, got: usize, got2: usize, dim: usize },
    #[error("cone constraint {0}: output dims of terms disagree")]
    ConeDimMismatch(usize),
    #[error("constraint matrix for block '{0}' is not Hermitian")]
    NotHermitian(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone)]
pub struct BlockSpec {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct ObjectiveTerm {
    pub block: String,
    pub matrix: CMat,
}

#[derive(Debug, Clone)]
pub struct EqualityTerm {
    pub block: String,
    pub matrix: CMat,
}

/// Σ_terms Tr[A_b X_b] = rhs.
#[derive(Debug, Clone)]
pub struct EqualityConstraint {
    pub terms: Vec<EqualityTerm>,
    pub rhs: f64,
}

/// Real-linear self-adjoint map applied to one block inside a cone
/// constraint.
#[derive(Debug, Clone)]
pub enum ConeOp {
    /// X ↦ α·X
    Scale { alpha: f64 },
    /// X ↦ α·X^{T_subset}; subset indexes qubits of the block (0 = MSB)
    PartialTranspose { subset: Vec<usize>, alpha: f64 },
}

#[derive(Debug, Clone)]
pub struct ConeTerm {
    pub block: String,
    pub op: ConeOp,
}

/// Σ_terms op(X_block) must be PSD. All terms must map to `dim`×`dim`.
#[derive(Debug, Clone)]
pub struct ConeConstraint {
    pub dim: usize,
    pub terms: Vec<ConeTerm>,
}

#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub blocks: Vec<BlockSpec>,
    pub objective: Vec<ObjectiveTerm>,
    pub equalities: Vec<EqualityConstraint>,
    pub cones: Vec<ConeConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub status: SolveStatus,
    /// (iteration, primal residual, dual residual), sampled every 25
    /// iterations.
    pub residual_history: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 50_000, seed: 0 }
    }
}

/// Frobenius-nearest PSD matrix (negative eigenvalues clipped to zero).
pub fn min_eig_projection(h: &CMat) -> Result<CMat, SdpError> {
    Ok(linalg::project_psd(h)?)
}

const OVER_RELAX: f64 = 1.6;
const SIGMA: f64 = 1.0;
const SAMPLE_EVERY: usize = 25;
const DIVERGENCE_NORM: f64 = 1e9;

struct Workspace {
    block_idx: HashMap<String, usize>,
    dims: Vec<usize>,
    obj: Vec<CMat>,
    // equality rows: per row, list of (block index, matrix); plus rhs
    eq_rows: Vec<Vec<(usize, CMat)>>,
    eq_rhs: Vec<f64>,
    // cone constraints: per cone, list of (block index, op); plus PT maps
    cones: Vec<Vec<(usize, ConeOp)>>,
    cone_dims: Vec<usize>,
    pt_maps: HashMap<(usize, Vec<usize>), Vec<usize>>,
}

impl Workspace {
    fn build(p: &ConicProgram) -> Result<Self, SdpError> {
        let mut block_idx = HashMap::new();
        let mut dims = Vec::new();
        let mut nq = Vec::new();
        for b in &p.blocks {
            if block_idx.insert(b.name.clone(), dims.len()).is_some() {
                return Err(SdpError::DuplicateBlock(b.name.clone()));
            }
            dims.push(b.dim);
            nq.push(b.dim.trailing_zeros() as usize);
        }
        let lookup = |name: &str| -> Result<usize, SdpError> {
            block_idx.get(name).copied().ok_or_else(|| SdpError::UnknownBlock(name.to_string()))
        };
        let expect_dim = |bi: usize, m: &CMat, name: &str| -> Result<(), SdpError> {
            if m.nrows() != dims[bi] || m.ncols() != dims[bi] {
                return Err(SdpError::WrongDim {
                    block: name.to_string(),
                    got: m.nrows(),
                    got2: m.ncols(),
                    dim: dims[bi],
                });
            }
            if !linalg::is_hermitian(m, 1e-9) {
                return Err(SdpError::NotHermitian(name.to_string()));
            }
            Ok(())
        };

        let mut obj: Vec<CMat> = dims.iter().map(|&d| CMat::zeros(d, d)).collect();
        for t in &p.objective {
            let bi = lookup(&t.block)?;
            expect_dim(bi, &t.matrix, &t.block)?;
            obj[bi] += &t.matrix;
        }

        let mut eq_rows = Vec::new();
        let mut eq_rhs = Vec::new();
        for e in &p.equalities {
            let mut row = Vec::new();
            for t in &e.terms {
                let bi = lookup(&t.block)?;
                expect_dim(bi, &t.matrix, &t.block)?;
                row.push((bi, t.matrix.clone()));
            }
            eq_rows.push(row);
            eq_rhs.push(e.rhs);
        }

        let mut cones = Vec::new();
        let mut cone_dims = Vec::new();
        let mut pt_maps = HashMap::new();
        for (ci, cone) in p.cones.iter().enumerate() {
            let mut terms = Vec::new();
            for t in &cone.terms {
                let bi = lookup(&t.block)?;
                if dims[bi] != cone.dim {
                    return Err(SdpError::ConeDimMismatch(ci));
                }
                if let ConeOp::PartialTranspose { subset, .. } = &t.op {
                    let key = (bi, subset.clone());
                    if !pt_maps.contains_key(&key) {
                        let map = linalg::partial_transpose_map(&vec![2; nq[bi]], subset)?;
                        pt_maps.insert(key, map);
                    }
                }
                terms.push((bi, t.op.clone()));
            }
            cones.push(terms);
            cone_dims.push(cone.dim);
        }
        Ok(Self { block_idx, dims, obj, eq_rows, eq_rhs, cones, cone_dims, pt_maps })
    }

    fn n_blocks(&self) -> usize {
        self.dims.len()
    }

    fn apply_op(&self, bi: usize, op: &ConeOp, x: &CMat, out: &mut CMat) {
        match op {
            ConeOp::Scale { alpha } => {
                linalg::add_scaled(out, cr(*alpha), x);
            }
            ConeOp::PartialTranspose { subset, alpha } => {
                let map = &self.pt_maps[&(bi, subset.clone())];
                let d = self.dims[bi];
                let a = cr(*alpha);
                for r in 0..d {
                    for c in 0..d {
                        let s = map[r * d + c];
                        out[(r, c)] += a * x[(s / d, s % d)];
                    }
                }
            }
        }
    }

    /// y_eq[i] = Σ Tr[A X]; y_cone[j] = Σ op(X).
    fn apply_m(&self, x: &[CMat], y_eq: &mut [f64], y_cone: &mut [CMat]) {
        for (i, row) in self.eq_rows.iter().enumerate() {
            y_eq[i] = row.iter().map(|(bi, a)| linalg::hs_inner(a, &x[*bi])).sum();
        }
        for (j, cone) in self.cones.iter().enumerate() {
            y_cone[j].fill(cr(0.0));
            for (bi, op) in cone {
                self.apply_op(*bi, op, &x[*bi], &mut y_cone[j]);
            }
        }
    }

    /// x += M'(y): adjoint of apply_m (every op is self-adjoint).
    fn apply_mt(&self, y_eq: &[f64], y_cone: &[CMat], x: &mut [CMat]) {
        for xb in x.iter_mut() {
            xb.fill(cr(0.0));
        }
        for (i, row) in self.eq_rows.iter().enumerate() {
            for (bi, a) in row {
                linalg::add_scaled(&mut x[*bi], cr(y_eq[i]), a);
            }
        }
        for (j, cone) in self.cones.iter().enumerate() {
            for (bi, op) in cone {
                self.apply_op(*bi, op, &y_cone[j], &mut x[*bi]);
            }
        }
    }

    fn zero_blocks(&self) -> Vec<CMat> {
        self.dims.iter().map(|&d| CMat::zeros(d, d)).collect()
    }

    fn zero_cone_space(&self) -> (Vec<f64>, Vec<CMat>) {
        (vec![0.0; self.eq_rows.len()], self.cone_dims.iter().map(|&d| CMat::zeros(d, d)).collect())
    }
}

fn dot_blocks(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| linalg::hs_inner(x, y)).sum()
}

fn norm_cone_space(eq: &[f64], cone: &[CMat]) -> f64 {
    let e: f64 = eq.iter().map(|v| v * v).sum();
    let c: f64 = cone.iter().map(|m| m.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
    (e + c).sqrt()
}

/// Conjugate-gradient solve of (M'M) x = rhs in block-matrix space, warm
/// started from `x`.
fn cg_normal(
    ws: &Workspace,
    rhs: &[CMat],
    x: &mut [CMat],
    tol: f64,
    scratch: &mut CgScratch,
) -> usize {
    let (ye, yc) = (&mut scratch.y_eq, &mut scratch.y_cone);
    ws.apply_m(x, ye, yc);
    ws.apply_mt(ye, yc, &mut scratch.ax);
    let mut r: Vec<CMat> = rhs.iter().zip(&scratch.ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rs = dot_blocks(&r, &r);
    let target = (tol * tol) * dot_blocks(rhs, rhs).max(1e-300);
    let mut iters = 0usize;
    while rs > target && iters < 500 {
        ws.apply_m(&p, ye, yc);
        ws.apply_mt(ye, yc, &mut scratch.ax);
        let denom = dot_blocks(&p, &scratch.ax);
        if denom <= 0.0 {
            break; // M'M ⪰ 0; zero curvature means p ∈ null space
        }
        let alpha = rs / denom;
        for (bi, pb) in p.iter().enumerate() {
            linalg::add_scaled(&mut x[bi], cr(alpha), pb);
            linalg::add_scaled(&mut r[bi], cr(-alpha), &scratch.ax[bi]);
        }
        let rs_new = dot_blocks(&r, &r);
        let beta = rs_new / rs;
        for (bi, rb) in r.iter().enumerate() {
            let updated = rb + &p[bi] * cr(beta);
            p[bi] = updated;
        }
        rs = rs_new;
        iters += 1;
    }
    iters
}

struct CgScratch {
    y_eq: Vec<f64>,
    y_cone: Vec<CMat>,
    ax: Vec<CMat>,
}

/// Minimize the program. The seed only perturbs the starting point (it
/// breaks ties between degenerate optima deterministically); two solves
/// with identical options are bitwise identical.
pub fn solve_conic(
    p: &ConicProgram,
    opts: &SolverOptions,
) -> Result<(HashMap<String, CMat>, SolveReport), SdpError> {
    let ws = Workspace::build(p)?;
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut x = ws.zero_blocks();
    for xb in x.iter_mut() {
        let d = xb.nrows();
        let g = CMat::from_fn(d, d, |_, _| {
            linalg::c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        *xb = linalg::hermitize(&g) * cr(1e-3);
    }
    let (mut z_eq, mut z_cone) = ws.zero_cone_space();
    let (mut u_eq, mut u_cone) = ws.zero_cone_space();
    // g: equality rows carry rhs; cone rows have no offset
    let g_eq = ws.eq_rhs.clone();

    let (mut mx_eq, mut mx_cone) = ws.zero_cone_space();
    let mut scratch =
        CgScratch { y_eq: vec![0.0; g_eq.len()], y_cone: ws.cone_dims.iter().map(|&d| CMat::zeros(d, d)).collect(), ax: ws.zero_blocks() };
    let mut rhs = ws.zero_blocks();
    let mut history = Vec::new();
    let mut last_primal = f64::INFINITY;
    let mut u_snapshot: Option<(Vec<f64>, Vec<CMat>)> = None;
    let mut report = SolveReport {
        objective: 0.0,
        iterations: 0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        status: SolveStatus::MaxIter,
        residual_history: Vec::new(),
    };

    for it in 1..=opts.max_iter {
        // x-update: (M'M) x = M'(g + z − u) − c/σ
        let arg_eq: Vec<f64> =
            (0..g_eq.len()).map(|i| g_eq[i] + z_eq[i] - u_eq[i]).collect();
        let arg_cone: Vec<CMat> =
            (0..z_cone.len()).map(|j| &z_cone[j] - &u_cone[j]).collect();
        ws.apply_mt(&arg_eq, &arg_cone, &mut rhs);
        for (bi, c_b) in ws.obj.iter().enumerate() {
            linalg::add_scaled(&mut rhs[bi], cr(-1.0 / SIGMA), c_b);
        }
        let cg_tol = (0.05 * last_primal).clamp(1e-12, 1e-4);
        cg_normal(&ws, &rhs, &mut x, cg_tol, &mut scratch);

        ws.apply_m(&x, &mut mx_eq, &mut mx_cone);
        for (i, v) in mx_eq.iter_mut().enumerate() {
            *v -= g_eq[i];
        }

        // over-relaxed cone update and scaled dual ascent
        let mut pr2 = 0.0f64;
        let mut dz2 = 0.0f64;
        for i in 0..mx_eq.len() {
            let w = OVER_RELAX * mx_eq[i] + (1.0 - OVER_RELAX) * z_eq[i];
            let znew = 0.0; // zero cone
            u_eq[i] += w - znew;
            pr2 += (mx_eq[i] - znew) * (mx_eq[i] - znew);
            dz2 += (znew - z_eq[i]) * (znew - z_eq[i]);
            z_eq[i] = znew;
        }
        for j in 0..mx_cone.len() {
            let w = &mx_cone[j] * cr(OVER_RELAX) + &z_cone[j] * cr(1.0 - OVER_RELAX);
            let arg = &w + &u_cone[j];
            let znew = linalg::project_psd(&arg)?;
            let du = &w - &znew;
            u_cone[j] += &du;
            pr2 += (&mx_cone[j] - &znew).iter().map(|v| v.norm_sqr()).sum::<f64>();
            dz2 += (&znew - &z_cone[j]).iter().map(|v| v.norm_sqr()).sum::<f64>();
            z_cone[j] = znew;
        }
        let primal = pr2.sqrt();
        // dual residual σ‖M'(z_new − z_old)‖ ≈ σ·‖Δz‖ up to the M' norm;
        // we report the cone-space norm, consistent across iterations
        let dual = SIGMA * dz2.sqrt();
        last_primal = primal;
        report.iterations = it;
        report.primal_residual = primal;
        report.dual_residual = dual;
        if it % SAMPLE_EVERY == 0 {
            history.push((it, primal, dual));
        }

        if primal < opts.tol && dual < opts.tol {
            report.status = SolveStatus::Optimal;
            break;
        }

        let xnorm = x.iter().map(|m| linalg::frob_norm(m)).fold(0.0, f64::max);
        if !xnorm.is_finite() || xnorm > DIVERGENCE_NORM {
            report.status = SolveStatus::Infeasible;
            break;
        }

        // Farkas drift check every 100 iterations
        if it % 100 == 0 {
            if let Some((pe, pc)) = &u_snapshot {
                let dy_eq: Vec<f64> = u_eq.iter().zip(pe).map(|(a, b)| a - b).collect();
                let dy_cone: Vec<CMat> =
                    u_cone.iter().zip(pc).map(|(a, b)| a - b).collect();
                let n = norm_cone_space(&dy_eq, &dy_cone);
                if n > 1e-6 {
                    let ye: Vec<f64> = dy_eq.iter().map(|v| v / n).collect();
                    let yc: Vec<CMat> = dy_cone.iter().map(|m| m / cr(n)).collect();
                    ws.apply_mt(&ye, &yc, &mut scratch.ax);
                    let mty = scratch.ax.iter().map(|m| linalg::frob_norm(m)).fold(0.0, f64::max);
                    let gy: f64 = g_eq.iter().zip(&ye).map(|(a, b)| a * b).sum();
                    let cone_range = yc.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, m| {
                        let lo = linalg::min_eig(m).unwrap_or(f64::NEG_INFINITY);
                        let hi = -linalg::min_eig(&(-m)).unwrap_or(f64::NEG_INFINITY);
                        (acc.0.min(lo), acc.1.max(hi))
                    });
                    // either orientation of the drift can be the certificate
                    let pos_ok = gy > 1e-9 && cone_range.0 > -1e-7;
                    let neg_ok = gy < -1e-9 && cone_range.1 < 1e-7;
                    if mty < 1e-7 && (pos_ok || neg_ok) {
                        report.status = SolveStatus::Infeasible;
                        break;
                    }
                }
            }
            u_snapshot = Some((u_eq.clone(), u_cone.clone()));
        }
    }

    report.objective = dot_blocks(&ws.obj, &x);
    report.residual_history = history;
    let mut out = HashMap::new();
    for (name, &bi) in &ws.block_idx {
        out.insert(name.clone(), x[bi].clone());
    }
    let _ = ws.n_blocks();
    Ok((out, report))
}
