//! Dense complex linear algebra over multi-qubit registers.
//!
//! Everything here is dense and eager: the largest object in scope is a
//! 64×64 (six-qubit) density matrix, so there is no point in sparse or
//! structured storage. Qubit index 0 is the *most significant* bit of a
//! computational-basis label, i.e. basis state `|i₅i₄…i₀⟩` read left to
//! right. All operations are pure functions and safe to call from any
//! thread.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Elementwise Hermiticity tolerance for checked constructors.
pub const HERM_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue of a checked density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Norm / trace normalization tolerance.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian: max |H - H^dag| element = {max_dev:.3e} (tol {tol:.1e})")]
    NotHermitian { max_dev: f64, tol: f64 },
    #[error("vector norm {norm} deviates from 1 beyond {tol:.1e}")]
    NotNormalized { norm: f64, tol: f64 },
    #[error("trace {trace} deviates from 1 beyond {tol:.1e}")]
    BadTrace { trace: f64, tol: f64 },
    #[error("matrix is not PSD: minimum eigenvalue {min_eig:.3e} (tol {tol:.1e})")]
    NotPsd { min_eig: f64, tol: f64 },
    #[error("{perm:?} is not a permutation of 0..{n}")]
    BadPermutation { n: usize, perm: Vec<usize> },
    #[error("subsystem index {idx} out of range for {n} subsystems")]
    SubsystemOutOfRange { idx: usize, n: usize },
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Maximum elementwise deviation from Hermiticity.
pub fn herm_deviation(m: &CMat) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && herm_deviation(m) <= tol
}

/// Tr[A† B]; real by construction when both arguments are Hermitian.
pub fn hs_inner(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc.re
}

pub fn frob_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// y += a·x without allocating.
pub fn add_scaled(y: &mut CMat, a: C64, x: &CMat) {
    debug_assert_eq!(y.shape(), x.shape());
    for (yv, xv) in y.iter_mut().zip(x.iter()) {
        *yv += a * xv;
    }
}

/// |ψ⟩⟨ψ|.
pub fn outer(psi: &CVec) -> CMat {
    let d = psi.len();
    CMat::from_fn(d, d, |r, c| psi[r] * psi[c].conj())
}

/// Kronecker product with the first factor most significant.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    let (la, lb) = (a.len(), b.len());
    CVec::from_fn(la * lb, |i, _| a[i / lb] * b[i % lb])
}

fn check_perm(n: usize, perm: &[usize]) -> Result<(), LinalgError> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(LinalgError::BadPermutation { n, perm: perm.to_vec() });
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(LinalgError::BadPermutation { n, perm: perm.to_vec() });
        }
        seen[p] = true;
    }
    Ok(())
}

/// Flat-index source map for reordering tensor factors: entry `t` of the
/// new factor list is old factor `perm[t]`. Returns `src` with
/// `new_vec[i] = old_vec[src[i]]`.
fn factor_permutation_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let n = dims.len();
    let d: usize = dims.iter().product();
    // strides of the original layout (factor 0 most significant)
    let mut stride = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * dims[i + 1];
    }
    let new_dims: Vec<usize> = perm.iter().map(|&s| dims[s]).collect();
    let mut src = vec![0usize; d];
    for (ni, slot) in src.iter_mut().enumerate() {
        let mut rem = ni;
        let mut oi = 0usize;
        for t in 0..n {
            let block: usize = new_dims[t + 1..].iter().product();
            let digit = rem / block;
            rem %= block;
            oi += digit * stride[perm[t]];
        }
        *slot = oi;
    }
    src
}

/// Reorder the tensor factors of a matrix so that new factor `t` is old
/// factor `perm[t]`.
pub fn permute_kron_factors(m: &CMat, dims: &[usize], perm: &[usize]) -> Result<CMat, LinalgError> {
    check_perm(dims.len(), perm)?;
    let d: usize = dims.iter().product();
    if m.nrows() != d || m.ncols() != d {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix is {}x{}, dims give {}",
            m.nrows(),
            m.ncols(),
            d
        )));
    }
    let src = factor_permutation_map(dims, perm);
    Ok(CMat::from_fn(d, d, |r, cidx| m[(src[r], src[cidx])]))
}

pub fn permute_kron_factors_vec(
    v: &CVec,
    dims: &[usize],
    perm: &[usize],
) -> Result<CVec, LinalgError> {
    check_perm(dims.len(), perm)?;
    let d: usize = dims.iter().product();
    if v.len() != d {
        return Err(LinalgError::DimensionMismatch(format!(
            "vector is {}, dims give {}",
            v.len(),
            d
        )));
    }
    let src = factor_permutation_map(dims, perm);
    Ok(CVec::from_fn(d, |i, _| v[src[i]]))
}

/// Flat-index map realizing partial transposition on `subset`:
/// output entry `(r, c)` reads input entry `enc(r, c)` where the digits of
/// the transposed subsystems have been swapped between row and column.
/// The map is returned over flattened indices `r * d + c`.
pub fn partial_transpose_map(dims: &[usize], subset: &[usize]) -> Result<Vec<usize>, LinalgError> {
    let n = dims.len();
    for &s in subset {
        if s >= n {
            return Err(LinalgError::SubsystemOutOfRange { idx: s, n });
        }
    }
    let d: usize = dims.iter().product();
    let mut stride = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * dims[i + 1];
    }
    let mut in_subset = vec![false; n];
    for &s in subset {
        in_subset[s] = true;
    }
    let mut map = vec![0usize; d * d];
    for r in 0..d {
        for col in 0..d {
            let (mut rr, mut cc) = (0usize, 0usize);
            for t in 0..n {
                let rd = (r / stride[t]) % dims[t];
                let cd = (col / stride[t]) % dims[t];
                let (nrd, ncd) = if in_subset[t] { (cd, rd) } else { (rd, cd) };
                rr += nrd * stride[t];
                cc += ncd * stride[t];
            }
            map[r * d + col] = rr * d + cc;
        }
    }
    Ok(map)
}

/// Partial transpose over the given subsystem subset. Involutive and
/// trace-preserving; an empty subset is the identity.
pub fn partial_transpose(m: &CMat, dims: &[usize], subset: &[usize]) -> Result<CMat, LinalgError> {
    let d: usize = dims.iter().product();
    if m.nrows() != d || m.ncols() != d {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix is {}x{}, dims give {}",
            m.nrows(),
            m.ncols(),
            d
        )));
    }
    let map = partial_transpose_map(dims, subset)?;
    let mut out = CMat::zeros(d, d);
    for r in 0..d {
        for col in 0..d {
            let s = map[r * d + col];
            out[(r, col)] = m[(s / d, s % d)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending, columns
/// of the returned matrix are the matching orthonormal eigenvectors.
pub fn eig_hermitian(h: &CMat) -> Result<(Vec<f64>, CMat), LinalgError> {
    let dev = herm_deviation(h);
    if dev > HERM_TOL {
        return Err(LinalgError::NotHermitian { max_dev: dev, tol: HERM_TOL });
    }
    let se = nalgebra::SymmetricEigen::new(h.clone());
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let d = h.nrows();
    let vecs = CMat::from_fn(d, d, |r, c| se.eigenvectors[(r, idx[c])]);
    Ok((vals, vecs))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig(h: &CMat) -> Result<f64, LinalgError> {
    Ok(eig_hermitian(h)?.0[0])
}

/// Frobenius-nearest PSD matrix: clip negative eigenvalues to zero.
pub fn project_psd(h: &CMat) -> Result<CMat, LinalgError> {
    let (vals, vecs) = eig_hermitian(h)?;
    Ok(reassemble(&vals.iter().map(|&v| v.max(0.0)).collect::<Vec<_>>(), &vecs))
}

/// Principal square root of a PSD matrix. Eigenvalues below 1e-13·λmax are
/// treated as exact zeros so that round-off in the null space does not get
/// amplified by the root.
pub fn sqrt_psd(h: &CMat) -> Result<CMat, LinalgError> {
    let (vals, vecs) = eig_hermitian(h)?;
    if vals[0] < -PSD_TOL {
        return Err(LinalgError::NotPsd { min_eig: vals[0], tol: PSD_TOL });
    }
    let cut = vals.last().copied().unwrap_or(0.0).max(0.0) * 1e-13;
    let roots: Vec<f64> = vals.iter().map(|&v| if v > cut { v.sqrt() } else { 0.0 }).collect();
    Ok(reassemble(&roots, &vecs))
}

fn reassemble(vals: &[f64], vecs: &CMat) -> CMat {
    let d = vecs.nrows();
    let mut scaled = vecs.clone();
    for c in 0..d {
        for r in 0..d {
            scaled[(r, c)] *= cr(vals[c]);
        }
    }
    let out = &scaled * vecs.adjoint();
    // re-hermitize to wash multiplication round-off
    CMat::from_fn(d, d, |r, c| (out[(r, c)] + out[(c, r)].conj()) * cr(0.5))
}

/// Uhlmann fidelity F(ρ,σ) = (Tr √(√ρ σ √ρ))², computed as the squared
/// nuclear norm of √σ·√ρ so that null-space round-off enters linearly
/// instead of under a square root. Both inputs must be PSD.
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64, LinalgError> {
    let sr = sqrt_psd(rho)?;
    let ss = sqrt_psd(sigma)?;
    let tr: f64 = (&ss * &sr).singular_values().iter().sum();
    Ok((tr * tr).min(1.0))
}

pub fn hermitize(m: &CMat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |r, c| (m[(r, c)] + m[(c, r)].conj()) * cr(0.5))
}

/// Haar-random unit vector (complex Gaussian entries, normalized).
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    loop {
        let v = CVec::from_fn(dim, |_, _| {
            c(gauss(rng), gauss(rng))
        });
        let n = v.norm();
        if n > 1e-12 {
            return v / cr(n);
        }
    }
}

/// Ginibre-random density matrix of the given rank.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, rank.max(1), |_, _| c(gauss(rng), gauss(rng)));
    let m = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|i| m[(i, i)].re).sum();
    m / cr(tr)
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling a distributions crate for one sampler
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Normalized pure state over a register of qubit subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: CVec,
    dims: Vec<usize>,
}

impl Ket {
    pub fn new(amplitudes: CVec, dims: Vec<usize>) -> Result<Self, LinalgError> {
        let d: usize = dims.iter().product();
        if amplitudes.len() != d {
            return Err(LinalgError::DimensionMismatch(format!(
                "amplitude vector is {}, dims give {}",
                amplitudes.len(),
                d
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(LinalgError::NotNormalized { norm, tol: NORM_TOL });
        }
        Ok(Self { amplitudes, dims })
    }

    /// Computational basis state |index⟩ over `n` qubits.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let d = 1 << n_qubits;
        let mut amps = CVec::zeros(d);
        amps[index] = cr(1.0);
        Self { amplitudes: amps, dims: vec![2; n_qubits] }
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ket { amplitudes: kron_vec(&self.amplitudes, &other.amplitudes), dims }
    }

    pub fn permute(&self, perm: &[usize]) -> Result<Ket, LinalgError> {
        let amps = permute_kron_factors_vec(&self.amplitudes, &self.dims, perm)?;
        let dims = perm.iter().map(|&s| self.dims[s]).collect();
        Ok(Ket { amplitudes: amps, dims })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { entries: outer(&self.amplitudes), dims: self.dims.clone() }
    }
}

/// Checked density matrix: Hermitian, unit trace, PSD within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMat,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Full validation: Hermiticity, trace 1, minimum eigenvalue ≥ −1e-10.
    pub fn new(entries: CMat, dims: Vec<usize>) -> Result<Self, LinalgError> {
        let d: usize = dims.iter().product();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(LinalgError::DimensionMismatch(format!(
                "matrix is {}x{}, dims give {}",
                entries.nrows(),
                entries.ncols(),
                d
            )));
        }
        let dev = herm_deviation(&entries);
        if dev > 1e-12 {
            return Err(LinalgError::NotHermitian { max_dev: dev, tol: 1e-12 });
        }
        let tr: C64 = (0..d).map(|i| entries[(i, i)]).sum();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(LinalgError::BadTrace { trace: tr.re, tol: NORM_TOL });
        }
        let me = min_eig(&entries)?;
        if me < -PSD_TOL {
            return Err(LinalgError::NotPsd { min_eig: me, tol: PSD_TOL });
        }
        Ok(Self { entries, dims })
    }

    /// Constructor for callers that guarantee validity structurally
    /// (convex mixtures of pure states, permutations of valid states, …);
    /// skips the eigensolve.
    pub fn from_valid_parts(entries: CMat, dims: Vec<usize>) -> Self {
        debug_assert!(herm_deviation(&entries) <= 1e-9);
        Self { entries, dims }
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat {
        self.entries
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dims.len()
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self {
            entries: CMat::identity(d, d) * cr(1.0 / d as f64),
            dims: vec![2; n_qubits],
        }
    }

    /// Convex mixture Σ wᵢ ρᵢ. Weights must be nonnegative and sum to 1.
    pub fn mix(weights: &[f64], states: &[DensityMatrix]) -> Result<Self, LinalgError> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(LinalgError::DimensionMismatch(
                "weights and states must be equal-length and nonempty".into(),
            ));
        }
        let wsum: f64 = weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-12 || weights.iter().any(|&w| w < 0.0) {
            return Err(LinalgError::BadTrace { trace: wsum, tol: 1e-12 });
        }
        let dims = states[0].dims.clone();
        let d = states[0].dim();
        let mut acc = CMat::zeros(d, d);
        for (w, s) in weights.iter().zip(states) {
            if s.dims != dims {
                return Err(LinalgError::DimensionMismatch("mixture dims differ".into()));
            }
            acc += &s.entries * cr(*w);
        }
        Ok(Self { entries: acc, dims })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix { entries: kron(&self.entries, &other.entries), dims }
    }

    /// (1−t)·ρ + t·I/d.
    pub fn mix_with_white_noise(&self, t: f64) -> Result<DensityMatrix, LinalgError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(LinalgError::BadTrace { trace: t, tol: 1.0 });
        }
        let d = self.dim();
        let entries =
            &self.entries * cr(1.0 - t) + CMat::identity(d, d) * cr(t / d as f64);
        Ok(DensityMatrix { entries, dims: self.dims.clone() })
    }

    /// Reorder tensor factors; new factor `t` is old factor `perm[t]`.
    pub fn permute_subsystems(&self, perm: &[usize]) -> Result<DensityMatrix, LinalgError> {
        let entries = permute_kron_factors(&self.entries, &self.dims, perm)?;
        let dims = perm.iter().map(|&s| self.dims[s]).collect();
        Ok(DensityMatrix { entries, dims })
    }

    pub fn partial_transpose(&self, subset: &[usize]) -> Result<CMat, LinalgError> {
        partial_transpose(&self.entries, &self.dims, subset)
    }

    pub fn purity(&self) -> f64 {
        hs_inner(&self.entries, &self.entries)
    }
}
