//! Shot-level simulation of the two-copy witness measurement and Pauli
//! tomography of the constituents.
//!
//! The measured object is the 100-entry family of constituent pairs
//! |a_i⟩⊗|a_j⟩ (party-major order). Every pair is measured in 17 settings:
//! one all-Z setting covering the 16 diagonal witness words and one setting
//! per X/Y word. Relative frequencies feed a linear estimator whose weights
//! fold the mixture weights w_i w_j, the witness Pauli coefficients, the
//! ±1 parity vectors, and the global 1/64 normalization into a single
//! tensor, so that ⟨W⟩ is a plain dot product with the frequency table.
//! Variances propagate through the multinomial covariance of each table row
//! without ever materializing the covariance matrix.

use crate::linalg::{self, cr, CMat, DensityMatrix};
use crate::pauli::{self, MeasurementSetting, PauliString};
use crate::states::{self, MixtureSpec, N_CONSTITUENTS};
use crate::witness::reference_witness;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

pub const N_SETTINGS: usize = 17;
pub const N_OUTCOMES: usize = 64;
const TABLE_LEN: usize = N_CONSTITUENTS * N_CONSTITUENTS * N_SETTINGS * N_OUTCOMES;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("noise strengths must lie in [0, 1]: depolarizing {depolarizing}, dephasing {dephasing}")]
    BadNoise { depolarizing: f64, dephasing: f64 },
    #[error("shot count must be ≥ 1")]
    BadShots,
    #[error("resampling needs at least 2 runs and a sampled table (n ≥ 1)")]
    BadResample,
    #[error("frequency table and estimator weights disagree in shape or setting order")]
    ShapeMismatch,
    #[error(transparent)]
    State(#[from] states::StateError),
    #[error(transparent)]
    Pauli(#[from] pauli::PauliError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Depolarizing noise applied to every constituent state plus local
/// dephasing on every qubit. Defaults to the ideal (noiseless) pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub depolarizing: f64,
    pub dephasing: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { depolarizing: 0.0, dephasing: 0.0 }
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    fn validate(&self) -> Result<(), SimError> {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        if ok(self.depolarizing) && ok(self.dephasing) {
            Ok(())
        } else {
            Err(SimError::BadNoise {
                depolarizing: self.depolarizing,
                dephasing: self.dephasing,
            })
        }
    }

    /// Apply to one constituent: depolarize the full 3-qubit state, then
    /// dephase each qubit.
    fn apply(&self, rho: &CMat) -> CMat {
        let d = rho.nrows();
        let mut out = rho * cr(1.0 - self.depolarizing);
        for i in 0..d {
            out[(i, i)] += cr(self.depolarizing / d as f64);
        }
        if self.dephasing > 0.0 {
            let nq = d.trailing_zeros() as usize;
            for q in 0..nq {
                let mask = 1usize << (nq - 1 - q);
                let mut next = out.clone();
                for r in 0..d {
                    for c in 0..d {
                        // Z_q ρ Z_q flips the sign where the q-th bits differ
                        let sign = if (r & mask) != (c & mask) { -1.0 } else { 1.0 };
                        next[(r, c)] =
                            out[(r, c)] * cr(1.0 - self.dephasing + self.dephasing * sign);
                    }
                }
                out = next;
            }
        }
        out
    }
}

/// Single-qubit rotation taking the given measurement axis to Z.
fn basis_rotation(symbol: char) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match symbol {
        // Hadamard
        'X' => CMat::from_row_slice(2, 2, &[cr(s), cr(s), cr(s), cr(-s)]),
        // H·S†
        'Y' => CMat::from_row_slice(
            2,
            2,
            &[cr(s), linalg::c(0.0, -s), cr(s), linalg::c(0.0, s)],
        ),
        _ => CMat::identity(2, 2),
    }
}

/// Projective-readout distribution: rotate each qubit into the setting's
/// basis and read the diagonal in the computational basis.
pub fn born_distribution_for_word(rho: &DensityMatrix, word: &str) -> Result<Vec<f64>, SimError> {
    if word.len() != rho.n_qubits() {
        return Err(SimError::ShapeMismatch);
    }
    let mut u = CMat::identity(1, 1);
    for sym in word.chars() {
        u = linalg::kron(&u, &basis_rotation(sym));
    }
    let d = rho.dim();
    let rotated = &u * rho.matrix();
    let mut p = vec![0.0; d];
    for l in 0..d {
        let mut acc = 0.0;
        for c in 0..d {
            acc += (rotated[(l, c)] * u[(l, c)].conj()).re;
        }
        p[l] = acc.max(0.0);
    }
    let total: f64 = p.iter().sum();
    debug_assert!((total - 1.0).abs() < 1e-10, "Born distribution sums to {total}");
    Ok(p)
}

pub fn born_distribution(
    rho: &DensityMatrix,
    setting: &MeasurementSetting,
) -> Result<Vec<f64>, SimError> {
    born_distribution_for_word(rho, &setting.basis)
}

/// The witness Pauli terms split into the Z sector (words over {I, Z},
/// covered by the all-Z setting) and the X/Y sector (one setting each),
/// both in enumeration order.
fn witness_sectors() -> (Vec<PauliString>, Vec<PauliString>) {
    let terms = pauli::pauli_coefficients(&reference_witness().w).expect("64-dim witness");
    let is_z = |w: &str| w.chars().all(|c| c == 'I' || c == 'Z');
    let z: Vec<PauliString> = terms.iter().filter(|t| is_z(&t.word)).cloned().collect();
    let xy: Vec<PauliString> = terms.iter().filter(|t| !is_z(&t.word)).cloned().collect();
    debug_assert_eq!(z.len(), 16);
    debug_assert_eq!(xy.len(), 16);
    (z, xy)
}

/// The 17 measurement settings of the witness, all-Z first.
pub fn witness_setting_words() -> Vec<String> {
    let (_, xy) = witness_sectors();
    let mut words = vec!["ZZZZZZ".to_string()];
    words.extend(xy.into_iter().map(|t| t.word));
    words
}

/// Relative-frequency table over (pair i, pair j, setting, outcome).
/// `n = 0` marks the analytic (infinite-shot) limit where entries are exact
/// Born probabilities; any sampled table has every entry an integer
/// multiple of 1/n.
#[derive(Debug, Clone)]
pub struct ShotTable {
    pub f: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub setting_words: Vec<String>,
}

#[inline]
pub fn table_index(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * N_CONSTITUENTS + j) * N_SETTINGS + k) * N_OUTCOMES + l
}

impl ShotTable {
    pub fn row(&self, i: usize, j: usize, k: usize) -> &[f64] {
        let base = table_index(i, j, k, 0);
        &self.f[base..base + N_OUTCOMES]
    }
}

/// Exact per-pair outcome distributions. Pairs are product across the two
/// copies, so the 64-outcome distribution factorizes into two 3-qubit Born
/// distributions: copy 1 reads the setting symbols at register positions
/// 0, 2, 4 and the outcome bits A₁B₁C₁; copy 2 the complementary ones.
fn pair_distribution_table(q: f64, noise: &NoiseModel) -> Result<Vec<f64>, SimError> {
    noise.validate()?;
    let words = witness_setting_words();
    let constituents: Vec<DensityMatrix> = (0..N_CONSTITUENTS)
        .map(|i| {
            let ket = states::constituent_ket(i)?;
            let noisy = noise.apply(&linalg::outer(ket.amplitudes()));
            Ok(DensityMatrix::from_valid_parts(noisy, vec![2, 2, 2]))
        })
        .collect::<Result<_, SimError>>()?;
    // distinct 3-qubit sub-words per copy side
    let sub = |w: &str, offset: usize| -> String {
        let ch: Vec<char> = w.chars().collect();
        [ch[offset], ch[2 + offset], ch[4 + offset]].iter().collect()
    };
    let mut f = vec![0.0; TABLE_LEN];
    for (k, w) in words.iter().enumerate() {
        let w1 = sub(w, 0);
        let w2 = sub(w, 1);
        let born1: Vec<Vec<f64>> = constituents
            .iter()
            .map(|c| born_distribution_for_word(c, &w1))
            .collect::<Result<_, _>>()?;
        let born2: Vec<Vec<f64>> = constituents
            .iter()
            .map(|c| born_distribution_for_word(c, &w2))
            .collect::<Result<_, _>>()?;
        for i in 0..N_CONSTITUENTS {
            for j in 0..N_CONSTITUENTS {
                for l in 0..N_OUTCOMES {
                    // outcome bits, MSB-first: A₁ A₂ B₁ B₂ C₁ C₂
                    let b1 = ((l >> 5) & 1) << 2 | ((l >> 3) & 1) << 1 | ((l >> 1) & 1);
                    let b2 = ((l >> 4) & 1) << 2 | ((l >> 2) & 1) << 1 | (l & 1);
                    f[table_index(i, j, k, l)] = born1[i][b1] * born2[j][b2];
                }
            }
        }
    }
    let _ = q; // weights enter through the estimator, not the table
    Ok(f)
}

/// Analytic (infinite-shot) table: frequencies are exact probabilities.
pub fn exact_shot_table(q: f64, noise: &NoiseModel) -> Result<ShotTable, SimError> {
    MixtureSpec::new(q)?;
    let f = pair_distribution_table(q, noise)?;
    Ok(ShotTable { f, n: 0, seed: 0, setting_words: witness_setting_words() })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Independent, schedule-free RNG stream for one table cell.
fn cell_rng(seed: u64, cell: usize) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(splitmix64(seed ^ splitmix64(cell as u64)))
}

fn multinomial_row<R: Rng + ?Sized>(rng: &mut R, n: usize, probs: &[f64]) -> Vec<f64> {
    let mut counts = vec![0u32; probs.len()];
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut drawn = probs.len() - 1;
        for (l, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                drawn = l;
                break;
            }
        }
        counts[drawn] += 1;
    }
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

/// Draw n shots per (pair, setting) cell from the Born distributions.
/// Each cell consumes its own derived RNG stream, so the table is bitwise
/// reproducible independent of thread scheduling.
pub fn sample_shot_table(
    q: f64,
    noise: &NoiseModel,
    n: usize,
    seed: u64,
) -> Result<ShotTable, SimError> {
    if n == 0 {
        return Err(SimError::BadShots);
    }
    MixtureSpec::new(q)?;
    let exact = pair_distribution_table(q, noise)?;
    let cells = N_CONSTITUENTS * N_CONSTITUENTS * N_SETTINGS;
    let rows: Vec<Vec<f64>> = (0..cells)
        .into_par_iter()
        .map(|cell| {
            let mut rng = cell_rng(seed, cell);
            let base = cell * N_OUTCOMES;
            multinomial_row(&mut rng, n, &exact[base..base + N_OUTCOMES])
        })
        .collect();
    let mut f = vec![0.0; TABLE_LEN];
    for (cell, row) in rows.into_iter().enumerate() {
        f[cell * N_OUTCOMES..(cell + 1) * N_OUTCOMES].copy_from_slice(&row);
    }
    Ok(ShotTable { f, n, seed, setting_words: witness_setting_words() })
}

/// Estimator weight tensor M′: the dot product f′·M′ is the witness
/// estimate. The all-Z setting carries the merged Z-sector coefficients;
/// every other setting carries its single X/Y word. The witness
/// normalization 1/64 is folded in here once.
#[derive(Debug, Clone)]
pub struct EstimatorWeights {
    pub m: Vec<f64>,
    pub q: f64,
    pub setting_words: Vec<String>,
}

pub fn estimator_weights(q: f64) -> Result<EstimatorWeights, SimError> {
    let spec = MixtureSpec::new(q)?;
    let (z, xy) = witness_sectors();
    // merged Z-sector parity profile: Σ_k m_k h_k over the 16 I/Z words
    let mut zprofile = vec![0.0; N_OUTCOMES];
    for t in &z {
        let h = pauli::parity_vector(&t.word)?;
        for l in 0..N_OUTCOMES {
            zprofile[l] += t.weight * h[l];
        }
    }
    let xy_profiles: Vec<(f64, Vec<f64>)> = xy
        .iter()
        .map(|t| Ok((t.weight, pauli::parity_vector(&t.word)?)))
        .collect::<Result<_, SimError>>()?;
    let mut m = vec![0.0; TABLE_LEN];
    let norm = 1.0 / 64.0;
    for i in 0..N_CONSTITUENTS {
        for j in 0..N_CONSTITUENTS {
            let wij = spec.weights[i] * spec.weights[j];
            for l in 0..N_OUTCOMES {
                m[table_index(i, j, 0, l)] = wij * zprofile[l] * norm;
            }
            for (k, (coef, h)) in xy_profiles.iter().enumerate() {
                for l in 0..N_OUTCOMES {
                    m[table_index(i, j, k + 1, l)] = wij * coef * h[l] * norm;
                }
            }
        }
    }
    Ok(EstimatorWeights { m, q, setting_words: witness_setting_words() })
}

fn check_shapes(t: &ShotTable, weights: &EstimatorWeights) -> Result<(), SimError> {
    if t.f.len() != TABLE_LEN
        || weights.m.len() != TABLE_LEN
        || t.setting_words != weights.setting_words
    {
        return Err(SimError::ShapeMismatch);
    }
    Ok(())
}

/// ⟨W⟩ = f′·M′.
pub fn estimate_witness(t: &ShotTable, weights: &EstimatorWeights) -> Result<f64, SimError> {
    check_shapes(t, weights)?;
    Ok(t.f.iter().zip(&weights.m).map(|(f, m)| f * m).sum())
}

/// Multinomial error propagation, cell by cell. For each (i, j, k) row the
/// covariance is (δ_ll′ f_l − f_l f_l′)/n, so its quadratic form with M
/// reduces to (Σ M²f − (Σ Mf)²)/n: the diagonal part plus the rank-one ζ
/// correction, never materializing the 64×64 covariance.
pub fn propagate_variance(t: &ShotTable, weights: &EstimatorWeights) -> Result<f64, SimError> {
    check_shapes(t, weights)?;
    if t.n == 0 {
        return Ok(0.0);
    }
    let n = t.n as f64;
    let cells = N_CONSTITUENTS * N_CONSTITUENTS * N_SETTINGS;
    let mut var = 0.0;
    for cell in 0..cells {
        let base = cell * N_OUTCOMES;
        let mut mf = 0.0;
        let mut mmf = 0.0;
        for l in 0..N_OUTCOMES {
            let f = t.f[base + l];
            let m = weights.m[base + l];
            mf += m * f;
            mmf += m * m * f;
        }
        var += (mmf - mf * mf) / n;
    }
    Ok(var.max(0.0))
}

/// Monte Carlo resampling: redraw every cell from a multinomial around the
/// observed frequencies and re-estimate, `runs` times.
pub fn resample_witness(
    t: &ShotTable,
    weights: &EstimatorWeights,
    runs: usize,
    seed: u64,
) -> Result<Vec<f64>, SimError> {
    check_shapes(t, weights)?;
    if runs < 2 || t.n == 0 {
        return Err(SimError::BadResample);
    }
    let cells = N_CONSTITUENTS * N_CONSTITUENTS * N_SETTINGS;
    let estimates: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut est = 0.0;
            for cell in 0..cells {
                let mut rng = cell_rng(seed ^ splitmix64(run as u64 + 1), cell);
                let base = cell * N_OUTCOMES;
                let row = multinomial_row(&mut rng, t.n, &t.f[base..base + N_OUTCOMES]);
                for l in 0..N_OUTCOMES {
                    est += row[l] * weights.m[base + l];
                }
            }
            est
        })
        .collect();
    Ok(estimates)
}

/// Histogram CSV with a single `estimate` column, one row per resample.
pub fn estimates_to_csv(estimates: &[f64]) -> String {
    let mut out = String::from("estimate\n");
    for e in estimates {
        out.push_str(&format!("{e:.12e}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// Pauli tomography of a single 3-qubit constituent with MLE reconstruction.

/// All 27 three-qubit settings over {X, Y, Z}.
pub fn tomography_settings() -> Vec<String> {
    let axes = ['X', 'Y', 'Z'];
    let mut words = Vec::with_capacity(27);
    for a in axes {
        for b in axes {
            for c in axes {
                words.push([a, b, c].iter().collect());
            }
        }
    }
    words
}

const MLE_MAX_ITERS: usize = 5000;
const MLE_LL_TOL: f64 = 1e-10;

/// Iterative maximum-likelihood reconstruction (multiplicative R·ρ·R
/// fixed point, started from the maximally mixed state) from per-setting
/// outcome counts.
fn mle_reconstruct(rotations: &[CMat], counts: &[Vec<f64>]) -> DensityMatrix {
    let d = rotations[0].nrows();
    let nq = d.trailing_zeros() as usize;
    let total: f64 = counts.iter().flatten().sum();
    let mut rho = CMat::identity(d, d) / cr(d as f64);
    let mut last_ll = f64::NEG_INFINITY;
    for _ in 0..MLE_MAX_ITERS {
        let mut r = CMat::zeros(d, d);
        let mut ll = 0.0;
        for (u, c_row) in rotations.iter().zip(counts) {
            let rot = u * &rho * u.adjoint();
            // R += U† diag(c_l / p_l) U
            let mut diag = CMat::zeros(d, d);
            for l in 0..d {
                let p = rot[(l, l)].re.max(1e-300);
                if c_row[l] > 0.0 {
                    ll += c_row[l] * p.ln();
                    diag[(l, l)] = cr(c_row[l] / p);
                }
            }
            r += u.adjoint() * diag * u;
        }
        r /= cr(total);
        let next = linalg::hermitize(&(&r * &rho * &r));
        let tr: f64 = (0..d).map(|i| next[(i, i)].re).sum();
        rho = next / cr(tr);
        if ll - last_ll < MLE_LL_TOL && ll.is_finite() {
            break;
        }
        last_ll = ll;
    }
    DensityMatrix::from_valid_parts(rho, vec![2; nq])
}

fn tomography_rotations(dim_words: &[String]) -> Vec<CMat> {
    dim_words
        .iter()
        .map(|w| {
            let mut u = CMat::identity(1, 1);
            for sym in w.chars() {
                u = linalg::kron(&u, &basis_rotation(sym));
            }
            u
        })
        .collect()
}

/// Tomograph a 3-qubit state: sample `shots` outcomes per setting, then
/// reconstruct by MLE.
pub fn tomograph_constituent(
    rho_true: &DensityMatrix,
    shots: usize,
    seed: u64,
) -> Result<DensityMatrix, SimError> {
    if shots == 0 {
        return Err(SimError::BadShots);
    }
    let words = tomography_settings();
    let rotations = tomography_rotations(&words);
    let counts: Vec<Vec<f64>> = words
        .iter()
        .enumerate()
        .map(|(s, w)| {
            let p = born_distribution_for_word(rho_true, w)?;
            let mut rng = cell_rng(seed, s);
            Ok(multinomial_row(&mut rng, shots, &p)
                .into_iter()
                .map(|f| f * shots as f64)
                .collect())
        })
        .collect::<Result<_, SimError>>()?;
    Ok(mle_reconstruct(&rotations, &counts))
}

/// Tomography in the exact-probability limit: counts are the Born
/// probabilities themselves (MLE consistency check).
pub fn tomograph_constituent_exact(rho_true: &DensityMatrix) -> Result<DensityMatrix, SimError> {
    let words = tomography_settings();
    let rotations = tomography_rotations(&words);
    let counts: Vec<Vec<f64>> = words
        .iter()
        .map(|w| born_distribution_for_word(rho_true, w))
        .collect::<Result<_, _>>()?;
    Ok(mle_reconstruct(&rotations, &counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Ket;
    use approx::assert_abs_diff_eq;

    #[test]
    fn born_all_z_on_basis_state() {
        let rho = Ket::basis(6, 0).to_density();
        let p = born_distribution_for_word(&rho, "ZZZZZZ").unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-14);
        assert!(p[1..].iter().all(|&x| x < 1e-14));
    }

    #[test]
    fn born_x_on_plus_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus =
            Ket::new(linalg::CVec::from_vec(vec![cr(s), cr(s)]), vec![2]).unwrap().to_density();
        let p = born_distribution_for_word(&plus, "X").unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn born_matches_dense_rotation_oracle() {
        // independent oracle: conjugate by the materialized 64×64 unitary
        // and read the diagonal with a different code path
        let rho = states::constituent_pair(0, 0).unwrap();
        let p = born_distribution_for_word(&rho, "XXXXXX").unwrap();
        let h = basis_rotation('X');
        let mut u = CMat::identity(1, 1);
        for _ in 0..6 {
            u = linalg::kron(&u, &h);
        }
        let full = &u * rho.matrix() * u.adjoint();
        for l in 0..64 {
            assert_abs_diff_eq!(p[l], full[(l, l)].re, epsilon = 1e-12);
        }
        let total: f64 = p.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn factorized_table_matches_direct_born() {
        // the product-across-copies factorization against the generic
        // 6-qubit path, on a non-trivial setting
        let table = exact_shot_table(0.0, &NoiseModel::ideal()).unwrap();
        let words = witness_setting_words();
        for (i, j) in [(0usize, 0usize), (2, 5), (8, 9)] {
            let pair = states::constituent_pair(i, j).unwrap();
            for k in [0usize, 1, 16] {
                let direct = born_distribution_for_word(&pair, &words[k]).unwrap();
                let row = table.row(i, j, k);
                for l in 0..N_OUTCOMES {
                    assert_abs_diff_eq!(row[l], direct[l], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_table_reproduces_witness_value() {
        // pins the 1/64 normalization end to end
        for q in [0.0, 0.06] {
            let table = exact_shot_table(q, &NoiseModel::ideal()).unwrap();
            let weights = estimator_weights(q).unwrap();
            let est = estimate_witness(&table, &weights).unwrap();
            let rho = states::n_copy_state(q, 2).unwrap();
            let exact = linalg::hs_inner(&reference_witness().w, rho.matrix());
            assert_abs_diff_eq!(est, exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_values_match_reported_numbers() {
        // the rounded headline numbers; the exact fractions are −1/96 and
        // −2137/240000
        let weights0 = estimator_weights(0.0).unwrap();
        let t0 = exact_shot_table(0.0, &NoiseModel::ideal()).unwrap();
        let est0 = estimate_witness(&t0, &weights0).unwrap();
        assert_abs_diff_eq!(est0, -1.042e-2, epsilon = 5e-5);
        assert_abs_diff_eq!(est0, -1.0 / 96.0, epsilon = 1e-13);
        let weights6 = estimator_weights(0.06).unwrap();
        let t6 = exact_shot_table(0.06, &NoiseModel::ideal()).unwrap();
        let est6 = estimate_witness(&t6, &weights6).unwrap();
        assert_abs_diff_eq!(est6, -0.887e-2, epsilon = 1e-4);
        assert_abs_diff_eq!(est6, -2137.0 / 240_000.0, epsilon = 1e-13);
    }

    #[test]
    fn maximally_mixed_input_estimates_one_over_64() {
        // fully depolarized constituents make every pair maximally mixed
        let noise = NoiseModel { depolarizing: 1.0, dephasing: 0.0 };
        let table = exact_shot_table(0.0, &noise).unwrap();
        let weights = estimator_weights(0.0).unwrap();
        assert_abs_diff_eq!(
            estimate_witness(&table, &weights).unwrap(),
            1.0 / 64.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sampled_rows_are_multiples_of_one_over_n() {
        let t = sample_shot_table(0.06, &NoiseModel::ideal(), 50, 7).unwrap();
        let cells = N_CONSTITUENTS * N_CONSTITUENTS * N_SETTINGS;
        for cell in 0..cells {
            let row = &t.f[cell * N_OUTCOMES..(cell + 1) * N_OUTCOMES];
            let sum: f64 = row.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            for &x in row {
                let scaled = x * 50.0;
                assert_abs_diff_eq!(scaled, scaled.round(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn single_shot_rows_are_one_hot() {
        let t = sample_shot_table(0.0, &NoiseModel::ideal(), 1, 3).unwrap();
        let cells = N_CONSTITUENTS * N_CONSTITUENTS * N_SETTINGS;
        for cell in 0..cells {
            let row = &t.f[cell * N_OUTCOMES..(cell + 1) * N_OUTCOMES];
            let ones = row.iter().filter(|&&x| (x - 1.0).abs() < 1e-15).count();
            let zeros = row.iter().filter(|&&x| x == 0.0).count();
            assert_eq!(ones, 1);
            assert_eq!(zeros, N_OUTCOMES - 1);
        }
    }

    #[test]
    fn sampling_is_bitwise_reproducible() {
        let a = sample_shot_table(0.06, &NoiseModel::ideal(), 50, 42).unwrap();
        let b = sample_shot_table(0.06, &NoiseModel::ideal(), 50, 42).unwrap();
        assert!(a.f.iter().zip(&b.f).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = sample_shot_table(0.06, &NoiseModel::ideal(), 50, 43).unwrap();
        assert!(a.f.iter().zip(&c.f).any(|(x, y)| x != y));
    }

    #[test]
    fn variance_of_deterministic_table_is_zero() {
        let t = ShotTable {
            f: {
                let mut f = vec![0.0; TABLE_LEN];
                let cells = N_CONSTITUENTS * N_CONSTITUENTS * N_SETTINGS;
                for cell in 0..cells {
                    f[cell * N_OUTCOMES] = 1.0;
                }
                f
            },
            n: 50,
            seed: 0,
            setting_words: witness_setting_words(),
        };
        let weights = estimator_weights(0.06).unwrap();
        assert_abs_diff_eq!(propagate_variance(&t, &weights).unwrap(), 0.0, epsilon = 1e-18);
        let estimates = resample_witness(&t, &weights, 5, 1).unwrap();
        let first = estimates[0];
        assert!(estimates.iter().all(|&e| (e - first).abs() < 1e-15));
    }

    #[test]
    fn variance_matches_two_outcome_closed_form() {
        // one active cell, f = 1/2 on two outcomes read with weight ±1:
        // var = (1 − ⟨M⟩²)/n = 1/50
        let mut f = vec![0.0; TABLE_LEN];
        let mut m = vec![0.0; TABLE_LEN];
        let cells = N_CONSTITUENTS * N_CONSTITUENTS * N_SETTINGS;
        for cell in 0..cells {
            f[cell * N_OUTCOMES] = 1.0; // keep every row normalized
        }
        f[table_index(0, 0, 0, 0)] = 0.5;
        f[table_index(0, 0, 0, 1)] = 0.5;
        m[table_index(0, 0, 0, 0)] = 1.0;
        m[table_index(0, 0, 0, 1)] = -1.0;
        let t = ShotTable { f, n: 50, seed: 0, setting_words: witness_setting_words() };
        let w = EstimatorWeights { m, q: 0.0, setting_words: witness_setting_words() };
        assert_abs_diff_eq!(propagate_variance(&t, &w).unwrap(), 0.02, epsilon = 1e-15);
    }

    #[test]
    fn zeta_decomposition_matches_materialized_covariance() {
        // truncated instance: activate 2 constituents × 2 settings, then
        // build each row's full 64×64 multinomial covariance and contract
        let t = sample_shot_table(0.06, &NoiseModel::ideal(), 50, 11).unwrap();
        let full = estimator_weights(0.06).unwrap();
        let mut m = vec![0.0; TABLE_LEN];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..N_OUTCOMES {
                        let idx = table_index(i, j, k, l);
                        m[idx] = full.m[idx];
                    }
                }
            }
        }
        let w = EstimatorWeights { m, q: 0.06, setting_words: witness_setting_words() };
        let fast = propagate_variance(&t, &w).unwrap();
        let mut direct = 0.0;
        let n = 50.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let base = table_index(i, j, k, 0);
                    for l in 0..N_OUTCOMES {
                        for l2 in 0..N_OUTCOMES {
                            let cov = if l == l2 {
                                (t.f[base + l] - t.f[base + l] * t.f[base + l2]) / n
                            } else {
                                -t.f[base + l] * t.f[base + l2] / n
                            };
                            direct += w.m[base + l] * cov * w.m[base + l2];
                        }
                    }
                }
            }
        }
        assert_abs_diff_eq!(fast, direct, epsilon = 1e-12);
    }

    #[test]
    fn propagated_sigma_matches_seed_ensemble() {
        let weights = estimator_weights(0.06).unwrap();
        let mut estimates = Vec::new();
        let mut sigmas = Vec::new();
        for seed in 0..200 {
            let t = sample_shot_table(0.06, &NoiseModel::ideal(), 50, seed).unwrap();
            estimates.push(estimate_witness(&t, &weights).unwrap());
            sigmas.push(propagate_variance(&t, &weights).unwrap().sqrt());
        }
        let mean: f64 = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let sd = (estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (estimates.len() - 1) as f64)
            .sqrt();
        let sigma_mean: f64 = sigmas.iter().sum::<f64>() / sigmas.len() as f64;
        assert!(
            (sd - sigma_mean).abs() / sigma_mean < 0.2,
            "ensemble sd {sd:.3e} vs propagated {sigma_mean:.3e}"
        );
        // the paper-scale error bar: σ ≈ 0.5e-3 at 50 shots
        assert!(sigma_mean > 0.25e-3 && sigma_mean < 0.75e-3, "σ = {sigma_mean:.3e}");
    }

    #[test]
    fn estimator_is_unbiased_over_seeds() {
        let weights = estimator_weights(0.06).unwrap();
        let exact = {
            let t = exact_shot_table(0.06, &NoiseModel::ideal()).unwrap();
            estimate_witness(&t, &weights).unwrap()
        };
        let seeds = 500;
        let estimates: Vec<f64> = (0..seeds)
            .map(|seed| {
                let t = sample_shot_table(0.06, &NoiseModel::ideal(), 50, 1000 + seed).unwrap();
                estimate_witness(&t, &weights).unwrap()
            })
            .collect();
        let mean: f64 = estimates.iter().sum::<f64>() / seeds as f64;
        let sd = (estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (seeds - 1) as f64)
            .sqrt();
        let se = sd / (seeds as f64).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * se,
            "mean {mean:.4e} vs exact {exact:.4e}, 3 SE = {:.1e}",
            3.0 * se
        );
    }

    #[test]
    fn bootstrap_agrees_with_propagation() {
        let weights = estimator_weights(0.06).unwrap();
        let t = sample_shot_table(0.06, &NoiseModel::ideal(), 50, 5).unwrap();
        let sigma = propagate_variance(&t, &weights).unwrap().sqrt();
        let estimates = resample_witness(&t, &weights, 1000, 99).unwrap();
        let mean: f64 = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let sd = (estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (estimates.len() - 1) as f64)
            .sqrt();
        let ratio = sd / sigma;
        assert!((0.8..=1.2).contains(&ratio), "bootstrap/propagated ratio {ratio}");
    }

    #[test]
    fn histogram_csv_shape() {
        let estimates = vec![-0.0089, -0.0081, -0.0093];
        let csv = estimates_to_csv(&estimates);
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines[0], "estimate");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].parse::<f64>().is_ok());
    }

    #[test]
    fn noise_preserves_state_validity() {
        let noise = NoiseModel { depolarizing: 0.3, dephasing: 0.2 };
        for i in 0..N_CONSTITUENTS {
            let ket = states::constituent_ket(i).unwrap();
            let noisy = noise.apply(&linalg::outer(ket.amplitudes()));
            // full validation: Hermitian, unit trace, PSD
            assert!(DensityMatrix::new(noisy, vec![2, 2, 2]).is_ok());
        }
    }

    #[test]
    fn noise_rejects_out_of_range() {
        let bad = NoiseModel { depolarizing: 1.5, dephasing: 0.0 };
        assert!(matches!(
            exact_shot_table(0.0, &bad),
            Err(SimError::BadNoise { .. })
        ));
    }

    #[test]
    fn shape_mismatch_is_caught() {
        let t = exact_shot_table(0.0, &NoiseModel::ideal()).unwrap();
        let mut w = estimator_weights(0.0).unwrap();
        w.m.pop();
        assert!(matches!(estimate_witness(&t, &w), Err(SimError::ShapeMismatch)));
    }

    #[test]
    fn tomography_settings_enumeration() {
        let words = tomography_settings();
        assert_eq!(words.len(), 27);
        assert_eq!(words[0], "XXX");
        assert_eq!(words[26], "ZZZ");
        let unique: std::collections::HashSet<&String> = words.iter().collect();
        assert_eq!(unique.len(), 27);
    }

    #[test]
    fn mle_recovers_state_from_exact_data() {
        // consistency on exact probabilities, pure and full-rank targets
        let pure = states::constituent_ket(0).unwrap().to_density();
        let rec = tomograph_constituent_exact(&pure).unwrap();
        let fid = linalg::fidelity(rec.matrix(), pure.matrix()).unwrap();
        assert!(fid >= 1.0 - 1e-6, "pure-target fidelity {fid}");

        let mixed = DensityMatrix::mix(
            &[0.7, 0.3],
            &[pure.clone(), DensityMatrix::maximally_mixed(3)],
        )
        .unwrap();
        let rec = tomograph_constituent_exact(&mixed).unwrap();
        let fid = linalg::fidelity(rec.matrix(), mixed.matrix()).unwrap();
        assert!(fid >= 1.0 - 1e-6, "mixed-target fidelity {fid}");
    }

    #[test]
    fn tomography_at_200_shots_stays_above_statistical_floor() {
        let pure = states::constituent_ket(0).unwrap().to_density();
        let mut min_fid: f64 = 1.0;
        for seed in 0..20 {
            let rec = tomograph_constituent(&pure, 200, seed).unwrap();
            let fid = linalg::fidelity(rec.matrix(), pure.matrix()).unwrap();
            min_fid = min_fid.min(fid);
        }
        assert!(min_fid >= 0.98, "min fidelity over 20 seeds: {min_fid}");
    }

    #[test]
    fn reconstructed_mixture_infidelity_at_200_shots() {
        // tomograph every constituent at 200 shots per setting, rebuild the
        // q = 0.06 mixture, compare to the ideal target. Shot noise alone
        // keeps the infidelity well below the percent scale; adding the
        // hardware stand-in noise model pushes it to the percent order the
        // real device reported.
        let spec = MixtureSpec::new(0.06).unwrap();
        let target = states::single_copy_state(0.06).unwrap();
        let reconstruct = |noise: &NoiseModel, seed0: u64| -> f64 {
            let mut reconstructed = Vec::new();
            for i in 0..N_CONSTITUENTS {
                let ket = states::constituent_ket(i).unwrap();
                let noisy = DensityMatrix::from_valid_parts(
                    noise.apply(&linalg::outer(ket.amplitudes())),
                    vec![2, 2, 2],
                );
                reconstructed.push(tomograph_constituent(&noisy, 200, seed0 + i as u64).unwrap());
            }
            let mixture = DensityMatrix::mix(&spec.weights, &reconstructed).unwrap();
            1.0 - linalg::fidelity(mixture.matrix(), target.matrix()).unwrap()
        };
        let ideal = reconstruct(&NoiseModel::ideal(), 40);
        assert!(ideal < 1e-2, "shot-noise-only 1 − F = {ideal:.3e}");
        let noisy = reconstruct(&NoiseModel { depolarizing: 0.02, dephasing: 0.01 }, 40);
        assert!(
            (1e-3..1e-1).contains(&noisy),
            "noisy 1 − F = {noisy:.3e}, expected percent order"
        );
    }
}
