//! Constituent states of the balanced three-qubit mixture and its n-copy
//! rearrangements.
//!
//! The mixture is built from ten pure states: eight biseparable kets
//! |a₀⟩…|a₇⟩ (each a product of a single qubit with a Bell pair, four
//! across A|BC and four across B|AC), plus the two computational products
//! |001⟩ and |110⟩ that model colored noise. Multi-copy joint states are
//! stored party-major: (A₁…A_n B₁…B_n C₁…C_n).

use crate::linalg::{cr, CVec, DensityMatrix, Ket, C64};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("mixing weight q = {0} outside [0, 1]")]
    QOutOfRange(f64),
    #[error("constituent index {0} out of range 0..10")]
    IndexOutOfRange(usize),
    #[error("{n} copies exceed the dense-storage guard (max {max})")]
    TooManyCopies { n: usize, max: usize },
}

/// Coarsest split that leaves a constituent ket product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bipartition {
    AVsBc,
    BVsAc,
    FullyProduct,
}

pub const N_CONSTITUENTS: usize = 10;
const MAX_COPIES: usize = 3;

/// The ten constituent kets with their bipartition tags.
#[derive(Debug, Clone)]
pub struct ConstituentSet {
    kets: Vec<Ket>,
    labels: Vec<Bipartition>,
}

impl ConstituentSet {
    pub fn standard() -> Self {
        let kets = (0..N_CONSTITUENTS).map(|i| constituent_ket(i).unwrap()).collect();
        let labels = (0..N_CONSTITUENTS)
            .map(|i| match i {
                0..=3 => Bipartition::AVsBc,
                4..=7 => Bipartition::BVsAc,
                _ => Bipartition::FullyProduct,
            })
            .collect();
        Self { kets, labels }
    }

    pub fn kets(&self) -> &[Ket] {
        &self.kets
    }

    pub fn ket(&self, i: usize) -> &Ket {
        &self.kets[i]
    }

    pub fn label(&self, i: usize) -> Bipartition {
        self.labels[i]
    }
}

/// Mixing weights: (1−q)/8 on the eight entangled constituents, q/2 on the
/// two product kets.
#[derive(Debug, Clone, Copy)]
pub struct MixtureSpec {
    pub q: f64,
    pub weights: [f64; N_CONSTITUENTS],
}

impl MixtureSpec {
    pub fn new(q: f64) -> Result<Self, StateError> {
        if !(0.0..=1.0).contains(&q) || !q.is_finite() {
            return Err(StateError::QOutOfRange(q));
        }
        let mut weights = [(1.0 - q) / 8.0; N_CONSTITUENTS];
        weights[8] = q / 2.0;
        weights[9] = q / 2.0;
        Ok(Self { q, weights })
    }
}

fn ket_from_reals(vals: &[f64]) -> Ket {
    let v = CVec::from_vec(vals.iter().map(|&x| cr(x)).collect());
    let n = vals.len().trailing_zeros() as usize;
    Ket::new(v, vec![2; n]).expect("hard-coded ket must be normalized")
}

/// |a₀⟩ = |+⟩_A |Φ⁺⟩_BC and |a₁⟩ = |−⟩_A |Φ⁻⟩_BC expanded over
/// |000⟩..|111⟩ with qubit A most significant.
fn base_pair(i: usize) -> Ket {
    match i {
        0 => ket_from_reals(&[0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5]),
        1 => ket_from_reals(&[0.5, 0.0, 0.0, -0.5, -0.5, 0.0, 0.0, 0.5]),
        _ => unreachable!(),
    }
}

/// Local phase layer √Z ⊗ √Z ⊗ Z with √Z = diag(1, i), Z = diag(1, −1).
fn phase_layer(k: &Ket) -> Ket {
    let amps = CVec::from_fn(8, |idx, _| {
        let (a, b, c3) = ((idx >> 2) & 1, (idx >> 1) & 1, idx & 1);
        let mut ph = C64::new(1.0, 0.0);
        if a == 1 {
            ph *= C64::new(0.0, 1.0);
        }
        if b == 1 {
            ph *= C64::new(0.0, 1.0);
        }
        if c3 == 1 {
            ph *= C64::new(-1.0, 0.0);
        }
        k.amplitudes()[idx] * ph
    });
    Ket::new(amps, vec![2, 2, 2]).expect("phase layer preserves norm")
}

/// The i-th constituent ket. Indices 0–3 are A|BC biseparable, 4–7 their
/// A↔B swaps, 8 and 9 the product kets |001⟩ and |110⟩.
pub fn constituent_ket(i: usize) -> Result<Ket, StateError> {
    match i {
        0 | 1 => Ok(base_pair(i)),
        2 | 3 => Ok(phase_layer(&base_pair(i - 2))),
        4..=7 => {
            let unswapped = constituent_ket(i - 4)?;
            Ok(unswapped.permute(&[1, 0, 2]).expect("fixed qubit swap"))
        }
        8 => Ok(Ket::basis(3, 0b001)),
        9 => Ok(Ket::basis(3, 0b110)),
        _ => Err(StateError::IndexOutOfRange(i)),
    }
}

/// ρ(q) = Σᵢ wᵢ |aᵢ⟩⟨aᵢ| over the ten constituents; q = 0 is the balanced
/// mixture of the eight entangled kets.
pub fn single_copy_state(q: f64) -> Result<DensityMatrix, StateError> {
    let spec = MixtureSpec::new(q)?;
    let set = ConstituentSet::standard();
    let parts: Vec<DensityMatrix> = set.kets().iter().map(|k| k.to_density()).collect();
    Ok(DensityMatrix::mix(&spec.weights, &parts).expect("weights sum to 1"))
}

/// Permutation sending copy-major qubit order (A₁B₁C₁ A₂B₂C₂ …) to
/// party-major order (A₁…A_n B₁…B_n C₁…C_n).
pub fn party_major_perm(n_copies: usize) -> Vec<usize> {
    let mut perm = Vec::with_capacity(3 * n_copies);
    for party in 0..3 {
        for copy in 0..n_copies {
            perm.push(copy * 3 + party);
        }
    }
    perm
}

/// ρ(q)^⊗n with subsystems permuted to party-major order.
pub fn n_copy_state(q: f64, n: usize) -> Result<DensityMatrix, StateError> {
    if n == 0 || n > MAX_COPIES {
        return Err(StateError::TooManyCopies { n, max: MAX_COPIES });
    }
    let single = single_copy_state(q)?;
    let mut joint = single.clone();
    for _ in 1..n {
        joint = joint.tensor(&single);
    }
    Ok(joint.permute_subsystems(&party_major_perm(n)).expect("fixed permutation"))
}

/// |aᵢ⟩⟨aᵢ| ⊗ |aⱼ⟩⟨aⱼ| in party-major (A₁A₂B₁B₂C₁C₂) order.
pub fn constituent_pair(i: usize, j: usize) -> Result<DensityMatrix, StateError> {
    let joint = constituent_ket(i)?.tensor(&constituent_ket(j)?);
    let rearranged = joint.permute(&party_major_perm(2)).expect("fixed permutation");
    Ok(rearranged.to_density())
}

/// (|0…0⟩ + |1…1⟩)/√2 over `n` qubits.
pub fn ghz_ket(n_qubits: usize) -> Ket {
    let d = 1usize << n_qubits;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = CVec::zeros(d);
    amps[0] = cr(s);
    amps[d - 1] = cr(s);
    Ket::new(amps, vec![2; n_qubits]).expect("normalized by construction")
}
