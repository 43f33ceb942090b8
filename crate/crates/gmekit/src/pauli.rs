//! Pauli-string algebra: materialization, coefficient extraction, grouping
//! of strings into simultaneous measurement settings, and expectation
//! values.
//!
//! Words are plain ASCII over {I, X, Y, Z}, e.g. `"IIZZZZ"`, with qubit 0
//! (the leftmost symbol) the most significant bit — register order
//! (A₁A₂B₁B₂C₁C₂) for six-qubit strings. A Pauli word has exactly one
//! nonzero entry per matrix row, so traces against words are computed by a
//! sparse index walk rather than materializing Kronecker products.

use crate::linalg::{cr, CMat, C64};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PauliError {
    #[error("invalid Pauli symbol '{0}' (expected I, X, Y or Z)")]
    InvalidSymbol(char),
    #[error("word length {word_len} does not match operator dimension {dim}")]
    DimensionMismatch { word_len: usize, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self, PauliError> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(PauliError::InvalidSymbol(other)),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A Pauli word together with its coefficient m = Tr[H·M].
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub word: String,
    pub weight: f64,
}

pub fn parse_word(word: &str) -> Result<Vec<Pauli>, PauliError> {
    word.chars().map(Pauli::from_char).collect()
}

/// Column reached from row `r`, and the entry value, for a single-qubit
/// Pauli acting on bit value `rb`.
#[inline]
fn step(p: Pauli, rb: usize) -> (usize, C64) {
    match p {
        Pauli::I => (rb, cr(1.0)),
        Pauli::Z => (rb, cr(if rb == 0 { 1.0 } else { -1.0 })),
        Pauli::X => (1 - rb, cr(1.0)),
        // σ_y rows: [0,1] = −i, [1,0] = i
        Pauli::Y => (1 - rb, C64::new(0.0, if rb == 0 { -1.0 } else { 1.0 })),
    }
}

/// For row `r` of the word's matrix, the unique nonzero column and its
/// value.
fn row_action(word: &[Pauli], r: usize) -> (usize, C64) {
    let n = word.len();
    let mut col = 0usize;
    let mut val = cr(1.0);
    for (t, &p) in word.iter().enumerate() {
        let rb = (r >> (n - 1 - t)) & 1;
        let (cb, v) = step(p, rb);
        col |= cb << (n - 1 - t);
        val *= v;
    }
    (col, val)
}

/// Kronecker product of the single-qubit Paulis in word order.
pub fn materialize(word: &str) -> Result<CMat, PauliError> {
    let w = parse_word(word)?;
    let d = 1usize << w.len();
    let mut m = CMat::zeros(d, d);
    for r in 0..d {
        let (c, v) = row_action(&w, r);
        m[(r, c)] = v;
    }
    Ok(m)
}

/// Tr[H·M_word] using the one-nonzero-per-row structure of M.
pub fn trace_with_word(h: &CMat, word: &str) -> Result<C64, PauliError> {
    let w = parse_word(word)?;
    let d = 1usize << w.len();
    if h.nrows() != d || h.ncols() != d {
        return Err(PauliError::DimensionMismatch { word_len: w.len(), dim: h.nrows() });
    }
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..d {
        let (c, v) = row_action(&w, r);
        acc += h[(c, r)] * v;
    }
    Ok(acc)
}

/// ⟨M_word⟩ = Tr[ρ·M_word]; real for Hermitian ρ.
pub fn expectation(word: &str, rho: &CMat) -> Result<f64, PauliError> {
    let t = trace_with_word(rho, word)?;
    debug_assert!(t.im.abs() < 1e-9, "expectation has imaginary part {}", t.im);
    Ok(t.re)
}

fn word_of_index(n: usize, mut idx: usize) -> String {
    const SYMS: [char; 4] = ['I', 'X', 'Y', 'Z'];
    let mut chars = vec!['I'; n];
    for t in (0..n).rev() {
        chars[t] = SYMS[idx % 4];
        idx /= 4;
    }
    chars.into_iter().collect()
}

/// All Pauli coefficients m_w = Tr[H·M_w] with |m| > 1e-10, enumerated with
/// qubit 0 as the most significant digit (I < X < Y < Z). The operator is
/// recovered as H = 2⁻ⁿ Σ m_w M_w.
pub fn pauli_coefficients(h: &CMat) -> Result<Vec<PauliString>, PauliError> {
    let d = h.nrows();
    let n = d.trailing_zeros() as usize;
    if 1usize << n != d || !h.is_square() {
        return Err(PauliError::DimensionMismatch { word_len: n, dim: d });
    }
    let mut out = Vec::new();
    for idx in 0..(1usize << (2 * n)) {
        let word = word_of_index(n, idx);
        let m = trace_with_word(h, &word)?;
        if m.norm() > 1e-10 {
            out.push(PauliString { word, weight: m.re });
        }
    }
    Ok(out)
}

/// 2⁻ⁿ Σ m_w M_w.
pub fn reconstruct(n_qubits: usize, terms: &[PauliString]) -> Result<CMat, PauliError> {
    let d = 1usize << n_qubits;
    let mut h = CMat::zeros(d, d);
    for t in terms {
        let w = parse_word(&t.word)?;
        if w.len() != n_qubits {
            return Err(PauliError::DimensionMismatch { word_len: w.len(), dim: d });
        }
        let scale = cr(t.weight / d as f64);
        for r in 0..d {
            let (c, v) = row_action(&w, r);
            h[(r, c)] += v * scale;
        }
    }
    Ok(h)
}

/// Diagonal of the word with X and Y read as Z: entry l is the parity
/// Π over non-I positions of (−1)^{bit}. This is the post-rotation readout
/// vector h for shot-based estimation.
pub fn parity_vector(word: &str) -> Result<Vec<f64>, PauliError> {
    let w = parse_word(word)?;
    let n = w.len();
    let d = 1usize << n;
    let mut h = vec![1.0f64; d];
    for (l, e) in h.iter_mut().enumerate() {
        for (t, &p) in w.iter().enumerate() {
            if p != Pauli::I && (l >> (n - 1 - t)) & 1 == 1 {
                *e = -*e;
            }
        }
    }
    Ok(h)
}

/// One simultaneously measurable group: a full basis choice over {X,Y,Z}
/// plus the indices (into the caller's word list) readable from it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetting {
    pub basis: String,
    pub members: Vec<usize>,
}

/// Greedy grouping: every word over {I, Z} alone joins a single all-Z
/// setting (first, when present); every other word gets its own setting
/// with I read as Z. Minimal for witnesses whose off-diagonal strings
/// share no basis, which is the case for the reference witness (17
/// settings).
pub fn group_settings(words: &[String]) -> Result<Vec<MeasurementSetting>, PauliError> {
    let mut zmembers = Vec::new();
    let mut rest = Vec::new();
    for (i, word) in words.iter().enumerate() {
        let w = parse_word(word)?;
        if w.iter().all(|&p| p == Pauli::I || p == Pauli::Z) {
            zmembers.push(i);
        } else {
            rest.push(i);
        }
    }
    let mut out = Vec::new();
    if !zmembers.is_empty() {
        let n = words[zmembers[0]].len();
        out.push(MeasurementSetting { basis: "Z".repeat(n), members: zmembers });
    }
    for i in rest {
        let basis: String = words[i].chars().map(|c| if c == 'I' { 'Z' } else { c }).collect();
        out.push(MeasurementSetting { basis, members: vec![i] });
    }
    Ok(out)
}
