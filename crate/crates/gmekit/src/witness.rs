//! Fully decomposable entanglement witnesses for the pair-partition of a
//! two-copy register, their PSD certificates, and the SDP that finds them.
//!
//! A witness W certifies genuine multipartite entanglement across the
//! grouping A₁A₂ | B₁B₂ | C₁C₂ when Tr[Wρ] < 0 and for every group k there
//! are PSD P_k, Q_k with W = P_k + Q_k^{T_k}: any state that is PPT (or
//! separable) across one of the three cuts then has a nonnegative witness
//! value, so a negative value excludes all such mixtures at once.

use crate::linalg::{self, cr, CMat, DensityMatrix};
use crate::sdp::{
    solve_conic, BlockSpec, ConeConstraint, ConeOp, ConeTerm, ConicProgram, EqualityConstraint,
    EqualityTerm, ObjectiveTerm, SdpError, SolveReport, SolveStatus, SolverOptions,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("state must be {expected} qubits, got {got}")]
    WrongRegister { expected: usize, got: usize },
    #[error("solver stopped at max_iter: primal {primal:.3e}, dual {dual:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, primal: f64, dual: f64 },
    #[error("witness SDP reported infeasible (trace-normalized decomposable cone is never empty; input is likely malformed)")]
    Infeasible,
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// PSD pair certifying decomposability across one cut.
#[derive(Debug, Clone)]
pub struct CertificatePair {
    pub p: CMat,
    pub q: CMat,
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub w: CMat,
    /// (partition name, certificate), one entry per cut, in cut order.
    pub certificates: Vec<(String, CertificatePair)>,
    /// Tr[Wρ] against the state the witness was optimized for, when known.
    pub value: Option<f64>,
}

/// The three two-qubit groups of the party-major two-copy register.
pub fn pair_partitions() -> Vec<(String, Vec<usize>)> {
    vec![
        ("A1A2".to_string(), vec![0, 1]),
        ("B1B2".to_string(), vec![2, 3]),
        ("C1C2".to_string(), vec![4, 5]),
    ]
}

/// Single-qubit cuts of a one-copy (three-qubit) register.
pub fn single_copy_partitions() -> Vec<(String, Vec<usize>)> {
    vec![
        ("A".to_string(), vec![0]),
        ("B".to_string(), vec![1]),
        ("C".to_string(), vec![2]),
    ]
}

/// min Tr[Wρ] s.t. Tr W = 1, P_k ⪰ 0, (W − P_k)^{T_k} ⪰ 0 for each cut.
pub fn build_problem_for_cuts(rho: &CMat, cuts: &[(String, Vec<usize>)]) -> ConicProgram {
    let d = rho.nrows();
    let mut p = ConicProgram {
        blocks: vec![BlockSpec { name: "W".into(), dim: d }],
        objective: vec![ObjectiveTerm { block: "W".into(), matrix: rho.clone() }],
        equalities: vec![EqualityConstraint {
            terms: vec![EqualityTerm { block: "W".into(), matrix: CMat::identity(d, d) }],
            rhs: 1.0,
        }],
        cones: vec![],
    };
    for (name, subset) in cuts {
        let pname = format!("P_{name}");
        p.blocks.push(BlockSpec { name: pname.clone(), dim: d });
        p.cones.push(ConeConstraint {
            dim: d,
            terms: vec![ConeTerm { block: pname.clone(), op: ConeOp::Scale { alpha: 1.0 } }],
        });
        p.cones.push(ConeConstraint {
            dim: d,
            terms: vec![
                ConeTerm {
                    block: "W".into(),
                    op: ConeOp::PartialTranspose { subset: subset.clone(), alpha: 1.0 },
                },
                ConeTerm {
                    block: pname,
                    op: ConeOp::PartialTranspose { subset: subset.clone(), alpha: -1.0 },
                },
            ],
        });
    }
    p
}

/// Witness SDP over the two-copy pair partition.
pub fn build_problem(rho: &DensityMatrix) -> Result<ConicProgram, WitnessError> {
    if rho.n_qubits() != 6 {
        return Err(WitnessError::WrongRegister { expected: 6, got: rho.n_qubits() });
    }
    Ok(build_problem_for_cuts(rho.matrix(), &pair_partitions()))
}

/// Solve the witness SDP and assemble certificates from the solution
/// blocks (Q_k is read off as (W − P_k)^{T_k}).
pub fn find_witness_for_cuts(
    rho: &CMat,
    cuts: &[(String, Vec<usize>)],
    opts: &SolverOptions,
) -> Result<(Witness, SolveReport), WitnessError> {
    let nq = rho.nrows().trailing_zeros() as usize;
    let program = build_problem_for_cuts(rho, cuts);
    let (blocks, report) = solve_conic(&program, opts)?;
    match report.status {
        SolveStatus::Optimal => {}
        SolveStatus::MaxIter => {
            return Err(WitnessError::NotConverged {
                iterations: report.iterations,
                primal: report.primal_residual,
                dual: report.dual_residual,
            })
        }
        SolveStatus::Infeasible => return Err(WitnessError::Infeasible),
    }
    let mut w = linalg::hermitize(&blocks["W"]);
    // the equality Tr W = 1 holds to solver tolerance; rescaling W and every
    // P_k by the common trace restores it exactly without disturbing
    // positivity or the decompositions
    let tr: f64 = (0..w.nrows()).map(|i| w[(i, i)].re).sum();
    if tr > 0.5 {
        w /= cr(tr);
    }
    let mut certificates = Vec::new();
    for (name, subset) in cuts {
        let mut p = linalg::hermitize(&blocks[&format!("P_{name}")]);
        if tr > 0.5 {
            p /= cr(tr);
        }
        let q = linalg::partial_transpose(&(&w - &p), &vec![2; nq], subset)?;
        certificates.push((name.clone(), CertificatePair { p, q }));
    }
    let value = linalg::hs_inner(&w, rho);
    Ok((Witness { w, certificates, value: Some(value) }, report))
}

pub fn find_witness(
    rho: &DensityMatrix,
    opts: &SolverOptions,
) -> Result<(Witness, SolveReport), WitnessError> {
    if rho.n_qubits() != 6 {
        return Err(WitnessError::WrongRegister { expected: 6, got: rho.n_qubits() });
    }
    find_witness_for_cuts(rho.matrix(), &pair_partitions(), opts)
}

// ---------------------------------------------------------------------------
// Reference witness: closed-form optimum for the balanced two-copy mixture.
// All entries are multiples of 1/12 (W) and 1/24 (P_k).

/// Diagonal support of the reference witness: these six labels and their
/// bit-complements carry +1/12.
const DIAG_HALF: [usize; 6] = [3, 12, 15, 22, 25, 26];
/// Off-diagonal pairs carrying −1/12 (symmetrically).
const CROSS: [(usize, usize); 2] = [(0, 63), (21, 42)];

/// Diagonal support (value 1/24) of P_k per cut.
const P_DIAG: [(&str, [usize; 8]); 3] = [
    ("A1A2", [3, 12, 22, 25, 38, 41, 51, 60]),
    ("B1B2", [3, 15, 22, 26, 37, 41, 48, 60]),
    ("C1C2", [12, 15, 25, 26, 37, 38, 48, 51]),
];

/// Q_k = P_k + (1/12)·Σ (|a⟩−|b⟩)(⟨a|−⟨b|) over these label pairs.
const Q_PAIRS: [(&str, [(usize, usize); 2]); 3] = [
    ("A1A2", [(15, 48), (26, 37)]),
    ("B1B2", [(12, 51), (25, 38)]),
    ("C1C2", [(3, 60), (22, 41)]),
];

/// The canonical reference witness with its exact certificates.
pub fn reference_witness() -> Witness {
    let mut w = CMat::zeros(64, 64);
    let v = 1.0 / 12.0;
    for &k in &DIAG_HALF {
        w[(k, k)] = cr(v);
        w[(63 - k, 63 - k)] = cr(v);
    }
    for &(a, b) in &CROSS {
        w[(a, b)] = cr(-v);
        w[(b, a)] = cr(-v);
    }
    let mut certificates = Vec::new();
    for ((name, pd), (qname, pairs)) in P_DIAG.iter().zip(Q_PAIRS.iter()) {
        debug_assert_eq!(name, qname);
        let mut p = CMat::zeros(64, 64);
        for &i in pd {
            p[(i, i)] = cr(1.0 / 24.0);
        }
        let mut q = p.clone();
        for &(a, b) in pairs {
            q[(a, a)] += cr(v);
            q[(b, b)] += cr(v);
            q[(a, b)] -= cr(v);
            q[(b, a)] -= cr(v);
        }
        certificates.push((name.to_string(), CertificatePair { p, q }));
    }
    Witness { w, certificates, value: None }
}

/// Alternate tabulation of the reference witness that circulates with a
/// diagonal entry at |010101⟩ instead of |010110⟩. It fails certificate
/// validation and is kept only so the discrepancy can be reported.
pub fn reference_witness_variant() -> CMat {
    let mut w = reference_witness().w;
    w[(22, 22)] = cr(0.0);
    w[(21, 21)] = cr(1.0 / 12.0);
    w
}

/// The tabulated Pauli decomposition of the reference witness: 64·W =
/// Σ_k m_k σ_k over these 32 words (qubit order A₁A₂B₁B₂C₁C₂), listed in
/// the ascending word order `pauli_coefficients` uses. The 16 I/Z rows are
/// simultaneously measurable in one all-Z setting; the 16 X/Y rows need one
/// setting each.
pub fn reference_pauli_rows() -> &'static [(&'static str, f64); 32] {
    const T: f64 = 1.0 / 3.0;
    &[
        ("IIIIII", 1.0),
        ("IIIZIZ", -T),
        ("IIZIZI", -T),
        ("IIZZZZ", 1.0),
        ("IZIIIZ", -T),
        ("IZIZII", -T),
        ("IZZIZZ", -T),
        ("IZZZZI", -T),
        ("XXXXXX", -T),
        ("XXXYXY", T),
        ("XXYXYX", T),
        ("XXYYYY", -T),
        ("XYXXXY", T),
        ("XYXYXX", T),
        ("XYYXYY", -T),
        ("XYYYYX", -T),
        ("YXXXYX", T),
        ("YXXYYY", -T),
        ("YXYXXX", T),
        ("YXYYXY", -T),
        ("YYXXYY", -T),
        ("YYXYYX", -T),
        ("YYYXXY", -T),
        ("YYYYXX", -T),
        ("ZIIIZI", -T),
        ("ZIIZZZ", -T),
        ("ZIZIII", -T),
        ("ZIZZIZ", -T),
        ("ZZIIZZ", 1.0),
        ("ZZIZZI", -T),
        ("ZZZIIZ", -T),
        ("ZZZZII", 1.0),
    ]
}

/// Entrywise differences |a−b| > tol, as (row, col, a, b).
pub fn diff_entries(a: &CMat, b: &CMat, tol: f64) -> Vec<(usize, usize, f64, f64)> {
    let mut out = Vec::new();
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            if (a[(r, c)] - b[(r, c)]).norm() > tol {
                out.push((r, c, a[(r, c)].re, b[(r, c)].re));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckItem>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: String) {
        self.checks.push(CheckItem { name: name.into(), pass, detail });
    }
}

/// Itemized check of every witness invariant: Hermiticity, unit trace,
/// PSD certificates, and the decomposition W = P_k + Q_k^{T_k} per cut.
/// Never fails hard; every violation becomes a failed item.
pub fn validate_certificate(w: &Witness) -> ValidationReport {
    let mut report = ValidationReport::default();
    let d = w.w.nrows();
    let nq = d.trailing_zeros() as usize;
    let herm = linalg::herm_deviation(&w.w);
    report.push("hermitian", herm <= 1e-9, format!("max deviation {herm:.3e}"));
    let tr: f64 = (0..d).map(|i| w.w[(i, i)].re).sum();
    report.push("unit-trace", (tr - 1.0).abs() <= 1e-8, format!("trace {tr:.12}"));
    let cuts = if nq == 6 { pair_partitions() } else { single_copy_partitions() };
    for (name, cert) in &w.certificates {
        let subset = cuts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.clone())
            .unwrap_or_default();
        let me_p = linalg::min_eig(&cert.p).unwrap_or(f64::NEG_INFINITY);
        report.push(format!("P_{name}-psd"), me_p >= -1e-8, format!("min eig {me_p:.3e}"));
        let me_q = linalg::min_eig(&cert.q).unwrap_or(f64::NEG_INFINITY);
        report.push(format!("Q_{name}-psd"), me_q >= -1e-8, format!("min eig {me_q:.3e}"));
        let recon = match linalg::partial_transpose(&cert.q, &vec![2; nq], &subset) {
            Ok(qt) => &cert.p + &qt,
            Err(_) => cert.p.clone(),
        };
        let res = linalg::frob_norm(&(&recon - &w.w));
        report.push(
            format!("decomposition-{name}"),
            res <= 1e-7,
            format!("‖W − (P + Q^T)‖_F = {res:.3e}"),
        );
    }
    report
}

/// Tr[Wρ].
pub fn evaluate(w: &Witness, rho: &DensityMatrix) -> Result<f64, WitnessError> {
    if rho.dim() != w.w.nrows() {
        return Err(WitnessError::WrongRegister {
            expected: w.w.nrows().trailing_zeros() as usize,
            got: rho.n_qubits(),
        });
    }
    Ok(linalg::hs_inner(&w.w, rho.matrix()))
}
