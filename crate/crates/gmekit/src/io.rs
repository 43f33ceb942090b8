//! JSON wire formats for states, witnesses, shot tables, certification
//! traces, and conic programs. The shapes here are the contract documented
//! by the files under `schemas/`; matrices travel as separate row-major
//! real and imaginary parts next to their subsystem dimensions.

use crate::bisep::{Cut, SubtractionTrace, Verdict, WeightStrategy};
use crate::linalg::{self, c, CMat, CVec, DensityMatrix, Ket};
use crate::sdp::{ConeOp, ConicProgram};
use crate::sim::{EstimatorWeights, ShotTable, N_OUTCOMES, N_SETTINGS};
use crate::states::N_CONSTITUENTS;
use crate::witness::{CertificatePair, Witness};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("matrix shape is inconsistent: {0}")]
    BadShape(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error("i/o failure: {0}")]
    File(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// matrices and kets

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat, dims: &[usize]) -> Self {
        let n = m.nrows();
        let re = (0..n).map(|r| (0..n).map(|cc| m[(r, cc)].re).collect()).collect();
        let im = (0..n).map(|r| (0..n).map(|cc| m[(r, cc)].im).collect()).collect();
        Self { dims: dims.to_vec(), re, im }
    }

    pub fn to_matrix(&self) -> Result<CMat, IoError> {
        let d: usize = self.dims.iter().product();
        if self.re.len() != d
            || self.im.len() != d
            || self.re.iter().any(|row| row.len() != d)
            || self.im.iter().any(|row| row.len() != d)
        {
            return Err(IoError::BadShape(format!(
                "expected {d}×{d} from dims {:?}",
                self.dims
            )));
        }
        Ok(CMat::from_fn(d, d, |r, cc| c(self.re[r][cc], self.im[r][cc])))
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self::from_matrix(rho.matrix(), rho.dims())
    }

    /// Parse and run the full density-matrix validation.
    pub fn to_density(&self) -> Result<DensityMatrix, IoError> {
        Ok(DensityMatrix::new(self.to_matrix()?, self.dims.clone())?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KetJson {
    pub dims: Vec<usize>,
    pub amps_re: Vec<f64>,
    pub amps_im: Vec<f64>,
}

impl KetJson {
    pub fn from_ket(k: &Ket) -> Self {
        Self {
            dims: k.dims().to_vec(),
            amps_re: k.amplitudes().iter().map(|z| z.re).collect(),
            amps_im: k.amplitudes().iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_ket(&self) -> Result<Ket, IoError> {
        let d: usize = self.dims.iter().product();
        if self.amps_re.len() != d || self.amps_im.len() != d {
            return Err(IoError::BadShape(format!("expected {d} amplitudes")));
        }
        let amps = CVec::from_fn(d, |i, _| c(self.amps_re[i], self.amps_im[i]));
        Ok(Ket::new(amps, self.dims.clone())?)
    }
}

// ---------------------------------------------------------------------------
// witness with certificates and Pauli rows

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateJson {
    #[serde(rename = "P")]
    pub p: MatrixJson,
    #[serde(rename = "Q")]
    pub q: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PauliRowJson {
    pub word: String,
    pub m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessJson {
    #[serde(rename = "W")]
    pub w: MatrixJson,
    pub certificates: BTreeMap<String, CertificateJson>,
    pub pauli: Vec<PauliRowJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl WitnessJson {
    pub fn from_witness(w: &Witness) -> Result<Self, IoError> {
        let dims = vec![2usize; w.w.nrows().trailing_zeros() as usize];
        let certificates = w
            .certificates
            .iter()
            .map(|(name, cert)| {
                (
                    name.clone(),
                    CertificateJson {
                        p: MatrixJson::from_matrix(&cert.p, &dims),
                        q: MatrixJson::from_matrix(&cert.q, &dims),
                    },
                )
            })
            .collect();
        let pauli = crate::pauli::pauli_coefficients(&w.w)
            .map_err(|e| IoError::BadShape(e.to_string()))?
            .into_iter()
            .map(|t| PauliRowJson { word: t.word, m: t.weight })
            .collect();
        Ok(Self {
            w: MatrixJson::from_matrix(&w.w, &dims),
            certificates,
            pauli,
            value: w.value,
        })
    }

    pub fn to_witness(&self) -> Result<Witness, IoError> {
        let w = self.w.to_matrix()?;
        let certificates = self
            .certificates
            .iter()
            .map(|(name, cert)| {
                Ok((
                    name.clone(),
                    CertificatePair { p: cert.p.to_matrix()?, q: cert.q.to_matrix()? },
                ))
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(Witness { w, certificates, value: self.value })
    }
}

// ---------------------------------------------------------------------------
// shot tables

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShotTableJson {
    pub n: usize,
    pub seed: u64,
    pub setting_words: Vec<String>,
    /// f[i][j][k][l]
    pub f: Vec<Vec<Vec<Vec<f64>>>>,
}

impl ShotTableJson {
    pub fn from_table(t: &ShotTable) -> Self {
        let mut f =
            vec![vec![vec![vec![0.0; N_OUTCOMES]; N_SETTINGS]; N_CONSTITUENTS]; N_CONSTITUENTS];
        for i in 0..N_CONSTITUENTS {
            for j in 0..N_CONSTITUENTS {
                for k in 0..N_SETTINGS {
                    f[i][j][k].copy_from_slice(t.row(i, j, k));
                }
            }
        }
        Self { n: t.n, seed: t.seed, setting_words: t.setting_words.clone(), f }
    }

    pub fn to_table(&self) -> Result<ShotTable, IoError> {
        if self.f.len() != N_CONSTITUENTS
            || self.setting_words.len() != N_SETTINGS
            || self.f.iter().any(|fj| {
                fj.len() != N_CONSTITUENTS
                    || fj.iter().any(|fk| {
                        fk.len() != N_SETTINGS || fk.iter().any(|fl| fl.len() != N_OUTCOMES)
                    })
            })
        {
            return Err(IoError::BadShape(format!(
                "shot table must be {N_CONSTITUENTS}×{N_CONSTITUENTS}×{N_SETTINGS}×{N_OUTCOMES}"
            )));
        }
        let mut f = Vec::with_capacity(
            N_CONSTITUENTS * N_CONSTITUENTS * N_SETTINGS * N_OUTCOMES,
        );
        for fi in &self.f {
            for fj in fi {
                for fk in fj {
                    f.extend_from_slice(fk);
                }
            }
        }
        Ok(ShotTable {
            f,
            n: self.n,
            seed: self.seed,
            setting_words: self.setting_words.clone(),
        })
    }
}

// ---------------------------------------------------------------------------
// certification traces

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceIterationJson {
    pub purity_before: f64,
    pub purity_after: f64,
    pub epsilon: f64,
    pub stalled: bool,
    pub weights: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub cuts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceJson {
    pub verdict: String,
    pub purity_threshold: f64,
    pub strategy: String,
    pub final_purity: f64,
    pub iterations: Vec<TraceIterationJson>,
}

fn cut_name(cut: Cut) -> &'static str {
    match cut {
        Cut::AVsBc => "A|BC",
        Cut::BVsAc => "B|AC",
    }
}

impl TraceJson {
    pub fn from_trace(t: &SubtractionTrace) -> Self {
        Self {
            verdict: match t.verdict {
                Verdict::Biseparable => "biseparable".into(),
                Verdict::Inconclusive => "inconclusive".into(),
            },
            purity_threshold: t.purity_threshold,
            strategy: match t.strategy {
                WeightStrategy::Proportional => "proportional".into(),
                WeightStrategy::LpVertex => "lp_vertex".into(),
            },
            final_purity: t.final_purity,
            iterations: t
                .records
                .iter()
                .map(|r| TraceIterationJson {
                    purity_before: r.purity_before,
                    purity_after: r.purity_after,
                    epsilon: r.epsilon,
                    stalled: r.stalled,
                    weights: r.components.iter().map(|c| c.weight).collect(),
                    overlaps: r.components.iter().map(|c| c.overlap).collect(),
                    cuts: r.components.iter().map(|c| cut_name(c.cut).to_string()).collect(),
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// estimator weights (serialized alongside shot tables when needed)

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorWeightsJson {
    pub q: f64,
    pub setting_words: Vec<String>,
    pub m: Vec<f64>,
}

impl EstimatorWeightsJson {
    pub fn from_weights(w: &EstimatorWeights) -> Self {
        Self { q: w.q, setting_words: w.setting_words.clone(), m: w.m.clone() }
    }

    pub fn to_weights(&self) -> EstimatorWeights {
        EstimatorWeights {
            m: self.m.clone(),
            q: self.q,
            setting_words: self.setting_words.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// conic programs and solutions (the adapter protocol)

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicOpJson {
    pub kind: String,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicTermJson {
    pub block: String,
    pub op: ConicOpJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicEqualityTermJson {
    pub block: String,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicEqualityJson {
    pub terms: Vec<ConicEqualityTermJson>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicObjectiveJson {
    pub block: String,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicBlockJson {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicConeJson {
    pub dim: usize,
    pub terms: Vec<ConicTermJson>,
}

/// The solver-agnostic program serialization consumed by external-solver
/// adapters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicProgramJson {
    pub blocks: Vec<ConicBlockJson>,
    pub objective: Vec<ConicObjectiveJson>,
    pub equalities: Vec<ConicEqualityJson>,
    pub cones: Vec<ConicConeJson>,
}

fn mat_parts(m: &CMat) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = m.nrows();
    (
        (0..n).map(|r| (0..n).map(|cc| m[(r, cc)].re).collect()).collect(),
        (0..n).map(|r| (0..n).map(|cc| m[(r, cc)].im).collect()).collect(),
    )
}

impl ConicProgramJson {
    pub fn from_program(p: &ConicProgram) -> Self {
        let op_json = |op: &ConeOp| match op {
            ConeOp::Scale { alpha } => {
                ConicOpJson { kind: "scale".into(), alpha: *alpha, subset: None }
            }
            ConeOp::PartialTranspose { subset, alpha } => ConicOpJson {
                kind: "partial_transpose".into(),
                alpha: *alpha,
                subset: Some(subset.clone()),
            },
        };
        Self {
            blocks: p
                .blocks
                .iter()
                .map(|b| ConicBlockJson { name: b.name.clone(), dim: b.dim })
                .collect(),
            objective: p
                .objective
                .iter()
                .map(|t| {
                    let (re, im) = mat_parts(&t.matrix);
                    ConicObjectiveJson { block: t.block.clone(), re, im }
                })
                .collect(),
            equalities: p
                .equalities
                .iter()
                .map(|eq| ConicEqualityJson {
                    terms: eq
                        .terms
                        .iter()
                        .map(|t| {
                            let (re, im) = mat_parts(&t.matrix);
                            ConicEqualityTermJson { block: t.block.clone(), re, im }
                        })
                        .collect(),
                    rhs: eq.rhs,
                })
                .collect(),
            cones: p
                .cones
                .iter()
                .map(|cone| ConicConeJson {
                    dim: cone.dim,
                    terms: cone
                        .terms
                        .iter()
                        .map(|t| ConicTermJson { block: t.block.clone(), op: op_json(&t.op) })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// External solver verdict for a serialized program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConicSolutionJson {
    pub status: String,
    pub objective: f64,
    #[serde(default)]
    pub blocks: BTreeMap<String, MatrixJson>,
}

// ---------------------------------------------------------------------------
// file helpers

pub fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
