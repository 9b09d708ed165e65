//! Builders for the concrete models and their on-disk description.
//!
//! Shift models act on `e_0..e_N` by `x_i e_0 = e_i`, `x_i e_j = δ_{ij} e_0`.
//! The unital variant adds a vector `e_{-1}` killed by every `x_i`; it is
//! stored as the last coordinate.

use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::probspace::{CondExpectation, MatrixModel, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    ShiftNonunital,
    ShiftUnital,
    Constant,
    Zero,
    ClassicalIid,
    Custom,
}

impl ModelKind {
    pub fn parse(name: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string())).ok()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ShiftNonunital => "shift-nonunital",
            ModelKind::ShiftUnital => "shift-unital",
            ModelKind::Constant => "constant",
            ModelKind::Zero => "zero",
            ModelKind::ClassicalIid => "classical-iid",
            ModelKind::Custom => "custom",
        }
    }
}

pub type PairMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSpec {
    Vector(Vec<[f64; 2]>),
    Density(PairMatrix),
}

impl StateSpec {
    fn to_state(&self) -> Result<State> {
        match self {
            StateSpec::Vector(v) => Ok(State::Vector(
                v.iter().map(|p| linalg::C64::new(p[0], p[1])).collect(),
            )),
            StateSpec::Density(m) => linalg::from_pairs(m)
                .map(State::Density)
                .ok_or_else(|| Error::InvalidModel("ragged density matrix".into())),
        }
    }
}

/// On-disk model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<PairMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
}

/// A model plus its conditional expectation, when one is known.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub model: MatrixModel,
    pub expectation: Option<CondExpectation>,
}

/// `max(max_word_len, n) + 1`: deep enough that no tested word reaches the cutoff.
pub fn default_truncation(n: usize, max_word_len: usize) -> usize {
    max_word_len.max(n) + 1
}

impl ModelSpec {
    pub fn builtin(kind: ModelKind, n: usize, truncation: Option<usize>) -> Self {
        ModelSpec {
            kind,
            n,
            truncation,
            matrices: None,
            state: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Build, picking the default truncation from `max_word_len` when none is set.
    pub fn build(&self, max_word_len: usize) -> Result<BuiltModel> {
        let n = self.n;
        let trunc = self
            .truncation
            .unwrap_or_else(|| default_truncation(n, max_word_len));
        let plain = |model| BuiltModel {
            model,
            expectation: None,
        };
        match self.kind {
            ModelKind::ShiftNonunital => {
                let (model, e) = build_shift_nonunital(n, trunc)?;
                Ok(BuiltModel {
                    model,
                    expectation: Some(e),
                })
            }
            ModelKind::ShiftUnital => {
                let (model, e) = build_shift_unital(n, trunc)?;
                Ok(BuiltModel {
                    model,
                    expectation: Some(e),
                })
            }
            ModelKind::Constant => {
                let seed = match (&self.matrices, &self.state) {
                    (None, None) => None,
                    (Some(ms), Some(st)) => {
                        let [m] = ms.as_slice() else {
                            return Err(Error::InvalidModel(
                                "constant model takes exactly one seed matrix".into(),
                            ));
                        };
                        let m = linalg::from_pairs(m)
                            .ok_or_else(|| Error::InvalidModel("ragged seed matrix".into()))?;
                        Some((m, st.to_state()?))
                    }
                    _ => {
                        return Err(Error::InvalidModel(
                            "constant model needs both a seed matrix and a state, or neither"
                                .into(),
                        ))
                    }
                };
                build_constant(n, seed).map(plain)
            }
            ModelKind::Zero => build_zero(n, self.truncation.unwrap_or(2)).map(plain),
            ModelKind::ClassicalIid => build_classical_iid(n).map(plain),
            ModelKind::Custom => {
                let (Some(ms), Some(st)) = (&self.matrices, &self.state) else {
                    return Err(Error::InvalidModel(
                        "custom model needs matrices and a state".into(),
                    ));
                };
                if ms.len() != n {
                    return Err(Error::InvalidModel(format!(
                        "expected {n} matrices, found {}",
                        ms.len()
                    )));
                }
                let x = ms
                    .iter()
                    .map(|m| {
                        linalg::from_pairs(m)
                            .ok_or_else(|| Error::InvalidModel("ragged matrix".into()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                MatrixModel::new(x, st.to_state()?, "custom").map(plain)
            }
        }
    }
}

fn check_shift_sizes(n: usize, trunc: usize) -> Result<()> {
    if n == 0 || trunc < n {
        return Err(Error::InvalidSize(format!(
            "shift model needs truncation >= n >= 1, got n={n}, truncation={trunc}"
        )));
    }
    Ok(())
}

fn shift_matrices(n: usize, dim: usize) -> Vec<CMat> {
    (1..=n)
        .map(|i| {
            let mut m = linalg::zeros(dim);
            m[[i, 0]] = linalg::ONE;
            m[[0, i]] = linalg::ONE;
            m
        })
        .collect()
}

/// Shift model on `e_0..e_N`, vector state at `e_0`, `E[x] = P_{e_0} x P_{e_0}`.
pub fn build_shift_nonunital(n: usize, trunc: usize) -> Result<(MatrixModel, CondExpectation)> {
    check_shift_sizes(n, trunc)?;
    let dim = trunc + 1;
    let e0 = linalg::basis_vector(dim, 0);
    let q = linalg::line_projection(&e0);
    let model = MatrixModel::new(
        shift_matrices(n, dim),
        State::Vector(e0),
        format!("shift-nonunital(n={n},N={trunc})"),
    )?;
    Ok((model, CondExpectation::Compression { q }))
}

/// Shift model on `e_{-1}, e_0..e_N` with state `½<·(e_0+e_{-1}), e_0+e_{-1}>`
/// and `E[x] = P_{e_0} x P_{e_0} + <x e_{-1}, e_{-1}>·(I − P_{e_0})`.
pub fn build_shift_unital(n: usize, trunc: usize) -> Result<(MatrixModel, CondExpectation)> {
    check_shift_sizes(n, trunc)?;
    let dim = trunc + 2;
    let minus_one = dim - 1;
    let e0 = linalg::basis_vector(dim, 0);
    let em = linalg::basis_vector(dim, minus_one);
    let xi = linalg::normalize(&(&e0 + &em));
    let q = linalg::line_projection(&e0);
    let model = MatrixModel::new(
        shift_matrices(n, dim),
        State::Vector(xi),
        format!("shift-unital(n={n},N={trunc})"),
    )?;
    let e = CondExpectation::CompressionPlusScalar {
        q: q.clone(),
        w: em,
        r: q,
    };
    Ok((model, e))
}

/// `x_1 = … = x_n = seed`; defaults to `diag(1, −1)` with state `(e_1+e_2)/√2`.
pub fn build_constant(n: usize, seed: Option<(CMat, State)>) -> Result<MatrixModel> {
    if n == 0 {
        return Err(Error::InvalidSize("n must be at least 1".into()));
    }
    let (m, state) = match seed {
        Some(s) => s,
        None => {
            let m = CMat::from_diag(&Array1::from(vec![linalg::ONE, -linalg::ONE]));
            let xi: CVec = Array1::from_elem(2, linalg::real(std::f64::consts::FRAC_1_SQRT_2));
            (m, State::Vector(xi))
        }
    };
    MatrixModel::new(vec![m; n], state, format!("constant(n={n})"))
}

/// All `x_i = 0` on `C^dim`, vector state at the first basis vector.
pub fn build_zero(n: usize, dim: usize) -> Result<MatrixModel> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidSize(format!(
            "zero model needs n, dim >= 1, got n={n}, dim={dim}"
        )));
    }
    MatrixModel::new(
        vec![linalg::zeros(dim); n],
        State::Vector(linalg::basis_vector(dim, 0)),
        format!("zero(n={n})"),
    )
}

const MAX_CLASSICAL_N: usize = 10;

/// `n` commuting ±1 variables: `x_i = σ_z` in tensor slot `i` of `(C²)^{⊗n}`,
/// uniform product vector state.
pub fn build_classical_iid(n: usize) -> Result<MatrixModel> {
    if n == 0 || n > MAX_CLASSICAL_N {
        return Err(Error::InvalidSize(format!(
            "classical-iid needs 1 <= n <= {MAX_CLASSICAL_N}, got {n}"
        )));
    }
    let z = CMat::from_diag(&Array1::from(vec![linalg::ONE, -linalg::ONE]));
    let id = linalg::identity(2);
    let x = (0..n)
        .map(|slot| {
            (0..n).fold(linalg::identity(1), |acc, k| {
                linalg::kron(&acc, if k == slot { &z } else { &id })
            })
        })
        .collect();
    let dim = 1 << n;
    let xi: CVec = Array1::from_elem(dim, linalg::real(1.0 / (dim as f64).sqrt()));
    MatrixModel::new(x, State::Vector(xi), format!("classical-iid(n={n})"))
}
