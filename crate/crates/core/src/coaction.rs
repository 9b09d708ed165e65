//! Invariance of a model's moments under the three coactions, evaluated in a
//! concrete representation.
//!
//! For a word `w = (i_1..i_k)` each check compares
//!
//! * linear: `μ(w)·P` with `Σ_j μ(j)·P u[j_1][i_1]···u[j_k][i_k] P`,
//! * algebraic: `μ(w)·P` with `Σ_j μ(j)·P u[j_1][i_1] P ··· P u[j_k][i_k] P`,
//! * `B_s(n)`: `μ(w)·I` with `Σ_j μ(j)·u[j_1][i_1]···u[j_k][i_k]` in the
//!   one-dimensional rep where every `u` and `P` is zero.
//!
//! The summation index comes first in every generator. For the linear form,
//! when the rep satisfies the defining relations, only `j` with the same run
//! pattern as `w` are visited: the other products vanish.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::ncpoly::{self, Word};
use crate::probspace::MatrixModel;
use crate::report::{Check, Verdict};
use crate::semigroup::{self, SemigroupRep};

/// Tolerance used to decide whether a rep is trusted for pruning.
const PRUNE_TRUST_TOL: f64 = 1e-12;
/// Relative slack allowed between observed deviations and the closed-form factor.
const FACTOR_MATCH_TOL: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoactionKind {
    Linear,
    Algebraic,
    Bsn,
}

impl CoactionKind {
    pub fn name(self) -> &'static str {
        match self {
            CoactionKind::Linear => "linear",
            CoactionKind::Algebraic => "algebraic",
            CoactionKind::Bsn => "bsn",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WordResidual {
    pub word: Word,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub kind: CoactionKind,
    pub rep: String,
    pub model: String,
    pub max_degree: usize,
    pub tolerance: f64,
    /// Whether vanishing products were skipped without evaluation.
    pub pruned: bool,
    pub words: Vec<WordResidual>,
    pub max_residual: f64,
    pub worst_word: Option<Word>,
    pub verdict: Verdict,
}

impl InvarianceReport {
    pub fn to_check(&self) -> Check {
        let c = Check::new(
            format!("invariance.{}", self.kind.name()),
            self.max_residual,
            self.tolerance,
        );
        match &self.worst_word {
            Some(w) => c.with_witness(w),
            None => c,
        }
    }

    pub fn residual_of(&self, letters: &[usize]) -> Option<f64> {
        self.words
            .iter()
            .find(|r| r.word.letters() == letters)
            .map(|r| r.residual)
    }
}

#[derive(Clone, Copy)]
enum Form {
    /// `P u···u P`
    Linear,
    /// `P u P u P ··· u P`
    Algebraic,
    /// `u···u`
    Bare,
}

enum Prefix {
    /// Row vector `p* u···u`, when `P = p p*`.
    Row(CVec),
    /// Product of corner scalars `p* u p`.
    Scalar(C64),
    Mat(CMat),
}

/// Evaluates `Σ_j μ(j)·bracket(j, w)` for one word.
struct Rhs<'a> {
    rep: &'a SemigroupRep,
    model: &'a MatrixModel,
    form: Form,
    prune: bool,
}

impl Rhs<'_> {
    fn start(&self) -> Prefix {
        match (self.form, self.rep.projection_vector()) {
            (Form::Linear, Some(p)) => Prefix::Row(p.mapv(|z| z.conj())),
            (Form::Algebraic, Some(_)) => Prefix::Scalar(linalg::ONE),
            (Form::Bare, _) => Prefix::Mat(self.rep.identity()),
            _ => Prefix::Mat(self.rep.projection().clone()),
        }
    }

    /// `None` when the extended prefix is exactly zero.
    fn step(&self, prefix: &Prefix, u: &CMat) -> Option<Prefix> {
        let next = match prefix {
            Prefix::Row(r) => {
                let v = u.t().dot(r);
                if v.iter().all(|z| *z == linalg::ZERO) {
                    return None;
                }
                Prefix::Row(v)
            }
            Prefix::Scalar(s) => {
                let p = self
                    .rep
                    .projection_vector()
                    .expect("scalar prefix needs a projection vector");
                let c = linalg::inner(&u.dot(p), p);
                if c == linalg::ZERO {
                    return None;
                }
                Prefix::Scalar(s * c)
            }
            Prefix::Mat(m) => {
                let mut next = m.dot(u);
                if let Form::Algebraic = self.form {
                    next = next.dot(self.rep.projection());
                }
                if linalg::is_exact_zero(&next) {
                    return None;
                }
                Prefix::Mat(next)
            }
        };
        Some(next)
    }

    fn close(&self, prefix: &Prefix) -> CMat {
        match prefix {
            Prefix::Row(r) => {
                let p = self
                    .rep
                    .projection_vector()
                    .expect("row prefix needs a projection vector");
                let c: C64 = r.iter().zip(p.iter()).map(|(a, b)| a * b).sum();
                self.rep.projection().mapv(|z| z * c)
            }
            Prefix::Scalar(s) => self.rep.projection().mapv(|z| z * s),
            Prefix::Mat(m) => match self.form {
                Form::Linear => m.dot(self.rep.projection()),
                _ => m.clone(),
            },
        }
    }

    /// Total sum, and the part over `j` accepted by `select`.
    fn evaluate_split<F: Fn(&[usize]) -> bool>(
        &self,
        w: &[usize],
        select: F,
    ) -> Result<(CMat, CMat)> {
        let mut total = linalg::zeros(self.rep.dim());
        let mut selected = linalg::zeros(self.rep.dim());
        let mut j = Vec::with_capacity(w.len());
        let start = self.start();
        if w.is_empty() {
            let term = self.close(&start);
            total += &term;
            if select(&j) {
                selected += &term;
            }
            return Ok((total, selected));
        }
        self.descend(w, &start, &mut j, &select, &mut total, &mut selected)?;
        Ok((total, selected))
    }

    fn evaluate(&self, w: &[usize]) -> Result<CMat> {
        Ok(self.evaluate_split(w, |_| false)?.0)
    }

    fn descend<F: Fn(&[usize]) -> bool>(
        &self,
        w: &[usize],
        prefix: &Prefix,
        j: &mut Vec<usize>,
        select: &F,
        total: &mut CMat,
        selected: &mut CMat,
    ) -> Result<()> {
        let t = j.len();
        if t == w.len() {
            let mu = self.model.moment_of(j)?;
            if mu == linalg::ZERO {
                return Ok(());
            }
            let term = self.close(prefix).mapv(|z| z * mu);
            if select(j) {
                *selected = &*selected + &term;
            }
            *total = &*total + &term;
            return Ok(());
        }
        let n = self.rep.n();
        let i = w[t];
        for c in 1..=n {
            if self.prune && t > 0 {
                let same_letter = w[t] == w[t - 1];
                let same_index = c == j[t - 1];
                if same_letter != same_index {
                    continue;
                }
            }
            if self.rep.is_zero_generator(c, i) {
                continue;
            }
            let Some(next) = self.step(prefix, self.rep.u(c, i)) else {
                continue;
            };
            j.push(c);
            self.descend(w, &next, j, select, total, selected)?;
            j.pop();
        }
        Ok(())
    }
}

fn check_sizes(model: &MatrixModel, rep: &SemigroupRep) -> Result<()> {
    if rep.n() != model.n() {
        return Err(Error::GridMismatch {
            rep: rep.n(),
            model: model.n(),
        });
    }
    Ok(())
}

fn run_check(
    kind: CoactionKind,
    model: &MatrixModel,
    rep: &SemigroupRep,
    max_degree: usize,
    tol: f64,
) -> Result<InvarianceReport> {
    check_sizes(model, rep)?;
    let form = match kind {
        CoactionKind::Linear => Form::Linear,
        CoactionKind::Algebraic => Form::Algebraic,
        CoactionKind::Bsn => Form::Bare,
    };
    let prune = matches!(form, Form::Linear)
        && semigroup::check_relations(rep, PRUNE_TRUST_TOL)
            .verdict
            .passed();
    let rhs = Rhs {
        rep,
        model,
        form,
        prune,
    };
    let unit = match form {
        Form::Bare => rep.identity(),
        _ => rep.projection().clone(),
    };
    let words: Vec<Word> = ncpoly::words_up_to_degree(model.n(), max_degree)
        .into_iter()
        .filter(|w| !w.is_empty())
        .collect();
    let residuals: Vec<WordResidual> = words
        .into_par_iter()
        .map(|word| {
            let mu = model.moment(&word)?;
            let lhs = unit.mapv(|z| z * mu);
            let residual = linalg::max_abs_diff(&lhs, &rhs.evaluate(word.letters())?);
            Ok(WordResidual { word, residual })
        })
        .collect::<Result<_>>()?;
    let mut worst: Option<&WordResidual> = None;
    for r in &residuals {
        let replace = match worst {
            None => true,
            Some(w) => r.residual > w.residual || (r.residual.is_nan() && !w.residual.is_nan()),
        };
        if replace {
            worst = Some(r);
        }
    }
    let max_residual = worst.map_or(0.0, |w| w.residual);
    let worst_word = worst.map(|w| w.word.clone());
    Ok(InvarianceReport {
        kind,
        rep: rep.label().into(),
        model: model.label().into(),
        max_degree,
        tolerance: tol,
        pruned: prune,
        max_residual,
        worst_word,
        verdict: Verdict::from_bool(max_residual <= tol),
        words: residuals,
    })
}

pub fn linear_invariance_check(
    model: &MatrixModel,
    rep: &SemigroupRep,
    max_degree: usize,
    tol: f64,
) -> Result<InvarianceReport> {
    run_check(CoactionKind::Linear, model, rep, max_degree, tol)
}

pub fn algebraic_invariance_check(
    model: &MatrixModel,
    rep: &SemigroupRep,
    max_degree: usize,
    tol: f64,
) -> Result<InvarianceReport> {
    run_check(CoactionKind::Algebraic, model, rep, max_degree, tol)
}

/// Runs in the one-dimensional rep `I ↦ 1`, `u, P ↦ 0`, so the residual of
/// each word is `|μ(w)|`.
pub fn bsn_invariance_check(
    model: &MatrixModel,
    max_degree: usize,
    tol: f64,
) -> Result<InvarianceReport> {
    let rep = SemigroupRep::trivial(model.n());
    run_check(CoactionKind::Bsn, model, &rep, max_degree, tol)
}

/// One row of the averaging experiment.
#[derive(Clone, Debug, Serialize)]
pub struct AveragingRow {
    pub m_size: usize,
    /// `c` with `Σ_j μ(j)·P u[j][w] P = c·P` in the averaging rep.
    pub invariance_sum: C64,
    /// Part of the sum where the averaged runs carry pairwise distinct indices.
    pub distinct_part: C64,
    /// `|invariance_sum − distinct_part|`: the contribution of coinciding indices.
    pub deviation: f64,
    /// `|invariance_sum − reduced_moment|`.
    pub full_deviation: f64,
    /// `1 − Π_{s<m}(M−s)/M^m`.
    pub factor: f64,
    /// `factor · moment_bound`.
    pub bound: f64,
    /// `deviation / (factor·|reduced_moment|)`, when both are nonzero.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AveragingReport {
    pub model: String,
    pub frozen: usize,
    pub word: Vec<usize>,
    /// Number of runs of the averaged letter `N+1`.
    pub averaged_runs: usize,
    pub reduced_moment: C64,
    pub moment_bound: f64,
    pub rows: Vec<AveragingRow>,
    pub tolerance: f64,
    pub monotone: bool,
    pub within_bound: bool,
    pub factor_match: bool,
    pub verdict: Verdict,
}

impl AveragingReport {
    pub fn checks(&self) -> Vec<Check> {
        let label = format!("averaging{:?}", self.word);
        let last = self.rows.last().map_or(0.0, |r| r.deviation);
        let worst_ratio = self
            .rows
            .iter()
            .filter_map(|r| r.ratio)
            .fold(0.0f64, |a, r| a.max((r - 1.0).abs()));
        vec![
            Check::with_verdict(
                format!("{label}.monotone"),
                last,
                self.tolerance,
                self.monotone,
            ),
            Check::with_verdict(
                format!("{label}.bound"),
                last,
                self.tolerance,
                self.within_bound,
            ),
            Check::with_verdict(
                format!("{label}.factor_match"),
                worst_ratio,
                FACTOR_MATCH_TOL,
                self.factor_match,
            ),
        ]
    }
}

/// `1 − Π_{s<m}(M−s)/M^m`: the share of index assignments where two of the
/// `m` averaged runs coincide.
pub fn coincidence_factor(m_size: usize, runs: usize) -> f64 {
    let mut distinct = 1.0;
    for s in 0..runs {
        distinct *= (m_size as f64 - s as f64).max(0.0) / m_size as f64;
    }
    1.0 - distinct
}

/// Evaluates the linear invariance sum of `word` under `build_averaging_rep(N, M)`
/// for each `M`. Letters `1..=N` stay frozen; the letter `N+1` is averaged over
/// `N+1..N+M`. The model must expose at least `N + max(M)` variables.
pub fn averaging_invariance_experiment(
    model: &MatrixModel,
    frozen: usize,
    m_sizes: &[usize],
    word: &[usize],
    tol: f64,
) -> Result<AveragingReport> {
    averaging_experiment_with(model, frozen, m_sizes, word, tol, |m| {
        semigroup::build_averaging_rep(frozen, m)
    })
}

/// [`averaging_invariance_experiment`] with a caller-supplied rep for each `M`.
pub fn averaging_experiment_with<F>(
    model: &MatrixModel,
    frozen: usize,
    m_sizes: &[usize],
    word: &[usize],
    tol: f64,
    build_rep: F,
) -> Result<AveragingReport>
where
    F: Fn(usize) -> Result<SemigroupRep>,
{
    if word.is_empty() {
        return Err(Error::EmptySequence);
    }
    let averaged = frozen + 1;
    if let Some(&bad) = word.iter().find(|&&l| l == 0 || l > averaged) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n: averaged,
        });
    }
    let runs = ncpoly::word_runs(word);
    let averaged_runs = runs.iter().filter(|(i, _)| *i == averaged).count();
    let needed = frozen
        + m_sizes
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
            .max(averaged_runs);
    if model.n() < needed {
        return Err(Error::InvalidSize(format!(
            "averaging experiment needs {needed} variables, model has {}",
            model.n()
        )));
    }

    // s-th averaged run relabeled to N+s
    let mut reduced_word = Vec::with_capacity(word.len());
    let mut seen = 0;
    for (i, (letter, len)) in runs.iter().enumerate() {
        let label = if *letter == averaged {
            if i == 0 || runs[i - 1].0 != averaged {
                seen += 1;
            }
            frozen + seen
        } else {
            *letter
        };
        reduced_word.extend(std::iter::repeat_n(label, *len));
    }
    let reduced_moment = model.moment_of(&reduced_word)?;
    let norm = model
        .variables()
        .iter()
        .map(linalg::hermitian_norm)
        .fold(0.0f64, f64::max);
    let moment_bound = norm.powi(word.len() as i32);

    // first position of every averaged run
    let run_starts: Vec<usize> = {
        let mut pos = 0;
        let mut out = Vec::new();
        for (letter, len) in &runs {
            if *letter == averaged {
                out.push(pos);
            }
            pos += len;
        }
        out
    };
    let distinct = |j: &[usize]| {
        let vals: Vec<usize> = run_starts.iter().map(|&p| j[p]).collect();
        (0..vals.len()).all(|a| (a + 1..vals.len()).all(|b| vals[a] != vals[b]))
    };

    let mut rows = Vec::with_capacity(m_sizes.len());
    for &m_size in m_sizes {
        let rep = build_rep(m_size)?;
        let sub = model.restrict(frozen + m_size)?;
        let prune = semigroup::check_relations(&rep, PRUNE_TRUST_TOL)
            .verdict
            .passed();
        let rhs = Rhs {
            rep: &rep,
            model: &sub,
            form: Form::Linear,
            prune,
        };
        let (total, selected) = rhs.evaluate_split(word, distinct)?;
        let corner = |m: &CMat| match rep.projection_vector() {
            Some(p) => linalg::inner(&m.dot(p), p),
            None => m[[0, 0]] / rep.projection()[[0, 0]],
        };
        let invariance_sum = corner(&total);
        let distinct_part = corner(&selected);
        let deviation = (invariance_sum - distinct_part).norm();
        let factor = coincidence_factor(m_size, averaged_runs);
        let scale = factor * reduced_moment.norm();
        rows.push(AveragingRow {
            m_size,
            invariance_sum,
            distinct_part,
            deviation,
            full_deviation: (invariance_sum - reduced_moment).norm(),
            factor,
            bound: factor * moment_bound,
            ratio: (scale > 0.0).then(|| deviation / scale),
        });
    }

    let averaging_active = averaged_runs >= 2;
    let monotone = if averaging_active {
        rows.windows(2).all(|w| w[1].deviation < w[0].deviation)
    } else {
        rows.iter().all(|r| r.deviation <= tol)
    };
    let within_bound = rows.iter().all(|r| r.deviation <= r.bound + tol);
    let factor_match = rows.iter().all(|r| match r.ratio {
        Some(q) => (q - 1.0).abs() <= FACTOR_MATCH_TOL,
        None => r.deviation <= tol,
    });
    Ok(AveragingReport {
        model: model.label().into(),
        frozen,
        word: word.to_vec(),
        averaged_runs,
        reduced_moment,
        moment_bound,
        rows,
        tolerance: tol,
        monotone,
        within_bound,
        factor_match,
        verdict: Verdict::from_bool(monotone && within_bound && factor_match),
    })
}
