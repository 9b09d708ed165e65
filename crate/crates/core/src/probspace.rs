//! Finite-dimensional noncommutative probability spaces and the independence
//! checks run against them.
//!
//! A [`MatrixModel`] holds self-adjoint matrices `x_1..x_n` and a state. A
//! [`CondExpectation`] is given in closed form. The checks sweep alternating
//! products `p_1(x_{i_1})···p_m(x_{i_m})` with `i_k ≠ i_{k+1}`, where each
//! `p_k` is a power of `x_{i_k}`, optionally with a range-algebra coefficient
//! inside it and one on its right.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::ncpoly::{self, Word};
use crate::report::{Check, Verdict};

const VALIDATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum State {
    /// `φ(x) = <x ξ, ξ>`.
    Vector(CVec),
    /// `φ(x) = tr(ρ x)`.
    Density(CMat),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Vector(v) => v.len(),
            State::Density(rho) => rho.nrows(),
        }
    }

    pub fn apply(&self, x: &CMat) -> C64 {
        match self {
            State::Vector(xi) => linalg::inner(&x.dot(xi), xi),
            State::Density(rho) => {
                let d = rho.nrows();
                let mut acc = linalg::ZERO;
                for a in 0..d {
                    for b in 0..d {
                        acc += rho[[a, b]] * x[[b, a]];
                    }
                }
                acc
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let total = match self {
            State::Vector(v) => v.iter().map(|z| z.norm_sqr()).sum::<f64>(),
            State::Density(rho) => {
                if rho.ncols() != rho.nrows() {
                    return Err(Error::InvalidModel("density matrix must be square".into()));
                }
                let residual = linalg::self_adjoint_residual(rho);
                if residual > VALIDATION_TOL {
                    return Err(Error::NotSelfAdjoint { residual });
                }
                rho.diag().iter().map(|z| z.re).sum()
            }
        };
        if (total - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NotNormalized { value: total });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MatrixModel {
    x: Vec<CMat>,
    state: State,
    dim: usize,
    label: String,
}

impl MatrixModel {
    pub fn new(x: Vec<CMat>, state: State, label: impl Into<String>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidModel(
                "a model needs at least one variable".into(),
            ));
        }
        let dim = state.dim();
        for m in &x {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.nrows().max(m.ncols()),
                });
            }
            let residual = linalg::self_adjoint_residual(m);
            if residual > VALIDATION_TOL {
                return Err(Error::NotSelfAdjoint { residual });
            }
        }
        state.validate()?;
        Ok(MatrixModel {
            x,
            state,
            dim,
            label: label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn variables(&self) -> &[CMat] {
        &self.x
    }

    /// `x_i`, 1-based.
    pub fn x(&self, i: usize) -> Result<&CMat> {
        if i == 0 || i > self.x.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.x.len(),
            });
        }
        Ok(&self.x[i - 1])
    }

    pub fn phi(&self, m: &CMat) -> C64 {
        self.state.apply(m)
    }

    pub fn evaluate(&self, w: &Word) -> Result<CMat> {
        w.evaluate(&self.x)
    }

    /// `φ(x_{i_1}···x_{i_k})` for raw letters.
    pub fn moment_of(&self, letters: &[usize]) -> Result<C64> {
        for &l in letters {
            self.x(l)?;
        }
        match &self.state {
            State::Vector(xi) => {
                let mut v = xi.clone();
                for &l in letters.iter().rev() {
                    v = self.x[l - 1].dot(&v);
                }
                Ok(linalg::inner(&v, xi))
            }
            State::Density(_) => {
                let mut acc = linalg::identity(self.dim);
                for &l in letters {
                    acc = acc.dot(&self.x[l - 1]);
                }
                Ok(self.state.apply(&acc))
            }
        }
    }

    pub fn moment(&self, w: &Word) -> Result<C64> {
        self.moment_of(w.letters())
    }

    /// `(φ(x_i), φ(x_i²), …, φ(x_i^order))`.
    pub fn single_variable_moments(&self, i: usize, order: usize) -> Result<Vec<C64>> {
        (1..=order).map(|t| self.moment_of(&vec![i; t])).collect()
    }

    /// The model on the first `n` variables only.
    pub fn restrict(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.x.len() {
            return Err(Error::InvalidSize(format!(
                "cannot restrict {} variables to {n}",
                self.x.len()
            )));
        }
        Ok(MatrixModel {
            x: self.x[..n].to_vec(),
            state: self.state.clone(),
            dim: self.dim,
            label: self.label.clone(),
        })
    }

    /// Replace one variable, e.g. to inject a fault.
    pub fn with_variable(&self, i: usize, m: CMat) -> Result<Self> {
        self.x(i)?;
        let mut x = self.x.clone();
        x[i - 1] = m;
        MatrixModel::new(x, self.state.clone(), format!("{}+modified", self.label))
    }
}

/// A conditional expectation given in closed form.
#[derive(Clone, Debug)]
pub enum CondExpectation {
    /// `x ↦ Q x Q`.
    Compression { q: CMat },
    /// `x ↦ Q x Q + <x w, w>·(I − R)`.
    CompressionPlusScalar { q: CMat, w: CVec, r: CMat },
}

impl CondExpectation {
    pub fn apply(&self, x: &CMat) -> CMat {
        match self {
            CondExpectation::Compression { q } => q.dot(x).dot(q),
            CondExpectation::CompressionPlusScalar { q, w, r } => {
                let s = linalg::inner(&x.dot(w), w);
                let comp = q.dot(x).dot(q);
                let dim = x.nrows();
                let rest = linalg::identity(dim) - r;
                comp + rest.mapv(|z| z * s)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CondExpectation::Compression { q } => q.nrows(),
            CondExpectation::CompressionPlusScalar { q, .. } => q.nrows(),
        }
    }

    /// A spanning set of the range algebra, with display names.
    pub fn range_basis(&self) -> Vec<(String, CMat)> {
        match self {
            CondExpectation::Compression { q } => vec![("Q".into(), q.clone())],
            CondExpectation::CompressionPlusScalar { q, r, .. } => {
                let rest = linalg::identity(q.nrows()) - r;
                vec![("Q".into(), q.clone()), ("(I-R)".into(), rest)]
            }
        }
    }

    /// `max ‖E[E[x]] − E[x]‖` over the samples.
    pub fn idempotence_residual(&self, samples: &[CMat]) -> f64 {
        samples.iter().fold(0.0, |acc, x| {
            let ex = self.apply(x);
            acc.max(linalg::max_abs_diff(&self.apply(&ex), &ex))
        })
    }

    /// `max ‖E[b1 x b2] − b1 E[x] b2‖` over samples and range basis pairs (identity included).
    pub fn bimodule_residual(&self, samples: &[CMat]) -> f64 {
        let mut basis: Vec<CMat> = self.range_basis().into_iter().map(|(_, b)| b).collect();
        basis.push(linalg::identity(self.dim()));
        let mut worst = 0.0f64;
        for x in samples {
            let ex = self.apply(x);
            for b1 in &basis {
                for b2 in &basis {
                    let lhs = self.apply(&b1.dot(x).dot(b2));
                    let rhs = b1.dot(&ex).dot(b2);
                    worst = worst.max(linalg::max_abs_diff(&lhs, &rhs));
                }
            }
        }
        worst
    }
}

/// `(x, a)`: scalar `x` plus body `a` in the algebra with a unit adjoined.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitalizedElement {
    pub scalar: C64,
    pub body: CMat,
}

impl UnitalizedElement {
    pub fn new(scalar: C64, body: CMat) -> Self {
        UnitalizedElement { scalar, body }
    }

    pub fn adjoint(&self) -> Self {
        UnitalizedElement {
            scalar: self.scalar.conj(),
            body: linalg::adjoint(&self.body),
        }
    }

    /// `Ē(x, a) = (x, E[a])`.
    pub fn lift(&self, e: &CondExpectation) -> Self {
        UnitalizedElement {
            scalar: self.scalar,
            body: e.apply(&self.body),
        }
    }

    /// `max(|Δscalar|, ‖Δbody‖)`.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.scalar - other.scalar)
            .norm()
            .max(linalg::max_abs_diff(&self.body, &other.body))
    }
}

impl Add for &UnitalizedElement {
    type Output = UnitalizedElement;
    fn add(self, rhs: &UnitalizedElement) -> UnitalizedElement {
        UnitalizedElement {
            scalar: self.scalar + rhs.scalar,
            body: &self.body + &rhs.body,
        }
    }
}

impl Mul for &UnitalizedElement {
    type Output = UnitalizedElement;
    /// `(x, a)(y, b) = (xy, x·b + y·a + ab)`.
    fn mul(self, rhs: &UnitalizedElement) -> UnitalizedElement {
        let (x, y) = (self.scalar, rhs.scalar);
        UnitalizedElement {
            scalar: x * y,
            body: rhs.body.mapv(|z| z * x) + self.body.mapv(|z| z * y) + self.body.dot(&rhs.body),
        }
    }
}

/// Product over maximal runs `(i, t)` of `m_t`, with `moments[t-1] = m_t`.
pub fn boolean_predicted_moment(moments: &[C64], w: &Word) -> Result<C64> {
    if w.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut acc = linalg::ONE;
    for (_, t) in w.runs() {
        let m = moments.get(t - 1).ok_or(Error::InsufficientMoments {
            needed: t,
            available: moments.len(),
        })?;
        acc *= m;
    }
    Ok(acc)
}

/// `φ(E[x_{i_1}^{t_1}]···E[x_{i_r}^{t_r}])` over the runs of `w`: the boolean
/// prediction when the variables are independent over the range of `E`.
pub fn boolean_predicted_operator_moment(
    model: &MatrixModel,
    e: &CondExpectation,
    w: &Word,
) -> Result<C64> {
    if w.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut acc = linalg::identity(model.dim());
    for (i, t) in w.runs() {
        let block = Word::new(vec![i; t], model.n())?;
        acc = acc.dot(&e.apply(&model.evaluate(&block)?));
    }
    Ok(model.phi(&acc))
}

/// Outcome of one sweep over alternating products.
#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    pub check: String,
    pub model: String,
    pub max_len: usize,
    pub items_checked: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    /// Letters of the worst product, coefficients dropped.
    pub witness: Option<Vec<usize>>,
    /// The worst product with its coefficients, e.g. `x1·Q·x1 | x2^2`.
    pub detail: Option<String>,
    /// Largest uncentered value seen (only for the freeness check).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncentered_max: Option<f64>,
}

impl IndependenceReport {
    pub fn to_check(&self) -> Check {
        let c = Check::new(self.check.clone(), self.residual, self.tolerance);
        match &self.witness {
            Some(w) => c.with_witness(w),
            None => c,
        }
    }
}

/// One factor `p_k(x_{i_k})` of an alternating product.
struct Block {
    index: usize,
    power: usize,
    label: String,
    p: CMat,
    ep: CMat,
}

/// How the checks take expectations: operator-valued, or `φ(·)·I`.
#[derive(Clone, Copy)]
enum Expect<'a> {
    Operator(&'a CondExpectation),
    Scalar(&'a MatrixModel),
}

impl Expect<'_> {
    fn apply(&self, x: &CMat) -> CMat {
        match self {
            Expect::Operator(e) => e.apply(x),
            Expect::Scalar(m) => {
                let s = m.phi(x);
                linalg::identity(x.nrows()).mapv(|z| z * s)
            }
        }
    }
}

fn pick<'a>(e: Option<&'a CondExpectation>, model: &'a MatrixModel) -> Result<Expect<'a>> {
    match e {
        Some(e) => {
            if e.dim() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    found: e.dim(),
                });
            }
            Ok(Expect::Operator(e))
        }
        None => Ok(Expect::Scalar(model)),
    }
}

fn power_label(i: usize, t: usize) -> String {
    if t == 1 {
        format!("x{i}")
    } else {
        format!("x{i}^{t}")
    }
}

/// All factor choices for every `(i, t)` with `t ≤ max_len`.
fn block_table(
    model: &MatrixModel,
    ex: Expect<'_>,
    max_len: usize,
) -> BTreeMap<(usize, usize), Vec<Block>> {
    let coeffs: Vec<(String, CMat)> = match ex {
        Expect::Operator(e) => e.range_basis(),
        Expect::Scalar(_) => Vec::new(),
    };
    let mut table = BTreeMap::new();
    for i in 1..=model.n() {
        let xi = &model.variables()[i - 1];
        let mut powers = vec![linalg::identity(model.dim())];
        for t in 1..=max_len {
            powers.push(powers[t - 1].dot(xi));
        }
        for t in 1..=max_len {
            // x^t, and x · b · x^(t-1) for t ≥ 2
            let mut bodies = vec![(power_label(i, t), powers[t].clone())];
            if t >= 2 {
                for (name, b) in &coeffs {
                    let m = xi.dot(b).dot(&powers[t - 1]);
                    bodies.push((format!("x{i}·{name}·{}", power_label(i, t - 1)), m));
                }
            }
            let mut blocks = Vec::new();
            for (label, body) in bodies {
                for (name, g) in &coeffs {
                    let p = body.dot(g);
                    let ep = ex.apply(&p);
                    blocks.push(Block {
                        index: i,
                        power: t,
                        label: format!("{label}·{name}"),
                        p,
                        ep,
                    });
                }
                let ep = ex.apply(&body);
                blocks.push(Block {
                    index: i,
                    power: t,
                    label,
                    p: body,
                    ep,
                });
            }
            table.insert((i, t), blocks);
        }
    }
    table
}

#[derive(Clone, Debug)]
struct Worst {
    residual: f64,
    letters: Vec<usize>,
    detail: String,
    count: usize,
}

impl Worst {
    fn new() -> Self {
        Worst {
            residual: 0.0,
            letters: Vec::new(),
            detail: String::new(),
            count: 0,
        }
    }

    fn offer(&mut self, residual: f64, stack: &[&Block]) {
        self.count += 1;
        let better = residual > self.residual || (residual.is_nan() && !self.residual.is_nan());
        if better || self.letters.is_empty() {
            if better {
                self.residual = residual;
            }
            self.letters = stack.iter().flat_map(|b| vec![b.index; b.power]).collect();
            self.detail = stack
                .iter()
                .map(|b| b.label.as_str())
                .collect::<Vec<_>>()
                .join(" | ");
        }
    }

    /// Keeps `self` on ties so the earliest item in sweep order wins.
    fn merge(mut self, other: Worst) -> Worst {
        let count = self.count + other.count;
        let better =
            other.residual > self.residual || (other.residual.is_nan() && !self.residual.is_nan());
        if better || self.letters.is_empty() {
            self = other;
        }
        self.count = count;
        self
    }
}

/// Depth-first sweep of alternating products of total degree ≤ `max_len`;
/// `eval` maps the current factor stack to a residual.
fn sweep<F>(model: &MatrixModel, ex: Expect<'_>, max_len: usize, eval: F) -> Worst
where
    F: Fn(&[&Block]) -> f64 + Sync,
{
    let table = block_table(model, ex, max_len);
    let roots: Vec<&Block> = table.values().flatten().collect();

    fn descend<'t, F: Fn(&[&Block]) -> f64>(
        table: &'t BTreeMap<(usize, usize), Vec<Block>>,
        n: usize,
        budget: usize,
        stack: &mut Vec<&'t Block>,
        eval: &F,
        worst: &mut Worst,
    ) {
        worst.offer(eval(stack), stack);
        let prev = stack.last().map(|b| b.index).unwrap_or(0);
        for i in (1..=n).filter(|&i| i != prev) {
            for t in 1..=budget {
                for b in &table[&(i, t)] {
                    stack.push(b);
                    descend(table, n, budget - t, stack, eval, worst);
                    stack.pop();
                }
            }
        }
    }

    roots
        .par_iter()
        .map(|root| {
            let mut worst = Worst::new();
            let mut stack = vec![*root];
            descend(
                &table,
                model.n(),
                max_len - root.power,
                &mut stack,
                &eval,
                &mut worst,
            );
            worst
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Worst::new(), Worst::merge)
}

fn product<'a>(mats: impl Iterator<Item = &'a CMat>, dim: usize) -> CMat {
    mats.fold(linalg::identity(dim), |acc, m| acc.dot(m))
}

fn finish(
    check: &str,
    model: &MatrixModel,
    max_len: usize,
    tol: f64,
    w: Worst,
) -> IndependenceReport {
    let found = w.count > 0;
    IndependenceReport {
        check: check.into(),
        model: model.label().into(),
        max_len,
        items_checked: w.count,
        residual: w.residual,
        tolerance: tol,
        verdict: Verdict::from_bool(w.residual <= tol),
        witness: found.then(|| w.letters.clone()),
        detail: found.then(|| w.detail.clone()),
        uncentered_max: None,
    }
}

/// `E[p_1···p_m] = E[p_1]···E[p_m]` over alternating products. Without an
/// `E`, the state itself is used: `φ(p_1···p_m) = φ(p_1)···φ(p_m)`.
pub fn check_boolean_independence(
    model: &MatrixModel,
    e: Option<&CondExpectation>,
    max_len: usize,
    tol: f64,
) -> Result<IndependenceReport> {
    let ex = pick(e, model)?;
    let dim = model.dim();
    let worst = sweep(model, ex, max_len, |stack| {
        let lhs = ex.apply(&product(stack.iter().map(|b| &b.p), dim));
        let rhs = product(stack.iter().map(|b| &b.ep), dim);
        linalg::max_abs_diff(&lhs, &rhs)
    });
    Ok(finish("boolean_independence", model, max_len, tol, worst))
}

/// `E[p_1···p_m···p_r] = E[p_1···E[p_m]···p_r]` for every inner position `m`.
pub fn check_factorization_property(
    model: &MatrixModel,
    e: Option<&CondExpectation>,
    max_len: usize,
    tol: f64,
) -> Result<IndependenceReport> {
    let ex = pick(e, model)?;
    let dim = model.dim();
    let worst = sweep(model, ex, max_len, |stack| {
        let full = ex.apply(&product(stack.iter().map(|b| &b.p), dim));
        let mut r = 0.0f64;
        for m in 0..stack.len() {
            let inserted = product(
                stack
                    .iter()
                    .enumerate()
                    .map(|(k, b)| if k == m { &b.ep } else { &b.p }),
                dim,
            );
            r = r.max(linalg::max_abs_diff(&ex.apply(&inserted), &full));
        }
        r
    });
    Ok(finish("factorization_property", model, max_len, tol, worst))
}

/// In the unitalized algebra, `Ē[a_1···a_m] = 0` for alternating
/// `a_k = (0, p_k − E[p_k])`. The report also records the largest
/// `‖Ē[(0,p_1)···(0,p_m)]‖` for products of at least two factors, which is
/// typically nonzero.
pub fn check_boolean_implies_free(
    model: &MatrixModel,
    e: Option<&CondExpectation>,
    max_len: usize,
    tol: f64,
) -> Result<IndependenceReport> {
    let ex = pick(e, model)?;
    let dim = model.dim();
    let lift = |u: &UnitalizedElement| UnitalizedElement::new(u.scalar, ex.apply(&u.body));
    let centered = sweep(model, ex, max_len, |stack| {
        let mut acc = UnitalizedElement::new(linalg::ONE, linalg::zeros(dim));
        for b in stack {
            let a = UnitalizedElement::new(linalg::ZERO, &b.p - &b.ep);
            acc = &acc * &a;
        }
        let zero = UnitalizedElement::new(linalg::ZERO, linalg::zeros(dim));
        lift(&acc).distance(&zero)
    });
    let raw = sweep(model, ex, max_len, |stack| {
        if stack.len() < 2 {
            return 0.0;
        }
        linalg::max_abs(&ex.apply(&product(stack.iter().map(|b| &b.p), dim)))
    });
    let mut report = finish("free_after_unitalization", model, max_len, tol, centered);
    report.uncentered_max = Some(raw.residual);
    Ok(report)
}

/// `φ(x_{i_1}^{k_1}···x_{i_m}^{k_m})` is the same for every consecutive-distinct
/// tuple `(i_1..i_m)` from `[n]^m` with a fixed power vector, `m ≤ max_indices`,
/// powers in `1..=max_power`.
pub fn check_moment_reduction(
    model: &MatrixModel,
    max_indices: usize,
    max_power: usize,
    tol: f64,
) -> Result<IndependenceReport> {
    let n = model.n();
    let mut worst = 0.0f64;
    let mut witness: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut count = 0;
    for m in 1..=max_indices {
        let tuples: Vec<Vec<usize>> = ncpoly::words_of_length(n, m)
            .into_iter()
            .map(|w| w.letters().to_vec())
            .filter(|t| t.windows(2).all(|p| p[0] != p[1]))
            .collect();
        for powers in ncpoly::words_of_length(max_power, m) {
            let powers = powers.letters();
            let expand = |t: &[usize]| -> Vec<usize> {
                t.iter()
                    .zip(powers)
                    .flat_map(|(&i, &k)| vec![i; k])
                    .collect()
            };
            let values: Vec<(Vec<usize>, C64)> = tuples
                .iter()
                .map(|t| {
                    let w = expand(t);
                    let v = model.moment_of(&w)?;
                    Ok((w, v))
                })
                .collect::<Result<_>>()?;
            count += values.len();
            for a in 0..values.len() {
                for b in a + 1..values.len() {
                    let d = (values[a].1 - values[b].1).norm();
                    if d > worst || (d.is_nan() && !worst.is_nan()) {
                        worst = d;
                        witness = Some((values[a].0.clone(), values[b].0.clone()));
                    }
                }
            }
        }
    }
    Ok(IndependenceReport {
        check: "moment_reduction".into(),
        model: model.label().into(),
        max_len: max_indices * max_power,
        items_checked: count,
        residual: worst,
        tolerance: tol,
        verdict: Verdict::from_bool(worst <= tol),
        witness: witness.as_ref().map(|(a, _)| a.clone()),
        detail: witness.map(|(a, b)| format!("{} vs {}", fmt_letters(&a), fmt_letters(&b))),
        uncentered_max: None,
    })
}

fn fmt_letters(l: &[usize]) -> String {
    let parts: Vec<String> = l.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}
