//! Noncommutative words and polynomials in `n` indeterminants.
//!
//! A [`Word`] stores the expanded letters `i_1 … i_k` of the monomial
//! `X_{i_1}···X_{i_k}`; powers are recovered with [`Word::runs`]. Letters are
//! 1-based to match the generator labels used everywhere else.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

/// Coefficients below this magnitude are dropped after arithmetic.
pub const COEFF_EPS: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    letters: Vec<usize>,
    n: usize,
}

impl Word {
    pub fn new(letters: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l == 0 || l > n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        Ok(Word { letters, n })
    }

    /// The monomial `1`.
    pub fn empty(n: usize) -> Self {
        Word {
            letters: Vec::new(),
            n,
        }
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(Word { letters, n: self.n })
    }

    /// Maximal constant runs as `(index, run length)` pairs.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        word_runs(&self.letters)
    }

    /// The ordered product `x_{i_1}···x_{i_k}`; the empty word gives the identity.
    pub fn evaluate(&self, mats: &[CMat]) -> Result<CMat> {
        let dim = common_dim(mats)?;
        let mut acc = linalg::identity(dim);
        for &l in &self.letters {
            let m = mats.get(l - 1).ok_or(Error::IndexOutOfRange {
                index: l,
                n: mats.len(),
            })?;
            acc = acc.dot(m);
        }
        Ok(acc)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

// Words go into reports as plain integer arrays.
impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.letters.serialize(s)
    }
}

fn common_dim(mats: &[CMat]) -> Result<usize> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidSize("no matrices supplied".into()))?;
    let dim = first.nrows();
    for m in mats {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: if m.nrows() != dim {
                    m.nrows()
                } else {
                    m.ncols()
                },
            });
        }
    }
    Ok(dim)
}

/// Run-length encoding of an index sequence.
pub fn word_runs(letters: &[usize]) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &l in letters {
        match runs.last_mut() {
            Some((idx, len)) if *idx == l => *len += 1,
            _ => runs.push((l, 1)),
        }
    }
    runs
}

/// Every word over `1..=n` of length at most `d`, in lexicographic order.
pub fn words_up_to_degree(n: usize, d: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(d);
    push_words(n, d, &mut current, &mut out);
    out
}

fn push_words(n: usize, d: usize, current: &mut Vec<usize>, out: &mut Vec<Word>) {
    out.push(Word {
        letters: current.clone(),
        n,
    });
    if current.len() == d {
        return;
    }
    for l in 1..=n {
        current.push(l);
        push_words(n, d, current, out);
        current.pop();
    }
}

/// Words of exactly length `k`, lexicographic.
pub fn words_of_length(n: usize, k: usize) -> Vec<Word> {
    let total = n.pow(k as u32);
    (0..total)
        .map(|mut code| {
            let mut letters = vec![0; k];
            for slot in letters.iter_mut().rev() {
                *slot = code % n + 1;
                code /= n;
            }
            Word { letters, n }
        })
        .collect()
}

/// An element of the free algebra `C<X_1, …, X_n>`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Word, C64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n: usize) -> Self {
        Self::monomial(Word::empty(n), linalg::ONE)
    }

    pub fn monomial(word: Word, coeff: C64) -> Self {
        let n = word.n;
        let mut p = Polynomial::zero(n);
        p.terms.insert(word, coeff);
        p.normalize();
        p
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Word, C64)>) -> Result<Self> {
        let mut p = Polynomial::zero(n);
        for (w, c) in terms {
            if w.n != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.n,
                });
            }
            *p.terms.entry(w).or_insert(linalg::ZERO) += c;
        }
        p.normalize();
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &Word) -> C64 {
        self.terms.get(w).copied().unwrap_or(linalg::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Word::len).max()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c *= s;
        }
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        self.terms.retain(|_, c| c.norm() >= COEFF_EPS);
    }

    /// Substitute `X_i ↦ mats[i-1]`.
    pub fn evaluate(&self, mats: &[CMat]) -> Result<CMat> {
        let dim = common_dim(mats)?;
        let mut acc = linalg::zeros(dim);
        for (w, c) in &self.terms {
            acc = acc + w.evaluate(mats)?.mapv(|z| z * c);
        }
        Ok(acc)
    }

    /// Extend a functional on monomials linearly.
    pub fn apply<F: FnMut(&Word) -> C64>(&self, mut f: F) -> C64 {
        self.terms.iter().map(|(w, c)| c * f(w)).sum()
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "polynomials over different alphabets");
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            *out.terms.entry(w.clone()).or_insert(linalg::ZERO) += c;
        }
        out.normalize();
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-linalg::ONE)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "polynomials over different alphabets");
        let mut out = Polynomial::zero(self.n);
        for (v, a) in &self.terms {
            for (w, b) in &rhs.terms {
                let vw = v.concat(w).expect("same alphabet");
                *out.terms.entry(vw).or_insert(linalg::ZERO) += a * b;
            }
        }
        out.normalize();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn w(letters: &[usize], n: usize) -> Word {
        Word::new(letters.to_vec(), n).unwrap()
    }

    #[test]
    fn runs_examples() {
        assert_eq!(word_runs(&[1, 1, 2]), vec![(1, 2), (2, 1)]);
        assert_eq!(word_runs(&[]), vec![]);
        assert_eq!(word_runs(&[1, 2, 1]), vec![(1, 1), (2, 1), (1, 1)]);
    }

    #[test]
    fn rejects_out_of_range_letters() {
        assert!(matches!(
            Word::new(vec![1, 4], 3),
            Err(Error::IndexOutOfRange { index: 4, n: 3 })
        ));
        assert!(Word::new(vec![0], 3).is_err());
    }

    #[test]
    fn words_up_to_degree_counts_and_order() {
        let ws = words_up_to_degree(2, 1);
        assert_eq!(ws, vec![w(&[], 2), w(&[1], 2), w(&[2], 2)]);
        assert_eq!(words_up_to_degree(2, 2).len(), 7);
        let ones = words_up_to_degree(1, 3);
        assert_eq!(
            ones,
            vec![w(&[], 1), w(&[1], 1), w(&[1, 1], 1), w(&[1, 1, 1], 1)]
        );
        let many = words_up_to_degree(3, 4);
        assert_eq!(many.len(), 1 + 3 + 9 + 27 + 81);
        assert!(many.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn words_of_length_matches_filter() {
        let direct = words_of_length(3, 3);
        let filtered: Vec<_> = words_up_to_degree(3, 3)
            .into_iter()
            .filter(|x| x.len() == 3)
            .collect();
        assert_eq!(direct, filtered);
    }

    #[test]
    fn empty_word_evaluates_to_identity() {
        let mats = vec![linalg::zeros(3)];
        let e = Word::empty(1).evaluate(&mats).unwrap();
        assert_eq!(e, linalg::identity(3));
    }

    #[test]
    fn evaluate_equal_substitutions() {
        let x = Array2::from_shape_fn((2, 2), |(i, j)| C64::new((i + j) as f64, 0.0));
        let mats = vec![x.clone(), x];
        let a = w(&[1, 1], 2).evaluate(&mats).unwrap();
        let b = w(&[1, 2], 2).evaluate(&mats).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluate_errors() {
        let mats = vec![linalg::identity(2), linalg::identity(3)];
        assert!(matches!(
            w(&[1], 2).evaluate(&mats),
            Err(Error::DimensionMismatch { .. })
        ));
        let mats = vec![linalg::identity(2)];
        assert!(matches!(
            w(&[2], 2).evaluate(&mats),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn serializes_as_integer_array() {
        assert_eq!(serde_json::to_string(&w(&[1, 1, 2], 2)).unwrap(), "[1,1,2]");
    }

    #[test]
    fn polynomial_arithmetic() {
        let x1 = Polynomial::monomial(w(&[1], 2), linalg::ONE);
        let x2 = Polynomial::monomial(w(&[2], 2), linalg::ONE);
        let d = &x1 - &x2;
        let sq = &d * &d;
        assert_eq!(sq.coefficient(&w(&[1, 1], 2)), linalg::ONE);
        assert_eq!(sq.coefficient(&w(&[1, 2], 2)), -linalg::ONE);
        assert_eq!(sq.coefficient(&w(&[2, 1], 2)), -linalg::ONE);
        assert_eq!(sq.coefficient(&w(&[2, 2], 2)), linalg::ONE);
        assert!((&d - &d).is_zero());
        assert_eq!(sq.degree(), Some(2));
    }

    #[test]
    fn tiny_coefficients_are_dropped() {
        let p = Polynomial::monomial(w(&[1], 1), C64::new(1e-15, 0.0));
        assert!(p.is_zero());
    }

    fn arb_word(n: usize, max_len: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec(1..=n, 0..=max_len).prop_map(move |l| Word::new(l, n).unwrap())
    }

    fn arb_mats(n: usize, dim: usize) -> impl Strategy<Value = Vec<CMat>> {
        prop::collection::vec(
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim),
            n,
        )
        .prop_map(move |ms| {
            ms.into_iter()
                .map(|v| {
                    Array2::from_shape_fn((dim, dim), |(i, j)| {
                        let (re, im) = v[i * dim + j];
                        C64::new(re, im)
                    })
                })
                .collect()
        })
    }

    #[test]
    fn concat_associative_with_identity_exhaustive() {
        for n in 1..=3 {
            let ws = words_up_to_degree(n, 2);
            let e = Word::empty(n);
            for a in &ws {
                assert_eq!(&a.concat(&e).unwrap(), a);
                assert_eq!(&e.concat(a).unwrap(), a);
                for b in &ws {
                    for c in &ws {
                        let l = a.concat(b).unwrap().concat(c).unwrap();
                        let r = a.concat(&b.concat(c).unwrap()).unwrap();
                        assert_eq!(l, r);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn evaluate_is_monoid_homomorphism(
            v in arb_word(3, 4),
            u in arb_word(3, 4),
            mats in arb_mats(3, 3),
        ) {
            let lhs = v.concat(&u).unwrap().evaluate(&mats).unwrap();
            let rhs = v.evaluate(&mats).unwrap().dot(&u.evaluate(&mats).unwrap());
            prop_assert!(linalg::max_abs_diff(&lhs, &rhs) <= 1e-12);
        }

        #[test]
        fn runs_reconstruct_word(v in arb_word(3, 8)) {
            let runs = v.runs();
            let rebuilt: Vec<usize> = runs.iter().flat_map(|&(i, t)| std::iter::repeat_n(i, t)).collect();
            prop_assert_eq!(rebuilt.as_slice(), v.letters());
            prop_assert!(runs.windows(2).all(|p| p[0].0 != p[1].0));
        }

        #[test]
        fn polynomial_evaluation_is_multiplicative(
            a in arb_word(2, 3),
            b in arb_word(2, 3),
            c in arb_word(2, 3),
            mats in arb_mats(2, 2),
        ) {
            let p = &Polynomial::monomial(a, linalg::ONE) + &Polynomial::monomial(b, C64::new(0.5, -1.0));
            let q = Polynomial::monomial(c, C64::new(-2.0, 0.25));
            let lhs = (&p * &q).evaluate(&mats).unwrap();
            let rhs = p.evaluate(&mats).unwrap().dot(&q.evaluate(&mats).unwrap());
            prop_assert!(linalg::max_abs_diff(&lhs, &rhs) <= 1e-10);
        }
    }
}
