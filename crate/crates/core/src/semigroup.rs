//! Concrete matrix representations of `B_s(n)` and its corner `P·B_s(n)·P`.
//!
//! A representation assigns a `dim × dim` matrix to every generator `u[i][j]`
//! and to the invariant projection `P`. The defining relations are:
//!
//! * every `u[i][j]` and `P` is an orthogonal projection,
//! * `u[i][k]·u[i][l] = 0` and `u[k][i]·u[l][i] = 0` for `k ≠ l`,
//! * `Σ_k u[k][i]·P = P` for every column `i`.
//!
//! Generator matrices are stored once and referenced from the `n × n` grid,
//! since the reps built here repeat the same projection many times.

use std::collections::HashMap;

use ndarray::Array1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::partitions;
use crate::report::{all_pass, Check, Verdict};

#[derive(Clone, Debug)]
pub struct SemigroupRep {
    n: usize,
    dim: usize,
    mats: Vec<CMat>,
    grid: Vec<usize>,
    zero: Vec<bool>,
    projection: CMat,
    /// Unit vector `p` with `P = p p*`, when `P` is known to be that rank-one projection.
    projection_vector: Option<CVec>,
    label: String,
}

impl SemigroupRep {
    /// Build from an explicit generator grid (`grid[i-1][j-1]` is `u[i][j]`).
    pub fn from_parts(
        grid: Vec<Vec<CMat>>,
        projection: CMat,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = grid.len();
        if n == 0 || grid.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSize(
                "generator grid must be square and nonempty".into(),
            ));
        }
        let dim = projection.nrows();
        check_square(&projection, dim)?;
        let mut mats = Vec::with_capacity(n * n);
        for row in grid {
            for m in row {
                check_square(&m, dim)?;
                mats.push(m);
            }
        }
        let grid = (0..n * n).collect();
        Ok(Self::assemble(
            n,
            dim,
            mats,
            grid,
            projection,
            None,
            label.into(),
        ))
    }

    fn assemble(
        n: usize,
        dim: usize,
        mats: Vec<CMat>,
        grid: Vec<usize>,
        projection: CMat,
        projection_vector: Option<CVec>,
        label: String,
    ) -> Self {
        let zero = mats.iter().map(linalg::is_exact_zero).collect();
        SemigroupRep {
            n,
            dim,
            mats,
            grid,
            zero,
            projection,
            projection_vector,
            label,
        }
    }

    /// The one-dimensional rep `u[i][j] ↦ 0`, `P ↦ 0`, `I ↦ 1`.
    pub fn trivial(n: usize) -> Self {
        Self::assemble(
            n,
            1,
            vec![linalg::zeros(1)],
            vec![0; n * n],
            linalg::zeros(1),
            None,
            "trivial".into(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn projection(&self) -> &CMat {
        &self.projection
    }

    pub fn projection_vector(&self) -> Option<&CVec> {
        self.projection_vector.as_ref()
    }

    pub fn identity(&self) -> CMat {
        linalg::identity(self.dim)
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        self.grid[(i - 1) * self.n + (j - 1)]
    }

    /// `u[i][j]`, 1-based. Panics on out-of-range indices.
    pub fn u(&self, i: usize, j: usize) -> &CMat {
        &self.mats[self.slot(i, j)]
    }

    pub fn is_zero_generator(&self, i: usize, j: usize) -> bool {
        self.zero[self.slot(i, j)]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    /// Replace one generator, e.g. to inject a fault.
    pub fn with_generator(mut self, i: usize, j: usize, m: CMat) -> Result<Self> {
        self.check_index(i)?;
        self.check_index(j)?;
        check_square(&m, self.dim)?;
        self.zero.push(linalg::is_exact_zero(&m));
        self.mats.push(m);
        self.grid[(i - 1) * self.n + (j - 1)] = self.mats.len() - 1;
        self.label = format!("{}+modified", self.label);
        Ok(self)
    }

    pub fn with_projection(mut self, p: CMat) -> Result<Self> {
        check_square(&p, self.dim)?;
        self.projection = p;
        self.projection_vector = None;
        self.label = format!("{}+modified", self.label);
        Ok(self)
    }

    /// Distinct generator slots, for checks that only depend on the matrix itself.
    fn distinct_slots(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.grid.clone();
        s.sort_unstable();
        s.dedup();
        s
    }
}

fn check_square(m: &CMat, dim: usize) -> Result<()> {
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
    Ok(())
}

/// The `C^{2n}` representation: `u[i][j]` projects onto `v_{2(i-j)+1} + v_{2(j-i)+2}`
/// (indices mod `2n`), and `P` onto the all-ones vector.
pub fn build_standard_rep(n: usize) -> Result<SemigroupRep> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "standard rep needs n >= 2, got {n}"
        )));
    }
    let dim = 2 * n;
    // 1-based basis label k, with v_k = v_{k+2n}, to a 0-based coordinate
    let coord = |k: i64| (k - 1).rem_euclid(dim as i64) as usize;
    let mut mats = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut grid = Vec::with_capacity(n * n);
    for i in 1..=n as i64 {
        for j in 1..=n as i64 {
            let key = (coord(2 * (i - j) + 1), coord(2 * (j - i) + 2));
            let slot = *seen.entry(key).or_insert_with(|| {
                let mut v: CVec = Array1::zeros(dim);
                v[key.0] += linalg::ONE;
                v[key.1] += linalg::ONE;
                mats.push(linalg::line_projection(&v));
                mats.len() - 1
            });
            grid.push(slot);
        }
    }
    let ones: CVec = Array1::from_elem(dim, linalg::ONE);
    let p = linalg::line_projection(&ones);
    Ok(SemigroupRep::assemble(
        n,
        dim,
        mats,
        grid,
        p,
        Some(linalg::normalize(&ones)),
        format!("standard(n={n})"),
    ))
}

/// The averaging rep of `B_s(N+M)` on `C^{2M}`: generators with both indices
/// above `N` come from the standard rep of size `M` (shifted by `N`); the
/// frozen ones are `δ_{ij}·P`.
pub fn build_averaging_rep(frozen: usize, averaging: usize) -> Result<SemigroupRep> {
    if frozen < 1 || averaging < 2 {
        return Err(Error::InvalidSize(format!(
            "averaging rep needs N >= 1 and M >= 2, got N={frozen}, M={averaging}"
        )));
    }
    let base = build_standard_rep(averaging)?;
    let n = frozen + averaging;
    let mut mats = base.mats.clone();
    let p_slot = mats.len();
    mats.push(base.projection.clone());
    let zero_slot = mats.len();
    mats.push(linalg::zeros(base.dim));
    let mut grid = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            let slot = if i.min(j) > frozen {
                base.slot(i - frozen, j - frozen)
            } else if i == j {
                p_slot
            } else {
                zero_slot
            };
            grid.push(slot);
        }
    }
    Ok(SemigroupRep::assemble(
        n,
        base.dim,
        mats,
        grid,
        base.projection.clone(),
        base.projection_vector.clone(),
        format!("averaging(N={frozen},M={averaging})"),
    ))
}

/// Residuals of the defining relations.
#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub rep: String,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

impl RelationReport {
    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0.0, |a, c| a.max(c.residual))
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.verdict.passed())
    }
}

pub fn check_relations(rep: &SemigroupRep, tol: f64) -> RelationReport {
    let slots = rep.distinct_slots();
    let mut self_adj = linalg::self_adjoint_residual(&rep.projection);
    let mut idem = linalg::idempotent_residual(&rep.projection);
    for &s in &slots {
        self_adj = self_adj.max(linalg::self_adjoint_residual(&rep.mats[s]));
        idem = idem.max(linalg::idempotent_residual(&rep.mats[s]));
    }

    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut product_norm = |a: usize, b: usize| -> f64 {
        if rep.zero[a] || rep.zero[b] {
            return 0.0;
        }
        *cache
            .entry((a, b))
            .or_insert_with(|| linalg::max_abs(&rep.mats[a].dot(&rep.mats[b])))
    };
    let n = rep.n;
    let mut row = 0.0f64;
    let mut col = 0.0f64;
    for i in 1..=n {
        for k in 1..=n {
            for l in 1..=n {
                if k == l {
                    continue;
                }
                row = row.max(product_norm(rep.slot(i, k), rep.slot(i, l)));
                col = col.max(product_norm(rep.slot(k, i), rep.slot(l, i)));
            }
        }
    }

    let mut invariant = 0.0f64;
    for i in 1..=n {
        let mut acc = linalg::zeros(rep.dim);
        for k in 1..=n {
            if !rep.is_zero_generator(k, i) {
                acc += rep.u(k, i);
            }
        }
        let lhs = acc.dot(&rep.projection);
        invariant = invariant.max(linalg::max_abs_diff(&lhs, &rep.projection));
    }

    let checks = vec![
        Check::new("self_adjoint", self_adj, tol),
        Check::new("idempotent", idem, tol),
        Check::new("row_orthogonality", row, tol),
        Check::new("column_orthogonality", col, tol),
        Check::new("invariant_projection", invariant, tol),
    ];
    RelationReport {
        rep: rep.label.clone(),
        verdict: all_pass(&checks),
        checks,
    }
}

fn check_pair(rep: &SemigroupRep, rows: &[usize], cols: &[usize]) -> Result<()> {
    if rows.len() != cols.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: cols.len(),
        });
    }
    for &i in rows.iter().chain(cols) {
        rep.check_index(i)?;
    }
    Ok(())
}

/// `P·u[r_1][c_1]···u[r_k][c_k]·P`; the empty product gives `P`.
pub fn u_product(rep: &SemigroupRep, rows: &[usize], cols: &[usize]) -> Result<CMat> {
    check_pair(rep, rows, cols)?;
    let mut acc = rep.projection.clone();
    for (&i, &j) in rows.iter().zip(cols).rev() {
        if rep.is_zero_generator(i, j) {
            return Ok(linalg::zeros(rep.dim));
        }
        acc = rep.u(i, j).dot(&acc);
    }
    Ok(rep.projection.dot(&acc))
}

/// The scalar `c` with `u_product(rows, cols) = c·P`, available when `P` is
/// a known rank-one projection `p p*` (then `c = <X p, p>`).
pub fn corner_coefficient(
    rep: &SemigroupRep,
    rows: &[usize],
    cols: &[usize],
) -> Result<Option<C64>> {
    check_pair(rep, rows, cols)?;
    let Some(p) = rep.projection_vector.as_ref() else {
        return Ok(None);
    };
    let mut v = p.clone();
    for (&i, &j) in rows.iter().zip(cols).rev() {
        if rep.is_zero_generator(i, j) {
            return Ok(Some(linalg::ZERO));
        }
        v = rep.u(i, j).dot(&v);
    }
    Ok(Some(linalg::inner(&v, p)))
}

#[derive(Clone, Debug, Serialize)]
pub struct SumIdentityReport {
    pub sequence: Vec<usize>,
    /// `‖Σ_J P u[i_1][j_1]···u[i_k][j_k] P − P‖`, summing the second index.
    pub second_index_residual: f64,
    /// Same with the roles swapped: `Σ_J P u[j_1][i_1]···u[j_k][i_k] P`.
    pub first_index_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

pub fn sum_identity_check(
    rep: &SemigroupRep,
    seq: &[usize],
    tol: f64,
) -> Result<SumIdentityReport> {
    for &i in seq {
        rep.check_index(i)?;
    }
    let mut second = linalg::zeros(rep.dim);
    let mut first = linalg::zeros(rep.dim);
    for w in crate::ncpoly::words_of_length(rep.n, seq.len()) {
        second = second + u_product(rep, seq, w.letters())?;
        first = first + u_product(rep, w.letters(), seq)?;
    }
    let second_index_residual = linalg::max_abs_diff(&second, &rep.projection);
    let first_index_residual = linalg::max_abs_diff(&first, &rep.projection);
    Ok(SumIdentityReport {
        sequence: seq.to_vec(),
        second_index_residual,
        first_index_residual,
        tolerance: tol,
        verdict: Verdict::from_bool(second_index_residual <= tol && first_index_residual <= tol),
    })
}

/// The image of the generators under `Δ`: `u[i][j] ↦ Σ_k u[i][k] ⊗ u[k][j]`,
/// `P ↦ P ⊗ P`, realized on `C^dim ⊗ C^dim`.
pub fn coproduct_rep(rep: &SemigroupRep) -> SemigroupRep {
    let n = rep.n;
    let dim = rep.dim * rep.dim;
    let mut mats = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            let mut acc = linalg::zeros(dim);
            for k in 1..=n {
                if rep.is_zero_generator(i, k) || rep.is_zero_generator(k, j) {
                    continue;
                }
                acc = acc + linalg::kron(rep.u(i, k), rep.u(k, j));
            }
            mats.push(acc);
        }
    }
    let projection = linalg::kron(&rep.projection, &rep.projection);
    let projection_vector = rep.projection_vector.as_ref().map(|p| {
        let col = p
            .clone()
            .into_shape_with_order((p.len(), 1))
            .expect("column");
        let k = linalg::kron(&col, &col);
        k.column(0).to_owned()
    });
    SemigroupRep::assemble(
        n,
        dim,
        mats,
        (0..n * n).collect(),
        projection,
        projection_vector,
        format!("coproduct[{}]", rep.label),
    )
}

/// The `B_s(n)` relations for `{Σ_k u[i][k] ⊗ u[k][j], P ⊗ P}`.
pub fn comultiplication_check(rep: &SemigroupRep, tol: f64) -> RelationReport {
    let image = coproduct_rep(rep);
    let mut report = check_relations(&image, tol);
    report.checks = report
        .checks
        .into_iter()
        .map(|c| c.prefixed("coproduct"))
        .collect();
    report.rep = rep.label.clone();
    report
}

/// Exhaustive sweep of `‖P u[r_1][c_1]···u[r_k][c_k] P‖` over all pairs of sequences up to
/// length `max_len`, recording the worst residual among non-equivalent pairs.
#[derive(Clone, Debug, Serialize)]
pub struct VanishingReport {
    pub rep: String,
    pub max_len: usize,
    /// All pairs covered, including those under an exactly-zero prefix.
    pub pairs_checked: u64,
    pub max_nonequivalent_residual: f64,
    /// Largest residual among equivalent pairs, for context.
    pub max_equivalent_residual: f64,
    pub witness: Option<(Vec<usize>, Vec<usize>)>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

pub fn vanishing_sweep(rep: &SemigroupRep, max_len: usize, tol: f64) -> VanishingReport {
    let mut state = Sweep {
        rep,
        max_len,
        p_scale: linalg::max_abs(&rep.projection),
        rows: Vec::with_capacity(max_len),
        cols: Vec::with_capacity(max_len),
        pairs: 0,
        worst: 0.0,
        worst_equivalent: 0.0,
        witness: None,
    };
    match rep.projection_vector.as_ref() {
        Some(p) => {
            // row vector p* carried left to right
            let start = p.mapv(|z| z.conj());
            state.descend_vector(&start, p);
        }
        None => {
            let start = rep.projection.clone();
            state.descend_matrix(&start);
        }
    }
    VanishingReport {
        rep: rep.label.clone(),
        max_len,
        pairs_checked: state.pairs,
        max_nonequivalent_residual: state.worst,
        max_equivalent_residual: state.worst_equivalent,
        witness: state.witness,
        tolerance: tol,
        verdict: Verdict::from_bool(state.worst <= tol),
    }
}

struct Sweep<'a> {
    rep: &'a SemigroupRep,
    max_len: usize,
    p_scale: f64,
    rows: Vec<usize>,
    cols: Vec<usize>,
    pairs: u64,
    worst: f64,
    worst_equivalent: f64,
    witness: Option<(Vec<usize>, Vec<usize>)>,
}

impl Sweep<'_> {
    fn record(&mut self, residual: f64) {
        self.pairs += 1;
        if partitions::equivalent(&self.rows, &self.cols).expect("equal lengths") {
            self.worst_equivalent = self.worst_equivalent.max(residual);
        } else if residual > self.worst || (residual.is_nan() && !self.worst.is_nan()) {
            self.worst = residual;
            self.witness = Some((self.rows.clone(), self.cols.clone()));
        }
    }

    /// Pairs strictly below the current depth; all of them are exactly zero
    /// once the prefix is.
    fn count_zero_subtree(&mut self) {
        let branch = (self.rep.n * self.rep.n) as u64;
        let mut level = 1u64;
        for _ in self.rows.len()..self.max_len {
            level *= branch;
            self.pairs += level;
        }
    }

    fn descend_vector(&mut self, prefix: &CVec, p: &CVec) {
        let n = self.rep.n;
        for i in 1..=n {
            for j in 1..=n {
                self.rows.push(i);
                self.cols.push(j);
                let next: CVec = if self.rep.is_zero_generator(i, j) {
                    Array1::zeros(self.rep.dim)
                } else {
                    self.rep.u(i, j).t().dot(prefix)
                };
                let c: C64 = next.iter().zip(p.iter()).map(|(a, b)| a * b).sum();
                self.record(c.norm() * self.p_scale);
                if self.rows.len() < self.max_len {
                    if next.iter().all(|z| *z == linalg::ZERO) {
                        self.count_zero_subtree();
                    } else {
                        self.descend_vector(&next, p);
                    }
                }
                self.rows.pop();
                self.cols.pop();
            }
        }
    }

    fn descend_matrix(&mut self, prefix: &CMat) {
        let n = self.rep.n;
        for i in 1..=n {
            for j in 1..=n {
                self.rows.push(i);
                self.cols.push(j);
                let next = if self.rep.is_zero_generator(i, j) {
                    linalg::zeros(self.rep.dim)
                } else {
                    prefix.dot(self.rep.u(i, j))
                };
                let value = next.dot(&self.rep.projection);
                self.record(linalg::max_abs(&value));
                if self.rows.len() < self.max_len {
                    if linalg::is_exact_zero(&next) {
                        self.count_zero_subtree();
                    } else {
                        self.descend_matrix(&next);
                    }
                }
                self.rows.pop();
                self.cols.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;
    use crate::ncpoly::words_of_length;

    fn seqs(n: usize, k: usize) -> Vec<Vec<usize>> {
        words_of_length(n, k)
            .into_iter()
            .map(|w| w.letters().to_vec())
            .collect()
    }

    #[test]
    fn standard_rep_satisfies_relations() {
        for n in 2..=8 {
            let rep = build_standard_rep(n).unwrap();
            assert_eq!(rep.dim(), 2 * n);
            let report = check_relations(&rep, 1e-12);
            assert!(report.verdict.passed(), "n={n}: {report:?}");
        }
        assert!(build_standard_rep(1).is_err());
    }

    #[test]
    fn single_generator_corner_is_one_over_n() {
        for n in 2..=8 {
            let rep = build_standard_rep(n).unwrap();
            let p = rep.projection().clone();
            for i in 1..=n {
                for j in 1..=n {
                    let got = u_product(&rep, &[i], &[j]).unwrap();
                    let expected = p.mapv(|z| z / real(n as f64));
                    assert!(
                        linalg::max_abs_diff(&got, &expected) <= 1e-12,
                        "n={n} ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn standard_generators_are_rank_one_and_orthogonal() {
        let rep = build_standard_rep(4).unwrap();
        // P_{i,j} only depends on i - j mod n
        for i in 1..=4 {
            for j in 1..=4 {
                let k = if i == 4 { 1 } else { i + 1 };
                let l = if j == 4 { 1 } else { j + 1 };
                assert_eq!(rep.u(i, j), rep.u(k, l));
                let trace: f64 = rep.u(i, j).diag().iter().map(|z| z.re).sum();
                assert!((trace - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn corrupted_rep_fails() {
        let rep = build_standard_rep(3).unwrap();
        let bad = rep.u(1, 1).mapv(|z| z * real(0.9));
        let rep = rep.with_generator(1, 1, bad).unwrap();
        let report = check_relations(&rep, 1e-12);
        assert!(!report.verdict.passed());
        assert!(report.failing().any(|c| c.name == "idempotent"));
    }

    #[test]
    fn corrupted_projection_fails_invariance() {
        let rep = build_standard_rep(3).unwrap();
        let mut p = rep.projection().clone();
        p[[0, 0]] += real(0.5);
        let rep = rep.with_projection(p).unwrap();
        assert!(rep.projection_vector().is_none());
        let report = check_relations(&rep, 1e-12);
        assert!(report.failing().any(|c| c.name == "invariant_projection"));
    }

    #[test]
    fn trivial_rep_satisfies_relations() {
        let rep = SemigroupRep::trivial(3);
        assert!(check_relations(&rep, 0.0).verdict.passed());
        assert_eq!(rep.identity()[[0, 0]], linalg::ONE);
    }

    #[test]
    fn averaging_rep_structure() {
        let rep = build_averaging_rep(1, 3).unwrap();
        assert_eq!(rep.n(), 4);
        assert_eq!(rep.dim(), 6);
        assert!(check_relations(&rep, 1e-10).verdict.passed());
        assert_eq!(rep.u(1, 1), rep.projection());
        assert!(rep.is_zero_generator(1, 2));
        assert!(rep.is_zero_generator(3, 1));
        let base = build_standard_rep(3).unwrap();
        assert_eq!(rep.u(2, 4), base.u(1, 3));
        // corners of the averaged generators are P/M
        let c = corner_coefficient(&rep, &[3], &[2]).unwrap().unwrap();
        assert!((c - real(1.0 / 3.0)).norm() < 1e-12);
        assert!(build_averaging_rep(0, 3).is_err());
        assert!(build_averaging_rep(1, 1).is_err());
    }

    #[test]
    fn corner_coefficient_matches_matrix_product() {
        let rep = build_averaging_rep(2, 3).unwrap();
        let p = rep.projection().clone();
        for rows in seqs(5, 2) {
            for cols in seqs(5, 2) {
                let m = u_product(&rep, &rows, &cols).unwrap();
                let c = corner_coefficient(&rep, &rows, &cols).unwrap().unwrap();
                let scaled = p.mapv(|z| z * c);
                assert!(
                    linalg::max_abs_diff(&m, &scaled) < 1e-13,
                    "{rows:?} {cols:?}"
                );
            }
        }
    }

    #[test]
    fn u_product_rejects_bad_input() {
        let rep = build_standard_rep(3).unwrap();
        assert!(matches!(
            u_product(&rep, &[1], &[1, 2]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            u_product(&rep, &[4], &[1]),
            Err(Error::IndexOutOfRange { .. })
        ));
        let empty = u_product(&rep, &[], &[]).unwrap();
        assert!(linalg::max_abs_diff(&empty, rep.projection()) < 1e-15);
    }

    #[test]
    fn sum_identity_holds_in_both_orderings() {
        for n in 2..=4 {
            let rep = build_standard_rep(n).unwrap();
            for k in 1..=3 {
                for seq in seqs(n, k) {
                    let r = sum_identity_check(&rep, &seq, 1e-12).unwrap();
                    assert!(r.verdict.passed(), "n={n} {seq:?}: {r:?}");
                }
            }
        }
        let rep = build_averaging_rep(1, 2).unwrap();
        for seq in seqs(3, 3) {
            assert!(sum_identity_check(&rep, &seq, 1e-12)
                .unwrap()
                .verdict
                .passed());
        }
    }

    #[test]
    fn comultiplication_preserves_relations() {
        for n in 2..=4 {
            let rep = build_standard_rep(n).unwrap();
            let r = comultiplication_check(&rep, 1e-12);
            assert!(r.verdict.passed(), "n={n}: {r:?}");
            assert!(r.checks.iter().all(|c| c.name.starts_with("coproduct.")));
        }
        let bad = build_standard_rep(2).unwrap();
        let m = bad.u(1, 2).mapv(|z| z * real(1.2));
        let bad = bad.with_generator(1, 2, m).unwrap();
        assert!(!comultiplication_check(&bad, 1e-12).verdict.passed());
    }

    #[test]
    fn coproduct_projection_vector_is_consistent() {
        let rep = coproduct_rep(&build_standard_rep(2).unwrap());
        let p = rep.projection_vector().unwrap();
        let pp = linalg::line_projection(p);
        assert!(linalg::max_abs_diff(&pp, rep.projection()) < 1e-14);
    }

    // Oracle: dense products for every pair, no pruning, no fast path.
    fn brute_force_nonequivalent_max(rep: &SemigroupRep, max_len: usize) -> (f64, u64) {
        let mut worst = 0.0f64;
        let mut count = 0;
        for k in 1..=max_len {
            for a in seqs(rep.n(), k) {
                for b in seqs(rep.n(), k) {
                    count += 1;
                    if !partitions::equivalent(&a, &b).unwrap() {
                        worst = worst.max(linalg::max_abs(&u_product(rep, &a, &b).unwrap()));
                    }
                }
            }
        }
        (worst, count)
    }

    #[test]
    fn vanishing_sweep_matches_brute_force() {
        for n in 2..=3 {
            let rep = build_standard_rep(n).unwrap();
            let r = vanishing_sweep(&rep, 3, 1e-12);
            let (worst, count) = brute_force_nonequivalent_max(&rep, 3);
            assert_eq!(r.pairs_checked, count);
            assert!((r.max_nonequivalent_residual - worst).abs() < 1e-14);
            assert!(r.verdict.passed());
            assert!(r.max_equivalent_residual > 0.0);
        }
    }

    #[test]
    fn vanishing_sweep_without_fast_path() {
        let rep = build_standard_rep(3).unwrap();
        let p = rep.projection().clone();
        // same matrix, but the rank-one vector is forgotten
        let rep = rep.with_projection(p).unwrap();
        let r = vanishing_sweep(&rep, 3, 1e-12);
        assert!(r.verdict.passed());
        assert_eq!(r.pairs_checked, 9 + 81 + 729);
    }

    #[test]
    fn vanishing_sweep_flags_a_broken_rep() {
        let rep = build_standard_rep(2).unwrap();
        let m = rep.u(1, 1).clone();
        let rep = rep.with_generator(1, 2, m).unwrap();
        let r = vanishing_sweep(&rep, 2, 1e-12);
        assert!(!r.verdict.passed());
        assert!(r.witness.is_some());
    }
}
