//! Dense complex matrix helpers.
//!
//! Everything here is desk-scale: dimensions stay well under a hundred, so the
//! routines are plain loops over `ndarray` storage. Residuals use the maximum
//! absolute entry, which keeps thresholds independent of the dimension.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    Array2::from_diag_elem(dim, ONE)
}

pub fn zeros(dim: usize) -> CMat {
    Array2::zeros((dim, dim))
}

pub fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Standard basis vector `e_index` of length `dim`.
pub fn basis_vector(dim: usize, index: usize) -> CVec {
    let mut v = Array1::zeros(dim);
    v[index] = ONE;
    v
}

/// Orthogonal projection onto the line spanned by `v`: `v v* / <v, v>`.
pub fn line_projection(v: &CVec) -> CMat {
    let norm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let dim = v.len();
    let mut p = Array2::zeros((dim, dim));
    for r in 0..dim {
        for c in 0..dim {
            p[[r, c]] = v[r] * v[c].conj() / norm_sq;
        }
    }
    p
}

/// `<u, v>`, linear in the first slot.
pub fn inner(u: &CVec, v: &CVec) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum()
}

pub fn normalize(v: &CVec) -> CVec {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv(|z| z / norm)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let s = a[[i, j]];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = s * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn is_exact_zero(m: &CMat) -> bool {
    m.iter().all(|z| *z == ZERO)
}

pub fn self_adjoint_residual(m: &CMat) -> f64 {
    max_abs_diff(m, &adjoint(m))
}

pub fn idempotent_residual(m: &CMat) -> f64 {
    max_abs_diff(&m.dot(m), m)
}

/// Largest eigenvalue magnitude of a self-adjoint matrix, by power iteration on `m²`.
///
/// Used only for moment bounds, so a fixed iteration budget is enough.
pub fn hermitian_norm(m: &CMat) -> f64 {
    let dim = m.nrows();
    if dim == 0 {
        return 0.0;
    }
    let sq = m.dot(m);
    // deterministic start vector with no special alignment
    let mut v: CVec =
        Array1::from_shape_fn(dim, |i| C64::new(1.0 + (i as f64) * 0.37, 0.11 * i as f64));
    v = normalize(&v);
    let mut estimate = 0.0;
    for _ in 0..200 {
        let w = sq.dot(&v);
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w.mapv(|z| z / norm);
        if (norm - estimate).abs() <= 1e-15 * norm {
            estimate = norm;
            break;
        }
        estimate = norm;
    }
    estimate.sqrt()
}

/// Matrix from nested `[re, im]` pairs, as used by the on-disk formats.
pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Option<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(Array2::from_shape_fn((nrows, ncols), |(r, c)| {
        C64::new(rows[r][c][0], rows[r][c][1])
    }))
}

pub fn to_pairs(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    m.rows()
        .into_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_projection_is_projection() {
        let v = Array1::from(vec![ONE, ONE, ZERO, C64::new(0.0, 2.0)]);
        let p = line_projection(&v);
        assert!(self_adjoint_residual(&p) < 1e-15);
        assert!(idempotent_residual(&p) < 1e-15);
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron(&identity(2), &identity(3));
        assert_eq!(max_abs_diff(&k, &identity(6)), 0.0);
    }

    #[test]
    fn kron_mixed_product() {
        let a = Array2::from_shape_fn((2, 2), |(i, j)| C64::new((i + 2 * j) as f64, 1.0));
        let b = Array2::from_shape_fn((2, 2), |(i, j)| C64::new(1.0, (i * j) as f64));
        let c = Array2::from_shape_fn((2, 2), |(i, j)| C64::new((i as f64) - 1.0, j as f64));
        let d = Array2::from_shape_fn((2, 2), |(i, j)| C64::new(0.5, (i + j) as f64));
        let lhs = kron(&a, &b).dot(&kron(&c, &d));
        let rhs = kron(&a.dot(&c), &b.dot(&d));
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn hermitian_norm_of_pauli_z() {
        let mut z = zeros(2);
        z[[0, 0]] = ONE;
        z[[1, 1]] = -ONE;
        assert!((hermitian_norm(&z) - 1.0).abs() < 1e-12);
        assert_eq!(hermitian_norm(&zeros(3)), 0.0);
    }

    #[test]
    fn pairs_round_trip() {
        let m = Array2::from_shape_fn((2, 3), |(i, j)| C64::new(i as f64, -(j as f64)));
        assert_eq!(from_pairs(&to_pairs(&m)).unwrap(), m);
        assert!(from_pairs(&[vec![[0.0, 0.0]], vec![]]).is_none());
    }
}
