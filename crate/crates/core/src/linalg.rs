//! Small dense complex matrix helpers shared by every module.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type CVec = nalgebra::DVector<Complex64>;

/// Condition number above which a fibre map is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn from_rows(rows: &[&[Complex64]]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest entrywise deviation between two matrices of equal shape.
pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn hermiticity_residual(a: &CMat) -> f64 {
    max_diff(a, &a.adjoint())
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    max_diff(&(u.adjoint() * u), &eye(u.nrows()))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Matrix exponential by scaling and squaring with a Padé approximant.
pub fn expm(a: &CMat) -> CMat {
    a.clone().exp()
}

/// 2-norm condition number from the singular values.
pub fn condition_number(a: &CMat) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse guarded by [`CONDITION_LIMIT`].
pub fn guarded_inverse(a: &CMat) -> Result<CMat> {
    let cond = condition_number(a);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::Singular { cond });
    }
    a.clone().try_inverse().ok_or(Error::Singular { cond })
}

/// Numerical rank of a real matrix.
pub fn real_rank(m: &RMat, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * max.max(f64::MIN_POSITIVE)).count()
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn eigenvalues(a: &CMat) -> Vec<Complex64> {
    let schur = a.clone().schur();
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Greedy matching distance between two eigenvalue multisets.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        if best.1 == usize::MAX {
            return f64::INFINITY;
        }
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let a = random_complex(rng, n, n);
    (&a + a.adjoint()).scale(0.5)
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random matrix with unit determinant (2x2 or larger), scaled by the n-th root of det.
pub fn random_unimodular<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    loop {
        let a = random_complex(rng, n, n) + eye(n);
        let det = a.determinant();
        if det.norm() > 1e-3 {
            let root = det.powf(1.0 / n as f64);
            return a.map(|z| z / root);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Truncated Taylor series, independent of the Padé path.
    fn taylor_exp(a: &CMat) -> CMat {
        let n = a.nrows();
        let mut term = eye(n);
        let mut sum = eye(n);
        for k in 1..60 {
            term = &term * a / c(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_on_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = random_complex(&mut rng, 4, 4);
            let a = a.scale(1.0 / frobenius(&a));
            assert!(max_diff(&expm(&a), &taylor_exp(&a)) < 1e-13);
        }
    }

    #[test]
    fn expm_of_large_norm_is_consistent_with_squaring() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_hermitian(&mut rng, 4).scale(7.0);
        let h = expm(&a.scale(0.5));
        assert!(max_diff(&expm(&a), &(&h * &h)) / max_abs(&expm(&a)) < 1e-12);
    }

    #[test]
    fn guarded_inverse_rejects_singular() {
        let m = from_real(&RMat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        assert!(matches!(guarded_inverse(&m), Err(Error::Singular { .. })));
    }

    #[test]
    fn kron_shape_and_entries() {
        let a = from_real(&RMat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let b = eye(2);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k[(2, 0)], c(3.0, 0.0));
        assert_eq!(k[(3, 1)], c(3.0, 0.0));
        assert_eq!(k[(2, 1)], c(0.0, 0.0));
    }

    #[test]
    fn spectrum_of_similar_matrices_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_complex(&mut rng, 4, 4);
        let l = random_complex(&mut rng, 4, 4) + eye(4).scale(3.0);
        let b = l.clone().try_inverse().unwrap() * &a * &l;
        assert!(spectrum_distance(&eigenvalues(&a), &eigenvalues(&b)) < 1e-10);
    }
}
