//! Dense complex linear algebra on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let d = a - a.adjoint();
    d.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(a: &CMat) -> Result<Cholesky<C64, Dyn>> {
    if !is_finite(a) {
        return Err(Error::Data("non-finite entries in Hermitian system".into()));
    }
    Cholesky::new(hermitian_part(a))
        .ok_or_else(|| Error::Numerical(format!("{}x{} matrix is not positive definite", a.nrows(), a.ncols())))
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn hpd_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    Ok(cholesky(a)?.solve(b))
}

pub fn hpd_inverse(a: &CMat) -> Result<CMat> {
    Ok(cholesky(a)?.inverse())
}

/// `log2 |A|` for Hermitian positive definite `A`.
pub fn log2det_hpd(a: &CMat) -> Result<f64> {
    let l = cholesky(a)?;
    let ln: f64 = l.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>() * 2.0;
    Ok(ln / std::f64::consts::LN_2)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    hermitian_eigenvalues(a).first().copied().unwrap_or(0.0)
}

/// Hermitian square root of a PSD matrix.
///
/// Eigenvalues below `-tol` are rejected; smaller negative values from
/// rounding are clamped to zero.
pub fn psd_sqrt(a: &CMat, tol: f64) -> Result<CMat> {
    if !is_finite(a) {
        return Err(Error::Data("non-finite entries in covariance".into()));
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::Data(format!("matrix is indefinite (min eigenvalue {min:e})")));
    }
    let n = a.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = c(lam.max(0.0).sqrt());
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-major vectorization.
pub fn vec_cols(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vec_cols`].
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Sum of the selected diagonal blocks of a square matrix built from
/// `block x block` sub-blocks.
///
/// For the covariance of `vec(X)` with `X` having `block` rows, this gives
/// `E{X S X^H}` where `S` is the diagonal 0/1 matrix picking the columns for
/// which `keep` holds.
pub fn diag_block_sum(a: &CMat, block: usize, keep: impl Fn(usize) -> bool) -> CMat {
    let nb = a.nrows() / block;
    let mut out = CMat::zeros(block, block);
    for m in (0..nb).filter(|&m| keep(m)) {
        out += a.view((m * block, m * block), (block, block));
    }
    out
}

/// `log2 |I + A^H C^{-1} A|` for Hermitian positive definite `C`.
///
/// Evaluated through `log2|C + A A^H| - log2|C|` as well; a disagreement
/// beyond `1e-9` (relative to the magnitude of the terms) is reported as a
/// numerical failure.
pub fn capacity_log2(a: &CMat, noise: &CMat) -> Result<f64> {
    let cols = a.ncols();
    if cols == 0 {
        return Ok(0.0);
    }
    let x = hpd_solve(noise, a)?;
    let inner = identity(cols) + a.adjoint() * x;
    let direct = log2det_hpd(&inner)?;
    let alt = log2det_hpd(&(noise + a * a.adjoint()))? - log2det_hpd(noise)?;
    let scale = 1.0 + direct.abs().max(alt.abs());
    if (direct - alt).abs() > 1e-9 * scale {
        return Err(Error::Numerical(format!("log-det identity mismatch: {direct} vs {alt}")));
    }
    Ok(direct.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, SeedTree};

    fn random(n: usize, m: usize, seed: u64) -> CMat {
        let mut rng = SeedTree::new(seed).rng();
        CMat::from_fn(n, m, |_, _| complex_normal(&mut rng))
    }

    #[test]
    fn sqrt_squares_back() {
        let x = random(5, 5, 1);
        let a = &x * x.adjoint();
        let s = psd_sqrt(&a, 1e-12).unwrap();
        assert!(frobenius(&(&s * &s - &a)) < 1e-10 * frobenius(&a));
        assert!(hermitian_defect(&s) < 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let mut a = identity(3);
        a[(1, 1)] = c(-1.0);
        assert!(matches!(psd_sqrt(&a, 1e-12), Err(Error::Data(_))));
    }

    #[test]
    fn log2det_matches_eigenvalues() {
        let x = random(4, 4, 2);
        let a = &x * x.adjoint() + identity(4);
        let ev: f64 = hermitian_eigenvalues(&a).iter().map(|l| l.log2()).sum();
        assert!((log2det_hpd(&a).unwrap() - ev).abs() < 1e-10);
    }

    #[test]
    fn vec_roundtrip_is_column_major() {
        let a = random(3, 2, 3);
        let v = vec_cols(&a);
        assert_eq!(v[3], a[(0, 1)]);
        assert_eq!(unvec(&v, 3, 2), a);
    }

    #[test]
    fn block_sum_is_expected_gram() {
        // vec(X) covariance for X = [x0 x1] with independent columns.
        let r0 = identity(2) * c(2.0);
        let r1 = identity(2) * c(3.0);
        let mut big = CMat::zeros(4, 4);
        big.view_mut((0, 0), (2, 2)).copy_from(&r0);
        big.view_mut((2, 2), (2, 2)).copy_from(&r1);
        assert_eq!(diag_block_sum(&big, 2, |_| true), identity(2) * c(5.0));
        assert_eq!(diag_block_sum(&big, 2, |m| m == 1), r1);
    }

    #[test]
    fn kron_layout() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let b = identity(2);
        let k = kron(&a, &b);
        assert_eq!(k[(0, 2)], c(2.0));
        assert_eq!(k[(3, 1)], c(3.0));
        assert_eq!(k[(2, 1)], ZERO);
    }

    #[test]
    fn capacity_scalar() {
        let a = CMat::from_element(1, 1, c(2.0));
        let n = CMat::from_element(1, 1, c(0.5));
        let v = capacity_log2(&a, &n).unwrap();
        assert!((v - (1.0f64 + 8.0).log2()).abs() < 1e-12);
    }
}
