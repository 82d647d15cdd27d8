//! Dense complex linear algebra helpers shared by every module.
//!
//! Everything here works on `nalgebra` dense matrices over `Complex64`.
//! Singular value and Hermitian eigen decompositions are delegated to `faer`.
//! Hermitian eigenproblems always symmetrize first, so tiny round-off
//! asymmetry never leaks into eigenvalues.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint()
}

/// (A + A*) / 2.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * re(0.5)
}

fn to_faer(a: &CMat) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Thin SVD `a = U diag(s) V*` with `s` nonincreasing.
pub struct ThinSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn thin_svd(a: &CMat) -> ThinSvd {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return ThinSvd { u: CMat::zeros(r, 0), s: Vec::new(), v: CMat::zeros(c, 0) };
    }
    let svd = to_faer(a).thin_svd().expect("SVD converges");
    let (u, v, d) = (svd.U(), svd.V(), svd.S());
    ThinSvd { u: CMat::from_fn(r, k, |i, j| u[(i, j)]), s: (0..k).map(|i| d[i].re).collect(), v: CMat::from_fn(c, k, |i, j| v[(i, j)]) }
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues ascending.
pub fn herm_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = to_faer(&hermitian_part(a)).self_adjoint_eigen(Side::Lower).expect("Hermitian eigensolver converges");
    let values = (0..n).map(|i| eig.S()[i].re).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.U()[(i, j)]);
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    herm_eigen(a).0.first().copied().unwrap_or(0.0)
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    singular_values(a)[0]
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    to_faer(a).singular_values().expect("SVD converges")
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn numerical_rank(a: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Whether a Hermitian matrix is PSD within `psd_tol * (1 + ||A||)`.
pub fn is_psd(a: &CMat, psd_tol: f64) -> (bool, f64) {
    let (vals, _) = herm_eigen(a);
    let min = vals.first().copied().unwrap_or(0.0);
    let norm = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    (min >= -psd_tol * (1.0 + norm), min)
}

/// Square root of a PSD matrix. Eigenvalues in `[-psd_tol*(1+||A||), 0)` are
/// clamped to zero; anything more negative is returned as `Err(min_eigenvalue)`.
pub fn psd_sqrt(a: &CMat, psd_tol: f64) -> Result<CMat, f64> {
    let (vals, vecs) = herm_eigen(a);
    let norm = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if let Some(&min) = vals.first() {
        if min < -psd_tol * (1.0 + norm) {
            return Err(min);
        }
    }
    let roots = DVector::from_iterator(vals.len(), vals.iter().map(|&v| re(v.max(0.0).sqrt())));
    Ok(&vecs * CMat::from_diagonal(&roots) * vecs.adjoint())
}

/// Orthonormal basis (columns) of the range of `a`, dropping singular values
/// at or below `rel_tol * sigma_max`.
pub fn range_basis(a: &CMat, rel_tol: f64) -> CMat {
    range_basis_by(a, |smax| rel_tol * smax)
}

/// As [`range_basis`] with an absolute singular-value cutoff.
pub fn range_basis_abs(a: &CMat, abs_tol: f64) -> CMat {
    range_basis_by(a, |_| abs_tol)
}

fn range_basis_by(a: &CMat, cutoff: impl Fn(f64) -> f64) -> CMat {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return CMat::zeros(rows, 0);
    }
    let svd = thin_svd(a);
    if svd.s[0] == 0.0 {
        return CMat::zeros(rows, 0);
    }
    let cut = cutoff(svd.s[0]);
    let keep = svd.s.iter().take_while(|&&x| x > cut).count();
    svd.u.columns(0, keep).into_owned()
}

/// Orthonormal basis of the orthogonal complement of span(`basis`), where
/// `basis` has orthonormal columns in C^n.
pub fn orthogonal_complement(basis: &CMat, n: usize) -> CMat {
    if basis.ncols() == 0 {
        return identity(n);
    }
    let proj = identity(n) - basis * basis.adjoint();
    let (vals, vecs) = herm_eigen(&proj);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
    let mut out = CMat::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &vecs.column(i));
    }
    out
}

/// Orthonormal basis of the null space of `a` (columns), relative threshold.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let n = a.ncols();
    if a.nrows() == 0 {
        return identity(n);
    }
    let row_space = range_basis(&a.adjoint(), rel_tol);
    orthogonal_complement(&row_space, n)
}

/// A ⊗ I_h with the slot index varying fastest.
pub fn ampliate(a: &CMat, h: usize) -> CMat {
    a.kronecker(&identity(h))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Block-diagonal direct sum.
pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// Vertical stacking [a; b].
pub fn vstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), 0), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// Horizontal stacking [a b].
pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// Distance between subspaces spanned by orthonormal columns: the sine of the
/// largest principal angle. Dimension mismatch gives 1.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let resid_b = b - a * (a.adjoint() * b);
    let resid_a = a - b * (b.adjoint() * a);
    spectral_norm(&resid_b).max(spectral_norm(&resid_a)).min(1.0)
}

/// Unitary polar factor of a square matrix: argmax over unitaries U of Re tr(U C)
/// is `V U*` for `C = U S V*`; this returns that maximizer.
pub fn procrustes_unitary(c: &CMat) -> CMat {
    let n = c.nrows();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let svd = thin_svd(c);
    svd.v * svd.u.adjoint()
}

/// Solves `A X = B` in the least-squares sense through the pseudo-inverse with
/// relative singular-value cutoff.
pub fn lstsq(a: &CMat, b: &CMat, rel_tol: f64) -> CMat {
    if a.ncols() == 0 {
        return CMat::zeros(0, b.ncols());
    }
    let svd = thin_svd(a);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let eps = (rel_tol * smax).max(f64::MIN_POSITIVE);
    let keep = svd.s.iter().take_while(|&&x| x > eps).count();
    let u = svd.u.columns(0, keep);
    let v = svd.v.columns(0, keep);
    let inv = CMat::from_fn(keep, keep, |i, j| if i == j { re(1.0 / svd.s[i]) } else { ZERO });
    v * inv * (u.adjoint() * b)
}

/// Relative residual helper: ||a - b|| in spectral norm.
pub fn diff_norm(a: &CMat, b: &CMat) -> f64 {
    spectral_norm(&(a - b))
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.norm()
}

/// <x, y> linear in the first argument.
pub fn inner(x: &CVec, y: &CVec) -> C64 {
    y.dotc(x)
}

/// Orthonormal basis of span of the given columns (Gram–Schmidt with
/// re-orthogonalization), threshold relative to the largest input norm.
pub fn orthonormalize_columns(cols: &[CVec], rel_tol: f64) -> CMat {
    let n = cols.first().map(|c| c.len()).unwrap_or(0);
    let scale = cols.iter().fold(0.0_f64, |acc, c| acc.max(c.norm()));
    let mut basis: Vec<CVec> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &basis {
                let coef = q.dotc(&v);
                v -= q * coef;
            }
        }
        let nv = v.norm();
        if nv > rel_tol * scale.max(f64::MIN_POSITIVE) {
            basis.push(v / re(nv));
        }
    }
    let mut out = CMat::zeros(n, basis.len());
    for (i, b) in basis.iter().enumerate() {
        out.set_column(i, b);
    }
    out
}

/// Dimension of the joint commutant of a family of square matrices, i.e. the
/// dimension of `{X : X A = A X for all A}`, with the rank threshold relative
/// to the largest singular value of the stacked system.
pub fn commutant_dimension(ops: &[CMat], rel_tol: f64) -> usize {
    let d = match ops.first() {
        Some(a) => a.nrows(),
        None => return 0,
    };
    let nn = d * d;
    let mut system = CMat::zeros(ops.len() * nn, nn);
    let id = identity(d);
    for (t, a) in ops.iter().enumerate() {
        // vec(XA - AX) = (A^T ⊗ I - I ⊗ A) vec(X), column-major vec
        let block = a.transpose().kronecker(&id) - id.kronecker(a);
        system.view_mut((t * nn, 0), (nn, nn)).copy_from(&block);
    }
    nn - numerical_rank(&system, rel_tol)
}
