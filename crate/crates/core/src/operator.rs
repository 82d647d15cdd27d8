//! Operators on finite-dimensional spaces, stored dense or sparse.
//!
//! Weighted shifts on truncated Fock spaces have at most one nonzero per
//! column, so large models are kept in compressed-row form and only
//! densified when a small downstream computation needs it.

use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::linalg::{spectral_norm, CMat, CVec, C64, ZERO};

/// Dense below this total dimension, sparse above (the default knob).
pub const DEFAULT_SPARSE_THRESHOLD: usize = 4096;

#[derive(Clone, Debug)]
pub enum Operator {
    Dense(CMat),
    Sparse(CsMat<C64>),
}

/// One nonzero entry, as exported to JSON/CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

impl Operator {
    pub fn from_triplets(rows: usize, cols: usize, entries: &[(usize, usize, C64)], sparse: bool) -> Self {
        if sparse {
            let mut tri = TriMat::new((rows, cols));
            for &(r, c, v) in entries {
                if v != ZERO {
                    tri.add_triplet(r, c, v);
                }
            }
            Operator::Sparse(tri.to_csr())
        } else {
            let mut m = CMat::zeros(rows, cols);
            for &(r, c, v) in entries {
                m[(r, c)] += v;
            }
            Operator::Dense(m)
        }
    }

    pub fn identity(n: usize, sparse: bool) -> Self {
        if sparse {
            Operator::Sparse(CsMat::eye(n))
        } else {
            Operator::Dense(CMat::identity(n, n))
        }
    }

    pub fn zeros(rows: usize, cols: usize, sparse: bool) -> Self {
        if sparse {
            Operator::Sparse(CsMat::zero((rows, cols)))
        } else {
            Operator::Dense(CMat::zeros(rows, cols))
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            Operator::Dense(m) => m.nrows(),
            Operator::Sparse(m) => m.rows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Operator::Dense(m) => m.ncols(),
            Operator::Sparse(m) => m.cols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Operator::Sparse(_))
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            Operator::Dense(m) => m.clone(),
            Operator::Sparse(m) => {
                let mut d = CMat::zeros(m.rows(), m.cols());
                for (v, (r, c)) in m.iter() {
                    d[(r, c)] += *v;
                }
                d
            }
        }
    }

    fn to_sparse(&self) -> CsMat<C64> {
        match self {
            Operator::Sparse(m) => m.clone(),
            Operator::Dense(m) => {
                let mut tri = TriMat::new((m.nrows(), m.ncols()));
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        let v = m[(r, c)];
                        if v != ZERO {
                            tri.add_triplet(r, c, v);
                        }
                    }
                }
                tri.to_csr()
            }
        }
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Operator::Dense(m) => Operator::Dense(m.adjoint()),
            Operator::Sparse(m) => {
                let t = m.transpose_view().to_owned().to_csr();
                Operator::Sparse(t.map(|v| v.conj()))
            }
        }
    }

    pub fn mul(&self, other: &Operator) -> Operator {
        assert_eq!(self.ncols(), other.nrows(), "operator shape mismatch");
        match (self, other) {
            (Operator::Dense(a), Operator::Dense(b)) => Operator::Dense(a * b),
            (Operator::Sparse(a), Operator::Sparse(b)) => Operator::Sparse(prune(&(a * b))),
            (Operator::Sparse(_), Operator::Dense(b)) => Operator::Dense(self.mul_dense(b)),
            (Operator::Dense(a), Operator::Sparse(_)) => {
                Operator::Dense(other.adjoint().mul_dense(&a.adjoint()).adjoint())
            }
        }
    }

    /// `self * b` for a dense right factor.
    pub fn mul_dense(&self, b: &CMat) -> CMat {
        match self {
            Operator::Dense(a) => a * b,
            Operator::Sparse(a) => {
                let mut out = CMat::zeros(a.rows(), b.ncols());
                for (v, (r, c)) in a.iter() {
                    for j in 0..b.ncols() {
                        out[(r, j)] += *v * b[(c, j)];
                    }
                }
                out
            }
        }
    }

    pub fn apply(&self, x: &CVec) -> CVec {
        match self {
            Operator::Dense(a) => a * x,
            Operator::Sparse(a) => {
                let mut out = CVec::zeros(a.rows());
                for (v, (r, c)) in a.iter() {
                    out[r] += *v * x[c];
                }
                out
            }
        }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        self.combine(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        self.combine(other, C64::new(-1.0, 0.0))
    }

    fn combine(&self, other: &Operator, sign: C64) -> Operator {
        match (self, other) {
            (Operator::Sparse(a), Operator::Sparse(b)) => {
                let scaled = b.map(|v| *v * sign);
                Operator::Sparse(prune(&(a + &scaled)))
            }
            _ => Operator::Dense(self.to_dense() + other.to_dense() * sign),
        }
    }

    pub fn scale(&self, s: C64) -> Operator {
        match self {
            Operator::Dense(a) => Operator::Dense(a * s),
            Operator::Sparse(a) => Operator::Sparse(a.map(|v| *v * s)),
        }
    }

    /// Spectral norm for dense storage; Frobenius norm (an upper bound) for
    /// sparse storage.
    pub fn norm(&self) -> f64 {
        match self {
            Operator::Dense(a) => spectral_norm(a),
            Operator::Sparse(a) => a.data().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        match self {
            Operator::Dense(a) => a.iter().fold(0.0_f64, |acc, v| acc.max(v.norm())),
            Operator::Sparse(a) => a.data().iter().fold(0.0_f64, |acc, v| acc.max(v.norm())),
        }
    }

    /// The diagonal, if every off-diagonal entry is exactly zero.
    pub fn diagonal_if_diagonal(&self) -> Option<Vec<C64>> {
        let n = self.nrows();
        if n != self.ncols() {
            return None;
        }
        let mut diag = vec![ZERO; n];
        match self {
            Operator::Dense(a) => {
                for c in 0..n {
                    for r in 0..n {
                        if r == c {
                            diag[r] = a[(r, c)];
                        } else if a[(r, c)] != ZERO {
                            return None;
                        }
                    }
                }
            }
            Operator::Sparse(a) => {
                for (v, (r, c)) in a.iter() {
                    if r == c {
                        diag[r] += *v;
                    } else if *v != ZERO {
                        return None;
                    }
                }
            }
        }
        Some(diag)
    }

    /// Nonzero entries in row-major order.
    pub fn triplets(&self) -> Vec<Triplet> {
        let sp = self.to_sparse();
        let mut out: Vec<Triplet> = sp
            .iter()
            .filter(|(v, _)| **v != ZERO)
            .map(|(v, (r, c))| Triplet { row: r, col: c, re: v.re, im: v.im })
            .collect();
        out.sort_by_key(|t| (t.row, t.col));
        out
    }

    pub fn nnz(&self) -> usize {
        match self {
            Operator::Dense(a) => a.iter().filter(|v| **v != ZERO).count(),
            Operator::Sparse(a) => a.data().iter().filter(|v| **v != ZERO).count(),
        }
    }
}

/// Dense matrix as separate real and imaginary row lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let re = (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)].re).collect()).collect();
        let im = (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)].im).collect()).collect();
        MatrixJson { re, im: Some(im) }
    }

    pub fn to_matrix(&self) -> Result<CMat, String> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if self.re.iter().any(|r| r.len() != cols) {
            return Err("ragged real part".into());
        }
        if let Some(im) = &self.im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err("imaginary part shape differs from real part".into());
            }
        }
        Ok(CMat::from_fn(rows, cols, |r, c| {
            C64::new(self.re[r][c], self.im.as_ref().map_or(0.0, |im| im[r][c]))
        }))
    }
}

/// Sparse export: shape plus nonzero entries in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripletMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Triplet>,
}

impl TripletMatrix {
    pub fn from_operator(op: &Operator) -> Self {
        TripletMatrix { rows: op.nrows(), cols: op.ncols(), entries: op.triplets() }
    }

    pub fn from_matrix(m: &CMat) -> Self {
        Self::from_operator(&Operator::Dense(m.clone()))
    }

    pub fn to_matrix(&self) -> Result<CMat, String> {
        let mut m = CMat::zeros(self.rows, self.cols);
        for t in &self.entries {
            if t.row >= self.rows || t.col >= self.cols {
                return Err(format!("entry ({}, {}) outside {}×{}", t.row, t.col, self.rows, self.cols));
            }
            m[(t.row, t.col)] = C64::new(t.re, t.im);
        }
        Ok(m)
    }

    /// `row,col,re,im` lines under a header; the shape travels separately.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        for t in &self.entries {
            out.serialize(t)?;
        }
        if self.entries.is_empty() {
            out.write_record(["row", "col", "re", "im"])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R, rows: usize, cols: usize) -> Result<Self, csv::Error> {
        let mut input = csv::Reader::from_reader(r);
        let entries = input.deserialize().collect::<Result<Vec<Triplet>, _>>()?;
        Ok(TripletMatrix { rows, cols, entries })
    }
}

/// The operations the completely positive maps need, shared by dense
/// matrices and [`Operator`].
pub trait LinOp: Clone + Send + Sync {
    fn dim(&self) -> usize;
    fn eye_like(&self) -> Self;
    fn op_mul(&self, other: &Self) -> Self;
    fn op_adjoint(&self) -> Self;
    fn op_sub(&self, other: &Self) -> Self;
    fn op_add(&self, other: &Self) -> Self;
    fn op_scale(&self, s: f64) -> Self;
    /// Smallest eigenvalue of the Hermitian part.
    fn min_eig(&self) -> f64;
    /// An upper bound on the spectral norm that is exact for dense storage.
    fn norm_bound(&self) -> f64;
    fn rank(&self, rel_tol: f64) -> usize;
    fn dense(&self) -> CMat;
    /// Whether every sufficiently long word in `ops` vanishes.
    fn family_nilpotent(ops: &[Self]) -> bool;
}

impl LinOp for CMat {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn eye_like(&self) -> Self {
        CMat::identity(self.nrows(), self.nrows())
    }
    fn op_mul(&self, other: &Self) -> Self {
        self * other
    }
    fn op_adjoint(&self) -> Self {
        self.adjoint()
    }
    fn op_sub(&self, other: &Self) -> Self {
        self - other
    }
    fn op_add(&self, other: &Self) -> Self {
        self + other
    }
    fn op_scale(&self, s: f64) -> Self {
        self * C64::new(s, 0.0)
    }
    fn min_eig(&self) -> f64 {
        crate::linalg::min_eigenvalue(self)
    }
    fn norm_bound(&self) -> f64 {
        spectral_norm(self)
    }
    fn rank(&self, rel_tol: f64) -> usize {
        crate::linalg::numerical_rank(self, rel_tol)
    }
    fn dense(&self) -> CMat {
        self.clone()
    }
    fn family_nilpotent(ops: &[Self]) -> bool {
        dense_family_nilpotent(ops)
    }
}

impl LinOp for Operator {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn eye_like(&self) -> Self {
        Operator::identity(self.nrows(), self.is_sparse())
    }
    fn op_mul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn op_adjoint(&self) -> Self {
        self.adjoint()
    }
    fn op_sub(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn op_add(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn op_scale(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }
    fn min_eig(&self) -> f64 {
        match self.diagonal_if_diagonal() {
            Some(d) => d.iter().map(|v| v.re).fold(f64::INFINITY, f64::min),
            None => crate::linalg::min_eigenvalue(&self.to_dense()),
        }
    }
    fn norm_bound(&self) -> f64 {
        match self.diagonal_if_diagonal() {
            Some(d) => d.iter().map(|v| v.norm()).fold(0.0, f64::max),
            None => self.norm(),
        }
    }
    fn rank(&self, rel_tol: f64) -> usize {
        match self.diagonal_if_diagonal() {
            Some(d) => {
                let mx = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
                d.iter().filter(|v| v.norm() > rel_tol * mx && mx > 0.0).count()
            }
            None => crate::linalg::numerical_rank(&self.to_dense(), rel_tol),
        }
    }
    fn dense(&self) -> CMat {
        self.to_dense()
    }
    fn family_nilpotent(ops: &[Self]) -> bool {
        if ops.iter().all(Operator::is_sparse) {
            pattern_nilpotent(ops)
        } else {
            dense_family_nilpotent(&ops.iter().map(Operator::to_dense).collect::<Vec<_>>())
        }
    }
}

/// Joint nilpotency by shrinking the span of all words of growing length;
/// the span is non-increasing, so a repeated dimension means it is stable.
pub fn dense_family_nilpotent(ops: &[CMat]) -> bool {
    let Some(first) = ops.first() else { return true };
    let d = first.nrows();
    let scale = ops.iter().map(spectral_norm).fold(1.0, f64::max);
    let mut basis = CMat::identity(d, d);
    for _ in 0..=d {
        if basis.ncols() == 0 {
            return true;
        }
        let images: Vec<CMat> = ops.iter().map(|t| t * &basis).collect();
        let stacked = CMat::from_fn(d, images.len() * basis.ncols(), |r, c| images[c / basis.ncols()][(r, c % basis.ncols())]);
        let next = crate::linalg::range_basis_abs(&stacked, 1e-12 * scale);
        if next.ncols() == basis.ncols() {
            return false;
        }
        basis = next;
    }
    basis.ncols() == 0
}

/// Joint nilpotency of the support pattern: no cycle among nonzero entries.
/// Numerically cancelling entries can only make this answer conservative.
fn pattern_nilpotent(ops: &[Operator]) -> bool {
    let d = ops[0].nrows();
    let mut active = vec![true; d];
    let mut count = d;
    let pattern: Vec<Vec<Triplet>> = ops.iter().map(Operator::triplets).collect();
    for _ in 0..=d {
        if count == 0 {
            return true;
        }
        let mut next = vec![false; d];
        for trips in &pattern {
            for t in trips {
                if active[t.col] {
                    next[t.row] = true;
                }
            }
        }
        let c = next.iter().filter(|&&x| x).count();
        if c == count && next == active {
            return false;
        }
        active = next;
        count = c;
    }
    count == 0
}

fn prune(m: &CsMat<C64>) -> CsMat<C64> {
    let mut tri = TriMat::new((m.rows(), m.cols()));
    for (v, (r, c)) in m.iter() {
        if *v != ZERO {
            tri.add_triplet(r, c, *v);
        }
    }
    tri.to_csr()
}
