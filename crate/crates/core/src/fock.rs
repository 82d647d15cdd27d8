//! Degree-capped tensor products of full Fock spaces and the weighted
//! creation operators acting on them.
//!
//! The capped space is co-invariant under every adjoint creation operator,
//! so the compressed tuple is an honest element of the polydomain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ncalg::{word_at, word_count, word_index, BCoeffTable, DomainSpec, MultiIndex, Word};
use crate::operator::{Operator, DEFAULT_SPARSE_THRESHOLD};
use crate::linalg::{CVec, C64};

/// Per-factor degree caps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationGrid {
    pub caps: Vec<usize>,
}

impl TruncationGrid {
    pub fn new(caps: Vec<usize>) -> Self {
        TruncationGrid { caps }
    }

    pub fn uniform(k: usize, d: usize) -> Self {
        TruncationGrid { caps: vec![d; k] }
    }

    pub fn factor_dims(&self, n: &[usize]) -> Vec<usize> {
        self.caps.iter().zip(n).map(|(&d, &ni)| word_count(ni, d)).collect()
    }

    pub fn dimension(&self, n: &[usize]) -> usize {
        self.factor_dims(n).iter().product()
    }

    /// Parses `"d1,d2,..."`.
    pub fn parse(s: &str) -> Result<Self> {
        let caps = s
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Input(format!("bad grid entry '{t}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(TruncationGrid { caps })
    }
}

/// Orthonormal basis e_(β) of the capped tensor space, ordered by total
/// degree and then by the tuple of per-factor word indices.
#[derive(Clone, Debug)]
pub struct FockBasis {
    pub n: Vec<usize>,
    pub grid: TruncationGrid,
    factor_dims: Vec<usize>,
    /// Per basis vector, the graded-lex index of each factor word.
    entries: Vec<Vec<usize>>,
    /// Mixed-radix position (factor 0 most significant) to basis index.
    lookup: Vec<usize>,
    degrees: Vec<Vec<usize>>,
}

impl FockBasis {
    pub fn new(n: &[usize], grid: &TruncationGrid) -> Self {
        assert_eq!(n.len(), grid.caps.len(), "grid length must equal block count");
        let factor_dims = grid.factor_dims(n);
        let total: usize = factor_dims.iter().product();
        let factor_lens: Vec<Vec<usize>> = n
            .iter()
            .zip(&factor_dims)
            .map(|(&ni, &fd)| (0..fd).map(|i| word_at(ni, i).len()).collect())
            .collect();
        let mut tuples: Vec<(usize, Vec<usize>)> = (0..total)
            .map(|mut pos| {
                let mut t = vec![0; n.len()];
                for f in (0..n.len()).rev() {
                    t[f] = pos % factor_dims[f];
                    pos /= factor_dims[f];
                }
                let deg = t.iter().enumerate().map(|(f, &w)| factor_lens[f][w]).sum();
                (deg, t)
            })
            .collect();
        tuples.sort();
        let mut lookup = vec![0; total];
        let mut entries = Vec::with_capacity(total);
        let mut degrees = Vec::with_capacity(total);
        for (idx, (_, t)) in tuples.into_iter().enumerate() {
            lookup[mixed_radix(&t, &factor_dims)] = idx;
            degrees.push(t.iter().enumerate().map(|(f, &w)| factor_lens[f][w]).collect());
            entries.push(t);
        }
        FockBasis { n: n.to_vec(), grid: grid.clone(), factor_dims, entries, lookup, degrees }
    }

    pub fn k(&self) -> usize {
        self.n.len()
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    /// Per-factor word indices of basis vector `idx`.
    pub fn word_indices(&self, idx: usize) -> &[usize] {
        &self.entries[idx]
    }

    pub fn degrees(&self, idx: usize) -> &[usize] {
        &self.degrees[idx]
    }

    pub fn total_degree(&self, idx: usize) -> usize {
        self.degrees[idx].iter().sum()
    }

    pub fn multi_index(&self, idx: usize) -> MultiIndex {
        MultiIndex(self.entries[idx].iter().zip(&self.n).map(|(&w, &ni)| word_at(ni, w)).collect())
    }

    pub fn index_of_words(&self, word_indices: &[usize]) -> Option<usize> {
        if word_indices.iter().zip(&self.factor_dims).any(|(w, d)| w >= d) {
            return None;
        }
        Some(self.lookup[mixed_radix(word_indices, &self.factor_dims)])
    }

    pub fn index_of(&self, mi: &MultiIndex) -> Option<usize> {
        let w: Vec<usize> = mi.0.iter().zip(&self.n).map(|(w, &ni)| word_index(ni, &w.0)).collect();
        self.index_of_words(&w)
    }

    /// Basis manifest with 1-based letters.
    pub fn manifest(&self) -> Vec<BasisEntry> {
        (0..self.dim())
            .map(|idx| BasisEntry {
                index: idx,
                words: self.multi_index(idx).0.iter().map(|w| w.0.iter().map(|l| l + 1).collect()).collect(),
            })
            .collect()
    }
}

fn mixed_radix(t: &[usize], dims: &[usize]) -> usize {
    t.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub index: usize,
    pub words: Vec<Vec<usize>>,
}

/// The weighted creation operators W_{i,j} on a capped tensor Fock space.
#[derive(Clone, Debug)]
pub struct UniversalModel {
    pub spec: DomainSpec,
    pub basis: FockBasis,
    pub b: BCoeffTable,
    pub ops: Vec<Vec<Operator>>,
}

pub fn build_universal_model(spec: &DomainSpec, grid: &TruncationGrid) -> UniversalModel {
    build_universal_model_with(spec, grid, DEFAULT_SPARSE_THRESHOLD)
}

/// As [`build_universal_model`], storing sparse when the dimension is at
/// least `sparse_threshold`.
pub fn build_universal_model_with(spec: &DomainSpec, grid: &TruncationGrid, sparse_threshold: usize) -> UniversalModel {
    let basis = FockBasis::new(&spec.n, grid);
    let b = BCoeffTable::new(spec, &grid.caps);
    let sparse = basis.dim() >= sparse_threshold;
    let mut ops = Vec::with_capacity(spec.k());
    for i in 0..spec.k() {
        let ni = spec.n[i];
        let mut block = Vec::with_capacity(ni);
        for j in 0..ni {
            let mut entries = Vec::new();
            for idx in 0..basis.dim() {
                if basis.degrees(idx)[i] >= grid.caps[i] {
                    continue;
                }
                let src = basis.word_indices(idx);
                let word = word_at(ni, src[i]);
                let mut letters = Vec::with_capacity(word.len() + 1);
                letters.push(j);
                letters.extend_from_slice(&word.0);
                let target_word = word_index(ni, &letters);
                let mut t = src.to_vec();
                t[i] = target_word;
                let target = basis.index_of_words(&t).expect("target within caps");
                let w = (b.get_index(i, src[i]) / b.get_index(i, target_word)).sqrt();
                entries.push((target, idx, C64::new(w, 0.0)));
            }
            block.push(Operator::from_triplets(basis.dim(), basis.dim(), &entries, sparse));
        }
        ops.push(block);
    }
    UniversalModel { spec: spec.clone(), basis, b, ops }
}

impl UniversalModel {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// √(∏ᵢ b_{i,βᵢ}) for basis vector `idx`.
    pub fn sqrt_b(&self, idx: usize) -> f64 {
        self.basis.word_indices(idx).iter().enumerate().map(|(i, &w)| self.b.get_index(i, w)).product::<f64>().sqrt()
    }

    /// Dense copies of every W_{i,j}.
    pub fn dense_blocks(&self) -> Vec<Vec<crate::linalg::CMat>> {
        self.ops.iter().map(|blk| blk.iter().map(Operator::to_dense).collect()).collect()
    }
}

/// Rank-one projection onto the vacuum.
pub fn vacuum_projection(basis: &FockBasis) -> Operator {
    let sparse = basis.dim() >= DEFAULT_SPARSE_THRESHOLD;
    Operator::from_triplets(basis.dim(), basis.dim(), &[(0, 0, C64::new(1.0, 0.0))], sparse)
}

/// W_(α) = W_{1,α₁}⋯W_{k,α_k}.
pub fn apply_word(model: &UniversalModel, alpha: &MultiIndex) -> Operator {
    let dim = model.dim();
    let mut acc = Operator::identity(dim, dim >= DEFAULT_SPARSE_THRESHOLD);
    for (i, w) in alpha.0.iter().enumerate() {
        for &l in &w.0 {
            acc = acc.mul(&model.ops[i][l]);
        }
    }
    acc
}

/// W_(α) Ω, computed from the b-weights without forming operators.
pub fn word_on_vacuum(model: &UniversalModel, alpha: &MultiIndex) -> CVec {
    let mut v = CVec::zeros(model.dim());
    if let Some(idx) = model.basis.index_of(alpha) {
        let b: f64 = alpha.0.iter().enumerate().map(|(i, w)| model.b.get(i, &w.0)).product();
        v[idx] = C64::new(1.0 / b.sqrt(), 0.0);
    }
    v
}

/// The factor word of block `block` in basis vector `idx`.
pub fn factor_word(basis: &FockBasis, idx: usize, block: usize) -> Word {
    word_at(basis.n[block], basis.word_indices(idx)[block])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diff_norm, CMat};

    #[test]
    fn basis_is_graded_and_bijective() {
        let grid = TruncationGrid::new(vec![2, 3]);
        let basis = FockBasis::new(&[2, 1], &grid);
        assert_eq!(basis.dim(), 7 * 4);
        assert_eq!(basis.total_degree(0), 0);
        for idx in 0..basis.dim() {
            assert_eq!(basis.index_of(&basis.multi_index(idx)), Some(idx));
            if idx > 0 {
                assert!(basis.total_degree(idx - 1) <= basis.total_degree(idx));
            }
        }
    }

    #[test]
    fn disc_shift_has_unit_weights() {
        let model = build_universal_model(&DomainSpec::ball(1, 1), &TruncationGrid::new(vec![3]));
        let w = model.ops[0][0].to_dense();
        let mut expected = CMat::zeros(4, 4);
        for d in 0..3 {
            expected[(d + 1, d)] = C64::new(1.0, 0.0);
        }
        assert!(diff_norm(&w, &expected) == 0.0);
    }

    #[test]
    fn bergman_weights() {
        let model = build_universal_model(&DomainSpec::ball(1, 2), &TruncationGrid::new(vec![2]));
        let w = model.ops[0][0].to_dense();
        assert!((w[(1, 0)].re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((w[(2, 1)].re - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn creation_on_vacuum_and_words() {
        let spec = DomainSpec::ball(2, 1);
        let model = build_universal_model(&spec, &TruncationGrid::new(vec![3]));
        let alpha = MultiIndex(vec![Word(vec![0, 1])]);
        let op = apply_word(&model, &alpha).to_dense();
        let mut omega = CVec::zeros(model.dim());
        omega[0] = C64::new(1.0, 0.0);
        let v = &op * &omega;
        let idx = model.basis.index_of(&alpha).unwrap();
        assert_eq!(v[idx], C64::new(1.0, 0.0));
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert_eq!(v, word_on_vacuum(&model, &alpha));
        assert!(apply_word(&model, &MultiIndex::empty(1)).diagonal_if_diagonal().is_some());
    }

    #[test]
    fn first_creation_weight_is_inverse_root_b() {
        let q = crate::ncalg::PositiveRegularPolynomial::from_terms(2, &[(&[0], 2.0), (&[1], 1.0), (&[0, 1], 1.0)]).unwrap();
        let spec = DomainSpec::new(vec![2], vec![2], vec![q]).unwrap();
        let model = build_universal_model(&spec, &TruncationGrid::new(vec![2]));
        for j in 0..2 {
            let w = model.ops[0][j].to_dense();
            let target = model.basis.index_of(&MultiIndex(vec![Word::letter(j)])).unwrap();
            let b = model.b.get(0, &[j]);
            assert!((w[(target, 0)].re - 1.0 / b.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn cross_block_commutators_vanish_exactly() {
        let spec = DomainSpec::polyball(&[2, 1], &[1, 2]);
        let model = build_universal_model(&spec, &TruncationGrid::new(vec![2, 3]));
        for a in &model.ops[0] {
            for b in &model.ops[1] {
                let c = a.mul(b).sub(&b.mul(a));
                assert_eq!(c.max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn adjoints_lower_degree_by_one() {
        let spec = DomainSpec::polyball(&[2, 2], &[1, 1]);
        let model = build_universal_model(&spec, &TruncationGrid::new(vec![2, 1]));
        for (i, blk) in model.ops.iter().enumerate() {
            for w in blk {
                for t in w.adjoint().triplets() {
                    assert_eq!(model.basis.degrees(t.row)[i] + 1, model.basis.degrees(t.col)[i]);
                }
            }
        }
    }

    #[test]
    fn vacuum_projection_is_rank_one() {
        let basis = FockBasis::new(&[2], &TruncationGrid::new(vec![0]));
        assert_eq!(vacuum_projection(&basis).to_dense(), CMat::identity(1, 1));
        let basis = FockBasis::new(&[2, 1], &TruncationGrid::new(vec![2, 2]));
        let p = vacuum_projection(&basis);
        assert_eq!(p.nnz(), 1);
        assert_eq!(p.to_dense().trace(), C64::new(1.0, 0.0));
    }
}
