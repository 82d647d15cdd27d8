//! The completely positive maps Φ_i, the defect maps Δ^p, and membership
//! and purity tests for concrete tuples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, CMat, C64};
use crate::ncalg::{DomainSpec, PositiveRegularPolynomial};
use crate::operator::{LinOp, MatrixJson};

/// Tolerances shared by every check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Eigenvalues ≥ −psd·(1+‖A‖) count as nonnegative.
    #[serde(rename = "psdTol")]
    pub psd: f64,
    /// Absolute bound on cross-block commutator norms.
    #[serde(rename = "commTol")]
    pub comm: f64,
    /// Singular values ≤ rank·σ_max count as zero.
    #[serde(rename = "rankTol")]
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { psd: 1e-9, comm: 1e-10, rank: 1e-8 }
    }
}

/// Square matrices T_{i,j} on a common ℂ^d; blocks commute with each other.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTuple {
    pub blocks: Vec<Vec<CMat>>,
    pub dim: usize,
}

impl OperatorTuple {
    /// Validates shapes and cross-block commutation.
    pub fn new(blocks: Vec<Vec<CMat>>, comm_tol: f64) -> Result<Self> {
        let t = Self::unchecked(blocks)?;
        let defect = t.commutator_defect();
        if defect > comm_tol {
            return Err(Error::Input(format!("cross-block commutator norm {defect:.3e} exceeds {comm_tol:.1e}")));
        }
        Ok(t)
    }

    /// Validates shapes only.
    pub fn unchecked(blocks: Vec<Vec<CMat>>) -> Result<Self> {
        let dim = blocks.iter().flatten().next().map(|m| m.nrows()).ok_or_else(|| Error::Input("empty tuple".into()))?;
        if blocks.iter().flatten().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::Input(format!("all matrices must be {dim}×{dim}")));
        }
        Ok(OperatorTuple { blocks, dim })
    }

    pub fn zeros(n: &[usize], dim: usize) -> Self {
        OperatorTuple { blocks: n.iter().map(|&ni| vec![CMat::zeros(dim, dim); ni]).collect(), dim }
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn matches(&self, spec: &DomainSpec) -> bool {
        self.n() == spec.n
    }

    pub fn commutator_defect(&self) -> f64 {
        commutator_defect(&self.blocks)
    }

    /// T_{i,α} for a word in block `i`.
    pub fn word(&self, i: usize, letters: &[usize]) -> CMat {
        crate::ncalg::word_product(&self.blocks[i], letters, self.dim)
    }

    /// T_(α) = T_{1,α₁}⋯T_{k,α_k}.
    pub fn multi_word(&self, alpha: &crate::ncalg::MultiIndex) -> CMat {
        alpha.0.iter().enumerate().fold(CMat::identity(self.dim, self.dim), |acc, (i, w)| acc * self.word(i, &w.0))
    }

    pub fn to_json(&self) -> TupleJson {
        TupleJson { blocks: self.blocks.iter().map(|b| b.iter().map(MatrixJson::from_matrix).collect()).collect() }
    }

    pub fn from_json(json: &TupleJson, comm_tol: f64) -> Result<Self> {
        let blocks = json
            .blocks
            .iter()
            .map(|b| b.iter().map(|m| m.to_matrix().map_err(Error::Input)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks, comm_tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleJson {
    pub blocks: Vec<Vec<MatrixJson>>,
}

pub fn commutator_defect<M: LinOp>(blocks: &[Vec<M>]) -> f64 {
    let mut worst = 0.0_f64;
    for s in 0..blocks.len() {
        for t in s + 1..blocks.len() {
            for a in &blocks[s] {
                for b in &blocks[t] {
                    worst = worst.max(a.op_mul(b).op_sub(&b.op_mul(a)).norm_bound());
                }
            }
        }
    }
    worst
}

/// Every tuple matrix multiplied by `r`.
pub fn scale_tuple(t: &OperatorTuple, r: f64) -> OperatorTuple {
    OperatorTuple {
        blocks: t.blocks.iter().map(|b| b.iter().map(|m| m * C64::new(r, 0.0)).collect()).collect(),
        dim: t.dim,
    }
}

/// The maps Φ_i(Y) = Σ_α a_{i,α} X_{i,α} Y X_{i,α}*, with the word products
/// precomputed once.
#[derive(Clone, Debug)]
pub struct CpMaps<M> {
    terms: Vec<Vec<(f64, M, M)>>,
}

impl<M: LinOp> CpMaps<M> {
    pub fn new(spec: &DomainSpec, blocks: &[Vec<M>]) -> Self {
        let terms = spec
            .q
            .iter()
            .zip(blocks)
            .map(|(q, block)| {
                q.coeffs
                    .iter()
                    .map(|(w, a)| {
                        let x = word_op(block, &w.0);
                        let xs = x.op_adjoint();
                        (*a, x, xs)
                    })
                    .collect()
            })
            .collect();
        CpMaps { terms }
    }

    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn phi(&self, i: usize, y: &M) -> M {
        let mut it = self.terms[i].iter().map(|(a, x, xs)| x.op_mul(y).op_mul(xs).op_scale(*a));
        let first = it.next().expect("positive regular polynomials have linear terms");
        it.fold(first, |acc, t| acc.op_add(&t))
    }

    /// (id − Φ_i)(Y).
    pub fn one_minus_phi(&self, i: usize, y: &M) -> M {
        y.op_sub(&self.phi(i, y))
    }

    /// (id−Φ₁)^{p₁}∘⋯∘(id−Φ_k)^{p_k}(Y).
    pub fn defect(&self, p: &[usize], y: &M) -> M {
        let mut out = y.clone();
        for i in (0..self.k()).rev() {
            for _ in 0..p[i] {
                out = self.one_minus_phi(i, &out);
            }
        }
        out
    }

    /// Δ^p(Y) for every 0 ≤ p ≤ m, in lexicographic order of p.
    pub fn defect_lattice(&self, m: &[usize], y: &M) -> Vec<(Vec<usize>, M)> {
        let points = lattice(m);
        let mut out: Vec<(Vec<usize>, M)> = Vec::with_capacity(points.len());
        for p in points {
            let value = match p.iter().rposition(|&x| x > 0) {
                None => y.clone(),
                Some(i) => {
                    let mut parent = p.clone();
                    parent[i] -= 1;
                    let pos = out.iter().position(|(q, _)| *q == parent).expect("parent precedes child in lex order");
                    self.one_minus_phi(i, &out[pos].1)
                }
            };
            out.push((p, value));
        }
        out
    }

    /// Φ_i applied `times` times.
    pub fn phi_power(&self, i: usize, times: usize, y: &M) -> M {
        (0..times).fold(y.clone(), |acc, _| self.phi(i, &acc))
    }
}

/// X_α for a nonempty word.
fn word_op<M: LinOp>(block: &[M], letters: &[usize]) -> M {
    let mut it = letters.iter();
    let first = block[*it.next().expect("nonempty word")].clone();
    it.fold(first, |acc, &l| acc.op_mul(&block[l]))
}

/// All integer vectors 0 ≤ p ≤ m, lexicographic.
pub fn lattice(m: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &mi in m {
        out = out.into_iter().flat_map(|p: Vec<usize>| (0..=mi).map(move |x| {
            let mut q = p.clone();
            q.push(x);
            q
        })).collect();
    }
    out
}

pub fn phi_map(q: &PositiveRegularPolynomial, block: &[CMat], y: &CMat) -> CMat {
    let mut out = CMat::zeros(y.nrows(), y.ncols());
    for (w, a) in &q.coeffs {
        let x = word_op(block, &w.0);
        out += &x * y * x.adjoint() * C64::new(*a, 0.0);
    }
    out
}

pub fn defect_map(spec: &DomainSpec, t: &OperatorTuple, p: &[usize], y: &CMat) -> CMat {
    CpMaps::new(spec, &t.blocks).defect(p, y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Purity {
    Pure,
    NotPure,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LatticeEigen {
    pub p: Vec<usize>,
    pub min_eigen: f64,
    pub norm: f64,
    pub psd: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MembershipReport {
    pub is_member: bool,
    pub min_eigen: Vec<LatticeEigen>,
    pub commutator_defect: f64,
    pub is_pure: Purity,
    pub defect_rank: usize,
    pub tolerances: Tolerances,
}

/// Membership test over the whole p-lattice, for dense or sparse tuples.
pub fn check_membership_generic<M: LinOp>(spec: &DomainSpec, blocks: &[Vec<M>], tol: &Tolerances) -> MembershipReport {
    let maps = CpMaps::new(spec, blocks);
    let eye = blocks.iter().flatten().next().expect("nonempty tuple").eye_like();
    let lattice = maps.defect_lattice(&spec.m, &eye);
    let min_eigen: Vec<LatticeEigen> = lattice
        .iter()
        .map(|(p, d)| {
            let min = d.min_eig();
            let norm = d.norm_bound();
            LatticeEigen { p: p.clone(), min_eigen: min, norm, psd: min >= -tol.psd * (1.0 + norm) }
        })
        .collect();
    let comm = commutator_defect(blocks);
    let is_member = comm <= tol.comm && min_eigen.iter().all(|e| e.psd);
    let top = &lattice.last().expect("lattice contains m").1;
    let defect_rank = top.rank(tol.rank);
    let is_pure = if is_member { purity_of(spec, &maps, blocks, 1 << 12, 1e-10) } else { Purity::Unknown };
    MembershipReport { is_member, min_eigen, commutator_defect: comm, is_pure, defect_rank, tolerances: *tol }
}

pub fn check_membership(spec: &DomainSpec, t: &OperatorTuple, tol: &Tolerances) -> MembershipReport {
    check_membership_generic(spec, &t.blocks, tol)
}

/// Purity by the nilpotency shortcut, else by iterating
/// R_N = (id−Φ_k^N)⋯(id−Φ₁^N)(I) with N doubling up to `max_iter`.
pub fn check_purity(spec: &DomainSpec, t: &OperatorTuple, max_iter: usize, tol: f64) -> Purity {
    purity_of(spec, &CpMaps::new(spec, &t.blocks), &t.blocks, max_iter, tol)
}

fn purity_of<M: LinOp>(spec: &DomainSpec, maps: &CpMaps<M>, blocks: &[Vec<M>], max_iter: usize, tol: f64) -> Purity {
    if blocks.iter().all(|b| M::family_nilpotent(b)) {
        return Purity::Pure;
    }
    let eye = blocks.iter().flatten().next().expect("nonempty tuple").eye_like();
    let mut prev: Option<M> = None;
    let mut n = 1;
    while n <= max_iter {
        let r = iterated_defect(maps, spec.k(), n, &eye);
        let gap = r.op_sub(&eye).norm_bound();
        if gap <= tol {
            return Purity::Pure;
        }
        if let Some(p) = &prev {
            if r.op_sub(p).norm_bound() <= tol && gap > 1e3 * tol {
                return Purity::NotPure;
            }
        }
        prev = Some(r);
        n *= 2;
    }
    Purity::Unknown
}

fn iterated_defect<M: LinOp>(maps: &CpMaps<M>, k: usize, n: usize, x: &M) -> M {
    let mut out = x.clone();
    for i in 0..k {
        out = out.op_sub(&maps.phi_power(i, n, &out));
    }
    out
}

/// (id−Φ_k^N)⋯(id−Φ₁^N)(X) at a fixed N, applying block 1 first.
pub fn iterated_limit(spec: &DomainSpec, t: &OperatorTuple, x: &CMat, n: usize) -> CMat {
    iterated_defect(&CpMaps::new(spec, &t.blocks), spec.k(), n, x)
}

/// Smallest L with every block word of length L zero, if any (capped at d+1).
pub fn nilpotency_order(t: &OperatorTuple) -> Option<usize> {
    let ops: Vec<&CMat> = t.blocks.iter().flatten().collect();
    let d = t.dim;
    let scale = ops.iter().map(|m| spectral_norm(m)).fold(1.0, f64::max);
    let mut basis = CMat::identity(d, d);
    for len in 0..=d {
        if basis.ncols() == 0 {
            return Some(len);
        }
        let cols: Vec<CMat> = ops.iter().map(|m| *m * &basis).collect();
        let w = basis.ncols();
        let stacked = CMat::from_fn(d, cols.len() * w, |r, c| cols[c / w][(r, c % w)]);
        basis = crate::linalg::range_basis_abs(&stacked, 1e-12 * scale.powi(len as i32 + 1));
    }
    (basis.ncols() == 0).then_some(d + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diff_norm, singular_values};
    use crate::fixtures::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(x: f64) -> CMat {
        CMat::from_element(1, 1, C64::new(x, 0.0))
    }

    #[test]
    fn phi_examples() {
        let q = PositiveRegularPolynomial::linear(1);
        assert_eq!(phi_map(&q, &[scalar(0.5)], &scalar(0.0))[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(phi_map(&q, &[CMat::from_element(1, 1, C64::new(0.0, 0.5))], &scalar(1.0))[(0, 0)].re, 0.25);
        let q2 = PositiveRegularPolynomial::linear(2);
        assert_eq!(phi_map(&q2, &[scalar(0.3), scalar(0.4)], &scalar(1.0))[(0, 0)].re, 0.3 * 0.3 + 0.4 * 0.4);
    }

    #[test]
    fn defect_examples() {
        let spec = DomainSpec::ball(1, 1);
        let mut t = CMat::zeros(2, 2);
        t[(0, 1)] = C64::new(1.0, 0.0);
        let tup = OperatorTuple::new(vec![vec![t]], 1e-10).unwrap();
        let d = defect_map(&spec, &tup, &[1], &CMat::identity(2, 2));
        assert_eq!(d[(0, 0)].re, 0.0);
        assert_eq!(d[(1, 1)].re, 1.0);
        assert_eq!(defect_map(&spec, &tup, &[0], &CMat::identity(2, 2)), CMat::identity(2, 2));
        let da = DomainSpec::ball(2, 1);
        let pt = OperatorTuple::new(vec![vec![scalar(0.3), scalar(0.4)]], 1e-10).unwrap();
        assert!((defect_map(&da, &pt, &[1], &scalar(1.0))[(0, 0)].re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_tuple_is_pure_member_with_full_defect() {
        let spec = DomainSpec::polyball(&[2, 1], &[2, 1]);
        let t = OperatorTuple::zeros(&spec.n, 3);
        let r = check_membership(&spec, &t, &Tolerances::default());
        assert!(r.is_member);
        assert_eq!(r.is_pure, Purity::Pure);
        assert_eq!(r.defect_rank, 3);
        assert_eq!(r.min_eigen.len(), 6);
        assert!(r.min_eigen.iter().all(|e| e.min_eigen == 1.0));
    }

    #[test]
    fn single_contraction_membership_matches_norm() {
        let spec = DomainSpec::ball(1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let a = random_matrix(&mut rng, 3);
            let smax = singular_values(&a)[0];
            for scale in [0.9, 1.1] {
                let t = &a * C64::new(scale / smax, 0.0);
                let tup = OperatorTuple::new(vec![vec![t]], 1e-10).unwrap();
                assert_eq!(check_membership(&spec, &tup, &Tolerances::default()).is_member, scale < 1.0);
            }
        }
    }

    #[test]
    fn purity_examples() {
        let spec = DomainSpec::ball(1, 1);
        let one = OperatorTuple::new(vec![vec![scalar(1.0)]], 1e-10).unwrap();
        assert_eq!(check_purity(&spec, &one, 1 << 10, 1e-10), Purity::NotPure);
        let half = OperatorTuple::new(vec![vec![scalar(0.5)]], 1e-10).unwrap();
        assert_eq!(check_purity(&spec, &half, 1 << 10, 1e-10), Purity::Pure);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = random_nilpotent(&mut rng, 4);
        let tup = OperatorTuple::new(vec![vec![n]], 1e-10).unwrap();
        assert_eq!(check_purity(&spec, &tup, 1, 1e-10), Purity::Pure);
        assert!(nilpotency_order(&tup).unwrap() <= 4);
    }

    #[test]
    fn defect_recursion_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = DomainSpec::polyball(&[2, 1], &[2, 2]);
        let t = random_commuting_member(&mut rng, &spec, 3);
        let y = random_matrix(&mut rng, 3);
        let maps = CpMaps::new(&spec, &t.blocks);
        for p in lattice(&spec.m) {
            for i in 0..2 {
                let mut pe = p.clone();
                pe[i] += 1;
                let lhs = maps.defect(&pe, &y);
                let base = maps.defect(&p, &y);
                let rhs = &base - maps.phi(i, &base);
                assert!(diff_norm(&lhs, &rhs) <= 1e-12);
            }
        }
    }

    #[test]
    fn monotone_limit_sits_between_zero_and_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = DomainSpec::polyball(&[2, 1], &[1, 2]);
        for _ in 0..10 {
            let t = random_commuting_member(&mut rng, &spec, 4);
            let x = CMat::identity(4, 4);
            let lim = iterated_limit(&spec, &t, &x, 8);
            assert!(crate::linalg::min_eigenvalue(&lim) >= -1e-9);
            assert!(crate::linalg::min_eigenvalue(&(&x - &lim)) >= -1e-9);
        }
    }

    #[test]
    fn scaling_preserves_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = DomainSpec::polyball(&[2, 1], &[1, 1]);
        for _ in 0..10 {
            let t = random_commuting_member(&mut rng, &spec, 3);
            for r in [0.0, 0.3, 0.99] {
                assert!(check_membership(&spec, &scale_tuple(&t, r), &Tolerances::default()).is_member);
            }
            assert_eq!(scale_tuple(&t, 1.0), t);
        }
    }

    #[test]
    fn tuple_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = DomainSpec::polyball(&[2, 1], &[1, 1]);
        let t = random_commuting_member(&mut rng, &spec, 3);
        let s = serde_json::to_string(&t.to_json()).unwrap();
        let back = OperatorTuple::from_json(&serde_json::from_str(&s).unwrap(), 1e-10).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn non_commuting_blocks_are_refused() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 2);
        assert!(OperatorTuple::new(vec![vec![a], vec![b]], 1e-10).is_err());
    }
}
