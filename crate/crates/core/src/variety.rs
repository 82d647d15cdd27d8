//! Polynomial ideals, the quotient space N_Q inside a capped Fock space and
//! the compressed model S_{i,j} = P_N W_{i,j}|_N.
//!
//! N_Q ∩ F_D equals F_D ⊖ P_D M_Q, and P_D M_Q is spanned by the vectors
//! P_D W_(α) g(W) W_(β) Ω with |αᵢ| + |βᵢ| ≤ Dᵢ. Those vectors are read off
//! the b-weights directly, so the subspace is exact up to one SVD per shell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_universal_model, TruncationGrid, UniversalModel};
use crate::linalg::{commutant_dimension, identity, numerical_rank, orthogonal_complement, range_basis, spectral_norm, CMat, CVec, C64};
use crate::ncalg::{count_vectors, enumerate_words, evaluate_poly, for_each_arrangement, gamma_coefficient, word_count, word_index, DomainSpec, MultiIndex, NcPolynomial, PolyJson, Word};
use crate::polydomain::{check_membership, CpMaps, MembershipReport, OperatorTuple, Purity, Tolerances};

/// Singular values ≤ this fraction of σ_max are dropped when spanning M_Q.
pub const SPAN_REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum IdealKind {
    General,
    CommutantQc,
    FullyCommutativeQcc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdealSpec {
    pub generators: Vec<NcPolynomial>,
    pub kind: IdealKind,
    /// Stored for reporting; the image of an ideal in the Fock space is the
    /// same for the left and the two-sided ideal of a generator set.
    pub two_sided: bool,
}

impl IdealSpec {
    pub fn zero() -> Self {
        IdealSpec { generators: vec![], kind: IdealKind::General, two_sided: false }
    }

    pub fn general(generators: Vec<NcPolynomial>) -> Self {
        IdealSpec { generators, kind: IdealKind::General, two_sided: false }
    }

    /// Commutators Z_{i,a}Z_{i,b} − Z_{i,b}Z_{i,a} inside every block.
    pub fn qc(n: &[usize]) -> Self {
        let mut generators = Vec::new();
        for (i, &ni) in n.iter().enumerate() {
            for a in 0..ni {
                for b in a + 1..ni {
                    let za = NcPolynomial::variable(n, i, a);
                    let zb = NcPolynomial::variable(n, i, b);
                    generators.push(za.mul(&zb).sub(&zb.mul(&za)));
                }
            }
        }
        IdealSpec { generators, kind: IdealKind::CommutantQc, two_sided: true }
    }

    /// Q_c plus Z_{1,j} − Z_{p,j} for every block p; all blocks must have equal size.
    pub fn qcc(n: &[usize]) -> Result<Self> {
        if n.iter().any(|&x| x != n[0]) {
            return Err(Error::Input("fully commutative ideal needs equal block sizes".into()));
        }
        let mut ideal = Self::qc(n);
        for p in 1..n.len() {
            for j in 0..n[0] {
                ideal.generators.push(NcPolynomial::variable(n, 0, j).sub(&NcPolynomial::variable(n, p, j)));
            }
        }
        ideal.kind = IdealKind::FullyCommutativeQcc;
        Ok(ideal)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.generators.iter().all(NcPolynomial::is_homogeneous)
    }

    pub fn from_json(json: &IdealJson, n: &[usize]) -> Result<Self> {
        let mut ideal = match json.kind {
            IdealKind::General => Self::zero(),
            IdealKind::CommutantQc => Self::qc(n),
            IdealKind::FullyCommutativeQcc => Self::qcc(n)?,
        };
        for g in &json.generators {
            let p = NcPolynomial::from_json(g, n)?;
            if p.is_zero() {
                return Err(Error::Input("zero generator".into()));
            }
            ideal.generators.push(p);
        }
        ideal.two_sided = json.two_sided;
        Ok(ideal)
    }

    pub fn to_json(&self) -> IdealJson {
        IdealJson { generators: self.generators.iter().map(NcPolynomial::to_json).collect(), kind: IdealKind::General, two_sided: self.two_sided }
    }
}

/// `kind` other than `general` adds the standard generators of that ideal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IdealJson {
    #[serde(default)]
    pub generators: Vec<PolyJson>,
    #[serde(default = "general_kind")]
    pub kind: IdealKind,
    #[serde(default)]
    pub two_sided: bool,
}

fn general_kind() -> IdealKind {
    IdealKind::General
}

#[derive(Clone, Debug)]
pub struct VarietyModel {
    pub w: UniversalModel,
    pub ideal: IdealSpec,
    /// Orthonormal columns spanning N_Q ∩ F_D.
    pub basis_n: CMat,
    pub s: Vec<Vec<CMat>>,
    pub vacuum_in_n: bool,
    /// Largest relative norm cut from a spanning vector that was only partly
    /// inside the caps; zero when every spanning vector is kept whole.
    pub leakage: f64,
}

impl VarietyModel {
    pub fn spec(&self) -> &DomainSpec {
        &self.w.spec
    }

    pub fn grid(&self) -> &TruncationGrid {
        &self.w.basis.grid
    }

    pub fn dim(&self) -> usize {
        self.basis_n.ncols()
    }

    pub fn tuple(&self) -> OperatorTuple {
        OperatorTuple { blocks: self.s.clone(), dim: self.dim() }
    }

    /// The vacuum expressed in N coordinates.
    pub fn vacuum(&self) -> CVec {
        self.basis_n.row(0).adjoint()
    }

    /// P_N P_C|_N in N coordinates.
    pub fn vacuum_projection(&self) -> CMat {
        let v = self.vacuum();
        &v * v.adjoint()
    }

    /// Ambient vector → N coordinates.
    pub fn restrict(&self, v: &CVec) -> CVec {
        self.basis_n.adjoint() * v
    }

    /// S_(α) = S_{1,α₁}⋯S_{k,α_k}.
    pub fn word(&self, alpha: &MultiIndex) -> CMat {
        self.tuple().multi_word(alpha)
    }
}

/// One spanning vector: sparse entries kept inside the caps, and the squared
/// norm of entries cut off.
struct SpanVector {
    entries: Vec<(usize, C64)>,
    cut: f64,
}

pub fn build_ideal_subspace(spec: &DomainSpec, grid: &TruncationGrid, ideal: &IdealSpec) -> Result<VarietyModel> {
    let w = build_universal_model(spec, grid);
    build_on_model(w, ideal)
}

pub fn build_on_model(w: UniversalModel, ideal: &IdealSpec) -> Result<VarietyModel> {
    let spec = w.spec.clone();
    let dim = w.dim();
    let k = spec.k();
    for g in &ideal.generators {
        if g.n != spec.n {
            return Err(Error::Input("generator block sizes differ from the domain".into()));
        }
    }
    let vectors = spanning_vectors(&w, ideal);
    let leakage = vectors
        .iter()
        .filter(|v| !v.entries.is_empty() && v.cut > 0.0)
        .map(|v| {
            let kept: f64 = v.entries.iter().map(|(_, c)| c.norm_sqr()).sum();
            (v.cut / (kept + v.cut)).sqrt()
        })
        .fold(0.0, f64::max);

    let homogeneous = ideal.is_homogeneous();
    let shells: Vec<(usize, usize)> = if homogeneous { shell_ranges(&w) } else { vec![(0, dim)] };
    let mut columns: Vec<CVec> = Vec::new();
    for &(lo, hi) in &shells {
        let size = hi - lo;
        let members: Vec<&SpanVector> = vectors.iter().filter(|v| v.entries.first().is_some_and(|(i, _)| *i >= lo && *i < hi)).collect();
        let complement = if members.is_empty() {
            identity(size)
        } else {
            let mut m = CMat::zeros(size, members.len());
            for (c, v) in members.iter().enumerate() {
                for &(i, coef) in &v.entries {
                    m[(i - lo, c)] += coef;
                }
            }
            orthogonal_complement(&range_basis(&m, SPAN_REL_TOL), size)
        };
        for c in 0..complement.ncols() {
            let mut col = CVec::zeros(dim);
            col.rows_mut(lo, size).copy_from(&complement.column(c));
            columns.push(col);
        }
    }
    if columns.is_empty() {
        return Err(Error::Input("the ideal fills the whole truncated space".into()));
    }
    let mut basis_n = CMat::zeros(dim, columns.len());
    for (c, col) in columns.iter().enumerate() {
        basis_n.set_column(c, col);
    }
    let s = (0..k)
        .map(|i| {
            w.ops[i]
                .iter()
                .map(|op| basis_n.adjoint() * op.mul_dense(&basis_n))
                .collect()
        })
        .collect();
    let vac = basis_n.row(0).norm();
    Ok(VarietyModel { w, ideal: ideal.clone(), basis_n, s, vacuum_in_n: (vac - 1.0).abs() < 1e-10, leakage })
}

/// Contiguous index ranges of equal total degree.
fn shell_ranges(w: &UniversalModel) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut lo = 0;
    for idx in 1..=w.dim() {
        if idx == w.dim() || w.basis.total_degree(idx) != w.basis.total_degree(lo) {
            out.push((lo, idx));
            lo = idx;
        }
    }
    out
}

/// P_D W_(α) g(W) W_(β) Ω for every generator and every admissible (α, β).
fn spanning_vectors(w: &UniversalModel, ideal: &IdealSpec) -> Vec<SpanVector> {
    let spec = &w.spec;
    let caps = &w.basis.grid.caps;
    let k = spec.k();
    // Per block, all (α, β) with |α| + |β| ≤ D.
    let pairs: Vec<Vec<(Word, Word)>> = (0..k)
        .map(|i| {
            let words = enumerate_words(spec.n[i], caps[i]);
            let mut v = Vec::new();
            for a in &words {
                for b in &words {
                    if a.len() + b.len() <= caps[i] {
                        v.push((a.clone(), b.clone()));
                    }
                }
            }
            v
        })
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; k];
    loop {
        for g in &ideal.generators {
            let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
            let mut cut = 0.0;
            for (gamma, c) in &g.terms {
                let mut words = Vec::with_capacity(k);
                let mut inside = true;
                let mut b = 1.0;
                for i in 0..k {
                    let (a, bt) = &pairs[i][choice[i]];
                    let full = a.concat(&gamma.0[i]).concat(bt);
                    if full.len() > caps[i] {
                        inside = false;
                        b *= crate::ncalg::b_coefficient(&spec.q[i], spec.m[i], &full);
                    } else {
                        b *= w.b.get(i, &full.0);
                    }
                    words.push(full);
                }
                let coef = *c / b.sqrt();
                if inside {
                    let wi: Vec<usize> = words.iter().enumerate().map(|(i, wd)| word_index(spec.n[i], &wd.0)).collect();
                    let idx = w.basis.index_of_words(&wi).expect("inside caps");
                    *acc.entry(idx).or_insert(C64::new(0.0, 0.0)) += coef;
                } else {
                    cut += coef.norm_sqr();
                }
            }
            let entries: Vec<(usize, C64)> = acc.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
            if !entries.is_empty() {
                out.push(SpanVector { entries, cut });
            }
        }
        let mut i = 0;
        loop {
            if i == k {
                return out;
            }
            choice[i] += 1;
            if choice[i] < pairs[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VarietyReport {
    pub dim_n: usize,
    pub vacuum_in_n: bool,
    pub orthonormality: f64,
    pub generator_residuals: Vec<f64>,
    pub co_invariance: f64,
    pub defect_identity: f64,
    pub membership: MembershipReport,
    pub leakage: f64,
    pub passed: bool,
}

/// Checks orthonormality of the basis, g(S) = 0, W*N ⊆ N,
/// Δ^m_S(I) = P_N P_C|_N, membership and purity of S.
pub fn verify_model(model: &VarietyModel, tol: &Tolerances) -> VarietyReport {
    let r = model.dim();
    let orthonormality = spectral_norm(&(model.basis_n.adjoint() * &model.basis_n - identity(r)));
    let tuple = model.tuple();
    let generator_residuals: Vec<f64> = model
        .ideal
        .generators
        .iter()
        .map(|g| evaluate_poly(g, &tuple.blocks).map(|m| spectral_norm(&m)).unwrap_or(f64::INFINITY))
        .collect();
    let proj_out = identity(model.w.dim()) - &model.basis_n * model.basis_n.adjoint();
    let mut co_invariance = 0.0_f64;
    for blk in &model.w.ops {
        for op in blk {
            let image = op.adjoint().mul_dense(&model.basis_n);
            co_invariance = co_invariance.max(spectral_norm(&(&proj_out * image)));
        }
    }
    let maps = CpMaps::new(model.spec(), &model.s);
    let delta = maps.defect(&model.spec().m, &identity(r));
    let defect_identity = spectral_norm(&(delta - model.vacuum_projection()));
    let membership = check_membership(model.spec(), &tuple, tol);
    let passed = orthonormality <= 1e-12
        && generator_residuals.iter().all(|&x| x <= 1e-10)
        && co_invariance <= 1e-12
        && defect_identity <= 1e-10
        && membership.is_member
        && membership.is_pure == Purity::Pure;
    VarietyReport {
        dim_n: r,
        vacuum_in_n: model.vacuum_in_n,
        orthonormality,
        generator_residuals,
        co_invariance,
        defect_identity,
        membership,
        leakage: model.leakage,
        passed,
    }
}

/// Normalized abelianization-class vectors w^{k₁}⊗⋯⊗w^{k_k}.
#[derive(Clone, Debug)]
pub struct SymmetricVector {
    pub counts: Vec<Vec<usize>>,
    pub vector: CVec,
    pub norm: f64,
}

/// Every w^{k₁}⊗⋯⊗w^{k_k} with |kᵢ| ≤ Dᵢ, where
/// w^{k} = γ_k⁻¹ Σ_{α∈Λ_k} √b_α e_α in each factor.
pub fn symmetric_basis(spec: &DomainSpec, grid: &TruncationGrid) -> Vec<SymmetricVector> {
    let w = build_universal_model(spec, grid);
    symmetric_basis_on(&w)
}

pub fn symmetric_basis_on(w: &UniversalModel) -> Vec<SymmetricVector> {
    let spec = &w.spec;
    let k = spec.k();
    // Per block: (counts, factor vector as sparse entries over word indices, γ).
    let factors: Vec<Vec<(Vec<usize>, Vec<(usize, f64)>, f64)>> = (0..k)
        .map(|i| {
            let ni = spec.n[i];
            let mut v = Vec::new();
            for total in 0..=w.basis.grid.caps[i] {
                for counts in count_vectors(ni, total) {
                    let gamma = gamma_coefficient(&spec.q[i], spec.m[i], &counts);
                    let mut entries = Vec::new();
                    for_each_arrangement(&counts, &mut |letters| {
                        entries.push((word_index(ni, letters), w.b.get(i, letters).sqrt() / gamma));
                    });
                    v.push((counts, entries, gamma));
                }
            }
            v
        })
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; k];
    loop {
        let mut vector = CVec::zeros(w.dim());
        let mut partial: Vec<(Vec<usize>, f64)> = vec![(vec![], 1.0)];
        for i in 0..k {
            let (_, entries, _) = &factors[i][choice[i]];
            partial = partial
                .into_iter()
                .flat_map(|(idx, c)| entries.iter().map(move |(e, v)| {
                    let mut j = idx.clone();
                    j.push(*e);
                    (j, c * v)
                }))
                .collect();
        }
        for (idx, c) in partial {
            vector[w.basis.index_of_words(&idx).expect("inside caps")] = C64::new(c, 0.0);
        }
        let norm = (0..k).map(|i| factors[i][choice[i]].2).product::<f64>().powf(-0.5);
        out.push(SymmetricVector { counts: (0..k).map(|i| factors[i][choice[i]].0.clone()).collect(), vector, norm });
        let mut i = 0;
        loop {
            if i == k {
                return out;
            }
            choice[i] += 1;
            if choice[i] < factors[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IrreducibilityReport {
    pub commutant_dimension: usize,
    pub irreducible: bool,
    /// Largest rank of S_(α) P_C S_(β)* over words of degree ≤ 2.
    pub rank_one_max: usize,
}

/// Dimension of the joint commutant of {S_{i,j}, S_{i,j}*} and the rank of
/// the vacuum-sandwiched words.
pub fn irreducibility_witness(model: &VarietyModel) -> Result<IrreducibilityReport> {
    if !model.vacuum_in_n {
        return Err(Error::Input("the vacuum is not in N".into()));
    }
    let ops: Vec<CMat> = model.s.iter().flatten().flat_map(|s| [s.clone(), s.adjoint()]).collect();
    let dim = commutant_dimension(&ops, 1e-10);
    let pc = model.vacuum_projection();
    let words = low_degree_words(&model.spec().n, 2);
    let mut rank_one_max = 0;
    for a in &words {
        for b in &words {
            let m = model.word(a) * &pc * model.word(b).adjoint();
            if m.norm() > 1e-12 {
                rank_one_max = rank_one_max.max(numerical_rank(&m, 1e-8));
            }
        }
    }
    Ok(IrreducibilityReport { commutant_dimension: dim, irreducible: dim == 1, rank_one_max })
}

/// All multi-indices with total degree ≤ `max_total`.
pub fn low_degree_words(n: &[usize], max_total: usize) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex(vec![])];
    for &ni in n {
        let words = enumerate_words(ni, max_total);
        out = out
            .into_iter()
            .flat_map(|m| words.iter().map(move |w| {
                let mut v = m.0.clone();
                v.push(w.clone());
                MultiIndex(v)
            }))
            .filter(|m| m.degree() <= max_total)
            .collect();
    }
    out
}

/// Word count of block `i` up to its cap, for callers sizing tables.
pub fn factor_word_count(model: &VarietyModel, i: usize) -> usize {
    word_count(model.spec().n[i], model.grid().caps[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::subspace_distance;

    #[test]
    fn zero_ideal_gives_whole_space() {
        let spec = DomainSpec::ball(2, 1);
        let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![2]), &IdealSpec::zero()).unwrap();
        assert_eq!(model.dim(), 7);
        let w = model.w.dense_blocks();
        for j in 0..2 {
            let back = &model.basis_n * &model.s[0][j] * model.basis_n.adjoint();
            assert!(spectral_norm(&(back - &w[0][j])) < 1e-14);
        }
    }

    #[test]
    fn symmetric_quotient_dimension() {
        let spec = DomainSpec::drury_arveson(2);
        let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![2]), &IdealSpec::qc(&[2])).unwrap();
        assert_eq!(model.dim(), 6);
    }

    #[test]
    fn single_letter_generator_leaves_other_letter() {
        let spec = DomainSpec::drury_arveson(2);
        let ideal = IdealSpec::general(vec![NcPolynomial::variable(&[2], 0, 0)]);
        for d in 1..4 {
            let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![d]), &ideal).unwrap();
            assert_eq!(model.dim(), d + 1);
            let r = verify_model(&model, &Tolerances::default());
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn models_verify() {
        let cases = [
            (DomainSpec::drury_arveson(2), vec![3], IdealSpec::qc(&[2])),
            (DomainSpec::ball(2, 2), vec![3], IdealSpec::qc(&[2])),
            (DomainSpec::polyball(&[2, 1], &[1, 2]), vec![2, 2], IdealSpec::qc(&[2, 1])),
            (DomainSpec::hardy_sobolev(2, 2), vec![2, 2], IdealSpec::qcc(&[2, 2]).unwrap()),
            (DomainSpec::ball(1, 2), vec![4], IdealSpec::zero()),
        ];
        for (spec, caps, ideal) in cases {
            let model = build_ideal_subspace(&spec, &TruncationGrid::new(caps), &ideal).unwrap();
            let r = verify_model(&model, &Tolerances::default());
            assert!(r.passed, "{r:?}");
            assert_eq!(r.membership.defect_rank, 1);
        }
    }

    #[test]
    fn corrupted_basis_is_flagged() {
        let spec = DomainSpec::drury_arveson(2);
        let mut model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![2]), &IdealSpec::qc(&[2])).unwrap();
        let last = model.dim() - 1;
        let mut col = model.basis_n.column(last).clone_owned();
        let idx = model.w.basis.index_of(&MultiIndex(vec![Word(vec![0, 1])])).unwrap();
        col[idx] += C64::new(0.3, 0.0);
        let col = &col / C64::new(col.norm(), 0.0);
        model.basis_n.set_column(last, &col);
        model.s = model.w.ops.iter().map(|b| b.iter().map(|op| model.basis_n.adjoint() * op.mul_dense(&model.basis_n)).collect()).collect();
        assert!(!verify_model(&model, &Tolerances::default()).passed);
    }

    #[test]
    fn symmetric_vectors_span_the_commutative_quotient() {
        for (spec, caps) in [
            (DomainSpec::drury_arveson(2), vec![3]),
            (DomainSpec::polydisc(2), vec![3, 3]),
            (DomainSpec::polyball(&[2, 2], &[1, 2]), vec![2, 1]),
        ] {
            let grid = TruncationGrid::new(caps);
            let model = build_ideal_subspace(&spec, &grid, &IdealSpec::qc(&spec.n)).unwrap();
            let sym = symmetric_basis(&spec, &grid);
            for v in &sym {
                assert!((v.vector.norm() - v.norm).abs() < 1e-14);
            }
            let cols: Vec<CVec> = sym.iter().map(|v| &v.vector / C64::new(v.norm, 0.0)).collect();
            let mut b = CMat::zeros(model.w.dim(), cols.len());
            for (c, v) in cols.iter().enumerate() {
                b.set_column(c, v);
            }
            assert!(spectral_norm(&(b.adjoint() * &b - identity(cols.len()))) < 1e-12);
            assert!(subspace_distance(&b, &model.basis_n) <= 1e-10);
        }
    }

    #[test]
    fn drury_arveson_mixed_vector() {
        let sym = symmetric_basis(&DomainSpec::drury_arveson(2), &TruncationGrid::new(vec![2]));
        let v = sym.iter().find(|v| v.counts == vec![vec![1, 1]]).unwrap();
        assert!((v.norm - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(v.vector.iter().filter(|c| c.norm() > 0.0).count(), 2);
        assert!(v.vector.iter().all(|c| c.norm() == 0.0 || (c.re - 0.5).abs() < 1e-15));
    }

    #[test]
    fn enlarging_caps_keeps_low_shells() {
        let spec = DomainSpec::drury_arveson(2);
        let small = build_ideal_subspace(&spec, &TruncationGrid::new(vec![2]), &IdealSpec::qc(&[2])).unwrap();
        let big = build_ideal_subspace(&spec, &TruncationGrid::new(vec![3]), &IdealSpec::qc(&[2])).unwrap();
        // Embed the small space and compare with the big space's degree ≤ 2 slice.
        let mut emb = CMat::zeros(big.w.dim(), small.dim());
        for idx in 0..small.w.dim() {
            let j = big.w.basis.index_of(&small.w.basis.multi_index(idx)).unwrap();
            emb.set_row(j, &small.basis_n.row(idx));
        }
        let low: Vec<usize> = (0..big.w.dim()).filter(|&i| big.w.basis.total_degree(i) <= 2).collect();
        let mut slice = CMat::zeros(big.w.dim(), 0);
        for c in 0..big.dim() {
            let col = big.basis_n.column(c);
            if (0..big.w.dim()).all(|i| low.contains(&i) || col[i].norm() < 1e-14) {
                slice = crate::linalg::hstack(&slice, &CMat::from_column_slice(big.w.dim(), 1, col.as_slice()));
            }
        }
        assert!(subspace_distance(&emb, &slice) < 1e-12);
    }

    #[test]
    fn irreducibility() {
        let full = build_ideal_subspace(&DomainSpec::ball(1, 1), &TruncationGrid::new(vec![3]), &IdealSpec::zero()).unwrap();
        assert_eq!(irreducibility_witness(&full).unwrap().commutant_dimension, 1);
        let da = build_ideal_subspace(&DomainSpec::drury_arveson(2), &TruncationGrid::new(vec![2]), &IdealSpec::qc(&[2])).unwrap();
        let rep = irreducibility_witness(&da).unwrap();
        assert!(rep.irreducible);
        assert_eq!(rep.rank_one_max, 1);
        let amp: Vec<CMat> = da.s.iter().flatten().flat_map(|s| {
            let a = crate::linalg::ampliate(s, 2);
            [a.adjoint(), a]
        }).collect();
        assert_eq!(commutant_dimension(&amp, 1e-10), 4);
    }
}
