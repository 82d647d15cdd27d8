//! Scalar points of the domain: eigenvectors Γ_λ of S*, normalized kernels
//! u_λ, the reproducing kernel κ(μ,λ) = Π (1 − qᵢ(μᵢλ̄ᵢ))^{−mᵢ}, point
//! evaluation and multiplier checks.
//!
//! Γ_λ = √Δ_λ · Σ_β √b_β λ̄_β e_β, so S*_{i,j}Γ_λ = λ̄_{i,j}Γ_λ except on the
//! top shell of block i.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eigen, spectral_norm, CMat, CVec, C64};
use crate::ncalg::{binomial, evaluate_poly, DomainSpec};
use crate::variety::VarietyModel;

/// Points with qᵢ(λᵢλ̄ᵢ) > 1 − STRICT_MARGIN are not strict.
pub const STRICT_MARGIN: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarPoint {
    pub lambda: Vec<Vec<C64>>,
    pub strict: bool,
}

impl ScalarPoint {
    pub fn new(spec: &DomainSpec, lambda: Vec<Vec<C64>>) -> Result<Self> {
        if lambda.len() != spec.k() || lambda.iter().zip(&spec.n).any(|(l, &n)| l.len() != n) {
            return Err(Error::Input(format!("point shape does not match block sizes {:?}", spec.n)));
        }
        let strict = levels(spec, &lambda).iter().all(|&x| x <= 1.0 - STRICT_MARGIN);
        Ok(Self { lambda, strict })
    }

    pub fn real(spec: &DomainSpec, lambda: &[&[f64]]) -> Result<Self> {
        Self::new(spec, lambda.iter().map(|b| b.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
    }

    pub fn zero(spec: &DomainSpec) -> Self {
        Self { lambda: spec.n.iter().map(|&n| vec![C64::new(0.0, 0.0); n]).collect(), strict: true }
    }

    /// λ_β = Π λ_{i,β_i}, a commutative monomial.
    fn monomial(&self, letters: &[&[usize]]) -> C64 {
        letters
            .iter()
            .zip(&self.lambda)
            .fold(C64::new(1.0, 0.0), |acc, (w, l)| w.iter().fold(acc, |a, &j| a * l[j]))
    }

    fn as_blocks(&self) -> Vec<Vec<CMat>> {
        self.lambda.iter().map(|b| b.iter().map(|&z| CMat::from_element(1, 1, z)).collect()).collect()
    }
}

/// qᵢ(λᵢλ̄ᵢ) per block.
pub fn levels(spec: &DomainSpec, lambda: &[Vec<C64>]) -> Vec<f64> {
    spec.q.iter().zip(lambda).map(|(q, l)| q.eval_pairing(l, l).re).collect()
}

/// Δ_λ(1) = Π (1 − qᵢ(λᵢλ̄ᵢ))^{mᵢ}.
pub fn defect_value(spec: &DomainSpec, p: &ScalarPoint) -> f64 {
    levels(spec, &p.lambda).iter().zip(&spec.m).map(|(x, &m)| (1.0 - x).powi(m as i32)).product()
}

#[derive(Clone, Debug)]
pub struct KernelVector {
    /// Γ_λ in N coordinates.
    pub gamma: CVec,
    /// Γ_λ in the ambient capped Fock basis.
    pub gamma_ambient: CVec,
    /// u_λ = Δ_λ(1)^{−1/2} Γ_λ in N coordinates.
    pub u: CVec,
    pub delta: f64,
    /// √(1 − ‖Γ_λ‖²), the mass beyond the caps in the untruncated limit.
    pub tail_norm: f64,
    /// ‖Γ − P_N Γ‖ / ‖Γ‖ before projection.
    pub projection_residual: f64,
}

fn ambient_gamma(model: &VarietyModel, p: &ScalarPoint, delta: f64) -> CVec {
    let w = &model.w;
    let k = w.spec.k();
    let sd = delta.sqrt();
    CVec::from_fn(w.dim(), |idx, _| {
        let words: Vec<crate::ncalg::Word> = (0..k).map(|i| crate::fock::factor_word(&w.basis, idx, i)).collect();
        let letters: Vec<&[usize]> = words.iter().map(|x| x.0.as_slice()).collect();
        p.monomial(&letters).conj() * (sd * w.sqrt_b(idx))
    })
}

/// Largest |g(λ)| over the ideal generators.
pub fn generator_residual(model: &VarietyModel, p: &ScalarPoint) -> Result<f64> {
    let blocks = p.as_blocks();
    let mut worst = 0.0_f64;
    for g in &model.ideal.generators {
        worst = worst.max(evaluate_poly(g, &blocks)?[(0, 0)].norm());
    }
    Ok(worst)
}

pub fn gamma_vector(model: &VarietyModel, p: &ScalarPoint) -> Result<KernelVector> {
    let spec = model.spec();
    if !p.strict {
        return Err(Error::OutsideDomain { margin: levels(spec, &p.lambda).iter().fold(f64::MIN, |a, &x| a.max(x)) - 1.0 });
    }
    let residual = generator_residual(model, p)?;
    if residual > 1e-10 {
        return Err(Error::Input(format!("point is off the variety: |g(λ)| = {residual:e}")));
    }
    let delta = defect_value(spec, p);
    let gamma_ambient = ambient_gamma(model, p, delta);
    let gamma = model.restrict(&gamma_ambient);
    let gn = gamma_ambient.norm();
    let projection_residual = if gn > 0.0 { (&gamma_ambient - &model.basis_n * &gamma).norm() / gn } else { 0.0 };
    let graded = model.ideal.generators.iter().all(|g| g.is_multi_homogeneous());
    if graded && projection_residual > 1e-8 {
        return Err(Error::Input(format!("Γ_λ leaves N by {projection_residual:e}")));
    }
    let u = &gamma / C64::new(delta.sqrt(), 0.0);
    let tail_norm = (1.0 - gamma.norm_squared()).max(0.0).sqrt();
    Ok(KernelVector { gamma, gamma_ambient, u, delta, tail_norm, projection_residual })
}

/// Ambient components of `v` lying on the top shell |β_i| = D_i.
fn top_shell(model: &VarietyModel, v: &CVec, block: usize) -> CVec {
    let basis = &model.w.basis;
    let cap = basis.grid.caps[block];
    CVec::from_fn(v.len(), |idx, _| if basis.degrees(idx)[block] == cap { v[idx] } else { C64::new(0.0, 0.0) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EigenResidual {
    pub block: usize,
    pub letter: usize,
    pub residual: f64,
    /// |λ_{i,j}|·‖top shell of block i in Γ_λ‖.
    pub closed_form: f64,
}

/// ‖S*_{i,j}Γ_λ − λ̄_{i,j}Γ_λ‖ with its closed form, for every (i,j).
pub fn verify_eigen(model: &VarietyModel, p: &ScalarPoint) -> Result<Vec<EigenResidual>> {
    let kv = gamma_vector(model, p)?;
    let mut out = Vec::new();
    for (i, block) in model.s.iter().enumerate() {
        let top = top_shell(model, &kv.gamma_ambient, i).norm();
        for (j, s) in block.iter().enumerate() {
            let lam = p.lambda[i][j];
            let r = (s.adjoint() * &kv.gamma - &kv.gamma * lam.conj()).norm();
            out.push(EigenResidual { block: i, letter: j, residual: r, closed_form: lam.norm() * top });
        }
    }
    Ok(out)
}

fn check_strict(spec: &DomainSpec, p: &ScalarPoint) -> Result<()> {
    if p.strict {
        Ok(())
    } else {
        Err(Error::OutsideDomain { margin: levels(spec, &p.lambda).iter().fold(f64::MIN, |a, &x| a.max(x)) - 1.0 })
    }
}

/// κ(μ,λ) = Π (1 − qᵢ(μᵢλ̄ᵢ))^{−mᵢ}.
pub fn kernel_value(spec: &DomainSpec, mu: &ScalarPoint, lambda: &ScalarPoint) -> Result<C64> {
    check_strict(spec, mu)?;
    check_strict(spec, lambda)?;
    let mut out = C64::new(1.0, 0.0);
    for ((q, &m), (a, b)) in spec.q.iter().zip(&spec.m).zip(mu.lambda.iter().zip(&lambda.lambda)) {
        let den = C64::new(1.0, 0.0) - q.eval_pairing(a, b);
        if den.norm() < 1e-12 {
            return Err(Error::Numerical("kernel denominator vanishes".into()));
        }
        out /= den.powi(m as i32);
    }
    Ok(out)
}

/// κ^cc(z,w) = Π (1 − qᵢ(z w̄))^{−mᵢ} on the diagonal variety; every block
/// must have the same number of letters.
pub fn kernel_value_cc(spec: &DomainSpec, z: &[C64], w: &[C64]) -> Result<C64> {
    if spec.n.iter().any(|&n| n != z.len() || n != w.len()) {
        return Err(Error::Input("the diagonal kernel needs equal block sizes".into()));
    }
    let mu = ScalarPoint::new(spec, vec![z.to_vec(); spec.k()])?;
    let lambda = ScalarPoint::new(spec, vec![w.to_vec(); spec.k()])?;
    kernel_value(spec, &mu, &lambda)
}

#[derive(Clone, Debug)]
pub struct GramReport {
    pub matrix: CMat,
    pub min_eigen: f64,
    pub psd: bool,
}

/// G_{st} = κ(p_s, p_t).
pub fn gram_matrix(spec: &DomainSpec, points: &[ScalarPoint], psd_tol: f64) -> Result<GramReport> {
    let n = points.len();
    let mut g = CMat::zeros(n, n);
    for s in 0..n {
        for t in 0..n {
            g[(s, t)] = kernel_value(spec, &points[s], &points[t])?;
        }
    }
    let min_eigen = if n == 0 { 0.0 } else { herm_eigen(&crate::linalg::hermitian_part(&g)).0[0] };
    let psd = min_eigen >= -psd_tol * (1.0 + spectral_norm(&g));
    Ok(GramReport { matrix: g, min_eigen, psd })
}

/// ⟨φ, u_λ⟩ for φ in N coordinates; checks |φ(λ)| ≤ ‖φ‖/√Δ_λ(1).
pub fn point_evaluate(model: &VarietyModel, phi: &CVec, p: &ScalarPoint) -> Result<C64> {
    let kv = gamma_vector(model, p)?;
    let value = phi.dotc(&kv.u).conj();
    let bound = phi.norm() / kv.delta.sqrt();
    if value.norm() > bound * (1.0 + 1e-12) + 1e-14 {
        return Err(Error::Numerical(format!("|φ(λ)| = {} exceeds {}", value.norm(), bound)));
    }
    Ok(value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationValue {
    /// ⟨AΩ, u_λ⟩.
    pub value: C64,
    /// ⟨AΓ_λ, Γ_λ⟩ on the truncated vectors.
    pub gamma_form: C64,
    pub tail_norm: f64,
}

pub fn evaluation_functional(model: &VarietyModel, a: &CMat, p: &ScalarPoint) -> Result<EvaluationValue> {
    if !model.vacuum_in_n {
        return Err(Error::Input("the vacuum is not in N".into()));
    }
    let kv = gamma_vector(model, p)?;
    let value = (a * model.vacuum()).dotc(&kv.u).conj();
    let gamma_form = (a * &kv.gamma).dotc(&kv.gamma).conj();
    Ok(EvaluationValue { value, gamma_form, tail_norm: kv.tail_norm })
}

/// max over points of |(φψ)(λ) − Φ_λ(φ)ψ(λ)|.
pub fn multiplier_check(model: &VarietyModel, phi: &CMat, psi: &CVec, points: &[ScalarPoint]) -> Result<f64> {
    let prod = phi * psi;
    let mut worst = 0.0_f64;
    for p in points {
        let lhs = point_evaluate(model, &prod, p)?;
        let rhs = evaluation_functional(model, phi, p)?.value * point_evaluate(model, psi, p)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Whether λ̄ is a joint eigenvalue of S* witnessed by Γ_λ.
pub fn right_spectrum_witness(model: &VarietyModel, p: &ScalarPoint) -> bool {
    if !p.strict || !model.ideal.is_homogeneous() {
        return false;
    }
    match verify_eigen(model, p) {
        Ok(res) => res.iter().all(|r| (r.residual - r.closed_form).abs() <= 1e-10),
        Err(_) => false,
    }
}

/// ⟨u_λ, u_μ⟩ on the truncated model.
pub fn truncated_kernel(model: &VarietyModel, mu: &ScalarPoint, lambda: &ScalarPoint) -> Result<C64> {
    let ul = gamma_vector(model, lambda)?.u;
    let um = gamma_vector(model, mu)?.u;
    Ok(um.dotc(&ul))
}

/// Σ_{j ≥ p₀} C(j+m−1, m−1) x^j ≤ C(p₀+m−1, m−1) x^{p₀} / (1−x)^m, the mass
/// of Σ b_α|λ_α|² on words longer than `cap`.
fn block_tail(x: f64, m: usize, cap: usize, deg: usize) -> f64 {
    let p0 = cap / deg.max(1) + 1;
    binomial(p0 + m - 1, m - 1) * x.powi(p0 as i32) / (1.0 - x).powi(m as i32)
}

/// Upper bound on |⟨u_λ,u_μ⟩_{(D)} − κ(μ,λ)| for the full Fock space:
/// Σᵢ √(tᵢ(λ)tᵢ(μ)) Π_{j≠i} √(Bⱼ(λ)Bⱼ(μ)) with tail tᵢ and full sum Bⱼ.
pub fn kernel_tail_bound(spec: &DomainSpec, caps: &[usize], mu: &ScalarPoint, lambda: &ScalarPoint) -> Result<f64> {
    check_strict(spec, mu)?;
    check_strict(spec, lambda)?;
    let xl = levels(spec, &lambda.lambda);
    let xm = levels(spec, &mu.lambda);
    let k = spec.k();
    let full = |i: usize| ((1.0 - xl[i]) * (1.0 - xm[i])).powf(-(spec.m[i] as f64) / 2.0);
    let mut total = 0.0;
    for i in 0..k {
        let deg = spec.q[i].degree();
        let ti = (block_tail(xl[i], spec.m[i], caps[i], deg) * block_tail(xm[i], spec.m[i], caps[i], deg)).sqrt();
        total += ti * (0..k).filter(|&j| j != i).map(full).product::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::random_strict_point;
    use crate::fock::TruncationGrid;
    use crate::ncalg::PositiveRegularPolynomial;
    use crate::variety::{build_ideal_subspace, symmetric_basis_on, IdealSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn disc(d: usize) -> VarietyModel {
        build_ideal_subspace(&DomainSpec::ball(1, 1), &TruncationGrid::new(vec![d]), &IdealSpec::zero()).unwrap()
    }

    #[test]
    fn origin_gives_vacuum() {
        let model = build_ideal_subspace(&DomainSpec::ball(2, 2), &TruncationGrid::new(vec![3]), &IdealSpec::qc(&[2])).unwrap();
        let kv = gamma_vector(&model, &ScalarPoint::zero(model.spec())).unwrap();
        assert_eq!(kv.gamma, model.vacuum());
        assert!(verify_eigen(&model, &ScalarPoint::zero(model.spec())).unwrap().iter().all(|r| r.residual == 0.0));
    }

    #[test]
    fn disc_gamma_is_geometric() {
        let model = disc(3);
        let p = ScalarPoint::real(model.spec(), &[&[0.5]]).unwrap();
        let kv = gamma_vector(&model, &p).unwrap();
        let r = 0.75f64.sqrt();
        for (d, expect) in [1.0, 0.5, 0.25, 0.125].iter().enumerate() {
            assert!((kv.gamma[d] - c(r * expect)).norm() < 1e-15);
        }
        let res = verify_eigen(&model, &p).unwrap();
        assert!((res[0].residual - 0.5 * r * 0.125).abs() < 1e-15);
    }

    #[test]
    fn drury_arveson_gamma_on_symmetric_basis() {
        let spec = DomainSpec::drury_arveson(2);
        let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![3]), &IdealSpec::qc(&[2])).unwrap();
        let p = ScalarPoint::real(&spec, &[&[0.3, 0.4]]).unwrap();
        let kv = gamma_vector(&model, &p).unwrap();
        assert!((kv.delta - 0.75).abs() < 1e-15);
        let mut expect = CVec::zeros(model.w.dim());
        for sv in symmetric_basis_on(&model.w) {
            let k = &sv.counts[0];
            let gamma = sv.norm.powi(-2);
            let mono = 0.3f64.powi(k[0] as i32) * 0.4f64.powi(k[1] as i32);
            expect += &sv.vector * c(0.75f64.sqrt() * gamma * mono);
        }
        assert!((&kv.gamma_ambient - expect).norm() < 1e-14);
    }

    #[test]
    fn eigen_residual_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let cases = [
            (DomainSpec::ball(2, 1), vec![4], IdealSpec::qc(&[2])),
            (DomainSpec::polyball(&[1, 2], &[2, 1]), vec![3, 3], IdealSpec::qc(&[1, 2])),
            (DomainSpec::new(vec![2], vec![2], vec![PositiveRegularPolynomial::from_terms(2, &[(&[0], 2.0), (&[1], 1.0), (&[0, 1], 1.0)]).unwrap()]).unwrap(), vec![4], IdealSpec::zero()),
        ];
        for (spec, caps, ideal) in cases {
            let model = build_ideal_subspace(&spec, &TruncationGrid::new(caps), &ideal).unwrap();
            for _ in 0..5 {
                let p = ScalarPoint::new(&spec, random_strict_point(&mut rng, &spec, 0.9)).unwrap();
                for r in verify_eigen(&model, &p).unwrap() {
                    assert!((r.residual - r.closed_form).abs() < 1e-12, "{r:?}");
                }
                assert!(right_spectrum_witness(&model, &p));
            }
        }
    }

    #[test]
    fn kernel_closed_forms() {
        let spec = DomainSpec::ball(1, 1);
        let p = ScalarPoint::real(&spec, &[&[0.5]]).unwrap();
        assert!((kernel_value(&spec, &p, &p).unwrap() - c(4.0 / 3.0)).norm() < 1e-15);
        assert_eq!(kernel_value(&spec, &ScalarPoint::zero(&spec), &p).unwrap(), c(1.0));
        let bidisc = DomainSpec::polydisc(2);
        let p2 = ScalarPoint::real(&bidisc, &[&[0.5], &[0.5]]).unwrap();
        assert!((kernel_value(&bidisc, &p2, &p2).unwrap() - c(16.0 / 9.0)).norm() < 1e-14);
        let z = [C64::new(0.2, 0.1)];
        let w = [C64::new(-0.3, 0.4)];
        let a = ScalarPoint::new(&bidisc, vec![z.to_vec(), z.to_vec()]).unwrap();
        let b = ScalarPoint::new(&bidisc, vec![w.to_vec(), w.to_vec()]).unwrap();
        assert_eq!(kernel_value_cc(&bidisc, &z, &w).unwrap(), kernel_value(&bidisc, &a, &b).unwrap());
    }

    #[test]
    fn non_strict_points_are_refused() {
        let spec = DomainSpec::ball(2, 1);
        let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![2]), &IdealSpec::qc(&[2])).unwrap();
        let p = ScalarPoint::real(&spec, &[&[0.8, 0.7]]).unwrap();
        assert!(!p.strict);
        assert!(matches!(kernel_value(&spec, &p, &p), Err(Error::OutsideDomain { .. })));
        assert!(!right_spectrum_witness(&model, &p));
    }

    #[test]
    fn off_variety_points_are_refused() {
        let spec = DomainSpec::ball(2, 1);
        let g = crate::ncalg::NcPolynomial::variable(&[2], 0, 0);
        let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![2]), &IdealSpec::general(vec![g])).unwrap();
        let on = ScalarPoint::real(&spec, &[&[0.0, 0.5]]).unwrap();
        let off = ScalarPoint::real(&spec, &[&[0.2, 0.5]]).unwrap();
        assert!(gamma_vector(&model, &on).is_ok());
        assert!(gamma_vector(&model, &off).is_err());
        assert!(!right_spectrum_witness(&model, &off));
    }

    #[test]
    fn gram_matrices_are_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let spec = DomainSpec::polyball(&[2, 1], &[1, 2]);
        let pts: Vec<ScalarPoint> = (0..20).map(|_| ScalarPoint::new(&spec, random_strict_point(&mut rng, &spec, 0.95)).unwrap()).collect();
        let g = gram_matrix(&spec, &pts, 1e-9).unwrap();
        assert!(g.psd, "{}", g.min_eigen);
        let twice = gram_matrix(&spec, &[pts[0].clone(), pts[0].clone()], 1e-9).unwrap();
        assert!(twice.psd);
        assert!(twice.min_eigen.abs() < 1e-9 * spectral_norm(&twice.matrix));
    }

    #[test]
    fn point_evaluation_of_monomials() {
        let spec = DomainSpec::drury_arveson(2);
        let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![3]), &IdealSpec::qc(&[2])).unwrap();
        let p = ScalarPoint::new(&spec, vec![vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.4)]]).unwrap();
        for sv in symmetric_basis_on(&model.w) {
            let phi = model.restrict(&sv.vector);
            let k = &sv.counts[0];
            let expect = p.lambda[0][0].powi(k[0] as i32) * p.lambda[0][1].powi(k[1] as i32);
            assert!((point_evaluate(&model, &phi, &p).unwrap() - expect).norm() < 1e-12);
        }
        assert!((point_evaluate(&model, &model.vacuum(), &p).unwrap() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn evaluation_functional_is_multiplicative_on_polynomials() {
        let spec = DomainSpec::ball(2, 1);
        let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![4]), &IdealSpec::qc(&[2])).unwrap();
        let p = ScalarPoint::new(&spec, vec![vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.4)]]).unwrap();
        let (s1, s2) = (&model.s[0][0], &model.s[0][1]);
        let id = crate::linalg::identity(model.dim());
        let (l1, l2) = (p.lambda[0][0], p.lambda[0][1]);
        assert!((evaluation_functional(&model, &id, &p).unwrap().value - c(1.0)).norm() < 1e-14);
        assert!((evaluation_functional(&model, s1, &p).unwrap().value - l1).norm() < 1e-14);
        let a = s1 * c(2.0) + s2 * s2;
        let b = &id * c(0.5) + s1 * s2;
        let va = evaluation_functional(&model, &a, &p).unwrap().value;
        let vb = evaluation_functional(&model, &b, &p).unwrap().value;
        let vab = evaluation_functional(&model, &(&a * &b), &p).unwrap().value;
        assert!((va - (l1 * 2.0 + l2 * l2)).norm() < 1e-12);
        assert!((vab - va * vb).norm() < 1e-12);
        let ev = evaluation_functional(&model, &a, &p).unwrap();
        assert!((ev.gamma_form - ev.value).norm() <= 1e-10 + 2.0 * spectral_norm(&a) * ev.tail_norm);
    }

    #[test]
    fn multipliers_act_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let spec = DomainSpec::drury_arveson(2);
        let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![5]), &IdealSpec::qc(&[2])).unwrap();
        let pts: Vec<ScalarPoint> = (0..10).map(|_| ScalarPoint::new(&spec, random_strict_point(&mut rng, &spec, 0.8)).unwrap()).collect();
        let id = crate::linalg::identity(model.dim());
        let (s1, s2) = (&model.s[0][0], &model.s[0][1]);
        assert_eq!(multiplier_check(&model, &id, &model.vacuum(), &pts).unwrap(), 0.0);
        assert!(multiplier_check(&model, s1, &model.vacuum(), &pts).unwrap() < 1e-12);
        // φ of degree 2 and ψ of degree ≤ 3 keep φψ inside the caps.
        let phi = s1 * s2 * C64::new(0.7, -0.2) + s2 * c(1.5) + &id * c(0.3);
        let v = model.vacuum();
        let psi = &v + s1 * &v * c(0.4) + s2 * s1 * s2 * &v * C64::new(0.0, 1.0);
        assert!(multiplier_check(&model, &phi, &psi, &pts).unwrap() < 1e-9);
    }

    #[test]
    fn truncated_kernel_converges_within_tail_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let cases = [DomainSpec::ball(2, 1), DomainSpec::ball(1, 3), DomainSpec::polyball(&[1, 1], &[1, 2])];
        for spec in cases {
            let pts: Vec<ScalarPoint> = (0..4).map(|_| ScalarPoint::new(&spec, random_strict_point(&mut rng, &spec, 0.7)).unwrap()).collect();
            for d in 3..=6 {
                let caps = vec![d; spec.k()];
                let model = build_ideal_subspace(&spec, &TruncationGrid::new(caps.clone()), &IdealSpec::qc(&spec.n)).unwrap();
                for a in &pts {
                    for b in &pts {
                        let err = (truncated_kernel(&model, b, a).unwrap() - kernel_value(&spec, b, a).unwrap()).norm();
                        assert!(err <= kernel_tail_bound(&spec, &caps, b, a).unwrap() + 1e-13);
                    }
                }
            }
        }
    }
}
