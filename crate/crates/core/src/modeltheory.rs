//! Multi-analytic operators on N⊗ℂ^h: invariant-subspace factorization,
//! characteristic functions, pure models, dilations, Wold decomposition and
//! unitary-invariant checks.
//!
//! Operators defined on the closure of a range (X, A, L) are solved by least
//! squares in an orthonormal eigenbasis R of that range, cut at
//! RANGE_TOL·λ_max of the operator under the root.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::berezin::{constrained_kernel, BerezinKernelData};
use crate::error::{Error, Result};
use crate::linalg::{
    ampliate, direct_sum, hstack, identity, kron, lstsq, min_eigenvalue, null_space, orthogonal_complement, procrustes_unitary,
    range_basis, spectral_norm, subspace_distance, vstack, CMat, C64,
};
use crate::ncalg::DomainSpec;
use crate::polydomain::{check_purity, CpMaps, LatticeEigen, OperatorTuple, Purity, Tolerances};
use crate::variety::{low_degree_words, VarietyModel};

/// Relative eigenvalue cutoff for ranges of square roots.
pub const RANGE_TOL: f64 = 1e-10;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Orthonormal eigenvectors R of a PSD matrix for eigenvalues above
/// RANGE_TOL·max(λ_max, 1), and C = R*G^{1/2} = diag(√λ)R*. The floor at 1
/// makes a round-off-sized G have empty range.
pub fn root_on_range(g: &CMat, psd_tol: f64) -> Result<(CMat, CMat)> {
    let n = g.nrows();
    if n == 0 {
        return Ok((CMat::zeros(0, 0), CMat::zeros(0, 0)));
    }
    let (vals, vecs) = crate::linalg::herm_eigen(g);
    let top = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if vals[0] < -psd_tol * (1.0 + top) {
        return Err(Error::NotPsd { min_eig: vals[0] });
    }
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > RANGE_TOL * top.max(1.0)).collect();
    let mut r = CMat::zeros(n, keep.len());
    let mut cm = CMat::zeros(keep.len(), n);
    for (k, &i) in keep.iter().enumerate() {
        r.set_column(k, &vecs.column(i));
        cm.set_row(k, &(vecs.column(i).adjoint() * c(vals[i].sqrt())));
    }
    Ok((r, cm))
}

/// Slot count h of an operator on N⊗ℂ^h.
fn slots(model: &VarietyModel, rows: usize) -> Result<usize> {
    let r = model.dim();
    if r == 0 || rows % r != 0 {
        return Err(Error::Input(format!("dimension {rows} is not a multiple of dim N = {r}")));
    }
    Ok(rows / r)
}

fn ampliated(model: &VarietyModel, h: usize) -> Vec<Vec<CMat>> {
    model.s.iter().map(|b| b.iter().map(|s| ampliate(s, h)).collect()).collect()
}

/// max over ops of ‖(I − BB*) A B‖ for orthonormal columns B.
pub fn invariance_residual(ops: &[CMat], basis: &CMat) -> f64 {
    let p = basis * basis.adjoint();
    let q = identity(basis.nrows()) - p;
    ops.iter().fold(0.0, |w, a| w.max(spectral_norm(&(&q * a * basis))))
}

fn flat(blocks: &[Vec<CMat>]) -> Vec<CMat> {
    blocks.iter().flatten().cloned().collect()
}

fn flat_adjoint(blocks: &[Vec<CMat>]) -> Vec<CMat> {
    blocks.iter().flatten().map(|a| a.adjoint()).collect()
}

/// Smallest E with span(`basis`) ⊂ N⊗E: the span of every slot component.
pub fn slot_support(basis: &CMat, h: usize) -> CMat {
    let r = basis.nrows() / h.max(1);
    let mut z = CMat::zeros(h, r * basis.ncols());
    for col in 0..basis.ncols() {
        for n in 0..r {
            for s in 0..h {
                z[(s, col * r + n)] = basis[(n * h + s, col)];
            }
        }
    }
    range_basis(&z, RANGE_TOL)
}

/// Closure of the span of every word in `ops` applied to `seed`.
pub fn krylov_closure(ops: &[CMat], seed: &CMat) -> CMat {
    let mut basis = range_basis(seed, RANGE_TOL);
    loop {
        let mut grown = basis.clone();
        for a in ops {
            grown = hstack(&grown, &(a * &basis));
        }
        let next = range_basis(&grown, RANGE_TOL);
        if next.ncols() == basis.ncols() {
            return next;
        }
        basis = next;
    }
}

/// An operator M: N⊗ℂ^a → N⊗ℂ^b with M(S⊗I) = (S⊗I)M.
#[derive(Clone, Debug)]
pub struct MultiAnalyticOp {
    pub m: CMat,
    pub input_slots: usize,
    pub output_slots: usize,
    pub intertwining_residual: f64,
    /// E with N⊗E the smallest reducing subspace containing range M*.
    pub support: CMat,
}

impl MultiAnalyticOp {
    pub fn new(model: &VarietyModel, m: CMat, input_slots: usize, output_slots: usize) -> Result<Self> {
        let r = model.dim();
        if m.nrows() != r * output_slots || m.ncols() != r * input_slots {
            return Err(Error::Input(format!("operator is {}×{}, expected {}×{}", m.nrows(), m.ncols(), r * output_slots, r * input_slots)));
        }
        let mut res = 0.0_f64;
        for s in model.s.iter().flatten() {
            let lhs = &m * ampliate(s, input_slots);
            let rhs = ampliate(s, output_slots) * &m;
            res = res.max(spectral_norm(&(lhs - rhs)));
        }
        let support = slot_support(&range_basis(&m.adjoint(), RANGE_TOL), input_slots);
        Ok(Self { m, input_slots, output_slots, intertwining_residual: res, support })
    }

    pub fn support_basis(&self, model_dim: usize) -> CMat {
        kron(&identity(model_dim), &self.support)
    }

    /// ‖(M*M)² − M*M‖, zero exactly when M is a partial isometry.
    pub fn idempotency_defect(&self) -> f64 {
        let g = self.m.adjoint() * &self.m;
        spectral_norm(&(&g * &g - &g))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BeurlingReport {
    pub satisfied: bool,
    pub invariance_residual: f64,
    pub min_eigen: Vec<LatticeEigen>,
}

/// Δ^p_{S⊗I}(G) for every p ≤ m.
pub fn defect_eigens(model: &VarietyModel, g: &CMat, h: usize, tol: &Tolerances) -> Vec<LatticeEigen> {
    let maps = CpMaps::new(model.spec(), &ampliated(model, h));
    maps.defect_lattice(&model.spec().m, g)
        .into_iter()
        .map(|(p, d)| {
            let min = if d.nrows() == 0 { 0.0 } else { min_eigenvalue(&d) };
            let norm = spectral_norm(&d);
            LatticeEigen { p, min_eigen: min, norm, psd: min >= -tol.psd * (1.0 + norm) }
        })
        .collect()
}

/// Whether Δ^p_{S⊗I}(P_M) ⪰ 0 for all p ≤ m, for M = span(`basis`) ⊂ N⊗ℂ^h.
pub fn beurling_criterion(model: &VarietyModel, basis: &CMat, tol: &Tolerances) -> Result<BeurlingReport> {
    let h = slots(model, basis.nrows())?;
    let inv = invariance_residual(&flat(&ampliated(model, h)), basis);
    if inv > 1e-10 {
        return Err(Error::Input(format!("subspace is not invariant: residual {inv:e}")));
    }
    let min_eigen = defect_eigens(model, &(basis * basis.adjoint()), h, tol);
    Ok(BeurlingReport { satisfied: min_eigen.iter().all(|e| e.psd), invariance_residual: inv, min_eigen })
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub gamma: MultiAnalyticOp,
    /// X on range G^{1/2} in the basis R.
    pub x: OperatorTuple,
    pub x_pure: bool,
    /// ‖X*C − C(S*⊗I)‖ for C = R*G^{1/2}.
    pub range_residual: f64,
    /// σ_max/σ_min of C.
    pub condition: f64,
    /// ‖ΓΓ* − G‖.
    pub factor_defect: f64,
}

#[derive(Clone, Debug)]
pub enum FactorizeOutcome {
    Factor(Box<Factorization>),
    Refused(LatticeEigen),
}

impl FactorizeOutcome {
    pub fn factor(&self) -> Option<&Factorization> {
        match self {
            Self::Factor(f) => Some(f),
            Self::Refused(_) => None,
        }
    }
}

/// Γ multi-analytic with ΓΓ* = G, or the first p with Δ^p(G) not PSD.
pub fn factorize_psd(model: &VarietyModel, g: &CMat, tol: &Tolerances) -> Result<FactorizeOutcome> {
    let h = slots(model, g.nrows())?;
    if spectral_norm(&(g - g.adjoint())) > 1e-12 * (1.0 + spectral_norm(g)) {
        return Err(Error::Input("operator is not Hermitian".into()));
    }
    if let Some(bad) = defect_eigens(model, g, h, tol).into_iter().find(|e| !e.psd) {
        return Ok(FactorizeOutcome::Refused(bad));
    }
    let (_, cmat) = root_on_range(g, tol.psd)?;
    let rho = cmat.nrows();
    let rows = g.nrows();
    let spec = model.spec();
    if rho == 0 {
        let gamma = MultiAnalyticOp::new(model, CMat::zeros(rows, 0), 0, h)?;
        let x = OperatorTuple { blocks: spec.n.iter().map(|&n| vec![CMat::zeros(0, 0); n]).collect(), dim: 0 };
        return Ok(FactorizeOutcome::Factor(Box::new(Factorization { gamma, x, x_pure: true, range_residual: 0.0, condition: 1.0, factor_defect: spectral_norm(g) })));
    }
    let sv = crate::linalg::singular_values(&cmat);
    let condition = sv[0] / sv[rho - 1];
    let mut range_residual = 0.0_f64;
    let blocks: Vec<Vec<CMat>> = ampliated(model, h)
        .iter()
        .map(|b| {
            b.iter()
                .map(|s| {
                    // X* C = C (S*⊗I), solved as C* X = (S⊗I) C*.
                    let rhs = s * cmat.adjoint();
                    let x = lstsq(&cmat.adjoint(), &rhs, RANGE_TOL);
                    range_residual = range_residual.max(spectral_norm(&(x.adjoint() * &cmat - &cmat * s.adjoint())));
                    x
                })
                .collect()
        })
        .collect();
    let x = OperatorTuple::unchecked(blocks)?;
    let x_pure = check_purity(spec, &x, 1 << 12, 1e-10) == Purity::Pure;
    let kx = constrained_kernel(model, &x, tol)?;
    let gamma_m = cmat.adjoint() * kx.k.adjoint();
    let factor_defect = spectral_norm(&(&gamma_m * gamma_m.adjoint() - g));
    let gamma = MultiAnalyticOp::new(model, gamma_m, kx.rd, h)?;
    Ok(FactorizeOutcome::Factor(Box::new(Factorization { gamma, x, x_pure, range_residual, condition, factor_defect })))
}

#[derive(Clone, Debug)]
pub struct CharFunctionData {
    pub kernel: BerezinKernelData,
    /// Δ^p(I − KK*) ⪰ 0 for every p ≤ m.
    pub exists: bool,
    pub violation: Option<LatticeEigen>,
    /// M_T on closure range (I − KK*)^{1/2}.
    pub m_tuple: Option<OperatorTuple>,
    pub theta: Option<MultiAnalyticOp>,
    /// ‖KK* + ΘΘ* − I‖.
    pub identity_defect: f64,
    pub factorization: Option<Factorization>,
}

/// Θ = (I − KK*)^{1/2} K_{M_T}* for the constrained kernel K of `t`.
pub fn characteristic_function(model: &VarietyModel, t: &OperatorTuple, tol: &Tolerances) -> Result<CharFunctionData> {
    let kernel = constrained_kernel(model, t, tol)?;
    let n = kernel.k.nrows();
    let g = identity(n) - &kernel.k * kernel.k.adjoint();
    match factorize_psd(model, &g, tol)? {
        FactorizeOutcome::Refused(bad) => Ok(CharFunctionData {
            kernel,
            exists: false,
            violation: Some(bad),
            m_tuple: None,
            theta: None,
            identity_defect: f64::NAN,
            factorization: None,
        }),
        FactorizeOutcome::Factor(f) => {
            let theta = f.gamma.clone();
            let identity_defect = spectral_norm(&(&kernel.k * kernel.k.adjoint() + &theta.m * theta.m.adjoint() - identity(n)));
            Ok(CharFunctionData {
                kernel,
                exists: true,
                violation: None,
                m_tuple: Some(f.x.clone()),
                theta: Some(theta),
                identity_defect,
                factorization: Some(*f),
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct PureModel {
    /// Orthonormal basis of H = (N⊗D) ⊖ range Θ.
    pub h_basis: CMat,
    pub g: OperatorTuple,
    /// U: ℂ^d → H in the basis `h_basis`.
    pub unitary: CMat,
    pub unitary_defect: f64,
    /// max ‖U T*_{i,j} − G*_{i,j} U‖.
    pub equivalence_residual: f64,
}

/// G_{i,j} = P_H (S_{i,j}⊗I)|_H for a pure tuple with inner Θ.
pub fn pure_model(model: &VarietyModel, t: &OperatorTuple, data: &CharFunctionData) -> Result<PureModel> {
    if check_purity(model.spec(), t, 1 << 12, 1e-10) != Purity::Pure {
        return Err(Error::Input("tuple is not pure".into()));
    }
    let theta = data.theta.as_ref().ok_or_else(|| Error::Input("no characteristic function".into()))?;
    if theta.idempotency_defect() > 1e-8 {
        return Err(Error::Numerical(format!("Θ is not inner: defect {:e}", theta.idempotency_defect())));
    }
    let n = data.kernel.k.nrows();
    let range_theta = range_basis(&theta.m, RANGE_TOL);
    let h_basis = orthogonal_complement(&range_theta, n);
    let rd = data.kernel.rd;
    let blocks: Vec<Vec<CMat>> = ampliated(model, rd).iter().map(|b| b.iter().map(|s| h_basis.adjoint() * s * &h_basis).collect()).collect();
    let g = OperatorTuple::unchecked(blocks)?;
    let unitary = h_basis.adjoint() * &data.kernel.k;
    let unitary_defect = spectral_norm(&(unitary.adjoint() * &unitary - identity(t.dim))).max(spectral_norm(&(&unitary * unitary.adjoint() - identity(h_basis.ncols()))));
    let mut res = 0.0_f64;
    for (tb, gb) in t.blocks.iter().zip(&g.blocks) {
        for (tij, gij) in tb.iter().zip(gb) {
            res = res.max(spectral_norm(&(&unitary * tij.adjoint() - gij.adjoint() * &unitary)));
        }
    }
    Ok(PureModel { h_basis, g, unitary, unitary_defect, equivalence_residual: res })
}

#[derive(Clone, Debug)]
pub struct DilationData {
    /// [K; Y^{1/2}] in the basis (N⊗D) ⊕ range Y^{1/2}.
    pub v: CMat,
    pub model_dim: usize,
    /// U on range Y^{1/2}; `None` when ‖Y‖ ≤ 1e-12.
    pub boundary: Option<OperatorTuple>,
    pub dilation_index: usize,
    pub isometry_defect: f64,
    /// max ‖V T*_{i,j} − W*_{i,j} V‖ for W = (S⊗I) ⊕ U.
    pub co_invariance: f64,
    /// ‖(id−Φ_k)⋯(id−Φ₁)(I)‖ on the boundary tuple.
    pub boundary_residual: f64,
    /// max over |α| ≤ 3 of ‖T_(α) − V* W_(α) V‖.
    pub reconstruction: f64,
    /// For pure tuples: whether span{(S_(α)⊗I)K ℂ^d} = N⊗D.
    pub minimal: Option<bool>,
    /// The dilating tuple W.
    pub dilating: OperatorTuple,
}

pub fn dilate(model: &VarietyModel, t: &OperatorTuple, tol: &Tolerances) -> Result<DilationData> {
    let spec = model.spec();
    let kernel = constrained_kernel(model, t, tol)?;
    let d = t.dim;
    let y = identity(d) - kernel.k.adjoint() * &kernel.k;
    let model_blocks = ampliated(model, kernel.rd);
    let (v, boundary) = if spectral_norm(&y) <= 1e-12 {
        (kernel.k.clone(), None)
    } else {
        let (_, cmat) = root_on_range(&y, tol.psd)?;
        // L C = C T*, solved as C* L* = T C*.
        let blocks: Vec<Vec<CMat>> = t.blocks.iter().map(|b| b.iter().map(|tij| lstsq(&cmat.adjoint(), &(tij * cmat.adjoint()), RANGE_TOL)).collect()).collect();
        (vstack(&kernel.k, &cmat), Some(OperatorTuple::unchecked(blocks)?))
    };
    let model_dim = kernel.k.nrows();
    let w_blocks: Vec<Vec<CMat>> = match &boundary {
        None => model_blocks.clone(),
        Some(u) => model_blocks.iter().zip(&u.blocks).map(|(sb, ub)| sb.iter().zip(ub).map(|(s, x)| direct_sum(s, x)).collect()).collect(),
    };
    let dilating = OperatorTuple { dim: v.nrows(), blocks: w_blocks };
    let isometry_defect = spectral_norm(&(v.adjoint() * &v - identity(d)));
    let mut co_invariance = 0.0_f64;
    for (tb, wb) in t.blocks.iter().zip(&dilating.blocks) {
        for (tij, wij) in tb.iter().zip(wb) {
            co_invariance = co_invariance.max(spectral_norm(&(&v * tij.adjoint() - wij.adjoint() * &v)));
        }
    }
    let boundary_residual = match &boundary {
        None => 0.0,
        Some(u) => spectral_norm(&CpMaps::new(spec, &u.blocks).defect(&vec![1; spec.k()], &identity(u.dim))),
    };
    let mut reconstruction = 0.0_f64;
    for alpha in low_degree_words(&spec.n, 3) {
        let lhs = t.multi_word(&alpha);
        let rhs = v.adjoint() * dilating.multi_word(&alpha) * &v;
        reconstruction = reconstruction.max(spectral_norm(&(lhs - rhs)));
    }
    let minimal = if boundary.is_none() {
        let hull = krylov_closure(&flat(&model_blocks), &kernel.k);
        Some(hull.ncols() == model_dim)
    } else {
        None
    };
    Ok(DilationData {
        v,
        model_dim,
        boundary,
        dilation_index: kernel.rd,
        isometry_defect,
        co_invariance,
        boundary_residual,
        reconstruction,
        minimal,
        dilating,
    })
}

#[derive(Clone, Debug)]
pub struct WoldReport {
    /// Orthonormal basis of K₀ = span{V_(α) Δ^m(I) K}.
    pub k0: CMat,
    pub multiplicity: usize,
    /// max ‖(I−P)V_{i,j}P‖, ‖P V_{i,j}(I−P)‖ for P onto K₀.
    pub reducing_residual: f64,
    /// ‖(id−Φ_k)⋯(id−Φ₁)(I)‖ for V compressed to K₀^⊥.
    pub degenerate_residual: f64,
}

pub fn wold_decompose(spec: &DomainSpec, v: &OperatorTuple, tol: &Tolerances) -> Result<WoldReport> {
    let d = v.dim;
    let maps = CpMaps::new(spec, &v.blocks);
    let delta = maps.defect(&spec.m, &identity(d));
    let multiplicity = crate::linalg::numerical_rank(&delta, tol.rank);
    let ops = flat(&v.blocks);
    let k0 = if multiplicity == 0 { CMat::zeros(d, 0) } else { krylov_closure(&ops, &delta) };
    let p = &k0 * k0.adjoint();
    let q = identity(d) - &p;
    let reducing_residual = ops.iter().fold(0.0_f64, |w, a| w.max(spectral_norm(&(&q * a * &p))).max(spectral_norm(&(&p * a * &q))));
    let k1 = orthogonal_complement(&k0, d);
    let degenerate_residual = if k1.ncols() == 0 {
        0.0
    } else {
        let blocks: Vec<Vec<CMat>> = v.blocks.iter().map(|b| b.iter().map(|a| k1.adjoint() * a * &k1).collect()).collect();
        spectral_norm(&CpMaps::new(spec, &blocks).defect(&vec![1; spec.k()], &identity(k1.ncols())))
    };
    Ok(WoldReport { k0, multiplicity, reducing_residual, degenerate_residual })
}

#[derive(Clone, Debug)]
pub struct CoincidenceResult {
    pub coincide: bool,
    pub residual: f64,
    /// Partial isometries between the input and output supports.
    pub tau1: Option<CMat>,
    pub tau2: Option<CMat>,
    pub reason: Option<String>,
}

/// Unitary factor of `x`.
fn polar(x: &CMat) -> CMat {
    procrustes_unitary(&x.adjoint())
}

/// τ minimizing ‖(I⊗τ)A − B‖ over unitaries on ℂ^h.
fn slot_procrustes(a: &CMat, b: &CMat, h: usize) -> CMat {
    let r = a.nrows() / h.max(1);
    let mut cm = CMat::zeros(h, h);
    for n in 0..r {
        for k in 0..h {
            for kp in 0..h {
                let mut acc = c(0.0);
                for col in 0..a.ncols() {
                    acc += a[(n * h + kp, col)] * b[(n * h + k, col)].conj();
                }
                cm[(kp, k)] += acc;
            }
        }
    }
    procrustes_unitary(&cm)
}

fn coincidence_residual(p1: &CMat, p2: &CMat, t1: &CMat, t2: &CMat, r: usize) -> f64 {
    spectral_norm(&(p2 * kron(&identity(r), t1) - kron(&identity(r), t2) * p1))
}

/// Pairs (τ₁, τ₂) solving Θ₂(I⊗τ₁) = (I⊗τ₂)Θ₁ linearly, as a basis of solutions.
fn intertwiner_pairs(p1: &CMat, p2: &CMat, a: usize, b: usize, r: usize) -> Vec<(CMat, CMat)> {
    let rows = p2.nrows() * p2.ncols();
    let mut sys = CMat::zeros(rows, a * a + b * b);
    let eye = identity(r);
    let mut col = 0;
    for i in 0..a {
        for j in 0..a {
            let mut e = CMat::zeros(a, a);
            e[(i, j)] = c(1.0);
            let img = p2 * kron(&eye, &e);
            sys.set_column(col, &CMat::from_column_slice(rows, 1, img.as_slice()).column(0));
            col += 1;
        }
    }
    for i in 0..b {
        for j in 0..b {
            let mut e = CMat::zeros(b, b);
            e[(i, j)] = c(1.0);
            let img = -(kron(&eye, &e) * p1);
            sys.set_column(col, &CMat::from_column_slice(rows, 1, img.as_slice()).column(0));
            col += 1;
        }
    }
    let ns = null_space(&sys, 1e-10);
    (0..ns.ncols())
        .map(|k| {
            let v = ns.column(k);
            let t1 = CMat::from_fn(a, a, |i, j| v[i * a + j]);
            let t2 = CMat::from_fn(b, b, |i, j| v[a * a + i * b + j]);
            (t1, t2)
        })
        .collect()
}

/// Whether Θ₂(I⊗τ₁) = (I⊗τ₂)Θ₁ for unitaries τ between supports. Seeds come
/// from the linear intertwiner space, refined by alternating polar factors
/// (≤ 200 sweeps), with 10 seeded random restarts.
pub fn coincidence_check(model_dim: usize, theta1: &MultiAnalyticOp, theta2: &MultiAnalyticOp, seed: u64) -> CoincidenceResult {
    let r = model_dim;
    let fail = |reason: String| CoincidenceResult { coincide: false, residual: f64::INFINITY, tau1: None, tau2: None, reason: Some(reason) };
    let out1 = slot_support(&range_basis(&theta1.m, RANGE_TOL), theta1.output_slots);
    let out2 = slot_support(&range_basis(&theta2.m, RANGE_TOL), theta2.output_slots);
    let (in1, in2) = (&theta1.support, &theta2.support);
    if in1.ncols() != in2.ncols() || out1.ncols() != out2.ncols() {
        return fail(format!("support dimensions differ: ({}, {}) vs ({}, {})", in1.ncols(), out1.ncols(), in2.ncols(), out2.ncols()));
    }
    let (a, b) = (in1.ncols(), out1.ncols());
    let eye = identity(r);
    let p1 = kron(&eye, &out1).adjoint() * &theta1.m * kron(&eye, in1);
    let p2 = kron(&eye, &out2).adjoint() * &theta2.m * kron(&eye, in2);
    let lift = |t1: &CMat, t2: &CMat, res: f64| CoincidenceResult {
        coincide: true,
        residual: res,
        tau1: Some(in2 * t1 * in1.adjoint()),
        tau2: Some(&out2 * t2 * out1.adjoint()),
        reason: None,
    };
    if a == 0 && b == 0 {
        return lift(&CMat::zeros(0, 0), &CMat::zeros(0, 0), 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let refine = |mut t1: CMat, mut t2: CMat| {
        let mut res = coincidence_residual(&p1, &p2, &t1, &t2, r);
        for _ in 0..200 {
            if res <= 1e-12 {
                break;
            }
            t2 = slot_procrustes(&p1, &(&p2 * kron(&eye, &t1)), b);
            let q = kron(&eye, &t2) * &p1;
            t1 = slot_procrustes(&p2.adjoint(), &q.adjoint(), a).adjoint();
            let next = coincidence_residual(&p1, &p2, &t1, &t2, r);
            let stalled = (res - next).abs() <= 1e-14 * (1.0 + res);
            res = next;
            if stalled {
                break;
            }
        }
        (t1, t2, res)
    };
    let pairs = intertwiner_pairs(&p1, &p2, a, b, r);
    let mut best = (identity(a), identity(b), f64::INFINITY);
    let mut starts: Vec<(CMat, CMat)> = vec![(identity(a), identity(b))];
    for attempt in 0..10 {
        if !pairs.is_empty() {
            let mut t1 = CMat::zeros(a, a);
            let mut t2 = CMat::zeros(b, b);
            for (x1, x2) in &pairs {
                let w = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                t1 += x1 * w;
                t2 += x2 * w;
            }
            starts.push((polar(&t1), polar(&t2)));
        }
        if attempt > 0 || pairs.is_empty() {
            starts.push((crate::fixtures::random_unitary(&mut rng, a), crate::fixtures::random_unitary(&mut rng, b)));
        }
    }
    for (t1, t2) in starts {
        let (t1, t2, res) = refine(t1, t2);
        if res < best.2 {
            best = (t1, t2, res);
        }
        if best.2 <= 1e-8 {
            break;
        }
    }
    if best.2 <= 1e-8 {
        lift(&best.0, &best.1, best.2)
    } else {
        CoincidenceResult { coincide: false, residual: best.2, tau1: None, tau2: None, reason: Some("no unitary pair found".into()) }
    }
}

/// A unitary U with U T_{i,j} U* = T'_{i,j} for all (i,j), found from the
/// joint intertwiner space of {T, T*} and {T', T'*}.
pub fn unitary_equivalence(t1: &OperatorTuple, t2: &OperatorTuple, seed: u64) -> Option<CMat> {
    let d = t1.dim;
    if t2.dim != d {
        return None;
    }
    if d == 0 {
        return Some(CMat::zeros(0, 0));
    }
    let pairs: Vec<(CMat, CMat)> = flat(&t1.blocks).into_iter().zip(flat(&t2.blocks)).flat_map(|(a, b)| [(a.clone(), b.clone()), (a.adjoint(), b.adjoint())]).collect();
    let mut sys = CMat::zeros(pairs.len() * d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(i, j)] = c(1.0);
            let col = i * d + j;
            for (k, (a, b)) in pairs.iter().enumerate() {
                let img = &e * a - b * &e;
                for (idx, z) in img.iter().enumerate() {
                    sys[(k * d * d + idx, col)] = *z;
                }
            }
        }
    }
    let ns = null_space(&sys, 1e-10);
    if ns.ncols() == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let mut x = CMat::zeros(d, d);
        for k in 0..ns.ncols() {
            let w = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            x += CMat::from_fn(d, d, |i, j| ns[(i * d + j, k)]) * w;
        }
        let u = polar(&x);
        let res = pairs.iter().step_by(2).fold(0.0_f64, |w, (a, b)| w.max(spectral_norm(&(&u * a * u.adjoint() - b))));
        if res <= 1e-9 {
            return Some(u);
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankOneReport {
    pub same_subspace: bool,
    pub unitarily_equivalent: bool,
    pub agree: bool,
    pub defect_ranks: [usize; 2],
}

/// Compresses S to two co-invariant subspaces of N and compares subspace
/// equality with a direct unitary-equivalence search.
pub fn rank_one_classify(model: &VarietyModel, m1: &CMat, m2: &CMat, tol: &Tolerances) -> Result<RankOneReport> {
    let adj = flat_adjoint(&model.s);
    for m in [m1, m2] {
        let inv = invariance_residual(&adj, m);
        if inv > 1e-10 {
            return Err(Error::Input(format!("subspace is not co-invariant: residual {inv:e}")));
        }
    }
    let compress = |m: &CMat| OperatorTuple {
        blocks: model.s.iter().map(|b| b.iter().map(|s| m.adjoint() * s * m).collect()).collect(),
        dim: m.ncols(),
    };
    let (t1, t2) = (compress(m1), compress(m2));
    let spec = model.spec();
    let rank = |t: &OperatorTuple| crate::linalg::numerical_rank(&CpMaps::new(spec, &t.blocks).defect(&spec.m, &identity(t.dim)), tol.rank);
    let same_subspace = subspace_distance(m1, m2) <= 1e-10;
    let unitarily_equivalent = unitary_equivalence(&t1, &t2, 0).is_some();
    Ok(RankOneReport { same_subspace, unitarily_equivalent, agree: same_subspace == unitarily_equivalent, defect_ranks: [rank(&t1), rank(&t2)] })
}

#[derive(Clone, Debug)]
pub struct CyclicHull {
    /// E = (P_C⊗I)M as a subspace of ℂ^h.
    pub e: CMat,
    /// span{(S_(β)⊗I)M} within the caps.
    pub hull: CMat,
    /// Distance between the hull and N⊗E.
    pub distance: f64,
}

/// The hull of a co-invariant M ⊂ N⊗ℂ^h; `co_tol` bounds ‖(I−P_M)(S*⊗I)P_M‖.
pub fn cyclic_hull(model: &VarietyModel, m: &CMat, co_tol: f64) -> Result<CyclicHull> {
    if !model.vacuum_in_n {
        return Err(Error::Input("the vacuum is not in N".into()));
    }
    let h = slots(model, m.nrows())?;
    let amp = ampliated(model, h);
    let inv = invariance_residual(&flat_adjoint(&amp), m);
    if inv > co_tol {
        return Err(Error::Input(format!("subspace is not co-invariant: residual {inv:e}")));
    }
    let vac = model.vacuum();
    let lift = kron(&CMat::from_column_slice(vac.len(), 1, vac.as_slice()), &identity(h));
    let e = range_basis(&(lift.adjoint() * m), RANGE_TOL);
    let hull = krylov_closure(&flat(&amp), m);
    let target = kron(&identity(model.dim()), &e);
    Ok(CyclicHull { distance: subspace_distance(&hull, &target), e, hull })
}

/// Invariant subspace generated by `vectors` (columns) under S⊗I.
pub fn invariant_hull(model: &VarietyModel, vectors: &CMat) -> Result<CMat> {
    let h = slots(model, vectors.nrows())?;
    Ok(krylov_closure(&flat(&ampliated(model, h)), vectors))
}

/// Invariant subspaces of the model (h = 1) whose Δ^p(P_M) fails to be PSD:
/// the tails span{e_β : |β| ≥ s} for each cut s, then `random` cyclic
/// subspaces from seeded vectors.
pub fn beurling_search(model: &VarietyModel, random: usize, seed: u64, tol: &Tolerances) -> Result<Vec<(CMat, BeurlingReport)>> {
    let w = &model.w;
    let dim = w.dim();
    let max_deg = (0..dim).map(|i| w.basis.total_degree(i)).max().unwrap_or(0);
    let mut candidates = Vec::new();
    for s in 1..=max_deg {
        let cols: Vec<usize> = (0..dim).filter(|&i| w.basis.total_degree(i) >= s).collect();
        let amb = CMat::from_fn(dim, cols.len(), |r, c2| if r == cols[c2] { c(1.0) } else { c(0.0) });
        let restricted = range_basis(&(model.basis_n.adjoint() * amb), RANGE_TOL);
        if restricted.ncols() > 0 {
            candidates.push(invariant_hull(model, &restricted)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let v = crate::fixtures::random_vector(&mut rng, model.dim());
        let low = (&model.s[0][0] * &v).normalize();
        candidates.push(invariant_hull(model, &CMat::from_column_slice(low.len(), 1, low.as_slice()))?);
    }
    let mut out = Vec::new();
    for m in candidates {
        let rep = beurling_criterion(model, &m, tol)?;
        if !rep.satisfied {
            out.push((m, rep));
        }
    }
    Ok(out)
}
