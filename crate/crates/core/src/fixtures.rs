//! Seeded random fixtures: matrices, unitaries, nilpotent domain members and
//! scalar points. Shared by tests, examples and the command line.

use rand::Rng;

use crate::linalg::{CMat, C64};
use crate::ncalg::DomainSpec;
use crate::polydomain::{check_membership, OperatorTuple, Tolerances};
use crate::variety::VarietyModel;

fn unit(rng: &mut impl Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut impl Rng, d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| unit(rng))
}

pub fn random_vector(rng: &mut impl Rng, d: usize) -> crate::linalg::CVec {
    crate::linalg::CVec::from_fn(d, |_, _| unit(rng))
}

/// Strictly upper triangular with random entries.
pub fn random_nilpotent(rng: &mut impl Rng, d: usize) -> CMat {
    CMat::from_fn(d, d, |r, c| if c > r { unit(rng) } else { C64::new(0.0, 0.0) })
}

/// Unitary factor of a random matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> CMat {
    let qr = random_matrix(rng, d).qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix column phases so the distribution does not depend on QR sign choices.
    let phases = CMat::from_fn(d, d, |i, j| if i == j { r[(i, i)] / r[(i, i)].norm() } else { C64::new(0.0, 0.0) });
    q * phases
}

/// Largest `r` (up to 1e6) with `r·T` a member, by bisection.
pub fn membership_radius(spec: &DomainSpec, t: &OperatorTuple) -> f64 {
    let tol = Tolerances::default();
    let member = |r: f64| check_membership(spec, &crate::polydomain::scale_tuple(t, r), &tol).is_member;
    let mut hi = 1.0;
    while member(hi) && hi < 1e6 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if member(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Rescales a nonzero nilpotent tuple to a random fraction in [0.3, 0.95]
/// of its membership radius.
fn scale_into(rng: &mut impl Rng, spec: &DomainSpec, t: OperatorTuple) -> OperatorTuple {
    let r = membership_radius(spec, &t);
    crate::polydomain::scale_tuple(&t, r * rng.random_range(0.3..0.95))
}

/// Commuting nilpotent member: every T_{i,j} is a random polynomial without
/// constant term in one strictly upper triangular matrix.
pub fn random_commuting_member(rng: &mut impl Rng, spec: &DomainSpec, d: usize) -> OperatorTuple {
    let n = random_nilpotent(rng, d);
    let mut powers = vec![n.clone()];
    for _ in 1..d {
        let next = powers.last().unwrap() * &n;
        powers.push(next);
    }
    let blocks = spec
        .n
        .iter()
        .map(|&ni| {
            (0..ni)
                .map(|_| powers.iter().fold(CMat::zeros(d, d), |acc, p| acc + p * unit(rng)))
                .collect()
        })
        .collect();
    scale_into(rng, spec, OperatorTuple::unchecked(blocks).expect("square blocks"))
}

/// Nilpotent member whose block `i` acts on tensor factor `i` of
/// ℂ^{dims[0]}⊗⋯⊗ℂ^{dims[k−1]} by independent strictly upper triangular
/// matrices; blocks commute, letters within a block need not.
pub fn random_tensor_member(rng: &mut impl Rng, spec: &DomainSpec, dims: &[usize]) -> OperatorTuple {
    assert_eq!(dims.len(), spec.k());
    let blocks = (0..spec.k())
        .map(|i| {
            (0..spec.n[i])
                .map(|_| {
                    let local = random_nilpotent(rng, dims[i]);
                    dims.iter().enumerate().fold(CMat::identity(1, 1), |acc, (f, &df)| {
                        if f == i {
                            acc.kronecker(&local)
                        } else {
                            acc.kronecker(&CMat::identity(df, df))
                        }
                    })
                })
                .collect()
        })
        .collect();
    scale_into(rng, spec, OperatorTuple::unchecked(blocks).expect("square blocks"))
}

/// Point with q_i(λ_i λ̄_i) uniform-ish in [0, `reach`] for every block.
pub fn random_strict_point(rng: &mut impl Rng, spec: &DomainSpec, reach: f64) -> Vec<Vec<C64>> {
    spec.q
        .iter()
        .map(|q| {
            let dir: Vec<C64> = (0..q.n).map(|_| unit(rng)).collect();
            let target = reach * rng.random_range(0.0..1.0f64);
            // q(tλ, tλ̄) is increasing in t; bisect for the target level.
            let level = |t: f64| {
                let z: Vec<C64> = dir.iter().map(|x| x * t).collect();
                q.eval_pairing(&z, &z).re
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            while level(hi) < target {
                hi *= 2.0;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if level(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            dir.iter().map(|x| x * lo).collect()
        })
        .collect()
}

/// Compression of the model to the S*-invariant hull of a random vector of
/// total degree `depth`: a nilpotent member of the model's variety. Hull
/// vectors are orthonormalized one degree at a time, so the compressed blocks
/// vanish exactly off adjacent degrees.
pub fn random_model_compression(rng: &mut impl Rng, model: &VarietyModel, depth: usize) -> OperatorTuple {
    let basis = &model.w.basis;
    let degree: Vec<usize> = (0..model.dim())
        .map(|col| {
            let i = (0..basis.dim()).find(|&i| model.basis_n[(i, col)].norm() > 0.0).expect("nonzero basis column");
            basis.total_degree(i)
        })
        .collect();
    let top = depth.min(degree.iter().copied().max().unwrap_or(0));
    let seed = crate::linalg::CVec::from_fn(model.dim(), |i, _| if degree[i] == top { unit(rng) } else { C64::new(0.0, 0.0) });
    let adjoints: Vec<CMat> = model.s.iter().flatten().map(|s| s.adjoint()).collect();
    let mut cols: Vec<crate::linalg::CVec> = Vec::new();
    let mut level = vec![seed];
    while !level.is_empty() {
        let q = crate::linalg::orthonormalize_columns(&level, 1e-12);
        level = Vec::new();
        for c in 0..q.ncols() {
            let v = q.column(c).into_owned();
            level.extend(adjoints.iter().map(|a| a * &v));
            cols.push(v);
        }
    }
    let mut m = CMat::zeros(model.dim(), cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    let blocks = model.s.iter().map(|b| b.iter().map(|s| m.adjoint() * s * &m).collect()).collect();
    OperatorTuple { blocks, dim: m.ncols() }
}
