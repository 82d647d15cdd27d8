// The commutative variety inside the Drury–Arveson model: N_Q versus the
// span of symmetric tensors.

use ncvariety::fock::TruncationGrid;
use ncvariety::linalg::{orthonormalize_columns, subspace_distance, CVec};
use ncvariety::ncalg::DomainSpec;
use ncvariety::polydomain::Tolerances;
use ncvariety::variety::{build_ideal_subspace, symmetric_basis_on, verify_model, IdealSpec};

pub fn run() -> ncvariety::Result<()> {
    let spec = DomainSpec::drury_arveson(2);
    let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![4]), &IdealSpec::qc(&[2]))?;
    println!("ambient {}, dim N {}", model.w.dim(), model.dim());
    let sym: Vec<CVec> = symmetric_basis_on(&model.w).into_iter().map(|s| s.vector).collect();
    let span = orthonormalize_columns(&sym, 1e-12);
    println!("distance to symmetric span {:e}", subspace_distance(&span, &model.basis_n));
    let rep = verify_model(&model, &Tolerances::default());
    println!("co-invariance {:e}, defect identity {:e}, passed {}", rep.co_invariance, rep.defect_identity, rep.passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
