// Invariant subspaces: factorization on the Hardy-type disc, and the
// subspaces of the Bergman-type disc that admit none.

use ncvariety::fock::TruncationGrid;
use ncvariety::linalg::{CMat, C64};
use ncvariety::modeltheory::{beurling_search, factorize_psd, invariant_hull, FactorizeOutcome};
use ncvariety::ncalg::DomainSpec;
use ncvariety::polydomain::Tolerances;
use ncvariety::variety::{build_ideal_subspace, IdealSpec};

pub fn run() -> ncvariety::Result<()> {
    let tol = Tolerances::default();
    for (name, m) in [("Hardy", 1), ("Bergman", 2)] {
        let model = build_ideal_subspace(&DomainSpec::ball(1, m), &TruncationGrid::new(vec![4]), &IdealSpec::zero())?;
        let seed = CMat::from_fn(model.dim(), 1, |i, _| if i >= 1 { C64::new(1.0 / (i + 1) as f64, 0.0) } else { C64::new(0.0, 0.0) });
        let sub = invariant_hull(&model, &seed)?;
        match factorize_psd(&model, &(&sub * sub.adjoint()), &tol)? {
            FactorizeOutcome::Factor(f) => println!("{name}: dim M = {}, factor defect {:.1e}, input slots {}", sub.ncols(), f.factor_defect, f.gamma.input_slots),
            FactorizeOutcome::Refused(e) => println!("{name}: dim M = {}, refused at p = {:?} with eigenvalue {:.4}", sub.ncols(), e.p, e.min_eigen),
        }
        let found = beurling_search(&model, 5, 1, &tol)?;
        println!("{name}: search finds {} violating subspaces", found.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
