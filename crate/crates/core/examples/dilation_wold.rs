// Dilations: a pure pair dilates into copies of the model, the identity
// scalar into its boundary part; Wold recovers the multiplicity.

use ncvariety::fixtures::random_commuting_member;
use ncvariety::fock::TruncationGrid;
use ncvariety::linalg::{CMat, C64};
use ncvariety::modeltheory::{dilate, wold_decompose};
use ncvariety::ncalg::DomainSpec;
use ncvariety::polydomain::{check_membership, OperatorTuple, Tolerances};
use ncvariety::variety::{build_ideal_subspace, IdealSpec};
use rand::SeedableRng;

pub fn run() -> ncvariety::Result<()> {
    let tol = Tolerances::default();
    let spec = DomainSpec::ball(2, 1);
    let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![3]), &IdealSpec::qc(&[2]))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let t = random_commuting_member(&mut rng, &spec, 3);
    let dd = dilate(&model, &t, &tol)?;
    let wold = wold_decompose(&spec, &dd.dilating, &tol)?;
    println!(
        "pure pair: defect rank {}, dilation index {}, minimal {:?}, Wold multiplicity {}",
        check_membership(&spec, &t, &tol).defect_rank,
        dd.dilation_index,
        dd.minimal,
        wold.multiplicity
    );

    let disc = build_ideal_subspace(&DomainSpec::ball(1, 1), &TruncationGrid::new(vec![3]), &IdealSpec::zero())?;
    let one = OperatorTuple::new(vec![vec![CMat::from_element(1, 1, C64::new(1.0, 0.0))]], tol.comm)?;
    let dd = dilate(&disc, &one, &tol)?;
    println!("identity scalar: dilation index {}, boundary residual {:.1e}", dd.dilation_index, dd.boundary_residual);
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
