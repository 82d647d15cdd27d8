// Unitary invariance: twisted copies of a characteristic function coincide,
// functions with different slot counts do not.

use ncvariety::fixtures::{random_commuting_member, random_unitary};
use ncvariety::fock::TruncationGrid;
use ncvariety::linalg::{identity, kron};
use ncvariety::modeltheory::{characteristic_function, coincidence_check, MultiAnalyticOp};
use ncvariety::ncalg::DomainSpec;
use ncvariety::polydomain::{OperatorTuple, Tolerances};
use ncvariety::variety::{build_ideal_subspace, IdealSpec};
use rand::SeedableRng;

pub fn run() -> ncvariety::Result<()> {
    let tol = Tolerances::default();
    let spec = DomainSpec::ball(2, 1);
    let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![3]), &IdealSpec::qc(&[2]))?;
    let r = model.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let t = random_commuting_member(&mut rng, &spec, 3);
    let theta = characteristic_function(&model, &t, &tol)?.theta.expect("exists for m = 1");
    let u = random_unitary(&mut rng, theta.output_slots);
    let v = random_unitary(&mut rng, theta.input_slots);
    let twisted = kron(&identity(r), &u) * &theta.m * kron(&identity(r), &v).adjoint();
    let twisted = MultiAnalyticOp::new(&model, twisted, theta.input_slots, theta.output_slots)?;
    let res = coincidence_check(r, &theta, &twisted, 0);
    println!("twisted copy: coincide {}, residual {:.1e}", res.coincide, res.residual);
    let zero = characteristic_function(&model, &OperatorTuple::zeros(&[2], 1), &tol)?.theta.expect("exists for m = 1");
    let res = coincidence_check(r, &zero, &theta, 0);
    println!("T = 0 versus the pair: coincide {}, reason {:?}", res.coincide, res.reason);
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
