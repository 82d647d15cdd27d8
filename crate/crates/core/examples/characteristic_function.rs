// Characteristic functions: the shift pattern at T = 0, a pure member and
// the pure model that recovers it.

use ncvariety::fixtures::random_commuting_member;
use ncvariety::fock::TruncationGrid;
use ncvariety::linalg::diff_norm;
use ncvariety::modeltheory::{characteristic_function, pure_model};
use ncvariety::ncalg::DomainSpec;
use ncvariety::polydomain::{OperatorTuple, Tolerances};
use ncvariety::variety::{build_ideal_subspace, IdealSpec};
use rand::SeedableRng;

pub fn run() -> ncvariety::Result<()> {
    let tol = Tolerances::default();
    let disc = build_ideal_subspace(&DomainSpec::ball(1, 1), &TruncationGrid::new(vec![3]), &IdealSpec::zero())?;
    let zero = characteristic_function(&disc, &OperatorTuple::zeros(&[1], 1), &tol)?;
    let theta = zero.theta.expect("exists for m = 1");
    let phase = theta.m[(1, 0)];
    println!("T = 0: Θ = phase·S with |phase| = {:.3}, residual {:.1e}", phase.norm(), diff_norm(&theta.m, &(&disc.s[0][0] * phase)));

    let spec = DomainSpec::ball(2, 1);
    let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![3]), &IdealSpec::qc(&[2]))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let t = random_commuting_member(&mut rng, &spec, 3);
    let data = characteristic_function(&model, &t, &tol)?;
    let theta = data.theta.as_ref().expect("exists for m = 1");
    println!("random pair: KK* + ΘΘ* - I {:.1e}, Θ*Θ idempotency {:.1e}", data.identity_defect, theta.idempotency_defect());
    let pm = pure_model(&model, &t, &data)?;
    println!("pure model dimension {}, equivalence residual {:.1e}", pm.h_basis.ncols(), pm.equivalence_residual);
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
