// Membership, purity and defect rank of a few tuples in the unit ball of B(ℂ²)².

use ncvariety::fixtures::{membership_radius, random_commuting_member};
use ncvariety::linalg::{CMat, C64};
use ncvariety::ncalg::DomainSpec;
use ncvariety::polydomain::{check_membership, check_purity, OperatorTuple, Tolerances};
use rand::SeedableRng;

pub fn run() -> ncvariety::Result<()> {
    let spec = DomainSpec::ball(2, 1);
    let tol = Tolerances::default();
    let mut e12 = CMat::zeros(2, 2);
    e12[(0, 1)] = C64::new(1.0, 0.0);
    let shift = OperatorTuple::new(vec![vec![e12, CMat::zeros(2, 2)]], tol.comm)?;
    let scalar = OperatorTuple::new(vec![vec![CMat::from_element(1, 1, C64::new(0.6, 0.0)), CMat::from_element(1, 1, C64::new(0.0, 0.8))]], tol.comm)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let random = random_commuting_member(&mut rng, &spec, 3);
    for (name, t) in [("E12 pair", &shift), ("boundary scalar", &scalar), ("random nilpotent", &random)] {
        let rep = check_membership(&spec, t, &tol);
        println!(
            "{name}: member {}, purity {:?} (iterated {:?}), defect rank {}, radius {:.4}",
            rep.is_member,
            rep.is_pure,
            check_purity(&spec, t, 1 << 12, 1e-10),
            rep.defect_rank,
            membership_radius(&spec, t)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
