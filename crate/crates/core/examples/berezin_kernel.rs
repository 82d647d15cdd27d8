// Berezin kernel of a nilpotent commuting pair and the identities it satisfies.

use ncvariety::berezin::{berezin_report, radial_transform};
use ncvariety::fixtures::random_commuting_member;
use ncvariety::fock::TruncationGrid;
use ncvariety::linalg::{diff_norm, C64};
use ncvariety::ncalg::DomainSpec;
use ncvariety::polydomain::Tolerances;
use ncvariety::variety::{build_ideal_subspace, IdealSpec};
use rand::SeedableRng;

pub fn run() -> ncvariety::Result<()> {
    let spec = DomainSpec::ball(2, 2);
    let tol = Tolerances::default();
    let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![4]), &IdealSpec::qc(&[2]))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let t = random_commuting_member(&mut rng, &spec, 4);
    let rep = berezin_report(&model, &t, 3, &tol)?;
    println!("defect rank {}, truncation residual {:e}", rep.rd, rep.truncation_residual);
    println!("K*K - I {:.1e}, intertwining {:.1e}, reconstruction {:.1e}, range {:.1e}", rep.isometry_defect, rep.intertwining, rep.reconstruction, rep.range_defect);
    let r = 0.5;
    let b = radial_transform(&model, &t, &model.s[0][1], r, &tol)?;
    println!("B_rT[S_2] - rT_2 = {:.1e}", diff_norm(&b, &(&t.blocks[0][1] * C64::new(r, 0.0))));
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
