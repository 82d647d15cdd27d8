// The truncated weighted shifts of a two-block polydomain and their defect.

use ncvariety::fock::{build_universal_model, vacuum_projection, TruncationGrid};
use ncvariety::ncalg::DomainSpec;
use ncvariety::operator::LinOp;
use ncvariety::polydomain::{check_membership_generic, CpMaps, Tolerances};

pub fn run() -> ncvariety::Result<()> {
    let spec = DomainSpec::polyball(&[2, 1], &[1, 2]);
    let w = build_universal_model(&spec, &TruncationGrid::new(vec![3, 4]));
    println!("dimension {} (sparse: {})", w.dim(), w.ops[0][0].is_sparse());
    let comm = w.ops[0][0].mul(&w.ops[1][0]).sub(&w.ops[1][0].mul(&w.ops[0][0])).max_abs();
    println!("cross-block commutator {comm:e}");
    let maps = CpMaps::new(&spec, &w.ops);
    let top = maps.defect_lattice(&spec.m, &w.ops[0][0].eye_like()).pop().expect("lattice contains m").1;
    println!("defect minus vacuum projection {:e}", top.sub(&vacuum_projection(&w.basis)).max_abs());
    let rep = check_membership_generic(&spec, &w.ops, &Tolerances::default());
    println!("member {}, pure {:?}, defect rank {}", rep.is_member, rep.is_pure, rep.defect_rank);
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
