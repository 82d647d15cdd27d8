// Kernel vectors of the bidisc model: eigenvector residuals, Gram positivity
// and convergence of the truncated kernel.

use ncvariety::fixtures::random_strict_point;
use ncvariety::fock::TruncationGrid;
use ncvariety::ncalg::DomainSpec;
use ncvariety::rkhs::{gram_matrix, kernel_tail_bound, kernel_value, truncated_kernel, verify_eigen, ScalarPoint};
use ncvariety::variety::{build_ideal_subspace, IdealSpec};
use rand::SeedableRng;

pub fn run() -> ncvariety::Result<()> {
    let spec = DomainSpec::polydisc(2);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<ScalarPoint> = (0..6).map(|_| ScalarPoint::new(&spec, random_strict_point(&mut rng, &spec, 0.7))).collect::<ncvariety::Result<_>>()?;
    let gram = gram_matrix(&spec, &pts, 1e-9)?;
    println!("Gram min eigenvalue {:.3e}, psd {}", gram.min_eigen, gram.psd);
    let exact = kernel_value(&spec, &pts[1], &pts[0])?;
    for d in [2, 4, 6, 8] {
        let model = build_ideal_subspace(&spec, &TruncationGrid::new(vec![d, d]), &IdealSpec::zero())?;
        let err = (truncated_kernel(&model, &pts[1], &pts[0])? - exact).norm();
        let bound = kernel_tail_bound(&spec, &[d, d], &pts[1], &pts[0])?;
        let eig = verify_eigen(&model, &pts[0])?;
        let dev = eig.iter().fold(0.0_f64, |a, r| a.max((r.residual - r.closed_form).abs()));
        println!("D = {d}: kernel error {err:.3e} <= {bound:.3e}, eigen closed-form deviation {dev:.1e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> ncvariety::Result<()> {
    run()
}
