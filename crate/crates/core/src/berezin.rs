//! Berezin kernels K h = Σ_β √b_β e_β ⊗ Δ^{1/2} T*_(β) h, their constrained
//! compressions and the transforms g ↦ K*(g⊗I)K.
//!
//! Rows are indexed by model_index·rd + defect_index, so the model factor of
//! an ampliation A⊗I is `A.kronecker(I_rd)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::UniversalModel;
use crate::linalg::{ampliate, herm_eigen, identity, spectral_norm, CMat, C64};
use crate::ncalg::{b_table, word_at, word_count};
use crate::polydomain::{CpMaps, OperatorTuple, Tolerances};
use crate::variety::VarietyModel;

#[derive(Clone, Debug)]
pub struct BerezinKernelData {
    /// Kernel into the model space (N_Q when constrained) ⊗ ℂ^{rd}.
    pub k: CMat,
    /// Kernel into the full capped Fock space ⊗ ℂ^{rd}.
    pub k_free: CMat,
    pub defect: CMat,
    pub defect_root: CMat,
    /// Orthonormal basis of range Δ^m(I), d × rd.
    pub defect_basis: CMat,
    pub rd: usize,
    pub truncation_residual: f64,
    pub constrained: bool,
}

impl BerezinKernelData {
    pub fn model_dim(&self) -> usize {
        self.k.nrows() / self.rd.max(1)
    }

    /// ‖K*K − I‖.
    pub fn isometry_defect(&self) -> f64 {
        spectral_norm(&(self.k.adjoint() * &self.k - identity(self.k.ncols())))
    }
}

/// Free kernel of `t` on the capped Fock space of `w`.
pub fn berezin_kernel(w: &UniversalModel, t: &OperatorTuple, tol: &Tolerances) -> Result<BerezinKernelData> {
    let spec = &w.spec;
    let d = t.dim;
    let k = spec.k();
    let maps = CpMaps::new(spec, &t.blocks);
    let defect = maps.defect(&spec.m, &identity(d));
    let (vals, vecs) = herm_eigen(&defect);
    let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -tol.psd * (1.0 + scale) {
        return Err(Error::NotPsd { min_eig: min });
    }
    let roots: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let defect_root = &vecs * CMat::from_diagonal(&crate::linalg::CVec::from_iterator(d, roots.iter().map(|&r| C64::new(r, 0.0)))) * vecs.adjoint();
    let keep: Vec<usize> = (0..d).filter(|&i| vals[i] > tol.rank * scale && scale > 0.0).collect();
    let rd = keep.len();
    let mut defect_basis = CMat::zeros(d, rd);
    // E*Δ^{1/2} = diag(√λ) E*.
    let mut e_root = CMat::zeros(rd, d);
    for (c, &i) in keep.iter().enumerate() {
        defect_basis.set_column(c, &vecs.column(i));
        let row = vecs.column(i).adjoint() * C64::new(roots[i], 0.0);
        e_root.set_row(c, &row);
    }

    // T_{i,α} for every word within the caps of block i.
    let words: Vec<Vec<CMat>> = (0..k)
        .map(|i| {
            let ni = spec.n[i];
            let count = word_count(ni, w.basis.grid.caps[i]);
            let mut table: Vec<CMat> = Vec::with_capacity(count);
            table.push(identity(d));
            for idx in 1..count {
                let word = word_at(ni, idx);
                let tail = crate::ncalg::word_index(ni, &word.0[1..]);
                let m = &t.blocks[i][word.0[0]] * &table[tail];
                table.push(m);
            }
            table
        })
        .collect();

    let dim = w.dim();
    let mut kf = CMat::zeros(dim * rd, d);
    for idx in 0..dim {
        let wi = w.basis.word_indices(idx);
        let mut prod = identity(d);
        for i in 0..k {
            prod *= &words[i][wi[i]];
        }
        let block = &e_root * prod.adjoint() * C64::new(w.sqrt_b(idx), 0.0);
        kf.view_mut((idx * rd, 0), (rd, d)).copy_from(&block);
    }

    let truncation_residual = first_omitted_shell(w, t, &words, &defect);
    Ok(BerezinKernelData {
        k: kf.clone(),
        k_free: kf,
        defect,
        defect_root,
        defect_basis,
        rd,
        truncation_residual,
        constrained: false,
    })
}

/// max_i √‖Σ_{|α| = D_i+1} b_{i,α} T_{i,α} Δ T_{i,α}*‖.
fn first_omitted_shell(w: &UniversalModel, t: &OperatorTuple, words: &[Vec<CMat>], defect: &CMat) -> f64 {
    let spec = &w.spec;
    let mut worst = 0.0_f64;
    for i in 0..spec.k() {
        let ni = spec.n[i];
        let cap = w.basis.grid.caps[i];
        let b = b_table(&spec.q[i], spec.m[i], cap + 1);
        let mut acc = CMat::zeros(t.dim, t.dim);
        for idx in word_count(ni, cap)..word_count(ni, cap + 1) {
            let word = word_at(ni, idx);
            let tail = crate::ncalg::word_index(ni, &word.0[1..]);
            let m = &t.blocks[i][word.0[0]] * &words[i][tail];
            acc += &m * defect * m.adjoint() * C64::new(b[idx], 0.0);
        }
        worst = worst.max(spectral_norm(&acc).sqrt());
    }
    worst
}

/// Constrained kernel (P_N ⊗ I) K in N coordinates.
pub fn constrained_kernel(model: &VarietyModel, t: &OperatorTuple, tol: &Tolerances) -> Result<BerezinKernelData> {
    let mut data = berezin_kernel(&model.w, t, tol)?;
    data.k = compress(&model.basis_n, &data.k_free, data.rd);
    data.constrained = true;
    Ok(data)
}

/// (B* ⊗ I_rd) K for orthonormal columns B.
pub fn compress(basis: &CMat, k: &CMat, rd: usize) -> CMat {
    let (dim, r) = (basis.nrows(), basis.ncols());
    let d = k.ncols();
    let mut out = CMat::zeros(r * rd, d);
    for idx in 0..dim {
        for c in 0..r {
            let coef = basis[(idx, c)].conj();
            if coef != C64::new(0.0, 0.0) {
                for s in 0..rd {
                    let src = k.row(idx * rd + s) * coef;
                    let mut dst = out.row_mut(c * rd + s);
                    dst += src;
                }
            }
        }
    }
    out
}

/// max over (i,j) of ‖K T*_{i,j} − (S*_{i,j} ⊗ I) K‖.
pub fn verify_intertwining(data: &BerezinKernelData, t: &OperatorTuple, s: &[Vec<CMat>]) -> f64 {
    let mut worst = 0.0_f64;
    for (tb, sb) in t.blocks.iter().zip(s) {
        for (tij, sij) in tb.iter().zip(sb) {
            let lhs = &data.k * tij.adjoint();
            let rhs = ampliate(&sij.adjoint(), data.rd) * &data.k;
            worst = worst.max(spectral_norm(&(lhs - rhs)));
        }
    }
    worst
}

/// K*(g ⊗ I)K.
pub fn berezin_transform(data: &BerezinKernelData, g: &CMat) -> Result<CMat> {
    if g.nrows() * data.rd != data.k.nrows() || !g.is_square() {
        return Err(Error::Input(format!("operator is {}×{}, model space has dimension {}", g.nrows(), g.ncols(), data.model_dim())));
    }
    Ok(data.k.adjoint() * ampliate(g, data.rd) * &data.k)
}

/// B_{rT}[g] for the constrained kernel of r·T.
pub fn radial_transform(model: &VarietyModel, t: &OperatorTuple, g: &CMat, r: f64, tol: &Tolerances) -> Result<CMat> {
    let scaled = crate::polydomain::scale_tuple(t, r);
    let data = constrained_kernel(model, &scaled, tol)?;
    berezin_transform(&data, g)
}

/// ‖(P_{M_Q} ⊗ I) K_free‖: how far the free kernel's range leaves N_Q ⊗ ℂ^{rd}.
pub fn range_defect(data: &BerezinKernelData, model: &VarietyModel) -> f64 {
    let back = compress(&model.basis_n, &data.k_free, data.rd);
    // ‖K‖² = ‖P K‖² + ‖(I−P) K‖² column-wise; use the operator form instead.
    let lifted = expand(&model.basis_n, &back, data.rd);
    spectral_norm(&(&data.k_free - lifted))
}

/// (B ⊗ I_rd) X, the inverse of [`compress`] on its range.
pub fn expand(basis: &CMat, x: &CMat, rd: usize) -> CMat {
    let (dim, r) = (basis.nrows(), basis.ncols());
    let mut out = CMat::zeros(dim * rd, x.ncols());
    for idx in 0..dim {
        for c in 0..r {
            let coef = basis[(idx, c)];
            if coef != C64::new(0.0, 0.0) {
                for s in 0..rd {
                    let src = x.row(c * rd + s) * coef;
                    let mut dst = out.row_mut(idx * rd + s);
                    dst += src;
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BerezinReport {
    pub rd: usize,
    pub kernel_norm: f64,
    pub isometry_defect: f64,
    pub intertwining: f64,
    pub reconstruction: f64,
    pub range_defect: f64,
    pub truncation_residual: f64,
    pub passed: bool,
}

/// Every kernel identity for a tuple in the variety: contraction, K*K = I
/// when pure, intertwining, T_(α) = K*(S_(α)⊗I)K up to `degree`, and
/// range(K_free) ⊥ M_Q ⊗ ℂ^{rd}. Identities are only asserted when the
/// truncation residual vanishes.
pub fn berezin_report(model: &VarietyModel, t: &OperatorTuple, degree: usize, tol: &Tolerances) -> Result<BerezinReport> {
    let data = constrained_kernel(model, t, tol)?;
    let kernel_norm = spectral_norm(&data.k);
    let isometry_defect = data.isometry_defect();
    let intertwining = verify_intertwining(&data, t, &model.s);
    let mut reconstruction = 0.0_f64;
    for alpha in crate::variety::low_degree_words(&model.spec().n, degree) {
        let lhs = t.multi_word(&alpha);
        let rhs = berezin_transform(&data, &model.word(&alpha))?;
        reconstruction = reconstruction.max(spectral_norm(&(lhs - rhs)));
    }
    let range_defect = range_defect(&data, model);
    let exact = data.truncation_residual == 0.0;
    let passed = kernel_norm <= 1.0 + 1e-10
        && (!exact || (isometry_defect <= 1e-10 && intertwining <= 1e-10 && reconstruction <= 1e-10 && range_defect <= 1e-10));
    Ok(BerezinReport {
        rd: data.rd,
        kernel_norm,
        isometry_defect,
        intertwining,
        reconstruction,
        range_defect,
        truncation_residual: data.truncation_residual,
        passed,
    })
}
