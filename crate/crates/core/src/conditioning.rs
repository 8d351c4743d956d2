//! Homodyne conditioning, the adiabatic transfer channel and the remote-cat pipeline.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::fock::{self, DensityMatrix, HilbertSpace, Operator};
use crate::metrics::wigner::{wigner_min, WignerSearch};
use crate::model::TransferParams;
use crate::sparse::CsrMatrix;
use crate::states;
use crate::{linalg, Error, Result, C64, I, ZERO};

/// Outcome densities below this are treated as the null set.
pub const NULL_DENSITY: f64 = 1e-12;

/// `<x, theta|n>` for the levels of `mode`, where `|x, theta>` is the eigenvector of
/// `scale * (b e^{-i theta} + b^dagger e^{i theta})`.
pub fn homodyne_kernel(space: &HilbertSpace, mode: usize, theta: f64, x: f64, scale: f64) -> Result<Vec<C64>> {
    space.check_mode(mode)?;
    Ok(fock::quadrature_wavefunctions(space.dims()[mode], x, theta, scale))
}

/// `Tr_mode[(|k><k| on mode) rho]` for the bra components `kernel[n] = <k|n>` of a two-mode state.
pub fn project_unnormalized(rho: &DensityMatrix, mode: usize, kernel: &[C64]) -> Result<Array2<C64>> {
    let space = rho.space();
    if space.modes() != 2 {
        return Err(Error::Precondition(format!("conditioning needs two modes, got {space}")));
    }
    space.check_mode(mode)?;
    let (n0, n1) = (space.dims()[0], space.dims()[1]);
    let nm = space.dims()[mode];
    if kernel.len() != nm {
        return Err(Error::ShapeMismatch(format!("kernel of length {} for a mode with {nm} levels", kernel.len())));
    }
    let nk = if mode == 0 { n1 } else { n0 };
    let idx = |kept: usize, measured: usize| if mode == 0 { measured * n1 + kept } else { kept * n1 + measured };
    let data = rho.data();
    // t[(i, n), j] = sum_m rho[(i, n), (j, m)] conj(k_m)
    let mut t = Array2::from_elem((nk * nm, nk), ZERO);
    for i in 0..nk {
        for n in 0..nm {
            let row = idx(i, n);
            for j in 0..nk {
                let mut acc = ZERO;
                for (m, km) in kernel.iter().enumerate() {
                    acc += data[[row, idx(j, m)]] * km.conj();
                }
                t[[i * nm + n, j]] = acc;
            }
        }
    }
    Ok(Array2::from_shape_fn((nk, nk), |(i, j)| {
        kernel.iter().enumerate().map(|(n, kn)| kn * t[[i * nm + n, j]]).sum::<C64>()
    }))
}

/// Normalized state of the other mode after the outcome `x` of
/// `X_theta = b e^{-i theta} + b^dagger e^{i theta}` on `mode`, and the outcome density.
pub fn condition(rho: &DensityMatrix, mode: usize, theta: f64, x: f64) -> Result<(DensityMatrix, f64)> {
    let kernel = homodyne_kernel(rho.space(), mode, theta, x, 1.0)?;
    let mut a = project_unnormalized(rho, mode, &kernel)?;
    let density = linalg::trace(a.view()).re;
    if !(density >= NULL_DENSITY) {
        return Err(Error::NullOutcome { density });
    }
    a.mapv_inplace(|v| v / density);
    linalg::hermitize(&mut a);
    let kept = rho.space().subspace(&[1 - mode])?;
    Ok((DensityMatrix::from_parts(kept, a)?, density))
}

/// Beam-splitter reduction of the adiabatic transfer: `A_out = c A_in + sign * s B_in`
/// with `c^2 + s^2 = 1` and transmissivity `eta = s^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferChannel {
    pub eta: f64,
    pub sign: f64,
}

impl TransferChannel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter { field: "eta".into(), reason: format!("{eta} outside [0, 1]") });
        }
        Ok(Self { eta, sign: -1.0 })
    }

    pub fn from_params(tp: &TransferParams) -> Result<Self> {
        tp.validate()?;
        Self::new(tp.eta())
    }

    /// Kraus operators `K_k = <k|_B U |0>_anc` mapping `n_in` levels of the input
    /// mode onto `n_out` levels of the output mode.
    pub fn kraus(&self, n_in: usize, n_out: usize) -> Result<Vec<Array2<C64>>> {
        let pair = HilbertSpace::new(vec![n_in, n_out])?;
        let b = fock::destroy(&pair, 0)?;
        let anc = fock::destroy(&pair, 1)?;
        let angle = self.eta.sqrt().asin();
        // U = exp(sign * angle * (A^dag B - B^dag A)) so that U^dag A U = c A + sign * s B.
        let ab = &anc.adjoint() * &b;
        let generator: Operator = (I * self.sign * angle) * &(&ab - &ab.adjoint());
        let u = fock::expm_unitary(&generator, 1.0)?.to_dense();
        Ok((0..n_in)
            .map(|k| Array2::from_shape_fn((n_out, n_in), |(a, n)| u[[pair.index(&[k, a]), pair.index(&[n, 0])]]))
            .collect())
    }
}

/// Sends mode 1 of a two-mode state through the channel; the output keeps mode 0 and
/// replaces mode 1 by the probe output with the same cutoff.
pub fn transfer(rho: &DensityMatrix, channel: &TransferChannel) -> Result<DensityMatrix> {
    let space = rho.space();
    if space.modes() != 2 {
        return Err(Error::Precondition(format!("transfer needs two modes, got {space}")));
    }
    let (n0, n1) = (space.dims()[0], space.dims()[1]);
    let kraus = channel.kraus(n1, n1)?;
    let eye = ndarray::Array2::from_diag(&ndarray::Array1::from_elem(n0, C64::new(1.0, 0.0)));
    let mut out = linalg::zeros(n0 * n1, n0 * n1);
    for k in &kraus {
        if k.iter().all(|v| v.norm() < 1e-15) {
            continue;
        }
        let full = CsrMatrix::from_dense(fock::kron_dense(eye.view(), k.view()).view(), 1e-15);
        // K rho K^dagger = (K (K rho)^dagger)^dagger for Hermitian rho
        let left = full.mul_dense(rho.data().view());
        let tmp = full.mul_dense(linalg::adjoint(left.view()).view());
        out += &linalg::adjoint(tmp.view());
    }
    linalg::hermitize(&mut out);
    DensityMatrix::from_parts(space.clone(), out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatResult {
    pub rho: DensityMatrix,
    /// Outcome density of the conditioning measurement.
    pub density: f64,
    pub fidelity: f64,
    pub w_min: f64,
    pub argmin: C64,
}

/// Largest `e^{-G tau}` accepted by the pipeline.
pub const MAX_RESIDUAL_COSINE: f64 = 0.15;

/// Transfer, homodyne conditioning of the probe at `(theta = 0, x)`, fidelity to the even
/// cat `i sqrt(zeta)` and its single-mode Wigner minimum.
pub fn prepare_cat(rho: &DensityMatrix, tp: &TransferParams, x: f64, zeta: C64) -> Result<CatResult> {
    tp.validate()?;
    if !tp.is_adiabatic() {
        return Err(Error::Precondition(format!("adiabatic ratio {:.3} is not below 0.2", tp.adiabatic_ratio())));
    }
    if tp.cosine() >= MAX_RESIDUAL_COSINE {
        return Err(Error::Precondition(format!("e^(-G tau) = {:.3} is not below {MAX_RESIDUAL_COSINE}", tp.cosine())));
    }
    let channel = TransferChannel::from_params(tp)?;
    cat_from_channel(rho, &channel, x, zeta)
}

/// Pipeline stages after the transfer parameters have been reduced to a channel.
pub fn cat_from_channel(rho: &DensityMatrix, channel: &TransferChannel, x: f64, zeta: C64) -> Result<CatResult> {
    let out = transfer(rho, channel)?;
    let (cat, density) = condition(&out, 1, 0.0, x)?;
    let mut beta = I * zeta.sqrt();
    if channel.sign < 0.0 {
        beta = beta.conj();
    }
    let target = states::cat_even(beta, cat.space())?;
    let fidelity = states::fidelity_pure(&cat, &target)?;
    let (w_min, argmin) = wigner_min(&cat, &WignerSearch::default())?;
    Ok(CatResult { rho: cat, density, fidelity, w_min, argmin: argmin[0] })
}
