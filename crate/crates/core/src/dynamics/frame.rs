//! Unitary chain taking full-model states into the frame of the effective model.

use super::lindblad::SourceFrame;
use crate::fock::{self, DensityMatrix, HilbertSpace, Operator};
use crate::model::{DerivedParams, ModelParams};
use crate::sparse::CsrMatrix;
use crate::{Error, Result, C64};

/// `exp(r2 n_a (b2^dag e^{i phi2} - h.c.)) exp(r1 n_a (b1^dag e^{i phi1} - h.c.))`.
///
/// Block diagonal in the cavity number: on `n_a = k` it is
/// `D(r1 k e^{i phi1}) (x) D(r2 k e^{i phi2})`.
pub fn polaron(space: &HilbertSpace, r: [f64; 2], phases: [f64; 2]) -> Result<Operator> {
    if space.modes() != 3 {
        return Err(Error::InvalidSpace(format!("expected (a, b1, b2), got {space}")));
    }
    let dims = space.dims();
    let block = dims[1] * dims[2];
    let mut entries = Vec::new();
    for k in 0..dims[0] {
        let amp = |j: usize| C64::from_polar(r[j] * k as f64, phases[j]);
        let d1 = fock::displacement_single(dims[1], amp(0))?;
        let d2 = fock::displacement_single(dims[2], amp(1))?;
        let kron = fock::kron_dense(d1.view(), d2.view());
        let off = k * block;
        for ((i, j), v) in kron.indexed_iter() {
            if v.norm() > 1e-15 {
                entries.push((off + i, off + j, *v));
            }
        }
    }
    Operator::new(space.clone(), CsrMatrix::from_triplets(space.dim(), space.dim(), entries))
}

/// `rho -> U^dag rho U` with `U^dag = e^{i H0~ t} S^dag D(-alpha)`, starting from the
/// factor that matches `source`. The strong-pump rotation is never applied: states
/// of the rotating frame already carry it.
pub fn frame_transform(
    rho: &DensityMatrix,
    t: f64,
    params: &ModelParams,
    derived: &DerivedParams,
    source: SourceFrame,
) -> Result<DensityMatrix> {
    let space = rho.space();
    let r = [derived.r1, derived.r2];
    let w = [params.omega_b1, params.omega_b2];
    let mut out = rho.clone();
    if source == SourceFrame::Rotating {
        out = out.transform(&fock::displacement(space, 0, -derived.alpha)?);
    }
    match source {
        SourceFrame::Rotating | SourceFrame::Displaced => {
            out = out.transform(&polaron(space, r, [0.0, 0.0])?);
            rotate_free(&mut out, t, params, derived)?;
        }
        SourceFrame::Interaction => {
            out = out.transform(&polaron(space, r, [w[0] * t, w[1] * t])?);
        }
    }
    Ok(out)
}

/// `rho -> e^{i H0~ t} rho e^{-i H0~ t}`; the free Hamiltonian is diagonal in the Fock basis.
pub fn rotate_free(rho: &mut DensityMatrix, t: f64, params: &ModelParams, derived: &DerivedParams) -> Result<()> {
    let space = rho.space().clone();
    if space.modes() != 3 {
        return Err(Error::InvalidSpace(format!("expected (a, b1, b2), got {space}")));
    }
    let energy: Vec<f64> = (0..space.dim())
        .map(|k| {
            let l = space.levels(k);
            derived.delta_tilde * l[0] as f64 + params.omega_b1 * l[1] as f64 + params.omega_b2 * l[2] as f64
        })
        .collect();
    let mut data = rho.data().clone();
    for ((i, j), v) in data.indexed_iter_mut() {
        *v *= C64::from_polar(1.0, (energy[i] - energy[j]) * t);
    }
    *rho = DensityMatrix::from_parts(space, data)?;
    Ok(())
}
