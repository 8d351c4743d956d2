//! Master-equation specification, dissipators and the vectorized generator.

use ndarray::Array2;

use crate::fock::{HilbertSpace, Operator};
use crate::model::{self, DerivedParams, HamiltonianSpec, ModelParams};
use crate::sparse::CsrMatrix;
use crate::{Error, Result, C64, I, ONE};

/// Hamiltonian plus collapse channels `(c_k, gamma_k)` entering as `gamma_k L[c_k]`,
/// with `L[c] rho = 2 c rho c^dagger - c^dagger c rho - rho c^dagger c`.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladSpec {
    pub hamiltonian: HamiltonianSpec,
    pub collapse: Vec<(Operator, f64)>,
}

impl LindbladSpec {
    pub fn new(hamiltonian: HamiltonianSpec, collapse: Vec<(Operator, f64)>) -> Result<Self> {
        let space = hamiltonian.space().clone();
        for h in &hamiltonian.harmonics {
            if h.op.space() != &space {
                return Err(Error::ShapeMismatch("harmonic term on a different space".into()));
            }
        }
        for (c, rate) in &collapse {
            if c.space() != &space {
                return Err(Error::ShapeMismatch("collapse operator on a different space".into()));
            }
            if !(*rate >= 0.0 && rate.is_finite()) {
                return Err(Error::InvalidParameter { field: "collapse rate".into(), reason: format!("{rate} is not >= 0") });
            }
        }
        Ok(Self { hamiltonian, collapse })
    }

    pub fn space(&self) -> &HilbertSpace {
        self.hamiltonian.space()
    }

    pub fn is_static(&self) -> bool {
        self.hamiltonian.is_static()
    }

    /// `K(t) = -i H(t) - sum_k gamma_k c_k^dagger c_k`.
    pub fn drift(&self, t: f64) -> CsrMatrix {
        let mut k = self.hamiltonian.at(t).data().scale(-I);
        for (c, rate) in &self.collapse {
            let cdc = c.data().adjoint().matmul(c.data());
            k = k.axpby(ONE, &cdc, C64::new(-rate, 0.0));
        }
        k
    }
}

/// Cavity decay plus thermal mechanical damping on the (a, b1, b2) space.
pub fn standard_collapse(p: &ModelParams, space: &HilbertSpace) -> Result<Vec<(Operator, f64)>> {
    let [a, b1, b2] = model::system_ops(space)?;
    let mut out = vec![(a, p.gamma_a)];
    for (b, gamma, nbar) in [(b1, p.gamma_b1, p.nbar_b1), (b2, p.gamma_b2, p.nbar_b2)] {
        if gamma * (nbar + 1.0) > 0.0 {
            out.push((b.clone(), gamma * (nbar + 1.0)));
        }
        if gamma * nbar > 0.0 {
            out.push((b.adjoint(), gamma * nbar));
        }
    }
    Ok(out)
}

/// Effective model: Kerr, downconversion and resonant drive with the standard dissipators.
pub fn effective_spec(p: &ModelParams, d: &DerivedParams, space: &HilbertSpace) -> Result<LindbladSpec> {
    let h = model::build_h_eff(p, d, space)?;
    LindbladSpec::new(HamiltonianSpec::from_static(h), standard_collapse(p, space)?)
}

/// Frame in which a full-model state is represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFrame {
    /// Rotating at the strong-drive frequency, cavity not displaced.
    Rotating,
    /// Rotating and displaced by the mean cavity amplitude.
    Displaced,
    /// Displaced frame in the interaction picture of the free Hamiltonian.
    Interaction,
}

/// Full optomechanical model in the requested frame.
pub fn full_spec(p: &ModelParams, d: &DerivedParams, space: &HilbertSpace, frame: SourceFrame) -> Result<LindbladSpec> {
    let h = match frame {
        SourceFrame::Rotating => model::build_h_frame1(p, space)?,
        SourceFrame::Displaced => model::build_h2(p, space)?,
        SourceFrame::Interaction => model::build_h2_interaction(p, d, space)?,
    };
    LindbladSpec::new(h, standard_collapse(p, space)?)
}

/// `2 c rho c^dagger - c^dagger c rho - rho c^dagger c`.
pub fn dissipator_apply(c: &Operator, rho: &Array2<C64>) -> Result<Array2<C64>> {
    let d = c.dim();
    if rho.dim() != (d, d) {
        return Err(Error::ShapeMismatch(format!("rho is {:?}, operator has dimension {d}", rho.dim())));
    }
    let cd = c.data().adjoint();
    let crho = c.data().mul_dense(rho.view());
    let jump = cd.dense_mul(crho.view());
    let cdc = cd.matmul(c.data());
    let left = cdc.mul_dense(rho.view());
    let right = cdc.dense_mul(rho.view());
    Ok(jump * C64::new(2.0, 0.0) - left - right)
}

/// Column-stacked generator: `L vec(rho) = vec(-i[H(t), rho] + sum_k gamma_k L[c_k] rho)`
/// with `vec(E_ij)` at index `j * d + i`.
pub fn liouvillian(spec: &LindbladSpec, t: f64) -> CsrMatrix {
    let d = spec.space().dim();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (0..d).map(move |i| (i, j))).collect();
    assemble(spec, t, &pairs).0
}

/// Generator restricted to the coherence pairs `(i, j)` listed in `pairs`.
///
/// Returns the matrix in the order of `pairs` and the largest modulus of any
/// entry that landed outside the listed set (zero when the set is invariant).
pub fn assemble(spec: &LindbladSpec, t: f64, pairs: &[(usize, usize)]) -> (CsrMatrix, f64) {
    let d = spec.space().dim();
    let mut position = vec![usize::MAX; d * d];
    for (n, &(i, j)) in pairs.iter().enumerate() {
        position[j * d + i] = n;
    }
    let k = spec.drift(t);
    let kt = k.transpose();
    let jumps: Vec<(CsrMatrix, f64)> =
        spec.collapse.iter().filter(|(_, r)| *r > 0.0).map(|(c, r)| (c.data().transpose(), 2.0 * r)).collect();
    let mut entries = Vec::new();
    let mut dropped = 0.0f64;
    for (n, &(i, j)) in pairs.iter().enumerate() {
        let mut push = |target: usize, v: C64| match position[target] {
            usize::MAX => dropped = dropped.max(v.norm()),
            row => entries.push((row, n, v)),
        };
        // column (i, j): K_ki at (k, j); conj(K_lj) at (i, l); 2γ c_ki conj(c_lj) at (k, l)
        for (k, v) in kt.row(i) {
            push(j * d + k, v);
        }
        for (l, v) in kt.row(j) {
            push(l * d + i, v.conj());
        }
        for (ct, rate) in &jumps {
            for (k, vk) in ct.row(i) {
                for (l, vl) in ct.row(j) {
                    push(l * d + k, vk * vl.conj() * *rate);
                }
            }
        }
    }
    (CsrMatrix::from_triplets(pairs.len(), pairs.len(), entries), dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, PureState};
    use crate::linalg;

    fn random_hermitian(d: usize, seed: u64) -> Array2<C64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = Array2::from_shape_fn((d, d), |_| C64::new(next(), next()));
        (&m + &linalg::adjoint(m.view())) * C64::new(0.5, 0.0)
    }

    #[test]
    fn decay_of_single_photon() {
        let s = HilbertSpace::new(vec![3]).unwrap();
        let a = fock::destroy(&s, 0).unwrap();
        let one = PureState::basis(&s, &[1]).to_density();
        let out = dissipator_apply(&a, one.data()).unwrap();
        assert!((out[[0, 0]] - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((out[[1, 1]] + C64::new(2.0, 0.0)).norm() < 1e-15);
        let vac = PureState::basis(&s, &[0]).to_density();
        assert!(dissipator_apply(&a, vac.data()).unwrap().iter().all(|v| v.norm() == 0.0));
        let rho = random_hermitian(3, 7);
        assert!(linalg::trace(dissipator_apply(&a, &rho).unwrap().view()).norm() < 1e-13);
    }
}
