//! Nonclassicality metrics of one- and two-mode mechanical states.
//!
//! Quadratures follow each criterion: covariance matrices, Fisher steering and
//! conditioning use `x = b + b^dagger` (vacuum variance 1); the Reid criterion uses
//! `X^(m) = (b^m + b^dagger^m) / 2`.

pub mod steering;
pub mod wigner;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::fock::{self, DensityMatrix, Operator};
use crate::{linalg, Error, Result, C64};

pub use steering::{fisher_steering, reid, FisherGrid, FisherReport};
pub use wigner::{wigner, wigner_min, WignerSearch};

/// Eigenvalue floor in the entropy sum.
pub const ENTROPY_FLOOR: f64 = 1e-14;

/// `-Tr rho ln rho` in nats.
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(linalg::eigvalsh(rho.data().view())?
        .into_iter()
        .map(|l| l.clamp(ENTROPY_FLOOR, 1.0))
        .map(|l| -l * l.ln())
        .sum())
}

/// First and second moments of `R = (x1, p1, x2, p2)` with `x = b + b^dagger`,
/// `p = -i (b - b^dagger)`; vacuum has `cov = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceData {
    pub mean: Array1<f64>,
    pub cov: Array2<f64>,
}

/// `(ordinary part, conjugate part)` of each quadrature: `R = u b + conj(u) b^dagger`.
const QUAD: [C64; 2] = [C64::new(1.0, 0.0), C64::new(0.0, -1.0)];

impl CovarianceData {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        let space = rho.space();
        if space.modes() != 2 {
            return Err(Error::Precondition(format!("covariance needs two modes, got {space}")));
        }
        let b = [fock::destroy(space, 0)?, fock::destroy(space, 1)?];
        let ex = |op: &Operator| op.expect(rho);
        let mean_b = [ex(&b[0]), ex(&b[1])];
        // central moments M_ij = <db_i db_j>, N_ij = <db_i^dagger db_j>
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        let mut n = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = ex(&(&b[i] * &b[j])) - mean_b[i] * mean_b[j];
                n[i][j] = ex(&(&b[i].adjoint() * &b[j])) - mean_b[i].conj() * mean_b[j];
            }
        }
        let mut mean = Array1::zeros(4);
        let mut cov = Array2::zeros((4, 4));
        for r in 0..4 {
            let (i, u) = (r / 2, QUAD[r % 2]);
            mean[r] = 2.0 * (u * mean_b[i]).re;
            for s in 0..4 {
                let (j, w) = (s / 2, QUAD[s % 2]);
                let mut v = 2.0 * (u * w * m[i][j]).re + 2.0 * (u.conj() * w * n[i][j]).re;
                if i == j {
                    v += (u * w.conj()).re;
                }
                cov[[r, s]] = v;
            }
        }
        Ok(Self { mean, cov })
    }

    /// Symplectic eigenvalues `nu_- <= nu_+` of the two-mode covariance matrix.
    pub fn symplectic_eigenvalues(&self) -> [f64; 2] {
        let v = &self.cov;
        let det2 = |r: usize, c: usize| v[[r, c]] * v[[r + 1, c + 1]] - v[[r, c + 1]] * v[[r + 1, c]];
        let delta = det2(0, 0) + det2(2, 2) + 2.0 * det2(0, 2);
        let det = det4(v);
        let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
        [((delta - disc) / 2.0).max(0.0).sqrt(), ((delta + disc) / 2.0).max(0.0).sqrt()]
    }

    /// Smallest eigenvalue of `V + i Omega`.
    pub fn uncertainty_margin(&self) -> Result<f64> {
        let h = Array2::from_shape_fn((4, 4), |(r, s)| {
            let omega = if r / 2 == s / 2 && r != s { if r % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 };
            C64::new(self.cov[[r, s]], omega)
        });
        Ok(linalg::eigvalsh(h.view())?[0])
    }
}

fn det4(m: &Array2<f64>) -> f64 {
    let mut a = m.clone();
    let mut det = 1.0;
    for c in 0..4 {
        let p = (c..4).max_by(|&x, &y| a[[x, c]].abs().total_cmp(&a[[y, c]].abs())).unwrap_or(c);
        if a[[p, c]] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..4 {
                a.swap([p, k], [c, k]);
            }
            det = -det;
        }
        det *= a[[c, c]];
        for r in (c + 1)..4 {
            let f = a[[r, c]] / a[[c, c]];
            for k in c..4 {
                a[[r, k]] -= f * a[[c, k]];
            }
        }
    }
    det
}

/// Entropy of a Gaussian mode with symplectic eigenvalue `nu >= 1`.
pub fn gaussian_mode_entropy(nu: f64) -> f64 {
    let nu = nu.max(1.0);
    let plus = (nu + 1.0) / 2.0;
    let minus = (nu - 1.0) / 2.0;
    let tail = if minus > 0.0 { minus * minus.ln() } else { 0.0 };
    plus * plus.ln() - tail
}

/// Tolerance below 1 on a symplectic eigenvalue before the covariance is declared unphysical.
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-6;

/// Relative-entropy non-Gaussianity `S(rho_G) - S(rho)` of a two-mode state.
pub fn nongaussianity(rho: &DensityMatrix) -> Result<f64> {
    let cov = CovarianceData::of(rho)?;
    let nus = cov.symplectic_eigenvalues();
    if let Some(&nu) = nus.iter().find(|&&nu| nu < 1.0 - SYMPLECTIC_TOLERANCE) {
        return Err(Error::UnphysicalCovariance { nu });
    }
    let sg: f64 = nus.iter().map(|&nu| gaussian_mode_entropy(nu)).sum();
    Ok(sg - entropy(rho)?)
}

/// `(||rho^{T_B}||_1 - 1) / 2`.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    let pt = fock::partial_transpose(rho, 1)?;
    Ok(((linalg::trace_norm_hermitian(pt.view())? - 1.0) / 2.0).max(0.0))
}

/// Metric values of one scenario point; `None` marks a metric that was not evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub params: Vec<(String, f64)>,
    pub fidelity: Option<f64>,
    pub nongaussianity: Option<f64>,
    pub w_min: Option<f64>,
    pub negativity: Option<f64>,
    /// `(m, n, E_r)` per evaluated order pair.
    pub reid: Vec<(u32, u32, f64)>,
    pub fisher: Option<f64>,
    pub cat_fidelity: Option<f64>,
    pub cat_w_min: Option<f64>,
}

impl MetricsRecord {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: Option<f64>| match v {
            Some(x) if !(-1e-12..=1.0 + 1e-12).contains(&x) => {
                Err(Error::InvalidState(format!("{name} = {x} outside [0, 1]")))
            }
            _ => Ok(()),
        };
        unit("fidelity", self.fidelity)?;
        unit("cat fidelity", self.cat_fidelity)?;
        for (name, v) in [("negativity", self.negativity), ("fisher steering", self.fisher)] {
            if let Some(x) = v {
                if x < 0.0 {
                    return Err(Error::InvalidState(format!("{name} = {x} is negative")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::HilbertSpace;
    use crate::states;

    #[test]
    fn entropy_values() {
        let s = HilbertSpace::new(vec![4]).unwrap();
        assert!(entropy(&states::vacuum(&s).to_density()).unwrap().abs() < 1e-9);
        let mixed = DensityMatrix::from_diagonal(s, &[0.25; 4]).unwrap();
        assert!((entropy(&mixed).unwrap() - 4f64.ln()).abs() < 1e-12);
        let th = states::thermal_dm(1.0, &HilbertSpace::new(vec![80]).unwrap()).unwrap();
        assert!((entropy(&th).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn vacuum_covariance_is_identity() {
        let s = HilbertSpace::new(vec![5, 5]).unwrap();
        let c = CovarianceData::of(&states::vacuum(&s).to_density()).unwrap();
        for r in 0..4 {
            for k in 0..4 {
                assert!((c.cov[[r, k]] - if r == k { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let nu = c.symplectic_eigenvalues();
        assert!((nu[0] - 1.0).abs() < 1e-7 && (nu[1] - 1.0).abs() < 1e-7);
        assert!(c.uncertainty_margin().unwrap() > -1e-12);
    }
}
