//! Analytic reference states and the pure-target fidelity.

use log::warn;
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::fock::{self, DensityMatrix, HilbertSpace, PureState};
use crate::{Error, Result, C64, ZERO};

/// Pair-coherent state label: eigenvalue `zeta` of `b1 b2` and phonon-number offset `q = n1 - n2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcsSpec {
    pub zeta: C64,
    #[serde(default)]
    pub q: usize,
}

impl PcsSpec {
    pub fn new(zeta: C64) -> Self {
        Self { zeta, q: 0 }
    }
}

/// Top-level population above which a truncated analytic state is reported as leaking.
pub const TOP_LEVEL_WARN: f64 = 1e-6;

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `zeta^n / sqrt(n! (n+q)!)` on `|n+q>|n>`, normalized.
pub fn pcs(spec: PcsSpec, space: &HilbertSpace) -> Result<PureState> {
    if space.modes() != 2 {
        return Err(Error::InvalidSpace(format!("pair-coherent state needs two modes, got {space}")));
    }
    let (n1, n2) = (space.dims()[0], space.dims()[1]);
    if n1 < 4 || n2 < 4 {
        return Err(Error::InvalidSpace(format!("cutoffs {space} below 4")));
    }
    if spec.q >= n1 {
        return Err(Error::InvalidParameter { field: "q".into(), reason: format!("offset {} exceeds cutoff {n1}", spec.q) });
    }
    let mut data = Array1::from_elem(space.dim(), ZERO);
    let top = (n1 - spec.q).min(n2);
    let r = spec.zeta.norm();
    for n in 0..top {
        let mag = if n == 0 {
            (-0.5 * ln_factorial(spec.q)).exp()
        } else if r == 0.0 {
            0.0
        } else {
            (n as f64 * r.ln() - 0.5 * (ln_factorial(n) + ln_factorial(n + spec.q))).exp()
        };
        data[space.index(&[n + spec.q, n])] = C64::from_polar(mag, n as f64 * spec.zeta.arg());
    }
    let psi = PureState::normalized(space.clone(), data)?;
    let last = psi.data()[space.index(&[top - 1 + spec.q, top - 1])].norm_sqr();
    if last > TOP_LEVEL_WARN {
        warn!("pair-coherent state zeta = {}: top level holds {last:.3e}", spec.zeta);
    }
    Ok(psi)
}

/// Coherent-state amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)` truncated to `n < dim`, unnormalized.
fn coherent_amplitudes(alpha: C64, dim: usize) -> Array1<C64> {
    let r = alpha.norm();
    Array1::from_shape_fn(dim, |n| {
        if n == 0 {
            C64::new((-0.5 * r * r).exp(), 0.0)
        } else if r == 0.0 {
            ZERO
        } else {
            C64::from_polar((-0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_factorial(n)).exp(), n as f64 * alpha.arg())
        }
    })
}

fn single_mode(space: &HilbertSpace, what: &str) -> Result<usize> {
    if space.modes() != 1 {
        return Err(Error::InvalidSpace(format!("{what} needs one mode, got {space}")));
    }
    Ok(space.dim())
}

fn checked(psi: PureState, what: &str) -> PureState {
    fock::warn_leakage(what, &psi.leakage());
    psi
}

pub fn coherent(alpha: C64, space: &HilbertSpace) -> Result<PureState> {
    let dim = single_mode(space, "coherent state")?;
    Ok(checked(PureState::normalized(space.clone(), coherent_amplitudes(alpha, dim))?, "coherent state"))
}

fn cat(beta: C64, space: &HilbertSpace, sign: f64, what: &str) -> Result<PureState> {
    let dim = single_mode(space, what)?;
    if beta.norm_sqr() >= dim as f64 / 3.0 {
        warn!("{what}: |beta|^2 = {:.3} is not below cutoff/3", beta.norm_sqr());
    }
    let plus = coherent_amplitudes(beta, dim);
    let minus = coherent_amplitudes(-beta, dim);
    let data = &plus + &minus.mapv(|v| v * sign);
    Ok(checked(PureState::normalized(space.clone(), data)?, what))
}

/// `|beta> + |-beta>`, normalized.
pub fn cat_even(beta: C64, space: &HilbertSpace) -> Result<PureState> {
    cat(beta, space, 1.0, "even cat")
}

/// `|beta> - |-beta>`, normalized.
pub fn cat_odd(beta: C64, space: &HilbertSpace) -> Result<PureState> {
    if beta.norm() == 0.0 {
        return Err(Error::InvalidParameter { field: "beta".into(), reason: "odd cat with zero amplitude vanishes".into() });
    }
    cat(beta, space, -1.0, "odd cat")
}

pub fn fock_state(n: usize, space: &HilbertSpace) -> Result<PureState> {
    let dim = single_mode(space, "Fock state")?;
    if n >= dim {
        return Err(Error::InvalidParameter { field: "n".into(), reason: format!("level {n} outside cutoff {dim}") });
    }
    Ok(PureState::basis(space, &[n]))
}

pub fn vacuum(space: &HilbertSpace) -> PureState {
    PureState::basis(space, &vec![0; space.modes()])
}

/// Thermal state with `p_n ∝ (nbar / (1 + nbar))^n`, renormalized on the cutoff.
pub fn thermal_dm(nbar: f64, space: &HilbertSpace) -> Result<DensityMatrix> {
    let dim = single_mode(space, "thermal state")?;
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter { field: "nbar".into(), reason: format!("{nbar} is not >= 0") });
    }
    let x = nbar / (1.0 + nbar);
    let mut p: Vec<f64> = (0..dim).map(|n| if n == 0 { 1.0 } else { x.powi(n as i32) }).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    let rho = DensityMatrix::from_diagonal(space.clone(), &p)?;
    rho.check_leakage("thermal state");
    Ok(rho)
}

/// `<psi| rho |psi>`.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.space() != psi.space() {
        return Err(Error::ShapeMismatch(format!("state on {} and target on {}", rho.space(), psi.space())));
    }
    let v = psi.data();
    let rv = rho.data().dot(v);
    let f: C64 = v.iter().zip(rv.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(f.re.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bessel_i0(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= (x / 2.0).powi(2) / (k * k) as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn pcs_vacuum_and_bessel_norm() {
        let s = HilbertSpace::new(vec![20, 20]).unwrap();
        let z = pcs(PcsSpec::new(ZERO), &s).unwrap();
        assert_eq!(z.data()[0], C64::new(1.0, 0.0));
        let p = pcs(PcsSpec::new(C64::new(2.0, 0.0)), &s).unwrap();
        assert!((bessel_i0(4.0) - 11.301_921_952_136_33).abs() < 1e-9);
        assert!((p.data()[0].norm_sqr() - 1.0 / bessel_i0(4.0)).abs() < 1e-12);
    }

    #[test]
    fn pcs_offset_lives_on_shifted_diagonal() {
        let s = HilbertSpace::new(vec![12, 12]).unwrap();
        let p = pcs(PcsSpec { zeta: C64::new(1.0, 0.5), q: 1 }, &s).unwrap();
        for (k, v) in p.data().iter().enumerate() {
            let l = s.levels(k);
            if l[0] != l[1] + 1 {
                assert_eq!(*v, ZERO);
            }
        }
    }

    #[test]
    fn cat_basics() {
        let s = HilbertSpace::new(vec![30]).unwrap();
        let c = cat_even(ZERO, &s).unwrap();
        assert!((c.data()[0].norm() - 1.0).abs() < 1e-15);
        let beta = C64::new(0.0, 2f64.sqrt());
        let c = cat_even(beta, &s).unwrap();
        let mean: f64 = c.data().iter().enumerate().map(|(n, v)| n as f64 * v.norm_sqr()).sum();
        let e = (-4.0f64).exp();
        assert!((mean - 2.0 * (1.0 - e) / (1.0 + e)).abs() < 1e-10);
        assert!(c.data().iter().skip(1).step_by(2).all(|v| v.norm() < 1e-12));
        let o = cat_odd(beta, &s).unwrap();
        assert!(o.data().iter().step_by(2).all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn thermal_and_coherent() {
        let s = HilbertSpace::new(vec![40]).unwrap();
        let t = thermal_dm(1.0, &s).unwrap();
        assert!((t.data()[[0, 0]].re - 0.5).abs() < 1e-12);
        assert!((t.data()[[1, 1]].re - 0.25).abs() < 1e-12);
        assert_eq!(thermal_dm(0.0, &s).unwrap().data()[[0, 0]].re, 1.0);
        assert_eq!(coherent(ZERO, &s).unwrap(), vacuum(&s));
    }

    #[test]
    fn fidelity_of_vacuum_to_pcs() {
        let s = HilbertSpace::new(vec![20, 20]).unwrap();
        let p = pcs(PcsSpec::new(C64::new(2.0, 0.0)), &s).unwrap();
        let f = fidelity_pure(&vacuum(&s).to_density(), &p).unwrap();
        assert!((f - 0.088_480_5).abs() < 1e-6);
        assert!((fidelity_pure(&p.to_density(), &p).unwrap() - 1.0).abs() < 1e-12);
    }
}
