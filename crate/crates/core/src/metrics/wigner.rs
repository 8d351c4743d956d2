//! Wigner functions by displaced parity, and a grid plus pattern-search minimum.

use std::f64::consts::FRAC_2_PI;

use ndarray::Array2;

use crate::fock::DensityMatrix;
use crate::{Error, Result, C64, ZERO};

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Exact matrix elements `<m|D(beta)|n>` for `m, n < n_levels`.
pub fn displacement_elements(n_levels: usize, beta: C64) -> Array2<C64> {
    let mut out = Array2::from_elem((n_levels, n_levels), ZERO);
    let r = beta.norm();
    if r == 0.0 {
        for k in 0..n_levels {
            out[[k, k]] = C64::new(1.0, 0.0);
        }
        return out;
    }
    let x = r * r;
    let minus_conj = -beta.conj();
    for a in 0..n_levels {
        // generalized Laguerre L_k^{(a)}(x) by the three-term recurrence in k
        let kmax = n_levels - a;
        let mut lag = vec![0.0; kmax];
        lag[0] = 1.0;
        if kmax > 1 {
            lag[1] = 1.0 + a as f64 - x;
        }
        for k in 1..kmax.saturating_sub(1) {
            let kf = k as f64;
            lag[k + 1] = ((2.0 * kf + 1.0 + a as f64 - x) * lag[k] - (kf + a as f64) * lag[k - 1]) / (kf + 1.0);
        }
        for (k, l) in lag.iter().enumerate() {
            let (lo, hi) = (k, k + a);
            let mag = (0.5 * (ln_factorial(lo) - ln_factorial(hi)) + a as f64 * r.ln() - 0.5 * x).exp() * l;
            // m = hi >= n = lo uses beta^a; the transposed element uses (-beta*)^a.
            out[[hi, lo]] = C64::from_polar(mag, a as f64 * beta.arg());
            if a > 0 {
                out[[lo, hi]] = C64::from_polar(mag, a as f64 * minus_conj.arg());
            }
        }
    }
    out
}

/// `<m| D(2 xi) Pi |n>`, so that `W(xi) = (2/pi) Tr[rho M]`.
fn parity_kernel(n_levels: usize, xi: C64) -> Array2<C64> {
    let mut m = displacement_elements(n_levels, xi * 2.0);
    for ((_, n), v) in m.indexed_iter_mut() {
        if n % 2 == 1 {
            *v = -*v;
        }
    }
    m
}

/// `sum_{n,m} rho[n, m] M[m, n]` over the leading index block.
fn contract(rho: &Array2<C64>, m: &Array2<C64>) -> C64 {
    let mut acc = ZERO;
    for ((n, k), v) in rho.indexed_iter() {
        acc += v * m[[k, n]];
    }
    acc
}

/// Two-mode partial contraction `B[n1, m1] = sum rho[(n1, n2), (m1, m2)] M2[m2, n2]`.
fn contract_second(rho: &Array2<C64>, n1: usize, n2: usize, m2: &Array2<C64>) -> Array2<C64> {
    Array2::from_shape_fn((n1, n1), |(a, b)| {
        let mut acc = ZERO;
        for x in 0..n2 {
            for y in 0..n2 {
                acc += rho[[a * n2 + x, b * n2 + y]] * m2[[y, x]];
            }
        }
        acc
    })
}

fn check_modes(rho: &DensityMatrix) -> Result<usize> {
    match rho.space().modes() {
        m @ (1 | 2) => Ok(m),
        m => Err(Error::Precondition(format!("Wigner functions are implemented for one or two modes, got {m}"))),
    }
}

/// `W(xi) = (2/pi)^M Tr[rho D(xi) Pi D(xi)^dagger]` at each point; a point holds one
/// complex amplitude per mode. Normalized to unit integral over `d^2 xi` per mode.
pub fn wigner(rho: &DensityMatrix, points: &[Vec<C64>]) -> Result<Vec<f64>> {
    let modes = check_modes(rho)?;
    crate::fock::warn_leakage("wigner", &rho.leakage());
    let dims = rho.space().dims().to_vec();
    points
        .iter()
        .map(|p| {
            if p.len() != modes {
                return Err(Error::ShapeMismatch(format!("point with {} coordinates for {modes} modes", p.len())));
            }
            Ok(match modes {
                1 => FRAC_2_PI * contract(rho.data(), &parity_kernel(dims[0], p[0])).re,
                _ => {
                    let b = contract_second(rho.data(), dims[0], dims[1], &parity_kernel(dims[1], p[1]));
                    FRAC_2_PI * FRAC_2_PI * contract(&b, &parity_kernel(dims[0], p[0])).re
                }
            })
        })
        .collect()
}

/// Coarse grid over a box of half-width `1 + sqrt(<n>)` per amplitude component
/// (`2 + 2 sqrt(<n>)` in unit-vacuum-variance quadratures), then compass search.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerSearch {
    pub points_per_axis: usize,
    /// Overrides the per-mode half-width.
    pub half_width: Option<f64>,
    pub iterations: usize,
    pub shrink: f64,
}

impl Default for WignerSearch {
    fn default() -> Self {
        Self { points_per_axis: 21, half_width: None, iterations: 40, shrink: 0.5 }
    }
}

fn axis(half: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|k| -half + 2.0 * half * k as f64 / (n - 1) as f64).collect()
}

/// Minimum of the Wigner function and its location (one amplitude per mode).
pub fn wigner_min(rho: &DensityMatrix, search: &WignerSearch) -> Result<(f64, Vec<C64>)> {
    let modes = check_modes(rho)?;
    let dims = rho.space().dims().to_vec();
    let pops = rho.populations();
    let mean_n: Vec<f64> = (0..modes)
        .map(|k| pops.iter().enumerate().map(|(i, p)| p * rho.space().level(i, k) as f64).sum())
        .collect();
    let halves: Vec<f64> = mean_n.iter().map(|n| search.half_width.unwrap_or(1.0 + n.max(0.0).sqrt())).collect();
    let axes: Vec<Vec<f64>> = halves.iter().map(|&h| axis(h, search.points_per_axis)).collect();

    let mut best = (f64::INFINITY, vec![ZERO; modes]);
    match modes {
        1 => {
            for &x in &axes[0] {
                for &y in &axes[0] {
                    let xi = C64::new(x, y);
                    let w = FRAC_2_PI * contract(rho.data(), &parity_kernel(dims[0], xi)).re;
                    if w < best.0 {
                        best = (w, vec![xi]);
                    }
                }
            }
        }
        _ => {
            let first: Vec<(C64, Array2<C64>)> = axes[0]
                .iter()
                .flat_map(|&x| axes[0].iter().map(move |&y| C64::new(x, y)))
                .map(|xi| (xi, parity_kernel(dims[0], xi)))
                .collect();
            for &x2 in &axes[1] {
                for &y2 in &axes[1] {
                    let xi2 = C64::new(x2, y2);
                    let b = contract_second(rho.data(), dims[0], dims[1], &parity_kernel(dims[1], xi2));
                    for (xi1, m1) in &first {
                        let w = FRAC_2_PI * FRAC_2_PI * contract(&b, m1).re;
                        if w < best.0 {
                            best = (w, vec![*xi1, xi2]);
                        }
                    }
                }
            }
        }
    }

    let eval = |p: &[f64]| -> Result<f64> {
        let pt: Vec<C64> = p.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        Ok(wigner(rho, &[pt])?[0])
    };
    let mut x: Vec<f64> = best.1.iter().flat_map(|z| [z.re, z.im]).collect();
    let mut fx = best.0;
    let mut step: Vec<f64> = halves
        .iter()
        .flat_map(|&h| {
            let s = 2.0 * h / (search.points_per_axis.max(2) - 1) as f64;
            [s, s]
        })
        .collect();
    for _ in 0..search.iterations {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut trial = x.clone();
                trial[k] += dir * step[k];
                let f = eval(&trial)?;
                if f < fx {
                    fx = f;
                    x = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= search.shrink);
        }
    }
    Ok((fx, x.chunks(2).map(|c| C64::new(c[0], c[1])).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{self, HilbertSpace, PureState};

    #[test]
    fn displacement_elements_match_expm() {
        let beta = C64::new(0.4, -0.3);
        let exact = displacement_elements(12, beta);
        let padded = fock::displacement_single(60, beta).unwrap();
        for m in 0..12 {
            for n in 0..12 {
                assert!((exact[[m, n]] - padded[[m, n]]).norm() < 1e-10, "{m} {n}");
            }
        }
    }

    #[test]
    fn vacuum_and_single_photon_at_origin() {
        let s = HilbertSpace::new(vec![6]).unwrap();
        let vac = PureState::basis(&s, &[0]).to_density();
        let one = PureState::basis(&s, &[1]).to_density();
        let w = wigner(&vac, &[vec![ZERO], vec![C64::new(0.5, 0.0)]]).unwrap();
        assert!((w[0] - FRAC_2_PI).abs() < 1e-12);
        assert!((w[1] - FRAC_2_PI * (-0.5f64).exp()).abs() < 1e-12);
        let (wmin, at) = wigner_min(&one, &WignerSearch::default()).unwrap();
        assert!((wmin + FRAC_2_PI).abs() < 1e-4);
        assert!(at[0].norm() < 1e-2);
    }
}
