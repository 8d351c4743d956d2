//! Steering witnesses from mode 2 to mode 1: generalized Reid criterion and
//! the Fisher-information criterion with homodyne detection.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{Array2, ArrayView2};

use crate::conditioning::project_unnormalized;
use crate::fock::{self, DensityMatrix};
use crate::{linalg, Error, Result, C64, ZERO};

/// Outcome grid of the unit-vacuum-variance quadrature: `[-10, 10]` with step 0.05.
pub fn default_outcome_grid() -> Vec<f64> {
    (0..=400).map(|k| -10.0 + 0.05 * k as f64).collect()
}

fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::Precondition("outcome grid needs at least three points".into()));
    }
    let dx = grid[1] - grid[0];
    if !(dx > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.max(1.0)) {
        return Err(Error::Precondition("outcome grid must be uniform and increasing".into()));
    }
    Ok(dx)
}

fn check_two_mode(rho: &DensityMatrix) -> Result<(usize, usize)> {
    let s = rho.space();
    if s.modes() != 2 {
        return Err(Error::Precondition(format!("steering needs two modes, got {s}")));
    }
    Ok((s.dims()[0], s.dims()[1]))
}

/// `Tr(op a)` for square matrices of equal size.
fn trace_product(op: ArrayView2<'_, C64>, a: ArrayView2<'_, C64>) -> C64 {
    let mut acc = ZERO;
    for ((i, j), v) in op.indexed_iter() {
        acc += v * a[[j, i]];
    }
    acc
}

/// `(X, Y, X^2, Y^2, [X, Y])` for `X = (b^m + b^dagger^m) / 2`, `Y = -i (b^m - b^dagger^m) / 2`,
/// built on `n + m` levels and cut back to `n`, so products are exact on the cutoff.
fn order_quadratures(n: usize, m: u32) -> [Array2<C64>; 5] {
    let pad = n + m as usize;
    let b = fock::destroy_single(pad).to_dense();
    let mut bm = Array2::from_diag(&ndarray::Array1::from_elem(pad, C64::new(1.0, 0.0)));
    for _ in 0..m {
        bm = bm.dot(&b);
    }
    let bd = linalg::adjoint(bm.view());
    let x = (&bm + &bd).mapv(|v| v * 0.5);
    let y = (&bm - &bd).mapv(|v| v * C64::new(0.0, -0.5));
    let x2 = x.dot(&x);
    let y2 = y.dot(&y);
    let c = &x.dot(&y) - &y.dot(&x);
    let cut = |a: Array2<C64>| a.slice(ndarray::s![..n, ..n]).to_owned();
    [cut(x), cut(y), cut(x2), cut(y2), cut(c)]
}

/// Outcome-averaged conditional variance `sum_o [Tr(Q^2 A_o) - Tr(Q A_o)^2 / p_o]` of mode-1
/// observable `q`, over unnormalized conditional states `A_o` with weights `w_o`.
fn averaged_variance(q: &Array2<C64>, q2: &Array2<C64>, conditionals: &[(Array2<C64>, f64)]) -> f64 {
    conditionals
        .iter()
        .map(|(a, w)| {
            let p = linalg::trace(a.view()).re;
            if p < 1e-14 {
                return 0.0;
            }
            let m1 = trace_product(q.view(), a.view()).re;
            let m2 = trace_product(q2.view(), a.view()).re;
            w * (m2 - m1 * m1 / p)
        })
        .sum()
}

/// Unnormalized conditional states of mode 1 for the measurement of `X_2^(n)` (`y = false`)
/// or `Y_2^(n)` (`y = true`) on mode 2, with integration weights.
fn mode2_conditionals(rho: &DensityMatrix, n: u32, y: bool, grid: &[f64]) -> Result<Vec<(Array2<C64>, f64)>> {
    let n2 = rho.space().dims()[1];
    if n == 1 {
        let dx = uniform_step(grid)?;
        let theta = if y { FRAC_PI_2 } else { 0.0 };
        return grid
            .iter()
            .map(|&x| {
                let k = fock::quadrature_wavefunctions(n2, x, theta, 1.0);
                Ok((project_unnormalized(rho, 1, &k)?, dx))
            })
            .collect();
    }
    let [xo, yo, ..] = order_quadratures(n2, n);
    let (vals, vecs) = linalg::eigh(if y { yo.view() } else { xo.view() })?;
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut out = Vec::new();
    let mut k = 0;
    while k < vals.len() {
        let mut end = k + 1;
        while end < vals.len() && (vals[end] - vals[k]).abs() < 1e-9 * scale {
            end += 1;
        }
        let mut a = linalg::zeros(rho.space().dims()[0], rho.space().dims()[0]);
        for c in k..end {
            let kernel: Vec<C64> = (0..n2).map(|r| vecs[[r, c]].conj()).collect();
            a += &project_unnormalized(rho, 1, &kernel)?;
        }
        out.push((a, 1.0));
        k = end;
    }
    Ok(out)
}

/// Generalized Reid ratio `E_r^(m,n)`; steering from mode 2 to mode 1 when below 1.
///
/// `n = 1` uses continuous homodyne outcomes on `grid` (unit-vacuum-variance labels);
/// `n >= 2` measures the truncated operator in its eigenbasis.
pub fn reid(rho: &DensityMatrix, m: u32, n: u32, grid: &[f64]) -> Result<f64> {
    let (n1, _) = check_two_mode(rho)?;
    for (name, v) in [("m", m), ("n", n)] {
        if !(1..=3).contains(&v) {
            return Err(Error::InvalidParameter { field: name.into(), reason: format!("order {v} outside 1..=3") });
        }
    }
    let [x, y, x2, y2, c] = order_quadratures(n1, m);
    let reduced = fock::partial_trace(rho, &[0])?;
    let denom = trace_product(c.view(), reduced.data().view()).norm();
    if denom < 1e-10 {
        return Err(Error::VanishingCommutator { value: denom });
    }
    let vx = averaged_variance(&x, &x2, &mode2_conditionals(rho, n, false, grid)?);
    let vy = averaged_variance(&y, &y2, &mode2_conditionals(rho, n, true, grid)?);
    Ok(2.0 * (vx.max(0.0) * vy.max(0.0)).sqrt() / denom)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FisherGrid {
    /// Scan points over `theta in [0, pi)`; `X_{theta + pi} = -X_theta` covers the rest.
    pub thetas: usize,
    /// Outcome grid shared by both quadratures.
    pub x: Vec<f64>,
    pub refine_iterations: usize,
}

impl Default for FisherGrid {
    fn default() -> Self {
        Self { thetas: 64, x: default_outcome_grid(), refine_iterations: 24 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FisherReport {
    pub e_f: f64,
    pub f_hom: f64,
    pub v_hom: f64,
    pub theta_f: f64,
    pub theta_v: f64,
}

/// Largest deviation of a grid-integrated distribution from unit mass.
pub const GRID_MASS_TOLERANCE: f64 = 1e-3;
/// Probability floor inside the Fisher integrand.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

struct FisherKernel {
    weights: Vec<f64>,
    /// `Phi_1 U_k` for each retained spectral component of rho.
    left: Vec<Array2<C64>>,
    phi2: Array2<f64>,
    x0: f64,
    dx: f64,
}

impl FisherKernel {
    fn new(rho: &DensityMatrix, grid: &[f64]) -> Result<Self> {
        let (n1, n2) = check_two_mode(rho)?;
        let dx = uniform_step(grid)?;
        let g = grid.len();
        let phi = |n: usize| {
            let mut m = Array2::zeros((g, n));
            for (r, &x) in grid.iter().enumerate() {
                for (c, v) in fock::quadrature_wavefunctions_real(n, x, 1.0).into_iter().enumerate() {
                    m[[r, c]] = v;
                }
            }
            m
        };
        let phi1 = phi(n1).mapv(|v: f64| C64::new(v, 0.0));
        let (vals, vecs) = linalg::eigh(rho.data().view())?;
        let mut weights = Vec::new();
        let mut left = Vec::new();
        for (k, &l) in vals.iter().enumerate() {
            if l > 1e-12 {
                let u = Array2::from_shape_fn((n1, n2), |(i, j)| vecs[[i * n2 + j, k]]);
                weights.push(l);
                left.push(linalg::matmul(phi1.view(), u.view()));
            }
        }
        Ok(Self { weights, left, phi2: phi(n2), x0: grid[0], dx })
    }

    /// Outcome-averaged CFI and conditional variance of `X_1` at one angle, plus the grid mass.
    fn evaluate(&self, theta: f64) -> (f64, f64, f64) {
        let (g, n2) = self.phi2.dim();
        let phi2t = Array2::from_shape_fn((n2, g), |(n, x)| C64::from_polar(self.phi2[[x, n]], -(n as f64) * theta));
        // joint[x1, x2] = <x1, x2| rho |x1, x2>
        let mut joint = Array2::<f64>::zeros((g, g));
        for (w, l) in self.weights.iter().zip(&self.left) {
            let c = linalg::matmul(l.view(), phi2t.view());
            joint.zip_mut_with(&c, |j, v| *j += w * v.norm_sqr());
        }
        let dx = self.dx;
        let (mut mass, mut fisher, mut var) = (0.0, 0.0, 0.0);
        for col in joint.columns() {
            let p2 = col.sum() * dx;
            mass += p2 * dx;
            if p2 * dx < 1e-14 {
                continue;
            }
            let cond: Vec<f64> = col.iter().map(|v| v / p2).collect();
            let mut cfi = 0.0;
            let (mut m1, mut m2) = (0.0, 0.0);
            for i in 0..g {
                let d = if i == 0 {
                    (cond[1] - cond[0]) / dx
                } else if i == g - 1 {
                    (cond[g - 1] - cond[g - 2]) / dx
                } else {
                    (cond[i + 1] - cond[i - 1]) / (2.0 * dx)
                };
                cfi += d * d / cond[i].max(PROBABILITY_FLOOR) * dx;
                let x = self.x0 + i as f64 * dx;
                m1 += cond[i] * x * dx;
                m2 += cond[i] * x * x * dx;
            }
            fisher += p2 * cfi * dx;
            var += p2 * (m2 - m1 * m1) * dx;
        }
        let norm = mass.max(f64::MIN_POSITIVE);
        (fisher / norm, var / norm, mass)
    }
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, iterations: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Fisher-information steering `E_f = max(0, F_hom - 4 V_hom)` with the shift family
/// `P(x1 - xi)` of `X_1 = b1 + b1^dagger` conditioned on `X_{theta,2}` outcomes.
pub fn fisher_steering(rho: &DensityMatrix, grid: &FisherGrid) -> Result<FisherReport> {
    if grid.thetas == 0 {
        return Err(Error::Precondition("empty theta grid".into()));
    }
    let kernel = FisherKernel::new(rho, &grid.x)?;
    let step = PI / grid.thetas as f64;
    let scan: Vec<(f64, (f64, f64, f64))> =
        (0..grid.thetas).map(|k| k as f64 * step).map(|t| (t, kernel.evaluate(t))).collect();
    for (_, (_, _, mass)) in &scan {
        if (mass - 1.0).abs() > GRID_MASS_TOLERANCE {
            return Err(Error::GridResolution { integral: *mass });
        }
    }
    let best_f = scan.iter().max_by(|a, b| a.1 .0.total_cmp(&b.1 .0)).expect("non-empty scan");
    let best_v = scan.iter().min_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).expect("non-empty scan");
    let (theta_f, neg_f) = golden_min(best_f.0 - step, best_f.0 + step, grid.refine_iterations, |t| -kernel.evaluate(t).0);
    let (theta_v, v) = golden_min(best_v.0 - step, best_v.0 + step, grid.refine_iterations, |t| kernel.evaluate(t).1);
    let (f_hom, theta_f) = if -neg_f > best_f.1 .0 { (-neg_f, theta_f) } else { (best_f.1 .0, best_f.0) };
    let (v_hom, theta_v) = if v < best_v.1 .1 { (v, theta_v) } else { (best_v.1 .1, best_v.0) };
    Ok(FisherReport { e_f: (f_hom - 4.0 * v_hom).max(0.0), f_hom, v_hom, theta_f, theta_v })
}
