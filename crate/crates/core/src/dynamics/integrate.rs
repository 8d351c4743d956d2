//! Adaptive Dormand-Prince 5(4) integration of the master equation in matrix form.

use log::{debug, warn};
use ndarray::{Array2, Zip};

use super::lindblad::LindbladSpec;
use crate::fock::{self, DensityMatrix};
use crate::sparse::CsrMatrix;
use crate::{linalg, Error, Result, C64, I, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Relative and absolute error tolerance per step.
    pub tol: f64,
    /// Smallest step before the run is declared stiff.
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, h_min: 1e-10, h_max: f64::INFINITY, max_steps: usize::MAX }
    }
}

/// Diagnostics accumulated since the previous output time.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    /// Per-mode population on the top two Fock levels at the output time.
    pub leakage: Vec<f64>,
    /// Largest `|Tr rho - 1|` seen before renormalization.
    pub trace_drift: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvolveStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub max_trace_drift: f64,
    pub max_leakage: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub stats: EvolveStats,
}

struct HarmonicTerm {
    amplitude: C64,
    frequency: f64,
    /// (storage position, value) of `-i * op`.
    forward: Vec<(usize, C64)>,
    /// (storage position, value) of `-i * op^dagger`.
    backward: Vec<(usize, C64)>,
}

/// Right-hand side `K rho + (K rho)^dagger + sum_k 2 gamma_k c_k rho c_k^dagger`
/// with `K(t) = -i H(t) - sum_k gamma_k c_k^dagger c_k`, valid for Hermitian `rho`.
pub struct MasterRhs {
    base: Vec<C64>,
    k: CsrMatrix,
    harmonics: Vec<HarmonicTerm>,
    jumps: Vec<(CsrMatrix, CsrMatrix, f64)>,
}

impl MasterRhs {
    pub fn new(spec: &LindbladSpec) -> Self {
        let d = spec.space().dim();
        let mut static_k = spec.hamiltonian.static_part.data().scale(-I);
        for (c, rate) in &spec.collapse {
            let cdc = c.data().adjoint().matmul(c.data());
            static_k = static_k.axpby(ONE, &cdc, C64::new(-rate, 0.0));
        }
        let mut pattern: Vec<(usize, usize, C64)> = static_k.triplets().map(|(i, j, _)| (i, j, ONE)).collect();
        for h in &spec.hamiltonian.harmonics {
            for (i, j, _) in h.op.data().triplets() {
                pattern.push((i, j, ONE));
                pattern.push((j, i, ONE));
            }
        }
        let mut k = CsrMatrix::from_triplets(d, d, pattern);
        k.data_mut().iter_mut().for_each(|v| *v = ZERO);
        let mut base = vec![ZERO; k.nnz()];
        for (i, j, v) in static_k.triplets() {
            base[k.position(i, j).expect("static entry in pattern")] += v;
        }
        let harmonics = spec
            .hamiltonian
            .harmonics
            .iter()
            .map(|h| {
                let mut forward = Vec::new();
                let mut backward = Vec::new();
                for (i, j, v) in h.op.data().triplets() {
                    forward.push((k.position(i, j).expect("harmonic entry in pattern"), -I * v));
                    backward.push((k.position(j, i).expect("harmonic entry in pattern"), -I * v.conj()));
                }
                HarmonicTerm { amplitude: h.amplitude, frequency: h.frequency, forward, backward }
            })
            .collect();
        let jumps = spec
            .collapse
            .iter()
            .filter(|(_, r)| *r > 0.0)
            .map(|(c, r)| (c.data().clone(), c.data().adjoint(), 2.0 * r))
            .collect();
        Self { base, k, harmonics, jumps }
    }

    fn set_time(&mut self, t: f64) {
        let data = self.k.data_mut();
        data.copy_from_slice(&self.base);
        for h in &self.harmonics {
            let phase = h.amplitude * C64::from_polar(1.0, h.frequency * t);
            let conj = phase.conj();
            for &(p, v) in &h.forward {
                data[p] += phase * v;
            }
            for &(p, v) in &h.backward {
                data[p] += conj * v;
            }
        }
    }

    /// Writes the time derivative at `(t, rho)` into `out`.
    pub fn eval(&mut self, t: f64, rho: &Array2<C64>, out: &mut Array2<C64>) {
        self.set_time(t);
        out.fill(ZERO);
        self.k.mul_dense_into(ONE, rho.view(), out.view_mut());
        let d = out.nrows();
        for i in 0..d {
            out[[i, i]] = C64::new(2.0 * out[[i, i]].re, 0.0);
            for j in (i + 1)..d {
                let (a, b) = (out[[i, j]], out[[j, i]]);
                out[[i, j]] = a + b.conj();
                out[[j, i]] = b + a.conj();
            }
        }
        for (c, cd, rate) in &self.jumps {
            let crho = c.mul_dense(rho.view());
            cd.dense_mul_into(C64::new(*rate, 0.0), crho.view(), out.view_mut());
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Evolves `rho0` over `t_grid`, storing the state at every grid time.
pub fn evolve(spec: &LindbladSpec, rho0: &DensityMatrix, t_grid: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    let mut times = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    let mut diagnostics = Vec::with_capacity(t_grid.len());
    let stats = evolve_observed(spec, rho0, t_grid, opts, |t, rho, diag| {
        times.push(t);
        states.push(rho.clone());
        diagnostics.push(diag.clone());
        Ok(())
    })?;
    Ok(Trajectory { times, states, diagnostics, stats })
}

/// Evolves `rho0` over `t_grid`, handing each grid-time state to `observer`
/// instead of storing it.
pub fn evolve_observed<F>(
    spec: &LindbladSpec,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: &EvolveOptions,
    mut observer: F,
) -> Result<EvolveStats>
where
    F: FnMut(f64, &DensityMatrix, &StepDiagnostics) -> Result<()>,
{
    if rho0.space() != spec.space() {
        return Err(Error::ShapeMismatch("initial state and generator live on different spaces".into()));
    }
    if t_grid.is_empty() {
        return Err(Error::Precondition("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Precondition("time grid must be finite and strictly increasing".into()));
    }
    let space = spec.space().clone();
    let d = space.dim();
    let mut rhs = MasterRhs::new(spec);
    let mut stats = EvolveStats { max_leakage: vec![0.0; space.modes()], ..Default::default() };

    let mut y = rho0.data().clone();
    let mut t = t_grid[0];
    let report = |y: &Array2<C64>, drift: f64, stats: &mut EvolveStats| -> Result<(DensityMatrix, StepDiagnostics)> {
        let rho = DensityMatrix::from_parts(space.clone(), y.clone())?;
        let leakage = rho.leakage();
        for (m, l) in stats.max_leakage.iter_mut().zip(&leakage) {
            *m = m.max(*l);
        }
        Ok((rho, StepDiagnostics { leakage, trace_drift: drift }))
    };
    let (rho, diag) = report(&y, 0.0, &mut stats)?;
    observer(t, &rho, &diag)?;

    let mut k: Vec<Array2<C64>> = (0..7).map(|_| linalg::zeros(d, d)).collect();
    let mut stage = linalg::zeros(d, d);
    let mut err = linalg::zeros(d, d);
    rhs.eval(t, &y, &mut k[0]);
    stats.rhs_evals += 1;

    let tol = opts.tol;
    let scale_norm = |v: &Array2<C64>, a: &Array2<C64>, b: &Array2<C64>| -> f64 {
        let mut acc = 0.0;
        Zip::from(v).and(a).and(b).for_each(|v, a, b| {
            let sc = tol + tol * a.norm().max(b.norm());
            acc += (v.norm() / sc).powi(2);
        });
        (acc / (d * d) as f64).sqrt()
    };
    let mut h = {
        let zeros = linalg::zeros(d, d);
        let d0 = scale_norm(&y, &y, &zeros);
        let d1 = scale_norm(&k[0], &y, &zeros);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(opts.h_max).min(t_grid[t_grid.len() - 1] - t_grid[0])
    };
    let mut drift_since = 0.0f64;

    for &t_out in &t_grid[1..] {
        while t < t_out {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Precondition(format!("step budget {} exhausted at t = {t}", opts.max_steps)));
            }
            let mut step = h.min(t_out - t);
            let last = step >= t_out - t;
            if last {
                step = t_out - t;
            }
            if step < opts.h_min * t.abs().max(1.0) && !last {
                return Err(Error::StepUnderflow { time: t, step, last_state: Box::new(y) });
            }
            for s in 1..7 {
                stage.assign(&y);
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        stage.scaled_add(C64::new(a * step, 0.0), kj);
                    }
                }
                rhs.eval(t + C[s] * step, &stage, &mut k[s]);
            }
            stats.rhs_evals += 6;
            // stage now holds the fifth-order solution (row 7 equals the b weights).
            err.fill(ZERO);
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    err.scaled_add(C64::new(E[j] * step, 0.0), kj);
                }
            }
            let en = scale_norm(&err, &y, &stage);
            if en <= 1.0 {
                stats.accepted += 1;
                t = if last { t_out } else { t + step };
                std::mem::swap(&mut y, &mut stage);
                linalg::hermitize(&mut y);
                let tr = linalg::trace(y.view()).re;
                let drift = (tr - 1.0).abs();
                drift_since = drift_since.max(drift);
                stats.max_trace_drift = stats.max_trace_drift.max(drift);
                let inv = C64::new(1.0 / tr, 0.0);
                y.mapv_inplace(|v| v * inv);
                // FSAL: the last stage is the derivative at the new point, up to the trace rescale.
                let (first, rest) = k.split_at_mut(6);
                std::mem::swap(&mut first[0], &mut rest[0]);
                first[0].mapv_inplace(|v| v * inv);
                let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    h = (step * factor).min(opts.h_max);
                }
            } else {
                stats.rejected += 1;
                let factor = if en.is_finite() { (0.9 * en.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h = step * factor;
                if h < opts.h_min * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { time: t, step: h, last_state: Box::new(y) });
                }
            }
        }
        let (rho, diag) = report(&y, drift_since, &mut stats)?;
        fock::warn_leakage(&format!("evolve t = {t_out}"), &diag.leakage);
        observer(t_out, &rho, &diag)?;
        drift_since = 0.0;
    }
    if stats.max_trace_drift > 1e-7 {
        warn!("evolve: trace drifted by {:.3e} within a step", stats.max_trace_drift);
    }
    debug!("evolve: {} accepted, {} rejected, {} rhs evaluations", stats.accepted, stats.rejected, stats.rhs_evals);
    Ok(stats)
}
