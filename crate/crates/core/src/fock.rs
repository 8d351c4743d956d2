//! Truncated multimode Fock spaces, operators and states.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use log::warn;
use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::sparse::CsrMatrix;
use crate::{Error, Result, C64, I, ONE, ZERO};

/// Population on the top two levels of any mode above which a warning is logged.
pub const LEAKAGE_WARN: f64 = 1e-4;

/// Ordered list of per-mode cutoffs. Mode `k` has levels `0..dims[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl TryFrom<Vec<usize>> for HilbertSpace {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<HilbertSpace> for Vec<usize> {
    fn from(s: HilbertSpace) -> Self {
        s.dims
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", parts.join("x"))
    }
}

impl HilbertSpace {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::InvalidSpace("no modes".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpace(format!("mode dimension {d} < 2")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidSpace("total dimension overflows".into()))?;
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Basis index of the occupation tuple `levels`.
    pub fn index(&self, levels: &[usize]) -> usize {
        assert_eq!(levels.len(), self.dims.len(), "level tuple has wrong length");
        levels.iter().zip(&self.dims).fold(0, |acc, (&n, &d)| {
            assert!(n < d, "level {n} beyond cutoff {d}");
            acc * d + n
        })
    }

    /// Occupation tuple of basis index `index`.
    pub fn levels(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    /// Level of `mode` in basis index `index`.
    pub fn level(&self, index: usize, mode: usize) -> usize {
        let stride: usize = self.dims[mode + 1..].iter().product();
        (index / stride) % self.dims[mode]
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.modes() {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange { mode, modes: self.modes() })
        }
    }

    /// Space of the listed modes, in increasing mode order.
    pub fn subspace(&self, keep: &[usize]) -> Result<Self> {
        let keep = normalize_modes(self, keep)?;
        Self::new(keep.iter().map(|&k| self.dims[k]).collect::<Vec<_>>())
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims }
    }
}

fn normalize_modes(space: &HilbertSpace, modes: &[usize]) -> Result<Vec<usize>> {
    if modes.is_empty() {
        return Err(Error::Precondition("empty mode set".into()));
    }
    let mut out = modes.to_vec();
    out.sort_unstable();
    out.dedup();
    for &m in &out {
        space.check_mode(m)?;
    }
    Ok(out)
}

/// Sparse operator on a `HilbertSpace`.
///
/// Arithmetic through the `std::ops` traits panics when the operand spaces
/// differ; every constructor checks shapes, so that only happens on mixed-up
/// call sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    data: CsrMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, data: CsrMatrix) -> Result<Self> {
        let d = space.dim();
        if data.nrows() != d || data.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, space {space} has dimension {d}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { space, data })
    }

    pub fn from_dense(space: HilbertSpace, m: ArrayView2<'_, C64>) -> Result<Self> {
        Self::new(space, CsrMatrix::from_dense(m, 0.0))
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), data: CsrMatrix::zeros(d, d) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn data(&self) -> &CsrMatrix {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        self.data.to_dense()
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), data: self.data.adjoint() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { space: self.space.clone(), data: self.data.scale(s) }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(identity(&self.space), |acc, _| &acc * self)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.data.hermitian_deviation()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.max_abs()
    }

    pub fn apply(&self, psi: &PureState) -> Array1<C64> {
        assert_eq!(self.space, psi.space, "operator and state live on different spaces");
        self.data.mul_vec(&psi.data)
    }

    /// `Tr(rho * self)`.
    pub fn expect(&self, rho: &DensityMatrix) -> C64 {
        assert_eq!(self.space, rho.space, "operator and state live on different spaces");
        let mut acc = ZERO;
        for (i, j, v) in self.data.triplets() {
            acc += v * rho.data[[j, i]];
        }
        acc
    }

    fn binary(&self, other: &Self, f: impl FnOnce(&CsrMatrix, &CsrMatrix) -> CsrMatrix) -> Self {
        assert_eq!(self.space, other.space, "operators live on different spaces");
        Self { space: self.space.clone(), data: f(&self.data, &other.data) }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.binary(rhs, |a, b| a.axpby(ONE, b, ONE))
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.binary(rhs, |a, b| a.axpby(ONE, b, -ONE))
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.binary(rhs, |a, b| a.matmul(b))
    }
}

impl Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(C64::new(self, 0.0))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

pub fn identity(space: &HilbertSpace) -> Operator {
    Operator { space: space.clone(), data: CsrMatrix::identity(space.dim()) }
}

/// Lifts a single-mode matrix to `I ⊗ … ⊗ single ⊗ … ⊗ I`.
pub fn embed(space: &HilbertSpace, mode: usize, single: &CsrMatrix) -> Result<Operator> {
    space.check_mode(mode)?;
    let n = space.dims()[mode];
    if single.nrows() != n || single.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "single-mode factor is {}x{}, mode {mode} has dimension {n}",
            single.nrows(),
            single.ncols()
        )));
    }
    let left: usize = space.dims()[..mode].iter().product();
    let right: usize = space.dims()[mode + 1..].iter().product();
    let data = CsrMatrix::identity(left).kron(single).kron(&CsrMatrix::identity(right));
    Operator::new(space.clone(), data)
}

/// Operator diagonal in the Fock basis.
pub fn diagonal(space: &HilbertSpace, values: &[f64]) -> Result<Operator> {
    let diag: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    Operator::new(space.clone(), CsrMatrix::from_diagonal(&diag))
}

/// Single-mode annihilation matrix with `<n-1|a|n> = sqrt(n)`.
pub fn destroy_single(n: usize) -> CsrMatrix {
    let entries = (1..n).map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0))).collect();
    CsrMatrix::from_triplets(n, n, entries)
}

pub fn destroy(space: &HilbertSpace, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    embed(space, mode, &destroy_single(space.dims()[mode]))
}

pub fn create(space: &HilbertSpace, mode: usize) -> Result<Operator> {
    Ok(destroy(space, mode)?.adjoint())
}

pub fn number(space: &HilbertSpace, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    let n = space.dims()[mode];
    let diag: Vec<C64> = (0..n).map(|k| C64::new(k as f64, 0.0)).collect();
    embed(space, mode, &CsrMatrix::from_diagonal(&diag))
}

/// Parity `(-1)^n` of one mode.
pub fn parity(space: &HilbertSpace, mode: usize) -> Result<Operator> {
    space.check_mode(mode)?;
    let n = space.dims()[mode];
    let diag: Vec<C64> = (0..n).map(|k| if k % 2 == 0 { ONE } else { -ONE }).collect();
    embed(space, mode, &CsrMatrix::from_diagonal(&diag))
}

/// Dense single-mode `exp(amp a^dagger - amp^* a)` at cutoff `n`.
pub fn displacement_single(n: usize, amp: C64) -> Result<Array2<C64>> {
    let a = destroy_single(n).to_dense();
    // G = i(amp a^dagger - amp^* a) is Hermitian and exp(-i G) = D(amp).
    let gen = (&linalg::adjoint(a.view()) * amp - &a * amp.conj()) * I;
    linalg::expm_hermitian(gen.view(), 1.0)
}

/// `exp(amp a^dagger - amp^* a)` on `mode`, exponentiated in the truncated space.
pub fn displacement(space: &HilbertSpace, mode: usize, amp: C64) -> Result<Operator> {
    space.check_mode(mode)?;
    let n = space.dims()[mode];
    if amp.norm_sqr() > n as f64 / 4.0 {
        warn!("displacement |amp|^2 = {:.3} exceeds a quarter of the cutoff {n}", amp.norm_sqr());
    }
    let d = displacement_single(n, amp)?;
    embed(space, mode, &CsrMatrix::from_dense(d.view(), 0.0))
}

/// `exp(-i * scale * generator)` for Hermitian `generator`.
pub fn expm_unitary(generator: &Operator, scale: f64) -> Result<Operator> {
    let deviation = generator.hermitian_deviation();
    if deviation > 1e-8 {
        return Err(Error::NotHermitian { deviation });
    }
    let u = linalg::expm_hermitian(generator.to_dense().view(), scale)?;
    Operator::new(generator.space.clone(), CsrMatrix::from_dense(u.view(), 1e-15))
}

/// Density matrix on a `HilbertSpace`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    data: Array2<C64>,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian within 1e-10, unit trace within 1e-9,
    /// eigenvalues at least -1e-9.
    pub fn new(space: HilbertSpace, data: Array2<C64>) -> Result<Self> {
        let rho = Self::from_parts(space, data)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape-checked constructor that skips the spectral checks.
    pub fn from_parts(space: HilbertSpace, data: Array2<C64>) -> Result<Self> {
        let d = space.dim();
        if data.dim() != (d, d) {
            return Err(Error::ShapeMismatch(format!("matrix is {:?}, space {space} has dimension {d}", data.dim())));
        }
        Ok(Self { space, data })
    }

    pub fn validate(&self) -> Result<()> {
        let deviation = linalg::hermitian_deviation(self.data.view());
        if deviation > 1e-10 {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {deviation:.3e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("trace {tr:.12} != 1")));
        }
        let min = linalg::eigvalsh(self.data.view())?.first().copied().unwrap_or(0.0);
        if min < -1e-9 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = &psi.data;
        let data = Array2::from_shape_fn((v.len(), v.len()), |(i, j)| v[i] * v[j].conj());
        Self { space: psi.space.clone(), data }
    }

    pub fn from_diagonal(space: HilbertSpace, probs: &[f64]) -> Result<Self> {
        let d = space.dim();
        if probs.len() != d {
            return Err(Error::ShapeMismatch(format!("{} probabilities for dimension {d}", probs.len())));
        }
        let mut data = linalg::zeros(d, d);
        for (i, &p) in probs.iter().enumerate() {
            data[[i, i]] = C64::new(p, 0.0);
        }
        Self::new(space, data)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<C64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(self.data.view()).re
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.data.diag().iter().map(|v| v.re).collect()
    }

    /// Per-mode population on the top two Fock levels.
    pub fn leakage(&self) -> Vec<f64> {
        leakage(&self.space, &self.populations())
    }

    /// Like `leakage`, logging a warning for any mode above `LEAKAGE_WARN`.
    pub fn check_leakage(&self, context: &str) -> Vec<f64> {
        let l = self.leakage();
        warn_leakage(context, &l);
        l
    }

    /// `U rho U^dagger`.
    pub fn transform(&self, u: &Operator) -> Self {
        assert_eq!(self.space, u.space, "operator and state live on different spaces");
        // U rho U† = (U (U rho)†)†
        let ur = u.data.mul_dense(self.data.view());
        let tmp = u.data.mul_dense(linalg::adjoint(ur.view()).view());
        Self { space: self.space.clone(), data: linalg::adjoint(tmp.view()) }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let (da, db) = (self.dim(), other.dim());
        let data = Array2::from_shape_fn((da * db, da * db), |(i, j)| {
            self.data[[i / db, j / db]] * other.data[[i % db, j % db]]
        });
        Self { space: self.space.tensor(&other.space), data }
    }

    /// Re-imposes Hermiticity and unit trace.
    pub fn renormalize(&mut self) {
        linalg::hermitize(&mut self.data);
        let tr = self.trace();
        self.data.mapv_inplace(|v| v / tr);
    }
}

pub(crate) fn warn_leakage(context: &str, per_mode: &[f64]) {
    for (k, &l) in per_mode.iter().enumerate() {
        if l > LEAKAGE_WARN {
            warn!("{context}: mode {k} holds {l:.3e} population on its top two levels");
        }
    }
}

/// Per-mode population on the top two levels, from basis populations.
pub fn leakage(space: &HilbertSpace, populations: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; space.modes()];
    for (i, &p) in populations.iter().enumerate() {
        for (k, &d) in space.dims().iter().enumerate() {
            if space.level(i, k) + 2 >= d {
                out[k] += p;
            }
        }
    }
    out
}

/// Normalized state vector on a `HilbertSpace`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    space: HilbertSpace,
    data: Array1<C64>,
}

impl PureState {
    /// Requires unit norm within 1e-12.
    pub fn new(space: HilbertSpace, data: Array1<C64>) -> Result<Self> {
        if data.len() != space.dim() {
            return Err(Error::ShapeMismatch(format!("vector has {} entries, space {space} has dimension {}", data.len(), space.dim())));
        }
        let norm = data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("norm {norm:.15} != 1")));
        }
        Ok(Self { space, data })
    }

    /// Normalizes `data`; errors on a zero vector.
    pub fn normalized(space: HilbertSpace, data: Array1<C64>) -> Result<Self> {
        let norm = data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize vector of norm {norm}")));
        }
        Self::new(space, data.mapv(|v| v / norm))
    }

    pub fn basis(space: &HilbertSpace, levels: &[usize]) -> Self {
        let mut data = Array1::from_elem(space.dim(), ZERO);
        data[space.index(levels)] = ONE;
        Self { space: space.clone(), data }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn data(&self) -> &Array1<C64> {
        &self.data
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.space, other.space, "states live on different spaces");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let db = other.data.len();
        let data = Array1::from_shape_fn(self.data.len() * db, |i| self.data[i / db] * other.data[i % db]);
        Self { space: self.space.tensor(&other.space), data }
    }

    pub fn leakage(&self) -> Vec<f64> {
        let pops: Vec<f64> = self.data.iter().map(|v| v.norm_sqr()).collect();
        leakage(&self.space, &pops)
    }
}

/// Reduced state on the modes in `keep`, in increasing mode order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let space = rho.space();
    let keep = normalize_modes(space, keep)?;
    let traced: Vec<usize> = (0..space.modes()).filter(|m| !keep.contains(m)).collect();
    let kept_space = space.subspace(&keep)?;
    if traced.is_empty() {
        return Ok(rho.clone());
    }
    let traced_dims: Vec<usize> = traced.iter().map(|&m| space.dims()[m]).collect();
    let (dk, dt) = (kept_space.dim(), traced_dims.iter().product::<usize>());
    // full[k * dt + t] is the full basis index of kept index k and traced index t.
    let mut full = vec![0usize; dk * dt];
    for (i, slot) in (0..space.dim()).map(|i| (i, space.levels(i))) {
        let k = keep.iter().fold(0, |acc, &m| acc * space.dims()[m] + slot[m]);
        let t = traced.iter().fold(0, |acc, &m| acc * space.dims()[m] + slot[m]);
        full[k * dt + t] = i;
    }
    let data = rho.data();
    let out = Array2::from_shape_fn((dk, dk), |(i, j)| {
        (0..dt).map(|t| data[[full[i * dt + t], full[j * dt + t]]]).sum::<C64>()
    });
    DensityMatrix::from_parts(kept_space, out)
}

/// Partial transpose on `mode` of a two-mode density matrix.
pub fn partial_transpose(rho: &DensityMatrix, mode: usize) -> Result<Array2<C64>> {
    let space = rho.space();
    if space.modes() != 2 {
        return Err(Error::Precondition(format!("partial transpose needs two modes, got {}", space.modes())));
    }
    space.check_mode(mode)?;
    let (n1, n2) = (space.dims()[0], space.dims()[1]);
    let data = rho.data();
    Ok(Array2::from_shape_fn((n1 * n2, n1 * n2), |(r, c)| {
        let (i1, i2, j1, j2) = (r / n2, r % n2, c / n2, c % n2);
        if mode == 0 {
            data[[j1 * n2 + i2, i1 * n2 + j2]]
        } else {
            data[[i1 * n2 + j2, j1 * n2 + i2]]
        }
    }))
}

/// Real quadrature wavefunctions `psi_n(x / scale) / sqrt(scale)` for `n < count`.
///
/// `psi_n` is the eigenfunction of `b + b^dagger` (vacuum variance 1), computed
/// through normalized Hermite functions so that no factorial is ever formed.
pub fn quadrature_wavefunctions_real(count: usize, x: f64, scale: f64) -> Vec<f64> {
    let y = x / scale / std::f64::consts::SQRT_2;
    let pref = (2.0f64).powf(-0.25) / scale.sqrt();
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * y * y).exp();
    out.push(pref * cur);
    for n in 0..count.saturating_sub(1) {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * y * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(pref * cur);
    }
    out
}

/// `<x,theta|n>` for `n < count` in the scaled convention, where `|x,theta>`
/// is the eigenvector of `scale * (b e^{-i theta} + b^dagger e^{i theta})`.
pub fn quadrature_wavefunctions(count: usize, x: f64, theta: f64, scale: f64) -> Vec<C64> {
    quadrature_wavefunctions_real(count, x, scale)
        .into_iter()
        .enumerate()
        .map(|(n, v)| C64::from_polar(v, -(n as f64) * theta))
        .collect()
}

/// `<x,theta|n>` with `X_theta = b e^{-i theta} + b^dagger e^{i theta}`.
pub fn quadrature_wavefunction(n: usize, x: f64, theta: f64) -> C64 {
    quadrature_wavefunctions(n + 1, x, theta, 1.0)[n]
}

/// Dense Kronecker product of two matrices.
pub fn kron_dense(a: ArrayView2<'_, C64>, b: ArrayView2<'_, C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(dims: &[usize]) -> HilbertSpace {
        HilbertSpace::new(dims.to_vec()).unwrap()
    }

    #[test]
    fn destroy_single_mode_elements() {
        let a = destroy(&space(&[3]), 0).unwrap();
        assert_eq!(a.data().get(0, 1), ONE);
        assert!((a.data().get(1, 2).re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.data().nnz(), 2);
    }

    #[test]
    fn destroy_kron_structure() {
        let s = space(&[2, 2]);
        let a = destroy(&s, 1).unwrap();
        assert_eq!(a.data().get(s.index(&[0, 0]), s.index(&[0, 1])), ONE);
        assert_eq!(a.data().get(s.index(&[1, 0]), s.index(&[1, 1])), ONE);
        assert_eq!(a.data().nnz(), 2);
    }

    #[test]
    fn destroy_rejects_bad_mode() {
        assert!(matches!(destroy(&space(&[3, 3]), 2), Err(Error::ModeOutOfRange { mode: 2, modes: 2 })));
    }

    #[test]
    fn invalid_spaces_rejected() {
        assert!(HilbertSpace::new(vec![]).is_err());
        assert!(HilbertSpace::new(vec![3, 1]).is_err());
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let s = space(&[10]);
        let a = destroy(&s, 0).unwrap();
        let c = a.commutator(&a.adjoint()).to_dense();
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c[[i, j]] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn index_roundtrip() {
        let s = space(&[3, 4, 5]);
        for i in 0..s.dim() {
            assert_eq!(s.index(&s.levels(i)), i);
        }
        assert_eq!(s.index(&[1, 2, 3]), (4 + 2) * 5 + 3);
    }

    #[test]
    fn displacement_of_vacuum_is_poisson() {
        let s = space(&[20]);
        let amp = C64::from_polar(0.5, 0.7);
        let d = displacement(&s, 0, amp).unwrap();
        let psi = d.apply(&PureState::basis(&s, &[0]));
        let mut p = (-amp.norm_sqr()).exp();
        for (n, v) in psi.iter().enumerate() {
            if n > 0 {
                p *= amp.norm_sqr() / n as f64;
            }
            assert!((v.norm_sqr() - p).abs() < 1e-6, "n = {n}");
        }
    }

    #[test]
    fn displacement_inverse() {
        let s = space(&[20]);
        let amp = C64::from_polar(0.63, -1.1);
        let prod = &displacement(&s, 0, amp).unwrap() * &displacement(&s, 0, -amp).unwrap();
        let id = identity(&s);
        assert!((&prod - &id).max_abs() < 1e-9);
        assert!((&displacement(&s, 0, ZERO).unwrap() - &id).max_abs() < 1e-12);
    }

    #[test]
    fn expm_unitary_basics() {
        let s = space(&[6]);
        let n = number(&s, 0).unwrap();
        assert!((&expm_unitary(&Operator::zeros(&s), 1.0).unwrap() - &identity(&s)).max_abs() < 1e-12);
        let p = expm_unitary(&n, std::f64::consts::PI).unwrap();
        assert!((&(&p * &p) - &identity(&s)).max_abs() < 1e-12);
        let u = expm_unitary(&n, std::f64::consts::FRAC_PI_2).unwrap();
        let v = u.apply(&PureState::basis(&s, &[1]));
        assert!((v[1] - C64::new(0.0, -1.0)).norm() < 1e-12);
        let a = destroy(&s, 0).unwrap();
        assert!(matches!(expm_unitary(&a, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = PureState::normalized(space(&[3]), ndarray::array![ONE, I, C64::new(0.5, 0.0)]).unwrap().to_density();
        let b = DensityMatrix::from_diagonal(space(&[2]), &[0.25, 0.75]).unwrap();
        let ab = a.tensor(&b);
        let ra = partial_trace(&ab, &[0]).unwrap();
        let rb = partial_trace(&ab, &[1]).unwrap();
        assert!((ra.data() - a.data()).iter().all(|v| v.norm() < 1e-12));
        assert!((rb.data() - b.data()).iter().all(|v| v.norm() < 1e-12));
        assert!(partial_trace(&ab, &[]).is_err());
    }

    #[test]
    fn partial_transpose_is_involution() {
        let s = space(&[2, 3]);
        let psi = PureState::normalized(
            s.clone(),
            Array1::from_shape_fn(6, |i| C64::new(i as f64 + 1.0, (i * i) as f64 * 0.3)),
        )
        .unwrap();
        let rho = psi.to_density();
        for mode in 0..2 {
            let pt = partial_transpose(&rho, mode).unwrap();
            let back = partial_transpose(&DensityMatrix::from_parts(s.clone(), pt).unwrap(), mode).unwrap();
            assert!((&back - rho.data()).iter().all(|v| v.norm() < 1e-15));
        }
        let three = DensityMatrix::from_pure(&PureState::basis(&space(&[2, 2, 2]), &[0, 0, 0]));
        assert!(partial_transpose(&three, 0).is_err());
    }

    #[test]
    fn quadrature_parity_and_normalization() {
        for n in (1..12).step_by(2) {
            assert!(quadrature_wavefunction(n, 0.0, 0.4).norm() < 1e-15);
        }
        let dx = 0.01;
        let (mut norm, mut var) = (0.0, 0.0);
        for k in 0..=1600 {
            let x = -8.0 + k as f64 * dx;
            let p = quadrature_wavefunction(0, x, 0.0).norm_sqr();
            norm += p * dx;
            var += x * x * p * dx;
        }
        assert!((norm - 1.0).abs() < 1e-6);
        assert!((var - 1.0).abs() < 1e-4);
    }

    #[test]
    fn transform_matches_dense() {
        let s = space(&[4]);
        let u = displacement(&s, 0, C64::new(0.3, 0.2)).unwrap();
        let rho = PureState::basis(&s, &[1]).to_density();
        let got = rho.transform(&u);
        let ud = u.to_dense();
        let want = ud.dot(rho.data()).dot(&linalg::adjoint(ud.view()));
        assert!((got.data() - &want).iter().all(|v| v.norm() < 1e-14));
    }
}
