//! Null vector of the Liouvillian by shifted inverse iteration on a sparse LU factorization.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use log::{debug, warn};
use ndarray::{Array1, Array2};

use super::lindblad::{assemble, LindbladSpec};
use crate::fock::{DensityMatrix, HilbertSpace};
use crate::sparse::CsrMatrix;
use crate::{linalg, Error, Result, C64, ZERO};

/// Subset of coherences `|i><j|` kept in the solve.
#[derive(Clone, Debug, PartialEq)]
pub enum Sector {
    /// All `d^2` coherences.
    Full,
    /// Coherences between basis states of equal charge.
    BlockDiagonal(Vec<i64>),
    /// Coherences with both charges equal to the given value.
    Block(Vec<i64>, i64),
}

impl Sector {
    fn pairs(&self, d: usize) -> Result<Vec<(usize, usize)>> {
        let check = |c: &Vec<i64>| {
            if c.len() == d {
                Ok(())
            } else {
                Err(Error::ShapeMismatch(format!("{} charges for dimension {d}", c.len())))
            }
        };
        let all = (0..d).flat_map(|j| (0..d).map(move |i| (i, j)));
        Ok(match self {
            Sector::Full => all.collect(),
            Sector::BlockDiagonal(c) => {
                check(c)?;
                all.filter(|&(i, j)| c[i] == c[j]).collect()
            }
            Sector::Block(c, q) => {
                check(c)?;
                all.filter(|&(i, j)| c[i] == *q && c[j] == *q).collect()
            }
        })
    }
}

/// Phonon-number difference `n1 - n2` of every basis state of an (a, b1, b2) space.
pub fn mechanical_charge(space: &HilbertSpace) -> Result<Vec<i64>> {
    if space.modes() != 3 {
        return Err(Error::InvalidSpace(format!("expected (a, b1, b2), got {space}")));
    }
    Ok((0..space.dim())
        .map(|k| {
            let l = space.levels(k);
            l[1] as i64 - l[2] as i64
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyOptions {
    pub sector: Sector,
    pub iterations: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self { sector: Sector::Full, iterations: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyReport {
    pub rho: DensityMatrix,
    /// `||L vec(rho)||_2` on the solved sector.
    pub residual: f64,
    /// Largest absolute entry of the sector generator.
    pub scale: f64,
    pub unknowns: usize,
}

impl SteadyReport {
    /// Residual certificate `||L vec(rho)|| < 1e-9 ||L||_max`.
    pub fn certified(&self) -> bool {
        self.residual < 1e-9 * self.scale
    }
}

/// Steady state over all coherences.
pub fn steady_state(spec: &LindbladSpec) -> Result<DensityMatrix> {
    Ok(steady_state_with(spec, &SteadyOptions::default())?.rho)
}

pub fn steady_state_with(spec: &LindbladSpec, opts: &SteadyOptions) -> Result<SteadyReport> {
    if !spec.is_static() {
        return Err(Error::TimeDependent);
    }
    let space = spec.space().clone();
    let d = space.dim();
    let pairs = opts.sector.pairs(d)?;
    if pairs.is_empty() {
        return Err(Error::Precondition("empty sector".into()));
    }
    let (l, dropped) = assemble(spec, 0.0, &pairs);
    let scale = l.max_abs();
    if dropped > 1e-12 * scale.max(1.0) {
        return Err(Error::Precondition(format!(
            "sector is not invariant under the generator (leaks {dropped:.3e})"
        )));
    }
    let n = pairs.len();
    let x = null_vector(&l, &pairs, opts.iterations.max(1), scale)?;

    let mut rho = linalg::zeros(d, d);
    for (v, &(i, j)) in x.iter().zip(&pairs) {
        rho[[i, j]] = *v;
    }
    linalg::hermitize(&mut rho);
    let tr = linalg::trace(rho.view());
    if tr.norm() < 1e-300 {
        return Err(Error::Eigen("null vector is traceless".into()));
    }
    let inv = C64::new(1.0, 0.0) / tr;
    rho.mapv_inplace(|v| v * inv);
    linalg::hermitize(&mut rho);

    let flat: Array1<C64> = pairs.iter().map(|&(i, j)| rho[[i, j]]).collect();
    let residual = l.mul_vec(&flat).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let rho = DensityMatrix::from_parts(space, rho)?;
    crate::fock::warn_leakage("steady state", &rho.leakage());
    let report = SteadyReport { rho, residual, scale, unknowns: n };
    if !report.certified() {
        warn!("steady state residual {residual:.3e} exceeds 1e-9 * {scale:.3e}");
    }
    debug!("steady state: {n} unknowns, residual {residual:.3e}");
    Ok(report)
}

fn to_faer_sparse(m: &CsrMatrix, shift: C64) -> Result<SparseColMat<usize, c64>> {
    let mut trip: Vec<Triplet<usize, usize, c64>> =
        m.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    trip.extend((0..m.nrows()).map(|i| Triplet::new(i, i, -shift)));
    SparseColMat::try_new_from_triplets(m.nrows(), m.ncols(), &trip)
        .map_err(|e| Error::Factorization(format!("{e:?}")))
}

/// Deterministic start vectors: the identity on the sector and two pseudo-random fills.
fn start_block(pairs: &[(usize, usize)]) -> Mat<c64> {
    let mut s: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let mut q = Mat::<c64>::zeros(pairs.len(), 3);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        q[(r, 0)] = if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) };
        q[(r, 1)] = c64::new(next(), next());
        q[(r, 2)] = c64::new(next(), next());
    }
    q
}

/// Modified Gram-Schmidt on the columns in place.
fn orthonormalize(q: &mut Mat<c64>) {
    let (n, k) = (q.nrows(), q.ncols());
    for c in 0..k {
        for p in 0..c {
            let mut dot = c64::new(0.0, 0.0);
            for r in 0..n {
                dot += q[(r, p)].conj() * q[(r, c)];
            }
            for r in 0..n {
                let v = q[(r, p)];
                q[(r, c)] -= dot * v;
            }
        }
        let norm = (0..n).map(|r| q[(r, c)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for r in 0..n {
                q[(r, c)] /= norm;
            }
        }
    }
}

fn null_vector(l: &CsrMatrix, pairs: &[(usize, usize)], iterations: usize, scale: f64) -> Result<Vec<C64>> {
    let n = pairs.len();
    let shift = C64::new(1e-10 * scale.max(f64::MIN_POSITIVE), 0.0);
    let lu = to_faer_sparse(l, shift)?.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let mut q = start_block(pairs);
    orthonormalize(&mut q);
    for _ in 0..iterations {
        lu.solve_in_place(q.as_mut());
        let finite = (0..q.ncols()).all(|c| (0..n).all(|r| q[(r, c)].re.is_finite() && q[(r, c)].im.is_finite()));
        if !finite {
            return Err(Error::Factorization("inverse iteration produced non-finite values".into()));
        }
        orthonormalize(&mut q);
    }

    // Gram matrix of L Q resolves the near-null subspace spanned by the block.
    let k = q.ncols();
    let lq: Vec<Array1<C64>> = (0..k).map(|c| l.mul_vec(&(0..n).map(|r| q[(r, c)]).collect())).collect();
    let gram = Array2::from_shape_fn((k, k), |(a, b)| lq[a].iter().zip(&lq[b]).map(|(x, y)| x.conj() * y).sum::<C64>());
    let (vals, vecs) = linalg::eigh(gram.view())?;
    let tol = 1e-8 * scale;
    let null_dim = vals.iter().filter(|&&v| v.max(0.0).sqrt() < tol).count();
    if null_dim >= 2 {
        return Err(Error::DegenerateSteadyState { dimension: null_dim });
    }
    let mut x = vec![ZERO; n];
    for c in 0..k {
        let w = vecs[[c, 0]];
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += q[(r, c)] * w;
        }
    }
    Ok(x)
}
