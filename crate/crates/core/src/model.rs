//! Physical parameters, derived couplings and Hamiltonian builders.
//!
//! Frequencies are in units of the first mechanical frequency. Mode order of
//! the system space is (cavity, mechanics 1, mechanics 2).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fock::{self, HilbertSpace, Operator};
use crate::sparse::CsrMatrix;
use crate::{Error, Result, C64, I, ONE};

/// Default threshold on the rotating-wave validity ratios.
pub const RWA_THRESHOLD: f64 = 0.1;
/// Default bound on `|g_tilde| / gamma_t` for adiabatic elimination of the probe cavity.
pub const ADIABATIC_THRESHOLD: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_b1: f64,
    pub omega_b2: f64,
    pub g1: f64,
    pub g2: f64,
    pub eps_p: C64,
    pub eps_d: C64,
    /// Cavity detuning from the strong drive.
    pub delta: f64,
    /// Strong-drive frequency minus weak-drive frequency.
    pub delta_p: f64,
    pub gamma_a: f64,
    pub gamma_b1: f64,
    pub gamma_b2: f64,
    pub nbar_b1: f64,
    pub nbar_b2: f64,
}

impl ModelParams {
    /// Parameter set of the dissipative PCS preparation at zeta close to 2.
    pub fn reference() -> Self {
        Self {
            omega_b1: 1.0,
            omega_b2: 1.5,
            g1: 0.045,
            g2: 0.055,
            eps_p: C64::new(1.58, 0.0),
            eps_d: C64::new(-5.218e-3, 0.0),
            delta: 2.5032,
            delta_p: -2.5,
            gamma_a: 2.5e-3,
            gamma_b1: 1e-6,
            gamma_b2: 1.5e-6,
            nbar_b1: 0.0,
            nbar_b2: 0.0,
        }
    }

    /// Checks every field invariant, naming the first offending field.
    ///
    /// Mechanical damping may be zero (the dark-state limit).
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega_b1", self.omega_b1),
            ("omega_b2", self.omega_b2),
            ("g1", self.g1),
            ("g2", self.g2),
            ("eps_p", self.eps_p.re),
            ("eps_p", self.eps_p.im),
            ("eps_d", self.eps_d.re),
            ("eps_d", self.eps_d.im),
            ("delta", self.delta),
            ("delta_p", self.delta_p),
            ("gamma_a", self.gamma_a),
            ("gamma_b1", self.gamma_b1),
            ("gamma_b2", self.gamma_b2),
            ("nbar_b1", self.nbar_b1),
            ("nbar_b2", self.nbar_b2),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        for (field, v) in [("omega_b1", self.omega_b1), ("omega_b2", self.omega_b2), ("gamma_a", self.gamma_a)] {
            if v <= 0.0 {
                return Err(invalid(field, "must be > 0"));
            }
        }
        for (field, v) in [
            ("gamma_b1", self.gamma_b1),
            ("gamma_b2", self.gamma_b2),
            ("nbar_b1", self.nbar_b1),
            ("nbar_b2", self.nbar_b2),
        ] {
            if v < 0.0 {
                return Err(invalid(field, "must be >= 0"));
            }
        }
        if self.omega_b1 == self.omega_b2 {
            return Err(invalid("omega_b2", "must differ from omega_b1"));
        }
        Ok(())
    }

    pub fn with_nbar(mut self, nbar: f64) -> Self {
        self.nbar_b1 = nbar;
        self.nbar_b2 = nbar;
        self
    }
}

fn invalid(field: &str, reason: &str) -> Error {
    Error::InvalidParameter { field: field.into(), reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub alpha: C64,
    pub r1: f64,
    pub r2: f64,
    pub g0: f64,
    pub g: C64,
    pub delta_tilde: f64,
    pub zeta: C64,
}

/// Cavity amplitude, polaron ratios, Kerr and downconversion couplings, and
/// the pair-coherent eigenvalue `zeta = -eps_d / g`.
pub fn derive(p: &ModelParams) -> Result<DerivedParams> {
    let alpha = p.eps_p / C64::new(-p.delta, p.gamma_a);
    let r1 = p.g1 / p.omega_b1;
    let r2 = p.g2 / p.omega_b2;
    let g0 = -(r1 * p.g1 + r2 * p.g2);
    let g = -alpha * (r1 * p.g2 + r2 * p.g1);
    let delta_tilde = p.delta + 2.0 * alpha.norm_sqr() * g0;
    if g.norm() == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let zeta = -p.eps_d / g;
    Ok(DerivedParams { alpha, r1, r2, g0, g, delta_tilde, zeta })
}

/// Weak-drive amplitude giving the pair-coherent eigenvalue `zeta` at fixed `g`.
pub fn eps_d_for_zeta(zeta: C64, derived: &DerivedParams) -> C64 {
    -zeta * derived.g
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub threshold: f64,
    /// `(left scale, right scale, right / left)` for every pair.
    pub ratios: Vec<(String, String, f64)>,
}

impl ConditionReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().map(|r| r.2).fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.max_ratio() < self.threshold
    }
}

/// Rotating-wave validity ratios. Each family indexed by mode takes its
/// worst case: the smaller left scale and the larger right scale.
pub fn check_rwa(p: &ModelParams, d: &DerivedParams, threshold: f64) -> ConditionReport {
    let a = d.alpha.norm();
    let left = [
        ("omega_b", p.omega_b1.min(p.omega_b2)),
        ("|omega_b1-omega_b2|", (p.omega_b1 - p.omega_b2).abs()),
        ("delta_tilde", d.delta_tilde.abs()),
        ("|delta_tilde-omega_b|", (d.delta_tilde - p.omega_b1).abs().min((d.delta_tilde - p.omega_b2).abs())),
    ];
    let right = [
        ("r*eps_d", d.r1.max(d.r2) * p.eps_d.norm()),
        ("g*|alpha|^2", p.g1.max(p.g2) * a * a),
        ("|alpha|(r1g2+r2g1)", a * (d.r1 * p.g2 + d.r2 * p.g1)),
        ("|alpha|(r1g1+r2g2)", a * (d.r1 * p.g1 + d.r2 * p.g2)),
    ];
    let mut ratios = Vec::with_capacity(16);
    for (ln, lv) in left {
        for (rn, rv) in right {
            let ratio = if lv > 0.0 { rv / lv } else { f64::INFINITY };
            ratios.push((ln.to_string(), rn.to_string(), ratio));
        }
    }
    ConditionReport { threshold, ratios }
}

/// `amplitude * op * e^{i frequency t}` plus its Hermitian conjugate.
#[derive(Clone, Debug, PartialEq)]
pub struct Harmonic {
    pub op: Operator,
    pub amplitude: C64,
    pub frequency: f64,
}

/// Static Hermitian part plus harmonic terms with implied conjugates.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub static_part: Operator,
    pub harmonics: Vec<Harmonic>,
}

impl HamiltonianSpec {
    pub fn from_static(h: Operator) -> Self {
        Self { static_part: h, harmonics: Vec::new() }
    }

    pub fn space(&self) -> &HilbertSpace {
        self.static_part.space()
    }

    pub fn is_static(&self) -> bool {
        self.harmonics.iter().all(|h| h.amplitude.norm() == 0.0 || h.op.max_abs() == 0.0)
    }

    pub fn at(&self, t: f64) -> Operator {
        self.harmonics.iter().fold(self.static_part.clone(), |acc, h| {
            let term = h.op.scale(h.amplitude * C64::from_polar(1.0, h.frequency * t));
            &(&acc + &term) + &term.adjoint()
        })
    }
}

pub(crate) fn system_ops(space: &HilbertSpace) -> Result<[Operator; 3]> {
    if space.modes() != 3 {
        return Err(Error::Precondition(format!(
            "system space needs modes (a, b1, b2), got {} mode(s)",
            space.modes()
        )));
    }
    Ok([fock::destroy(space, 0)?, fock::destroy(space, 1)?, fock::destroy(space, 2)?])
}

/// Optomechanical Hamiltonian in the frame rotating at the strong-drive frequency.
pub fn build_h_frame1(p: &ModelParams, space: &HilbertSpace) -> Result<HamiltonianSpec> {
    let [a, b1, b2] = system_ops(space)?;
    let ad = a.adjoint();
    let na = &ad * &a;
    let mut h = p.delta * &na;
    for (b, w, g) in [(&b1, p.omega_b1, p.g1), (&b2, p.omega_b2, p.g2)] {
        let bd = b.adjoint();
        h = &h + &(w * &(&bd * b));
        h = &h + &(g * &(&na * &(b + &bd)));
    }
    h = &h + &(&ad.scale(p.eps_p) + &a.scale(p.eps_p.conj()));
    Ok(HamiltonianSpec { static_part: h, harmonics: drive(p, &ad) })
}

fn drive(p: &ModelParams, ad: &Operator) -> Vec<Harmonic> {
    if p.eps_d.norm() == 0.0 {
        return Vec::new();
    }
    vec![Harmonic { op: ad.clone(), amplitude: p.eps_d, frequency: p.delta_p }]
}

/// Hamiltonian after displacing the cavity by its mean amplitude.
pub fn build_h2(p: &ModelParams, space: &HilbertSpace) -> Result<HamiltonianSpec> {
    let d = derive_alpha(p);
    let [a, b1, b2] = system_ops(space)?;
    let ad = a.adjoint();
    let na = &ad * &a;
    let id = fock::identity(space);
    let shifted = &(&na + &(&a.scale(d.conj()) + &ad.scale(d))) + &id.scale(C64::new(d.norm_sqr(), 0.0));
    let mut h = p.delta * &na;
    for (b, w, g) in [(&b1, p.omega_b1, p.g1), (&b2, p.omega_b2, p.g2)] {
        let bd = b.adjoint();
        h = &h + &(w * &(&bd * b));
        h = &h + &(g * &(&shifted * &(b + &bd)));
    }
    Ok(HamiltonianSpec { static_part: h, harmonics: drive(p, &ad) })
}

fn derive_alpha(p: &ModelParams) -> C64 {
    p.eps_p / C64::new(-p.delta, p.gamma_a)
}

/// Time-independent effective Hamiltonian: Kerr term, downconversion and resonant drive.
pub fn build_h_eff(p: &ModelParams, d: &DerivedParams, space: &HilbertSpace) -> Result<Operator> {
    if !(d.zeta.re.is_finite() && d.zeta.im.is_finite()) {
        return Err(Error::ZeroCoupling);
    }
    let [a, b1, b2] = system_ops(space)?;
    let ad = a.adjoint();
    let na = &ad * &a;
    let down = &(&ad * &b1) * &b2;
    let mut h = d.g0 * &(&na * &na);
    h = &h + &down.scale(d.g);
    h = &h + &down.adjoint().scale(d.g.conj());
    h = &h + &ad.scale(p.eps_d);
    h = &h + &a.scale(p.eps_d.conj());
    Ok(h)
}

/// Free Hamiltonian removed by the interaction picture of the effective model.
pub fn build_h0_tilde(p: &ModelParams, d: &DerivedParams, space: &HilbertSpace) -> Result<Operator> {
    let [a, b1, b2] = system_ops(space)?;
    let n = |x: &Operator| &x.adjoint() * x;
    Ok(&(&(d.delta_tilde * &n(&a)) + &(p.omega_b1 * &n(&b1))) + &(p.omega_b2 * &n(&b2)))
}

/// Displaced-frame Hamiltonian in the interaction picture of the free
/// Hamiltonian `build_h0_tilde`. Every matrix element picks up the phase of
/// its energy difference; elements are grouped into harmonics by frequency.
pub fn build_h2_interaction(p: &ModelParams, d: &DerivedParams, space: &HilbertSpace) -> Result<HamiltonianSpec> {
    let h2 = build_h2(p, space)?;
    let energies: Vec<f64> = build_h0_tilde(p, d, space)?.data().to_dense().diag().iter().map(|v| v.re).collect();
    let dim = space.dim();
    // Frequencies are keyed on a 1e-12 lattice so equal energy gaps group exactly.
    let key = |f: f64| (f * 1e12).round() as i64;
    let mut groups: BTreeMap<i64, (f64, Vec<(usize, usize, C64)>)> = BTreeMap::new();
    let mut push = |i: usize, j: usize, v: C64, f: f64| {
        let k = key(f);
        if k >= 0 {
            groups.entry(k).or_insert_with(|| (f, Vec::new())).1.push((i, j, v));
        }
    };
    let h_free = h2.static_part.data().axpby(ONE, fock::diagonal(space, &energies)?.data(), -ONE);
    for (i, j, v) in h_free.triplets() {
        push(i, j, v, energies[i] - energies[j]);
    }
    for hm in &h2.harmonics {
        for (i, j, v) in hm.op.data().triplets() {
            let v = v * hm.amplitude;
            push(i, j, v, energies[i] - energies[j] + hm.frequency);
            push(j, i, v.conj(), energies[j] - energies[i] - hm.frequency);
        }
    }
    let mut static_entries = Vec::new();
    let mut harmonics = Vec::new();
    for (k, (f, entries)) in groups {
        if k == 0 {
            static_entries = entries;
        } else {
            let op = Operator::new(space.clone(), CsrMatrix::from_triplets(dim, dim, entries))?;
            harmonics.push(Harmonic { op, amplitude: ONE, frequency: f });
        }
    }
    let static_part = Operator::new(space.clone(), CsrMatrix::from_triplets(dim, dim, static_entries))?;
    Ok(HamiltonianSpec { static_part, harmonics })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferParams {
    pub g_t: f64,
    pub gamma_t: f64,
    pub eps_p2: C64,
    pub delta_t: f64,
    pub tau: f64,
}

impl TransferParams {
    /// Probe settings meeting the adiabatic and near-complete-transfer
    /// conditions with a pulse of 200 periods of the second oscillator.
    pub fn reference() -> Self {
        Self { g_t: 0.05, gamma_t: 0.5, eps_p2: C64::new(3.0, 0.0), delta_t: 1.5, tau: 200.0 / 1.5 }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("g_t", self.g_t), ("delta_t", self.delta_t), ("eps_p2", self.eps_p2.re), ("eps_p2", self.eps_p2.im)] {
            if !v.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        if !(self.gamma_t > 0.0 && self.gamma_t.is_finite()) {
            return Err(invalid("gamma_t", "must be > 0"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", "must be >= 0"));
        }
        Ok(())
    }

    pub fn alpha_t(&self) -> C64 {
        self.eps_p2 / C64::new(-self.delta_t, self.gamma_t)
    }

    pub fn g_tilde(&self) -> C64 {
        -I * self.g_t * self.alpha_t().conj()
    }

    /// Effective transfer rate `|g_tilde|^2 / gamma_t`.
    pub fn rate(&self) -> f64 {
        self.g_tilde().norm_sqr() / self.gamma_t
    }

    pub fn adiabatic_ratio(&self) -> f64 {
        self.g_tilde().norm() / self.gamma_t
    }

    pub fn is_adiabatic(&self) -> bool {
        self.adiabatic_ratio() < ADIABATIC_THRESHOLD
    }

    /// Residual amplitude `e^{-G tau}` of the input mode.
    pub fn cosine(&self) -> f64 {
        (-self.rate() * self.tau).exp()
    }

    /// Transmissivity `1 - e^{-2 G tau}`.
    pub fn eta(&self) -> f64 {
        1.0 - (-2.0 * self.rate() * self.tau).exp()
    }
}

/// Linearized beam-splitter Hamiltonian on the (b2, probe) space.
pub fn build_h_transfer(tp: &TransferParams, space: &HilbertSpace) -> Result<Operator> {
    if space.modes() != 2 {
        return Err(Error::Precondition(format!("transfer space needs modes (b2, a_t), got {}", space.modes())));
    }
    let b = fock::destroy(space, 0)?;
    let at = fock::destroy(space, 1)?;
    let gt = tp.g_tilde();
    let term = (&b.adjoint() * &at).scale(I * gt);
    Ok(&term + &term.adjoint())
}

const PLANCK: f64 = 6.626_070_15e-34;
const BOLTZMANN: f64 = 1.380_649e-23;

/// Bose-Einstein occupation at frequency `frequency_hz` (cycles per second) and temperature `kelvin`.
pub fn thermal_occupation(frequency_hz: f64, kelvin: f64) -> Result<f64> {
    if !(kelvin > 0.0) {
        return Err(invalid("T", "must be > 0"));
    }
    if !(frequency_hz > 0.0) {
        return Err(invalid("omega", "must be > 0"));
    }
    Ok(1.0 / (PLANCK * frequency_hz / (BOLTZMANN * kelvin)).exp_m1())
}
