//! Oracle checks with closed-form answers, runnable from an installed binary.

use std::f64::consts::FRAC_2_PI;

use ndarray::Array1;
use pcsom::conditioning::{transfer, TransferChannel};
use pcsom::dynamics::{dissipator_apply, effective_spec};
use pcsom::fock::{self, HilbertSpace, PureState};
use pcsom::metrics::{self, WignerSearch};
use pcsom::model::{self, ModelParams};
use pcsom::states::{self, PcsSpec};
use pcsom::{Result, C64};

use crate::{EXIT_FAILED_CHECKS, EXIT_OK};

/// `I0(x)` by its power series.
fn bessel_i0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= (x / 2.0).powi(2) / (k * k) as f64;
        sum += term;
    }
    sum
}

fn tmsv(r: f64, cutoff: usize) -> Result<PureState> {
    let space = HilbertSpace::new(vec![cutoff, cutoff])?;
    let mut data = Array1::from_elem(space.dim(), C64::new(0.0, 0.0));
    for n in 0..cutoff {
        data[space.index(&[n, n])] = C64::new(r.tanh().powi(n as i32) / r.cosh(), 0.0);
    }
    PureState::normalized(space, data)
}

type Check = (&'static str, fn() -> Result<(f64, f64, f64)>);

/// `(name, computed, expected, tolerance)` per check.
const CHECKS: [Check; 9] = [
    ("vacuum overlap with PCS(2) is 1/I0(4)", || {
        let s = HilbertSpace::new(vec![20, 20])?;
        let psi = states::pcs(PcsSpec::new(C64::new(2.0, 0.0)), &s)?;
        let f = states::fidelity_pure(&states::vacuum(&s).to_density(), &psi)?;
        Ok((f, 1.0 / bessel_i0(4.0), 1e-9))
    }),
    ("PCS(2) is an eigenstate of b1 b2", || {
        let s = HilbertSpace::new(vec![20, 20])?;
        let psi = states::pcs(PcsSpec::new(C64::new(2.0, 0.0)), &s)?;
        let pair = &fock::destroy(&s, 0)? * &fock::destroy(&s, 1)?;
        let res = &pair.apply(&psi) - &psi.data().mapv(|v| v * 2.0);
        Ok((res.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(), 0.0, 1e-6))
    }),
    ("vacuum Wigner function at the origin is 2/pi", || {
        let s = HilbertSpace::new(vec![8])?;
        let w = metrics::wigner(&states::vacuum(&s).to_density(), &[vec![C64::new(0.0, 0.0)]])?;
        Ok((w[0], FRAC_2_PI, 1e-9))
    }),
    ("single-phonon Wigner minimum is -2/pi", || {
        let s = HilbertSpace::new(vec![8])?;
        let (w, _) = metrics::wigner_min(&states::fock_state(1, &s)?.to_density(), &WignerSearch::default())?;
        Ok((w, -FRAC_2_PI, 1e-4))
    }),
    ("two-mode squeezed vacuum r = 0.5 negativity", || {
        let n = metrics::negativity(&tmsv(0.5, 30)?.to_density())?;
        Ok((n, (1.0f64).exp_m1() / 2.0, 1e-3))
    }),
    ("vacuum Reid E_r(1,1) is 1", || {
        let s = HilbertSpace::new(vec![8, 8])?;
        let e = metrics::reid(&states::vacuum(&s).to_density(), 1, 1, &metrics::steering::default_outcome_grid())?;
        Ok((e, 1.0, 1e-6))
    }),
    ("unit transmission swaps PCS(z) into PCS(-z)", || {
        let s = HilbertSpace::new(vec![14, 14])?;
        let z = C64::new(1.5, 0.0);
        let out = transfer(&states::pcs(PcsSpec::new(z), &s)?.to_density(), &TransferChannel::new(1.0)?)?;
        let f = states::fidelity_pure(&out, &states::pcs(PcsSpec::new(-z), &s)?)?;
        Ok((f, 1.0, 1e-9))
    }),
    ("dark state of the undamped effective model", || {
        let p = ModelParams { gamma_b1: 0.0, gamma_b2: 0.0, ..ModelParams::reference() };
        let d = model::derive(&p)?;
        let space = HilbertSpace::new(vec![4, 20, 20])?;
        let mech = states::pcs(PcsSpec::new(d.zeta), &space.subspace(&[1, 2])?)?;
        let psi = states::vacuum(&space.subspace(&[0])?).tensor(&mech);
        let spec = effective_spec(&p, &d, &space)?;
        let rho = psi.to_density();
        let h = spec.drift(0.0);
        // -i[H, rho] + sum_k gamma_k D[c_k] rho
        let hr = h.mul_dense(rho.data().view());
        let rh = h.dense_mul(rho.data().view());
        let mut r = (&hr - &rh).mapv(|v| v * C64::new(0.0, -1.0));
        for (c, rate) in &spec.collapse {
            r = r + dissipator_apply(c, rho.data())?.mapv(|v| v * *rate);
        }
        Ok((r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(), 0.0, 1e-6))
    }),
    ("thermal occupation at 5 GHz and 2.5 K", || {
        let expected = 1.0 / ((6.626_070_15e-34 * 5e9) / (1.380_649e-23 * 2.5f64)).exp_m1();
        Ok((model::thermal_occupation(5e9, 2.5)?, expected, 1e-9))
    }),
];

/// Runs every check, prints one line each and the totals.
pub fn run() -> i32 {
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok((got, want, tol)) if (got - want).abs() <= tol => println!("PASS {name}: {got:.10} (expected {want:.10})"),
            Ok((got, want, tol)) => {
                failed += 1;
                println!("FAIL {name}: {got:.10} (expected {want:.10} within {tol:e})");
            }
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    println!("{} passed, {failed} failed", CHECKS.len() - failed);
    if failed == 0 { EXIT_OK } else { EXIT_FAILED_CHECKS }
}
