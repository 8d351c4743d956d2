use ndarray::Array1;
use pcsom::dynamics::{
    self, effective_spec, evolve, liouvillian, mechanical_charge, standard_collapse, EvolveOptions, LindbladSpec, Sector,
    SteadyOptions,
};
use pcsom::fock::{self, HilbertSpace};
use pcsom::model::{self, HamiltonianSpec, ModelParams};
use pcsom::states::{self, PcsSpec};
use pcsom::{linalg, C64};

fn space(dims: &[usize]) -> HilbertSpace {
    HilbertSpace::new(dims.to_vec()).unwrap()
}

fn undamped() -> ModelParams {
    ModelParams { gamma_b1: 0.0, gamma_b2: 0.0, ..ModelParams::reference() }
}

fn vec_of(rho: &ndarray::Array2<C64>) -> Array1<C64> {
    let d = rho.nrows();
    Array1::from_shape_fn(d * d, |k| rho[[k % d, k / d]])
}

#[test]
fn dark_state_is_annihilated_by_the_generator() {
    let p = undamped();
    let d = model::derive(&p).unwrap();
    let s = space(&[3, 14, 14]);
    let mech = states::pcs(PcsSpec::new(d.zeta), &s.subspace(&[1, 2]).unwrap()).unwrap();
    let psi = states::vacuum(&s.subspace(&[0]).unwrap()).tensor(&mech);
    let l = liouvillian(&effective_spec(&p, &d, &s).unwrap(), 0.0);
    let r = l.mul_vec(&vec_of(psi.to_density().data()));
    let norm = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    assert!(norm < 1e-8, "residual {norm:e}");
}

#[test]
fn liouvillian_preserves_trace() {
    let p = ModelParams { nbar_b1: 0.7, nbar_b2: 0.2, gamma_b1: 1e-2, gamma_b2: 2e-2, ..ModelParams::reference() };
    let d = model::derive(&p).unwrap();
    let s = space(&[3, 3, 3]);
    let l = liouvillian(&effective_spec(&p, &d, &s).unwrap(), 0.0);
    let dim = s.dim();
    // Tr(L E_ij) = sum_k L[(k,k), (i,j)]
    for j in 0..dim {
        for i in 0..dim {
            let col = j * dim + i;
            let tr: C64 = (0..dim).map(|k| l.get(k * dim + k, col)).sum();
            assert!(tr.norm() < 1e-12);
        }
    }
}

#[test]
fn dissipator_matches_liouvillian() {
    let s = space(&[4]);
    let a = fock::destroy(&s, 0).unwrap();
    let spec = LindbladSpec::new(HamiltonianSpec::from_static(fock::number(&s, 0).unwrap()), vec![(a.clone(), 0.3)]).unwrap();
    let rho = states::coherent(C64::new(0.5, 0.2), &s).unwrap().to_density();
    let h = fock::number(&s, 0).unwrap();
    let comm = &h.data().mul_dense(rho.data().view()) - &h.data().dense_mul(rho.data().view());
    let want = comm.mapv(|v| v * C64::new(0.0, -1.0)) + dynamics::dissipator_apply(&a, rho.data()).unwrap().mapv(|v| v * 0.3);
    let got = liouvillian(&spec, 0.0).mul_vec(&vec_of(rho.data()));
    for (x, y) in got.iter().zip(vec_of(&want).iter()) {
        assert!((x - y).norm() < 1e-13);
    }
}

#[test]
fn evolution_keeps_unit_trace() {
    let p = ModelParams::reference();
    let d = model::derive(&p).unwrap();
    let s = space(&[4, 6, 6]);
    let spec = effective_spec(&p, &d, &s).unwrap();
    let grid: Vec<f64> = (0..=5).map(|k| 100.0 * k as f64).collect();
    let traj = evolve(&spec, &states::vacuum(&s).to_density(), &grid, &EvolveOptions::default()).unwrap();
    assert!(traj.stats.max_trace_drift < 1e-7, "drift {:e}", traj.stats.max_trace_drift);
    for diag in &traj.diagnostics {
        assert!(diag.trace_drift < 1e-7);
    }
}

/// Relaxes by integration and compares with the null-space solution.
fn relaxation_agrees(p: &ModelParams, dims: &[usize], t_end: f64, sector: Sector) {
    let d = model::derive(p).unwrap();
    let s = space(dims);
    let spec = effective_spec(p, &d, &s).unwrap();
    let steady = dynamics::steady_state_with(&spec, &SteadyOptions { sector, ..Default::default() }).unwrap();
    assert!(steady.certified(), "residual {:e}", steady.residual);
    let opts = EvolveOptions { tol: 1e-10, ..Default::default() };
    let traj = evolve(&spec, &states::vacuum(&s).to_density(), &[0.0, t_end], &opts).unwrap();
    let last = traj.states.last().unwrap();
    let dist = linalg::trace_distance(last.data().view(), steady.rho.data().view()).unwrap();
    assert!(dist < 1e-5, "trace distance {dist:e}");
}

#[test]
fn steady_state_is_the_long_time_limit_with_damping() {
    let p = ModelParams { gamma_b1: 0.05, gamma_b2: 0.05, nbar_b1: 0.3, nbar_b2: 0.3, gamma_a: 0.05, ..ModelParams::reference() };
    relaxation_agrees(&p, &[3, 4, 4], 600.0, Sector::Full);
}

#[test]
fn undamped_steady_state_is_the_pair_coherent_state() {
    let p = undamped();
    let d = model::derive(&p).unwrap();
    let s = space(&[3, 14, 14]);
    let spec = effective_spec(&p, &d, &s).unwrap();
    let sector = Sector::Block(mechanical_charge(&s).unwrap(), 0);
    let steady = dynamics::steady_state_with(&spec, &SteadyOptions { sector, ..Default::default() }).unwrap();
    assert!(steady.certified(), "residual {:e}", steady.residual);
    let mech = fock::partial_trace(&steady.rho, &[1, 2]).unwrap();
    let target = states::pcs(PcsSpec::new(d.zeta), &s.subspace(&[1, 2]).unwrap()).unwrap();
    let f = states::fidelity_pure(&mech, &target).unwrap();
    assert!(f > 0.995, "fidelity {f}");
}

#[test]
fn thermal_damping_relaxes_to_thermal_occupation() {
    let p = ModelParams { eps_d: C64::new(0.0, 0.0), gamma_b1: 0.1, gamma_b2: 0.1, nbar_b1: 0.5, nbar_b2: 0.5, ..ModelParams::reference() };
    let s = space(&[2, 12, 12]);
    let spec = LindbladSpec::new(
        HamiltonianSpec::from_static(fock::number(&s, 1).unwrap()),
        standard_collapse(&p, &s).unwrap(),
    )
    .unwrap();
    let rho = dynamics::steady_state(&spec).unwrap();
    let n1 = fock::number(&s, 1).unwrap().expect(&rho).re;
    assert!((n1 - 0.5).abs() < 1e-3, "occupation {n1}");
}
