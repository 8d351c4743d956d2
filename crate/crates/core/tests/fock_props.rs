use ndarray::Array2;
use pcsom::fock::{self, DensityMatrix, HilbertSpace, Operator};
use pcsom::model::{self, ModelParams};
use pcsom::{linalg, C64};
use proptest::prelude::*;

fn complex_matrix(n: usize) -> impl Strategy<Value = Array2<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| Array2::from_shape_fn((n, n), |(i, j)| C64::new(v[i * n + j].0, v[i * n + j].1)))
}

fn density(space: HilbertSpace, a: &Array2<C64>) -> DensityMatrix {
    let mut rho = linalg::matmul(a.view(), linalg::adjoint(a.view()).view());
    let tr = linalg::trace(rho.view());
    rho.mapv_inplace(|v| v / tr);
    DensityMatrix::new(space, rho).unwrap()
}

fn dims_and_matrices() -> impl Strategy<Value = (usize, usize, Array2<C64>, Array2<C64>)> {
    (2usize..5, 2usize..5).prop_flat_map(|(na, nb)| (Just(na), Just(nb), complex_matrix(na), complex_matrix(nb)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn operators_on_different_modes_commute(dims in prop::collection::vec(2usize..5, 2..4)) {
        let s = HilbertSpace::new(dims.clone()).unwrap();
        for m1 in 0..dims.len() {
            for m2 in 0..dims.len() {
                if m1 == m2 {
                    continue;
                }
                let a = fock::destroy(&s, m1).unwrap();
                let bd = fock::create(&s, m2).unwrap();
                let b = fock::destroy(&s, m2).unwrap();
                prop_assert_eq!((&a * &bd).to_dense(), (&bd * &a).to_dense());
                prop_assert_eq!((&a * &b).to_dense(), (&b * &a).to_dense());
            }
        }
    }

    #[test]
    fn partial_trace_of_product_returns_factor((na, nb, ma, mb) in dims_and_matrices()) {
        let ra = density(HilbertSpace::new(vec![na]).unwrap(), &ma);
        let rb = density(HilbertSpace::new(vec![nb]).unwrap(), &mb);
        let joint = ra.tensor(&rb);
        let kept_b = fock::partial_trace(&joint, &[1]).unwrap();
        let kept_a = fock::partial_trace(&joint, &[0]).unwrap();
        for (x, y) in kept_b.data().iter().zip(rb.data()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
        for (x, y) in kept_a.data().iter().zip(ra.data()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn expm_of_hermitian_is_unitary(n in 2usize..7, scale in -3.0f64..3.0, m in complex_matrix(6)) {
        let s = HilbertSpace::new(vec![n]).unwrap();
        let sub = m.slice(ndarray::s![..n, ..n]).to_owned();
        let h = (&sub + &linalg::adjoint(sub.view())).mapv(|v| v * 0.5);
        let u = fock::expm_unitary(&Operator::from_dense(s, h.view()).unwrap(), scale).unwrap();
        let prod = &u.adjoint() * &u;
        let dev = (&prod.to_dense() - &Array2::<C64>::eye(n)).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(dev < 1e-8);
    }

    #[test]
    fn displacement_is_unitary(n in 2usize..12, re in -1.5f64..1.5, im in -1.5f64..1.5) {
        let s = HilbertSpace::new(vec![n]).unwrap();
        let d = fock::displacement(&s, 0, C64::new(re, im)).unwrap();
        let dev = (&(&d.adjoint() * &d).to_dense() - &Array2::<C64>::eye(n)).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(dev < 1e-8);
    }
}

#[test]
fn quadrature_completeness_on_low_levels() {
    let n = 20;
    let grid: Vec<f64> = (0..=1000).map(|k| -10.0 + 0.02 * k as f64).collect();
    for theta in [0.0, 0.7, std::f64::consts::FRAC_PI_2] {
        let mut gram = Array2::<C64>::zeros((n, n));
        for &x in &grid {
            let psi = fock::quadrature_wavefunctions(n, x, theta, 1.0);
            for i in 0..n {
                for j in 0..n {
                    gram[[i, j]] += psi[i].conj() * psi[j] * 0.02;
                }
            }
        }
        for i in 0..n - 4 {
            for j in 0..n - 4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - want).norm() < 1e-3, "theta {theta}: ({i},{j}) = {}", gram[[i, j]]);
            }
        }
    }
}

/// Conjugates the rotating-frame Hamiltonian by the cavity displacement in an
/// enlarged cavity space and compares the low-level block with `build_h2`
/// built directly at cutoff `n_a`.
fn conjugation_defect(n_a: usize) -> f64 {
    let p = ModelParams::reference();
    let alpha = model::derive(&p).unwrap().alpha;
    let big = HilbertSpace::new(vec![n_a + 30, 3, 3]).unwrap();
    let small = HilbertSpace::new(vec![n_a, 3, 3]).unwrap();
    let d = fock::displacement(&big, 0, alpha).unwrap();
    let h1 = model::build_h_frame1(&p, &big).unwrap();
    let conj = &(&d.adjoint() * &h1.static_part) * &d;
    // Linear cavity terms cancelled by the choice of alpha, and the c-number offset.
    let a = fock::destroy(&big, 0).unwrap();
    let linear = &a.adjoint().scale(p.delta * alpha + p.eps_p) + &a.scale((p.delta * alpha + p.eps_p).conj());
    let offset = p.delta * alpha.norm_sqr() + 2.0 * (p.eps_p * alpha.conj()).re;
    let reduced = &(&conj - &linear) - &fock::identity(&big).scale(C64::new(offset, 0.0));
    let h2 = model::build_h2(&p, &small).unwrap();
    // Harmonic operators: D^dagger a^dagger D = a^dagger + alpha^*, whose c-number part is dropped.
    assert_eq!(h1.harmonics.len(), h2.harmonics.len());
    for (x, y) in h1.harmonics.iter().zip(&h2.harmonics) {
        assert_eq!((x.amplitude, x.frequency), (y.amplitude, y.frequency));
    }
    let want = h2.static_part.to_dense();
    let got = reduced.to_dense();
    let dim = small.dim();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            worst = worst.max((got[[i, j]] - want[[i, j]]).norm());
        }
    }
    worst
}

#[test]
fn h2_is_the_displaced_rotating_frame_hamiltonian() {
    for n_a in [6, 8] {
        let defect = conjugation_defect(n_a);
        assert!(defect < 1e-9, "cutoff {n_a}: defect {defect:e}");
    }
}

#[test]
fn effective_hamiltonian_conserves_phonon_difference() {
    let p = ModelParams::reference();
    let d = model::derive(&p).unwrap();
    for dims in [[3, 6, 6], [4, 8, 7]] {
        let s = HilbertSpace::new(dims.to_vec()).unwrap();
        let h = model::build_h_eff(&p, &d, &s).unwrap();
        let q = &fock::number(&s, 1).unwrap() - &fock::number(&s, 2).unwrap();
        assert!(h.commutator(&q).max_abs() < 1e-12);
    }
}

#[test]
fn reference_parameters_give_zeta_near_two() {
    let d = model::derive(&ModelParams::reference()).unwrap();
    assert!((1.95..=2.05).contains(&d.zeta.norm()), "|zeta| = {}", d.zeta.norm());
}
