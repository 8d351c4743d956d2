use ndarray::Array2;
use pcsom::conditioning::{cat_from_channel, condition, transfer, TransferChannel};
use pcsom::fock::{self, DensityMatrix, HilbertSpace, Operator};
use pcsom::metrics::{self, FisherGrid};
use pcsom::states::{self, PcsSpec};
use pcsom::{linalg, C64};
use proptest::prelude::*;

fn space(dims: &[usize]) -> HilbertSpace {
    HilbertSpace::new(dims.to_vec()).unwrap()
}

fn random_density(dims: &[usize], v: &[(f64, f64)]) -> DensityMatrix {
    let s = space(dims);
    let n = s.dim();
    let a = Array2::from_shape_fn((n, n), |(i, j)| C64::new(v[i * n + j].0, v[i * n + j].1));
    let mut rho = linalg::matmul(a.view(), linalg::adjoint(a.view()).view());
    let tr = linalg::trace(rho.view());
    rho.mapv_inplace(|x| x / tr);
    DensityMatrix::new(s, rho).unwrap()
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
}

fn zeta() -> impl Strategy<Value = C64> {
    (0.05f64..2.5, 0.0f64..std::f64::consts::TAU).prop_map(|(r, phi)| C64::from_polar(r, phi))
}

fn local_displacement(s: &HilbertSpace, beta: C64, gamma: C64) -> Operator {
    &fock::displacement(s, 0, beta).unwrap() * &fock::displacement(s, 1, gamma).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pcs_lives_on_the_diagonal(z in zeta(), n in 4usize..14) {
        let s = space(&[n, n]);
        let psi = states::pcs(PcsSpec::new(z), &s).unwrap();
        for (k, v) in psi.data().iter().enumerate() {
            let l = s.levels(k);
            if l[0] != l[1] {
                prop_assert_eq!(*v, C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn pcs_marginals_agree(z in zeta(), n in 4usize..14) {
        let rho = states::pcs(PcsSpec::new(z), &space(&[n, n])).unwrap().to_density();
        let m0 = fock::partial_trace(&rho, &[0]).unwrap();
        let m1 = fock::partial_trace(&rho, &[1]).unwrap();
        for (x, y) in m0.data().iter().zip(m1.data()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn nongaussianity_is_nonnegative(v in entries(9)) {
        let rho = random_density(&[3, 3], &v);
        prop_assert!(metrics::nongaussianity(&rho).unwrap() >= -1e-6);
    }

    #[test]
    fn negativity_ignores_local_displacements(
        v in entries(9), br in -1.0f64..1.0, bi in -1.0f64..1.0, gr in -1.0f64..1.0, gi in -1.0f64..1.0,
    ) {
        let rho = random_density(&[3, 3], &v);
        let u = local_displacement(rho.space(), C64::new(br, bi), C64::new(gr, gi));
        let before = metrics::negativity(&rho).unwrap();
        let after = metrics::negativity(&rho.transform(&u)).unwrap();
        prop_assert!((before - after).abs() < 1e-8);
    }

    #[test]
    fn product_states_are_unentangled(va in entries(3), vb in entries(3)) {
        let rho = random_density(&[3], &va).tensor(&random_density(&[3], &vb));
        prop_assert!(metrics::negativity(&rho).unwrap() <= 1e-9);
    }

    #[test]
    fn transfer_preserves_trace(v in entries(16), eta in 0.0f64..=1.0) {
        let rho = random_density(&[4, 4], &v);
        let out = transfer(&rho, &TransferChannel::new(eta).unwrap()).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-10);
    }
}

fn laguerre(n: usize, alpha: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 + alpha as f64 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha as f64 - x) * cur - (k + alpha as f64) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `<m|D(l)|n>` from the associated Laguerre closed form.
fn displacement_element(m: usize, n: usize, l: C64) -> C64 {
    let x = l.norm_sqr();
    let ratio = |lo: usize, hi: usize| (lo + 1..=hi).map(|k| k as f64).product::<f64>().recip().sqrt();
    let g = (-x / 2.0).exp();
    if m >= n {
        l.powu((m - n) as u32) * (ratio(n, m) * g * laguerre(n, m - n, x))
    } else {
        (-l.conj()).powu((n - m) as u32) * (ratio(m, n) * g * laguerre(m, n - m, x))
    }
}

/// `W(a) = pi^-2 int d^2 l chi(l) exp(a l^* - a^* l)` with `chi(l) = Tr[rho D(l)]`.
fn wigner_by_characteristic_function(rho: &Array2<C64>, points: &[C64]) -> Vec<f64> {
    let n = rho.nrows();
    let (half, step) = (8.0, 0.08);
    let k = (2.0 * half / step) as usize;
    let mut out = vec![0.0; points.len()];
    for i in 0..=k {
        for j in 0..=k {
            let l = C64::new(-half + i as f64 * step, -half + j as f64 * step);
            let mut chi = C64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    chi += rho[[a, b]] * displacement_element(b, a, l);
                }
            }
            for (w, &p) in out.iter_mut().zip(points) {
                *w += (chi * (p * l.conj() - p.conj() * l).exp()).re * step * step;
            }
        }
    }
    out.iter().map(|w| w / std::f64::consts::PI.powi(2)).collect()
}

#[test]
fn parity_wigner_matches_characteristic_function() {
    let mut v = Vec::new();
    let mut seed: u64 = 0x2545_f491_4f6c_dd1d;
    for _ in 0..64 {
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        v.push((next(), next()));
    }
    let rho = random_density(&[8], &v);
    let points =
        [C64::new(0.0, 0.0), C64::new(0.4, -0.3), C64::new(-1.1, 0.2), C64::new(0.7, 0.9), C64::new(-0.5, -1.3)];
    let by_parity = metrics::wigner(&rho, &points.iter().map(|p| vec![*p]).collect::<Vec<_>>()).unwrap();
    let by_fourier = wigner_by_characteristic_function(rho.data(), &points);
    for (a, b) in by_parity.iter().zip(&by_fourier) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn reid_of_products_is_the_variance_product() {
    let grid = metrics::steering::default_outcome_grid();
    let s1 = space(&[40]);
    let s2 = space(&[6]);
    for nbar in [0.0, 0.3, 1.0] {
        let th = states::thermal_dm(nbar, &s1).unwrap();
        for other in [states::vacuum(&s2).to_density(), states::thermal_dm(0.5, &s2).unwrap()] {
            let e = metrics::reid(&th.tensor(&other), 1, 1, &grid).unwrap();
            // 2 sqrt(Var X Var P) / |<[X, P]>| with the unconditioned thermal variances.
            let var = 2.0 * nbar + 1.0;
            let want = 2.0 * (var * var).sqrt() / 2.0;
            assert!((e - want).abs() < 1e-4 * want, "nbar {nbar}: {e} vs {want}");
            assert!(e >= 1.0 - 1e-6);
        }
    }
    let vac = states::vacuum(&space(&[8, 8])).to_density();
    assert!((metrics::reid(&vac, 1, 1, &grid).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn fisher_information_of_gaussian_shift_families() {
    let s1 = space(&[20]);
    let vac = states::vacuum(&space(&[6])).to_density();
    let mut cases = vec![];
    for nbar in [0.0, 0.5, 1.5] {
        cases.push((states::thermal_dm(nbar, &s1).unwrap(), 2.0 * nbar + 1.0));
    }
    cases.push((states::coherent(C64::new(0.8, -0.4), &s1).unwrap().to_density(), 1.0));
    for (rho1, sigma2) in cases {
        let r = metrics::fisher_steering(&rho1.tensor(&vac), &FisherGrid::default()).unwrap();
        assert!((r.f_hom * sigma2 - 1.0).abs() < 0.01, "CFI {} for variance {sigma2}", r.f_hom);
        assert_eq!(r.e_f, 0.0);
    }
}

#[test]
fn gaussian_states_have_no_nongaussianity() {
    let s = space(&[16, 16]);
    let cases = [
        states::vacuum(&s).to_density(),
        states::coherent(C64::new(0.6, 0.3), &space(&[16])).unwrap().tensor(&states::vacuum(&space(&[16]))).to_density(),
        states::thermal_dm(0.4, &space(&[16])).unwrap().tensor(&states::thermal_dm(0.2, &space(&[16])).unwrap()),
    ];
    for rho in &cases {
        assert!(metrics::nongaussianity(rho).unwrap() <= 1e-3);
    }
}

#[test]
fn conditioning_averages_back_to_the_marginal() {
    let rho = states::pcs(PcsSpec::new(C64::new(1.5, 0.0)), &space(&[14, 14])).unwrap().to_density();
    let marginal = fock::partial_trace(&rho, &[0]).unwrap();
    let dx = 0.05;
    let mut sum = Array2::<C64>::zeros((14, 14));
    for k in 0..=400 {
        let x = -10.0 + k as f64 * dx;
        if let Ok((cond, density)) = condition(&rho, 1, 0.3, x) {
            sum = sum + cond.data().mapv(|v| v * density * dx);
        }
    }
    let d = linalg::trace_distance(sum.view(), marginal.data().view()).unwrap();
    assert!(d < 1e-3, "trace distance {d}");
}

#[test]
fn transfer_channel_is_completely_positive() {
    let n = 6;
    for eta in [0.0, 0.3, 0.7, 1.0] {
        let kraus = TransferChannel::new(eta).unwrap().kraus(n, n).unwrap();
        let mut completeness = Array2::<C64>::zeros((n, n));
        for k in &kraus {
            completeness = completeness + linalg::matmul(linalg::adjoint(k.view()).view(), k.view());
        }
        assert!((&completeness - &Array2::<C64>::eye(n)).iter().all(|v| v.norm() < 1e-10));
        // Choi matrix sum_ij |i><j| (x) E(|i><j|)
        let mut choi = Array2::<C64>::zeros((n * n, n * n));
        for i in 0..n {
            for j in 0..n {
                let mut e = Array2::<C64>::zeros((n, n));
                for k in &kraus {
                    for a in 0..n {
                        for b in 0..n {
                            e[[a, b]] += k[[a, i]] * k[[b, j]].conj();
                        }
                    }
                }
                for a in 0..n {
                    for b in 0..n {
                        choi[[i * n + a, j * n + b]] = e[[a, b]];
                    }
                }
            }
        }
        let min = linalg::eigvalsh(choi.view()).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        assert!(min > -1e-10, "eta {eta}: Choi eigenvalue {min}");
    }
}

#[test]
fn unit_transmission_swaps_pair_amplitude_sign() {
    let s = space(&[14, 14]);
    for z in [C64::new(0.8, 0.0), C64::new(1.5, 0.4)] {
        let out = transfer(&states::pcs(PcsSpec::new(z), &s).unwrap().to_density(), &TransferChannel::new(1.0).unwrap()).unwrap();
        let f = states::fidelity_pure(&out, &states::pcs(PcsSpec::new(-z), &s).unwrap()).unwrap();
        assert!(f >= 1.0 - 1e-9, "{f}");
    }
}

#[test]
fn ideal_cat_is_even_and_sign_symmetric() {
    let z = C64::new(2.0, 0.0);
    let rho = states::pcs(PcsSpec::new(z), &space(&[20, 20])).unwrap().to_density();
    let minus = TransferChannel::new(1.0).unwrap();
    let plus = TransferChannel { sign: 1.0, ..minus };
    let a = cat_from_channel(&rho, &minus, 0.0, z).unwrap();
    let b = cat_from_channel(&rho, &plus, 0.0, z).unwrap();
    let odd: f64 = a.rho.populations().iter().skip(1).step_by(2).sum();
    assert!(odd < 1e-3, "odd population {odd}");
    assert!((a.fidelity - b.fidelity).abs() < 1e-12);
}

/// Overlap of the x = 0 conditional of PCS(zeta) with the even cat `i sqrt(zeta)`,
/// from the closed-form coefficients `(-zeta^2/2)^k / (k! sqrt((2k)!))` against
/// `(-zeta)^k / sqrt((2k)!)`.
fn conditional_cat_overlap(zeta: f64) -> f64 {
    let terms = 40;
    let mut lnf = vec![0.0f64; 2 * terms + 1];
    for k in 1..lnf.len() {
        lnf[k] = lnf[k - 1] + (k as f64).ln();
    }
    let c: Vec<f64> = (0..terms)
        .map(|k| (-1f64).powi(k as i32) * (k as f64 * (zeta * zeta / 2.0).ln() - lnf[k] - 0.5 * lnf[2 * k]).exp())
        .collect();
    let d: Vec<f64> =
        (0..terms).map(|k| (-1f64).powi(k as i32) * (k as f64 * zeta.ln() - 0.5 * lnf[2 * k]).exp()).collect();
    let dot: f64 = c.iter().zip(&d).map(|(a, b)| a * b).sum();
    dot * dot / (c.iter().map(|a| a * a).sum::<f64>() * d.iter().map(|a| a * a).sum::<f64>())
}

#[test]
fn conditional_pcs_cat_overlap_matches_closed_form() {
    let s = space(&[24, 24]);
    for z in [1.5, 2.0, 2.5] {
        let rho = states::pcs(PcsSpec::new(C64::new(z, 0.0)), &s).unwrap().to_density();
        let (cond, _) = condition(&rho, 1, 0.0, 0.0).unwrap();
        let beta = C64::new(0.0, z.sqrt());
        let f = states::fidelity_pure(&cond, &states::cat_even(beta, cond.space()).unwrap()).unwrap();
        assert!((f - conditional_cat_overlap(z)).abs() < 1e-9, "zeta {z}: {f} vs {}", conditional_cat_overlap(z));
    }
    // Frozen from the closed form above.
    assert!((conditional_cat_overlap(2.0) - 0.940_361_475_810_298_6).abs() < 1e-12);
}

#[test]
fn metrics_accept_pure_states_with_vanishing_tails() {
    for z in [0.1, 0.5, 1.0] {
        let rho = states::pcs(PcsSpec::new(C64::new(z, 0.0)), &space(&[20, 20])).unwrap().to_density();
        let r = metrics::fisher_steering(&rho, &FisherGrid::default()).unwrap();
        assert!(r.e_f.is_finite());
        assert!(metrics::nongaussianity(&rho).unwrap().is_finite());
    }
}
