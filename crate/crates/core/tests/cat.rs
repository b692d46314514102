use std::f64::consts::PI;

use bec_sweep::cat::*;
use num_complex::Complex64;
use proptest::prelude::*;

// ⟨α|A⟩ summed directly over Fock amplitudes of |A⟩.
fn overlap_oracle(state: &CatState, alpha: Complex64) -> Complex64 {
    let psi = state.fock_amplitudes();
    let mut coh = (-0.5 * alpha.norm_sqr()).exp();
    let mut acc = Complex64::default();
    for (k, a) in psi.iter().enumerate() {
        if k > 0 {
            coh /= (k as f64).sqrt();
        }
        acc += alpha.conj().powu(k as u32) * coh * a;
    }
    acc
}

fn ratio_oracle(state: &CatState) -> f64 {
    let psi = state.fock_amplitudes();
    let a2: Complex64 = (2..psi.len()).map(|k| psi[k - 2].conj() * psi[k] * ((k * (k - 1)) as f64).sqrt()).sum();
    a2.norm() / state.n_mean()
}

#[test]
fn mean_field_vanishes_exactly() {
    for (a, l) in [(0.3, 0.5), (2.0, 1.0), (5.0, 5.0)] {
        let s = build_cat_state(Complex64::new(a, 0.7), l, 1e-12).unwrap();
        assert_eq!(s.mean_annihilation(), Complex64::new(0.0, 0.0));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-11);
    }
}

#[test]
fn overlap_and_ratio_match_direct_sums() {
    let s = build_cat_state(Complex64::new(2.0, 0.0), 0.9, 1e-14).unwrap();
    for alpha in [Complex64::new(0.0, 0.0), Complex64::new(1.5, -0.3), Complex64::new(-2.0, 1.0)] {
        assert!((glauber_overlap(&s, alpha) - overlap_oracle(&s, alpha)).norm() < 1e-12);
    }
    assert!((squeezing_ratio(&s) - ratio_oracle(&s)).abs() < 1e-12);
}

#[test]
fn heatmap_has_two_antipodal_peaks() {
    let s = build_cat_state(Complex64::new(5.0, 0.0), 5.0, 1e-12).unwrap();
    let cells = overlap_heatmap(&s, -10.0, 10.0, 101);
    let maxima = dominant_peaks(&cells, 101);
    assert_eq!(maxima.len(), 2);
    // Weaker ripples are local maxima too, but well below the pair.
    assert!(local_maxima(&cells, 101)[2].value < 0.75 * maxima[0].value);
    let (a, b) = (maxima[0], maxima[1]);
    assert!((a.re + b.re).abs() < 1e-9 && (a.im + b.im).abs() < 1e-9);
    assert!((a.value - b.value).abs() < 1e-9);
}

#[test]
fn squeezing_peaks_only_near_resonances() {
    for n in [100.0f64, 400.0] {
        let lambdas: Vec<f64> = (0..1200).map(|i| 0.3 + 5.7 * i as f64 / 1199.0).collect();
        let res = resonance_lambdas(n, 40);
        let half = 2.5 / n.sqrt();
        let scan = squeezing_scan(n, &lambdas, 1e-12).unwrap();
        let mut hits = 0;
        for (l, r) in scan {
            if r > 0.5 {
                hits += 1;
                assert!(res.iter().any(|c| (l - c).abs() <= half), "N={n}: ratio {r} at λ={l} away from resonances");
            }
        }
        assert!(hits > 0);
    }
}

#[test]
fn resonance_condition_holds() {
    for l in resonance_lambdas(100.0, 5).iter().enumerate() {
        let (k, l) = (l.0 + 1, *l.1);
        assert!((l * (100.0 * l).ln() - 2.0 * PI * k as f64).abs() < 1e-9);
    }
}

#[test]
fn circulation_counts_particles() {
    for n in [4.0f64, 9.0, 25.0] {
        let c = circulation(n.sqrt(), 1.3, 1e-12, 256).unwrap();
        assert!(((c.value - 2.0 * PI * n) / (2.0 * PI * n)).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn overlap_symmetric_under_inversion(a in 0.5f64..4.0, l in 0.1f64..5.0, re in -6.0f64..6.0, im in -6.0f64..6.0) {
        let s = build_cat_state(Complex64::new(a, 0.0), l, 1e-12).unwrap();
        let z = Complex64::new(re, im);
        prop_assert!((glauber_overlap(&s, z) - glauber_overlap(&s, -z)).norm() < 1e-10);
    }

    #[test]
    fn ratio_bounded(a in 0.5f64..6.0, l in 0.1f64..6.0) {
        let s = build_cat_state(Complex64::new(a, 0.0), l, 1e-12).unwrap();
        let r = squeezing_ratio(&s);
        // ⟨a†a⟩ = 2N, so Cauchy-Schwarz caps the ratio near 2.
        prop_assert!(r >= 0.0 && r <= 2.0 + 2.0 / (a * a));
    }
}
