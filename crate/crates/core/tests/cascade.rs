use bec_sweep::cascade::*;
use bec_sweep::exact::*;
use proptest::prelude::*;

// Joint law of a uniform cascade rebuilt as a product of reverse distributions.
fn chain_log(n: u32, p: &SweepParams, m: &[u32]) -> f64 {
    let mut r = n;
    let mut acc = 0.0;
    for &mk in m {
        if mk > r {
            return f64::NEG_INFINITY;
        }
        acc += reverse_distribution(r, 0, p).log_prob(mk as i64);
        r -= mk;
    }
    acc
}

#[test]
fn exact_table_matches_chain() {
    let p = SweepParams::from_lambda(0.2).unwrap();
    let r = cascade(&CascadeSpec::uniform(7, p, 3)).unwrap();
    let joint = r.joint.as_ref().unwrap();
    for (m, l) in joint.iter() {
        assert!((l - chain_log(7, &p, m)).abs() < 1e-12);
    }
    let total: f64 = joint.iter().map(|(_, l)| l.exp()).sum();
    assert!((total - 1.0).abs() < 1e-13);
}

#[test]
fn marginals_agree_with_joint() {
    let p = SweepParams::from_lambda(0.35).unwrap();
    let r = cascade(&CascadeSpec::uniform(9, p, 3)).unwrap();
    let joint = r.joint.as_ref().unwrap();
    for k in 0..3 {
        let m = joint.marginal(k);
        for (v, pv) in m.iter().enumerate() {
            assert!((pv - r.channel_marginals[k].prob(v as i64)).abs() < 1e-13);
        }
    }
}

#[test]
fn single_channel_is_reverse_sweep() {
    let p = SweepParams::from_lambda(0.15).unwrap();
    let r = cascade(&CascadeSpec::uniform(12, p, 1)).unwrap();
    assert!(r.channel_marginals[0].max_abs_diff(&reverse_distribution(12, 0, &p)) < 1e-14);
}

#[test]
fn gibbs_form_three_channels() {
    let p = SweepParams::from_lambda(0.25).unwrap();
    let r = cascade(&CascadeSpec::uniform(6, p, 3)).unwrap();
    let g = gibbs_check(&r, &p).unwrap();
    assert!(g.shell_deviation < 1e-10);
    assert!(g.relative_error < 1e-10);
    assert!((g.predicted_temperature - 1.0 / (2.0 * std::f64::consts::PI * 0.25)).abs() < 1e-15);
}

#[test]
fn sampler_within_three_sigma() {
    let p = SweepParams::from_lambda(0.1).unwrap();
    let r = cascade(&CascadeSpec::uniform(20, p, 3)).unwrap();
    let count = 20_000;
    let s = r.sample(count, 11);
    assert_eq!(s, r.sample(count, 11));
    for k in 0..3 {
        let d = &r.channel_marginals[k];
        let mean = s.iter().map(|c| c[k] as f64).sum::<f64>() / count as f64;
        let sigma = (d.variance() / count as f64).sqrt();
        assert!((mean - d.mean()).abs() < 3.0 * sigma + 1e-12, "channel {k}: {mean} vs {}", d.mean());
    }
}

#[test]
fn fraction_curve_rows() {
    let pts = condensate_fraction_curve(50, 2, &[0.01, 0.1, 1.0]).unwrap();
    assert_eq!(pts.len(), 3);
    assert!(pts.windows(2).all(|w| w[1].first_channel_fraction > w[0].first_channel_fraction));
    assert_eq!(pts[0].transition_fraction, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn two_channel_exchange_ratio(n in 1u32..=100, x in 0.01f64..0.99, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let p = SweepParams::from_x(x).unwrap();
        let m1 = 1 + (a * (n - 1) as f64) as u32;
        let m2 = (b * (n - m1) as f64) as u32;
        let ratio = detailed_balance_ratio(n, &p, m1, m2).unwrap();
        prop_assert!((ratio - x).abs() < 1e-12);
    }

    #[test]
    fn adjacent_exchange_up_to_four_channels(n in 1u32..=60, k in 2usize..=4, x in 0.05f64..0.95, fr in prop::collection::vec(0.0f64..1.0, 4)) {
        let p = SweepParams::from_x(x).unwrap();
        let mut left = n;
        let mut m = Vec::with_capacity(k);
        for f in &fr[..k] {
            let v = (f * (left + 1) as f64).floor().min(left as f64) as u32;
            m.push(v);
            left -= v;
        }
        for c in 0..k - 1 {
            if m[c] == 0 {
                continue;
            }
            let mut moved = m.clone();
            moved[c] -= 1;
            moved[c + 1] += 1;
            let ratio = (chain_log(n, &p, &moved) - chain_log(n, &p, &m)).exp();
            prop_assert!((ratio - x).abs() < 1e-10 * x.max(1.0), "m={:?} c={} ratio={}", m, c, ratio);
        }
    }
}
