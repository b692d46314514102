//! Sequential dissociation through several resonances in a reverse sweep.
//!
//! With well separated resonances each channel acts alone on whatever molecules
//! are left, so the joint law is a chain of single-channel distributions: the
//! `k`-th factor is the reverse distribution for the molecules that survived
//! channels `1 … k−1`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exact::{reverse_distribution, transition_fraction, sweep_f, Distribution, Provenance, SweepParams};
use crate::special::{log_sum_exp, QLogTable};
use crate::{Error, Result};

/// Channels with at most this many entries get an exact joint table.
pub const EXACT_JOINT_MAX_CHANNELS: usize = 3;

/// `ln P(m1, m2) = ln P_{m1} + (N − m1 − m2) ln x + ln (x^{N−m1−m2+1}; x)_{m2}`,
/// with `P_{m1}` the single-channel reverse distribution.
pub fn joint_two_log(n_total: u32, p: &SweepParams, m1: u32, m2: u32) -> Result<f64> {
    if m1 + m2 > n_total {
        return Err(Error::InvalidParameter(format!("m1 + m2 = {} exceeds N = {n_total}", m1 + m2)));
    }
    let n = n_total as usize;
    let t = QLogTable::new(p.ln_x(), n);
    let (m1, m2) = (m1 as usize, m2 as usize);
    let first = (n - m1) as f64 * t.ln_x() + t.ln_qpoch_pow(n - m1 + 1, m1);
    let rest = n - m1 - m2;
    Ok(first + rest as f64 * t.ln_x() + t.ln_qpoch_pow(rest + 1, m2))
}

pub fn joint_two(n_total: u32, p: &SweepParams, m1: u32, m2: u32) -> Result<f64> {
    Ok(joint_two_log(n_total, p, m1, m2)?.exp())
}

/// `P(m1 − 1, m2 + 1) / P(m1, m2)`, which is `x` for every valid pair.
pub fn detailed_balance_ratio(n_total: u32, p: &SweepParams, m1: u32, m2: u32) -> Result<f64> {
    if m1 == 0 {
        return Err(Error::InvalidParameter("the exchange needs m1 ≥ 1".into()));
    }
    Ok((joint_two_log(n_total, p, m1 - 1, m2 + 1)? - joint_two_log(n_total, p, m1, m2)?).exp())
}

/// Effective temperature `k_B T = |β| / (2π g²)`, with channel index as energy.
pub fn effective_temperature(p: &SweepParams) -> f64 {
    1.0 / (2.0 * PI * p.lambda())
}

/// Problem definition of a cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSpec {
    pub n_total: u32,
    pub params: SweepParams,
    /// Per-channel imbalance, in resonance order.
    pub q: Vec<u32>,
    /// Channel energies; they fix the chronological order and must be strictly increasing.
    pub eps: Vec<f64>,
}

impl CascadeSpec {
    /// `K` channels with `Q_k = 0` and linear dispersion `ε_k = k`.
    pub fn uniform(n_total: u32, params: SweepParams, channels: usize) -> Self {
        CascadeSpec { n_total, params, q: vec![0; channels], eps: (1..=channels).map(|k| k as f64).collect() }
    }

    fn validate(&self) -> Result<()> {
        if self.q.is_empty() || self.q.len() != self.eps.len() {
            return Err(Error::InvalidParameter("one Q and one ε per channel, at least one channel".into()));
        }
        if self.eps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("channel energies must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Exact joint law over `(m_1, …, m_K)` for small `K`.
#[derive(Debug, Clone)]
pub struct JointTable {
    configs: Vec<Vec<u32>>,
    log_probs: Vec<f64>,
    index: HashMap<Vec<u32>, usize>,
}

impl JointTable {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.configs.iter().map(|c| c.as_slice()).zip(self.log_probs.iter().copied())
    }

    pub fn log_prob(&self, m: &[u32]) -> f64 {
        self.index.get(m).map_or(f64::NEG_INFINITY, |&i| self.log_probs[i])
    }

    pub fn prob(&self, m: &[u32]) -> f64 {
        self.log_prob(m).exp()
    }

    /// Marginal of channel `k` (zero-based).
    pub fn marginal(&self, k: usize) -> Vec<f64> {
        let top = self.configs.iter().map(|c| c[k]).max().unwrap_or(0) as usize;
        let mut out = vec![0.0; top + 1];
        for (c, l) in self.iter() {
            out[c[k] as usize] += l.exp();
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let k = self.configs.first().map_or(0, |c| c.len());
        let cols: Vec<String> = (1..=k).map(|i| format!("m_{i}")).collect();
        writeln!(w, "{},probability,log_probability", cols.join(","))?;
        for (c, l) in self.iter() {
            let ms: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{:.17e},{:.17e}", ms.join(","), l.exp(), l)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CascadeResult {
    pub spec: CascadeSpec,
    /// Distribution of pairs formed in each channel.
    pub channel_marginals: Vec<Distribution>,
    /// Distribution of surviving molecules after each channel.
    pub remaining: Vec<Distribution>,
    pub joint: Option<JointTable>,
    pub temperature: f64,
    // conditional[k][r] = log P(m | r molecules enter channel k)
    conditional: Vec<Vec<Vec<f64>>>,
}

impl CascadeResult {
    pub fn channel_means(&self) -> Vec<f64> {
        self.channel_marginals.iter().map(|d| d.mean()).collect()
    }

    pub fn remaining_mean(&self) -> f64 {
        self.remaining.last().map_or(self.spec.n_total as f64, |d| d.mean())
    }

    /// Final distribution of surviving molecules.
    pub fn remaining_distribution(&self) -> &Distribution {
        self.remaining.last().expect("at least one channel")
    }

    /// Draws `count` configurations `(m_1, …, m_K)` by walking the chain.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<u32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut r = self.spec.n_total as usize;
                let mut out = Vec::with_capacity(self.conditional.len());
                for table in &self.conditional {
                    let m = draw(&table[r], rng.gen::<f64>());
                    out.push(m as u32);
                    r -= m;
                }
                out
            })
            .collect()
    }

    pub fn write_marginals_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "channel,m,probability")?;
        for (k, d) in self.channel_marginals.iter().enumerate() {
            for v in d.values() {
                writeln!(w, "{},{v},{:.17e}", k + 1, d.prob(v))?;
            }
        }
        Ok(())
    }
}

fn draw(log_probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, l) in log_probs.iter().enumerate() {
        acc += l.exp();
        if u < acc {
            return i;
        }
    }
    log_probs.len() - 1
}

/// Runs the cascade: exact per-channel marginals for any `K`, and the exact
/// joint law when `K ≤ 3`.
pub fn cascade(spec: &CascadeSpec) -> Result<CascadeResult> {
    spec.validate()?;
    let n = spec.n_total as usize;
    let mut by_q: HashMap<u32, Vec<Vec<f64>>> = HashMap::new();
    let conditional: Vec<Vec<Vec<f64>>> = spec
        .q
        .iter()
        .map(|&q| {
            by_q.entry(q)
                .or_insert_with(|| {
                    (0..=n).map(|r| reverse_distribution(r as u32, q, &spec.params).log_probs().to_vec()).collect()
                })
                .clone()
        })
        .collect();

    // Distribution of molecules entering each channel, propagated exactly.
    let mut entering = vec![f64::NEG_INFINITY; n + 1];
    entering[n] = 0.0;
    let mut channel_marginals = Vec::new();
    let mut remaining = Vec::new();
    for table in &conditional {
        let mut pairs = vec![Vec::new(); n + 1];
        let mut left = vec![Vec::new(); n + 1];
        for r in 0..=n {
            if entering[r] == f64::NEG_INFINITY {
                continue;
            }
            for (m, &l) in table[r].iter().enumerate() {
                pairs[m].push(entering[r] + l);
                left[r - m].push(entering[r] + l);
            }
        }
        let marg: Vec<f64> = pairs.iter().map(|v| log_sum_exp(v)).collect();
        entering = left.iter().map(|v| log_sum_exp(v)).collect();
        channel_marginals.push(Distribution::from_log_probs(0, marg, "m", Provenance::Cascade));
        remaining.push(Distribution::from_log_probs(0, entering.clone(), "n", Provenance::Cascade));
    }

    let joint = (spec.q.len() <= EXACT_JOINT_MAX_CHANNELS).then(|| exact_joint(n, &conditional));
    Ok(CascadeResult {
        spec: spec.clone(),
        channel_marginals,
        remaining,
        joint,
        temperature: effective_temperature(&spec.params),
        conditional,
    })
}

fn exact_joint(n: usize, conditional: &[Vec<Vec<f64>>]) -> JointTable {
    let mut configs = Vec::new();
    let mut log_probs = Vec::new();
    let mut current = Vec::with_capacity(conditional.len());
    fn walk(
        conditional: &[Vec<Vec<f64>>],
        r: usize,
        acc: f64,
        current: &mut Vec<u32>,
        configs: &mut Vec<Vec<u32>>,
        log_probs: &mut Vec<f64>,
    ) {
        let k = current.len();
        if k == conditional.len() {
            configs.push(current.clone());
            log_probs.push(acc);
            return;
        }
        for m in 0..=r {
            current.push(m as u32);
            walk(conditional, r - m, acc + conditional[k][r][m], current, configs, log_probs);
            current.pop();
        }
    }
    walk(conditional, n, 0.0, &mut current, &mut configs, &mut log_probs);
    let index = configs.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    JointTable { configs, log_probs, index }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsReport {
    /// Largest spread of `ln P + Σ_k k m_k / k_BT` within a shell of fixed `Σ m_k`.
    pub shell_deviation: f64,
    /// Temperature from a pooled within-shell regression of `ln P` on `Σ_k k m_k`.
    pub fitted_temperature: f64,
    pub predicted_temperature: f64,
    pub relative_error: f64,
}

/// Checks the Gibbs form `P ∝ exp(−Σ_k k m_k / k_BT)` on every total-pair shell.
pub fn gibbs_check(result: &CascadeResult, p: &SweepParams) -> Result<GibbsReport> {
    let joint = result
        .joint
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("the Gibbs check needs the exact joint table".into()))?;
    let predicted = effective_temperature(p);
    let energy = |m: &[u32]| m.iter().enumerate().map(|(k, &v)| (k + 1) as f64 * v as f64).sum::<f64>();

    let mut shells: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    for (m, l) in joint.iter() {
        shells.entry(m.iter().sum()).or_default().push((energy(m), l));
    }
    let mut deviation: f64 = 0.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for pts in shells.values() {
        let adjusted: Vec<f64> = pts.iter().map(|(e, l)| l + e / predicted).collect();
        let lo = adjusted.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = adjusted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        deviation = deviation.max(hi - lo);
        let n = pts.len() as f64;
        let me = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
        for (e, l) in pts {
            sxy += (e - me) * (l - ml);
            sxx += (e - me) * (e - me);
        }
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("no shell has more than one energy".into()));
    }
    let fitted = -sxx / sxy;
    Ok(GibbsReport {
        shell_deviation: deviation,
        fitted_temperature: fitted,
        predicted_temperature: predicted,
        relative_error: ((fitted - predicted) / predicted).abs(),
    })
}

/// One point of the condensate-fraction analogy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionPoint {
    pub lambda: f64,
    pub temperature: f64,
    pub f: f64,
    /// `⟨m_1⟩ / N` from the cascade.
    pub first_channel_fraction: f64,
    pub transition_fraction: f64,
}

pub fn condensate_fraction_curve(n_total: u32, channels: usize, lambdas: &[f64]) -> Result<Vec<FractionPoint>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let p = SweepParams::from_lambda(lambda)?;
            let r = cascade(&CascadeSpec::uniform(n_total, p, channels))?;
            let f = sweep_f(n_total, &p)?;
            Ok(FractionPoint {
                lambda,
                temperature: effective_temperature(&p),
                f,
                first_channel_fraction: r.channel_marginals[0].mean() / n_total as f64,
                transition_fraction: transition_fraction(f),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_two_corner_value() {
        let p = SweepParams::from_x(0.4).unwrap();
        let v = joint_two(5, &p, 0, 0).unwrap();
        assert!((v - 0.4f64.powi(10)).abs() < 1e-15);
        assert!(joint_two(3, &p, 2, 2).is_err());
    }

    #[test]
    fn joint_two_marginal_is_reverse_distribution() {
        let p = SweepParams::from_x(0.7).unwrap();
        let n = 8;
        let rev = reverse_distribution(n, 0, &p);
        for m1 in 0..=n {
            let s: f64 = (0..=n - m1).map(|m2| joint_two(n, &p, m1, m2).unwrap()).sum();
            assert!((s - rev.prob(m1 as i64)).abs() < 1e-14);
        }
    }

    #[test]
    fn detailed_balance_examples() {
        let p = SweepParams::from_x(0.35).unwrap();
        assert!((detailed_balance_ratio(10, &p, 4, 3).unwrap() - 0.35).abs() < 1e-12);
        assert!((detailed_balance_ratio(10, &p, 1, 9).unwrap() - 0.35).abs() < 1e-12);
        assert!(detailed_balance_ratio(10, &p, 0, 3).is_err());
    }

    #[test]
    fn single_channel_cascade_is_reverse_distribution() {
        let p = SweepParams::from_x(0.6).unwrap();
        let r = cascade(&CascadeSpec { n_total: 7, params: p, q: vec![1], eps: vec![0.0] }).unwrap();
        let rev = reverse_distribution(7, 1, &p);
        assert!(r.channel_marginals[0].total_variation(&rev) < 1e-14);
    }

    #[test]
    fn two_channel_joint_matches_closed_form() {
        let p = SweepParams::from_x(0.55).unwrap();
        let r = cascade(&CascadeSpec::uniform(6, p, 2)).unwrap();
        let j = r.joint.as_ref().unwrap();
        for (m, l) in j.iter() {
            assert!((l - joint_two_log(6, &p, m[0], m[1]).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn means_account_for_every_molecule() {
        let p = SweepParams::from_x(0.8).unwrap();
        let r = cascade(&CascadeSpec::uniform(30, p, 5)).unwrap();
        let total: f64 = r.channel_means().iter().sum::<f64>() + r.remaining_mean();
        assert!((total - 30.0).abs() < 1e-10);
        assert!(r.joint.is_none());
    }

    #[test]
    fn many_channels_dissociate_everything() {
        let p = SweepParams::from_x(0.5).unwrap();
        let few = cascade(&CascadeSpec::uniform(20, p, 3)).unwrap().remaining_mean();
        let many = cascade(&CascadeSpec::uniform(20, p, 60)).unwrap().remaining_mean();
        assert!(many < few && many < 1e-6, "{few} {many}");
    }

    #[test]
    fn gibbs_form_three_channels() {
        let p = SweepParams::from_lambda(0.17).unwrap();
        let r = cascade(&CascadeSpec::uniform(6, p, 3)).unwrap();
        let g = gibbs_check(&r, &p).unwrap();
        assert!(g.shell_deviation < 1e-10);
        assert!(g.relative_error < 1e-10);
    }

    #[test]
    fn degenerate_order_rejected() {
        let p = SweepParams::from_x(0.5).unwrap();
        let s = CascadeSpec { n_total: 3, params: p, q: vec![0, 0], eps: vec![1.0, 1.0] };
        assert!(cascade(&s).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let p = SweepParams::from_x(0.5).unwrap();
        let r = cascade(&CascadeSpec::uniform(10, p, 4)).unwrap();
        assert_eq!(r.sample(50, 7), r.sample(50, 7));
        assert!(r.sample(50, 7).iter().all(|c| c.iter().sum::<u32>() <= 10));
    }
}
