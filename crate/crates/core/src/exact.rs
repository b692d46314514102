//! Closed-form sweep results: transition distributions, large-N limits, the
//! conversion threshold and Landau-Zener scattering phases.
//!
//! Everything is evaluated in the log domain on top of the prefix table
//! `S(i) = Σ_{j≤i} ln(1 − x^j)`, so `x^{N m}` never underflows even at `N = 10⁴`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use crate::special::{arg_log_gamma_imag, log_sum_exp, NeumaierSum, QLogTable};
use crate::{Error, Result};

/// Coupling and sweep rate together with the derived adiabaticity `x = e^{−2πλ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub g: f64,
    pub beta: f64,
}

impl SweepParams {
    pub fn new(g: f64, beta: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidParameter(format!("coupling g = {g} must be positive")));
        }
        if !beta.is_finite() || beta == 0.0 {
            return Err(Error::InvalidParameter(format!("sweep rate β = {beta} must be non-zero")));
        }
        Ok(SweepParams { g, beta })
    }

    /// Forward sweep (`β = 1`) with `g² = λ`.
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("λ = {lambda} must be positive")));
        }
        Self::new(lambda.sqrt(), 1.0)
    }

    pub fn from_x(x: f64) -> Result<Self> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Domain(format!("x = {x} outside (0, 1)")));
        }
        Self::from_lambda(-x.ln() / (2.0 * PI))
    }

    /// `λ = g²/|β|`.
    pub fn lambda(&self) -> f64 {
        self.g * self.g / self.beta.abs()
    }

    /// `g²/β`, carrying the sweep direction.
    pub fn signed_lambda(&self) -> f64 {
        self.g * self.g / self.beta
    }

    pub fn ln_x(&self) -> f64 {
        -2.0 * PI * self.lambda()
    }

    pub fn x(&self) -> f64 {
        self.ln_x().exp()
    }
}

/// Where a distribution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ExactFormula,
    Recursion,
    Tdse,
    Cascade,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::ExactFormula => "exact-formula",
            Provenance::Recursion => "recursion",
            Provenance::Tdse => "tdse",
            Provenance::Cascade => "cascade",
        };
        f.write_str(s)
    }
}

/// Probability vector over consecutive integers `offset, offset + 1, …`,
/// stored as log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    offset: i64,
    log_probs: Vec<f64>,
    variable: &'static str,
    provenance: Provenance,
}

impl Distribution {
    pub fn from_log_probs(offset: i64, log_probs: Vec<f64>, variable: &'static str, provenance: Provenance) -> Self {
        Distribution { offset, log_probs, variable, provenance }
    }

    pub fn from_probs(offset: i64, probs: &[f64], variable: &'static str, provenance: Provenance) -> Self {
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Distribution { offset, log_probs, variable, provenance }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    /// Name of the counted quantity (`"n"` molecules, `"m"` pairs, …).
    pub fn variable(&self) -> &'static str {
        self.variable
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    /// Probability of the value `v`; zero outside the support.
    pub fn prob(&self, v: i64) -> f64 {
        self.log_prob(v).exp()
    }

    pub fn log_prob(&self, v: i64) -> f64 {
        let i = v - self.offset;
        if i < 0 || i as usize >= self.log_probs.len() {
            return f64::NEG_INFINITY;
        }
        self.log_probs[i as usize]
    }

    pub fn values(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.log_probs.len() as i64).map(move |i| i + self.offset)
    }

    pub fn sum(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for l in &self.log_probs {
            acc.add(l.exp());
        }
        acc.value()
    }

    pub fn log_sum(&self) -> f64 {
        log_sum_exp(&self.log_probs)
    }

    pub fn mean(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for (v, l) in self.values().zip(&self.log_probs) {
            acc.add(v as f64 * l.exp());
        }
        acc.value()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let mut acc = NeumaierSum::default();
        for (v, l) in self.values().zip(&self.log_probs) {
            acc.add((v as f64 - mu).powi(2) * l.exp());
        }
        acc.value()
    }

    /// Most probable value (the smallest one on ties).
    pub fn mode(&self) -> i64 {
        let mut best = 0;
        for (i, &l) in self.log_probs.iter().enumerate() {
            if l > self.log_probs[best] {
                best = i;
            }
        }
        best as i64 + self.offset
    }

    /// Returns a copy rescaled to unit sum.
    pub fn normalized(&self) -> Self {
        let s = self.log_sum();
        let log_probs = self.log_probs.iter().map(|l| l - s).collect();
        Distribution { log_probs, ..self.clone() }
    }

    /// Total-variation distance `½ Σ |p − q|` over the union of supports.
    pub fn total_variation(&self, other: &Distribution) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = (self.offset + self.len() as i64).max(other.offset + other.len() as i64);
        let mut acc = NeumaierSum::default();
        for v in lo..hi {
            acc.add((self.prob(v) - other.prob(v)).abs());
        }
        acc.value() / 2.0
    }

    /// Largest `|p − q|` over the union of supports.
    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = (self.offset + self.len() as i64).max(other.offset + other.len() as i64);
        (lo..hi).map(|v| (self.prob(v) - other.prob(v)).abs()).fold(0.0, f64::max)
    }

    /// Writes `index,probability,log_probability`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# variable={} provenance={}", self.variable, self.provenance)?;
        writeln!(w, "index,probability,log_probability")?;
        for (v, l) in self.values().zip(&self.log_probs) {
            writeln!(w, "{v},{:.17e},{:.17e}", l.exp(), l)?;
        }
        Ok(())
    }
}

/// Distribution of atomic pairs `m` formed from `N` molecules in one
/// dissociating sweep: `P(m) = [N m]_x x^{(Q+1)(N−m)} (x^{Q+1}; x)_m`.
pub fn reverse_distribution(n_total: u32, q: u32, p: &SweepParams) -> Distribution {
    let n = n_total as usize;
    let q = q as usize;
    let t = QLogTable::new(p.ln_x(), n + q);
    let log_probs = (0..=n)
        .map(|m| t.ln_qbinom(n, m) + ((q + 1) * (n - m)) as f64 * t.ln_x() + t.ln_qpoch_pow(q + 1, m))
        .collect();
    Distribution::from_log_probs(0, log_probs, "m", Provenance::ExactFormula)
}

/// Which transcription of the forward distribution to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardVariant {
    /// Exponent `(N + Q − n)·n`. Not normalized: at `N = 1` the weights sum to `2 − x`.
    Printed,
    /// Exponent `(N + Q − n)(N − n)`.
    Corrected,
}

impl ForwardVariant {
    pub const ALL: [ForwardVariant; 2] = [ForwardVariant::Printed, ForwardVariant::Corrected];

    pub fn name(self) -> &'static str {
        match self {
            ForwardVariant::Printed => "printed",
            ForwardVariant::Corrected => "corrected",
        }
    }
}

/// The variant confirmed by direct propagation on every sector with `N ≤ 4`.
pub const SELECTED_FORWARD_VARIANT: ForwardVariant = ForwardVariant::Corrected;

/// Largest normalization defect tolerated before a variant is declared inconsistent.
pub const FORWARD_NORMALIZATION_LIMIT: f64 = 1e-8;

/// Raw evaluation of either forward variant, without any normalization check.
///
/// `P(n) = [N, N−n]_x x^{e(n)} (x^{Q+N−n+1}; x)_n`, over molecules `n` produced
/// from the all-atom state.
pub fn forward_distribution_variant(n_total: u32, q: u32, p: &SweepParams, variant: ForwardVariant) -> Distribution {
    let n_tot = n_total as usize;
    let q = q as usize;
    let t = QLogTable::new(p.ln_x(), n_tot + q);
    let log_probs = (0..=n_tot)
        .map(|n| {
            let exponent = match variant {
                ForwardVariant::Printed => (n_tot + q - n) * n,
                ForwardVariant::Corrected => (n_tot + q - n) * (n_tot - n),
            };
            t.ln_qbinom(n_tot, n_tot - n) + exponent as f64 * t.ln_x() + t.ln_qpoch_pow(q + n_tot - n + 1, n)
        })
        .collect();
    Distribution::from_log_probs(0, log_probs, "n", Provenance::ExactFormula)
}

/// Forward distribution of molecules `n`, using [`SELECTED_FORWARD_VARIANT`].
pub fn forward_distribution(n_total: u32, q: u32, p: &SweepParams) -> Result<Distribution> {
    checked_forward(n_total, q, p, SELECTED_FORWARD_VARIANT)
}

/// Evaluates `variant` and fails if its total probability is off by more than
/// [`FORWARD_NORMALIZATION_LIMIT`].
pub fn checked_forward(n_total: u32, q: u32, p: &SweepParams, variant: ForwardVariant) -> Result<Distribution> {
    let d = forward_distribution_variant(n_total, q, p, variant);
    let defect = (d.sum() - 1.0).abs();
    if !(defect <= FORWARD_NORMALIZATION_LIMIT) {
        return Err(Error::FormulaInconsistency(format!(
            "{} forward variant sums to 1 {:+.3e} at N = {n_total}, Q = {q}, x = {}",
            variant.name(),
            d.sum() - 1.0,
            p.x()
        )));
    }
    Ok(d)
}

/// Forward distribution built from the ratio recursion in `m = N − n`,
///
/// `P(m+1)/P(m) = x^Q (x^{2m+1} − x^{N+m+1}) / ((1 − x^{m+1})(1 − x^{m+Q+1}))`,
///
/// then normalized. O(N) and stable for very large `N`. Indexed by `n`.
pub fn forward_distribution_recursive(n_total: u32, q: u32, p: &SweepParams) -> Distribution {
    let n_tot = n_total as usize;
    let ln_x = p.ln_x();
    let l1m = |k: usize| crate::special::ln_one_minus_exp(k as f64 * ln_x);
    let mut by_m = Vec::with_capacity(n_tot + 1);
    let mut acc = 0.0;
    by_m.push(acc);
    for m in 0..n_tot {
        acc += forward_log_ratio(n_tot, q as usize, m, ln_x, &l1m);
        by_m.push(acc);
    }
    let log_probs: Vec<f64> = by_m.into_iter().rev().collect();
    Distribution::from_log_probs(0, log_probs, "n", Provenance::Recursion).normalized()
}

/// `ln[P(m+1)/P(m)]` of the forward recursion; `−∞` at `m = N`.
pub fn forward_log_ratio(n_tot: usize, q: usize, m: usize, ln_x: f64, l1m: &dyn Fn(usize) -> f64) -> f64 {
    if m >= n_tot {
        return f64::NEG_INFINITY;
    }
    // x^{2m+1} − x^{N+m+1} = x^{2m+1}(1 − x^{N−m})
    (q + 2 * m + 1) as f64 * ln_x + l1m(n_tot - m) - l1m(m + 1) - l1m(m + q + 1)
}

/// Large-N forward mean `⟨n⟩ = N + ln(2 − x^{N+Q}) / ln x`.
pub fn forward_mean_large_n(n_total: u32, q: u32, p: &SweepParams) -> f64 {
    let ln_x = p.ln_x();
    let xnq = ((n_total + q) as f64 * ln_x).exp();
    n_total as f64 + (2.0 - xnq).ln() / ln_x
}

/// `L = ln(1 − x^{Q+1}) / ln x`.
///
/// This is `N`-independent. Comparing with the exact distribution shows that it
/// tracks the number of molecules that survive a dissociating sweep, so the
/// pair fraction is `1 − L/N` (see [`reverse_pair_fraction_large_n`]).
pub fn reverse_pairs_large_n(q: u32, p: &SweepParams) -> f64 {
    let ln_x = p.ln_x();
    crate::special::ln_one_minus_exp((q + 1) as f64 * ln_x) / ln_x
}

/// Typical fraction of molecules converted to pairs, `1 − clamp(L/N, 0, 1)`.
pub fn reverse_pair_fraction_large_n(n_total: u32, q: u32, p: &SweepParams) -> f64 {
    if n_total == 0 {
        return 0.0;
    }
    1.0 - (reverse_pairs_large_n(q, p) / n_total as f64).clamp(0.0, 1.0)
}

/// Large-N converted fraction: `0` below `f = 1`, `(f − 1)/f` above.
pub fn transition_fraction(f: f64) -> f64 {
    if f < 1.0 {
        0.0
    } else {
        (f - 1.0) / f
    }
}

/// `f = 2πλ N / ln N`.
pub fn sweep_f(n_total: u32, p: &SweepParams) -> Result<f64> {
    if n_total < 2 {
        return Err(Error::InvalidParameter("f needs N ≥ 2".into()));
    }
    let n = n_total as f64;
    Ok(2.0 * PI * p.lambda() * n / n.ln())
}

/// `1/β` at which `f = 1` for the given coupling.
pub fn threshold_inverse_beta(n_total: u32, g: f64) -> f64 {
    let n = n_total as f64;
    n.ln() / (2.0 * PI * g * g * n)
}

/// Accumulated scattering phase along a chain of pairwise crossings.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    /// Per-crossing phases `φ_k`, each in the branch produced by continuous arg Γ.
    pub per_crossing: Vec<f64>,
    /// Unwrapped `Σ φ_k`.
    pub total: f64,
    /// `total` reduced to `[0, 2π)`.
    pub wrapped: f64,
    /// `total = wrapped + 2π·winding`.
    pub winding: i64,
}

impl PhaseResult {
    pub fn from_crossings(per_crossing: Vec<f64>) -> Self {
        let mut acc = NeumaierSum::default();
        for &v in &per_crossing {
            acc.add(v);
        }
        let total = acc.value();
        let winding = (total / (2.0 * PI)).floor() as i64;
        let wrapped = total - 2.0 * PI * winding as f64;
        PhaseResult { per_crossing, total, wrapped, winding }
    }
}

/// Signed difference of two phases reduced to `(−π, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// Two-level Landau-Zener phase `3π/4 − arg Γ(iy)` with `y = g²/β`.
pub fn lz_phase(y: f64) -> Result<f64> {
    Ok(0.75 * PI - arg_log_gamma_imag(y)?)
}

/// Phase of the amplitude that connects the all-atom state to the all-molecule
/// state: `Σ_{k=1}^{N} [3π/4 − arg Γ(i g²(k+Q)/β)]`.
pub fn corner_phase(n_total: u32, q: u32, p: &SweepParams) -> Result<PhaseResult> {
    if n_total == 0 {
        return Err(Error::InvalidParameter("corner phase needs N ≥ 1".into()));
    }
    let y = p.signed_lambda();
    let phases = (1..=n_total)
        .map(|k| lz_phase(y * (k + q) as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseResult::from_crossings(phases))
}

/// Corner-to-corner probability `Π_{k=1}^{N} (1 − x^{k+Q})`.
pub fn corner_probability(n_total: u32, q: u32, p: &SweepParams) -> f64 {
    let ln_x = p.ln_x();
    (1..=n_total)
        .map(|k| crate::special::ln_one_minus_exp((k + q) as f64 * ln_x))
        .sum::<f64>()
        .exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(x: f64) -> SweepParams {
        SweepParams::from_x(x).unwrap()
    }

    #[test]
    fn sweep_params_roundtrip() {
        let p = SweepParams::from_lambda(0.37).unwrap();
        assert!((p.x() - (-2.0 * PI * 0.37f64).exp()).abs() < 1e-16);
        let q = params(0.2);
        assert!((q.x() - 0.2).abs() < 1e-15);
        assert!(SweepParams::new(0.0, 1.0).is_err());
        assert!(SweepParams::new(1.0, 0.0).is_err());
        let r = SweepParams::new(0.5, -2.0).unwrap();
        assert_eq!(r.lambda(), 0.125);
        assert_eq!(r.signed_lambda(), -0.125);
    }

    #[test]
    fn reverse_two_state_limit() {
        let p = params(0.3);
        let d = reverse_distribution(1, 0, &p);
        assert!((d.prob(0) - 0.3).abs() < 1e-15);
        assert!((d.prob(1) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn reverse_adiabatic_limit() {
        let p = SweepParams::from_lambda(20.0).unwrap();
        assert!((reverse_distribution(5, 0, &p).prob(5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reverse_n2_middle_term() {
        for i in 1..20 {
            let x = i as f64 / 20.0;
            let d = reverse_distribution(2, 0, &params(x));
            // x^{N−m}(x^{N−m+1}; x)_m at N = 2, m = 1
            let direct = x * (1.0 - x * x);
            assert!((d.prob(1) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn reverse_matches_single_channel_form() {
        // Q = 0: P_m = x^{N−m} (x^{N−m+1}; x)_m
        let x: f64 = 0.61;
        let n = 7u32;
        let d = reverse_distribution(n, 0, &params(x));
        for m in 0..=n {
            let mut v = x.powi((n - m) as i32);
            for k in 0..m {
                v *= 1.0 - x.powi((n - m + 1 + k) as i32);
            }
            assert!((d.prob(m as i64) - v).abs() < 1e-14);
        }
    }

    #[test]
    fn forward_two_state_limit() {
        let p = params(0.3);
        let d = forward_distribution(1, 0, &p).unwrap();
        assert!((d.prob(1) - 0.7).abs() < 1e-15);
        assert!((d.prob(0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn printed_variant_is_not_normalized() {
        let p = params(0.3);
        let d = forward_distribution_variant(1, 0, &p, ForwardVariant::Printed);
        assert!((d.sum() - (2.0 - 0.3)).abs() < 1e-14);
        assert!(matches!(checked_forward(1, 0, &p, ForwardVariant::Printed), Err(Error::FormulaInconsistency(_))));
    }

    #[test]
    fn forward_survival_n2() {
        let x: f64 = 0.45;
        let d = forward_distribution(2, 0, &params(x)).unwrap();
        assert!((d.prob(0) - x.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn forward_sudden_limit() {
        let p = SweepParams::from_lambda(1e-9).unwrap();
        assert!((forward_distribution(12, 1, &p).unwrap().prob(0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn recursion_matches_closed_form() {
        for &(n, q, x) in &[(1u32, 0u32, 0.3), (5, 0, 0.7), (20, 2, 0.9), (50, 1, 0.97), (50, 0, 0.2)] {
            let p = params(x);
            let a = forward_distribution(n, q, &p).unwrap();
            let b = forward_distribution_recursive(n, q, &p);
            assert!(a.total_variation(&b) < 1e-10, "N={n} Q={q} x={x}");
        }
    }

    #[test]
    fn recursion_terminates_at_full_support() {
        let p = params(0.5);
        let l1m = |k: usize| crate::special::ln_one_minus_exp(k as f64 * p.ln_x());
        assert_eq!(forward_log_ratio(6, 0, 6, p.ln_x(), &l1m), f64::NEG_INFINITY);
        assert_eq!(forward_distribution_recursive(6, 0, &p).len(), 7);
    }

    #[test]
    fn large_n_mean_limits() {
        let p = SweepParams::from_lambda(30.0).unwrap();
        let v = forward_mean_large_n(100, 0, &p);
        assert!((v - (100.0 - 2f64.ln() / (2.0 * PI * 30.0))).abs() < 1e-12);
        // N and Q enter the correction only through N + Q.
        let p = params(0.9);
        let a = forward_mean_large_n(10, 3, &p) - 10.0;
        let b = forward_mean_large_n(12, 1, &p) - 12.0;
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn reverse_large_n_helpers() {
        let p = SweepParams::from_lambda(5.0).unwrap();
        let x = p.x();
        assert!((reverse_pairs_large_n(0, &p) - x / (2.0 * PI * 5.0)).abs() < 1e-20);
        let p = params(0.5);
        assert!((reverse_pairs_large_n(0, &p) - 0.5f64.ln() / 0.5f64.ln()).abs() < 1e-15);
        let frac = reverse_pair_fraction_large_n(10, 0, &params(1.0 - 1e-9));
        assert_eq!(frac, 0.0);
    }

    #[test]
    fn transition_fraction_values() {
        assert_eq!(transition_fraction(0.5), 0.0);
        assert_eq!(transition_fraction(1.0), 0.0);
        assert_eq!(transition_fraction(2.0), 0.5);
        let n = 10_000;
        let inv_beta = threshold_inverse_beta(n, 1.0);
        let p = SweepParams::new(1.0, 1.0 / inv_beta).unwrap();
        assert!((sweep_f(n, &p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corner_phase_additivity() {
        let p = SweepParams::from_lambda(0.8).unwrap();
        let a = corner_phase(5, 1, &p).unwrap();
        let b = corner_phase(4, 1, &p).unwrap();
        let last = lz_phase(0.8 * 6.0).unwrap();
        assert!((a.total - b.total - last).abs() < 1e-13);
        assert!((a.total - (a.wrapped + 2.0 * PI * a.winding as f64)).abs() < 1e-12);
        assert!((0.0..2.0 * PI).contains(&a.wrapped));
        assert!(corner_phase(0, 0, &p).is_err());
    }

    #[test]
    fn corner_phase_single_mode_case() {
        let p = SweepParams::from_lambda(0.6).unwrap();
        let r = corner_phase(1, 1, &p).unwrap();
        assert!((r.total - (0.75 * PI - arg_log_gamma_imag(1.2).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn corner_probability_is_lz_product() {
        let p = SweepParams::from_lambda(0.2).unwrap();
        let x = p.x();
        let expected = (1.0 - x) * (1.0 - x * x) * (1.0 - x * x * x);
        assert!((corner_probability(3, 0, &p) - expected).abs() < 1e-15);
        let d = forward_distribution(3, 0, &p).unwrap();
        assert!((d.prob(3) - expected).abs() < 1e-14);
    }

    #[test]
    fn phase_distance_wraps() {
        assert!((phase_distance(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-14);
        assert!((phase_distance(2.0 * PI - 0.1, 0.1) + 0.2).abs() < 1e-14);
    }

    #[test]
    fn distribution_statistics() {
        let d = Distribution::from_probs(2, &[0.25, 0.5, 0.25], "n", Provenance::Tdse);
        assert_eq!(d.mode(), 3);
        assert!((d.mean() - 3.0).abs() < 1e-15);
        assert!((d.variance() - 0.5).abs() < 1e-15);
        assert_eq!(d.prob(1), 0.0);
        let e = Distribution::from_probs(3, &[1.0], "n", Provenance::Tdse);
        assert!((d.total_variation(&e) - 0.5).abs() < 1e-15);
        let mut out = Vec::new();
        d.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("index,probability,log_probability\n2,"));
    }
}
