//! Log-domain special functions: q-Pochhammer symbols, Gaussian binomials,
//! and the complex log-gamma function on the imaginary axis.

use num_complex::Complex64;
use std::f64::consts::{LN_2, PI};

use crate::{Error, Result};

/// `ln(1 - e^u)` for `u < 0`, accurate on both ends of the range.
pub fn ln_one_minus_exp(u: f64) -> f64 {
    debug_assert!(u <= 0.0);
    if u > -LN_2 {
        (-u.exp_m1()).ln()
    } else {
        (-u.exp()).ln_1p()
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln Σ e^{v_i}`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut acc = NeumaierSum::default();
    for &v in values {
        acc.add((v - max).exp());
    }
    max + acc.value().ln()
}

/// `ln (a; x)_m = Σ_{k<m} ln(1 - a x^k)` for `a ∈ [0, 1)`, `x ∈ (0, 1)`.
pub fn q_pochhammer_log(a: f64, x: f64, m: u64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) || x == 0.0 {
        return Err(Error::Domain(format!("q-Pochhammer base x = {x} outside (0, 1)")));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Domain(format!("q-Pochhammer argument a = {a} outside [0, 1)")));
    }
    if m == 0 || a == 0.0 {
        return Ok(0.0);
    }
    if a >= 1.0 {
        return Err(Error::Domain("factor 1 - a x^0 vanishes".into()));
    }
    let (ln_a, ln_x) = (a.ln(), x.ln());
    let mut acc = NeumaierSum::default();
    for k in 0..m {
        acc.add(ln_one_minus_exp(ln_a + k as f64 * ln_x));
    }
    Ok(acc.value())
}

/// Log of the Gaussian binomial `(x;x)_n / ((x;x)_k (x;x)_{n-k})`.
pub fn q_binomial_log(n: u64, k: u64, x: f64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("q-binomial index k = {k} > n = {n}")));
    }
    let num = q_pochhammer_log(x, x, n)?;
    Ok(num - q_pochhammer_log(x, x, k)? - q_pochhammer_log(x, x, n - k)?)
}

/// Prefix table `S(i) = Σ_{j=1}^{i} ln(1 - x^j)`, from which every q-Pochhammer
/// symbol with base `x` and argument `x^a` is an O(1) difference.
#[derive(Debug, Clone)]
pub struct QLogTable {
    ln_x: f64,
    prefix: Vec<f64>,
}

impl QLogTable {
    /// Table up to `S(max_index)`; `ln_x` must be negative.
    pub fn new(ln_x: f64, max_index: usize) -> Self {
        assert!(ln_x < 0.0, "QLogTable needs x < 1");
        let mut prefix = Vec::with_capacity(max_index + 1);
        prefix.push(0.0);
        let mut acc = NeumaierSum::default();
        for j in 1..=max_index {
            acc.add(ln_one_minus_exp(j as f64 * ln_x));
            prefix.push(acc.value());
        }
        QLogTable { ln_x, prefix }
    }

    pub fn ln_x(&self) -> f64 {
        self.ln_x
    }

    pub fn max_index(&self) -> usize {
        self.prefix.len() - 1
    }

    /// `ln (x^a; x)_m` for `a ≥ 1`.
    pub fn ln_qpoch_pow(&self, a: usize, m: usize) -> f64 {
        debug_assert!(a >= 1);
        if m == 0 {
            return 0.0;
        }
        self.prefix[a + m - 1] - self.prefix[a - 1]
    }

    pub fn ln_qbinom(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n);
        self.prefix[n] - self.prefix[k] - self.prefix[n - k]
    }
}

// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_lanczos(z: Complex64) -> Complex64 {
    let zm = z - 1.0;
    let mut series = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        series += c / (zm + i as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (zm + 0.5) * t.ln() - t + series.ln()
}

/// Principal-branch `ln Γ(z)`, continuous away from the non-positive real axis.
///
/// Arguments with `Re z < 1/2` are lifted with `Γ(z) = Γ(z+1)/z`, which keeps
/// the imaginary part continuous along vertical lines.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Err(Error::Domain(format!("Γ has a pole at {}", z.re)));
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 0.5 {
        shift += w.ln();
        w += 1.0;
    }
    Ok(ln_gamma_lanczos(w) - shift)
}

/// `arg Γ(iy)`: the imaginary part of the principal `ln Γ(iy)`, continuous on
/// each half-axis.
pub fn arg_log_gamma_imag(y: f64) -> Result<f64> {
    if y == 0.0 || !y.is_finite() {
        return Err(Error::Domain(format!("arg Γ(iy) undefined at y = {y}")));
    }
    Ok(ln_gamma(Complex64::new(0.0, y))?.im)
}
