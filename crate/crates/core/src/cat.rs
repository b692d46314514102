//! The atomic state produced by an adiabatic-limit dissociation of a molecular
//! coherent state `|α_m⟩`:
//!
//! `|A⟩ = e^{−|α_m|²/2} Σ_n (e^{3iπ/4} α_m)^n e^{iφ_n} / √(n!) |2n⟩`,
//! `φ_n = 3nπ/4 − Σ_{k=1}^{n} arg Γ(iλ(k+1))`.
//!
//! Only even atom numbers are populated. Magnitudes are kept in log form, so
//! `√((2n)!)` is never formed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::special::{arg_log_gamma_imag, NeumaierSum};
use crate::{Error, Result};

/// Default cap on the number of retained Fock components.
pub const DEFAULT_MAX_TERMS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CatState {
    pub alpha_m: Complex64,
    pub lambda: f64,
    /// `c_n` multiplies `|2n⟩`, `n = 0 … n_max`.
    pub coeffs: Vec<Complex64>,
    log_mags: Vec<f64>,
}

impl CatState {
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Mean molecule number `|α_m|²`.
    pub fn n_mean(&self) -> f64 {
        self.alpha_m.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for c in &self.coeffs {
            acc.add(c.norm_sqr());
        }
        acc.value()
    }

    /// The same magnitudes with every `φ_n` set to zero.
    pub fn without_scattering_phases(&self) -> CatState {
        let base = Complex64::from_polar(1.0, 0.75 * PI + self.alpha_m.arg());
        let coeffs = self
            .log_mags
            .iter()
            .enumerate()
            .map(|(n, &l)| l.exp() * base.powu(n as u32))
            .collect();
        CatState { coeffs, ..self.clone() }
    }

    /// Amplitudes over all Fock numbers `0 … 2 n_max`, odd entries zero.
    pub fn fock_amplitudes(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); 2 * self.coeffs.len() - 1];
        for (n, c) in self.coeffs.iter().enumerate() {
            out[2 * n] = *c;
        }
        out
    }

    /// `⟨A|â|A⟩` by direct summation over the Fock vector.
    pub fn mean_annihilation(&self) -> Complex64 {
        let psi = self.fock_amplitudes();
        (1..psi.len()).map(|k| psi[k - 1].conj() * psi[k] * (k as f64).sqrt()).sum()
    }
}

/// Builds `|A⟩`, keeping enough terms that the discarded Poisson tail is below `tol`.
pub fn build_cat_state(alpha_m: Complex64, lambda: f64, tol: f64) -> Result<CatState> {
    build_cat_state_with_cap(alpha_m, lambda, tol, DEFAULT_MAX_TERMS)
}

pub fn build_cat_state_with_cap(alpha_m: Complex64, lambda: f64, tol: f64, max_terms: usize) -> Result<CatState> {
    let mean = alpha_m.norm_sqr();
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::InvalidParameter("|α_m| must be positive".into()));
    }
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} outside (0, 1e-6]")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("λ = {lambda} must be positive")));
    }
    let n_max = poisson_cutoff(mean, tol, max_terms)?;
    cat_state_with_terms(alpha_m, lambda, n_max)
}

/// `|A⟩` with exactly `n_max + 1` components and no tolerance bookkeeping.
pub fn cat_state_with_terms(alpha_m: Complex64, lambda: f64, n_max: usize) -> Result<CatState> {
    let mean = alpha_m.norm_sqr();
    if !(mean > 0.0 && mean.is_finite()) || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter("|α_m| and λ must be positive".into()));
    }
    let ln_mean = mean.ln();
    let rotation = 0.75 * PI + alpha_m.arg();
    let mut coeffs = Vec::with_capacity(n_max + 1);
    let mut log_mags = Vec::with_capacity(n_max + 1);
    let mut ln_fact = NeumaierSum::default();
    let mut gamma_sum = NeumaierSum::default();
    for n in 0..=n_max {
        if n > 0 {
            ln_fact.add((n as f64).ln());
            gamma_sum.add(arg_log_gamma_imag(lambda * (n + 1) as f64)?);
        }
        let nf = n as f64;
        let l = -0.5 * mean + 0.5 * nf * ln_mean - 0.5 * ln_fact.value();
        let phi_n = 0.75 * nf * PI - gamma_sum.value();
        log_mags.push(l);
        coeffs.push(Complex64::from_polar(l.exp(), nf * rotation + phi_n));
    }
    Ok(CatState { alpha_m, lambda, coeffs, log_mags })
}

/// Smallest `n_max` with Poisson(`mean`) mass beyond it below `tol`.
fn poisson_cutoff(mean: f64, tol: f64, max_terms: usize) -> Result<usize> {
    let ln_mean = mean.ln();
    let mut ln_p = -mean;
    let mut n = 0usize;
    loop {
        // tail beyond n is below p_{n+1} / (1 − mean/(n+2)) once n + 2 > mean
        let ln_next = ln_p + ln_mean - ((n + 1) as f64).ln();
        let ratio = mean / (n + 2) as f64;
        if ratio < 1.0 && ln_next - (1.0 - ratio).ln() < tol.ln() {
            return Ok(n);
        }
        n += 1;
        if n > max_terms {
            return Err(Error::Truncation(format!("more than {max_terms} Fock terms needed for |α_m|² = {mean}")));
        }
        ln_p = ln_next;
    }
}

/// `|⟨A|â²|A⟩| / |α_m|²`.
pub fn squeezing_ratio(state: &CatState) -> f64 {
    let c = &state.coeffs;
    let mut acc = Complex64::default();
    for n in 0..c.len() - 1 {
        let nf = n as f64;
        acc += c[n].conj() * c[n + 1] * ((2.0 * nf + 2.0) * (2.0 * nf + 1.0)).sqrt();
    }
    acc.norm() / state.n_mean()
}

/// `⟨α|A⟩ = e^{−|α|²/2} Σ_n conj(α)^{2n} / √((2n)!) c_n`.
pub fn glauber_overlap(state: &CatState, alpha: Complex64) -> Complex64 {
    if alpha == Complex64::default() {
        return state.coeffs[0];
    }
    let r2 = alpha.norm_sqr();
    let ln_r = 0.5 * r2.ln();
    let theta = alpha.arg();
    let mut ln_fact2 = 0.0;
    let mut acc = Complex64::default();
    for (n, (c, l)) in state.coeffs.iter().zip(&state.log_mags).enumerate() {
        if n > 0 {
            ln_fact2 += ((2 * n - 1) as f64).ln() + ((2 * n) as f64).ln();
        }
        let mag = -0.5 * r2 + 2.0 * n as f64 * ln_r - 0.5 * ln_fact2 + l;
        acc += Complex64::from_polar(mag.exp(), c.arg() - 2.0 * n as f64 * theta);
    }
    acc
}

/// One cell of an overlap heatmap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell {
    pub re: f64,
    pub im: f64,
    pub value: f64,
}

/// `|⟨α|A⟩|` on a `count × count` grid over `[lo, hi]²`, row-major in `Im α`.
pub fn overlap_heatmap(state: &CatState, lo: f64, hi: f64, count: usize) -> Vec<HeatmapCell> {
    let axis: Vec<f64> = (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect();
    (0..count * count)
        .into_par_iter()
        .map(|idx| {
            let (re, im) = (axis[idx % count], axis[idx / count]);
            HeatmapCell { re, im, value: glauber_overlap(state, Complex64::new(re, im)).norm() }
        })
        .collect()
}

/// Interior cells not exceeded by any of their eight neighbours, largest first.
pub fn local_maxima(cells: &[HeatmapCell], count: usize) -> Vec<HeatmapCell> {
    let at = |i: usize, j: usize| cells[i * count + j].value;
    let mut out = Vec::new();
    for i in 1..count - 1 {
        for j in 1..count - 1 {
            let v = at(i, j);
            let neighbours = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1), (2, 2)];
            if neighbours.iter().all(|&(di, dj)| v >= at(i + di - 1, j + dj - 1)) {
                out.push(cells[i * count + j]);
            }
        }
    }
    out.sort_by(|a, b| b.value.total_cmp(&a.value));
    out
}

/// Share of the global maximum a local maximum must reach to count as a peak.
pub const PEAK_FRACTION: f64 = 0.8;

/// Dominant peaks: local maxima within [`PEAK_FRACTION`] of the largest.
pub fn dominant_peaks(cells: &[HeatmapCell], count: usize) -> Vec<HeatmapCell> {
    let maxima = local_maxima(cells, count);
    let top = maxima.first().map_or(0.0, |c| c.value);
    maxima.into_iter().filter(|c| c.value >= PEAK_FRACTION * top).collect()
}

/// `λ_k` solving `λ ln(λN) = 2πk` for `k = 1 … k_max`.
pub fn resonance_lambdas(n_mean: f64, k_max: usize) -> Vec<f64> {
    let f = |l: f64| l * (l * n_mean).ln();
    (1..=k_max)
        .map(|k| {
            let target = 2.0 * PI * k as f64;
            // f is increasing for λ > 1/(eN) and negative below 1/N.
            let (mut lo, mut hi) = (1.0 / n_mean, 1.0 / n_mean + 1.0);
            while f(hi) < target {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Squeezing ratio over a `λ` grid at `|α_m|² = n_mean`, `φ_M = 0`.
pub fn squeezing_scan(n_mean: f64, lambdas: &[f64], tol: f64) -> Result<Vec<(f64, f64)>> {
    let alpha = Complex64::new(n_mean.sqrt(), 0.0);
    lambdas
        .par_iter()
        .map(|&l| Ok((l, squeezing_ratio(&build_cat_state(alpha, l, tol)?))))
        .collect()
}

/// Result of the loop integral over the molecular phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circulation {
    pub value: f64,
    /// Same estimate with half as many steps.
    pub coarse: f64,
}

/// Tolerance of the step-halving check, relative to `2π|α_m|²`.
pub const CIRCULATION_TOLERANCE: f64 = 1e-6;

/// Absolute floor on the step-halving check; the overlap phases carry roundoff
/// of this order even when `|α_m|²` is tiny.
pub const CIRCULATION_FLOOR: f64 = 1e-8;

/// `−i ∮ ⟨A|∂_φ A⟩ dφ` over `φ_M ∈ [0, 2π)`.
///
/// Uses the gauge-invariant discrete connection `Σ_j arg⟨A_j|A_{j+1}⟩`, whose
/// `O(M⁻²)` error is removed by Richardson extrapolation from `M` and `M/2`
/// points. The result is compared against the same estimate at half the steps.
pub fn circulation(alpha_mod: f64, lambda: f64, tol: f64, steps: usize) -> Result<Circulation> {
    if steps < 64 || steps % 4 != 0 {
        return Err(Error::InvalidParameter(format!("steps = {steps} must be a multiple of 4, at least 64")));
    }
    let fine = richardson(alpha_mod, lambda, tol, steps)?;
    let coarse = richardson(alpha_mod, lambda, tol, steps / 2)?;
    let scale = 2.0 * PI * alpha_mod * alpha_mod;
    if (fine - coarse).abs() > (CIRCULATION_TOLERANCE * scale).max(CIRCULATION_FLOOR) {
        return Err(Error::Convergence(format!(
            "circulation moved by {:.3e} when halving {steps} steps",
            (fine - coarse).abs()
        )));
    }
    Ok(Circulation { value: fine, coarse })
}

fn richardson(alpha_mod: f64, lambda: f64, tol: f64, steps: usize) -> Result<f64> {
    let a = discrete_loop(alpha_mod, lambda, tol, steps)?;
    let b = discrete_loop(alpha_mod, lambda, tol, steps / 2)?;
    Ok((4.0 * a - b) / 3.0)
}

fn discrete_loop(alpha_mod: f64, lambda: f64, tol: f64, steps: usize) -> Result<f64> {
    let states = (0..steps)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / steps as f64;
            build_cat_state(Complex64::from_polar(alpha_mod, phi), lambda, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = NeumaierSum::default();
    for j in 0..steps {
        let (a, b) = (&states[j], &states[(j + 1) % steps]);
        let overlap: Complex64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x.conj() * y).sum();
        acc.add(overlap.arg());
    }
    Ok(acc.value())
}
