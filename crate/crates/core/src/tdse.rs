//! Fixed-step RK4 propagation of `i dψ/dt = (A + tB) ψ`, transition
//! probabilities, and scattering phases from the asymptotic amplitude tails.
//!
//! In the interaction gauge the diabatic phase `θ_k(t) = A_kk t + B_kk t²/2`
//! is removed analytically (`ψ_k = c_k e^{−iθ_k}`) and only the phase-dressed
//! couplings are stepped, so the step is limited by the level-crossing
//! frequencies `Δ′_jk(t) = (A_jj − A_kk) + (B_jj − B_kk) t` rather than by `‖H‖`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::exact::{lz_phase, phase_distance, Distribution, Provenance};
use crate::sector::{build_hamiltonian, enumerate_basis, AffineHamiltonian, BasisState, SectorBasis, SectorSpec};
use crate::{Error, Result};

/// Norm drift above which an integration is rejected.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Largest accepted `dt · (fastest frequency)`.
pub const STIFFNESS_LIMIT: f64 = 1.0;
/// Largest accepted RMS residual of a log-tail phase fit, in radians.
pub const PHASE_FIT_RMS_LIMIT: f64 = 1e-3;
/// Transition probability below which no phase is extracted.
pub const MIN_PHASE_PROBABILITY: f64 = 1e-8;
/// Largest sector diagonalized densely for the adiabatic projection.
pub const ADIABATIC_DIM_LIMIT: usize = 2000;
/// Window used by the reference figure runs.
pub const REFERENCE_WINDOW: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    Plain,
    Interaction,
}

/// How asymptotic amplitudes are read off at the window edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Raw diabatic amplitudes.
    Diabatic,
    /// Diabatic amplitudes corrected to first order for the still-oscillating
    /// far-off-resonant admixture (interaction gauge only).
    Dressed,
    /// Instantaneous eigenvectors of `H(t)` at both edges, each labelled by its
    /// dominant diabatic component.
    Adiabatic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationPlan {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub gauge: Gauge,
    pub projection: Projection,
    /// Record every `record_stride` steps; `0` disables the trajectory.
    pub record_stride: usize,
}

impl IntegrationPlan {
    pub fn new(t0: f64, t1: f64, dt: f64, gauge: Gauge) -> Result<Self> {
        let plan = IntegrationPlan {
            t0,
            t1,
            dt,
            gauge,
            projection: Projection::Adiabatic,
            record_stride: 0,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Symmetric window `[−T, T]` in the interaction gauge with
    /// `dt = resolution / max|Δ′|`, where the maximum is taken at the edges.
    pub fn symmetric(h: &AffineHamiltonian, half_width: f64, resolution: f64) -> Result<Self> {
        let freq = crossing_frequency(h, -half_width, half_width);
        let dt = if freq > 0.0 { resolution / freq } else { half_width / 1000.0 };
        Self::new(-half_width, half_width, dt, Gauge::Interaction)
    }

    pub fn with_projection(mut self, projection: Projection) -> Self {
        self.projection = projection;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_window(mut self, t0: f64, t1: f64) -> Self {
        self.t0 = t0;
        self.t1 = t1;
        self
    }

    pub fn steps(&self) -> usize {
        ((self.t1 - self.t0) / self.dt).round().max(1.0) as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t0 < 0.0 && self.t1 > 0.0 && self.t0.is_finite() && self.t1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "window [{}, {}] must straddle t = 0",
                self.t0, self.t1
            )));
        }
        if self.projection == Projection::Dressed && self.gauge != Gauge::Interaction {
            return Err(Error::InvalidParameter("dressed projection needs the interaction gauge".into()));
        }
        Ok(())
    }
}

/// Smallest admissible half-width for a sector:
/// `max(50 g √N / |β|, 20 max_k |ε_k τ| / |β|)`.
pub fn window_rule(spec: &SectorSpec) -> f64 {
    let b = spec.beta.abs();
    let coupling = 50.0 * spec.g * (spec.n_total.max(1) as f64).sqrt() / b;
    let splitting = 20.0 * spec.eps.iter().map(|e| (e * spec.tau).abs()).fold(0.0, f64::max) / b;
    coupling.max(splitting)
}

/// Amplitudes over a sector basis at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub t: f64,
    pub gauge: Gauge,
    pub amps: Vec<Complex64>,
}

impl WaveFunction {
    pub fn basis_state(dim: usize, index: usize, t: f64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        WaveFunction { t, gauge: Gauge::Plain, amps }
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// The same state expressed in `gauge`.
    pub fn in_gauge(&self, h: &AffineHamiltonian, gauge: Gauge) -> WaveFunction {
        if gauge == self.gauge {
            return self.clone();
        }
        let sign = if gauge == Gauge::Interaction { 1.0 } else { -1.0 };
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| a * Complex64::from_polar(1.0, sign * diabatic_phase(h, k, self.t)))
            .collect();
        WaveFunction { t: self.t, gauge, amps }
    }
}

fn diabatic_phase(h: &AffineHamiltonian, k: usize, t: f64) -> f64 {
    h.a_diag()[k] * t + 0.5 * h.b_diag()[k] * t * t
}

/// Largest `|Δ′_jk|` over coupled pairs at either edge (the interaction-gauge stiffness).
pub fn crossing_frequency(h: &AffineHamiltonian, t0: f64, t1: f64) -> f64 {
    let (a, b) = (h.a_diag(), h.b_diag());
    let mut w: f64 = 0.0;
    for j in 0..h.dim() {
        for (k, _) in h.row(j) {
            for t in [t0, t1] {
                w = w.max(((a[j] - a[k]) + (b[j] - b[k]) * t).abs());
            }
        }
    }
    w
}

fn stiffness(h: &AffineHamiltonian, plan: &IntegrationPlan) -> f64 {
    let freq = match plan.gauge {
        Gauge::Plain => h.norm_bound_at(plan.t0).max(h.norm_bound_at(plan.t1)),
        Gauge::Interaction => {
            let coupling = (0..h.dim()).map(|i| h.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
            crossing_frequency(h, plan.t0, plan.t1) + coupling
        }
    };
    plan.dt * freq
}

/// A sampled point of a trajectory, in the plan's gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub amps: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct Integration {
    /// Final state, in the plan's gauge.
    pub psi: WaveFunction,
    /// `|‖ψ(t1)‖ − ‖ψ(t0)‖|`.
    pub norm_drift: f64,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Writes `t,p_0,…,p_{d−1},arg_0,…` per recorded point.
pub fn write_trajectory_csv<W: Write>(traj: &[TrajectoryPoint], with_phases: bool, mut w: W) -> std::io::Result<()> {
    let d = traj.first().map_or(0, |p| p.amps.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|i| format!("p_{i}")));
    if with_phases {
        header.extend((0..d).map(|i| format!("arg_{i}")));
    }
    writeln!(w, "{}", header.join(","))?;
    for p in traj {
        let mut row = vec![format!("{:.10e}", p.t)];
        row.extend(p.amps.iter().map(|a| format!("{:.12e}", a.norm_sqr())));
        if with_phases {
            row.extend(p.amps.iter().map(|a| format!("{:.12e}", a.arg())));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Integrates `psi0` (any gauge, taken at `plan.t0`) to `plan.t1`.
pub fn integrate(h: &AffineHamiltonian, psi0: &WaveFunction, plan: &IntegrationPlan) -> Result<Integration> {
    plan.validate()?;
    if psi0.amps.len() != h.dim() {
        return Err(Error::BasisMismatch);
    }
    let s = stiffness(h, plan);
    if s > STIFFNESS_LIMIT {
        return Err(Error::StepSize { stiffness: s, bound: STIFFNESS_LIMIT });
    }
    let start = WaveFunction { t: plan.t0, ..psi0.clone() }.in_gauge(h, plan.gauge);
    let n0 = start.norm();
    let steps = plan.steps();
    let dt = (plan.t1 - plan.t0) / steps as f64;
    let mut c = start.amps;
    let d = h.dim();
    let mut trajectory = Vec::new();
    let mut record = |t: f64, c: &[Complex64]| trajectory.push(TrajectoryPoint { t, amps: c.to_vec() });
    if plan.record_stride > 0 {
        record(plan.t0, &c);
    }

    let mut k1 = vec![Complex64::default(); d];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut scratch = k1.clone();
    let mut p_now = vec![Complex64::default(); d];
    let mut p_mid = p_now.clone();
    let mut p_end = p_now.clone();
    let mut clock = PhaseClock::new(h, 0.5 * dt);

    for step in 0..steps {
        let t = plan.t0 + step as f64 * dt;
        let t_end = plan.t0 + (step + 1) as f64 * dt;
        let t_mid = 0.5 * (t + t_end);
        match plan.gauge {
            Gauge::Plain => {
                plain_rhs(h, t, &c, &mut k1);
                axpy(&c, 0.5 * dt, &k1, &mut tmp);
                plain_rhs(h, t_mid, &tmp, &mut k2);
                axpy(&c, 0.5 * dt, &k2, &mut tmp);
                plain_rhs(h, t_mid, &tmp, &mut k3);
                axpy(&c, dt, &k3, &mut tmp);
                plain_rhs(h, t_end, &tmp, &mut k4);
            }
            Gauge::Interaction => {
                if step % PhaseClock::ANCHOR_EVERY == 0 {
                    clock.anchor(t);
                }
                p_now.copy_from_slice(&clock.p);
                clock.advance();
                p_mid.copy_from_slice(&clock.p);
                clock.advance();
                p_end.copy_from_slice(&clock.p);
                interaction_rhs(h, &p_now, &c, &mut k1, &mut scratch);
                axpy(&c, 0.5 * dt, &k1, &mut tmp);
                interaction_rhs(h, &p_mid, &tmp, &mut k2, &mut scratch);
                axpy(&c, 0.5 * dt, &k2, &mut tmp);
                interaction_rhs(h, &p_mid, &tmp, &mut k3, &mut scratch);
                axpy(&c, dt, &k3, &mut tmp);
                interaction_rhs(h, &p_end, &tmp, &mut k4, &mut scratch);
            }
        }
        for i in 0..d {
            c[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if plan.record_stride > 0 && ((step + 1) % plan.record_stride == 0 || step + 1 == steps) {
            record(t_end, &c);
        }
    }

    let psi = WaveFunction { t: plan.t1, gauge: plan.gauge, amps: c };
    let norm_drift = (psi.norm() - n0).abs();
    if !(norm_drift <= NORM_DRIFT_LIMIT) {
        return Err(Error::NormDrift { drift: norm_drift, limit: NORM_DRIFT_LIMIT });
    }
    Ok(Integration { psi, norm_drift, trajectory })
}

// e^{iθ_k} on the half-step grid. The quadratic phase has a constant second
// difference, so two complex products per half step replace a sin/cos pair;
// periodic re-anchoring keeps rounding from accumulating.
struct PhaseClock {
    half: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    p: Vec<Complex64>,
    r: Vec<Complex64>,
    w: Vec<Complex64>,
}

impl PhaseClock {
    const ANCHOR_EVERY: usize = 256;

    fn new(h: &AffineHamiltonian, half: f64) -> Self {
        let d = h.dim();
        let w = h.b_diag().iter().map(|b| Complex64::from_polar(1.0, b * half * half)).collect();
        PhaseClock {
            half,
            a: h.a_diag().to_vec(),
            b: h.b_diag().to_vec(),
            p: vec![Complex64::default(); d],
            r: vec![Complex64::default(); d],
            w,
        }
    }

    fn anchor(&mut self, t: f64) {
        let hs = self.half;
        for k in 0..self.p.len() {
            let (a, b) = (self.a[k], self.b[k]);
            self.p[k] = Complex64::from_polar(1.0, a * t + 0.5 * b * t * t);
            self.r[k] = Complex64::from_polar(1.0, a * hs + b * (t * hs + 0.5 * hs * hs));
        }
    }

    fn advance(&mut self) {
        for k in 0..self.p.len() {
            self.p[k] *= self.r[k];
            self.r[k] *= self.w[k];
        }
    }
}

fn axpy(x: &[Complex64], a: f64, y: &[Complex64], out: &mut [Complex64]) {
    for i in 0..x.len() {
        out[i] = x[i] + a * y[i];
    }
}

const MINUS_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };

fn plain_rhs(h: &AffineHamiltonian, t: f64, c: &[Complex64], out: &mut [Complex64]) {
    let (a, b) = (h.a_diag(), h.b_diag());
    for i in 0..c.len() {
        let mut acc = c[i] * (a[i] + t * b[i]);
        for (j, v) in h.row(i) {
            acc += c[j] * v;
        }
        out[i] = MINUS_I * acc;
    }
}

// ċ_j = −i e^{iθ_j} Σ_k A_jk e^{−iθ_k} c_k
fn interaction_rhs(h: &AffineHamiltonian, p: &[Complex64], c: &[Complex64], out: &mut [Complex64], u: &mut [Complex64]) {
    for k in 0..c.len() {
        u[k] = p[k].conj() * c[k];
    }
    for j in 0..c.len() {
        let mut acc = Complex64::default();
        for (k, v) in h.row(j) {
            acc += u[k] * v;
        }
        out[j] = MINUS_I * p[j] * acc;
    }
}

/// Pairs whose first-order admixture `|A/Δ′|` exceeds this are left undressed.
const DRESSING_LIMIT: f64 = 0.5;

fn dressing_term(h: &AffineHamiltonian, f: usize, j: usize, v: f64, t: f64) -> Option<Complex64> {
    let (a, b) = (h.a_diag(), h.b_diag());
    let dprime = (a[f] - a[j]) + (b[f] - b[j]) * t;
    if dprime == 0.0 || (v / dprime).abs() > DRESSING_LIMIT {
        return None;
    }
    let delta = diabatic_phase(h, f, t) - diabatic_phase(h, j, t);
    Some(Complex64::from_polar(v / dprime, delta))
}

/// Asymptotic amplitudes `C_f = c_f + Σ_j A_fj c_j e^{iΔ_fj}/Δ′_fj` from
/// interaction-gauge amplitudes at time `t`.
pub fn dressed_amplitudes(h: &AffineHamiltonian, t: f64, c: &[Complex64]) -> Vec<Complex64> {
    (0..h.dim())
        .map(|f| {
            let mut cf = c[f];
            for (j, v) in h.row(f) {
                if let Some(w) = dressing_term(h, f, j, v, t) {
                    cf += w * c[j];
                }
            }
            cf
        })
        .collect()
}

/// Interaction-gauge start whose asymptotic amplitudes are exactly `|init⟩`
/// to first order.
pub fn dressed_start(h: &AffineHamiltonian, t0: f64, init: usize) -> WaveFunction {
    let mut amps = vec![Complex64::default(); h.dim()];
    amps[init] = Complex64::new(1.0, 0.0);
    for (j, v) in h.row(init) {
        if let Some(w) = dressing_term(h, j, init, v, t0) {
            amps[j] = -w;
        }
    }
    let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= n;
    }
    WaveFunction { t: t0, gauge: Gauge::Interaction, amps }
}

/// Eigenvectors of `H(t)` with column `i` the one dominated by diabatic state `i`.
/// Fails if two eigenvectors share a dominant component.
pub fn labelled_eigenvectors(h: &AffineHamiltonian, t: f64) -> Result<DMatrix<f64>> {
    let d = h.dim();
    if d > ADIABATIC_DIM_LIMIT {
        return Err(Error::Capacity { dim: d as u128, limit: ADIABATIC_DIM_LIMIT });
    }
    let m = DMatrix::from_row_slice(d, d, &h.dense_at(t));
    let eig = SymmetricEigen::new(m);
    let mut out = DMatrix::zeros(d, d);
    let mut taken = vec![false; d];
    for col in 0..d {
        let v = eig.eigenvectors.column(col);
        let (mut best, mut best_abs) = (0, -1.0);
        for i in 0..d {
            if v[i].abs() > best_abs {
                best = i;
                best_abs = v[i].abs();
            }
        }
        if taken[best] {
            return Err(Error::Convergence(format!(
                "adiabatic states at t = {t} cannot be labelled by diabatic components"
            )));
        }
        taken[best] = true;
        let sign = v[best].signum();
        out.set_column(best, &(v * sign));
    }
    Ok(out)
}

/// Final-state amplitudes as defined by `plan.projection`, starting from `initial`.
fn project_run(h: &AffineHamiltonian, initial: usize, plan: &IntegrationPlan) -> Result<(Vec<Complex64>, Integration)> {
    let psi0 = match plan.projection {
        Projection::Diabatic => WaveFunction::basis_state(h.dim(), initial, plan.t0),
        Projection::Dressed => dressed_start(h, plan.t0, initial),
        Projection::Adiabatic => {
            let v = labelled_eigenvectors(h, plan.t0)?;
            let amps = v.column(initial).iter().map(|&x| Complex64::new(x, 0.0)).collect();
            WaveFunction { t: plan.t0, gauge: Gauge::Plain, amps }
        }
    };
    let run = integrate(h, &psi0, plan)?;
    let amps = match plan.projection {
        Projection::Diabatic => run.psi.amps.clone(),
        Projection::Dressed => dressed_amplitudes(h, plan.t1, &run.psi.amps),
        Projection::Adiabatic => {
            let v = labelled_eigenvectors(h, plan.t1)?;
            let plain = run.psi.in_gauge(h, Gauge::Plain);
            (0..h.dim())
                .map(|f| v.column(f).iter().zip(&plain.amps).map(|(&x, a)| a * x).sum())
                .collect()
        }
    };
    Ok((amps, run))
}

/// Final-state probabilities over a sector basis.
#[derive(Debug, Clone)]
pub struct TransitionResult {
    pub basis: SectorBasis,
    pub probs: Vec<f64>,
    pub norm_drift: f64,
}

impl TransitionResult {
    pub fn prob_of(&self, s: &BasisState) -> f64 {
        self.basis.index_of(s).map_or(0.0, |i| self.probs[i])
    }

    pub fn state_distribution(&self) -> Distribution {
        Distribution::from_probs(0, &self.probs, "state", Provenance::Tdse)
    }

    /// Marginal over the molecule count `n`.
    pub fn molecule_marginal(&self) -> Distribution {
        let n_max = self.basis.states().iter().map(|s| s.n).max().unwrap_or(0) as usize;
        let mut p = vec![0.0; n_max + 1];
        for (s, &v) in self.basis.states().iter().zip(&self.probs) {
            p[s.n as usize] += v;
        }
        Distribution::from_probs(0, &p, "n", Provenance::Tdse)
    }

    /// Marginal over the pair count `m_k` of channel `k` (zero-based).
    pub fn channel_marginal(&self, k: usize) -> Distribution {
        let m_max = self.basis.states().iter().map(|s| s.m[k]).max().unwrap_or(0) as usize;
        let mut p = vec![0.0; m_max + 1];
        for (s, &v) in self.basis.states().iter().zip(&self.probs) {
            p[s.m[k] as usize] += v;
        }
        Distribution::from_probs(0, &p, "m", Provenance::Tdse)
    }
}

pub fn transition_probabilities(spec: &SectorSpec, initial: &BasisState, plan: &IntegrationPlan) -> Result<TransitionResult> {
    let basis = enumerate_basis(spec)?;
    let h = build_hamiltonian(spec, &basis)?;
    let init = basis.index_of(initial).ok_or(Error::BasisMismatch)?;
    let (amps, run) = project_run(&h, init, plan)?;
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let probs = amps.iter().map(|a| a.norm_sqr() / total).collect();
    Ok(TransitionResult { basis, probs, norm_drift: run.norm_drift })
}

/// Largest change of any final probability when the window is doubled.
pub fn window_convergence(spec: &SectorSpec, initial: &BasisState, plan: &IntegrationPlan) -> Result<f64> {
    let a = transition_probabilities(spec, initial, plan)?;
    let wide = plan.with_window(2.0 * plan.t0, 2.0 * plan.t1);
    let b = transition_probabilities(spec, initial, &wide)?;
    Ok(a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Tolerance of the window-convergence check.
pub const WINDOW_CONVERGENCE_LIMIT: f64 = 1e-4;

pub fn check_window_convergence(spec: &SectorSpec, initial: &BasisState, plan: &IntegrationPlan) -> Result<f64> {
    let change = window_convergence(spec, initial, plan)?;
    if change > WINDOW_CONVERGENCE_LIMIT {
        return Err(Error::Convergence(format!(
            "doubling the window [{}, {}] moved a probability by {change:.3e}",
            plan.t0, plan.t1
        )));
    }
    Ok(change)
}

/// Exact two-level values `(1 − e^{−2πλ}, 3π/4 − arg Γ(iλ))` with `λ = g²/β`.
pub fn lz_reference(g: f64, beta: f64) -> Result<(f64, f64)> {
    if beta == 0.0 {
        return Err(Error::InvalidParameter("β must be non-zero".into()));
    }
    let y = g * g / beta;
    let prob = -(-2.0 * PI * y.abs()).exp_m1();
    Ok((prob, lz_phase(y)?))
}

/// `φ + c·ln(√|β| |t|)` fitted to an unwrapped phase series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub intercept: f64,
    pub slope: f64,
    pub rms: f64,
}

fn unwrap_phases(z: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.len());
    let mut prev = 0.0;
    for (i, a) in z.iter().enumerate() {
        let mut v = a.arg();
        if i > 0 {
            v = prev + phase_distance(v, prev);
        }
        out.push(v);
        prev = v;
    }
    out
}

/// Least-squares fit of `y = φ + c·u`.
pub fn fit_log_tail(u: &[f64], y: &[f64]) -> Result<LogFit> {
    let n = u.len() as f64;
    if u.len() < 3 {
        return Err(Error::FitQuality { rms: f64::INFINITY, limit: PHASE_FIT_RMS_LIMIT });
    }
    let mu = u.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|v| (v - mu).powi(2)).sum();
    let suy: f64 = u.iter().zip(y).map(|(a, b)| (a - mu) * (b - my)).sum();
    let slope = if suu > 0.0 { suy / suu } else { 0.0 };
    let intercept = my - slope * mu;
    let rms = (u.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    Ok(LogFit { intercept, slope, rms })
}

/// Constant offset subtracted from every extracted phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCalibration {
    pub offset: f64,
    /// `λ` of the two-level run the offset came from, if any.
    pub lambda: Option<f64>,
}

impl PhaseCalibration {
    pub fn none() -> Self {
        PhaseCalibration { offset: 0.0, lambda: None }
    }

    /// Runs the two-level model at `λ` (with `β = 1`) through the same pipeline
    /// and records the residual against the exact phase.
    pub fn two_level(lambda: f64, half_width: f64, resolution: f64) -> Result<Self> {
        let spec = SectorSpec::single_channel(1, 0, lambda.sqrt(), 1.0)?;
        let basis = enumerate_basis(&spec)?;
        let h = build_hamiltonian(&spec, &basis)?;
        let plan = IntegrationPlan::symmetric(&h, half_width, resolution)?;
        let raw = extract_scattering_phase(&spec, &basis.all_atoms(), &basis.all_molecules(), &plan, &Self::none())?;
        let (_, exact) = lz_reference(spec.g, spec.beta)?;
        Ok(PhaseCalibration { offset: phase_distance(raw.phase, exact), lambda: Some(lambda) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringPhase {
    /// Calibrated phase of `⟨final|S|initial⟩`, in `(−π, π]`.
    pub phase: f64,
    /// Coefficient of `ln t` in the outgoing tail.
    pub log_slope: f64,
    pub probability: f64,
    pub outgoing: LogFit,
    pub incoming: LogFit,
}

/// Phase of the scattering amplitude from `initial` to `final`.
///
/// The dressed amplitude of `final` is sampled over `[t1/2, t1]` and fitted as
/// `φ_out + c·ln(√|β| t)`; the initial amplitude is fitted the same way over
/// `[t0, t0/2]`. The phase is `φ_out − φ_in − offset`.
pub fn extract_scattering_phase(
    spec: &SectorSpec,
    initial: &BasisState,
    fin: &BasisState,
    plan: &IntegrationPlan,
    calibration: &PhaseCalibration,
) -> Result<ScatteringPhase> {
    if plan.gauge != Gauge::Interaction {
        return Err(Error::InvalidParameter("phase extraction runs in the interaction gauge".into()));
    }
    let basis = enumerate_basis(spec)?;
    let h = build_hamiltonian(spec, &basis)?;
    let i = basis.index_of(initial).ok_or(Error::BasisMismatch)?;
    let f = basis.index_of(fin).ok_or(Error::BasisMismatch)?;
    if spec.g == 0.0 {
        return Err(Error::NoTransition(0.0));
    }
    let tail_steps = (0.5 * plan.t1.min(-plan.t0) / plan.dt).max(1.0);
    let stride = ((tail_steps / 2000.0).floor() as usize).max(1);
    let plan = plan.with_projection(Projection::Dressed).with_record_stride(stride);
    let psi0 = dressed_start(&h, plan.t0, i);
    let run = integrate(&h, &psi0, &plan)?;

    let end = dressed_amplitudes(&h, plan.t1, &run.psi.amps);
    let total: f64 = end.iter().map(|a| a.norm_sqr()).sum();
    let probability = end[f].norm_sqr() / total;
    if !(probability > MIN_PHASE_PROBABILITY) {
        return Err(Error::NoTransition(probability));
    }

    let scale = spec.beta.abs().sqrt();
    let series = |lo: f64, hi: f64, idx: usize| -> (Vec<f64>, Vec<Complex64>) {
        run.trajectory
            .iter()
            .filter(|p| p.t >= lo && p.t <= hi)
            .map(|p| ((scale * p.t.abs()).ln(), dressed_amplitudes(&h, p.t, &p.amps)[idx]))
            .unzip()
    };
    let (u_out, z_out) = series(0.5 * plan.t1, plan.t1, f);
    let (u_in, z_in) = series(plan.t0, 0.5 * plan.t0, i);
    let outgoing = fit_log_tail(&u_out, &unwrap_phases(&z_out))?;
    let incoming = fit_log_tail(&u_in, &unwrap_phases(&z_in))?;
    let rms = outgoing.rms.max(incoming.rms);
    if rms > PHASE_FIT_RMS_LIMIT {
        return Err(Error::FitQuality { rms, limit: PHASE_FIT_RMS_LIMIT });
    }
    let phase = phase_distance(outgoing.intercept - incoming.intercept - calibration.offset, 0.0);
    Ok(ScatteringPhase { phase, log_slope: outgoing.slope, probability, outgoing, incoming })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lz(lambda: f64) -> (SectorSpec, SectorBasis, AffineHamiltonian) {
        let spec = SectorSpec::single_channel(1, 0, lambda.sqrt(), 1.0).unwrap();
        let basis = enumerate_basis(&spec).unwrap();
        let h = build_hamiltonian(&spec, &basis).unwrap();
        (spec, basis, h)
    }

    #[test]
    fn diagonal_evolution_keeps_moduli() {
        let mut b = crate::sector::HamiltonianBuilder::new(3);
        b.set_diag(0, 0.3, 1.0);
        b.set_diag(1, -0.2, -0.5);
        b.set_diag(2, 0.0, 2.0);
        let h = b.build();
        let s = 1.0 / 3f64.sqrt();
        let psi0 = WaveFunction { t: -5.0, gauge: Gauge::Plain, amps: vec![Complex64::new(s, 0.0); 3] };
        let plan = IntegrationPlan::new(-5.0, 5.0, 1e-4, Gauge::Plain).unwrap();
        let run = integrate(&h, &psi0, &plan).unwrap();
        for a in &run.psi.amps {
            assert!((a.norm() - s).abs() < 1e-12);
        }
        // the interaction gauge has nothing to step at all
        let plan = IntegrationPlan::new(-5.0, 5.0, 1e-1, Gauge::Interaction).unwrap();
        let run = integrate(&h, &psi0, &plan).unwrap();
        let start = psi0.in_gauge(&h, Gauge::Interaction);
        assert_eq!(run.psi.amps, start.amps);
    }

    #[test]
    fn zero_coupling_is_pure_phase() {
        let spec = SectorSpec::relaxed(2, vec![0, 0], 0.0, 1.0, 1.0, vec![0.5, 0.5]).unwrap();
        let basis = enumerate_basis(&spec).unwrap();
        let h = build_hamiltonian(&spec, &basis).unwrap();
        let psi0 = WaveFunction::basis_state(h.dim(), 2, -10.0);
        let plan = IntegrationPlan::new(-10.0, 10.0, 1e-3, Gauge::Plain).unwrap();
        let out = integrate(&h, &psi0, &plan).unwrap().psi.in_gauge(&h, Gauge::Interaction);
        assert!((out.amps[2] - psi0.in_gauge(&h, Gauge::Interaction).amps[2]).norm() < 1e-9);
        assert!(out.amps.iter().enumerate().all(|(i, a)| i == 2 || a.norm() == 0.0));
    }

    #[test]
    fn no_transition_at_zero_coupling() {
        let spec = SectorSpec::relaxed(1, vec![0], 0.0, 1.0, 0.0, vec![0.0]).unwrap();
        let basis = enumerate_basis(&spec).unwrap();
        let plan = IntegrationPlan::new(-20.0, 20.0, 1e-2, Gauge::Interaction).unwrap();
        let r = extract_scattering_phase(&spec, &basis.all_atoms(), &basis.all_molecules(), &plan, &PhaseCalibration::none());
        assert!(matches!(r, Err(Error::NoTransition(_))));
    }

    #[test]
    fn step_size_and_plan_validation() {
        let (_, _, h) = lz(1.0);
        let plan = IntegrationPlan::new(-100.0, 100.0, 0.1, Gauge::Plain).unwrap();
        let psi0 = WaveFunction::basis_state(2, 0, -100.0);
        assert!(matches!(integrate(&h, &psi0, &plan), Err(Error::StepSize { .. })));
        assert!(IntegrationPlan::new(1.0, 2.0, 0.1, Gauge::Plain).is_err());
        assert!(IntegrationPlan::new(-1.0, 2.0, 0.0, Gauge::Plain).is_err());
        let p = IntegrationPlan::new(-1.0, 1.0, 0.1, Gauge::Plain).unwrap();
        assert!(p.with_projection(Projection::Dressed).validate().is_err());
    }

    #[test]
    fn gauges_agree() {
        let (spec, basis, h) = lz(0.7);
        let psi0 = WaveFunction::basis_state(2, 0, -30.0);
        let plain = IntegrationPlan::new(-30.0, 30.0, 2e-4, Gauge::Plain).unwrap();
        let inter = IntegrationPlan::new(-30.0, 30.0, 2e-3, Gauge::Interaction).unwrap();
        let a = integrate(&h, &psi0, &plain).unwrap().psi;
        let b = integrate(&h, &psi0, &inter).unwrap().psi.in_gauge(&h, Gauge::Plain);
        for (x, y) in a.amps.iter().zip(&b.amps) {
            assert!((x - y).norm() < 1e-6);
        }
        assert_eq!(basis.len(), 2);
        assert!(spec.lambda() > 0.0);
    }

    #[test]
    fn two_level_probability() {
        for lambda in [0.25, 1.0] {
            let (spec, basis, h) = lz(lambda);
            let plan = IntegrationPlan::symmetric(&h, 200.0, 0.1).unwrap();
            let r = transition_probabilities(&spec, &basis.all_atoms(), &plan).unwrap();
            let (exact, _) = lz_reference(spec.g, spec.beta).unwrap();
            assert!((r.prob_of(&basis.all_molecules()) - exact).abs() < 1e-4, "λ = {lambda}");
        }
    }

    #[test]
    fn two_level_phase() {
        let (spec, basis, h) = lz(0.5);
        let plan = IntegrationPlan::symmetric(&h, 200.0, 0.1).unwrap();
        let r = extract_scattering_phase(&spec, &basis.all_atoms(), &basis.all_molecules(), &plan, &PhaseCalibration::none())
            .unwrap();
        let (_, exact) = lz_reference(spec.g, spec.beta).unwrap();
        assert!(phase_distance(r.phase, exact).abs() < 1e-2, "{} vs {exact}", r.phase);
    }

    #[test]
    fn adiabatic_projection_is_sharper() {
        let (spec, basis, h) = lz(1.0);
        let (exact, _) = lz_reference(spec.g, spec.beta).unwrap();
        let plan = IntegrationPlan::symmetric(&h, 100.0, 0.05).unwrap().with_projection(Projection::Adiabatic);
        let r = transition_probabilities(&spec, &basis.all_atoms(), &plan).unwrap();
        assert!((r.prob_of(&basis.all_molecules()) - exact).abs() < 1e-6);
    }

    #[test]
    fn lz_reference_limits() {
        let (p, _) = lz_reference(1e-5, 1.0).unwrap();
        assert!(p < 1e-9 && p > 0.0);
        let (p, ph) = lz_reference(1.0, 1.0).unwrap();
        assert!((p - (1.0 - (-2.0 * PI).exp())).abs() < 1e-15);
        assert!(ph.is_finite());
    }

    #[test]
    fn window_rule_values() {
        let s = SectorSpec::new(4, vec![0, 0], 1.0, 2.0, 3.0, vec![0.5, 1.0]).unwrap();
        assert_eq!(window_rule(&s), 50.0);
        let s = SectorSpec::new(1, vec![0, 0], 0.1, 1.0, 10.0, vec![0.5, 1.0]).unwrap();
        assert_eq!(window_rule(&s), 200.0);
    }

    #[test]
    fn log_fit_recovers_line() {
        let u: Vec<f64> = (1..50).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = u.iter().map(|v| 0.3 - 1.5 * v).collect();
        let f = fit_log_tail(&u, &y).unwrap();
        assert!((f.intercept - 0.3).abs() < 1e-12 && (f.slope + 1.5).abs() < 1e-12 && f.rms < 1e-12);
    }
}
