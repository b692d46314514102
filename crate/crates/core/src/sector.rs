//! Conserved-sector Fock bases and the time-affine Hamiltonian `H(t) = A + tB`.
//!
//! A sector fixes the total number `N = n + Σ_k m_k` of molecules `n` plus atomic
//! pairs `m_k` in channel `k`, together with the per-channel imbalances
//! `Q_k = a_k†a_k − b_k†b_k`. Channel `k` holds `m_k + Q_k` atoms in mode `a_k` and
//! `m_k` atoms in mode `b_k`; `Q_k = 1` reproduces the matrix elements of a
//! single atomic mode (`a_k ≡ b_k`).
//!
//! Basis order: `n` ascending, then `m` in descending lexicographic order. For
//! `N = 3`, two channels this is `(0;3,0) (0;2,1) (0;1,2) (0;0,3) (1;2,0) …
//! (3;0,0)`. Fixture files depend on this order.

use std::collections::HashMap;
use std::io::Write;

use crate::{Error, Result};

/// Largest sector enumerated unless a caller raises the limit.
pub const DEFAULT_DIM_LIMIT: usize = 2_000_000;

/// Complete definition of one conserved sector and its sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorSpec {
    /// Conserved molecule + pair number `N`.
    pub n_total: u32,
    /// Per-channel imbalance `Q_k`.
    pub q: Vec<u32>,
    pub g: f64,
    /// Sweep rate; `β > 0` is the forward sweep (atoms → molecules).
    pub beta: f64,
    /// Energy scale multiplying the channel energies.
    pub tau: f64,
    /// Channel energies `ε_k`.
    pub eps: Vec<f64>,
    relaxed: bool,
}

impl SectorSpec {
    /// Strictly validated spec: `g > 0`, `β ≠ 0`, `τ ≥ 0`, `ε` strictly increasing.
    pub fn new(n_total: u32, q: Vec<u32>, g: f64, beta: f64, tau: f64, eps: Vec<f64>) -> Result<Self> {
        let spec = SectorSpec { n_total, q, g, beta, tau, eps, relaxed: false };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec for exploratory propagation: also accepts `g = 0` and degenerate `ε`.
    pub fn relaxed(n_total: u32, q: Vec<u32>, g: f64, beta: f64, tau: f64, eps: Vec<f64>) -> Result<Self> {
        let spec = SectorSpec { n_total, q, g, beta, tau, eps, relaxed: true };
        spec.validate()?;
        Ok(spec)
    }

    /// One reaction channel with no channel energy: the bare swept model.
    pub fn single_channel(n_total: u32, q: u32, g: f64, beta: f64) -> Result<Self> {
        Self::new(n_total, vec![q], g, beta, 0.0, vec![0.0])
    }

    pub fn channels(&self) -> usize {
        self.q.len()
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    /// `λ = g²/|β|`.
    pub fn lambda(&self) -> f64 {
        self.g * self.g / self.beta.abs()
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        SectorSpec { tau, ..self.clone() }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        SectorSpec { beta, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.q.is_empty() {
            return bad("at least one channel is required");
        }
        if self.q.len() != self.eps.len() {
            return bad("Q and ε must have one entry per channel");
        }
        if !self.g.is_finite() || self.g < 0.0 || (!self.relaxed && self.g == 0.0) {
            return bad("coupling g must be positive");
        }
        if !self.beta.is_finite() || self.beta == 0.0 {
            return bad("sweep rate β must be finite and non-zero");
        }
        if !self.tau.is_finite() || self.tau < 0.0 {
            return bad("τ must be non-negative");
        }
        if self.eps.iter().any(|e| !e.is_finite()) {
            return bad("channel energies must be finite");
        }
        for w in self.eps.windows(2) {
            if w[1] < w[0] || (!self.relaxed && w[1] == w[0]) {
                return bad("channel energies must be strictly increasing");
            }
        }
        Ok(())
    }
}

/// Occupation configuration `(n; m_1 … m_K)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub n: u32,
    pub m: Vec<u32>,
}

impl BasisState {
    pub fn new(n: u32, m: Vec<u32>) -> Self {
        BasisState { n, m }
    }

    pub fn total(&self) -> u32 {
        self.n + self.m.iter().sum::<u32>()
    }
}

/// Ordered basis of one sector.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_total: u32,
    channels: usize,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl SectorBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// State with every particle bound in molecules.
    pub fn all_molecules(&self) -> BasisState {
        BasisState::new(self.n_total, vec![0; self.channels])
    }

    /// State with no molecules and all pairs in channel 1.
    pub fn all_atoms(&self) -> BasisState {
        let mut m = vec![0; self.channels];
        m[0] = self.n_total;
        BasisState::new(0, m)
    }

    fn matches(&self, spec: &SectorSpec) -> bool {
        self.n_total == spec.n_total && self.channels == spec.channels()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.channels).map(|k| format!("m_{k}")).collect();
        writeln!(w, "index,n,{}", header.join(","))?;
        for (i, s) in self.states.iter().enumerate() {
            let m: Vec<String> = s.m.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{i},{},{}", s.n, m.join(","))?;
        }
        Ok(())
    }
}

/// `C(N+K, K)` without overflow for any realistic input.
pub fn sector_dimension(n_total: u32, channels: usize) -> u128 {
    let mut d: u128 = 1;
    for i in 1..=channels as u128 {
        d = d * (n_total as u128 + i) / i;
    }
    d
}

pub fn enumerate_basis(spec: &SectorSpec) -> Result<SectorBasis> {
    enumerate_basis_with_limit(spec, DEFAULT_DIM_LIMIT)
}

pub fn enumerate_basis_with_limit(spec: &SectorSpec, limit: usize) -> Result<SectorBasis> {
    let k = spec.channels();
    let dim = sector_dimension(spec.n_total, k);
    if dim > limit as u128 {
        return Err(Error::Capacity { dim, limit });
    }
    let mut states = Vec::with_capacity(dim as usize);
    let mut m = vec![0u32; k];
    for n in 0..=spec.n_total {
        push_compositions(spec.n_total - n, 0, &mut m, &mut |m| {
            states.push(BasisState::new(n, m.to_vec()))
        });
    }
    debug_assert_eq!(states.len() as u128, dim);
    let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    Ok(SectorBasis { n_total: spec.n_total, channels: k, states, index })
}

// Compositions of `rest` into m[pos..], descending lexicographic.
fn push_compositions(rest: u32, pos: usize, m: &mut [u32], out: &mut dyn FnMut(&[u32])) {
    if pos + 1 == m.len() {
        m[pos] = rest;
        out(m);
        return;
    }
    for v in (0..=rest).rev() {
        m[pos] = v;
        push_compositions(rest - v, pos + 1, m, out);
    }
}

/// Sparse real-symmetric `H(t) = A + tB` with diagonal `B`.
///
/// The off-diagonal part of `A` is stored row-compressed with both triangles
/// present, so row `i` lists every neighbour of state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineHamiltonian {
    dim: usize,
    a_diag: Vec<f64>,
    b_diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Coordinate-list builder for [`AffineHamiltonian`].
#[derive(Debug, Clone)]
pub struct HamiltonianBuilder {
    dim: usize,
    a_diag: Vec<f64>,
    b_diag: Vec<f64>,
    entries: Vec<(usize, usize, f64)>,
}

impl HamiltonianBuilder {
    pub fn new(dim: usize) -> Self {
        HamiltonianBuilder { dim, a_diag: vec![0.0; dim], b_diag: vec![0.0; dim], entries: Vec::new() }
    }

    pub fn set_diag(&mut self, i: usize, a: f64, b: f64) {
        self.a_diag[i] = a;
        self.b_diag[i] = b;
    }

    /// Adds `v` at `(row, col)` only; callers keep the result symmetric.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        assert!(row != col, "diagonal entries go through set_diag");
        self.entries.push((row, col, v));
    }

    /// Adds `v` at `(i, j)` and `(j, i)`.
    pub fn add_symmetric(&mut self, i: usize, j: usize, v: f64) {
        self.add(i, j, v);
        self.add(j, i, v);
    }

    pub fn build(mut self) -> AffineHamiltonian {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        AffineHamiltonian { dim: self.dim, a_diag: self.a_diag, b_diag: self.b_diag, row_ptr, cols, vals }
    }
}

impl AffineHamiltonian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a_diag(&self) -> &[f64] {
        &self.a_diag
    }

    pub fn b_diag(&self) -> &[f64] {
        &self.b_diag
    }

    /// Off-diagonal neighbours of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn offdiag_nnz(&self) -> usize {
        self.cols.len()
    }

    /// Entry `(i, j)` of `A`.
    pub fn a_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.a_diag[i];
        }
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// Diagonal of `H(t)`.
    pub fn diag_at(&self, t: f64) -> Vec<f64> {
        self.a_diag.iter().zip(&self.b_diag).map(|(a, b)| a + t * b).collect()
    }

    /// Row-major dense `H(t)`.
    pub fn dense_at(&self, t: f64) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = self.a_diag[i] + t * self.b_diag[i];
            for (j, v) in self.row(i) {
                m[i * d + j] = v;
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| self.a_entry(j, i) == v))
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    /// Upper bound on `‖H(t)‖₂` from the largest absolute row sum.
    pub fn norm_bound_at(&self, t: f64) -> f64 {
        (0..self.dim)
            .map(|i| (self.a_diag[i] + t * self.b_diag[i]).abs() + self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_at(&self, t: f64) -> f64 {
        let diag: f64 = self.diag_at(t).iter().map(|v| v * v).sum();
        let off: f64 = self.vals.iter().map(|v| v * v).sum();
        (diag + off).sqrt()
    }

    /// Writes `row,col,A_value,B_value` for every structural non-zero.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,A_value,B_value")?;
        for i in 0..self.dim {
            let mut line = |j: usize, a: f64, b: f64| writeln!(w, "{i},{j},{a:.17e},{b:.17e}");
            let mut wrote_diag = false;
            for (j, v) in self.row(i) {
                if j > i && !wrote_diag {
                    line(i, self.a_diag[i], self.b_diag[i])?;
                    wrote_diag = true;
                }
                line(j, v, 0.0)?;
            }
            if !wrote_diag {
                line(i, self.a_diag[i], self.b_diag[i])?;
            }
        }
        Ok(())
    }
}

fn coupling(n: u32, m: u32, q: u32) -> f64 {
    ((n as f64 + 1.0) * m as f64 * (m as f64 + q as f64)).sqrt()
}

/// `H(t) = −βt n + Σ_k τ ε_k (m_k + Q_k/2) + g Σ_k [Ψ†K_k⁻ + h.c.]`.
pub fn build_hamiltonian(spec: &SectorSpec, basis: &SectorBasis) -> Result<AffineHamiltonian> {
    if !basis.matches(spec) {
        return Err(Error::BasisMismatch);
    }
    let mut b = HamiltonianBuilder::new(basis.len());
    for (i, s) in basis.states().iter().enumerate() {
        let level: f64 = (0..spec.channels())
            .map(|k| spec.eps[k] * (s.m[k] as f64 + spec.q[k] as f64 / 2.0))
            .sum();
        b.set_diag(i, spec.tau * level, -spec.beta * s.n as f64);
        for k in 0..spec.channels() {
            if s.m[k] == 0 {
                continue;
            }
            let mut m = s.m.clone();
            m[k] -= 1;
            let j = basis.index_of(&BasisState::new(s.n + 1, m)).ok_or(Error::BasisMismatch)?;
            b.add_symmetric(i, j, spec.g * coupling(s.n, s.m[k], spec.q[k]));
        }
    }
    Ok(b.build())
}

/// The operator `H′(t)` that commutes with `H(t)` for every `t`:
///
/// `Σ_k { ε_k (t + τε_k/β) n̂_k/2 + (gε_k/β)[Ψ†K_k⁻ + h.c.] }
///  + g²/(βτ) Σ_{i≠j} [K_i⁺K_j⁻ − (n̂_i + 1)(n̂_j + 1)/4]`
/// with `n̂_k = 2m_k + Q_k`.
pub fn build_commuting_partner(spec: &SectorSpec, basis: &SectorBasis) -> Result<AffineHamiltonian> {
    if !basis.matches(spec) {
        return Err(Error::BasisMismatch);
    }
    if spec.tau <= 0.0 {
        return Err(Error::InvalidParameter("the commuting partner needs τ > 0".into()));
    }
    let (g, beta, tau) = (spec.g, spec.beta, spec.tau);
    let k_count = spec.channels();
    let exchange = g * g / (beta * tau);
    let mut b = HamiltonianBuilder::new(basis.len());
    for (i, s) in basis.states().iter().enumerate() {
        let occ: Vec<f64> = (0..k_count).map(|k| (2 * s.m[k] + spec.q[k]) as f64).collect();
        let slope: f64 = (0..k_count).map(|k| spec.eps[k] * (occ[k] / 2.0)).sum();
        let mut offset: f64 = (0..k_count).map(|k| spec.eps[k] * (tau * spec.eps[k] / beta) * (occ[k] / 2.0)).sum();
        for a in 0..k_count {
            for c in 0..k_count {
                if a != c {
                    offset -= exchange / 4.0 * (occ[a] + 1.0) * (occ[c] + 1.0);
                }
            }
        }
        b.set_diag(i, offset, slope);

        for k in 0..k_count {
            if s.m[k] == 0 {
                continue;
            }
            let mut m = s.m.clone();
            m[k] -= 1;
            let j = basis.index_of(&BasisState::new(s.n + 1, m)).ok_or(Error::BasisMismatch)?;
            b.add_symmetric(i, j, g * spec.eps[k] / beta * coupling(s.n, s.m[k], spec.q[k]));
        }
        // K_a⁺ K_c⁻ moves one pair from channel c to channel a.
        for a in 0..k_count {
            for c in 0..k_count {
                if a == c || s.m[c] == 0 {
                    continue;
                }
                let mut m = s.m.clone();
                m[c] -= 1;
                m[a] += 1;
                let j = basis.index_of(&BasisState::new(s.n, m)).ok_or(Error::BasisMismatch)?;
                let (mc, qc) = (s.m[c] as f64, spec.q[c] as f64);
                let (ma, qa) = (s.m[a] as f64, spec.q[a] as f64);
                b.add(j, i, exchange * (mc * (mc + qc) * (ma + 1.0) * (ma + qa + 1.0)).sqrt());
            }
        }
    }
    Ok(b.build())
}

/// Diagonal of `H(t)` per basis state (the diabatic levels).
pub fn diabatic_levels(spec: &SectorSpec, basis: &SectorBasis, t: f64) -> Result<Vec<(BasisState, f64)>> {
    let h = build_hamiltonian(spec, basis)?;
    Ok(basis.states().iter().cloned().zip(h.diag_at(t)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrabilityReport {
    /// Largest `‖[H, H′]‖_F / (‖H‖_F ‖H′‖_F)` over the sampled times.
    pub commutator_residual: f64,
    /// Largest entrywise `|∂H/∂τ − ∂H′/∂t|`.
    pub derivative_residual: f64,
}

pub fn verify_integrability(spec: &SectorSpec, t_samples: &[f64]) -> Result<IntegrabilityReport> {
    let basis = enumerate_basis(spec)?;
    let h = build_hamiltonian(spec, &basis)?;
    let hp = build_commuting_partner(spec, &basis)?;

    let mut commutator_residual: f64 = 0.0;
    for &t in t_samples {
        let c = commutator_frobenius(&h, &hp, t);
        let scale = h.frobenius_at(t) * hp.frobenius_at(t);
        if scale > 0.0 {
            commutator_residual = commutator_residual.max(c / scale);
        }
    }

    // ∂H/∂τ from two exact evaluations: H is affine in τ.
    let h1 = build_hamiltonian(&spec.with_tau(1.0), &basis)?;
    let h0 = build_hamiltonian(&spec.with_tau(0.0), &basis)?;
    let mut derivative_residual: f64 = 0.0;
    for i in 0..basis.len() {
        let dh_dtau = h1.a_diag[i] - h0.a_diag[i];
        derivative_residual = derivative_residual.max((dh_dtau - hp.b_diag[i]).abs());
        derivative_residual = derivative_residual.max((h1.b_diag[i] - h0.b_diag[i]).abs());
        for ((j1, v1), (j0, v0)) in h1.row(i).zip(h0.row(i)) {
            if j1 != j0 {
                return Err(Error::FormulaInconsistency("τ changed the sparsity pattern of H".into()));
            }
            derivative_residual = derivative_residual.max((v1 - v0).abs());
        }
    }
    Ok(IntegrabilityReport { commutator_residual, derivative_residual })
}

/// `‖X(t)Y(t) − Y(t)X(t)‖_F` using the sparse row structure.
pub fn commutator_frobenius(x: &AffineHamiltonian, y: &AffineHamiltonian, t: f64) -> f64 {
    assert_eq!(x.dim, y.dim);
    let d = x.dim;
    let xd = x.diag_at(t);
    let yd = y.diag_at(t);
    let full_row = |m: &AffineHamiltonian, diag: &[f64], i: usize| -> Vec<(usize, f64)> {
        let mut r: Vec<(usize, f64)> = m.row(i).collect();
        r.push((i, diag[i]));
        r
    };
    let mut buf = vec![0.0f64; d];
    let mut touched: Vec<usize> = Vec::new();
    let mut total = 0.0;
    for i in 0..d {
        for (sign, (p, pd, q, qd)) in [(1.0, (x, &xd, y, &yd)), (-1.0, (y, &yd, x, &xd))] {
            for (k, pik) in full_row(p, pd, i) {
                for (j, qkj) in full_row(q, qd, k) {
                    if buf[j] == 0.0 {
                        touched.push(j);
                    }
                    buf[j] += sign * pik * qkj;
                    if buf[j] == 0.0 {
                        // keep the touched list authoritative even after exact cancellation
                        buf[j] = -0.0;
                    }
                }
            }
        }
        for &j in &touched {
            total += buf[j] * buf[j];
            buf[j] = 0.0;
        }
        touched.clear();
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec2(g: f64, beta: f64, tau: f64) -> SectorSpec {
        SectorSpec::new(3, vec![0, 0], g, beta, tau, vec![0.5, 1.0]).unwrap()
    }

    #[test]
    fn basis_sizes() {
        let s1 = SectorSpec::single_channel(3, 0, 1.0, 1.0).unwrap();
        assert_eq!(enumerate_basis(&s1).unwrap().len(), 4);
        assert_eq!(enumerate_basis(&spec2(1.0, 1.0, 1.0)).unwrap().len(), 10);
        let vac = SectorSpec::new(0, vec![0, 1, 2], 1.0, 1.0, 1.0, vec![0.1, 0.2, 0.3]).unwrap();
        let b = enumerate_basis(&vac).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.state(0), &BasisState::new(0, vec![0, 0, 0]));
        assert_eq!(sector_dimension(6, 3), 84);
    }

    #[test]
    fn basis_order_matches_ten_state_layout() {
        let b = enumerate_basis(&spec2(1.0, 1.0, 1.0)).unwrap();
        let expected = [
            (0, [3, 0]), (0, [2, 1]), (0, [1, 2]), (0, [0, 3]),
            (1, [2, 0]), (1, [1, 1]), (1, [0, 2]),
            (2, [1, 0]), (2, [0, 1]),
            (3, [0, 0]),
        ];
        for (i, (n, m)) in expected.iter().enumerate() {
            assert_eq!(b.state(i), &BasisState::new(*n, m.to_vec()));
            assert_eq!(b.index_of(b.state(i)), Some(i));
        }
    }

    #[test]
    fn capacity_limit() {
        let s = SectorSpec::new(40, vec![0; 4], 1.0, 1.0, 1.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(enumerate_basis_with_limit(&s, 1000), Err(Error::Capacity { .. })));
    }

    #[test]
    fn spec_validation() {
        assert!(SectorSpec::new(3, vec![0, 0], 1.0, 1.0, 1.0, vec![1.0, 1.0]).is_err());
        assert!(SectorSpec::relaxed(3, vec![0, 0], 0.0, 1.0, 1.0, vec![1.0, 1.0]).is_ok());
        assert!(SectorSpec::new(3, vec![0], 0.0, 1.0, 1.0, vec![1.0]).is_err());
        assert!(SectorSpec::new(3, vec![0], 1.0, 0.0, 1.0, vec![1.0]).is_err());
        assert!(SectorSpec::new(3, vec![0], 1.0, 1.0, -1.0, vec![1.0]).is_err());
        assert!(SectorSpec::new(3, vec![], 1.0, 1.0, 1.0, vec![]).is_err());
        assert!(SectorSpec::new(3, vec![0, 0], 1.0, 1.0, 1.0, vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn single_channel_couplings() {
        let s = SectorSpec::single_channel(3, 0, 1.0, 1.0).unwrap();
        let b = enumerate_basis(&s).unwrap();
        let h = build_hamiltonian(&s, &b).unwrap();
        assert!((h.a_entry(1, 0) - 3.0).abs() < 1e-15);
        assert!((h.a_entry(2, 1) - 8f64.sqrt()).abs() < 1e-15);
        assert!((h.a_entry(3, 2) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(h.bandwidth(), 1);
    }

    #[test]
    fn single_channel_matches_tavis_cummings_elements() {
        // ⟨n+1|H|n⟩ = g√((N−n)(N+Q−n)(n+1))
        for q in 0..4u32 {
            let s = SectorSpec::single_channel(5, q, 0.7, 1.3).unwrap();
            let b = enumerate_basis(&s).unwrap();
            let h = build_hamiltonian(&s, &b).unwrap();
            for n in 0..5u32 {
                let tc = 0.7 * (((5 - n) * (5 + q - n) * (n + 1)) as f64).sqrt();
                assert!((h.a_entry(n as usize + 1, n as usize) - tc).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn smallest_sector_is_landau_zener() {
        let s = SectorSpec::single_channel(1, 0, 0.4, 2.0).unwrap();
        let b = enumerate_basis(&s).unwrap();
        let h = build_hamiltonian(&s, &b).unwrap();
        assert_eq!(h.dense_at(0.0), vec![0.0, 0.4, 0.4, 0.0]);
        assert_eq!(h.b_diag(), &[0.0, -2.0]);
    }

    #[test]
    fn two_channel_sample_coupling() {
        let s = spec2(1.0, 1.0, 1.0);
        let b = enumerate_basis(&s).unwrap();
        let h = build_hamiltonian(&s, &b).unwrap();
        let i = b.index_of(&BasisState::new(2, vec![1, 0])).unwrap();
        let j = b.index_of(&BasisState::new(3, vec![0, 0])).unwrap();
        assert!((h.a_entry(i, j) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn partner_pair_exchange_amplitude() {
        let (g, beta, tau) = (0.8, 1.7, 0.6);
        let s = spec2(g, beta, tau);
        let b = enumerate_basis(&s).unwrap();
        let hp = build_commuting_partner(&s, &b).unwrap();
        let i = b.index_of(&BasisState::new(1, vec![2, 0])).unwrap();
        let j = b.index_of(&BasisState::new(1, vec![1, 1])).unwrap();
        let expected = 2.0 * g * g / (beta * tau);
        assert!((hp.a_entry(i, j) - expected).abs() < 1e-14);
        assert!((hp.a_entry(j, i) - expected).abs() < 1e-14);
        assert!(hp.is_symmetric());
    }

    #[test]
    fn partner_rejects_zero_tau() {
        let s = SectorSpec::new(2, vec![0, 0], 1.0, 1.0, 0.0, vec![0.5, 1.0]).unwrap();
        let b = enumerate_basis(&s).unwrap();
        assert!(build_commuting_partner(&s, &b).is_err());
    }

    #[test]
    fn single_channel_partner_is_tridiagonal() {
        let s = SectorSpec::new(4, vec![1], 0.9, 1.2, 0.5, vec![0.8]).unwrap();
        let b = enumerate_basis(&s).unwrap();
        let hp = build_commuting_partner(&s, &b).unwrap();
        assert_eq!(hp.bandwidth(), 1);
        let r = verify_integrability(&s, &[-2.0, 0.0, 3.0]).unwrap();
        assert!(r.commutator_residual <= 1e-12);
        assert_eq!(r.derivative_residual, 0.0);
    }

    #[test]
    fn ten_state_integrability() {
        let s = SectorSpec::new(3, vec![0, 0], 1.0, 1.0, 0.7, vec![0.5, 1.0]).unwrap();
        let r = verify_integrability(&s, &[-3.0, 0.0, 2.0]).unwrap();
        assert!(r.commutator_residual <= 1e-12, "{}", r.commutator_residual);
        assert_eq!(r.derivative_residual, 0.0);
    }

    #[test]
    fn diabatic_levels_single_channel() {
        let s = SectorSpec::single_channel(3, 0, 1.0, 2.0).unwrap();
        let b = enumerate_basis(&s).unwrap();
        let t = 0.75;
        let lv = diabatic_levels(&s, &b, t).unwrap();
        for (n, (_, e)) in lv.iter().enumerate() {
            assert_eq!(*e, -2.0 * t * n as f64);
        }
        let s2 = spec2(1.0, 1.0, 1.3);
        let b2 = enumerate_basis(&s2).unwrap();
        let h = build_hamiltonian(&s2, &b2).unwrap();
        let lv0: Vec<f64> = diabatic_levels(&s2, &b2, 0.0).unwrap().into_iter().map(|(_, e)| e).collect();
        assert_eq!(lv0, h.a_diag());
    }

    #[test]
    fn csv_dump_lists_every_entry() {
        let s = spec2(1.0, 1.0, 1.0);
        let b = enumerate_basis(&s).unwrap();
        let h = build_hamiltonian(&s, &b).unwrap();
        let mut out = Vec::new();
        h.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 10 + h.offdiag_nnz());
        let mut bo = Vec::new();
        b.write_csv(&mut bo).unwrap();
        assert!(String::from_utf8(bo).unwrap().starts_with("index,n,m_1,m_2\n0,0,3,0\n"));
    }
}
