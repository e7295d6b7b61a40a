//! Brute-force truncated Fock-space simulator used as ground truth for the
//! Gaussian engine.
//!
//! States are dense density operators. Two-mode states use the index layout
//! `n0 * D + n1` (mode 0 major), where `D` is the per-mode cutoff. Channels
//! follow the same conventions as [`crate::gaussian`]: `U†aU = e^{iφ}a` for a
//! phase, `U†a_iU = √(1−R) a_i + √R a_j` for a beam splitter, and loss is the
//! exact Kraus sum over photon-loss operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::Channel;

pub const DEFAULT_CUTOFF: usize = 40;
/// Cutoff used for cross-checks with more than ten photons.
pub const HIGH_CUTOFF: usize = 60;

const TRACE_TOL: f64 = 1e-9;
const EDGE_POPULATION_TOL: f64 = 1e-8;
/// Eigenvalues below this are rounding noise of a unit-trace matrix.
const SPECTRAL_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FockPreparation {
    Vacuum,
    Coherent { alpha: Complex64 },
    /// Same angle convention as [`crate::gaussian::QuadratureState::squeezed_vacuum`].
    Squeezed { xi: f64, theta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    cutoff: usize,
    modes: usize,
    rho: DMatrix<Complex64>,
}

impl FockState {
    /// Single-mode state, normalized after truncation.
    pub fn prepare(kind: FockPreparation, cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::CutoffTooSmall { cutoff, detail: "cutoff must be at least 2".into() });
        }
        let ket = match kind {
            FockPreparation::Vacuum => {
                let mut v = vec![Complex64::new(0.0, 0.0); cutoff];
                v[0] = Complex64::new(1.0, 0.0);
                v
            }
            FockPreparation::Coherent { alpha } => {
                if !(alpha.re.is_finite() && alpha.im.is_finite()) {
                    return Err(Error::domain("coherent amplitude must be finite"));
                }
                let mut v = Vec::with_capacity(cutoff);
                v.push(Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0));
                for n in 1..cutoff {
                    let next = v[n - 1] * alpha / (n as f64).sqrt();
                    v.push(next);
                }
                v
            }
            FockPreparation::Squeezed { xi, theta } => {
                if !(xi >= 0.0 && xi.is_finite()) || !theta.is_finite() {
                    return Err(Error::domain(format!("invalid squeezing ({xi}, {theta})")));
                }
                let ratio = -Complex64::from_polar(xi.tanh(), 2.0 * theta);
                let mut v = vec![Complex64::new(0.0, 0.0); cutoff];
                v[0] = Complex64::new(1.0 / xi.cosh().sqrt(), 0.0);
                let mut n = 2;
                while n < cutoff {
                    v[n] = v[n - 2] * ratio * (((n - 1) as f64) / n as f64).sqrt();
                    n += 2;
                }
                v
            }
        };
        let kept: f64 = ket.iter().map(|c| c.norm_sqr()).sum();
        let tail = 1.0 - kept;
        let edge = ket[cutoff - 1].norm_sqr();
        if tail > EDGE_POPULATION_TOL || edge > EDGE_POPULATION_TOL {
            return Err(Error::CutoffTooSmall {
                cutoff,
                detail: format!("truncated population {tail:e}, population at the cutoff level {edge:e}"),
            });
        }
        let norm = kept.sqrt();
        let ket: Vec<Complex64> = ket.into_iter().map(|c| c / norm).collect();
        let rho = DMatrix::from_fn(cutoff, cutoff, |r, c| ket[r] * ket[c].conj());
        Ok(Self { cutoff, modes: 1, rho })
    }

    /// Two-mode product state; `a` becomes mode 0.
    pub fn product(a: &Self, b: &Self) -> Result<Self> {
        if a.modes != 1 || b.modes != 1 || a.cutoff != b.cutoff {
            return Err(Error::domain("product needs two single-mode states with equal cutoffs"));
        }
        Ok(Self { cutoff: a.cutoff, modes: 2, rho: a.rho.kronecker(&b.rho) })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn density_matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|c| c.re).sum()
    }

    /// Photon number of `mode` in basis state `index`.
    fn occupation(&self, index: usize, mode: usize) -> usize {
        match (self.modes, mode) {
            (1, _) => index,
            (_, 0) => index / self.cutoff,
            _ => index % self.cutoff,
        }
    }

    pub fn apply(&self, channel: &Channel) -> Result<Self> {
        channel.validate()?;
        let next = match *channel {
            Channel::Phase { mode, phi } => {
                self.check_mode(mode)?;
                let mut rho = self.rho.clone();
                for c in 0..rho.ncols() {
                    let nc = self.occupation(c, mode) as f64;
                    for r in 0..rho.nrows() {
                        let nr = self.occupation(r, mode) as f64;
                        rho[(r, c)] *= Complex64::from_polar(1.0, phi * (nr - nc));
                    }
                }
                Self { rho, ..self.clone() }
            }
            Channel::Loss { mode, rate } => {
                self.check_mode(mode)?;
                self.lossy(mode, rate)
            }
            Channel::BeamSplitter { i, j, reflectivity } => {
                if self.modes != 2 {
                    return Err(Error::domain("beam splitter needs a two-mode state"));
                }
                self.check_mode(i)?;
                self.check_mode(j)?;
                self.beam_split(i, reflectivity)
            }
            Channel::Squeeze { .. } => {
                return Err(Error::Unsupported(
                    "squeezing is only available at preparation in the Fock oracle".into(),
                ))
            }
        };
        next.check_convergence()?;
        Ok(next)
    }

    fn lossy(&self, mode: usize, rate: f64) -> Self {
        let d = self.cutoff;
        // amp[n][k] = √(C(n,k) (1−l)^{n−k} l^k)
        let mut amp = vec![vec![0.0; d]; d];
        for (n, row) in amp.iter_mut().enumerate() {
            let mut binom = 1.0;
            for (k, cell) in row.iter_mut().enumerate().take(n + 1) {
                if k > 0 {
                    binom *= (n + 1 - k) as f64 / k as f64;
                }
                *cell = (binom * (1.0 - rate).powi((n - k) as i32) * rate.powi(k as i32)).sqrt();
            }
        }
        let mut out = DMatrix::<Complex64>::zeros(self.rho.nrows(), self.rho.ncols());
        match (self.modes, mode) {
            (1, _) => loss_block(&self.rho, &mut out, &amp, 0, 0, 1, d),
            (_, 1) => {
                // each D×D block (fixed n0, n0') is a single-mode operator on mode 1
                for b0 in 0..d {
                    for c0 in 0..d {
                        loss_block(&self.rho, &mut out, &amp, b0 * d, c0 * d, 1, d);
                    }
                }
            }
            _ => {
                // mode 0 strides by D; the (n1, n1') index is carried unchanged
                for b1 in 0..d {
                    for c1 in 0..d {
                        loss_block(&self.rho, &mut out, &amp, b1, c1, d, d);
                    }
                }
            }
        }
        Self { rho: out, ..self.clone() }
    }

    fn beam_split(&self, first: usize, reflectivity: f64) -> Self {
        let d = self.cutoff;
        let blocks = beam_splitter_blocks(2 * d - 1, reflectivity);
        // basis of block K: occupation p of mode `first`, K − p of the other,
        // restricted to the truncated grid
        let range = |k: usize| (k.saturating_sub(d - 1))..=(k.min(d - 1));
        let index = |k: usize, p: usize| if first == 0 { p * d + (k - p) } else { (k - p) * d + p };
        let restricted: Vec<DMatrix<f64>> = blocks
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let r = range(k);
                let (lo, len) = (*r.start(), r.end() - r.start() + 1);
                u.view((lo, lo), (len, len)).into_owned()
            })
            .collect();

        let mut out = DMatrix::<Complex64>::zeros(self.rho.nrows(), self.rho.ncols());
        for k in 0..blocks.len() {
            let rk: Vec<usize> = range(k).map(|p| index(k, p)).collect();
            let uk = &restricted[k];
            for (k2, uk2) in restricted.iter().enumerate() {
                let rk2: Vec<usize> = range(k2).map(|p| index(k2, p)).collect();
                let re = DMatrix::from_fn(rk.len(), rk2.len(), |a, b| self.rho[(rk[a], rk2[b])].re);
                let im = DMatrix::from_fn(rk.len(), rk2.len(), |a, b| self.rho[(rk[a], rk2[b])].im);
                if re.amax() == 0.0 && im.amax() == 0.0 {
                    continue;
                }
                let new_re = uk * re * uk2.transpose();
                let new_im = uk * im * uk2.transpose();
                for (a, &row) in rk.iter().enumerate() {
                    for (b, &col) in rk2.iter().enumerate() {
                        out[(row, col)] = Complex64::new(new_re[(a, b)], new_im[(a, b)]);
                    }
                }
            }
        }
        Self { rho: out, ..self.clone() }
    }

    /// Photon-number distribution of one mode.
    pub fn populations(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let mut pops = vec![0.0; self.cutoff];
        for (idx, c) in self.rho.diagonal().iter().enumerate() {
            pops[self.occupation(idx, mode)] += c.re;
        }
        Ok(pops)
    }

    /// `(⟨n⟩, Var n)` of one mode.
    pub fn number_stats(&self, mode: usize) -> Result<(f64, f64)> {
        let pops = self.populations(mode)?;
        Ok(moments(pops.iter().enumerate().map(|(n, &p)| (n as f64, p))))
    }

    /// `(⟨n0 − n1⟩, Var(n0 − n1))` for a two-mode state.
    pub fn number_difference_stats(&self) -> Result<(f64, f64)> {
        if self.modes != 2 {
            return Err(Error::domain("number difference needs a two-mode state"));
        }
        let d = self.cutoff;
        Ok(moments(
            self.rho.diagonal().iter().enumerate().map(|(idx, c)| ((idx / d) as f64 - (idx % d) as f64, c.re)),
        ))
    }

    /// Single-mode reduced state.
    pub fn reduce(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if self.modes == 1 {
            return Ok(self.clone());
        }
        let d = self.cutoff;
        let rho = DMatrix::from_fn(d, d, |r, c| {
            (0..d)
                .map(|o| {
                    let (ri, ci) = if mode == 0 { (r * d + o, c * d + o) } else { (o * d + r, o * d + c) };
                    self.rho[(ri, ci)]
                })
                .sum()
        });
        Ok(Self { cutoff: d, modes: 1, rho })
    }

    /// Quadrature mean `(x, p)` and covariance of a single-mode state.
    pub fn quadrature_moments(&self) -> Result<([f64; 2], [[f64; 2]; 2])> {
        if self.modes != 1 {
            return Err(Error::domain("quadrature moments need a single-mode state"));
        }
        let d = self.cutoff;
        // ⟨a⟩ = Σ √n ρ[n−1, n]; ⟨a²⟩ = Σ √(n(n−1)) ρ[n−2, n]; ⟨a†a⟩ = Σ n ρ[n, n]
        let mut a = Complex64::new(0.0, 0.0);
        let mut a2 = Complex64::new(0.0, 0.0);
        let mut n_mean = 0.0;
        for n in 0..d {
            let nf = n as f64;
            n_mean += nf * self.rho[(n, n)].re;
            if n >= 1 {
                a += self.rho[(n, n - 1)] * nf.sqrt();
            }
            if n >= 2 {
                a2 += self.rho[(n, n - 2)] * (nf * (nf - 1.0)).sqrt();
            }
        }
        let s2 = std::f64::consts::SQRT_2;
        let mean = [s2 * a.re, s2 * a.im];
        // x = (a + a†)/√2, p = (a − a†)/(i√2)
        let xx = 0.5 * (2.0 * a2.re + 2.0 * n_mean + 1.0) - mean[0] * mean[0];
        let pp = 0.5 * (-2.0 * a2.re + 2.0 * n_mean + 1.0) - mean[1] * mean[1];
        let xp = a2.im - mean[0] * mean[1];
        Ok((mean, [[xx, xp], [xp, pp]]))
    }

    /// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        if self.rho.shape() != other.rho.shape() {
            return Err(Error::domain("fidelity needs states on the same truncated space"));
        }
        // a pure argument reduces to ⟨ψ|σ|ψ⟩, free of square-root noise
        for (a, b) in [(self, other), (other, self)] {
            if let Some(psi) = a.pure_vector() {
                return Ok((psi.adjoint() * &b.rho * &psi)[(0, 0)].re.clamp(0.0, 1.0));
            }
        }
        let root = hermitian_sqrt(&self.rho);
        let inner = &root * &other.rho * &root;
        let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
        let sum: f64 = inner
            .symmetric_eigenvalues()
            .iter()
            .filter(|&&v| v > SPECTRAL_FLOOR)
            .map(|&v| v.sqrt())
            .sum();
        Ok(sum * sum)
    }

    fn pure_vector(&self) -> Option<DVector<Complex64>> {
        let purity: f64 = self.rho.iter().map(|c| c.norm_sqr()).sum();
        if purity < 1.0 - 1e-12 {
            return None;
        }
        let eig = self.rho.clone().symmetric_eigen();
        let top = eig.eigenvalues.imax();
        Some(eig.eigenvectors.column(top).into_owned())
    }

    /// Full invariant check: unit trace, Hermiticity, positivity, convergence.
    /// Eigendecomposition makes this expensive for large two-mode cutoffs.
    pub fn check_invariants(&self) -> Result<()> {
        let herm = (&self.rho - self.rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::Internal(format!("density matrix not Hermitian ({herm:e})")));
        }
        let min_eig = self.rho.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-9 {
            return Err(Error::Internal(format!("density matrix not positive ({min_eig:e})")));
        }
        self.check_convergence()
    }

    fn check_convergence(&self) -> Result<()> {
        let trace = self.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::CutoffTooSmall { cutoff: self.cutoff, detail: format!("trace drifted to {trace}") });
        }
        for mode in 0..self.modes {
            let edge = self.populations(mode)?[self.cutoff - 1];
            if edge > EDGE_POPULATION_TOL {
                return Err(Error::CutoffTooSmall {
                    cutoff: self.cutoff,
                    detail: format!("mode {mode} has population {edge:e} at the cutoff level"),
                });
            }
        }
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.modes {
            Ok(())
        } else {
            Err(Error::domain(format!("mode {mode} out of range for a {}-mode Fock state", self.modes)))
        }
    }
}

fn moments(values: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (v, p) in values {
        m1 += v * p;
        m2 += v * v * p;
    }
    (m1, m2 - m1 * m1)
}

// Applies the single-mode Kraus sum to the sub-matrix with origin
// (row0, col0) and element stride `stride`.
fn loss_block(
    rho: &DMatrix<Complex64>,
    out: &mut DMatrix<Complex64>,
    amp: &[Vec<f64>],
    row0: usize,
    col0: usize,
    stride: usize,
    d: usize,
) {
    for n in 0..d {
        for m in 0..d {
            let v = rho[(row0 + m * stride, col0 + n * stride)];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..=m.min(n) {
                let w = amp[m][k] * amp[n][k];
                out[(row0 + (m - k) * stride, col0 + (n - k) * stride)] += v * w;
            }
        }
    }
}

/// Beam-splitter unitary on each fixed-total-photon subspace `K < k_max`,
/// in the basis `|p, K − p⟩` (p photons in the first mode).
///
/// Built from `U a_i† U† = t a_i† − r a_j†` and `U a_j† U† = r a_i† + t a_j†`,
/// one creation operator at a time, which stays well conditioned at large K.
pub fn beam_splitter_blocks(k_max: usize, reflectivity: f64) -> Vec<DMatrix<f64>> {
    let theta = reflectivity.sqrt().atan2((1.0 - reflectivity).sqrt());
    (0..k_max).map(|k| beam_splitter_block(k, theta)).collect()
}

/// `exp(θA)` on the photon-number-K subspace, with `A = a†b − ab†` in the
/// basis `|p, K−p⟩`. Evaluated through the eigendecomposition of the
/// Hermitian `iA`; the column recursion on creation operators is unstable
/// beyond K ≈ 40.
fn beam_splitter_block(k: usize, theta: f64) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let mut h = DMatrix::<Complex64>::zeros(k + 1, k + 1);
    for p in 0..k {
        let a = (((p + 1) * (k - p)) as f64).sqrt();
        h[(p + 1, p)] = Complex64::new(0.0, a);
        h[(p, p + 1)] = Complex64::new(0.0, -a);
    }
    let eig = h.symmetric_eigen();
    let phases = eig.eigenvalues.map(|lambda| Complex64::from_polar(1.0, -theta * lambda));
    let u = &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint();
    u.map(|z| z.re)
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = m.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| Complex64::new(if v > SPECTRAL_FLOOR { v.sqrt() } else { 0.0 }, 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}
