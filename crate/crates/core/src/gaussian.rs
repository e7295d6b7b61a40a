//! Gaussian-state propagation in the quadrature picture.
//!
//! Conventions (ħ = 1):
//!
//! * quadratures are ordered `x1, p1, x2, p2, ...` with `a = (x + i p) / √2`;
//! * the vacuum has zero mean and variance 1/2 in every quadrature;
//! * a coherent state with `⟨n⟩ = N` has mean `x = √(2N)` at phase zero.
//!
//! Every transform acts in the Heisenberg picture on the mean vector and
//! covariance matrix, `μ → Sμ`, `Σ → SΣSᵀ`, followed by symmetrization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_unit_interval, Error, Result};

/// Variance of a vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

const SYMMETRY_TOL: f64 = 1e-12;
const UNCERTAINTY_TOL: f64 = 1e-9;

/// One elementary optical channel acting on one or two modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Channel {
    /// Mixes modes `i` and `j`: `a_i → √(1−R) a_i + √R a_j`, `a_j → −√R a_i + √(1−R) a_j`.
    BeamSplitter { i: usize, j: usize, reflectivity: f64 },
    /// `a → e^{iφ} a`.
    Phase { mode: usize, phi: f64 },
    /// Pure loss: a beam splitter of transmissivity `1 − rate` coupling to vacuum.
    Loss { mode: usize, rate: f64 },
    /// Single-mode squeezer; the anti-squeezed axis is perpendicular to angle `theta`.
    Squeeze { mode: usize, xi: f64, theta: f64 },
}

impl Channel {
    /// Checks the parameter ranges that do not depend on the state.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Channel::BeamSplitter { i, j, reflectivity } => {
                if i == j {
                    return Err(Error::domain(format!("beam splitter needs two distinct modes, got {i} twice")));
                }
                check_unit_interval("reflectivity", reflectivity)
            }
            Channel::Phase { phi, .. } => check_finite("phase", phi),
            Channel::Loss { rate, .. } => check_unit_interval("loss rate", rate),
            Channel::Squeeze { xi, theta, .. } => {
                check_finite("squeezing angle", theta)?;
                if !(xi >= 0.0 && xi.is_finite()) {
                    return Err(Error::domain(format!("squeeze parameter must be finite and >= 0, got {xi}")));
                }
                Ok(())
            }
        }
    }

    fn modes(&self) -> (usize, Option<usize>) {
        match *self {
            Channel::BeamSplitter { i, j, .. } => (i, Some(j)),
            Channel::Phase { mode, .. } | Channel::Loss { mode, .. } | Channel::Squeeze { mode, .. } => {
                (mode, None)
            }
        }
    }
}

/// First two moments of the photon number (or photon-number difference).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumberMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean vector and covariance matrix of an M-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl QuadratureState {
    pub fn vacuum(mode_count: usize) -> Self {
        assert!(mode_count > 0, "a state needs at least one mode");
        Self {
            mean: DVector::zeros(2 * mode_count),
            cov: DMatrix::identity(2 * mode_count, 2 * mode_count) * VACUUM_VARIANCE,
        }
    }

    /// Builds a state from explicit moments, checking every state invariant.
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.is_empty() || !mean.len().is_multiple_of(2) {
            return Err(Error::domain(format!("mean vector length {} is not a positive even number", mean.len())));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::domain(format!(
                "covariance is {}x{} but the mean has length {}",
                cov.nrows(),
                cov.ncols(),
                mean.len()
            )));
        }
        let state = Self { mean, cov };
        state.check_physical()?;
        Ok(state)
    }

    /// Coherent state with mean photon number `n` and the given phase.
    pub fn coherent(n: f64, phase: f64) -> Result<Self> {
        if !(n >= 0.0 && n.is_finite()) {
            return Err(Error::domain(format!("mean photon number must be finite and >= 0, got {n}")));
        }
        check_finite("phase", phase)?;
        let amplitude = (2.0 * n).sqrt();
        let mut state = Self::vacuum(1);
        state.mean[0] = amplitude * phase.cos();
        state.mean[1] = amplitude * phase.sin();
        Ok(state)
    }

    /// Squeezed vacuum whose minimum-variance axis points along angle `theta`
    /// in the (x, p) plane: `Σ = R(θ) diag(e^{−2ξ}/2, e^{2ξ}/2) R(θ)ᵀ`.
    pub fn squeezed_vacuum(xi: f64, theta: f64) -> Result<Self> {
        Self::vacuum(1).squeeze(0, xi, theta)
    }

    /// Direct sum of two states; `self` occupies the leading modes.
    pub fn tensor(&self, other: &Self) -> Self {
        let (n1, n2) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(n1 + n2);
        mean.rows_mut(0, n1).copy_from(&self.mean);
        mean.rows_mut(n1, n2).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(n1 + n2, n1 + n2);
        cov.view_mut((0, 0), (n1, n1)).copy_from(&self.cov);
        cov.view_mut((n1, n1), (n2, n2)).copy_from(&other.cov);
        Self { mean, cov }
    }

    pub fn mode_count(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn apply(&self, channel: &Channel) -> Result<Self> {
        channel.validate()?;
        let (first, second) = channel.modes();
        self.check_mode(first)?;
        if let Some(j) = second {
            self.check_mode(j)?;
        }
        let m = self.mode_count();
        Ok(match *channel {
            Channel::BeamSplitter { i, j, reflectivity } => {
                self.symplectic(&beam_splitter_symplectic(m, i, j, reflectivity))
            }
            Channel::Phase { mode, phi } => self.symplectic(&phase_symplectic(m, mode, phi)),
            Channel::Squeeze { mode, xi, theta } => self.symplectic(&squeeze_symplectic(m, mode, xi, theta)),
            Channel::Loss { mode, rate } => self.lossy(mode, rate),
        })
    }

    pub fn beam_splitter(&self, i: usize, j: usize, reflectivity: f64) -> Result<Self> {
        self.apply(&Channel::BeamSplitter { i, j, reflectivity })
    }

    pub fn phase(&self, mode: usize, phi: f64) -> Result<Self> {
        self.apply(&Channel::Phase { mode, phi })
    }

    pub fn loss(&self, mode: usize, rate: f64) -> Result<Self> {
        self.apply(&Channel::Loss { mode, rate })
    }

    pub fn squeeze(&self, mode: usize, xi: f64, theta: f64) -> Result<Self> {
        self.apply(&Channel::Squeeze { mode, xi, theta })
    }

    fn symplectic(&self, s: &DMatrix<f64>) -> Self {
        let mean = s * &self.mean;
        let cov = s * &self.cov * s.transpose();
        Self { mean, cov: symmetrize(cov) }
    }

    // Loss channel: X = √(1−l)·1 on the mode block, Y = l/2·1.
    fn lossy(&self, mode: usize, rate: f64) -> Self {
        let g = (1.0 - rate).sqrt();
        let k = 2 * mode;
        let mut mean = self.mean.clone();
        mean[k] *= g;
        mean[k + 1] *= g;
        let mut cov = self.cov.clone();
        for r in k..k + 2 {
            cov.row_mut(r).scale_mut(g);
            cov.column_mut(r).scale_mut(g);
        }
        cov[(k, k)] += rate * VACUUM_VARIANCE;
        cov[(k + 1, k + 1)] += rate * VACUUM_VARIANCE;
        Self { mean, cov: symmetrize(cov) }
    }

    /// Exact `⟨n̂⟩` and `Var(n̂)` of one mode.
    pub fn number_stats(&self, mode: usize) -> Result<NumberMoments> {
        self.check_mode(mode)?;
        let k = 2 * mode;
        let (mx, mp) = (self.mean[k], self.mean[k + 1]);
        let (vxx, vxp, vpp) = (self.cov[(k, k)], self.cov[(k, k + 1)], self.cov[(k + 1, k + 1)]);
        let mean = 0.5 * (mx * mx + mp * mp + vxx + vpp - 1.0);
        let tr_sq = vxx * vxx + 2.0 * vxp * vxp + vpp * vpp;
        let displaced = mx * (vxx * mx + vxp * mp) + mp * (vxp * mx + vpp * mp);
        let variance = 0.5 * (tr_sq - 0.5) + displaced;
        Ok(NumberMoments { mean, variance })
    }

    /// `Cov(n̂_i, n̂_j)` for distinct modes, from the cross block of the covariance.
    pub fn number_covariance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_pair(i, j)?;
        let (ki, kj) = (2 * i, 2 * j);
        let mut frob = 0.0;
        let mut displaced = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let c = self.cov[(ki + a, kj + b)];
                frob += c * c;
                displaced += self.mean[ki + a] * c * self.mean[kj + b];
            }
        }
        Ok(0.5 * frob + displaced)
    }

    /// Exact moments of `n̂_i − n̂_j`, the balanced intensity-difference signal.
    ///
    /// Uses the Gaussian identity for a symmetrically ordered quadratic form
    /// `Q = rᵀAr`: `Var Q = 2 tr(AΣAΣ) + ½ tr(AΩAΩ) + 4 μᵀAΣAμ`.
    pub fn number_difference_stats(&self, i: usize, j: usize) -> Result<NumberMoments> {
        self.check_pair(i, j)?;
        let dim = self.mean.len();
        let mut weights = DVector::zeros(dim);
        for q in 0..2 {
            weights[2 * i + q] = 0.5;
            weights[2 * j + q] = -0.5;
        }
        let (ki, kj) = (2 * i, 2 * j);
        let sq = |k: usize| self.mean[k] * self.mean[k] + self.mean[k + 1] * self.mean[k + 1];
        let tr = |k: usize| self.cov[(k, k)] + self.cov[(k + 1, k + 1)];
        let mean = 0.5 * (sq(ki) - sq(kj) + tr(ki) - tr(kj));

        // AΣ with A diagonal
        let a_cov = DMatrix::from_fn(dim, dim, |r, c| weights[r] * self.cov[(r, c)]);
        let quad = (&a_cov * &a_cov).trace();
        // tr(AΩAΩ) = −Σ_modes 2 w_k² for diagonal A constant on each mode block
        let omega_term = -2.0 * (0.25 + 0.25);
        let a_mean = weights.component_mul(&self.mean);
        let displaced = (a_mean.transpose() * &self.cov * &a_mean)[(0, 0)];
        let variance = 2.0 * quad + 0.5 * omega_term + 4.0 * displaced;
        Ok(NumberMoments { mean, variance })
    }

    pub fn total_mean_photons(&self) -> f64 {
        (0..self.mode_count())
            .map(|m| self.number_stats(m).map(|s| s.mean).unwrap_or(f64::NAN))
            .sum()
    }

    /// `det(2Σ)`; equals one exactly for pure states.
    pub fn purity_determinant(&self) -> f64 {
        (&self.cov * 2.0).determinant()
    }

    /// Checks symmetry, finiteness and the uncertainty principle `Σ + iΩ/2 ≥ 0`.
    pub fn check_physical(&self) -> Result<()> {
        if self.mean.iter().chain(self.cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("state moments contain non-finite entries"));
        }
        let scale = self.cov.amax().max(1.0);
        let asym = (&self.cov - self.cov.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::domain(format!("covariance is not symmetric (max asymmetry {asym:e})")));
        }
        let min_eig = uncertainty_min_eigenvalue(&self.cov);
        if min_eig < -UNCERTAINTY_TOL * scale {
            return Err(Error::domain(format!(
                "covariance violates the uncertainty principle (min eigenvalue of Σ + iΩ/2 is {min_eig:e})"
            )));
        }
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.mode_count() {
            Ok(())
        } else {
            Err(Error::domain(format!("mode index {mode} out of range for a {}-mode state", self.mode_count())))
        }
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(Error::domain(format!("mode pair must be distinct, got ({i}, {j})")));
        }
        Ok(())
    }
}

/// Smallest eigenvalue of the Hermitian matrix `Σ + iΩ/2`, via its real
/// symmetric embedding `[[Σ, −Ω/2], [Ω/2, Σ]]`.
pub fn uncertainty_min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let n = cov.nrows();
    let half_omega = symplectic_form(n / 2) * 0.5;
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(cov);
    big.view_mut((n, n), (n, n)).copy_from(cov);
    big.view_mut((0, n), (n, n)).copy_from(&(-&half_omega));
    big.view_mut((n, 0), (n, n)).copy_from(&half_omega);
    big.symmetric_eigen().eigenvalues.min()
}

/// `Ω = ⊕ [[0, 1], [−1, 0]]`.
pub fn symplectic_form(mode_count: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * mode_count, 2 * mode_count);
    for m in 0..mode_count {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

// Sign convention: the reflected amplitude enters mode i with +√R and mode j
// with −√R. Both engines (Gaussian and Fock) use this one convention.
pub fn beam_splitter_symplectic(mode_count: usize, i: usize, j: usize, reflectivity: f64) -> DMatrix<f64> {
    let t = (1.0 - reflectivity).sqrt();
    let r = reflectivity.sqrt();
    let mut s = DMatrix::identity(2 * mode_count, 2 * mode_count);
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        s[(a, a)] = t;
        s[(a, b)] = r;
        s[(b, a)] = -r;
        s[(b, b)] = t;
    }
    s
}

pub fn phase_symplectic(mode_count: usize, mode: usize, phi: f64) -> DMatrix<f64> {
    let (sin, cos) = phi.sin_cos();
    let mut s = DMatrix::identity(2 * mode_count, 2 * mode_count);
    let k = 2 * mode;
    s[(k, k)] = cos;
    s[(k, k + 1)] = -sin;
    s[(k + 1, k)] = sin;
    s[(k + 1, k + 1)] = cos;
    s
}

pub fn squeeze_symplectic(mode_count: usize, mode: usize, xi: f64, theta: f64) -> DMatrix<f64> {
    let (sin, cos) = theta.sin_cos();
    let (shrink, stretch) = ((-xi).exp(), xi.exp());
    // R(θ) diag(e^{−ξ}, e^{ξ}) R(θ)ᵀ
    let xx = shrink * cos * cos + stretch * sin * sin;
    let pp = shrink * sin * sin + stretch * cos * cos;
    let xp = (shrink - stretch) * sin * cos;
    let mut s = DMatrix::identity(2 * mode_count, 2 * mode_count);
    let k = 2 * mode;
    s[(k, k)] = xx;
    s[(k, k + 1)] = xp;
    s[(k + 1, k)] = xp;
    s[(k + 1, k + 1)] = pp;
    s
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn assert_state_eq(a: &QuadratureState, b: &QuadratureState, tol: f64) {
        assert!((a.mean() - b.mean()).amax() <= tol, "means differ: {} vs {}", a.mean(), b.mean());
        assert!((a.cov() - b.cov()).amax() <= tol, "covs differ: {} vs {}", a.cov(), b.cov());
    }

    #[test]
    fn coherent_zero_is_vacuum() {
        let s = QuadratureState::coherent(0.0, 1.3).unwrap();
        assert_state_eq(&s, &QuadratureState::vacuum(1), 0.0);
    }

    #[test]
    fn coherent_has_poisson_statistics() {
        let s = QuadratureState::coherent(4.0, 0.0).unwrap();
        assert_relative_eq!(s.mean()[0], 8f64.sqrt(), epsilon = 1e-15);
        assert_eq!(s.mean()[1], 0.0);
        let stats = s.number_stats(0).unwrap();
        assert_relative_eq!(stats.mean, 4.0, epsilon = 1e-12);
        assert_relative_eq!(stats.variance, 4.0, epsilon = 1e-12);

        let big = QuadratureState::coherent(1e16, 0.0).unwrap().number_stats(0).unwrap();
        assert_relative_eq!(big.mean, 1e16, max_relative = 1e-12);
    }

    #[test]
    fn negative_photon_number_rejected() {
        assert!(matches!(QuadratureState::coherent(-1.0, 0.0), Err(Error::Domain(_))));
        assert!(QuadratureState::coherent(f64::NAN, 0.0).is_err());
        assert!(QuadratureState::squeezed_vacuum(-0.1, 0.0).is_err());
    }

    #[test]
    fn squeezed_vacuum_variances() {
        assert_state_eq(&QuadratureState::squeezed_vacuum(0.0, 0.0).unwrap(), &QuadratureState::vacuum(1), 1e-15);

        // 10 dB: e^{-2ξ} = 0.1
        let xi = 10f64.ln() / 2.0;
        let s = QuadratureState::squeezed_vacuum(xi, 0.0).unwrap();
        assert_relative_eq!(s.cov()[(0, 0)], 0.05, epsilon = 1e-14);
        assert_relative_eq!(s.cov()[(1, 1)], 5.0, epsilon = 1e-12);

        let six = QuadratureState::squeezed_vacuum(0.69, 0.0).unwrap();
        let db = -10.0 * (2.0 * six.cov()[(0, 0)]).log10();
        assert!((db - 6.0).abs() < 0.01, "{db}");

        let stats = QuadratureState::squeezed_vacuum(0.7, 0.4).unwrap().number_stats(0).unwrap();
        let (sh, ch) = (0.7f64.sinh(), 0.7f64.cosh());
        assert_relative_eq!(stats.mean, sh * sh, epsilon = 1e-12);
        assert_relative_eq!(stats.variance, 2.0 * sh * sh * ch * ch, epsilon = 1e-12);
    }

    #[test]
    fn squeezing_angle_rotates_the_ellipse() {
        let s = QuadratureState::squeezed_vacuum(0.5, PI / 2.0).unwrap();
        assert_relative_eq!(s.cov()[(1, 1)], (-1.0f64).exp() / 2.0, epsilon = 1e-14);
        assert_relative_eq!(s.cov()[(0, 0)], 1.0f64.exp() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn beam_splitter_edge_cases() {
        let input = QuadratureState::coherent(4.0, 0.3).unwrap().tensor(&QuadratureState::squeezed_vacuum(0.5, 0.2).unwrap());
        assert_state_eq(&input.beam_splitter(0, 1, 0.0).unwrap(), &input, 1e-15);

        let split = QuadratureState::coherent(10.0, 0.0)
            .unwrap()
            .tensor(&QuadratureState::vacuum(1))
            .beam_splitter(0, 1, 0.5)
            .unwrap();
        assert_relative_eq!(split.number_stats(0).unwrap().mean, 5.0, epsilon = 1e-12);
        assert_relative_eq!(split.number_stats(1).unwrap().mean, 5.0, epsilon = 1e-12);

        let input = QuadratureState::coherent(4.0, 0.0).unwrap().tensor(&QuadratureState::squeezed_vacuum(0.5, 0.0).unwrap());
        let out = input.beam_splitter(0, 1, 0.3).unwrap();
        assert_relative_eq!(input.total_mean_photons(), out.total_mean_photons(), epsilon = 1e-10);

        assert!(input.beam_splitter(0, 0, 0.5).is_err());
        assert!(input.beam_splitter(0, 2, 0.5).is_err());
        assert!(input.beam_splitter(0, 1, 1.5).is_err());
    }

    #[test]
    fn phase_edge_cases() {
        let s = QuadratureState::coherent(4.0, 0.0).unwrap();
        assert_state_eq(&s.phase(0, 0.0).unwrap(), &s, 0.0);
        assert_state_eq(&s.phase(0, 2.0 * PI).unwrap(), &s, 1e-12);
        let rotated = s.phase(0, PI / 2.0).unwrap();
        assert!(rotated.mean()[0].abs() < 1e-15);
        assert_relative_eq!(rotated.mean()[1], 8f64.sqrt(), epsilon = 1e-15);
        assert!(s.phase(1, 0.1).is_err());
    }

    #[test]
    fn loss_edge_cases() {
        let s = QuadratureState::squeezed_vacuum(0.8, 0.3).unwrap().tensor(&QuadratureState::coherent(3.0, 1.0).unwrap());
        assert_state_eq(&s.loss(0, 0.0).unwrap(), &s, 0.0);
        let dead = s.loss(1, 1.0).unwrap();
        let stats = dead.number_stats(1).unwrap();
        assert!(stats.mean.abs() < 1e-15 && stats.variance.abs() < 1e-15);

        let sq = QuadratureState::squeezed_vacuum(3.0, 0.0).unwrap().loss(0, 0.5).unwrap();
        let expected = 0.5 * (-6.0f64).exp() / 2.0 + 0.25;
        assert_relative_eq!(sq.cov()[(0, 0)], expected, epsilon = 1e-15);
        assert!((sq.cov()[(0, 0)] - 0.25).abs() < 1e-3);

        let coh = QuadratureState::coherent(7.0, 0.0).unwrap().loss(0, 0.3).unwrap();
        assert_relative_eq!(coh.number_stats(0).unwrap().mean, 7.0 * 0.7, epsilon = 1e-12);

        assert!(s.loss(0, -0.1).is_err());
        assert!(s.loss(0, 1.1).is_err());
    }

    #[test]
    fn number_difference_basics() {
        let split = QuadratureState::coherent(9.0, 0.0)
            .unwrap()
            .tensor(&QuadratureState::vacuum(1))
            .beam_splitter(0, 1, 0.5)
            .unwrap();
        let d = split.number_difference_stats(0, 1).unwrap();
        assert!(d.mean.abs() < 1e-12);
        assert_relative_eq!(d.variance, 9.0, epsilon = 1e-10);
        assert!(split.number_difference_stats(1, 1).is_err());

        let vac = QuadratureState::vacuum(2).number_difference_stats(0, 1).unwrap();
        assert!(vac.mean.abs() < 1e-15 && vac.variance.abs() < 1e-15);
    }

    #[test]
    fn unphysical_covariance_rejected() {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.1]));
        assert!(matches!(QuadratureState::from_moments(DVector::zeros(2), cov), Err(Error::Domain(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(QuadratureState::from_moments(DVector::zeros(2), asym).is_err());
        assert!(QuadratureState::from_moments(DVector::zeros(3), DMatrix::identity(3, 3)).is_err());
    }

    fn arb_state() -> impl Strategy<Value = QuadratureState> {
        (0.0..20.0f64, -PI..PI, 0.0..1.2f64, -PI..PI, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(n, ph, xi, th, r, l)| {
            QuadratureState::coherent(n, ph)
                .unwrap()
                .tensor(&QuadratureState::squeezed_vacuum(xi, th).unwrap())
                .beam_splitter(0, 1, r)
                .unwrap()
                .loss(1, l)
                .unwrap()
        })
    }

    fn omega_preserved(s: &DMatrix<f64>) -> f64 {
        let omega = symplectic_form(s.nrows() / 2);
        (s * &omega * s.transpose() - omega).amax()
    }

    proptest! {
        #[test]
        fn transforms_are_symplectic(r in 0.0..1.0f64, phi in -10.0..10.0f64, xi in 0.0..2.0f64, theta in -PI..PI) {
            prop_assert!(omega_preserved(&beam_splitter_symplectic(2, 0, 1, r)) < 1e-12);
            prop_assert!(omega_preserved(&phase_symplectic(2, 1, phi)) < 1e-12);
            prop_assert!(omega_preserved(&squeeze_symplectic(2, 0, xi, theta)) < 1e-12);
        }

        #[test]
        fn passive_transforms_conserve_photons(state in arb_state(), r in 0.0..1.0f64, phi in -PI..PI) {
            let before = state.total_mean_photons();
            let after = state.beam_splitter(1, 0, r).unwrap().phase(0, phi).unwrap().total_mean_photons();
            prop_assert!((before - after).abs() <= 1e-10 * before.max(1.0));
        }

        #[test]
        fn loss_composes(state in arb_state(), l1 in 0.0..1.0f64, l2 in 0.0..1.0f64) {
            let twice = state.loss(0, l1).unwrap().loss(0, l2).unwrap();
            let once = state.loss(0, 1.0 - (1.0 - l1) * (1.0 - l2)).unwrap();
            prop_assert!((twice.mean() - once.mean()).amax() < 1e-12 * state.mean().amax().max(1.0));
            prop_assert!((twice.cov() - once.cov()).amax() < 1e-12 * state.cov().amax().max(1.0));
        }

        #[test]
        fn loss_commutes_with_phase(state in arb_state(), l in 0.0..1.0f64, phi in -PI..PI) {
            let a = state.phase(0, phi).unwrap().loss(0, l).unwrap();
            let b = state.loss(0, l).unwrap().phase(0, phi).unwrap();
            prop_assert!((a.mean() - b.mean()).amax() < 1e-12 * state.mean().amax().max(1.0));
            prop_assert!((a.cov() - b.cov()).amax() < 1e-12 * state.cov().amax().max(1.0));
        }

        #[test]
        fn pure_pipelines_stay_pure(n in 0.0..50.0f64, xi in 0.0..1.5f64, theta in -PI..PI, r in 0.0..1.0f64, phi in -PI..PI) {
            let s = QuadratureState::squeezed_vacuum(xi, theta).unwrap()
                .tensor(&QuadratureState::coherent(n, 0.0).unwrap())
                .beam_splitter(0, 1, r).unwrap()
                .phase(0, phi).unwrap()
                .beam_splitter(0, 1, 0.5).unwrap();
            prop_assert!((s.purity_determinant() - 1.0).abs() < 1e-9);
            prop_assert!(s.check_physical().is_ok());
        }

        #[test]
        fn difference_stats_match_single_mode_route(state in arb_state()) {
            let d = state.number_difference_stats(0, 1).unwrap();
            let (a, b) = (state.number_stats(0).unwrap(), state.number_stats(1).unwrap());
            let cov = state.number_covariance(0, 1).unwrap();
            let scale = (a.variance + b.variance).max(1.0);
            prop_assert!((d.mean - (a.mean - b.mean)).abs() < 1e-10 * (a.mean + b.mean).max(1.0));
            prop_assert!((d.variance - (a.variance + b.variance - 2.0 * cov)).abs() < 1e-10 * scale);
        }

        #[test]
        fn difference_stats_antisymmetric(state in arb_state()) {
            let ab = state.number_difference_stats(0, 1).unwrap();
            let ba = state.number_difference_stats(1, 0).unwrap();
            prop_assert!((ab.mean + ba.mean).abs() < 1e-12 * ab.mean.abs().max(1.0));
            prop_assert!((ab.variance - ba.variance).abs() < 1e-12 * ab.variance.max(1.0));
        }
    }
}
