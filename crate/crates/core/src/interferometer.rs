//! The lossy variable-beam-splitter Mach-Zehnder interferometer.
//!
//! Mode layout of the Gaussian pipeline:
//!
//! ```text
//! mode 0: squeezed vacuum ─┐            ┌─ arm a: phase φa, loss la ─┐          ┌─ port c
//!                          ├─ VBS (R1) ─┤                            ├─ BS (R2) ┤
//! mode 1: coherent, ⟨n⟩=N ─┘            └─ arm b: phase φb, loss lb ─┘          └─ port d
//! ```
//!
//! With this layout arm a receives a fraction `R1` of the coherent power and
//! `1 − R1` of the squeezed vacuum. The measured signal is `⟨n_c − n_d⟩`.

use std::f64::consts::{FRAC_PI_2, LN_10};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::fock::{FockPreparation, FockState};
use crate::gaussian::{Channel, QuadratureState};

/// Squeezing angle that puts the squeezed quadrature on the detected noise
/// quadrature at the π/2 working point.
pub const OPTIMAL_THETA: f64 = FRAC_PI_2;

/// Finite-difference step for the signal slope.
pub const SLOPE_STEP: f64 = 1e-4;

pub fn db_to_xi(db: f64) -> f64 {
    db * LN_10 / 20.0
}

/// `−10 log10(e^{−2ξ})`.
pub fn xi_to_db(xi: f64) -> f64 {
    20.0 * xi / LN_10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterferometerConfig {
    /// Mean photon number of the coherent input.
    pub n_photons: f64,
    pub squeeze_xi: f64,
    /// Squeezing angle; `None` selects [`OPTIMAL_THETA`].
    pub theta: Option<f64>,
    pub r1: f64,
    pub r2: f64,
    pub loss_a: f64,
    pub loss_b: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    /// Probe phase shift used by the closed-form signal.
    pub delta_phi: f64,
}

impl Default for InterferometerConfig {
    fn default() -> Self {
        Self {
            n_photons: 1e16,
            squeeze_xi: 0.0,
            theta: None,
            r1: 0.5,
            r2: 0.5,
            loss_a: 0.0,
            loss_b: 0.0,
            phi_a: FRAC_PI_2,
            phi_b: 0.0,
            delta_phi: 1e-9,
        }
    }
}

impl InterferometerConfig {
    pub fn with_squeeze_db(mut self, db: f64) -> Self {
        self.squeeze_xi = db_to_xi(db);
        self
    }

    pub fn squeeze_db(&self) -> f64 {
        xi_to_db(self.squeeze_xi)
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or(OPTIMAL_THETA)
    }

    /// Same interferometer with the arm labels exchanged and `R1 → 1 − R1`.
    pub fn mirrored(&self) -> Self {
        Self {
            r1: 1.0 - self.r1,
            loss_a: self.loss_b,
            loss_b: self.loss_a,
            phi_a: self.phi_b,
            phi_b: self.phi_a,
            ..*self
        }
    }

    /// Physical parameter ranges shared by every computation.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_photons", self.n_photons),
            ("squeeze_xi", self.squeeze_xi),
            ("r1", self.r1),
            ("r2", self.r2),
            ("loss_a", self.loss_a),
            ("loss_b", self.loss_b),
            ("phi_a", self.phi_a),
            ("phi_b", self.phi_b),
            ("delta_phi", self.delta_phi),
        ] {
            check_finite(name, v)?;
        }
        if let Some(t) = self.theta {
            check_finite("theta", t)?;
        }
        if self.n_photons < 0.0 {
            return Err(Error::domain(format!("n_photons must be >= 0, got {}", self.n_photons)));
        }
        if self.squeeze_xi < 0.0 {
            return Err(Error::domain(format!("squeeze_xi must be >= 0, got {}", self.squeeze_xi)));
        }
        for (name, v) in [("r1", self.r1), ("r2", self.r2), ("loss_a", self.loss_a), ("loss_b", self.loss_b)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Ranges for which a phase sensitivity exists.
    fn validate_sensitivity(&self) -> Result<()> {
        self.validate()?;
        if self.n_photons <= 0.0 {
            return Err(Error::Divergent { parameter: "n_photons", value: self.n_photons });
        }
        if self.r1 <= 0.0 || self.r1 >= 1.0 {
            return Err(Error::Divergent { parameter: "r1", value: self.r1 });
        }
        if self.loss_a >= 1.0 {
            return Err(Error::Divergent { parameter: "loss_a", value: self.loss_a });
        }
        Ok(())
    }

    /// Domain of the closed-form expressions: one lossy arm, balanced
    /// recombiner, optimal squeezing angle.
    pub fn check_closed_form_domain(&self) -> Result<()> {
        self.validate_sensitivity()?;
        if self.loss_b != 0.0 {
            return Err(Error::OutOfValidity(format!("loss_b = {} (closed form assumes a lossless arm b)", self.loss_b)));
        }
        if self.r2 != 0.5 {
            return Err(Error::OutOfValidity(format!("r2 = {} (closed form assumes a 50:50 recombiner)", self.r2)));
        }
        if let Some(t) = self.theta {
            let offset = (t - OPTIMAL_THETA).rem_euclid(std::f64::consts::PI);
            if offset.min(std::f64::consts::PI - offset) > 1e-12 {
                return Err(Error::OutOfValidity(format!("theta = {t} is not the optimal squeezing angle")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    GaussianEngine,
    GoldenSection,
    GridScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Phase sensitivity δφ in radians.
    pub delta_phi: f64,
    /// `d⟨n_c − n_d⟩/dφ`.
    pub signal_slope: f64,
    /// Standard deviation of `n_c − n_d`.
    pub noise: f64,
    pub db_vs_sql: f64,
    pub method: Method,
}

/// `δφ² N` for the closed form, independent of N.
pub fn normalized_variance(r1: f64, loss: f64, xi: f64) -> f64 {
    ((1.0 - r1) * loss + (1.0 - loss) * (-2.0 * xi).exp()) / (4.0 * (1.0 - r1) * r1 * (1.0 - loss))
}

pub fn closed_form_sensitivity(cfg: &InterferometerConfig) -> Result<f64> {
    cfg.check_closed_form_domain()?;
    Ok((normalized_variance(cfg.r1, cfg.loss_a, cfg.squeeze_xi) / cfg.n_photons).sqrt())
}

/// Signal for the probe shift `cfg.delta_phi`.
pub fn closed_form_signal(cfg: &InterferometerConfig) -> Result<f64> {
    cfg.check_closed_form_domain()?;
    Ok(signal_gain(cfg) * cfg.delta_phi)
}

pub fn closed_form_noise(cfg: &InterferometerConfig) -> Result<f64> {
    cfg.check_closed_form_domain()?;
    Ok(noise_variance(cfg).sqrt())
}

pub fn closed_form_report(cfg: &InterferometerConfig) -> Result<SensitivityReport> {
    let delta_phi = closed_form_sensitivity(cfg)?;
    Ok(SensitivityReport {
        delta_phi,
        signal_slope: signal_gain(cfg),
        noise: noise_variance(cfg).sqrt(),
        db_vs_sql: db_vs_sql(delta_phi, cfg.n_photons)?,
        method: Method::ClosedForm,
    })
}

fn signal_gain(cfg: &InterferometerConfig) -> f64 {
    2.0 * ((1.0 - cfg.r1) * cfg.r1 * (1.0 - cfg.loss_a)).sqrt() * cfg.n_photons
}

fn noise_variance(cfg: &InterferometerConfig) -> f64 {
    ((1.0 - cfg.r1) * cfg.loss_a + (1.0 - cfg.loss_a) * (-2.0 * cfg.squeeze_xi).exp()) * cfg.n_photons
}

/// Inputs, VBS, arm phases and arm losses: the two-arm state before
/// recombination. `extra_a`/`extra_b` are added to the configured arm phases.
pub fn arm_state(cfg: &InterferometerConfig, extra_a: f64, extra_b: f64) -> Result<QuadratureState> {
    cfg.validate()?;
    let input = QuadratureState::squeezed_vacuum(cfg.squeeze_xi, cfg.theta())?
        .tensor(&QuadratureState::coherent(cfg.n_photons, 0.0)?);
    input
        .beam_splitter(0, 1, cfg.r1)?
        .phase(0, cfg.phi_a + extra_a)?
        .phase(1, cfg.phi_b + extra_b)?
        .loss(0, cfg.loss_a)?
        .loss(1, cfg.loss_b)
}

/// State at the two detectors.
pub fn output_state(cfg: &InterferometerConfig, extra_a: f64) -> Result<QuadratureState> {
    arm_state(cfg, extra_a, 0.0)?.beam_splitter(0, 1, cfg.r2)
}

/// Truncated Fock-space counterpart of [`output_state`]. The two-mode
/// density matrix has `cutoff⁴` entries, so this is for small N only.
pub fn fock_output_state(cfg: &InterferometerConfig, cutoff: usize) -> Result<FockState> {
    cfg.validate()?;
    let squeezed = FockState::prepare(FockPreparation::Squeezed { xi: cfg.squeeze_xi, theta: cfg.theta() }, cutoff)?;
    let alpha = Complex64::new(cfg.n_photons.max(0.0).sqrt(), 0.0);
    let coherent = FockState::prepare(FockPreparation::Coherent { alpha }, cutoff)?;
    [
        Channel::BeamSplitter { i: 0, j: 1, reflectivity: cfg.r1 },
        Channel::Phase { mode: 0, phi: cfg.phi_a },
        Channel::Phase { mode: 1, phi: cfg.phi_b },
        Channel::Loss { mode: 0, rate: cfg.loss_a },
        Channel::Loss { mode: 1, rate: cfg.loss_b },
        Channel::BeamSplitter { i: 0, j: 1, reflectivity: cfg.r2 },
    ]
    .iter()
    .try_fold(FockState::product(&squeezed, &coherent)?, |state, channel| state.apply(channel))
}

/// Phase sensitivity from the Gaussian engine with balanced
/// intensity-difference detection.
///
/// The slope is a central difference in the arm-a phase at steps `h` and
/// `h/2`, combined by Richardson extrapolation.
pub fn simulate_sensitivity(cfg: &InterferometerConfig) -> Result<SensitivityReport> {
    cfg.validate()?;
    if cfg.n_photons <= 0.0 {
        return Err(Error::Divergent { parameter: "n_photons", value: cfg.n_photons });
    }
    let signal = |phi: f64| -> Result<f64> { Ok(output_state(cfg, phi)?.number_difference_stats(0, 1)?.mean) };
    let central = |h: f64| -> Result<f64> { Ok((signal(h)? - signal(-h)?) / (2.0 * h)) };
    let coarse = central(SLOPE_STEP)?;
    let fine = central(SLOPE_STEP / 2.0)?;
    let slope = (4.0 * fine - coarse) / 3.0;
    if slope.is_nan() || slope == 0.0 || slope.abs() < 1e-30 * cfg.n_photons {
        return Err(Error::UndefinedSensitivity { slope });
    }
    let noise = output_state(cfg, 0.0)?.number_difference_stats(0, 1)?.variance.max(0.0).sqrt();
    let delta_phi = noise / slope.abs();
    Ok(SensitivityReport {
        delta_phi,
        signal_slope: slope,
        noise,
        db_vs_sql: db_vs_sql(delta_phi, cfg.n_photons)?,
        method: Method::GaussianEngine,
    })
}

/// Closed form where it applies, engine otherwise.
pub fn best_sensitivity(cfg: &InterferometerConfig) -> Result<SensitivityReport> {
    match closed_form_report(cfg) {
        Err(Error::OutOfValidity(_)) => simulate_sensitivity(cfg),
        other => other,
    }
}

/// Decibels below the SQL `1/√N`: `−20 log10(δφ √N)`. Positive means better than the SQL.
pub fn db_vs_sql(delta_phi: f64, n_photons: f64) -> Result<f64> {
    if !(delta_phi > 0.0 && n_photons > 0.0) {
        return Err(Error::domain(format!("db_vs_sql needs positive inputs, got ({delta_phi}, {n_photons})")));
    }
    Ok(-20.0 * (delta_phi * n_photons.sqrt()).log10())
}

/// `−20 log10(δφ_i / δφ_ref)`.
pub fn optimization_ratio(delta_phi: f64, reference: f64) -> Result<f64> {
    if !(delta_phi > 0.0 && reference > 0.0) {
        return Err(Error::domain(format!("optimization ratio needs positive inputs, got ({delta_phi}, {reference})")));
    }
    Ok(-20.0 * (delta_phi / reference).log10())
}

/// Sensitivity of the classical 50:50 interferometer (no squeezing) with the
/// same photon number and losses.
pub fn mzi_5050_reference(cfg: &InterferometerConfig) -> Result<f64> {
    let reference = InterferometerConfig { squeeze_xi: 0.0, r1: 0.5, theta: None, ..*cfg };
    Ok(best_sensitivity(&reference)?.delta_phi)
}
