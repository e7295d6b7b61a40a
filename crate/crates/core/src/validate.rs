//! Self-check suite run by `qmzi validate`: engines against each other and
//! against reference values.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;

use crate::allocator::{
    loss_rate_limit, min_squeezing_for_sql, optimal_r1_closed, optimal_r1_numeric, Threshold,
};
use crate::error::Result;
use crate::fock::{FockPreparation, FockState, HIGH_CUTOFF};
use crate::gaussian::QuadratureState;
use crate::interferometer::{
    closed_form_noise, closed_form_sensitivity, closed_form_signal, db_to_xi, db_vs_sql, fock_output_state,
    normalized_variance, optimization_ratio, output_state, simulate_sensitivity, InterferometerConfig,
};
use crate::qcrb::{gaussian_fidelity, pure_state_qfi, qfi_phase, saturation_report, Encoding};

/// Knobs for exercising the suite itself.
#[derive(Clone, Copy)]
pub struct ValidateOptions {
    /// Per-mode cutoff of the Fock oracle.
    pub fock_cutoff: usize,
    /// Closed-form optimal R1 under test.
    pub closed_r1: fn(f64, f64) -> Result<f64>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { fock_cutoff: HIGH_CUTOFF, closed_r1: optimal_r1_closed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Result<(bool, String)>) {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(outcome) => outcome,
            Err(e) => (false, format!("error: {e}")),
        };
        self.checks.push(CheckResult { name: name.to_string(), passed, detail, seconds: start.elapsed().as_secs_f64() });
    }

    /// `|value − expected| ≤ tol`.
    fn near(&mut self, name: &str, expected: f64, tol: f64, f: impl FnOnce() -> Result<f64>) {
        self.check(name, || {
            let v = f()?;
            Ok(((v - expected).abs() <= tol, format!("{v:.6e} (expected {expected:.6e} ± {tol:.1e})")))
        });
    }

    /// `|value / expected − 1| ≤ tol`.
    fn rel(&mut self, name: &str, expected: f64, tol: f64, f: impl FnOnce() -> Result<f64>) {
        self.check(name, || {
            let v = f()?;
            let err = (v / expected - 1.0).abs();
            Ok((err <= tol, format!("{v:.9e} (expected {expected:.9e}, relative error {err:.1e})")))
        });
    }
}

fn cfg(n: f64, l: f64, r1: f64, db: f64) -> InterferometerConfig {
    InterferometerConfig { n_photons: n, loss_a: l, r1, squeeze_xi: db_to_xi(db), ..Default::default() }
}

const LOSS_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const DB_GRID: [f64; 4] = [0.0, 2.0, 6.0, 10.0];

pub fn run_validation(opts: &ValidateOptions) -> ValidationReport {
    let mut s = Suite { checks: Vec::new() };
    gaussian_checks(&mut s);
    fock_checks(&mut s, opts.fock_cutoff);
    interferometer_checks(&mut s);
    allocator_checks(&mut s, opts.closed_r1);
    qcrb_checks(&mut s);
    reference_value_checks(&mut s, opts.closed_r1);
    ValidationReport { checks: s.checks }
}

fn gaussian_checks(s: &mut Suite) {
    s.near("gaussian: vacuum has no photons", 0.0, 1e-15, || {
        let st = QuadratureState::vacuum(1).number_stats(0)?;
        Ok(st.mean.abs() + st.variance.abs())
    });
    s.check("gaussian: coherent state is Poissonian", || {
        let st = QuadratureState::coherent(4.0, 0.3)?.number_stats(0)?;
        Ok(((st.mean - 4.0).abs() < 1e-12 && (st.variance - 4.0).abs() < 1e-12, format!("{st:?}")))
    });
    s.check("gaussian: squeezed vacuum moments", || {
        let xi = 0.8f64;
        let st = QuadratureState::squeezed_vacuum(xi, 0.4)?.number_stats(0)?;
        let (m, v) = (xi.sinh().powi(2), 2.0 * (xi.sinh() * xi.cosh()).powi(2));
        Ok(((st.mean - m).abs() < 1e-12 && (st.variance - v).abs() < 1e-11, format!("{st:?}")))
    });
    s.near("gaussian: beam splitter conserves photons", 0.0, 1e-9, || {
        let st = QuadratureState::squeezed_vacuum(0.6, 0.2)?.tensor(&QuadratureState::coherent(9.0, 1.0)?);
        let before = st.total_mean_photons();
        Ok(st.beam_splitter(0, 1, 0.37)?.total_mean_photons() - before)
    });
    s.near("gaussian: losses compose multiplicatively", 0.0, 1e-12, || {
        let st = QuadratureState::squeezed_vacuum(0.6, 0.2)?.tensor(&QuadratureState::coherent(9.0, 1.0)?);
        let twice = st.loss(0, 0.3)?.loss(0, 0.5)?;
        let once = st.loss(0, 1.0 - 0.7 * 0.5)?;
        Ok((twice.cov() - once.cov()).amax() + (twice.mean() - once.mean()).amax())
    });
    s.near("gaussian: pure states have det(2V) = 1", 1.0, 1e-10, || {
        let st = QuadratureState::squeezed_vacuum(1.2, 0.3)?.tensor(&QuadratureState::coherent(2.0, 0.0)?);
        Ok(st.beam_splitter(0, 1, 0.2)?.purity_determinant())
    });
}

fn fock_checks(s: &mut Suite, cutoff: usize) {
    // one expensive pipeline, shared by the moment checks
    let base = InterferometerConfig { n_photons: 16.0, squeeze_xi: 0.3, loss_a: 0.2, r1: 0.6, ..Default::default() };
    let start = Instant::now();
    let pair = fock_output_state(&base, cutoff).and_then(|f| Ok((f, output_state(&base, 0.0)?)));
    let elapsed = start.elapsed().as_secs_f64();
    let label = |what: &str| format!("fock oracle (cutoff {cutoff}): {what}");
    match pair {
        Err(e) => s.check(&label("pipeline"), || Ok((false, format!("error: {e}")))),
        Ok((fock, gauss)) => {
            s.check(&label("pipeline"), || Ok((true, format!("N = 16 pipeline in {elapsed:.1} s"))));
            s.near(&label("mean of n_c − n_d"), 0.0, 1e-6, || {
                Ok(fock.number_difference_stats()?.0 - gauss.number_difference_stats(0, 1)?.mean)
            });
            s.near(&label("variance of n_c − n_d"), 0.0, 1e-6, || {
                Ok(fock.number_difference_stats()?.1 - gauss.number_difference_stats(0, 1)?.variance)
            });
            for mode in 0..2 {
                s.near(&label(&format!("mean and variance of mode {mode}")), 0.0, 1e-6, || {
                    let (m, v) = fock.number_stats(mode)?;
                    let g = gauss.number_stats(mode)?;
                    Ok((m - g.mean).abs().max((v - g.variance).abs()))
                });
            }
        }
    }
    s.near(&label("vacuum-squeezed overlap matches Gaussian fidelity"), 0.0, 1e-8, || {
        let vac = FockState::prepare(FockPreparation::Vacuum, cutoff)?;
        let sq = FockState::prepare(FockPreparation::Squeezed { xi: 0.5, theta: 0.0 }, cutoff)?;
        let g = gaussian_fidelity(&QuadratureState::vacuum(1), &QuadratureState::squeezed_vacuum(0.5, 0.0)?)?;
        Ok(vac.fidelity(&sq)? - g)
    });
}

fn interferometer_checks(s: &mut Suite) {
    s.rel("interferometer: lossless coherent input sits at the SQL", 1e-8, 1e-12, || {
        closed_form_sensitivity(&cfg(1e16, 0.0, 0.5, 0.0))
    });
    s.near("interferometer: 10 dB squeezing is 10 dB below the SQL", 10.0, 0.01, || {
        db_vs_sql(closed_form_sensitivity(&cfg(1e16, 0.0, 0.5, 10.0))?, 1e16)
    });
    s.rel("interferometer: l = 0.7 closed-form variance", 0.38 / 0.3, 1e-12, || {
        Ok(closed_form_sensitivity(&cfg(1e16, 0.7, 0.5, 10.0))?.powi(2) * 1e16)
    });
    s.rel("interferometer: closed-form signal", 2.0 * 0.075f64.sqrt() * 1e7, 1e-12, || {
        closed_form_signal(&cfg(1e16, 0.7, 0.5, 10.0))
    });
    s.rel("interferometer: closed-form noise", 0.226f64.sqrt() * 1e8, 1e-12, || {
        closed_form_noise(&cfg(1e16, 0.7, 0.72, 10.0))
    });
    s.rel("interferometer: engine SQL", 1e-4, 1e-6, || Ok(simulate_sensitivity(&cfg(1e8, 0.0, 0.5, 0.0))?.delta_phi));
    for &l in &[0.0, 0.2, 0.45, 0.7, 0.9] {
        s.check(&format!("interferometer: engine vs closed form at l = {l} (25 points)"), || {
            let mut worst: f64 = 0.0;
            for &r1 in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                for &db in &[0.0, 3.0, 6.0, 10.0, 15.0] {
                    let c = cfg(1e8, l, r1, db);
                    let closed = closed_form_sensitivity(&c)?;
                    worst = worst.max((simulate_sensitivity(&c)?.delta_phi / closed - 1.0).abs());
                }
            }
            Ok((worst <= 1e-3, format!("worst relative deviation {worst:.2e}")))
        });
    }
    s.check("interferometer: mirrored arms give the same engine sensitivity", || {
        let c = InterferometerConfig { loss_a: 0.4, loss_b: 0.1, r1: 0.65, ..cfg(1e8, 0.0, 0.5, 6.0) };
        let (a, b) = (simulate_sensitivity(&c)?.delta_phi, simulate_sensitivity(&c.mirrored())?.delta_phi);
        Ok(((a - b).abs() <= 1e-10 * a, format!("{a:.12e} vs {b:.12e}")))
    });
    s.check("interferometer: sensitivity improves with squeezing", || {
        let ok = [0.1, 0.5, 0.9].iter().all(|&l| {
            (0..30).all(|k| normalized_variance(0.6, l, 0.1 * (k + 1) as f64) < normalized_variance(0.6, l, 0.1 * k as f64))
        });
        Ok((ok, String::new()))
    });
    s.check("interferometer: divergent R1 is rejected", || {
        let err = closed_form_sensitivity(&cfg(1e16, 0.3, 1.0, 0.0)).err();
        Ok((err.as_ref().is_some_and(|e| e.to_string().contains("r1")), format!("{err:?}")))
    });
}

fn allocator_checks(s: &mut Suite, closed_r1: fn(f64, f64) -> Result<f64>) {
    s.check("allocator: closed-form R1 agrees with golden-section search on the engine", || {
        let mut worst: (f64, f64, f64) = (0.0, 0.0, 0.0);
        for &l in &LOSS_GRID {
            for &db in &DB_GRID {
                let closed = closed_r1(l, db_to_xi(db))?;
                let numeric = optimal_r1_numeric(&cfg(1e8, l, 0.5, db))?.r1_opt;
                if (closed - numeric).abs() > worst.0 {
                    worst = ((closed - numeric).abs(), l, db);
                }
            }
        }
        Ok((worst.0 <= 1e-4, format!("worst |ΔR1| = {:.2e} at l = {}, {} dB", worst.0, worst.1, worst.2)))
    });
    s.check("allocator: optimal R1 grows with loss", || {
        let ok = DB_GRID.iter().all(|&db| {
            LOSS_GRID.windows(2).all(|w| {
                let a = closed_r1(w[0], db_to_xi(db));
                let b = closed_r1(w[1], db_to_xi(db));
                matches!((a, b), (Ok(a), Ok(b)) if b >= a)
            })
        });
        Ok((ok, String::new()))
    });
    s.check("allocator: optimal R1 grows with squeezing", || {
        let ok = LOSS_GRID.iter().all(|&l| {
            DB_GRID.windows(2).all(|w| {
                let a = closed_r1(l, db_to_xi(w[0]));
                let b = closed_r1(l, db_to_xi(w[1]));
                matches!((a, b), (Ok(a), Ok(b)) if b >= a)
            })
        });
        Ok((ok, String::new()))
    });
    s.check("allocator: closed-form optimum is a local minimum (±1e-3)", || {
        for &l in &LOSS_GRID {
            for &db in &DB_GRID {
                let xi = db_to_xi(db);
                let r = closed_r1(l, xi)?;
                let v = normalized_variance(r, l, xi);
                if normalized_variance(r + 1e-3, l, xi) < v || normalized_variance(r - 1e-3, l, xi) < v {
                    return Ok((false, format!("not a minimum at l = {l}, {db} dB")));
                }
            }
        }
        Ok((true, String::new()))
    });
    s.near("allocator: optimal R1 → 0.5 as l → 0", 0.5, 1e-6, || closed_r1(1e-8, db_to_xi(10.0)));
    s.near("allocator: balanced two-arm loss restores R1 = 0.5", 0.5, 1e-4, || {
        Ok(optimal_r1_numeric(&InterferometerConfig { loss_b: 0.3, ..cfg(1e8, 0.3, 0.5, 10.0) })?.r1_opt)
    });
    s.check("allocator: unbalanced two-arm loss shifts R1 above 0.5", || {
        let r = optimal_r1_numeric(&InterferometerConfig { loss_b: 0.1, ..cfg(1e8, 0.3, 0.5, 10.0) })?;
        Ok((r.r1_opt > 0.5 && r.improvement_db > 0.0, format!("r1_opt {:.6}, improvement {:.4} dB", r.r1_opt, r.improvement_db)))
    });
    s.near("allocator: loss-rate limit at ξ = 0.69", 0.6, 0.002, || loss_rate_limit(0.69));
    s.near("allocator: loss-rate limit at ξ = 2.76", 0.666, 0.001, || loss_rate_limit(2.76));
    s.near("allocator: loss-rate limit as ξ → ∞", 2.0 / 3.0, 1e-6, || loss_rate_limit(40.0));
    s.near("allocator: 50:50 squeezing requirement at l = 0.6", 6.0, 0.05, || {
        threshold_db(min_squeezing_for_sql(0.6)?.balanced)
    });
    s.near("allocator: VBS squeezing requirement at l = 2/3", 6.0, 0.2, || {
        threshold_db(min_squeezing_for_sql(2.0 / 3.0)?.vbs)
    });
    s.check("allocator: 50:50 requirement is unreachable at l = 2/3", || {
        let t = min_squeezing_for_sql(2.0 / 3.0)?.balanced;
        Ok((t == Threshold::Unreachable, format!("{t:?}")))
    });
    s.check("allocator: 50:50 needs far more squeezing than VBS at l = 0.666", || {
        let req = min_squeezing_for_sql(0.666)?;
        let (vbs, half) = (threshold_db(req.vbs)?, threshold_db(req.balanced)?);
        Ok((half > vbs + 15.0, format!("VBS {vbs:.3} dB, 50:50 {half:.3} dB")))
    });
}

fn threshold_db(t: Threshold) -> Result<f64> {
    t.db().ok_or_else(|| crate::error::Error::domain("threshold unreachable"))
}

fn qcrb_checks(s: &mut Suite) {
    s.rel("qcrb: coherent lossless bound equals the SQL", 1e-4, 1e-4, || {
        qfi_phase(&cfg(1e8, 0.0, 0.5, 0.0), Encoding::ReferenceFree)?.qcrb.ok_or_else(|| crate::error::Error::domain("zero QFI"))
    });
    s.near("qcrb: vacuum carries no information", 0.0, 1e-6, || {
        Ok(qfi_phase(&InterferometerConfig { n_photons: 0.0, ..Default::default() }, Encoding::Differential)?.qfi)
    });
    s.rel("qcrb: 10 dB lossless bound", (-db_to_xi(10.0)).exp() * 1e-4, 1e-3, || {
        qfi_phase(&cfg(1e8, 0.0, 0.5, 10.0), Encoding::Differential)?.qcrb.ok_or_else(|| crate::error::Error::domain("zero QFI"))
    });
    for enc in [Encoding::ArmAOnly, Encoding::Differential, Encoding::ReferenceFree] {
        s.check(&format!("qcrb: fidelity QFI matches 4 Var(generator), {enc:?}"), || {
            let mut worst: f64 = 0.0;
            for &(r1, db) in &[(0.5, 0.0), (0.3, 6.0), (0.8, 10.0)] {
                let c = cfg(1e8, 0.0, r1, db);
                worst = worst.max((qfi_phase(&c, enc)?.qfi / pure_state_qfi(&c, enc)? - 1.0).abs());
            }
            Ok((worst <= 1e-4, format!("worst relative deviation {worst:.2e}")))
        });
    }
    s.check("qcrb: QFI is invariant under a common phase offset", || {
        let c = cfg(1e8, 0.4, 0.7, 6.0);
        let shifted = InterferometerConfig { phi_a: c.phi_a + 0.1, phi_b: c.phi_b + 0.1, ..c };
        let (a, b) = (qfi_phase(&c, Encoding::ReferenceFree)?.qfi, qfi_phase(&shifted, Encoding::ReferenceFree)?.qfi);
        Ok(((a / b - 1.0).abs() <= 1e-6, format!("{a:.9e} vs {b:.9e}")))
    });
    s.check("qcrb: detection saturates the bound at the optimal R1 (36 points)", || {
        let (mut lo, mut hi): (f64, f64) = (f64::INFINITY, 0.0);
        for &l in &LOSS_GRID {
            for &db in &DB_GRID {
                let ratio = saturation_report(l, db_to_xi(db), 1e8)?.ratio;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        Ok((lo >= 1.0 - 1e-3 && hi <= 1.05, format!("ratio in [{lo:.7}, {hi:.7}]")))
    });
    s.check("qcrb: bound never exceeds the detected sensitivity", || {
        for &l in &[0.0, 0.3, 0.7, 0.9] {
            for &r1 in &[0.2, 0.5, 0.8] {
                for &db in &[0.0, 6.0] {
                    let c = cfg(1e8, l, r1, db);
                    let delta = simulate_sensitivity(&c)?.delta_phi;
                    for enc in [Encoding::Differential, Encoding::ReferenceFree] {
                        let bound = qfi_phase(&c, enc)?.qcrb.unwrap_or(f64::INFINITY);
                        if bound > delta * (1.0 + 1e-6) {
                            return Ok((false, format!("{enc:?} at l = {l}, R1 = {r1}, {db} dB: {bound:e} > {delta:e}")));
                        }
                    }
                }
            }
        }
        Ok((true, String::new()))
    });
}

fn reference_value_checks(s: &mut Suite, closed_r1: fn(f64, f64) -> Result<f64>) {
    let xi10 = db_to_xi(10.0);
    let at = |l: f64, r1: f64, xi: f64| closed_form_sensitivity(&InterferometerConfig { loss_a: l, r1, squeeze_xi: xi, ..Default::default() });
    s.near("reference: squeezed 50:50 at l = 0.7 is 1.03 dB above the SQL", 1.03, 0.15, || {
        Ok(-db_vs_sql(at(0.7, 0.5, xi10)?, 1e16)?)
    });
    s.near("reference: VBS gain over 50:50 at l = 0.7, 10 dB", 1.6, 0.1, || {
        optimization_ratio(at(0.7, closed_r1(0.7, xi10)?, xi10)?, at(0.7, 0.5, xi10)?)
    });
    s.near("reference: squeezed VBS beats classical VBS at l = 0.7", 3.5, 0.1, || {
        optimization_ratio(at(0.7, closed_r1(0.7, xi10)?, xi10)?, at(0.7, closed_r1(0.7, 0.0)?, 0.0)?)
    });
    s.near("reference: classical VBS beats classical 50:50 at l = 0.7", 0.4, 0.1, || {
        optimization_ratio(at(0.7, closed_r1(0.7, 0.0)?, 0.0)?, at(0.7, 0.5, 0.0)?)
    });
    s.near("reference: 20% loss costs the squeezed 50:50 interferometer 3.5 dB", 3.5, 0.05, || {
        optimization_ratio(at(0.0, 0.5, xi10)?, at(0.2, 0.5, xi10)?)
    });
    s.near("reference: 20% loss costs the classical 50:50 interferometer 0.5 dB", 0.5, 0.05, || {
        optimization_ratio(at(0.0, 0.5, 0.0)?, at(0.2, 0.5, 0.0)?)
    });
    let xi2 = db_to_xi(2.0);
    for &(l, expected) in &[(0.0, 0.5), (0.427, 0.596), (0.7, 0.684), (0.9, 0.796)] {
        s.near(&format!("reference: optimal R1 at 2 dB, l = {l}"), expected, 5e-4, || closed_r1(l, xi2));
    }
    s.near("reference: OR at l = 0, 2 dB", 2.0, 0.005, || optimization_ratio(at(0.0, 0.5, xi2)?, at(0.0, 0.5, 0.0)?));
    s.near("reference: OR of squeezed VBS at l = 0.9, 2 dB", 1.61, 0.05, || {
        optimization_ratio(at(0.9, closed_r1(0.9, xi2)?, xi2)?, at(0.9, 0.5, 0.0)?)
    });
    s.near("reference: OR of squeezed 50:50 at l = 0.9, 2 dB", 0.30, 0.05, || {
        optimization_ratio(at(0.9, 0.5, xi2)?, at(0.9, 0.5, 0.0)?)
    });
    s.check("reference: working point is the π/2 phase difference", || {
        let c = InterferometerConfig::default();
        Ok(((c.phi_a - c.phi_b - PI / 2.0).abs() < 1e-15, String::new()))
    });
}
