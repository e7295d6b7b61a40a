//! Optimal splitting ratio of the first beam splitter, the loss-rate limit
//! of the balanced interferometer and the squeezing needed to reach the SQL.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::{
    closed_form_sensitivity, normalized_variance, optimization_ratio, simulate_sensitivity, xi_to_db,
    InterferometerConfig, Method,
};
use crate::search::{bisect, golden_section, grid_scan};

/// Open interval margin for the numeric R1 search.
pub const R1_MARGIN: f64 = 1e-6;
pub const R1_TOLERANCE: f64 = 1e-6;
const COARSE_POINTS: usize = 41;
const FALLBACK_POINTS: usize = 2001;
/// Upper end of the squeezing search (about 174 dB).
const XI_SEARCH_MAX: f64 = 20.0;
const XI_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub r1_opt: f64,
    pub delta_phi_opt: f64,
    /// δφ at R1 = 0.5.
    pub delta_phi_half: f64,
    /// `−20 log10(δφ_opt / δφ_half)`.
    pub improvement_db: f64,
    pub method: Method,
}

/// Optimal R1 of the single-lossy-arm interferometer at the optimal squeezing angle.
pub fn optimal_r1_closed(loss: f64, xi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&loss) {
        return Err(Error::domain(format!("loss must lie in [0, 1), got {loss}")));
    }
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::domain(format!("squeeze parameter must be finite and >= 0, got {xi}")));
    }
    if loss == 0.0 {
        return Ok(0.5);
    }
    let y = (-2.0 * xi).exp();
    let b = (1.0 - loss) * y + loss;
    // B² − Bl = B(1 − l)e^{−2ξ}, kept in product form for large ξ
    let discriminant = b * (1.0 - loss) * y;
    if discriminant < 0.0 {
        return Err(Error::Internal(format!("negative discriminant {discriminant:e} at l = {loss}, xi = {xi}")));
    }
    // (B − √(B² − Bl)) / l, rationalized to avoid cancellation at small l
    Ok(b / (b + discriminant.sqrt()))
}

/// Closed-form allocation for a configuration inside the closed-form domain.
pub fn allocation_closed(cfg: &InterferometerConfig) -> Result<AllocationResult> {
    let r1_opt = optimal_r1_closed(cfg.loss_a, cfg.squeeze_xi)?;
    let delta_phi_opt = closed_form_sensitivity(&InterferometerConfig { r1: r1_opt, ..*cfg })?;
    let delta_phi_half = closed_form_sensitivity(&InterferometerConfig { r1: 0.5, ..*cfg })?;
    Ok(AllocationResult {
        r1_opt,
        delta_phi_opt,
        delta_phi_half,
        improvement_db: optimization_ratio(delta_phi_opt, delta_phi_half)?,
        method: Method::ClosedForm,
    })
}

/// Minimizes the engine sensitivity over R1 ∈ (ε, 1 − ε) by golden-section
/// search, with a coarse scan to confirm unimodality. If the golden-section
/// optimum falls outside the coarse bracket, a dense grid scan is reported
/// instead (`method = GridScan`).
pub fn optimal_r1_numeric(cfg: &InterferometerConfig) -> Result<AllocationResult> {
    cfg.validate()?;
    let objective = |r1: f64| -> Result<f64> { Ok(simulate_sensitivity(&InterferometerConfig { r1, ..*cfg })?.delta_phi) };
    let (lo, hi) = (R1_MARGIN, 1.0 - R1_MARGIN);

    let coarse = grid_scan(objective, lo, hi, COARSE_POINTS)?;
    let step = (hi - lo) / (COARSE_POINTS - 1) as f64;
    let golden = golden_section(objective, lo, hi, R1_TOLERANCE)?;

    let consistent = (golden.x - coarse.x).abs() <= step * (1.0 + 1e-9) && golden.value <= coarse.value * (1.0 + 1e-12);
    let (best, method) = if consistent {
        (golden, Method::GoldenSection)
    } else {
        (grid_scan(objective, lo, hi, FALLBACK_POINTS)?, Method::GridScan)
    };

    let delta_phi_half = objective(0.5)?;
    let (r1_opt, delta_phi_opt) = if best.value <= delta_phi_half { (best.x, best.value) } else { (0.5, delta_phi_half) };
    Ok(AllocationResult {
        r1_opt,
        delta_phi_opt,
        delta_phi_half,
        improvement_db: optimization_ratio(delta_phi_opt, delta_phi_half)?,
        method,
    })
}

/// Loss at which the balanced squeezed interferometer falls back to the SQL:
/// `2(e^{2ξ} − 1) / (3e^{2ξ} − 2)`.
pub fn loss_rate_limit(xi: f64) -> Result<f64> {
    if xi.is_nan() || xi < 0.0 {
        return Err(Error::domain(format!("squeeze parameter must be >= 0, got {xi}")));
    }
    // written in e^{−2ξ} so that ξ → ∞ stays finite
    let y = (-2.0 * xi).exp();
    Ok(2.0 * (1.0 - y) / (3.0 - 2.0 * y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Threshold {
    Reachable { xi: f64, db: f64, r1: f64 },
    Unreachable,
}

impl Threshold {
    pub fn db(&self) -> Option<f64> {
        match self {
            Threshold::Reachable { db, .. } => Some(*db),
            Threshold::Unreachable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingRequirement {
    pub loss: f64,
    /// Optimal first splitter.
    pub vbs: Threshold,
    /// Fixed 50:50 first splitter.
    pub balanced: Threshold,
}

/// Least squeezing for which the interferometer reaches the SQL at the given
/// loss, for the optimal splitter and for a 50:50 splitter. Independent of N.
pub fn min_squeezing_for_sql(loss: f64) -> Result<SqueezingRequirement> {
    if !(loss > 0.0 && loss < 1.0) {
        return Err(Error::domain(format!("loss must lie in (0, 1), got {loss}")));
    }
    let excess = |xi: f64| {
        let r1 = optimal_r1_closed(loss, xi).unwrap_or(0.5);
        normalized_variance(r1, loss, xi) - 1.0
    };
    let vbs = if excess(XI_SEARCH_MAX) > 0.0 {
        Threshold::Unreachable
    } else {
        let xi = bisect(excess, 0.0, XI_SEARCH_MAX, XI_TOLERANCE)?;
        Threshold::Reachable { xi, db: xi_to_db(xi), r1: optimal_r1_closed(loss, xi)? }
    };

    // inverse of the loss-rate limit: e^{−2ξ} = (2 − 3l) / (2 − 2l)
    let y = (2.0 - 3.0 * loss) / (2.0 - 2.0 * loss);
    let balanced = if y > 0.0 {
        let xi = -0.5 * y.ln();
        Threshold::Reachable { xi, db: xi_to_db(xi), r1: 0.5 }
    } else {
        Threshold::Unreachable
    };
    Ok(SqueezingRequirement { loss, vbs, balanced })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::db_to_xi;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_optimum_examples() {
        assert_eq!(optimal_r1_closed(0.0, 1.0).unwrap(), 0.5);
        assert!((optimal_r1_closed(0.7, db_to_xi(10.0)).unwrap() - 0.8314).abs() < 5e-5);
        assert!((optimal_r1_closed(0.9, db_to_xi(2.0)).unwrap() - 0.7962).abs() < 5e-5);
        assert!((optimal_r1_closed(0.427, db_to_xi(2.0)).unwrap() - 0.5963).abs() < 5e-5);
        assert!((optimal_r1_closed(0.7, 0.0).unwrap() - 0.6461).abs() < 5e-5);
        assert!(optimal_r1_closed(1.0, 0.0).is_err());
        assert!(optimal_r1_closed(0.5, -1.0).is_err());
    }

    #[test]
    fn closed_form_matches_textbook_expression() {
        for &l in &[0.05_f64, 0.3, 0.7, 0.95] {
            for &xi in &[0.0_f64, 0.5, 1.2] {
                let b = (1.0 - l) * (-2.0 * xi).exp() + l;
                let direct = (b - (b * b - b * l).sqrt()) / l;
                assert_relative_eq!(optimal_r1_closed(l, xi).unwrap(), direct, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn small_loss_limit_is_continuous() {
        for &xi in &[0.0, 0.5, 1.15] {
            assert!((optimal_r1_closed(1e-8, xi).unwrap() - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_optimum_is_a_brute_force_minimum() {
        for &l in &[0.1, 0.4, 0.7, 0.9] {
            for &db in &[0.0, 2.0, 6.0, 10.0] {
                let xi = db_to_xi(db);
                let r = optimal_r1_closed(l, xi).unwrap();
                let v = normalized_variance(r, l, xi);
                for k in 1..10_000 {
                    assert!(normalized_variance(k as f64 / 1e4, l, xi) >= v * (1.0 - 1e-12));
                }
                assert!(normalized_variance(r + 1e-3, l, xi) >= v && normalized_variance(r - 1e-3, l, xi) >= v);
            }
        }
    }

    #[test]
    fn classical_vbs_gain() {
        let c = InterferometerConfig { loss_a: 0.7, ..Default::default() };
        let a = allocation_closed(&c).unwrap();
        assert!((a.r1_opt - 0.6461).abs() < 5e-5);
        let above_sql = -crate::interferometer::db_vs_sql(a.delta_phi_opt, c.n_photons).unwrap();
        assert!((above_sql - 3.0).abs() < 0.05, "{above_sql}");
        assert!((a.improvement_db - 0.36).abs() < 0.01);
    }

    #[test]
    fn numeric_optimum_examples() {
        let base = InterferometerConfig { n_photons: 1e8, ..Default::default() }.with_squeeze_db(10.0);
        let lossless = optimal_r1_numeric(&base).unwrap();
        assert!((lossless.r1_opt - 0.5).abs() < 1e-5, "{}", lossless.r1_opt);

        let one_arm = optimal_r1_numeric(&InterferometerConfig { loss_a: 0.7, ..base }).unwrap();
        assert_eq!(one_arm.method, Method::GoldenSection);
        assert!((one_arm.r1_opt - optimal_r1_closed(0.7, base.squeeze_xi).unwrap()).abs() < 1e-4);

        let balanced = optimal_r1_numeric(&InterferometerConfig { loss_a: 0.3, loss_b: 0.3, ..base }).unwrap();
        assert!((balanced.r1_opt - 0.5).abs() < 1e-4, "{}", balanced.r1_opt);

        let unbalanced = optimal_r1_numeric(&InterferometerConfig { loss_a: 0.3, loss_b: 0.1, ..base }).unwrap();
        assert!(unbalanced.r1_opt > 0.5 && unbalanced.improvement_db > 0.0);
    }

    #[test]
    fn loss_rate_limit_examples() {
        assert_eq!(loss_rate_limit(0.0).unwrap(), 0.0);
        assert!((loss_rate_limit(0.69).unwrap() - 0.6).abs() < 0.002);
        assert!((loss_rate_limit(2.76).unwrap() - 0.666).abs() < 0.001);
        assert!((loss_rate_limit(f64::INFINITY).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((loss_rate_limit(40.0).unwrap() - 2.0 / 3.0).abs() < 1e-6);
        assert!(loss_rate_limit(-0.1).is_err());
    }

    #[test]
    fn squeezing_requirement_examples() {
        let at_06 = min_squeezing_for_sql(0.6).unwrap();
        let balanced = at_06.balanced.db().unwrap();
        assert!((balanced - 6.0).abs() < 0.05, "{balanced}");
        if let Threshold::Reachable { xi, .. } = at_06.balanced {
            assert!((loss_rate_limit(xi).unwrap() - 0.6).abs() < 1e-12);
        }

        let two_thirds = min_squeezing_for_sql(2.0 / 3.0).unwrap();
        assert!((two_thirds.vbs.db().unwrap() - 6.0).abs() < 0.2);
        assert_eq!(two_thirds.balanced, Threshold::Unreachable);

        let tiny = min_squeezing_for_sql(1e-6).unwrap();
        assert!(tiny.vbs.db().unwrap() < 1e-3);

        // beyond l = 0.8 no squeezing reaches the SQL even with the optimal splitter
        assert_eq!(min_squeezing_for_sql(0.85).unwrap().vbs, Threshold::Unreachable);
        assert!(min_squeezing_for_sql(0.0).is_err());
        assert!(min_squeezing_for_sql(1.0).is_err());
    }

    #[test]
    fn vbs_threshold_sits_on_the_sql() {
        for &l in &[0.2, 0.5, 0.7, 0.79] {
            if let Threshold::Reachable { xi, r1, .. } = min_squeezing_for_sql(l).unwrap().vbs {
                assert!((normalized_variance(r1, l, xi) - 1.0).abs() < 1e-5);
            } else {
                panic!("unreachable at {l}");
            }
        }
    }
}
