//! Projections beyond the observed data: maturation date, lifetime totals,
//! phase-diagram samples, polynomial trend diagnostics, and the truncation
//! stability experiment.

use serde::{Deserialize, Serialize};

use crate::engagement::{fit_bass, BassParams};
use crate::error::{Error, Result};
use crate::growth::{
    calibrate_growth, fitted_path, integrate_span, GrowthParams, LaborDriver, DEFAULT_STEP,
};
use crate::numeric::{bisect_decreasing, quadratic_fit, QuadraticFit};
use crate::series::MonthlySeries;

/// Engagement level, in developers per month, below which a project is
/// considered mature: less than one developer working half time.
pub const DEFAULT_MATURATION_THRESHOLD: f64 = 0.5;

/// Tolerance for the maturation root, in months.
const MATURATION_TOL: f64 = 1e-6;

/// When a project's modeled engagement falls to the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maturation {
    /// Months from inception to maturity.
    pub months: f64,
    /// True when peak engagement is already below the threshold; `months`
    /// is then the caller-supplied current time.
    pub already_mature: bool,
}

/// Solve `m * f(t) = threshold` on the declining branch (`t > t0`).
///
/// The root is bracketed on `[t0, t0 + 200/(p+q)]` — the density decays
/// like `e^{-(p+q)t}` past the peak, so the threshold is crossed well
/// inside that bracket for any realistic `m` — and bisected to 1e-6 months.
/// If even the peak rate is below the threshold the project is already
/// mature and `current_months` is returned, flagged.
pub fn maturation_time(
    bass: &BassParams,
    threshold: f64,
    current_months: f64,
) -> Result<Maturation> {
    if !bass.valid {
        return Err(Error::InvalidFit);
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::Domain(format!(
            "maturation threshold must be positive, got {threshold}"
        )));
    }
    let peak = bass.peak();
    if bass.m * peak.density <= threshold {
        return Ok(Maturation {
            months: current_months,
            already_mature: true,
        });
    }
    let hi = peak.time + 200.0 / (bass.p + bass.q);
    let months = bisect_decreasing(
        |t| bass.engagement_rate(t) - threshold,
        peak.time,
        hi,
        MATURATION_TOL,
    );
    Ok(Maturation {
        months,
        already_mature: false,
    })
}

/// Lifetime projection for one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleForecast {
    /// Months observed.
    pub t_current: u32,
    /// Months from inception to maturity.
    #[serde(rename = "T_maturation")]
    pub t_maturation: f64,
    /// `(T_maturation - t_current) / 12`.
    pub remaining_years: f64,
    /// Lifetime developer-months, `m` from the engagement fit.
    pub lifetime_dev_months: f64,
    /// Modeled cumulative lines at maturity.
    pub lifetime_growth: f64,
    pub already_mature: bool,
    /// `(L_hat, A_hat)` at month ends over `[1, T_maturation]`: the fitted
    /// path over the observed window, then the projection continued from
    /// the last observed stock.
    pub phase: Vec<(f64, f64)>,
}

/// Project the fitted models to maturation.
///
/// Growth is integrated from the observed current stock at `t_current`
/// forward to the maturation time, driven by the engagement rate
/// `m * f(t)`; `lifetime_growth` is the terminal value. A project already
/// past maturity gets no extrapolation span: lifetime growth equals the
/// observed stock and the phase path ends at the current point.
pub fn project_lifecycle(
    bass: &BassParams,
    growth: &GrowthParams,
    series: &MonthlySeries,
    threshold: f64,
) -> Result<LifecycleForecast> {
    if !bass.valid {
        return Err(Error::InvalidFit);
    }
    let t_current = series.len() as u32;
    let maturation = maturation_time(bass, threshold, t_current as f64)?;
    let observed_stock = series.total_lines() as f64;
    let labor = LaborDriver::Fitted(*bass);

    let mut phase: Vec<(f64, f64)> = Vec::new();
    let fitted = fitted_path(growth, &labor, series.len())?;
    for t in 1..=series.len() {
        let t = t as f64;
        phase.push((labor.at(t), fitted.at(t).expect("month end on grid")));
    }

    let lifetime_growth = if maturation.already_mature || maturation.months <= t_current as f64 {
        observed_stock
    } else {
        let projection = integrate_span(
            growth,
            |t| labor.at(t),
            t_current as f64,
            maturation.months,
            observed_stock,
            DEFAULT_STEP,
        )?;
        let mut t = t_current as f64 + 1.0;
        while t < maturation.months {
            phase.push((labor.at(t), projection.interpolate(t)));
            t += 1.0;
        }
        phase.push((labor.at(maturation.months), projection.terminal()));
        projection.terminal()
    };

    Ok(LifecycleForecast {
        t_current,
        t_maturation: maturation.months,
        remaining_years: (maturation.months - t_current as f64) / 12.0,
        lifetime_dev_months: bass.m,
        lifetime_growth,
        already_mature: maturation.already_mature,
        phase,
    })
}

/// Which series column [`poly_trend`] fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendTarget {
    CumulativeGrowth,
    Developers,
}

/// Least-squares quadratic trend in months since inception. Diagnostic
/// only: a cumulative-growth series that a quadratic fits well is the
/// visual signature of the life-cycle shape.
pub fn poly_trend(series: &MonthlySeries, target: TrendTarget) -> Result<QuadraticFit> {
    let t: Vec<f64> = (1..=series.len()).map(|i| i as f64).collect();
    let y: Vec<f64> = match target {
        TrendTarget::CumulativeGrowth => series.cum_lines.iter().map(|&a| a as f64).collect(),
        TrendTarget::Developers => series.developers.iter().map(|&d| d as f64).collect(),
    };
    quadratic_fit(&t, &y)
}

/// Both fitted models for one calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedModels {
    pub bass: BassParams,
    pub growth: GrowthParams,
}

/// Outcome of the truncation stability experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub full_fit: FittedModels,
    /// Fit on the first fraction of months. `None` when the truncated
    /// engagement fit is invalid (reported, not an error).
    pub truncated_fit: Option<FittedModels>,
    /// Max over month ends of `|full - truncated| / max(full, eps)` for the
    /// growth paths, over `[1, T_maturation(full)]`.
    pub growth_divergence: Option<f64>,
    /// Same metric for the engagement-rate paths.
    pub engagement_divergence: Option<f64>,
}

fn max_relative_gap(reference: &[f64], other: &[f64]) -> f64 {
    const EPS: f64 = 1e-9;
    reference
        .iter()
        .zip(other)
        .map(|(&a, &b)| (a - b).abs() / a.max(EPS))
        .fold(0.0, f64::max)
}

/// Re-fit on the first `fraction` of months and compare projections.
///
/// Both parameter sets are projected over the full fit's maturation horizon
/// from the same first-month anchor, and the maximum relative gap between
/// the two growth paths (and the two engagement-rate paths) is reported. A
/// model worth trusting for lifetime forecasts should give nearly the same
/// projection when fitted mid-life; `fraction = 1.0` compares a fit with
/// itself and reports exactly zero.
pub fn stability_experiment(
    series: &MonthlySeries,
    fraction: f64,
    threshold: f64,
) -> Result<StabilityResult> {
    if !(0.0 < fraction && fraction <= 1.0) {
        return Err(Error::Domain(format!(
            "truncation fraction must be in (0, 1], got {fraction}"
        )));
    }
    let bass_full = fit_bass(series)?;
    let growth_full = calibrate_growth(series, &bass_full)?;
    let full_fit = FittedModels {
        bass: bass_full,
        growth: growth_full.params,
    };
    if !bass_full.valid {
        return Ok(StabilityResult {
            full_fit,
            truncated_fit: None,
            growth_divergence: None,
            engagement_divergence: None,
        });
    }

    let keep = ((series.len() as f64) * fraction).floor() as usize;
    let truncated = series.truncated(keep);
    let bass_trunc = fit_bass(&truncated)?;
    if !bass_trunc.valid {
        return Ok(StabilityResult {
            full_fit,
            truncated_fit: None,
            growth_divergence: None,
            engagement_divergence: None,
        });
    }
    let growth_trunc = calibrate_growth(&truncated, &bass_trunc)?;

    let horizon = maturation_time(&bass_full, threshold, series.len() as f64)?
        .months
        .ceil()
        .max(series.len() as f64) as usize;

    let labor_full = LaborDriver::Fitted(bass_full);
    let labor_trunc = LaborDriver::Fitted(bass_trunc);
    let path_full = fitted_path(&growth_full.params, &labor_full, horizon)?;
    let path_trunc = fitted_path(&growth_trunc.params, &labor_trunc, horizon)?;
    let ends: Vec<f64> = (1..=horizon).map(|t| t as f64).collect();
    let a_full: Vec<f64> = ends.iter().map(|&t| path_full.at(t).unwrap()).collect();
    let a_trunc: Vec<f64> = ends.iter().map(|&t| path_trunc.at(t).unwrap()).collect();
    let l_full: Vec<f64> = ends.iter().map(|&t| labor_full.at(t)).collect();
    let l_trunc: Vec<f64> = ends.iter().map(|&t| labor_trunc.at(t)).collect();

    Ok(StabilityResult {
        full_fit,
        truncated_fit: Some(FittedModels {
            bass: bass_trunc,
            growth: growth_trunc.params,
        }),
        growth_divergence: Some(max_relative_gap(&a_full, &a_trunc)),
        engagement_divergence: Some(max_relative_gap(&l_full, &l_trunc)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use approx::assert_relative_eq;

    fn pandas_bass() -> BassParams {
        BassParams::from_rates(0.00084, 0.02686, 9448.61510)
    }

    #[test]
    fn maturation_matches_threshold() {
        let bass = pandas_bass();
        let mat = maturation_time(&bass, 0.5, 199.0).unwrap();
        assert!(!mat.already_mature);
        assert!((bass.engagement_rate(mat.months) - 0.5).abs() < 1e-6);
        // root is on the declining branch
        assert!(mat.months > bass.peak().time);
    }

    #[test]
    fn maturation_decreases_with_threshold() {
        let bass = pandas_bass();
        let lo = maturation_time(&bass, 0.5, 0.0).unwrap().months;
        let hi = maturation_time(&bass, 5.0, 0.0).unwrap().months;
        assert!(hi < lo);
    }

    #[test]
    fn already_mature_when_peak_below_threshold() {
        // m * f0 = 0.4 < 0.5
        let base = BassParams::from_rates(0.01, 0.10, 1000.0);
        let f0 = base.peak().density;
        let bass = BassParams::from_rates(0.01, 0.10, 0.4 / f0);
        let mat = maturation_time(&bass, 0.5, 42.0).unwrap();
        assert!(mat.already_mature);
        assert_eq!(mat.months, 42.0);
    }

    #[test]
    fn maturation_rejects_invalid_fit() {
        let invalid = BassParams::from_betas(1.0, 0.1, 1.0, 0.0);
        assert!(maturation_time(&invalid, 0.5, 0.0).is_err());
    }

    #[test]
    fn trend_recovers_exact_quadratic() {
        // A(t) = 2t^2 + 3t + 1 at month ends t = 1..n
        let mut lines = Vec::new();
        let mut prev = 0u64;
        for t in 1..=24u64 {
            let a = 2 * t * t + 3 * t + 1;
            lines.push(a - prev);
            prev = a;
        }
        let s = crate::series::MonthlySeries::from_monthly(
            "quad",
            "2020-01".parse().unwrap(),
            vec![1; 24],
            lines,
        );
        let fit = poly_trend(&s, TrendTarget::CumulativeGrowth).unwrap();
        assert_relative_eq!(fit.c2, 2.0, max_relative = 1e-9);
        assert_relative_eq!(fit.c1, 3.0, max_relative = 1e-9);
        assert_relative_eq!(fit.c0, 1.0, max_relative = 1e-6);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn projection_already_mature_keeps_observed_stock() {
        let series = synth::engagement_series("old", 0.02, 0.2, 300.0, 120);
        let bass = fit_bass(&series).unwrap();
        assert!(bass.valid);
        // by month 120 this small project is far past m*f = 0.5
        let growth = GrowthParams::new(10.0, 1.0, 0.0)
            .with_initial(series.cum_lines[0] as f64, series.developers[0] as f64);
        let fc = project_lifecycle(&bass, &growth, &series, 0.5).unwrap();
        if fc.already_mature || fc.t_maturation <= 120.0 {
            assert_eq!(fc.lifetime_growth, series.total_lines() as f64);
            assert!(fc.phase.len() <= 120);
        } else {
            panic!("expected a mature project, got T={}", fc.t_maturation);
        }
    }

    #[test]
    fn remaining_years_arithmetic() {
        let bass = pandas_bass();
        let series = synth::reference_fixture();
        let growth = GrowthParams::new(
            synth::fixture::GAMMA,
            synth::fixture::LAMBDA,
            synth::fixture::PHI,
        )
        .with_initial(series.cum_lines[0] as f64, series.developers[0] as f64);
        let fc = project_lifecycle(&bass, &growth, &series, 0.5).unwrap();
        assert_relative_eq!(
            fc.remaining_years,
            (fc.t_maturation - fc.t_current as f64) / 12.0,
            max_relative = 1e-15
        );
        // phase: growth non-decreasing along the path
        for w in fc.phase.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-9);
        }
        // engagement rises then falls (single sign change in differences)
        let l: Vec<f64> = fc.phase.iter().map(|&(l, _)| l).collect();
        let mut switches = 0;
        let mut rising = true;
        for w in l.windows(2) {
            let up = w[1] > w[0];
            if rising && !up {
                rising = false;
                switches += 1;
            } else if !rising && up {
                switches += 1;
            }
        }
        assert!(
            switches <= 1,
            "engagement path not unimodal: {switches} switches"
        );
    }

    #[test]
    fn stability_identical_at_full_fraction() {
        let series = synth::engagement_series("stable", 0.005, 0.06, 2000.0, 90);
        let r = stability_experiment(&series, 1.0, 0.5).unwrap();
        assert_eq!(r.growth_divergence, Some(0.0));
        assert_eq!(r.engagement_divergence, Some(0.0));
    }

    #[test]
    fn stability_rejects_bad_fraction() {
        let series = synth::engagement_series("s", 0.005, 0.06, 2000.0, 90);
        assert!(stability_experiment(&series, 0.0, 0.5).is_err());
        assert!(stability_experiment(&series, 1.5, 0.5).is_err());
    }
}
