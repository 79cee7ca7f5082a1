//! Developer-engagement diffusion model.
//!
//! Monthly engagement is modeled as a diffusion with two driving forces: an
//! independent propensity `p` to contribute in any month, and an imitation
//! (network) effect `q` proportional to the fraction of lifetime engagement
//! already realized. Writing `F(t)` for the cumulative engagement fraction,
//! the hazard form is
//!
//! ```text
//! f(t) / (1 - F(t)) = p + q * F(t),      F(0) = 0
//! ```
//!
//! which has the closed-form solution
//!
//! ```text
//! F(t) = p (e^{(p+q)t} - 1) / (p e^{(p+q)t} + q)
//! f(t) = p (p+q)^2 e^{(p+q)t} / (p e^{(p+q)t} + q)^2
//! ```
//!
//! With `m` the lifetime total of developer-months, the expected number of
//! developers active in month `t` is `m * f(t)`. Fitting works through the
//! algebraic identity `L = beta0 + beta1 * cum + beta2 * cum^2` with
//! `beta0 = p*m`, `beta1 = q - p`, `beta2 = -q/m`: ordinary least squares
//! on observed monthly counts against cumulative engagement recovers the
//! betas, and the positive root of `beta2 m^2 + beta1 m + beta0 = 0` maps
//! them back to `(p, q, m)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quadratic_fit;
use crate::series::MonthlySeries;

/// Fewest months a series needs before [`fit_bass`] will attempt a fit.
pub const MIN_FIT_MONTHS: usize = 6;

/// Fitted engagement-model parameters.
///
/// `valid` is false when the regression produced no admissible model
/// (negative discriminant, no positive lifetime root, or `p <= 0` /
/// `q <= 0`). Invalid fits are reported rather than raised so that batch
/// runs can print them alongside good fits; the curve evaluators require
/// `valid` and return errors otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BassParams {
    /// Independent-engagement coefficient, per month.
    pub p: f64,
    /// Imitation (network) coefficient, per month.
    pub q: f64,
    /// Lifetime developer-months.
    pub m: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub r_squared: f64,
    pub valid: bool,
}

impl BassParams {
    /// Construct from rates, deriving the regression betas from the
    /// identities `beta0 = p*m`, `beta1 = q - p`, `beta2 = -q/m`.
    pub fn from_rates(p: f64, q: f64, m: f64) -> BassParams {
        BassParams {
            p,
            q,
            m,
            beta0: p * m,
            beta1: q - p,
            beta2: -q / m,
            r_squared: f64::NAN,
            valid: p > 0.0 && q > 0.0 && m > 0.0,
        }
    }

    /// Recover `(p, q, m)` from regression coefficients.
    ///
    /// Solves `beta2 m^2 + beta1 m + beta0 = 0` with the numerically stable
    /// quadratic formula and keeps positive roots. When both roots are
    /// positive the one exceeding `observed_cum` (engagement already seen;
    /// lifetime engagement cannot be less) that also yields `p > 0, q > 0`
    /// is preferred, the larger root on a tie. Inadmissible coefficient
    /// combinations produce `valid = false`, not an error.
    pub fn from_betas(beta0: f64, beta1: f64, beta2: f64, observed_cum: f64) -> BassParams {
        let mut params = BassParams {
            p: f64::NAN,
            q: f64::NAN,
            m: f64::NAN,
            beta0,
            beta1,
            beta2,
            r_squared: f64::NAN,
            valid: false,
        };
        if beta2 == 0.0 {
            return params;
        }
        let disc = beta1 * beta1 - 4.0 * beta0 * beta2;
        if disc < 0.0 {
            return params;
        }
        // roots via q_ns = -(beta1 + sign(beta1) sqrt(disc)) / 2 to avoid
        // cancellation between -beta1 and the square root
        let q_ns = -0.5 * (beta1 + beta1.signum() * disc.sqrt());
        let mut roots = [q_ns / beta2, beta0 / q_ns];
        roots.sort_by(f64::total_cmp);
        let admissible = |m: f64| m > 0.0 && beta0 / m > 0.0 && -m * beta2 > 0.0;
        let preferred = roots
            .iter()
            .copied()
            .filter(|&m| admissible(m) && m > observed_cum)
            .fold(f64::NAN, f64::max);
        let m = if preferred.is_finite() {
            preferred
        } else {
            roots
                .iter()
                .copied()
                .filter(|&m| m > 0.0)
                .fold(f64::NAN, f64::max)
        };
        if !m.is_finite() {
            return params;
        }
        params.m = m;
        params.p = beta0 / m;
        params.q = -m * beta2;
        params.valid = params.p > 0.0 && params.q > 0.0 && params.m > 0.0;
        params
    }

    fn require_valid(&self) -> Result<()> {
        if self.valid {
            Ok(())
        } else {
            Err(Error::InvalidFit)
        }
    }

    /// Cumulative engagement fraction `F(t)`.
    ///
    /// Evaluated as `p (1 - e^{-(p+q)t}) / (p + q e^{-(p+q)t})`, which is
    /// the closed form rewritten so the exponential argument is never
    /// positive; `e^{(p+q)t}` itself overflows for long horizons.
    pub fn cumulative(&self, t: f64) -> f64 {
        let e = (-(self.p + self.q) * t).exp();
        self.p * (1.0 - e) / (self.p + self.q * e)
    }

    /// Engagement density `f(t)`, per month. Same overflow-safe rewrite as
    /// [`BassParams::cumulative`].
    pub fn density(&self, t: f64) -> f64 {
        let s = self.p + self.q;
        let e = (-s * t).exp();
        let denom = self.p + self.q * e;
        self.p * s * s * e / (denom * denom)
    }

    /// Continuous engagement rate `m * f(t)`, in developers per month.
    pub fn engagement_rate(&self, t: f64) -> f64 {
        self.m * self.density(t)
    }

    /// Expected developer count for calendar month `index` (0-based; month
    /// `i` spans model time `[i, i+1)`): the increment `m (F(i+1) - F(i))`.
    ///
    /// Counts are integrals of the engagement rate over a month, so the
    /// discrete increment is the right monthly prediction; the continuous
    /// rate [`BassParams::engagement_rate`] is for thresholds and plotting.
    pub fn predict_monthly(&self, index: usize) -> f64 {
        let t = index as f64;
        self.m * (self.cumulative(t + 1.0) - self.cumulative(t))
    }

    /// Time and height of peak engagement density.
    pub fn peak(&self) -> Peak {
        let (p, q) = (self.p, self.q);
        if q <= p {
            return Peak {
                time: 0.0,
                density: self.density(0.0),
                at_origin: true,
            };
        }
        let s = p + q;
        Peak {
            time: (q / p).ln() / s,
            density: s * s / (4.0 * q),
            at_origin: false,
        }
    }

    /// Rescale onto the shape-universal engagement curve.
    ///
    /// Time is divided by the peak time `t0` and density by the peak height
    /// `f0`; in those coordinates every admissible parameter pair collapses
    /// onto `f'(t') = sech^2((alpha/2)(1 - t'))` with `alpha = ln(q/p)`, so
    /// the curve family has a single shape parameter.
    pub fn normalize(&self, grid: &[f64]) -> Result<NormalizedCurve> {
        self.require_valid()?;
        if self.q <= self.p {
            return Err(Error::NormalizationUndefined);
        }
        let peak = self.peak();
        let samples = grid
            .iter()
            .map(|&t| (t / peak.time, self.density(t) / peak.density))
            .collect();
        Ok(NormalizedCurve {
            t0: peak.time,
            f0: peak.density,
            alpha: (self.q / self.p).ln(),
            samples,
        })
    }
}

/// Peak of the engagement density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Months since inception. Zero when `q <= p`.
    pub time: f64,
    /// Density height `f(t0)`, per month.
    pub density: f64,
    /// True when `q <= p` and the density is maximal at `t = 0`.
    pub at_origin: bool,
}

/// Engagement curve rescaled to peak at `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCurve {
    pub t0: f64,
    pub f0: f64,
    pub alpha: f64,
    /// `(t', f')` pairs with `t' = t/t0`, `f' = f(t)/f0`.
    pub samples: Vec<(f64, f64)>,
}

impl NormalizedCurve {
    /// The collapsed shape `sech^2((alpha/2)(1 - t'))`.
    pub fn shape(&self, t_prime: f64) -> f64 {
        let x = 0.5 * self.alpha * (1.0 - t_prime);
        let sech = 1.0 / x.cosh();
        sech * sech
    }
}

/// Fit the engagement model to a monthly series by quadratic least squares.
///
/// Monthly counts `L[i]` are regressed on the cumulative engagement at the
/// middle of month `i`, `(cum[i-1] + cum[i]) / 2` with `cum[-1] = 0`. The
/// monthly count is the integral of the engagement rate over the month, so
/// the mid-month cumulative is the regressor that keeps the discrete data
/// on the continuous-model identity; regressing on the start-of-month
/// cumulative instead biases `p` upward by several percent even on exact
/// model data.
///
/// Returns an error for series shorter than [`MIN_FIT_MONTHS`] or with a
/// degenerate regressor; inadmissible fits (negative `p` or `q`) return
/// normally with `valid = false`.
pub fn fit_bass(series: &MonthlySeries) -> Result<BassParams> {
    let counts: Vec<f64> = series.developers.iter().map(|&d| d as f64).collect();
    fit_engagement_counts(&counts)
}

/// [`fit_bass`] on raw monthly counts. Counts need not be integers, which
/// lets exact model-generated data be fitted without quantization.
pub fn fit_engagement_counts(counts: &[f64]) -> Result<BassParams> {
    let n = counts.len();
    if n < MIN_FIT_MONTHS {
        return Err(Error::SeriesTooShort {
            needed: MIN_FIT_MONTHS,
            got: n,
        });
    }
    let mut cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &c in counts {
        acc += c;
        cum.push(acc);
    }
    let distinct = {
        let mut vals = cum.clone();
        vals.dedup();
        vals.len()
    };
    if distinct < 3 {
        return Err(Error::DegenerateRegression(
            "cumulative engagement takes fewer than 3 distinct values".into(),
        ));
    }
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let before = if i == 0 { 0.0 } else { cum[i - 1] };
            0.5 * (before + cum[i])
        })
        .collect();
    let fit = quadratic_fit(&x, counts)?;
    let mut params = BassParams::from_betas(fit.c0, fit.c1, fit.c2, acc);
    params.r_squared = fit.r_squared;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn reference() -> BassParams {
        BassParams::from_rates(0.01, 0.10, 1000.0)
    }

    #[test]
    fn cumulative_boundary_values() {
        let b = reference();
        assert_eq!(b.cumulative(0.0), 0.0);
        assert!((b.cumulative(2000.0) - 1.0).abs() < 1e-6);
        // overflow-safe far beyond any horizon
        assert!((b.cumulative(1.0e6) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_at_zero_is_p() {
        let b = reference();
        assert_relative_eq!(b.density(0.0), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn density_at_peak_matches_closed_form() {
        let b = reference();
        let peak = b.peak();
        assert_relative_eq!(b.density(peak.time), peak.density, max_relative = 1e-12);
        // ln(10)/0.11
        assert_abs_diff_eq!(peak.time, 10f64.ln() / 0.11, epsilon = 1e-12);
        assert_abs_diff_eq!(peak.time, 20.93, epsilon = 5e-3);
        assert!(!peak.at_origin);
    }

    #[test]
    fn peak_at_origin_when_q_not_above_p() {
        let b = BassParams::from_rates(0.05, 0.05, 100.0);
        let peak = b.peak();
        assert!(peak.at_origin);
        assert_eq!(peak.time, 0.0);
        assert_relative_eq!(peak.density, 0.05, max_relative = 1e-12);
        assert!(matches!(
            b.normalize(&[0.0]),
            Err(Error::NormalizationUndefined)
        ));
    }

    #[test]
    fn monthly_predictions_telescope_to_m() {
        let b = reference();
        let total: f64 = (0..4000).map(|i| b.predict_monthly(i)).sum();
        assert_relative_eq!(total, b.m, max_relative = 1e-9);
        assert!(b.predict_monthly(0) >= 0.0);
    }

    #[test]
    fn beta_round_trip_is_exact() {
        let b = reference();
        let back = BassParams::from_betas(b.beta0, b.beta1, b.beta2, 0.0);
        assert_relative_eq!(back.p, b.p, max_relative = 1e-10);
        assert_relative_eq!(back.q, b.q, max_relative = 1e-10);
        assert_relative_eq!(back.m, b.m, max_relative = 1e-10);
    }

    #[test]
    fn from_betas_flags_inadmissible() {
        // negative discriminant
        let bad = BassParams::from_betas(1.0, 0.1, 1.0, 0.0);
        assert!(!bad.valid);
        // p would be negative
        let bad = BassParams::from_betas(-1.0, 0.05, -1e-4, 0.0);
        assert!(!bad.valid);
    }

    #[test]
    fn fit_recovers_generating_parameters() {
        let series = synth::engagement_series("synthetic", 0.01, 0.10, 1000.0, 120);
        let fit = fit_bass(&series).unwrap();
        assert!(fit.valid);
        assert_relative_eq!(fit.p, 0.01, max_relative = 0.01);
        assert_relative_eq!(fit.q, 0.10, max_relative = 0.01);
        assert_relative_eq!(fit.m, 1000.0, max_relative = 0.01);
    }

    #[test]
    fn fit_rejects_short_series() {
        let series = synth::engagement_series("short", 0.01, 0.10, 1000.0, 4);
        assert!(matches!(
            fit_bass(&series),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn fit_rejects_constant_cumulative() {
        let series = crate::series::MonthlySeries::from_monthly(
            "flat",
            "2020-01".parse().unwrap(),
            vec![0; 12],
            vec![0; 12],
        );
        assert!(fit_bass(&series).is_err());
    }

    #[test]
    fn normalized_peak_maps_to_unit() {
        let b = reference();
        let peak = b.peak();
        let curve = b.normalize(&[peak.time]).unwrap();
        let (t_prime, f_prime) = curve.samples[0];
        assert_abs_diff_eq!(t_prime, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f_prime, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normalized_curve_matches_sech_shape() {
        let b = reference();
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
        let curve = b.normalize(&grid).unwrap();
        for &(tp, fp) in &curve.samples {
            assert_abs_diff_eq!(fp, curve.shape(tp), epsilon = 1e-9);
        }
        // endpoint: f'(0) = sech^2(alpha/2)
        let alpha = (b.q / b.p).ln();
        let expect = {
            let s = 1.0 / (0.5 * alpha).cosh();
            s * s
        };
        assert_abs_diff_eq!(curve.samples[0].1, expect, epsilon = 1e-9);
    }

    #[test]
    fn shape_depends_only_on_ratio() {
        // equal q/p, different scales: identical normalized curves
        let a = BassParams::from_rates(0.01, 0.10, 500.0);
        let b = BassParams::from_rates(0.03, 0.30, 9000.0);
        let ta = a.peak().time;
        let tb = b.peak().time;
        for k in 0..=40 {
            let tp = 0.05 * k as f64 + 0.05;
            let fa = a.density(tp * ta) / a.peak().density;
            let fb = b.density(tp * tb) / b.peak().density;
            assert_abs_diff_eq!(fa, fb, epsilon = 1e-10);
        }
    }
}
