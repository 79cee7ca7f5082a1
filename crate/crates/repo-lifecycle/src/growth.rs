//! Endogenous code-growth dynamics.
//!
//! Cumulative lines changed `A(t)` evolve under a Cobb-Douglas production
//! rule driven by developer labor `L(t)`:
//!
//! ```text
//! dA/dt = gamma * L(t)^lambda * A(t)^phi
//! ```
//!
//! `gamma` is an efficiency scale, `lambda` the labor elasticity, and `phi`
//! the spillover of existing code on new growth (`phi > 0`: prior work
//! accelerates new work; `phi < 0`: growth gets harder as the codebase
//! accumulates). Two closed forms are available — exponential labor
//! `L(t) = L0 e^{nt}` and constant labor — and a fixed-step RK4 integrator
//! handles arbitrary labor paths, in particular the fitted engagement rate
//! `m * f(t)`. Calibration minimizes the mean squared error between the
//! integrated path and observed cumulative lines over `(gamma, lambda, phi)`
//! with a bounded multi-start simplex search; `gamma` is searched in log
//! space since fitted values span several orders of magnitude.

use serde::{Deserialize, Serialize};

use crate::engagement::BassParams;
use crate::error::{Error, Result};
use crate::numeric::{nelder_mead, NelderMeadOptions};
use crate::series::MonthlySeries;

/// Default RK4 step, in months.
pub const DEFAULT_STEP: f64 = 0.25;

/// Labor floor for `L^lambda`: zero-developer months would otherwise send
/// negative elasticities to infinity.
pub const LABOR_FLOOR: f64 = 1e-6;

/// Search box for calibration, `gamma` in natural log.
pub const LOG_GAMMA_BOUNDS: (f64, f64) = (-10.0, 20.0);
pub const LAMBDA_BOUNDS: (f64, f64) = (-5.0, 5.0);
/// `phi` is kept below 1: the closed form is valid for `phi != 1` and the
/// objective becomes unstable approaching the singularity.
pub const PHI_BOUNDS: (f64, f64) = (-3.0, 0.99);

/// Parameters of the growth rule, plus the simple-model quantities
/// (exponential labor rate `n`, initial conditions) that the closed forms
/// use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub gamma: f64,
    pub lambda: f64,
    pub phi: f64,
    /// Exponential labor rate for the simple model; not fitted by
    /// [`calibrate_growth`].
    pub n: f64,
    /// Initial cumulative lines, floored at 1: `A = 0` is singular for
    /// negative `phi`.
    #[serde(rename = "A0")]
    pub a0: f64,
    /// Initial developers.
    #[serde(rename = "L0")]
    pub l0: f64,
}

impl GrowthParams {
    pub fn new(gamma: f64, lambda: f64, phi: f64) -> GrowthParams {
        GrowthParams {
            gamma,
            lambda,
            phi,
            n: 0.0,
            a0: 1.0,
            l0: 1.0,
        }
    }

    pub fn with_initial(mut self, a0: f64, l0: f64) -> GrowthParams {
        self.a0 = a0.max(1.0);
        self.l0 = l0;
        self
    }

    pub fn with_labor_rate(mut self, n: f64) -> GrowthParams {
        self.n = n;
        self
    }

    /// Growth rate `dA/dt` at a given labor level and stock.
    fn rate(&self, labor: f64, stock: f64) -> f64 {
        self.gamma * labor.max(LABOR_FLOOR).powf(self.lambda) * stock.powf(self.phi)
    }
}

/// Integrated growth trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPath {
    /// Grid times, in months.
    pub months: Vec<f64>,
    #[serde(rename = "A_hat")]
    pub a_hat: Vec<f64>,
    #[serde(rename = "L_hat")]
    pub l_hat: Vec<f64>,
}

impl GrowthPath {
    /// Value at a grid time, if that time is on the grid.
    pub fn at(&self, t: f64) -> Option<f64> {
        let h = self.months.get(1)? - self.months[0];
        let idx = (t - self.months[0]) / h;
        let rounded = idx.round();
        if (idx - rounded).abs() < 1e-9 {
            self.a_hat.get(rounded as usize).copied()
        } else {
            None
        }
    }

    pub fn terminal(&self) -> f64 {
        *self.a_hat.last().expect("paths have at least one point")
    }

    /// Linear interpolation between grid points; clamps outside the span.
    pub fn interpolate(&self, t: f64) -> f64 {
        let h = match self.months.get(1) {
            Some(&t1) => t1 - self.months[0],
            None => return self.a_hat[0],
        };
        let pos = (t - self.months[0]) / h;
        if pos <= 0.0 {
            return self.a_hat[0];
        }
        let idx = pos.floor() as usize;
        if idx + 1 >= self.a_hat.len() {
            return self.terminal();
        }
        let frac = pos - idx as f64;
        self.a_hat[idx] * (1.0 - frac) + self.a_hat[idx + 1] * frac
    }
}

/// Closed-form `A(t)` under exponential labor `L(t) = L0 e^{nt}`.
///
/// ```text
/// A(t) = [ k e^{lambda n t} + A0^{1-phi} - k ]^{1/(1-phi)},
/// k = (1-phi) gamma L0^lambda / (lambda n)
/// ```
///
/// Valid for `phi != 1`, `n > 0`, `lambda != 0`. Returns a domain error when
/// the bracketed base goes non-positive, which happens for `phi > 1` or
/// extreme parameter combinations where the real solution ceases to exist.
pub fn closed_form_a(params: &GrowthParams, t: f64) -> Result<f64> {
    if params.phi == 1.0 {
        return Err(Error::Domain("closed form requires phi != 1".into()));
    }
    if params.n <= 0.0 {
        return Err(Error::Domain(
            "closed form requires labor rate n > 0".into(),
        ));
    }
    if params.lambda == 0.0 {
        return Err(Error::Domain(
            "closed form requires lambda != 0; use the constant-labor form or the integrator"
                .into(),
        ));
    }
    let one_minus_phi = 1.0 - params.phi;
    let k =
        one_minus_phi * params.gamma * params.l0.powf(params.lambda) / (params.lambda * params.n);
    let base = k * (params.lambda * params.n * t).exp() + params.a0.powf(one_minus_phi) - k;
    if base <= 0.0 || !base.is_finite() {
        return Err(Error::Domain(format!(
            "solution left real domain at t={t} (base {base})"
        )));
    }
    Ok(base.powf(1.0 / one_minus_phi))
}

/// Closed-form `A(t)` under constant labor `L`.
///
/// ```text
/// A(t) = [ (1-phi) (gamma L^lambda t + A0^{1-phi}/(1-phi)) ]^{1/(1-phi)}
/// ```
pub fn closed_form_a_const_labor(params: &GrowthParams, labor: f64, t: f64) -> Result<f64> {
    if params.phi == 1.0 {
        return Err(Error::Domain("closed form requires phi != 1".into()));
    }
    let one_minus_phi = 1.0 - params.phi;
    let base = one_minus_phi
        * (params.gamma * labor.powf(params.lambda) * t
            + params.a0.powf(one_minus_phi) / one_minus_phi);
    if base <= 0.0 || !base.is_finite() {
        return Err(Error::Domain(format!(
            "solution left real domain at t={t} (base {base})"
        )));
    }
    Ok(base.powf(1.0 / one_minus_phi))
}

/// Integrate the growth rule over `[0, horizon]` from `A(0) = a0` with the
/// default step. See [`integrate_span`].
pub fn integrate<F>(params: &GrowthParams, labor: F, horizon: f64, a0: f64) -> Result<GrowthPath>
where
    F: Fn(f64) -> f64,
{
    integrate_span(params, labor, 0.0, horizon, a0, DEFAULT_STEP)
}

/// Fixed-step 4th-order Runge-Kutta integration of `dA/dt` over
/// `[t_start, t_end]` from `A(t_start) = a0`.
///
/// The step is adjusted down so the span divides evenly. Labor is clamped
/// to [`LABOR_FLOOR`] inside the rate and the state is clamped to the `a0`
/// floor (growth is non-negative for admissible parameters, so this only
/// guards pathological inputs). A non-finite state aborts with the step
/// index and the parameters that produced it.
pub fn integrate_span<F>(
    params: &GrowthParams,
    labor: F,
    t_start: f64,
    t_end: f64,
    a0: f64,
    step: f64,
) -> Result<GrowthPath>
where
    F: Fn(f64) -> f64,
{
    if t_end.is_nan() || t_end <= t_start {
        return Err(Error::Domain(format!(
            "integration span is empty: [{t_start}, {t_end}]"
        )));
    }
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let a0 = a0.max(1.0);
    let steps = ((t_end - t_start) / step).ceil().max(1.0) as usize;
    let h = (t_end - t_start) / steps as f64;
    let mut months = Vec::with_capacity(steps + 1);
    let mut a_hat = Vec::with_capacity(steps + 1);
    let mut l_hat = Vec::with_capacity(steps + 1);
    let mut a = a0;
    months.push(t_start);
    a_hat.push(a);
    l_hat.push(labor(t_start));
    for i in 0..steps {
        let t = t_start + i as f64 * h;
        let k1 = params.rate(labor(t), a);
        let k2 = params.rate(labor(t + 0.5 * h), a + 0.5 * h * k1);
        let k3 = params.rate(labor(t + 0.5 * h), a + 0.5 * h * k2);
        let k4 = params.rate(labor(t + h), a + h * k3);
        a = (a + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).max(a0);
        if !a.is_finite() {
            return Err(Error::NonFiniteState {
                step: i,
                gamma: params.gamma,
                lambda: params.lambda,
                phi: params.phi,
            });
        }
        let t_next = t_start + (i + 1) as f64 * h;
        months.push(t_next);
        a_hat.push(a);
        l_hat.push(labor(t_next));
    }
    Ok(GrowthPath {
        months,
        a_hat,
        l_hat,
    })
}

/// The labor driver used for calibration and projection: the continuous
/// engagement rate `m * f(t)` when the fit is valid, and the observed
/// monthly counts as a step function otherwise.
pub enum LaborDriver<'a> {
    Fitted(BassParams),
    Observed(&'a [u32]),
}

impl LaborDriver<'_> {
    pub fn from_fit<'a>(bass: &BassParams, series: &'a MonthlySeries) -> LaborDriver<'a> {
        if bass.valid {
            LaborDriver::Fitted(*bass)
        } else {
            LaborDriver::Observed(&series.developers)
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            LaborDriver::Fitted(bass) => bass.engagement_rate(t),
            LaborDriver::Observed(counts) => {
                if counts.is_empty() {
                    return 0.0;
                }
                let idx = (t.floor().max(0.0) as usize).min(counts.len() - 1);
                counts[idx] as f64
            }
        }
    }
}

/// Result of [`calibrate_growth`] along with fit diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub params: GrowthParams,
    /// Mean squared error of the fitted path against observed cumulative lines.
    pub objective: f64,
}

/// Objective for a candidate `(gamma, lambda, phi)`: the mean squared error
/// `(1/T) sum_t (A_hat(t) - A(t))^2` over month-end grid points. The fitted
/// path is anchored at the end of the first month, `A_hat(1) = max(A[0], 1)`.
fn calibration_objective(
    gamma: f64,
    lambda: f64,
    phi: f64,
    labor: &LaborDriver<'_>,
    observed: &[u64],
    a0: f64,
    step: f64,
) -> f64 {
    let t_end = observed.len() as f64;
    let params = GrowthParams::new(gamma, lambda, phi);
    let Ok(path) = integrate_span(&params, |t| labor.at(t), 1.0, t_end, a0, step) else {
        return f64::INFINITY;
    };
    let mut sse = 0.0;
    for (i, &a_obs) in observed.iter().enumerate() {
        let t = (i + 1) as f64;
        let Some(a_hat) = path.at(t) else {
            return f64::INFINITY;
        };
        let r = a_hat - a_obs as f64;
        sse += r * r;
    }
    sse / observed.len() as f64
}

/// Calibrate `(gamma, lambda, phi)` to observed cumulative growth.
///
/// The labor driver is the fitted engagement rate `m * f(t)` (falling back
/// to observed counts when the engagement fit is invalid). The objective is
/// minimized by Nelder-Mead inside the documented bounds from eight start
/// points — a grid over `lambda in {-0.5, 0.5, 1.5} x phi in {-0.5, 0.3}`
/// plus `(3.0, -1.5)` and `(0.3, 0.6)` to cover strong-labor and
/// strong-spillover regimes — with `gamma` seeded so the first month's
/// modeled growth matches the first observed month. The best start is
/// polished with a restarted search. The objective surface is multimodal
/// across projects, hence the multi-start.
pub fn calibrate_growth(series: &MonthlySeries, bass: &BassParams) -> Result<GrowthFit> {
    calibrate_growth_with_step(series, bass, DEFAULT_STEP)
}

/// [`calibrate_growth`] with an explicit RK4 step, for convergence studies.
pub fn calibrate_growth_with_step(
    series: &MonthlySeries,
    bass: &BassParams,
    step: f64,
) -> Result<GrowthFit> {
    const MIN_MONTHS: usize = 12;
    if series.len() < MIN_MONTHS {
        return Err(Error::SeriesTooShort {
            needed: MIN_MONTHS,
            got: series.len(),
        });
    }
    let labor = LaborDriver::from_fit(bass, series);
    let observed = &series.cum_lines;
    let a0 = (observed[0] as f64).max(1.0);
    let first_growth = (series.lines_changed[0] as f64).max(1.0);

    let lower = [LOG_GAMMA_BOUNDS.0, LAMBDA_BOUNDS.0, PHI_BOUNDS.0];
    let upper = [LOG_GAMMA_BOUNDS.1, LAMBDA_BOUNDS.1, PHI_BOUNDS.1];
    let opts = NelderMeadOptions {
        initial_steps: vec![1.0, 0.25, 0.2],
        max_iterations: 400,
        ..Default::default()
    };

    let mut seeds: Vec<(f64, f64)> = Vec::with_capacity(8);
    for lambda in [-0.5, 0.5, 1.5] {
        for phi in [-0.5, 0.3] {
            seeds.push((lambda, phi));
        }
    }
    seeds.push((3.0, -1.5));
    seeds.push((0.3, 0.6));

    let mut best: Option<(Vec<f64>, f64)> = None;
    for (lambda0, phi0) in seeds {
        // match gamma * L(0.5)^lambda * a0^phi to the first month's growth
        let labor_mid = labor.at(0.5).max(LABOR_FLOOR);
        let gamma0 = first_growth / (labor_mid.powf(lambda0) * a0.powf(phi0));
        let log_gamma0 = gamma0
            .max(f64::MIN_POSITIVE)
            .ln()
            .clamp(LOG_GAMMA_BOUNDS.0, LOG_GAMMA_BOUNDS.1);
        let result = nelder_mead(
            |x| calibration_objective(x[0].exp(), x[1], x[2], &labor, observed, a0, step),
            &[log_gamma0, lambda0, phi0],
            &lower,
            &upper,
            &opts,
        );
        if result.f.is_finite() && best.as_ref().is_none_or(|(_, f)| result.f < *f) {
            best = Some((result.x, result.f));
        }
    }
    let (start, mut best_f) = best.ok_or(Error::CalibrationFailed)?;

    // polish: restart a fresh simplex at the winner with tighter steps
    let polish_opts = NelderMeadOptions {
        initial_steps: vec![0.05, 0.02, 0.02],
        max_iterations: 2000,
        ..Default::default()
    };
    let polished = nelder_mead(
        |x| calibration_objective(x[0].exp(), x[1], x[2], &labor, observed, a0, step),
        &start,
        &lower,
        &upper,
        &polish_opts,
    );
    let x = if polished.f < best_f {
        best_f = polished.f;
        polished.x
    } else {
        start
    };

    let l0 = series.developers.first().copied().unwrap_or(0) as f64;
    Ok(GrowthFit {
        params: GrowthParams::new(x[0].exp(), x[1], x[2]).with_initial(a0, l0.max(1.0)),
        objective: best_f,
    })
}

/// The fitted path over the observed window, anchored like the calibration
/// objective: `A_hat(1) = max(A[0], 1)`, month-end grid.
pub fn fitted_path(
    params: &GrowthParams,
    labor: &LaborDriver<'_>,
    months: usize,
) -> Result<GrowthPath> {
    integrate_span(
        params,
        |t| labor.at(t),
        1.0,
        months as f64,
        params.a0,
        DEFAULT_STEP,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn closed_form_initial_condition() {
        let p = GrowthParams::new(2.5, 0.7, 0.3)
            .with_initial(42.0, 3.0)
            .with_labor_rate(0.05);
        assert_relative_eq!(closed_form_a(&p, 0.0).unwrap(), 42.0, max_relative = 1e-12);
        assert_relative_eq!(
            closed_form_a_const_labor(&p, 5.0, 0.0).unwrap(),
            42.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn closed_form_phi_zero_reduces_to_exponential_integral() {
        // A0 + (gamma L0^lambda / (lambda n)) (e^{lambda n t} - 1)
        let p = GrowthParams::new(1.0, 1.0, 0.0)
            .with_initial(10.0, 2.0)
            .with_labor_rate(0.1);
        let got = closed_form_a(&p, 5.0).unwrap();
        let expect = 10.0 + 20.0 * ((0.5f64).exp() - 1.0);
        assert_relative_eq!(got, expect, max_relative = 1e-12);
        assert_abs_diff_eq!(got, 22.974, epsilon = 5e-4);
    }

    #[test]
    fn const_labor_phi_zero_is_linear() {
        let p = GrowthParams::new(2.0, 1.0, 0.0).with_initial(5.0, 1.0);
        let got = closed_form_a_const_labor(&p, 3.0, 4.0).unwrap();
        assert_relative_eq!(got, 29.0, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_rejects_lambda_zero_and_phi_one() {
        let p = GrowthParams::new(1.0, 0.0, 0.5).with_labor_rate(0.1);
        assert!(closed_form_a(&p, 1.0).is_err());
        let p = GrowthParams::new(1.0, 1.0, 1.0).with_labor_rate(0.1);
        assert!(closed_form_a(&p, 1.0).is_err());
    }

    #[test]
    fn closed_form_domain_violation_is_reported() {
        // phi > 1: the base 20.25 - 20 e^{0.1 t} crosses zero near t = 0.124
        let p = GrowthParams::new(1.0, 1.0, 3.0)
            .with_initial(2.0, 1.0)
            .with_labor_rate(0.1);
        assert!(closed_form_a(&p, 0.05).is_ok());
        let r = closed_form_a(&p, 1.0);
        assert!(matches!(r, Err(Error::Domain(_))), "{r:?}");
    }

    #[test]
    fn constant_rhs_integrates_exactly() {
        // lambda = 0, phi = 0: dA/dt = gamma
        let p = GrowthParams::new(3.0, 0.0, 0.0).with_initial(7.0, 1.0);
        let path = integrate(&p, |_| 5.0, 10.0, 7.0).unwrap();
        for (t, a) in path.months.iter().zip(&path.a_hat) {
            assert_relative_eq!(*a, 7.0 + 3.0 * t, max_relative = 1e-12);
        }
    }

    #[test]
    fn integrator_matches_exponential_closed_form() {
        let p = GrowthParams::new(1.0, 1.0, 0.5)
            .with_initial(10.0, 2.0)
            .with_labor_rate(0.1);
        let path = integrate(&p, |t| 2.0 * (0.1 * t).exp(), 12.0, 10.0).unwrap();
        let expect = closed_form_a(&p, 12.0).unwrap();
        assert_relative_eq!(path.terminal(), expect, max_relative = 1e-6);
    }

    #[test]
    fn integrator_matches_constant_labor_closed_form() {
        let p = GrowthParams::new(0.8, 1.3, -0.4).with_initial(50.0, 1.0);
        let path = integrate(&p, |_| 6.0, 24.0, 50.0).unwrap();
        let expect = closed_form_a_const_labor(&p, 6.0, 24.0).unwrap();
        assert_relative_eq!(path.terminal(), expect, max_relative = 1e-6);
    }

    #[test]
    fn doubling_labor_with_unit_elasticity_doubles_rate() {
        let p = GrowthParams::new(2.0, 1.0, 0.0);
        assert_relative_eq!(
            p.rate(10.0, 100.0),
            2.0 * p.rate(5.0, 100.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn runaway_state_reports_the_step() {
        // near-linear spillover with an absurd efficiency overflows quickly
        let p = GrowthParams::new(1.0e300, 0.0, 0.99).with_initial(1.0e10, 1.0);
        match integrate(&p, |_| 1.0, 10.0, 1.0e10) {
            Err(Error::NonFiniteState { gamma, .. }) => assert_eq!(gamma, 1.0e300),
            other => panic!("expected NonFiniteState, got {other:?}"),
        }
    }

    #[test]
    fn zero_labor_months_are_guarded() {
        let p = GrowthParams::new(1.0, -0.5, 0.0).with_initial(10.0, 1.0);
        // L = 0 with negative elasticity: floor keeps the rate finite
        let path = integrate(&p, |_| 0.0, 2.0, 10.0).unwrap();
        assert!(path.terminal().is_finite());
    }

    #[test]
    fn monotone_when_labor_nonnegative() {
        let p = GrowthParams::new(4.0, 0.8, -0.6).with_initial(20.0, 1.0);
        let path = integrate(&p, |t| (10.0 - t).max(0.0), 30.0, 20.0).unwrap();
        for w in path.a_hat.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn path_grid_lookup() {
        let p = GrowthParams::new(1.0, 0.0, 0.0);
        let path = integrate(&p, |_| 1.0, 4.0, 1.0).unwrap();
        assert!(path.at(2.0).is_some());
        assert!(path.at(2.1).is_none());
        assert!(path.at(99.0).is_none());
    }

    #[test]
    fn centered_difference_matches_rhs() {
        let p = GrowthParams::new(2.0, 1.1, -0.3).with_initial(30.0, 1.0);
        let labor = |t: f64| 4.0 + (0.2 * t).sin();
        let path = integrate(&p, labor, 20.0, 30.0).unwrap();
        let h = path.months[1] - path.months[0];
        for i in 4..path.months.len() - 4 {
            let deriv = (path.a_hat[i + 1] - path.a_hat[i - 1]) / (2.0 * h);
            let rhs = p.rate(labor(path.months[i]), path.a_hat[i]);
            assert_relative_eq!(deriv, rhs, max_relative = 1e-3);
        }
    }
}
