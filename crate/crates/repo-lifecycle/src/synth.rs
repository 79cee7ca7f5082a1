//! Synthetic series generation from the closed-form models.
//!
//! Used for demos and as ground truth in tests: series generated here come
//! from known parameters, so fitting them back measures recovery error
//! directly. `reference_fixture` builds a 199-month series shaped like a
//! large, mature data-library project, with engagement from the diffusion
//! closed form and growth from the calibrated-parameter ODE; it stands in
//! for live commit history, which drifts and needs network access.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engagement::BassParams;
use crate::growth::{integrate, GrowthParams};
use crate::month::Month;
use crate::series::MonthlySeries;

/// Exact (unrounded) monthly engagement counts `m * (F(i+1) - F(i))`.
pub fn engagement_counts(p: f64, q: f64, m: f64, months: usize) -> Vec<f64> {
    let bass = BassParams::from_rates(p, q, m);
    (0..months).map(|i| bass.predict_monthly(i)).collect()
}

/// Multiplicative Gaussian noise on counts, deterministic in `seed`.
/// Values are clamped at zero.
pub fn noisy_counts(counts: &[f64], sd_fraction: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    counts
        .iter()
        .map(|&c| {
            // Box-Muller from two uniforms
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen::<f64>();
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            (c * (1.0 + sd_fraction * z)).max(0.0)
        })
        .collect()
}

/// A monthly series with engagement counts rounded to whole developers and
/// no code-growth component (lines mirror developer counts).
pub fn engagement_series(project: &str, p: f64, q: f64, m: f64, months: usize) -> MonthlySeries {
    let counts = engagement_counts(p, q, m, months);
    let developers: Vec<u32> = counts.iter().map(|&c| c.round() as u32).collect();
    let lines = developers.iter().map(|&d| d as u64 * 100).collect();
    MonthlySeries::from_monthly(project, first_month(months), developers, lines)
}

/// Generating parameters of [`reference_fixture`].
pub mod fixture {
    pub const P: f64 = 0.00084;
    pub const Q: f64 = 0.02686;
    pub const M: f64 = 9448.61510;
    pub const GAMMA: f64 = 601657.05;
    pub const LAMBDA: f64 = 1.3005;
    pub const PHI: f64 = -0.5523;
    /// Lines in the initial code drop, folded into the first month.
    pub const A0: f64 = 1000.0;
    pub const MONTHS: usize = 199;
    pub const FIRST_MONTH: &str = "2009-07";
}

/// Deterministic 199-month reference series (no random noise; counts and
/// line totals are rounded to integers).
///
/// Engagement is `m * (F(i+1) - F(i))` from the diffusion closed form;
/// monthly line changes are increments of the growth ODE integrated with
/// the engagement rate as its labor driver, with the initial stock folded
/// into the first month so cumulative lines match the modeled stock.
pub fn reference_fixture() -> MonthlySeries {
    use fixture::*;
    model_series(
        "pandas-dev/pandas",
        FIRST_MONTH.parse().expect("fixture month parses"),
        BassParams::from_rates(P, Q, M),
        &GrowthParams::new(GAMMA, LAMBDA, PHI),
        A0,
        MONTHS,
    )
}

/// Build a series from explicit engagement and growth parameters: counts
/// from the diffusion closed form, line changes from the growth ODE driven
/// by the engagement rate, both rounded to integers, with the initial
/// stock folded into the first month.
pub fn model_series(
    project: &str,
    first: Month,
    bass: BassParams,
    growth: &GrowthParams,
    a0: f64,
    months: usize,
) -> MonthlySeries {
    let developers: Vec<u32> = (0..months)
        .map(|i| bass.predict_monthly(i).round() as u32)
        .collect();
    let path = integrate(growth, |t| bass.engagement_rate(t), months as f64, a0)
        .expect("model parameters integrate cleanly");
    let mut lines: Vec<u64> = Vec::with_capacity(months);
    let mut prev = a0;
    for i in 0..months {
        let at_end = path
            .at((i + 1) as f64)
            .expect("month ends lie on the integration grid");
        lines.push((at_end - prev).round().max(0.0) as u64);
        prev = at_end;
    }
    lines[0] += a0 as u64;
    MonthlySeries::from_monthly(project, first, developers, lines)
}

/// Counts with deterministic noise, rounded into a series.
pub fn noisy_engagement_series(
    project: &str,
    p: f64,
    q: f64,
    m: f64,
    months: usize,
    sd_fraction: f64,
    seed: u64,
) -> MonthlySeries {
    let noisy = noisy_counts(&engagement_counts(p, q, m, months), sd_fraction, seed);
    let developers: Vec<u32> = noisy.iter().map(|&c| c.round() as u32).collect();
    let lines = developers.iter().map(|&d| d as u64 * 100).collect();
    MonthlySeries::from_monthly(project, first_month(months), developers, lines)
}

fn first_month(_months: usize) -> Month {
    "2010-01".parse().expect("static month parses")
}

/// Uniform draw helper for randomized equivalence tests.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}
