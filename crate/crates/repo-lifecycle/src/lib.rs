//! Life-cycle models for open-source projects, fitted to commit history.
//!
//! The pipeline: commit history is aggregated into a [`series::MonthlySeries`]
//! of developer counts and lines changed; the [`engagement`] module fits a
//! two-coefficient diffusion model to the monthly developer counts; the
//! [`growth`] module calibrates a Cobb-Douglas growth rule for cumulative
//! lines driven by the fitted engagement curve; [`forecast`] projects both
//! to the project's maturation point; and [`valuation`] turns the totals
//! into supply- and demand-side dollar figures.
//!
//! The `book/` directory in the repository walks through the models with
//! runnable examples; its code blocks compile and run as part of the test
//! suite.

pub mod cli;
pub mod engagement;
pub mod error;
pub mod forecast;
pub mod growth;
pub mod ingest;
pub mod month;
pub mod numeric;
pub mod report;
pub mod series;
pub mod synth;
pub mod valuation;

pub use error::{Error, Result};
pub use month::Month;
pub use series::MonthlySeries;

// The book's code blocks double as doc-tests so the guide cannot drift
// from the library. One stand-in item per chapter; `cargo test --doc`
// compiles and runs every snippet.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/series.md")]
    pub struct SeriesChapter;
    #[doc = include_str!("../../../book/src/engagement.md")]
    pub struct EngagementChapter;
    #[doc = include_str!("../../../book/src/growth.md")]
    pub struct GrowthChapter;
    #[doc = include_str!("../../../book/src/forecasting.md")]
    pub struct ForecastingChapter;
    #[doc = include_str!("../../../book/src/valuation.md")]
    pub struct ValuationChapter;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct CliChapter;
}
