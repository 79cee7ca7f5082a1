//! Supply- and demand-side valuation from fitted life-cycle quantities.
//!
//! Supply side is an imputed build cost: cumulative lines divided by the
//! per-developer-month productivity ratio recovers developer-months, which
//! are priced at a salary times the fraction of work time spent on the
//! project. Using projected lifetime growth instead of the current stock
//! prices the whole life cycle. Demand side proxies user value through
//! package downloads per line changed over a trailing window.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::LifecycleForecast;
use crate::series::MonthlySeries;

/// Default global-average developer cost, USD per month.
pub const DEFAULT_MONTHLY_SALARY: f64 = 10_000.0;
/// Default fraction of work time a contributor spends on one project.
pub const DEFAULT_TIME_FRACTION: f64 = 0.5;
/// Trailing window for the downloads-per-line ratio, months.
pub const DOWNLOAD_WINDOW_MONTHS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuationConfig {
    /// USD per developer-month.
    pub monthly_salary: f64,
    /// Fraction of work time attributed to the project, in (0, 1].
    pub time_fraction: f64,
    /// Developers-per-month level defining maturity.
    pub maturation_threshold: f64,
    /// Optional USD value per download; demand-side totals are reported as
    /// counts and this is passed through for the reader's arithmetic.
    pub per_download_value: Option<f64>,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        ValuationConfig {
            monthly_salary: DEFAULT_MONTHLY_SALARY,
            time_fraction: DEFAULT_TIME_FRACTION,
            maturation_threshold: crate::forecast::DEFAULT_MATURATION_THRESHOLD,
            per_download_value: None,
        }
    }
}

impl ValuationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.monthly_salary.is_nan() || self.monthly_salary <= 0.0 {
            return Err(Error::Config("monthly_salary must be positive".into()));
        }
        if !(0.0 < self.time_fraction && self.time_fraction <= 1.0) {
            return Err(Error::Config("time_fraction must be in (0, 1]".into()));
        }
        if self.maturation_threshold.is_nan() || self.maturation_threshold <= 0.0 {
            return Err(Error::Config(
                "maturation_threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Supply-side (build-cost) valuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupplySide {
    /// Lines changed per developer-month, at current time.
    pub innov_per_devmonth: f64,
    /// USD to rebuild what exists today.
    pub supply_current: f64,
    /// USD for the projected lifetime, at the current productivity ratio.
    pub supply_lifetime: f64,
}

/// Imputed build cost from the observed series and lifetime forecast.
///
/// `ratio = A / dev_months` converts lines back to developer-months, so
/// `supply_current = A / ratio * time_fraction * salary` is algebraically
/// `dev_months * time_fraction * salary`; both routes are computed and must
/// agree. The lifetime figure freezes the ratio at its current value — the
/// fitted models say nothing about productivity drift, so the current ratio
/// is the only defensible one.
pub fn supply_side(
    series: &MonthlySeries,
    forecast: &LifecycleForecast,
    cfg: &ValuationConfig,
) -> Result<SupplySide> {
    cfg.validate()?;
    let dev_months = series.total_dev_months();
    if dev_months == 0 {
        return Err(Error::ZeroDevMonths);
    }
    let stock = series.total_lines() as f64;
    let ratio = stock / dev_months as f64;
    let per_devmonth = cfg.time_fraction * cfg.monthly_salary;
    let supply_current = if stock > 0.0 {
        stock / ratio * per_devmonth
    } else {
        0.0
    };
    let identity = dev_months as f64 * per_devmonth;
    debug_assert!(
        stock == 0.0 || (supply_current - identity).abs() <= 1e-9 * identity,
        "ratio and dev-month routes disagree: {supply_current} vs {identity}"
    );
    let supply_lifetime = if stock > 0.0 {
        forecast.lifetime_growth / ratio * per_devmonth
    } else {
        identity
    };
    Ok(SupplySide {
        innov_per_devmonth: ratio,
        supply_current: if stock > 0.0 {
            supply_current
        } else {
            identity
        },
        supply_lifetime,
    })
}

/// Demand-side (user-value) quantities, as counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandSide {
    /// Downloads per line changed over the trailing window. `None` when the
    /// window saw no line changes, which leaves the ratio undefined.
    pub downloads_ratio: Option<f64>,
    /// `ratio * lifetime_growth`, rounded to a count.
    pub lifetime_downloads: Option<u64>,
    /// Window downloads extrapolated over the remaining months to maturity.
    pub remaining_downloads: u64,
    /// Download counts priced at [`ValuationConfig::per_download_value`],
    /// when the user supplies one. No per-download value is assumed.
    pub lifetime_value: Option<f64>,
    pub remaining_value: Option<f64>,
}

/// Downloads-per-line extrapolation.
///
/// `remaining_downloads` scales the window's downloads by
/// `(T_maturation - t_current) / window`; `lifetime_downloads` applies the
/// ratio to projected lifetime lines. Zero lines in the window flags the
/// ratio undefined rather than erroring: dormant-code projects with active
/// downloads are real and the remaining-downloads figure still stands.
pub fn demand_side(
    downloads_window: u64,
    lines_changed_window: u64,
    forecast: &LifecycleForecast,
    window_months: usize,
) -> DemandSide {
    let remaining_months = (forecast.t_maturation - forecast.t_current as f64).max(0.0);
    let remaining_downloads =
        (downloads_window as f64 * remaining_months / window_months as f64).round() as u64;
    if lines_changed_window == 0 {
        return DemandSide {
            downloads_ratio: None,
            lifetime_downloads: None,
            remaining_downloads,
            lifetime_value: None,
            remaining_value: None,
        };
    }
    let ratio = downloads_window as f64 / lines_changed_window as f64;
    DemandSide {
        downloads_ratio: Some(ratio),
        lifetime_downloads: Some((ratio * forecast.lifetime_growth).round() as u64),
        remaining_downloads,
        lifetime_value: None,
        remaining_value: None,
    }
}

/// Combined valuation block for the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuationReport {
    pub innov_per_devmonth: f64,
    pub supply_current: f64,
    pub supply_lifetime: f64,
    /// `None` when no download data was available for the project.
    pub demand: Option<DemandSide>,
}

pub fn valuation_report(
    series: &MonthlySeries,
    forecast: &LifecycleForecast,
    cfg: &ValuationConfig,
    downloads_window: Option<u64>,
) -> Result<ValuationReport> {
    let supply = supply_side(series, forecast, cfg)?;
    let demand = downloads_window.map(|d| {
        let mut demand = demand_side(
            d,
            series.trailing_lines(DOWNLOAD_WINDOW_MONTHS),
            forecast,
            DOWNLOAD_WINDOW_MONTHS,
        );
        if let Some(value) = cfg.per_download_value {
            demand.lifetime_value = demand.lifetime_downloads.map(|n| n as f64 * value);
            demand.remaining_value = Some(demand.remaining_downloads as f64 * value);
        }
        demand
    });
    Ok(ValuationReport {
        innov_per_devmonth: supply.innov_per_devmonth,
        supply_current: supply.supply_current,
        supply_lifetime: supply.supply_lifetime,
        demand,
    })
}

/// Load per-project download counts from CSV `project,package,downloads_6mo`.
///
/// Counts must be non-negative integers; projects missing from the file are
/// simply absent from the map, and valuation proceeds supply-side only.
pub fn load_downloads<R: Read>(path: &str, r: R) -> Result<BTreeMap<String, u64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut out = BTreeMap::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_string(),
            line,
            message: e.to_string(),
        })?;
        let project = rec
            .get(0)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line,
                message: "missing field 'project'".into(),
            })?;
        let raw = rec.get(2).unwrap_or("").trim();
        let count: i64 = raw.parse().map_err(|_| Error::Parse {
            path: path.to_string(),
            line,
            message: format!("invalid downloads_6mo '{raw}'"),
        })?;
        if count < 0 {
            return Err(Error::Parse {
                path: path.to_string(),
                line,
                message: format!("downloads_6mo must be non-negative, got {count}"),
            });
        }
        out.insert(project.to_string(), count as u64);
    }
    Ok(out)
}

pub fn load_downloads_file(path: &Path) -> Result<BTreeMap<String, u64>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    load_downloads(&path.display().to_string(), f)
}
