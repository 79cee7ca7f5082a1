//! Report assembly: the per-project life-cycle report JSON and the CSV
//! companions used for plotting and batch summaries.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engagement::BassParams;
use crate::error::{Error, Result};
use crate::forecast::{FittedModels, LifecycleForecast, StabilityResult};
use crate::growth::{GrowthParams, GrowthPath};
use crate::series::MonthlySeries;
use crate::valuation::ValuationReport;

/// The per-project report written by `fit`, `project`, `value`,
/// `stability`, and `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleReport {
    pub project: String,
    pub fitted: Fitted,
    pub forecast: Option<ForecastBlock>,
    pub stability: Option<StabilityBlock>,
    pub valuation: Option<ValuationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fitted {
    pub bass: BassParams,
    pub growth: GrowthParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastBlock {
    pub t_current: u32,
    #[serde(rename = "T_maturation")]
    pub t_maturation: f64,
    pub remaining_years: f64,
    pub lifetime_dev_months: f64,
    pub lifetime_growth: f64,
}

impl From<&LifecycleForecast> for ForecastBlock {
    fn from(fc: &LifecycleForecast) -> Self {
        ForecastBlock {
            t_current: fc.t_current,
            t_maturation: fc.t_maturation,
            remaining_years: fc.remaining_years,
            lifetime_dev_months: fc.lifetime_dev_months,
            lifetime_growth: fc.lifetime_growth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityBlock {
    pub full_fit: FittedModels,
    pub truncated_fit: Option<FittedModels>,
    pub divergence: DivergenceBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceBlock {
    pub growth: Option<f64>,
    pub engagement: Option<f64>,
}

impl From<&StabilityResult> for StabilityBlock {
    fn from(r: &StabilityResult) -> Self {
        StabilityBlock {
            full_fit: r.full_fit,
            truncated_fit: r.truncated_fit,
            divergence: DivergenceBlock {
                growth: r.growth_divergence,
                engagement: r.engagement_divergence,
            },
        }
    }
}

impl LifecycleReport {
    pub fn new(project: impl Into<String>, bass: BassParams, growth: GrowthParams) -> Self {
        LifecycleReport {
            project: project.into(),
            fitted: Fitted { bass, growth },
            forecast: None,
            stability: None,
            valuation: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_json().as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    std::fs::write(path, bytes).map_err(io_err)
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{header}").expect("vec write");
    for row in rows {
        writeln!(out, "{row}").expect("vec write");
    }
    write_file(path, &out)
}

/// `month,observed,fitted` for monthly developer counts.
pub fn write_engagement_curve(
    path: &Path,
    series: &MonthlySeries,
    bass: &BassParams,
) -> Result<()> {
    write_csv(
        path,
        "month,observed,fitted",
        (0..series.len()).map(|i| {
            format!(
                "{},{},{:.6}",
                series.months[i],
                series.developers[i],
                if bass.valid {
                    bass.predict_monthly(i)
                } else {
                    f64::NAN
                }
            )
        }),
    )
}

/// `month,observed,fitted` for cumulative lines against the fitted path.
pub fn write_growth_curve(path: &Path, series: &MonthlySeries, fitted: &GrowthPath) -> Result<()> {
    write_csv(
        path,
        "month,observed,fitted",
        (0..series.len()).map(|i| {
            let t = (i + 1) as f64;
            format!(
                "{},{},{:.3}",
                series.months[i],
                series.cum_lines[i],
                fitted.at(t).unwrap_or(f64::NAN)
            )
        }),
    )
}

/// `t_prime,f_prime` samples of the rescaled engagement curve.
pub fn write_normalized_curve(path: &Path, samples: &[(f64, f64)]) -> Result<()> {
    write_csv(
        path,
        "t_prime,f_prime",
        samples.iter().map(|(t, f)| format!("{t:.6},{f:.9}")),
    )
}

/// `L_hat,A_hat` phase-diagram samples.
pub fn write_phase(path: &Path, phase: &[(f64, f64)]) -> Result<()> {
    write_csv(
        path,
        "L_hat,A_hat",
        phase.iter().map(|(l, a)| format!("{l:.6},{a:.3}")),
    )
}

/// `month,A_hat,L_hat` export of a growth path.
pub fn write_growth_path(path: &Path, growth_path: &GrowthPath) -> Result<()> {
    write_csv(
        path,
        "month,A_hat,L_hat",
        (0..growth_path.months.len()).map(|i| {
            format!(
                "{:.4},{:.3},{:.6}",
                growth_path.months[i], growth_path.a_hat[i], growth_path.l_hat[i]
            )
        }),
    )
}

/// One row of the batch engagement summary.
#[derive(Debug, Clone)]
pub struct EngagementSummaryRow {
    pub project: String,
    pub start: String,
    pub end: String,
    pub params: Option<BassParams>,
    pub t_current: u32,
    pub t_maturation: Option<f64>,
    pub remaining_years: Option<f64>,
    pub status: String,
}

/// Batch engagement summary: one row per project with the fitted
/// coefficients and life expectancy.
pub fn write_engagement_summary(path: &Path, rows: &[EngagementSummaryRow]) -> Result<()> {
    write_csv(
        path,
        "project,start,end,p,q,m,r_squared,t,T,yrs,status",
        rows.iter().map(|r| {
            let (p, q, m, r2) = match &r.params {
                Some(b) => (
                    format!("{:.5}", b.p),
                    format!("{:.5}", b.q),
                    format!("{:.5}", b.m),
                    format!("{:.4}", b.r_squared),
                ),
                None => Default::default(),
            };
            format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.project,
                r.start,
                r.end,
                p,
                q,
                m,
                r2,
                r.t_current,
                r.t_maturation
                    .map(|v| format!("{v:.5}"))
                    .unwrap_or_default(),
                r.remaining_years
                    .map(|v| format!("{v:.5}"))
                    .unwrap_or_default(),
                r.status,
            )
        }),
    )
}

/// One row of the batch valuation summary.
#[derive(Debug, Clone)]
pub struct ValuationSummaryRow {
    pub project: String,
    pub current_life: u32,
    pub full_life: Option<f64>,
    pub dev_months: u64,
    pub current_growth: u64,
    pub lifetime_growth: Option<f64>,
    pub valuation: Option<ValuationReport>,
}

/// Batch valuation summary with current/lifetime supply-side values in
/// millions of dollars.
pub fn write_valuation_summary(path: &Path, rows: &[ValuationSummaryRow]) -> Result<()> {
    write_csv(
        path,
        "project,current_life_months,full_life_months,dev_months,current_growth_mm,lifetime_growth_mm,innov_per_devmonth,supply_current_mm,supply_lifetime_mm",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{:.2},{},{},{},{}",
                r.project,
                r.current_life,
                r.full_life.map(|v| format!("{v:.0}")).unwrap_or_default(),
                r.dev_months,
                r.current_growth as f64 / 1e6,
                r.lifetime_growth
                    .map(|v| format!("{:.2}", v / 1e6))
                    .unwrap_or_default(),
                r.valuation
                    .map(|v| format!("{:.2}", v.innov_per_devmonth))
                    .unwrap_or_default(),
                r.valuation
                    .map(|v| format!("{:.2}", v.supply_current / 1e6))
                    .unwrap_or_default(),
                r.valuation
                    .map(|v| format!("{:.2}", v.supply_lifetime / 1e6))
                    .unwrap_or_default(),
            )
        }),
    )
}

/// One row of the downloads summary.
#[derive(Debug, Clone)]
pub struct DownloadsSummaryRow {
    pub project: String,
    pub downloads_6mo: u64,
    pub lines_changed_6mo: u64,
    pub ratio: Option<f64>,
    pub lifetime_downloads: Option<u64>,
    pub remaining_downloads: u64,
}

pub fn write_downloads_summary(path: &Path, rows: &[DownloadsSummaryRow]) -> Result<()> {
    write_csv(
        path,
        "project,downloads_6mo,lines_changed_6mo,ratio,lifetime_downloads,remaining_downloads",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.project,
                r.downloads_6mo,
                r.lines_changed_6mo,
                r.ratio.map(|v| format!("{v:.2}")).unwrap_or_default(),
                r.lifetime_downloads
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                r.remaining_downloads,
            )
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_field_names() {
        let bass = BassParams::from_rates(0.01, 0.1, 1000.0);
        let growth = GrowthParams::new(10.0, 1.0, -0.5);
        let mut report = LifecycleReport::new("owner/name", bass, growth);
        report.forecast = Some(ForecastBlock {
            t_current: 120,
            t_maturation: 150.5,
            remaining_years: 2.54,
            lifetime_dev_months: 1000.0,
            lifetime_growth: 2.0e6,
        });
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["project"], "owner/name");
        assert!(json["fitted"]["bass"]["p"].is_number());
        assert!(json["fitted"]["growth"]["gamma"].is_number());
        assert!(json["fitted"]["growth"]["A0"].is_number());
        let fc = &json["forecast"];
        for key in [
            "t_current",
            "T_maturation",
            "remaining_years",
            "lifetime_dev_months",
            "lifetime_growth",
        ] {
            assert!(!fc[key].is_null(), "missing forecast key {key}");
        }
        assert!(json["stability"].is_null());
        assert!(json["valuation"].is_null());
    }

    #[test]
    fn normalized_curve_csv_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("norm.csv");
        write_normalized_curve(&path, &[(0.5, 0.25), (1.0, 1.0)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t_prime,f_prime"));
        assert_eq!(lines.count(), 2);
    }
}
