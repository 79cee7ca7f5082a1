use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::month::Month;

/// Monthly activity for one project.
///
/// Months are contiguous from the first commit month; interior months with
/// no activity are present with zeros. `developers[i]` is the count of
/// distinct contributors in month `i`, `lines_changed[i]` the additions plus
/// deletions committed that month, and the `cum_*` columns their running
/// totals. Time is measured in whole months since inception: month `i`
/// spans `[i, i+1)`, so `cum_lines[i]` is the stock at time `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    pub project: String,
    pub months: Vec<Month>,
    pub developers: Vec<u32>,
    pub lines_changed: Vec<u64>,
    pub cum_lines: Vec<u64>,
    pub cum_dev_months: Vec<u64>,
}

impl MonthlySeries {
    pub fn empty(project: impl Into<String>) -> MonthlySeries {
        MonthlySeries {
            project: project.into(),
            months: Vec::new(),
            developers: Vec::new(),
            lines_changed: Vec::new(),
            cum_lines: Vec::new(),
            cum_dev_months: Vec::new(),
        }
    }

    /// Build from per-month developer counts and line totals, filling the
    /// cumulative columns.
    pub fn from_monthly(
        project: impl Into<String>,
        first_month: Month,
        developers: Vec<u32>,
        lines_changed: Vec<u64>,
    ) -> MonthlySeries {
        assert_eq!(developers.len(), lines_changed.len());
        let months: Vec<Month> = std::iter::successors(Some(first_month), |m| Some(m.next()))
            .take(developers.len())
            .collect();
        let mut cum_lines = Vec::with_capacity(lines_changed.len());
        let mut cum_dev = Vec::with_capacity(developers.len());
        let (mut a, mut l) = (0u64, 0u64);
        for (&da, &dev) in lines_changed.iter().zip(&developers) {
            a += da;
            l += dev as u64;
            cum_lines.push(a);
            cum_dev.push(l);
        }
        MonthlySeries {
            project: project.into(),
            months,
            developers,
            lines_changed,
            cum_lines,
            cum_dev_months: cum_dev,
        }
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    /// Total developer-months observed so far.
    pub fn total_dev_months(&self) -> u64 {
        self.cum_dev_months.last().copied().unwrap_or(0)
    }

    /// Total lines changed so far.
    pub fn total_lines(&self) -> u64 {
        self.cum_lines.last().copied().unwrap_or(0)
    }

    /// Lines changed over the trailing `window` months.
    pub fn trailing_lines(&self, window: usize) -> u64 {
        self.lines_changed.iter().rev().take(window).copied().sum()
    }

    /// First `count` months of the series, cumulative columns recomputed.
    pub fn truncated(&self, count: usize) -> MonthlySeries {
        let n = count.min(self.len());
        if n == 0 {
            return MonthlySeries::empty(self.project.clone());
        }
        MonthlySeries::from_monthly(
            self.project.clone(),
            self.months[0],
            self.developers[..n].to_vec(),
            self.lines_changed[..n].to_vec(),
        )
    }

    /// Extend with zero-activity months up to and including `cutoff`.
    /// No-op when the series already reaches the cutoff or is empty.
    pub fn extend_to(&mut self, cutoff: Month) {
        let Some(&last) = self.months.last() else {
            return;
        };
        let mut m = last;
        while m < cutoff {
            m = m.next();
            self.months.push(m);
            self.developers.push(0);
            self.lines_changed.push(0);
            self.cum_lines.push(self.total_lines());
            self.cum_dev_months.push(self.total_dev_months());
        }
    }

    /// Write as CSV with header `month,developers,lines_changed,cum_lines,cum_dev_months`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "month",
            "developers",
            "lines_changed",
            "cum_lines",
            "cum_dev_months",
        ])
        .map_err(csv_err)?;
        for i in 0..self.len() {
            wtr.write_record([
                self.months[i].to_string(),
                self.developers[i].to_string(),
                self.lines_changed[i].to_string(),
                self.cum_lines[i].to_string(),
                self.cum_dev_months[i].to_string(),
            ])
            .map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let io_err = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            source: e,
        };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
        }
        let f = std::fs::File::create(path).map_err(io_err)?;
        self.write_csv(f)
    }

    /// Read the CSV format produced by [`MonthlySeries::write_csv`].
    ///
    /// The cumulative columns are recomputed from the per-month columns and
    /// checked against the file; a mismatch is a parse error.
    pub fn read_csv<R: Read>(
        project: impl Into<String>,
        path: &str,
        r: R,
    ) -> Result<MonthlySeries> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut months = Vec::new();
        let mut developers = Vec::new();
        let mut lines_changed = Vec::new();
        let mut cums: Vec<(u64, u64)> = Vec::new();
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 2; // header is line 1
            let rec = rec.map_err(|e| Error::Parse {
                path: path.to_string(),
                line,
                message: e.to_string(),
            })?;
            let field = |i: usize, name: &str| -> Result<&str> {
                rec.get(i).ok_or_else(|| Error::Parse {
                    path: path.to_string(),
                    line,
                    message: format!("missing field '{name}'"),
                })
            };
            let month: Month = field(0, "month")?.parse().map_err(|_| Error::Parse {
                path: path.to_string(),
                line,
                message: format!("invalid month '{}'", rec.get(0).unwrap_or("")),
            })?;
            let parse_u64 = |i: usize, name: &str| -> Result<u64> {
                field(i, name)?.trim().parse().map_err(|_| Error::Parse {
                    path: path.to_string(),
                    line,
                    message: format!("invalid {name} '{}'", rec.get(i).unwrap_or("")),
                })
            };
            if let Some(&prev) = months.last() {
                let next: Month = prev;
                if month != next.next() {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line,
                        message: format!("months not contiguous: {prev} followed by {month}"),
                    });
                }
            }
            months.push(month);
            developers.push(parse_u64(1, "developers")? as u32);
            lines_changed.push(parse_u64(2, "lines_changed")?);
            cums.push((parse_u64(3, "cum_lines")?, parse_u64(4, "cum_dev_months")?));
        }
        if months.is_empty() {
            return Ok(MonthlySeries::empty(project));
        }
        let series = MonthlySeries::from_monthly(project, months[0], developers, lines_changed);
        for (i, &(a, l)) in cums.iter().enumerate() {
            if series.cum_lines[i] != a || series.cum_dev_months[i] != l {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: i + 2,
                    message: "cumulative columns inconsistent with per-month columns".into(),
                });
            }
        }
        Ok(series)
    }

    pub fn read_csv_file(project: impl Into<String>, path: &Path) -> Result<MonthlySeries> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        MonthlySeries::read_csv(project, &path.display().to_string(), f)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e),
    }
}
