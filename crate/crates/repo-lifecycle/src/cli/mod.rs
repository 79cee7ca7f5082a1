//! Command-line entry point.
//!
//! Subcommands: `fetch`, `fit`, `project`, `value`, `stability`, `report`.
//! Exit codes: 0 success, 1 usage, 2 data or fit error, 3 network error.

mod config;

pub use config::RunConfig;

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::engagement::fit_bass;
use crate::error::{Error, Result};
use crate::forecast::{project_lifecycle, stability_experiment, LifecycleForecast};
use crate::growth::{calibrate_growth, fitted_path, GrowthFit, LaborDriver};
use crate::ingest::{aggregate_monthly, load_commit_log, AggregateOptions, GithubClient};
use crate::month::Month;
use crate::report::{
    self, EngagementSummaryRow, Fitted, ForecastBlock, LifecycleReport, StabilityBlock,
    ValuationSummaryRow,
};
use crate::series::MonthlySeries;
use crate::valuation::{
    load_downloads, load_downloads_file, valuation_report, DOWNLOAD_WINDOW_MONTHS,
};

#[derive(Parser, Debug)]
#[command(
    name = "repo-lifecycle",
    version,
    about = "Fit engagement and growth life-cycle models to repository commit history"
)]
struct Cli {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory holding commit caches (default `cache`).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Directory for reports and CSVs (default `out`).
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Last month to include, `YYYY-MM`.
    #[arg(long, global = true)]
    cutoff: Option<String>,

    /// API token; overrides the GITHUB_TOKEN environment variable.
    #[arg(long, global = true)]
    token: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Download a repository's commit history into the cache.
    Fetch {
        /// Repository as `owner/name`.
        repo: String,
        /// Only fetch commits at or after this RFC 3339 instant.
        #[arg(long)]
        since: Option<String>,
        /// Parallel per-commit requests.
        #[arg(long)]
        concurrency: Option<usize>,
        /// API root override, for fixture servers.
        #[arg(long, hide = true)]
        api_url: Option<String>,
    },
    /// Fit the engagement and growth models and write the report JSON.
    Fit {
        /// Repository `owner/name`, a cache `.jsonl`, or a series `.csv`.
        project: String,
    },
    /// Fit and project to maturation; writes phase and curve CSVs.
    Project { project: String },
    /// Fit, project, and value; add `--downloads` for the demand side.
    Value {
        project: String,
        /// CSV `project,package,downloads_6mo`: a file path or an HTTPS URL.
        #[arg(long)]
        downloads: Option<String>,
    },
    /// Compare fits on the full series against a truncated prefix.
    Stability {
        project: String,
        /// Fraction of months to keep in the truncated fit.
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Full pipeline over one or more projects with combined summary CSVs.
    Report {
        projects: Vec<String>,
        /// CSV `project,package,downloads_6mo`: a file path or an HTTPS URL.
        #[arg(long)]
        downloads: Option<String>,
        /// Also export the rescaled engagement curve per project.
        #[arg(long)]
        normalized: bool,
        /// Worker threads for batch fitting (default: available cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let outcome = match &cli.command {
        Command::Fetch {
            repo,
            since,
            concurrency,
            api_url,
        } => cmd_fetch(
            &cfg,
            repo,
            since.as_deref(),
            *concurrency,
            api_url.as_deref(),
        ),
        Command::Fit { project } => cmd_fit(&cfg, project),
        Command::Project { project } => cmd_project(&cfg, project),
        Command::Value { project, downloads } => cmd_value(&cfg, project, downloads.as_deref()),
        Command::Stability { project, fraction } => cmd_stability(&cfg, project, *fraction),
        Command::Report {
            projects,
            downloads,
            normalized,
            jobs,
        } => cmd_report(&cfg, projects, downloads.as_deref(), *normalized, *jobs),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_class()
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_env();
    if let Some(dir) = &cli.cache_dir {
        cfg.cache_dir = dir.clone();
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    if let Some(cutoff) = &cli.cutoff {
        cfg.cutoff_month = Some(cutoff.parse::<Month>()?);
    }
    if let Some(token) = &cli.token {
        cfg.token = Some(token.clone());
        cfg.token_source = "--token flag".to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn slug(project: &str) -> String {
    project
        .trim_end_matches(".csv")
        .trim_end_matches(".jsonl")
        .replace(['/', '\\', ':'], "__")
}

fn cache_path(cfg: &RunConfig, repo: &str) -> PathBuf {
    cfg.cache_dir.join(format!("{}.jsonl", slug(repo)))
}

/// Resolve a project argument into a monthly series. Accepts a monthly CSV,
/// a commit-cache JSONL, or `owner/name` (looked up in the cache dir).
fn resolve_series(cfg: &RunConfig, project: &str) -> Result<MonthlySeries> {
    let path = Path::new(project);
    if project.ends_with(".csv") {
        let name = file_stem(path, project);
        let mut series = MonthlySeries::read_csv_file(name, path)?;
        if let Some(cutoff) = cfg.cutoff_month {
            let keep = series.months.iter().take_while(|&&m| m <= cutoff).count();
            series = series.truncated(keep);
            series.extend_to(cutoff);
        }
        return Ok(series);
    }
    let (name, cache) = if project.ends_with(".jsonl") {
        (file_stem(path, project), path.to_path_buf())
    } else {
        (project.to_string(), cache_path(cfg, project))
    };
    if !cache.exists() {
        return Err(Error::Config(format!(
            "no cache for '{project}' at {}; run `repo-lifecycle fetch {project}` first",
            cache.display()
        )));
    }
    let log = load_commit_log(&cache, &cfg.bot_patterns)?;
    let opts = AggregateOptions {
        exclude_bots: cfg.exclude_bots,
        cutoff: cfg.cutoff_month,
    };
    Ok(aggregate_monthly(name, &log, &opts))
}

fn file_stem(path: &Path, fallback: &str) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(fallback)
        .to_string()
}

/// Load download counts from a file path or an HTTP(S) endpoint serving
/// the same CSV shape.
fn load_downloads_source(source: &str) -> Result<std::collections::BTreeMap<String, u64>> {
    if source.starts_with("http://") || source.starts_with("https://") {
        let body = reqwest::blocking::get(source)
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.text())
            .map_err(|e| Error::Http {
                url: source.to_string(),
                message: e.to_string(),
            })?;
        return load_downloads(source, body.as_bytes());
    }
    load_downloads_file(Path::new(source))
}

fn cmd_fetch(
    cfg: &RunConfig,
    repo: &str,
    since: Option<&str>,
    concurrency: Option<usize>,
    api_url: Option<&str>,
) -> Result<i32> {
    let since: Option<DateTime<Utc>> = match since {
        Some(raw) => Some(
            DateTime::parse_from_rfc3339(raw)
                .map_err(|_| Error::Config(format!("invalid --since '{raw}', expected RFC 3339")))?
                .with_timezone(&Utc),
        ),
        None => None,
    };
    let mut client = GithubClient::new(cfg.token.clone(), &cfg.token_source);
    client.concurrency = concurrency.unwrap_or(cfg.fetch_concurrency);
    if let Some(url) = api_url {
        client = client.with_base_url(url);
    }
    let cache = cache_path(cfg, repo);
    let before = if cache.exists() {
        crate::ingest::read_cache(&cache)?.len()
    } else {
        0
    };
    let commits = client.fetch_commits(repo, &cache, since)?;
    println!(
        "{repo}: {} commits cached ({} new) -> {}",
        commits.len(),
        commits.len().saturating_sub(before),
        cache.display()
    );
    Ok(0)
}

/// Everything the fit-based commands share.
struct Analysis {
    name: String,
    series: MonthlySeries,
    bass: crate::engagement::BassParams,
    growth: GrowthFit,
    forecast: Option<LifecycleForecast>,
}

fn analyze(cfg: &RunConfig, project: &str) -> Result<Analysis> {
    let series = resolve_series(cfg, project)?;
    if series.is_empty() {
        return Err(Error::SeriesTooShort { needed: 6, got: 0 });
    }
    let bass = fit_bass(&series)?;
    let growth = calibrate_growth(&series, &bass)?;
    let forecast = if bass.valid {
        Some(project_lifecycle(
            &bass,
            &growth.params,
            &series,
            cfg.valuation.maturation_threshold,
        )?)
    } else {
        None
    };
    Ok(Analysis {
        name: series.project.clone(),
        series,
        bass,
        growth,
        forecast,
    })
}

fn print_fit(a: &Analysis) {
    let b = &a.bass;
    if b.valid {
        println!(
            "{}: p={:.5} q={:.5} m={:.3} R2={:.4}",
            a.name, b.p, b.q, b.m, b.r_squared
        );
    } else {
        println!(
            "{}: engagement fit INVALID (p={:.5} q={:.5} m={:.3} R2={:.4}); series does not follow the diffusion shape",
            a.name, b.p, b.q, b.m, b.r_squared
        );
    }
    let g = &a.growth.params;
    println!(
        "{}: gamma={:.2} lambda={:.4} phi={:.4} (mse {:.3e})",
        a.name, g.gamma, g.lambda, g.phi, a.growth.objective
    );
    if let Some(fc) = &a.forecast {
        println!(
            "{}: T={:.2} months, {:.2} years remaining, lifetime {:.2} MM lines, lifetime {:.0} dev-months",
            a.name,
            fc.t_maturation,
            fc.remaining_years,
            fc.lifetime_growth / 1e6,
            fc.lifetime_dev_months
        );
    }
}

fn report_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(format!("{}.json", slug(name)))
}

fn base_report(a: &Analysis) -> LifecycleReport {
    LifecycleReport {
        project: a.name.clone(),
        fitted: Fitted {
            bass: a.bass,
            growth: a.growth.params,
        },
        forecast: a.forecast.as_ref().map(ForecastBlock::from),
        stability: None,
        valuation: None,
    }
}

fn cmd_fit(cfg: &RunConfig, project: &str) -> Result<i32> {
    let a = analyze(cfg, project)?;
    print_fit(&a);
    let path = report_path(cfg, &a.name);
    base_report(&a).write_json(&path)?;
    println!("report -> {}", path.display());
    if a.bass.valid {
        Ok(0)
    } else {
        eprintln!(
            "warning: {}: invalid engagement fit, forecasts unavailable",
            a.name
        );
        Ok(2)
    }
}

fn write_projection_files(cfg: &RunConfig, a: &Analysis, normalized: bool) -> Result<()> {
    let stem = slug(&a.name);
    a.series
        .write_csv_file(&cfg.output_dir.join(format!("{stem}_series.csv")))?;
    report::write_engagement_curve(
        &cfg.output_dir.join(format!("{stem}_engagement.csv")),
        &a.series,
        &a.bass,
    )?;
    let labor = LaborDriver::from_fit(&a.bass, &a.series);
    let path = fitted_path(&a.growth.params, &labor, a.series.len())?;
    report::write_growth_curve(
        &cfg.output_dir.join(format!("{stem}_growth.csv")),
        &a.series,
        &path,
    )?;
    report::write_growth_path(
        &cfg.output_dir.join(format!("{stem}_fitted_path.csv")),
        &path,
    )?;
    if let Some(fc) = &a.forecast {
        report::write_phase(&cfg.output_dir.join(format!("{stem}_phase.csv")), &fc.phase)?;
    }
    if normalized && a.bass.valid && a.bass.q > a.bass.p {
        let horizon = a
            .forecast
            .as_ref()
            .map(|fc| fc.t_maturation)
            .unwrap_or(a.series.len() as f64);
        let mut grid: Vec<f64> = (0..=200).map(|i| i as f64 * horizon / 200.0).collect();
        grid.push(a.bass.peak().time);
        grid.sort_by(f64::total_cmp);
        let curve = a.bass.normalize(&grid)?;
        report::write_normalized_curve(
            &cfg.output_dir.join(format!("{stem}_normalized.csv")),
            &curve.samples,
        )?;
    }
    Ok(())
}

fn cmd_project(cfg: &RunConfig, project: &str) -> Result<i32> {
    let a = analyze(cfg, project)?;
    print_fit(&a);
    if a.forecast.is_none() {
        return Err(Error::InvalidFit);
    }
    write_projection_files(cfg, &a, false)?;
    let path = report_path(cfg, &a.name);
    base_report(&a).write_json(&path)?;
    println!("report -> {}", path.display());
    Ok(0)
}

fn cmd_value(cfg: &RunConfig, project: &str, downloads: Option<&str>) -> Result<i32> {
    let a = analyze(cfg, project)?;
    print_fit(&a);
    let Some(fc) = &a.forecast else {
        return Err(Error::InvalidFit);
    };
    let downloads_map = match downloads {
        Some(source) => Some(load_downloads_source(source)?),
        None => None,
    };
    let window = downloads_map.as_ref().and_then(|m| m.get(&a.name).copied());
    if downloads_map.is_some() && window.is_none() {
        eprintln!("note: {}: no download data; demand side skipped", a.name);
    }
    let valuation = valuation_report(&a.series, fc, &cfg.valuation, window)?;
    println!(
        "{}: supply-side ${:.2} MM current, ${:.2} MM lifetime ({:.2} lines/dev-month)",
        a.name,
        valuation.supply_current / 1e6,
        valuation.supply_lifetime / 1e6,
        valuation.innov_per_devmonth
    );
    if let Some(demand) = &valuation.demand {
        match demand.downloads_ratio {
            Some(ratio) => println!(
                "{}: demand-side ratio {:.2} downloads/line, lifetime {} downloads, {} remaining",
                a.name,
                ratio,
                demand.lifetime_downloads.unwrap_or(0),
                demand.remaining_downloads
            ),
            None => println!(
                "{}: demand-side ratio undefined (no lines changed in window); {} downloads remaining",
                a.name, demand.remaining_downloads
            ),
        }
    }
    let mut rep = base_report(&a);
    rep.valuation = Some(valuation);
    let path = report_path(cfg, &a.name);
    rep.write_json(&path)?;
    println!("report -> {}", path.display());
    Ok(0)
}

fn cmd_stability(cfg: &RunConfig, project: &str, fraction: Option<f64>) -> Result<i32> {
    let fraction = fraction.unwrap_or(cfg.stability_fraction);
    let series = resolve_series(cfg, project)?;
    let result = stability_experiment(&series, fraction, cfg.valuation.maturation_threshold)?;
    match (result.growth_divergence, result.engagement_divergence) {
        (Some(g), Some(l)) => println!(
            "{}: divergence at fraction {:.2}: growth {:.2}%, engagement {:.2}%",
            series.project,
            fraction,
            g * 100.0,
            l * 100.0
        ),
        _ => println!(
            "{}: truncated fit invalid at fraction {:.2}; no divergence computed",
            series.project, fraction
        ),
    }
    let mut rep = LifecycleReport {
        project: series.project.clone(),
        fitted: Fitted {
            bass: result.full_fit.bass,
            growth: result.full_fit.growth,
        },
        forecast: None,
        stability: None,
        valuation: None,
    };
    rep.stability = Some(StabilityBlock::from(&result));
    let path = report_path(cfg, &series.project);
    rep.write_json(&path)?;
    println!("report -> {}", path.display());
    Ok(0)
}

/// Per-project outcome inside a batch run.
struct BatchItem {
    project: String,
    outcome: Result<Box<ProjectArtifacts>>,
}

struct ProjectArtifacts {
    analysis: Analysis,
    valuation: Option<crate::valuation::ValuationReport>,
    stability: Option<crate::forecast::StabilityResult>,
    downloads_window: Option<u64>,
}

fn run_one_project(
    cfg: &RunConfig,
    project: &str,
    downloads: Option<&std::collections::BTreeMap<String, u64>>,
    normalized: bool,
) -> Result<Box<ProjectArtifacts>> {
    let a = analyze(cfg, project)?;
    let window = downloads.and_then(|m| m.get(&a.name).copied());
    let valuation = match &a.forecast {
        Some(fc) => Some(valuation_report(&a.series, fc, &cfg.valuation, window)?),
        None => None,
    };
    let stability = if a.bass.valid {
        Some(stability_experiment(
            &a.series,
            cfg.stability_fraction,
            cfg.valuation.maturation_threshold,
        )?)
    } else {
        None
    };
    write_projection_files(cfg, &a, normalized)?;
    let mut rep = base_report(&a);
    rep.valuation = valuation;
    rep.stability = stability.as_ref().map(StabilityBlock::from);
    rep.write_json(&report_path(cfg, &a.name))?;
    Ok(Box::new(ProjectArtifacts {
        analysis: a,
        valuation,
        stability,
        downloads_window: window,
    }))
}

fn cmd_report(
    cfg: &RunConfig,
    projects: &[String],
    downloads: Option<&str>,
    normalized: bool,
    jobs: Option<usize>,
) -> Result<i32> {
    let mut project_list: Vec<String> = projects.to_vec();
    if project_list.is_empty() {
        project_list = cfg.projects.clone();
    }
    if project_list.is_empty() {
        return Err(Error::Config(
            "no projects given; pass them as arguments or set `projects` in the config".into(),
        ));
    }
    let downloads_map = match downloads {
        Some(source) => Some(load_downloads_source(source)?),
        None => None,
    };

    let workers = jobs
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1)
        .min(project_list.len().max(1));

    // fixed-size worker pool over an index queue; results keep input order
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<BatchItem>> = Vec::new();
    slots.resize_with(project_list.len(), || None);
    let slots = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= project_list.len() {
                    break;
                }
                let project = &project_list[i];
                let outcome = run_one_project(cfg, project, downloads_map.as_ref(), normalized);
                let item = BatchItem {
                    project: project.clone(),
                    outcome,
                };
                slots.lock().expect("slot lock")[i] = Some(item);
            });
        }
    });
    let items: Vec<BatchItem> = slots
        .into_inner()
        .expect("slot lock")
        .iter_mut()
        .map(|s| s.take().expect("every slot filled"))
        .collect();

    let mut engagement_rows = Vec::new();
    let mut valuation_rows = Vec::new();
    let mut download_rows = Vec::new();
    let mut exit = 0;
    for item in &items {
        match &item.outcome {
            Ok(art) => {
                let a = &art.analysis;
                let fc = a.forecast.as_ref();
                let status = if a.bass.valid {
                    "ok".to_string()
                } else {
                    exit = exit.max(2);
                    "invalid_fit".to_string()
                };
                engagement_rows.push(EngagementSummaryRow {
                    project: a.name.clone(),
                    start: a
                        .series
                        .months
                        .first()
                        .map(|m| m.to_string())
                        .unwrap_or_default(),
                    end: a
                        .series
                        .months
                        .last()
                        .map(|m| m.to_string())
                        .unwrap_or_default(),
                    params: Some(a.bass),
                    t_current: a.series.len() as u32,
                    t_maturation: fc.map(|f| f.t_maturation),
                    remaining_years: fc.map(|f| f.remaining_years),
                    status,
                });
                valuation_rows.push(ValuationSummaryRow {
                    project: a.name.clone(),
                    current_life: a.series.len() as u32,
                    full_life: fc.map(|f| f.t_maturation),
                    dev_months: a.series.total_dev_months(),
                    current_growth: a.series.total_lines(),
                    lifetime_growth: fc.map(|f| f.lifetime_growth),
                    valuation: art.valuation,
                });
                if let (Some(window), Some(v)) = (art.downloads_window, &art.valuation) {
                    if let Some(demand) = &v.demand {
                        download_rows.push(report::DownloadsSummaryRow {
                            project: a.name.clone(),
                            downloads_6mo: window,
                            lines_changed_6mo: a.series.trailing_lines(DOWNLOAD_WINDOW_MONTHS),
                            ratio: demand.downloads_ratio,
                            lifetime_downloads: demand.lifetime_downloads,
                            remaining_downloads: demand.remaining_downloads,
                        });
                    }
                }
                if let Some(st) = &art.stability {
                    if let (Some(g), Some(l)) = (st.growth_divergence, st.engagement_divergence) {
                        println!(
                            "{}: stability divergence growth {:.2}% engagement {:.2}%",
                            a.name,
                            g * 100.0,
                            l * 100.0
                        );
                    }
                }
                print_fit(a);
            }
            Err(e) => {
                eprintln!("error: {}: {e}", item.project);
                exit = exit.max(e.exit_class());
                engagement_rows.push(EngagementSummaryRow {
                    project: item.project.clone(),
                    start: String::new(),
                    end: String::new(),
                    params: None,
                    t_current: 0,
                    t_maturation: None,
                    remaining_years: None,
                    status: format!("error: {e}").replace(',', ";"),
                });
            }
        }
    }
    report::write_engagement_summary(
        &cfg.output_dir.join("summary_engagement.csv"),
        &engagement_rows,
    )?;
    report::write_valuation_summary(
        &cfg.output_dir.join("summary_valuation.csv"),
        &valuation_rows,
    )?;
    if !download_rows.is_empty() {
        report::write_downloads_summary(
            &cfg.output_dir.join("summary_downloads.csv"),
            &download_rows,
        )?;
    }
    println!(
        "batch: {} projects, {} failed -> {}",
        items.len(),
        items.iter().filter(|i| i.outcome.is_err()).count(),
        cfg.output_dir.display()
    );
    Ok(exit)
}
