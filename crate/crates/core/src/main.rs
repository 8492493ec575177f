//! Command-line frontend: simulate, track, evaluate, and the full
//! pipeline over all configured noise levels.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use readtrack::eval::PageResult;
use readtrack::io::{self, RunConfig, TrackedRow};
use readtrack::types::Error;
use readtrack::{
    detect_lines, evaluate_dataset, generate_dataset, split_into_batches, track_page, EvalReport,
    GazeSample, SimulatedPage,
};

#[derive(Parser)]
#[command(
    name = "readtrack",
    about = "Track reading progression from eye-gaze fixations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate simulated fixation pages for every configured noise level
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect lines and smooth the horizontal trajectory of one fixation file
    Track {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare tracked results against simulated ground truth
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate, track, and evaluate across all noise levels
    Pipeline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success, everything else is usage.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate { config, out } => load(config).and_then(|c| simulate(&c, &out)),
        Command::Track { config, input, out } => {
            load(config).and_then(|c| track(&c, &input, &out).map(|_| ()))
        }
        Command::Evaluate {
            config,
            truth,
            results,
            out,
        } => load(config).and_then(|c| evaluate(&c, &truth, &results, &out)),
        Command::Pipeline { config, out } => load(config).and_then(|c| pipeline(&c, &out)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn load(config: Option<PathBuf>) -> Result<RunConfig, Error> {
    match config {
        Some(path) => RunConfig::from_file(&path),
        None => {
            let mut c = RunConfig::default();
            c.apply_env_seed();
            Ok(c)
        }
    }
}

fn sigma_dir(out: &Path, sigma: f64) -> PathBuf {
    out.join(format!("sigma_{}", io::fmt_num(sigma)))
}

fn mkdir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn write_page_files(
    config: &RunConfig,
    dir: &Path,
    p: usize,
    page: &SimulatedPage,
) -> Result<(), Error> {
    io::write_truth_csv(
        &page.truth,
        &dir.join(format!("page_{:02}_truth.csv", p + 1)),
    )?;
    io::write_fixation_csv(
        &page.measurements,
        config.delta_t,
        &dir.join(format!("page_{:02}_measured.csv", p + 1)),
    )
}

fn simulate(config: &RunConfig, out: &Path) -> Result<(), Error> {
    for &sigma in &config.sigma_levels {
        let dir = sigma_dir(out, sigma);
        mkdir(&dir)?;
        let pages = generate_dataset(&config.sim_config(sigma)?)?;
        for (p, page) in pages.iter().enumerate() {
            write_page_files(config, &dir, p, page)?;
        }
    }
    Ok(())
}

/// Detect lines, split into batches, fit, and assemble output rows.
fn track_samples(config: &RunConfig, samples: &[GazeSample]) -> Result<Vec<TrackedRow>, Error> {
    let geometry = config.geometry()?;
    let params = config.hmm_params();
    let labeled = detect_lines(samples, &geometry, &params)?;
    let batches = split_into_batches(&labeled, &geometry)?;
    let (_, flat) = track_page(&batches, &config.motion_model());
    Ok(labeled
        .iter()
        .map(|l| TrackedRow {
            sample: l.sample,
            est_line: l.est_line,
            x_hat: flat.get(l.sample.index - 1).copied().flatten(),
        })
        .collect())
}

fn track(config: &RunConfig, input: &Path, out: &Path) -> Result<PathBuf, Error> {
    let geometry = config.geometry()?;
    let (samples, warnings) = io::parse_fixation_csv(input, &geometry, config.normalized_coords)?;
    for w in warnings {
        eprintln!("warning: {}: {w}", input.display());
    }
    let rows = track_samples(config, &samples)?;
    mkdir(out)?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    let path = out.join(format!("{stem}_tracked.csv"));
    io::write_labeled_csv(&rows, &path)?;
    Ok(path)
}

/// Pair `page_NN_truth.csv` files with `page_NN_*_tracked.csv` results.
fn evaluate(
    config: &RunConfig,
    truth_dir: &Path,
    results_dir: &Path,
    out: &Path,
) -> Result<(), Error> {
    let mut truth_files: Vec<(String, PathBuf)> = Vec::new();
    let entries = fs::read_dir(truth_dir).map_err(|source| Error::Io {
        path: truth_dir.display().to_string(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: truth_dir.display().to_string(),
            source,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(page) = name
            .strip_prefix("page_")
            .and_then(|s| s.strip_suffix("_truth.csv"))
        {
            truth_files.push((page.to_string(), entry.path()));
        }
    }
    if truth_files.is_empty() {
        return Err(Error::DataFormat {
            path: truth_dir.display().to_string(),
            msg: "no page_*_truth.csv files found".into(),
        });
    }
    truth_files.sort();

    let mut pages = Vec::new();
    for (page_id, truth_path) in &truth_files {
        let result_path = find_result_file(results_dir, page_id)?;
        let truth = io::read_truth_csv(truth_path)?;
        let rows = io::read_labeled_csv(&result_path)?;
        if truth.len() != rows.len() {
            return Err(Error::DataFormat {
                path: result_path.display().to_string(),
                msg: format!(
                    "{} rows but {} has {} rows",
                    rows.len(),
                    truth_path.display(),
                    truth.len()
                ),
            });
        }
        pages.push(page_result(&truth, &rows));
    }
    let report = evaluate_dataset(&pages, config.text_width, config.sigma)?;
    warn_unmatched(&report);
    io::write_report_csv(&[report], out)
}

fn find_result_file(results_dir: &Path, page_id: &str) -> Result<PathBuf, Error> {
    let entries = fs::read_dir(results_dir).map_err(|source| Error::Io {
        path: results_dir.display().to_string(),
        source,
    })?;
    let prefix = format!("page_{page_id}_");
    let mut candidates: Vec<PathBuf> = Vec::new();
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with(&prefix) && name.ends_with("_tracked.csv") {
            candidates.push(entry.path());
        }
    }
    candidates.sort();
    candidates
        .into_iter()
        .next()
        .ok_or_else(|| Error::DataFormat {
            path: results_dir.display().to_string(),
            msg: format!("no tracked results for page {page_id}"),
        })
}

fn page_result(truth: &[readtrack::GroundTruth], rows: &[TrackedRow]) -> PageResult {
    let labeled = rows
        .iter()
        .map(|r| readtrack::LabeledSample {
            sample: r.sample,
            est_line: r.est_line,
        })
        .collect();
    let t_len = rows.iter().map(|r| r.sample.index).max().unwrap_or(0);
    let mut x_hat = vec![None; t_len];
    for r in rows {
        x_hat[r.sample.index - 1] = r.x_hat;
    }
    PageResult {
        truth: truth.to_vec(),
        labeled,
        x_hat,
    }
}

fn warn_unmatched(report: &EvalReport) {
    for p in &report.pages_without_matches {
        eprintln!(
            "warning: page {p} has no correctly classified samples; excluded from the NRMSE mean"
        );
    }
}

fn pipeline(config: &RunConfig, out: &Path) -> Result<(), Error> {
    let mut reports = Vec::with_capacity(config.sigma_levels.len());
    for &sigma in &config.sigma_levels {
        let dir = sigma_dir(out, sigma);
        mkdir(&dir)?;
        let sim_pages = generate_dataset(&config.sim_config(sigma)?)?;
        let mut pages = Vec::with_capacity(sim_pages.len());
        for (p, page) in sim_pages.iter().enumerate() {
            write_page_files(config, &dir, p, page)?;
            let rows = track_samples(config, &page.measurements)?;
            io::write_labeled_csv(
                &rows,
                &dir.join(format!("page_{:02}_measured_tracked.csv", p + 1)),
            )?;
            pages.push(page_result(&page.truth, &rows));
        }
        let report = evaluate_dataset(&pages, config.text_width, sigma)?;
        warn_unmatched(&report);
        reports.push(report);
    }
    io::write_report_csv(&reports, &out.join("report.csv"))?;
    io::write_nrmse_curve_csv(&reports, &out.join("nrmse_curve.csv"))
}
