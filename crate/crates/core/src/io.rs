//! Configuration and CSV serialization.
//!
//! The config file is a flat `key = value` text format with `#` comments so
//! any tooling can read it. All CSV output is UTF-8, LF, comma-separated
//! with a mandatory header row; numbers are written with 10 significant
//! digits and a `.` decimal separator regardless of locale.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::detect::HmmParams;
use crate::sim::{canonical_sigma_levels, SimConfig};
use crate::track::MotionModel;
use crate::types::{Error, GazeSample, GroundTruth, PageGeometry, Result};

/// Everything a run needs, with defaults mirroring the experimental
/// protocol (25 lines, 600-unit text width, nine sigma levels, 20 pages).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub num_lines: usize,
    pub line_spacing: f64,
    pub text_width: f64,
    /// Defaults to half the line spacing when not set explicitly.
    pub emission_std: Option<f64>,
    pub p_stay: f64,
    pub p_advance: f64,
    pub p_other_total: f64,
    pub initial_mass_on_line1: f64,
    pub delta_t: f64,
    pub sigma: f64,
    pub sigma_levels: Vec<f64>,
    pub fixations_per_line: usize,
    pub pages: usize,
    pub rng_seed: u64,
    /// Input coordinates are normalized [0,1] and must be mapped onto the
    /// page frame.
    pub normalized_coords: bool,
    pub input: Option<String>,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            num_lines: 25,
            line_spacing: 25.0,
            text_width: 600.0,
            emission_std: None,
            p_stay: 0.94,
            p_advance: 0.05,
            p_other_total: 0.01,
            initial_mass_on_line1: 0.9,
            delta_t: 64.0,
            sigma: 1.0,
            sigma_levels: canonical_sigma_levels().to_vec(),
            fixations_per_line: 40,
            pages: 20,
            rng_seed: 7,
            normalized_coords: false,
            input: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn geometry(&self) -> Result<PageGeometry> {
        PageGeometry::new(self.num_lines, self.line_spacing, self.text_width)
    }

    pub fn hmm_params(&self) -> HmmParams {
        HmmParams {
            emission_std: self.emission_std.unwrap_or(0.5 * self.line_spacing),
            p_stay: self.p_stay,
            p_advance: self.p_advance,
            p_other_total: self.p_other_total,
            initial_mass_on_line1: self.initial_mass_on_line1,
        }
    }

    pub fn motion_model(&self) -> MotionModel {
        MotionModel {
            delta_t: self.delta_t,
            sigma: self.sigma,
        }
    }

    pub fn sim_config(&self, sigma: f64) -> Result<SimConfig> {
        Ok(SimConfig {
            geometry: self.geometry()?,
            sigma,
            fixations_per_line: self.fixations_per_line,
            pages: self.pages,
            rng_seed: self.rng_seed,
        })
    }

    /// Parse a flat key-value config file. Every problem (unknown keys,
    /// unparseable values) is collected and reported in one message.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::default();
        let mut problems: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected `key = value`", lineno + 1));
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            if let Err(msg) = config.set(key, value) {
                problems.push(format!("line {}: {}", lineno + 1, msg));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(format!(
                "{}: {}",
                path.display(),
                problems.join("; ")
            )));
        }
        config.apply_env_seed();
        Ok(config)
    }

    /// `GPT_SEED` overrides the configured seed, for CI reproducibility.
    pub fn apply_env_seed(&mut self) {
        if let Ok(s) = std::env::var("GPT_SEED") {
            if let Ok(seed) = s.trim().parse() {
                self.rng_seed = seed;
            }
        }
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value `{value}` for key `{key}`"))
        }
        match key {
            "num_lines" => self.num_lines = num(key, value)?,
            "line_spacing" => self.line_spacing = num(key, value)?,
            "text_width" => self.text_width = num(key, value)?,
            "emission_std" => self.emission_std = Some(num(key, value)?),
            "p_stay" => self.p_stay = num(key, value)?,
            "p_advance" => self.p_advance = num(key, value)?,
            "p_other_total" => self.p_other_total = num(key, value)?,
            "initial_mass_on_line1" => self.initial_mass_on_line1 = num(key, value)?,
            "delta_t" => self.delta_t = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "sigma_levels" => {
                let mut levels = Vec::new();
                for part in value.split(',') {
                    levels.push(num::<f64>(key, part.trim())?);
                }
                if levels.is_empty() {
                    return Err("sigma_levels must not be empty".into());
                }
                self.sigma_levels = levels;
            }
            "fixations_per_line" => self.fixations_per_line = num(key, value)?,
            "pages" => self.pages = num(key, value)?,
            "rng_seed" => self.rng_seed = num(key, value)?,
            "normalized_coords" => {
                self.normalized_coords = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(format!("invalid value `{value}` for key `{key}`")),
                }
            }
            "input" => self.input = Some(value.to_string()),
            "out" => self.out = Some(value.to_string()),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

/// Format with 10 significant digits, shortest representation. Ten digits
/// keep the worst-case round-trip error under 1e-9 relative.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(9 - exp);
    let rounded = (v * scale).round() / scale;
    format!("{rounded}")
}

/// One row of a tracked/labeled result file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedRow {
    pub sample: GazeSample,
    pub est_line: usize,
    pub x_hat: Option<f64>,
}

fn data_err(path: &Path, msg: String) -> Error {
    Error::DataFormat {
        path: path.display().to_string(),
        msg,
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Read a Gazepoint-style fixation CSV: a header row, then
/// `index,time,fpog_x,fpog_y` (index and time columns optional). With
/// `normalized`, coordinates in [0,1] are mapped onto the page frame as
/// `x * text_width` and `y * (N+1) * line_spacing`.
///
/// Returns the samples plus non-fatal warnings (non-monotone time).
pub fn parse_fixation_csv(
    path: &Path,
    geometry: &PageGeometry,
    normalized: bool,
) -> Result<(Vec<GazeSample>, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| data_err(path, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(data_err(path, "empty file: no header row".into()));
    }
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (x_col, y_col) = match (col("fpog_x"), col("fpog_y")) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            return Err(data_err(
                path,
                format!(
                    "header must contain fpog_x and fpog_y, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            ))
        }
    };
    let index_col = col("index");
    let time_col = col("time");

    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    let mut last_time: Option<f64> = None;
    let mut last_index: Option<usize> = None;
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| data_err(path, e.to_string()))?;
        let lineno = record
            .position()
            .map(|p| p.line())
            .unwrap_or(row as u64 + 2);
        let field = |c: usize| -> std::result::Result<f64, Error> {
            record
                .get(c)
                .ok_or_else(|| data_err(path, format!("row {lineno}: missing column {}", c + 1)))?
                .parse()
                .map_err(|_| {
                    data_err(
                        path,
                        format!("row {lineno}: non-numeric value `{}`", &record[c]),
                    )
                })
        };
        let mut z_x = field(x_col)?;
        let mut z_y = field(y_col)?;
        if normalized {
            z_x *= geometry.text_width;
            z_y *= (geometry.num_lines + 1) as f64 * geometry.line_spacing;
        }
        let timestamp = match time_col {
            Some(c) => Some(field(c)?),
            None => None,
        };
        if let (Some(prev), Some(t)) = (last_time, timestamp) {
            if t < prev {
                warnings.push(format!(
                    "row {lineno}: time {t} earlier than previous {prev}"
                ));
            }
        }
        last_time = timestamp.or(last_time);
        let index = match index_col {
            Some(c) => {
                let v = field(c)?;
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(data_err(
                        path,
                        format!("row {lineno}: index `{v}` is not a positive integer"),
                    ));
                }
                let idx = v as usize;
                if let Some(prev) = last_index {
                    if idx <= prev {
                        return Err(data_err(
                            path,
                            format!("row {lineno}: index {idx} not strictly increasing"),
                        ));
                    }
                }
                idx
            }
            None => row + 1,
        };
        last_index = Some(index);
        samples.push(GazeSample {
            index,
            z_x,
            z_y,
            timestamp,
        });
    }
    if samples.is_empty() {
        return Err(data_err(path, "empty file: no fixation rows".into()));
    }
    Ok((samples, warnings))
}

/// Write measurements in the fixation CSV layout the reader accepts.
pub fn write_fixation_csv(samples: &[GazeSample], delta_t: f64, path: &Path) -> Result<()> {
    let mut out = String::from("index,time,fpog_x,fpog_y\n");
    for s in samples {
        let time = s.timestamp.unwrap_or((s.index - 1) as f64 * delta_t);
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.index,
            fmt_num(time),
            fmt_num(s.z_x),
            fmt_num(s.z_y)
        ));
    }
    write_atomic(path, &out)
}

pub fn write_truth_csv(truth: &[GroundTruth], path: &Path) -> Result<()> {
    let mut out = String::from("index,true_x,true_y,true_line\n");
    for t in truth {
        out.push_str(&format!(
            "{},{},{},{}\n",
            t.index,
            fmt_num(t.true_x),
            fmt_num(t.true_y),
            t.true_line
        ));
    }
    write_atomic(path, &out)
}

pub fn read_truth_csv(path: &Path) -> Result<Vec<GroundTruth>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, e.to_string()))?;
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| data_err(path, e.to_string()))?;
        let get = |c: usize| -> Result<f64> {
            record
                .get(c)
                .ok_or_else(|| {
                    data_err(path, format!("row {}: missing column {}", row + 2, c + 1))
                })?
                .parse()
                .map_err(|_| data_err(path, format!("row {}: non-numeric value", row + 2)))
        };
        out.push(GroundTruth {
            index: get(0)? as usize,
            true_x: get(1)?,
            true_y: get(2)?,
            true_line: get(3)? as usize,
        });
    }
    if out.is_empty() {
        return Err(data_err(path, "empty truth file".into()));
    }
    Ok(out)
}

/// Write labeled+tracked results: `index,z_x,z_y,est_line,x_hat`, with
/// x_hat blank where the batch was skipped.
pub fn write_labeled_csv(rows: &[TrackedRow], path: &Path) -> Result<()> {
    let mut out = String::from("index,z_x,z_y,est_line,x_hat\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.sample.index,
            fmt_num(r.sample.z_x),
            fmt_num(r.sample.z_y),
            r.est_line,
            r.x_hat.map(fmt_num).unwrap_or_default()
        ));
    }
    write_atomic(path, &out)
}

pub fn read_labeled_csv(path: &Path) -> Result<Vec<TrackedRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, e.to_string()))?;
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| data_err(path, e.to_string()))?;
        let get = |c: usize| -> Result<f64> {
            record
                .get(c)
                .ok_or_else(|| {
                    data_err(path, format!("row {}: missing column {}", row + 2, c + 1))
                })?
                .parse()
                .map_err(|_| data_err(path, format!("row {}: non-numeric value", row + 2)))
        };
        let x_hat = match record.get(4) {
            Some("") | None => None,
            Some(v) => Some(
                v.parse()
                    .map_err(|_| data_err(path, format!("row {}: non-numeric x_hat", row + 2)))?,
            ),
        };
        out.push(TrackedRow {
            sample: GazeSample {
                index: get(0)? as usize,
                z_x: get(1)?,
                z_y: get(2)?,
                timestamp: None,
            },
            est_line: get(3)? as usize,
            x_hat,
        });
    }
    if out.is_empty() {
        return Err(data_err(path, "empty results file".into()));
    }
    Ok(out)
}

/// Report rows keyed by (sigma, page), written as
/// `sigma,page,m,accuracy,nrmse_measured,nrmse_estimated` with one
/// summary (`page = mean`) row per sigma.
pub fn write_report_csv(reports: &[crate::eval::EvalReport], path: &Path) -> Result<()> {
    let mut out = String::from("sigma,page,m,accuracy,nrmse_measured,nrmse_estimated\n");
    for r in reports {
        for p in 0..r.matched_count_per_page.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_num(r.sigma),
                p + 1,
                r.matched_count_per_page[p],
                fmt_num(r.detection_accuracy_per_page[p]),
                r.per_page_nrmse_measured[p]
                    .map(fmt_num)
                    .unwrap_or_default(),
                r.per_page_nrmse_estimated[p]
                    .map(fmt_num)
                    .unwrap_or_default(),
            ));
        }
        let total_m: usize = r.matched_count_per_page.iter().sum();
        let mean_acc = if r.detection_accuracy_per_page.is_empty() {
            0.0
        } else {
            r.detection_accuracy_per_page.iter().sum::<f64>()
                / r.detection_accuracy_per_page.len() as f64
        };
        out.push_str(&format!(
            "{},mean,{},{},{},{}\n",
            fmt_num(r.sigma),
            total_m,
            fmt_num(mean_acc),
            r.mean_nrmse_measured.map(fmt_num).unwrap_or_default(),
            r.mean_nrmse_estimated.map(fmt_num).unwrap_or_default(),
        ));
    }
    write_atomic(path, &out)
}

/// The measured-vs-estimated comparison curve behind the NRMSE plot.
pub fn write_nrmse_curve_csv(reports: &[crate::eval::EvalReport], path: &Path) -> Result<()> {
    let mut rows: BTreeMap<String, (Option<f64>, Option<f64>)> = BTreeMap::new();
    let mut out = String::from("sigma,mean_nrmse_measured,mean_nrmse_estimated\n");
    for r in reports {
        rows.insert(
            fmt_num(r.sigma),
            (r.mean_nrmse_measured, r.mean_nrmse_estimated),
        );
    }
    // Numeric order, not string order.
    let mut keyed: Vec<(f64, String)> = rows
        .keys()
        .map(|k| (k.parse::<f64>().unwrap_or(f64::MAX), k.clone()))
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (_, key) in keyed {
        let (measured, estimated) = rows[&key];
        out.push_str(&format!(
            "{},{},{}\n",
            key,
            measured.map(fmt_num).unwrap_or_default(),
            estimated.map(fmt_num).unwrap_or_default(),
        ));
    }
    write_atomic(path, &out)
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn fmt_num_round_trips_within_1e9() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.2), "0.2");
        assert_eq!(fmt_num(600.0), "600");
        assert_eq!(fmt_num(123.4567891234), "123.4567891");
        let v = std::f64::consts::PI;
        let parsed: f64 = fmt_num(v).parse().unwrap();
        assert!((parsed - v).abs() <= 1e-9 * v);
    }

    #[test]
    fn config_defaults_and_overrides() {
        let f = write_tmp("num_lines = 10\nsigma_levels = 0.1, 0.5\n# comment\npages=3\n");
        let c = RunConfig::from_file(f.path()).unwrap();
        assert_eq!(c.num_lines, 10);
        assert_eq!(c.sigma_levels, vec![0.1, 0.5]);
        assert_eq!(c.pages, 3);
        assert_eq!(c.text_width, 600.0);
    }

    #[test]
    fn config_rejects_unknown_keys_exhaustively() {
        let f = write_tmp("bogus = 1\nnum_lines = x\nalso_bad = 2\n");
        let err = RunConfig::from_file(f.path()).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(err.contains("also_bad"), "{err}");
        assert!(err.contains("num_lines"), "{err}");
    }

    #[test]
    fn fixation_csv_roundtrip() {
        let samples: Vec<GazeSample> = (1..=3)
            .map(|i| GazeSample {
                index: i,
                z_x: i as f64 * 1.234567891,
                z_y: i as f64 * 9.87654321,
                timestamp: Some(i as f64),
            })
            .collect();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_fixation_csv(&samples, 64.0, f.path()).unwrap();
        let geom = PageGeometry::default();
        let (parsed, warnings) = parse_fixation_csv(f.path(), &geom, false).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(parsed.len(), 3);
        for (a, b) in parsed.iter().zip(&samples) {
            assert_eq!(a.index, b.index);
            assert!((a.z_x - b.z_x).abs() <= 1e-9 * b.z_x.abs().max(1.0));
            assert!((a.z_y - b.z_y).abs() <= 1e-9 * b.z_y.abs().max(1.0));
        }
    }

    #[test]
    fn fixation_csv_errors_name_the_row() {
        let f = write_tmp("index,time,fpog_x,fpog_y\n1,0,1.0,2.0\n2,1,oops,4.0\n");
        let geom = PageGeometry::default();
        let err = parse_fixation_csv(f.path(), &geom, false)
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 3") && err.contains("oops"), "{err}");
    }

    #[test]
    fn fixation_csv_empty_file_rejected() {
        let f = write_tmp("");
        let geom = PageGeometry::default();
        assert!(parse_fixation_csv(f.path(), &geom, false).is_err());
        let header_only = write_tmp("index,time,fpog_x,fpog_y\n");
        assert!(parse_fixation_csv(header_only.path(), &geom, false).is_err());
    }

    #[test]
    fn fixation_csv_non_monotone_time_warns() {
        let f = write_tmp("index,time,fpog_x,fpog_y\n1,5,1,1\n2,3,2,2\n");
        let geom = PageGeometry::default();
        let (samples, warnings) = parse_fixation_csv(f.path(), &geom, false).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn normalized_coordinates_map_onto_page() {
        let f = write_tmp("fpog_x,fpog_y\n0.5,0.5\n");
        let geom = PageGeometry::default();
        let (samples, _) = parse_fixation_csv(f.path(), &geom, true).unwrap();
        assert!((samples[0].z_x - 300.0).abs() < 1e-9);
        assert!((samples[0].z_y - 325.0).abs() < 1e-9);
        assert_eq!(samples[0].index, 1); // rewritten, no index column
    }

    #[test]
    fn labeled_csv_empty_and_single() {
        let f = tempfile::NamedTempFile::new().unwrap();
        write_labeled_csv(&[], f.path()).unwrap();
        let contents = fs::read_to_string(f.path()).unwrap();
        assert_eq!(contents, "index,z_x,z_y,est_line,x_hat\n");

        let row = TrackedRow {
            sample: GazeSample {
                index: 1,
                z_x: 2.0,
                z_y: 3.0,
                timestamp: None,
            },
            est_line: 1,
            x_hat: None,
        };
        write_labeled_csv(&[row], f.path()).unwrap();
        let contents = fs::read_to_string(f.path()).unwrap();
        assert_eq!(contents.lines().count(), 2);
        assert!(contents.ends_with("1,2,3,1,\n"));
    }

    #[test]
    fn labeled_csv_roundtrip() {
        let rows: Vec<TrackedRow> = (1..=4)
            .map(|i| TrackedRow {
                sample: GazeSample {
                    index: i,
                    z_x: i as f64 * 0.123456789,
                    z_y: i as f64 * 25.0,
                    timestamp: None,
                },
                est_line: i,
                x_hat: if i == 2 { None } else { Some(i as f64 * 7.77) },
            })
            .collect();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_labeled_csv(&rows, f.path()).unwrap();
        let parsed = read_labeled_csv(f.path()).unwrap();
        for (a, b) in parsed.iter().zip(&rows) {
            assert_eq!(a.sample.index, b.sample.index);
            assert_eq!(a.est_line, b.est_line);
            assert_eq!(a.x_hat.is_none(), b.x_hat.is_none());
            if let (Some(x), Some(y)) = (a.x_hat, b.x_hat) {
                assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
            }
        }
    }
}
