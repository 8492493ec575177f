//! NRMSE evaluation over correctly classified fixations, plus detection
//! accuracy, following the simulated-data protocol: the error of measured
//! and estimated x-coordinates against truth is computed on the same
//! matched index set and averaged over pages.

use crate::types::{Error, GroundTruth, LabeledSample, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub sigma: f64,
    /// NRMSE per page, `None` where no sample was correctly classified.
    pub per_page_nrmse_estimated: Vec<Option<f64>>,
    pub per_page_nrmse_measured: Vec<Option<f64>>,
    pub mean_nrmse_estimated: Option<f64>,
    pub mean_nrmse_measured: Option<f64>,
    pub matched_count_per_page: Vec<usize>,
    pub detection_accuracy_per_page: Vec<f64>,
    /// Pages excluded from the means for lack of matched samples.
    pub pages_without_matches: Vec<usize>,
}

/// Everything evaluation needs for one page: truth, detector labels, and
/// the flattened estimates from the tracker (page index `i` at entry
/// `i-1`).
#[derive(Debug, Clone)]
pub struct PageResult {
    pub truth: Vec<GroundTruth>,
    pub labeled: Vec<LabeledSample>,
    pub x_hat: Vec<Option<f64>>,
}

/// Positions (0-based, ascending) where the estimated line equals the true
/// line. Inputs must be aligned element-wise by sample index.
pub fn matched_indices(labeled: &[LabeledSample], truth: &[GroundTruth]) -> Result<Vec<usize>> {
    if labeled.len() != truth.len() {
        return Err(Error::Alignment(format!(
            "labeled has {} samples but truth has {}",
            labeled.len(),
            truth.len()
        )));
    }
    for (l, t) in labeled.iter().zip(truth) {
        if l.sample.index != t.index {
            return Err(Error::Alignment(format!(
                "sample index {} paired with truth index {}",
                l.sample.index, t.index
            )));
        }
    }
    Ok(labeled
        .iter()
        .zip(truth)
        .enumerate()
        .filter(|(_, (l, t))| l.est_line == t.true_line)
        .map(|(i, _)| i)
        .collect())
}

/// Root-mean-square error normalized by the text width, as a percentage.
pub fn nrmse_page(values: &[f64], truth_x: &[f64], text_width: f64, page: usize) -> Result<f64> {
    if values.len() != truth_x.len() {
        return Err(Error::Alignment(format!(
            "{} values vs {} truth points on page {page}",
            values.len(),
            truth_x.len()
        )));
    }
    if values.is_empty() {
        return Err(Error::UndefinedMetric { page });
    }
    let mse = values
        .iter()
        .zip(truth_x)
        .map(|(v, t)| (v - t) * (v - t))
        .sum::<f64>()
        / values.len() as f64;
    Ok(mse.sqrt() * 100.0 / text_width)
}

/// Evaluate tracked pages: per-page NRMSE for measured and estimated
/// x-coordinates over the identical matched set, detection accuracy, and
/// cross-page means. Pages with no matches are excluded from the means.
pub fn evaluate_dataset(pages: &[PageResult], text_width: f64, sigma: f64) -> Result<EvalReport> {
    let mut report = EvalReport {
        sigma,
        per_page_nrmse_estimated: Vec::with_capacity(pages.len()),
        per_page_nrmse_measured: Vec::with_capacity(pages.len()),
        mean_nrmse_estimated: None,
        mean_nrmse_measured: None,
        matched_count_per_page: Vec::with_capacity(pages.len()),
        detection_accuracy_per_page: Vec::with_capacity(pages.len()),
        pages_without_matches: Vec::new(),
    };
    for (p, page) in pages.iter().enumerate() {
        let matched = matched_indices(&page.labeled, &page.truth)?;
        let m = matched.len();
        let t_len = page.truth.len();
        report.matched_count_per_page.push(m);
        report.detection_accuracy_per_page.push(if t_len == 0 {
            0.0
        } else {
            m as f64 / t_len as f64
        });
        if m == 0 {
            report.per_page_nrmse_estimated.push(None);
            report.per_page_nrmse_measured.push(None);
            report.pages_without_matches.push(p + 1);
            continue;
        }
        let truth_x: Vec<f64> = matched.iter().map(|&i| page.truth[i].true_x).collect();
        let measured: Vec<f64> = matched
            .iter()
            .map(|&i| page.labeled[i].sample.z_x)
            .collect();
        let mut estimated = Vec::with_capacity(m);
        for &i in &matched {
            let idx = page.labeled[i].sample.index;
            match page.x_hat.get(idx - 1).copied().flatten() {
                Some(x) => estimated.push(x),
                None => {
                    return Err(Error::Alignment(format!(
                        "no tracked estimate for matched sample index {idx} on page {}",
                        p + 1
                    )))
                }
            }
        }
        report.per_page_nrmse_measured.push(Some(nrmse_page(
            &measured,
            &truth_x,
            text_width,
            p + 1,
        )?));
        report.per_page_nrmse_estimated.push(Some(nrmse_page(
            &estimated,
            &truth_x,
            text_width,
            p + 1,
        )?));
    }
    report.mean_nrmse_measured = mean_of(&report.per_page_nrmse_measured);
    report.mean_nrmse_estimated = mean_of(&report.per_page_nrmse_estimated);
    Ok(report)
}

fn mean_of(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>() / present.len() as f64)
    }
}
