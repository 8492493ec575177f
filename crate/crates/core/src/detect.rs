//! HMM line detector: assigns each fixation an estimated line from its
//! y-coordinate via Viterbi decoding over lines `1..=N`.
//!
//! Emissions are Gaussians centered on the known line centers; transitions
//! are biased toward staying on a line or advancing one line, with a small
//! residual mass spread over all other jumps. All arithmetic is in the log
//! domain.

use crate::types::{Error, GazeSample, LabeledSample, PageGeometry, Result};

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmmParams {
    /// Emission standard deviation in page units.
    pub emission_std: f64,
    pub p_stay: f64,
    pub p_advance: f64,
    /// Mass spread uniformly over all transitions other than stay/advance.
    pub p_other_total: f64,
    pub initial_mass_on_line1: f64,
}

impl HmmParams {
    /// Defaults tuned for the given geometry: the emission std is half the
    /// line spacing.
    pub fn defaults_for(geometry: &PageGeometry) -> Self {
        Self {
            emission_std: 0.5 * geometry.line_spacing,
            p_stay: 0.94,
            p_advance: 0.05,
            p_other_total: 0.01,
            initial_mass_on_line1: 0.9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sum = self.p_stay + self.p_advance + self.p_other_total;
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidHmmParams(format!(
                "p_stay + p_advance + p_other_total = {sum}, expected 1"
            )));
        }
        for (name, p) in [
            ("p_stay", self.p_stay),
            ("p_advance", self.p_advance),
            ("p_other_total", self.p_other_total),
            ("initial_mass_on_line1", self.initial_mass_on_line1),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidHmmParams(format!(
                    "{name} = {p} not in [0,1]"
                )));
            }
        }
        if self.emission_std.is_nan() || self.emission_std <= 0.0 {
            return Err(Error::InvalidHmmParams(format!(
                "emission_std = {} must be > 0",
                self.emission_std
            )));
        }
        Ok(())
    }

    /// Initial distribution over lines `1..=n`: `initial_mass_on_line1` on
    /// line 1, remainder uniform over the rest. For a single line all mass
    /// is on it.
    pub fn initial_probs(&self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        let rest = (1.0 - self.initial_mass_on_line1) / (n - 1) as f64;
        let mut probs = vec![rest; n];
        probs[0] = self.initial_mass_on_line1;
        probs
    }

    /// One transition row: stay gets `p_stay`, the next line `p_advance`,
    /// every other line an equal share of `p_other_total`. Weights for
    /// targets that do not exist (advancing past the last line, no "other"
    /// lines) are dropped and the row renormalized.
    pub fn transition_probs(&self, from: usize, n: usize) -> Vec<f64> {
        debug_assert!(from >= 1 && from <= n);
        let mut row = vec![0.0; n];
        row[from - 1] = self.p_stay;
        if from < n {
            row[from - 1 + 1] = self.p_advance;
        }
        let others: Vec<usize> = (1..=n).filter(|&t| t != from && t != from + 1).collect();
        if !others.is_empty() {
            let share = self.p_other_total / others.len() as f64;
            for t in others {
                row[t - 1] = share;
            }
        }
        let sum: f64 = row.iter().sum();
        for p in &mut row {
            *p /= sum;
        }
        row
    }
}

/// Log-density of the Gaussian emission for `line` evaluated at `z_y`.
pub fn emission_logprob(z_y: f64, line: usize, geometry: &PageGeometry, params: &HmmParams) -> f64 {
    let center = geometry.line_center(line);
    let std = params.emission_std;
    let z = (z_y - center) / std;
    -0.5 * z * z - std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Viterbi maximum-a-posteriori line sequence for a page of fixations.
///
/// Ties between equally scoring predecessors (exact float equality) break
/// toward the lower line index, as does the final argmax.
pub fn detect_lines(
    page: &[GazeSample],
    geometry: &PageGeometry,
    params: &HmmParams,
) -> Result<Vec<LabeledSample>> {
    if page.is_empty() {
        return Err(Error::EmptyPage);
    }
    params.validate()?;
    let n = geometry.num_lines;
    let t_len = page.len();

    let log_init: Vec<f64> = params.initial_probs(n).iter().map(|p| p.ln()).collect();
    let log_trans: Vec<Vec<f64>> = (1..=n)
        .map(|from| {
            params
                .transition_probs(from, n)
                .iter()
                .map(|p| p.ln())
                .collect()
        })
        .collect();

    let mut delta: Vec<f64> = (1..=n)
        .map(|s| log_init[s - 1] + emission_logprob(page[0].z_y, s, geometry, params))
        .collect();
    let mut backptr: Vec<Vec<usize>> = Vec::with_capacity(t_len);

    for sample in &page[1..] {
        let mut next = vec![f64::NEG_INFINITY; n];
        let mut ptr = vec![0usize; n];
        for to in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut best_from = 0usize;
            for from in 0..n {
                let score = delta[from] + log_trans[from][to];
                if score > best {
                    best = score;
                    best_from = from;
                }
            }
            next[to] = best + emission_logprob(sample.z_y, to + 1, geometry, params);
            ptr[to] = best_from;
        }
        backptr.push(ptr);
        delta = next;
    }

    let mut state = delta
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (s, &score)| {
            if score > acc.1 {
                (s, score)
            } else {
                acc
            }
        })
        .0;
    let mut path = vec![0usize; t_len];
    path[t_len - 1] = state;
    for (t, ptr) in backptr.iter().enumerate().rev() {
        state = ptr[state];
        path[t] = state;
    }

    Ok(page
        .iter()
        .zip(path)
        .map(|(&sample, s)| LabeledSample {
            sample,
            est_line: s + 1,
        })
        .collect())
}
