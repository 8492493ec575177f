//! Per-line least squares batch estimation of the horizontal saccade under
//! a constant-acceleration model.
//!
//! Each batch of measured x-coordinates is fit with the design matrix whose
//! k-th row is `[1, k*dt, (k*dt)^2 / 2]`, giving an initial state (position,
//! velocity, acceleration) and smoothed positions `H * state`. With a
//! diagonal measurement covariance `sigma^2 I` the weighting cancels, so the
//! solve is ordinary least squares; it is carried out by a Householder QR of
//! the column-scaled design matrix rather than explicit normal-equation
//! inversion (with dt = 64 the third column reaches ~3e6 over a 40-step
//! batch).

use crate::types::LineBatch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModel {
    /// Sampling interval constant between consecutive batch steps.
    pub delta_t: f64,
    /// Measurement noise std; cancels out of the position estimates.
    pub sigma: f64,
}

impl Default for MotionModel {
    fn default() -> Self {
        Self {
            delta_t: 64.0,
            sigma: 1.0,
        }
    }
}

/// Position, velocity, and acceleration of the horizontal gaze motion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SaccadeState {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

/// How a batch fit was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    /// Full 3-state model, full rank.
    Full,
    /// Batch shorter than 3: model order reduced to the batch length.
    ReducedOrder(usize),
    /// Rank-deficient system: minimum-norm pseudo-solution.
    PseudoSolution,
    /// Empty batch: no solve attempted.
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchEstimate {
    pub line: usize,
    pub initial_state: SaccadeState,
    pub xs_hat: Vec<f64>,
    pub source_indices: Vec<usize>,
    pub status: FitStatus,
}

/// Row k of the design matrix: `[1, k*dt, (k*dt)^2 / 2]`.
pub fn design_row(k: usize, delta_t: f64) -> [f64; 3] {
    let kt = k as f64 * delta_t;
    [1.0, kt, kt * kt / 2.0]
}

/// Advance a state k steps: `F(k) * state` for the constant-acceleration
/// transition matrix.
pub fn propagate(state: &SaccadeState, k: usize, delta_t: f64) -> SaccadeState {
    let kt = k as f64 * delta_t;
    SaccadeState {
        position: state.position + kt * state.velocity + kt * kt / 2.0 * state.acceleration,
        velocity: state.velocity + kt * state.acceleration,
        acceleration: state.acceleration,
    }
}

/// Fit one batch. Degenerate batches reduce the model order: one point
/// pins position only, two points an exact position+velocity line; three
/// or more use the full 3-state model.
pub fn fit_batch(batch: &LineBatch, model: &MotionModel) -> BatchEstimate {
    let l = batch.len();
    if l == 0 {
        return BatchEstimate {
            line: batch.line,
            initial_state: SaccadeState::default(),
            xs_hat: Vec::new(),
            source_indices: Vec::new(),
            status: FitStatus::Skipped,
        };
    }
    let order = l.min(3);
    let dt = model.delta_t;

    // Column-scaled design matrix, column-major.
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(l); order];
    for k in 1..=l {
        let row = design_row(k, dt);
        for (j, col) in cols.iter_mut().enumerate() {
            col.push(row[j]);
        }
    }
    let scales: Vec<f64> = cols
        .iter()
        .map(|c| {
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                norm
            } else {
                1.0
            }
        })
        .collect();
    for (col, &s) in cols.iter_mut().zip(&scales) {
        for v in col.iter_mut() {
            *v /= s;
        }
    }

    let mut rhs = batch.xs.clone();
    let (theta_scaled, deficient) = qr_solve(&mut cols, &mut rhs);
    let mut theta = [0.0f64; 3];
    for j in 0..order {
        theta[j] = theta_scaled[j] / scales[j];
    }

    let initial_state = SaccadeState {
        position: theta[0],
        velocity: theta[1],
        acceleration: theta[2],
    };
    let xs_hat: Vec<f64> = (1..=l)
        .map(|k| {
            let row = design_row(k, dt);
            row[0] * theta[0] + row[1] * theta[1] + row[2] * theta[2]
        })
        .collect();
    let status = if deficient {
        FitStatus::PseudoSolution
    } else if order < 3 {
        FitStatus::ReducedOrder(order)
    } else {
        FitStatus::Full
    };
    BatchEstimate {
        line: batch.line,
        initial_state,
        xs_hat,
        source_indices: batch.source_indices.clone(),
        status,
    }
}

/// Fit every non-empty batch and scatter the smoothed positions back to
/// original page order. Entry `i-1` of the flattened vector holds the
/// estimate for page index `i`, `None` where no batch covered it (or the
/// batch was skipped).
pub fn track_page(
    batches: &[LineBatch],
    model: &MotionModel,
) -> (Vec<BatchEstimate>, Vec<Option<f64>>) {
    let estimates: Vec<BatchEstimate> = batches.iter().map(|b| fit_batch(b, model)).collect();
    let t_len = estimates
        .iter()
        .flat_map(|e| e.source_indices.iter().copied())
        .max()
        .unwrap_or(0);
    let mut flat = vec![None; t_len];
    for est in &estimates {
        for (&idx, &x) in est.source_indices.iter().zip(&est.xs_hat) {
            flat[idx - 1] = Some(x);
        }
    }
    (estimates, flat)
}

/// Least squares via Householder QR. `cols` is the column-major matrix
/// (destroyed), `rhs` the right-hand side (destroyed). Returns the solution
/// and whether a near-zero diagonal forced a minimum-norm pseudo-solution
/// (the corresponding component is zeroed).
fn qr_solve(cols: &mut [Vec<f64>], rhs: &mut [f64]) -> ([f64; 3], bool) {
    let ncols = cols.len();
    let nrows = rhs.len();
    debug_assert!(nrows >= ncols);

    for j in 0..ncols {
        // Householder vector for column j, rows j..
        let alpha = {
            let norm = cols[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if cols[j][j] >= 0.0 {
                -norm
            } else {
                norm
            }
        };
        let mut v: Vec<f64> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2 = v.iter().map(|x| x * x).sum::<f64>();
        if vnorm2 > 0.0 {
            // Reflect remaining columns and the rhs.
            #[allow(clippy::needless_range_loop)]
            for target in j..=ncols {
                let col: &mut [f64] = if target < ncols {
                    &mut cols[target][j..]
                } else {
                    &mut rhs[j..]
                };
                let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                let factor = 2.0 * dot / vnorm2;
                for (c, &vi) in col.iter_mut().zip(v.iter()) {
                    *c -= factor * vi;
                }
            }
        }
        cols[j][j] = alpha;
    }

    // Back-substitution on R. Columns were normalized, so a diagonal below
    // the tolerance means rank deficiency.
    let tol = 1e-10 * nrows as f64;
    let mut deficient = false;
    let mut theta = [0.0f64; 3];
    for j in (0..ncols).rev() {
        let mut sum = rhs[j];
        for i in j + 1..ncols {
            sum -= cols[i][j] * theta[i];
        }
        let diag = cols[j][j];
        if diag.abs() <= tol {
            theta[j] = 0.0;
            deficient = true;
        } else {
            theta[j] = sum / diag;
        }
    }
    (theta, deficient)
}
