//! Synthetic page generator: natural reading progression plus Gaussian
//! measurement noise at a configurable level expressed in line-widths.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::types::{Error, GazeSample, GroundTruth, PageGeometry, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub geometry: PageGeometry,
    /// Noise standard deviation in line-widths.
    pub sigma: f64,
    pub fixations_per_line: usize,
    pub pages: usize,
    pub rng_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::Config("sigma must be >= 0".into()));
        }
        if self.fixations_per_line < 1 {
            return Err(Error::Config("fixations_per_line must be >= 1".into()));
        }
        if self.pages < 1 {
            return Err(Error::Config("pages must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            geometry: PageGeometry::default(),
            sigma: 0.2,
            fixations_per_line: 40,
            pages: 20,
            rng_seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPage {
    pub truth: Vec<GroundTruth>,
    pub measurements: Vec<GazeSample>,
    pub config_echo: SimConfig,
}

/// The nine tested noise levels, ascending, in line-widths.
pub fn canonical_sigma_levels() -> [f64; 9] {
    [0.2, 0.22, 0.25, 0.26, 0.3, 0.37, 0.46, 0.63, 1.0]
}

/// True trajectory: lines read top to bottom, each traversed left to right
/// as a constant-velocity ramp across the text width.
pub fn generate_truth(config: &SimConfig) -> Vec<GroundTruth> {
    let geom = &config.geometry;
    let k_per_line = config.fixations_per_line;
    let mut out = Vec::with_capacity(geom.num_lines * k_per_line);
    for line in 1..=geom.num_lines {
        let y = geom.line_center(line);
        for k in 1..=k_per_line {
            let true_x = if k_per_line == 1 {
                0.0
            } else {
                (k - 1) as f64 / (k_per_line - 1) as f64 * geom.text_width
            };
            out.push(GroundTruth {
                index: (line - 1) * k_per_line + k,
                true_x,
                true_y: y,
                true_line: line,
            });
        }
    }
    out
}

/// Perturb a truth trajectory with i.i.d. zero-mean Gaussian noise of
/// standard deviation `sigma * line_spacing` on both coordinates.
pub fn add_noise<R: rand::Rng>(
    truth: &[GroundTruth],
    sigma: f64,
    geometry: &PageGeometry,
    rng: &mut R,
) -> Vec<GazeSample> {
    let std = sigma * geometry.line_spacing;
    if std == 0.0 {
        return truth
            .iter()
            .map(|t| GazeSample {
                index: t.index,
                z_x: t.true_x,
                z_y: t.true_y,
                timestamp: None,
            })
            .collect();
    }
    let dist = Normal::new(0.0, std).expect("std is finite and positive");
    truth
        .iter()
        .map(|t| GazeSample {
            index: t.index,
            z_x: t.true_x + dist.sample(rng),
            z_y: t.true_y + dist.sample(rng),
            timestamp: None,
        })
        .collect()
}

/// RNG for one page: a fixed seed with a per-page stream, so pages draw
/// from independent substreams and the whole dataset is reproducible.
pub fn page_rng(seed: u64, page: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(page as u64);
    rng
}

/// Generate `config.pages` pages, each an independent noising of the same
/// truth trajectory.
pub fn generate_dataset(config: &SimConfig) -> Result<Vec<SimulatedPage>> {
    config.validate()?;
    let truth = generate_truth(config);
    let pages = (0..config.pages)
        .map(|p| {
            let mut rng = page_rng(config.rng_seed, p);
            let measurements = add_noise(&truth, config.sigma, &config.geometry, &mut rng);
            SimulatedPage {
                truth: truth.clone(),
                measurements,
                config_echo: config.clone(),
            }
        })
        .collect();
    Ok(pages)
}
