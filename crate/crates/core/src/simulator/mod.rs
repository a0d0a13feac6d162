//! Independent oracles for the pipeline model: exhaustive enumeration of the
//! event tree and seeded Monte-Carlo simulation of documents flowing through
//! a pipeline or a whole taxonomy.

mod exact;
mod monte_carlo;
mod sweep;

pub use exact::{enumerate_exact, ENUMERATION_LIMIT};
pub use monte_carlo::{
    document_rng, simulate_pipeline, simulate_taxonomy, EdgeCheck, PipelineTally, TaxonomyOutcome,
};
pub use sweep::{evaluate_distribution, imbalance_sweep, Spread, SweepReport, SweepRow};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{JointMatrix, Mat2};

/// Default pass threshold on per-cell z-scores.
pub const DEFAULT_Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Pipeline,
    Taxonomy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub m: u64,
    pub seed: u64,
    pub mode: SimMode,
    pub replications: u32,
}

impl SimConfig {
    pub fn new(m: u64, seed: u64) -> Result<Self> {
        let cfg = Self {
            m,
            seed,
            mode: SimMode::Pipeline,
            replications: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Seed of replication `r`.
    pub fn replication_seed(&self, r: u32) -> u64 {
        self.seed.wrapping_add(u64::from(r))
    }
}

/// 2×2 integer tally indexed `[true label][decision]`.
pub type Counts = [[u64; 2]; 2];

pub(crate) fn add_counts(a: &mut Counts, b: &Counts) {
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] += b[i][j];
        }
    }
}

/// Empirical confusion matrices of one simulated pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimOutcome {
    pub m: u64,
    /// `Ξ` at the pipeline's last category.
    pub counts: Counts,
    /// Tallies of every prefix `π_0 … π_L`.
    pub per_depth: Vec<Counts>,
}

impl SimOutcome {
    /// `Ω̂ = Ξ / m`.
    pub fn empirical(&self) -> Mat2 {
        let m = self.m as f64;
        Mat2::new(
            self.counts[0][0] as f64 / m,
            self.counts[0][1] as f64 / m,
            self.counts[1][0] as f64 / m,
            self.counts[1][1] as f64 / m,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellDeviation {
    pub observed: f64,
    pub expected: f64,
    pub abs_dev: f64,
    pub sigma: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    /// Cells in order w00, w01, w10, w11.
    pub cells: [CellDeviation; 4],
    pub max_z: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Per-cell z-scores of `Ξ/m` against `Ω` under binomial sampling,
/// `σ = sqrt(ω(1−ω)/m)`. A cell with `σ = 0` scores 0 when it matches
/// exactly and infinity otherwise.
pub fn compare(model: &JointMatrix, outcome: &SimOutcome, threshold: f64) -> DeviationReport {
    let observed = outcome.empirical();
    let m = outcome.m as f64;
    let pairs = [
        (observed.m00, model.w00()),
        (observed.m01, model.w01()),
        (observed.m10, model.w10()),
        (observed.m11, model.w11()),
    ];
    let cells = pairs.map(|(o, w)| {
        let abs_dev = (o - w).abs();
        let sigma = (w * (1.0 - w) / m).max(0.0).sqrt();
        let z = if sigma > 0.0 {
            abs_dev / sigma
        } else if abs_dev <= 1e-15 {
            0.0
        } else {
            f64::INFINITY
        };
        CellDeviation {
            observed: o,
            expected: w,
            abs_dev,
            sigma,
            z,
        }
    });
    let max_z = cells.iter().fold(0.0_f64, |acc, c| acc.max(c.z));
    DeviationReport {
        cells,
        max_z,
        threshold,
        passed: max_z < threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_counts_have_zero_deviation() {
        let omega = JointMatrix::new(0.40, 0.10, 0.05, 0.45).unwrap();
        let outcome = SimOutcome {
            m: 1000,
            counts: [[400, 100], [50, 450]],
            per_depth: vec![],
        };
        let report = compare(&omega, &outcome, DEFAULT_Z_THRESHOLD);
        assert!(report.cells.iter().all(|c| c.z < 1e-9));
        assert!(report.passed);
    }

    #[test]
    fn ten_sigma_cell_is_flagged() {
        let omega = JointMatrix::new(0.25, 0.25, 0.25, 0.25).unwrap();
        let m = 10_000u64;
        // σ = sqrt(0.25·0.75/m) ≈ 0.00433, so 10σ is 433 documents.
        let sigma = (0.25_f64 * 0.75 / m as f64).sqrt();
        let shift = (10.0 * sigma * m as f64).round() as u64;
        let outcome = SimOutcome {
            m,
            counts: [[2500 + shift, 2500 - shift], [2500, 2500]],
            per_depth: vec![],
        };
        let report = compare(&omega, &outcome, DEFAULT_Z_THRESHOLD);
        assert!((report.max_z - 10.0).abs() < 0.01, "{}", report.max_z);
        assert!(!report.passed);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 1).is_err());
        let mut cfg = SimConfig::new(10, 1).unwrap();
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
    }
}
