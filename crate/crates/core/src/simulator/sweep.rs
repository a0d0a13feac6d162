use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use serde::Serialize;

use super::SimConfig;
use crate::error::{Error, Result};
use crate::matrix::{JointMatrix, NormalizedConfusionMatrix};
use crate::metrics::{pipeline_metrics, MetricReport};
use crate::model::{omega_closed, Stage, StageChain};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// `f_1 … f_L`.
    pub fs: Vec<f64>,
    pub omega: JointMatrix,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Spread {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        (n > 0).then(|| Self {
            min,
            max,
            mean: sum / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub target_positive_rate: f64,
    pub rows: Vec<SweepRow>,
    pub precision: Option<Spread>,
    pub recall: Option<Spread>,
    pub f1: Option<Spread>,
}

/// `Ω` and metrics of the classifiers `gammas` under the edge probabilities
/// `fs` (one per classifier).
pub fn evaluate_distribution(gammas: &[NormalizedConfusionMatrix], fs: &[f64]) -> Result<SweepRow> {
    if gammas.len() != fs.len() {
        return Err(Error::InvalidConfig(format!(
            "{} classifiers but {} edge probabilities",
            gammas.len(),
            fs.len()
        )));
    }
    let chain = StageChain::new(
        fs.iter()
            .zip(gammas)
            .map(|(&f, &gamma)| Stage { f, gamma })
            .collect(),
    )?;
    let omega = omega_closed(&chain);
    Ok(SweepRow {
        fs: fs.to_vec(),
        metrics: pipeline_metrics(&omega),
        omega,
    })
}

/// Evaluates `n` input distributions sharing the same positive rate
/// `F_L = target` over a fixed pipeline of classifiers.
///
/// The first distribution splits `log(target)` evenly across the steps; the
/// others split it with weights drawn from a flat Dirichlet, so every
/// `f_j = target^{w_j}` lies in `(0, 1]`.
pub fn imbalance_sweep(
    gammas: &[NormalizedConfusionMatrix],
    target: f64,
    n: usize,
    cfg: &SimConfig,
) -> Result<SweepReport> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InfeasibleTarget(format!(
            "positive rate {target} must lie in (0,1)"
        )));
    }
    let depth = gammas.len();
    if depth < 2 {
        return Err(Error::InfeasibleTarget(format!(
            "pipeline needs at least two classifiers below the root, got {depth}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidConfig(
            "at least one distribution required".into(),
        ));
    }
    let dirichlet =
        Dirichlet::new_with_size(1.0, depth).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let log_target = target.ln();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let weights = if i == 0 {
            vec![1.0 / depth as f64; depth]
        } else {
            dirichlet.sample(&mut rng)
        };
        let fs: Vec<f64> = weights.iter().map(|w| (w * log_target).exp()).collect();
        rows.push(evaluate_distribution(gammas, &fs)?);
    }
    Ok(SweepReport {
        target_positive_rate: target,
        precision: Spread::of(rows.iter().filter_map(|r| r.metrics.precision)),
        recall: Spread::of(rows.iter().filter_map(|r| r.metrics.recall)),
        f1: Spread::of(rows.iter().filter_map(|r| r.metrics.f1)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gammas() -> Vec<NormalizedConfusionMatrix> {
        vec![
            NormalizedConfusionMatrix::from_rates(0.1, 0.8),
            NormalizedConfusionMatrix::from_rates(0.2, 0.9),
        ]
    }

    #[test]
    fn same_imbalance_different_precision() {
        let a = evaluate_distribution(&gammas(), &[0.1, 1.0]).unwrap();
        let b = evaluate_distribution(&gammas(), &[1.0, 0.1]).unwrap();
        // (1−f1)·ψ11^(0)·γ01^(1)·γ01^(2) = 0.9·0.1·0.2 versus (1−f2)·F1·γ11^(1)·γ01^(2) = 0.9·0.8·0.2.
        assert!((a.omega.w01() - 0.9 * 0.1 * 0.2).abs() < 1e-15);
        assert!((b.omega.w01() - 0.9 * 0.8 * 0.2).abs() < 1e-15);
        assert_ne!(a.metrics.precision, b.metrics.precision);
        assert!((a.metrics.recall.unwrap() - b.metrics.recall.unwrap()).abs() < 1e-15);
    }

    #[test]
    fn single_equal_split() {
        let cfg = SimConfig::new(1, 42).unwrap();
        let report = imbalance_sweep(&gammas(), 0.25, 1, &cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        for f in &report.rows[0].fs {
            assert!((f - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn recall_constant_precision_varies() {
        let cfg = SimConfig::new(1, 42).unwrap();
        let report = imbalance_sweep(&gammas(), 0.1, 50, &cfg).unwrap();
        for row in &report.rows {
            let f_total: f64 = row.fs.iter().product();
            assert!((f_total - 0.1).abs() < 1e-12);
            assert!(row.fs.iter().all(|&f| f > 0.0 && f <= 1.0));
        }
        let recall = report.recall.unwrap();
        assert!(recall.max - recall.min < 1e-12);
        let precision = report.precision.unwrap();
        assert!(precision.max - precision.min > 1e-3);
    }

    #[test]
    fn infeasible_targets() {
        let cfg = SimConfig::new(1, 42).unwrap();
        for target in [0.0, 1.0, 1.5, -0.2] {
            assert!(matches!(
                imbalance_sweep(&gammas(), target, 3, &cfg),
                Err(Error::InfeasibleTarget(_))
            ));
        }
        assert!(matches!(
            imbalance_sweep(&gammas()[..1], 0.5, 3, &cfg),
            Err(Error::InfeasibleTarget(_))
        ));
    }
}
