//! Taxonomic precision, recall, F1 and accuracy of a pipeline, and how they
//! evolve prefix by prefix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{JointMatrix, NormalizedConfusionMatrix};
use crate::model::{omega_trace, StageChain};

/// Ties in precision within this margin count as non-decreasing.
pub const PRECISION_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlag {
    /// No predicted positives (`w01 + w11 = 0`).
    PrecisionUndefined,
    /// No actual positives (`w10 + w11 = 0`).
    RecallUndefined,
    /// Precision or recall undefined.
    F1Undefined,
    /// Precision or recall is exactly zero; F1 reported as 0.
    F1ZeroComponent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: f64,
    pub flags: Vec<MetricFlag>,
}

/// tP, tR, tF1 and tA from a joint matrix.
pub fn pipeline_metrics(omega: &JointMatrix) -> MetricReport {
    let mut flags = Vec::new();
    let predicted = omega.w01() + omega.w11();
    let actual = omega.w10() + omega.w11();
    let precision = if predicted > 0.0 {
        Some(omega.w11() / predicted)
    } else {
        flags.push(MetricFlag::PrecisionUndefined);
        None
    };
    let recall = if actual > 0.0 {
        Some(omega.w11() / actual)
    } else {
        flags.push(MetricFlag::RecallUndefined);
        None
    };
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p > 0.0 && r > 0.0 => Some(2.0 / (1.0 / p + 1.0 / r)),
        (Some(_), Some(_)) => {
            flags.push(MetricFlag::F1ZeroComponent);
            Some(0.0)
        }
        _ => {
            flags.push(MetricFlag::F1Undefined);
            None
        }
    };
    MetricReport {
        precision,
        recall,
        f1,
        accuracy: omega.as_mat().trace(),
        flags,
    }
}

/// Quantities of the prefix `π_{k−1}` needed to judge the next step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefixState {
    /// `(1−F)·η`, accumulated; infinite once some `γ01` vanished under a
    /// positive contribution.
    pub neg_eta: f64,
    pub prior_pos: f64,
    pub psi11: f64,
    pub psi01: f64,
    /// `w01 = (1−F)·η·ψ01`, always finite.
    pub fp_mass: f64,
}

impl PrefixState {
    /// State of the root-only pipeline.
    pub fn root() -> Self {
        Self {
            neg_eta: 0.0,
            prior_pos: 1.0,
            psi11: 1.0,
            psi01: 1.0,
            fp_mass: 0.0,
        }
    }

    /// State after appending a classifier with edge probability `f`.
    pub fn advance(&self, f: f64, gamma: &NormalizedConfusionMatrix) -> Self {
        Self {
            neg_eta: self.neg_eta + leak_term(f, self),
            prior_pos: self.prior_pos * f,
            psi11: self.psi11 * gamma.tp(),
            psi01: self.psi01 * gamma.fp(),
            fp_mass: gamma.fp() * (self.fp_mass + (1.0 - f) * self.prior_pos * self.psi11),
        }
    }

    /// State of the prefix of depth `k`.
    pub fn at(chain: &StageChain, k: usize) -> Self {
        chain.stages()[..k]
            .iter()
            .fold(Self::root(), |s, st| s.advance(st.f, &st.gamma))
    }
}

/// `(1−f')·F·ψ11/ψ01`, the growth of `(1−F)·η` from one step.
fn leak_term(f: f64, s: &PrefixState) -> f64 {
    let num = (1.0 - f) * s.prior_pos * s.psi11;
    if num == 0.0 {
        0.0
    } else if s.psi01 == 0.0 {
        f64::INFINITY
    } else {
        num / s.psi01
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionVerdict {
    NonDecreasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionCheck {
    pub verdict: PrecisionVerdict,
    /// `((1−F)η / (1−F')η') · f' · γ'11`.
    pub bound: f64,
    /// `(1−F')η'` of the extended pipeline.
    pub next_neg_eta: f64,
}

/// Decides whether appending a classifier `(f', Γ')` to the prefix keeps tP
/// from decreasing: it does iff `γ'01` does not exceed the bound.
///
/// The ratio `(1−F)η / (1−F')η'` is evaluated as `w01 / (w01 + (1−f')·w11)`,
/// which equals it whenever `ψ01 > 0` and stays finite otherwise.
pub fn precision_constraint_check(
    prefix: &PrefixState,
    f: f64,
    gamma: &NormalizedConfusionMatrix,
) -> Result<PrecisionCheck> {
    let tp_mass = prefix.prior_pos * prefix.psi11;
    let denom = prefix.fp_mass + (1.0 - f) * tp_mass;
    if denom <= 0.0 {
        return Err(Error::DegenerateBound);
    }
    let bound = prefix.fp_mass / denom * f * gamma.tp();
    let verdict = if gamma.fp() <= bound {
        PrecisionVerdict::NonDecreasing
    } else {
        PrecisionVerdict::Decreasing
    };
    Ok(PrecisionCheck {
        verdict,
        bound,
        next_neg_eta: prefix.neg_eta + leak_term(f, prefix),
    })
}

/// Verdict from the direct comparison of tP before and after a step; `None`
/// when either precision is undefined.
pub fn precision_change(before: &JointMatrix, after: &JointMatrix) -> Option<PrecisionVerdict> {
    let p0 = pipeline_metrics(before).precision?;
    let p1 = pipeline_metrics(after).precision?;
    Some(if p1 - p0 >= -PRECISION_TIE_TOL {
        PrecisionVerdict::NonDecreasing
    } else {
        PrecisionVerdict::Decreasing
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepVerdict {
    NonDecreasing { bound: f64 },
    Decreasing { bound: f64 },
    Degenerate,
}

impl StepVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            StepVerdict::NonDecreasing { .. } => "non_decreasing",
            StepVerdict::Decreasing { .. } => "decreasing",
            StepVerdict::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthEntry {
    pub k: usize,
    pub f: f64,
    pub omega: JointMatrix,
    pub psi11: f64,
    pub metrics: MetricReport,
    /// Precision verdict for the step into depth `k`; absent at the root.
    pub precision_step: Option<StepVerdict>,
}

/// Metrics of every prefix `π_0 … π_L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthProfile {
    pub entries: Vec<DepthEntry>,
    /// tR never increases along the prefixes where it is defined.
    pub recall_non_increasing: bool,
    /// tR stays flat exactly at the steps whose `γ11 = 1`.
    pub recall_flat_only_at_perfect_steps: bool,
}

pub fn depth_profile(chain: &StageChain) -> DepthProfile {
    let trace = omega_trace(chain);
    let mut entries = Vec::with_capacity(trace.len());
    let mut state = PrefixState::root();
    for (k, omega) in trace.iter().enumerate() {
        let precision_step = if k == 0 {
            None
        } else {
            let stage = chain.stages()[k - 1];
            let step = match precision_constraint_check(&state, stage.f, &stage.gamma) {
                Ok(PrecisionCheck {
                    verdict: PrecisionVerdict::NonDecreasing,
                    bound,
                    ..
                }) => StepVerdict::NonDecreasing { bound },
                Ok(PrecisionCheck { bound, .. }) => StepVerdict::Decreasing { bound },
                Err(_) => StepVerdict::Degenerate,
            };
            state = state.advance(stage.f, &stage.gamma);
            Some(step)
        };
        entries.push(DepthEntry {
            k,
            f: chain.f(k),
            omega: *omega,
            psi11: state.psi11,
            metrics: pipeline_metrics(omega),
            precision_step,
        });
    }

    let mut non_increasing = true;
    let mut flat_only_at_perfect = true;
    for pair in entries.windows(2) {
        if let (Some(r0), Some(r1)) = (pair[0].metrics.recall, pair[1].metrics.recall) {
            if r1 > r0 + PRECISION_TIE_TOL {
                non_increasing = false;
            }
            let perfect = chain.gamma(pair[1].k).tp() == 1.0;
            let flat = (r1 - r0).abs() <= PRECISION_TIE_TOL;
            if r0 > 0.0 && flat != perfect {
                flat_only_at_perfect = false;
            }
        }
    }
    DepthProfile {
        entries,
        recall_non_increasing: non_increasing,
        recall_flat_only_at_perfect_steps: flat_only_at_perfect,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{omega_recursive, Stage};

    fn g(tn: f64, fp: f64, fn_: f64, tp: f64) -> NormalizedConfusionMatrix {
        NormalizedConfusionMatrix::new(tn, fp, fn_, tp).unwrap()
    }

    fn l2_fixture() -> StageChain {
        let gamma = g(0.9, 0.1, 0.2, 0.8);
        StageChain::new(vec![Stage { f: 0.8, gamma }, Stage { f: 0.5, gamma }]).unwrap()
    }

    #[test]
    fn metrics_of_single_step_fixture() {
        let omega = JointMatrix::new(0.40, 0.10, 0.05, 0.45).unwrap();
        let m = pipeline_metrics(&omega);
        let p = 0.45 / 0.55;
        let r = 0.45 / 0.50;
        assert!((m.precision.unwrap() - p).abs() < 1e-15);
        assert!((m.precision.unwrap() - 0.8182).abs() < 1e-4);
        assert!((m.recall.unwrap() - 0.9).abs() < 1e-15);
        assert!((m.f1.unwrap() - 2.0 * p * r / (p + r)).abs() < 1e-15);
        assert!((m.f1.unwrap() - 0.8571).abs() < 1e-4);
        assert!((m.accuracy - 0.85).abs() < 1e-15);
        assert!(m.flags.is_empty());
    }

    #[test]
    fn perfect_pipeline_scores_one() {
        let omega = JointMatrix::new(0.7, 0.0, 0.0, 0.3).unwrap();
        let m = pipeline_metrics(&omega);
        assert_eq!(
            (m.precision, m.recall, m.f1, m.accuracy),
            (Some(1.0), Some(1.0), Some(1.0), 1.0)
        );
    }

    #[test]
    fn recall_equals_psi11() {
        let omega = omega_recursive(&l2_fixture());
        let m = pipeline_metrics(&omega);
        assert!((m.recall.unwrap() - 0.64).abs() < 1e-12);
    }

    #[test]
    fn undefined_corners_are_flagged() {
        let omega = JointMatrix::new(0.5, 0.0, 0.5, 0.0).unwrap();
        let m = pipeline_metrics(&omega);
        assert_eq!(m.precision, None);
        assert_eq!(m.f1, None);
        assert!(m.flags.contains(&MetricFlag::PrecisionUndefined));
        assert!(m.flags.contains(&MetricFlag::F1Undefined));

        let omega = JointMatrix::new(0.5, 0.2, 0.3, 0.0).unwrap();
        let m = pipeline_metrics(&omega);
        assert_eq!(m.precision, Some(0.0));
        assert_eq!(m.f1, Some(0.0));
        assert!(m.flags.contains(&MetricFlag::F1ZeroComponent));
    }

    #[test]
    fn precision_bound_on_fixture() {
        let chain = l2_fixture();
        let state = PrefixState::at(&chain, 1);
        assert!((state.neg_eta - 0.2).abs() < 1e-15);
        let stage = chain.stages()[1];
        let check = precision_constraint_check(&state, stage.f, &stage.gamma).unwrap();
        let bound = (0.2 / 3.4) * 0.5 * 0.8;
        assert!((check.bound - bound).abs() < 1e-15);
        assert!((check.bound - 0.0235).abs() < 1e-4);
        assert!((check.next_neg_eta - 3.4).abs() < 1e-12);
        assert_eq!(check.verdict, PrecisionVerdict::Decreasing);

        let trace = omega_trace(&chain);
        let p1 = pipeline_metrics(&trace[1]).precision.unwrap();
        let p2 = pipeline_metrics(&trace[2]).precision.unwrap();
        assert!((p1 - 0.9697).abs() < 1e-4);
        assert!((p2 - 0.8828).abs() < 1e-4);
        assert_eq!(precision_change(&trace[1], &trace[2]), Some(check.verdict));
    }

    #[test]
    fn zero_fp_rate_never_decreases_precision() {
        let chain = l2_fixture();
        let state = PrefixState::at(&chain, 1);
        let check = precision_constraint_check(&state, 0.3, &g(1.0, 0.0, 0.4, 0.6)).unwrap();
        assert_eq!(check.verdict, PrecisionVerdict::NonDecreasing);
    }

    #[test]
    fn degenerate_bound() {
        let state = PrefixState::root();
        let err = precision_constraint_check(&state, 1.0, &g(0.9, 0.1, 0.2, 0.8)).unwrap_err();
        assert_eq!(err, Error::DegenerateBound);
    }

    #[test]
    fn depth_profile_fixture() {
        let profile = depth_profile(&l2_fixture());
        let recalls: Vec<f64> = profile
            .entries
            .iter()
            .map(|e| e.metrics.recall.unwrap())
            .collect();
        for (got, want) in recalls.iter().zip([1.0, 0.8, 0.64]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(profile.entries[0].metrics.precision, Some(1.0));
        assert_eq!(profile.entries[0].metrics.recall, Some(1.0));
        assert!(profile.recall_non_increasing);
        assert!(profile.recall_flat_only_at_perfect_steps);
        assert!(matches!(
            profile.entries[2].precision_step,
            Some(StepVerdict::Decreasing { .. })
        ));
    }

    #[test]
    fn perfect_recall_stays_flat() {
        let gamma = g(0.9, 0.1, 0.0, 1.0);
        let chain = StageChain::new(vec![Stage { f: 0.5, gamma }; 3]).unwrap();
        let profile = depth_profile(&chain);
        for e in &profile.entries {
            assert_eq!(e.metrics.recall, Some(1.0));
        }
        assert!(profile.recall_flat_only_at_perfect_steps);
    }
}
