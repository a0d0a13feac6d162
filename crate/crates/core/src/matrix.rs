//! 2×2 matrices of the confusion-matrix algebra and the `⊕` composition.

use std::ops::Mul;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on row sums of normalized matrices and on the total mass of
/// joint matrices.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Plain 2×2 real matrix indexed `[true label][decision]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mat2 {
    pub m00: f64,
    pub m01: f64,
    pub m10: f64,
    pub m11: f64,
}

impl Mat2 {
    pub const fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Self { m00, m01, m10, m11 }
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Self {
        Self::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.m00, self.m01], [self.m10, self.m11]]
    }

    pub fn sum(&self) -> f64 {
        self.m00 + self.m01 + self.m10 + self.m11
    }

    pub fn trace(&self) -> f64 {
        self.m00 + self.m11
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.m00 * s, self.m01 * s, self.m10 * s, self.m11 * s)
    }

    /// Largest elementwise absolute difference.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        [
            self.m00 - other.m00,
            self.m01 - other.m01,
            self.m10 - other.m10,
            self.m11 - other.m11,
        ]
        .iter()
        .fold(0.0_f64, |acc, d| acc.max(d.abs()))
    }

    /// `A ⊕ B = [[a00 + a01·b00, a01·b01], [a10 + a11·b10, a11·b11]]`.
    ///
    /// The left operand's first column is the mass already rejected (it
    /// stays put); its second column is the accepted mass, which the right
    /// operand splits again.
    pub fn oplus(&self, b: &Mat2) -> Mat2 {
        Mat2::new(
            self.m00 + self.m01 * b.m00,
            self.m01 * b.m01,
            self.m10 + self.m11 * b.m10,
            self.m11 * b.m11,
        )
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.m00 * r.m00 + self.m01 * r.m10,
            self.m00 * r.m01 + self.m01 * r.m11,
            self.m10 * r.m00 + self.m11 * r.m10,
            self.m10 * r.m01 + self.m11 * r.m11,
        )
    }
}

fn check_unit(location: &str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::OutOfRangeProbability {
            location: location.to_owned(),
            value: v,
            reason: "probability must lie in [0,1]".into(),
        })
    }
}

/// `(1−p, p)` adjusted by at most an ulp so that the pair sums to exactly
/// 1 in floating point. The larger entry is rounded and the smaller one
/// recovered from it, which is exact.
fn exact_split(p: f64) -> (f64, f64) {
    if p <= 0.5 {
        let q = 1.0 - p;
        (q, 1.0 - q)
    } else {
        (1.0 - p, p)
    }
}

/// Row-normalized confusion matrix `Γ ≈ p(Ĉ | X)`: rows are the true label,
/// columns the decision. Entries are TN-rate, FP-rate, FN-rate, TP-rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "Mat2")]
pub struct NormalizedConfusionMatrix(Mat2);

/// Same shape and invariants as a classifier's normalized matrix; used for
/// the intrinsic matrix of a category string.
pub type PsiMatrix = NormalizedConfusionMatrix;

impl From<NormalizedConfusionMatrix> for Mat2 {
    fn from(value: NormalizedConfusionMatrix) -> Self {
        value.0
    }
}

/// The neutral classifier: accepts everything.
pub const NEUTRAL: NormalizedConfusionMatrix =
    NormalizedConfusionMatrix(Mat2::new(0.0, 1.0, 0.0, 1.0));

impl NormalizedConfusionMatrix {
    /// Validates each entry in `[0,1]` and each row summing to 1 within
    /// [`NORMALIZATION_TOL`].
    pub fn new(tn: f64, fp: f64, fn_: f64, tp: f64) -> Result<Self> {
        Self::with_tolerance(tn, fp, fn_, tp, NORMALIZATION_TOL)
    }

    /// Like [`Self::new`] with a caller-chosen row-sum tolerance. Rows that
    /// do not sum to exactly 1 are rescaled.
    pub fn with_tolerance(tn: f64, fp: f64, fn_: f64, tp: f64, tol: f64) -> Result<Self> {
        check_unit("tn", tn)?;
        check_unit("fp", fp)?;
        check_unit("fn", fn_)?;
        check_unit("tp", tp)?;
        for (row, a, b) in [
            ("negative row (tn+fp)", tn, fp),
            ("positive row (fn+tp)", fn_, tp),
        ] {
            if ((a + b) - 1.0).abs() > tol {
                return Err(Error::OutOfRangeProbability {
                    location: row.to_owned(),
                    value: a + b,
                    reason: format!("row must sum to 1 within {tol:e}"),
                });
            }
        }
        let rescale = |a: f64, b: f64| {
            if a + b == 1.0 {
                (a, b)
            } else {
                exact_split(b / (a + b))
            }
        };
        let (tn, fp) = rescale(tn, fp);
        let (fn_, tp) = rescale(fn_, tp);
        Ok(Self(Mat2::new(tn, fp, fn_, tp)))
    }

    /// Builds the matrix from the FP-rate `γ01` and TP-rate `γ11`; the first
    /// column is filled by normalization.
    pub fn from_rates(fp_rate: f64, tp_rate: f64) -> Self {
        Self(Mat2::new(1.0 - fp_rate, fp_rate, 1.0 - tp_rate, tp_rate))
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn tn(&self) -> f64 {
        self.0.m00
    }

    pub fn fp(&self) -> f64 {
        self.0.m01
    }

    pub fn fn_(&self) -> f64 {
        self.0.m10
    }

    pub fn tp(&self) -> f64 {
        self.0.m11
    }

    pub fn as_mat(&self) -> Mat2 {
        self.0
    }

    /// `⊕` restricted to normalized matrices; the result is normalized.
    pub fn oplus(&self, other: &Self) -> Self {
        Self(self.0.oplus(&other.0))
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_error(&self) -> f64 {
        let m = self.0;
        ((m.m00 + m.m01) - 1.0)
            .abs()
            .max(((m.m10 + m.m11) - 1.0).abs())
    }
}

/// Estimated joint probability `Ω ≈ p(X, Ĉ)` of a pipeline: TN, FP, FN and
/// TP mass summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "Mat2")]
pub struct JointMatrix(Mat2);

impl From<JointMatrix> for Mat2 {
    fn from(value: JointMatrix) -> Self {
        value.0
    }
}

/// Output of the root: every input is a positive, accepted.
pub const ROOT_JOINT: JointMatrix = JointMatrix(Mat2::new(0.0, 0.0, 0.0, 1.0));

impl JointMatrix {
    pub fn new(w00: f64, w01: f64, w10: f64, w11: f64) -> Result<Self> {
        for (name, v) in [("w00", w00), ("w01", w01), ("w10", w10), ("w11", w11)] {
            check_unit(name, v)?;
        }
        let total = w00 + w01 + w10 + w11;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::OutOfRangeProbability {
                location: "joint matrix".into(),
                value: total,
                reason: "entries must sum to 1".into(),
            });
        }
        Ok(Self(Mat2::new(w00, w01, w10, w11)))
    }

    pub(crate) fn from_mat_unchecked(m: Mat2) -> Self {
        Self(m)
    }

    pub fn w00(&self) -> f64 {
        self.0.m00
    }

    pub fn w01(&self) -> f64 {
        self.0.m01
    }

    pub fn w10(&self) -> f64 {
        self.0.m10
    }

    pub fn w11(&self) -> f64 {
        self.0.m11
    }

    pub fn as_mat(&self) -> Mat2 {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.sum()
    }
}
