use crate::error::{Error, Result};
use crate::matrix::{JointMatrix, Mat2};
use crate::model::StageChain;

/// Longest pipeline [`enumerate_exact`] accepts; the sum runs over
/// `4^(L+1)` label/decision chains.
pub const ENUMERATION_LIMIT: usize = 10;

/// `p(X_L, Ĉ_L)` by brute-force summation over every pair of label chain
/// `x_0 … x_L` and decision chain `ĉ_0 … ĉ_L`.
///
/// Each chain pair is weighted by the generative model directly:
/// `x_0 = ĉ_0 = 1`; `x_k = 1` with probability `f_k` if `x_{k−1} = 1` and
/// never otherwise; `ĉ_k = j` with probability `γ^(k)_{x_k j}` if
/// `ĉ_{k−1} = 1` and `ĉ_k = 0` otherwise. Chains violating these rules get
/// weight zero. No use is made of the `Ω` recurrence.
pub fn enumerate_exact(chain: &StageChain) -> Result<JointMatrix> {
    let depth = chain.depth();
    if depth > ENUMERATION_LIMIT {
        return Err(Error::TooLongForEnumeration {
            len: depth,
            limit: ENUMERATION_LIMIT,
        });
    }
    let width = depth + 1;
    let bit = |mask: u32, k: usize| (mask >> k) & 1 == 1;
    let mut joint = [[0.0_f64; 2]; 2];
    for xs in 0u32..(1 << width) {
        if !bit(xs, 0) {
            continue;
        }
        for cs in 0u32..(1 << width) {
            if !bit(cs, 0) {
                continue;
            }
            let mut weight = 1.0;
            for k in 1..width {
                let stage = chain.stages()[k - 1];
                let (x_prev, x) = (bit(xs, k - 1), bit(xs, k));
                let (c_prev, c) = (bit(cs, k - 1), bit(cs, k));
                weight *= match (x_prev, x) {
                    (true, true) => stage.f,
                    (true, false) => 1.0 - stage.f,
                    (false, false) => 1.0,
                    (false, true) => 0.0,
                };
                let g = stage.gamma.as_mat();
                let row = if x { (g.m10, g.m11) } else { (g.m00, g.m01) };
                weight *= match (c_prev, c) {
                    (true, true) => row.1,
                    (true, false) => row.0,
                    (false, false) => 1.0,
                    (false, true) => 0.0,
                };
                if weight == 0.0 {
                    break;
                }
            }
            let (x_last, c_last) = (bit(xs, depth) as usize, bit(cs, depth) as usize);
            joint[x_last][c_last] += weight;
        }
    }
    Ok(JointMatrix::from_mat_unchecked(Mat2::from_rows(joint)))
}
