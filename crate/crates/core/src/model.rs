//! The pipeline model: context switching, the `Ω` recurrence and its closed
//! form, the intrinsic matrix `Ψ`, and the prior/deterioration factorization.
//!
//! Every function here is pure. The model of a pipeline `c_0 … c_L` needs
//! the conditional probabilities `f_1 … f_L` of its covering edges and the
//! normalized confusion matrices `Γ^(1) … Γ^(L)` of its non-root
//! classifiers; the root always behaves as the neutral classifier `μ`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{JointMatrix, Mat2, NormalizedConfusionMatrix, PsiMatrix, NEUTRAL, ROOT_JOINT};
use crate::taxonomy::{CategoryId, Pipeline};

/// Classifier behavior per category, with optional per-pipeline overrides.
///
/// An override is keyed by the path from the root to the category it
/// replaces, so the same DAG node can behave differently depending on the
/// pipeline that reaches it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierProfileSet {
    root: CategoryId,
    classifiers: BTreeMap<CategoryId, NormalizedConfusionMatrix>,
    overrides: BTreeMap<Vec<CategoryId>, NormalizedConfusionMatrix>,
}

impl ClassifierProfileSet {
    pub fn new(root: CategoryId) -> Self {
        Self {
            root,
            classifiers: BTreeMap::new(),
            overrides: BTreeMap::new(),
        }
    }

    pub fn root(&self) -> &CategoryId {
        &self.root
    }

    pub fn insert(&mut self, category: &str, gamma: NormalizedConfusionMatrix) -> Result<()> {
        let id = CategoryId::new(category)?;
        if id == self.root {
            return Err(Error::RootProfileForbidden(category.to_owned()));
        }
        self.classifiers.insert(id, gamma);
        Ok(())
    }

    /// Registers `gamma` for `category` when reached along `pipeline_path`
    /// (slash-joined). Only the path up to `category` is significant.
    pub fn insert_override(
        &mut self,
        pipeline_path: &str,
        category: &str,
        gamma: NormalizedConfusionMatrix,
    ) -> Result<()> {
        let id = CategoryId::new(category)?;
        if id == self.root {
            return Err(Error::RootProfileForbidden(category.to_owned()));
        }
        let path = pipeline_path
            .split('/')
            .map(CategoryId::new)
            .collect::<Result<Vec<_>>>()?;
        let pos = path
            .iter()
            .position(|c| *c == id)
            .ok_or_else(|| Error::UnknownCategory(format!("{category} in {pipeline_path}")))?;
        self.overrides.insert(path[..=pos].to_vec(), gamma);
        Ok(())
    }

    pub fn get(&self, category: &CategoryId) -> Option<&NormalizedConfusionMatrix> {
        self.classifiers.get(category)
    }

    pub fn classifiers(&self) -> &BTreeMap<CategoryId, NormalizedConfusionMatrix> {
        &self.classifiers
    }

    pub fn overrides(&self) -> &BTreeMap<Vec<CategoryId>, NormalizedConfusionMatrix> {
        &self.overrides
    }

    /// `Γ` of each non-root classifier of `p`, overrides first.
    pub fn resolve(&self, p: &Pipeline) -> Result<Vec<NormalizedConfusionMatrix>> {
        let nodes = p.nodes();
        (1..nodes.len())
            .map(|k| {
                self.overrides
                    .get(&nodes[..=k])
                    .or_else(|| self.classifiers.get(&nodes[k]))
                    .copied()
                    .ok_or_else(|| Error::MissingGamma(nodes[k].to_string()))
            })
            .collect()
    }

    /// `Γ` for each element of an arbitrary category string; the root maps
    /// to `μ`. Overrides do not apply outside pipelines.
    pub fn resolve_string<S: AsRef<str>>(&self, s: &[S]) -> Result<Vec<NormalizedConfusionMatrix>> {
        s.iter()
            .map(|c| {
                let id = CategoryId::new(c.as_ref())?;
                if id == self.root {
                    Ok(NEUTRAL)
                } else {
                    self.classifiers
                        .get(&id)
                        .copied()
                        .ok_or_else(|| Error::MissingGamma(id.to_string()))
                }
            })
            .collect()
    }
}

/// One filtering step below the root: the conditional probability `f_k`
/// of the traversed edge and the classifier `Γ^(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stage {
    pub f: f64,
    pub gamma: NormalizedConfusionMatrix,
}

/// Fully resolved model inputs for a pipeline of depth `L = stages.len()`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageChain {
    stages: Vec<Stage>,
}

impl StageChain {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        for (k, s) in stages.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.f) {
                return Err(Error::OutOfRangeProbability {
                    location: format!("f_{}", k + 1),
                    value: s.f,
                    reason: "conditional probability must lie in [0,1]".into(),
                });
            }
        }
        Ok(Self { stages })
    }

    pub fn from_pipeline(p: &Pipeline, profiles: &ClassifierProfileSet) -> Result<Self> {
        let gammas = profiles.resolve(p)?;
        let fs = p.conditional_profile()?;
        Self::new(
            fs.values()[1..]
                .iter()
                .zip(gammas)
                .map(|(&f, gamma)| Stage { f, gamma })
                .collect(),
        )
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn prefix(&self, k: usize) -> StageChain {
        StageChain {
            stages: self.stages[..k].to_vec(),
        }
    }

    /// `f_j` with `f_0 = 1`.
    pub fn f(&self, j: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            self.stages[j - 1].f
        }
    }

    /// `Γ^(j)` with `Γ^(0) = μ`.
    pub fn gamma(&self, j: usize) -> NormalizedConfusionMatrix {
        if j == 0 {
            NEUTRAL
        } else {
            self.stages[j - 1].gamma
        }
    }

    /// `F_k = f_0·f_1 ⋯ f_k`.
    pub fn traversal(&self, k: usize) -> f64 {
        (0..=k).map(|j| self.f(j)).product()
    }

    pub fn gammas(&self) -> Vec<NormalizedConfusionMatrix> {
        self.stages.iter().map(|s| s.gamma).collect()
    }
}

/// `χ = [[1, 1−f], [0, f]] · Ω^(k−1)`: relabels the parent's positives
/// that fall outside the child's domain as negatives.
pub fn context_switch(f: f64, prev: &JointMatrix) -> Mat2 {
    Mat2::new(1.0, 1.0 - f, 0.0, f) * prev.as_mat()
}

/// One step of the recurrence: `Ω^(k) = χ ⊕ Γ^(k)`.
pub fn omega_step(prev: &JointMatrix, f: f64, gamma: &NormalizedConfusionMatrix) -> JointMatrix {
    JointMatrix::from_mat_unchecked(context_switch(f, prev).oplus(&gamma.as_mat()))
}

/// `Ω^(0) … Ω^(L)` by repeated [`omega_step`].
pub fn omega_trace(chain: &StageChain) -> Vec<JointMatrix> {
    let mut out = Vec::with_capacity(chain.depth() + 1);
    out.push(ROOT_JOINT);
    for s in chain.stages() {
        let next = omega_step(out.last().expect("non-empty"), s.f, &s.gamma);
        out.push(next);
    }
    out
}

/// `Ω` as a left fold of the recurrence from the root output.
pub fn omega_recursive(chain: &StageChain) -> JointMatrix {
    chain
        .stages()
        .iter()
        .fold(ROOT_JOINT, |omega, s| omega_step(&omega, s.f, &s.gamma))
}

/// FP mass by the unfolded sum over the depth `j` at which a positive
/// switches context and then survives every later classifier as an FP:
/// `Σ_j (1−f_j)·F_{j−1}·∏_{r<j} γ11^(r)·∏_{s=j..k} γ01^(s)`.
fn closed_fp_mass(chain: &StageChain) -> f64 {
    let k = chain.depth();
    let mut total = 0.0;
    for j in 1..=k {
        let survived: f64 = (0..j).map(|r| chain.gamma(r).tp()).product();
        let leaked: f64 = (j..=k).map(|s| chain.gamma(s).fp()).product();
        total += (1.0 - chain.f(j)) * chain.traversal(j - 1) * survived * leaked;
    }
    total
}

/// `Ω` from the unfolded closed form.
pub fn omega_closed(chain: &StageChain) -> JointMatrix {
    let k = chain.depth();
    let prior_pos = chain.traversal(k);
    let prior_neg = 1.0 - prior_pos;
    let psi11: f64 = (0..=k).map(|j| chain.gamma(j).tp()).product();
    let w11 = prior_pos * psi11;
    let w01 = closed_fp_mass(chain);
    JointMatrix::from_mat_unchecked(Mat2::new(prior_neg - w01, w01, prior_pos - w11, w11))
}

/// Which route [`psi`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiMode {
    Recursive,
    Closed,
}

/// Intrinsic matrix of a sequence of classifiers.
///
/// The recursive route folds `⊕` from `μ`; the closed route takes the
/// products of the FP- and TP-rates and fills the rows by normalization.
/// The empty sequence maps to `μ`.
pub fn psi(gammas: &[NormalizedConfusionMatrix], mode: PsiMode) -> PsiMatrix {
    match mode {
        PsiMode::Recursive => gammas.iter().fold(NEUTRAL, |acc, g| acc.oplus(g)),
        PsiMode::Closed => {
            let fp: f64 = gammas.iter().map(|g| g.fp()).product();
            let tp: f64 = gammas.iter().map(|g| g.tp()).product();
            NormalizedConfusionMatrix::from_rates(fp, tp)
        }
    }
}

/// `Ψ` of a category string, resolving each element through `profiles`.
pub fn psi_of_string<S: AsRef<str>>(
    s: &[S],
    profiles: &ClassifierProfileSet,
    mode: PsiMode,
) -> Result<PsiMatrix> {
    Ok(psi(&profiles.resolve_string(s)?, mode))
}

/// `Ψ` evaluated by balanced splitting, `Ψ(left + right) = Ψ(left) ⊕ Ψ(right)`.
pub fn homomorphism_map(gammas: &[NormalizedConfusionMatrix]) -> PsiMatrix {
    match gammas {
        [] => NEUTRAL,
        [g] => *g,
        _ => {
            let (left, right) = gammas.split_at(gammas.len() / 2);
            homomorphism_map(left).oplus(&homomorphism_map(right))
        }
    }
}

/// The FP leakage coefficient `η` of a factorization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Eta {
    Finite(f64),
    /// Some `γ01` along the pipeline is zero, so `ψ01 = 0`; `η·ψ01` is
    /// still finite and is what `Φ` uses.
    Unbounded,
    /// `F = 1`: no negative inputs exist.
    ZeroNegativeMass,
}

impl Eta {
    pub fn value(&self) -> Option<f64> {
        match self {
            Eta::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

/// `Ω = diag(1−F, F) · Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Factorization {
    pub prior_neg: f64,
    pub prior_pos: f64,
    pub phi: NormalizedConfusionMatrix,
    pub psi: PsiMatrix,
    pub eta: Eta,
}

impl Factorization {
    pub fn reconstruct(&self) -> Mat2 {
        Mat2::new(self.prior_neg, 0.0, 0.0, self.prior_pos) * self.phi.as_mat()
    }
}

/// Splits `Ω` into the oracle prior and the deterioration matrix `Φ`.
///
/// `η·ψ01` is obtained as `ω01 / (1−F)` with `ω01` from the unfolded sum,
/// so `Φ` is defined even when some `γ01` vanishes. With `F = 1` the
/// negative row of `Φ` is taken from `Ψ`.
pub fn factorize(chain: &StageChain) -> Factorization {
    let k = chain.depth();
    let prior_pos = chain.traversal(k);
    let prior_neg = 1.0 - prior_pos;
    let psi = psi(&chain.gammas(), PsiMode::Closed);
    let (phi, eta) = if prior_neg == 0.0 {
        (
            NormalizedConfusionMatrix::from_rates(psi.fp(), psi.tp()),
            Eta::ZeroNegativeMass,
        )
    } else {
        let leak = (closed_fp_mass(chain) / prior_neg).clamp(0.0, 1.0);
        let eta = if psi.fp() > 0.0 {
            Eta::Finite(leak / psi.fp())
        } else {
            Eta::Unbounded
        };
        (NormalizedConfusionMatrix::from_rates(leak, psi.tp()), eta)
    };
    Factorization {
        prior_neg,
        prior_pos,
        phi,
        psi,
        eta,
    }
}

/// `Ξ = m·Ω`, left unrounded.
pub fn expected_confusion(m: u64, omega: &JointMatrix) -> Result<Mat2> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    Ok(omega.as_mat().scale(m as f64))
}

/// Convenience wrappers taking a taxonomy pipeline.
pub fn omega_for(p: &Pipeline, profiles: &ClassifierProfileSet) -> Result<JointMatrix> {
    Ok(omega_recursive(&StageChain::from_pipeline(p, profiles)?))
}

pub fn psi_for(p: &Pipeline, profiles: &ClassifierProfileSet, mode: PsiMode) -> Result<PsiMatrix> {
    Ok(psi(&profiles.resolve(p)?, mode))
}
