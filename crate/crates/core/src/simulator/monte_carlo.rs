//! Seeded Monte-Carlo generation of documents.
//!
//! Every document draws from its own ChaCha8 stream selected by
//! `(seed, document index)`, and draws within a document happen in a fixed
//! order, so results do not depend on how documents are split across
//! worker threads.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{add_counts, Counts, SimConfig, SimOutcome};
use crate::error::Result;
use crate::model::{ClassifierProfileSet, StageChain};
use crate::taxonomy::{CategoryId, LabelSet, Taxonomy};

const CHUNK: u64 = 4096;

/// Edge probabilities must be reproduced by the generator within this
/// margin for a pipeline's tallies to be comparable with its model.
const EDGE_TOL: f64 = 1e-12;

/// Random stream of document `doc` under `seed`.
pub fn document_rng(seed: u64, doc: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(doc);
    rng
}

fn chunked<T, F, R>(m: u64, init: impl Fn() -> T + Sync + Send, work: F, reduce: R) -> T
where
    T: Send,
    F: Fn(&mut T, u64) + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    let chunks = m.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for doc in c * CHUNK..((c + 1) * CHUNK).min(m) {
                work(&mut acc, doc);
            }
            acc
        })
        .reduce(&init, reduce)
}

/// Simulates `cfg.m` documents through one pipeline.
///
/// Per depth `k`, a document stays inside the category with probability
/// `f_k` while it was inside the parent (and is outside forever after
/// leaving), and is accepted with probability `γ^(k)_{x_k,1}` while every
/// earlier classifier accepted it (a rejection is never recovered).
pub fn simulate_pipeline(chain: &StageChain, cfg: &SimConfig) -> Result<SimOutcome> {
    cfg.validate()?;
    let depth = chain.depth();
    let stages = chain.stages();
    let per_depth = chunked(
        cfg.m,
        || vec![[[0u64; 2]; 2]; depth + 1],
        |acc, doc| {
            let mut rng = document_rng(cfg.seed, doc);
            let (mut x, mut c) = (true, true);
            acc[0][1][1] += 1;
            for (k, stage) in stages.iter().enumerate() {
                let u_label: f64 = rng.gen();
                let u_decision: f64 = rng.gen();
                x = x && u_label < stage.f;
                let accept = if x {
                    stage.gamma.tp()
                } else {
                    stage.gamma.fp()
                };
                c = c && u_decision < accept;
                acc[k + 1][x as usize][c as usize] += 1;
            }
        },
        |mut a, b| {
            for (ta, tb) in a.iter_mut().zip(&b) {
                add_counts(ta, tb);
            }
            a
        },
    );
    Ok(SimOutcome {
        m: cfg.m,
        counts: per_depth[depth],
        per_depth,
    })
}

/// Generator-implied `p(child | parent)` compared with the supplied value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeCheck {
    pub child: String,
    pub parent: String,
    pub supplied: f64,
    pub effective: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineTally {
    pub pipeline: String,
    pub outcome: SimOutcome,
    /// Every edge along the pipeline is reproduced exactly by the generator,
    /// so the tally is a sample of this pipeline's model.
    pub model_exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaxonomyOutcome {
    pub m: u64,
    pub pipelines: Vec<PipelineTally>,
    pub edges: Vec<EdgeCheck>,
    pub inconsistent_label_sets: u64,
}

impl TaxonomyOutcome {
    pub fn pipeline(&self, path: &str) -> Option<&PipelineTally> {
        self.pipelines.iter().find(|p| p.pipeline == path)
    }
}

struct NodePlan {
    parents: Vec<usize>,
    keep: f64,
}

/// Per-node acceptance probabilities `q_v`: a category holds iff all its
/// parents hold and its own Bernoulli(`q_v`) draw succeeds. The label set
/// of a document is then ancestor-closed by construction, and
/// `p(v | P) = ∏ q_u` over the ancestors-or-self of `v` that are not
/// ancestors-or-self of `P`. For single-parent nodes `q_v = f(v | P)`;
/// for shared nodes `q_v` is fitted to the parent with the largest
/// ancestor closure.
fn plan_memberships(
    t: &Taxonomy,
    order: &[CategoryId],
    pos: &BTreeMap<CategoryId, usize>,
) -> Result<(Vec<NodePlan>, Vec<EdgeCheck>)> {
    let closure = |c: &CategoryId| -> Result<BTreeSet<usize>> {
        let mut set: BTreeSet<usize> = t
            .relative_sets(c.as_str())?
            .ancestors
            .iter()
            .map(|a| pos[a])
            .collect();
        set.insert(pos[c]);
        Ok(set)
    };
    let closures = order.iter().map(closure).collect::<Result<Vec<_>>>()?;

    let mut plans: Vec<NodePlan> = Vec::with_capacity(order.len());
    let mut edges = Vec::new();
    for (v, name) in order.iter().enumerate() {
        let parent_names = t.parent_names(name);
        let parents: Vec<usize> = parent_names.iter().map(|p| pos[p]).collect();
        if parents.is_empty() {
            plans.push(NodePlan { parents, keep: 1.0 });
            continue;
        }
        let supplied = |p: usize| -> Result<f64> {
            t.covering_char(
                name.as_str(),
                order[p].as_str(),
                crate::taxonomy::Mode::Probabilistic,
            )
        };
        let between = |p: usize| -> f64 {
            closures[v]
                .difference(&closures[p])
                .filter(|&&u| u != v)
                .map(|&u| plans[u].keep)
                .product()
        };
        let anchor = *parents
            .iter()
            .max_by(|&&a, &&b| {
                closures[a]
                    .len()
                    .cmp(&closures[b].len())
                    .then_with(|| order[b].cmp(&order[a]))
            })
            .expect("non-empty parents");
        let f_anchor = supplied(anchor)?;
        let denom = between(anchor);
        let keep = if f_anchor == 0.0 {
            0.0
        } else if denom > 0.0 {
            (f_anchor / denom).min(1.0)
        } else {
            1.0
        };
        for &p in &parents {
            let s = supplied(p)?;
            let effective = keep * between(p);
            edges.push(EdgeCheck {
                child: name.to_string(),
                parent: order[p].to_string(),
                supplied: s,
                effective,
                consistent: (s - effective).abs() <= EDGE_TOL,
            });
        }
        plans.push(NodePlan { parents, keep });
    }
    edges.sort_by(|a, b| (&a.child, &a.parent).cmp(&(&b.child, &b.parent)));
    Ok((plans, edges))
}

/// Simulates `cfg.m` documents through the whole taxonomy.
///
/// True label sets come from the generator of [`plan_memberships`].
/// Classification is top-down over the unfolded taxonomy: every accepting
/// node forwards the document to all its children, and each pipeline
/// occurrence of a category runs its own (possibly overridden) classifier.
/// Tallies are then read per pipeline.
pub fn simulate_taxonomy(
    t: &Taxonomy,
    profiles: &ClassifierProfileSet,
    cfg: &SimConfig,
) -> Result<TaxonomyOutcome> {
    cfg.validate()?;
    let order = t.topological_order();
    let pos: BTreeMap<CategoryId, usize> = order
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    let (plans, edges) = plan_memberships(t, &order, &pos)?;

    let pipelines = t.enumerate_pipelines(false);
    let index: BTreeMap<String, usize> = pipelines
        .iter()
        .enumerate()
        .map(|(i, p)| (p.path(), i))
        .collect();
    struct Occurrence {
        parent: usize,
        node: usize,
        fp: f64,
        tp: f64,
    }
    let mut occurrences = Vec::with_capacity(pipelines.len());
    for p in &pipelines {
        if p.depth() == 0 {
            occurrences.push(Occurrence {
                parent: usize::MAX,
                node: pos[&p.nodes()[0]],
                fp: 1.0,
                tp: 1.0,
            });
            continue;
        }
        let gamma = *profiles
            .resolve(p)?
            .last()
            .expect("non-root pipeline has a classifier");
        occurrences.push(Occurrence {
            parent: index[&p.prefix(p.depth() - 1).path()],
            node: pos[p.nodes().last().expect("non-empty")],
            fp: gamma.fp(),
            tp: gamma.tp(),
        });
    }

    struct Acc {
        tallies: Vec<Counts>,
        inconsistent: u64,
    }
    let n_pipes = pipelines.len();
    let acc = chunked(
        cfg.m,
        || Acc {
            tallies: vec![[[0; 2]; 2]; n_pipes],
            inconsistent: 0,
        },
        |acc, doc| {
            let mut rng = document_rng(cfg.seed, doc);
            let mut member = vec![false; order.len()];
            for (v, plan) in plans.iter().enumerate() {
                if plan.parents.is_empty() {
                    member[v] = true;
                    continue;
                }
                let u: f64 = rng.gen();
                member[v] = plan.parents.iter().all(|&p| member[p]) && u < plan.keep;
            }
            let labels = LabelSet(
                order
                    .iter()
                    .zip(&member)
                    .filter(|(_, &m)| m)
                    .map(|(c, _)| c.clone())
                    .collect(),
            );
            let consistent = t
                .check_label_consistency(&labels)
                .map(|c| c.is_consistent())
                .unwrap_or(false);
            if !consistent {
                acc.inconsistent += 1;
            }
            let mut accepted = vec![false; n_pipes];
            for (i, occ) in occurrences.iter().enumerate() {
                let x = member[occ.node];
                accepted[i] = if occ.parent == usize::MAX {
                    true
                } else {
                    let u: f64 = rng.gen();
                    accepted[occ.parent] && u < if x { occ.tp } else { occ.fp }
                };
                acc.tallies[i][x as usize][accepted[i] as usize] += 1;
            }
        },
        |mut a, b| {
            for (ta, tb) in a.tallies.iter_mut().zip(&b.tallies) {
                add_counts(ta, tb);
            }
            a.inconsistent += b.inconsistent;
            a
        },
    );

    let exact_edge: BTreeMap<(String, String), bool> = edges
        .iter()
        .map(|e| ((e.child.clone(), e.parent.clone()), e.consistent))
        .collect();
    let tallies = pipelines
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let per_depth = (0..=p.depth())
                .map(|k| acc.tallies[index[&p.prefix(k).path()]])
                .collect();
            let model_exact = p.nodes().windows(2).all(|w| {
                exact_edge
                    .get(&(w[1].to_string(), w[0].to_string()))
                    .copied()
                    .unwrap_or(false)
            });
            PipelineTally {
                pipeline: p.path(),
                outcome: SimOutcome {
                    m: cfg.m,
                    counts: acc.tallies[i],
                    per_depth,
                },
                model_exact,
            }
        })
        .collect();
    Ok(TaxonomyOutcome {
        m: cfg.m,
        pipelines: tallies,
        edges,
        inconsistent_label_sets: acc.inconsistent,
    })
}
