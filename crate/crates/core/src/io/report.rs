use std::fmt::Write as _;

use serde::Serialize;

use super::{canonical_json, format_real, InputBundle};
use crate::error::Result;
use crate::matrix::Mat2;
use crate::metrics::{depth_profile, pipeline_metrics, MetricFlag, MetricReport};
use crate::model::{factorize, omega_recursive, Eta, StageChain};
use crate::taxonomy::{Pipeline, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Tsv,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Only pipelines ending at a leaf.
    pub leaf_only: bool,
    /// Restrict the report to one slash-joined pipeline.
    pub pipeline: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaxonomySummary {
    pub root: String,
    pub categories: usize,
    pub edges: usize,
    pub leaves: usize,
    pub dag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prior {
    pub neg: f64,
    pub pos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthRow {
    pub k: usize,
    pub f: f64,
    pub omega: [[f64; 2]; 2],
    pub psi11: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<MetricFlag>,
    pub precision_verdict: Option<&'static str>,
    pub precision_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineBlock {
    pub pipeline: String,
    pub depth: usize,
    /// Edge probabilities `f_1 … f_L`.
    pub d: Vec<f64>,
    pub omega: [[f64; 2]; 2],
    pub prior: Prior,
    pub phi: [[f64; 2]; 2],
    pub psi: [[f64; 2]; 2],
    pub eta: Eta,
    pub metrics: MetricReport,
    pub recall_non_increasing: bool,
    pub depth_profile: Vec<DepthRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub taxonomy: TaxonomySummary,
    pub pipeline_count: usize,
    /// Profile rows rescaled on input.
    pub renormalized: Vec<String>,
    pub pipelines: Vec<PipelineBlock>,
}

fn summary(t: &Taxonomy) -> TaxonomySummary {
    TaxonomySummary {
        root: t.root().to_string(),
        categories: t.len(),
        edges: t.edge_count(),
        leaves: t
            .categories()
            .iter()
            .filter(|c| t.is_leaf(c.as_str()).unwrap_or(false))
            .count(),
        dag: t.is_dag(),
    }
}

fn rows(m: Mat2) -> [[f64; 2]; 2] {
    m.rows()
}

fn block(p: &Pipeline, chain: &StageChain) -> PipelineBlock {
    let omega = omega_recursive(chain);
    let fac = factorize(chain);
    let profile = depth_profile(chain);
    PipelineBlock {
        pipeline: p.path(),
        depth: chain.depth(),
        d: chain.stages().iter().map(|s| s.f).collect(),
        omega: rows(omega.as_mat()),
        prior: Prior {
            neg: fac.prior_neg,
            pos: fac.prior_pos,
        },
        phi: rows(fac.phi.as_mat()),
        psi: rows(fac.psi.as_mat()),
        eta: fac.eta,
        metrics: pipeline_metrics(&omega),
        recall_non_increasing: profile.recall_non_increasing,
        depth_profile: profile
            .entries
            .into_iter()
            .map(|e| DepthRow {
                k: e.k,
                f: e.f,
                omega: rows(e.omega.as_mat()),
                psi11: e.psi11,
                precision: e.metrics.precision,
                recall: e.metrics.recall,
                f1: e.metrics.f1,
                accuracy: e.metrics.accuracy,
                flags: e.metrics.flags,
                precision_verdict: e.precision_step.map(|v| v.label()),
                precision_bound: e.precision_step.and_then(|v| match v {
                    crate::metrics::StepVerdict::NonDecreasing { bound }
                    | crate::metrics::StepVerdict::Decreasing { bound } => Some(bound),
                    crate::metrics::StepVerdict::Degenerate => None,
                }),
            })
            .collect(),
    }
}

/// Evaluates every selected pipeline of the bundle.
pub fn build_report(bundle: &InputBundle, opts: &ReportOptions) -> Result<Report> {
    let t = &bundle.taxonomy;
    let mut pipelines = match &opts.pipeline {
        Some(path) => vec![t.pipeline(path)?],
        None => t.enumerate_pipelines(opts.leaf_only),
    };
    pipelines.sort_by_key(Pipeline::path);
    let blocks = pipelines
        .iter()
        .map(|p| Ok(block(p, &StageChain::from_pipeline(p, &bundle.profiles)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        taxonomy: summary(t),
        pipeline_count: blocks.len(),
        renormalized: bundle.renormalized.clone(),
        pipelines: blocks,
    })
}

pub const TSV_HEADER: &str =
    "pipeline\tk\tf_k\tw00\tw01\tw10\tw11\ttP\ttR\ttF1\ttA\tprecision_verdict";

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_owned(), format_real)
}

fn tsv(r: &Report) -> String {
    let mut out = String::new();
    out.push_str(TSV_HEADER);
    out.push('\n');
    for b in &r.pipelines {
        for row in &b.depth_profile {
            let [[w00, w01], [w10, w11]] = row.omega;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                b.pipeline,
                row.k,
                format_real(row.f),
                format_real(w00),
                format_real(w01),
                format_real(w10),
                format_real(w11),
                opt(row.precision),
                opt(row.recall),
                opt(row.f1),
                format_real(row.accuracy),
                row.precision_verdict.unwrap_or("-"),
            );
        }
    }
    out
}

pub fn write_report(r: &Report, format: Format) -> String {
    match format {
        Format::Json => canonical_json(r),
        Format::Tsv => tsv(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_inputs;

    const L2_TAX: &str = r#"{"root":"A","categories":["A","B","C"],
        "edges":[{"child":"B","parent":"A","f":0.8},{"child":"C","parent":"B","f":0.5}]}"#;
    const L2_PROF: &str = r#"{"classifiers":{
        "B":{"tn":0.9,"fp":0.1,"fn":0.2,"tp":0.8},
        "C":{"tn":0.9,"fp":0.1,"fn":0.2,"tp":0.8}}}"#;

    #[test]
    fn root_only_taxonomy() {
        let b = parse_inputs(r#"{"root":"A","categories":["A"]}"#, "{}").unwrap();
        let r = build_report(&b, &ReportOptions::default()).unwrap();
        assert_eq!(r.pipeline_count, 1);
        assert_eq!(r.pipelines[0].pipeline, "A");
        assert_eq!(r.pipelines[0].omega, [[0.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn l2_fixture_tsv() {
        let b = parse_inputs(L2_TAX, L2_PROF).unwrap();
        let opts = ReportOptions {
            pipeline: Some("A/B/C".into()),
            ..Default::default()
        };
        let text = write_report(&build_report(&b, &opts).unwrap(), Format::Tsv);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TSV_HEADER);
        assert_eq!(lines[1], "A/B/C\t0\t1\t0\t0\t0\t1\t1\t1\t1\t1\t-");
        assert_eq!(lines[3], "A/B/C\t2\t0.5\t0.566\t0.034\t0.144\t0.256\t0.88275862069\t0.64\t0.742028985507\t0.822\tdecreasing".replace("0.882758620690", "0.88275862069"));
    }

    #[test]
    fn json_is_stable() {
        let b = parse_inputs(L2_TAX, L2_PROF).unwrap();
        let r = build_report(&b, &ReportOptions::default()).unwrap();
        let one = write_report(&r, Format::Json);
        assert_eq!(one, write_report(&r, Format::Json));
        assert!(one.contains("\"pipeline\": \"A/B/C\""));
        assert!(one.contains("5.66666666667"));
    }
}
