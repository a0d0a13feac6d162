use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::NormalizedConfusionMatrix;
use crate::model::ClassifierProfileSet;
use crate::taxonomy::{InstanceLabeling, RawEdge, Taxonomy};

/// Row sums of hand-written profiles may deviate from 1 by this much; rows
/// are renormalized before use.
pub const INPUT_ROW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyFile {
    pub root: String,
    pub categories: Vec<String>,
    #[serde(default)]
    pub edges: Vec<RawEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaEntry {
    pub tn: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub tp: f64,
}

impl From<&NormalizedConfusionMatrix> for GammaEntry {
    fn from(g: &NormalizedConfusionMatrix) -> Self {
        Self {
            tn: g.tn(),
            fp: g.fp(),
            fn_: g.fn_(),
            tp: g.tp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideEntry {
    pub pipeline: String,
    pub category: String,
    pub tn: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub tp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilesFile {
    #[serde(default)]
    pub classifiers: BTreeMap<String, GammaEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<OverrideEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelingFile {
    pub instances: BTreeMap<String, Vec<String>>,
}

/// A validated taxonomy with its classifier profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBundle {
    pub taxonomy: Taxonomy,
    pub profiles: ClassifierProfileSet,
    pub labeling: Option<InstanceLabeling>,
    /// Profile rows whose sums were off by less than the input tolerance and
    /// were rescaled.
    pub renormalized: Vec<String>,
}

fn syntax(what: &str, err: serde_json::Error) -> Error {
    Error::SyntaxError {
        location: format!("{what} line {} column {}", err.line(), err.column()),
        message: err.to_string(),
    }
}

pub fn parse_taxonomy(text: &str) -> Result<Taxonomy> {
    let file: TaxonomyFile = serde_json::from_str(text).map_err(|e| syntax("taxonomy", e))?;
    Taxonomy::validate(&file.categories, &file.edges, Some(&file.root))
}

fn gamma_at(
    location: String,
    (tn, fp, fn_, tp): (f64, f64, f64, f64),
    renormalized: &mut Vec<String>,
) -> Result<NormalizedConfusionMatrix> {
    let gamma =
        NormalizedConfusionMatrix::with_tolerance(tn, fp, fn_, tp, INPUT_ROW_TOL).map_err(|e| {
            match e {
                Error::OutOfRangeProbability {
                    location: field,
                    value,
                    reason,
                } => Error::OutOfRangeProbability {
                    location: format!("{location}: {field}"),
                    value,
                    reason,
                },
                other => other,
            }
        })?;
    if (gamma.tn(), gamma.fp(), gamma.fn_(), gamma.tp()) != (tn, fp, fn_, tp) {
        renormalized.push(location);
    }
    Ok(gamma)
}

/// Parses a profile file against a validated taxonomy.
pub fn parse_profiles(
    text: &str,
    taxonomy: &Taxonomy,
) -> Result<(ClassifierProfileSet, Vec<String>)> {
    let file: ProfilesFile = serde_json::from_str(text).map_err(|e| syntax("profiles", e))?;
    let mut profiles = ClassifierProfileSet::new(taxonomy.root().clone());
    let mut renormalized = Vec::new();
    for (name, e) in &file.classifiers {
        if !taxonomy.contains(name) {
            return Err(Error::UnknownCategory(format!(
                "{name} (classifiers.{name})"
            )));
        }
        if name == taxonomy.root().as_str() {
            return Err(Error::RootProfileForbidden(name.clone()));
        }
        let gamma = gamma_at(
            format!("classifiers.{name}"),
            (e.tn, e.fp, e.fn_, e.tp),
            &mut renormalized,
        )?;
        profiles.insert(name, gamma)?;
    }
    for (i, o) in file.overrides.iter().enumerate() {
        if o.category == taxonomy.root().as_str() {
            return Err(Error::RootProfileForbidden(o.category.clone()));
        }
        let pipeline = taxonomy.pipeline(&o.pipeline)?;
        if !pipeline.nodes().iter().any(|c| c.as_str() == o.category) {
            return Err(Error::UnknownCategory(format!(
                "{} (overrides[{i}] is not on {})",
                o.category, o.pipeline
            )));
        }
        let gamma = gamma_at(
            format!("overrides[{i}]"),
            (o.tn, o.fp, o.fn_, o.tp),
            &mut renormalized,
        )?;
        profiles.insert_override(&o.pipeline, &o.category, gamma)?;
    }
    Ok((profiles, renormalized))
}

pub fn parse_labeling(text: &str, taxonomy: &Taxonomy) -> Result<InstanceLabeling> {
    let file: LabelingFile = serde_json::from_str(text).map_err(|e| syntax("labeling", e))?;
    let mut labeling = InstanceLabeling::default();
    for (instance, labels) in &file.instances {
        labeling.insert(instance, labels)?;
    }
    labeling.check_against(taxonomy)?;
    Ok(labeling)
}

/// Parses and cross-validates a taxonomy and its profiles.
pub fn parse_inputs(taxonomy_text: &str, profiles_text: &str) -> Result<InputBundle> {
    let taxonomy = parse_taxonomy(taxonomy_text)?;
    let (profiles, renormalized) = parse_profiles(profiles_text, &taxonomy)?;
    Ok(InputBundle {
        taxonomy,
        profiles,
        labeling: None,
        renormalized,
    })
}

/// Taxonomy file equivalent to `t`.
pub fn taxonomy_to_file(t: &Taxonomy) -> TaxonomyFile {
    TaxonomyFile {
        root: t.root().to_string(),
        categories: t.categories().iter().map(ToString::to_string).collect(),
        edges: t
            .edges()
            .into_iter()
            .map(|(c, p, f)| RawEdge::new(c.as_str(), p.as_str(), f))
            .collect(),
    }
}

/// Profile file equivalent to `p`.
pub fn profiles_to_file(p: &ClassifierProfileSet) -> ProfilesFile {
    ProfilesFile {
        classifiers: p
            .classifiers()
            .iter()
            .map(|(c, g)| (c.to_string(), GammaEntry::from(g)))
            .collect(),
        overrides: p
            .overrides()
            .iter()
            .map(|(path, g)| OverrideEntry {
                pipeline: path
                    .iter()
                    .map(|c| c.as_str())
                    .collect::<Vec<_>>()
                    .join("/"),
                category: path.last().expect("override path is non-empty").to_string(),
                tn: g.tn(),
                fp: g.fp(),
                fn_: g.fn_(),
                tp: g.tp(),
            })
            .collect(),
    }
}

/// Serializes a bundle back into `(taxonomy, profiles)` JSON texts.
pub fn serialize_inputs(bundle: &InputBundle) -> (String, String) {
    let t = serde_json::to_string_pretty(&taxonomy_to_file(&bundle.taxonomy))
        .expect("taxonomy file serializes");
    let p = serde_json::to_string_pretty(&profiles_to_file(&bundle.profiles))
        .expect("profile file serializes");
    (t, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAX: &str =
        r#"{"root":"A","categories":["A","B"],"edges":[{"child":"B","parent":"A","f":0.5}]}"#;

    #[test]
    fn minimal_pair() {
        let b = parse_inputs(
            TAX,
            r#"{"classifiers":{"B":{"tn":0.8,"fp":0.2,"fn":0.1,"tp":0.9}}}"#,
        )
        .unwrap();
        let paths: Vec<String> = b
            .taxonomy
            .enumerate_pipelines(false)
            .iter()
            .map(|p| p.path())
            .collect();
        assert_eq!(paths, ["A", "A/B"]);
    }

    #[test]
    fn root_profile_rejected() {
        let err = parse_inputs(
            TAX,
            r#"{"classifiers":{"A":{"tn":0.8,"fp":0.2,"fn":0.1,"tp":0.9}}}"#,
        )
        .unwrap_err();
        assert_eq!(err, Error::RootProfileForbidden("A".into()));
    }

    #[test]
    fn unnormalized_row_is_located() {
        let err = parse_inputs(
            TAX,
            r#"{"classifiers":{"B":{"tn":0.9,"fp":0.2,"fn":0.1,"tp":0.9}}}"#,
        )
        .unwrap_err();
        match err {
            Error::OutOfRangeProbability {
                location, value, ..
            } => {
                assert!(location.contains("classifiers.B"), "{location}");
                assert!(location.contains("negative row"), "{location}");
                assert!((value - 1.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_rounding_is_renormalized() {
        let b = parse_inputs(
            TAX,
            r#"{"classifiers":{"B":{"tn":0.8,"fp":0.2000000001,"fn":0.1,"tp":0.9}}}"#,
        )
        .unwrap();
        assert_eq!(b.renormalized, ["classifiers.B"]);
        let g = b
            .profiles
            .get(&crate::taxonomy::CategoryId::new("B").unwrap())
            .unwrap();
        assert!((g.tn() + g.fp() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = parse_inputs("{\n  \"root\": \"A\",\n  oops }", "{}").unwrap_err();
        match err {
            Error::SyntaxError { location, .. } => {
                assert!(location.contains("line 3"), "{location}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn structural_errors_surface() {
        let err =
            parse_inputs(r#"{"root":"A","categories":["A","B"],"edges":[]}"#, "{}").unwrap_err();
        assert!(matches!(err, Error::MultipleRoots(_)));
        let err = parse_inputs(
            TAX,
            r#"{"classifiers":{"Z":{"tn":0.8,"fp":0.2,"fn":0.1,"tp":0.9}}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownCategory(_)));
        let err = parse_inputs(
            r#"{"root":"A","categories":["A","B"],"edges":[{"child":"B","parent":"A","f":1.2}]}"#,
            "{}",
        )
        .unwrap_err();
        assert!(matches!(err, Error::OutOfRangeProbability { .. }));
    }

    #[test]
    fn labeling_is_checked() {
        let t = parse_taxonomy(TAX).unwrap();
        let l = parse_labeling(r#"{"instances":{"d1":["B"]}}"#, &t).unwrap();
        assert_eq!(l.instances.len(), 1);
        assert!(parse_labeling(r#"{"instances":{"d1":["Q"]}}"#, &t).is_err());
    }
}
