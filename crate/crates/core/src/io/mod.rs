//! JSON input formats and deterministic report output.

mod input;
mod report;

pub use input::{
    parse_inputs, parse_labeling, parse_profiles, parse_taxonomy, profiles_to_file,
    serialize_inputs, taxonomy_to_file, GammaEntry, InputBundle, LabelingFile, OverrideEntry,
    ProfilesFile, TaxonomyFile, INPUT_ROW_TOL,
};
pub use report::{
    build_report, write_report, DepthRow, Format, PipelineBlock, Prior, Report, ReportOptions,
    TaxonomySummary,
};

use serde::Serialize;
use serde_json::Value;

/// Significant digits kept for every real in a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits, with `-0`
/// folded into `0`.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let r: f64 = s.parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Text form of a real in TSV output: shortest representation of the
/// rounded value, `NA` for non-finite values.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{}", round_sig(x))
    } else {
        "NA".to_owned()
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON of `value` with every real rounded, newline-terminated.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize");
    round_value(&mut v);
    let mut out = serde_json::to_string_pretty(&v).expect("json value serializes");
    out.push('\n');
    out
}
