//! The native JSON instance format.
//!
//! ```json
//! { "n": 2, "durations": [2, 1], "demands": [[1], [1]], "capacities": [1],
//!   "precedences": [[0, 1, 2]], "horizon": 10 }
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate, Instance, Precedence, Violation};

#[derive(Debug, Error)]
pub enum NativeError {
    #[error("at '{path}': {message}")]
    Schema { path: String, message: String },
    #[error("field 'n' is {n} but {field} has {len} entries")]
    Count { n: usize, field: &'static str, len: usize },
    #[error("invalid instance: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    n: usize,
    durations: Vec<i64>,
    demands: Vec<Vec<i64>>,
    capacities: Vec<i64>,
    precedences: Vec<(usize, usize, i64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<i64>,
}

/// Parses and validates a native document.
pub fn parse_native(text: &str) -> Result<Instance, NativeError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| NativeError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    for (field, len) in [("durations", doc.durations.len()), ("demands", doc.demands.len())] {
        if len != doc.n {
            return Err(NativeError::Count { n: doc.n, field, len });
        }
    }
    let inst = Instance {
        durations: doc.durations,
        demands: doc.demands,
        capacities: doc.capacities,
        precedences: doc.precedences.into_iter().map(|(i, j, d)| Precedence::new(i, j, d)).collect(),
        horizon: doc.horizon,
    };
    let violations = validate(&inst);
    if violations.is_empty() {
        Ok(inst)
    } else {
        Err(NativeError::Invalid(violations))
    }
}

pub fn write_native(inst: &Instance) -> String {
    let doc = Document {
        n: inst.n(),
        durations: inst.durations.clone(),
        demands: inst.demands.clone(),
        capacities: inst.capacities.clone(),
        precedences: inst.precedences.iter().map(|p| (p.from, p.to, p.lag)).collect(),
        horizon: inst.horizon,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}
