//! Verdicts shared by kernel scans, Monte Carlo checks and experiments.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Version tag written into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    Bounded,
    Decaying { nu: f64 },
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated)
    }

    pub fn is_positive(&self) -> bool {
        matches!(self, Verdict::Bounded | Verdict::Decaying { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Bounded => write!(f, "bounded"),
            Verdict::Decaying { nu } => write!(f, "decaying(nu={nu:.4})"),
            Verdict::Violated => write!(f, "violated"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Min, max and `max/min` of a strictly positive sample; any non-positive or
/// non-finite entry makes the spread infinite.
pub fn band(values: &[f64]) -> (f64, f64, f64) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let finite = values.iter().all(|v| v.is_finite() && *v > 0.0);
    let spread = if finite && !values.is_empty() {
        max / min
    } else {
        f64::INFINITY
    };
    (min, max, spread)
}

/// Formats a float so that parsing it back gives the same bits.
pub fn full(x: f64) -> String {
    format!("{x:?}")
}
