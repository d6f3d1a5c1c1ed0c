//! Structured verdicts shared by the library and the CLI.
//!
//! Every numeric claim carries its tolerance; probabilistic zero verdicts
//! are flagged and never presented as symbolic. Reports serialize to a
//! stable JSON document (schema versioned in the CLI layer).

use serde::Serialize;

use crate::expr::zero::{ZeroOutcome, ZeroVerdict};

/// Verdict for a single checked equation.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Verdict {
    /// Exact symbolic zero.
    Zero,
    /// Zero at every sample point but not symbolically; weaker evidence.
    ZeroProbabilistic { max_abs: f64 },
    /// Nonzero, with the residual in DSL form.
    NonZero {
        residual: String,
        max_abs: Option<f64>,
    },
    /// The equation still contains an opaque unknown and is reported as a
    /// constraint on it rather than pass/fail.
    Constrains { unknown: String, residual: String },
}

impl Verdict {
    pub fn passes(&self) -> bool {
        matches!(self, Verdict::Zero | Verdict::ZeroProbabilistic { .. })
    }

    /// Constraint items are neutral: they neither pass nor fail.
    pub fn is_constraint(&self) -> bool {
        matches!(self, Verdict::Constrains { .. })
    }

    pub fn from_outcome(out: &ZeroOutcome, residual: &crate::expr::Expr) -> Verdict {
        match out.verdict {
            ZeroVerdict::Zero => Verdict::Zero,
            ZeroVerdict::ZeroProbabilistic => Verdict::ZeroProbabilistic {
                max_abs: out.max_abs.unwrap_or(0.0),
            },
            ZeroVerdict::NonZero => Verdict::NonZero {
                residual: residual.to_dsl(),
                max_abs: out.max_abs,
            },
        }
    }
}

/// One checked item: an equation, a constraint, a residual.
#[derive(Clone, Debug, Serialize)]
pub struct CheckItem {
    pub label: String,
    /// Origin of the equation (e.g. the jet monomial it came from).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
    pub verdict: Verdict,
    /// Max |residual| over the numeric sample, when sampling ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_numeric_residual: Option<f64>,
    /// Tolerance the numeric claim was tested at.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Per-equation verdicts plus the overall pass flag.
#[derive(Clone, Debug, Serialize, Default)]
pub struct VerificationReport {
    pub items: Vec<CheckItem>,
    pub pass: bool,
    /// Set if any verdict is only probabilistic.
    pub probabilistic_only: bool,
}

impl VerificationReport {
    pub fn from_items(items: Vec<CheckItem>) -> Self {
        let pass = items
            .iter()
            .filter(|it| !it.verdict.is_constraint())
            .all(|it| it.verdict.passes());
        let probabilistic_only = items
            .iter()
            .any(|it| matches!(it.verdict, Verdict::ZeroProbabilistic { .. }));
        VerificationReport {
            items,
            pass,
            probabilistic_only,
        }
    }

    pub fn max_numeric_residual(&self) -> Option<f64> {
        self.items
            .iter()
            .filter_map(|it| it.max_numeric_residual)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Merge reports by concatenation (batch verification).
    pub fn merge(reports: impl IntoIterator<Item = VerificationReport>) -> Self {
        let items = reports.into_iter().flat_map(|r| r.items).collect();
        VerificationReport::from_items(items)
    }
}
