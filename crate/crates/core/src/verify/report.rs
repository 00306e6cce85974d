use serde::Serialize;
use serde_json::Value;

/// How a report's pass flag follows from its numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// `|estimate − closed_form| ≤ halfwidth + allowance`.
    TwoSided,
    /// `estimate ≥ closed_form`.
    AtLeast,
    /// `estimate == closed_form` (categorical outcomes encoded as numbers).
    Exact,
    /// `params.discrepancies` strictly decreasing, pairs below `allowance`
    /// counting as equal.
    Decreasing,
}

/// One verified identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: Value,
    pub closed_form: f64,
    pub estimate: f64,
    pub halfwidth: f64,
    pub allowance: f64,
    pub criterion: Criterion,
    pub samples: usize,
    pub pass: bool,
    pub seed: u64,
}

impl VerificationReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        check: &str,
        params: Value,
        closed_form: f64,
        estimate: f64,
        halfwidth: f64,
        allowance: f64,
        criterion: Criterion,
        samples: usize,
        seed: u64,
    ) -> Self {
        let mut r = VerificationReport {
            check: check.to_string(),
            params,
            closed_form,
            estimate,
            halfwidth,
            allowance,
            criterion,
            samples,
            pass: false,
            seed,
        };
        r.pass = r.recompute_pass();
        r
    }

    /// The pass flag as a function of the other fields.
    pub fn recompute_pass(&self) -> bool {
        match self.criterion {
            Criterion::TwoSided => {
                (self.estimate - self.closed_form).abs() <= self.halfwidth + self.allowance
            }
            Criterion::AtLeast => self.estimate >= self.closed_form,
            Criterion::Exact => self.estimate == self.closed_form,
            Criterion::Decreasing => {
                let Some(d) = self.params.get("discrepancies").and_then(Value::as_array) else {
                    return false;
                };
                let d: Vec<f64> = d.iter().filter_map(Value::as_f64).collect();
                d.len() >= 2
                    && d.windows(2).all(|w| w[1] < w[0] || (w[0] <= self.allowance && w[1] <= self.allowance))
            }
        }
    }

    /// One line for the human-readable table.
    pub fn table_row(&self) -> String {
        format!(
            "{:<22} {:<6} closed_form={:<12.6} estimate={:<12.6} halfwidth={:<10.3e} allowance={:<9.2e} {}",
            self.check,
            if self.pass { "PASS" } else { "FAIL" },
            self.closed_form,
            self.estimate,
            self.halfwidth,
            self.allowance,
            self.params
        )
    }
}
