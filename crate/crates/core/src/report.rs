//! Serializable run reports. Field order is fixed so identical runs give
//! byte-identical JSON.

use std::fmt::Write as _;

use serde::Serialize;

use crate::centrality::CentralityResult;
use crate::clearing::ClearingSolution;
use crate::equivalence::EquivalenceReport;
use crate::io::SystemDocument;
use crate::model::Rate;
use crate::shocks::{SearchOrigin, ShockKind, ShockScenario};
use crate::spectral::SpectralReport;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Rate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Rate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ShockKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<SearchOrigin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub kind: ShockKind,
    pub shock: Vec<f64>,
    pub post_shock_assets: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl From<&ShockScenario> for ScenarioReport {
    fn from(s: &ShockScenario) -> Self {
        Self {
            kind: s.kind,
            shock: s.shock.iter().copied().collect(),
            post_shock_assets: s.post_shock_assets.iter().copied().collect(),
            search_steps: s.search_steps,
            max_steps: s.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClearingReport {
    /// Bank payments; the sink is omitted.
    pub payments: Vec<f64>,
    pub defaults: Vec<bool>,
    pub default_history: Vec<Vec<bool>>,
    pub iterations: usize,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
    pub uniqueness_condition_met: bool,
}

impl ClearingReport {
    pub fn new(solution: &ClearingSolution, oracle_gap: Option<f64>) -> Self {
        Self {
            payments: solution.bank_payments().to_vec(),
            defaults: solution.defaults.flags().to_vec(),
            default_history: solution
                .default_history
                .iter()
                .map(|d| d.flags().to_vec())
                .collect(),
            iterations: solution.iterations,
            residual: solution.residual,
            oracle_gap,
            uniqueness_condition_met: solution.uniqueness_condition_met,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport {
    pub beta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub residual: f64,
}

impl CentralityReport {
    pub fn new(res: &CentralityResult, banks: usize) -> Self {
        Self {
            beta: res.beta.rows(0, banks).iter().copied().collect(),
            sigma: res.sigma.rows(0, banks).iter().copied().collect(),
            residual: res.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub input: SystemDocument,
    pub parameters: Parameters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clearing: Option<ClearingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capitalization_adjusted_loss: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centrality: Option<CentralityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxed_equivalence: Option<EquivalenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invertible: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, input: SystemDocument, parameters: Parameters) -> Self {
        Self {
            command: command.to_string(),
            input,
            parameters,
            scenario: None,
            clearing: None,
            sigma: None,
            capitalization_adjusted_loss: None,
            centrality: None,
            equivalence: None,
            relaxed_equivalence: None,
            spectral: None,
            invertible: None,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Plain-text table for terminals.
    pub fn to_table(&self) -> String {
        let labels = self.input.labels();
        let banks = labels.len().saturating_sub(1);
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);

        let mut columns: Vec<(&str, Vec<String>)> = Vec::new();
        if let Some(s) = &self.scenario {
            columns.push(("shock", fmt_all(&s.shock[..banks])));
            columns.push(("assets", fmt_all(&s.post_shock_assets[..banks])));
        }
        if let Some(c) = &self.clearing {
            columns.push(("payment", fmt_all(&c.payments)));
            columns.push((
                "default",
                c.defaults[..banks]
                    .iter()
                    .map(|&d| if d { "yes" } else { "no" }.to_string())
                    .collect(),
            ));
        }
        if let Some(s) = &self.sigma {
            columns.push(("loss", fmt_all(&s[..banks])));
        }
        if let Some(c) = &self.centrality {
            columns.push(("beta", fmt_all(&c.beta)));
            columns.push(("katz", fmt_all(&c.sigma)));
        }
        if let Some(e) = &self.equivalence {
            columns.push(("gap", fmt_all(&e.details)));
        }

        if !columns.is_empty() {
            let _ = write!(out, "{:<12}", "bank");
            for (name, _) in &columns {
                let _ = write!(out, "{name:>16}");
            }
            out.push('\n');
            for (i, label) in labels.iter().take(banks).enumerate() {
                let _ = write!(out, "{label:<12}");
                for (_, values) in &columns {
                    let _ = write!(out, "{:>16}", values[i]);
                }
                out.push('\n');
            }
        }

        if let Some(c) = &self.clearing {
            let _ = writeln!(
                out,
                "iterations: {}  residual: {:.3e}",
                c.iterations, c.residual
            );
            if let Some(g) = c.oracle_gap {
                let _ = writeln!(out, "oracle gap: {g:.3e}");
            }
        }
        for (name, e) in [
            ("full-default", &self.equivalence),
            ("relaxed", &self.relaxed_equivalence),
        ] {
            if let Some(e) = e {
                let _ = writeln!(
                    out,
                    "{name} equivalence: {}  max gap {:.3e} (tol {:.3e})  one step: {}  all defaulted: {}",
                    if e.pass { "PASS" } else { "FAIL" },
                    e.max_abs_gap,
                    e.tolerance,
                    e.one_step,
                    e.all_defaulted
                );
                if let Some(p) = e.printed_form_gap {
                    let _ = writeln!(out, "  printed closed-form gap: {p:.6}");
                }
            }
        }
        if let Some(s) = &self.spectral {
            let _ = writeln!(
                out,
                "spectral radius: {:.12}  (Collatz-Wielandt lower bound {:.12})  invertible for r in {}",
                s.radius_estimate, s.collatz_wielandt_lower, s.invertible_for_r
            );
        }
        if let Some(inv) = self.invertible {
            let _ = writeln!(out, "I - rC invertible: {inv}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

fn fmt_all(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| format!("{v:.6}")).collect()
}
