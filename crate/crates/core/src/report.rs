//! Versioned JSON documents for analysis reports and continuation runs.

use serde::{Deserialize, Serialize};

use crate::bifurcation::BifurcationReport;
use crate::error::{Error, Result};
use crate::galerkin::Branch;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub format_version: u32,
    pub report: BifurcationReport,
}

impl ReportDocument {
    pub fn new(report: BifurcationReport) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            report,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPointSummary {
    pub amplitude: f64,
    pub lambda: f64,
    pub lambda_drift: f64,
    pub residual_norm: f64,
    pub modes: usize,
    pub min_period: f64,
    pub min_period_divisor: u64,
    pub active_modes: Vec<u32>,
    pub energy_variation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub direction: Vec<f64>,
    pub points: Vec<BranchPointSummary>,
    pub failure: Option<crate::galerkin::BranchFailure>,
    pub tail_drift: f64,
    pub max_drift: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationDocument {
    pub format_version: u32,
    pub problem: String,
    pub lambda0: f64,
    pub k0: u32,
    pub branches: Vec<BranchSummary>,
}

impl ContinuationDocument {
    pub fn new(problem: &str, lambda0: f64, k0: u32, branches: &[Branch]) -> Self {
        let branches = branches
            .iter()
            .map(|b| BranchSummary {
                direction: b.direction.clone(),
                points: b
                    .points
                    .iter()
                    .map(|pt| BranchPointSummary {
                        amplitude: pt.amplitude,
                        lambda: pt.lambda,
                        lambda_drift: pt.lambda - b.lambda0,
                        residual_norm: pt.residual_norm,
                        modes: pt.solution.modes(),
                        min_period: match pt.min_period_divisor {
                            0 => 0.0,
                            g => 2.0 * std::f64::consts::PI / g as f64,
                        },
                        min_period_divisor: pt.min_period_divisor,
                        active_modes: pt.active_modes.iter().copied().collect(),
                        energy_variation: pt.energy_variation,
                    })
                    .collect(),
                failure: b.failure.clone(),
                tail_drift: b.tail_drift,
                max_drift: b
                    .points
                    .iter()
                    .map(|pt| (pt.lambda - b.lambda0).abs())
                    .fold(0.0, f64::max),
                warnings: b.warnings.clone(),
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            problem: problem.to_string(),
            lambda0,
            k0,
            branches,
        }
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialize")
}

pub fn report_from_json(text: &str) -> Result<ReportDocument> {
    let doc: ReportDocument =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("report JSON: {}", e)))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported report format_version {} (expected {})",
            doc.format_version, FORMAT_VERSION
        )));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifurcation::analyze;
    use crate::catalog;

    #[test]
    fn reports_round_trip_and_are_deterministic() {
        for name in catalog::NAMES {
            let cfg = catalog::example(name).unwrap();
            let (lm, lp) = cfg.interval;
            let r = analyze(&cfg.spec, lm, lp, &cfg.analyze_options()).unwrap();
            let doc = ReportDocument::new(r);
            let text = to_json(&doc);
            assert_eq!(report_from_json(&text).unwrap(), doc, "{name}");
            let again = analyze(&cfg.spec, lm, lp, &cfg.analyze_options()).unwrap();
            assert_eq!(to_json(&ReportDocument::new(again)), text);
        }
    }

    #[test]
    fn version_is_checked() {
        let cfg = catalog::example2();
        let r = analyze(&cfg.spec, -0.5, 0.5, &cfg.analyze_options()).unwrap();
        let text = to_json(&ReportDocument::new(r)).replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        assert!(report_from_json(&text).is_err());
    }
}
