//! Regression table for the three bundled examples.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bifurcation::{analyze, predict_periods, BifurcationReport, Criterion};
use crate::catalog;
use crate::config::ProblemConfig;
use crate::error::Result;
use crate::galerkin::{continue_branch, kernel_directions, Branch, ContinuationOptions};
use crate::report::FORMAT_VERSION;
use crate::spectral::{eigen_sym, j_k, k_set};

/// Deliberate corruption of an intermediate value, used to check that the
/// table can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tamper {
    /// Adds one to every j_k read by the table.
    JkOffset,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    pub tamper: Option<Tamper>,
    /// Skip the branch-following rows.
    pub skip_continuation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub example: String,
    pub check: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub format_version: u32,
    pub rows: Vec<Row>,
    pub all_pass: bool,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w_ex = self.rows.iter().map(|r| r.example.len()).max().unwrap_or(0).max(7);
        let w_ck = self.rows.iter().map(|r| r.check.chars().count()).max().unwrap_or(0).max(5);
        writeln!(f, "{:<w_ex$}  {:<w_ck$}  {:<6}  expected | actual", "example", "check", "result")?;
        for r in &self.rows {
            let pad = w_ck - r.check.chars().count();
            writeln!(
                f,
                "{:<w_ex$}  {}{}  {:<6}  {} | {}",
                r.example,
                r.check,
                " ".repeat(pad),
                if r.pass { "PASS" } else { "FAIL" },
                r.expected,
                r.actual
            )?;
        }
        write!(
            f,
            "{} of {} checks passed",
            self.rows.iter().filter(|r| r.pass).count(),
            self.rows.len()
        )
    }
}

struct Table<'a> {
    rows: Vec<Row>,
    example: &'a str,
}

impl Table<'_> {
    fn eq<T: fmt::Display + PartialEq>(&mut self, check: &str, expected: T, actual: T) {
        let pass = expected == actual;
        self.push(check, expected.to_string(), actual.to_string(), pass);
    }

    fn push(&mut self, check: &str, expected: String, actual: String, pass: bool) {
        self.rows.push(Row {
            example: self.example.to_string(),
            check: check.to_string(),
            expected,
            actual,
            pass,
        });
    }

    fn error(&mut self, check: &str, expected: &str, e: impl fmt::Display) {
        self.push(check, expected.to_string(), format!("error: {}", e), false);
    }
}

fn jk(cfg: &ProblemConfig, lambda: f64, k: u32, opts: &VerifyOptions) -> Result<u32> {
    let v = j_k(&cfg.spec.linearization(lambda), k, cfg.tol)?;
    Ok(match opts.tamper {
        Some(Tamper::JkOffset) => v + 1,
        None => v,
    })
}

fn set_str(s: &BTreeSet<u32>) -> String {
    let v: Vec<String> = s.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

fn squares_at(cfg: &ProblemConfig, lambda: f64) -> Result<String> {
    let s = eigen_sym(&cfg.spec.linearization(lambda), cfg.tol)?;
    Ok(set_str(&s.resonant_frequencies().iter().map(|k| k * k).collect()))
}

fn analysis(cfg: &ProblemConfig) -> Result<BifurcationReport> {
    analyze(&cfg.spec, cfg.interval.0, cfg.interval.1, &cfg.analyze_options())
}

fn blindness(t: &mut Table, r: &BifurcationReport) {
    t.push(
        "Bif != 0 in U(SO(2))",
        "nonzero".into(),
        r.bif.to_string(),
        !r.bif.is_zero(),
    );
    t.eq("Bif_LS", 0, r.bif_ls);
}

fn int_rows(t: &mut Table, cfg: &ProblemConfig, rows: &[(&str, f64, u32, u32)], opts: &VerifyOptions) {
    for &(label, lambda, k, want) in rows {
        match jk(cfg, lambda, k, opts) {
            Ok(v) => t.eq(label, want, v),
            Err(e) => t.error(label, &want.to_string(), e),
        }
    }
}

fn example1_rows(opts: &VerifyOptions) -> Vec<Row> {
    let cfg = catalog::example1();
    let mut t = Table {
        rows: Vec::new(),
        example: "example1",
    };
    int_rows(
        &mut t,
        &cfg,
        &[("j_1(A(+1))", 1.0, 1, 2), ("j_1(A(-1))", -1.0, 1, 1)],
        opts,
    );
    for l in [-1.0, 1.0] {
        let label = format!("ind(-grad V(., {:+}), inf)", l);
        match cfg.spec.index_at_infinity(l, cfg.tol) {
            Ok(v) => t.eq(&label, -1, v),
            Err(e) => t.error(&label, "-1", e),
        }
    }
    match (
        eigen_sym(&cfg.spec.linearization(-1.0), cfg.tol),
        eigen_sym(&cfg.spec.linearization(1.0), cfg.tol),
    ) {
        (Ok(a), Ok(b)) => t.eq("K", "{}".to_string(), set_str(&k_set(&a, &b))),
        (Err(e), _) | (_, Err(e)) => t.error("K", "{}", e),
    }
    match analysis(&cfg) {
        Ok(r) => {
            let want = 1.0 - 2f64.sqrt();
            let got: Vec<f64> = r.resonances.iter().map(|p| p.lambda0).collect();
            let pass = got.len() == 1 && (got[0] - want).abs() < 1e-9;
            t.push("interior resonances", format!("[{:.12}]", want), format!("{:.12?}", got), pass);
            let periods = r.resonances.first().map(predict_periods).map(|p| p.to_string());
            t.eq("predicted periods", "{2π}".to_string(), periods.unwrap_or_default());
            t.eq("criterion", Criterion::Eqcont1Ii { k: 1 }.to_string(), r.criterion.to_string());
            blindness(&mut t, &r);
        }
        Err(e) => t.error("analysis", "report", e),
    }
    if !opts.skip_continuation {
        let l0 = 1.0 - 2f64.sqrt();
        branch_rows(&mut t, &cfg, l0, 1, 1, false);
    }
    t.rows
}

fn example2_rows(opts: &VerifyOptions) -> Vec<Row> {
    let cfg = catalog::example2();
    let mut t = Table {
        rows: Vec::new(),
        example: "example2",
    };
    match squares_at(&cfg, 0.0) {
        Ok(s) => t.eq("sigma(A(0)) ∩ {k²}", "{4}".to_string(), s),
        Err(e) => t.error("sigma(A(0)) ∩ {k²}", "{4}", e),
    }
    int_rows(
        &mut t,
        &cfg,
        &[("j_2(A(1/2))", 0.5, 2, 1), ("j_2(A(-1/2))", -0.5, 2, 0)],
        opts,
    );
    match analysis(&cfg) {
        Ok(r) => {
            let pass = matches!(r.criterion, Criterion::Eqcont2Ii { k: 2, lambda0 } if lambda0.abs() < 1e-9);
            t.push(
                "criterion",
                "eqcont2(ii), k = 2, lambda0 = 0".into(),
                r.criterion.to_string(),
                pass,
            );
            let periods = r.resonances.first().map(predict_periods).map(|p| p.to_string());
            t.eq("predicted periods", "{π}".to_string(), periods.unwrap_or_default());
            blindness(&mut t, &r);
        }
        Err(e) => t.error("analysis", "report", e),
    }
    if !opts.skip_continuation {
        branch_rows(&mut t, &cfg, 0.0, 2, 2, true);
    }
    t.rows
}

fn example3_rows(opts: &VerifyOptions) -> Vec<Row> {
    let cfg = catalog::example3();
    let mut t = Table {
        rows: Vec::new(),
        example: "example3",
    };
    match squares_at(&cfg, 0.0) {
        Ok(s) => t.eq("sigma(A(0)) ∩ {k²}", "{4, 9, 25}".to_string(), s),
        Err(e) => t.error("sigma(A(0)) ∩ {k²}", "{4, 9, 25}", e),
    }
    int_rows(
        &mut t,
        &cfg,
        &[("j_2(A(1))", 1.0, 2, 4), ("j_2(A(-1))", -1.0, 2, 3)],
        opts,
    );
    match analysis(&cfg) {
        Ok(r) => {
            let at_zero = r.resonances.iter().find(|p| p.lambda0.abs() < 1e-9);
            let periods = at_zero.map(predict_periods).map(|p| p.to_string());
            t.eq(
                "predicted periods at lambda = 0",
                "{2π, π, 2π/3, 2π/5}".to_string(),
                periods.unwrap_or_else(|| "no resonance at 0".into()),
            );
            blindness(&mut t, &r);
        }
        Err(e) => t.error("analysis", "report", e),
    }
    t.rows
}

/// Amplitudes used for the branch rows.
pub const BRANCH_AMPLITUDES: [f64; 5] = [10.0, 20.0, 40.0, 80.0, 160.0];

pub fn example_branch(cfg: &ProblemConfig, lambda0: f64, k0: u32) -> Result<Branch> {
    let v = kernel_directions(&cfg.spec, lambda0, k0, cfg.tol)?;
    continue_branch(
        &cfg.spec,
        lambda0,
        k0,
        &v[0],
        &BRANCH_AMPLITUDES,
        &ContinuationOptions::default(),
    )
}

fn branch_rows(t: &mut Table, cfg: &ProblemConfig, lambda0: f64, k0: u32, divisor: u64, drift: bool) {
    let b = match example_branch(cfg, lambda0, k0) {
        Ok(b) => b,
        Err(e) => return t.error("branch", "converged branch", e),
    };
    t.push(
        "branch converged at all amplitudes",
        format!("{} points", BRANCH_AMPLITUDES.len()),
        match &b.failure {
            Some(f) => format!("failed at R = {}: {}", f.amplitude, f.message),
            None => format!("{} points", b.points.len()),
        },
        b.failure.is_none() && b.points.len() == BRANCH_AMPLITUDES.len(),
    );
    let worst = b.points.iter().map(|p| p.residual_norm).fold(0.0, f64::max);
    t.push("max residual", "< 1e-9".into(), format!("{:.2e}", worst), worst < 1e-9);
    let divs: BTreeSet<u64> = b.points.iter().map(|p| p.min_period_divisor).collect();
    t.push(
        "measured minimal period",
        crate::bifurcation::format_period(divisor as u32),
        divs.iter()
            .map(|&g| crate::bifurcation::format_period(g as u32))
            .collect::<Vec<_>>()
            .join(", "),
        divs.len() == 1 && divs.contains(&divisor),
    );
    if drift {
        let d: Vec<f64> = b.points.iter().map(|p| (p.lambda - lambda0).abs()).collect();
        let last = d.last().copied().unwrap_or(f64::INFINITY);
        t.push("|lambda(160) - lambda0|", "< 0.05".into(), format!("{:.3e}", last), last < 0.05);
        let tail = &d[d.len().saturating_sub(3)..];
        t.push(
            "|lambda| nonincreasing over last three",
            "true".into(),
            tail.iter().map(|d| format!("{:.3e}", d)).collect::<Vec<_>>().join(" >= "),
            tail.len() == 3 && tail.windows(2).all(|w| w[1] <= w[0]),
        );
        let e = b
            .points
            .iter()
            .map(|p| p.energy_variation.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        t.push("energy variation", "< 1e-8".into(), format!("{:.2e}", e), e < 1e-8);
    }
}

pub fn verify_examples(opts: &VerifyOptions) -> VerifyReport {
    let parts: Vec<Vec<Row>> = [example1_rows, example2_rows, example3_rows]
        .iter()
        .map(|f| f(opts))
        .collect();
    let rows: Vec<Row> = parts.into_iter().flatten().collect();
    let all_pass = rows.iter().all(|r| r.pass);
    VerifyReport {
        format_version: FORMAT_VERSION,
        rows,
        all_pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_rows_pass_without_branches() {
        let r = verify_examples(&VerifyOptions {
            skip_continuation: true,
            ..VerifyOptions::default()
        });
        assert!(r.all_pass, "{}", r);
    }

    #[test]
    fn tampering_fails_the_jk_rows() {
        let r = verify_examples(&VerifyOptions {
            tamper: Some(Tamper::JkOffset),
            skip_continuation: true,
        });
        assert!(!r.all_pass);
        for row in &r.rows {
            assert_eq!(row.pass, !row.check.starts_with("j_"), "{:?}", row);
        }
    }
}
