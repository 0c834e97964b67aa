//! Declarative problem files.
//!
//! A problem is written in TOML:
//!
//! ```toml
//! name = "example2"
//! dimension = 4
//!
//! [interval]
//! lower = -0.5
//! upper = 0.5
//!
//! # entries of A(λ) as polynomials: [[power, coefficient], ...]
//! [[matrix]]
//! row = 0
//! col = 0
//! terms = [[0, 4], [1, 1]]
//!
//! [perturbation]
//! kind = "kepler"        # "none" or "kepler"
//! a = 1
//! scale = "constant"     # or "lambda_squared"
//! ```
//!
//! Coefficients may be numbers or the named constants `pi`, `sqrt2`,
//! `sqrt5`, `sqrt10`, optionally signed and with a numeric factor
//! (`"-sqrt2"`, `"3*pi"`). Off-diagonal entries given once are mirrored;
//! given twice they must agree. Optional sections are `[index]`
//! (`rule = "builtin" | "unavailable" | "values"` with
//! `values = [[lambda, index], ...]`), `[options]` (`tol`, `grid`, `modes`),
//! `[[critical_points]]` (`label`, `kernel = [[j, k], ...]`) and the
//! top-level flag `scaled` for the system ü = −λ²∇V(u).

use serde::Deserialize;
use toml::Spanned;

use crate::bifurcation::{AnalyzeOptions, CriticalPoint};
use crate::error::{Error, Result};
use crate::family::{MatrixFamily, Polynomial};
use crate::problem::{IndexRule, KeplerScale, Perturbation, ProblemSpec};
use crate::reps::RepDecomposition;
use crate::spectral::DEFAULT_TOL;

/// Named constants, written with enough digits to round to the nearest f64.
const NAMED: [(&str, f64); 4] = [
    ("pi", 3.14159265358979323846),
    ("sqrt2", 1.41421356237309504880),
    ("sqrt5", 2.23606797749978969641),
    ("sqrt10", 3.16227766016837933200),
];

#[derive(Clone, Debug)]
pub struct ProblemConfig {
    pub spec: ProblemSpec,
    pub interval: (f64, f64),
    pub tol: f64,
    pub grid: usize,
    pub modes: usize,
    pub critical_points: Vec<CriticalPoint>,
}

impl ProblemConfig {
    pub fn analyze_options(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            tol: self.tol,
            grid: self.grid,
            critical_points: self.critical_points.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    dimension: Spanned<i64>,
    #[serde(default)]
    scaled: bool,
    interval: RawInterval,
    #[serde(default)]
    matrix: Vec<RawEntry>,
    perturbation: Option<RawPerturbation>,
    index: Option<RawIndex>,
    options: Option<RawOptions>,
    #[serde(default)]
    critical_points: Vec<RawCritical>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInterval {
    lower: Spanned<Scalar>,
    upper: Spanned<Scalar>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    row: Spanned<i64>,
    col: Spanned<i64>,
    terms: Spanned<Vec<(i64, Scalar)>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerturbation {
    kind: Spanned<String>,
    a: Option<Spanned<Scalar>>,
    scale: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIndex {
    rule: Spanned<String>,
    #[serde(default)]
    values: Vec<(Scalar, i64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    tol: Option<Spanned<f64>>,
    grid: Option<Spanned<i64>>,
    modes: Option<Spanned<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCritical {
    label: String,
    kernel: Spanned<Vec<(i64, i64)>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Float(f64),
    Named(String),
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    fn line(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, span: std::ops::Range<usize>, field: &str, message: impl Into<String>) -> Result<T> {
        Err(Error::Config {
            location: format!("line {}, field {}", self.line(span.start), field),
            message: message.into(),
        })
    }

    fn scalar(&self, s: &Spanned<Scalar>, field: &str) -> Result<f64> {
        match resolve(s.get_ref()) {
            Ok(v) => Ok(v),
            Err(m) => self.err(s.span(), field, m),
        }
    }
}

fn resolve(s: &Scalar) -> std::result::Result<f64, String> {
    let v = match s {
        Scalar::Int(i) => *i as f64,
        Scalar::Float(f) => *f,
        Scalar::Named(text) => parse_named(text)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err("value must be finite".into())
    }
}

/// `[-][factor*]name` or a plain number written as a string.
fn parse_named(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    let (sign, rest) = match t.strip_prefix('-') {
        Some(r) => (-1.0, r.trim()),
        None => (1.0, t.strip_prefix('+').unwrap_or(t).trim()),
    };
    let (factor, name) = match rest.split_once('*') {
        Some((f, n)) => (
            f.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad factor '{}' in '{}'", f.trim(), text))?,
            n.trim(),
        ),
        None => (1.0, rest),
    };
    if let Some(&(_, v)) = NAMED.iter().find(|(k, _)| *k == name) {
        return Ok(sign * factor * v);
    }
    if let Ok(v) = name.parse::<f64>() {
        return Ok(sign * factor * v);
    }
    Err(format!(
        "unknown constant '{}' (expected a number or one of pi, sqrt2, sqrt5, sqrt10)",
        name
    ))
}

/// Parses and validates a problem file.
pub fn parse_config(src: &str) -> Result<ProblemConfig> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| {
        let location = match e.span() {
            Some(sp) => format!("line {}", Ctx { src }.line(sp.start)),
            None => "file".into(),
        };
        Error::Config {
            location,
            message: e.message().trim().to_string(),
        }
    })?;
    let ctx = Ctx { src };

    let n = *raw.dimension.get_ref();
    if !(1..=64).contains(&n) {
        return ctx.err(raw.dimension.span(), "dimension", "dimension must lie in 1..=64");
    }
    let n = n as usize;

    let lower = ctx.scalar(&raw.interval.lower, "interval.lower")?;
    let upper = ctx.scalar(&raw.interval.upper, "interval.upper")?;
    if !(lower < upper) {
        return ctx.err(raw.interval.upper.span(), "interval.upper", "upper bound must exceed lower bound");
    }

    let mut cells: Vec<Option<(Polynomial, std::ops::Range<usize>)>> = vec![None; n * n];
    for (idx, e) in raw.matrix.iter().enumerate() {
        let field = |f: &str| format!("matrix[{}].{}", idx, f);
        let (r, c) = (*e.row.get_ref(), *e.col.get_ref());
        if r < 0 || r as usize >= n {
            return ctx.err(e.row.span(), &field("row"), format!("row must lie in 0..{}", n));
        }
        if c < 0 || c as usize >= n {
            return ctx.err(e.col.span(), &field("col"), format!("col must lie in 0..{}", n));
        }
        let mut terms = Vec::new();
        for (power, coef) in e.terms.get_ref() {
            if !(0..=64).contains(power) {
                return ctx.err(e.terms.span(), &field("terms"), format!("power {} out of range 0..=64", power));
            }
            match resolve(coef) {
                Ok(v) => terms.push((*power as u32, v)),
                Err(m) => return ctx.err(e.terms.span(), &field("terms"), m),
            }
        }
        let poly = Polynomial::from_terms(&terms);
        let (r, c) = (r as usize, c as usize);
        if cells[r * n + c].is_some() {
            return ctx.err(e.row.span(), &field("row"), format!("entry ({}, {}) given twice", r, c));
        }
        if r != c {
            if let Some((other, _)) = &cells[c * n + r] {
                if *other != poly {
                    return ctx.err(
                        e.terms.span(),
                        &field("terms"),
                        format!("entry ({}, {}) differs from its mirror ({}, {})", r, c, c, r),
                    );
                }
            }
        }
        cells[r * n + c] = Some((poly, e.terms.span()));
    }
    let mut entries = vec![Polynomial::zero(); n * n];
    for r in 0..n {
        for c in 0..n {
            entries[r * n + c] = match (&cells[r * n + c], &cells[c * n + r]) {
                (Some((p, _)), _) | (None, Some((p, _))) => p.clone(),
                (None, None) => Polynomial::zero(),
            };
        }
    }
    let family = MatrixFamily::new(n, entries)?;

    let perturbation = match &raw.perturbation {
        None => Perturbation::None,
        Some(p) => match p.kind.get_ref().as_str() {
            "none" => Perturbation::None,
            "kepler" => {
                let a = match &p.a {
                    Some(a) => ctx.scalar(a, "perturbation.a")?,
                    None => return ctx.err(p.kind.span(), "perturbation.a", "kepler perturbation needs 'a'"),
                };
                if a <= 0.0 {
                    return ctx.err(p.a.as_ref().unwrap().span(), "perturbation.a", "'a' must be positive");
                }
                let scale = match p.scale.as_ref().map(|s| (s.get_ref().as_str(), s.span())) {
                    None | Some(("constant", _)) => KeplerScale::Constant,
                    Some(("lambda_squared", _)) => KeplerScale::LambdaSquared,
                    Some((other, span)) => {
                        return ctx.err(
                            span,
                            "perturbation.scale",
                            format!("unknown scale '{}' (expected constant or lambda_squared)", other),
                        )
                    }
                };
                Perturbation::Kepler { a, scale }
            }
            other => {
                return ctx.err(
                    p.kind.span(),
                    "perturbation.kind",
                    format!("unknown perturbation '{}' (expected none or kepler)", other),
                )
            }
        },
    };

    let index_rule = match &raw.index {
        None => IndexRule::Builtin,
        Some(ix) => match ix.rule.get_ref().as_str() {
            "builtin" => IndexRule::Builtin,
            "unavailable" => IndexRule::Unavailable,
            "values" => {
                let mut vals = Vec::new();
                for (l, v) in &ix.values {
                    let l = match resolve(l) {
                        Ok(l) => l,
                        Err(m) => return ctx.err(ix.rule.span(), "index.values", m),
                    };
                    if v.abs() != 1 {
                        return ctx.err(ix.rule.span(), "index.values", format!("index {} is not ±1", v));
                    }
                    vals.push((l, *v));
                }
                IndexRule::UserValues(vals)
            }
            other => {
                return ctx.err(
                    ix.rule.span(),
                    "index.rule",
                    format!("unknown index rule '{}' (expected builtin, unavailable or values)", other),
                )
            }
        },
    };

    let (mut tol, mut grid, mut modes) = (DEFAULT_TOL, 512usize, 32usize);
    if let Some(o) = &raw.options {
        if let Some(t) = &o.tol {
            if !(*t.get_ref() > 0.0 && *t.get_ref() < 1.0) {
                return ctx.err(t.span(), "options.tol", "tolerance must lie in (0, 1)");
            }
            tol = *t.get_ref();
        }
        if let Some(g) = &o.grid {
            if !(2..=1 << 20).contains(g.get_ref()) {
                return ctx.err(g.span(), "options.grid", "grid must lie in 2..=1048576");
            }
            grid = *g.get_ref() as usize;
        }
        if let Some(m) = &o.modes {
            if !(1..=4096).contains(m.get_ref()) {
                return ctx.err(m.span(), "options.modes", "modes must lie in 1..=4096");
            }
            modes = *m.get_ref() as usize;
        }
    }

    let mut critical_points = Vec::new();
    for (i, cp) in raw.critical_points.iter().enumerate() {
        let mut parts = Vec::new();
        for &(j, k) in cp.kernel.get_ref() {
            if j < 1 || k < 0 || j > u32::MAX as i64 || k > u32::MAX as i64 {
                return ctx.err(
                    cp.kernel.span(),
                    &format!("critical_points[{}].kernel", i),
                    format!("({}, {}) is not a multiplicity/frequency pair", j, k),
                );
            }
            parts.push((j as u32, k as u32));
        }
        critical_points.push(CriticalPoint {
            label: cp.label.clone(),
            kernel: RepDecomposition::new(parts),
        });
    }

    let name = raw.name.unwrap_or_else(|| "problem".into());
    let spec = ProblemSpec::new(name, family, perturbation, index_rule, raw.scaled)?;
    Ok(ProblemConfig {
        spec,
        interval: (lower, upper),
        tol,
        grid,
        modes,
        critical_points,
    })
}

pub fn load_config(path: &std::path::Path) -> Result<ProblemConfig> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::Config {
        location: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&src)
}
