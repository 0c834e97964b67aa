//! Bifurcation indices at infinity, the three existence criteria, period
//! prediction and the consistency check, assembled into one report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::eqdeg::deg_id_minus_LA;
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::reps::{gcd_closure, is_consistent, isotropy_gcd_set, Isotropy, RepDecomposition};
use crate::resonance::{scan_resonances, ResonancePoint, ResonanceScan, ScanOptions};
use crate::spectral::{eigen_sym, k_set, SpectralData};
use crate::udring::TomDieckElement;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Both endpoints nonresonant: difference of linear degrees.
    Nonresonant,
    /// Some endpoint resonant: built from indices at infinity.
    ResonantWithIndex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifIndex {
    pub value: TomDieckElement,
    /// Frequencies whose Z_k coordinate is not determined by the data.
    pub undefined: BTreeSet<u32>,
    pub route: Route,
}

fn spectrum_at(p: &ProblemSpec, lambda: f64, tol: f64) -> Result<SpectralData> {
    eigen_sym(&p.linearization(lambda), tol)
}

/// Bif(∞, [lm, lp]) with the coordinates that could not be determined.
pub fn bif_index_full(p: &ProblemSpec, lm: f64, lp: f64, tol: f64) -> Result<BifIndex> {
    let sm = spectrum_at(p, lm, tol)?;
    let sp = spectrum_at(p, lp, tol)?;
    let rm = sm.square_resonances();
    let rp = sp.square_resonances();
    if rm.is_empty() && rp.is_empty() {
        let dp = deg_id_minus_LA(&p.linearization(lp), tol)?;
        let dm = deg_id_minus_LA(&p.linearization(lm), tol)?;
        return Ok(BifIndex {
            value: dp.checked_sub(&dm)?,
            undefined: BTreeSet::new(),
            route: Route::Nonresonant,
        });
    }
    let im = p.index_at_infinity(lm, tol)?;
    let ip = p.index_at_infinity(lp, tol)?;
    let undefined: BTreeSet<u32> = rm
        .frequencies()
        .chain(rp.frequencies())
        .filter(|&k| k > 0)
        .collect();
    let kmax = sm.k_bound().max(sp.k_bound());
    let mut coords = Vec::new();
    for k in (1..=kmax).filter(|k| !undefined.contains(k)) {
        let c = ip * sp.j_k(k)? as i64 - im * sm.j_k(k)? as i64;
        coords.push((k, c));
    }
    Ok(BifIndex {
        value: TomDieckElement::new(ip - im, coords)?,
        undefined,
        route: Route::ResonantWithIndex,
    })
}

pub fn bif_index(p: &ProblemSpec, lm: f64, lp: f64, tol: f64) -> Result<TomDieckElement> {
    Ok(bif_index_full(p, lm, lp, tol)?.value)
}

/// The Leray–Schauder shadow: the SO(2) coordinate of the index.
pub fn bif_index_ls(p: &ProblemSpec, lm: f64, lp: f64, tol: f64) -> Result<i64> {
    Ok(bif_index(p, lm, lp, tol)?.so2())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result")]
pub enum Verdict {
    #[serde(rename = "holds_via_i")]
    HoldsViaI,
    #[serde(rename = "holds_via_ii")]
    HoldsViaIi { k: u32 },
    #[serde(rename = "fails")]
    Fails,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        !matches!(self, Verdict::Fails)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eqcont1Verdict {
    pub verdict: Verdict,
    pub ind_minus: i64,
    pub ind_plus: i64,
    pub kset: BTreeSet<u32>,
}

/// Criterion for intervals whose endpoints may be resonant, driven by the
/// indices at infinity and the j_k counts off the K-set.
pub fn check_eqcont1(p: &ProblemSpec, lm: f64, lp: f64, tol: f64) -> Result<Eqcont1Verdict> {
    let sm = spectrum_at(p, lm, tol)?;
    let sp = spectrum_at(p, lp, tol)?;
    let ind_minus = p.index_at_infinity(lm, tol)?;
    let ind_plus = p.index_at_infinity(lp, tol)?;
    let kset = k_set(&sm, &sp);
    let verdict = if ind_plus != ind_minus {
        Verdict::HoldsViaI
    } else if ind_plus != 0 {
        let kmax = sm.k_bound().max(sp.k_bound());
        let mut found = None;
        for k in (1..=kmax).filter(|k| !kset.contains(k)) {
            if sp.j_k(k)? != sm.j_k(k)? {
                found = Some(k);
                break;
            }
        }
        found.map_or(Verdict::Fails, |k| Verdict::HoldsViaIi { k })
    } else {
        Verdict::Fails
    };
    Ok(Eqcont1Verdict {
        verdict,
        ind_minus,
        ind_plus,
        kset,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eqcont2Verdict {
    pub verdict: Verdict,
    /// The single interior resonance; the continuum meets (∞, lambda0).
    pub lambda0: f64,
    pub j0_minus: u32,
    pub j0_plus: u32,
}

/// Criterion for nonresonant endpoints with exactly one interior resonance.
pub fn check_eqcont2(p: &ProblemSpec, lm: f64, lp: f64, opts: &ScanOptions) -> Result<Eqcont2Verdict> {
    let (lo, hi) = (lm.min(lp), lm.max(lp));
    let scan = scan_resonances(&p.effective_family(), lo, hi, opts)?;
    eqcont2_from_scan(p, lm, lp, &scan, opts.tol)
}

pub fn eqcont2_from_scan(
    p: &ProblemSpec,
    lm: f64,
    lp: f64,
    scan: &ResonanceScan,
    tol: f64,
) -> Result<Eqcont2Verdict> {
    if !scan.endpoints.is_empty() {
        let at: Vec<String> = scan.endpoints.iter().map(|r| r.lambda0.to_string()).collect();
        return Err(Error::Precondition(format!(
            "interval endpoints must be nonresonant; resonant at lambda = {}",
            at.join(", ")
        )));
    }
    if scan.interior.len() != 1 {
        let at: Vec<String> = scan
            .interior
            .iter()
            .map(|r| format!("{:.12} (k in {:?})", r.lambda0, r.frequencies))
            .collect();
        return Err(Error::Precondition(format!(
            "exactly one interior resonance required, found {}{}{}",
            scan.interior.len(),
            if at.is_empty() { "" } else { ": " },
            at.join(", ")
        )));
    }
    let sm = spectrum_at(p, lm, tol)?;
    let sp = spectrum_at(p, lp, tol)?;
    let j0_minus = sm.j_k(0)?;
    let j0_plus = sp.j_k(0)?;
    let verdict = if (j0_minus + j0_plus) % 2 == 1 {
        Verdict::HoldsViaI
    } else {
        let kmax = sm.k_bound().max(sp.k_bound());
        let mut found = None;
        for k in 1..=kmax {
            if sp.j_k(k)? != sm.j_k(k)? {
                found = Some(k);
                break;
            }
        }
        found.map_or(Verdict::Fails, |k| Verdict::HoldsViaIi { k })
    };
    Ok(Eqcont2Verdict {
        verdict,
        lambda0: scan.interior[0].lambda0,
        j0_minus,
        j0_plus,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eqcont3Term {
    pub k: u32,
    pub alpha: f64,
    pub multiplicity: u32,
    /// ind(−∇V, ∞)·μ_A(α).
    pub bif_zk: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eqcont3Point {
    pub lambda0: f64,
    pub k0: u32,
    pub alpha0: f64,
    pub bif_zk0: i64,
    /// All (k, α) pairs landing on this λ₀; more than one means the
    /// single-point hypothesis fails and the point needs review.
    pub terms: Vec<Eqcont3Term>,
    pub merged: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Eqcont3Result {
    pub points: Vec<Eqcont3Point>,
    pub warnings: Vec<String>,
}

/// Resonances λ₀ = k/√α of the scaled system in `window`, each with its
/// Z_{k₀} bifurcation index.
pub fn eqcont3_points(p: &ProblemSpec, window: (f64, f64), tol: f64) -> Result<Eqcont3Result> {
    if !p.scaled {
        return Err(Error::Precondition(
            "resonance enumeration by k/sqrt(alpha) applies to scaled problems only".into(),
        ));
    }
    let (lo, hi) = window;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::Precondition(format!(
            "window must satisfy 0 < lo < hi < inf, got ({}, {})",
            lo, hi
        )));
    }
    let spec = eigen_sym(&p.family.eval(0.0), tol)?;
    let mut warnings = Vec::new();
    let positive = spec.positive_part();
    if positive.is_empty() {
        return Ok(Eqcont3Result::default());
    }
    let ind = p.index_at_infinity(lo, tol)?;
    let mut terms: Vec<(f64, Eqcont3Term)> = Vec::new();
    for e in &positive {
        if e.value <= 1e3 * spec.tol {
            warnings.push(format!(
                "eigenvalue {:e} is close to zero; its resonances accumulate at infinity",
                e.value
            ));
        }
        let s = e.value.sqrt();
        let kmin = ((lo * s).ceil() as u32).max(1);
        let kmax = (hi * s).floor() as u32;
        for k in kmin..=kmax {
            let lambda0 = k as f64 / s;
            if lambda0 < lo || lambda0 > hi {
                continue;
            }
            terms.push((
                lambda0,
                Eqcont3Term {
                    k,
                    alpha: e.value,
                    multiplicity: e.multiplicity,
                    bif_zk: ind * e.multiplicity as i64,
                },
            ));
        }
    }
    terms.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.k.cmp(&b.1.k)));
    let mut points: Vec<Eqcont3Point> = Vec::new();
    for (lambda0, term) in terms {
        match points.last_mut() {
            Some(last) if (lambda0 - last.lambda0).abs() <= tol * lambda0.max(1.0) => {
                last.terms.push(term);
                last.merged = true;
            }
            _ => points.push(Eqcont3Point {
                lambda0,
                k0: term.k,
                alpha0: term.alpha,
                bif_zk0: term.bif_zk,
                terms: vec![term],
                merged: false,
            }),
        }
    }
    for pt in points.iter_mut().filter(|p| p.merged) {
        // Contributions sharing the leading frequency add up.
        pt.bif_zk0 = pt.terms.iter().filter(|t| t.k == pt.k0).map(|t| t.bif_zk).sum();
        warnings.push(format!(
            "lambda0 = {:.12} arises from {} (k, alpha) pairs; review required",
            pt.lambda0,
            pt.terms.len()
        ));
    }
    Ok(Eqcont3Result { points, warnings })
}

/// A set of minimal periods: 0 (constant solutions) and 2π/g for the
/// stored divisors g.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSet {
    pub includes_zero: bool,
    pub divisors: BTreeSet<u32>,
}

impl PeriodSet {
    pub fn periods(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.includes_zero.then_some(0.0).into_iter().collect();
        out.extend(
            self.divisors
                .iter()
                .map(|&g| 2.0 * std::f64::consts::PI / g as f64),
        );
        out
    }

    pub fn contains_divisor(&self, g: u32) -> bool {
        self.divisors.contains(&g)
    }
}

pub fn format_period(g: u32) -> String {
    match g {
        0 => "0".into(),
        1 => "2π".into(),
        2 => "π".into(),
        g => format!("2π/{}", g),
    }
}

impl fmt::Display for PeriodSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<String> = Vec::new();
        if self.includes_zero {
            items.push("0".into());
        }
        items.extend(self.divisors.iter().map(|&g| format_period(g)));
        write!(f, "{{{}}}", items.join(", "))
    }
}

/// Possible minimal periods of solutions near (∞, λ₀).
pub fn predict_periods(r: &ResonancePoint) -> PeriodSet {
    PeriodSet {
        includes_zero: r.frequencies.contains(&0),
        divisors: gcd_closure(r.frequencies.iter().copied()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyVerdict {
    pub consistent: bool,
    /// True when the representations are not consistent, which is the
    /// hypothesis needed for the symmetry-breaking conclusion.
    pub hypothesis_holds: bool,
    pub point_isotropy: BTreeSet<Isotropy>,
    pub infinity_isotropy: BTreeSet<Isotropy>,
    pub explanation: String,
}

fn iso_list(s: &BTreeSet<Isotropy>) -> String {
    let v: Vec<String> = s.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

pub fn consistency_check(
    kernel_at_point: &RepDecomposition,
    kernel_at_infinity: &RepDecomposition,
) -> ConsistencyVerdict {
    let point_isotropy = isotropy_gcd_set(kernel_at_point);
    let infinity_isotropy = isotropy_gcd_set(kernel_at_infinity);
    let consistent = is_consistent(kernel_at_point, kernel_at_infinity);
    let explanation = if consistent {
        let shared: BTreeSet<Isotropy> = point_isotropy
            .intersection(&infinity_isotropy)
            .copied()
            .collect();
        format!(
            "consistent: both kernels realize isotropy {}; symmetry breaking is not concluded",
            iso_list(&shared)
        )
    } else {
        format!(
            "not consistent: isotropy {} at the critical point never meets {} at infinity; \
             the branch contains solutions with different minimal periods",
            iso_list(&point_isotropy),
            iso_list(&infinity_isotropy)
        )
    };
    ConsistencyVerdict {
        consistent,
        hypothesis_holds: !consistent,
        point_isotropy,
        infinity_isotropy,
        explanation,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Criterion {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "eqcont1(i)")]
    Eqcont1I,
    #[serde(rename = "eqcont1(ii)")]
    Eqcont1Ii { k: u32 },
    #[serde(rename = "eqcont2(i)")]
    Eqcont2I { lambda0: f64 },
    #[serde(rename = "eqcont2(ii)")]
    Eqcont2Ii { k: u32, lambda0: f64 },
    #[serde(rename = "eqcont3")]
    Eqcont3 { k0: u32, alpha0: f64, lambda0: f64 },
}

impl Criterion {
    pub fn fired(&self) -> bool {
        !matches!(self, Criterion::None)
    }

    pub fn witness_k(&self) -> Option<u32> {
        match *self {
            Criterion::Eqcont1Ii { k } | Criterion::Eqcont2Ii { k, .. } => Some(k),
            Criterion::Eqcont3 { k0, .. } => Some(k0),
            _ => None,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::None => write!(f, "none"),
            Criterion::Eqcont1I => write!(f, "eqcont1(i)"),
            Criterion::Eqcont1Ii { k } => write!(f, "eqcont1(ii), k = {}", k),
            Criterion::Eqcont2I { lambda0 } => write!(f, "eqcont2(i), lambda0 = {}", lambda0),
            Criterion::Eqcont2Ii { k, lambda0 } => {
                write!(f, "eqcont2(ii), k = {}, lambda0 = {}", k, lambda0)
            }
            Criterion::Eqcont3 { k0, alpha0, lambda0 } => write!(
                f,
                "eqcont3, k0 = {}, alpha0 = {}, lambda0 = {}",
                k0, alpha0, lambda0
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointSummary {
    pub lambda: f64,
    pub spectrum: SpectralData,
    pub kernel_rep: RepDecomposition,
    pub morse_index: u32,
    /// j_k for every k up to the spectral bound with k² off the spectrum.
    pub j: BTreeMap<u32, u32>,
    pub index_at_infinity: Option<i64>,
}

fn endpoint_summary(p: &ProblemSpec, lambda: f64, tol: f64) -> Result<EndpointSummary> {
    let spectrum = spectrum_at(p, lambda, tol)?;
    let kernel_rep = spectrum.square_resonances();
    let mut j = BTreeMap::new();
    for k in 0..=spectrum.k_bound() {
        if let Ok(v) = spectrum.j_k(k) {
            j.insert(k, v);
        }
    }
    Ok(EndpointSummary {
        lambda,
        morse_index: spectrum.morse_index(false)?,
        index_at_infinity: p.index_at_infinity(lambda, tol).ok(),
        kernel_rep,
        spectrum,
        j,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub label: String,
    pub kernel: RepDecomposition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodPrediction {
    pub lambda0: f64,
    pub periods: PeriodSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyEntry {
    pub label: String,
    pub lambda0: f64,
    pub verdict: ConsistencyVerdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyzeOptions {
    pub tol: f64,
    pub grid: usize,
    pub critical_points: Vec<CriticalPoint>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            tol: crate::spectral::DEFAULT_TOL,
            grid: 512,
            critical_points: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub problem: String,
    pub interval: (f64, f64),
    pub endpoints: (EndpointSummary, EndpointSummary),
    pub kset: BTreeSet<u32>,
    pub bif: TomDieckElement,
    pub bif_undefined: BTreeSet<u32>,
    pub bif_route: Route,
    pub bif_ls: i64,
    pub criterion: Criterion,
    pub eqcont1: Option<Eqcont1Verdict>,
    pub eqcont2: Option<Eqcont2Verdict>,
    pub eqcont3: Option<Eqcont3Result>,
    pub resonances: Vec<ResonancePoint>,
    pub endpoint_resonances: Vec<ResonancePoint>,
    pub predicted_periods: Vec<PeriodPrediction>,
    pub consistency: Vec<ConsistencyEntry>,
    /// Criteria that could not be evaluated, with the reason.
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

/// Runs every applicable check on [lm, lp] and picks the headline
/// criterion: eqcont2 when it applies, then eqcont1, then eqcont3.
pub fn analyze(p: &ProblemSpec, lm: f64, lp: f64, opts: &AnalyzeOptions) -> Result<BifurcationReport> {
    if !(lm < lp) {
        return Err(Error::InvalidInput(format!(
            "interval must satisfy lambda_minus < lambda_plus, got [{}, {}]",
            lm, lp
        )));
    }
    let tol = opts.tol;
    let em = endpoint_summary(p, lm, tol)?;
    let ep = endpoint_summary(p, lp, tol)?;
    let kset = k_set(&em.spectrum, &ep.spectrum);
    let bif = bif_index_full(p, lm, lp, tol)?;

    let mut notes = Vec::new();
    let mut warnings = Vec::new();
    let scan_opts = ScanOptions {
        grid: opts.grid,
        tol,
        ..ScanOptions::default()
    };
    let scan = match scan_resonances(&p.effective_family(), lm, lp, &scan_opts) {
        Ok(s) => {
            warnings.extend(s.warnings.iter().cloned());
            Some(s)
        }
        Err(e @ Error::Tangency { .. }) => {
            notes.push(format!("resonance scan: {}", e));
            None
        }
        Err(e) => return Err(e),
    };

    let eqcont2 = match &scan {
        Some(s) => match eqcont2_from_scan(p, lm, lp, s, tol) {
            Ok(v) => Some(v),
            Err(e) => {
                notes.push(format!("eqcont2 not applicable: {}", e));
                None
            }
        },
        None => None,
    };
    let eqcont1 = match check_eqcont1(p, lm, lp, tol) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("eqcont1 not applicable: {}", e));
            None
        }
    };
    let eqcont3 = if p.scaled {
        match eqcont3_points(p, (lm, lp), tol) {
            Ok(r) => {
                warnings.extend(r.warnings.iter().cloned());
                Some(r)
            }
            Err(e) => {
                notes.push(format!("eqcont3 not applicable: {}", e));
                None
            }
        }
    } else {
        None
    };

    let mut criterion = Criterion::None;
    if let Some(v) = &eqcont2 {
        criterion = match v.verdict {
            Verdict::HoldsViaI => Criterion::Eqcont2I { lambda0: v.lambda0 },
            Verdict::HoldsViaIi { k } => Criterion::Eqcont2Ii { k, lambda0: v.lambda0 },
            Verdict::Fails => Criterion::None,
        };
    }
    if !criterion.fired() {
        if let Some(v) = &eqcont1 {
            criterion = match v.verdict {
                Verdict::HoldsViaI => Criterion::Eqcont1I,
                Verdict::HoldsViaIi { k } => Criterion::Eqcont1Ii { k },
                Verdict::Fails => Criterion::None,
            };
        }
    }
    if !criterion.fired() {
        if let Some(r) = &eqcont3 {
            if let Some(pt) = r.points.iter().find(|pt| !pt.merged && pt.bif_zk0 != 0) {
                if bif.value.is_zero() {
                    warnings.push(format!(
                        "eqcont3 point lambda0 = {} found but the interval index vanishes; \
                         shrink the interval around it",
                        pt.lambda0
                    ));
                } else {
                    criterion = Criterion::Eqcont3 {
                        k0: pt.k0,
                        alpha0: pt.alpha0,
                        lambda0: pt.lambda0,
                    };
                }
            }
        }
    }
    if criterion.fired() && bif.value.is_zero() {
        return Err(Error::InvariantViolation(format!(
            "criterion {} fired with a vanishing bifurcation index",
            criterion
        )));
    }

    let (resonances, endpoint_resonances) = match scan {
        Some(s) => (s.interior, s.endpoints),
        None => (Vec::new(), Vec::new()),
    };
    let predicted_periods = resonances
        .iter()
        .map(|r| PeriodPrediction {
            lambda0: r.lambda0,
            periods: predict_periods(r),
        })
        .collect();
    let mut consistency = Vec::new();
    for cp in &opts.critical_points {
        for r in &resonances {
            consistency.push(ConsistencyEntry {
                label: cp.label.clone(),
                lambda0: r.lambda0,
                verdict: consistency_check(&cp.kernel, &r.kernel_rep),
            });
        }
    }

    Ok(BifurcationReport {
        problem: p.name.clone(),
        interval: (lm, lp),
        endpoints: (em, ep),
        kset,
        bif_ls: bif.value.so2(),
        bif: bif.value,
        bif_undefined: bif.undefined,
        bif_route: bif.route,
        criterion,
        eqcont1,
        eqcont2,
        eqcont3,
        resonances,
        endpoint_resonances,
        predicted_periods,
        consistency,
        notes,
        warnings,
    })
}
