//! Locating resonances at infinity along a parameter interval: the λ with
//! σ(A(λ)) ∩ {k² : k ≥ 0} ≠ ∅.
//!
//! For every k up to a spectral bound the scan tracks the count of
//! eigenvalues above k² on a uniform grid. A change of the count between
//! adjacent samples is a transversal crossing and is refined by bisection.
//! A local minimum of the distance from the spectrum to k² that reaches
//! zero without a change of the count is a tangential resonance; it is
//! refined by Brent minimization and kept as a point, since the set of
//! resonant λ includes it.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::MatrixFamily;
use crate::reps::RepDecomposition;
use crate::spectral::{eigen_sym, jacobi_eigen, DEFAULT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    /// Some eigenvalue passes through k².
    Transversal,
    /// Eigenvalues touch k² without passing through it.
    Tangential,
    /// Resonance sitting on an interval endpoint.
    Endpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonancePoint {
    pub lambda0: f64,
    pub frequencies: BTreeSet<u32>,
    pub kernel_rep: RepDecomposition,
    pub det_nonzero: bool,
    pub crossing: Crossing,
}

impl ResonancePoint {
    /// Smallest positive frequency, if any.
    pub fn dominant_frequency(&self) -> Option<u32> {
        self.frequencies.iter().copied().find(|&k| k > 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub grid: usize,
    /// Target width of the λ bracket around each resonance.
    pub lambda_tol: f64,
    /// Relative spectral tolerance.
    pub tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid: 512,
            lambda_tol: 1e-12,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResonanceScan {
    pub interior: Vec<ResonancePoint>,
    pub endpoints: Vec<ResonancePoint>,
    pub warnings: Vec<String>,
}

struct Sample {
    lambda: f64,
    values: Vec<f64>,
}

fn eigenvalues(family: &MatrixFamily, lambda: f64) -> Result<Vec<f64>> {
    Ok(jacobi_eigen(&family.eval(lambda))?.values)
}

fn abs_tol(values: &[f64], tol: f64) -> f64 {
    tol * values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn count_above(values: &[f64], x: f64) -> usize {
    values.iter().filter(|&&v| v > x).count()
}

fn distance(values: &[f64], x: f64) -> f64 {
    values
        .iter()
        .map(|v| (v - x).abs())
        .fold(f64::INFINITY, f64::min)
}

struct Candidate {
    lambda: f64,
    k: u32,
    crossing: Crossing,
}

pub fn scan_resonances(
    family: &MatrixFamily,
    lo: f64,
    hi: f64,
    opts: &ScanOptions,
) -> Result<ResonanceScan> {
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!(
            "scan interval must satisfy lo < hi, got [{}, {}]",
            lo, hi
        )));
    }
    if opts.grid < 3 {
        return Err(Error::InvalidInput("scan grid needs at least 3 samples".into()));
    }
    let g = opts.grid;
    let step = (hi - lo) / (g - 1) as f64;
    let samples: Vec<Sample> = (0..g)
        .into_par_iter()
        .map(|i| {
            let lambda = if i == g - 1 { hi } else { lo + step * i as f64 };
            eigenvalues(family, lambda).map(|values| Sample { lambda, values })
        })
        .collect::<Result<_>>()?;

    let top = samples
        .iter()
        .flat_map(|s| s.values.last().copied())
        .fold(0.0f64, f64::max);
    let k_max = top.sqrt().ceil() as u32 + 1;
    let merge_tol = 1e-6 * (hi - lo) + opts.lambda_tol;

    let mut warnings = Vec::new();
    let mut candidates = Vec::new();
    for k in 0..=k_max {
        let k2 = (k as f64) * (k as f64);
        let counts: Vec<usize> = samples.iter().map(|s| count_above(&s.values, k2)).collect();
        let dists: Vec<f64> = samples.iter().map(|s| distance(&s.values, k2)).collect();
        let tols: Vec<f64> = samples.iter().map(|s| abs_tol(&s.values, opts.tol)).collect();

        let mut run = 0;
        for i in 0..g {
            if dists[i] <= tols[i] {
                run += 1;
                if run >= 3 {
                    return Err(Error::Tangency {
                        k,
                        lo: samples[i + 1 - run].lambda,
                        hi: samples[i].lambda,
                    });
                }
            } else {
                run = 0;
            }
        }

        for i in 0..g - 1 {
            if counts[i] != counts[i + 1] {
                if counts[i].abs_diff(counts[i + 1]) > 1 {
                    warnings.push(format!(
                        "{} eigenvalues cross {} within one grid cell near lambda = {:.6}; \
                         possible unresolved resonances",
                        counts[i].abs_diff(counts[i + 1]),
                        k2,
                        samples[i].lambda
                    ));
                }
                let lambda = bisect_count_change(
                    family,
                    k2,
                    samples[i].lambda,
                    samples[i + 1].lambda,
                    counts[i],
                    opts.lambda_tol,
                )?;
                candidates.push(Candidate {
                    lambda,
                    k,
                    crossing: Crossing::Transversal,
                });
            }
        }

        for i in 1..g - 1 {
            if counts[i - 1] != counts[i] || counts[i] != counts[i + 1] {
                continue;
            }
            if !(dists[i] <= dists[i - 1] && dists[i] <= dists[i + 1]) {
                continue;
            }
            let (lambda, dmin) = if dists[i] <= tols[i] {
                (samples[i].lambda, dists[i])
            } else {
                brent_min(
                    |l| eigenvalues(family, l).map(|v| distance(&v, k2)).unwrap_or(f64::INFINITY),
                    samples[i - 1].lambda,
                    samples[i].lambda,
                    samples[i + 1].lambda,
                    opts.lambda_tol,
                )
            };
            let vals = eigenvalues(family, lambda)?;
            if dmin <= abs_tol(&vals, opts.tol) {
                warnings.push(format!(
                    "tangential resonance: spectrum touches {} at lambda = {:.12} without crossing",
                    k2, lambda
                ));
                candidates.push(Candidate {
                    lambda,
                    k,
                    crossing: Crossing::Tangential,
                });
            }
        }
    }

    candidates.retain(|c| (c.lambda - lo).abs() > merge_tol && (c.lambda - hi).abs() > merge_tol);
    candidates.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.k.cmp(&b.k)));

    let mut interior = Vec::new();
    let mut i = 0;
    while i < candidates.len() {
        let mut j = i + 1;
        while j < candidates.len() && candidates[j].lambda - candidates[j - 1].lambda <= merge_tol {
            j += 1;
        }
        let group = &candidates[i..j];
        let transversal: Vec<f64> = group
            .iter()
            .filter(|c| c.crossing == Crossing::Transversal)
            .map(|c| c.lambda)
            .collect();
        let (lambda0, crossing) = if transversal.is_empty() {
            (
                group.iter().map(|c| c.lambda).sum::<f64>() / group.len() as f64,
                Crossing::Tangential,
            )
        } else {
            (
                transversal.iter().sum::<f64>() / transversal.len() as f64,
                Crossing::Transversal,
            )
        };
        let frequencies: BTreeSet<u32> = group.iter().map(|c| c.k).collect();
        interior.push(point_at(family, lambda0, frequencies, crossing, opts.tol)?);
        i = j;
    }

    let mut endpoints = Vec::new();
    for lambda in [lo, hi] {
        let rep = eigen_sym(&family.eval(lambda), opts.tol)?.square_resonances();
        if !rep.is_empty() {
            let frequencies = rep.frequencies().collect();
            endpoints.push(ResonancePoint {
                lambda0: lambda,
                det_nonzero: !rep.has_trivial_part(),
                frequencies,
                kernel_rep: rep,
                crossing: Crossing::Endpoint,
            });
        }
    }

    Ok(ResonanceScan {
        interior,
        endpoints,
        warnings,
    })
}

/// Builds the resonance record at `lambda0`, reading multiplicities from the
/// spectrum with a tolerance loose enough to absorb the λ bracket width.
fn point_at(
    family: &MatrixFamily,
    lambda0: f64,
    frequencies: BTreeSet<u32>,
    crossing: Crossing,
    tol: f64,
) -> Result<ResonancePoint> {
    let vals = eigenvalues(family, lambda0)?;
    let loose = abs_tol(&vals, tol.max(1e-6));
    let parts = frequencies.iter().map(|&k| {
        let k2 = (k as f64) * (k as f64);
        let mu = vals.iter().filter(|&&v| (v - k2).abs() <= loose).count() as u32;
        (mu.max(1), k)
    });
    let kernel_rep = RepDecomposition::new(parts);
    Ok(ResonancePoint {
        lambda0,
        det_nonzero: !frequencies.contains(&0),
        frequencies,
        kernel_rep,
        crossing,
    })
}

fn bisect_count_change(
    family: &MatrixFamily,
    k2: f64,
    mut a: f64,
    mut b: f64,
    count_a: usize,
    lambda_tol: f64,
) -> Result<f64> {
    for _ in 0..200 {
        if b - a <= lambda_tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if count_above(&eigenvalues(family, m)?, k2) == count_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Brent's minimization on [a, c] started from the interior point b.
/// Returns (argmin, min).
fn brent_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, c: f64, tol: f64) -> (f64, f64) {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut lo, mut hi) = (a.min(c), a.max(c));
    let mut x = b;
    let mut w = b;
    let mut v = b;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let xm = 0.5 * (lo + hi);
        let tol1 = tol + 1e-3 * f64::EPSILON * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (hi - lo) || fx == 0.0 {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if !(p.abs() >= (0.5 * q * etemp).abs() || p <= q * (lo - x) || p >= q * (hi - x)) {
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { lo - x } else { hi - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                lo = x;
            } else {
                hi = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}
