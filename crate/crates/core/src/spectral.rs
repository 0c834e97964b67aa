//! Symmetric eigenanalysis and the integer spectral invariants built on it:
//! multiplicities μ_A, the Morse index m⁻, the counts j_k and the K-set.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reps::{gcd_closure, RepDecomposition};

/// Default relative tolerance for spectral decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 64;

/// Real symmetric n×n matrix, row-major. Symmetry is exact: the input is
/// symmetrized on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                n * n,
                n,
                n,
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let mut m = Self { n, entries };
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (m.entries[i * n + j] + m.entries[j * n + i]);
                m.entries[i * n + j] = avg;
                m.entries[j * n + i] = avg;
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix rows must be square".into()));
        }
        Self::new(n, rows.iter().flatten().copied().collect())
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut entries = vec![0.0; n * n];
        for (i, &x) in d.iter().enumerate() {
            entries[i * n + i] = x;
        }
        Self { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// A + s·Id.
    pub fn shifted(&self, s: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.entries[i * self.n + i] += s;
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|x| x * s).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.entries[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0.0))
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors
/// (`vectors[i]` belongs to `values[i]`).
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi diagonalization.
pub fn jacobi_eigen(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let n = a.n;
    let mut m = a.entries.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.frobenius_norm();
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off_norm = off(&m);
        if off_norm <= f64::EPSILON * scale || off_norm == 0.0 {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNonConvergence { sweeps, off_norm });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if apq.abs() <= 1e-3 * f64::EPSILON * (app.abs() + aqq.abs()) {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // rotate rows/cols p and q
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    Ok(EigenDecomposition { values, vectors })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: f64,
    pub multiplicity: u32,
}

/// Clustered spectrum of a symmetric matrix. `tol` is the absolute
/// clustering tolerance that was used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub eigenvalues: Vec<Eigenvalue>,
    pub tol: f64,
}

/// Eigenvalues of `a` clustered at `tol` relative to `max(1, ‖A‖₂)`, after
/// checking every eigenpair residual.
pub fn eigen_sym(a: &SymmetricMatrix, tol: f64) -> Result<SpectralData> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let dec = jacobi_eigen(a)?;
    let norm = dec
        .values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let bound = tol * (1.0 + norm);
    for (val, vec) in dec.values.iter().zip(&dec.vectors) {
        let av = a.mul_vec(vec);
        let r = av
            .iter()
            .zip(vec)
            .map(|(x, y)| (x - val * y).powi(2))
            .sum::<f64>()
            .sqrt();
        if r > bound {
            return Err(Error::EigenResidual { residual: r, bound });
        }
    }
    Ok(SpectralData::cluster(&dec.values, tol * norm.max(1.0)))
}

impl SpectralData {
    /// Groups sorted values whose consecutive gaps are at most `abs_tol`.
    pub fn cluster(sorted: &[f64], abs_tol: f64) -> Self {
        let mut eigenvalues: Vec<Eigenvalue> = Vec::new();
        let mut group: Vec<f64> = Vec::new();
        let flush = |group: &mut Vec<f64>, out: &mut Vec<Eigenvalue>| {
            if !group.is_empty() {
                let mean = group.iter().sum::<f64>() / group.len() as f64;
                out.push(Eigenvalue {
                    value: mean,
                    multiplicity: group.len() as u32,
                });
                group.clear();
            }
        };
        for &x in sorted {
            if let Some(&last) = group.last() {
                if x - last > abs_tol {
                    flush(&mut group, &mut eigenvalues);
                }
            }
            group.push(x);
        }
        flush(&mut group, &mut eigenvalues);
        Self {
            eigenvalues,
            tol: abs_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity as usize).sum()
    }

    pub fn max_value(&self) -> Option<f64> {
        self.eigenvalues.last().map(|e| e.value)
    }

    /// μ_A(α): multiplicity of the cluster within tolerance of `alpha`.
    pub fn multiplicity_of(&self, alpha: f64) -> u32 {
        self.eigenvalues
            .iter()
            .filter(|e| (e.value - alpha).abs() <= self.tol)
            .map(|e| e.multiplicity)
            .sum()
    }

    pub fn nearest(&self, alpha: f64) -> Option<f64> {
        self.eigenvalues
            .iter()
            .map(|e| e.value)
            .min_by(|a, b| (a - alpha).abs().total_cmp(&(b - alpha).abs()))
    }

    fn degenerate_at(&self, target: f64) -> Result<()> {
        match self
            .eigenvalues
            .iter()
            .find(|e| (e.value - target).abs() <= self.tol)
        {
            Some(e) => Err(Error::Degenerate {
                eigenvalue: e.value,
                target,
                tol: self.tol,
            }),
            None => Ok(()),
        }
    }

    /// Number of eigenvalues (with multiplicity) strictly above `x`, where
    /// values within tolerance of `x` are not counted.
    pub fn count_above(&self, x: f64) -> u32 {
        self.eigenvalues
            .iter()
            .filter(|e| e.value > x + self.tol)
            .map(|e| e.multiplicity)
            .sum()
    }

    /// m⁻: total multiplicity of negative eigenvalues. With `strict`, an
    /// eigenvalue at zero is an error instead of being skipped.
    pub fn morse_index(&self, strict: bool) -> Result<u32> {
        if strict {
            self.degenerate_at(0.0)?;
        }
        Ok(self
            .eigenvalues
            .iter()
            .filter(|e| e.value < -self.tol)
            .map(|e| e.multiplicity)
            .sum())
    }

    /// j_k(A, 2π): multiplicity-weighted count of eigenvalues above k².
    pub fn j_k(&self, k: u32) -> Result<u32> {
        let k2 = (k as f64) * (k as f64);
        self.degenerate_at(k2)?;
        Ok(self.count_above(k2))
    }

    /// Largest k worth inspecting: beyond it no eigenvalue reaches k².
    pub fn k_bound(&self) -> u32 {
        let top = self.max_value().unwrap_or(0.0).max(0.0);
        top.sqrt().ceil() as u32 + 1
    }

    /// σ(A) ∩ {k² : k ≥ 0} as the representation ⊕ R[μ_A(k²), k].
    pub fn square_resonances(&self) -> RepDecomposition {
        RepDecomposition::new((0..=self.k_bound()).filter_map(|k| {
            let mu = self.multiplicity_of((k as f64) * (k as f64));
            (mu > 0).then_some((mu, k))
        }))
    }

    /// Positive frequencies k ≥ 1 with k² in the spectrum.
    pub fn resonant_frequencies(&self) -> BTreeSet<u32> {
        self.square_resonances()
            .frequencies()
            .filter(|&k| k > 0)
            .collect()
    }

    /// σ₊: clustered eigenvalues above tolerance.
    pub fn positive_part(&self) -> Vec<Eigenvalue> {
        self.eigenvalues
            .iter()
            .filter(|e| e.value > self.tol)
            .copied()
            .collect()
    }
}

pub fn morse_index(s: &SpectralData, strict: bool) -> Result<u32> {
    s.morse_index(strict)
}

pub fn j_k(a: &SymmetricMatrix, k: u32, tol: f64) -> Result<u32> {
    eigen_sym(a, tol)?.j_k(k)
}

/// K = gcd-closure of the positive resonant frequencies at λ₋ united with
/// the same at λ₊. Empty when neither endpoint meets {k² : k ≥ 1}.
pub fn k_set(minus: &SpectralData, plus: &SpectralData) -> BTreeSet<u32> {
    let mut out = gcd_closure(minus.resonant_frequencies());
    out.extend(gcd_closure(plus.resonant_frequencies()));
    out
}
