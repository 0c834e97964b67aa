//! Matrix families A(λ) with polynomial entries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SymmetricMatrix;

/// Real polynomial in λ, stored as dense coefficients (index = power).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Polynomial(Vec<f64>);

impl Polynomial {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(&[(0, c)])
    }

    /// Sums `(power, coefficient)` terms.
    pub fn from_terms(terms: &[(u32, f64)]) -> Self {
        let deg = terms.iter().map(|&(p, _)| p as usize).max().unwrap_or(0);
        let mut c = vec![0.0; deg + 1];
        for &(p, v) in terms {
            c[p as usize] += v;
        }
        let mut p = Self(c);
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.0.last() == Some(&0.0) {
            self.0.pop();
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> Option<usize> {
        (!self.0.is_empty()).then(|| self.0.len() - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        let mut p = Self(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        );
        p.trim();
        p
    }

    /// Multiplies by λ^power.
    pub fn shift(&self, power: usize) -> Self {
        if self.0.is_empty() {
            return Self::zero();
        }
        let mut c = vec![0.0; power];
        c.extend_from_slice(&self.0);
        Self(c)
    }
}

/// A(λ): an n×n symmetric matrix of polynomials in λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFamily {
    n: usize,
    entries: Vec<Polynomial>,
}

impl MatrixFamily {
    /// `entries` is row-major, length n². Must already be symmetric.
    pub fn new(n: usize, entries: Vec<Polynomial>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "matrix family needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::InvalidInput(format!(
                        "entry ({},{}) differs from entry ({},{})",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn diagonal(diag: Vec<Polynomial>) -> Self {
        let n = diag.len();
        let mut entries = vec![Polynomial::zero(); n * n];
        for (i, p) in diag.into_iter().enumerate() {
            entries[i * n + i] = p;
        }
        Self { n, entries }
    }

    pub fn constant(a: &SymmetricMatrix) -> Self {
        Self {
            n: a.dim(),
            entries: a.entries().iter().map(|&x| Polynomial::constant(x)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i * self.n + j]
    }

    pub fn eval(&self, lambda: f64) -> SymmetricMatrix {
        let e = self.entries.iter().map(|p| p.eval(lambda)).collect();
        SymmetricMatrix::new(self.n, e).expect("family entries are finite and square")
    }

    pub fn derivative(&self) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(Polynomial::derivative).collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|p| p.degree().unwrap_or(0) == 0)
    }

    /// λ^power · A(λ).
    pub fn shift(&self, power: usize) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|p| p.shift(power)).collect(),
        }
    }
}
