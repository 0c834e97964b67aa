//! The truncated-Fourier residual of ü + ∇V(u, λ) = 0 and its derivatives.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;

use super::fourier::{block_frequency, FourierLoop};
use super::transform::{default_nodes, Transform};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

/// Residual evaluation for one problem at fixed truncation and λ.
pub struct Evaluator<'a> {
    p: &'a ProblemSpec,
    tr: Transform,
    n: usize,
    modes: usize,
    pub lambda: f64,
}

/// Hessian samples at the nodes, `h[j·n² + r·n + c]`.
pub struct HessianSamples(Vec<f64>);

impl<'a> Evaluator<'a> {
    pub fn new(p: &'a ProblemSpec, modes: usize, nodes: Option<usize>, lambda: f64) -> Result<Self> {
        let nodes = nodes.unwrap_or_else(|| default_nodes(modes));
        Ok(Self {
            p,
            tr: Transform::new(p.dim(), modes, nodes)?,
            n: p.dim(),
            modes,
            lambda,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.p
    }

    pub fn transform(&self) -> &Transform {
        &self.tr
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of coefficients n(2N+1).
    pub fn len(&self) -> usize {
        self.n * (2 * self.modes + 1)
    }

    pub fn samples(&self, coeffs: &[f64]) -> Vec<f64> {
        self.tr.synthesize(coeffs)
    }

    fn map_nodes<F>(&self, samples: &[f64], mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let n = self.n;
        let mut out = vec![0.0; samples.len()];
        for (x, g) in samples.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            f(x, g)?;
        }
        Ok(out)
    }

    /// −k²·coeffs + Fourier coefficients of ∇V(u(t), λ).
    pub fn residual_from_samples(&self, coeffs: &[f64], samples: &[f64]) -> Result<Vec<f64>> {
        let grad = self.map_nodes(samples, |x, g| self.p.gradient(x, self.lambda, g))?;
        let mut r = self.tr.analyze(&grad);
        let n = self.n;
        for (b, chunk) in r.chunks_exact_mut(n).enumerate().skip(1) {
            let k = block_frequency(b) as f64;
            for (ri, ci) in chunk.iter_mut().zip(&coeffs[b * n..(b + 1) * n]) {
                *ri -= k * k * ci;
            }
        }
        Ok(r)
    }

    pub fn residual(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.residual_from_samples(coeffs, &self.samples(coeffs))
    }

    /// ∂_λ of the residual.
    pub fn lambda_derivative(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let d = self.map_nodes(samples, |x, g| self.p.gradient_lambda_derivative(x, self.lambda, g))?;
        Ok(self.tr.analyze(&d))
    }

    pub fn hessian_samples(&self, samples: &[f64]) -> Option<HessianSamples> {
        let n = self.n;
        let mut out = vec![0.0; samples.len() * n];
        for (x, h) in samples.chunks_exact(n).zip(out.chunks_exact_mut(n * n)) {
            self.p.hessian(x, self.lambda, h)?;
        }
        Some(HessianSamples(out))
    }

    /// J·δ through the time domain: −k²δ + coefficients of ∇²V(u(t))·δu(t).
    pub fn jvp(&self, hess: &HessianSamples, delta: &[f64]) -> Vec<f64> {
        let n = self.n;
        let ds = self.tr.synthesize(delta);
        let mut prod = vec![0.0; ds.len()];
        for ((d, h), p) in ds
            .chunks_exact(n)
            .zip(hess.0.chunks_exact(n * n))
            .zip(prod.chunks_exact_mut(n))
        {
            for r in 0..n {
                p[r] = (0..n).map(|c| h[r * n + c] * d[c]).sum();
            }
        }
        let mut out = self.tr.analyze(&prod);
        for (b, chunk) in out.chunks_exact_mut(n).enumerate().skip(1) {
            let k = block_frequency(b) as f64;
            for (o, di) in chunk.iter_mut().zip(&delta[b * n..(b + 1) * n]) {
                *o -= k * k * di;
            }
        }
        out
    }

    /// J·δ by a forward difference of the residual.
    pub fn jvp_fd(&self, coeffs: &[f64], base: &[f64], delta: &[f64]) -> Result<Vec<f64>> {
        let dn = norm(delta);
        if dn == 0.0 {
            return Ok(vec![0.0; delta.len()]);
        }
        let h = 1e-7 * (1.0 + norm(coeffs)) / dn;
        let shifted: Vec<f64> = coeffs.iter().zip(delta).map(|(c, d)| c + h * d).collect();
        let r = self.residual(&shifted)?;
        Ok(r.iter().zip(base).map(|(a, b)| (a - b) / h).collect())
    }

    /// Normalized spectra ĥ_rc[m] of the Hessian entries (r ≤ c).
    pub fn hessian_spectra(&self, hess: &HessianSamples) -> HessianSpectra {
        let n = self.n;
        let m = self.tr.nodes();
        let mut spectra = vec![Vec::new(); n * n];
        for r in 0..n {
            for c in r..n {
                let sig: Vec<f64> = (0..m).map(|j| hess.0[j * n * n + r * n + c]).collect();
                let s = self.tr.spectrum(&sig);
                if r != c {
                    spectra[c * n + r] = s.clone();
                }
                spectra[r * n + c] = s;
            }
        }
        HessianSpectra { n, nodes: m, spectra }
    }

    /// Jacobian block for coefficient blocks `0..rows` × `0..cols`, assembled
    /// from the Hessian spectra by product-to-sum formulas.
    pub fn jacobian_from_spectra(&self, hs: &HessianSpectra, blocks: usize) -> DMatrix<f64> {
        let n = self.n;
        let dim = n * blocks;
        let mut j = DMatrix::zeros(dim, dim);
        for bc in 0..blocks {
            let kb = block_frequency(bc) as i64;
            for br in 0..blocks {
                let ka = block_frequency(br) as i64;
                for r in 0..n {
                    for c in 0..n {
                        let h = |m: i64| hs.at(r, c, m);
                        // complex coefficient of H_rc·φ_bc at frequency ka
                        let g = if bc == 0 {
                            h(ka)
                        } else if bc % 2 == 1 {
                            (h(ka - kb) + h(ka + kb)) * 0.5
                        } else {
                            (h(ka - kb) - h(ka + kb)) * Complex::new(0.0, -0.5)
                        };
                        let v = if br == 0 {
                            g.re
                        } else if br % 2 == 1 {
                            2.0 * g.re
                        } else {
                            -2.0 * g.im
                        };
                        j[(br * n + r, bc * n + c)] = v;
                    }
                }
            }
        }
        for b in 1..blocks {
            let k = block_frequency(b) as f64;
            for i in 0..n {
                j[(b * n + i, b * n + i)] -= k * k;
            }
        }
        j
    }

    /// Full Jacobian of the residual with respect to the coefficients:
    /// analytic for built-in potentials, forward differences otherwise.
    pub fn jacobian(&self, coeffs: &[f64]) -> Result<DMatrix<f64>> {
        let samples = self.samples(coeffs);
        match self.hessian_samples(&samples) {
            Some(h) => Ok(self.jacobian_from_spectra(&self.hessian_spectra(&h), 2 * self.modes + 1)),
            None => self.jacobian_fd(coeffs, self.len()),
        }
    }

    /// Forward-difference Jacobian restricted to the first `dim` rows and
    /// columns.
    pub fn jacobian_fd(&self, coeffs: &[f64], dim: usize) -> Result<DMatrix<f64>> {
        let base = self.residual(coeffs)?;
        let mut j = DMatrix::zeros(dim, dim);
        let mut x = coeffs.to_vec();
        for c in 0..dim {
            let h = 1e-7 * (1.0 + coeffs[c].abs());
            x[c] = coeffs[c] + h;
            let r = self.residual(&x)?;
            x[c] = coeffs[c];
            for row in 0..dim {
                j[(row, c)] = (r[row] - base[row]) / h;
            }
        }
        Ok(j)
    }
}

pub struct HessianSpectra {
    n: usize,
    nodes: usize,
    spectra: Vec<Vec<Complex<f64>>>,
}

impl HessianSpectra {
    pub fn at(&self, r: usize, c: usize, m: i64) -> Complex<f64> {
        let idx = m.rem_euclid(self.nodes as i64) as usize;
        self.spectra[r * self.n + c][idx]
    }

    /// Time average of the Hessian.
    pub fn mean(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.at(r, c, 0).re)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_dim(lp: &FourierLoop, p: &ProblemSpec) -> Result<()> {
    if lp.dim() != p.dim() {
        return Err(Error::InvalidInput(format!(
            "loop lives in R^{} but the problem has dimension {}",
            lp.dim(),
            p.dim()
        )));
    }
    Ok(())
}

/// Coefficient-space residual on the default 4N+2-or-more node grid.
pub fn residual(lp: &FourierLoop, lambda: f64, p: &ProblemSpec) -> Result<Vec<f64>> {
    residual_with_nodes(lp, lambda, p, default_nodes(lp.modes()))
}

pub fn residual_with_nodes(lp: &FourierLoop, lambda: f64, p: &ProblemSpec, nodes: usize) -> Result<Vec<f64>> {
    check_dim(lp, p)?;
    Evaluator::new(p, lp.modes(), Some(nodes), lambda)?.residual(lp.coeffs())
}

/// Jacobian of `residual` with respect to the loop coefficients.
pub fn jacobian(lp: &FourierLoop, lambda: f64, p: &ProblemSpec) -> Result<DMatrix<f64>> {
    check_dim(lp, p)?;
    Evaluator::new(p, lp.modes(), None, lambda)?.jacobian(lp.coeffs())
}
