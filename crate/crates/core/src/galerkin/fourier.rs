use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// u(t) = a0 + Σ_{k=1..N} (acos[k]·cos kt + asin[k]·sin kt) in Rⁿ.
///
/// Coefficients are stored flat in blocks of n: block 0 is a0, block
/// 2k−1 is acos[k], block 2k is asin[k].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierLoop {
    n: usize,
    modes: usize,
    coeffs: Vec<f64>,
}

#[inline]
pub(crate) fn cos_block(k: usize) -> usize {
    2 * k - 1
}

#[inline]
pub(crate) fn sin_block(k: usize) -> usize {
    2 * k
}

/// Frequency carried by coefficient block `b`.
#[inline]
pub(crate) fn block_frequency(b: usize) -> usize {
    (b + 1) / 2
}

impl FourierLoop {
    pub fn zeros(n: usize, modes: usize) -> Self {
        Self {
            n,
            modes,
            coeffs: vec![0.0; n * (2 * modes + 1)],
        }
    }

    pub fn from_coeffs(n: usize, modes: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n == 0 || coeffs.len() != n * (2 * modes + 1) {
            return Err(Error::InvalidInput(format!(
                "a loop in R^{} with {} modes needs {} coefficients, got {}",
                n,
                modes,
                n * (2 * modes + 1),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("loop coefficients must be finite".into()));
        }
        Ok(Self { n, modes, coeffs })
    }

    /// `acos[k−1]` and `asin[k−1]` hold the mode-k vectors.
    pub fn from_parts(a0: &[f64], acos: &[Vec<f64>], asin: &[Vec<f64>]) -> Result<Self> {
        let n = a0.len();
        if acos.len() != asin.len() || acos.iter().chain(asin).any(|v| v.len() != n) {
            return Err(Error::InvalidInput("inconsistent loop coefficient shapes".into()));
        }
        let mut out = Self::zeros(n, acos.len());
        out.a0_mut().copy_from_slice(a0);
        for k in 1..=acos.len() {
            out.acos_mut(k).copy_from_slice(&acos[k - 1]);
            out.asin_mut(k).copy_from_slice(&asin[k - 1]);
        }
        Ok(out)
    }

    /// amplitude·v·cos(kt).
    pub fn single_mode(v: &[f64], k: usize, modes: usize, amplitude: f64) -> Self {
        let mut out = Self::zeros(v.len(), modes.max(k));
        if k == 0 {
            out.a0_mut().iter_mut().zip(v).for_each(|(c, x)| *c = amplitude * x);
        } else {
            out.acos_mut(k).iter_mut().zip(v).for_each(|(c, x)| *c = amplitude * x);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    fn block(&self, b: usize) -> &[f64] {
        &self.coeffs[b * self.n..(b + 1) * self.n]
    }

    fn block_mut(&mut self, b: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.coeffs[b * n..(b + 1) * n]
    }

    pub fn a0(&self) -> &[f64] {
        self.block(0)
    }

    pub fn a0_mut(&mut self) -> &mut [f64] {
        self.block_mut(0)
    }

    pub fn acos(&self, k: usize) -> &[f64] {
        self.block(cos_block(k))
    }

    pub fn asin(&self, k: usize) -> &[f64] {
        self.block(sin_block(k))
    }

    pub fn acos_mut(&mut self, k: usize) -> &mut [f64] {
        self.block_mut(cos_block(k))
    }

    pub fn asin_mut(&mut self, k: usize) -> &mut [f64] {
        self.block_mut(sin_block(k))
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut u = self.a0().to_vec();
        for k in 1..=self.modes {
            let (s, c) = (k as f64 * t).sin_cos();
            for ((x, a), b) in u.iter_mut().zip(self.acos(k)).zip(self.asin(k)) {
                *x += a * c + b * s;
            }
        }
        u
    }

    pub fn eval_derivative(&self, t: f64) -> Vec<f64> {
        self.derivative().eval(t)
    }

    /// Coefficients of u̇.
    pub fn derivative(&self) -> Self {
        let mut out = Self::zeros(self.n, self.modes);
        for k in 1..=self.modes {
            let kf = k as f64;
            for i in 0..self.n {
                out.acos_mut(k)[i] = kf * self.asin(k)[i];
                out.asin_mut(k)[i] = -kf * self.acos(k)[i];
            }
        }
        out
    }

    /// t ↦ u(t + s).
    pub fn time_shift(&self, s: f64) -> Self {
        let mut out = self.clone();
        for k in 1..=self.modes {
            let (sn, cs) = (k as f64 * s).sin_cos();
            for i in 0..self.n {
                let a = self.acos(k)[i];
                let b = self.asin(k)[i];
                out.acos_mut(k)[i] = a * cs + b * sn;
                out.asin_mut(k)[i] = b * cs - a * sn;
            }
        }
        out
    }

    /// Truncates or zero-pads to `modes`.
    pub fn resized(&self, modes: usize) -> Self {
        let mut out = Self::zeros(self.n, modes);
        let keep = self.n * (2 * self.modes.min(modes) + 1);
        out.coeffs[..keep].copy_from_slice(&self.coeffs[..keep]);
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            modes: self.modes,
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    /// |acos[k]|² + |asin[k]|², or |a0|² for k = 0.
    pub fn mode_energy(&self, k: usize) -> f64 {
        if k == 0 {
            return self.a0().iter().map(|x| x * x).sum();
        }
        self.acos(k)
            .iter()
            .chain(self.asin(k))
            .map(|x| x * x)
            .sum()
    }

    /// Euclidean norm of the mode-k coefficient block.
    pub fn mode_norm(&self, k: usize) -> f64 {
        self.mode_energy(k).sqrt()
    }

    /// max_j ‖u(2πj/nodes)‖.
    pub fn amplitude(&self, nodes: usize) -> f64 {
        (0..nodes)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
                self.eval(t).iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample() -> FourierLoop {
        FourierLoop::from_parts(
            &[0.5, -1.0],
            &[vec![1.0, 0.0], vec![0.25, 2.0]],
            &[vec![0.0, 3.0], vec![-1.0, 0.5]],
        )
        .unwrap()
    }

    #[test]
    fn evaluation_matches_definition() {
        let u = sample();
        let t: f64 = 0.7;
        let x0 = 0.5 + t.cos() + 0.25 * (2.0 * t).cos() - (2.0 * t).sin();
        let x1 = -1.0 + 3.0 * t.sin() + 2.0 * (2.0 * t).cos() + 0.5 * (2.0 * t).sin();
        let v = u.eval(t);
        assert!((v[0] - x0).abs() < 1e-14 && (v[1] - x1).abs() < 1e-14);
        let w = u.eval(t + 2.0 * PI);
        assert!((v[0] - w[0]).abs() < 1e-12 && (v[1] - w[1]).abs() < 1e-12);
    }

    #[test]
    fn derivative_and_shift() {
        let u = sample();
        let h = 1e-6;
        let fd: Vec<f64> = u
            .eval(0.3 + h)
            .iter()
            .zip(u.eval(0.3 - h))
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        let d = u.eval_derivative(0.3);
        assert!((fd[0] - d[0]).abs() < 1e-8 && (fd[1] - d[1]).abs() < 1e-8);
        let shifted = u.time_shift(0.4);
        let a = shifted.eval(1.1);
        let b = u.eval(1.5);
        assert!((a[0] - b[0]).abs() < 1e-13 && (a[1] - b[1]).abs() < 1e-13);
    }

    #[test]
    fn resize_and_energy() {
        let u = sample();
        assert_eq!(u.resized(5).resized(2), u);
        assert_eq!(u.resized(1).modes(), 1);
        assert_eq!(u.mode_energy(2), 0.0625 + 4.0 + 1.0 + 0.25);
        assert_eq!(u.mode_energy(0), 1.25);
        let c = FourierLoop::single_mode(&[1.0, 0.0], 2, 4, 3.0);
        assert!((c.amplitude(64) - 3.0).abs() < 1e-12);
        assert!(FourierLoop::from_coeffs(2, 1, vec![0.0; 5]).is_err());
    }
}
