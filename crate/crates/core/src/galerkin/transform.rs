//! Equispaced collocation in time and back, via FFT.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest even 5-smooth integer ≥ 4·modes + 2.
pub fn default_nodes(modes: usize) -> usize {
    let mut m = 4 * modes + 2;
    loop {
        if m % 2 == 0 && is_smooth(m) {
            return m;
        }
        m += 1;
    }
}

fn is_smooth(mut m: usize) -> bool {
    for p in [2, 3, 5] {
        while m % p == 0 {
            m /= p;
        }
    }
    m == 1
}

pub struct Transform {
    n: usize,
    modes: usize,
    nodes: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Transform {
    pub fn new(n: usize, modes: usize, nodes: usize) -> Result<Self> {
        if nodes < 2 * modes + 2 {
            return Err(Error::InvalidInput(format!(
                "{} collocation nodes cannot resolve {} modes",
                nodes, modes
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            modes,
            nodes,
            forward: planner.plan_fft_forward(nodes),
            inverse: planner.plan_fft_inverse(nodes),
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn node(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.nodes as f64
    }

    /// Values at the nodes, node-major: `out[j·n + i]` = u_i(t_j).
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.nodes);
        let mut out = vec![0.0; n * m];
        let mut buf = vec![Complex::new(0.0, 0.0); m];
        for i in 0..n {
            buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            buf[0] = Complex::new(coeffs[i], 0.0);
            for k in 1..=self.modes {
                let a = coeffs[(2 * k - 1) * n + i];
                let b = coeffs[2 * k * n + i];
                buf[k] = Complex::new(a, -b);
            }
            self.inverse.process(&mut buf);
            for j in 0..m {
                out[j * n + i] = buf[j].re;
            }
        }
        out
    }

    /// Fourier coefficients (modes ≤ N) of node-major samples.
    pub fn analyze(&self, samples: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.nodes);
        let mut out = vec![0.0; n * (2 * self.modes + 1)];
        let mut buf = vec![Complex::new(0.0, 0.0); m];
        let scale = 1.0 / m as f64;
        for i in 0..n {
            for j in 0..m {
                buf[j] = Complex::new(samples[j * n + i], 0.0);
            }
            self.forward.process(&mut buf);
            out[i] = buf[0].re * scale;
            for k in 1..=self.modes {
                out[(2 * k - 1) * n + i] = 2.0 * buf[k].re * scale;
                out[2 * k * n + i] = -2.0 * buf[k].im * scale;
            }
        }
        out
    }

    /// Complex DFT of a scalar signal, normalized by the node count:
    /// ĝ[m] = (1/M)·Σ_j g(t_j)·e^{−i m t_j}, for m = 0..M−1.
    pub fn spectrum(&self, signal: &[f64]) -> Vec<Complex<f64>> {
        let scale = 1.0 / self.nodes as f64;
        let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::FourierLoop;

    #[test]
    fn node_counts_are_smooth() {
        assert_eq!(default_nodes(1), 6);
        assert_eq!(default_nodes(16), 72);
        for modes in [1, 7, 32, 100, 4096] {
            let m = default_nodes(modes);
            assert!(m >= 4 * modes + 2 && m % 2 == 0 && is_smooth(m));
        }
    }

    #[test]
    fn synthesis_matches_pointwise_evaluation_and_inverts() {
        let u = FourierLoop::from_parts(
            &[0.3, -0.2],
            &[vec![1.0, 0.5], vec![0.0, -0.7], vec![0.1, 0.2]],
            &[vec![-0.4, 0.0], vec![0.9, 0.3], vec![0.0, -0.05]],
        )
        .unwrap();
        let tr = Transform::new(2, 3, default_nodes(3)).unwrap();
        let s = tr.synthesize(u.coeffs());
        for j in 0..tr.nodes() {
            let v = u.eval(tr.node(j));
            assert!((s[2 * j] - v[0]).abs() < 1e-13);
            assert!((s[2 * j + 1] - v[1]).abs() < 1e-13);
        }
        let back = tr.analyze(&s);
        for (a, b) in back.iter().zip(u.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(Transform::new(1, 8, 17).is_err());
    }
}
