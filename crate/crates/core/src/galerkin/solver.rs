//! Newton's method on the truncated system, bordered by a phase condition
//! (and, along a branch, an amplitude pin with λ as an extra unknown).
//!
//! The time-shift orbit makes the plain residual Jacobian singular at every
//! nonconstant solution. The system is unfolded as R(u) + ε·u̇ = 0 with the
//! extra unknown ε, which vanishes at solutions of the Hamiltonian problem,
//! and closed with ⟨u̇_ref, u⟩ = 0.
//!
//! Small systems use a dense LU factorization. Large truncations are solved
//! with right-preconditioned restarted GMRES, where the products with the
//! Jacobian go through the time domain and the preconditioner is exact on
//! the low modes and block diagonal on the high ones.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fourier::{block_frequency, cos_block, sin_block, FourierLoop};
use super::residual::{norm, Evaluator, HessianSamples, HessianSpectra};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest number of unknowns solved with a dense factorization.
    pub dense_limit: usize,
    /// Collocation nodes; `None` picks the default for the truncation.
    pub nodes: Option<usize>,
    /// Condition estimate beyond which the bordered Jacobian counts as singular.
    pub max_condition: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            dense_limit: 1400,
            nodes: None,
            max_condition: 1e14,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: FourierLoop,
    pub lambda: f64,
    /// Value of the unfolding parameter; zero up to the tolerance.
    pub epsilon: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Solves R(u, λ) = 0 at fixed λ from `guess`, removing the time-shift
/// degeneracy with a phase condition against the guess.
pub fn newton_solve(guess: &FourierLoop, lambda: f64, p: &ProblemSpec, opts: &SolverOptions) -> Result<FourierLoop> {
    newton_solve_report(guess, lambda, p, opts).map(|r| r.solution)
}

pub fn newton_solve_report(
    guess: &FourierLoop,
    lambda: f64,
    p: &ProblemSpec,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_dim(guess, p)?;
    let phase = guess.derivative();
    let phase = (norm(phase.coeffs()) > 0.0).then_some(phase);
    let sys = Augmented::new(p, guess.modes(), opts.nodes, lambda, phase.as_ref(), None)?;
    solve(sys, guess, lambda, opts)
}

/// Solves for (u, λ) with the mode-k0 block of u pinned to norm `radius` and
/// the phase fixed against `phase_ref`.
pub fn solve_pinned(
    p: &ProblemSpec,
    seed: &FourierLoop,
    lambda_seed: f64,
    k0: usize,
    radius: f64,
    phase_ref: &FourierLoop,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_dim(seed, p)?;
    if radius <= 0.0 || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("amplitude must be positive, got {}", radius)));
    }
    if k0 == 0 || k0 > seed.modes() {
        return Err(Error::InvalidInput(format!(
            "pinned frequency {} is outside the truncation 1..={}",
            k0,
            seed.modes()
        )));
    }
    let phase = phase_ref.resized(seed.modes()).derivative();
    if norm(phase.coeffs()) == 0.0 {
        return Err(Error::InvalidInput("phase reference must be nonconstant".into()));
    }
    let sys = Augmented::new(p, seed.modes(), opts.nodes, lambda_seed, Some(&phase), Some((k0, radius)))?;
    solve(sys, seed, lambda_seed, opts)
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

/// Coefficients of u̇ written into `out`.
fn derivative_into(n: usize, modes: usize, c: &[f64], out: &mut [f64]) {
    out[..n].iter_mut().for_each(|v| *v = 0.0);
    for k in 1..=modes {
        let kf = k as f64;
        let (cb, sb) = (cos_block(k) * n, sin_block(k) * n);
        for i in 0..n {
            out[cb + i] = kf * c[sb + i];
            out[sb + i] = -kf * c[cb + i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Augmented<'a> {
    ev: Evaluator<'a>,
    n: usize,
    modes: usize,
    /// Unit-normalized u̇_ref.
    phase: Option<Vec<f64>>,
    pin: Option<(usize, f64)>,
}

/// Everything the Jacobian needs at one iterate.
struct Linearization {
    coeffs: Vec<f64>,
    epsilon: f64,
    /// Residual without the unfolding term, for difference quotients.
    base: Vec<f64>,
    hess: Option<HessianSamples>,
    spectra: Option<HessianSpectra>,
    du: Vec<f64>,
    r_lambda: Option<Vec<f64>>,
}

impl<'a> Augmented<'a> {
    fn new(
        p: &'a ProblemSpec,
        modes: usize,
        nodes: Option<usize>,
        lambda: f64,
        phase: Option<&FourierLoop>,
        pin: Option<(usize, f64)>,
    ) -> Result<Self> {
        let phase = phase.map(|ph| {
            let s = norm(ph.coeffs());
            ph.coeffs().iter().map(|v| v / s).collect()
        });
        Ok(Self {
            ev: Evaluator::new(p, modes, nodes, lambda)?,
            n: p.dim(),
            modes,
            phase,
            pin,
        })
    }

    fn coeff_len(&self) -> usize {
        self.ev.len()
    }

    fn extras(&self) -> usize {
        self.phase.is_some() as usize + self.pin.is_some() as usize
    }

    fn len(&self) -> usize {
        self.coeff_len() + self.extras()
    }

    fn pack(&self, u: &FourierLoop, lambda: f64) -> Vec<f64> {
        let mut x = u.coeffs().to_vec();
        if self.phase.is_some() {
            x.push(0.0);
        }
        if self.pin.is_some() {
            x.push(lambda);
        }
        x
    }

    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], f64, f64) {
        let l = self.coeff_len();
        let eps = if self.phase.is_some() { x[l] } else { 0.0 };
        let lambda = if self.pin.is_some() { x[l + 1] } else { self.ev.lambda };
        (&x[..l], eps, lambda)
    }

    fn pinned_block(&self, k0: usize) -> std::ops::Range<usize> {
        cos_block(k0) * self.n..(sin_block(k0) + 1) * self.n
    }

    fn set_lambda(&mut self, x: &[f64]) {
        if self.pin.is_some() {
            self.ev.lambda = x[self.coeff_len() + 1];
        }
    }

    /// Residual of the bordered system together with the plain residual.
    fn eval(&mut self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.set_lambda(x);
        let (c, eps, _) = self.split(x);
        let base = self.ev.residual(c)?;
        let mut f = base.clone();
        if let Some(ph) = &self.phase {
            let mut du = vec![0.0; c.len()];
            derivative_into(self.n, self.modes, c, &mut du);
            f.iter_mut().zip(&du).for_each(|(fi, d)| *fi += eps * d);
            f.push(dot(ph, c));
        }
        if let Some((k0, r)) = self.pin {
            let blk = &c[self.pinned_block(k0)];
            f.push((dot(blk, blk) - r * r) / (2.0 * r));
        }
        Ok((f, base))
    }

    fn linearize(&mut self, x: &[f64], base: Vec<f64>) -> Result<Linearization> {
        self.set_lambda(x);
        let (c, eps, _) = self.split(x);
        let samples = self.ev.samples(c);
        let hess = self.ev.hessian_samples(&samples);
        let spectra = hess.as_ref().map(|h| self.ev.hessian_spectra(h));
        let mut du = vec![0.0; c.len()];
        derivative_into(self.n, self.modes, c, &mut du);
        let r_lambda = match self.pin {
            Some(_) => Some(self.ev.lambda_derivative(&samples)?),
            None => None,
        };
        Ok(Linearization {
            coeffs: c.to_vec(),
            epsilon: eps,
            base,
            hess,
            spectra,
            du,
            r_lambda,
        })
    }

    fn matvec(&self, lin: &Linearization, v: &[f64]) -> Result<Vec<f64>> {
        let l = self.coeff_len();
        let (dc, deps, dlam) = {
            let deps = if self.phase.is_some() { v[l] } else { 0.0 };
            let dlam = if self.pin.is_some() { v[l + 1] } else { 0.0 };
            (&v[..l], deps, dlam)
        };
        let mut out = match &lin.hess {
            Some(h) => self.ev.jvp(h, dc),
            None => self.ev.jvp_fd(&lin.coeffs, &lin.base, dc)?,
        };
        if self.phase.is_some() {
            let mut ddc = vec![0.0; l];
            derivative_into(self.n, self.modes, dc, &mut ddc);
            for i in 0..l {
                out[i] += lin.epsilon * ddc[i] + deps * lin.du[i];
            }
        }
        if let Some(rl) = &lin.r_lambda {
            out.iter_mut().zip(rl).for_each(|(o, r)| *o += dlam * r);
        }
        if let Some(ph) = &self.phase {
            out.push(dot(ph, dc));
        }
        if let Some((k0, r)) = self.pin {
            let range = self.pinned_block(k0);
            out.push(dot(&lin.coeffs[range.clone()], &dc[range]) / r);
        }
        Ok(out)
    }

    /// Bordered Jacobian restricted to the first `blocks` coefficient blocks,
    /// with the ε and λ unknowns appended after them.
    fn assemble(&self, lin: &Linearization, blocks: usize) -> Result<DMatrix<f64>> {
        let n = self.n;
        let lc = n * blocks;
        let ju = match &lin.spectra {
            Some(s) => self.ev.jacobian_from_spectra(s, blocks),
            None => self.ev.jacobian_fd(&lin.coeffs, lc)?,
        };
        let dim = lc + self.extras();
        let mut m = DMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (lc, lc)).copy_from(&ju);
        let mut col = lc;
        if let Some(ph) = &self.phase {
            for b in 1..blocks {
                let k = block_frequency(b) as f64;
                if b % 2 == 1 {
                    for i in 0..n {
                        // cos row gains ε·k·sin, sin row gains −ε·k·cos
                        m[(b * n + i, (b + 1) * n + i)] += lin.epsilon * k;
                        m[((b + 1) * n + i, b * n + i)] -= lin.epsilon * k;
                    }
                }
            }
            for i in 0..lc {
                m[(i, col)] = lin.du[i];
                m[(col, i)] = ph[i];
            }
            col += 1;
        }
        if let Some((k0, r)) = self.pin {
            let rl = lin.r_lambda.as_ref().expect("λ column is built for pinned systems");
            for i in 0..lc {
                m[(i, col)] = rl[i];
            }
            for i in self.pinned_block(k0) {
                if i < lc {
                    m[(col, i)] = lin.coeffs[i] / r;
                }
            }
        }
        Ok(m)
    }
}

fn condition_estimate(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let d: Vec<f64> = u.diagonal().iter().map(|v| v.abs()).collect();
    let max = d.iter().cloned().fold(0.0, f64::max);
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn factor(m: DMatrix<f64>, max_condition: f64) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let lu = m.lu();
    let condition = condition_estimate(&lu);
    if !(condition <= max_condition) {
        return Err(Error::SingularJacobian { condition });
    }
    Ok(lu)
}

/// Exact on the low-mode bordered block, (−k²I + H̄)⁻¹ on each high block.
struct Preconditioner {
    n: usize,
    low_coeffs: usize,
    extras: usize,
    low: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    high: Vec<DMatrix<f64>>,
    first_high: usize,
}

impl Preconditioner {
    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let total = y.len();
        let coeffs = total - self.extras;
        let mut out = vec![0.0; total];
        let mut low = DVector::zeros(self.low_coeffs + self.extras);
        for i in 0..self.low_coeffs {
            low[i] = y[i];
        }
        for e in 0..self.extras {
            low[self.low_coeffs + e] = y[coeffs + e];
        }
        let low = self.low.solve(&low).unwrap_or(low);
        out[..self.low_coeffs].copy_from_slice(&low.as_slice()[..self.low_coeffs]);
        out[coeffs..].copy_from_slice(&low.as_slice()[self.low_coeffs..]);
        let n = self.n;
        let mut b = self.first_high;
        while (b + 1) * n <= coeffs {
            let inv = &self.high[block_frequency(b) - block_frequency(self.first_high)];
            let yb = DVector::from_column_slice(&y[b * n..(b + 1) * n]);
            out[b * n..(b + 1) * n].copy_from_slice((inv * yb).as_slice());
            b += 1;
        }
        out
    }
}

fn build_preconditioner(sys: &Augmented, lin: &Linearization, opts: &SolverOptions) -> Result<Preconditioner> {
    let n = sys.n;
    let k_low = sys
        .pin
        .map(|(k0, _)| k0)
        .unwrap_or(0)
        .max(32)
        .min(sys.modes);
    let blocks = 2 * k_low + 1;
    let low = factor(sys.assemble(lin, blocks)?, opts.max_condition)?;
    let mean = match &lin.spectra {
        Some(s) => s.mean(),
        None => {
            let a = sys.ev.problem().linearization(sys.ev.lambda);
            DMatrix::from_fn(n, n, |r, c| a.get(r, c))
        }
    };
    let mut high = Vec::new();
    for k in k_low + 1..=sys.modes {
        let m = &mean - DMatrix::identity(n, n) * (k * k) as f64;
        let inv = m
            .try_inverse()
            .ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
        high.push(inv);
    }
    Ok(Preconditioner {
        n,
        low_coeffs: n * blocks,
        extras: sys.extras(),
        low,
        high,
        first_high: blocks,
    })
}

/// Restarted GMRES for A·x = b with right preconditioning; returns x and the
/// final relative residual.
fn gmres<A, P>(a: A, p: P, b: &[f64], rtol: f64, restart: usize, max_cycles: usize) -> Result<(Vec<f64>, f64)>
where
    A: Fn(&[f64]) -> Result<Vec<f64>>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let nrm_b = norm(b);
    let dim = b.len();
    let mut x = vec![0.0; dim];
    if nrm_b == 0.0 {
        return Ok((x, 0.0));
    }
    let mut rel = 1.0;
    for _ in 0..max_cycles {
        let ax = a(&p(&x))?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / nrm_b;
        if rel <= rtol {
            break;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            let mut w = a(&p(&v[j]))?;
            // modified Gram–Schmidt, twice for stability
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    h[i][j] += hij;
                    w.iter_mut().zip(vi).for_each(|(wk, vk)| *wk -= hij * vk);
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let d = h[j][j].hypot(h[j + 1][j]);
            if d == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / d;
            sn[j] = h[j + 1][j] / d;
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            rel = g[j + 1].abs() / nrm_b;
            if rel <= rtol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wk| wk / hn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| h[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            x.iter_mut().zip(&v[i]).for_each(|(xk, vk)| *xk += yi * vk);
        }
        if rel <= rtol {
            break;
        }
    }
    Ok((p(&x), rel))
}

fn solve(mut sys: Augmented, guess: &FourierLoop, lambda: f64, opts: &SolverOptions) -> Result<SolveReport> {
    let mut x = sys.pack(guess, lambda);
    let (mut f, mut base) = sys.eval(&x)?;
    let mut fnorm = norm(&f);
    for iter in 0..=opts.max_iter {
        if fnorm <= opts.tol {
            let (c, eps, lam) = sys.split(&x);
            return Ok(SolveReport {
                solution: FourierLoop::from_coeffs(sys.n, sys.modes, c.to_vec())?,
                lambda: lam,
                epsilon: eps,
                residual_norm: fnorm,
                iterations: iter,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        let lin = sys.linearize(&x, base.clone())?;
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let step = if sys.len() <= opts.dense_limit {
            let lu = factor(sys.assemble(&lin, 2 * sys.modes + 1)?, opts.max_condition)?;
            lu.solve(&DVector::from_vec(rhs))
                .ok_or(Error::SingularJacobian { condition: f64::INFINITY })?
                .as_slice()
                .to_vec()
        } else {
            let pc = build_preconditioner(&sys, &lin, opts)?;
            let forcing = (0.1 * fnorm).clamp(1e-13, 1e-6);
            gmres(|v| sys.matvec(&lin, v), |v| pc.apply(v), &rhs, forcing, 60, 40)?.0
        };

        // backtracking on ‖F‖
        let mut t = 1.0;
        let mut best: Option<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;
        while t >= 1.0 / 1024.0 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + t * d).collect();
            if let Ok((ft, bt)) = sys.eval(&trial) {
                let nt = norm(&ft);
                if nt.is_finite() && best.as_ref().map_or(true, |b| nt < b.3) {
                    best = Some((trial, ft, bt, nt));
                }
                if nt <= (1.0 - 1e-4 * t) * fnorm {
                    break;
                }
            }
            t *= 0.5;
        }
        match best {
            Some((xt, ft, bt, nt)) if nt < fnorm => {
                x = xt;
                f = ft;
                base = bt;
                fnorm = nt;
            }
            _ => {
                sys.set_lambda(&x);
                return Err(Error::NonConvergence {
                    iterations: iter + 1,
                    residual: fnorm,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: fnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{MatrixFamily, Polynomial};
    use crate::problem::{IndexRule, KeplerScale, Perturbation};
    use crate::spectral::SymmetricMatrix;

    fn linear(a: f64) -> ProblemSpec {
        let fam = MatrixFamily::constant(&SymmetricMatrix::from_diag(&[a]));
        ProblemSpec::new("lin", fam, Perturbation::None, IndexRule::Builtin, false).unwrap()
    }

    fn example2() -> ProblemSpec {
        let fam = MatrixFamily::diagonal(vec![
            Polynomial::from_terms(&[(0, 4.0), (1, 1.0)]),
            Polynomial::constant(2.0),
            Polynomial::constant(2.0),
            Polynomial::constant(2.0),
        ]);
        let kep = Perturbation::Kepler {
            a: 1.0,
            scale: KeplerScale::Constant,
        };
        ProblemSpec::new("ex2", fam, kep, IndexRule::Builtin, false).unwrap()
    }

    #[test]
    fn linear_fixed_point_is_kept() {
        let mut g = FourierLoop::single_mode(&[1.0], 2, 8, 1.0);
        g.acos_mut(2)[0] *= 1.0 + 1e-3;
        let u = newton_solve(&g, 0.0, &linear(4.0), &SolverOptions::default()).unwrap();
        let total: f64 = (1..=8).map(|k| u.mode_energy(k)).sum();
        assert_eq!(u.mode_energy(2), total);
    }

    #[test]
    fn zero_guess_returns_zero() {
        let u = newton_solve(&FourierLoop::zeros(4, 16), 0.05, &example2(), &SolverOptions::default()).unwrap();
        assert!(u.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn perturbed_solution_is_recovered() {
        // a solution on the branch, perturbed off it, then solved at fixed λ
        let p = example2();
        let seed = FourierLoop::single_mode(&[1.0, 0.0, 0.0, 0.0], 2, 16, 40.0);
        let opts = SolverOptions::default();
        let on = solve_pinned(&p, &seed, 0.0, 2, 40.0, &seed, &opts).unwrap();
        assert!(on.residual_norm < 1e-9);
        let mut guess = on.solution.clone();
        guess.acos_mut(2)[0] += 0.05;
        guess.asin_mut(4)[0] += 0.01;
        let rep = newton_solve_report(&guess, on.lambda, &p, &opts).unwrap();
        assert!(rep.residual_norm < 1e-9);
        assert!(rep.epsilon.abs() < 1e-9);
        let u = rep.solution;
        let total: f64 = (1..=16).map(|k| u.mode_energy(k)).sum();
        assert!(u.mode_energy(2) > 0.99 * total);
    }

    #[test]
    fn singular_system_is_reported() {
        // the linear resonant problem has a whole plane of solutions; away
        // from it the bordered Jacobian is still rank deficient
        let mut g = FourierLoop::single_mode(&[1.0], 2, 4, 1.0);
        g.a0_mut()[0] = 0.0;
        g.acos_mut(1)[0] = 0.3;
        let p = linear(4.0);
        match newton_solve(&g, 0.0, &p, &SolverOptions::default()) {
            Err(Error::SingularJacobian { condition }) => assert!(condition > 1e14),
            other => panic!("expected a singular Jacobian, got {:?}", other.map(|u| u.coeffs().to_vec())),
        }
    }

    #[test]
    fn iterative_path_matches_dense_path() {
        let p = example2();
        let seed = FourierLoop::single_mode(&[1.0, 0.0, 0.0, 0.0], 2, 48, 20.0);
        let dense = solve_pinned(&p, &seed, 0.0, 2, 20.0, &seed, &SolverOptions::default()).unwrap();
        let it_opts = SolverOptions {
            dense_limit: 0,
            ..SolverOptions::default()
        };
        let iter = solve_pinned(&p, &seed, 0.0, 2, 20.0, &seed, &it_opts).unwrap();
        assert!(iter.residual_norm < 1e-10);
        assert!((dense.lambda - iter.lambda).abs() < 1e-12);
        let d: Vec<f64> = dense
            .solution
            .coeffs()
            .iter()
            .zip(iter.solution.coeffs())
            .map(|(a, b)| a - b)
            .collect();
        assert!(norm(&d) < 1e-9);
    }

    #[test]
    fn pinned_linear_problem_stays_at_resonance() {
        let fam = MatrixFamily::diagonal(vec![Polynomial::from_terms(&[(0, 4.0), (1, 1.0)])]);
        let p = ProblemSpec::new("l", fam, Perturbation::None, IndexRule::Builtin, false).unwrap();
        let seed = FourierLoop::single_mode(&[1.0], 2, 8, 3.0);
        let rep = solve_pinned(&p, &seed, 0.3, 2, 5.0, &seed, &SolverOptions::default()).unwrap();
        assert!(rep.lambda.abs() < 1e-12);
        assert!((rep.solution.mode_norm(2) - 5.0).abs() < 1e-10);
    }
}
