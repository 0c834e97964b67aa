//! Following a branch of 2π-periodic solutions from a resonance point out
//! toward infinity, parameterized by the amplitude of the resonant mode.

use std::collections::BTreeSet;
use std::io::{self, Write};

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fourier::FourierLoop;
use super::solver::{solve_pinned, SolverOptions};
use super::transform::{default_nodes, Transform};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::resonance::ResonancePoint;
use crate::spectral::jacobi_eigen;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Starting truncation order.
    pub modes: usize,
    /// Truncation is doubled up to this order while the spectral tail is
    /// above `tail_tol` or the energy varies by more than `energy_tol`.
    pub max_modes: usize,
    pub tail_tol: f64,
    pub energy_tol: f64,
    pub solver: SolverOptions,
    /// Relative mode-energy threshold for active modes and periods.
    pub period_threshold: f64,
    /// Allowed |λ(R) − λ₀| before a divergence warning.
    pub drift_window: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            modes: 32,
            max_modes: 4096,
            tail_tol: 1e-10,
            energy_tol: 1e-9,
            solver: SolverOptions::default(),
            period_threshold: 1e-8,
            drift_window: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    #[serde(rename = "loop")]
    pub solution: FourierLoop,
    pub lambda: f64,
    /// Norm of the pinned mode block.
    pub amplitude: f64,
    /// sup_t ‖u(t)‖ on the collocation grid.
    pub sup_norm: f64,
    pub residual_norm: f64,
    pub active_modes: BTreeSet<u32>,
    pub min_period_divisor: u64,
    /// Relative variation of ½‖u̇‖² + V along the loop, when V is known.
    pub energy_variation: Option<f64>,
    pub tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchFailure {
    pub amplitude: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub lambda0: f64,
    pub k0: u32,
    /// Kernel direction of A(λ₀) seeding the branch.
    pub direction: Vec<f64>,
    pub points: Vec<BranchPoint>,
    pub failure: Option<BranchFailure>,
    /// sup |λ(R) − λ₀| over the second half of the converged points.
    pub tail_drift: f64,
    pub warnings: Vec<String>,
}

/// Modes k ≥ 1 carrying more than `rel_threshold` of the nonconstant energy.
pub fn active_modes(lp: &FourierLoop, rel_threshold: f64) -> BTreeSet<u32> {
    let energies: Vec<f64> = (1..=lp.modes()).map(|k| lp.mode_energy(k)).collect();
    let total: f64 = energies.iter().sum();
    if total == 0.0 {
        return BTreeSet::new();
    }
    energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > rel_threshold * total)
        .map(|(i, _)| i as u32 + 1)
        .collect()
}

/// gcd of the active modes; 0 for a constant loop.
pub fn minimal_period_divisor(lp: &FourierLoop, rel_threshold: f64) -> u64 {
    active_modes(lp, rel_threshold)
        .iter()
        .fold(0u64, |g, &k| g.gcd(&(k as u64)))
}

/// 2π/gcd of the active modes, or 0 for a constant loop.
pub fn minimal_period(lp: &FourierLoop, rel_threshold: f64) -> f64 {
    match minimal_period_divisor(lp, rel_threshold) {
        0 => 0.0,
        g => 2.0 * std::f64::consts::PI / g as f64,
    }
}

/// (max E − min E)/max|E| for E = ½‖u̇‖² + V(u, λ) on `nodes` points.
pub fn energy_variation(lp: &FourierLoop, lambda: f64, p: &ProblemSpec, nodes: usize) -> Result<Option<f64>> {
    let n = lp.dim();
    let tr = Transform::new(n, lp.modes(), nodes)?;
    let x = tr.synthesize(lp.coeffs());
    let v = tr.synthesize(lp.derivative().coeffs());
    let mut es = Vec::with_capacity(nodes);
    for (xj, vj) in x.chunks_exact(n).zip(v.chunks_exact(n)) {
        let Some(pot) = p.potential(xj, lambda) else {
            return Ok(None);
        };
        es.push(0.5 * vj.iter().map(|a| a * a).sum::<f64>() + pot);
    }
    let max = es.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = es.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = es.iter().map(|e| e.abs()).fold(0.0, f64::max);
    Ok(Some(if scale == 0.0 { 0.0 } else { (max - min) / scale }))
}

/// Share of the H¹-weighted coefficient mass in the top eighth of the modes.
pub fn spectral_tail(lp: &FourierLoop) -> f64 {
    let modes = lp.modes();
    let cut = modes - modes / 8;
    let mut total = 0.0;
    let mut tail = 0.0;
    for k in 1..=modes {
        let w = (k * k) as f64 * lp.mode_energy(k);
        total += w;
        if k > cut {
            tail += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (tail / total).sqrt()
    }
}

/// Unit eigenvectors of A(λ₀) for the eigenvalue k₀².
pub fn kernel_directions(p: &ProblemSpec, lambda0: f64, k0: u32, tol: f64) -> Result<Vec<Vec<f64>>> {
    let a = p.linearization(lambda0);
    let eig = jacobi_eigen(&a)?;
    let target = (k0 as f64).powi(2);
    let slack = tol.max(1e-6) * a.frobenius_norm().max(1.0);
    let dirs: Vec<Vec<f64>> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(v, _)| (*v - target).abs() <= slack)
        .map(|(_, vec)| canonical_sign(vec.clone()))
        .collect();
    if dirs.is_empty() {
        return Err(Error::Precondition(format!(
            "A({}) has no eigenvalue {} within {:e}",
            lambda0, target, slack
        )));
    }
    Ok(dirs)
}

/// Flips a vector so its largest entry is positive.
fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let lead = v.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// One branch per kernel direction at the resonance's dominant frequency,
/// solved independently and returned in eigenvector order.
pub fn continue_to_infinity(
    p: &ProblemSpec,
    r: &ResonancePoint,
    amplitudes: &[f64],
    opts: &ContinuationOptions,
) -> Result<Vec<Branch>> {
    let k0 = r.dominant_frequency().ok_or_else(|| {
        Error::Precondition(format!(
            "resonance at lambda = {} has no positive frequency",
            r.lambda0
        ))
    })?;
    let dirs = kernel_directions(p, r.lambda0, k0, opts.solver.tol.max(1e-9))?;
    dirs.par_iter()
        .map(|v| continue_branch(p, r.lambda0, k0, v, amplitudes, opts))
        .collect()
}

/// Branch seeded by R·v·cos(k₀t) at λ₀ for the first amplitude and by the
/// rescaled previous solution afterwards.
pub fn continue_branch(
    p: &ProblemSpec,
    lambda0: f64,
    k0: u32,
    v: &[f64],
    amplitudes: &[f64],
    opts: &ContinuationOptions,
) -> Result<Branch> {
    if v.len() != p.dim() {
        return Err(Error::InvalidInput("seed direction has the wrong dimension".into()));
    }
    if amplitudes.windows(2).any(|w| !(w[0] < w[1])) || amplitudes.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidInput("amplitudes must be positive and increasing".into()));
    }
    let k = k0 as usize;
    let mut branch = Branch {
        lambda0,
        k0,
        direction: v.to_vec(),
        points: Vec::new(),
        failure: None,
        tail_drift: 0.0,
        warnings: Vec::new(),
    };
    let mut modes = opts.modes.max(2 * k);
    let mut prev: Option<(FourierLoop, f64, f64)> = None;
    for &radius in amplitudes {
        let (seed, lambda_seed) = match &prev {
            None => (FourierLoop::single_mode(v, k, modes, radius), lambda0),
            Some((u, l, r_prev)) => (u.scaled(radius / r_prev), *l),
        };
        match solve_adaptive(p, seed, lambda_seed, k, radius, &mut modes, opts) {
            Ok(pt) => {
                prev = Some((pt.solution.clone(), pt.lambda, radius));
                branch.points.push(pt);
            }
            Err(e) => {
                branch.failure = Some(BranchFailure {
                    amplitude: radius,
                    message: e.to_string(),
                });
                break;
            }
        }
    }

    let drifts: Vec<f64> = branch.points.iter().map(|pt| (pt.lambda - lambda0).abs()).collect();
    let half = drifts.len() / 2;
    branch.tail_drift = drifts[half..].iter().cloned().fold(0.0, f64::max);
    if let Some(pt) = branch.points.iter().find(|pt| (pt.lambda - lambda0).abs() > opts.drift_window) {
        branch.warnings.push(format!(
            "lambda drift {:.3e} at amplitude {} exceeds the window {}",
            (pt.lambda - lambda0).abs(),
            pt.amplitude,
            opts.drift_window
        ));
    }
    let tail = &drifts[drifts.len().saturating_sub(3)..];
    if tail.windows(2).any(|w| w[1] > w[0]) {
        branch
            .warnings
            .push("lambda drift is not monotone over the last amplitudes".into());
    }
    Ok(branch)
}

fn solve_adaptive(
    p: &ProblemSpec,
    seed: FourierLoop,
    lambda_seed: f64,
    k0: usize,
    radius: f64,
    modes: &mut usize,
    opts: &ContinuationOptions,
) -> Result<BranchPoint> {
    let mut seed = seed.resized(*modes);
    let mut lambda = lambda_seed;
    loop {
        let rep = solve_pinned(p, &seed, lambda, k0, radius, &seed, &opts.solver)?;
        let tail = spectral_tail(&rep.solution);
        let nodes = default_nodes(rep.solution.modes());
        let energy = energy_variation(&rep.solution, rep.lambda, p, nodes)?;
        let unresolved = tail > opts.tail_tol || energy.is_some_and(|e| e > opts.energy_tol);
        if unresolved && 2 * *modes <= opts.max_modes {
            *modes *= 2;
            seed = rep.solution.resized(*modes);
            lambda = rep.lambda;
            continue;
        }
        let u = rep.solution;
        return Ok(BranchPoint {
            lambda: rep.lambda,
            amplitude: u.mode_norm(k0),
            sup_norm: u.amplitude(nodes),
            residual_norm: rep.residual_norm,
            active_modes: active_modes(&u, opts.period_threshold),
            min_period_divisor: minimal_period_divisor(&u, opts.period_threshold),
            energy_variation: energy,
            tail,
            solution: u,
        });
    }
}

/// CSV with one row per branch point: lambda, amplitude, residual_norm,
/// min_period_divisor, then the coefficients c_<block>_<component> in the
/// flat layout (block 0 constant, 2k−1 cos kt, 2k sin kt). Rows of shorter
/// truncations are zero-padded to the widest one.
pub fn write_csv<W: Write>(branch: &Branch, mut w: W) -> io::Result<()> {
    let n = branch.direction.len();
    let modes = branch.points.iter().map(|pt| pt.solution.modes()).max().unwrap_or(0);
    write!(w, "lambda,amplitude,residual_norm,min_period_divisor")?;
    for b in 0..2 * modes + 1 {
        for i in 0..n {
            write!(w, ",c_{}_{}", b, i)?;
        }
    }
    writeln!(w)?;
    for pt in &branch.points {
        write!(
            w,
            "{:.16e},{:.16e},{:.16e},{}",
            pt.lambda, pt.amplitude, pt.residual_norm, pt.min_period_divisor
        )?;
        for c in pt.solution.resized(modes).coeffs() {
            write!(w, ",{:.16e}", c)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{MatrixFamily, Polynomial};
    use crate::problem::{IndexRule, KeplerScale, Perturbation};
    use std::f64::consts::PI;

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
    fn periods_of_simple_loops() {
        let c = FourierLoop::from_parts(&[1.0, 2.0], &vec![vec![0.0; 2]; 3], &vec![vec![0.0; 2]; 3]).unwrap();
        assert_eq!(minimal_period(&c, 1e-8), 0.0);
        let u = FourierLoop::single_mode(&[1.0, 0.0], 2, 5, 1.0);
        assert_eq!(minimal_period(&u, 1e-8), PI);
        let mut w = u.clone();
        w.asin_mut(3)[1] = 0.5;
        assert_eq!(minimal_period_divisor(&w, 1e-8), 1);
        assert_eq!(minimal_period(&w, 1e-8), 2.0 * PI);
        let mut z = FourierLoop::single_mode(&[1.0], 4, 8, 1.0);
        z.acos_mut(6)[0] = 0.1;
        assert_eq!(minimal_period_divisor(&z, 1e-8), 2);
    }

    #[test]
    fn linear_branch_stays_at_resonance() {
        let fam = MatrixFamily::diagonal(vec![Polynomial::from_terms(&[(0, 4.0), (1, 1.0)])]);
        let p = ProblemSpec::new("l", fam, Perturbation::None, IndexRule::Builtin, false).unwrap();
        let b = continue_branch(&p, 0.0, 2, &[1.0], &[1.0, 5.0, 25.0], &ContinuationOptions::default()).unwrap();
        assert!(b.failure.is_none());
        assert_eq!(b.points.len(), 3);
        for pt in &b.points {
            assert!(pt.lambda.abs() < 1e-12);
            assert_eq!(pt.min_period_divisor, 2);
        }
    }

    #[test]
    fn constant_linear_problem_gives_exact_branch() {
        let fam = MatrixFamily::diagonal(vec![Polynomial::constant(4.0)]);
        let p = ProblemSpec::new("c", fam, Perturbation::None, IndexRule::Builtin, false).unwrap();
        let b = continue_branch(&p, 0.0, 2, &[1.0], &[1.0, 3.0, 9.0], &ContinuationOptions::default()).unwrap();
        assert!(b.failure.is_none());
        assert!(b.points.iter().all(|pt| pt.lambda == 0.0 && pt.residual_norm < 1e-12));
    }

    #[test]
    fn example2_branch_drifts_back() {
        let p = example2();
        let opts = ContinuationOptions::default();
        let b = continue_branch(&p, 0.0, 2, &[1.0, 0.0, 0.0, 0.0], &[10.0, 20.0, 40.0], &opts).unwrap();
        assert!(b.failure.is_none(), "{:?}", b.failure);
        for pt in &b.points {
            assert!(pt.residual_norm < 1e-9);
            assert_eq!(pt.min_period_divisor, 2);
            assert!(pt.energy_variation.unwrap() < 1e-8, "{:?}", pt.energy_variation);
        }
        assert!(b.points[2].lambda.abs() < b.points[0].lambda.abs());
    }

    #[test]
    fn truncation_doubling_changes_little() {
        let p = example2();
        let opts = ContinuationOptions {
            tail_tol: f64::INFINITY,
            ..ContinuationOptions::default()
        };
        let seed = FourierLoop::single_mode(&[1.0, 0.0, 0.0, 0.0], 2, 64, 5.0);
        let a = solve_pinned(&p, &seed, 0.0, 2, 5.0, &seed, &opts.solver).unwrap();
        let seed2 = a.solution.resized(128);
        let b = solve_pinned(&p, &seed2, a.lambda, 2, 5.0, &seed2, &opts.solver).unwrap();
        let diff = a
            .solution
            .resized(128)
            .coeffs()
            .iter()
            .zip(b.solution.coeffs())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-6, "{:e}", diff);
    }

    #[test]
    fn csv_layout() {
        let fam = MatrixFamily::diagonal(vec![Polynomial::from_terms(&[(0, 4.0), (1, 1.0)])]);
        let p = ProblemSpec::new("l", fam, Perturbation::None, IndexRule::Builtin, false).unwrap();
        let opts = ContinuationOptions {
            modes: 2,
            ..ContinuationOptions::default()
        };
        let b = continue_branch(&p, 0.0, 2, &[1.0], &[1.0, 2.0], &opts).unwrap();
        let mut out = Vec::new();
        write_csv(&b, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 4 + 9);
        assert!(lines[0].starts_with("lambda,amplitude,residual_norm,min_period_divisor,c_0_0"));
        let row: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(row[3], "2");
        assert_eq!(row[1].parse::<f64>().unwrap(), 2.0);
    }
}
