//! Parameterized Hamiltonian problems ü = −∇V(u, λ) with
//! V(x, λ) = ½(A(λ)x, x) + η(x, λ).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::MatrixFamily;
use crate::spectral::{eigen_sym, SymmetricMatrix};

/// Coefficient in front of the Kepler-like term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeplerScale {
    Constant,
    LambdaSquared,
}

impl KeplerScale {
    fn value(self, lambda: f64) -> f64 {
        match self {
            KeplerScale::Constant => 1.0,
            KeplerScale::LambdaSquared => lambda * lambda,
        }
    }

    fn derivative(self, lambda: f64) -> f64 {
        match self {
            KeplerScale::Constant => 0.0,
            KeplerScale::LambdaSquared => 2.0 * lambda,
        }
    }
}

/// ∇η supplied by the caller: `(x, λ, out)`.
pub type GradientFn = dyn Fn(&[f64], f64, &mut [f64]) -> Result<()> + Send + Sync;

#[derive(Clone)]
pub enum Perturbation {
    None,
    /// η(x, λ) = −s(λ) / √(‖x‖² + a).
    Kepler { a: f64, scale: KeplerScale },
    User(Arc<GradientFn>),
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::None => write!(f, "None"),
            Perturbation::Kepler { a, scale } => {
                write!(f, "Kepler {{ a: {:?}, scale: {:?} }}", a, scale)
            }
            Perturbation::User(_) => write!(f, "User(<gradient>)"),
        }
    }
}

/// How ind(−∇V(·, λ), ∞) is obtained at the interval endpoints.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexRule {
    /// (−1)^{n − m⁻(A(λ))}, valid for the built-in potential class.
    Builtin,
    /// Values supplied per λ.
    UserValues(Vec<(f64, i64)>),
    Unavailable,
}

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub name: String,
    pub family: MatrixFamily,
    pub perturbation: Perturbation,
    pub index_rule: IndexRule,
    /// V(x, λ) = λ²·V(x): the family must then be constant.
    pub scaled: bool,
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        family: MatrixFamily,
        perturbation: Perturbation,
        index_rule: IndexRule,
        scaled: bool,
    ) -> Result<Self> {
        if let Perturbation::Kepler { a, .. } = perturbation {
            if !(a > 0.0) {
                return Err(Error::Domain(format!(
                    "Kepler parameter a must be positive, got {}",
                    a
                )));
            }
        }
        if scaled && !family.is_constant() {
            return Err(Error::InvalidInput(
                "scaled problems take a constant matrix".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            family,
            perturbation,
            index_rule,
            scaled,
        })
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    fn lambda_factor(&self, lambda: f64) -> f64 {
        if self.scaled {
            lambda * lambda
        } else {
            1.0
        }
    }

    /// The matrix of the linearization at infinity at λ.
    pub fn linearization(&self, lambda: f64) -> SymmetricMatrix {
        let a = self.family.eval(lambda);
        if self.scaled {
            a.scaled(lambda * lambda)
        } else {
            a
        }
    }

    /// The family λ ↦ linearization(λ) as polynomials.
    pub fn effective_family(&self) -> MatrixFamily {
        if self.scaled {
            self.family.shift(2)
        } else {
            self.family.clone()
        }
    }

    pub fn has_hessian(&self) -> bool {
        !matches!(self.perturbation, Perturbation::User(_))
    }

    /// ∇ₓV(x, λ).
    pub fn gradient(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        let base = self.family.eval(lambda);
        let f = self.lambda_factor(lambda);
        for i in 0..n {
            out[i] = (0..n).map(|j| base.get(i, j) * x[j]).sum::<f64>();
        }
        match &self.perturbation {
            Perturbation::None => {}
            Perturbation::Kepler { a, scale } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let s = scale.value(lambda) / (r2 + a).powf(1.5);
                for i in 0..n {
                    out[i] += s * x[i];
                }
            }
            Perturbation::User(g) => {
                let mut extra = vec![0.0; n];
                g(x, lambda, &mut extra)?;
                if extra.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("user gradient returned a non-finite value".into()));
                }
                for i in 0..n {
                    out[i] += extra[i];
                }
            }
        }
        if f != 1.0 {
            out.iter_mut().for_each(|v| *v *= f);
        }
        Ok(())
    }

    /// ∇²ₓV(x, λ), row-major, for the built-in potentials.
    pub fn hessian(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Option<()> {
        let n = self.dim();
        let base = self.family.eval(lambda);
        out[..n * n].copy_from_slice(base.entries());
        match &self.perturbation {
            Perturbation::None => {}
            Perturbation::Kepler { a, scale } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let d = r2 + a;
                let s = scale.value(lambda);
                let c1 = s / d.powf(1.5);
                let c2 = 3.0 * s / d.powf(2.5);
                for i in 0..n {
                    out[i * n + i] += c1;
                    for j in 0..n {
                        out[i * n + j] -= c2 * x[i] * x[j];
                    }
                }
            }
            Perturbation::User(_) => return None,
        }
        let f = self.lambda_factor(lambda);
        if f != 1.0 {
            out[..n * n].iter_mut().for_each(|v| *v *= f);
        }
        Some(())
    }

    /// ∂_λ ∇ₓV(x, λ).
    pub fn gradient_lambda_derivative(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        match &self.perturbation {
            Perturbation::User(_) => {
                let h = 1e-7 * (1.0 + lambda.abs());
                let mut gp = vec![0.0; n];
                let mut gm = vec![0.0; n];
                self.gradient(x, lambda + h, &mut gp)?;
                self.gradient(x, lambda - h, &mut gm)?;
                for i in 0..n {
                    out[i] = (gp[i] - gm[i]) / (2.0 * h);
                }
                Ok(())
            }
            _ => {
                let base = self.family.eval(lambda);
                let dbase = self.family.derivative().eval(lambda);
                let mut unscaled = vec![0.0; n];
                let mut dunscaled = vec![0.0; n];
                for i in 0..n {
                    unscaled[i] = (0..n).map(|j| base.get(i, j) * x[j]).sum::<f64>();
                    dunscaled[i] = (0..n).map(|j| dbase.get(i, j) * x[j]).sum::<f64>();
                }
                if let Perturbation::Kepler { a, scale } = &self.perturbation {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let d = (r2 + a).powf(1.5);
                    for i in 0..n {
                        unscaled[i] += scale.value(lambda) * x[i] / d;
                        dunscaled[i] += scale.derivative(lambda) * x[i] / d;
                    }
                }
                if self.scaled {
                    for i in 0..n {
                        out[i] = 2.0 * lambda * unscaled[i] + lambda * lambda * dunscaled[i];
                    }
                } else {
                    out[..n].copy_from_slice(&dunscaled);
                }
                Ok(())
            }
        }
    }

    /// V(x, λ) for the built-in potentials.
    pub fn potential(&self, x: &[f64], lambda: f64) -> Option<f64> {
        let base = self.family.eval(lambda);
        let quad = 0.5
            * x.iter()
                .zip(base.mul_vec(x))
                .map(|(a, b)| a * b)
                .sum::<f64>();
        let eta = match &self.perturbation {
            Perturbation::None => 0.0,
            Perturbation::Kepler { a, scale } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                -scale.value(lambda) / (r2 + a).sqrt()
            }
            Perturbation::User(_) => return None,
        };
        Some(self.lambda_factor(lambda) * (quad + eta))
    }

    /// ind(−∇ₓV(·, λ), ∞) according to the problem's index rule.
    pub fn index_at_infinity(&self, lambda: f64, tol: f64) -> Result<i64> {
        match &self.index_rule {
            IndexRule::Unavailable => Err(Error::MissingIndex(format!(
                "problem '{}' declares no index at infinity",
                self.name
            ))),
            IndexRule::UserValues(vals) => vals
                .iter()
                .find(|(l, _)| (l - lambda).abs() <= tol.max(1e-12) * (1.0 + lambda.abs()))
                .map(|&(_, v)| v)
                .ok_or_else(|| {
                    Error::MissingIndex(format!("no user index supplied for lambda = {}", lambda))
                }),
            IndexRule::Builtin => {
                let a = self.linearization(lambda);
                let spec = eigen_sym(&a, tol)?;
                match self.perturbation {
                    Perturbation::Kepler { .. } => {}
                    Perturbation::None => {
                        if spec.multiplicity_of(0.0) > 0 {
                            return Err(Error::MissingIndex(format!(
                                "linear problem is singular at lambda = {}",
                                lambda
                            )));
                        }
                    }
                    Perturbation::User(_) => {
                        return Err(Error::MissingIndex(
                            "built-in index formula does not cover user perturbations".into(),
                        ))
                    }
                }
                ind_infinity(&a, self.dim(), tol)
            }
        }
    }
}

/// (−1)^{n − m⁻(A)}.
pub fn ind_infinity(a: &SymmetricMatrix, n: usize, tol: f64) -> Result<i64> {
    let m = eigen_sym(a, tol)?.morse_index(false)? as usize;
    if m > n {
        return Err(Error::InvalidInput("Morse index exceeds dimension".into()));
    }
    Ok(if (n - m) % 2 == 0 { 1 } else { -1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Polynomial;

    fn kepler(scale: KeplerScale, scaled: bool) -> ProblemSpec {
        let fam = MatrixFamily::new(
            2,
            vec![
                Polynomial::from_terms(&[(0, 2.0), (1, 1.0)]),
                Polynomial::constant(0.5),
                Polynomial::constant(0.5),
                Polynomial::from_terms(&[(2, -1.0)]),
            ],
        )
        .unwrap();
        let fam = if scaled {
            MatrixFamily::new(
                2,
                vec![
                    Polynomial::constant(2.0),
                    Polynomial::constant(0.5),
                    Polynomial::constant(0.5),
                    Polynomial::constant(-1.0),
                ],
            )
            .unwrap()
        } else {
            fam
        };
        ProblemSpec::new("t", fam, Perturbation::Kepler { a: 1.5, scale }, IndexRule::Builtin, scaled)
            .unwrap()
    }

    fn fd_check(p: &ProblemSpec) {
        let x = [0.3, -0.7];
        let lam = 0.8;
        let h = 1e-6;
        let mut g = [0.0; 2];
        p.gradient(&x, lam, &mut g).unwrap();
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.potential(&xp, lam).unwrap() - p.potential(&xm, lam).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "grad {} {} {}", i, fd, g[i]);
        }
        let mut hess = [0.0; 4];
        p.hessian(&x, lam, &mut hess).unwrap();
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let mut gp = [0.0; 2];
            let mut gm = [0.0; 2];
            p.gradient(&xp, lam, &mut gp).unwrap();
            p.gradient(&xm, lam, &mut gm).unwrap();
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((fd - hess[i * 2 + j]).abs() < 1e-7);
            }
        }
        let mut dl = [0.0; 2];
        p.gradient_lambda_derivative(&x, lam, &mut dl).unwrap();
        let mut gp = [0.0; 2];
        let mut gm = [0.0; 2];
        p.gradient(&x, lam + h, &mut gp).unwrap();
        p.gradient(&x, lam - h, &mut gm).unwrap();
        for i in 0..2 {
            assert!(((gp[i] - gm[i]) / (2.0 * h) - dl[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        fd_check(&kepler(KeplerScale::Constant, false));
        fd_check(&kepler(KeplerScale::LambdaSquared, false));
        fd_check(&kepler(KeplerScale::Constant, true));
    }

    #[test]
    fn kepler_hessian_at_origin_adds_identity() {
        let p = ProblemSpec::new(
            "k",
            MatrixFamily::constant(&SymmetricMatrix::from_diag(&[4.0, 2.0])),
            Perturbation::Kepler { a: 1.0, scale: KeplerScale::Constant },
            IndexRule::Builtin,
            false,
        )
        .unwrap();
        let mut h = [0.0; 4];
        p.hessian(&[0.0, 0.0], 0.0, &mut h).unwrap();
        assert_eq!(h, [5.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn kepler_requires_positive_a() {
        let r = ProblemSpec::new(
            "k",
            MatrixFamily::constant(&SymmetricMatrix::identity(1)),
            Perturbation::Kepler { a: 0.0, scale: KeplerScale::Constant },
            IndexRule::Builtin,
            false,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn ind_infinity_examples() {
        let r2 = 2f64.sqrt();
        let a = SymmetricMatrix::from_diag(&[0.0, r2 + 1.0, 1.0 - r2, 5f64.sqrt() + 1.0]);
        assert_eq!(ind_infinity(&a, 4, 1e-9).unwrap(), -1);
        assert_eq!(ind_infinity(&SymmetricMatrix::from_diag(&[1.0, 2.0]), 2, 1e-9).unwrap(), 1);
        assert_eq!(
            ind_infinity(&SymmetricMatrix::from_diag(&[-1.0, -2.0, -3.0]), 3, 1e-9).unwrap(),
            1
        );
    }

    #[test]
    fn index_rules() {
        let mut p = ProblemSpec::new(
            "lin",
            MatrixFamily::constant(&SymmetricMatrix::from_diag(&[0.0, 2.0])),
            Perturbation::None,
            IndexRule::Builtin,
            false,
        )
        .unwrap();
        assert!(matches!(p.index_at_infinity(0.0, 1e-9), Err(Error::MissingIndex(_))));
        p.index_rule = IndexRule::Unavailable;
        assert!(matches!(p.index_at_infinity(0.0, 1e-9), Err(Error::MissingIndex(_))));
        p.index_rule = IndexRule::UserValues(vec![(0.0, 3), (1.0, -1)]);
        assert_eq!(p.index_at_infinity(1.0, 1e-9).unwrap(), -1);
        assert!(p.index_at_infinity(0.5, 1e-9).is_err());
        p.perturbation = Perturbation::User(Arc::new(|_, _, out: &mut [f64]| {
            out.fill(0.0);
            Ok(())
        }));
        p.index_rule = IndexRule::Builtin;
        assert!(matches!(p.index_at_infinity(1.0, 1e-9), Err(Error::MissingIndex(_))));
    }
}
