//! Degrees of linear equivariant gradient maps, computed in closed form
//! from Morse indices of isotypic blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reps::{check_parts, RepDecomposition};
use crate::spectral::{eigen_sym, SymmetricMatrix};
use crate::udring::TomDieckElement;

pub use crate::problem::ind_infinity;

/// An isomorphism L = diag(L_0, …, L_r) described only by its isotypic
/// decomposition and the Morse index of each block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearBlockData {
    rep: RepDecomposition,
    block_morse: Vec<u32>,
}

impl LinearBlockData {
    pub fn new(rep: RepDecomposition, block_morse: Vec<u32>) -> Result<Self> {
        check_parts(rep.parts())?;
        if block_morse.len() != rep.parts().len() {
            return Err(Error::InvalidInput(format!(
                "{} Morse indices given for {} isotypic blocks",
                block_morse.len(),
                rep.parts().len()
            )));
        }
        for (&(j, k), &m) in rep.parts().iter().zip(&block_morse) {
            let dim = if k == 0 { j } else { 2 * j };
            if m > dim {
                return Err(Error::InvariantViolation(format!(
                    "Morse index {} exceeds dimension {} of the block with frequency {}",
                    m, dim, k
                )));
            }
            if k > 0 && m % 2 == 1 {
                return Err(Error::InvariantViolation(format!(
                    "odd Morse index {} on the complex block with frequency {}",
                    m, k
                )));
            }
        }
        Ok(Self { rep, block_morse })
    }

    /// L = −Id on `rep`.
    pub fn minus_identity(rep: RepDecomposition) -> Self {
        let block_morse = rep
            .parts()
            .iter()
            .map(|&(j, k)| if k == 0 { j } else { 2 * j })
            .collect();
        Self { rep, block_morse }
    }

    /// A positive definite isomorphism on `rep`.
    pub fn positive(rep: RepDecomposition) -> Self {
        let block_morse = vec![0; rep.parts().len()];
        Self { rep, block_morse }
    }

    pub fn rep(&self) -> &RepDecomposition {
        &self.rep
    }

    pub fn block_morse(&self) -> &[u32] {
        &self.block_morse
    }

    /// Block-diagonal concatenation L₁ ⊕ L₂; blocks of equal frequency merge.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut blocks: std::collections::BTreeMap<u32, (u32, u32)> = Default::default();
        for d in [self, other] {
            for (&(j, k), &m) in d.rep.parts().iter().zip(&d.block_morse) {
                let e = blocks.entry(k).or_insert((0, 0));
                e.0 += j;
                e.1 += m;
            }
        }
        Self {
            rep: RepDecomposition::new(blocks.iter().map(|(&k, &(j, _))| (j, k))),
            block_morse: blocks.values().map(|&(_, m)| m).collect(),
        }
    }
}

pub fn lin_deg(d: &LinearBlockData) -> Result<TomDieckElement> {
    let mut m0 = 0;
    for (&(_, k), &m) in d.rep.parts().iter().zip(&d.block_morse) {
        if k == 0 {
            m0 = m;
        } else if m % 2 == 1 {
            return Err(Error::InvariantViolation(format!(
                "odd Morse index {} on the complex block with frequency {}",
                m, k
            )));
        }
    }
    let sign: i64 = if m0 % 2 == 0 { 1 } else { -1 };
    TomDieckElement::new(
        sign,
        d.rep
            .parts()
            .iter()
            .zip(&d.block_morse)
            .filter(|(&(_, k), _)| k > 0)
            .map(|(&(_, k), &m)| (k, sign * (m / 2) as i64)),
    )
}

/// ∇-deg(Id − L_A, B_γ(H¹_2π)) for a nonresonant A: SO(2) coordinate
/// (−1)^{j_0(A)}, Z_k coordinate (−1)^{j_0(A)}·j_k(A).
#[allow(non_snake_case)]
pub fn deg_id_minus_LA(a: &SymmetricMatrix, tol: f64) -> Result<TomDieckElement> {
    let spec = eigen_sym(a, tol)?;
    let resonant = spec.square_resonances();
    if let Some(&(_, k)) = resonant.parts().first() {
        let target = (k as f64) * (k as f64);
        return Err(Error::Degenerate {
            eigenvalue: spec.nearest(target).unwrap_or(target),
            target,
            tol: spec.tol,
        });
    }
    let j0 = spec.j_k(0)?;
    let sign: i64 = if j0 % 2 == 0 { 1 } else { -1 };
    let mut coords = Vec::new();
    for k in 1..=spec.k_bound() {
        let jk = spec.j_k(k)?;
        if jk == 0 {
            break;
        }
        coords.push((k, sign * jk as i64));
    }
    TomDieckElement::new(sign, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::udring::{product, star};
    use proptest::prelude::*;

    fn rep(p: &[(u32, u32)]) -> RepDecomposition {
        RepDecomposition::new(p.iter().copied())
    }

    fn el(a0: i64, zk: &[(u32, i64)]) -> TomDieckElement {
        TomDieckElement::new(a0, zk.iter().copied()).unwrap()
    }

    #[test]
    fn minus_identity_examples() {
        let d = LinearBlockData::minus_identity(rep(&[(2, 0), (3, 5)]));
        assert_eq!(d.block_morse(), &[2, 6]);
        assert_eq!(lin_deg(&d).unwrap(), el(1, &[(5, 3)]));
        let d = LinearBlockData::minus_identity(rep(&[(1, 0), (2, 3)]));
        assert_eq!(lin_deg(&d).unwrap(), el(-1, &[(3, -2)]));
        let d = LinearBlockData::positive(rep(&[(1, 0), (4, 2), (1, 7)]));
        assert_eq!(lin_deg(&d).unwrap(), TomDieckElement::unit());
    }

    #[test]
    fn odd_complex_morse_rejected() {
        assert!(matches!(
            LinearBlockData::new(rep(&[(2, 3)]), vec![3]),
            Err(Error::InvariantViolation(_))
        ));
        assert!(LinearBlockData::new(rep(&[(2, 0)]), vec![3]).is_err());
        assert!(LinearBlockData::new(rep(&[(2, 0)]), vec![1, 1]).is_err());
    }

    #[test]
    fn degree_of_id_minus_la() {
        let neg = SymmetricMatrix::from_diag(&[-1.0, -3.0]);
        assert_eq!(deg_id_minus_LA(&neg, 1e-9).unwrap(), TomDieckElement::unit());

        let a = SymmetricMatrix::from_diag(&[4.5, 2.0, 2.0, 2.0]);
        assert_eq!(deg_id_minus_LA(&a, 1e-9).unwrap(), el(1, &[(1, 4), (2, 1)]));

        let s = 10f64.sqrt();
        let a = SymmetricMatrix::from_diag(&[4.5, -1.0 - s, 9.5, -1.0 + s, 25.5]);
        assert_eq!(
            deg_id_minus_LA(&a, 1e-9).unwrap(),
            el(1, &[(1, 4), (2, 3), (3, 2), (4, 1), (5, 1)])
        );

        let resonant = SymmetricMatrix::from_diag(&[4.0, 1.5]);
        assert!(matches!(
            deg_id_minus_LA(&resonant, 1e-9),
            Err(Error::Degenerate { target, .. }) if target == 4.0
        ));
    }

    #[test]
    fn index_at_infinity_examples() {
        let a = SymmetricMatrix::from_diag(&[2.0, 3.0]);
        assert_eq!(ind_infinity(&a, 2, 1e-9).unwrap(), 1);
        let a = SymmetricMatrix::from_diag(&[-2.0, -3.0, -1.0]);
        assert_eq!(ind_infinity(&a, 3, 1e-9).unwrap(), 1);
        let s2 = 2f64.sqrt();
        let a = SymmetricMatrix::from_diag(&[0.0, s2 + 1.0, 1.0 - s2, 5f64.sqrt() + 1.0]);
        assert_eq!(ind_infinity(&a, 4, 1e-9).unwrap(), -1);
    }

    /// The degree of Id − L_A on H¹_2π as a product over eigenspaces of
    /// L_A with eigenvalue above 1. On the mode-k subspace L_A acts as
    /// (Id + A)/(1 + k²); each eigenspace is R[μ, k] and contributes the
    /// degree of −Id on it.
    fn eigenspace_product_oracle(diag: &[f64]) -> TomDieckElement {
        let kmax = diag.iter().fold(0.0f64, |m, &a| m.max(a)).max(0.0).sqrt() as u32 + 1;
        let mut spaces: Vec<(f64, Vec<(u32, u32)>)> = Vec::new();
        for k in 0..=kmax {
            for &alpha in diag {
                let ev = (1.0 + alpha) / (1.0 + (k * k) as f64);
                if ev <= 1.0 {
                    continue;
                }
                match spaces.iter_mut().find(|(v, _)| (v - ev).abs() < 1e-12) {
                    Some((_, parts)) => parts.push((1, k)),
                    None => spaces.push((ev, vec![(1, k)])),
                }
            }
        }
        let degs: Vec<TomDieckElement> = spaces
            .into_iter()
            .map(|(_, parts)| {
                lin_deg(&LinearBlockData::minus_identity(RepDecomposition::new(parts))).unwrap()
            })
            .collect();
        product(&degs).unwrap()
    }

    #[test]
    fn closed_form_matches_eigenspace_product_on_examples() {
        let s = 10f64.sqrt();
        for diag in [
            vec![4.5, 2.0, 2.0, 2.0],
            vec![3.5, 2.0, 2.0, 2.0],
            vec![4.5, -1.0 - s, 9.5, -1.0 + s, 25.5],
            vec![-3.0],
        ] {
            let a = SymmetricMatrix::from_diag(&diag);
            assert_eq!(deg_id_minus_LA(&a, 1e-9).unwrap(), eigenspace_product_oracle(&diag));
        }
    }

    fn arb_block() -> impl Strategy<Value = LinearBlockData> {
        proptest::collection::vec((1u32..4, 0u32..8, 0u32..=100), 0..5).prop_map(|raw| {
            let rep = RepDecomposition::new(raw.iter().map(|&(j, k, _)| (j, k)));
            let morse = rep
                .parts()
                .iter()
                .map(|&(j, k)| {
                    let seed = raw.iter().find(|r| r.1 == k).map(|r| r.2).unwrap_or(0);
                    if k == 0 {
                        seed % (j + 1)
                    } else {
                        2 * (seed % (j + 1))
                    }
                })
                .collect();
            LinearBlockData::new(rep, morse).unwrap()
        })
    }

    proptest! {
        #[test]
        fn product_formula(d1 in arb_block(), d2 in arb_block()) {
            let lhs = lin_deg(&d1.direct_sum(&d2)).unwrap();
            let rhs = star(&lin_deg(&d1).unwrap(), &lin_deg(&d2).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn suspension(d in arb_block(), extra in proptest::collection::vec((1u32..4, 0u32..8), 0..4)) {
            let pos = LinearBlockData::positive(RepDecomposition::new(extra));
            prop_assert_eq!(lin_deg(&d.direct_sum(&pos)).unwrap(), lin_deg(&d).unwrap());
        }

        #[test]
        fn collapsed_form_matches_oracle(diag in proptest::collection::vec(-30.0f64..60.0, 1..6)) {
            let a = SymmetricMatrix::from_diag(&diag);
            if let Ok(deg) = deg_id_minus_LA(&a, 1e-9) {
                prop_assert_eq!(deg, eigenspace_product_oracle(&diag));
            }
        }

        #[test]
        fn so2_coordinate_flips_when_an_eigenvalue_crosses_zero(x in 0.01f64..5.0, rest in proptest::collection::vec(0.1f64..0.9, 0..4)) {
            let mut below = vec![-x];
            below.extend(&rest);
            let mut above = vec![x];
            above.extend(&rest);
            let d1 = deg_id_minus_LA(&SymmetricMatrix::from_diag(&below), 1e-9).unwrap();
            let d2 = deg_id_minus_LA(&SymmetricMatrix::from_diag(&above), 1e-9);
            if let Ok(d2) = d2 {
                prop_assert_eq!(d1.so2(), -d2.so2());
            }
        }
    }
}
