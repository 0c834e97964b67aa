//! Finite-dimensional SO(2)-representations up to equivalence.
//!
//! Every such representation is a direct sum of R[j, k]: j copies of the
//! irreducible on which SO(2) acts with frequency k (k = 0 is the trivial
//! summand, real dimension j; k ≥ 1 has real dimension 2j).

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spectral::SymmetricMatrix;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RepDecomposition {
    parts: Vec<(u32, u32)>,
}

impl RepDecomposition {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a decomposition from `(multiplicity, frequency)` pairs in any
    /// order. Pairs with equal frequency are merged; zero multiplicities
    /// are dropped.
    pub fn new<I>(parts: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut merged: std::collections::BTreeMap<u32, u32> = Default::default();
        for (j, k) in parts {
            if j > 0 {
                *merged.entry(k).or_insert(0) += j;
            }
        }
        Self {
            parts: merged.into_iter().map(|(k, j)| (j, k)).collect(),
        }
    }

    /// `(multiplicity, frequency)` pairs with strictly increasing frequency.
    pub fn parts(&self) -> &[(u32, u32)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.parts
            .iter()
            .map(|&(j, k)| if k == 0 { j as usize } else { 2 * j as usize })
            .sum()
    }

    pub fn frequencies(&self) -> impl Iterator<Item = u32> + '_ {
        self.parts.iter().map(|&(_, k)| k)
    }

    pub fn multiplicity(&self, k: u32) -> u32 {
        self.parts
            .iter()
            .find(|&&(_, kk)| kk == k)
            .map(|&(j, _)| j)
            .unwrap_or(0)
    }

    pub fn has_trivial_part(&self) -> bool {
        self.parts.first().is_some_and(|&(_, k)| k == 0)
    }

    /// Direct sum.
    pub fn direct_sum(&self, other: &Self) -> Self {
        Self::new(self.parts.iter().chain(other.parts.iter()).copied())
    }
}

impl fmt::Display for RepDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "{{0}}");
        }
        let s: Vec<String> = self
            .parts
            .iter()
            .map(|(j, k)| format!("R[{},{}]", j, k))
            .collect();
        write!(f, "{}", s.join(" ⊕ "))
    }
}

impl Serialize for RepDecomposition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<[u32; 2]> = self.parts.iter().map(|&(j, k)| [j, k]).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RepDecomposition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<[u32; 2]> = Vec::deserialize(d)?;
        if v.iter().any(|p| p[0] == 0) {
            return Err(serde::de::Error::custom("multiplicity must be positive"));
        }
        Ok(RepDecomposition::new(v.into_iter().map(|p| (p[0], p[1]))))
    }
}

/// Isotropy subgroup of a nonzero vector: SO(2) itself, or Z_k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Isotropy {
    So2,
    Z(u32),
}

impl fmt::Display for Isotropy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Isotropy::So2 => write!(f, "SO(2)"),
            Isotropy::Z(k) => write!(f, "Z_{}", k),
        }
    }
}

/// Closure of a set of positive integers under pairwise gcd. This equals
/// the set of gcds of all nonempty subsets.
pub fn gcd_closure<I: IntoIterator<Item = u32>>(values: I) -> BTreeSet<u32> {
    let mut set: BTreeSet<u32> = values.into_iter().filter(|&k| k > 0).collect();
    loop {
        let current: Vec<u32> = set.iter().copied().collect();
        let mut grew = false;
        for (i, &a) in current.iter().enumerate() {
            for &b in &current[i + 1..] {
                grew |= set.insert(a.gcd(&b));
            }
        }
        if !grew {
            return set;
        }
    }
}

/// σ(A) ∩ {k²} as a representation: a part (μ_A(k²), k) for each k ≥ 0
/// such that k² is an eigenvalue of `a` within `tol` (relative to the norm).
pub fn kernel_rep_at_infinity(a: &SymmetricMatrix, tol: f64) -> Result<RepDecomposition> {
    let spec = crate::spectral::eigen_sym(a, tol)?;
    Ok(spec.square_resonances())
}

/// All isotropy groups realized by nonzero vectors of `rep`.
pub fn isotropy_gcd_set(rep: &RepDecomposition) -> BTreeSet<Isotropy> {
    let mut out: BTreeSet<Isotropy> = gcd_closure(rep.frequencies())
        .into_iter()
        .map(Isotropy::Z)
        .collect();
    if rep.has_trivial_part() {
        out.insert(Isotropy::So2);
    }
    out
}

/// True when some nonzero vector of `v` shares its isotropy group with some
/// nonzero vector of `w`.
pub fn is_consistent(v: &RepDecomposition, w: &RepDecomposition) -> bool {
    let sv = isotropy_gcd_set(v);
    let sw = isotropy_gcd_set(w);
    !sv.is_disjoint(&sw)
}

pub(crate) fn check_parts(parts: &[(u32, u32)]) -> Result<()> {
    for w in parts.windows(2) {
        if w[0].1 >= w[1].1 {
            return Err(Error::InvariantViolation(
                "representation frequencies must be strictly increasing".into(),
            ));
        }
    }
    if parts.iter().any(|&(j, _)| j == 0) {
        return Err(Error::InvariantViolation(
            "representation multiplicities must be positive".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rep(p: &[(u32, u32)]) -> RepDecomposition {
        RepDecomposition::new(p.iter().copied())
    }

    fn z(ks: &[u32]) -> BTreeSet<Isotropy> {
        ks.iter().map(|&k| Isotropy::Z(k)).collect()
    }

    #[test]
    fn kernel_rep_examples() {
        let a = SymmetricMatrix::from_diag(&[4.0, 2.0, 2.0, 2.0]);
        assert_eq!(kernel_rep_at_infinity(&a, 1e-9).unwrap(), rep(&[(1, 2)]));
        let s10 = 10f64.sqrt();
        let a = SymmetricMatrix::from_diag(&[4.0, -s10, 9.0, s10, 25.0]);
        assert_eq!(
            kernel_rep_at_infinity(&a, 1e-9).unwrap(),
            rep(&[(1, 2), (1, 3), (1, 5)])
        );
        let a = SymmetricMatrix::from_diag(&[-1.0, -2.0]);
        assert!(kernel_rep_at_infinity(&a, 1e-9).unwrap().is_empty());
        let a = SymmetricMatrix::from_diag(&[0.0, 1.0, 1.0, 7.0]);
        assert_eq!(kernel_rep_at_infinity(&a, 1e-9).unwrap(), rep(&[(1, 0), (2, 1)]));
    }

    #[test]
    fn gcd_set_examples() {
        assert_eq!(isotropy_gcd_set(&rep(&[(1, 2), (1, 3), (1, 5)])), z(&[1, 2, 3, 5]));
        assert_eq!(isotropy_gcd_set(&rep(&[(1, 2)])), z(&[2]));
        let only_trivial: BTreeSet<_> = [Isotropy::So2].into_iter().collect();
        assert_eq!(isotropy_gcd_set(&rep(&[(2, 0)])), only_trivial);
    }

    #[test]
    fn consistency_examples() {
        assert!(!is_consistent(&rep(&[(1, 2)]), &rep(&[(1, 3)])));
        assert!(is_consistent(&rep(&[(1, 2)]), &rep(&[(1, 2)])));
        assert!(!is_consistent(&rep(&[(1, 0)]), &rep(&[(1, 5)])));
        assert!(is_consistent(&rep(&[(1, 4), (1, 6)]), &rep(&[(3, 2)])));
    }

    #[test]
    fn dimension_and_merge() {
        let r = rep(&[(3, 5), (2, 0), (1, 5)]);
        assert_eq!(r.parts(), &[(2, 0), (4, 5)]);
        assert_eq!(r.dim(), 10);
        assert!(check_parts(r.parts()).is_ok());
        assert!(check_parts(&[(1, 3), (1, 2)]).is_err());
    }

    #[test]
    fn json_shape() {
        let r = rep(&[(1, 2), (2, 0)]);
        assert_eq!(serde_json::to_string(&r).unwrap(), "[[2,0],[1,2]]");
        assert!(serde_json::from_str::<RepDecomposition>("[[0,1]]").is_err());
    }

    fn brute_force_gcds(ks: &[u32]) -> BTreeSet<u32> {
        let ks: Vec<u32> = ks.iter().copied().filter(|&k| k > 0).collect();
        let mut out = BTreeSet::new();
        for mask in 1u32..(1 << ks.len()) {
            let g = (0..ks.len())
                .filter(|i| mask & (1 << i) != 0)
                .fold(0u32, |g, i| g.gcd(&ks[i]));
            out.insert(g);
        }
        out
    }

    fn arb_rep() -> impl Strategy<Value = RepDecomposition> {
        proptest::collection::vec((1u32..4, 0u32..40), 0..7).prop_map(RepDecomposition::new)
    }

    proptest! {
        #[test]
        fn closure_matches_subset_enumeration(ks in proptest::collection::vec(1u32..200, 0..9)) {
            prop_assert_eq!(gcd_closure(ks.iter().copied()), brute_force_gcds(&ks));
        }

        #[test]
        fn gcd_set_ignores_multiplicities(r in arb_rep(), bump in 1u32..5) {
            let bumped = RepDecomposition::new(r.parts().iter().map(|&(j, k)| (j * bump, k)));
            prop_assert_eq!(isotropy_gcd_set(&r), isotropy_gcd_set(&bumped));
        }

        #[test]
        fn consistency_is_symmetric(v in arb_rep(), w in arb_rep()) {
            prop_assert_eq!(is_consistent(&v, &w), is_consistent(&w, &v));
        }

        #[test]
        fn gcd_set_structure(r in arb_rep()) {
            let freqs: Vec<u32> = r.frequencies().filter(|&k| k > 0).collect();
            let set = isotropy_gcd_set(&r);
            if !freqs.is_empty() {
                let g = freqs.iter().fold(0u32, |g, &k| g.gcd(&k));
                prop_assert!(set.contains(&Isotropy::Z(g)));
            }
            for iso in &set {
                if let Isotropy::Z(d) = iso {
                    prop_assert!(freqs.iter().any(|&k| k % d == 0));
                }
            }
        }
    }
}
