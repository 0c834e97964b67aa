//! Exact arithmetic in the tom Dieck ring U(SO(2)) = Z ⊕ ⊕_{k≥1} Z.
//!
//! An element carries one coordinate for the isotropy group SO(2) and one
//! integer coordinate per finite cyclic group Z_k. Only finitely many Z_k
//! coordinates are ever nonzero, so they are stored sparsely and kept in a
//! canonical trimmed form: a zero coordinate is never stored. Structural
//! equality is therefore ring equality.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TomDieckElement {
    so2: i64,
    zk: BTreeMap<u32, i64>,
}

impl TomDieckElement {
    /// The additive identity Θ.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The multiplicative unit 𝕀 = (1, 0, 0, ...).
    pub fn unit() -> Self {
        Self::from_so2(1)
    }

    pub fn from_so2(so2: i64) -> Self {
        Self {
            so2,
            zk: BTreeMap::new(),
        }
    }

    /// Builds an element from an SO(2) coordinate and `(k, value)` pairs.
    /// Repeated frequencies are summed; `k = 0` is rejected.
    pub fn new<I>(so2: i64, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, i64)>,
    {
        let mut zk = BTreeMap::new();
        for (k, v) in coeffs {
            if k == 0 {
                return Err(Error::InvalidInput(
                    "Z_k coordinates are indexed by k >= 1".into(),
                ));
            }
            let slot = zk.entry(k).or_insert(0i64);
            *slot = slot.checked_add(v).ok_or(Error::RingOverflow)?;
        }
        zk.retain(|_, v| *v != 0);
        Ok(Self { so2, zk })
    }

    pub fn so2(&self) -> i64 {
        self.so2
    }

    /// The Z_k coordinate; zero for any frequency not stored.
    pub fn zk(&self, k: u32) -> i64 {
        self.zk.get(&k).copied().unwrap_or(0)
    }

    /// Nonzero Z_k coordinates in increasing k.
    pub fn zk_coords(&self) -> impl Iterator<Item = (u32, i64)> + '_ {
        self.zk.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.so2 == 0 && self.zk.is_empty()
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let so2 = self.so2.checked_add(other.so2).ok_or(Error::RingOverflow)?;
        let mut zk = self.zk.clone();
        for (&k, &v) in &other.zk {
            let slot = zk.entry(k).or_insert(0);
            *slot = slot.checked_add(v).ok_or(Error::RingOverflow)?;
        }
        zk.retain(|_, v| *v != 0);
        Ok(Self { so2, zk })
    }

    /// The ring product: (a0·b0, ..., a0·b_k + b0·a_k, ...).
    pub fn checked_star(&self, other: &Self) -> Result<Self> {
        let so2 = self.so2.checked_mul(other.so2).ok_or(Error::RingOverflow)?;
        let mut zk = BTreeMap::new();
        for (&k, &b) in &other.zk {
            let term = self.so2.checked_mul(b).ok_or(Error::RingOverflow)?;
            zk.insert(k, term);
        }
        for (&k, &a) in &self.zk {
            let term = other.so2.checked_mul(a).ok_or(Error::RingOverflow)?;
            let slot = zk.entry(k).or_insert(0);
            *slot = slot.checked_add(term).ok_or(Error::RingOverflow)?;
        }
        zk.retain(|_, v| *v != 0);
        Ok(Self { so2, zk })
    }

    pub fn checked_scalar_mul(&self, g: i64) -> Result<Self> {
        let so2 = self.so2.checked_mul(g).ok_or(Error::RingOverflow)?;
        let mut zk = BTreeMap::new();
        for (&k, &v) in &self.zk {
            let p = v.checked_mul(g).ok_or(Error::RingOverflow)?;
            if p != 0 {
                zk.insert(k, p);
            }
        }
        Ok(Self { so2, zk })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.checked_scalar_mul(-1)?)
    }
}

pub fn add(a: &TomDieckElement, b: &TomDieckElement) -> Result<TomDieckElement> {
    a.checked_add(b)
}

pub fn star(a: &TomDieckElement, b: &TomDieckElement) -> Result<TomDieckElement> {
    a.checked_star(b)
}

pub fn scalar_mul(g: i64, a: &TomDieckElement) -> Result<TomDieckElement> {
    a.checked_scalar_mul(g)
}

/// Left fold of `star`; the empty product is 𝕀.
pub fn product<'a, I>(items: I) -> Result<TomDieckElement>
where
    I: IntoIterator<Item = &'a TomDieckElement>,
{
    items
        .into_iter()
        .try_fold(TomDieckElement::unit(), |acc, x| acc.checked_star(x))
}

// Operator forms panic on overflow; use the checked_* methods to recover.

impl Add for &TomDieckElement {
    type Output = TomDieckElement;
    fn add(self, rhs: Self) -> TomDieckElement {
        self.checked_add(rhs).expect("tom Dieck ring overflow")
    }
}

impl Sub for &TomDieckElement {
    type Output = TomDieckElement;
    fn sub(self, rhs: Self) -> TomDieckElement {
        self.checked_sub(rhs).expect("tom Dieck ring overflow")
    }
}

impl Mul for &TomDieckElement {
    type Output = TomDieckElement;
    fn mul(self, rhs: Self) -> TomDieckElement {
        self.checked_star(rhs).expect("tom Dieck ring overflow")
    }
}

impl Neg for &TomDieckElement {
    type Output = TomDieckElement;
    fn neg(self) -> TomDieckElement {
        self.checked_scalar_mul(-1).expect("tom Dieck ring overflow")
    }
}

impl fmt::Display for TomDieckElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "Θ");
        }
        write!(f, "({}", self.so2)?;
        if !self.zk.is_empty() {
            write!(f, "; ")?;
            let parts: Vec<String> = self
                .zk
                .iter()
                .map(|(k, v)| format!("Z{}:{}", k, v))
                .collect();
            write!(f, "{}", parts.join(", "))?;
        }
        write!(f, ")")
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    so2: i64,
    zk: BTreeMap<u32, i64>,
}

impl Serialize for TomDieckElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Wire {
            so2: self.so2,
            zk: self.zk.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TomDieckElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        TomDieckElement::new(w.so2, w.zk).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn el(so2: i64, zk: &[(u32, i64)]) -> TomDieckElement {
        TomDieckElement::new(so2, zk.iter().copied()).unwrap()
    }

    #[test]
    fn add_examples() {
        let alpha = el(5, &[(3, -2), (7, 1)]);
        assert_eq!(add(&TomDieckElement::zero(), &alpha).unwrap(), alpha);
        assert_eq!(add(&el(1, &[(1, 2)]), &el(3, &[(1, -2)])).unwrap(), el(4, &[]));
        assert_eq!(
            add(&el(2, &[(3, 5)]), &el(-2, &[(2, 1)])).unwrap(),
            el(0, &[(2, 1), (3, 5)])
        );
    }

    #[test]
    fn cancellation_trims() {
        let s = add(&el(1, &[(1, 2)]), &el(3, &[(1, -2)])).unwrap();
        assert_eq!(s.zk_coords().count(), 0);
    }

    #[test]
    fn star_examples() {
        let alpha = el(-3, &[(2, 4), (9, -1)]);
        assert_eq!(star(&TomDieckElement::unit(), &alpha).unwrap(), alpha);
        assert!(star(&TomDieckElement::zero(), &alpha).unwrap().is_zero());
        assert_eq!(
            star(&el(1, &[(1, 2)]), &el(3, &[(2, 4)])).unwrap(),
            el(3, &[(1, 6), (2, 4)])
        );
    }

    #[test]
    fn scalar_examples() {
        let alpha = el(7, &[(4, 3)]);
        assert!(scalar_mul(0, &alpha).unwrap().is_zero());
        assert_eq!(scalar_mul(1, &alpha).unwrap(), alpha);
        assert_eq!(scalar_mul(-1, &el(1, &[(2, 3)])).unwrap(), el(-1, &[(2, -3)]));
    }

    #[test]
    fn product_examples() {
        assert_eq!(product([]).unwrap(), TomDieckElement::unit());
        let a = el(2, &[(1, 1)]);
        let b = el(-1, &[(5, 2)]);
        assert_eq!(product([&a]).unwrap(), a);
        assert!(product([&a, &TomDieckElement::zero(), &b]).unwrap().is_zero());
    }

    #[test]
    fn overflow_is_an_error() {
        let big = el(i64::MAX, &[]);
        assert_eq!(big.checked_add(&el(1, &[])), Err(Error::RingOverflow));
        assert_eq!(
            el(1, &[(1, i64::MAX / 2 + 1)]).checked_scalar_mul(2),
            Err(Error::RingOverflow)
        );
    }

    #[test]
    fn zero_frequency_rejected() {
        assert!(TomDieckElement::new(1, [(0, 1)]).is_err());
    }

    #[test]
    fn json_shape() {
        let a = el(-1, &[(3, -2), (1, 4)]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"so2":-1,"zk":{"1":4,"3":-2}}"#);
        let back: TomDieckElement = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        let trimmed: TomDieckElement = serde_json::from_str(r#"{"so2":0,"zk":{"2":0}}"#).unwrap();
        assert!(trimmed.is_zero());
    }

    fn element() -> impl Strategy<Value = TomDieckElement> {
        (
            -1_000_000i64..=1_000_000,
            proptest::collection::vec((1u32..=64, -1_000_000i64..=1_000_000), 0..6),
        )
            .prop_map(|(so2, zk)| TomDieckElement::new(so2, zk).unwrap())
    }

    proptest! {
        #[test]
        fn ring_laws(a in element(), b in element(), c in element()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert!((&a + &(-&a)).is_zero());
            for (_, v) in (&a * &b).zk_coords().chain((&a + &c).zk_coords()) {
                prop_assert_ne!(v, 0);
            }
        }
    }
}
