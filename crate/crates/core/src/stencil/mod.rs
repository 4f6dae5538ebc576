//! Constant-coefficient grid operators stored as offset → coefficient maps.
//!
//! Coefficients are kept as exact rationals. Any finite `f64` meshsize is a
//! dyadic rational, so stencils built from a float `h` are still exact; the
//! float taps used for application and symbol evaluation are derived once at
//! construction.

mod grid;

pub use grid::{apply, apply_periodic, Boundary, GridFunction, GridSpec};

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Offset = Vec<i32>;

/// Exact rational `num/den`.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rational value of a finite float.
pub fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or(Error::BadCoefficient(x.to_string()))
}

pub(crate) fn meshsize(h: f64) -> Result<BigRational> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidMeshsize(h));
    }
    exact(h)
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

#[derive(Clone, PartialEq)]
pub struct Stencil {
    dim: usize,
    entries: BTreeMap<Offset, BigRational>,
    taps: Vec<(Offset, f64)>,
}

impl Stencil {
    /// Builds a stencil, summing repeated offsets and dropping zero coefficients.
    pub fn new<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Offset, BigRational)>,
    {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut map: BTreeMap<Offset, BigRational> = BTreeMap::new();
        for (offset, coef) in entries {
            if offset.len() != dim {
                return Err(Error::BadOffset { offset, dim });
            }
            *map.entry(offset).or_insert_with(BigRational::zero) += coef;
        }
        map.retain(|_, c| !c.is_zero());
        if map.is_empty() {
            return Err(Error::EmptyStencil);
        }
        let taps = map
            .iter()
            .map(|(o, c)| (o.clone(), c.to_f64().unwrap_or(f64::NAN)))
            .collect();
        Ok(Self {
            dim,
            entries: map,
            taps,
        })
    }

    /// `coef · δ₀` in `dim` dimensions.
    pub fn delta(dim: usize, coef: BigRational) -> Result<Self> {
        Self::new(dim, [(vec![0; dim], coef)])
    }

    /// A one-dimensional stencil centred at offset 0: `coefs[k]` sits at
    /// `k - coefs.len() / 2`.
    pub fn centered_1d(coefs: &[BigRational]) -> Result<Self> {
        let half = (coefs.len() / 2) as i32;
        Self::new(
            1,
            coefs
                .iter()
                .enumerate()
                .map(|(k, c)| (vec![k as i32 - half], c.clone())),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Offset, &BigRational)> {
        self.entries.iter()
    }

    /// Float coefficients, in offset order.
    pub fn taps(&self) -> &[(Offset, f64)] {
        &self.taps
    }

    /// Coefficient at `offset`, zero when absent.
    pub fn coef(&self, offset: &[i32]) -> BigRational {
        self.entries
            .get(offset)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn coef_f64(&self, offset: &[i32]) -> f64 {
        self.coef(offset).to_f64().unwrap_or(f64::NAN)
    }

    pub fn center(&self) -> BigRational {
        self.coef(&vec![0; self.dim])
    }

    /// Largest absolute offset component.
    pub fn radius(&self) -> usize {
        self.entries
            .keys()
            .flat_map(|o| o.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    /// `entries[-o] == entries[o]` for every offset.
    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|(o, c)| {
            let neg: Offset = o.iter().map(|x| -x).collect();
            self.entries.get(&neg) == Some(c)
        })
    }

    /// Invariant under flipping the sign of any single axis.
    pub fn is_reflection_symmetric(&self) -> bool {
        (0..self.dim).all(|axis| {
            self.entries.iter().all(|(o, c)| {
                let mut r = o.clone();
                r[axis] = -r[axis];
                self.entries.get(&r) == Some(c)
            })
        })
    }

    pub fn scaled(&self, factor: &BigRational) -> Result<Self> {
        Self::new(
            self.dim,
            self.entries.iter().map(|(o, c)| (o.clone(), c * factor)),
        )
    }

    /// Entry-wise sum. Fails if the sum cancels to the zero stencil.
    pub fn plus(&self, other: &Stencil) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Self::new(
            self.dim,
            self.entries
                .iter()
                .chain(other.entries.iter())
                .map(|(o, c)| (o.clone(), c.clone())),
        )
    }
}

impl fmt::Debug for Stencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (o, c) in &self.entries {
            m.entry(o, &format_args!("{c}"));
        }
        m.finish()
    }
}

/// Second-order finite-difference Laplacian with `2·dim + 1` points.
pub fn laplacian_stencil(dim: usize, h: f64) -> Result<Stencil> {
    check_dim(dim)?;
    let h = meshsize(h)?;
    let inv_h2 = (&h * &h).recip();
    let mut entries = vec![(vec![0; dim], &inv_h2 * BigInt::from(2 * dim as i64))];
    for axis in 0..dim {
        for step in [-1, 1] {
            let mut o = vec![0; dim];
            o[axis] = step;
            entries.push((o, -inv_h2.clone()));
        }
    }
    Stencil::new(dim, entries)
}

fn linear_mass_1d(scale: BigRational) -> Result<Stencil> {
    Stencil::centered_1d(&[
        &scale * rat(1, 6),
        &scale * rat(4, 6),
        &scale * rat(1, 6),
    ])
}

/// Finite-element mass stencils: linear `h/6·[1 4 1]` in 1D, bilinear
/// `h²/36·[1 4 1]⊗[1 4 1]` in 2D, and in 3D the scaled trilinear mass
/// `h⁻⁴·M_e⊗M_e⊗M_e` with `M_e = h²/6·[1 4 1]` (units of h²).
pub fn mass_stencil(dim: usize, h: f64) -> Result<Stencil> {
    check_dim(dim)?;
    let h = meshsize(h)?;
    let m1 = linear_mass_1d(h.clone())?;
    match dim {
        1 => Ok(m1),
        2 => tensor_product(&m1, &m1),
        _ => {
            let me = linear_mass_1d(&h * &h)?;
            let h4 = (&h * &h) * (&h * &h);
            tensor_product(&tensor_product(&me, &me)?, &me)?.scaled(&h4.recip())
        }
    }
}

/// `(a ⊗ b)[(oa, ob)] = a[oa] · b[ob]`.
pub fn tensor_product(a: &Stencil, b: &Stencil) -> Result<Stencil> {
    let entries = a.entries.iter().flat_map(|(oa, ca)| {
        b.entries.iter().map(move |(ob, cb)| {
            let mut o = oa.clone();
            o.extend_from_slice(ob);
            (o, ca * cb)
        })
    });
    Stencil::new(a.dim + b.dim, entries.collect::<Vec<_>>())
}

pub fn rational_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::BadCoefficient(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => match s.parse::<BigInt>() {
            Ok(n) => Ok(BigRational::from_integer(n)),
            Err(_) => {
                let x: f64 = s.parse().map_err(|_| bad())?;
                if x.is_finite() {
                    exact(x)
                } else {
                    Err(bad())
                }
            }
        },
    }
}

#[derive(Serialize, Deserialize)]
struct StencilRepr {
    dim: usize,
    entries: Vec<EntryRepr>,
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    offset: Vec<i32>,
    coef: CoefRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoefRepr {
    Text(String),
    Number(f64),
}

impl Serialize for Stencil {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StencilRepr {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(o, c)| EntryRepr {
                    offset: o.clone(),
                    coef: CoefRepr::Text(rational_to_string(c)),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Stencil {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = StencilRepr::deserialize(deserializer)?;
        let entries = repr
            .entries
            .into_iter()
            .map(|e| {
                let coef = match e.coef {
                    CoefRepr::Text(s) => parse_rational(&s),
                    CoefRepr::Number(x) => exact(x),
                };
                coef.map(|c| (e.offset, c))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Stencil::new(repr.dim, entries).map_err(D::Error::custom)
    }
}

/// Largest entry-wise `|a - b|` over the union of both offset sets.
pub fn max_abs_difference(a: &Stencil, b: &Stencil) -> BigRational {
    let mut keys: Vec<&Offset> = a.entries.keys().chain(b.entries.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|o| (a.coef(o) - b.coef(o)).abs())
        .max()
        .unwrap_or_else(BigRational::zero)
}
