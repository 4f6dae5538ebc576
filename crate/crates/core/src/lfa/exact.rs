//! Exact rational evaluation of symbols as polynomials in `cos θᵢ`.
//!
//! A stencil invariant under every axis reflection has the real symbol
//! `Σ_o s[o]·Πᵢ cos(oᵢθᵢ) = Σ_o s[o]·Πᵢ T_{|oᵢ|}(cos θᵢ)`, with `T_k` the
//! Chebyshev polynomials, so it can be evaluated exactly at rational cosines.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{preconditioner_stencil, SmootherKind};
use crate::error::{Error, Result};
use crate::stencil::{laplacian_stencil, rat, Stencil};

/// Chebyshev polynomial `T_k(x)`.
pub fn chebyshev(k: u32, x: &BigRational) -> BigRational {
    let (mut prev, mut cur) = (BigRational::one(), x.clone());
    if k == 0 {
        return prev;
    }
    let two_x = x * BigRational::from_integer(2.into());
    for _ in 1..k {
        let next = &two_x * &cur - &prev;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// The symbol of a reflection-symmetric stencil at `θ` with `cos θᵢ = cosines[i]`.
pub fn symbol_in_cosines(s: &Stencil, cosines: &[BigRational]) -> Result<BigRational> {
    if cosines.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: cosines.len(),
        });
    }
    if !s.is_reflection_symmetric() {
        return Err(Error::NotReflectionSymmetric);
    }
    Ok(s.entries().fold(BigRational::zero(), |acc, (o, c)| {
        let term = o
            .iter()
            .zip(cosines)
            .fold(c.clone(), |t, (&k, x)| t * chebyshev(k.unsigned_abs(), x));
        acc + term
    }))
}

/// Exact optimum of `max |1 - ωT|` over the high frequencies, from the
/// extremal points of `T = M̃Ã_h` and exact evaluation of `T` there.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOptimum {
    pub kind: SmootherKind,
    pub dim: usize,
    pub argmin_cosines: Vec<BigRational>,
    pub argmax_cosines: Vec<BigRational>,
    pub t_min: BigRational,
    pub t_max: BigRational,
    pub omega: BigRational,
    pub mu: BigRational,
}

impl ExactOptimum {
    pub fn omega_f64(&self) -> f64 {
        self.omega.to_f64().unwrap_or(f64::NAN)
    }

    pub fn mu_f64(&self) -> f64 {
        self.mu.to_f64().unwrap_or(f64::NAN)
    }
}

/// `cos θᵢ` as numerator and denominator.
type Cosine = (i64, i64);

/// Cosine coordinates of the minimizer and maximizer of `M̃Ã_h` over the
/// high frequencies.
fn extremal_cosines(kind: SmootherKind, dim: usize) -> Option<(Vec<Cosine>, Vec<Cosine>)> {
    use SmootherKind::*;
    let z = (0, 1);
    let one = (1, 1);
    let m1 = (-1, 1);
    Some(match (kind, dim) {
        (Jacobi, 1) => (vec![z], vec![m1]),
        (Jacobi, 2) => (vec![one, z], vec![m1, m1]),
        (Jacobi, 3) => (vec![one, one, z], vec![m1, m1, m1]),
        (VankaElement, 1) | (MassFE, 1) => (vec![z], vec![(-1, 2)]),
        (VankaElement, 2) => (vec![one, z], vec![m1, m1]),
        (VankaVertex, 1) => (vec![(-2, 3)], vec![z]),
        (VankaVertex, 2) => (vec![one, z], vec![m1, m1]),
        (MassFE, 2) => (vec![m1, m1], vec![z, z]),
        (Mass3D, 3) => (vec![m1, m1, m1], vec![z, (1, 3), (1, 3)]),
        _ => return None,
    })
}

fn product_in_cosines(kind: SmootherKind, dim: usize, cosines: &[BigRational]) -> Result<BigRational> {
    let m = preconditioner_stencil(kind, dim, 1.0)?;
    let a = laplacian_stencil(dim, 1.0)?;
    Ok(symbol_in_cosines(&m, cosines)? * symbol_in_cosines(&a, cosines)?)
}

/// Exact `(ω_opt, μ_opt)` for a supported smoother kind and dimension.
pub fn exact_optimum(kind: SmootherKind, dim: usize) -> Result<ExactOptimum> {
    let (lo, hi) = extremal_cosines(kind, dim).ok_or_else(|| Error::Unsupported {
        what: format!("exact optimum for {kind}"),
        dim,
    })?;
    let to_rat = |v: Vec<(i64, i64)>| v.into_iter().map(|(n, d)| rat(n, d)).collect::<Vec<_>>();
    let (argmin_cosines, argmax_cosines) = (to_rat(lo), to_rat(hi));
    // both points lie in the closure of T^high: some cos θᵢ ≤ 0
    debug_assert!(argmin_cosines.iter().any(|c| !c.is_positive()));
    debug_assert!(argmax_cosines.iter().any(|c| !c.is_positive()));
    let t_min = product_in_cosines(kind, dim, &argmin_cosines)?;
    let t_max = product_in_cosines(kind, dim, &argmax_cosines)?;
    let sum = &t_min + &t_max;
    let omega = BigRational::from_integer(2.into()) / &sum;
    let mu = (&t_max - &t_min) / &sum;
    Ok(ExactOptimum {
        kind,
        dim,
        argmin_cosines,
        argmax_cosines,
        t_min,
        t_max,
        omega,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::mass_stencil;

    #[test]
    fn chebyshev_values() {
        let x = rat(1, 3);
        assert_eq!(chebyshev(0, &x), rat(1, 1));
        assert_eq!(chebyshev(1, &x), x);
        assert_eq!(chebyshev(2, &x), rat(2, 9) - rat(1, 1));
        assert_eq!(chebyshev(3, &x), rat(4, 27) - rat(1, 1));
    }

    #[test]
    fn cosine_symbol_matches_float_symbol() {
        let s = mass_stencil(2, 1.0).unwrap();
        let (c1, c2) = (rat(1, 4), rat(-2, 3));
        let exact = symbol_in_cosines(&s, &[c1.clone(), c2.clone()]).unwrap();
        let th = [0.25f64.acos(), (-2.0f64 / 3.0).acos()];
        let float = super::super::symbol(&s, &th).unwrap().re;
        assert!((exact.to_f64().unwrap() - float).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_stencil_rejected() {
        let s = Stencil::new(1, [(vec![1], rat(1, 1))]).unwrap();
        assert_eq!(symbol_in_cosines(&s, &[rat(0, 1)]), Err(Error::NotReflectionSymmetric));
    }

    #[test]
    fn element_1d_range() {
        let e = exact_optimum(SmootherKind::VankaElement, 1).unwrap();
        assert_eq!(e.t_min, rat(4, 3));
        assert_eq!(e.t_max, rat(3, 2));
        assert_eq!(e.omega, rat(12, 17));
        assert_eq!(e.mu, rat(1, 17));
    }

    #[test]
    fn unsupported_pair() {
        assert!(matches!(
            exact_optimum(SmootherKind::Mass3D, 2),
            Err(Error::Unsupported { .. })
        ));
    }
}
