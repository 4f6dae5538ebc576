use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, Stencil};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Boundary values are zero and eliminated; taps leaving the interior read zero.
    Dirichlet,
    /// Wrap-around indexing. Only used for assembly oracles, where every row
    /// of a stencil operator is the same stencil row.
    Periodic,
}

/// Interior lattice `{0, …, n-1}^dim` of a uniform mesh. Index 0 along each
/// axis sits at `x = h` for Dirichlet grids, so `h·(n+1) = 1` on the unit
/// domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    h: f64,
    boundary: Boundary,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, h: f64, boundary: Boundary) -> Result<Self> {
        check_dim(dim)?;
        if n < 3 {
            return Err(Error::GridTooSmall(n));
        }
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidMeshsize(h));
        }
        Ok(Self { dim, n, h, boundary })
    }

    pub fn dirichlet(dim: usize, n: usize, h: f64) -> Result<Self> {
        Self::new(dim, n, h, Boundary::Dirichlet)
    }

    /// Dirichlet grid on the unit cube, `h = 1/(n+1)`.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        Self::dirichlet(dim, n, 1.0 / (n as f64 + 1.0))
    }

    pub fn periodic(dim: usize, n: usize, h: f64) -> Result<Self> {
        Self::new(dim, n, h, Boundary::Periodic)
    }

    pub fn with_boundary(self, boundary: Boundary) -> Self {
        Self { boundary, ..self }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of unknowns, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lexicographic index with axis 0 varying fastest.
    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().rev().fold(0, |acc, &c| acc * self.n + c)
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        for slot in c.iter_mut() {
            *slot = index % self.n;
            index /= self.n;
        }
        c
    }

    /// Index of `coords + offset` (signed coordinates accepted), or `None`
    /// when it leaves a Dirichlet interior.
    pub fn shifted(&self, coords: &[isize], offset: &[i32]) -> Option<usize> {
        let n = self.n as isize;
        let mut index = 0usize;
        for axis in (0..self.dim).rev() {
            let mut c = coords[axis] + offset[axis] as isize;
            match self.boundary {
                Boundary::Dirichlet => {
                    if c < 0 || c >= n {
                        return None;
                    }
                }
                Boundary::Periodic => c = c.rem_euclid(n),
            }
            index = index * self.n + c as usize;
        }
        Some(index)
    }

    pub fn neighbor(&self, index: usize, offset: &[i32]) -> Option<usize> {
        let c: Vec<isize> = self.coords(index).into_iter().map(|x| x as isize).collect();
        self.shifted(&c, offset)
    }

    /// Entry `(row, col)` of the matrix realizing `stencil` on this grid.
    pub fn matrix_entry(&self, stencil: &Stencil, row: usize, col: usize) -> f64 {
        stencil
            .taps()
            .iter()
            .filter(|(o, _)| self.neighbor(row, o) == Some(col))
            .map(|(_, c)| c)
            .sum()
    }

    /// Physical coordinate of a lattice point.
    pub fn position(&self, coords: &[usize]) -> Vec<f64> {
        let shift = match self.boundary {
            Boundary::Dirichlet => 1.0,
            Boundary::Periodic => 0.0,
        };
        coords.iter().map(|&c| (c as f64 + shift) * self.h).collect()
    }
}

/// Real values over the interior lattice of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_vec(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { values })
    }

    /// Samples `f` at the physical coordinates of each lattice point.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| f(&grid.position(&grid.coords(i))))
            .collect();
        Self { values }
    }

    /// Unit vector at lattice index `index`.
    pub fn delta(grid: &GridSpec, index: usize) -> Self {
        let mut u = Self::zeros(grid);
        u.values[index] = 1.0;
        u
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self += alpha · other`
    pub fn axpy(&mut self, alpha: f64, other: &GridFunction) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

pub(crate) fn check_compatible(stencil: &Stencil, grid: &GridSpec, u: &GridFunction) -> Result<()> {
    if stencil.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: stencil.dim(),
        });
    }
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: u.len(),
        });
    }
    Ok(())
}

/// `(s·u)(x) = Σ_o s[o]·u(x+o)` under the grid's boundary mode.
///
/// Each output point sums its taps in stencil order, so the parallel sweep
/// is bitwise identical to a sequential one.
pub fn apply(stencil: &Stencil, grid: &GridSpec, u: &GridFunction) -> Result<GridFunction> {
    check_compatible(stencil, grid, u)?;
    let taps = stencil.taps();
    let input = u.as_slice();
    let mut out = vec![0.0; grid.len()];
    out.par_iter_mut().enumerate().for_each(|(i, slot)| {
        let c: Vec<isize> = grid.coords(i).into_iter().map(|x| x as isize).collect();
        let mut acc = 0.0;
        for (o, coef) in taps {
            if let Some(j) = grid.shifted(&c, o) {
                acc += coef * input[j];
            }
        }
        *slot = acc;
    });
    Ok(GridFunction { values: out })
}

/// [`apply`] with wrap-around indexing regardless of the grid's boundary mode.
pub fn apply_periodic(stencil: &Stencil, grid: &GridSpec, u: &GridFunction) -> Result<GridFunction> {
    apply(stencil, &grid.with_boundary(Boundary::Periodic), u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::laplacian_stencil;
    use std::f64::consts::PI;

    #[test]
    fn index_roundtrip() {
        let g = GridSpec::unit(3, 5).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.index(&g.coords(i)), i);
        }
        assert_eq!(g.index(&[1, 0, 0]), 1);
        assert_eq!(g.index(&[0, 1, 0]), 5);
    }

    #[test]
    fn grid_validation() {
        assert_eq!(GridSpec::unit(2, 2), Err(Error::GridTooSmall(2)));
        assert_eq!(GridSpec::unit(4, 7), Err(Error::UnsupportedDimension(4)));
        assert!(matches!(GridSpec::dirichlet(1, 7, -1.0), Err(Error::InvalidMeshsize(_))));
        let g = GridSpec::unit(1, 63).unwrap();
        assert_eq!(g.h() * 64.0, 1.0);
    }

    #[test]
    fn dirichlet_residual_of_constant() {
        let g = GridSpec::dirichlet(1, 5, 1.0).unwrap();
        let a = laplacian_stencil(1, 1.0).unwrap();
        let u = GridFunction::from_vec(&g, vec![1.0; 5]).unwrap();
        let r = apply(&a, &g, &u).unwrap();
        assert_eq!(r.as_slice(), &[1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn periodic_residual_of_constant_is_zero() {
        let g = GridSpec::dirichlet(1, 5, 1.0).unwrap();
        let a = laplacian_stencil(1, 1.0).unwrap();
        let u = GridFunction::from_vec(&g, vec![1.0; 5]).unwrap();
        let r = apply_periodic(&a, &g, &u).unwrap();
        assert!(r.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn laplacian_of_sine_is_second_order() {
        // -u'' = π² sin(πx); the centred difference error is (π⁴h²/12)·sin.
        let g = GridSpec::unit(1, 63).unwrap();
        let h = g.h();
        let a = laplacian_stencil(1, h).unwrap();
        let u = GridFunction::from_fn(&g, |x| (PI * x[0]).sin());
        let au = apply(&a, &g, &u).unwrap();
        let err = au
            .as_slice()
            .iter()
            .zip(u.as_slice())
            .map(|(l, v)| (l - PI * PI * v).abs())
            .fold(0.0, f64::max);
        assert!(err <= PI.powi(4) * h * h / 12.0 * 1.01, "err = {err}");
        assert!(err > 0.0);
    }

    #[test]
    fn delta_reproduces_stencil() {
        let g = GridSpec::dirichlet(2, 7, 1.0).unwrap();
        let a = laplacian_stencil(2, 1.0).unwrap();
        let center = g.index(&[3, 3]);
        let r = apply(&a, &g, &GridFunction::delta(&g, center)).unwrap();
        for i in 0..g.len() {
            let c = g.coords(i);
            let o = [c[0] as i32 - 3, c[1] as i32 - 3];
            // A is symmetric, so the column equals the row.
            assert_eq!(r.as_slice()[i], a.coef_f64(&o));
        }
    }

    #[test]
    fn mismatched_input_rejected() {
        let g = GridSpec::unit(2, 5).unwrap();
        let a1 = laplacian_stencil(1, 1.0).unwrap();
        let u = GridFunction::zeros(&g);
        assert_eq!(
            apply(&a1, &g, &u),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        );
        let g1 = GridSpec::unit(1, 5).unwrap();
        assert!(matches!(apply(&a1, &g1, &u), Err(Error::LengthMismatch { .. })));
    }
}
