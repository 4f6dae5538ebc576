//! Standard coarsening `n → (n-1)/2` with (bi/tri)linear interpolation and
//! `R = Pᵀ`, plus sparse Galerkin products `A_H = R A_h P`.

use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::stencil::{exact, Boundary, GridFunction, GridSpec, Offset, Stencil};

/// The coarse grid of a Dirichlet grid with `n = 2^k - 1`, `k ≥ 2`.
pub fn coarse_grid(fine: &GridSpec) -> Result<GridSpec> {
    let n = fine.n();
    if fine.boundary() != Boundary::Dirichlet || n < 3 || !(n + 1).is_power_of_two() {
        return Err(Error::NotNestable(n));
    }
    GridSpec::dirichlet(fine.dim(), (n - 1) / 2, 2.0 * fine.h())
}

/// Coarse points (index, weight) contributing to fine coordinate `f` along one axis.
fn axis_parents(f: usize, nc: usize) -> Vec<(usize, f64)> {
    if f % 2 == 1 {
        vec![(f / 2, 1.0)]
    } else {
        let c = f / 2;
        let mut out = Vec::with_capacity(2);
        if c >= 1 {
            out.push((c - 1, 0.5));
        }
        if c < nc {
            out.push((c, 0.5));
        }
        out
    }
}

/// `(coarse index, weight)` pairs of one row of `P`.
fn prolongation_row(fine: &GridSpec, coarse: &GridSpec, i: usize) -> Vec<(usize, f64)> {
    let mut row = vec![(0usize, 1.0f64)];
    for axis in (0..fine.dim()).rev() {
        let f = fine.coords(i)[axis];
        let parents = axis_parents(f, coarse.n());
        row = row
            .iter()
            .flat_map(|&(idx, w)| parents.iter().map(move |&(c, pw)| (idx * coarse.n() + c, w * pw)))
            .collect();
    }
    row
}

fn check_len(grid: &GridSpec, u: &GridFunction) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: u.len(),
        });
    }
    Ok(())
}

/// Interpolates a coarse grid function to `fine`.
pub fn prolong(fine: &GridSpec, uc: &GridFunction) -> Result<GridFunction> {
    let coarse = coarse_grid(fine)?;
    check_len(&coarse, uc)?;
    let input = uc.as_slice();
    let values = (0..fine.len())
        .map(|i| {
            prolongation_row(fine, &coarse, i)
                .into_iter()
                .map(|(c, w)| w * input[c])
                .sum()
        })
        .collect();
    GridFunction::from_vec(fine, values)
}

/// `Pᵀ r`: each coarse value gathers its `3^d` fine neighbours with weights
/// `Πᵢ (1 or 1/2)`.
pub fn restrict(fine: &GridSpec, r: &GridFunction) -> Result<GridFunction> {
    let coarse = coarse_grid(fine)?;
    check_len(fine, r)?;
    let input = r.as_slice();
    let d = fine.dim();
    let offsets: Vec<Offset> = (0..3usize.pow(d as u32))
        .map(|mut k| {
            (0..d)
                .map(|_| {
                    let o = (k % 3) as i32 - 1;
                    k /= 3;
                    o
                })
                .collect()
        })
        .collect();
    let values = (0..coarse.len())
        .map(|c| {
            let centre: Vec<isize> = coarse.coords(c).iter().map(|&x| 2 * x as isize + 1).collect();
            offsets
                .iter()
                .map(|o| {
                    let w: f64 = o.iter().map(|&x| if x == 0 { 1.0 } else { 0.5 }).product();
                    fine.shifted(&centre, o).map_or(0.0, |j| w * input[j])
                })
                .sum()
        })
        .collect();
    GridFunction::from_vec(&coarse, values)
}

/// `P` as a sparse `fine.len() × coarse.len()` matrix.
pub fn prolongation_matrix(fine: &GridSpec) -> Result<CsMat<f64>> {
    let coarse = coarse_grid(fine)?;
    let mut tri = TriMat::new((fine.len(), coarse.len()));
    for i in 0..fine.len() {
        for (c, w) in prolongation_row(fine, &coarse, i) {
            tri.add_triplet(i, c, w);
        }
    }
    Ok(tri.to_csr())
}

/// The matrix of `stencil` on `grid`, boundary taps dropped.
pub fn assemble_sparse(stencil: &Stencil, grid: &GridSpec) -> Result<CsMat<f64>> {
    if stencil.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: stencil.dim(),
        });
    }
    let mut tri = TriMat::new((grid.len(), grid.len()));
    for i in 0..grid.len() {
        for (o, c) in stencil.taps() {
            if let Some(j) = grid.neighbor(i, o) {
                tri.add_triplet(i, j, *c);
            }
        }
    }
    Ok(tri.to_csr())
}

/// `Pᵀ A P` for the matrix of `a` on `fine`.
pub fn galerkin_matrix(a: &Stencil, fine: &GridSpec) -> Result<CsMat<f64>> {
    let p = prolongation_matrix(fine)?;
    let pt: CsMat<f64> = p.transpose_view().to_csr();
    let ah = assemble_sparse(a, fine)?;
    let ap: CsMat<f64> = &ah * &p;
    Ok(&pt * &ap)
}

/// Reads the stencil of `m` from the row of the grid's centre point.
///
/// Exact when the operator is translation invariant with its boundary taps
/// dropped and the centre row is not truncated, which holds for Galerkin
/// products of radius-1 stencils on grids with `n ≥ 3`.
pub fn stencil_from_row(m: &CsMat<f64>, grid: &GridSpec) -> Result<Stencil> {
    let centre = vec![grid.n() / 2; grid.dim()];
    let i = grid.index(&centre);
    let row = m
        .outer_view(i)
        .ok_or(Error::LengthMismatch {
            expected: grid.len(),
            found: m.rows(),
        })?;
    let entries = row
        .iter()
        .map(|(j, &v)| {
            let cj = grid.coords(j);
            let o: Offset = cj.iter().zip(&centre).map(|(a, b)| *a as i32 - *b as i32).collect();
            Ok((o, exact(v)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Stencil::new(grid.dim(), entries)
}

/// The Galerkin coarse stencil of `a` and its sparse matrix on the coarse grid.
pub fn galerkin(a: &Stencil, fine: &GridSpec) -> Result<(Stencil, CsMat<f64>)> {
    let m = galerkin_matrix(a, fine)?;
    let coarse = coarse_grid(fine)?;
    Ok((stencil_from_row(&m, &coarse)?, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::{laplacian_stencil, rat};

    #[test]
    fn nesting() {
        let g = GridSpec::unit(2, 15).unwrap();
        let c = coarse_grid(&g).unwrap();
        assert_eq!(c.n(), 7);
        assert_eq!(c.h(), 0.125);
        assert_eq!(coarse_grid(&GridSpec::unit(1, 9).unwrap()), Err(Error::NotNestable(9)));
    }

    #[test]
    fn coarse_delta_interpolates_to_hat() {
        let g = GridSpec::unit(1, 7).unwrap();
        let c = coarse_grid(&g).unwrap();
        let u = prolong(&g, &GridFunction::delta(&c, 1)).unwrap();
        assert_eq!(u.as_slice(), &[0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn restriction_is_transpose() {
        for dim in 1..=3 {
            let g = GridSpec::unit(dim, 7).unwrap();
            let p = prolongation_matrix(&g).unwrap();
            for j in 0..g.len() {
                let r = restrict(&g, &GridFunction::delta(&g, j)).unwrap();
                let row = p.outer_view(j).unwrap();
                let mut expect = vec![0.0; r.len()];
                for (c, &w) in row.iter() {
                    expect[c] = w;
                }
                assert_eq!(r.as_slice(), &expect[..]);
            }
        }
    }

    #[test]
    fn restricted_constant_has_row_sums() {
        let g = GridSpec::unit(2, 7).unwrap();
        let r = restrict(&g, &GridFunction::from_vec(&g, vec![1.0; g.len()]).unwrap()).unwrap();
        assert!(r.as_slice().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn galerkin_1d_stencil() {
        let h = 1.0 / 16.0;
        let g = GridSpec::unit(1, 15).unwrap();
        let (s, _) = galerkin(&laplacian_stencil(1, h).unwrap(), &g).unwrap();
        let k = rat(1, 1) / (rat(2, 1) * exact(h * h).unwrap());
        let expect = Stencil::centered_1d(&[-k.clone(), rat(2, 1) * &k, -k]).unwrap();
        assert_eq!(s, expect);
    }
}
