//! Additive Vanka operators `M = Σᵢ Vᵢᵀ W Aᵢ⁻¹ Vᵢ` built from element-wise
//! and vertex-wise patches, their closed-form stencils, and dense assembly
//! of grid operators for oracle checks.

use std::collections::HashMap;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{self, meshsize, rat, GridFunction, GridSpec, Offset, Stencil};

/// Largest grid (in unknowns) that [`assemble_dense`] will materialize.
pub const DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatchKind {
    /// The `2^d` corners of one mesh cell.
    ElementWise,
    /// A vertex and its `2d` axis neighbours.
    VertexWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatchLayout {
    kind: PatchKind,
    dim: usize,
}

impl PatchLayout {
    pub fn new(kind: PatchKind, dim: usize) -> Result<Self> {
        match dim {
            1 | 2 => Ok(Self { kind, dim }),
            3 => Err(Error::Unsupported {
                what: "Vanka patch assembly".into(),
                dim,
            }),
            _ => Err(Error::UnsupportedDimension(dim)),
        }
    }

    pub fn kind(&self) -> PatchKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of DoFs in a patch away from the boundary.
    pub fn interior_patch_size(&self) -> usize {
        match self.kind {
            PatchKind::ElementWise => 1 << self.dim,
            PatchKind::VertexWise => 2 * self.dim + 1,
        }
    }

    /// Relative offsets of the patch members, anchored at the lower cell
    /// corner (element-wise) or the centre vertex (vertex-wise).
    fn member_offsets(&self) -> Vec<Offset> {
        let d = self.dim;
        match self.kind {
            PatchKind::ElementWise => (0..1usize << d)
                .map(|bits| (0..d).map(|a| ((bits >> a) & 1) as i32).collect())
                .collect(),
            PatchKind::VertexWise => {
                let unit = |axis: usize, s: i32| {
                    let mut o = vec![0; d];
                    o[axis] = s;
                    o
                };
                let mut v: Vec<Offset> = (0..d).rev().map(|a| unit(a, -1)).collect();
                v.push(vec![0; d]);
                v.extend((0..d).map(|a| unit(a, 1)));
                v
            }
        }
    }

    /// Anchor points of all patches. Dirichlet element patches include the
    /// boundary cells (anchors at -1), whose members are then truncated.
    fn anchors(&self, grid: &GridSpec) -> Vec<Vec<isize>> {
        let n = grid.n() as isize;
        let lo = match (self.kind, grid.boundary()) {
            (PatchKind::ElementWise, stencil::Boundary::Dirichlet) => -1,
            _ => 0,
        };
        let span = (n - lo) as usize;
        let count = span.pow(self.dim as u32);
        (0..count)
            .map(|mut k| {
                let mut a = vec![0isize; self.dim];
                for slot in a.iter_mut() {
                    *slot = lo + (k % span) as isize;
                    k /= span;
                }
                a
            })
            .collect()
    }
}

/// One subdomain: its global DoFs `Υᵢ` and the index of its shared local
/// matrix class.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    dofs: Vec<usize>,
    class: usize,
}

impl Patch {
    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }
}

#[derive(Debug, Clone)]
struct PatchClass {
    local_matrix: DMatrix<f64>,
    local_inverse: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct VankaOperator {
    grid: GridSpec,
    layout: PatchLayout,
    patches: Vec<Patch>,
    classes: Vec<PatchClass>,
    weights: Vec<f64>,
}

/// Builds the patches of `layout` on `grid` together with their local
/// matrices `Aᵢ = Vᵢ A Vᵢᵀ`, inverses and counting weights.
///
/// Local matrices are read from the global matrix of `a` on `grid`, so they
/// are principal submatrices of it. Patches with the same member pattern
/// share one factorization.
pub fn build_vanka(layout: PatchLayout, grid: &GridSpec, a: &Stencil) -> Result<VankaOperator> {
    if layout.dim != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: layout.dim,
        });
    }
    if a.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: a.dim(),
        });
    }
    let members = layout.member_offsets();
    let mut shapes: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut classes = Vec::new();
    let mut patches = Vec::new();
    let mut counts = vec![0usize; grid.len()];

    for anchor in layout.anchors(grid) {
        let mut dofs = Vec::with_capacity(members.len());
        let mut present = Vec::with_capacity(members.len());
        for (m, o) in members.iter().enumerate() {
            if let Some(j) = grid.shifted(&anchor, o) {
                dofs.push(j);
                present.push(m);
            }
        }
        if dofs.is_empty() {
            continue;
        }
        let class = match shapes.get(&present) {
            Some(&c) => c,
            None => {
                let k = dofs.len();
                let local_matrix =
                    DMatrix::from_fn(k, k, |p, q| grid.matrix_entry(a, dofs[p], dofs[q]));
                let local_inverse = local_matrix
                    .clone()
                    .try_inverse()
                    .ok_or(Error::SingularPatch)?;
                classes.push(PatchClass {
                    local_matrix,
                    local_inverse,
                });
                shapes.insert(present, classes.len() - 1);
                classes.len() - 1
            }
        };
        for &j in &dofs {
            counts[j] += 1;
        }
        patches.push(Patch { dofs, class });
    }

    if patches.is_empty() || counts.contains(&0) {
        return Err(Error::EmptyPatchSet);
    }
    let weights = counts.into_iter().map(|c| 1.0 / c as f64).collect();
    Ok(VankaOperator {
        grid: *grid,
        layout,
        patches,
        classes,
        weights,
    })
}

impl VankaOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn layout(&self) -> PatchLayout {
        self.layout
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    /// Per-DoF counting weights, `1 / #patches containing the DoF`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn local_matrix(&self, patch: usize) -> &DMatrix<f64> {
        &self.classes[self.patches[patch].class].local_matrix
    }

    pub fn local_inverse(&self, patch: usize) -> &DMatrix<f64> {
        &self.classes[self.patches[patch].class].local_inverse
    }

    /// Number of distinct local factorizations.
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Permutes the patch list; `order[k]` is the old index of the new k-th patch.
    pub fn reorder_patches(&mut self, order: &[usize]) {
        assert_eq!(order.len(), self.patches.len());
        self.patches = order.iter().map(|&k| self.patches[k].clone()).collect();
    }

    fn check_input(&self, r: &GridFunction) -> Result<()> {
        if r.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                found: r.len(),
            });
        }
        Ok(())
    }

    fn accumulate(&self, patch: &Patch, r: &[f64], out: &mut [f64], local: &mut Vec<f64>) {
        let inv = &self.classes[patch.class].local_inverse;
        local.clear();
        local.extend(patch.dofs.iter().map(|&j| r[j]));
        for (p, &j) in patch.dofs.iter().enumerate() {
            let mut acc = 0.0;
            for (q, rq) in local.iter().enumerate() {
                acc += inv[(p, q)] * rq;
            }
            out[j] += self.weights[j] * acc;
        }
    }
}

/// `M·r = Σᵢ Vᵢᵀ W Aᵢ⁻¹ Vᵢ r`, visiting patches sequentially in list order.
pub fn apply_vanka(v: &VankaOperator, r: &GridFunction) -> Result<GridFunction> {
    v.check_input(r)?;
    let input = r.as_slice();
    let mut out = vec![0.0; input.len()];
    let mut local = Vec::with_capacity(5);
    for patch in &v.patches {
        v.accumulate(patch, input, &mut out, &mut local);
    }
    GridFunction::from_vec(&v.grid, out)
}

/// Parallel [`apply_vanka`] with per-thread accumulators. Agrees with the
/// sequential result up to floating-point summation order.
pub fn apply_vanka_par(v: &VankaOperator, r: &GridFunction) -> Result<GridFunction> {
    v.check_input(r)?;
    let input = r.as_slice();
    let n = input.len();
    let out = v
        .patches
        .par_chunks(256)
        .fold(
            || (vec![0.0; n], Vec::with_capacity(5)),
            |(mut acc, mut local), chunk| {
                for patch in chunk {
                    v.accumulate(patch, input, &mut acc, &mut local);
                }
                (acc, local)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![0.0; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    GridFunction::from_vec(&v.grid, out)
}

/// Exact interior stencil of the additive Vanka operator for the
/// finite-difference Laplacian.
pub fn closed_form_stencil(layout: PatchLayout, h: f64) -> Result<Stencil> {
    let h = meshsize(h)?;
    let h2 = &h * &h;
    let grid2 = |den: i64, rows: &[&[i64]]| -> Result<Stencil> {
        let half = (rows.len() / 2) as i32;
        let mut entries: Vec<(Offset, BigRational)> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                entries.push((vec![j as i32 - half, i as i32 - half], &h2 * rat(c, den)));
            }
        }
        Stencil::new(2, entries)
    };
    match (layout.kind, layout.dim) {
        (PatchKind::ElementWise, 1) => {
            Stencil::centered_1d(&[1, 4, 1].map(|c| &h2 * rat(c, 6)))
        }
        (PatchKind::VertexWise, 1) => {
            Stencil::centered_1d(&[1, 4, 10, 4, 1].map(|c| &h2 * rat(c, 12)))
        }
        (PatchKind::ElementWise, 2) => grid2(96, &[&[1, 4, 1], &[4, 28, 4], &[1, 4, 1]]),
        (PatchKind::VertexWise, 2) => grid2(
            240,
            &[
                &[0, 0, 1, 0, 0],
                &[0, 2, 8, 2, 0],
                &[1, 8, 68, 8, 1],
                &[0, 2, 8, 2, 0],
                &[0, 0, 1, 0, 0],
            ],
        ),
        (_, dim) => Err(Error::Unsupported {
            what: "closed-form Vanka stencil".into(),
            dim,
        }),
    }
}

/// A linear operator acting on grid functions of one grid.
pub trait GridOperator: Send + Sync {
    fn grid(&self) -> &GridSpec;
    fn apply_to(&self, u: &GridFunction) -> Result<GridFunction>;
}

/// A stencil realized on a grid under the grid's boundary mode.
#[derive(Debug, Clone)]
pub struct StencilOperator {
    pub stencil: Stencil,
    pub grid: GridSpec,
}

impl StencilOperator {
    pub fn new(stencil: Stencil, grid: GridSpec) -> Result<Self> {
        if stencil.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: stencil.dim(),
            });
        }
        Ok(Self { stencil, grid })
    }
}

impl GridOperator for StencilOperator {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn apply_to(&self, u: &GridFunction) -> Result<GridFunction> {
        stencil::apply(&self.stencil, &self.grid, u)
    }
}

impl GridOperator for VankaOperator {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn apply_to(&self, u: &GridFunction) -> Result<GridFunction> {
        apply_vanka(self, u)
    }
}

/// Explicit matrix of `op`, assembled column by column from unit vectors.
pub fn assemble_dense(op: &dyn GridOperator) -> Result<DMatrix<f64>> {
    let grid = op.grid();
    let size = grid.len();
    if size > DENSE_CAP {
        return Err(Error::SizeCapExceeded {
            size,
            cap: DENSE_CAP,
        });
    }
    let mut m = DMatrix::zeros(size, size);
    for j in 0..size {
        let col = op.apply_to(&GridFunction::delta(grid, j))?;
        m.set_column(j, &DVector::from_column_slice(col.as_slice()));
    }
    Ok(m)
}

/// Writes the nonzero entries of `m` as `row col value` lines.
pub fn write_triplets<W: Write>(m: &DMatrix<f64>, mut w: W) -> io::Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                writeln!(w, "{i} {j} {v:e}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::laplacian_stencil;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn matrix_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_close(*x, *y, tol);
        }
    }

    fn interior_patch(v: &VankaOperator, anchor: &[usize]) -> usize {
        let g = v.grid();
        let idx = g.index(anchor);
        let size = v.layout().interior_patch_size();
        v.patches()
            .iter()
            .position(|p| {
                p.dofs().len() == size
                    && match v.layout().kind() {
                        PatchKind::ElementWise => p.dofs()[0] == idx,
                        PatchKind::VertexWise => p.dofs()[size / 2] == idx,
                    }
            })
            .unwrap()
    }

    #[test]
    fn element_1d_local_matrix_and_inverse() {
        let h = 0.125;
        let g = GridSpec::unit(1, 7).unwrap();
        let a = laplacian_stencil(1, h).unwrap();
        let v = build_vanka(PatchLayout::new(PatchKind::ElementWise, 1).unwrap(), &g, &a).unwrap();
        let p = interior_patch(&v, &[3]);
        let s = 1.0 / (h * h);
        matrix_close(
            v.local_matrix(p),
            &DMatrix::from_row_slice(2, 2, &[2.0 * s, -s, -s, 2.0 * s]),
            1e-9,
        );
        let t = h * h / 3.0;
        matrix_close(
            v.local_inverse(p),
            &DMatrix::from_row_slice(2, 2, &[2.0 * t, t, t, 2.0 * t]),
            1e-15,
        );
    }

    #[test]
    fn vertex_1d_inverse() {
        let h = 0.25;
        let g = GridSpec::dirichlet(1, 7, h).unwrap();
        let a = laplacian_stencil(1, h).unwrap();
        let v = build_vanka(PatchLayout::new(PatchKind::VertexWise, 1).unwrap(), &g, &a).unwrap();
        let p = interior_patch(&v, &[3]);
        let t = h * h / 4.0;
        let expect = DMatrix::from_row_slice(3, 3, &[3.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 3.0]) * t;
        matrix_close(v.local_inverse(p), &expect, 1e-15);
    }

    #[test]
    fn vertex_2d_inverse_matches_printed_matrix() {
        let h = 0.5;
        let g = GridSpec::dirichlet(2, 7, h).unwrap();
        let a = laplacian_stencil(2, h).unwrap();
        let v = build_vanka(PatchLayout::new(PatchKind::VertexWise, 2).unwrap(), &g, &a).unwrap();
        let p = interior_patch(&v, &[3, 3]);
        let (d, o, c) = (13.0 / 48.0, 1.0 / 48.0, 1.0 / 12.0);
        #[rustfmt::skip]
        let expect = DMatrix::from_row_slice(5, 5, &[
            d, o, c, o, o,
            o, d, c, o, o,
            c, c, 1.0 / 3.0, c, c,
            o, o, c, d, o,
            o, o, c, o, d,
        ]) * (h * h);
        matrix_close(v.local_inverse(p), &expect, 1e-15);
    }

    #[test]
    fn element_2d_inverse_matches_printed_matrix() {
        let g = GridSpec::dirichlet(2, 6, 1.0).unwrap();
        let a = laplacian_stencil(2, 1.0).unwrap();
        let v = build_vanka(PatchLayout::new(PatchKind::ElementWise, 2).unwrap(), &g, &a).unwrap();
        let p = interior_patch(&v, &[2, 2]);
        let (d, e, f) = (7.0 / 24.0, 1.0 / 12.0, 1.0 / 24.0);
        #[rustfmt::skip]
        let expect = DMatrix::from_row_slice(4, 4, &[
            d, e, e, f,
            e, d, f, e,
            e, f, d, e,
            f, e, e, d,
        ]);
        matrix_close(v.local_inverse(p), &expect, 1e-15);
    }

    #[test]
    fn local_inverses_invert() {
        for kind in [PatchKind::ElementWise, PatchKind::VertexWise] {
            for dim in 1..=2 {
                let g = GridSpec::unit(dim, 7).unwrap();
                let a = laplacian_stencil(dim, g.h()).unwrap();
                let v = build_vanka(PatchLayout::new(kind, dim).unwrap(), &g, &a).unwrap();
                for i in 0..v.patches().len() {
                    let prod = v.local_inverse(i) * v.local_matrix(i);
                    let k = prod.nrows();
                    matrix_close(&prod, &DMatrix::identity(k, k), 1e-12);
                }
            }
        }
    }

    #[test]
    fn local_matrix_is_principal_submatrix() {
        let g = GridSpec::unit(2, 5).unwrap();
        let a = laplacian_stencil(2, g.h()).unwrap();
        let full = assemble_dense(&StencilOperator::new(a.clone(), g).unwrap()).unwrap();
        for kind in [PatchKind::ElementWise, PatchKind::VertexWise] {
            let v = build_vanka(PatchLayout::new(kind, 2).unwrap(), &g, &a).unwrap();
            for (i, patch) in v.patches().iter().enumerate() {
                let m = v.local_matrix(i);
                for (p, &dp) in patch.dofs().iter().enumerate() {
                    for (q, &dq) in patch.dofs().iter().enumerate() {
                        assert_eq!(m[(p, q)], full[(dp, dq)]);
                    }
                }
            }
        }
    }

    #[test]
    fn weights_and_coverage() {
        let g = GridSpec::unit(2, 9).unwrap();
        let a = laplacian_stencil(2, g.h()).unwrap();
        let e = build_vanka(PatchLayout::new(PatchKind::ElementWise, 2).unwrap(), &g, &a).unwrap();
        // boundary cells are kept (truncated), so every DoF sits in 4 patches
        assert!(e.weights().iter().all(|&w| w == 0.25));
        assert_eq!(e.patches().len(), 10 * 10);

        let v = build_vanka(PatchLayout::new(PatchKind::VertexWise, 2).unwrap(), &g, &a).unwrap();
        assert_eq!(v.patches().len(), 81);
        assert_eq!(v.weights()[g.index(&[4, 4])], 0.2);
        assert_eq!(v.weights()[g.index(&[0, 4])], 0.25);
        assert_eq!(v.weights()[g.index(&[0, 0])], 1.0 / 3.0);

        let mut covered = vec![false; g.len()];
        for p in v.patches() {
            for &j in p.dofs() {
                covered[j] = true;
            }
        }
        assert!(covered.into_iter().all(|c| c));
        // interior patches share one factorization
        assert!(v.class_count() <= 9);
    }

    #[test]
    fn zero_residual_gives_zero() {
        let g = GridSpec::unit(2, 7).unwrap();
        let a = laplacian_stencil(2, g.h()).unwrap();
        let v = build_vanka(PatchLayout::new(PatchKind::VertexWise, 2).unwrap(), &g, &a).unwrap();
        let out = apply_vanka(&v, &GridFunction::zeros(&g)).unwrap();
        assert!(out.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn parallel_matches_sequential() {
        let g = GridSpec::unit(2, 31).unwrap();
        let a = laplacian_stencil(2, g.h()).unwrap();
        let v = build_vanka(PatchLayout::new(PatchKind::ElementWise, 2).unwrap(), &g, &a).unwrap();
        let r = GridFunction::from_fn(&g, |x| (x[0] * 7.0).sin() + x[1] * x[1]);
        let s = apply_vanka(&v, &r).unwrap();
        let p = apply_vanka_par(&v, &r).unwrap();
        for (x, y) in s.as_slice().iter().zip(p.as_slice()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-3));
        }
    }

    #[test]
    fn three_d_patches_unsupported() {
        assert!(matches!(
            PatchLayout::new(PatchKind::ElementWise, 3),
            Err(Error::Unsupported { dim: 3, .. })
        ));
    }

    #[test]
    fn layout_grid_mismatch() {
        let g = GridSpec::unit(2, 5).unwrap();
        let a = laplacian_stencil(2, g.h()).unwrap();
        let l = PatchLayout::new(PatchKind::ElementWise, 1).unwrap();
        assert!(matches!(build_vanka(l, &g, &a), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dense_assembly_of_laplacian() {
        let g = GridSpec::dirichlet(1, 3, 1.0).unwrap();
        let op = StencilOperator::new(laplacian_stencil(1, 1.0).unwrap(), g).unwrap();
        let m = assemble_dense(&op).unwrap();
        assert_eq!(
            m,
            DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0])
        );
        let mut buf = Vec::new();
        write_triplets(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("0 0 2e0\n0 1 -1e0\n"));
    }

    #[test]
    fn dense_cap_enforced() {
        let g = GridSpec::unit(3, 17).unwrap();
        let op = StencilOperator::new(laplacian_stencil(3, g.h()).unwrap(), g).unwrap();
        assert_eq!(
            assemble_dense(&op).unwrap_err(),
            Error::SizeCapExceeded { size: 4913, cap: DENSE_CAP }
        );
    }

    #[test]
    fn closed_form_unsupported_dim() {
        // 3D layouts cannot even be constructed; the error is the layout's.
        assert!(PatchLayout::new(PatchKind::VertexWise, 3).is_err());
        let l = PatchLayout { kind: PatchKind::VertexWise, dim: 3 };
        assert!(matches!(closed_form_stencil(l, 1.0), Err(Error::Unsupported { .. })));
    }
}
