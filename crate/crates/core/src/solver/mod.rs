//! Two-grid and V-cycle solves of the Dirichlet Poisson problem with the
//! additive Vanka, mass and Jacobi smoothers, and measured convergence
//! factors for comparison with the Fourier analysis.

mod transfer;

pub use transfer::{
    assemble_sparse, coarse_grid, galerkin, galerkin_matrix, prolong, prolongation_matrix, restrict,
    stencil_from_row,
};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, SymmetryCheck};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::error::{Error, Result};
use crate::lfa::{preconditioner_stencil, SmootherKind, SmootherSpec};
use crate::stencil::{apply, exact, laplacian_stencil, GridFunction, GridSpec, Stencil};
use crate::vanka::{apply_vanka, build_vanka, PatchLayout, VankaOperator, DENSE_CAP};

/// Smallest number of cycles [`Multigrid::measure`] accepts.
pub const MIN_CYCLES: usize = 50;
const TAIL: usize = 10;
const STAGNATION: f64 = 1e-14;
/// Coarsest levels up to this many unknowns are factored densely.
pub const DENSE_COARSE: usize = 1024;
/// Largest coarsest level accepted at all.
pub const COARSE_CAP: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleKind {
    TwoGrid,
    VCycle,
}

#[derive(Debug, Clone)]
pub struct CycleSpec {
    pub smoother: SmootherSpec,
    pub nu1: u32,
    pub nu2: u32,
    pub cycle: CycleKind,
}

impl CycleSpec {
    pub fn new(smoother: SmootherSpec, nu1: u32, nu2: u32, cycle: CycleKind) -> Result<Self> {
        if nu1 + nu2 == 0 {
            return Err(Error::InvalidConfig(
                "at least one smoothing sweep is required (nu1 + nu2 >= 1)".into(),
            ));
        }
        Ok(Self {
            smoother,
            nu1,
            nu2,
            cycle,
        })
    }
}

/// The relaxation preconditioner `M` on one level.
#[derive(Debug, Clone)]
pub enum LevelSmoother {
    Vanka(VankaOperator),
    Stencil(Stencil),
}

impl LevelSmoother {
    /// `M` for `kind` on `grid`, paired with the level operator `a`.
    ///
    /// Mass and Jacobi stencils are rescaled by `(2d/h²)/a[0]` so that `M̃Ã`
    /// keeps its fine-level range when `a` is a Galerkin operator.
    pub fn new(kind: SmootherKind, a: &Stencil, grid: &GridSpec) -> Result<Self> {
        match kind.patch_kind() {
            Some(pk) => Ok(Self::Vanka(build_vanka(PatchLayout::new(pk, grid.dim())?, grid, a)?)),
            None => {
                let h = exact(grid.h())?;
                let d = BigRational::from_integer((2 * grid.dim()).into());
                let rediscretized = d / (&h * &h);
                let factor = rediscretized / a.center();
                let m = preconditioner_stencil(kind, grid.dim(), grid.h())?;
                Ok(Self::Stencil(m.scaled(&factor)?))
            }
        }
    }

    pub fn apply(&self, grid: &GridSpec, r: &GridFunction) -> Result<GridFunction> {
        match self {
            Self::Vanka(v) => apply_vanka(v, r),
            Self::Stencil(m) => apply(m, grid, r),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    pub grid: GridSpec,
    pub stencil: Stencil,
    pub matrix: CsMat<f64>,
    pub smoother: LevelSmoother,
}

impl Level {
    fn residual(&self, u: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
        Ok(b.sub(&apply(&self.stencil, &self.grid, u)?))
    }

    /// `u ← u + ω M (b - A u)`.
    fn relax(&self, omega: f64, u: &mut GridFunction, b: &GridFunction) -> Result<()> {
        let r = self.residual(u, b)?;
        let z = self.smoother.apply(&self.grid, &r)?;
        u.axpy(omega, &z);
        Ok(())
    }
}

/// One relaxation sweep `u + ω M (b - A u)` of `sm` for the operator `a` on `grid`.
pub fn relax(sm: &SmootherSpec, a: &Stencil, grid: &GridSpec, u: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    if u.len() != grid.len() || b.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: if u.len() != grid.len() { u.len() } else { b.len() },
        });
    }
    let level = Level {
        grid: *grid,
        stencil: a.clone(),
        matrix: CsMat::zero((0, 0)),
        smoother: LevelSmoother::new(sm.kind(), a, grid)?,
    };
    let mut out = u.clone();
    level.relax(sm.omega(), &mut out, b)?;
    Ok(out)
}

#[derive(Debug, Clone)]
enum CoarseSolver {
    Dense(Cholesky<f64, Dyn>),
    Sparse(Box<LdlNumeric<f64, usize>>),
}

impl CoarseSolver {
    fn new(m: &CsMat<f64>) -> Result<Self> {
        let size = m.rows();
        if size > COARSE_CAP {
            return Err(Error::SizeCapExceeded {
                size,
                cap: COARSE_CAP,
            });
        }
        if size <= DENSE_COARSE {
            let mut dense = DMatrix::zeros(size, size);
            for (v, (i, j)) in m.iter() {
                dense[(i, j)] = *v;
            }
            Cholesky::new(dense).map(Self::Dense).ok_or(Error::SingularCoarseSolve)
        } else {
            let ldl = Ldl::new()
                .check_symmetry(SymmetryCheck::DontCheckSymmetry)
                .numeric(m.view())
                .map_err(|_| Error::SingularCoarseSolve)?;
            if ldl.d().iter().any(|&d| d <= 0.0) {
                return Err(Error::SingularCoarseSolve);
            }
            Ok(Self::Sparse(Box::new(ldl)))
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense(c) => c.solve(&DVector::from_column_slice(b)).as_slice().to_vec(),
            Self::Sparse(l) => l.solve(b),
        }
    }
}

/// Levels from fine to coarse with a direct factorization of the coarsest:
/// dense Cholesky for small problems, sparse `LDLᵀ` above [`DENSE_COARSE`].
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
    coarse: CoarseSolver,
}

impl Hierarchy {
    /// Two levels for [`CycleKind::TwoGrid`]; for [`CycleKind::VCycle`]
    /// coarsening continues down to `n = 3`.
    pub fn new(kind: SmootherKind, cycle: CycleKind, fine: &GridSpec) -> Result<Self> {
        let a = laplacian_stencil(fine.dim(), fine.h())?;
        let mut levels = vec![Level {
            grid: *fine,
            matrix: assemble_sparse(&a, fine)?,
            smoother: LevelSmoother::new(kind, &a, fine)?,
            stencil: a,
        }];
        loop {
            let last = levels.last().expect("at least the fine level");
            let done = match cycle {
                CycleKind::TwoGrid => levels.len() == 2,
                CycleKind::VCycle => levels.len() >= 2 && last.grid.n() <= 3,
            };
            if done {
                break;
            }
            let grid = coarse_grid(&last.grid)?;
            let (stencil, matrix) = galerkin(&last.stencil, &last.grid)?;
            levels.push(Level {
                grid,
                smoother: LevelSmoother::new(kind, &stencil, &grid)?,
                stencil,
                matrix,
            });
        }
        let coarse = CoarseSolver::new(&levels.last().expect("at least two levels").matrix)?;
        Ok(Self { levels, coarse })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    fn coarse_solve(&self, b: &GridFunction) -> Result<GridFunction> {
        let grid = &self.levels.last().expect("nonempty hierarchy").grid;
        GridFunction::from_vec(grid, self.coarse.solve(b.as_slice()))
    }
}

/// Per-cycle record of a homogeneous run.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Geometric mean of the last 10 error-reduction ratios.
    pub rho: f64,
    /// `‖e_k‖ / ‖e_{k-1}‖` for every cycle.
    pub ratios: Vec<f64>,
    /// `‖A e_k‖` of the unnormalized iteration, starting with the initial error.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Multigrid {
    spec: CycleSpec,
    hierarchy: Hierarchy,
}

impl Multigrid {
    pub fn new(spec: CycleSpec, fine: &GridSpec) -> Result<Self> {
        if spec.smoother.dim() != fine.dim() {
            return Err(Error::DimensionMismatch {
                expected: fine.dim(),
                found: spec.smoother.dim(),
            });
        }
        if !spec.smoother.kind().supports(fine.dim()) {
            return Err(Error::Unsupported {
                what: format!("smoother {}", spec.smoother.kind()),
                dim: fine.dim(),
            });
        }
        let hierarchy = Hierarchy::new(spec.smoother.kind(), spec.cycle, fine)?;
        Ok(Self { spec, hierarchy })
    }

    pub fn spec(&self) -> &CycleSpec {
        &self.spec
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn grid(&self) -> &GridSpec {
        &self.hierarchy.levels[0].grid
    }

    fn cycle_at(&self, l: usize, u: &mut GridFunction, b: &GridFunction) -> Result<()> {
        let levels = &self.hierarchy.levels;
        let level = &levels[l];
        let omega = self.spec.smoother.omega();
        for _ in 0..self.spec.nu1 {
            level.relax(omega, u, b)?;
        }
        let rc = restrict(&level.grid, &level.residual(u, b)?)?;
        let ec = if l + 2 == levels.len() {
            self.hierarchy.coarse_solve(&rc)?
        } else {
            let mut ec = GridFunction::zeros(&levels[l + 1].grid);
            self.cycle_at(l + 1, &mut ec, &rc)?;
            ec
        };
        u.axpy(1.0, &prolong(&level.grid, &ec)?);
        for _ in 0..self.spec.nu2 {
            level.relax(omega, u, b)?;
        }
        Ok(())
    }

    /// One cycle applied to the iterate `u` for right-hand side `b`.
    pub fn cycle(&self, u: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
        let g = self.grid();
        if u.len() != g.len() || b.len() != g.len() {
            return Err(Error::LengthMismatch {
                expected: g.len(),
                found: if u.len() != g.len() { u.len() } else { b.len() },
            });
        }
        let mut out = u.clone();
        self.cycle_at(0, &mut out, b)?;
        Ok(out)
    }

    /// The error-propagation matrix `E`, one cycle per unit vector with `b = 0`.
    pub fn error_propagation_matrix(&self) -> Result<DMatrix<f64>> {
        let g = *self.grid();
        if g.len() > DENSE_CAP {
            return Err(Error::SizeCapExceeded {
                size: g.len(),
                cap: DENSE_CAP,
            });
        }
        let zero = GridFunction::zeros(&g);
        let mut e = DMatrix::zeros(g.len(), g.len());
        for j in 0..g.len() {
            let col = self.cycle(&GridFunction::delta(&g, j), &zero)?;
            e.set_column(j, &DVector::from_column_slice(col.as_slice()));
        }
        Ok(e)
    }

    /// Runs `cycles` cycles on `A u = 0` from a seeded uniform random start.
    ///
    /// The error is renormalized after every cycle so it never reaches
    /// rounding level; a single cycle shrinking it below 1e-14 is reported as
    /// [`Error::Stagnation`] since no asymptotic factor can be read from it.
    pub fn measure(&self, cycles: usize, seed: u64) -> Result<Measurement> {
        if cycles < MIN_CYCLES {
            return Err(Error::InvalidConfig(format!(
                "at least {MIN_CYCLES} cycles are needed, got {cycles}"
            )));
        }
        let g = *self.grid();
        let level = &self.hierarchy.levels[0];
        let zero = GridFunction::zeros(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut u = GridFunction::from_vec(&g, init)?;
        u.scale(1.0 / u.norm2());
        let mut scale = 1.0;
        let mut ratios = Vec::with_capacity(cycles);
        let mut residuals = Vec::with_capacity(cycles + 1);
        residuals.push(level.residual(&u, &zero)?.norm2());
        for k in 1..=cycles {
            let next = self.cycle(&u, &zero)?;
            let ratio = next.norm2() / u.norm2();
            if ratio.is_nan() || ratio < STAGNATION {
                return Err(Error::Stagnation { cycle: k, ratio });
            }
            scale *= ratio;
            ratios.push(ratio);
            u = next;
            residuals.push(scale * level.residual(&u, &zero)?.norm2() / u.norm2());
            u.scale(1.0 / u.norm2());
        }
        let tail = &ratios[ratios.len() - TAIL..];
        let rho = (tail.iter().map(|r| r.ln()).sum::<f64>() / TAIL as f64).exp();
        Ok(Measurement {
            rho,
            ratios,
            residuals,
        })
    }
}

/// Measured asymptotic factor for `spec` on the unit grid of meshsize `h`.
pub fn measured_convergence_factor(spec: &CycleSpec, h: f64, cycles: usize, seed: u64) -> Result<Measurement> {
    let n = unit_points(h)?;
    let grid = GridSpec::unit(spec.smoother.dim(), n)?;
    Multigrid::new(spec.clone(), &grid)?.measure(cycles, seed)
}

/// `n = 1/h - 1` for `h = 1/2^k`, `k ≥ 2`.
pub fn unit_points(h: f64) -> Result<usize> {
    let inv = 1.0 / h;
    if !h.is_finite() || h <= 0.0 || inv.fract() != 0.0 || inv < 4.0 || !(inv as u64).is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "h must be 1/2^k with k >= 2, got {h}"
        )));
    }
    Ok(inv as usize - 1)
}
