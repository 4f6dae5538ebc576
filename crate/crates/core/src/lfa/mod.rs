//! Local Fourier analysis: stencil symbols, smoothing factors with their
//! optimal damping, and the two-grid error symbol over the `2^d` harmonics.

mod exact;
mod spectral;
mod two_grid;

pub use exact::{chebyshev, exact_optimum, symbol_in_cosines, ExactOptimum};
pub use spectral::{eigenvalues, spectral_radius, spectral_radius_by_squaring};
pub use two_grid::{
    eigenfield, harmonics, transfer_symbols, two_grid_factor, two_grid_maximum, two_grid_symbol,
    Eigenfield, EigenfieldRow, TransferSymbols, TwoGridMaximum, TwoGridSymbol,
};

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{self, check_dim, laplacian_stencil, mass_stencil, rat, Offset, Stencil};
use crate::vanka::{closed_form_stencil, PatchKind, PatchLayout};

/// `Σ_o s[o]·exp(ι o·θ)`.
pub fn symbol(s: &Stencil, theta: &[f64]) -> Result<Complex64> {
    if theta.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: theta.len(),
        });
    }
    Ok(symbol_of_taps(s.taps(), theta))
}

pub(crate) fn symbol_of_taps(taps: &[(Offset, f64)], theta: &[f64]) -> Complex64 {
    taps.iter().fold(Complex64::zero(), |acc, (o, c)| {
        let phase: f64 = o.iter().zip(theta).map(|(&k, t)| k as f64 * t).sum();
        acc + Complex64::from_polar(*c, phase)
    })
}

/// Equispaced samples `θ_k = -π/2 + k·2π/N`, `k = 0..N`, in each dimension.
///
/// Low/high membership is decided on the integer index (`θ_k < π/2` iff
/// `2k < N`), so the half-open box boundaries are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    dim: usize,
    samples_per_dim: usize,
}

/// One sample of a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySample {
    pub index: Vec<usize>,
    pub theta: Vec<f64>,
}

impl FrequencyGrid {
    pub const DEFAULT_SAMPLES: usize = 64;

    pub fn new(dim: usize, samples_per_dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if samples_per_dim == 0 {
            return Err(Error::InvalidConfig("samples per dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            samples_per_dim,
        })
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(dim, Self::DEFAULT_SAMPLES)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples_per_dim(&self) -> usize {
        self.samples_per_dim
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.samples_per_dim as f64
    }

    pub fn theta_at(&self, k: usize) -> f64 {
        -FRAC_PI_2 + k as f64 * self.spacing()
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.samples_per_dim.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample(&self, mut flat: usize) -> FrequencySample {
        let mut index = vec![0; self.dim];
        for slot in index.iter_mut() {
            *slot = flat % self.samples_per_dim;
            flat /= self.samples_per_dim;
        }
        let theta = index.iter().map(|&k| self.theta_at(k)).collect();
        FrequencySample { index, theta }
    }

    pub fn samples(&self) -> impl Iterator<Item = FrequencySample> + '_ {
        (0..self.len()).map(|i| self.sample(i))
    }

    /// Every component in `[-π/2, π/2)`.
    pub fn is_low(&self, index: &[usize]) -> bool {
        index.iter().all(|&k| 2 * k < self.samples_per_dim)
    }

    /// `θ = 0`, which exists only when `N` is divisible by 4.
    pub fn is_origin(&self, index: &[usize]) -> bool {
        index.iter().all(|&k| 4 * k == self.samples_per_dim)
    }

    pub(crate) fn flat_indices(&self, low: bool) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.is_low(&self.sample(i).index) == low)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SmootherKind {
    #[serde(rename = "jacobi")]
    Jacobi,
    #[serde(rename = "vanka-e")]
    VankaElement,
    #[serde(rename = "vanka-v")]
    VankaVertex,
    #[serde(rename = "mass")]
    MassFE,
    #[serde(rename = "mass3d")]
    Mass3D,
}

impl SmootherKind {
    pub const ALL: [SmootherKind; 5] = [
        SmootherKind::Jacobi,
        SmootherKind::VankaElement,
        SmootherKind::VankaVertex,
        SmootherKind::MassFE,
        SmootherKind::Mass3D,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SmootherKind::Jacobi => "jacobi",
            SmootherKind::VankaElement => "vanka-e",
            SmootherKind::VankaVertex => "vanka-v",
            SmootherKind::MassFE => "mass",
            SmootherKind::Mass3D => "mass3d",
        }
    }

    pub fn patch_kind(&self) -> Option<PatchKind> {
        match self {
            SmootherKind::VankaElement => Some(PatchKind::ElementWise),
            SmootherKind::VankaVertex => Some(PatchKind::VertexWise),
            _ => None,
        }
    }

    pub fn supports(&self, dim: usize) -> bool {
        match self {
            SmootherKind::Jacobi => (1..=3).contains(&dim),
            SmootherKind::VankaElement | SmootherKind::VankaVertex | SmootherKind::MassFE => {
                dim == 1 || dim == 2
            }
            SmootherKind::Mass3D => dim == 3,
        }
    }
}

impl fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SmootherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown smoother kind {s:?}")))
    }
}

/// The approximate inverse `M` in `S = I - ωMA_h` for a smoother kind.
///
/// Jacobi uses `h²/(2d)·δ₀`. `MassFE` is the bilinear mass stencil in 2D and
/// `h·M_fe` in 1D (which coincides with the element-wise Vanka stencil).
pub fn preconditioner_stencil(kind: SmootherKind, dim: usize, h: f64) -> Result<Stencil> {
    check_dim(dim)?;
    if !kind.supports(dim) {
        return Err(Error::Unsupported {
            what: format!("smoother {kind}"),
            dim,
        });
    }
    match kind {
        SmootherKind::Jacobi => {
            let hr = stencil::meshsize(h)?;
            Stencil::delta(dim, &hr * &hr * rat(1, 2 * dim as i64))
        }
        SmootherKind::VankaElement | SmootherKind::VankaVertex => {
            let layout = PatchLayout::new(kind.patch_kind().expect("vanka kind"), dim)?;
            closed_form_stencil(layout, h)
        }
        SmootherKind::MassFE => {
            let m = mass_stencil(dim, h)?;
            if dim == 1 {
                m.scaled(&stencil::meshsize(h)?)
            } else {
                Ok(m)
            }
        }
        SmootherKind::Mass3D => mass_stencil(3, h),
    }
}

/// A smoother kind with its damping parameter, realized at meshsize `h`.
#[derive(Debug, Clone)]
pub struct SmootherSpec {
    kind: SmootherKind,
    dim: usize,
    omega: f64,
    h: f64,
    m_stencil: Stencil,
    a_stencil: Stencil,
}

impl SmootherSpec {
    /// `omega = 0` is accepted and gives the identity smoother.
    pub fn new(kind: SmootherKind, dim: usize, omega: f64, h: f64) -> Result<Self> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "damping parameter must be finite and nonnegative, got {omega}"
            )));
        }
        let m_stencil = preconditioner_stencil(kind, dim, h)?;
        let a_stencil = laplacian_stencil(dim, h)?;
        Ok(Self {
            kind,
            dim,
            omega,
            h,
            m_stencil,
            a_stencil,
        })
    }

    /// Uses the exact optimal damping of the kind.
    pub fn optimal(kind: SmootherKind, dim: usize, h: f64) -> Result<Self> {
        let opt = exact_optimum(kind, dim)?;
        Self::new(kind, dim, opt.omega_f64(), h)
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.kind, self.dim, omega, self.h)
    }

    pub fn kind(&self) -> SmootherKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn m_stencil(&self) -> &Stencil {
        &self.m_stencil
    }

    pub fn a_stencil(&self) -> &Stencil {
        &self.a_stencil
    }

    /// `M̃(θ)·Ã_h(θ)`, real for the symmetric stencils used here.
    pub fn product_symbol(&self, theta: &[f64]) -> f64 {
        (symbol_of_taps(self.m_stencil.taps(), theta) * symbol_of_taps(self.a_stencil.taps(), theta)).re
    }
}

/// `S̃(θ, ω) = 1 - ω·M̃(θ)·Ã_h(θ)`.
pub fn smoother_symbol(sm: &SmootherSpec, theta: &[f64]) -> f64 {
    debug_assert_eq!(theta.len(), sm.dim);
    1.0 - sm.omega * sm.product_symbol(theta)
}

/// `μ(ω) = max |S̃(θ, ω)|` over the sampled high frequencies.
pub fn smoothing_factor(sm: &SmootherSpec, fgrid: &FrequencyGrid) -> Result<f64> {
    if fgrid.dim() != sm.dim {
        return Err(Error::DimensionMismatch {
            expected: sm.dim,
            found: fgrid.dim(),
        });
    }
    let high = fgrid.flat_indices(false);
    if high.is_empty() {
        return Err(Error::EmptyHighFrequencies);
    }
    Ok(high
        .par_iter()
        .map(|&i| smoother_symbol(sm, &fgrid.sample(i).theta).abs())
        .reduce(|| 0.0, f64::max))
}

/// Extremes of a product symbol over the sampled high frequencies; fails if
/// it is not positive everywhere there.
fn product_range<F>(product: F, fgrid: &FrequencyGrid) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let high = fgrid.flat_indices(false);
    if high.is_empty() {
        return Err(Error::EmptyHighFrequencies);
    }
    let values: Vec<(usize, f64)> = high
        .par_iter()
        .map(|&i| (i, product(&fgrid.sample(i).theta)))
        .collect();
    if let Some(&(i, value)) = values.iter().find(|(_, t)| *t <= 0.0) {
        return Err(Error::NonPositiveSymbol {
            theta: fgrid.sample(i).theta,
            value,
        });
    }
    let t_min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let t_max = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    Ok((t_min, t_max))
}

/// Sampled equioscillation optimum, with the exact rational optimum
/// attached when one is known for the kind.
#[derive(Debug, Clone)]
pub struct OptimalDamping {
    pub kind: SmootherKind,
    pub dim: usize,
    pub omega: f64,
    pub mu: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub exact: Option<ExactOptimum>,
}

/// Minimizes `max |1 - ωT(θ)|` over the sampled high frequencies, where
/// `T = M̃Ã_h` must be positive there: `ω* = 2/(t_min + t_max)`,
/// `μ* = (t_max - t_min)/(t_max + t_min)`.
pub fn optimal_omega(kind: SmootherKind, dim: usize, fgrid: &FrequencyGrid) -> Result<OptimalDamping> {
    if fgrid.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: fgrid.dim(),
        });
    }
    // T is independent of h; h = 1 keeps the taps O(1).
    let sm = SmootherSpec::new(kind, dim, 1.0, 1.0)?;
    let (t_min, t_max) = product_range(|t| sm.product_symbol(t), fgrid)?;
    let exact = match exact_optimum(kind, dim) {
        Ok(e) => Some(e),
        Err(Error::Unsupported { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(OptimalDamping {
        kind,
        dim,
        omega: 2.0 / (t_min + t_max),
        mu: (t_max - t_min) / (t_max + t_min),
        t_min,
        t_max,
        exact,
    })
}
