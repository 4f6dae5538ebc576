//! Two-grid error symbol `Ẽ = S̃^{ν2} (I - P̃ Ã_H⁻¹ R̃ Ã_h) S̃^{ν1}` on the
//! `2^d` harmonics `θ + κπ`, `κ ∈ {0,1}^d`, for linear/bilinear/trilinear
//! interpolation `P`, `R = Pᵀ` and the Galerkin coarse operator.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::spectral;
use super::{symbol_of_taps, FrequencyGrid, SmootherSpec};
use crate::error::{Error, Result};
use crate::stencil::{check_dim, Stencil};

use std::f64::consts::{FRAC_PI_2, PI};

/// `θ + κπ` for `κ ∈ {0,1}^d`, with bit `i` of the harmonic index selecting
/// the shift of axis `i`.
pub fn harmonics(theta: &[f64]) -> Vec<Vec<f64>> {
    let d = theta.len();
    (0..1usize << d)
        .map(|kappa| {
            theta
                .iter()
                .enumerate()
                .map(|(i, t)| if (kappa >> i) & 1 == 1 { t + PI } else { *t })
                .collect()
        })
        .collect()
}

/// Interpolation and restriction symbols at the harmonics of one base
/// frequency.
///
/// `P̃(θ') = Πᵢ cos²(θ'ᵢ/2)` and `R̃ = 2^d P̃ᵀ`: restriction is the exact
/// transpose of interpolation, whose row weights sum to `2^d`.
#[derive(Debug, Clone)]
pub struct TransferSymbols {
    pub harmonics: Vec<Vec<f64>>,
    pub prolongation: DVector<Complex64>,
    pub restriction: RowDVector<Complex64>,
}

impl TransferSymbols {
    /// Galerkin coarse symbol `Σ_κ R̃ Ã_h P̃`.
    pub fn coarse_symbol(&self, a: &Stencil) -> Complex64 {
        self.harmonics
            .iter()
            .enumerate()
            .map(|(j, t)| self.restriction[j] * symbol_of_taps(a.taps(), t) * self.prolongation[j])
            .sum()
    }
}

fn transfer_at(theta: &[f64]) -> TransferSymbols {
    let harmonics = harmonics(theta);
    let scale = (1usize << theta.len()) as f64;
    let p: Vec<Complex64> = harmonics
        .iter()
        .map(|t| Complex64::from(t.iter().map(|x| (x / 2.0).cos().powi(2)).product::<f64>()))
        .collect();
    let prolongation = DVector::from_vec(p);
    let restriction = prolongation.adjoint() * Complex64::from(scale);
    TransferSymbols {
        harmonics,
        prolongation,
        restriction,
    }
}

/// Transfer symbols for a base frequency in `[-π/2, π/2)^dim`.
pub fn transfer_symbols(dim: usize, theta: &[f64]) -> Result<TransferSymbols> {
    check_dim(dim)?;
    if theta.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: theta.len(),
        });
    }
    if theta.iter().any(|t| !(-FRAC_PI_2..FRAC_PI_2).contains(t)) {
        return Err(Error::NotLowFrequency(theta.to_vec()));
    }
    Ok(transfer_at(theta))
}

/// `Ẽ(θ)` as a `2^d × 2^d` matrix over the harmonics of `θ`.
#[derive(Debug, Clone)]
pub struct TwoGridSymbol {
    theta: Vec<f64>,
    matrix: DMatrix<Complex64>,
}

impl TwoGridSymbol {
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Eigenvalues, largest modulus first.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut ev = spectral::eigenvalues(&self.matrix).unwrap_or_default();
        ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        ev
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral::spectral_radius(&self.matrix)
    }

    pub fn spectral_radius_by_squaring(&self) -> f64 {
        spectral::spectral_radius_by_squaring(&self.matrix)
    }
}

/// Builds `Ẽ(θ)` for `ν1` pre- and `ν2` post-smoothing steps.
///
/// `θ` is normally a low frequency; any finite `θ` is accepted, and the
/// result for `θ + κπ` is a permutation similarity of the one for `θ`.
pub fn two_grid_symbol(sm: &SmootherSpec, theta: &[f64], nu1: u32, nu2: u32) -> Result<TwoGridSymbol> {
    if theta.len() != sm.dim() {
        return Err(Error::DimensionMismatch {
            expected: sm.dim(),
            found: theta.len(),
        });
    }
    let transfer = transfer_at(theta);
    let a_taps = sm.a_stencil().taps();
    let m_taps = sm.m_stencil().taps();
    let a: Vec<Complex64> = transfer
        .harmonics
        .iter()
        .map(|t| symbol_of_taps(a_taps, t))
        .collect();
    let s: Vec<Complex64> = transfer
        .harmonics
        .iter()
        .zip(&a)
        .map(|(t, at)| Complex64::from(1.0) - sm.omega() * symbol_of_taps(m_taps, t) * at)
        .collect();
    let a_coarse: Complex64 = (0..a.len())
        .map(|j| transfer.restriction[j] * a[j] * transfer.prolongation[j])
        .sum();
    let a_scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if a_coarse.norm() <= 1e-14 * a_scale {
        return Err(Error::SingularCoarseSymbol(theta.to_vec()));
    }
    let k = a.len();
    let p = &transfer.prolongation;
    let r = &transfer.restriction;
    let matrix = DMatrix::from_fn(k, k, |i, j| {
        let delta = if i == j { Complex64::from(1.0) } else { Complex64::from(0.0) };
        let coarse = delta - p[i] * r[j] * a[j] / a_coarse;
        s[i].powu(nu2) * coarse * s[j].powu(nu1)
    });
    Ok(TwoGridSymbol {
        theta: theta.to_vec(),
        matrix,
    })
}

/// Location and value of the sampled two-grid factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGridMaximum {
    pub rho: f64,
    pub theta: Vec<f64>,
}

/// `max ρ(Ẽ(θ))` over the sampled low frequencies, skipping `θ = 0`
/// where the coarse symbol vanishes.
pub fn two_grid_maximum(sm: &SmootherSpec, nu1: u32, nu2: u32, fgrid: &FrequencyGrid) -> Result<TwoGridMaximum> {
    if fgrid.dim() != sm.dim() {
        return Err(Error::DimensionMismatch {
            expected: sm.dim(),
            found: fgrid.dim(),
        });
    }
    let low: Vec<usize> = fgrid
        .flat_indices(true)
        .into_iter()
        .filter(|&i| !fgrid.is_origin(&fgrid.sample(i).index))
        .collect();
    if low.is_empty() {
        return Err(Error::InvalidConfig("no low-frequency samples besides theta = 0".into()));
    }
    let radii = low
        .par_iter()
        .map(|&i| {
            let theta = fgrid.sample(i).theta;
            two_grid_symbol(sm, &theta, nu1, nu2).map(|e| (i, e.spectral_radius()))
        })
        .collect::<Result<Vec<_>>>()?;
    // first index wins ties, independent of the parallel schedule
    let (i, rho) = radii
        .into_iter()
        .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    Ok(TwoGridMaximum {
        rho,
        theta: fgrid.sample(i).theta,
    })
}

/// LFA two-grid convergence factor `ρ = max_{θ ∈ T^low} ρ(Ẽ(θ))` on the sampled grid.
pub fn two_grid_factor(sm: &SmootherSpec, nu1: u32, nu2: u32, fgrid: &FrequencyGrid) -> Result<f64> {
    two_grid_maximum(sm, nu1, nu2, fgrid).map(|m| m.rho)
}

#[derive(Debug, Clone)]
pub struct EigenfieldRow {
    pub theta: [f64; 2],
    /// Eigenvalues of `Ẽ(θ)`, largest modulus first.
    pub eigenvalues: Vec<Complex64>,
    pub smoother_abs: f64,
}

/// Per-frequency eigenvalues of `Ẽ` over the sampled 2D low frequencies.
#[derive(Debug, Clone)]
pub struct Eigenfield {
    pub rows: Vec<EigenfieldRow>,
    pub max_abs: f64,
    pub max_imag: f64,
    /// Every base frequency whose largest `|λ|` is within 1e-12 of `max_abs`.
    pub argmax: Vec<[f64; 2]>,
}

impl Eigenfield {
    /// All eigenvalues real to 1e-10.
    pub fn all_real(&self) -> bool {
        self.max_imag < 1e-10
    }

    /// `argmax` expressed in coarse-grid frequency `2θ`.
    pub fn argmax_coarse(&self) -> Vec<[f64; 2]> {
        self.argmax.iter().map(|t| [2.0 * t[0], 2.0 * t[1]]).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "theta1,theta2,eig1,eig2,eig3,eig4,smoother_abs")?;
        for row in &self.rows {
            write!(w, "{},{}", row.theta[0], row.theta[1])?;
            for z in &row.eigenvalues {
                write!(w, ",{}", z.norm())?;
            }
            writeln!(w, ",{}", row.smoother_abs)?;
        }
        Ok(())
    }
}

/// Eigenvalue field of `Ẽ` and `|S̃|` for a 2D smoother.
pub fn eigenfield(sm: &SmootherSpec, nu1: u32, nu2: u32, fgrid: &FrequencyGrid) -> Result<Eigenfield> {
    if sm.dim() != 2 {
        return Err(Error::Unsupported {
            what: "eigenfield".into(),
            dim: sm.dim(),
        });
    }
    if fgrid.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: fgrid.dim(),
        });
    }
    let low: Vec<usize> = fgrid
        .flat_indices(true)
        .into_iter()
        .filter(|&i| !fgrid.is_origin(&fgrid.sample(i).index))
        .collect();
    let rows = low
        .par_iter()
        .map(|&i| {
            let theta = fgrid.sample(i).theta;
            let e = two_grid_symbol(sm, &theta, nu1, nu2)?;
            Ok(EigenfieldRow {
                theta: [theta[0], theta[1]],
                eigenvalues: e.eigenvalues(),
                smoother_abs: super::smoother_symbol(sm, &theta).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let top = |r: &EigenfieldRow| r.eigenvalues.first().map_or(0.0, |z| z.norm());
    let max_abs = rows.iter().map(top).fold(0.0, f64::max);
    let max_imag = rows
        .iter()
        .flat_map(|r| r.eigenvalues.iter().map(|z| z.im.abs()))
        .fold(0.0, f64::max);
    let argmax = rows
        .iter()
        .filter(|r| top(r) >= max_abs - 1e-12)
        .map(|r| r.theta)
        .collect();
    Ok(Eigenfield {
        rows,
        max_abs,
        max_imag,
        argmax,
    })
}
