//! Independent checks of the Fourier machinery against assembled matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::PI;

use vanka_lfa::lfa::{preconditioner_stencil, symbol, transfer_symbols, SmootherKind};
use vanka_lfa::solver::galerkin;
use vanka_lfa::stencil::{apply, laplacian_stencil, mass_stencil, GridFunction, GridSpec, Stencil};
use vanka_lfa::vanka::{assemble_dense, build_vanka, closed_form_stencil, PatchKind, PatchLayout, StencilOperator};

fn all_stencils(dim: usize, h: f64) -> Vec<(String, Stencil)> {
    let mut out = vec![
        ("laplacian".to_string(), laplacian_stencil(dim, h).unwrap()),
        ("mass".to_string(), mass_stencil(dim, h).unwrap()),
    ];
    for kind in SmootherKind::ALL {
        if kind.supports(dim) {
            out.push((kind.to_string(), preconditioner_stencil(kind, dim, h).unwrap()));
        }
    }
    out
}

/// Row `i` of a periodic assembly read back as a stencil around point `i`.
fn row_as_stencil(m: &DMatrix<f64>, grid: &GridSpec, i: usize) -> Vec<(Vec<i32>, f64)> {
    let n = grid.n() as i32;
    let ci = grid.coords(i);
    (0..m.ncols())
        .filter(|&j| m[(i, j)] != 0.0)
        .map(|j| {
            let cj = grid.coords(j);
            let o = ci
                .iter()
                .zip(&cj)
                .map(|(&a, &b)| {
                    let d = (b as i32 - a as i32).rem_euclid(n);
                    if d > n / 2 {
                        d - n
                    } else {
                        d
                    }
                })
                .collect();
            (o, m[(i, j)])
        })
        .collect()
}

#[test]
fn assembled_vanka_rows_match_closed_forms() {
    for dim in 1..=2 {
        for kind in [PatchKind::ElementWise, PatchKind::VertexWise] {
            let h = 1.0 / 8.0;
            let grid = GridSpec::periodic(dim, 8, h).unwrap();
            let layout = PatchLayout::new(kind, dim).unwrap();
            let v = build_vanka(layout, &grid, &laplacian_stencil(dim, h).unwrap()).unwrap();
            let m = assemble_dense(&v).unwrap();
            let closed = closed_form_stencil(layout, h).unwrap();
            for i in 0..grid.len() {
                let row = row_as_stencil(&m, &grid, i);
                assert_eq!(row.len(), closed.len(), "{kind:?} {dim}D row {i}");
                for (o, c) in row {
                    assert!((c - closed.coef_f64(&o)).abs() < 1e-12 * h * h, "{kind:?} {dim}D {o:?}");
                }
            }
        }
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn symbol_samples(s: &Stencil, n: usize) -> Vec<f64> {
    let d = s.dim();
    (0..n.pow(d as u32))
        .map(|mut k| {
            let theta: Vec<f64> = (0..d)
                .map(|_| {
                    let t = 2.0 * PI * (k % n) as f64 / n as f64;
                    k /= n;
                    t
                })
                .collect();
            let z = symbol(s, &theta).unwrap();
            assert!(z.im.abs() < 1e-10);
            z.re
        })
        .collect()
}

#[test]
fn circulant_eigenvalues_are_symbol_samples() {
    let n = 16;
    for dim in 1..=2 {
        let h = 1.0 / n as f64;
        let grid = GridSpec::periodic(dim, n, h).unwrap();
        for (name, s) in all_stencils(dim, h) {
            let m = assemble_dense(&StencilOperator::new(s.clone(), grid).unwrap()).unwrap();
            let eig = sorted(SymmetricEigen::new(m).eigenvalues.as_slice().to_vec());
            let sym = sorted(symbol_samples(&s, n));
            let scale = sym.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for (a, b) in eig.iter().zip(&sym) {
                assert!((a - b).abs() <= 1e-10 * scale, "{name} {dim}D: {a} vs {b}");
            }
        }
    }
}

#[test]
fn plane_waves_diagonalize_3d_stencils() {
    // 4096 orthogonal plane waves, each an eigenvector with the symbol as
    // eigenvalue, so the spectrum is the multiset of symbol samples.
    let n = 16;
    let h = 1.0 / n as f64;
    let grid = GridSpec::periodic(3, n, h).unwrap();
    for (name, s) in all_stencils(3, h) {
        let scale = symbol_samples(&s, n).iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for k in [[0, 0, 0], [1, 0, 0], [3, 5, 7], [8, 8, 8], [15, 2, 9], [4, 12, 0]] {
            let theta: Vec<f64> = k.iter().map(|&x| 2.0 * PI * x as f64 / n as f64).collect();
            let lambda = symbol(&s, &theta).unwrap().re;
            for phase in [0.0, PI / 2.0] {
                let wave = GridFunction::from_fn(&grid, |x| {
                    (x.iter().zip(&theta).map(|(xi, t)| xi / h * t).sum::<f64>() + phase).cos()
                });
                if wave.norm2() < 1.0 {
                    // sin of a real-valued wave (θ ∈ {0, π}^3) vanishes
                    continue;
                }
                let mut residual = apply(&s, &grid, &wave).unwrap();
                residual.axpy(-lambda, &wave);
                assert!(residual.norm2() <= 1e-10 * scale * wave.norm2(), "{name} {k:?}");
            }
        }
    }
}

/// Periodic linear interpolation from `n/2` to `n` points, coarse point `c`
/// sitting on fine point `2c`.
fn periodic_prolongation(n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n / 2);
    for c in 0..n / 2 {
        p[(2 * c, c)] += 1.0;
        p[((2 * c + 1) % n, c)] += 0.5;
        p[((2 * c + n - 1) % n, c)] += 0.5;
    }
    p
}

#[test]
fn transfer_symbols_match_dense_interpolation() {
    let n = 16;
    let p = periodic_prolongation(n);
    for k in -4..4 {
        let theta = 2.0 * PI * k as f64 / n as f64;
        let t = transfer_symbols(1, &[theta]).unwrap();
        let coarse = DMatrix::from_fn(n / 2, 1, |c, _| Complex64::from_polar(1.0, 2.0 * theta * c as f64));
        let fine = p.map(Complex64::from) * coarse;
        for j in 0..n {
            let expect: Complex64 = (0..2)
                .map(|kappa| t.prolongation[kappa] * Complex64::from_polar(1.0, (theta + kappa as f64 * PI) * j as f64))
                .sum();
            assert!((fine[(j, 0)] - expect).norm() < 1e-12);
        }
        // Pᵀ applied to a fine harmonic gives R̃ times the coarse wave
        for kappa in 0..2 {
            let tk = theta + kappa as f64 * PI;
            let wave = DMatrix::from_fn(n, 1, |j, _| Complex64::from_polar(1.0, tk * j as f64));
            let restricted = p.transpose().map(Complex64::from) * wave;
            for c in 0..n / 2 {
                let expect = t.restriction[kappa] * Complex64::from_polar(1.0, 2.0 * theta * c as f64);
                assert!((restricted[(c, 0)] - expect).norm() < 1e-12);
            }
        }
    }
    let q = transfer_symbols(1, &[PI / 4.0]).unwrap();
    assert!((q.prolongation[0].re - (PI / 8.0).cos().powi(2)).abs() < 1e-15);
    assert!((q.prolongation[1].re - (5.0 * PI / 8.0).cos().powi(2)).abs() < 1e-15);
}

#[test]
fn coarse_symbol_is_galerkin_stencil_symbol() {
    for dim in 1..=3 {
        let grid = GridSpec::unit(dim, 15).unwrap();
        let a = laplacian_stencil(dim, grid.h()).unwrap();
        let (coarse, _) = galerkin(&a, &grid).unwrap();
        for k in 0..7 {
            let theta: Vec<f64> = (0..dim).map(|i| -1.4 + 0.4 * k as f64 + 0.05 * i as f64).collect();
            let t = transfer_symbols(dim, &theta).unwrap();
            let doubled: Vec<f64> = theta.iter().map(|x| 2.0 * x).collect();
            let lhs = t.coarse_symbol(&a);
            let rhs = symbol(&coarse, &doubled).unwrap();
            assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0), "{dim}D {theta:?}");
        }
    }
}
