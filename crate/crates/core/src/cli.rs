//! Report-producing commands behind the `vanka-lfa` binary.
//!
//! Each command returns a serializable report carrying its own pass/fail
//! verdict; the binary only parses arguments, formats and sets the exit code.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lfa::{
    eigenfield, exact_optimum, smoothing_factor, two_grid_factor, Eigenfield, FrequencyGrid, SmootherKind,
    SmootherSpec,
};
use crate::solver::{unit_points, CycleKind, CycleSpec, Multigrid};
use crate::stencil::{parse_rational, rational_to_string, GridSpec};

/// Allowed gap between a sampled smoothing factor and its exact value.
pub const MU_TOL: f64 = 5e-3;
/// Allowed gap to the three-decimal reference values of the two-grid table.
pub const REFERENCE_TOL: f64 = 1.5e-2;
/// Allowed gap between a measured two-grid factor and its Fourier prediction.
pub const SOLVE_TOL: f64 = 0.05;
pub const DEFAULT_H: f64 = 1.0 / 64.0;
pub const OMEGA_SCAN_MAX: f64 = 1.5;

/// Splits `ν` sweeps into `(⌈ν/2⌉, ⌊ν/2⌋)`.
pub fn split_sweeps(nu: u32) -> (u32, u32) {
    (nu.div_ceil(2), nu / 2)
}

/// Parses a meshsize given as `1/64` or `0.015625`.
pub fn parse_h(s: &str) -> Result<f64> {
    use num_traits::ToPrimitive;
    let bad = || Error::InvalidConfig(format!("bad meshsize {s:?}; expected e.g. 1/64"));
    let h = match s.split_once('/') {
        Some(_) => parse_rational(s).map_err(|_| bad())?.to_f64().ok_or_else(bad)?,
        None => s.trim().parse::<f64>().map_err(|_| bad())?,
    };
    unit_points(h)?;
    Ok(h)
}

fn rows_with_rho(row: &[f64; 4]) -> BTreeMap<String, f64> {
    (1..=4).map(|nu| (nu.to_string(), row[nu - 1])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub kind: SmootherKind,
    pub dim: usize,
    pub omega: String,
    pub mu: String,
    pub mu_sampled: f64,
    pub reference_omega: String,
    pub reference_mu: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub samples: usize,
    pub rows: Vec<Table1Row>,
    pub pass: bool,
}

const TABLE1: [(SmootherKind, usize, &str, &str); 6] = [
    (SmootherKind::Jacobi, 1, "2/3", "1/3"),
    (SmootherKind::VankaElement, 1, "12/17", "1/17"),
    (SmootherKind::VankaVertex, 1, "81/104", "1/26"),
    (SmootherKind::Jacobi, 2, "4/5", "3/5"),
    (SmootherKind::VankaElement, 2, "24/25", "7/25"),
    (SmootherKind::VankaVertex, 2, "20/23", "9/23"),
];

/// Exact optimal damping and smoothing factor per `(kind, dim)` with the
/// sampled smoothing factor at that damping.
pub fn optimum_row(kind: SmootherKind, dim: usize, samples: usize) -> Result<(String, String, f64, f64)> {
    let exact = exact_optimum(kind, dim)?;
    let sm = SmootherSpec::new(kind, dim, exact.omega_f64(), 1.0)?;
    let sampled = smoothing_factor(&sm, &FrequencyGrid::new(dim, samples)?)?;
    Ok((
        rational_to_string(&exact.omega),
        rational_to_string(&exact.mu),
        exact.mu_f64(),
        sampled,
    ))
}

pub fn table1(samples: usize) -> Result<Table1Report> {
    let rows = TABLE1
        .par_iter()
        .map(|&(kind, dim, w, m)| {
            let (omega, mu, mu_value, mu_sampled) = optimum_row(kind, dim, samples)?;
            let pass = omega == w && mu == m && (mu_sampled - mu_value).abs() <= MU_TOL;
            Ok(Table1Row {
                kind,
                dim,
                omega,
                mu,
                mu_sampled,
                reference_omega: w.into(),
                reference_mu: m.into(),
                pass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(Table1Report { samples, rows, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub kind: SmootherKind,
    pub dim: usize,
    pub omega: String,
    pub mu: f64,
    pub rho: BTreeMap<String, f64>,
    pub reference: BTreeMap<String, f64>,
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Report {
    pub samples: usize,
    pub rows: Vec<Table2Row>,
    pub pass: bool,
}

/// Reference two-grid factors for `TG(1..4)`, three decimals.
pub const TABLE2: [(SmootherKind, usize, [f64; 4]); 7] = [
    (SmootherKind::VankaElement, 1, [0.059, 0.059, 0.040, 0.031]),
    (SmootherKind::VankaVertex, 1, [0.091, 0.033, 0.022, 0.017]),
    (SmootherKind::VankaElement, 2, [0.280, 0.092, 0.059, 0.045]),
    (SmootherKind::VankaVertex, 2, [0.391, 0.153, 0.076, 0.055]),
    (SmootherKind::MassFE, 2, [0.333, 0.111, 0.037, 0.029]),
    (SmootherKind::Jacobi, 3, [0.714, 0.510, 0.364, 0.260]),
    (SmootherKind::Mass3D, 3, [0.618, 0.382, 0.236, 0.146]),
];

pub fn reference_rho(kind: SmootherKind, dim: usize, nu: u32) -> Option<f64> {
    TABLE2
        .iter()
        .find(|r| r.0 == kind && r.1 == dim)
        .and_then(|r| r.2.get((nu as usize).checked_sub(1)?).copied())
}

/// `ρ` for `TG(1..4)` at the exact optimal damping and `h = 1/64`.
pub fn two_grid_row(kind: SmootherKind, dim: usize, samples: usize) -> Result<(SmootherSpec, [f64; 4])> {
    let sm = SmootherSpec::optimal(kind, dim, DEFAULT_H)?;
    let fgrid = FrequencyGrid::new(dim, samples)?;
    let mut rho = [0.0; 4];
    for (nu, slot) in (1..=4).zip(rho.iter_mut()) {
        let (nu1, nu2) = split_sweeps(nu);
        *slot = two_grid_factor(&sm, nu1, nu2, &fgrid)?;
    }
    Ok((sm, rho))
}

pub fn table2(samples: usize) -> Result<Table2Report> {
    let rows = TABLE2
        .par_iter()
        .map(|&(kind, dim, reference)| {
            let (_, rho) = two_grid_row(kind, dim, samples)?;
            let exact = exact_optimum(kind, dim)?;
            let max_deviation = rho
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(Table2Row {
                kind,
                dim,
                omega: rational_to_string(&exact.omega),
                mu: exact.mu_f64(),
                rho: rows_with_rho(&rho),
                reference: rows_with_rho(&reference),
                max_deviation,
                pass: max_deviation <= REFERENCE_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(Table2Report { samples, rows, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigfieldSummary {
    pub kind: SmootherKind,
    pub omega: f64,
    pub nu1: u32,
    pub nu2: u32,
    pub samples: usize,
    pub max_abs: f64,
    pub max_imag: f64,
    pub all_real: bool,
    /// Base frequencies attaining `max_abs`.
    pub argmax: Vec<[f64; 2]>,
    /// The same points as coarse-grid frequencies `2θ`.
    pub argmax_coarse: Vec<[f64; 2]>,
    pub reference: Option<f64>,
    pub pass: bool,
}

/// Eigenvalue field of the 2D two-grid symbol; `omega` defaults to the
/// exact optimum.
pub fn eigfield(
    kind: SmootherKind,
    nu1: u32,
    nu2: u32,
    omega: Option<f64>,
    samples: usize,
) -> Result<(Eigenfield, EigfieldSummary)> {
    let sm = match omega {
        Some(w) => SmootherSpec::new(kind, 2, w, DEFAULT_H)?,
        None => SmootherSpec::optimal(kind, 2, DEFAULT_H)?,
    };
    let field = eigenfield(&sm, nu1, nu2, &FrequencyGrid::new(2, samples)?)?;
    let reference = match omega {
        Some(_) => None,
        None => reference_rho(kind, 2, nu1 + nu2),
    };
    let pass = reference.is_none_or(|r| (field.max_abs - r).abs() <= REFERENCE_TOL);
    let summary = EigfieldSummary {
        kind,
        omega: sm.omega(),
        nu1,
        nu2,
        samples,
        max_abs: field.max_abs,
        max_imag: field.max_imag,
        all_real: field.all_real(),
        argmax: field.argmax.clone(),
        argmax_coarse: field.argmax_coarse(),
        reference,
        pass,
    };
    Ok((field, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub kind: SmootherKind,
    pub dim: usize,
    pub nu1: u32,
    pub nu2: u32,
    pub omega: Option<f64>,
    pub h: f64,
    pub cycle: CycleKind,
    pub cycles: usize,
    pub seed: u64,
    pub samples: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            kind: SmootherKind::VankaElement,
            dim: 2,
            nu1: 1,
            nu2: 0,
            omega: None,
            h: DEFAULT_H,
            cycle: CycleKind::TwoGrid,
            cycles: crate::solver::MIN_CYCLES,
            seed: 0,
            samples: FrequencyGrid::DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSpec {
    pub kind: SmootherKind,
    pub dim: usize,
    pub omega: f64,
    pub nu1: u32,
    pub nu2: u32,
    pub cycle: CycleKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub spec: SolveSpec,
    pub h: f64,
    pub measured_rho: f64,
    pub lfa_rho: f64,
    /// Residual 2-norms of the homogeneous run, initial residual first.
    pub cycles: Vec<f64>,
    pub pass: bool,
}

/// Measures the asymptotic factor of a solve and compares it with the
/// two-grid Fourier prediction. Only two-grid runs are held to
/// [`SOLVE_TOL`]; V-cycles must merely converge.
pub fn solve(cfg: &SolveConfig) -> Result<SolveReport> {
    if cfg.nu1 + cfg.nu2 == 0 {
        return Err(Error::InvalidConfig(
            "nu1 + nu2 must be at least 1; pass --nu1 1 or --nu2 1".into(),
        ));
    }
    let n = unit_points(cfg.h)?;
    let sm = match cfg.omega {
        Some(w) => SmootherSpec::new(cfg.kind, cfg.dim, w, cfg.h)?,
        None => SmootherSpec::optimal(cfg.kind, cfg.dim, cfg.h)?,
    };
    let lfa_rho = two_grid_factor(&sm, cfg.nu1, cfg.nu2, &FrequencyGrid::new(cfg.dim, cfg.samples)?)?;
    let spec = CycleSpec::new(sm.clone(), cfg.nu1, cfg.nu2, cfg.cycle)?;
    let mg = Multigrid::new(spec, &GridSpec::unit(cfg.dim, n)?)?;
    let m = mg.measure(cfg.cycles, cfg.seed)?;
    let pass = match cfg.cycle {
        CycleKind::TwoGrid => (m.rho - lfa_rho).abs() <= SOLVE_TOL,
        CycleKind::VCycle => m.rho < 1.0,
    };
    Ok(SolveReport {
        spec: SolveSpec {
            kind: cfg.kind,
            dim: cfg.dim,
            omega: sm.omega(),
            nu1: cfg.nu1,
            nu2: cfg.nu2,
            cycle: cfg.cycle,
            seed: cfg.seed,
        },
        h: cfg.h,
        measured_rho: m.rho,
        lfa_rho,
        cycles: m.residuals,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub omega: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub kind: SmootherKind,
    pub dim: usize,
    pub nu1: u32,
    pub nu2: u32,
    pub step: f64,
    pub samples: usize,
    pub points: Vec<ScanPoint>,
    pub best: ScanPoint,
    pub warning: Option<String>,
}

/// `ω = k·step` for `k = 1, 2, …` up to [`OMEGA_SCAN_MAX`]; a step past the
/// end scans the single point `ω = 1.5`.
pub fn omega_grid(step: f64) -> Result<(Vec<f64>, Option<String>)> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidConfig(format!("--step must be positive, got {step}")));
    }
    let count = ((OMEGA_SCAN_MAX / step) + 1e-9).floor() as usize;
    if count == 0 {
        return Ok((
            vec![OMEGA_SCAN_MAX],
            Some(format!("step {step} exceeds {OMEGA_SCAN_MAX}; scanning the single point omega = {OMEGA_SCAN_MAX}")),
        ));
    }
    Ok(((1..=count).map(|k| k as f64 * step).collect(), None))
}

/// Exhaustive search of the two-grid factor over damping parameters.
pub fn scan_omega(kind: SmootherKind, dim: usize, nu1: u32, nu2: u32, step: f64, samples: usize) -> Result<ScanReport> {
    let (omegas, warning) = omega_grid(step)?;
    let fgrid = FrequencyGrid::new(dim, samples)?;
    let points = omegas
        .par_iter()
        .map(|&omega| {
            let sm = SmootherSpec::new(kind, dim, omega, DEFAULT_H)?;
            Ok(ScanPoint {
                omega,
                rho: two_grid_factor(&sm, nu1, nu2, &fgrid)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points
        .iter()
        .copied()
        .fold(None::<ScanPoint>, |best, p| match best {
            Some(b) if b.rho <= p.rho => Some(b),
            _ => Some(p),
        })
        .expect("at least one scan point");
    Ok(ScanReport {
        kind,
        dim,
        nu1,
        nu2,
        step,
        samples,
        points,
        best,
        warning,
    })
}

/// Reports that know their CSV layout.
pub trait CsvReport {
    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()>;
}

impl CsvReport for Table1Report {
    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "kind,dim,omega,mu,mu_sampled,pass")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{},{}", r.kind, r.dim, r.omega, r.mu, r.mu_sampled, r.pass)?;
        }
        Ok(())
    }
}

impl CsvReport for Table2Report {
    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "kind,dim,omega,mu,tg1,tg2,tg3,tg4,max_deviation,pass")?;
        for r in &self.rows {
            write!(w, "{},{},{},{}", r.kind, r.dim, r.omega, r.mu)?;
            for v in r.rho.values() {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{},{}", r.max_deviation, r.pass)?;
        }
        Ok(())
    }
}

impl CsvReport for ScanReport {
    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "omega,rho")?;
        for p in &self.points {
            writeln!(w, "{},{}", p.omega, p.rho)?;
        }
        Ok(())
    }
}

impl CsvReport for SolveReport {
    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "cycle,residual")?;
        for (k, r) in self.cycles.iter().enumerate() {
            writeln!(w, "{k},{r:e}")?;
        }
        Ok(())
    }
}

impl CsvReport for Eigenfield {
    fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        Eigenfield::write_csv(self, w)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
