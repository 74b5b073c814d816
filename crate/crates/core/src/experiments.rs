//! Experiment drivers behind the command-line tool.
//!
//! Each `run_*` function returns its table in memory; [`execute`] runs one
//! command and writes a run directory containing `config.echo`, the CSV
//! tables and `summary.txt`. Outputs depend only on the configuration and
//! the seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{
    fixed_point_table, fixed_points, manifold_covariance_check, stable_manifold,
    unstable_manifold, ClassicalModel, ManifoldCurve, PhasePoint,
};
use crate::config::{ExperimentConfig, ModelId, Schedule};
use crate::dilation::{
    compare_grid_vs_analytic, dilation_flow, ehrenfest_time, flatness_deviation,
    gaussian_dilation_evolve, EhrenfestKind,
};
use crate::error::{Error, Result};
use crate::measurement::{
    born_sample, collapse, husimi, region_masses, sample_mean_std, uniform_axis,
    write_samples_csv, RegionMasses,
};
use crate::propagator::{default_time_step, evolve_with_snapshots, PotentialSpec};
use crate::wavepacket::{coherent_state, moments, position_entropy, GaussianState, Grid};

/// Default number of Born samples per state.
pub const DEFAULT_SAMPLES: usize = 100_000;
/// Resamples drawn after the collapse.
pub const RESAMPLES: usize = 10_000;
/// Half-width of the flatness window around the origin.
pub const FLATNESS_WINDOW: f64 = 1.0;
/// Separatrix seed offset and step used for the double-well curves.
pub const SEPARATRIX_EPS: f64 = 1e-6;
pub const SEPARATRIX_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Dilation,
    Sweep,
    DoubleWell,
    Measure,
    Manifold,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Dilation => "dilation",
            Command::Sweep => "sweep",
            Command::DoubleWell => "doublewell",
            Command::Measure => "measure",
            Command::Manifold => "manifold",
        }
    }
}

fn grid_for(cfg: &ExperimentConfig) -> Result<Grid<f64>> {
    let std = Grid::<f64>::standard();
    Grid::new(
        cfg.grid_n.unwrap_or(std.n()),
        cfg.grid_l.unwrap_or(std.length()),
    )
}

fn hbars_or(cfg: &ExperimentConfig, default: &[f64]) -> Vec<f64> {
    if cfg.hbars.is_empty() {
        default.to_vec()
    } else {
        cfg.hbars.clone()
    }
}

fn schedule_or(cfg: &ExperimentConfig, default: &[f64]) -> Schedule {
    cfg.schedule
        .clone()
        .unwrap_or_else(|| Schedule::Ehrenfest(default.to_vec()))
}

fn single_hbar(cfg: &ExperimentConfig, default: f64) -> Result<f64> {
    match cfg.hbars.as_slice() {
        [] => Ok(default),
        [h] => Ok(*h),
        hs => Err(Error::Config(format!("expected a single hbar, got {}", hs.len()))),
    }
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------- dilation

/// One row of the dilation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilationRow {
    pub hbar: f64,
    pub t: f64,
    pub dq: f64,
    pub dp: f64,
    pub product: f64,
    /// Differential entropy of the position density.
    pub entropy: f64,
    /// Relative deviation from the flat level on `|x| ≤ 1`.
    pub sup_flatness: f64,
    /// L² distance between grid and analytic tracks; `None` when the grid
    /// cannot hold the state.
    pub grid_error: Option<f64>,
}

/// Analytic dilation of the coherent state at the origin for every
/// `(ℏ, t)` pair, with a grid cross-check where the grid admits one.
pub fn run_dilation(cfg: &ExperimentConfig) -> Result<Vec<DilationRow>> {
    cfg.expect_model(&[ModelId::Dilation], ModelId::Dilation)?;
    let grid = grid_for(cfg)?;
    let schedule = schedule_or(cfg, &[0.0, 0.25, 0.5, 0.75, 1.0]);
    let mut jobs = Vec::new();
    for h in hbars_or(cfg, &[1e-2]) {
        for t in schedule.resolve(h)? {
            jobs.push((h, t));
        }
    }
    jobs.par_iter()
        .map(|&(hbar, t)| {
            let g0 = GaussianState::coherent(0.0, 0.0, hbar);
            let g = gaussian_dilation_evolve(&g0, t);
            let m = g.moments();
            let entropy = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * m.dq * m.dq).ln();
            let grid_error = match coherent_state(&grid, 0.0, 0.0, hbar) {
                Ok(_) => match compare_grid_vs_analytic(&g0, &grid, t) {
                    Ok(e) => Some(e),
                    Err(Error::GridOverflow { .. } | Error::InterpolationLoss { .. }) => None,
                    Err(e) => return Err(e),
                },
                Err(_) => None,
            };
            Ok(DilationRow {
                hbar,
                t,
                dq: m.dq,
                dp: m.dp,
                product: m.product,
                entropy,
                sup_flatness: flatness_deviation(&g, FLATNESS_WINDOW, 2000),
                grid_error,
            })
        })
        .collect()
}

pub fn dilation_csv(rows: &[DilationRow]) -> String {
    let mut out = String::from("hbar,t,dQ,dP,product,entropy,sup_flatness,grid_l2_error\n");
    for r in rows {
        let grid = r.grid_error.map_or_else(|| "nan".to_string(), f);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            f(r.hbar),
            f(r.t),
            f(r.dq),
            f(r.dp),
            f(r.product),
            f(r.entropy),
            f(r.sup_flatness),
            grid
        );
    }
    out
}

// ------------------------------------------------------------------- sweep

/// Least-squares fit of the delocalization time against `ln(1/ℏ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// `(ℏ, t*)` pairs in input order.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual of the fit.
    pub residual: f64,
}

/// First time the analytic position width of the dilated coherent state
/// reaches 1, located by bisection.
pub fn delocalization_time(hbar: f64) -> Result<f64> {
    ehrenfest_time(hbar, EhrenfestKind::Full)?;
    let g0 = GaussianState::coherent(0.0, 0.0, hbar);
    let width = |t: f64| gaussian_dilation_evolve(&g0, t).moments().dq;
    if width(0.0) >= 1.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while width(hi) < 1.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if width(mid) >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn run_scaling_sweep(cfg: &ExperimentConfig) -> Result<ScalingFit> {
    cfg.expect_model(&[ModelId::Dilation], ModelId::Dilation)?;
    let hbars = hbars_or(cfg, &[1e-2, 1e-3, 1e-4, 1e-5]);
    if hbars.len() < 4 {
        return Err(Error::InsufficientSpan(format!("{} value(s) given", hbars.len())));
    }
    let (lo, hi) = hbars
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &h| (lo.min(h), hi.max(h)));
    if (hi / lo).log10() < 2.0 - 1e-12 {
        return Err(Error::InsufficientSpan(format!(
            "range [{lo:e}, {hi:e}] covers less than 2 decades"
        )));
    }
    let points = hbars
        .par_iter()
        .map(|&h| delocalization_time(h).map(|t| (h, t)))
        .collect::<Result<Vec<_>>>()?;

    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(h, _)| (1.0 / h).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, t)| *t).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).abs())
        .fold(0.0, f64::max);
    Ok(ScalingFit {
        points,
        slope,
        intercept,
        residual,
    })
}

pub fn sweep_csv(fit: &ScalingFit) -> String {
    let mut out = String::from("hbar,log_inv_hbar,t_star\n");
    for &(h, t) in &fit.points {
        let _ = writeln!(out, "{},{},{}", f(h), f((1.0 / h).ln()), f(t));
    }
    out
}

// -------------------------------------------------------------- doublewell

/// One scheduled snapshot of the double-well experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleWellRow {
    pub hbar: f64,
    /// `t / ln(1/ℏ)`.
    pub k: f64,
    pub t: f64,
    pub dq: f64,
    pub dp: f64,
    pub product: f64,
    pub masses: RegionMasses<f64>,
    /// Husimi mass captured by the lattice; close to 1.
    pub husimi_total: f64,
}

/// Phase-space lattice covering the double-well energy shell near 0.
pub fn doublewell_axes(hbar: f64) -> (Vec<f64>, Vec<f64>) {
    let step = hbar.sqrt() / 4.0;
    let count = |span: f64| ((span / step).ceil() as usize + 1).clamp(33, 1201);
    (
        uniform_axis(-1.8, 1.8, count(3.6)),
        uniform_axis(-1.0, 1.0, count(2.0)),
    )
}

/// Both unstable branches of the origin of the double well.
pub fn doublewell_separatrix() -> Result<(ManifoldCurve<f64>, ManifoldCurve<f64>)> {
    let model = ClassicalModel::Potential(PotentialSpec::DoubleWell);
    unstable_manifold(
        &model,
        &PhasePoint::origin(),
        SEPARATRIX_EPS,
        200_000,
        SEPARATRIX_DT,
    )
}

/// Output of [`run_doublewell`]: the table and, optionally, Husimi lattices.
#[derive(Debug, Clone)]
pub struct DoubleWellRun {
    pub rows: Vec<DoubleWellRow>,
    pub separatrix: (ManifoldCurve<f64>, ManifoldCurve<f64>),
    /// `(ℏ index, schedule index, csv)` for every snapshot.
    pub husimi_csv: Vec<(usize, usize, String)>,
}

/// Evolves the coherent state at the hyperbolic point of `p² + q⁴ − q²`
/// and measures Husimi masses near the separatrix lobes and the fixed
/// point. Tube width and disc radius are both `3√ℏ`.
pub fn run_doublewell(cfg: &ExperimentConfig) -> Result<DoubleWellRun> {
    cfg.expect_model(&[ModelId::DoubleWell], ModelId::DoubleWell)?;
    let grid = grid_for(cfg)?;
    let schedule = schedule_or(cfg, &[0.0, 0.5, 1.0, 1.5, 2.0]);
    let (plus, minus) = doublewell_separatrix()?;
    let base = PhasePoint::origin();
    let hbars = hbars_or(cfg, &[1e-2]);

    let per_hbar = hbars
        .par_iter()
        .enumerate()
        .map(|(ih, &hbar)| {
            let unit = ehrenfest_time(hbar, EhrenfestKind::Full)?;
            let times = schedule.resolve(hbar)?;
            let dt = cfg.dt.unwrap_or_else(|| default_time_step(hbar));
            let psi0 = coherent_state(&grid, 0.0, 0.0, hbar)?;
            let (q_axis, p_axis) = doublewell_axes(hbar);
            let radius = 3.0 * hbar.sqrt();
            let mut rows = Vec::new();
            let mut dumps = Vec::new();
            evolve_with_snapshots(
                &psi0,
                &PotentialSpec::DoubleWell,
                &times,
                dt,
                |t, psi, prop| {
                    let m = prop.moments(psi)?;
                    let h = husimi(psi, &q_axis, &p_axis)?;
                    let masses = region_masses(&h, &plus, &minus, &base, radius, radius)?;
                    let mut buf = Vec::new();
                    h.write_csv(&mut buf)?;
                    dumps.push((ih, rows.len(), String::from_utf8_lossy(&buf).into_owned()));
                    rows.push(DoubleWellRow {
                        hbar,
                        k: if unit > 0.0 { t / unit } else { 0.0 },
                        t,
                        dq: m.dq,
                        dp: m.dp,
                        product: m.product,
                        masses,
                        husimi_total: h.total_mass(),
                    });
                    Ok(())
                },
            )?;
            Ok((rows, dumps))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut husimi_csv = Vec::new();
    for (r, d) in per_hbar {
        rows.extend(r);
        husimi_csv.extend(d);
    }
    Ok(DoubleWellRun {
        rows,
        separatrix: (plus, minus),
        husimi_csv,
    })
}

pub fn doublewell_csv(rows: &[DoubleWellRow]) -> String {
    let mut out = String::from(
        "hbar,k,t,dQ,dP,product,mass_lobe_plus,mass_lobe_minus,mass_fixedpoint,tube_mass_total,husimi_total\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            f(r.hbar),
            f(r.k),
            f(r.t),
            f(r.dq),
            f(r.dp),
            f(r.product),
            f(r.masses.plus),
            f(r.masses.minus),
            f(r.masses.fixed_point),
            f(r.masses.tubes),
            f(r.husimi_total)
        );
    }
    out
}

// ------------------------------------------------------------- measurement

/// Result of the measurement round trip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementDemo {
    pub hbar: f64,
    pub samples: usize,
    pub t_spread: f64,
    pub dq_exact_initial: f64,
    pub dq_sampled_initial: f64,
    pub dq_exact_spread: f64,
    pub dq_sampled_spread: f64,
    pub x_star: f64,
    pub width: f64,
    pub resamples: usize,
    /// Fraction of resamples within three widths of `x_star`.
    pub within_three_widths: f64,
    #[serde(skip)]
    pub csv_initial: String,
    #[serde(skip)]
    pub csv_spread: String,
    #[serde(skip)]
    pub csv_resampled: String,
}

/// Samples positions of the coherent state at `t = 0` and of its dilation
/// at `t = ln(1/ℏ)`, collapses the spread state at the first outcome with
/// window `4 dx` and resamples.
pub fn run_measurement_demo(cfg: &ExperimentConfig) -> Result<MeasurementDemo> {
    cfg.expect_model(&[ModelId::Dilation], ModelId::Dilation)?;
    let hbar = single_hbar(cfg, 1e-2)?;
    let grid = grid_for(cfg)?;
    let count = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let t_spread = ehrenfest_time(hbar, EhrenfestKind::Full)?;

    let g0 = GaussianState::coherent(0.0, 0.0, hbar);
    let psi0 = coherent_state(&grid, 0.0, 0.0, hbar)?;
    let g1 = gaussian_dilation_evolve(&g0, t_spread);
    let sigma1 = g1.position_variance().sqrt();
    let required = 8.0 * sigma1;
    if grid.length() / 2.0 < required {
        return Err(Error::GridTooSmall {
            half_length: grid.length() / 2.0,
            required,
        });
    }
    let mut psi1 = g1.sample(&grid);
    psi1.normalize()?;

    let s0 = born_sample(&psi0, count, cfg.seed)?;
    let s1 = born_sample(&psi1, count, cfg.seed.wrapping_add(1))?;
    let x_star = s1[0].x;
    let width = 4.0 * grid.dx();
    let collapsed = collapse(&psi1, x_star, width)?;
    let s2 = born_sample(&collapsed, RESAMPLES, cfg.seed.wrapping_add(2))?;
    let within = s2.iter().filter(|r| (r.x - x_star).abs() <= 3.0 * width).count();

    let csv = |s: &[_]| -> Result<String> {
        let mut buf = Vec::new();
        write_samples_csv(s, &mut buf)?;
        Ok(String::from_utf8_lossy(&buf).into_owned())
    };
    Ok(MeasurementDemo {
        hbar,
        samples: count,
        t_spread,
        dq_exact_initial: g0.position_variance().sqrt(),
        dq_sampled_initial: sample_mean_std(&s0).1,
        dq_exact_spread: sigma1,
        dq_sampled_spread: sample_mean_std(&s1).1,
        x_star,
        width,
        resamples: RESAMPLES,
        within_three_widths: within as f64 / RESAMPLES as f64,
        csv_initial: csv(&s0)?,
        csv_spread: csv(&s1)?,
        csv_resampled: csv(&s2)?,
    })
}

// ------------------------------------------------------------------ evolve

/// Observables of a single evolution at one scheduled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveRow {
    pub t: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub dq: f64,
    pub dp: f64,
    pub product: f64,
    pub entropy: f64,
    pub norm: f64,
}

/// Evolves `coherent(q0, p0, ℏ)` under the configured model and records
/// observables at each scheduled time. Returns the final state as well.
pub fn run_evolve(
    cfg: &ExperimentConfig,
) -> Result<(Vec<EvolveRow>, crate::wavepacket::WaveFunction<f64>)> {
    let model = cfg.expect_model(
        &[ModelId::Dilation, ModelId::Harmonic, ModelId::DoubleWell],
        ModelId::Harmonic,
    )?;
    let hbar = single_hbar(cfg, 1e-2)?;
    let grid = grid_for(cfg)?;
    let times = schedule_or(cfg, &[0.0, 0.5, 1.0]).resolve(hbar)?;
    let psi0 = coherent_state(&grid, cfg.q0, cfg.p0, hbar)?;
    let row = |t: f64, psi: &crate::wavepacket::WaveFunction<f64>| -> Result<EvolveRow> {
        let m = moments(psi)?;
        Ok(EvolveRow {
            t,
            mean_q: m.mean_q,
            mean_p: m.mean_p,
            dq: m.dq,
            dp: m.dp,
            product: m.product,
            entropy: position_entropy(psi)?,
            norm: psi.norm(),
        })
    };
    let mut rows = Vec::new();
    let mut last = psi0.clone();
    match model {
        ModelId::Dilation => {
            for &t in &times {
                let psi = dilation_flow(&psi0, t)?;
                rows.push(row(t, &psi)?);
                last = psi;
            }
        }
        ModelId::Harmonic | ModelId::DoubleWell => {
            let spec = if model == ModelId::Harmonic {
                PotentialSpec::Harmonic
            } else {
                PotentialSpec::DoubleWell
            };
            let dt = cfg.dt.unwrap_or_else(|| default_time_step(hbar));
            evolve_with_snapshots(&psi0, &spec, &times, dt, |t, psi, _| {
                rows.push(row(t, psi)?);
                last = psi.clone();
                Ok(())
            })?;
        }
    }
    Ok((rows, last))
}

pub fn evolve_csv(rows: &[EvolveRow]) -> String {
    let mut out = String::from("t,meanQ,meanP,dQ,dP,product,entropy\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f(r.t),
            f(r.mean_q),
            f(r.mean_p),
            f(r.dq),
            f(r.dp),
            f(r.product),
            f(r.entropy)
        );
    }
    out
}

// ---------------------------------------------------------------- manifold

/// Invariant curves through the hyperbolic point at the origin.
#[derive(Debug, Clone)]
pub struct ManifoldRun {
    pub table: String,
    pub unstable: (ManifoldCurve<f64>, ManifoldCurve<f64>),
    pub stable: (ManifoldCurve<f64>, ManifoldCurve<f64>),
    pub max_abs_energy: f64,
    /// Largest `|Φ^{1/2}(x) − curve|` over both unstable branches.
    pub covariance_deviation: f64,
}

pub fn run_manifold(cfg: &ExperimentConfig) -> Result<ManifoldRun> {
    let model = match cfg.expect_model(
        &[ModelId::Dilation, ModelId::Harmonic, ModelId::DoubleWell],
        ModelId::DoubleWell,
    )? {
        ModelId::Dilation => ClassicalModel::DilationSymbol,
        ModelId::Harmonic => ClassicalModel::Potential(PotentialSpec::Harmonic),
        ModelId::DoubleWell => ClassicalModel::Potential(PotentialSpec::DoubleWell),
    };
    let dt = cfg.dt.unwrap_or(SEPARATRIX_DT);
    let table = match model {
        ClassicalModel::DilationSymbol => String::from(
            "hyperbolic fixed point at the origin, exponents +1 / -1\n",
        ),
        _ => fixed_point_table(&fixed_points(&model)?),
    };
    let base = PhasePoint::origin();
    let steps = (200.0 / dt).ceil() as usize;
    let unstable = unstable_manifold(&model, &base, SEPARATRIX_EPS, steps, dt)?;
    let stable = stable_manifold(&model, &base, SEPARATRIX_EPS, steps, dt)?;
    let max_abs_energy = unstable
        .0
        .points
        .iter()
        .chain(&unstable.1.points)
        .map(|x| model.hamiltonian(x).abs())
        .fold(0.0, f64::max);
    let covariance_deviation = manifold_covariance_check(&model, &unstable.0, 0.5, dt)?
        .max(manifold_covariance_check(&model, &unstable.1, 0.5, dt)?);
    Ok(ManifoldRun {
        table,
        unstable,
        stable,
        max_abs_energy,
        covariance_deviation,
    })
}

// ------------------------------------------------------------------- files

/// Default run directory for a command.
pub fn default_out(cmd: Command) -> PathBuf {
    PathBuf::from(format!("runs/{}", cmd.name()))
}

fn curve_csv(c: &ManifoldCurve<f64>) -> Result<String> {
    let mut buf = Vec::new();
    c.write_csv(&mut buf)?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Runs `cmd` and writes its run directory. Returns the directory.
pub fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = cfg.out.clone().unwrap_or_else(|| default_out(cmd));
    // Compute first so that a failing run leaves no partial directory.
    let mut files: Vec<(String, String)> = Vec::new();
    let mut summary = String::new();
    let mut final_state = None;
    match cmd {
        Command::Dilation => {
            let rows = run_dilation(cfg)?;
            files.push(("dilation.csv".into(), dilation_csv(&rows)));
            let min_ratio = rows
                .iter()
                .map(|r| r.product / (r.hbar / 2.0))
                .fold(f64::INFINITY, f64::min);
            let _ = writeln!(summary, "rows = {}", rows.len());
            let _ = writeln!(summary, "min product/(hbar/2) = {}", f(min_ratio));
        }
        Command::Sweep => {
            let fit = run_scaling_sweep(cfg)?;
            files.push(("sweep.csv".into(), sweep_csv(&fit)));
            let _ = writeln!(summary, "slope = {}", f(fit.slope));
            let _ = writeln!(summary, "intercept = {}", f(fit.intercept));
            let _ = writeln!(summary, "residual = {}", f(fit.residual));
        }
        Command::DoubleWell => {
            let run = run_doublewell(cfg)?;
            files.push(("doublewell.csv".into(), doublewell_csv(&run.rows)));
            files.push(("separatrix_plus.csv".into(), curve_csv(&run.separatrix.0)?));
            files.push(("separatrix_minus.csv".into(), curve_csv(&run.separatrix.1)?));
            for (ih, it, csv) in run.husimi_csv {
                files.push((format!("husimi_h{ih}_t{it}.csv"), csv));
            }
            for r in &run.rows {
                let _ = writeln!(
                    summary,
                    "hbar = {} k = {} tube_mass_total = {} lobes = {} / {} fixed_point = {}",
                    f(r.hbar),
                    f(r.k),
                    f(r.masses.tubes),
                    f(r.masses.plus),
                    f(r.masses.minus),
                    f(r.masses.fixed_point)
                );
            }
        }
        Command::Measure => {
            let demo = run_measurement_demo(cfg)?;
            files.push(("samples_initial.csv".into(), demo.csv_initial.clone()));
            files.push(("samples_spread.csv".into(), demo.csv_spread.clone()));
            files.push(("samples_collapsed.csv".into(), demo.csv_resampled.clone()));
            let json = serde_json::to_value(&demo).map_err(|e| Error::Io(e.to_string()))?;
            if let serde_json::Value::Object(map) = json {
                for (k, v) in map {
                    let _ = writeln!(summary, "{k} = {v}");
                }
            }
            let _ = writeln!(summary, "rng = {}", crate::measurement::RNG_ALGORITHM);
        }
        Command::Evolve => {
            let (rows, last) = run_evolve(cfg)?;
            files.push(("observables.csv".into(), evolve_csv(&rows)));
            let _ = writeln!(summary, "rows = {}", rows.len());
            final_state = rows.last().map(|r| (r.t, last));
        }
        Command::Manifold => {
            let run = run_manifold(cfg)?;
            files.push(("fixed_points.txt".into(), run.table.clone()));
            files.push(("unstable_plus.csv".into(), curve_csv(&run.unstable.0)?));
            files.push(("unstable_minus.csv".into(), curve_csv(&run.unstable.1)?));
            files.push(("stable_plus.csv".into(), curve_csv(&run.stable.0)?));
            files.push(("stable_minus.csv".into(), curve_csv(&run.stable.1)?));
            let _ = writeln!(summary, "max |h| on unstable branches = {}", f(run.max_abs_energy));
            let _ = writeln!(summary, "covariance deviation (s = 0.5) = {}", f(run.covariance_deviation));
        }
    }

    std::fs::create_dir_all(&dir)?;
    write(&dir, "config.echo", &cfg.echo(cmd.name()))?;
    for (name, contents) in &files {
        write(&dir, name, contents)?;
    }
    if let Some((t, psi)) = final_state {
        let model = cfg.model.unwrap_or(ModelId::Harmonic).to_string();
        psi.dump(&dir, "psi_final", t, &model)?;
    }
    write(&dir, "summary.txt", &summary)?;
    Ok(dir)
}
