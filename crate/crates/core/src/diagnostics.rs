//! Error norms, mass budget, reflection metrics, cross-run RMSE, the
//! analytical advection-diffusion reference, and the timing harness
//! behind the cost tables.

use crate::cases::{build_case, build_extended_variant, BuiltCase};
use crate::config::SimulationConfig;
use crate::equations::{BackgroundState, StateField};
use crate::simulation::Simulation;
use crate::timeint::{step, OdeSystem, StageBuffers};
use std::time::Instant;

/// Mass-weighted L2 (absolute) and max norms of `u - r`.
pub fn error_norms(u: &[f64], r: &[f64], mass: &[f64]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut linf = 0.0f64;
    for i in 0..u.len() {
        let d = u[i] - r[i];
        l2 += mass[i] * d * d;
        linf = linf.max(d.abs());
    }
    (l2.sqrt(), linf)
}

/// Relative L2 norm `||u - r||_M / ||r||_M`.
pub fn relative_l2(u: &[f64], r: &[f64], mass: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..u.len() {
        let d = u[i] - r[i];
        num += mass[i] * d * d;
        den += mass[i] * r[i] * r[i];
    }
    (num / den).sqrt()
}

/// Quadrature mass of the total density `rho0 + rho'` (kg per unit depth).
#[derive(Debug, Clone, Copy)]
pub struct MassBudget {
    pub mass: f64,
    pub rel_loss: f64,
}

pub fn mass_budget(state: &StateField, bg: &BackgroundState, mass: &[f64], m0: f64) -> MassBudget {
    let rho_p = state.var(0);
    let mut m = 0.0;
    for i in 0..rho_p.len() {
        m += mass[i] * (bg.rho0[i] + rho_p[i]);
    }
    let rel_loss = if m0 != 0.0 { ((m - m0) / m0).abs() } else { 0.0 };
    MassBudget { mass: m, rel_loss }
}

/// Total quadrature mass at a state (use for the baseline m(0)).
pub fn total_mass(state: &StateField, bg: &BackgroundState, mass: &[f64]) -> f64 {
    mass_budget(state, bg, mass, 0.0).mass
}

/// Reflection metric of a completed 1D run: max |u| over the finite region
/// at final time divided by the initial peak amplitude.
pub fn reflection_metric(u: &[f64], finite_mask: &[bool], initial_peak: f64) -> f64 {
    let max = u
        .iter()
        .zip(finite_mask)
        .filter(|(_, &m)| m)
        .fold(0.0f64, |a, (&v, _)| a.max(v.abs()));
    max / initial_peak
}

/// Per-variable RMSE between two runs over the masked node set.
pub fn rmse_cross_run(a: &StateField, b: &StateField, mask: &[bool]) -> Vec<f64> {
    assert_eq!(a.n_nodes, b.n_nodes, "mismatched grids");
    assert_eq!(a.nvar, b.nvar);
    let count = mask.iter().filter(|&&m| m).count() as f64;
    (0..a.nvar)
        .map(|v| {
            let av = a.var(v);
            let bv = b.var(v);
            let s: f64 = mask
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| (av[i] - bv[i]) * (av[i] - bv[i]))
                .sum();
            (s / count).sqrt()
        })
        .collect()
}

/// Free-space solution of the constant-coefficient advection-diffusion
/// problem started from `exp(-(x-xc)^2 - (z-zc)^2)`:
/// the pulse advects with (u, v) and spreads as `s(t) = 1 + 4 nu t`.
pub fn advdiff_exact(x: f64, z: f64, t: f64, xc: f64, zc: f64, u: f64, v: f64, nu: f64) -> f64 {
    let s = 1.0 + 4.0 * nu * t;
    let dx = x - xc - u * t;
    let dz = z - zc - v * t;
    (-(dx * dx + dz * dz) / s).exp() / s
}

/// Non-dimensional time per step against a named baseline plus the
/// percentage split of RHS time between element classes.
#[derive(Debug, Clone, Copy)]
pub struct TimingReport {
    pub t_star: f64,
    pub wall_per_step: f64,
    pub pct_finite: f64,
    pub pct_laguerre: f64,
}

/// Median wall time per step over `reps` measured blocks of `n_steps`
/// steps (after `n_warm` warmup steps), with the RHS split by class.
pub fn time_stepping(
    sim: &mut Simulation,
    state: &mut StateField,
    dt: f64,
    scheme: crate::timeint::Scheme,
    n_warm: usize,
    n_steps: usize,
    reps: usize,
) -> (f64, f64, f64) {
    let mut buf = StageBuffers::sized(sim.dim());
    for _ in 0..n_warm {
        let t = state.time;
        step(scheme, sim, t, &mut state.values, dt, &mut buf).expect("warmup step failed");
        state.time = t + dt;
        sim.apply_filter(&mut state.values);
    }
    let mut samples = Vec::with_capacity(reps);
    sim.timers.reset();
    for _ in 0..reps.max(1) {
        let t0 = Instant::now();
        for _ in 0..n_steps {
            let t = state.time;
            step(scheme, sim, t, &mut state.values, dt, &mut buf).expect("bench step failed");
            state.time = t + dt;
            sim.apply_filter(&mut state.values);
        }
        samples.push(t0.elapsed().as_secs_f64() / n_steps as f64);
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = samples[samples.len() / 2];
    let (pf, pl) = sim.timers.pct_split();
    (median, pf, pl)
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub semi: TimingReport,
    pub extended: TimingReport,
    /// wall-per-step ratio extended / semi-infinite
    pub ratio: f64,
    pub layer_reach: f64,
    /// end coordinate of each attached layer (side label, coordinate)
    pub ends: Vec<(&'static str, f64)>,
    pub nx_semi: usize,
    pub nx_extended: usize,
    pub nz_extended: usize,
}

/// Run the matched pair (semi-infinite layer vs extended finite domain at
/// the same resolution and extent) and report medians normalized to the
/// semi-infinite run.
pub fn benchmark_pair(
    cfg: &SimulationConfig,
    n_warm: usize,
    n_steps: usize,
    reps: usize,
) -> Result<BenchResult, crate::cases::CaseError> {
    let BuiltCase { sim: mut sim_a, state: mut st_a } = build_case(cfg)?;
    let (BuiltCase { sim: mut sim_b, state: mut st_b }, ext_cfg) = build_extended_variant(cfg)?;
    let (w_a, pf_a, pl_a) =
        time_stepping(&mut sim_a, &mut st_a, cfg.time.dt, cfg.time.scheme, n_warm, n_steps, reps);
    let (w_b, pf_b, pl_b) =
        time_stepping(&mut sim_b, &mut st_b, cfg.time.dt, cfg.time.scheme, n_warm, n_steps, reps);
    let reach = sim_a
        .mesh
        .layers
        .first()
        .map(|l| (l.end - l.base).abs())
        .unwrap_or(0.0);
    let ends = sim_a
        .mesh
        .layers
        .iter()
        .map(|l| {
            let label = match l.side {
                crate::mesh::Side::Top => "z_end",
                crate::mesh::Side::Left => "x_left",
                crate::mesh::Side::Right => "x_right",
                crate::mesh::Side::Bottom => "bottom",
            };
            (label, l.end)
        })
        .collect();
    Ok(BenchResult {
        semi: TimingReport { t_star: 1.0, wall_per_step: w_a, pct_finite: pf_a, pct_laguerre: pl_a },
        extended: TimingReport {
            t_star: w_b / w_a,
            wall_per_step: w_b,
            pct_finite: pf_b,
            pct_laguerre: pl_b,
        },
        ratio: w_b / w_a,
        layer_reach: reach,
        ends,
        nx_semi: cfg.mesh.nx,
        nx_extended: ext_cfg.mesh.nx,
        nz_extended: ext_cfg.mesh.nz,
    })
}
