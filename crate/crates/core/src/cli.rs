//! Batch entry point: `run`, `bench`, `sweep helmholtz`, `list-cases`.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use crate::cases::{build_case, case_defaults, case_ids, case_summary, BuiltCase};
use crate::config::{load_config, SimulationConfig};
use crate::diagnostics::{benchmark_pair, mass_budget, reflection_metric, total_mass};
use crate::helmholtz::{solve_helmholtz, sweep, HelmholtzProblem};
use crate::output;
use crate::simulation::run;
use crate::timeint::IntegratorSpec;
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "lagsem", about = "Spectral elements with semi-infinite absorbing layers")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// rayon worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// override the output directory
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation case
    Run {
        /// TOML configuration file (optional when --case is given)
        config: Option<PathBuf>,
        /// case id overriding the config file
        #[arg(long)]
        case: Option<String>,
        /// coarsened preset for quick end-to-end checks
        #[arg(long)]
        smoke: bool,
    },
    /// Time the semi-infinite layer against the matched extended finite domain
    Bench {
        config: Option<PathBuf>,
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        smoke: bool,
        /// measured steps per repetition
        #[arg(long, default_value_t = 30)]
        steps: usize,
        /// repetitions (median is reported)
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// warmup steps
        #[arg(long, default_value_t = 5)]
        warmup: usize,
    },
    /// Parameter sweeps
    Sweep {
        #[command(subcommand)]
        what: SweepKind,
    },
    /// List the registered cases
    ListCases,
}

#[derive(Subcommand)]
enum SweepKind {
    /// Relative L2 error as a function of the LGL and LGR element orders
    Helmholtz {
        #[arg(long, value_delimiter = ',', default_values_t = vec![4usize, 5, 6, 7, 8, 9, 10])]
        lgl: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![16usize, 32, 48, 64])]
        lgr: Vec<usize>,
    },
}

pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .ok();
    }
    let workers = if cli.workers == 0 { rayon::current_num_threads() } else { cli.workers };
    match dispatch(cli.command, workers, cli.output.as_deref()) {
        Ok(()) => 0,
        Err(CliError::Config(e)) => {
            eprintln!("configuration error: {e}");
            2
        }
        Err(CliError::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            3
        }
        Err(CliError::Io(e)) => {
            eprintln!("io error: {e}");
            3
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<crate::cases::CaseError> for CliError {
    fn from(e: crate::cases::CaseError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<crate::helmholtz::HelmholtzError> for CliError {
    fn from(e: crate::helmholtz::HelmholtzError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn dispatch(cmd: Command, workers: usize, out_override: Option<&Path>) -> Result<(), CliError> {
    match cmd {
        Command::ListCases => {
            for id in case_ids() {
                println!("{id:<10} {}", case_summary(id));
            }
            Ok(())
        }
        Command::Run { config, case, smoke } => {
            let mut cfg = load_config(config.as_deref(), case.as_deref(), smoke)?;
            if let Some(dir) = out_override {
                cfg.output.dir = dir.display().to_string();
            }
            run_case(&cfg, workers, smoke)
        }
        Command::Bench { config, case, smoke, steps, reps, warmup } => {
            let mut cfg = load_config(config.as_deref(), case.as_deref(), smoke)?;
            if let Some(dir) = out_override {
                cfg.output.dir = dir.display().to_string();
            }
            bench_case(&cfg, workers, warmup, steps, reps)
        }
        Command::Sweep { what: SweepKind::Helmholtz { lgl, lgr } } => {
            let dir = out_override.map(Path::to_path_buf).unwrap_or_else(|| "out/helmholtz".into());
            sweep_helmholtz(&lgl, &lgr, &dir)
        }
    }
}

/// Run one case end to end, writing snapshots, diagnostics, and the
/// manifest into the output directory.
pub fn run_case(cfg: &SimulationConfig, workers: usize, smoke: bool) -> Result<(), CliError> {
    let dir = PathBuf::from(&cfg.output.dir);
    output::ensure_dir(&dir)?;
    if cfg.case == "helmholtz" {
        return run_helmholtz_case(cfg, workers, &dir);
    }

    let BuiltCase { mut sim, mut state } =
        build_case(cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
    output::write_mesh_csv(&dir.join("mesh.csv"), &sim.mesh)?;
    for l in &sim.mesh.layers {
        println!(
            "{}: {:?} layer order {} lambda {} reaches {:.6}",
            cfg.case, l.side, l.order, l.lambda, l.end
        );
    }
    let names = sim.eqs.var_names().to_vec();
    let is_1d = matches!(cfg.case.as_str(), "wave1d" | "wavetrain");
    let initial_peak = state.var(0).iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let bg = sim.bg.clone();
    let m0 = bg.as_ref().map(|b| total_mass(&state, b, &sim.mass.values));

    let spec = IntegratorSpec { scheme: cfg.time.scheme, dt: cfg.time.dt, t_end: cfg.time.t_end };
    let every = if cfg.time.snapshot_interval > 0.0 {
        Some((cfg.time.snapshot_interval / cfg.time.dt).round().max(1.0) as usize)
    } else {
        None
    };
    let write_csv = cfg.output.write_csv;
    let write_vtk = cfg.output.write_vtk;
    let mut snap_err: Option<std::io::Error> = None;
    let result = run(&mut sim, &mut state, &spec, every, |sim, st, step| {
        if snap_err.is_some() {
            return;
        }
        let tag = format!("{:08}", step);
        let r = if is_1d && write_csv {
            output::write_csv_1d(&dir.join(format!("snap_{tag}.csv")), &sim.mesh, st, &names)
        } else if write_csv {
            output::write_csv_nodes(&dir.join(format!("snap_{tag}.csv")), &sim.mesh, st, &names)
        } else {
            Ok(())
        };
        if let Err(e) = r {
            snap_err = Some(e);
            return;
        }
        if write_vtk {
            let fields: Vec<(&str, &[f64])> =
                names.iter().enumerate().map(|(v, n)| (*n, st.var(v))).collect();
            if let Err(e) =
                output::write_vtk(&dir.join(format!("snap_{tag}.vtk")), &sim.mesh, &fields, &cfg.case)
            {
                snap_err = Some(e);
            }
        }
    });
    if let Some(e) = snap_err {
        return Err(CliError::Io(e));
    }
    let stats = match result {
        Ok(s) => s,
        Err(e) => {
            // abort with a state snapshot for post-mortem inspection
            let _ = output::write_csv_nodes(&dir.join("abort_state.csv"), &sim.mesh, &state, &names);
            return Err(CliError::Numerical(e.to_string()));
        }
    };

    // per-case diagnostics
    let mut extra: Vec<(&str, String)> = Vec::new();
    match cfg.case.as_str() {
        "wave1d" => {
            let mask = sim.mesh.finite_node_mask();
            let m = reflection_metric(state.var(0), &mask, initial_peak);
            extra.push(("reflection_metric", format!("{m:.6e}")));
        }
        "bubble" | "lhm" | "schar" => {
            if let (Some(bg), Some(m0)) = (&bg, m0) {
                let mb = mass_budget(&state, bg, &sim.mass.values, m0);
                extra.push(("mass_rel_loss", format!("{:.6e}", mb.rel_loss)));
            }
            let wmax = state.var(2).iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            extra.push(("max_abs_rho_w", format!("{wmax:.6e}")));
        }
        _ => {}
    }
    for l in &sim.mesh.layers {
        match l.side {
            crate::mesh::Side::Top => extra.push(("z_end", format!("{:.6}", l.end))),
            crate::mesh::Side::Right => extra.push(("x_right_end", format!("{:.6}", l.end))),
            crate::mesh::Side::Left => extra.push(("x_left_end", format!("{:.6}", l.end))),
            crate::mesh::Side::Bottom => {}
        }
    }
    if smoke {
        // interface continuity assertion: shared nodes reached through the
        // finite and semi-infinite maps are the same storage
        let shared = sim.mesh.interface_nodes();
        extra.push(("interface_nodes_checked", format!("{}", shared.len())));
        for e in sim.mesh.semi_elements() {
            for i in 0..e.n_xi {
                let g = e.node(i, 0);
                assert!(
                    state.var(0)[g].is_finite(),
                    "interface node {g} holds a non-finite value"
                );
            }
        }
    }
    output::write_manifest(&dir.join("manifest.toml"), cfg, workers, Some(&stats), &extra)?;
    println!(
        "{}: {} steps to t = {}, {:.3} s wall ({:.3e} s/step), rhs split {:.1}% finite / {:.1}% laguerre",
        cfg.case, stats.steps, state.time, stats.wall_seconds, stats.wall_per_step,
        stats.pct_finite, stats.pct_laguerre
    );
    for (k, v) in &extra {
        println!("  {k} = {v}");
    }
    Ok(())
}

fn run_helmholtz_case(cfg: &SimulationConfig, workers: usize, dir: &Path) -> Result<(), CliError> {
    let layer = cfg.layer.as_ref().expect("helmholtz config carries a layer");
    let prob = HelmholtzProblem { lambda: layer.lambda, ..HelmholtzProblem::default() };
    let sol = solve_helmholtz(cfg.mesh.order_x, layer.order, &prob)?;
    let mut st = crate::equations::StateField::zeros(1, sol.mesh.n_nodes());
    st.var_mut(0).copy_from_slice(&sol.u);
    if cfg.output.write_csv {
        output::write_csv_nodes(&dir.join("solution.csv"), &sol.mesh, &st, &["u"])?;
    }
    if cfg.output.write_vtk {
        output::write_vtk(&dir.join("solution.vtk"), &sol.mesh, &[("u", &sol.u)], "helmholtz")?;
    }
    output::write_manifest(
        &dir.join("manifest.toml"),
        cfg,
        workers,
        None,
        &[("relative_l2_error", format!("{:.6e}", sol.rel_l2))],
    )?;
    println!(
        "helmholtz: orders ({}, {}), relative L2 error {:.3e}",
        sol.order_lgl, sol.order_lgr, sol.rel_l2
    );
    Ok(())
}

fn bench_case(
    cfg: &SimulationConfig,
    workers: usize,
    warmup: usize,
    steps: usize,
    reps: usize,
) -> Result<(), CliError> {
    let dir = PathBuf::from(&cfg.output.dir);
    output::ensure_dir(&dir)?;
    let res = benchmark_pair(cfg, warmup, steps, reps)?;
    let path = dir.join("bench.csv");
    let ends_hdr: String = res.ends.iter().map(|(k, _)| format!(",{k}")).collect();
    let ends_val: String = res.ends.iter().map(|(_, v)| format!(",{v:.4}")).collect();
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "layer_type,t_star{ends_hdr},pct_finite,pct_laguerre,nx,nz,wall_per_step")?;
    writeln!(
        f,
        "semi_infinite,{:.4}{ends_val},{:.2},{:.2},{},{},{:.6e}",
        res.semi.t_star,
        res.semi.pct_finite,
        res.semi.pct_laguerre,
        res.nx_semi,
        cfg.mesh.nz,
        res.semi.wall_per_step
    )?;
    writeln!(
        f,
        "extended_finite,{:.4}{ends_val},{:.2},{:.2},{},{},{:.6e}",
        res.extended.t_star,
        res.extended.pct_finite,
        res.extended.pct_laguerre,
        res.nx_extended,
        res.nz_extended,
        res.extended.wall_per_step
    )?;
    println!(
        "bench {}: extended/semi wall-per-step ratio = {:.2} (semi {:.3e} s, extended {:.3e} s; split {:.1}/{:.1})",
        cfg.case, res.ratio, res.semi.wall_per_step, res.extended.wall_per_step,
        res.semi.pct_finite, res.semi.pct_laguerre
    );
    let _ = workers;
    Ok(())
}

fn sweep_helmholtz(lgl: &[usize], lgr: &[usize], dir: &Path) -> Result<(), CliError> {
    output::ensure_dir(dir)?;
    let prob = HelmholtzProblem::default();
    let rows = sweep(lgl, lgr, &prob)?;
    let path = dir.join("helmholtz_sweep.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "order_lgl,order_lgr,relative_l2_error")?;
    for (nl, nr, e) in &rows {
        writeln!(f, "{nl},{nr},{e:.16e}")?;
        println!("  N_LGL = {nl:>2}, N_LGR = {nr:>2}: rel L2 = {e:.3e}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

// keep the registered defaults reachable for tools
pub fn default_config_of(case: &str) -> Option<SimulationConfig> {
    case_defaults(case, false)
}
