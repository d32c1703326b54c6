//! Acceptance suite: every numbered criterion as one test, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see them). The tests serialize on a global mutex so wall-clock
//! measurements are not polluted by concurrent work.

use lagsem::basis::{lgl_quadrature, lgr_quadrature, slf_eval};
use lagsem::cases::{build_case, case_defaults};
use lagsem::diagnostics::{
    advdiff_exact, benchmark_pair, error_norms, mass_budget, reflection_metric, rmse_cross_run,
    total_mass,
};
use lagsem::equations::StateField;
use lagsem::helmholtz::{solve_helmholtz, HelmholtzProblem};
use lagsem::mesh::Side;
use lagsem::simulation::{run, BoundaryCondition};
use lagsem::timeint::IntegratorSpec;
use std::sync::{Mutex, MutexGuard, OnceLock};

fn serial() -> MutexGuard<'static, ()> {
    static GATE: OnceLock<Mutex<()>> = OnceLock::new();
    GATE.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn report(num: usize, name: &str, pass: bool, detail: &str) {
    println!("ACCEPTANCE {num:02} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {num} ({name}) failed: {detail}");
}

#[test]
fn criterion_01_quadrature_exactness() {
    let _g = serial();
    // LGL orders 2..=16: a full degree-(2N-1) polynomial integrates exactly
    let mut worst_lgl = 0.0f64;
    for n in 2..=16usize {
        let q = lgl_quadrature(n).unwrap();
        let deg = 2 * n - 1;
        let coefs: Vec<f64> = (0..=deg).map(|k| 1.0 + 0.37 * (k as f64 * 1.7).sin()).collect();
        let p = |x: f64| coefs.iter().enumerate().fold(0.0, |a, (k, c)| a + c * x.powi(k as i32));
        let quad: f64 = q.nodes.iter().zip(&q.weights).map(|(&x, &w)| w * p(x)).sum();
        let exact: f64 = coefs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { 2.0 * c / (k as f64 + 1.0) } else { 0.0 })
            .sum();
        worst_lgl = worst_lgl.max(((quad - exact) / exact).abs());
        // degree 2N must miss visibly
        let m2 = 2 * n;
        let q2n: f64 = q.nodes.iter().zip(&q.weights).map(|(&x, &w)| w * x.powi(m2 as i32)).sum();
        let e2n = 2.0 / (m2 as f64 + 1.0);
        assert!(((q2n - e2n) / e2n).abs() > 1e-9, "order {n} does not miss at degree 2N");
    }
    // LGR orders 1..=60: monomial moments m! for m <= 2N
    let mut worst_lgr_low = 0.0f64;
    let mut worst_lgr_high = 0.0f64;
    for n in [1usize, 2, 5, 10, 20, 30, 40, 50, 60] {
        let q = lgr_quadrature(n, 1.0).unwrap();
        for m in [0usize, 1, n, 2 * n] {
            let quad: f64 = q
                .nodes
                .iter()
                .zip(&q.weights)
                .map(|(&x, &w)| (-x).exp() * w * x.powi(m as i32))
                .sum();
            let exact: f64 = (1..=m).map(|k| k as f64).product();
            let rel = ((quad - exact) / exact.max(1.0)).abs();
            if n <= 30 {
                worst_lgr_low = worst_lgr_low.max(rel);
            } else {
                worst_lgr_high = worst_lgr_high.max(rel);
            }
        }
    }
    let pass = worst_lgl < 1e-11 && worst_lgr_low < 1e-9 && worst_lgr_high < 1e-6;
    report(
        1,
        "quadrature exactness",
        pass,
        &format!(
            "LGL worst rel {worst_lgl:.2e} (<1e-11), LGR worst rel {worst_lgr_low:.2e} (<=30, <1e-9) / {worst_lgr_high:.2e} (60, <1e-6)"
        ),
    );
}

#[test]
fn criterion_02_slf_orthogonality() {
    let _g = serial();
    let q = lgr_quadrature(40, 1.0).unwrap();
    let mut worst = 0.0f64;
    for &lambda in &[0.05, 1.0, 100.0] {
        for i in 0..=6usize {
            for j in 0..=6usize {
                // integral over the physical coordinate via s = xi/lambda:
                // the SLF product at lambda*s already carries e^{-s}, so the
                // reference rule applies directly
                let mut acc = 0.0;
                for (&s, &w) in q.nodes.iter().zip(&q.weights) {
                    acc += w * slf_eval(i, lambda * s, lambda) * slf_eval(j, lambda * s, lambda);
                }
                let acc = acc * lambda;
                let expect = if i == j { lambda } else { 0.0 };
                worst = worst.max(((acc - expect) / lambda).abs());
            }
        }
    }
    report(
        2,
        "SLF orthogonality",
        worst < 1e-9,
        &format!("max |integral - lambda delta_ij| / lambda = {worst:.2e} (<1e-9)"),
    );
}

#[test]
fn criterion_03_helmholtz_floor() {
    let _g = serial();
    let prob = HelmholtzProblem::default();
    let anchor = solve_helmholtz(9, 48, &prob).unwrap().rel_l2;
    let lgls = [4usize, 5, 6, 7, 8, 9, 10];
    let lgrs = [16usize, 32, 64];
    let mut table = Vec::new();
    for &nr in &lgrs {
        for &nl in &lgls {
            let e = solve_helmholtz(nl, nr, &prob).unwrap().rel_l2;
            println!("  helmholtz sweep N_LGL={nl:>2} N_LGR={nr:>2}: rel L2 = {e:.3e}");
            table.push((nl, nr, e));
        }
    }
    let err_at = |nl: usize, nr: usize| {
        table.iter().find(|(a, b, _)| *a == nl && *b == nr).map(|(_, _, e)| *e).unwrap()
    };
    let mut structure = true;
    for &nr in &lgrs {
        structure &= err_at(10, nr) <= err_at(4, nr);
    }
    let floors: Vec<f64> = lgrs.iter().map(|&nr| err_at(10, nr)).collect();
    let floors_decrease = floors[0] > floors[1] && floors[1] > floors[2];
    let pass = anchor <= 1e-10 && structure && floors_decrease;
    report(
        3,
        "Helmholtz accuracy floor",
        pass,
        &format!(
            "rel L2 at (9,48) = {anchor:.2e} (<=1e-10); floors at N_LGL=10: {:.2e} > {:.2e} > {:.2e}",
            floors[0], floors[1], floors[2]
        ),
    );
}

#[test]
fn criterion_04_wave1d_damping() {
    let _g = serial();
    // paper configuration: metric < 1e-2 at t = 9 s
    let cfg = case_defaults("wave1d", false).unwrap();
    let built = build_case(&cfg).unwrap();
    let mut sim = built.sim;
    let mut state = built.state;
    let peak = state.var(0).iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let spec = IntegratorSpec { scheme: cfg.time.scheme, dt: cfg.time.dt, t_end: cfg.time.t_end };
    run(&mut sim, &mut state, &spec, None, |_, _, _| {}).unwrap();
    let mask = sim.mesh.finite_node_mask();
    let damped = reflection_metric(state.var(0), &mask, peak);

    // undamped control: sealed finite domain, rigid ends (v = 0), run one
    // full period (t = 10 s) after which the split pulses reassemble
    let mut ctrl = cfg.clone();
    ctrl.layer = None;
    ctrl.damping.profile = "none".into();
    ctrl.time.t_end = 10.0;
    let built = build_case(&ctrl).unwrap();
    let mut sim_c = built.sim;
    let mut state_c = built.state;
    for side in [Side::Left, Side::Right] {
        let nodes = sim_c.mesh.side_nodes[&side].clone();
        sim_c.bcs.push(BoundaryCondition::SetValue { var: 1, nodes, value: 0.0 });
    }
    let spec = IntegratorSpec { scheme: ctrl.time.scheme, dt: ctrl.time.dt, t_end: ctrl.time.t_end };
    run(&mut sim_c, &mut state_c, &spec, None, |_, _, _| {}).unwrap();
    let mask_c = sim_c.mesh.finite_node_mask();
    let control = reflection_metric(state_c.var(0), &mask_c, peak);

    let pass = damped < 1e-2 && control > 0.8 && control < 1.2;
    report(
        4,
        "1D wave damping",
        pass,
        &format!("damped metric {damped:.2e} (<1e-2), sealed control {control:.3} (~1)"),
    );
}

#[test]
fn criterion_05_wavetrain_periodicity() {
    let _g = serial();
    let mut cfg = case_defaults("wavetrain", false).unwrap();
    cfg.mesh.nx = 50; // low-resolution variant of the overlap figure
    cfg.time.dt = 0.25;
    cfg.time.t_end = 50_000.0;
    let built = build_case(&cfg).unwrap();
    let mut sim = built.sim;
    let mut state = built.state;
    let spec = IntegratorSpec { scheme: cfg.time.scheme, dt: cfg.time.dt, t_end: cfg.time.t_end };
    let every = (5000.0 / cfg.time.dt).round() as usize; // snapshot each period
    let mut snap_5k: Option<StateField> = None;
    let mut snap_50k: Option<StateField> = None;
    run(&mut sim, &mut state, &spec, Some(every), |_, st, step| {
        if step == every {
            snap_5k = Some(st.clone());
        }
        if step == 10 * every {
            snap_50k = Some(st.clone());
        }
    })
    .unwrap();
    let a = snap_5k.expect("snapshot at t = 5000 s");
    let b = snap_50k.expect("snapshot at t = 50000 s");
    let mask = sim.mesh.finite_node_mask();
    let rmse = rmse_cross_run(&a, &b, &mask);
    // h responds to the u-forcing with amplitude A sqrt(H/g)
    let h_amp = cfg.params.amplitude * (cfg.params.h_ref / cfg.constants.g).sqrt();
    let rel = rmse[0] / h_amp;
    report(
        5,
        "wave-train periodicity",
        rel < 0.01,
        &format!("RMSE(h)/amplitude = {rel:.3e} over t = 5e3 vs 5e4 s (<1e-2)"),
    );
}

#[test]
fn criterion_06_advection_diffusion_accuracy() {
    let _g = serial();
    let orders = [15usize, 25, 40];
    let mut l2s = Vec::new();
    let mut linfs = Vec::new();
    for &order in &orders {
        let mut cfg = case_defaults("advdiff", false).unwrap();
        cfg.layer.as_mut().unwrap().order = order;
        cfg.time.t_end = 2.2; // pulse center 0.2 m above the interface
        cfg.time.dt = 2.5e-4;
        let built = build_case(&cfg).unwrap();
        let mut sim = built.sim;
        let mut state = built.state;
        let spec = IntegratorSpec { scheme: cfg.time.scheme, dt: cfg.time.dt, t_end: cfg.time.t_end };
        run(&mut sim, &mut state, &spec, None, |_, _, _| {}).unwrap();
        let exact: Vec<f64> = sim
            .mesh
            .coords
            .iter()
            .map(|c| advdiff_exact(c[0], c[1], state.time, 0.0, 8.0, 0.5, 1.0, 0.1))
            .collect();
        let (l2, linf) = error_norms(state.var(0), &exact, &sim.mass.values);
        println!("  advdiff LGR order {order}: L2 = {l2:.4e}, Linf = {linf:.4e}");
        l2s.push(l2);
        linfs.push(linf);
    }
    // strictly decreasing endpoint to endpoint, non-increasing along the
    // sequence (the fixed-order finite mesh sets the floor), and below
    // 1e-4 at order 40
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-3));
    let pass = l2s[2] < l2s[0]
        && linfs[2] < linfs[0]
        && monotone(&l2s)
        && monotone(&linfs)
        && l2s[2] < 1e-4
        && linfs[2] < 1e-4;
    report(
        6,
        "advection-diffusion accuracy",
        pass,
        &format!(
            "L2 {:.3e} -> {:.3e}, Linf {:.3e} -> {:.3e} (order 15 -> 40, both < 1e-4)",
            l2s[0], l2s[2], linfs[0], linfs[2]
        ),
    );
}

#[test]
fn criterion_07_mass_conservation() {
    let _g = serial();
    let mut cfg = case_defaults("bubble", false).unwrap();
    cfg.time.t_end = 200.0;
    let built = build_case(&cfg).unwrap();
    let mut sim = built.sim;
    let mut state = built.state;
    let bg = sim.bg.clone().unwrap();
    let m0 = total_mass(&state, &bg, &sim.mass.values);
    let spec = IntegratorSpec { scheme: cfg.time.scheme, dt: cfg.time.dt, t_end: cfg.time.t_end };
    run(&mut sim, &mut state, &spec, None, |_, _, _| {}).unwrap();
    let mb = mass_budget(&state, &bg, &sim.mass.values, m0);
    report(
        7,
        "mass conservation",
        mb.rel_loss <= 1e-12,
        &format!("relative mass loss {:.3e} at t = 200 s, SSPRK33, no sponge (<=1e-12)", mb.rel_loss),
    );
}

#[test]
fn criterion_08_cost_advantage() {
    let _g = serial();
    let wave = benchmark_pair(&case_defaults("wave1d", false).unwrap(), 5, 25, 3).unwrap();
    let train = benchmark_pair(&case_defaults("wavetrain", false).unwrap(), 5, 25, 3).unwrap();
    let split_ok = |r: &lagsem::diagnostics::BenchResult| {
        (r.semi.pct_finite + r.semi.pct_laguerre - 100.0).abs() < 0.5
    };
    let pass = wave.ratio >= 1.5 && train.ratio >= 2.0 && split_ok(&wave) && split_ok(&train);
    report(
        8,
        "cost advantage",
        pass,
        &format!(
            "extended/semi wall-per-step: wave1d {:.2} (>=1.5), wavetrain {:.2} (>=2.0); split {:.1}+{:.1}=100",
            wave.ratio, train.ratio, wave.semi.pct_finite, wave.semi.pct_laguerre
        ),
    );
}

#[test]
fn criterion_09_mountain_wave_structure() {
    let _g = serial();
    let mut cfg = case_defaults("lhm", false).unwrap();
    cfg.mesh.nx = 60;
    cfg.mesh.nz = 11;
    cfg.time.dt = 0.2;
    cfg.time.t_end = 6000.0;
    let built = build_case(&cfg).unwrap();
    let mut sim = built.sim;
    let mut state = built.state;
    let spec = IntegratorSpec { scheme: cfg.time.scheme, dt: cfg.time.dt, t_end: cfg.time.t_end };
    run(&mut sim, &mut state, &spec, None, |_, _, _| {}).unwrap();
    let finite_state = state.is_finite();

    // vertical velocity w = rho w / (rho0 + rho')
    let bg = sim.bg.as_ref().unwrap();
    let n = sim.mesh.n_nodes();
    let w: Vec<f64> =
        (0..n).map(|i| state.var(2)[i] / (bg.rho0[i] + state.var(0)[i])).collect();

    // (b) dominant vertical wavelength above the mountain from the zero
    // crossings of w along the x = 0 column
    let mut column: Vec<(f64, f64)> = (0..n)
        .filter(|&i| sim.mesh.coords[i][0].abs() < 1e-6)
        .map(|i| (sim.mesh.coords[i][1], w[i]))
        .filter(|&(z, _)| (500.0..=12_500.0).contains(&z))
        .collect();
    column.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    column.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9);
    let mut crossings = Vec::new();
    for pair in column.windows(2) {
        let (z0, w0) = pair[0];
        let (z1, w1) = pair[1];
        if w0 == 0.0 || w0.signum() == w1.signum() {
            continue;
        }
        crossings.push(z0 + (z1 - z0) * w0 / (w0 - w1));
    }
    let lambda_est = if crossings.len() >= 2 {
        2.0 * (crossings.last().unwrap() - crossings.first().unwrap())
            / (crossings.len() as f64 - 1.0)
    } else {
        0.0
    };
    let n_bv = cfg.constants.g / (cfg.constants.c_p * cfg.params.theta0).sqrt();
    let lambda_z = 2.0 * std::f64::consts::PI * cfg.params.u_bg / n_bv;
    let wl_ok = (lambda_est - lambda_z).abs() / lambda_z < 0.25;

    // (c) the top quarter of the sponge is quiet
    let z_s = cfg.mesh.z_max;
    let z_end = sim.mesh.layer_on(Side::Top).unwrap().end;
    let z_quarter = z_s + 0.75 * (z_end - z_s);
    let mask = sim.mesh.finite_node_mask();
    let mut w_finite = 0.0f64;
    let mut w_sponge_top = 0.0f64;
    for i in 0..n {
        if mask[i] {
            w_finite = w_finite.max(w[i].abs());
        }
        if sim.mesh.coords[i][1] >= z_quarter {
            w_sponge_top = w_sponge_top.max(w[i].abs());
        }
    }
    let sponge_ok = w_sponge_top < 0.10 * w_finite;
    let pass = finite_state && wl_ok && sponge_ok;
    report(
        9,
        "mountain-wave structure",
        pass,
        &format!(
            "finite={finite_state}; lambda_z {lambda_est:.0} m vs 2 pi U/N = {lambda_z:.0} m ({:.0}% off, <25%); sponge-top max|w| {:.2e} vs finite {:.2e} ({:.1}%, <10%)",
            100.0 * (lambda_est - lambda_z).abs() / lambda_z,
            w_sponge_top,
            w_finite,
            100.0 * w_sponge_top / w_finite
        ),
    );
}

#[test]
fn criterion_10_well_balancedness() {
    let _g = serial();
    // zero-perturbation hydrostatic state over the flat bubble mesh and
    // the terrain-following mountain mesh, 100 steps each
    let mut worst = 0.0f64;
    for (case, dt) in [("bubble", 0.02), ("lhm", 0.2)] {
        let mut cfg = case_defaults(case, false).unwrap();
        cfg.params.theta_c = 0.0; // no bubble
        cfg.params.u_bg = 0.0; // no wind
        if case == "lhm" {
            cfg.mesh.nx = 60;
            cfg.mesh.nz = 11;
        }
        cfg.time.dt = dt;
        cfg.time.t_end = 100.0 * dt;
        let built = build_case(&cfg).unwrap();
        let mut sim = built.sim;
        let mut state = built.state;
        assert!(state.values.iter().all(|&v| v == 0.0), "zero-perturbation init");
        let bg = sim.bg.clone().unwrap();
        let gravity_scale = bg
            .rho0
            .iter()
            .fold(0.0f64, |a, &r| a.max(r)) * cfg.constants.g;
        // instantaneous tendency of the initial state
        let mut du = vec![0.0; 4 * sim.n_nodes()];
        sim.rhs(&state.values.clone(), &mut du);
        let rhs_max = du.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let spec = IntegratorSpec { scheme: cfg.time.scheme, dt: cfg.time.dt, t_end: cfg.time.t_end };
        run(&mut sim, &mut state, &spec, None, |_, _, _| {}).unwrap();
        let drift = state.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let drift_rate = drift / (100.0 * dt);
        worst = worst.max(rhs_max / gravity_scale).max(drift_rate / gravity_scale);
        println!(
            "  {case}: |dq/dt|/(rho0 g) = {:.2e}, drift rate/(rho0 g) = {:.2e}",
            rhs_max / gravity_scale,
            drift_rate / gravity_scale
        );
    }
    report(
        10,
        "well-balancedness",
        worst < 1e-10,
        &format!("max normalized tendency {worst:.2e} over 100 steps (flat + terrain, <1e-10)"),
    );
}

#[test]
fn criterion_11_interface_continuity() {
    let _g = serial();
    let mut checked_nodes = 0usize;
    for case in ["advdiff", "bubble"] {
        let cfg = case_defaults(case, true).unwrap();
        let built = build_case(&cfg).unwrap();
        let mut sim = built.sim;
        let mut state = built.state;
        let spec = IntegratorSpec {
            scheme: cfg.time.scheme,
            dt: cfg.time.dt,
            t_end: 5.0 * cfg.time.dt,
        };
        let mesh = sim.mesh.clone();
        // positions of interface nodes inside the finite map H^F, found by
        // bitwise coordinate identity
        let mut pairs = Vec::new();
        for (es, el_s) in mesh.semi_elements().iter().enumerate() {
            for i in 0..el_s.n_xi {
                let g_s = el_s.node(i, 0);
                let c = mesh.coords[g_s];
                let mut found = None;
                'outer: for el_f in mesh.finite_elements() {
                    for (l, &g_f) in el_f.conn.iter().enumerate() {
                        if mesh.coords[g_f] == c {
                            found = Some(g_f);
                            let _ = l;
                            break 'outer;
                        }
                    }
                }
                let g_f = found.expect("interface node must exist in H^F");
                pairs.push((g_s, g_f));
                let _ = es;
            }
        }
        run(&mut sim, &mut state, &spec, Some(1), |_, st, _| {
            for &(g_s, g_f) in &pairs {
                for v in 0..st.nvar {
                    // H^S and H^F must address the same storage: the node
                    // indices coincide, hence the values are bitwise equal
                    assert_eq!(g_s, g_f, "interface node duplicated between maps");
                    let a = st.var(v)[g_s];
                    let b = st.var(v)[g_f];
                    assert!(a.to_bits() == b.to_bits() && a.is_finite());
                }
            }
        })
        .unwrap();
        checked_nodes += pairs.len();
    }
    report(
        11,
        "interface continuity",
        checked_nodes > 0,
        &format!("{checked_nodes} interface nodes bitwise-identical via H^F and H^S after every step"),
    );
}
