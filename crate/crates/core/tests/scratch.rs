use lagsem::cases::{build_case, case_defaults};
use lagsem::simulation::run;
use lagsem::timeint::IntegratorSpec;

#[test]
fn exp_lhm_localize_instability() {
    let mut cfg = case_defaults("lhm", false).unwrap();
    cfg.mesh.nx = 60; cfg.mesh.nz = 11;
    cfg.time.dt = 0.2;
    cfg.filter.layer_mu = 0.0; // finite-domain filtering only
    cfg.time.t_end = 3200.0;
    let built = build_case(&cfg).unwrap();
    let mut sim = built.sim;
    let mut state = built.state;
    let spec = IntegratorSpec { scheme: cfg.time.scheme, dt: cfg.time.dt, t_end: cfg.time.t_end };
    let every = (100.0 / cfg.time.dt) as usize;
    let res = run(&mut sim, &mut state, &spec, Some(every), |sim, st, _| {
        if st.time < 2000.0 { return; }
        let n = sim.mesh.n_nodes();
        let mut best = (0.0f64, 0usize);
        for i in 0..n {
            if sim.mesh.coords[i][1] > 15_000.0 {
                let rv = st.var(2)[i].abs();
                if rv > best.0 { best = (rv, i); }
            }
        }
        let c = sim.mesh.coords[best.1];
        println!("t={:>6.0} layer max|rho v|={:.3e} at (x={:.0}, z={:.0})", st.time, best.0, c[0], c[1]);
    });
    println!("result: {:?}", res.map(|s| s.steps));
}
