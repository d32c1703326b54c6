//! The PDE systems as pluggable equation sets, plus physical constants,
//! hydrostatically balanced background states, and Rayleigh damping
//! profiles.
//!
//! Euler prognostics are stored in perturbation form `(rho', rho u,
//! rho v, (rho theta)')` about a hydrostatic background, so the resting
//! atmosphere has machine-zero fluxes and every prognostic decays toward
//! zero in the semi-infinite direction.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquationsError {
    #[error("non-physical state: {0}")]
    NonPhysical(String),
    #[error("unknown case id '{0}'")]
    UnknownCase(String),
}

/// Physical constants with the paper's defaults.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysConstants {
    /// gravitational acceleration (m s^-2)
    pub g: f64,
    /// specific heat at constant pressure (J kg^-1 K^-1)
    pub c_p: f64,
    /// specific heat at constant volume (J kg^-1 K^-1)
    pub c_v: f64,
    /// reference pressure (Pa)
    pub p0: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self { g: 9.81, c_p: 1005.0, c_v: 718.0, p0: 1.0e5 }
    }
}

impl PhysConstants {
    pub fn r_gas(&self) -> f64 {
        self.c_p - self.c_v
    }

    /// Brunt-Vaisala frequency of the constant-N background, g / sqrt(c_p theta0).
    pub fn n_bv_of(&self, theta0: f64) -> f64 {
        self.g / (self.c_p * theta0).sqrt()
    }
}

/// Ideal-gas equation of state in potential-temperature form,
/// `p = p0 (rho R theta / p0)^(c_p / c_v)`.
pub fn equation_of_state(rho: f64, theta: f64, c: &PhysConstants) -> Result<f64, EquationsError> {
    if !(rho > 0.0) || !(theta > 0.0) {
        return Err(EquationsError::NonPhysical(format!("rho = {rho}, theta = {theta}")));
    }
    Ok(pressure_from_rho_theta(rho * theta, c))
}

/// Pressure as a function of the conserved product `rho theta`.
#[inline]
pub fn pressure_from_rho_theta(rho_theta: f64, c: &PhysConstants) -> f64 {
    c.p0 * (c.r_gas() * rho_theta / c.p0).powf(c.c_p / c.c_v)
}

/// Density from pressure and potential temperature (EOS inversion).
#[inline]
pub fn rho_from_p_theta(p: f64, theta: f64, c: &PhysConstants) -> f64 {
    c.p0 * (p / c.p0).powf(c.c_v / c.c_p) / (c.r_gas() * theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackgroundKind {
    /// Uniform potential temperature; pressure from the adiabatic column.
    Isentropic,
    /// Constant Brunt-Vaisala frequency profiles.
    ConstantN,
}

/// Hydrostatically balanced background sampled at mesh nodes.
#[derive(Debug, Clone)]
pub struct BackgroundState {
    pub theta0_sl: f64,
    pub p0_sl: f64,
    pub n_bv: f64,
    pub theta0: Vec<f64>,
    pub p0: Vec<f64>,
    pub rho0: Vec<f64>,
    pub rho_theta0: Vec<f64>,
}

impl BackgroundState {
    #[inline]
    pub fn at(&self, i: usize) -> BgPoint {
        BgPoint { rho0: self.rho0[i], p0: self.p0[i], rho_theta0: self.rho_theta0[i] }
    }

    pub fn len(&self) -> usize {
        self.rho0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho0.is_empty()
    }
}

/// Background values at a single node.
#[derive(Debug, Clone, Copy)]
pub struct BgPoint {
    pub rho0: f64,
    pub p0: f64,
    pub rho_theta0: f64,
}

/// Build the hydrostatic background over a set of node heights.
///
/// `ConstantN` uses `p = p0 [1 + g^2/(c_p theta0 N^2) (exp(-z N^2 / g) - 1)]^(c_p/R)`
/// and `theta = theta0 exp(z N^2 / g)`, with `N = g / sqrt(c_p theta0)`
/// unless `n_bv` overrides it. `Isentropic` uses uniform `theta0` with
/// `p = p0 (1 - g z / (c_p theta0))^(c_p/R)`.
pub fn hydrostatic_background(
    theta0_sl: f64,
    p0_sl: f64,
    kind: BackgroundKind,
    n_bv: Option<f64>,
    z_nodes: &[f64],
    c: &PhysConstants,
) -> BackgroundState {
    let n = match kind {
        BackgroundKind::Isentropic => 0.0,
        BackgroundKind::ConstantN => n_bv.unwrap_or_else(|| c.n_bv_of(theta0_sl)),
    };
    let cp_over_r = c.c_p / c.r_gas();
    let mut theta0 = Vec::with_capacity(z_nodes.len());
    let mut p0 = Vec::with_capacity(z_nodes.len());
    let mut rho0 = Vec::with_capacity(z_nodes.len());
    let mut rho_theta0 = Vec::with_capacity(z_nodes.len());
    for &z in z_nodes {
        let (th, p) = match kind {
            BackgroundKind::Isentropic => {
                let base = (1.0 - c.g * z / (c.c_p * theta0_sl)).max(0.0);
                (theta0_sl, p0_sl * base.powf(cp_over_r))
            }
            BackgroundKind::ConstantN => {
                let s = (-z * n * n / c.g).exp();
                let amp = c.g * c.g / (c.c_p * theta0_sl * n * n);
                let base = (1.0 + amp * (s - 1.0)).max(0.0);
                (theta0_sl * (z * n * n / c.g).exp(), p0_sl * base.powf(cp_over_r))
            }
        };
        let rho = if p > 0.0 { rho_from_p_theta(p, th, c) } else { 0.0 };
        theta0.push(th);
        p0.push(p);
        rho0.push(rho);
        rho_theta0.push(rho * th);
    }
    BackgroundState { theta0_sl, p0_sl, n_bv: n, theta0, p0, rho0, rho_theta0 }
}

/// Rayleigh damping coefficient profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DampingProfile {
    None,
    /// The 1D sigmoid layer profile
    /// `gamma(x) = dgamma / (1 + exp(sgn(L0-X0) (alpha (L0-X0) - x + X0) / zeta))`.
    Sigmoid1D { dgamma: f64, x0: f64, l0: f64, alpha: f64, zeta: f64 },
    /// `gamma(z) = dgamma sin^2(pi/2 (z - z_s)/(z_max - z_s))` for
    /// `z in [z_s, z_max]`, 0 below, dgamma above.
    SineSquared { dgamma: f64, z_s: f64, z_max: f64 },
}

pub fn damping_coefficient(coord: f64, profile: &DampingProfile) -> f64 {
    match *profile {
        DampingProfile::None => 0.0,
        DampingProfile::Sigmoid1D { dgamma, x0, l0, alpha, zeta } => {
            let sgn = (l0 - x0).signum();
            let arg = sgn * (alpha * (l0 - x0) - coord + x0) / zeta;
            dgamma / (1.0 + arg.exp())
        }
        DampingProfile::SineSquared { dgamma, z_s, z_max } => {
            if coord <= z_s {
                0.0
            } else if coord >= z_max {
                dgamma
            } else {
                let s = (std::f64::consts::FRAC_PI_2 * (coord - z_s) / (z_max - z_s)).sin();
                dgamma * s * s
            }
        }
    }
}

/// One of the time-dependent PDE systems. (The steady Helmholtz problem
/// has its own module built on the same operators.)
#[derive(Debug, Clone, PartialEq)]
pub enum EquationSet {
    /// q = (u, v), F = (v, u), unit wave speed.
    Wave1D,
    /// Linearized shallow water: q = (h, u),
    /// F = (U h + H u, g h + U u).
    ShallowWater1D { h_ref: f64, u_ref: f64, g: f64 },
    /// Passive tracer with constant velocity and viscosity.
    AdvectionDiffusion { u: f64, v: f64, nu: f64 },
    /// Compressible Euler with gravity in perturbation form;
    /// `nu`/`kappa` are the artificial viscosity coefficients (0 = off).
    Euler2D { constants: PhysConstants, nu: f64, kappa: f64 },
}

impl EquationSet {
    pub fn nvar(&self) -> usize {
        match self {
            EquationSet::Wave1D | EquationSet::ShallowWater1D { .. } => 2,
            EquationSet::AdvectionDiffusion { .. } => 1,
            EquationSet::Euler2D { .. } => 4,
        }
    }

    pub fn var_names(&self) -> &'static [&'static str] {
        match self {
            EquationSet::Wave1D => &["u", "v"],
            EquationSet::ShallowWater1D { .. } => &["h", "u"],
            EquationSet::AdvectionDiffusion { .. } => &["q"],
            EquationSet::Euler2D { .. } => &["rho_p", "rho_u", "rho_v", "rho_theta_p"],
        }
    }

    pub fn needs_background(&self) -> bool {
        matches!(self, EquationSet::Euler2D { .. })
    }

    /// Per-variable diffusion coefficients, `None` when the system has no
    /// diffusive terms.
    pub fn diffusion_coeffs(&self) -> Option<Vec<f64>> {
        match self {
            EquationSet::Wave1D | EquationSet::ShallowWater1D { .. } => None,
            EquationSet::AdvectionDiffusion { nu, .. } => {
                if *nu == 0.0 {
                    None
                } else {
                    Some(vec![*nu])
                }
            }
            EquationSet::Euler2D { nu, kappa, .. } => {
                if *nu == 0.0 && *kappa == 0.0 {
                    None
                } else {
                    Some(vec![0.0, *nu, *nu, *kappa])
                }
            }
        }
    }

    /// Pointwise flux evaluation. `bg` is required for Euler. Non-physical
    /// Euler states produce NaNs that the integrator's guard catches.
    #[inline]
    pub fn flux_node(&self, q: &[f64], bg: BgPoint, f: &mut [f64], g: &mut [f64]) {
        match self {
            EquationSet::Wave1D => {
                f[0] = q[1];
                f[1] = q[0];
                g[0] = 0.0;
                g[1] = 0.0;
            }
            EquationSet::ShallowWater1D { h_ref, u_ref, g: grav } => {
                f[0] = u_ref * q[0] + h_ref * q[1];
                f[1] = grav * q[0] + u_ref * q[1];
                g[0] = 0.0;
                g[1] = 0.0;
            }
            EquationSet::AdvectionDiffusion { u, v, .. } => {
                f[0] = u * q[0];
                g[0] = v * q[0];
            }
            EquationSet::Euler2D { constants, .. } => {
                let rho = bg.rho0 + q[0];
                let rho_theta = bg.rho_theta0 + q[3];
                let inv_rho = 1.0 / rho;
                let u = q[1] * inv_rho;
                let v = q[2] * inv_rho;
                let pp = pressure_from_rho_theta(rho_theta, constants) - bg.p0;
                f[0] = q[1];
                f[1] = q[1] * u + pp;
                f[2] = q[2] * u;
                f[3] = rho_theta * u;
                g[0] = q[2];
                g[1] = q[1] * v;
                g[2] = q[2] * v + pp;
                g[3] = rho_theta * v;
            }
        }
    }

    /// Pointwise source evaluation (gravity on the vertical momentum in
    /// perturbation form: `-rho' g`).
    #[inline]
    pub fn source_node(&self, q: &[f64], _bg: BgPoint, s: &mut [f64]) {
        match self {
            EquationSet::Euler2D { constants, .. } => {
                s[0] = 0.0;
                s[1] = 0.0;
                s[2] = -q[0] * constants.g;
                s[3] = 0.0;
            }
            _ => s.iter_mut().for_each(|v| *v = 0.0),
        }
    }

    pub fn has_source(&self) -> bool {
        matches!(self, EquationSet::Euler2D { .. })
    }
}

/// Checked Euler flux/source evaluation: the public operation form of the
/// kernel path, rejecting non-physical density.
pub fn euler_flux(
    q: &[f64; 4],
    bg: BgPoint,
    constants: &PhysConstants,
) -> Result<([f64; 4], [f64; 4], [f64; 4]), EquationsError> {
    let rho = bg.rho0 + q[0];
    if !(rho > 0.0) {
        return Err(EquationsError::NonPhysical(format!("total density {rho} <= 0")));
    }
    let eqs = EquationSet::Euler2D { constants: *constants, nu: 0.0, kappa: 0.0 };
    let (mut f, mut g, mut s) = ([0.0; 4], [0.0; 4], [0.0; 4]);
    eqs.flux_node(q, bg, &mut f, &mut g);
    eqs.source_node(q, bg, &mut s);
    Ok((f, g, s))
}

/// Per-variable global nodal values advanced in time (variable-major
/// storage: `values[v * n_nodes + i]`).
#[derive(Debug, Clone)]
pub struct StateField {
    pub nvar: usize,
    pub n_nodes: usize,
    pub values: Vec<f64>,
    pub time: f64,
}

impl StateField {
    pub fn zeros(nvar: usize, n_nodes: usize) -> Self {
        Self { nvar, n_nodes, values: vec![0.0; nvar * n_nodes], time: 0.0 }
    }

    #[inline]
    pub fn var(&self, v: usize) -> &[f64] {
        &self.values[v * self.n_nodes..(v + 1) * self.n_nodes]
    }

    #[inline]
    pub fn var_mut(&mut self, v: usize) -> &mut [f64] {
        &mut self.values[v * self.n_nodes..(v + 1) * self.n_nodes]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const C: PhysConstants = PhysConstants { g: 9.81, c_p: 1005.0, c_v: 718.0, p0: 1.0e5 };

    #[test]
    fn equation_of_state_reference_points() {
        // rho R theta = p0 => p = p0
        let rho = C.p0 / (C.r_gas() * 300.0);
        assert_relative_eq!(equation_of_state(rho, 300.0, &C).unwrap(), 1.0e5, max_relative = 1e-13);
        assert_relative_eq!(rho, 1.16144, max_relative = 1e-4);
        // monotone in rho at fixed theta
        let p1 = equation_of_state(1.0, 300.0, &C).unwrap();
        let p2 = equation_of_state(1.1, 300.0, &C).unwrap();
        assert!(p2 > p1);
        assert!(equation_of_state(-1.0, 300.0, &C).is_err());
        assert!(equation_of_state(1.0, 0.0, &C).is_err());
    }

    #[test]
    fn eos_roundtrip_through_rho() {
        for &(p, th) in &[(9.0e4, 280.0), (5.0e4, 320.0), (1.0e5, 250.0)] {
            let rho = rho_from_p_theta(p, th, &C);
            assert_relative_eq!(equation_of_state(rho, th, &C).unwrap(), p, max_relative = 1e-12);
        }
    }

    #[test]
    fn brunt_vaisala_frequency_matches_paper_value() {
        let n = C.n_bv_of(250.0);
        assert!((n - 0.0196).abs() < 5e-5, "N = {n}");
    }

    #[test]
    fn background_sea_level_values_and_positivity() {
        for kind in [BackgroundKind::Isentropic, BackgroundKind::ConstantN] {
            let zs: Vec<f64> = (0..40).map(|i| i as f64 * 500.0).collect();
            let bg = hydrostatic_background(300.0, 1.0e5, kind, None, &zs, &C);
            assert_relative_eq!(bg.theta0[0], 300.0, max_relative = 1e-14);
            assert_relative_eq!(bg.p0[0], 1.0e5, max_relative = 1e-14);
            assert!(bg.rho0.iter().all(|&r| r > 0.0));
            assert!(bg.p0.windows(2).all(|w| w[1] < w[0]), "pressure decreases with height");
        }
    }

    #[test]
    fn constant_n_background_is_hydrostatic_pointwise() {
        // |dp0/dz + rho0 g| < 1e-6 rho0 g using a tight finite difference
        let c = C;
        let dz = 0.01;
        for &z in &[100.0, 2_000.0, 9_000.0, 20_000.0] {
            let zs = [z - dz, z, z + dz];
            let bg = hydrostatic_background(250.0, 1.0e5, BackgroundKind::ConstantN, None, &zs, &c);
            let dpdz = (bg.p0[2] - bg.p0[0]) / (2.0 * dz);
            let resid = (dpdz + bg.rho0[1] * c.g).abs();
            assert!(resid < 1e-6 * bg.rho0[1] * c.g, "z={z} resid={resid}");
        }
        // Schar variant with explicit N = 0.01
        for &z in &[100.0, 5_000.0, 15_000.0] {
            let zs = [z - dz, z, z + dz];
            let bg =
                hydrostatic_background(280.0, 1.0e5, BackgroundKind::ConstantN, Some(0.01), &zs, &c);
            let dpdz = (bg.p0[2] - bg.p0[0]) / (2.0 * dz);
            let resid = (dpdz + bg.rho0[1] * c.g).abs();
            assert!(resid < 1e-6 * bg.rho0[1] * c.g, "z={z} resid={resid}");
        }
    }

    #[test]
    fn isentropic_background_is_hydrostatic_pointwise() {
        let dz = 0.01;
        for &z in &[50.0, 1_000.0, 4_900.0, 12_000.0] {
            let zs = [z - dz, z, z + dz];
            let bg = hydrostatic_background(300.0, 1.0e5, BackgroundKind::Isentropic, None, &zs, &C);
            let dpdz = (bg.p0[2] - bg.p0[0]) / (2.0 * dz);
            let resid = (dpdz + bg.rho0[1] * C.g).abs();
            assert!(resid < 1e-6 * bg.rho0[1] * C.g, "z={z} resid={resid}");
        }
    }

    #[test]
    fn sigmoid_damping_matches_hand_evaluation() {
        // right layer of the 1D wave configuration
        let p = DampingProfile::Sigmoid1D {
            dgamma: 2.0,
            x0: 2.5,
            l0: 11.63,
            alpha: 0.3,
            zeta: 11.63 / 18.0,
        };
        let g = damping_coefficient(2.5, &p);
        assert!((g - 0.0285).abs() < 5e-4, "gamma(2.5) = {g}");
        // far field approaches dgamma
        assert_relative_eq!(damping_coefficient(1.0e4, &p), 2.0, max_relative = 1e-12);
        // mirrored left layer behaves symmetrically
        let pl = DampingProfile::Sigmoid1D {
            dgamma: 2.0,
            x0: -2.5,
            l0: -11.63,
            alpha: 0.3,
            zeta: 11.63 / 18.0,
        };
        assert_relative_eq!(damping_coefficient(-2.5, &pl), g, max_relative = 1e-12);
        assert_relative_eq!(damping_coefficient(-1.0e4, &pl), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn sine_squared_damping_endpoints_and_continuity() {
        let p = DampingProfile::SineSquared { dgamma: 0.1, z_s: 15_000.0, z_max: 28_853.0 };
        assert_eq!(damping_coefficient(15_000.0, &p), 0.0);
        assert_eq!(damping_coefficient(10_000.0, &p), 0.0);
        assert_relative_eq!(damping_coefficient(28_853.0, &p), 0.1, max_relative = 1e-12);
        assert_relative_eq!(damping_coefficient(40_000.0, &p), 0.1, max_relative = 1e-12);
        // C^1 at z_s: slope vanishes from above
        let eps = 1e-3;
        let slope = damping_coefficient(15_000.0 + eps, &p) / eps;
        assert!(slope < 1e-6);
        // continuity across the ramp
        let a = damping_coefficient(20_000.0, &p);
        let b = damping_coefficient(20_000.0 + 1e-6, &p);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn euler_flux_reference_values() {
        // rho = 1.2, u = 10, v = 0, theta = 300 on a trivial background:
        // F1 = rho u = 12, F2 = rho u^2 + p' with p' = p - p0_bg
        let bg = BgPoint { rho0: 0.0, p0: 0.0, rho_theta0: 0.0 };
        let q = [1.2, 12.0, 0.0, 360.0];
        let (f, g, s) = euler_flux(&q, bg, &C).unwrap();
        assert_relative_eq!(f[0], 12.0, max_relative = 1e-14);
        let p = equation_of_state(1.2, 300.0, &C).unwrap();
        assert_relative_eq!(f[1], 120.0 + p, max_relative = 1e-13);
        assert_relative_eq!(g[2], p, max_relative = 1e-13);
        assert_relative_eq!(s[2], -1.2 * 9.81, max_relative = 1e-14);
        // rho' = 0.01 source example
        let bg = BgPoint { rho0: 1.0, p0: 1.0e5, rho_theta0: 300.0 };
        let (_, _, s) = euler_flux(&[0.01, 0.0, 0.0, 0.0], bg, &C).unwrap();
        assert_relative_eq!(s[2], -0.0981, max_relative = 1e-12);
        // hydrostatic rest state: all fluxes vanish in perturbation form
        let rho0 = rho_from_p_theta(9.0e4, 290.0, &C);
        let bg = BgPoint { rho0, p0: 9.0e4, rho_theta0: rho0 * 290.0 };
        let (f, g, s) = euler_flux(&[0.0; 4], bg, &C).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-9));
        assert!(g.iter().all(|v| v.abs() < 1e-9));
        assert!(s.iter().all(|v| v.abs() < 1e-9));
        // negative total density is rejected
        assert!(euler_flux(&[-2.0, 0.0, 0.0, 0.0], bg, &C).is_err());
    }
}
