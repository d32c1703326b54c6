//! Steady Helmholtz solve on the semi-infinite channel with the
//! manufactured solution `u = e^{-x/L} sin(x/L) cos(y)`.
//!
//! Nodal SEM with inexact integration turns the problem into
//! `-L u + alpha^2 M u = -M f`; zero Dirichlet rows cover the channel
//! walls and the x = 0 edge, the semi-infinite end needs no condition
//! (SLF decay supplies it). The sparse system is reordered with RCM and
//! solved by a banded LU.

use crate::assembly::global_laplacian;
use crate::cases::{build_mesh, case_defaults};
use crate::diagnostics::relative_l2;
use crate::linalg::{BandedLu, CsrMatrix, LinalgError};
use crate::mesh::Mesh2D;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HelmholtzError {
    #[error(transparent)]
    Case(#[from] crate::cases::CaseError),
    #[error("linear solve failed: {0}")]
    Solve(#[from] LinalgError),
}

/// Problem parameters of the channel test.
#[derive(Debug, Clone, Copy)]
pub struct HelmholtzProblem {
    /// wavenumber (m^-1)
    pub alpha: f64,
    /// decay length L of the exact solution (m)
    pub decay_l: f64,
    /// LGR scaling factor of the semi-infinite extension
    pub lambda: f64,
}

impl Default for HelmholtzProblem {
    fn default() -> Self {
        // lambda = L/2 matches the SLF weight to the solution decay
        Self { alpha: 10.0, decay_l: 2.0, lambda: 1.0 }
    }
}

/// Exact solution `u(x, y) = e^{-x/L} sin(x/L) cos(y)`.
pub fn exact_solution(x: f64, y: f64, l: f64) -> f64 {
    (-x / l).exp() * (x / l).sin() * y.cos()
}

/// Manufactured right-hand side `f = u_xx + u_yy + alpha^2 u`, expanded
/// analytically: `u_xx = -2 e^{-x/L} cos(x/L) / L^2`, `u_yy = -u`.
pub fn manufactured_rhs(x: f64, y: f64, alpha: f64, l: f64) -> f64 {
    let e = (-x / l).exp();
    e * y.cos() * (-2.0 * (x / l).cos() / (l * l) + (alpha * alpha - 1.0) * (x / l).sin())
}

#[derive(Debug)]
pub struct HelmholtzSolution {
    pub mesh: Mesh2D,
    pub u: Vec<f64>,
    pub rel_l2: f64,
    pub order_lgl: usize,
    pub order_lgr: usize,
}

/// Assemble and solve the channel problem at the given element orders on
/// the 16-finite / 4-semi-infinite mesh.
pub fn solve_helmholtz(
    order_lgl: usize,
    order_lgr: usize,
    prob: &HelmholtzProblem,
) -> Result<HelmholtzSolution, HelmholtzError> {
    let mut cfg = case_defaults("helmholtz", false).expect("registered case");
    cfg.mesh.order_x = order_lgl;
    cfg.mesh.order_z = order_lgl;
    let layer = cfg.layer.as_mut().unwrap();
    layer.order = order_lgr;
    layer.lambda = prob.lambda;
    let mesh = build_mesh(&cfg)?;
    let n = mesh.n_nodes();

    let lap = global_laplacian(&mesh);
    let mass = crate::assembly::global_mass(&mesh);

    // Dirichlet set: channel walls y = +-pi/2 (finite and layer alike) and
    // the x = 0 edge; the exact solution vanishes on all of them.
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut dirichlet = vec![false; n];
    for (i, c) in mesh.coords.iter().enumerate() {
        if c[0].abs() < 1e-12 || (c[1].abs() - half_pi).abs() < 1e-9 {
            dirichlet[i] = true;
        }
    }

    // A = -L + alpha^2 M with eliminated Dirichlet rows/columns
    let a2 = prob.alpha * prob.alpha;
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(lap.nnz() + n);
    for i in 0..n {
        if dirichlet[i] {
            trip.push((i, i, 1.0));
            continue;
        }
        for k in lap.indptr[i]..lap.indptr[i + 1] {
            let j = lap.indices[k];
            if !dirichlet[j] {
                trip.push((i, j, -lap.values[k]));
            }
        }
        trip.push((i, i, a2 * mass.values[i]));
    }
    let a = CsrMatrix::from_triplets(n, &mut trip);

    let mut b = vec![0.0; n];
    for i in 0..n {
        if !dirichlet[i] {
            let [x, y] = mesh.coords[i];
            b[i] = mass.values[i] * manufactured_rhs(x, y, prob.alpha, prob.decay_l);
        }
    }

    // RCM + banded LU
    let perm = a.rcm_ordering();
    let ap = a.permute(&perm);
    let lu = BandedLu::factor_csr(&ap)?;
    let mut bp: Vec<f64> = perm.iter().map(|&old| b[old]).collect();
    lu.solve(&mut bp);
    let mut u = vec![0.0; n];
    for (new, &old) in perm.iter().enumerate() {
        u[old] = bp[new];
    }

    let exact: Vec<f64> =
        mesh.coords.iter().map(|c| exact_solution(c[0], c[1], prob.decay_l)).collect();
    let rel_l2 = relative_l2(&u, &exact, &mass.values);
    Ok(HelmholtzSolution { mesh, u, rel_l2, order_lgl, order_lgr })
}

/// The (order_lgl, order_lgr) -> relative-error sweep.
pub fn sweep(
    orders_lgl: &[usize],
    orders_lgr: &[usize],
    prob: &HelmholtzProblem,
) -> Result<Vec<(usize, usize, f64)>, HelmholtzError> {
    let mut rows = Vec::new();
    for &nr in orders_lgr {
        for &nl in orders_lgl {
            let sol = solve_helmholtz(nl, nr, prob)?;
            rows.push((nl, nr, sol.rel_l2));
        }
    }
    Ok(rows)
}
