//! Element-level operators and the direct stiffness summation that welds
//! the finite and semi-infinite regions together.
//!
//! The advective kernel follows the element right-hand-side loop for
//! semi-infinite elements: differentiate the nodal flux values with the
//! per-direction derivative matrices, chain-rule with the metric terms,
//! and weight by `-w_bar |J|`. The finite-element path is the same loop
//! with both directions LGL. Diffusion is assembled in symmetric weak
//! form (integrated by parts, boundary terms dropped).

use crate::basis::NodalBasis1D;
use crate::equations::{BgPoint, EquationSet};
use crate::linalg::CsrMatrix;
use crate::mesh::{Element, Mesh2D};

/// Lumped diagonal global mass (units of area in 2D).
#[derive(Debug, Clone)]
pub struct GlobalDiagMass {
    pub values: Vec<f64>,
}

/// Diagonal of the element mass matrix under inexact (collocated)
/// quadrature: entry (i, j) = w_xi(i) w_eta(j) |J(i, j)|.
pub fn element_mass(el: &Element, bases: &[NodalBasis1D]) -> Vec<f64> {
    let wx = &bases[el.basis_xi].quad.weights;
    let we = &bases[el.basis_eta].quad.weights;
    let mut m = Vec::with_capacity(el.n_xi * el.n_eta);
    for j in 0..el.n_eta {
        for i in 0..el.n_xi {
            m.push(wx[i] * we[j] * el.metrics[j * el.n_xi + i].jac);
        }
    }
    m
}

/// Assemble the global diagonal mass by DSS over all elements.
pub fn global_mass(mesh: &Mesh2D) -> GlobalDiagMass {
    let mut values = vec![0.0; mesh.n_nodes()];
    for el in &mesh.elements {
        let me = element_mass(el, &mesh.bases);
        dss_scatter(&mut values, &me, &el.conn);
    }
    GlobalDiagMass { values }
}

/// Scatter-add element-local values into the global array.
#[inline]
pub fn dss_scatter(global: &mut [f64], local: &[f64], conn: &[usize]) {
    for (v, &g) in local.iter().zip(conn) {
        global[g] += v;
    }
}

/// Gather global values to element-local storage.
#[inline]
pub fn dss_gather(global: &[f64], conn: &[usize], local: &mut [f64]) {
    for (v, &g) in local.iter_mut().zip(conn) {
        *v = global[g];
    }
}

/// Pointwise Rayleigh relaxation `du += -gamma (q - q_ref)` applied to the
/// already mass-divided tendencies. `gamma` is zero outside the sponge;
/// `vars` switches individual variables out of the relaxation (damping the
/// continuity equation breaks conservation, so density is optional).
pub fn apply_rayleigh(
    du: &mut [f64],
    state: &[f64],
    q_ref: &[f64],
    gamma: &[f64],
    vars: &[bool],
    n: usize,
) {
    for (v, &on) in vars.iter().enumerate() {
        if !on {
            continue;
        }
        let off = v * n;
        for i in 0..n {
            let g = gamma[i];
            if g != 0.0 {
                du[off + i] -= g * (state[off + i] - q_ref[off + i]);
            }
        }
    }
}

/// Scratch buffers for one element's RHS evaluation, sized for the largest
/// element in the mesh and reused across evaluations.
#[derive(Debug, Clone, Default)]
pub struct ElemWorkspace {
    pub q: Vec<f64>,
    pub flux_f: Vec<f64>,
    pub flux_g: Vec<f64>,
    pub rhs: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    t3: Vec<f64>,
    t4: Vec<f64>,
}

impl ElemWorkspace {
    pub fn sized_for(el: &Element, nvar: usize) -> Self {
        let nloc = el.n_xi * el.n_eta;
        Self {
            q: vec![0.0; nloc * nvar],
            flux_f: vec![0.0; nloc * nvar],
            flux_g: vec![0.0; nloc * nvar],
            rhs: vec![0.0; nloc * nvar],
            t1: vec![0.0; nloc],
            t2: vec![0.0; nloc],
            t3: vec![0.0; nloc],
            t4: vec![0.0; nloc],
        }
    }

    fn ensure(&mut self, nloc: usize, nvar: usize) {
        if self.q.len() < nloc * nvar {
            self.q.resize(nloc * nvar, 0.0);
            self.flux_f.resize(nloc * nvar, 0.0);
            self.flux_g.resize(nloc * nvar, 0.0);
            self.rhs.resize(nloc * nvar, 0.0);
        }
        if self.t1.len() < nloc {
            self.t1.resize(nloc, 0.0);
            self.t2.resize(nloc, 0.0);
            self.t3.resize(nloc, 0.0);
            self.t4.resize(nloc, 0.0);
        }
    }
}

/// Gather the element-local state (node-major: `q[l * nvar + v]`).
pub fn gather_state(el: &Element, state: &[f64], nvar: usize, n_nodes: usize, ws: &mut ElemWorkspace) {
    let nloc = el.n_xi * el.n_eta;
    ws.ensure(nloc, nvar);
    for (l, &g) in el.conn.iter().enumerate() {
        for v in 0..nvar {
            ws.q[l * nvar + v] = state[v * n_nodes + g];
        }
    }
}

/// Advective (+ source) element RHS: `rhs = -w_bar |J| (dF/dx + dG/dz)
/// + w_bar |J| S`, node-major in `ws.rhs`.
pub fn element_rhs_advective(
    el: &Element,
    bases: &[NodalBasis1D],
    eqs: &EquationSet,
    bg_at: impl Fn(usize) -> BgPoint,
    ws: &mut ElemWorkspace,
) {
    let nvar = eqs.nvar();
    let (n_xi, n_eta) = (el.n_xi, el.n_eta);
    let nloc = n_xi * n_eta;
    ws.ensure(nloc, nvar);
    let wx = &bases[el.basis_xi].quad.weights;
    let we = &bases[el.basis_eta].quad.weights;

    // nodal fluxes
    for l in 0..nloc {
        let q = &ws.q[l * nvar..(l + 1) * nvar];
        let bg = bg_at(el.conn[l]);
        // split borrows: fluxes land in disjoint buffers
        let f = &mut ws.flux_f[l * nvar..(l + 1) * nvar];
        let g = &mut ws.flux_g[l * nvar..(l + 1) * nvar];
        eqs.flux_node(q, bg, f, g);
    }

    ws.rhs[..nloc * nvar].iter_mut().for_each(|v| *v = 0.0);
    let has_source = eqs.has_source();
    for v in 0..nvar {
        // the conservative closure of the flux table backs the conserved
        // density variable; the other variables use the plain SLF table
        let (dxi, deta) = if v == 0 {
            (&bases[el.basis_xi].deriv_flux, &bases[el.basis_eta].deriv_flux)
        } else {
            (&bases[el.basis_xi].deriv, &bases[el.basis_eta].deriv)
        };
        // direction-wise derivatives of F and G
        for j in 0..n_eta {
            for i in 0..n_xi {
                let l = j * n_xi + i;
                let (mut dfdxi, mut dgdxi) = (0.0, 0.0);
                let drow = dxi.row(i);
                for k in 0..n_xi {
                    let lk = (j * n_xi + k) * nvar + v;
                    dfdxi += drow[k] * ws.flux_f[lk];
                    dgdxi += drow[k] * ws.flux_g[lk];
                }
                let (mut dfdeta, mut dgdeta) = (0.0, 0.0);
                let erow = deta.row(j);
                for k in 0..n_eta {
                    let lk = (k * n_xi + i) * nvar + v;
                    dfdeta += erow[k] * ws.flux_f[lk];
                    dgdeta += erow[k] * ws.flux_g[lk];
                }
                let m = &el.metrics[l];
                let dfdx = dfdxi * m.dxi_dx + dfdeta * m.deta_dx;
                let dgdz = dgdxi * m.dxi_dz + dgdeta * m.deta_dz;
                let wbar = wx[i] * we[j] * m.jac;
                ws.rhs[l * nvar + v] -= wbar * (dfdx + dgdz);
            }
        }
    }
    if has_source {
        let mut s = [0.0; 8];
        for j in 0..n_eta {
            for i in 0..n_xi {
                let l = j * n_xi + i;
                let m = &el.metrics[l];
                let wbar = wx[i] * we[j] * m.jac;
                let q = &ws.q[l * nvar..(l + 1) * nvar];
                eqs.source_node(q, bg_at(el.conn[l]), &mut s[..nvar]);
                for v in 0..nvar {
                    ws.rhs[l * nvar + v] += wbar * s[v];
                }
            }
        }
    }
}

/// Weak-form diffusive contribution added into `ws.rhs`:
/// `rhs_i -= nu * sum_q w_bar |J| grad(psi_i) . grad(u)` per variable,
/// with free-slip / zero-flux boundary terms dropped.
pub fn element_rhs_diffusive(
    el: &Element,
    bases: &[NodalBasis1D],
    coeffs: &[f64],
    ws: &mut ElemWorkspace,
) {
    let nvar = coeffs.len();
    let (n_xi, n_eta) = (el.n_xi, el.n_eta);
    let nloc = n_xi * n_eta;
    ws.ensure(nloc, nvar);
    let dxi = &bases[el.basis_xi].deriv;
    let deta = &bases[el.basis_eta].deriv;
    let wx = &bases[el.basis_xi].quad.weights;
    let we = &bases[el.basis_eta].quad.weights;

    for (v, &nu) in coeffs.iter().enumerate() {
        if nu == 0.0 {
            continue;
        }
        // gradient of u at the quadrature nodes
        for j in 0..n_eta {
            for i in 0..n_xi {
                let l = j * n_xi + i;
                let mut dudxi = 0.0;
                let drow = dxi.row(i);
                for k in 0..n_xi {
                    dudxi += drow[k] * ws.q[(j * n_xi + k) * nvar + v];
                }
                let mut dudeta = 0.0;
                let erow = deta.row(j);
                for k in 0..n_eta {
                    dudeta += erow[k] * ws.q[(k * n_xi + i) * nvar + v];
                }
                let m = &el.metrics[l];
                let dudx = dudxi * m.dxi_dx + dudeta * m.deta_dx;
                let dudz = dudxi * m.dxi_dz + dudeta * m.deta_dz;
                let wbar = wx[i] * we[j] * m.jac;
                // contraction weights for the two test-gradient directions
                ws.t1[l] = wbar * (dudx * m.dxi_dx + dudz * m.dxi_dz);
                ws.t2[l] = wbar * (dudx * m.deta_dx + dudz * m.deta_dz);
            }
        }
        // rhs(a,b) -= nu [ sum_k Dxi[k,a] t1(b,k) + sum_k Deta[k,b] t2(k,a) ]
        for b in 0..n_eta {
            for a in 0..n_xi {
                let mut acc = 0.0;
                for k in 0..n_xi {
                    acc += dxi[(k, a)] * ws.t1[b * n_xi + k];
                }
                for k in 0..n_eta {
                    acc += deta[(k, b)] * ws.t2[k * n_xi + a];
                }
                ws.rhs[(b * n_xi + a) * nvar + v] -= nu * acc;
            }
        }
    }
}

/// Global weak Laplacian (stiffness matrix) assembled by DSS of element
/// blocks, sparse storage. Entry (I, J) = sum_q w_bar |J| grad(psi_I) .
/// grad(psi_J).
pub fn global_laplacian(mesh: &Mesh2D) -> CsrMatrix {
    let n = mesh.n_nodes();
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    // gradient sparsity of psi_(a,b) at node (k,l): nonzero iff b == l or a == k
    for el in &mesh.elements {
        let (n_xi, n_eta) = (el.n_xi, el.n_eta);
        let dxi = &mesh.bases[el.basis_xi].deriv;
        let deta = &mesh.bases[el.basis_eta].deriv;
        let wx = &mesh.bases[el.basis_xi].quad.weights;
        let we = &mesh.bases[el.basis_eta].quad.weights;
        let nloc = n_xi * n_eta;
        let mut block = vec![0.0; nloc * nloc];
        let mut idx: Vec<usize> = Vec::with_capacity(n_xi + n_eta);
        let mut gx: Vec<f64> = Vec::with_capacity(n_xi + n_eta);
        let mut gz: Vec<f64> = Vec::with_capacity(n_xi + n_eta);
        for l in 0..n_eta {
            for k in 0..n_xi {
                let q = l * n_xi + k;
                let m = &el.metrics[q];
                let wbar = wx[k] * we[l] * m.jac;
                idx.clear();
                gx.clear();
                gz.clear();
                // row (a, l) entries: xi-derivative of the a-th cardinal
                for a in 0..n_xi {
                    let d = dxi[(k, a)];
                    idx.push(l * n_xi + a);
                    gx.push(d * m.dxi_dx);
                    gz.push(d * m.dxi_dz);
                }
                // column (k, b) entries: eta-derivative
                for b in 0..n_eta {
                    let d = deta[(l, b)];
                    let loc = b * n_xi + k;
                    if let Some(pos) = idx.iter().position(|&p| p == loc) {
                        gx[pos] += d * m.deta_dx;
                        gz[pos] += d * m.deta_dz;
                    } else {
                        idx.push(loc);
                        gx.push(d * m.deta_dx);
                        gz.push(d * m.deta_dz);
                    }
                }
                for (pi, &li) in idx.iter().enumerate() {
                    for (pj, &lj) in idx.iter().enumerate() {
                        block[li * nloc + lj] += wbar * (gx[pi] * gx[pj] + gz[pi] * gz[pj]);
                    }
                }
            }
        }
        for li in 0..nloc {
            for lj in 0..nloc {
                let v = block[li * nloc + lj];
                if v != 0.0 {
                    trip.push((el.conn[li], el.conn[lj], v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, &mut trip)
}
