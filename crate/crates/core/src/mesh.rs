//! The hybrid discrete domain: a structured grid of finite tensor-product
//! elements, optionally wrapped periodically in x, optionally deformed by a
//! terrain-following coordinate, with semi-infinite elements stacked one
//! deep on any open side.
//!
//! Shared global numbering is the coupling mechanism: interface nodes
//! between the finite and semi-infinite regions are literally the same
//! global index, so direct stiffness summation welds the two regions with
//! no special-case code.

use crate::basis::{lgl_quadrature, lgr_quadrature, NodalBasis1D, QuadKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh parameters: {0}")]
    Invalid(String),
    #[error("degenerate coordinate mapping in element {element}: det J = {det:e}")]
    DegenerateJacobian { element: usize, det: f64 },
    #[error("a semi-infinite layer is already attached on side {0:?}")]
    LayerAlreadyAttached(Side),
    #[error("interface node mismatch of {0:e} m while attaching layer")]
    InterfaceMismatch(f64),
    #[error("basis construction failed: {0}")]
    Basis(#[from] crate::basis::BasisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Finite,
    SemiInfiniteUp,
    SemiInfiniteLeft,
    SemiInfiniteRight,
}

impl ElementKind {
    pub fn is_semi_infinite(self) -> bool {
        !matches!(self, ElementKind::Finite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Interior,
    Dirichlet,
    FreeSlip,
    Periodic,
    Interface,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerrainShape {
    Flat,
    Agnesi,
    Schar,
}

/// Terrain profile for the bottom boundary.
#[derive(Debug, Clone, Copy)]
pub struct TerrainProfile {
    pub shape: TerrainShape,
    /// peak height (m)
    pub h: f64,
    /// half-width (m)
    pub a: f64,
    /// center (m)
    pub x_c: f64,
    /// oscillation wavelength of the Schar ridge (m)
    pub lambda_c: f64,
}

impl TerrainProfile {
    pub fn flat() -> Self {
        Self { shape: TerrainShape::Flat, h: 0.0, a: 1.0, x_c: 0.0, lambda_c: 1.0 }
    }

    pub fn agnesi(h: f64, a: f64, x_c: f64) -> Self {
        Self { shape: TerrainShape::Agnesi, h, a, x_c, lambda_c: 1.0 }
    }

    pub fn schar(h: f64, a: f64, x_c: f64, lambda_c: f64) -> Self {
        Self { shape: TerrainShape::Schar, h, a, x_c, lambda_c }
    }

    /// Surface height h_s(x).
    pub fn height(&self, x: f64) -> f64 {
        let r = x - self.x_c;
        match self.shape {
            TerrainShape::Flat => 0.0,
            TerrainShape::Agnesi => self.h * self.a * self.a / (r * r + self.a * self.a),
            TerrainShape::Schar => {
                let c = (std::f64::consts::PI * r / self.lambda_c).cos();
                self.h * (-(r / self.a) * (r / self.a)).exp() * c * c
            }
        }
    }
}

/// Per-node geometric terms: the inverse Jacobian entries, the signed
/// determinant of the forward map, and its absolute value.
#[derive(Debug, Clone, Copy, Default)]
pub struct Metric {
    pub dxi_dx: f64,
    pub dxi_dz: f64,
    pub deta_dx: f64,
    pub deta_dz: f64,
    pub det: f64,
    pub jac: f64,
}

#[derive(Debug, Clone)]
pub struct Element {
    pub kind: ElementKind,
    /// basis index (into `Mesh2D::bases`) for the local xi direction
    pub basis_xi: usize,
    /// basis index for the local eta direction
    pub basis_eta: usize,
    pub n_xi: usize,
    pub n_eta: usize,
    /// local node l = j * n_xi + i -> global node
    pub conn: Vec<usize>,
    /// local node coordinates for geometry; equals the global coordinates
    /// except across a periodic seam, where the unwrapped position is kept
    pub geom: Vec<[f64; 2]>,
    pub metrics: Vec<Metric>,
}

impl Element {
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        self.conn[j * self.n_xi + i]
    }
}

#[derive(Debug, Clone)]
pub struct LayerInfo {
    pub side: Side,
    pub order: usize,
    pub lambda: f64,
    /// coordinate of the base line the layer sits on
    pub base: f64,
    /// coordinate of the last LGR node (the paper's X_end / Z_end)
    pub end: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub coords: Vec<[f64; 2]>,
    pub bases: Vec<NodalBasis1D>,
    pub elements: Vec<Element>,
    /// number of finite elements; they come first in `elements`
    pub n_finite: usize,
    pub tags: Vec<BoundaryTag>,
    /// geometric boundary node lists (sorted); periodic meshes have empty
    /// left/right lists, sides carrying a layer keep their list but the
    /// nodes are retagged Interface
    pub side_nodes: std::collections::HashMap<Side, Vec<usize>>,
    pub layers: Vec<LayerInfo>,
    pub periodic_x: bool,
    pub x_range: (f64, f64),
    pub z_range: (f64, f64),
    pub terrain: TerrainProfile,
    nx: usize,
    nz: usize,
    order_x: usize,
    order_z: usize,
}

impl Mesh2D {
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn finite_elements(&self) -> &[Element] {
        &self.elements[..self.n_finite]
    }

    pub fn semi_elements(&self) -> &[Element] {
        &self.elements[self.n_finite..]
    }

    /// Mask of nodes belonging to at least one finite element.
    pub fn finite_node_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_nodes()];
        for e in self.finite_elements() {
            for &g in &e.conn {
                mask[g] = true;
            }
        }
        mask
    }

    /// Nodes shared by the finite region and any semi-infinite layer.
    pub fn interface_nodes(&self) -> Vec<usize> {
        let fin = self.finite_node_mask();
        let mut set = std::collections::BTreeSet::new();
        for e in self.semi_elements() {
            for &g in &e.conn {
                if fin[g] {
                    set.insert(g);
                }
            }
        }
        set.into_iter().collect()
    }

    /// Node multiplicity under DSS (number of element-local references).
    pub fn multiplicity(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_nodes()];
        for e in &self.elements {
            for &g in &e.conn {
                m[g] += 1.0;
            }
        }
        m
    }

    pub fn layer_on(&self, side: Side) -> Option<&LayerInfo> {
        self.layers.iter().find(|l| l.side == side)
    }

    fn basis_id(&mut self, kind: QuadKind, order: usize, lambda: f64) -> Result<usize, MeshError> {
        for (i, b) in self.bases.iter().enumerate() {
            if b.quad.kind == kind && b.quad.order == order && b.quad.scaling == lambda {
                return Ok(i);
            }
        }
        let quad = match kind {
            QuadKind::Lgl => lgl_quadrature(order)?,
            QuadKind::Lgr => lgr_quadrature(order, lambda)?,
        };
        self.bases.push(NodalBasis1D::new(quad));
        Ok(self.bases.len() - 1)
    }
}

/// Build a structured quadrilateral mesh of `nx * nz` elements with shared
/// global numbering. Non-flat terrain maps the vertical coordinate by the
/// Gal-Chen transform `z = zeta + h_s(x) (z_top - zeta) / (z_top - z_bot)`,
/// whose decay completes at the domain top.
pub fn build_finite_mesh(
    x_range: (f64, f64),
    z_range: (f64, f64),
    nx: usize,
    nz: usize,
    order_x: usize,
    order_z: usize,
    terrain: TerrainProfile,
    periodic_x: bool,
) -> Result<Mesh2D, MeshError> {
    if nx == 0 || nz == 0 {
        return Err(MeshError::Invalid("element counts must be positive".into()));
    }
    if order_x == 0 || order_z == 0 {
        return Err(MeshError::Invalid("element orders must be >= 1".into()));
    }
    if x_range.1 <= x_range.0 || z_range.1 <= z_range.0 {
        return Err(MeshError::Invalid("empty coordinate range".into()));
    }

    let qx = lgl_quadrature(order_x)?;
    let qz = lgl_quadrature(order_z)?;

    // global line coordinates
    let n_xlines = if periodic_x { nx * order_x } else { nx * order_x + 1 };
    let n_zlines = nz * order_z + 1;
    let dx_el = (x_range.1 - x_range.0) / nx as f64;
    let dz_el = (z_range.1 - z_range.0) / nz as f64;
    let mut xs = vec![0.0; nx * order_x + 1];
    for ex in 0..nx {
        for i in 0..=order_x {
            xs[ex * order_x + i] = x_range.0 + dx_el * (ex as f64 + 0.5 * (qx.nodes[i] + 1.0));
        }
    }
    *xs.last_mut().unwrap() = x_range.1;
    let mut zetas = vec![0.0; n_zlines];
    for ez in 0..nz {
        for j in 0..=order_z {
            zetas[ez * order_z + j] = z_range.0 + dz_el * (ez as f64 + 0.5 * (qz.nodes[j] + 1.0));
        }
    }
    *zetas.last_mut().unwrap() = z_range.1;

    let zt = z_range.1;
    let zb = z_range.0;
    let mut coords = Vec::with_capacity(n_xlines * n_zlines);
    for ix in 0..n_xlines {
        let x = xs[ix];
        let hs = terrain.height(x);
        for &zeta in zetas.iter() {
            let z = zeta + hs * (zt - zeta) / (zt - zb);
            coords.push([x, z]);
        }
    }

    let mut mesh = Mesh2D {
        coords,
        bases: Vec::new(),
        elements: Vec::new(),
        n_finite: 0,
        tags: Vec::new(),
        side_nodes: std::collections::HashMap::new(),
        layers: Vec::new(),
        periodic_x,
        x_range,
        z_range,
        terrain,
        nx,
        nz,
        order_x,
        order_z,
    };
    let bx = mesh.basis_id(QuadKind::Lgl, order_x, 1.0)?;
    let bz = mesh.basis_id(QuadKind::Lgl, order_z, 1.0)?;

    let n_xi = order_x + 1;
    let n_eta = order_z + 1;
    for ex in 0..nx {
        for ez in 0..nz {
            let mut conn = Vec::with_capacity(n_xi * n_eta);
            let mut geom = Vec::with_capacity(n_xi * n_eta);
            for j in 0..=order_z {
                for i in 0..=order_x {
                    let ix = (ex * order_x + i) % n_xlines;
                    let iz = ez * order_z + j;
                    conn.push(ix * n_zlines + iz);
                    let x = xs[ex * order_x + i]; // unwrapped across the seam
                    let zeta = zetas[iz];
                    let z = zeta + terrain.height(x) * (zt - zeta) / (zt - zb);
                    geom.push([x, z]);
                }
            }
            mesh.elements.push(Element {
                kind: ElementKind::Finite,
                basis_xi: bx,
                basis_eta: bz,
                n_xi,
                n_eta,
                conn,
                geom,
                metrics: Vec::new(),
            });
        }
    }
    mesh.n_finite = mesh.elements.len();

    mesh.tags = vec![BoundaryTag::Interior; mesh.coords.len()];
    let bottom: Vec<usize> = (0..n_xlines).map(|ix| ix * n_zlines).collect();
    let top: Vec<usize> = (0..n_xlines).map(|ix| ix * n_zlines + n_zlines - 1).collect();
    for &g in bottom.iter().chain(top.iter()) {
        mesh.tags[g] = BoundaryTag::Open;
    }
    mesh.side_nodes.insert(Side::Bottom, bottom);
    mesh.side_nodes.insert(Side::Top, top);
    if periodic_x {
        for iz in 0..n_zlines {
            mesh.tags[iz] = BoundaryTag::Periodic;
        }
        mesh.side_nodes.insert(Side::Left, Vec::new());
        mesh.side_nodes.insert(Side::Right, Vec::new());
    } else {
        let left: Vec<usize> = (0..n_zlines).collect();
        let right: Vec<usize> = (0..n_zlines).map(|iz| (n_xlines - 1) * n_zlines + iz).collect();
        for &g in left.iter().chain(right.iter()) {
            mesh.tags[g] = BoundaryTag::Open;
        }
        mesh.side_nodes.insert(Side::Left, left);
        mesh.side_nodes.insert(Side::Right, right);
    }

    compute_metrics(&mut mesh)?;
    Ok(mesh)
}

/// Stack one semi-infinite element on every boundary-edge element of the
/// chosen side (never more than one deep). The finite direction inherits
/// the abutting element's LGL order; the infinite direction carries LGR
/// nodes at `base + lambda * xi` (mirrored for the left side). Interface
/// nodes reuse the existing global indices.
pub fn attach_semi_infinite_layer(
    mesh: &mut Mesh2D,
    side: Side,
    order: usize,
    lambda: f64,
) -> Result<(), MeshError> {
    if mesh.layer_on(side).is_some() {
        return Err(MeshError::LayerAlreadyAttached(side));
    }
    if side == Side::Bottom {
        return Err(MeshError::Invalid("semi-infinite layers attach to top/left/right only".into()));
    }
    if mesh.periodic_x && (side == Side::Left || side == Side::Right) {
        return Err(MeshError::Invalid("cannot attach a lateral layer to a periodic mesh".into()));
    }
    let (kind, base) = match side {
        Side::Top => (ElementKind::SemiInfiniteUp, mesh.z_range.1),
        Side::Right => (ElementKind::SemiInfiniteRight, mesh.x_range.1),
        Side::Left => (ElementKind::SemiInfiniteLeft, mesh.x_range.0),
        Side::Bottom => unreachable!(),
    };
    // Terrain must have decayed at the attachment line: layer coordinates
    // are built on the flat base.
    if side == Side::Top {
        let top = &mesh.side_nodes[&Side::Top];
        for &g in top {
            let dz = (mesh.coords[g][1] - base).abs();
            if dz > 1e-9 {
                return Err(MeshError::InterfaceMismatch(dz));
            }
        }
    }

    let b_lgr = mesh.basis_id(QuadKind::Lgr, order, lambda)?;
    let lgr_nodes: Vec<f64> = mesh.bases[b_lgr].quad.nodes.clone();
    let sign = if side == Side::Left { -1.0 } else { 1.0 };
    let end = base + sign * lambda * lgr_nodes[order];

    let base_nodes: Vec<usize> = mesh.side_nodes[&side].clone();
    if base_nodes.is_empty() {
        return Err(MeshError::Invalid(format!("side {side:?} has no boundary nodes")));
    }
    let n_base = base_nodes.len();
    let n0 = mesh.coords.len();
    // position of each base node within the side list
    let mut base_pos = std::collections::HashMap::new();
    for (p, &g) in base_nodes.iter().enumerate() {
        base_pos.insert(g, p);
    }
    // new nodes, layer-major: node (p, j) at n0 + (j-1) * n_base + p
    for j in 1..=order {
        for &g in &base_nodes {
            let [x, z] = mesh.coords[g];
            let c = match side {
                Side::Top => [x, base + lambda * lgr_nodes[j]],
                Side::Right | Side::Left => [base + sign * lambda * lgr_nodes[j], z],
                Side::Bottom => unreachable!(),
            };
            mesh.coords.push(c);
            mesh.tags.push(BoundaryTag::Open);
        }
    }
    // layer columns sitting on a perpendicular domain boundary extend that
    // boundary's node list (a top layer's first and last columns are part
    // of the lateral walls, and so on)
    let perp: &[Side] = match side {
        Side::Top => &[Side::Left, Side::Right],
        Side::Left | Side::Right => &[Side::Bottom, Side::Top],
        Side::Bottom => unreachable!(),
    };
    for &ps in perp {
        let existing = mesh.side_nodes.get(&ps).cloned().unwrap_or_default();
        let mut extended = existing.clone();
        for (p, &g) in base_nodes.iter().enumerate() {
            if existing.contains(&g) {
                for j in 1..=order {
                    extended.push(n0 + (j - 1) * n_base + p);
                }
            }
        }
        mesh.side_nodes.insert(ps, extended);
    }
    for &g in &base_nodes {
        mesh.tags[g] = BoundaryTag::Interface;
    }

    let new_idx = |p: usize, j: usize| n0 + (j - 1) * n_base + p;
    match side {
        Side::Top => {
            let n_xi = mesh.order_x + 1;
            let n_eta = order + 1;
            let n_zlines = mesh.nz * mesh.order_z + 1;
            let n_xlines =
                if mesh.periodic_x { mesh.nx * mesh.order_x } else { mesh.nx * mesh.order_x + 1 };
            let bx = mesh.elements[0].basis_xi;
            for ex in 0..mesh.nx {
                // the abutting finite element supplies unwrapped x positions
                let abut = mesh.elements[ex * mesh.nz + (mesh.nz - 1)].clone();
                let mut conn = Vec::with_capacity(n_xi * n_eta);
                let mut geom = Vec::with_capacity(n_xi * n_eta);
                for j in 0..=order {
                    for i in 0..=mesh.order_x {
                        let ix = (ex * mesh.order_x + i) % n_xlines;
                        if j == 0 {
                            conn.push(ix * n_zlines + (n_zlines - 1));
                        } else {
                            conn.push(new_idx(ix, j));
                        }
                        let x = abut.geom[(abut.n_eta - 1) * abut.n_xi + i][0];
                        geom.push([x, base + lambda * lgr_nodes[j]]);
                    }
                }
                mesh.elements.push(Element {
                    kind,
                    basis_xi: bx,
                    basis_eta: b_lgr,
                    n_xi,
                    n_eta,
                    conn,
                    geom,
                    metrics: Vec::new(),
                });
            }
        }
        Side::Left | Side::Right => {
            let n_xi = order + 1;
            let n_eta = mesh.order_z + 1;
            let bz = mesh.elements[0].basis_eta;
            for ez in 0..mesh.nz {
                let mut conn = Vec::with_capacity(n_xi * n_eta);
                let mut geom = Vec::with_capacity(n_xi * n_eta);
                for j in 0..=mesh.order_z {
                    let iz = ez * mesh.order_z + j;
                    let z = mesh.coords[base_nodes[iz]][1];
                    for i in 0..=order {
                        if i == 0 {
                            conn.push(base_nodes[iz]);
                        } else {
                            conn.push(new_idx(base_pos[&base_nodes[iz]], i));
                        }
                        geom.push([base + sign * lambda * lgr_nodes[i], z]);
                    }
                }
                mesh.elements.push(Element {
                    kind,
                    basis_xi: b_lgr,
                    basis_eta: bz,
                    n_xi,
                    n_eta,
                    conn,
                    geom,
                    metrics: Vec::new(),
                });
            }
        }
        Side::Bottom => unreachable!(),
    }

    mesh.layers.push(LayerInfo { side, order, lambda, base, end });
    compute_metrics(mesh)?;
    Ok(())
}

/// Per-node metric terms. Finite elements differentiate the coordinate
/// fields with their own LGL derivative matrices; semi-infinite elements
/// do the same in their finite direction while the infinite direction is
/// affine by construction (`d coord / d eta = +/- lambda`).
pub fn compute_metrics(mesh: &mut Mesh2D) -> Result<(), MeshError> {
    let bases = mesh.bases.clone();
    for (ei, el) in mesh.elements.iter_mut().enumerate() {
        let n_xi = el.n_xi;
        let n_eta = el.n_eta;
        let dxi = &bases[el.basis_xi].deriv;
        let deta = &bases[el.basis_eta].deriv;
        let mut metrics = vec![Metric::default(); n_xi * n_eta];
        for j in 0..n_eta {
            for i in 0..n_xi {
                let l = j * n_xi + i;
                let (mut x_xi, mut z_xi, mut x_eta, mut z_eta) = (0.0, 0.0, 0.0, 0.0);
                match el.kind {
                    ElementKind::Finite => {
                        for k in 0..n_xi {
                            let [x, z] = el.geom[j * n_xi + k];
                            x_xi += dxi[(i, k)] * x;
                            z_xi += dxi[(i, k)] * z;
                        }
                        for k in 0..n_eta {
                            let [x, z] = el.geom[k * n_xi + i];
                            x_eta += deta[(j, k)] * x;
                            z_eta += deta[(j, k)] * z;
                        }
                    }
                    ElementKind::SemiInfiniteUp => {
                        for k in 0..n_xi {
                            let [x, z] = el.geom[j * n_xi + k];
                            x_xi += dxi[(i, k)] * x;
                            z_xi += dxi[(i, k)] * z;
                        }
                        x_eta = 0.0;
                        z_eta = bases[el.basis_eta].quad.scaling;
                    }
                    ElementKind::SemiInfiniteRight | ElementKind::SemiInfiniteLeft => {
                        let lam = bases[el.basis_xi].quad.scaling;
                        x_xi = if el.kind == ElementKind::SemiInfiniteLeft { -lam } else { lam };
                        z_xi = 0.0;
                        for k in 0..n_eta {
                            let [x, z] = el.geom[k * n_xi + i];
                            x_eta += deta[(j, k)] * x;
                            z_eta += deta[(j, k)] * z;
                        }
                    }
                }
                let det = x_xi * z_eta - x_eta * z_xi;
                if det.abs() < 1e-300 || (el.kind == ElementKind::Finite && det <= 0.0) {
                    return Err(MeshError::DegenerateJacobian { element: ei, det });
                }
                metrics[l] = Metric {
                    dxi_dx: z_eta / det,
                    dxi_dz: -x_eta / det,
                    deta_dx: -z_xi / det,
                    deta_dz: x_xi / det,
                    det,
                    jac: det.abs(),
                };
            }
        }
        el.metrics = metrics;
    }
    Ok(())
}
