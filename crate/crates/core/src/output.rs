//! Snapshot, mesh, diagnostics, and manifest writers. All numeric output
//! uses 17 significant digits; VTK is legacy ASCII for diffability.

use crate::config::SimulationConfig;
use crate::equations::StateField;
use crate::mesh::Mesh2D;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

pub fn ensure_dir(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)
}

/// 1D snapshot: the bottom row of the strip, sorted by x, one column per
/// variable.
pub fn write_csv_1d(
    path: &Path,
    mesh: &Mesh2D,
    state: &StateField,
    names: &[&str],
) -> std::io::Result<()> {
    let z0 = mesh
        .coords
        .iter()
        .map(|c| c[1])
        .fold(f64::INFINITY, f64::min);
    let mut rows: Vec<usize> = (0..mesh.n_nodes())
        .filter(|&i| (mesh.coords[i][1] - z0).abs() < 1e-12)
        .collect();
    rows.sort_by(|&a, &b| mesh.coords[a][0].partial_cmp(&mesh.coords[b][0]).unwrap());
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "x")?;
    for n in names {
        write!(f, ",{n}")?;
    }
    writeln!(f)?;
    for &i in &rows {
        write!(f, "{:.16e}", mesh.coords[i][0])?;
        for v in 0..state.nvar {
            write!(f, ",{:.16e}", state.var(v)[i])?;
        }
        writeln!(f)?;
    }
    Ok(())
}

/// Full node table: coordinates plus every variable.
pub fn write_csv_nodes(
    path: &Path,
    mesh: &Mesh2D,
    state: &StateField,
    names: &[&str],
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "x,z")?;
    for n in names {
        write!(f, ",{n}")?;
    }
    writeln!(f)?;
    for i in 0..mesh.n_nodes() {
        write!(f, "{:.16e},{:.16e}", mesh.coords[i][0], mesh.coords[i][1])?;
        for v in 0..state.nvar {
            write!(f, ",{:.16e}", state.var(v)[i])?;
        }
        writeln!(f)?;
    }
    Ok(())
}

/// Plain mesh dump (node table only).
pub fn write_mesh_csv(path: &Path, mesh: &Mesh2D) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "node,x,z,tag")?;
    for i in 0..mesh.n_nodes() {
        writeln!(
            f,
            "{},{:.16e},{:.16e},{:?}",
            i, mesh.coords[i][0], mesh.coords[i][1], mesh.tags[i]
        )?;
    }
    Ok(())
}

/// Legacy-VTK ASCII unstructured grid: every element is subdivided into
/// its (n_xi - 1)(n_eta - 1) nodal quads; fields are point data.
pub fn write_vtk(
    path: &Path,
    mesh: &Mesh2D,
    fields: &[(&str, &[f64])],
    title: &str,
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "{title}")?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(f, "POINTS {} double", mesh.n_nodes())?;
    for c in &mesh.coords {
        writeln!(f, "{:.16e} {:.16e} 0.0", c[0], c[1])?;
    }
    let n_cells: usize = mesh.elements.iter().map(|e| (e.n_xi - 1) * (e.n_eta - 1)).sum();
    writeln!(f, "CELLS {} {}", n_cells, 5 * n_cells)?;
    for el in &mesh.elements {
        for j in 0..el.n_eta - 1 {
            for i in 0..el.n_xi - 1 {
                writeln!(
                    f,
                    "4 {} {} {} {}",
                    el.node(i, j),
                    el.node(i + 1, j),
                    el.node(i + 1, j + 1),
                    el.node(i, j + 1)
                )?;
            }
        }
    }
    writeln!(f, "CELL_TYPES {n_cells}")?;
    for _ in 0..n_cells {
        writeln!(f, "9")?;
    }
    writeln!(f, "POINT_DATA {}", mesh.n_nodes())?;
    for (name, values) in fields {
        writeln!(f, "SCALARS {name} double 1")?;
        writeln!(f, "LOOKUP_TABLE default")?;
        for v in *values {
            writeln!(f, "{v:.16e}")?;
        }
    }
    Ok(())
}

/// Run manifest: the fully resolved configuration, its content hash, and
/// wall-clock statistics.
pub fn write_manifest(
    path: &Path,
    cfg: &SimulationConfig,
    workers: usize,
    stats: Option<&crate::simulation::RunStats>,
    extra: &[(&str, String)],
) -> std::io::Result<()> {
    let cfg_text = toml::to_string_pretty(cfg).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(cfg_text.as_bytes());
    let hash = hasher.finalize();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# run manifest")?;
    writeln!(f, "config_sha256 = \"{}\"", hex_string(&hash))?;
    writeln!(f, "workers = {workers}")?;
    if let Some(s) = stats {
        writeln!(f, "steps = {}", s.steps)?;
        writeln!(f, "wall_seconds = {:.6}", s.wall_seconds)?;
        writeln!(f, "wall_per_step = {:.6e}", s.wall_per_step)?;
        writeln!(f, "pct_finite = {:.2}", s.pct_finite)?;
        writeln!(f, "pct_laguerre = {:.2}", s.pct_laguerre)?;
    }
    for (k, v) in extra {
        writeln!(f, "{k} = {v}")?;
    }
    writeln!(f)?;
    writeln!(f, "# resolved configuration")?;
    for line in cfg_text.lines() {
        writeln!(f, "{line}")?;
    }
    Ok(())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
