//! Four-node plane-stress elements with two displacement dofs per node.

use crate::banded::Assembler;
use crate::mesh::q4_gradients;
use crate::{AssembledSystem, FemError, Result, StructuredMesh};

const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Concentrated nodal force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLoad {
    pub node: usize,
    pub fx: f64,
    pub fy: f64,
}

fn constitutive(e: f64, nu: f64) -> [[f64; 3]; 3] {
    let c = e / (1.0 - nu * nu);
    [
        [c, c * nu, 0.0],
        [c * nu, c, 0.0],
        [0.0, 0.0, c * 0.5 * (1.0 - nu)],
    ]
}

fn strain_matrix(grad: &[[f64; 4]; 2]) -> [[f64; 8]; 3] {
    let mut b = [[0.0; 8]; 3];
    for a in 0..4 {
        b[0][2 * a] = grad[0][a];
        b[1][2 * a + 1] = grad[1][a];
        b[2][2 * a] = grad[1][a];
        b[2][2 * a + 1] = grad[0][a];
    }
    b
}

/// 8x8 element stiffness, row-major, dofs ordered `(u_x, u_y)` per node.
pub fn element_stiffness(coords: &[[f64; 2]; 4], e: f64, nu: f64, thickness: f64) -> [f64; 64] {
    let d = constitutive(e, nu);
    let mut ke = [0.0; 64];
    for &xi in &GAUSS_2 {
        for &eta in &GAUSS_2 {
            let (_, grad, det) = q4_gradients(coords, xi, eta);
            let b = strain_matrix(&grad);
            let mut db = [[0.0; 8]; 3];
            for r in 0..3 {
                for c in 0..8 {
                    db[r][c] = (0..3).map(|k| d[r][k] * b[k][c]).sum();
                }
            }
            let w = thickness * det;
            for i in 0..8 {
                for j in 0..8 {
                    ke[i * 8 + j] += w * (0..3).map(|k| b[k][i] * db[k][j]).sum::<f64>();
                }
            }
        }
    }
    ke
}

/// Engineering strain `(e_xx, e_yy, g_xy)` at a reference point of an element.
pub fn element_strain(coords: &[[f64; 2]; 4], u: &[f64; 8], xi: f64, eta: f64) -> [f64; 3] {
    let (_, grad, _) = q4_gradients(coords, xi, eta);
    let b = strain_matrix(&grad);
    let mut eps = [0.0; 3];
    for (r, row) in b.iter().enumerate() {
        eps[r] = row.iter().zip(u).map(|(bi, ui)| bi * ui).sum();
    }
    eps
}

fn element_dofs(nodes: &[usize; 4]) -> [usize; 8] {
    let mut dofs = [0; 8];
    for (a, &n) in nodes.iter().enumerate() {
        dofs[2 * a] = 2 * n;
        dofs[2 * a + 1] = 2 * n + 1;
    }
    dofs
}

fn check_inputs(mesh: &StructuredMesh, e_per_element: &[f64], nu: f64, thickness: f64) -> Result<()> {
    if e_per_element.len() != mesh.n_elements() {
        return Err(FemError::InvalidInput(format!(
            "expected {} element moduli, got {}",
            mesh.n_elements(),
            e_per_element.len()
        )));
    }
    if let Some(bad) = e_per_element.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(FemError::InvalidInput(format!("Young's modulus must be positive, got {bad}")));
    }
    if !(nu > 0.0 && nu < 0.5) {
        return Err(FemError::InvalidInput(format!("Poisson ratio must lie in (0, 0.5), got {nu}")));
    }
    if !(thickness > 0.0) {
        return Err(FemError::InvalidInput(format!("thickness must be positive, got {thickness}")));
    }
    Ok(())
}

/// Plane-stress system with the left edge (`x = 0`) fully fixed.
pub fn assemble_plane_stress(
    mesh: &StructuredMesh,
    e_per_element: &[f64],
    nu: f64,
    thickness: f64,
    loads: &[PointLoad],
) -> Result<AssembledSystem> {
    let mut constraints = vec![None; 2 * mesh.n_nodes()];
    for j in 0..=mesh.ny {
        let n = mesh.node_id(0, j);
        constraints[2 * n] = Some(0.0);
        constraints[2 * n + 1] = Some(0.0);
    }
    assemble_plane_stress_with(mesh, e_per_element, nu, thickness, loads, &constraints)
}

/// Plane-stress system with arbitrary prescribed displacements.
///
/// `constraints` has one entry per global dof (`2 * node + component`).
pub fn assemble_plane_stress_with(
    mesh: &StructuredMesh,
    e_per_element: &[f64],
    nu: f64,
    thickness: f64,
    loads: &[PointLoad],
    constraints: &[Option<f64>],
) -> Result<AssembledSystem> {
    check_inputs(mesh, e_per_element, nu, thickness)?;
    if constraints.len() != 2 * mesh.n_nodes() {
        return Err(FemError::InvalidInput(format!(
            "expected {} constraint entries, got {}",
            2 * mesh.n_nodes(),
            constraints.len()
        )));
    }
    // All elements are congruent rectangles, so one unit-modulus matrix suffices.
    let unit = element_stiffness(&mesh.element_coords(0), 1.0, nu, thickness);
    let mut asm = Assembler::new(constraints, 2 * mesh.node_bandwidth() + 1);
    for (el, nodes) in mesh.elements.iter().enumerate() {
        asm.add_element(&element_dofs(nodes), &unit, e_per_element[el]);
    }
    for load in loads {
        if load.node >= mesh.n_nodes() {
            return Err(FemError::InvalidInput(format!("load on missing node {}", load.node)));
        }
        asm.add_load(2 * load.node, load.fx);
        asm.add_load(2 * load.node + 1, load.fy);
    }
    Ok(asm.finish())
}

/// `u^T K u / 2` summed element by element over the full displacement vector.
pub fn strain_energy(mesh: &StructuredMesh, e_per_element: &[f64], nu: f64, thickness: f64, u: &[f64]) -> f64 {
    let unit = element_stiffness(&mesh.element_coords(0), 1.0, nu, thickness);
    let mut total = 0.0;
    for (el, nodes) in mesh.elements.iter().enumerate() {
        let dofs = element_dofs(nodes);
        let ue: Vec<f64> = dofs.iter().map(|&d| u[d]).collect();
        let mut s = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                s += ue[i] * unit[i * 8 + j] * ue[j];
            }
        }
        total += 0.5 * e_per_element[el] * s;
    }
    total
}
