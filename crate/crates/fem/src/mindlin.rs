//! Four-node Mindlin plate elements with dofs `(w, theta_x, theta_y)` per node.
//!
//! Bending is integrated with 2x2 Gauss points and transverse shear with a
//! single point, which keeps thin plates free of shear locking.

use crate::banded::Assembler;
use crate::mesh::q4_gradients;
use crate::{AssembledSystem, FemError, Result, StructuredMesh};

const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MindlinProperties {
    pub e: f64,
    pub nu: f64,
    /// Shear correction factor.
    pub kappa: f64,
}

impl Default for MindlinProperties {
    fn default() -> Self {
        Self {
            e: 1.0e4,
            nu: 0.3,
            kappa: 5.0 / 6.0,
        }
    }
}

impl MindlinProperties {
    /// Bending rigidity `E h^3 / (12 (1 - nu^2))`.
    pub fn flexural_rigidity(&self, h: f64) -> f64 {
        self.e * h.powi(3) / (12.0 * (1.0 - self.nu * self.nu))
    }
}

/// Element matrices for unit thickness: bending scales with `h^3`, shear with `h`.
struct UnitMatrices {
    bending: [f64; 144],
    shear: [f64; 144],
    load: [f64; 4],
}

fn unit_matrices(coords: &[[f64; 2]; 4], props: &MindlinProperties) -> UnitMatrices {
    let db = props.flexural_rigidity(1.0);
    let nu = props.nu;
    let d_b = [
        [db, db * nu, 0.0],
        [db * nu, db, 0.0],
        [0.0, 0.0, db * 0.5 * (1.0 - nu)],
    ];
    let g = props.e / (2.0 * (1.0 + nu));
    let d_s = props.kappa * g;

    let mut bending = [0.0; 144];
    let mut load = [0.0; 4];
    for &xi in &GAUSS_2 {
        for &eta in &GAUSS_2 {
            let (n, grad, det) = q4_gradients(coords, xi, eta);
            let mut b = [[0.0; 12]; 3];
            for a in 0..4 {
                b[0][3 * a + 1] = grad[0][a];
                b[1][3 * a + 2] = grad[1][a];
                b[2][3 * a + 1] = grad[1][a];
                b[2][3 * a + 2] = grad[0][a];
            }
            for i in 0..12 {
                for j in 0..12 {
                    let mut s = 0.0;
                    for r in 0..3 {
                        for c in 0..3 {
                            s += b[r][i] * d_b[r][c] * b[c][j];
                        }
                    }
                    bending[i * 12 + j] += det * s;
                }
            }
            for a in 0..4 {
                load[a] += det * n[a];
            }
        }
    }

    let mut shear = [0.0; 144];
    let (n, grad, det) = q4_gradients(coords, 0.0, 0.0);
    let mut b = [[0.0; 12]; 2];
    for a in 0..4 {
        b[0][3 * a] = grad[0][a];
        b[0][3 * a + 1] = n[a];
        b[1][3 * a] = grad[1][a];
        b[1][3 * a + 2] = n[a];
    }
    // One-point rule: weight 4 on the reference square.
    for i in 0..12 {
        for j in 0..12 {
            shear[i * 12 + j] = 4.0 * det * d_s * (b[0][i] * b[0][j] + b[1][i] * b[1][j]);
        }
    }
    UnitMatrices { bending, shear, load }
}

/// Quadrant of an element by centroid: `(x >= lx/2) + 2 (y >= ly/2)`.
pub fn quadrant_region(mesh: &StructuredMesh, element: usize) -> usize {
    let c = mesh.centroid(element);
    usize::from(c[0] >= 0.5 * mesh.lx) + 2 * usize::from(c[1] >= 0.5 * mesh.ly)
}

/// Node at the plate centre; requires even element counts.
pub fn center_node(mesh: &StructuredMesh) -> Result<usize> {
    if mesh.nx % 2 != 0 || mesh.ny % 2 != 0 {
        return Err(FemError::InvalidInput(format!(
            "no centre node on a {} x {} mesh",
            mesh.nx, mesh.ny
        )));
    }
    Ok(mesh.node_id(mesh.nx / 2, mesh.ny / 2))
}

/// Clamped plate under piecewise-constant thickness and transverse pressure
/// over the four quadrants.
pub fn assemble_mindlin(
    mesh: &StructuredMesh,
    thickness_per_region: &[f64; 4],
    load_per_region: &[f64; 4],
    props: &MindlinProperties,
) -> Result<AssembledSystem> {
    if let Some(h) = thickness_per_region.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(FemError::InvalidInput(format!("plate thickness must be positive, got {h}")));
    }
    if load_per_region.iter().any(|s| !s.is_finite()) {
        return Err(FemError::InvalidInput("plate load must be finite".into()));
    }
    if !(props.e > 0.0 && props.nu > 0.0 && props.nu < 0.5 && props.kappa > 0.0) {
        return Err(FemError::InvalidInput(format!("invalid plate material {props:?}")));
    }

    let mut constraints = vec![None; 3 * mesh.n_nodes()];
    for i in 0..=mesh.nx {
        for j in 0..=mesh.ny {
            if i == 0 || j == 0 || i == mesh.nx || j == mesh.ny {
                let n = mesh.node_id(i, j);
                for c in 0..3 {
                    constraints[3 * n + c] = Some(0.0);
                }
            }
        }
    }

    let unit = unit_matrices(&mesh.element_coords(0), props);
    let mut asm = Assembler::new(&constraints, 3 * mesh.node_bandwidth() + 2);
    for (el, nodes) in mesh.elements.iter().enumerate() {
        let region = quadrant_region(mesh, el);
        let h = thickness_per_region[region];
        let mut dofs = [0; 12];
        for (a, &n) in nodes.iter().enumerate() {
            for c in 0..3 {
                dofs[3 * a + c] = 3 * n + c;
            }
        }
        asm.add_element(&dofs, &unit.bending, h.powi(3));
        asm.add_element(&dofs, &unit.shear, h);
        let s = load_per_region[region];
        for (a, &n) in nodes.iter().enumerate() {
            asm.add_load(3 * n, s * unit.load[a]);
        }
    }
    Ok(asm.finish())
}
