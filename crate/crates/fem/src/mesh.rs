//! Structured rectangular meshes of four-node quadrilaterals.

use crate::{FemError, Result};

/// Global node numbering of a structured mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeOrdering {
    /// Node `(i, j)` gets `j * (nx + 1) + i`.
    RowMajor,
    /// Node `(i, j)` gets `i * (ny + 1) + j`.
    ColumnMajor,
}

/// `nx * ny` equal rectangles covering `[0, lx] x [0, ly]`.
///
/// Elements are indexed `j * nx + i` independently of the node ordering,
/// so per-element data does not depend on the chosen numbering. Element
/// connectivity is counter-clockwise starting from the lower-left node.
#[derive(Debug, Clone)]
pub struct StructuredMesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub ordering: NodeOrdering,
    pub coords: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
}

impl StructuredMesh {
    /// Mesh numbered along the shorter side, which minimises the bandwidth.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let ordering = if nx > ny {
            NodeOrdering::ColumnMajor
        } else {
            NodeOrdering::RowMajor
        };
        Self::with_ordering(nx, ny, lx, ly, ordering)
    }

    pub fn with_ordering(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        ordering: NodeOrdering,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(FemError::InvalidInput(format!(
                "mesh needs at least one element per direction, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(FemError::InvalidInput(format!(
                "mesh dimensions must be positive, got {lx} x {ly}"
            )));
        }
        let mut mesh = Self {
            nx,
            ny,
            lx,
            ly,
            ordering,
            coords: vec![[0.0; 2]; (nx + 1) * (ny + 1)],
            elements: Vec::with_capacity(nx * ny),
        };
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        for j in 0..=ny {
            for i in 0..=nx {
                let id = mesh.node_id(i, j);
                mesh.coords[id] = [i as f64 * dx, j as f64 * dy];
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                mesh.elements.push([
                    mesh.node_id(i, j),
                    mesh.node_id(i + 1, j),
                    mesh.node_id(i + 1, j + 1),
                    mesh.node_id(i, j + 1),
                ]);
            }
        }
        Ok(mesh)
    }

    pub fn node_id(&self, i: usize, j: usize) -> usize {
        match self.ordering {
            NodeOrdering::RowMajor => j * (self.nx + 1) + i,
            NodeOrdering::ColumnMajor => i * (self.ny + 1) + j,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_size(&self) -> (f64, f64) {
        (self.lx / self.nx as f64, self.ly / self.ny as f64)
    }

    pub fn centroid(&self, element: usize) -> [f64; 2] {
        let (dx, dy) = self.element_size();
        let i = element % self.nx;
        let j = element / self.nx;
        [(i as f64 + 0.5) * dx, (j as f64 + 0.5) * dy]
    }

    pub fn element_coords(&self, element: usize) -> [[f64; 2]; 4] {
        let nodes = self.elements[element];
        [
            self.coords[nodes[0]],
            self.coords[nodes[1]],
            self.coords[nodes[2]],
            self.coords[nodes[3]],
        ]
    }

    /// Largest node-number difference within one element.
    pub fn node_bandwidth(&self) -> usize {
        self.elements
            .iter()
            .map(|e| {
                let lo = e.iter().min().unwrap();
                let hi = e.iter().max().unwrap();
                hi - lo
            })
            .max()
            .unwrap_or(0)
    }

    /// Jacobian determinant of the bilinear map at the element centre.
    pub fn jacobian_det(&self, element: usize) -> f64 {
        let x = self.element_coords(element);
        let dxdxi = 0.25 * (-x[0][0] + x[1][0] + x[2][0] - x[3][0]);
        let dxdeta = 0.25 * (-x[0][0] - x[1][0] + x[2][0] + x[3][0]);
        let dydxi = 0.25 * (-x[0][1] + x[1][1] + x[2][1] - x[3][1]);
        let dydeta = 0.25 * (-x[0][1] - x[1][1] + x[2][1] + x[3][1]);
        dxdxi * dydeta - dxdeta * dydxi
    }
}

/// Bilinear shape functions and their reference derivatives at `(xi, eta)`.
pub(crate) fn q4_shape(xi: f64, eta: f64) -> ([f64; 4], [[f64; 4]; 2]) {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let dxi = [
        -0.25 * (1.0 - eta),
        0.25 * (1.0 - eta),
        0.25 * (1.0 + eta),
        -0.25 * (1.0 + eta),
    ];
    let deta = [
        -0.25 * (1.0 - xi),
        -0.25 * (1.0 + xi),
        0.25 * (1.0 + xi),
        0.25 * (1.0 - xi),
    ];
    (n, [dxi, deta])
}

/// Physical shape-function gradients and `det J` at `(xi, eta)`.
pub(crate) fn q4_gradients(x: &[[f64; 2]; 4], xi: f64, eta: f64) -> ([f64; 4], [[f64; 4]; 2], f64) {
    let (n, d) = q4_shape(xi, eta);
    let mut jac = [[0.0; 2]; 2];
    for a in 0..4 {
        jac[0][0] += d[0][a] * x[a][0];
        jac[0][1] += d[0][a] * x[a][1];
        jac[1][0] += d[1][a] * x[a][0];
        jac[1][1] += d[1][a] * x[a][1];
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let inv = [
        [jac[1][1] / det, -jac[0][1] / det],
        [-jac[1][0] / det, jac[0][0] / det],
    ];
    let mut grad = [[0.0; 4]; 2];
    for a in 0..4 {
        grad[0][a] = inv[0][0] * d[0][a] + inv[0][1] * d[1][a];
        grad[1][a] = inv[1][0] * d[0][a] + inv[1][1] * d[1][a];
    }
    (n, grad, det)
}
