//! Structured parallelogram meshes of the unit square and degree-of-freedom
//! numbering for the enriched velocity and bilinear pressure spaces.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh needs at least one subdivision per side")]
    NoSubdivisions,
    #[error("shear {0} outside [0, 0.5)")]
    ShearOutOfRange(f64),
    #[error("element {0} out of range")]
    ElementOutOfRange(usize),
    #[error("element {index} is degenerate (det = {det:e})")]
    Degenerate { index: usize, det: f64 },
    #[error("refinement level {0} outside 1..=10")]
    LevelOutOfRange(usize),
}

/// Subdivisions per side at refinement level `level`: the four-square
/// initial mesh refined `level` times, so level 1 has 16 elements.
pub fn subdivisions_for_level(level: usize) -> Result<usize, MeshError> {
    if !(1..=10).contains(&level) {
        return Err(MeshError::LevelOutOfRange(level));
    }
    Ok(1 << (level + 1))
}

/// `n x n` grid of parallelograms. Vertex `(i, j)` sits at
/// `(i/n + shear * j/n, j/n)`; vertices are numbered lexicographically
/// (`i + (n+1) j`) and elements likewise (`i + n j`).
#[derive(Debug, Clone)]
pub struct Mesh {
    n: usize,
    shear: f64,
    vertices: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
    boundary: Vec<bool>,
}

impl Mesh {
    pub fn structured(n: usize, shear: f64) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::NoSubdivisions);
        }
        if !(0.0..0.5).contains(&shear) {
            return Err(MeshError::ShearOutOfRange(shear));
        }
        let h = 1.0 / n as f64;
        let np = n + 1;
        let mut vertices = Vec::with_capacity(np * np);
        let mut boundary = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                let (x, y) = (i as f64 * h, j as f64 * h);
                vertices.push([x + shear * y, y]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let mut elements = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let v0 = i + np * j;
                elements.push([v0, v0 + 1, v0 + 1 + np, v0 + np]);
            }
        }
        Ok(Self {
            n,
            shear,
            vertices,
            elements,
            boundary,
        })
    }

    pub fn for_level(level: usize, shear: f64) -> Result<Self, MeshError> {
        Self::structured(subdivisions_for_level(level)?, shear)
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn shear(&self) -> f64 {
        self.shear
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        self.boundary[vertex]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// Affine map from the reference square onto element `k`.
    pub fn element_geometry(&self, k: usize) -> Result<ElementGeometry, MeshError> {
        let el = self.elements.get(k).ok_or(MeshError::ElementOutOfRange(k))?;
        let v0 = self.vertices[el[0]];
        let v1 = self.vertices[el[1]];
        let v3 = self.vertices[el[3]];
        let jac = [[v1[0] - v0[0], v3[0] - v0[0]], [v1[1] - v0[1], v3[1] - v0[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det <= 1e-14 {
            return Err(MeshError::Degenerate { index: k, det });
        }
        // (A^{-1})^T = 1/det [[d, -c], [-b, a]] for A = [[a, b], [c, d]]
        let inverse_transpose = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Ok(ElementGeometry {
            jacobian: jac,
            offset: v0,
            det,
            inverse_transpose,
        })
    }

    /// All element geometries, in element order.
    pub fn geometries(&self) -> Result<Vec<ElementGeometry>, MeshError> {
        (0..self.num_elements()).map(|k| self.element_geometry(k)).collect()
    }
}

/// `x = A xi + x0` with its determinant and `A^{-T}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub jacobian: [[f64; 2]; 2],
    pub offset: [f64; 2],
    pub det: f64,
    pub inverse_transpose: [[f64; 2]; 2],
}

impl ElementGeometry {
    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        let a = &self.jacobian;
        [
            a[0][0] * xi[0] + a[0][1] * xi[1] + self.offset[0],
            a[1][0] * xi[0] + a[1][1] * xi[1] + self.offset[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let t = &self.inverse_transpose;
        [t[0][0] * g[0] + t[0][1] * g[1], t[1][0] * g[0] + t[1][1] * g[1]]
    }
}

/// Numbering of the scalar velocity space (vertex hats, then one bubble per
/// element) and the pressure space (vertex hats), plus the compression of
/// velocity dofs to the interior (non-Dirichlet) ones.
///
/// Vector velocity unknowns are laid out component-major: index
/// `c * scalar_count + s` before elimination and `c * interior_count + r`
/// after.
#[derive(Debug, Clone)]
pub struct DofMap {
    vertex_count: usize,
    element_count: usize,
    interior_index: Vec<Option<usize>>,
    interior_to_scalar: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let vertex_count = mesh.num_vertices();
        let element_count = mesh.num_elements();
        let mut interior_index = Vec::with_capacity(vertex_count + element_count);
        let mut interior_to_scalar = Vec::new();
        for v in 0..vertex_count {
            if mesh.is_boundary(v) {
                interior_index.push(None);
            } else {
                interior_index.push(Some(interior_to_scalar.len()));
                interior_to_scalar.push(v);
            }
        }
        for k in 0..element_count {
            interior_index.push(Some(interior_to_scalar.len()));
            interior_to_scalar.push(vertex_count + k);
        }
        Self {
            vertex_count,
            element_count,
            interior_index,
            interior_to_scalar,
        }
    }

    pub fn velocity_scalar_count(&self) -> usize {
        self.vertex_count + self.element_count
    }

    pub fn velocity_vector_count(&self) -> usize {
        2 * self.velocity_scalar_count()
    }

    pub fn pressure_count(&self) -> usize {
        self.vertex_count
    }

    pub fn interior_scalar_count(&self) -> usize {
        self.interior_to_scalar.len()
    }

    pub fn bubble_dof(&self, element: usize) -> usize {
        self.vertex_count + element
    }

    pub fn is_bubble(&self, scalar_dof: usize) -> bool {
        scalar_dof >= self.vertex_count
    }

    /// Reduced index of a scalar velocity dof, `None` on the Dirichlet
    /// boundary.
    pub fn interior_index(&self, scalar_dof: usize) -> Option<usize> {
        self.interior_index[scalar_dof]
    }

    pub fn interior_to_scalar(&self) -> &[usize] {
        &self.interior_to_scalar
    }

    /// Scalar velocity dofs of element `k`: its four vertices
    /// (counterclockwise) then its bubble.
    pub fn element_velocity_dofs(&self, mesh: &Mesh, k: usize) -> [usize; 5] {
        let el = mesh.elements()[k];
        [el[0], el[1], el[2], el[3], self.bubble_dof(k)]
    }

    pub fn element_pressure_dofs(&self, mesh: &Mesh, k: usize) -> [usize; 4] {
        mesh.elements()[k]
    }
}
