//! Global assembly of the Stokes saddle-point system.
//!
//! Matrices are first assembled over the full velocity space (boundary
//! vertices included, component-major layout, see [`DofMap`]) and then
//! reduced by [`apply_dirichlet`], which moves the boundary data to the
//! right-hand side.

use thiserror::Error;

use crate::mesh::{DofMap, ElementGeometry, Mesh, MeshError};
use crate::poly::BivariatePolynomial;
use crate::refelem::{BubbleKind, QuadratureError, ShapeTable};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Gauss order for the bilinear forms with the three cubic-per-variable
/// bubbles (bubble-bubble products reach degree 6 per variable).
pub const MATRIX_QUADRATURE: usize = 4;

/// Exact Gauss order for the bilinear forms of a given bubble; the quartic
/// `QuadSym` bubble needs one more point per direction.
pub fn matrix_quadrature(kind: BubbleKind) -> usize {
    match kind {
        BubbleKind::QuadSym => MATRIX_QUADRATURE + 1,
        _ => MATRIX_QUADRATURE,
    }
}
/// Gauss order for loads and error norms.
pub const LOAD_QUADRATURE: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("viscosity must be positive, got {0}")]
    NonPositiveViscosity(f64),
}

/// Per-element physical gradients of the five local velocity functions at
/// each quadrature point.
fn physical_gradients(geom: &ElementGeometry, table: &ShapeTable) -> Vec<[[f64; 2]; 5]> {
    table
        .gradients
        .iter()
        .map(|g| std::array::from_fn(|a| geom.push_gradient(g[a])))
        .collect()
}

/// Scalar `int grad phi_a . grad phi_b` over the full scalar velocity space.
fn scalar_stiffness(mesh: &Mesh, dofs: &DofMap, table: &ShapeTable) -> Result<SparseMatrix, AssemblyError> {
    let ns = dofs.velocity_scalar_count();
    let mut t = TripletBuilder::with_capacity(ns, ns, 25 * mesh.num_elements());
    for k in 0..mesh.num_elements() {
        let geom = mesh.element_geometry(k)?;
        let grads = physical_gradients(&geom, table);
        let ldofs = dofs.element_velocity_dofs(mesh, k);
        let mut local = [[0.0; 5]; 5];
        for (q, w) in table.rule.weights().iter().enumerate() {
            let g = &grads[q];
            for a in 0..5 {
                for b in 0..5 {
                    local[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
        }
        for a in 0..5 {
            for b in 0..5 {
                t.push(ldofs[a], ldofs[b], geom.det * local[a][b]);
            }
        }
    }
    Ok(t.build())
}

fn scalar_mass(mesh: &Mesh, dofs: &DofMap, table: &ShapeTable) -> Result<SparseMatrix, AssemblyError> {
    let ns = dofs.velocity_scalar_count();
    let mut t = TripletBuilder::with_capacity(ns, ns, 25 * mesh.num_elements());
    for k in 0..mesh.num_elements() {
        let geom = mesh.element_geometry(k)?;
        let ldofs = dofs.element_velocity_dofs(mesh, k);
        for a in 0..5 {
            for b in 0..5 {
                let v: f64 = table
                    .values
                    .iter()
                    .zip(table.rule.weights())
                    .map(|(phi, w)| w * phi[a] * phi[b])
                    .sum();
                t.push(ldofs[a], ldofs[b], geom.det * v);
            }
        }
    }
    Ok(t.build())
}

/// Two copies of a scalar block on the diagonal.
fn vector_block(scalar: &SparseMatrix) -> SparseMatrix {
    let ns = scalar.nrows();
    let t = scalar
        .triplets()
        .flat_map(|(i, j, v)| [(i, j, v), (ns + i, ns + j, v)])
        .collect();
    SparseMatrix::from_triplets(2 * ns, 2 * ns, t)
}

/// `nu int grad u : grad v` on the full vector velocity space.
pub fn assemble_viscous(mesh: &Mesh, dofs: &DofMap, kind: BubbleKind, nu: f64) -> Result<SparseMatrix, AssemblyError> {
    assemble_viscous_with_order(mesh, dofs, kind, nu, matrix_quadrature(kind))
}

pub fn assemble_viscous_with_order(
    mesh: &Mesh,
    dofs: &DofMap,
    kind: BubbleKind,
    nu: f64,
    order: usize,
) -> Result<SparseMatrix, AssemblyError> {
    if nu <= 0.0 || !nu.is_finite() {
        return Err(AssemblyError::NonPositiveViscosity(nu));
    }
    let table = ShapeTable::new(kind, order)?;
    Ok(vector_block(&scalar_stiffness(mesh, dofs, &table)?).scaled(nu))
}

/// `int (div v) q`: rows are pressure dofs, columns full vector velocity dofs.
pub fn assemble_divergence(mesh: &Mesh, dofs: &DofMap, kind: BubbleKind) -> Result<SparseMatrix, AssemblyError> {
    assemble_divergence_with_order(mesh, dofs, kind, matrix_quadrature(kind))
}

pub fn assemble_divergence_with_order(
    mesh: &Mesh,
    dofs: &DofMap,
    kind: BubbleKind,
    order: usize,
) -> Result<SparseMatrix, AssemblyError> {
    let table = ShapeTable::new(kind, order)?;
    let ns = dofs.velocity_scalar_count();
    let np = dofs.pressure_count();
    let mut t = TripletBuilder::with_capacity(np, 2 * ns, 40 * mesh.num_elements());
    for k in 0..mesh.num_elements() {
        let geom = mesh.element_geometry(k)?;
        let grads = physical_gradients(&geom, &table);
        let vdofs = dofs.element_velocity_dofs(mesh, k);
        let pdofs = dofs.element_pressure_dofs(mesh, k);
        // local[j][a][c] = int d_c phi_a psi_j
        let mut local = [[[0.0; 2]; 5]; 4];
        for (q, w) in table.rule.weights().iter().enumerate() {
            let psi = &table.values[q];
            for (j, row) in local.iter_mut().enumerate() {
                for (a, entry) in row.iter_mut().enumerate() {
                    entry[0] += w * grads[q][a][0] * psi[j];
                    entry[1] += w * grads[q][a][1] * psi[j];
                }
            }
        }
        for j in 0..4 {
            for a in 0..5 {
                for c in 0..2 {
                    t.push(pdofs[j], c * ns + vdofs[a], geom.det * local[j][a][c]);
                }
            }
        }
    }
    Ok(t.build())
}

/// Bilinear pressure mass matrix.
pub fn assemble_pressure_mass(mesh: &Mesh, dofs: &DofMap) -> Result<SparseMatrix, AssemblyError> {
    // Bubble choice is irrelevant for the hats.
    let table = ShapeTable::new(BubbleKind::Standard, MATRIX_QUADRATURE)?;
    let np = dofs.pressure_count();
    let mut t = TripletBuilder::with_capacity(np, np, 16 * mesh.num_elements());
    for k in 0..mesh.num_elements() {
        let geom = mesh.element_geometry(k)?;
        let pdofs = dofs.element_pressure_dofs(mesh, k);
        for a in 0..4 {
            for b in 0..4 {
                let v: f64 = table
                    .values
                    .iter()
                    .zip(table.rule.weights())
                    .map(|(phi, w)| w * phi[a] * phi[b])
                    .sum();
                t.push(pdofs[a], pdofs[b], geom.det * v);
            }
        }
    }
    Ok(t.build())
}

/// Full-space velocity mass matrix (both components).
pub fn assemble_velocity_mass(mesh: &Mesh, dofs: &DofMap, kind: BubbleKind) -> Result<SparseMatrix, AssemblyError> {
    let table = ShapeTable::new(kind, matrix_quadrature(kind))?;
    Ok(vector_block(&scalar_mass(mesh, dofs, &table)?))
}

/// Full `H^1` Gram matrix: velocity mass plus unit-viscosity stiffness.
pub fn assemble_velocity_gram(mesh: &Mesh, dofs: &DofMap, kind: BubbleKind) -> Result<SparseMatrix, AssemblyError> {
    let mass = assemble_velocity_mass(mesh, dofs, kind)?;
    let stiff = assemble_viscous(mesh, dofs, kind, 1.0)?;
    Ok(mass.add_scaled(&stiff, 1.0))
}

/// `int f . v` on the full vector velocity space.
pub fn assemble_load(
    mesh: &Mesh,
    dofs: &DofMap,
    kind: BubbleKind,
    f: &[BivariatePolynomial; 2],
) -> Result<Vec<f64>, AssemblyError> {
    let table = ShapeTable::new(kind, LOAD_QUADRATURE)?;
    let ns = dofs.velocity_scalar_count();
    let fx = [f[0].to_float(), f[1].to_float()];
    let mut load = vec![0.0; 2 * ns];
    for k in 0..mesh.num_elements() {
        let geom = mesh.element_geometry(k)?;
        let vdofs = dofs.element_velocity_dofs(mesh, k);
        for ((xi, w), phi) in table.rule.iter().zip(&table.values) {
            let x = geom.map(*xi);
            for (c, fc) in fx.iter().enumerate() {
                let fv = fc.eval(x[0], x[1]) * w * geom.det;
                for a in 0..5 {
                    load[c * ns + vdofs[a]] += fv * phi[a];
                }
            }
        }
    }
    Ok(load)
}

/// Everything assembled over the full (un-reduced) spaces.
#[derive(Debug, Clone)]
pub struct FullSystem {
    pub viscous: SparseMatrix,
    pub divergence: SparseMatrix,
    pub pressure_mass: SparseMatrix,
    pub velocity_gram: SparseMatrix,
    pub load: Vec<f64>,
    /// `int psi_j` for every pressure hat.
    pub mean_weights: Vec<f64>,
}

impl FullSystem {
    pub fn assemble(
        mesh: &Mesh,
        dofs: &DofMap,
        kind: BubbleKind,
        nu: f64,
        f: &[BivariatePolynomial; 2],
    ) -> Result<Self, AssemblyError> {
        let pressure_mass = assemble_pressure_mass(mesh, dofs)?;
        let mean_weights = pressure_mass.mul_vec(&vec![1.0; dofs.pressure_count()]);
        Ok(Self {
            viscous: assemble_viscous(mesh, dofs, kind, nu)?,
            divergence: assemble_divergence(mesh, dofs, kind)?,
            velocity_gram: assemble_velocity_gram(mesh, dofs, kind)?,
            load: assemble_load(mesh, dofs, kind, f)?,
            pressure_mass,
            mean_weights,
        })
    }
}

/// Dirichlet-reduced saddle-point system
///
/// ```text
/// [  A  -B^T  0 ] [u]   [load + lift ]
/// [ -B   0    c ] [p] = [pressure_rhs]
/// [  0   c^T  0 ] [l]   [0           ]
/// ```
///
/// where `c` are the mean weights; the last row exists once
/// [`attach_mean_constraint`] has been applied.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub mp: SparseMatrix,
    pub gv: SparseMatrix,
    pub load: Vec<f64>,
    /// `-A_{ID} g`: boundary data moved to the momentum right-hand side.
    pub lift: Vec<f64>,
    /// `B_{D} g`: boundary data moved to the continuity right-hand side.
    pub pressure_rhs: Vec<f64>,
    pub mean_weights: Vec<f64>,
    /// Full-layout velocity vector holding the prescribed boundary values
    /// (zero on interior dofs).
    pub dirichlet_values: Vec<f64>,
    pub mean_constrained: bool,
    scalar_count: usize,
    interior_count: usize,
    interior_to_scalar: Vec<usize>,
}

impl SaddleSystem {
    pub fn velocity_len(&self) -> usize {
        2 * self.interior_count
    }

    pub fn pressure_len(&self) -> usize {
        self.mean_weights.len()
    }

    /// Size of the block system including the multiplier row (if attached).
    pub fn kkt_len(&self) -> usize {
        self.velocity_len() + self.pressure_len() + usize::from(self.mean_constrained)
    }

    pub fn velocity_rhs(&self) -> Vec<f64> {
        self.load.iter().zip(&self.lift).map(|(l, g)| l + g).collect()
    }

    /// Assembled symmetric block matrix.
    pub fn kkt_matrix(&self) -> SparseMatrix {
        let nv = self.velocity_len();
        let np = self.pressure_len();
        let n = self.kkt_len();
        let mut t = Vec::with_capacity(self.a.nnz() + 2 * self.b.nnz() + 2 * np);
        t.extend(self.a.triplets());
        for (i, j, v) in self.b.triplets() {
            t.push((nv + i, j, -v));
            t.push((j, nv + i, -v));
        }
        if self.mean_constrained {
            for (i, &c) in self.mean_weights.iter().enumerate() {
                t.push((nv + i, nv + np, c));
                t.push((nv + np, nv + i, c));
            }
        }
        SparseMatrix::from_triplets(n, n, t)
    }

    pub fn kkt_rhs(&self) -> Vec<f64> {
        let mut rhs = self.velocity_rhs();
        rhs.extend_from_slice(&self.pressure_rhs);
        if self.mean_constrained {
            rhs.push(0.0);
        }
        rhs
    }

    /// Expands a reduced velocity into the full layout, boundary values
    /// included.
    pub fn full_velocity(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.velocity_len());
        let mut full = self.dirichlet_values.clone();
        for c in 0..2 {
            for (r, &s) in self.interior_to_scalar.iter().enumerate() {
                full[c * self.scalar_count + s] = reduced[c * self.interior_count + r];
            }
        }
        full
    }

    /// Assembles and reduces in one go; the result carries the mean
    /// constraint.
    pub fn assemble(
        mesh: &Mesh,
        dofs: &DofMap,
        kind: BubbleKind,
        nu: f64,
        f: &[BivariatePolynomial; 2],
        g: &[BivariatePolynomial; 2],
    ) -> Result<Self, AssemblyError> {
        let full = FullSystem::assemble(mesh, dofs, kind, nu, f)?;
        Ok(attach_mean_constraint(apply_dirichlet(&full, mesh, dofs, g)))
    }
}

/// Nodal values of `g` at the boundary vertices, full vector layout.
pub fn boundary_values(mesh: &Mesh, dofs: &DofMap, g: &[BivariatePolynomial; 2]) -> Vec<f64> {
    let ns = dofs.velocity_scalar_count();
    let gf = [g[0].to_float(), g[1].to_float()];
    let mut out = vec![0.0; 2 * ns];
    for (v, x) in mesh.vertices().iter().enumerate() {
        if mesh.is_boundary(v) {
            for c in 0..2 {
                out[c * ns + v] = gf[c].eval(x[0], x[1]);
            }
        }
    }
    out
}

/// Fixes boundary vertex dofs to the nodal values of `g`, moves their
/// columns to the right-hand side and deletes their rows and columns.
pub fn apply_dirichlet(full: &FullSystem, mesh: &Mesh, dofs: &DofMap, g: &[BivariatePolynomial; 2]) -> SaddleSystem {
    let values = boundary_values(mesh, dofs, g);
    apply_dirichlet_values(full, dofs, values)
}

pub fn apply_dirichlet_values(full: &FullSystem, dofs: &DofMap, dirichlet_values: Vec<f64>) -> SaddleSystem {
    let ns = dofs.velocity_scalar_count();
    let m = dofs.interior_scalar_count();
    let np = dofs.pressure_count();
    let reduce = |i: usize| {
        let (c, s) = (i / ns, i % ns);
        dofs.interior_index(s).map(|r| c * m + r)
    };

    let a = full.viscous.select(2 * m, reduce, 2 * m, reduce);
    let b = full.divergence.select(np, Some, 2 * m, reduce);
    let gv = full.velocity_gram.select(2 * m, reduce, 2 * m, reduce);

    let a_g = full.viscous.mul_vec(&dirichlet_values);
    let b_g = full.divergence.mul_vec(&dirichlet_values);
    let mut load = vec![0.0; 2 * m];
    let mut lift = vec![0.0; 2 * m];
    for i in 0..2 * ns {
        if let Some(r) = reduce(i) {
            load[r] = full.load[i];
            lift[r] = -a_g[i];
        }
    }
    let pressure_rhs = b_g;

    SaddleSystem {
        a,
        b,
        mp: full.pressure_mass.clone(),
        gv,
        load,
        lift,
        pressure_rhs,
        mean_weights: full.mean_weights.clone(),
        dirichlet_values,
        mean_constrained: false,
        scalar_count: ns,
        interior_count: m,
        interior_to_scalar: dofs.interior_to_scalar().to_vec(),
    }
}

/// Records the zero-mean pressure constraint `c^T p = 0`, enforced through
/// one Lagrange multiplier.
pub fn attach_mean_constraint(mut system: SaddleSystem) -> SaddleSystem {
    system.mean_constrained = true;
    system
}
