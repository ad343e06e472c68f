//! Manufactured solutions, discrete error norms and convergence studies.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::assembly::{AssemblyError, SaddleSystem, LOAD_QUADRATURE};
use crate::mesh::{DofMap, Mesh, MeshError};
use crate::poly::{rat, BivariatePolynomial as P, FloatPolynomial, PolyError, Var};
use crate::refelem::{BubbleKind, QuadratureError, ShapeTable};
use crate::solver::{solve_saddle, SolveOutcome, SolverError};

/// Finest refinement level of a convergence study (`n = 128`).
pub const MAX_STUDY_LEVEL: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("singular system at level {level}")]
    Singular { level: usize },
    #[error("max level must be in 1..={MAX_STUDY_LEVEL}, got {0}")]
    LevelOutOfRange(usize),
    #[error("convergence rates need positive errors, got {0}")]
    NonPositiveError(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    Example1,
    Example2,
}

impl ExampleId {
    pub fn number(self) -> u8 {
        match self {
            ExampleId::Example1 => 1,
            ExampleId::Example2 => 2,
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "example {}", self.number())
    }
}

impl FromStr for ExampleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(ExampleId::Example1),
            "2" => Ok(ExampleId::Example2),
            other => Err(format!("unknown example '{other}', expected 1 or 2")),
        }
    }
}

/// Exact Stokes solution with its right-hand side `f = -nu lap u + grad p`.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub id: ExampleId,
    pub u: [P; 2],
    pub p: P,
    pub f: [P; 2],
    pub nu: f64,
}

fn terms(t: &[(u32, u32, i64, i64)]) -> Result<P, PolyError> {
    P::from_terms(t.iter().map(|&(i, j, n, d)| (i, j, rat(n, d))))
}

pub fn manufactured_case(id: ExampleId) -> Result<ManufacturedCase, VerifyError> {
    let x = P::x();
    let y = P::y();
    let lin = |a: i64, b: i64, c: i64| P::linear(rat(a, 1), rat(b, 1), rat(c, 1));
    let (u, p) = match id {
        ExampleId::Example1 => {
            // u1 = -2 x^2 y (2y-1)(x-1)^2 (y-1), u2 = 2 x y^2 (2x-1)(x-1)(y-1)^2
            let xm1 = lin(-1, 1, 0);
            let ym1 = lin(-1, 0, 1);
            let u1 = P::product([&x, &x, &y, &lin(-1, 0, 2), &xm1, &xm1, &ym1])?.scale(&rat(-2, 1));
            let u2 = P::product([&x, &y, &y, &lin(-1, 2, 0), &xm1, &ym1, &ym1])?.scale(&rat(2, 1));
            // p = x(1-x)(1-2y)
            let p = P::product([&x, &lin(1, -1, 0), &lin(1, 0, -2)])?;
            ([u1, u2], p)
        }
        ExampleId::Example2 => {
            let u1 = terms(&[
                (1, 0, 1, 1),
                (2, 0, 1, 1),
                (1, 1, -2, 1),
                (3, 0, 1, 1),
                (1, 2, -3, 1),
                (2, 1, 1, 1),
            ])?;
            let u2 = terms(&[
                (0, 1, -1, 1),
                (1, 1, -2, 1),
                (0, 2, 1, 1),
                (2, 1, -3, 1),
                (0, 3, 1, 1),
                (1, 2, -1, 1),
            ])?;
            let p = terms(&[(1, 1, 1, 1), (1, 0, 1, 1), (0, 1, 1, 1), (3, 2, 1, 1), (0, 0, -4, 3)])?;
            ([u1, u2], p)
        }
    };
    let nu = rat(1, 1);
    let grad_p = p.gradient();
    let f = [
        &u[0].laplacian().scale(&-nu.clone()) + &grad_p[0],
        &u[1].laplacian().scale(&-nu.clone()) + &grad_p[1],
    ];
    Ok(ManufacturedCase { id, u, p, f, nu: 1.0 })
}

impl ManufacturedCase {
    /// `div u` as an exact polynomial.
    pub fn divergence(&self) -> P {
        &self.u[0].diff(Var::X) + &self.u[1].diff(Var::Y)
    }
}

/// Which part of the discrete velocity enters the error norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum VelocityPart {
    /// Vertex (bilinear) part only; bubble coefficients are dropped.
    #[default]
    Bilinear,
    /// The complete enriched field, bubbles included.
    Enriched,
}

impl fmt::Display for VelocityPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VelocityPart::Bilinear => "bilinear",
            VelocityPart::Enriched => "enriched",
        })
    }
}

impl FromStr for VelocityPart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bilinear" => Ok(VelocityPart::Bilinear),
            "enriched" => Ok(VelocityPart::Enriched),
            other => Err(format!("unknown velocity part '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// Full `H^1` norm of `u - u_h`.
    pub h1_u: f64,
    pub h1_seminorm_u: f64,
    pub l2_u: f64,
    /// `L^2` norm of the pressure error, both pressures taken mean-free.
    pub l2_p: f64,
}

/// Errors of a discrete solution against exact polynomial fields, by
/// elementwise Gauss quadrature of order 6.
///
/// `velocity` is in the full layout (boundary values included).
pub fn error_norms_of(
    mesh: &Mesh,
    dofs: &DofMap,
    kind: BubbleKind,
    velocity: &[f64],
    pressure: &[f64],
    u: &[P; 2],
    p: &P,
) -> Result<ErrorNorms, VerifyError> {
    let table = ShapeTable::new(kind, LOAD_QUADRATURE)?;
    let ns = dofs.velocity_scalar_count();
    let uf: Vec<FloatPolynomial> = u.iter().map(P::to_float).collect();
    let du: Vec<[FloatPolynomial; 2]> = u
        .iter()
        .map(|c| [c.diff(Var::X).to_float(), c.diff(Var::Y).to_float()])
        .collect();
    let pf = p.to_float();

    // Means of both pressures over the domain.
    let mut area = 0.0;
    let (mut mean_p, mut mean_ph) = (0.0, 0.0);
    for k in 0..mesh.num_elements() {
        let geom = mesh.element_geometry(k)?;
        let pd = dofs.element_pressure_dofs(mesh, k);
        for ((xi, w), phi) in table.rule.iter().zip(&table.values) {
            let x = geom.map(*xi);
            let wd = w * geom.det;
            area += wd;
            mean_p += wd * pf.eval(x[0], x[1]);
            mean_ph += wd * (0..4).map(|a| pressure[pd[a]] * phi[a]).sum::<f64>();
        }
    }
    mean_p /= area;
    mean_ph /= area;

    let (mut l2u, mut semi, mut l2p) = (0.0, 0.0, 0.0);
    for k in 0..mesh.num_elements() {
        let geom = mesh.element_geometry(k)?;
        let vd = dofs.element_velocity_dofs(mesh, k);
        let pd = dofs.element_pressure_dofs(mesh, k);
        for (((xi, w), phi), grads) in table.rule.iter().zip(&table.values).zip(&table.gradients) {
            let x = geom.map(*xi);
            let wd = w * geom.det;
            let phys: Vec<[f64; 2]> = grads.iter().map(|g| geom.push_gradient(*g)).collect();
            for c in 0..2 {
                let coef: Vec<f64> = vd.iter().map(|&s| velocity[c * ns + s]).collect();
                let uh: f64 = (0..5).map(|a| coef[a] * phi[a]).sum();
                let e = uf[c].eval(x[0], x[1]) - uh;
                l2u += wd * e * e;
                for d in 0..2 {
                    let duh: f64 = (0..5).map(|a| coef[a] * phys[a][d]).sum();
                    let e = du[c][d].eval(x[0], x[1]) - duh;
                    semi += wd * e * e;
                }
            }
            let ph: f64 = (0..4).map(|a| pressure[pd[a]] * phi[a]).sum();
            let e = (pf.eval(x[0], x[1]) - mean_p) - (ph - mean_ph);
            l2p += wd * e * e;
        }
    }
    Ok(ErrorNorms {
        h1_u: (l2u + semi).sqrt(),
        h1_seminorm_u: semi.sqrt(),
        l2_u: l2u.sqrt(),
        l2_p: l2p.sqrt(),
    })
}

/// Errors of a solved system against a manufactured case.
pub fn error_norms(
    mesh: &Mesh,
    dofs: &DofMap,
    kind: BubbleKind,
    system: &SaddleSystem,
    outcome: &SolveOutcome,
    case: &ManufacturedCase,
    part: VelocityPart,
) -> Result<ErrorNorms, VerifyError> {
    let mut full = system.full_velocity(&outcome.velocity);
    if part == VelocityPart::Bilinear {
        let ns = dofs.velocity_scalar_count();
        for k in 0..mesh.num_elements() {
            let b = dofs.bubble_dof(k);
            full[b] = 0.0;
            full[ns + b] = 0.0;
        }
    }
    error_norms_of(mesh, dofs, kind, &full, &outcome.pressure, &case.u, &case.p)
}

/// `log2(e_{l-1} / e_l)` for consecutive entries.
pub fn eoc(errors: &[f64]) -> Result<Vec<f64>, VerifyError> {
    if let Some(&bad) = errors.iter().find(|&&e| !e.is_finite() || e <= 0.0) {
        return Err(VerifyError::NonPositiveError(bad));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelErrors {
    pub level: usize,
    pub elements: usize,
    /// Errors under the report's [`VelocityPart`].
    pub norms: ErrorNorms,
    /// Errors under the other convention, for side-by-side output.
    pub alternate: ErrorNorms,
    pub relative_residual: f64,
    pub h1_rate: Option<f64>,
    pub l2_rate: Option<f64>,
    pub p_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub example: ExampleId,
    pub bubble: BubbleKind,
    pub shear: f64,
    pub velocity_part: VelocityPart,
    pub levels: Vec<LevelErrors>,
}

impl ErrorReport {
    pub fn column(&self, pick: impl Fn(&ErrorNorms) -> f64) -> Vec<f64> {
        self.levels.iter().map(|l| pick(&l.norms)).collect()
    }
}

/// One solved refinement level.
#[derive(Debug, Clone)]
pub struct LevelSolution {
    pub elements: usize,
    pub bilinear: ErrorNorms,
    pub enriched: ErrorNorms,
    pub outcome: SolveOutcome,
}

/// Assembles, solves and measures one refinement level. Boundary data are
/// the exact velocity, interpolated at the boundary vertices.
pub fn run_level(
    case: &ManufacturedCase,
    kind: BubbleKind,
    level: usize,
    shear: f64,
) -> Result<LevelSolution, VerifyError> {
    let mesh = Mesh::for_level(level, shear)?;
    let dofs = DofMap::new(&mesh);
    let system = SaddleSystem::assemble(&mesh, &dofs, kind, case.nu, &case.f, &case.u)?;
    let outcome = solve_saddle(&system)?;
    if !outcome.is_solved() {
        return Err(VerifyError::Singular { level });
    }
    let measure = |part| error_norms(&mesh, &dofs, kind, &system, &outcome, case, part);
    Ok(LevelSolution {
        elements: mesh.num_elements(),
        bilinear: measure(VelocityPart::Bilinear)?,
        enriched: measure(VelocityPart::Enriched)?,
        outcome,
    })
}

/// Levels `1..=max_level` measured on the bilinear velocity part; the
/// first singular level aborts the study.
pub fn run_convergence_study(
    example: ExampleId,
    kind: BubbleKind,
    max_level: usize,
    shear: f64,
) -> Result<ErrorReport, VerifyError> {
    run_convergence_study_with(example, kind, max_level, shear, VelocityPart::Bilinear)
}

pub fn run_convergence_study_with(
    example: ExampleId,
    kind: BubbleKind,
    max_level: usize,
    shear: f64,
    part: VelocityPart,
) -> Result<ErrorReport, VerifyError> {
    if !(1..=MAX_STUDY_LEVEL).contains(&max_level) {
        return Err(VerifyError::LevelOutOfRange(max_level));
    }
    let case = manufactured_case(example)?;
    let mut levels: Vec<LevelErrors> = Vec::with_capacity(max_level);
    for level in 1..=max_level {
        let sol = run_level(&case, kind, level, shear)?;
        let (norms, alternate) = match part {
            VelocityPart::Bilinear => (sol.bilinear, sol.enriched),
            VelocityPart::Enriched => (sol.enriched, sol.bilinear),
        };
        let rate = |pick: fn(&ErrorNorms) -> f64| -> Result<Option<f64>, VerifyError> {
            match levels.last() {
                None => Ok(None),
                Some(prev) => Ok(Some(eoc(&[pick(&prev.norms), pick(&norms)])?[0])),
            }
        };
        let row = LevelErrors {
            level,
            elements: sol.elements,
            h1_rate: rate(|n| n.h1_u)?,
            l2_rate: rate(|n| n.l2_u)?,
            p_rate: rate(|n| n.l2_p)?,
            norms,
            alternate,
            relative_residual: sol.outcome.relative_residual,
        };
        levels.push(row);
    }
    Ok(ErrorReport {
        example,
        bubble: kind,
        shear,
        velocity_part: part,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solutions_are_consistent() {
        for id in [ExampleId::Example1, ExampleId::Example2] {
            let c = manufactured_case(id).unwrap();
            assert!(c.divergence().is_zero(), "{id}");
            assert!(c.p.integrate_unit_square() == rat(0, 1), "{id}");
        }
    }

    #[test]
    fn example_two_right_hand_side() {
        let c = manufactured_case(ExampleId::Example2).unwrap();
        let f1 = P::from_terms([(0, 0, rat(-1, 1)), (0, 1, rat(-1, 1)), (2, 2, rat(3, 1))]).unwrap();
        let f2 = P::from_terms([(0, 0, rat(-1, 1)), (1, 0, rat(3, 1)), (3, 1, rat(2, 1))]).unwrap();
        assert_eq!(c.f[0], f1);
        assert_eq!(c.f[1], f2);
        assert_eq!(c.f[0].eval(0.0, 0.0), -1.0);
        assert_eq!(c.f[1].eval(0.0, 0.0), -1.0);
        // boundary value at (1, 0)
        assert_eq!(c.u[0].eval(1.0, 0.0), 3.0);
        assert_eq!(c.u[1].eval(1.0, 0.0), 0.0);
    }

    #[test]
    fn example_one_vanishes_on_boundary() {
        let c = manufactured_case(ExampleId::Example1).unwrap();
        for t in 0..=16 {
            let s = t as f64 / 16.0;
            for (x, y) in [(s, 0.0), (s, 1.0), (0.0, s), (1.0, s)] {
                assert_eq!(c.u[0].eval(x, y), 0.0);
                assert_eq!(c.u[1].eval(x, y), 0.0);
            }
        }
    }

    #[test]
    fn constant_field_is_reproduced() {
        let mesh = Mesh::structured(4, 0.2).unwrap();
        let dofs = DofMap::new(&mesh);
        let ns = dofs.velocity_scalar_count();
        let mut vel = vec![0.0; 2 * ns];
        for v in 0..mesh.num_vertices() {
            vel[v] = 0.75;
        }
        let pressure = vec![3.0; dofs.pressure_count()];
        let u = [P::constant(rat(3, 4)), P::zero()];
        let e = error_norms_of(&mesh, &dofs, BubbleKind::Corner, &vel, &pressure, &u, &P::one()).unwrap();
        assert!(e.h1_u < 1e-13 && e.l2_u < 1e-13 && e.l2_p < 1e-13, "{e:?}");
    }

    #[test]
    fn rates() {
        assert_eq!(eoc(&[0.4, 0.1]).unwrap(), vec![2.0]);
        assert_eq!(eoc(&[0.3, 0.3]).unwrap(), vec![0.0]);
        let r = eoc(&[3.23129e-02, 1.58286e-02]).unwrap()[0];
        assert!((r - 1.03).abs() < 5e-3);
        assert!(eoc(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn standard_bubble_is_singular() {
        assert_eq!(
            run_convergence_study(ExampleId::Example1, BubbleKind::Standard, 2, 0.0).unwrap_err(),
            VerifyError::Singular { level: 1 }
        );
        assert!(run_convergence_study(ExampleId::Example1, BubbleKind::Corner, 7, 0.0).is_err());
    }

    #[test]
    fn coarse_study_decreases() {
        let r = run_convergence_study(ExampleId::Example1, BubbleKind::Corner, 3, 0.0).unwrap();
        for w in r.levels.windows(2) {
            assert!(w[1].norms.h1_u < w[0].norms.h1_u);
            assert!(w[1].norms.l2_u < w[0].norms.l2_u);
            assert!(w[1].norms.l2_p < w[0].norms.l2_p);
        }
        assert!(r.levels[0].h1_rate.is_none());
    }
}
