//! Macro-element stability analysis.
//!
//! The vertex patch of four elements has five interior velocity functions
//! (four bubbles and the centre hat) and nine pressure hats. The 9x10
//! matrix `D` pairs pressure hat `j` with `d/dx_c` of velocity function `k`;
//! a patch is stable exactly when `rank D = 8`, i.e. when the constant is
//! the only pressure orthogonal to all interior divergences.
//!
//! The global inf-sup constant is estimated from the dense generalized
//! eigenproblem `B G^{-1} B^T q = lambda Mp q`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::assembly::{AssemblyError, SaddleSystem};
use crate::mesh::{DofMap, Mesh, MeshError};
use crate::poly::{rat, BivariatePolynomial, PolyError, Rational, Var};
use crate::refelem::{bubble, q1_basis, BubbleKind};
use crate::solver::{amd_order, LdlError, LdlFactor};

/// Largest subdivision count accepted by the dense inf-sup estimator.
pub const MAX_INFSUP_SUBDIVISIONS: usize = 32;
/// Largest refinement level for inf-sup sweeps (`n = 32`).
pub const MAX_INFSUP_LEVEL: usize = 4;
/// Shift applied to the constant pressure mode before the eigen-solve.
const DEFLATION_SHIFT: f64 = 10.0;

pub const MACRO_ROWS: usize = 9;
pub const MACRO_COLS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Factorization(#[from] LdlError),
    #[error("dense inf-sup estimate needs n <= {MAX_INFSUP_SUBDIVISIONS}, got n = {0}")]
    MeshTooLarge(usize),
    #[error("singular affine map")]
    SingularMap,
    #[error("pressure mass matrix is not positive definite")]
    EigenSolve,
}

/// Elements of the macro patch on `(0,2)^2`: lower-left, lower-right,
/// upper-left, upper-right.
const MACRO_ELEMENTS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];
/// Local vertex of each macro element sitting at the patch centre.
const CENTRE_LOCAL: [usize; 4] = [2, 3, 1, 0];
/// Offsets of the local Q1 vertices, in `q1_basis` order.
const LOCAL_OFFSETS: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];

/// Exact 9x10 macro-element divergence matrix.
///
/// Rows are the pressure hats of the 3x3 patch grid, lexicographic (`x`
/// fastest). Columns `2e, 2e+1` are the `x`/`y` derivatives of the bubble
/// on element `e`; columns 8 and 9 belong to the centre hat.
#[derive(Clone, PartialEq, Eq)]
pub struct MacroMatrix {
    entries: Vec<Vec<Rational>>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl MacroMatrix {
    pub fn from_rows(entries: Vec<Vec<Rational>>) -> Self {
        assert_eq!(entries.len(), MACRO_ROWS);
        assert!(entries.iter().all(|r| r.len() == MACRO_COLS));
        let row_labels = (0..MACRO_ROWS).map(|j| format!("q({},{})", j % 3, j / 3)).collect();
        let names = ["bLL", "bLR", "bUL", "bUR", "hat"];
        let col_labels = names
            .iter()
            .flat_map(|n| [format!("{n}.x"), format!("{n}.y")])
            .collect();
        Self {
            entries,
            row_labels,
            col_labels,
        }
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(crate::poly::rat_to_f64).collect())
            .collect()
    }

    /// Reorders rows and velocity functions: row `i` of the result is row
    /// `p.rows[i]` here, function `k` of the result is function
    /// `p.functions[k]` here (both components move together).
    pub fn permuted(&self, p: &MacroPermutation) -> Self {
        let entries = p
            .rows
            .iter()
            .map(|&r| {
                p.functions
                    .iter()
                    .flat_map(|&k| [self.entries[r][2 * k].clone(), self.entries[r][2 * k + 1].clone()])
                    .collect()
            })
            .collect();
        Self {
            entries,
            row_labels: p.rows.iter().map(|&r| self.row_labels[r].clone()).collect(),
            col_labels: p
                .functions
                .iter()
                .flat_map(|&k| [self.col_labels[2 * k].clone(), self.col_labels[2 * k + 1].clone()])
                .collect(),
        }
    }

    pub fn rank(&self) -> usize {
        rational_rank(&self.entries)
    }

    /// Row-major `(numerator, denominator)` pairs, if all fit in `i64`.
    pub fn to_i64_fractions(&self) -> Option<Vec<(i64, i64)>> {
        self.entries
            .iter()
            .flatten()
            .map(|v| Some((v.numer().to_i64()?, v.denom().to_i64()?)))
            .collect()
    }
}

impl fmt::Display for MacroMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
        for row in cells {
            let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "[ {} ]", line.join("  "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for MacroMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Macro matrix on the axis-aligned patch `(0,2)^2`.
pub fn build_macro_matrix(kind: BubbleKind) -> Result<MacroMatrix, StabilityError> {
    let one = rat(1, 1);
    let zero = rat(0, 1);
    build_macro_matrix_affine(kind, [[one.clone(), zero.clone()], [zero, one]])
}

/// Macro matrix of the patch mapped by `x = A xi + b`; entries are
/// `|det A| * integral of (A^{-T} grad phi) q` over the reference patch.
pub fn build_macro_matrix_affine(kind: BubbleKind, a: [[Rational; 2]; 2]) -> Result<MacroMatrix, StabilityError> {
    let det = &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0];
    if det.is_zero() {
        return Err(StabilityError::SingularMap);
    }
    // A^{-T} = [[a11, -a10], [-a01, a00]] / det
    let inv_t = [[&a[1][1] / &det, -&a[1][0] / &det], [-&a[0][1] / &det, &a[0][0] / &det]];
    let abs_det = det.abs();

    let hats = q1_basis();
    let b = bubble(kind);
    let mut entries = vec![vec![Rational::zero(); MACRO_COLS]; MACRO_ROWS];
    for (e, &(ex, ey)) in MACRO_ELEMENTS.iter().enumerate() {
        let functions: [(usize, &BivariatePolynomial); 2] = [(e, &b), (4, &hats[CENTRE_LOCAL[e]])];
        for (col, phi) in functions {
            let grad = [phi.diff(Var::X), phi.diff(Var::Y)];
            let phys = [
                &grad[0].scale(&inv_t[0][0]) + &grad[1].scale(&inv_t[0][1]),
                &grad[0].scale(&inv_t[1][0]) + &grad[1].scale(&inv_t[1][1]),
            ];
            for (local, &(ox, oy)) in LOCAL_OFFSETS.iter().enumerate() {
                let row = (ex + ox) + 3 * (ey + oy);
                for c in 0..2 {
                    let v = phys[c].mul(&hats[local])?.integrate_unit_square();
                    entries[row][2 * col + c] += &abs_det * v;
                }
            }
        }
    }
    Ok(MacroMatrix::from_rows(entries))
}

/// Exact rank by fraction-free (Bareiss) elimination.
///
/// Rows are first cleared of denominators, so every intermediate value is
/// an integer and no rounding can occur.
pub fn rational_rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<BigInt>> = rows.iter().map(|r| clear_denominators(r)).collect();
    let nrows = m.len();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..ncols {
        let Some(p) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for r in rank + 1..nrows {
            let factor = m[r][col].clone();
            for c in col..ncols {
                let v = (&pivot * &m[r][c] - &factor * &m[rank][c]) / &prev;
                m[r][c] = v;
            }
        }
        prev = pivot;
        rank += 1;
        if rank == nrows {
            break;
        }
    }
    rank
}

fn clear_denominators(row: &[Rational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, v| num_integer::lcm(acc, v.denom().clone()));
    row.iter()
        .map(|v| (v * Rational::from_integer(lcm.clone())).to_integer())
        .collect()
}

/// Exact basis of `{q : q^T D = 0}` (pressures orthogonal to every
/// interior divergence), from the reduced row echelon form of `D^T`.
pub fn left_null_space(rows: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let nq = rows.len();
    let nv = rows.first().map_or(0, Vec::len);
    // D^T is nv x nq.
    let mut t: Vec<Vec<Rational>> = (0..nv).map(|c| (0..nq).map(|r| rows[r][c].clone()).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..nq {
        let Some(p) = (r..nv).find(|&i| !t[i][col].is_zero()) else {
            continue;
        };
        t.swap(r, p);
        let inv = Rational::one() / &t[r][col];
        for v in t[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..nv {
            if i != r && !t[i][col].is_zero() {
                let f = t[i][col].clone();
                for c in 0..nq {
                    let sub = &f * &t[r][c];
                    t[i][c] -= sub;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == nv {
            break;
        }
    }
    let free: Vec<usize> = (0..nq).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); nq];
            v[f] = Rational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -t[i][f].clone();
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub bubble: BubbleKind,
    pub rank: usize,
    /// Dimension of the patch pressures orthogonal to interior divergences.
    pub dim_bi: usize,
    pub m1_satisfied: bool,
    /// The all-ones pressure lies in the left null space (exact check).
    pub constant_in_kernel: bool,
    pub infsup_by_level: Vec<(usize, f64)>,
}

/// Rank test for the macro patch of `kind`.
pub fn check_m1(kind: BubbleKind) -> Result<StabilityReport, StabilityError> {
    let d = build_macro_matrix(kind)?;
    let rank = d.rank();
    let constant_in_kernel =
        (0..MACRO_COLS).all(|c| d.rows().iter().fold(Rational::zero(), |acc, r| acc + &r[c]).is_zero());
    let dim_bi = MACRO_ROWS - rank;
    Ok(StabilityReport {
        bubble: kind,
        rank,
        dim_bi,
        m1_satisfied: dim_bi == 1,
        constant_in_kernel,
        infsup_by_level: Vec::new(),
    })
}

/// Row order and velocity-function order relating two numberings of the
/// macro patch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MacroPermutation {
    pub rows: [usize; MACRO_ROWS],
    pub functions: [usize; 5],
}

/// Every permutation of rows and velocity functions (components kept
/// together, `x` before `y`) under which `canonical` equals `target`
/// exactly.
pub fn reconcile_numbering(canonical: &MacroMatrix, target: &[Vec<Rational>]) -> Vec<MacroPermutation> {
    let mut found = Vec::new();
    for functions in permutations5() {
        let cols: Vec<usize> = functions.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        // candidates[i]: canonical rows that match target row i
        let candidates: Vec<Vec<usize>> = target
            .iter()
            .map(|t| {
                (0..MACRO_ROWS)
                    .filter(|&r| cols.iter().zip(t).all(|(&c, v)| canonical.get(r, c) == v))
                    .collect()
            })
            .collect();
        let mut rows = [0usize; MACRO_ROWS];
        let mut used = [false; MACRO_ROWS];
        assign_rows(0, &candidates, &mut rows, &mut used, &mut |rows| {
            found.push(MacroPermutation { rows: *rows, functions })
        });
    }
    found
}

fn assign_rows(
    i: usize,
    candidates: &[Vec<usize>],
    rows: &mut [usize; MACRO_ROWS],
    used: &mut [bool; MACRO_ROWS],
    emit: &mut impl FnMut(&[usize; MACRO_ROWS]),
) {
    if i == MACRO_ROWS {
        emit(rows);
        return;
    }
    for &r in &candidates[i] {
        if !used[r] {
            used[r] = true;
            rows[i] = r;
            assign_rows(i + 1, candidates, rows, used, emit);
            used[r] = false;
        }
    }
}

fn permutations5() -> Vec<[usize; 5]> {
    let mut out = Vec::with_capacity(120);
    let mut p = [0, 1, 2, 3, 4];
    heap_permute(5, &mut p, &mut out);
    out.sort_unstable();
    out
}

fn heap_permute(k: usize, p: &mut [usize; 5], out: &mut Vec<[usize; 5]>) {
    if k == 1 {
        out.push(*p);
        return;
    }
    for i in 0..k {
        heap_permute(k - 1, p, out);
        if k.is_multiple_of(2) {
            p.swap(i, k - 1);
        } else {
            p.swap(0, k - 1);
        }
    }
}

/// Smallest generalized eigenvalue of `(B G^{-1} B^T, Mp)` on the
/// mean-zero pressures, with `G` the velocity `H^1` Gram matrix.
pub fn deflated_min_eigenvalue(mesh: &Mesh, dofs: &DofMap, kind: BubbleKind) -> Result<f64, StabilityError> {
    let n = mesh.subdivisions();
    if n > MAX_INFSUP_SUBDIVISIONS {
        return Err(StabilityError::MeshTooLarge(n));
    }
    let zero = [BivariatePolynomial::zero(), BivariatePolynomial::zero()];
    let sys = SaddleSystem::assemble(mesh, dofs, kind, 1.0, &zero, &zero)?;
    let np = sys.pressure_len();
    let nv = sys.velocity_len();

    let g = LdlFactor::factor(&sys.gv, &amd_order(&sys.gv)?)?;
    let bt = sys.b.transpose();
    // Columns of G^{-1} B^T, one per pressure dof.
    let mut rhs_cols = vec![vec![0.0; nv]; np];
    for (i, j, v) in bt.triplets() {
        rhs_cols[j][i] = v;
    }
    let solved: Vec<Vec<f64>> = rhs_cols.iter().map(|c| g.solve(c)).collect();
    let mut s = DMatrix::<f64>::zeros(np, np);
    for (j, y) in solved.iter().enumerate() {
        let by = sys.b.mul_vec(y);
        for i in 0..np {
            s[(i, j)] = by[i];
        }
    }

    let mp = DMatrix::from_fn(np, np, |i, j| sys.mp.get(i, j));
    let m1 = sys.mp.mul_vec(&vec![1.0; np]);
    let area: f64 = m1.iter().sum();
    for i in 0..np {
        for j in 0..np {
            s[(i, j)] += DEFLATION_SHIFT * m1[i] * m1[j] / area;
        }
    }
    let s = (&s + s.transpose()) * 0.5;

    let chol = mp.cholesky().ok_or(StabilityError::EigenSolve)?;
    let l = chol.l();
    let x = l.solve_lower_triangular(&s).ok_or(StabilityError::EigenSolve)?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(StabilityError::EigenSolve)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c).eigenvalues;
    Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Discrete inf-sup constant `sqrt(lambda_min)` (clamped at 0).
pub fn estimate_infsup(mesh: &Mesh, dofs: &DofMap, kind: BubbleKind) -> Result<f64, StabilityError> {
    Ok(deflated_min_eigenvalue(mesh, dofs, kind)?.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfSupRow {
    pub level: usize,
    pub elements: usize,
    pub min_eigenvalue: f64,
    pub beta: f64,
}

/// Inf-sup estimates on levels `1..=max_level`.
pub fn infsup_sweep(kind: BubbleKind, max_level: usize, shear: f64) -> Result<Vec<InfSupRow>, StabilityError> {
    (1..=max_level)
        .map(|level| {
            let mesh = Mesh::for_level(level, shear)?;
            if mesh.subdivisions() > MAX_INFSUP_SUBDIVISIONS {
                return Err(StabilityError::MeshTooLarge(mesh.subdivisions()));
            }
            let dofs = DofMap::new(&mesh);
            let lambda = deflated_min_eigenvalue(&mesh, &dofs, kind)?;
            Ok(InfSupRow {
                level,
                elements: mesh.num_elements(),
                min_eigenvalue: lambda,
                beta: lambda.max(0.0).sqrt(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refelem::{gauss_rule, ShapeTable};

    #[test]
    fn identity_rank() {
        let id: Vec<Vec<Rational>> = (0..3)
            .map(|i| (0..3).map(|j| rat((i == j) as i64, 1)).collect())
            .collect();
        assert_eq!(rational_rank(&id), 3);
        assert_eq!(
            rational_rank(&[vec![rat(1, 2), rat(1, 3)], vec![rat(3, 2), rat(1, 1)]]),
            1
        );
    }

    #[test]
    fn hand_computed_entries() {
        // Lower-left bubble x-derivative against the lower-left pressure hat.
        let cases = [
            (BubbleKind::Standard, rat(2, 9)),
            (BubbleKind::Corner, rat(4, 15)),
            (BubbleKind::Linear, rat(19, 90)),
        ];
        for (kind, want) in cases {
            assert_eq!(build_macro_matrix(kind).unwrap().get(0, 0), &want, "{kind}");
        }
        let d = build_macro_matrix(BubbleKind::Standard).unwrap();
        // centre hat x-derivative against the lower-left and middle-left hats
        assert_eq!(d.get(0, 8), &rat(1, 12));
        assert_eq!(d.get(3, 8), &rat(1, 3));
        assert_eq!(d.get(4, 8), &rat(0, 1));
    }

    #[test]
    fn ranks_and_kernels() {
        let expect = [
            (BubbleKind::Standard, 7),
            (BubbleKind::Corner, 8),
            (BubbleKind::Linear, 8),
            (BubbleKind::QuadSym, 7),
        ];
        for (kind, rank) in expect {
            let r = check_m1(kind).unwrap();
            assert_eq!(r.rank, rank, "{kind}");
            assert!(r.constant_in_kernel);
            let d = build_macro_matrix(kind).unwrap();
            let kernel = left_null_space(d.rows());
            assert_eq!(kernel.len(), 9 - rank);
            for q in &kernel {
                for c in 0..MACRO_COLS {
                    let s = (0..MACRO_ROWS).fold(Rational::zero(), |acc, j| acc + &q[j] * d.get(j, c));
                    assert!(s.is_zero());
                }
            }
        }
    }

    #[test]
    fn stable_kernel_is_constant() {
        for kind in [BubbleKind::Corner, BubbleKind::Linear] {
            let kernel = left_null_space(build_macro_matrix(kind).unwrap().rows());
            assert_eq!(kernel.len(), 1);
            assert!(kernel[0].iter().all(|v| v == &kernel[0][0]));
        }
    }

    #[test]
    fn entries_agree_with_quadrature() {
        for kind in BubbleKind::ALL {
            let d = build_macro_matrix(kind).unwrap().to_f64();
            let table = ShapeTable::new(kind, 6).unwrap();
            let rule = gauss_rule(6).unwrap();
            let mut approx = vec![vec![0.0; MACRO_COLS]; MACRO_ROWS];
            for (e, &(ex, ey)) in MACRO_ELEMENTS.iter().enumerate() {
                for (qi, w) in rule.weights().iter().enumerate() {
                    let vals = &table.values[qi];
                    let grads = &table.gradients[qi];
                    for (local, &(ox, oy)) in LOCAL_OFFSETS.iter().enumerate() {
                        let row = (ex + ox) + 3 * (ey + oy);
                        for c in 0..2 {
                            approx[row][2 * e + c] += w * grads[4][c] * vals[local];
                            approx[row][8 + c] += w * grads[CENTRE_LOCAL[e]][c] * vals[local];
                        }
                    }
                }
            }
            for (r, a) in d.iter().zip(&approx) {
                for (u, v) in r.iter().zip(a) {
                    assert!((u - v).abs() < 1e-13, "{kind}: {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn affine_map_keeps_rank() {
        let a = [[rat(1, 2), rat(1, 5)], [rat(0, 1), rat(1, 2)]];
        for kind in BubbleKind::ALL {
            let d = build_macro_matrix_affine(kind, a.clone()).unwrap();
            assert_eq!(d.rank(), check_m1(kind).unwrap().rank);
        }
        let singular = [[rat(1, 1), rat(2, 1)], [rat(1, 2), rat(1, 1)]];
        assert!(build_macro_matrix_affine(BubbleKind::Corner, singular).is_err());
    }

    #[test]
    fn identity_reconciliation_is_found() {
        let d = build_macro_matrix(BubbleKind::Linear).unwrap();
        let perms = reconcile_numbering(&d, d.rows());
        let id = MacroPermutation {
            rows: [0, 1, 2, 3, 4, 5, 6, 7, 8],
            functions: [0, 1, 2, 3, 4],
        };
        assert!(perms.contains(&id));
        assert_eq!(d.permuted(&id), d);
        assert_eq!(permutations5().len(), 120);
    }

    #[test]
    fn infsup_rejects_large_meshes() {
        let m = Mesh::structured(64, 0.0).unwrap();
        let d = DofMap::new(&m);
        assert_eq!(
            estimate_infsup(&m, &d, BubbleKind::Corner).unwrap_err(),
            StabilityError::MeshTooLarge(64)
        );
    }

    #[test]
    fn infsup_small_meshes() {
        let m = Mesh::structured(4, 0.0).unwrap();
        let d = DofMap::new(&m);
        let beta = estimate_infsup(&m, &d, BubbleKind::Corner).unwrap();
        assert!(beta > 0.05 && beta < 1.5, "{beta}");
        assert!(deflated_min_eigenvalue(&m, &d, BubbleKind::Standard).unwrap() <= 1e-10);
    }
}
