//! Randomized invariants of the exact rank and of the saddle-point solver.

use proptest::prelude::*;
use quadmini::assembly::SaddleSystem;
use quadmini::mesh::{DofMap, Mesh};
use quadmini::poly::{rat, BivariatePolynomial as P, Rational};
use quadmini::refelem::BubbleKind;
use quadmini::solver::{solve_saddle, SolveOutcome};
use quadmini::sparse::SparseMatrix;
use quadmini::stability::{build_macro_matrix, rational_rank};

fn kind_strategy() -> impl Strategy<Value = BubbleKind> {
    prop_oneof![
        Just(BubbleKind::Standard),
        Just(BubbleKind::Corner),
        Just(BubbleKind::Linear),
        Just(BubbleKind::QuadSym),
    ]
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (1i64..50, 1i64..50, any::<bool>()).prop_map(|(n, d, neg)| rat(if neg { -n } else { n }, d))
}

fn small_poly() -> impl Strategy<Value = P> {
    prop::collection::vec(-5i64..=5, 6).prop_map(|c| {
        let terms = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
        P::from_terms(terms.iter().zip(&c).map(|(&(i, j), &v)| (i, j, rat(v, 1)))).unwrap()
    })
}

fn solve(mesh: &Mesh, kind: BubbleKind, f: &[P; 2]) -> SolveOutcome {
    let dofs = DofMap::new(mesh);
    let zero = [P::zero(), P::zero()];
    solve_saddle(&SaddleSystem::assemble(mesh, &dofs, kind, 1.0, f, &zero).unwrap()).unwrap()
}

fn scale_rows_cols(m: &SparseMatrix, dr: &[f64], dc: &[f64]) -> SparseMatrix {
    let t = m.triplets().map(|(i, j, v)| (i, j, dr[i] * v * dc[j])).collect();
    SparseMatrix::from_triplets(m.nrows(), m.ncols(), t)
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rank_survives_row_scaling_and_permutation(
        kind in kind_strategy(),
        scales in prop::collection::vec(nonzero_rational(), 9),
        rows in Just((0..9).collect::<Vec<usize>>()).prop_shuffle(),
        cols in Just((0..10).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let d = build_macro_matrix(kind).unwrap();
        let base = rational_rank(d.rows());
        let shuffled: Vec<Vec<Rational>> = rows
            .iter()
            .zip(&scales)
            .map(|(&r, s)| cols.iter().map(|&c| d.get(r, c) * s).collect())
            .collect();
        prop_assert_eq!(rational_rank(&shuffled), base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solution_is_linear_in_the_load(
        f1 in (small_poly(), small_poly()),
        f2 in (small_poly(), small_poly()),
        shear in prop_oneof![Just(0.0), Just(0.2)],
        linear in any::<bool>(),
    ) {
        let kind = if linear { BubbleKind::Linear } else { BubbleKind::Corner };
        let mesh = Mesh::structured(4, shear).unwrap();
        let a = solve(&mesh, kind, &[f1.0.clone(), f1.1.clone()]);
        let b = solve(&mesh, kind, &[f2.0.clone(), f2.1.clone()]);
        let sum = solve(&mesh, kind, &[&f1.0 + &f2.0, &f1.1 + &f2.1]);
        let expect: Vec<f64> = a.stacked().iter().zip(b.stacked()).map(|(x, y)| x + y).collect();
        let got = sum.stacked();
        let n = got.len() - 1; // the multiplier is zero up to roundoff
        let scale = expect[..n].iter().fold(1e-12f64, |m, x| m.max(x.abs()));
        let err = got[..n].iter().zip(&expect[..n]).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        prop_assert!(err <= 1e-10 * scale, "superposition error {err:e} at scale {scale:e}");
    }

    #[test]
    fn solution_is_invariant_under_diagonal_scaling(
        seed in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        let mesh = Mesh::structured(4, 0.1).unwrap();
        let dofs = DofMap::new(&mesh);
        let f = [P::linear(rat(1, 1), rat(-2, 1), rat(3, 1)), P::x().mul(&P::y()).unwrap()];
        let g = [P::zero(), P::zero()];
        let base = SaddleSystem::assemble(&mesh, &dofs, BubbleKind::Corner, 1.0, &f, &g).unwrap();
        let reference = solve_saddle(&base).unwrap();

        // Factors within one decade either way; the relative pivot test for
        // singularity is itself not scale invariant.
        let factor = |i: usize| 10f64.powf(seed[i % seed.len()] * ((i * 2654435761) % 97) as f64 / 97.0);
        let dv: Vec<f64> = (0..base.velocity_len()).map(factor).collect();
        let dp: Vec<f64> = (0..base.pressure_len()).map(|i| factor(i + 7)).collect();
        let mut scaled = base.clone();
        scaled.a = scale_rows_cols(&base.a, &dv, &dv);
        scaled.b = scale_rows_cols(&base.b, &dp, &dv);
        scaled.load = base.load.iter().zip(&dv).map(|(l, d)| l * d).collect();
        scaled.lift = base.lift.iter().zip(&dv).map(|(l, d)| l * d).collect();
        scaled.pressure_rhs = base.pressure_rhs.iter().zip(&dp).map(|(r, d)| r * d).collect();
        scaled.mean_weights = base.mean_weights.iter().zip(&dp).map(|(c, d)| c * d).collect();
        let out = solve_saddle(&scaled).unwrap();
        prop_assert!(out.is_solved());

        let u: Vec<f64> = out.velocity.iter().zip(&dv).map(|(y, d)| y * d).collect();
        let p: Vec<f64> = out.pressure.iter().zip(&dp).map(|(y, d)| y * d).collect();
        prop_assert!(max_rel_diff(&u, &reference.velocity) <= 1e-9);
        prop_assert!(max_rel_diff(&p, &reference.pressure) <= 1e-9);
    }
}
