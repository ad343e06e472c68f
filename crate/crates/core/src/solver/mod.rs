//! Direct solution of the symmetric indefinite Stokes system.
//!
//! The full block matrix (velocity, pressure, mean multiplier) is factored
//! by [`ldl::LdlFactor`] under an AMD ordering that is post-processed so
//! each pressure unknown is eliminated after all velocity unknowns it
//! couples to. Under that constraint every leading block is nonsingular
//! exactly when the divergence rows involved are independent, so a
//! spurious pressure mode shows up as a (numerically) zero pivot rather
//! than as a breakdown of the ordering.

pub mod ldl;

use thiserror::Error;

use crate::assembly::SaddleSystem;
use crate::sparse::{dot, norm2, SparseMatrix};

pub use ldl::{amd_order, LdlError, LdlFactor};

/// Pivots below this fraction of the largest pivot are treated as zero.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;
/// Relative residual certified for every solved system.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Residual above which refinement is considered stagnant.
pub const STAGNATION_RESIDUAL: f64 = 1e-6;
const MAX_REFINEMENT_STEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("the mean-zero pressure constraint has not been attached")]
    MissingMeanConstraint,
    #[error(transparent)]
    Factorization(#[from] LdlError),
    #[error("relative residual {0:e} above tolerance after refinement")]
    Inaccurate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    Singular,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// Reduced (interior) velocity, component-major.
    pub velocity: Vec<f64>,
    /// Pressure with zero mean.
    pub pressure: Vec<f64>,
    pub multiplier: f64,
    pub relative_residual: f64,
    pub status: SolveStatus,
    /// `min |pivot| / max |pivot|` of the factorization (0 on an exact zero
    /// pivot).
    pub pivot_ratio: f64,
}

impl SolveOutcome {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }

    fn singular(system: &SaddleSystem, pivot_ratio: f64) -> Self {
        Self {
            velocity: vec![0.0; system.velocity_len()],
            pressure: vec![0.0; system.pressure_len()],
            multiplier: 0.0,
            relative_residual: f64::NAN,
            status: SolveStatus::Singular,
            pivot_ratio,
        }
    }

    /// Unknowns stacked as in [`SaddleSystem::kkt_matrix`].
    pub fn stacked(&self) -> Vec<f64> {
        let mut x = self.velocity.clone();
        x.extend_from_slice(&self.pressure);
        x.push(self.multiplier);
        x
    }
}

/// Elimination order for the block matrix of `system` (`perm[new] = old`).
///
/// Velocity unknowns come first in index space (`0..nv`), pressure next,
/// the multiplier last. The multiplier is placed just before the final
/// pressure unknown so that the leading block never contains every
/// pressure row without the mean constraint.
pub fn saddle_ordering(kkt: &SparseMatrix, velocity_len: usize) -> Result<Vec<usize>, SolverError> {
    let n = kkt.nrows() - 1;
    let lambda = n;
    let core = kkt.select(n, |i| (i < n).then_some(i), n, |j| (j < n).then_some(j));
    let amd = amd_order(&core)?;
    let mut pos = vec![0usize; n];
    for (p, &node) in amd.iter().enumerate() {
        pos[node] = p;
    }
    // Each node sorts by (key, class, own position); pressure keys are
    // pushed past their last velocity neighbour.
    let mut keyed: Vec<(usize, u8, usize, usize)> = (0..n)
        .map(|node| {
            if node < velocity_len {
                (pos[node], 0, pos[node], node)
            } else {
                let key = core
                    .row(node)
                    .filter(|&(j, _)| j < velocity_len)
                    .map(|(j, _)| pos[j])
                    .fold(pos[node], usize::max);
                (key, 1, pos[node], node)
            }
        })
        .collect();
    keyed.sort_unstable();
    let mut order: Vec<usize> = keyed.into_iter().map(|t| t.3).collect();
    let last = order.pop().expect("non-empty system");
    order.push(lambda);
    order.push(last);
    Ok(order)
}

/// Solves the constrained saddle-point system by sparse `L D L^T` with
/// iterative refinement.
pub fn solve_saddle(system: &SaddleSystem) -> Result<SolveOutcome, SolverError> {
    if !system.mean_constrained {
        return Err(SolverError::MissingMeanConstraint);
    }
    let kkt = system.kkt_matrix();
    let rhs = system.kkt_rhs();
    let perm = saddle_ordering(&kkt, system.velocity_len())?;
    let factor = match LdlFactor::factor(&kkt, &perm) {
        Ok(f) => f,
        Err(LdlError::ZeroPivot(_)) => return Ok(SolveOutcome::singular(system, 0.0)),
        Err(e) => return Err(e.into()),
    };
    let pivot_ratio = factor.pivot_ratio();
    if pivot_ratio < SINGULAR_PIVOT_RATIO {
        return Ok(SolveOutcome::singular(system, pivot_ratio));
    }

    let bnorm = norm2(&rhs);
    let mut x = factor.solve(&rhs);
    let mut res = relative_residual(&kkt, &x, &rhs, bnorm);
    for _ in 0..MAX_REFINEMENT_STEPS {
        if res <= 1e-3 * RESIDUAL_TOLERANCE {
            break;
        }
        let r: Vec<f64> = rhs.iter().zip(kkt.mul_vec(&x)).map(|(b, ax)| b - ax).collect();
        let dx = factor.solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let cres = relative_residual(&kkt, &candidate, &rhs, bnorm);
        if cres >= res {
            break;
        }
        x = candidate;
        res = cres;
    }

    let nv = system.velocity_len();
    let np = system.pressure_len();
    let mut pressure = x[nv..nv + np].to_vec();
    project_mean_zero(&mut pressure, &system.mean_weights);
    let outcome = SolveOutcome {
        velocity: x[..nv].to_vec(),
        pressure,
        multiplier: x[nv + np],
        relative_residual: 0.0,
        status: SolveStatus::Solved,
        pivot_ratio,
    };
    let res = verify_residual(system, &outcome);
    if res > STAGNATION_RESIDUAL {
        return Ok(SolveOutcome {
            relative_residual: res,
            ..SolveOutcome::singular(system, pivot_ratio)
        });
    }
    if res > RESIDUAL_TOLERANCE {
        return Err(SolverError::Inaccurate(res));
    }
    Ok(SolveOutcome {
        relative_residual: res,
        ..outcome
    })
}

/// Removes the weighted mean `c^T p / c^T 1` from `p`.
pub fn project_mean_zero(p: &mut [f64], weights: &[f64]) {
    let area: f64 = weights.iter().sum();
    let mean = dot(weights, p) / area;
    p.iter_mut().for_each(|v| *v -= mean);
}

fn relative_residual(k: &SparseMatrix, x: &[f64], b: &[f64], bnorm: f64) -> f64 {
    let r: Vec<f64> = b.iter().zip(k.mul_vec(x)).map(|(bi, kx)| bi - kx).collect();
    let rn = norm2(&r);
    if bnorm == 0.0 {
        rn
    } else {
        rn / bnorm
    }
}

/// `||K x - b|| / ||b||` for the full block system (`0` when both vanish).
pub fn verify_residual(system: &SaddleSystem, outcome: &SolveOutcome) -> f64 {
    let kkt = system.kkt_matrix();
    let rhs = system.kkt_rhs();
    relative_residual(&kkt, &outcome.stacked(), &rhs, norm2(&rhs))
}
