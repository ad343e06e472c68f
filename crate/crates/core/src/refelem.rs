//! Reference square `(0,1)^2`: bilinear hats, bubble variants and tensor
//! Gauss-Legendre quadrature.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::poly::{rat, BivariatePolynomial, Rational};

/// The element bubble used to enrich the velocity space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BubbleKind {
    /// `16 xy(1-x)(1-y)`
    Standard,
    /// `64 (1-x)^2 (1-y)^2 xy`, weighted towards the lower-left vertex.
    Corner,
    /// `8 (1+x+y) xy(1-x)(1-y)`
    Linear,
    /// `xy (x^2+y^2-x-y+33/2) (1-x)(1-y)`
    QuadSym,
}

impl BubbleKind {
    pub const ALL: [BubbleKind; 4] = [
        BubbleKind::Standard,
        BubbleKind::Corner,
        BubbleKind::Linear,
        BubbleKind::QuadSym,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BubbleKind::Standard => "standard",
            BubbleKind::Corner => "corner",
            BubbleKind::Linear => "linear",
            BubbleKind::QuadSym => "quadsym",
        }
    }
}

impl fmt::Display for BubbleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown bubble kind `{0}` (expected standard, corner, linear or quadsym)")]
pub struct UnknownBubble(pub String);

impl FromStr for BubbleKind {
    type Err = UnknownBubble;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BubbleKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownBubble(s.to_string()))
    }
}

fn one_minus_x() -> BivariatePolynomial {
    BivariatePolynomial::linear(rat(1, 1), rat(-1, 1), rat(0, 1))
}

fn one_minus_y() -> BivariatePolynomial {
    BivariatePolynomial::linear(rat(1, 1), rat(0, 1), rat(-1, 1))
}

/// Bilinear hats on `(0,1)^2`, counterclockwise from the lower-left vertex:
/// `(0,0), (1,0), (1,1), (0,1)`.
pub fn q1_basis() -> [BivariatePolynomial; 4] {
    let x = BivariatePolynomial::x();
    let y = BivariatePolynomial::y();
    let (mx, my) = (one_minus_x(), one_minus_y());
    let prod = |a: &BivariatePolynomial, b: &BivariatePolynomial| a.mul(b).expect("bilinear");
    [prod(&mx, &my), prod(&x, &my), prod(&x, &y), prod(&mx, &y)]
}

/// Reference vertex coordinates matching [`q1_basis`].
pub const Q1_VERTICES: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

/// `xy(1-x)(1-y)`: the lowest-degree polynomial vanishing on the boundary.
fn edge_factor() -> BivariatePolynomial {
    BivariatePolynomial::product([
        &BivariatePolynomial::x(),
        &BivariatePolynomial::y(),
        &one_minus_x(),
        &one_minus_y(),
    ])
    .expect("degree 2")
}

/// Exact bubble polynomial; every variant vanishes on the boundary of the
/// reference square and equals 1 at its centre.
pub fn bubble(kind: BubbleKind) -> BivariatePolynomial {
    let base = edge_factor();
    let weight = match kind {
        BubbleKind::Standard => BivariatePolynomial::constant(rat(16, 1)),
        BubbleKind::Corner => one_minus_x().mul(&one_minus_y()).expect("bilinear").scale(&rat(64, 1)),
        BubbleKind::Linear => BivariatePolynomial::linear(rat(8, 1), rat(8, 1), rat(8, 1)),
        BubbleKind::QuadSym => BivariatePolynomial::from_terms([
            (2, 0, rat(1, 1)),
            (0, 2, rat(1, 1)),
            (1, 0, rat(-1, 1)),
            (0, 1, rat(-1, 1)),
            (0, 0, rat(33, 2)),
        ])
        .expect("degree 2"),
    };
    base.mul(&weight).expect("degree 4")
}

/// Exact integral of the bubble over the reference square.
pub fn bubble_mass(kind: BubbleKind) -> Rational {
    bubble(kind).integrate_unit_square()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuadratureError {
    #[error("Gauss rule order {0} outside 1..=8")]
    OrderOutOfRange(usize),
}

pub const MAX_GAUSS_ORDER: usize = 8;

/// Tensor-product rule on `(0,1)^2`; weights sum to the area 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 2], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(p, w)| w * f(p[0], p[1])).sum()
    }
}

/// `n x n` Gauss-Legendre rule, exact for degree `2n-1` in each variable.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule, QuadratureError> {
    if !(1..=MAX_GAUSS_ORDER).contains(&n) {
        return Err(QuadratureError::OrderOutOfRange(n));
    }
    let (nodes, weights) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n);
    let mut w2 = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            points.push([nodes[i], nodes[j]]);
            w2.push(weights[i] * weights[j]);
        }
    }
    Ok(QuadratureRule { points, weights: w2 })
}

/// Gauss-Legendre nodes and weights mapped to `(0,1)`, via Newton iteration
/// on the Legendre polynomial.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        // t is the i-th largest root; mirror it for the smaller one.
        nodes[i] = 0.5 * (1.0 - t);
        nodes[n - 1 - i] = 0.5 * (1.0 + t);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `(P_n(t), P_n'(t))` by the three-term recurrence.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Values and reference gradients of the five local velocity functions
/// (four hats, then the bubble) at every point of a rule. Pressure uses the
/// first four.
#[derive(Debug, Clone)]
pub struct ShapeTable {
    pub rule: QuadratureRule,
    pub values: Vec<[f64; 5]>,
    pub gradients: Vec<[[f64; 2]; 5]>,
}

impl ShapeTable {
    pub fn new(kind: BubbleKind, order: usize) -> Result<Self, QuadratureError> {
        let rule = gauss_rule(order)?;
        let mut funcs: Vec<BivariatePolynomial> = q1_basis().into();
        funcs.push(bubble(kind));
        let vals: Vec<_> = funcs.iter().map(|f| f.to_float()).collect();
        let grads: Vec<_> = funcs
            .iter()
            .map(|f| {
                let [gx, gy] = f.gradient();
                [gx.to_float(), gy.to_float()]
            })
            .collect();
        let mut values = Vec::with_capacity(rule.len());
        let mut gradients = Vec::with_capacity(rule.len());
        for p in rule.points() {
            let mut v = [0.0; 5];
            let mut g = [[0.0; 2]; 5];
            for a in 0..5 {
                v[a] = vals[a].eval(p[0], p[1]);
                g[a] = [grads[a][0].eval(p[0], p[1]), grads[a][1].eval(p[0], p[1])];
            }
            values.push(v);
            gradients.push(g);
        }
        Ok(Self {
            rule,
            values,
            gradients,
        })
    }
}
