//! Exact bivariate polynomials with rational coefficients.
//!
//! Everything that has to be exact (bubble functions, the macro-element
//! divergence matrix, manufactured right-hand sides) is built from
//! [`BivariatePolynomial`]. Floating-point evaluation goes through
//! [`FloatPolynomial`], a dense Horner table compiled once from the exact
//! coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always normalized (lowest terms, positive
/// denominator).
pub type Rational = BigRational;

/// Largest power allowed in either variable.
pub const MAX_DEGREE: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("degree {degree} exceeds the per-variable bound {MAX_DEGREE}")]
    DegreeOverflow { degree: u32 },
}

/// Integer shorthand for building rationals.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Converts a rational to the nearest `f64`.
pub fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: fall back to a scaled division.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

/// Sparse polynomial `sum c_ij x^i y^j` with exact coefficients.
///
/// Zero coefficients are never stored, so structural equality is
/// mathematical equality.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BivariatePolynomial {
    terms: BTreeMap<(u32, u32), Rational>,
}

impl BivariatePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(0, 0, c);
        p
    }

    pub fn x() -> Self {
        Self::monomial(Rational::one(), 1, 0).expect("degree 1")
    }

    pub fn y() -> Self {
        Self::monomial(Rational::one(), 0, 1).expect("degree 1")
    }

    /// `c * x^i * y^j`.
    pub fn monomial(c: Rational, i: u32, j: u32) -> Result<Self, PolyError> {
        check_degree(i.max(j))?;
        let mut p = Self::zero();
        p.add_term(i, j, c);
        Ok(p)
    }

    /// Builds a polynomial from `(x-power, y-power, coefficient)` triples;
    /// repeated monomials are summed.
    pub fn from_terms<I>(terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (u32, u32, Rational)>,
    {
        let mut p = Self::zero();
        for (i, j, c) in terms {
            check_degree(i.max(j))?;
            p.add_term(i, j, c);
        }
        Ok(p)
    }

    /// `a + b x + c y`, handy for linear factors.
    pub fn linear(a: Rational, b: Rational, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(0, 0, a);
        p.add_term(1, 0, b);
        p.add_term(0, 1, c);
        p
    }

    fn add_term(&mut self, i: u32, j: u32, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry((i, j)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Iterates `((i, j), c)` in increasing `(i, j)` order.
    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, i: u32, j: u32) -> Rational {
        self.terms.get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn degree_x(&self) -> u32 {
        self.terms.keys().map(|&(i, _)| i).max().unwrap_or(0)
    }

    pub fn degree_y(&self) -> u32 {
        self.terms.keys().map(|&(_, j)| j).max().unwrap_or(0)
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(&k, c)| (k, c * s)).collect(),
        }
    }

    /// Exact product. Fails if a power would exceed [`MAX_DEGREE`].
    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        let dx = self.degree_x() + other.degree_x();
        let dy = self.degree_y() + other.degree_y();
        if !self.is_zero() && !other.is_zero() {
            check_degree(dx.max(dy))?;
        }
        let mut out = Self::zero();
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &other.terms {
                out.add_term(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        Ok(out)
    }

    /// Product of several factors.
    pub fn product<'a, I>(factors: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = &'a BivariatePolynomial>,
    {
        factors.into_iter().try_fold(Self::one(), |acc, f| acc.mul(f))
    }

    /// Exact partial derivative.
    pub fn diff(&self, var: Var) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            match var {
                Var::X if i > 0 => out.add_term(i - 1, j, c * Rational::from_integer(i.into())),
                Var::Y if j > 0 => out.add_term(i, j - 1, c * Rational::from_integer(j.into())),
                _ => {}
            }
        }
        out
    }

    /// Both partial derivatives.
    pub fn gradient(&self) -> [Self; 2] {
        [self.diff(Var::X), self.diff(Var::Y)]
    }

    /// Sum of second derivatives.
    pub fn laplacian(&self) -> Self {
        &self.diff(Var::X).diff(Var::X) + &self.diff(Var::Y).diff(Var::Y)
    }

    /// Exact integral over the unit square: `c_ij / ((i+1)(j+1))` summed.
    pub fn integrate_unit_square(&self) -> Rational {
        self.terms
            .iter()
            .map(|(&(i, j), c)| c / Rational::from_integer(BigInt::from((i + 1) * (j + 1))))
            .fold(Rational::zero(), |acc, t| acc + t)
    }

    /// Exact value at a rational point.
    pub fn eval_exact(&self, x: &Rational, y: &Rational) -> Rational {
        let mut sum = Rational::zero();
        for (&(i, j), c) in &self.terms {
            sum += c * pow(x, i) * pow(y, j);
        }
        sum
    }

    /// Floating-point value; compiles a Horner table on each call; use
    /// [`BivariatePolynomial::to_float`] in hot loops.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.to_float().eval(x, y)
    }

    /// Substitutes a constant for one variable, leaving a polynomial in the
    /// other.
    pub fn substitute(&self, var: Var, value: &Rational) -> Self {
        let mut out = Self::zero();
        for (&(i, j), c) in &self.terms {
            match var {
                Var::X => out.add_term(0, j, c * pow(value, i)),
                Var::Y => out.add_term(i, 0, c * pow(value, j)),
            }
        }
        out
    }

    pub fn to_float(&self) -> FloatPolynomial {
        FloatPolynomial::from_exact(self)
    }
}

fn check_degree(d: u32) -> Result<(), PolyError> {
    if d > MAX_DEGREE {
        Err(PolyError::DegreeOverflow { degree: d })
    } else {
        Ok(())
    }
}

fn pow(base: &Rational, e: u32) -> Rational {
    num_traits::pow::pow(base.clone(), e as usize)
}

impl Add for &BivariatePolynomial {
    type Output = BivariatePolynomial;

    fn add(self, rhs: Self) -> BivariatePolynomial {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, c.clone());
        }
        out
    }
}

impl Sub for &BivariatePolynomial {
    type Output = BivariatePolynomial;

    fn sub(self, rhs: Self) -> BivariatePolynomial {
        let mut out = self.clone();
        for (&(i, j), c) in &rhs.terms {
            out.add_term(i, j, -c.clone());
        }
        out
    }
}

impl Neg for &BivariatePolynomial {
    type Output = BivariatePolynomial;

    fn neg(self) -> BivariatePolynomial {
        self.scale(&-Rational::one())
    }
}

impl fmt::Debug for BivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for BivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (n, (&(i, j), c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if n == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            write!(f, "{}", c.abs())?;
            match i {
                0 => {}
                1 => write!(f, "*x")?,
                _ => write!(f, "*x^{i}")?,
            }
            match j {
                0 => {}
                1 => write!(f, "*y")?,
                _ => write!(f, "*y^{j}")?,
            }
        }
        Ok(())
    }
}

/// Dense `f64` coefficient table evaluated by nested Horner schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatPolynomial {
    // coeffs[i][j] multiplies x^i y^j
    coeffs: Vec<Vec<f64>>,
}

impl FloatPolynomial {
    pub fn from_exact(p: &BivariatePolynomial) -> Self {
        if p.is_zero() {
            return Self { coeffs: Vec::new() };
        }
        let (dx, dy) = (p.degree_x() as usize, p.degree_y() as usize);
        let mut coeffs = vec![vec![0.0; dy + 1]; dx + 1];
        for (&(i, j), c) in p.terms() {
            coeffs[i as usize][j as usize] = rat_to_f64(c);
        }
        Self { coeffs }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, row| {
            let inner = row.iter().rev().fold(0.0, |a, &c| a * y + c);
            acc * x + inner
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        rat(n, d)
    }

    fn one_minus(v: Var) -> BivariatePolynomial {
        match v {
            Var::X => BivariatePolynomial::linear(r(1, 1), r(-1, 1), r(0, 1)),
            Var::Y => BivariatePolynomial::linear(r(1, 1), r(0, 1), r(-1, 1)),
        }
    }

    fn standard_bubble() -> BivariatePolynomial {
        let x = BivariatePolynomial::x();
        let y = BivariatePolynomial::y();
        let base = one_minus(Var::X).mul(&one_minus(Var::Y)).unwrap().scale(&r(16, 1));
        base.mul(&x.mul(&y).unwrap()).unwrap()
    }

    #[test]
    fn x_times_y_is_xy() {
        let p = BivariatePolynomial::x().mul(&BivariatePolynomial::y()).unwrap();
        assert_eq!(p, BivariatePolynomial::monomial(r(1, 1), 1, 1).unwrap());
    }

    #[test]
    fn standard_bubble_expansion() {
        // 16xy(1-x)(1-y) = 16xy - 16x^2y - 16xy^2 + 16x^2y^2
        let expected =
            BivariatePolynomial::from_terms([(1, 1, r(16, 1)), (2, 1, r(-16, 1)), (1, 2, r(-16, 1)), (2, 2, r(16, 1))])
                .unwrap();
        assert_eq!(standard_bubble(), expected);
    }

    #[test]
    fn adding_zero_is_identity() {
        let b = standard_bubble();
        assert_eq!(&b + &BivariatePolynomial::zero(), b);
    }

    #[test]
    fn cancellation_leaves_no_zero_terms() {
        let b = standard_bubble();
        let z = &b - &b;
        assert!(z.is_zero());
        assert_eq!(z.num_terms(), 0);
    }

    #[test]
    fn derivatives() {
        let x2y = BivariatePolynomial::monomial(r(1, 1), 2, 1).unwrap();
        assert_eq!(x2y.diff(Var::X), BivariatePolynomial::monomial(r(2, 1), 1, 1).unwrap());
        assert!(BivariatePolynomial::constant(r(7, 3)).diff(Var::Y).is_zero());

        // Hand expansion: 16 y(1-y)(1-2x) = 16y - 16y^2 - 32xy + 32xy^2
        let expected =
            BivariatePolynomial::from_terms([(0, 1, r(16, 1)), (0, 2, r(-16, 1)), (1, 1, r(-32, 1)), (1, 2, r(32, 1))])
                .unwrap();
        assert_eq!(standard_bubble().diff(Var::X), expected);
    }

    #[test]
    fn unit_square_integrals() {
        let xy = BivariatePolynomial::monomial(r(1, 1), 1, 1).unwrap();
        assert_eq!(xy.integrate_unit_square(), r(1, 4));
        assert_eq!(BivariatePolynomial::one().integrate_unit_square(), r(1, 1));
        // 16 * (int_0^1 x(1-x))^2 = 16/36
        assert_eq!(standard_bubble().integrate_unit_square(), r(4, 9));
    }

    #[test]
    fn evaluation() {
        assert!((standard_bubble().eval(0.5, 0.5) - 1.0).abs() < 1e-15);
        assert_eq!(BivariatePolynomial::zero().eval(0.3, -2.0), 0.0);
        assert_eq!(standard_bubble().eval_exact(&r(1, 2), &r(1, 2)), r(1, 1));
    }

    #[test]
    fn float_eval_matches_exact_on_lattice() {
        let p = BivariatePolynomial::from_terms([
            (0, 0, r(-4, 3)),
            (3, 2, r(1, 1)),
            (1, 1, r(1, 1)),
            (4, 0, r(-7, 11)),
            (0, 4, r(5, 9)),
        ])
        .unwrap();
        let fp = p.to_float();
        for a in 0..5 {
            for b in 0..5 {
                let (xr, yr) = (r(a, 4), r(b, 4));
                let exact = rat_to_f64(&p.eval_exact(&xr, &yr));
                let approx = fp.eval(a as f64 / 4.0, b as f64 / 4.0);
                assert!((exact - approx).abs() < 1e-14, "{exact} vs {approx}");
            }
        }
    }

    #[test]
    fn degree_overflow_is_rejected() {
        let big = BivariatePolynomial::monomial(r(1, 1), 9, 0).unwrap();
        assert_eq!(big.mul(&big), Err(PolyError::DegreeOverflow { degree: 18 }));
        assert!(BivariatePolynomial::monomial(r(1, 1), 17, 0).is_err());
    }

    #[test]
    fn substitution_on_edges() {
        let b = standard_bubble();
        for v in [Var::X, Var::Y] {
            assert!(b.substitute(v, &r(0, 1)).is_zero());
            assert!(b.substitute(v, &r(1, 1)).is_zero());
        }
    }

    #[test]
    fn rationals_are_normalized() {
        let q = rat(6, -4);
        assert_eq!(q.numer(), &BigInt::from(-3));
        assert_eq!(q.denom(), &BigInt::from(2));
    }

    fn small_poly() -> impl Strategy<Value = BivariatePolynomial> {
        prop::collection::vec((0u32..5, 0u32..5, -20i64..20, 1i64..9), 0..8).prop_map(|ts| {
            BivariatePolynomial::from_terms(ts.into_iter().map(|(i, j, n, d)| (i, j, rat(n, d)))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn integration_is_additive(p in small_poly(), q in small_poly()) {
            prop_assert_eq!(
                (&p + &q).integrate_unit_square(),
                p.integrate_unit_square() + q.integrate_unit_square()
            );
        }

        #[test]
        fn fundamental_theorem_in_x(p in small_poly()) {
            // int_0^1 int_0^1 dp/dx dx dy == int_0^1 (p(1,y) - p(0,y)) dy
            let lhs = p.diff(Var::X).integrate_unit_square();
            let edge = &p.substitute(Var::X, &rat(1, 1)) - &p.substitute(Var::X, &rat(0, 1));
            prop_assert_eq!(lhs, edge.integrate_unit_square());
        }

        #[test]
        fn multiplication_commutes_and_distributes(p in small_poly(), q in small_poly()) {
            let pq = p.mul(&q).unwrap();
            prop_assert_eq!(&pq, &q.mul(&p).unwrap());
            let s = &p + &q;
            prop_assert_eq!(s.mul(&q).unwrap(), &pq + &q.mul(&q).unwrap());
        }
    }
}
