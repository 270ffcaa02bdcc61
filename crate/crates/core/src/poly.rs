//! Sparse multivariate polynomials with complex coefficients over chart
//! coordinates, plus exact integration over coordinate boxes.
//!
//! All component functions of the engine live here: coefficients of forms,
//! transition-matrix entries, gauge fields. Spatial dependence is polynomial
//! so that the de Rham differential is exact and identities like `d̂² = 0`
//! hold to cancellation rather than to a discretization error.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Coefficients below this absolute size (|re| + |im|) are dropped from the
/// sparse term map. Well under every test tolerance (1e-9 / 1e-12).
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// A sparse polynomial in `num_vars` chart coordinates.
///
/// Terms map an exponent vector (one entry per coordinate) to a complex
/// coefficient. The zero polynomial is the empty map.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolynomialRecord", try_from = "PolynomialRecord")]
pub struct Polynomial {
    num_vars: usize,
    terms: BTreeMap<Vec<u16>, Complex64>,
}

/// Serialized shape: a list of `{exponents, coeff: [re, im]}` records, with
/// exponent order fixed by the chart coordinate order.
#[derive(Serialize, Deserialize)]
struct PolynomialRecord {
    num_vars: usize,
    terms: Vec<TermRecord>,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    exponents: Vec<u16>,
    coeff: [f64; 2],
}

impl From<Polynomial> for PolynomialRecord {
    fn from(p: Polynomial) -> Self {
        PolynomialRecord {
            num_vars: p.num_vars,
            terms: p
                .terms
                .into_iter()
                .map(|(e, c)| TermRecord { exponents: e, coeff: [c.re, c.im] })
                .collect(),
        }
    }
}

impl TryFrom<PolynomialRecord> for Polynomial {
    type Error = Error;

    fn try_from(r: PolynomialRecord) -> Result<Self, Error> {
        let mut p = Polynomial::zero(r.num_vars);
        for t in r.terms {
            if t.exponents.len() != r.num_vars {
                return Err(Error::DimensionMismatch {
                    context: "polynomial term exponent vector".into(),
                    expected: r.num_vars,
                    got: t.exponents.len(),
                });
            }
            p.add_term(t.exponents, Complex64::new(t.coeff[0], t.coeff[1]));
        }
        Ok(p)
    }
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial { num_vars, terms: BTreeMap::new() }
    }

    pub fn constant(num_vars: usize, c: Complex64) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(vec![0; num_vars], c);
        p
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, Complex64::new(1.0, 0.0))
    }

    pub fn real(num_vars: usize, x: f64) -> Self {
        Self::constant(num_vars, Complex64::new(x, 0.0))
    }

    /// The coordinate monomial `x_idx` (0-based index).
    pub fn var(num_vars: usize, idx: usize) -> Self {
        assert!(idx < num_vars, "variable index out of range");
        let mut e = vec![0; num_vars];
        e[idx] = 1;
        let mut p = Self::zero(num_vars);
        p.add_term(e, Complex64::new(1.0, 0.0));
        p
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &Complex64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True if the polynomial is a constant (possibly zero).
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    /// The constant term.
    pub fn constant_term(&self) -> Complex64 {
        self.terms
            .get(&vec![0u16; self.num_vars])
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    pub fn add_term(&mut self, exponents: Vec<u16>, coeff: Complex64) {
        debug_assert_eq!(exponents.len(), self.num_vars);
        let entry = self
            .terms
            .entry(exponents.clone())
            .or_insert_with(|| Complex64::new(0.0, 0.0));
        *entry += coeff;
        if entry.re.abs() + entry.im.abs() < PRUNE_THRESHOLD {
            self.terms.remove(&exponents);
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.num_vars);
        for (e, a) in &self.terms {
            out.add_term(e.clone(), a * c);
        }
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.num_vars);
        for (e, a) in &self.terms {
            out.add_term(e.clone(), a.conj());
        }
        out
    }

    /// Exact partial derivative with respect to coordinate `mu`.
    pub fn partial(&self, mu: usize) -> Result<Self, Error> {
        if mu >= self.num_vars {
            return Err(Error::IndexOutOfRange {
                context: "partial derivative coordinate".into(),
                index: mu,
                bound: self.num_vars,
            });
        }
        let mut out = Self::zero(self.num_vars);
        for (e, c) in &self.terms {
            if e[mu] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[mu] -= 1;
            out.add_term(e2, c * Complex64::new(e[mu] as f64, 0.0));
        }
        Ok(out)
    }

    /// Exact integral over a coordinate box: monomial-wise antiderivative
    /// evaluated at the box corners.
    pub fn integrate_box(&self, chart: &ChartBox) -> Result<Complex64, Error> {
        if chart.dim() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "box integration".into(),
                expected: self.num_vars,
                got: chart.dim(),
            });
        }
        let mut total = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut factor = 1.0;
            for mu in 0..self.num_vars {
                let k = e[mu] as i32 + 1;
                factor *= (chart.upper[mu].powi(k) - chart.lower[mu].powi(k)) / k as f64;
            }
            total += c * factor;
        }
        Ok(total)
    }

    pub fn eval(&self, point: &[f64]) -> Complex64 {
        debug_assert_eq!(point.len(), self.num_vars);
        let mut total = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut mono = 1.0;
            for mu in 0..self.num_vars {
                mono *= point[mu].powi(e[mu] as i32);
            }
            total += c * mono;
        }
        total
    }

    /// Largest coefficient magnitude, as a residual measure.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as u32).sum())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for (mu, &k) in e.iter().enumerate() {
                if k > 0 {
                    write!(f, "*x{}^{}", mu + 1, k)?;
                }
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial dimension mismatch");
        let mut out = Polynomial::zero(self.num_vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u16> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

/// Exact product of two polynomials over the same chart.
pub fn poly_mul(p: &Polynomial, q: &Polynomial) -> Result<Polynomial, Error> {
    if p.num_vars() != q.num_vars() {
        return Err(Error::DimensionMismatch {
            context: "polynomial product".into(),
            expected: p.num_vars(),
            got: q.num_vars(),
        });
    }
    Ok(p * q)
}

/// A square matrix with polynomial entries, stored row-major:
/// `m[row][col]`.
pub type PolyMatrix = Vec<Vec<Polynomial>>;

pub fn poly_matrix_identity(num_vars: usize, n: usize) -> PolyMatrix {
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| if r == c { Polynomial::one(num_vars) } else { Polynomial::zero(num_vars) })
                .collect()
        })
        .collect()
}

pub fn poly_matrix_from_const(num_vars: usize, m: &nalgebra::DMatrix<Complex64>) -> PolyMatrix {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| Polynomial::constant(num_vars, m[(r, c)]))
                .collect()
        })
        .collect()
}

pub fn poly_matrix_mul(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    let n = a.len();
    let k = b.len();
    let cols = b[0].len();
    let num_vars = a[0][0].num_vars();
    (0..n)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let mut sum = Polynomial::zero(num_vars);
                    for t in 0..k {
                        if !a[r][t].is_zero() && !b[t][c].is_zero() {
                            sum = &sum + &(&a[r][t] * &b[t][c]);
                        }
                    }
                    sum
                })
                .collect()
        })
        .collect()
}

pub fn poly_matrix_add(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn poly_matrix_sub(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

pub fn poly_matrix_scale(a: &PolyMatrix, c: Complex64) -> PolyMatrix {
    a.iter()
        .map(|row| row.iter().map(|p| p.scale(c)).collect())
        .collect()
}

/// Largest coefficient magnitude over all entries.
pub fn poly_matrix_max_abs(a: &PolyMatrix) -> f64 {
    a.iter()
        .flat_map(|row| row.iter().map(|p| p.max_abs_coeff()))
        .fold(0.0, f64::max)
}

pub fn eval_poly_matrix(a: &PolyMatrix, point: &[f64]) -> nalgebra::DMatrix<Complex64> {
    let rows = a.len();
    let cols = a[0].len();
    nalgebra::DMatrix::from_fn(rows, cols, |r, c| a[r][c].eval(point))
}

/// An axis-aligned coordinate box: the domain of one chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ChartBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, Error> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "chart box bounds".into(),
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for mu in 0..lower.len() {
            if lower[mu] >= upper[mu] {
                return Err(Error::InvalidChartBox { axis: mu });
            }
        }
        Ok(ChartBox { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        ChartBox { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn contains(&self, other: &ChartBox) -> bool {
        self.dim() == other.dim()
            && self
                .lower
                .iter()
                .zip(&other.lower)
                .all(|(a, b)| a <= b)
            && self
                .upper
                .iter()
                .zip(&other.upper)
                .all(|(a, b)| a >= b)
    }

    /// Intersection with another box; `None` when the interiors are disjoint.
    pub fn intersect(&self, other: &ChartBox) -> Option<ChartBox> {
        if self.dim() != other.dim() {
            return None;
        }
        let lower: Vec<f64> = self
            .lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| a.max(*b))
            .collect();
        let upper: Vec<f64> = self
            .upper
            .iter()
            .zip(&other.upper)
            .map(|(a, b)| a.min(*b))
            .collect();
        if lower.iter().zip(&upper).any(|(l, u)| l >= u) {
            return None;
        }
        Some(ChartBox { lower, upper })
    }

    /// Deterministic sample lattice with `density` points per axis, endpoints
    /// included. Used for polynomial-identity testing by sampling.
    pub fn lattice(&self, density: usize) -> Vec<Vec<f64>> {
        let density = density.max(2);
        let mut points = vec![vec![]];
        for mu in 0..self.dim() {
            let mut next = Vec::with_capacity(points.len() * density);
            for p in &points {
                for k in 0..density {
                    let t = k as f64 / (density - 1) as f64;
                    let mut q = p.clone();
                    q.push(self.lower[mu] + t * (self.upper[mu] - self.lower[mu]));
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }
}
