//! Sparse real multivariate polynomials.
//!
//! A [`Polynomial`] is a map from [`Monomial`] exponent vectors to `f64`
//! coefficients over a shared, ordered list of variable names. Terms are kept
//! in graded-lexicographic order, exact zeros are never stored, and every
//! operation is a pure function of its inputs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable lists differ: [{left}] vs [{right}]")]
    VariableMismatch { left: String, right: String },
    #[error("a polynomial system needs at least one equation")]
    EmptySystem,
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("variable list [{new}] does not extend [{old}]")]
    NotAnExtension { old: String, new: String },
}

/// Shared, ordered variable names.
pub type Variables = Arc<[String]>;

pub fn variables<S: AsRef<str>>(names: &[S]) -> Variables {
    names.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>().into()
}

/// Exponent vector of a monomial.
///
/// Ordered graded-lexicographically: total degree first, then the exponent
/// vectors compared entry by entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn padded(&self, nvars: usize) -> Monomial {
        let mut e = self.0.clone();
        e.resize(nvars, 0);
        Monomial(e)
    }

    /// Product of the factorials of the exponents.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e).map(f64::from).product::<f64>())
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A sparse polynomial with real coefficients.
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    vars: Variables,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(vars: Variables) -> Self {
        Polynomial {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: Variables, c: f64) -> Self {
        let n = vars.len();
        Self::from_terms(vars, [(Monomial::one(n), c)])
    }

    pub fn variable(vars: Variables, i: usize) -> Self {
        let n = vars.len();
        assert!(i < n, "variable index {i} out of range for {n} variables");
        Self::from_terms(vars, [(Monomial::unit(n, i), 1.0)])
    }

    /// Builds a polynomial from `(monomial, coefficient)` pairs. Repeated
    /// monomials are summed and exact zeros dropped.
    pub fn from_terms<I>(vars: Variables, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let n = vars.len();
        let mut map: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, c) in terms {
            assert_eq!(m.nvars(), n, "monomial length must match variable count");
            *map.entry(m).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Polynomial { vars, terms: map }
    }

    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&Monomial::one(self.nvars()))
    }

    /// Total degree; the zero polynomial reports 0 (check [`is_zero`](Self::is_zero)).
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Degree in the given subset of variables.
    pub fn degree_in(&self, subset: &[usize]) -> u32 {
        self.terms
            .keys()
            .map(|m| subset.iter().map(|&i| m.0.get(i).copied().unwrap_or(0)).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in_var(&self, i: usize) -> u32 {
        self.degree_in(&[i])
    }

    /// Largest and smallest absolute coefficient.
    pub fn coefficient_range(&self) -> Option<(f64, f64)> {
        let mut it = self.terms.values().map(|c| c.abs());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), c| (lo.min(c), hi.max(c))))
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficient_range().map_or(0.0, |(_, hi)| hi)
    }

    fn check_dim(&self, p: &[f64]) -> Result<(), PolyError> {
        if p.len() != self.nvars() {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars(),
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<f64, PolyError> {
        self.check_dim(p)?;
        Ok(self.eval_unchecked(p))
    }

    /// Term-sum evaluation; `p` may be longer than the variable list, extra
    /// coordinates are ignored.
    pub(crate) fn eval_unchecked(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .zip(p)
                    .filter(|(e, _)| **e > 0)
                    .fold(*c, |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    pub fn partial(&self, i: usize) -> Polynomial {
        assert!(i < self.nvars(), "partial: variable index out of range");
        let terms = self.terms.iter().filter_map(|(m, c)| {
            let e = m.0[i];
            (e > 0).then(|| {
                let mut d = m.0.clone();
                d[i] -= 1;
                (Monomial(d), c * f64::from(e))
            })
        });
        Polynomial::from_terms(self.vars.clone(), terms)
    }

    /// `d^gamma f`: the mixed partial of order `gamma` divided by `gamma!`.
    ///
    /// Computed term-wise: `x^a -> C(a, gamma) x^(a - gamma)`, which avoids
    /// building the intermediate factorials.
    pub fn diff_functional(&self, gamma: &Monomial) -> Polynomial {
        assert_eq!(gamma.nvars(), self.nvars(), "gamma length must match variable count");
        let terms = self.terms.iter().filter_map(|(m, c)| {
            if m.0.iter().zip(&gamma.0).any(|(a, g)| a < g) {
                return None;
            }
            let mut scale = *c;
            let mut e = Vec::with_capacity(m.nvars());
            for (&a, &g) in m.0.iter().zip(&gamma.0) {
                scale *= binomial(a, g);
                e.push(a - g);
            }
            Some((Monomial(e), scale))
        });
        Polynomial::from_terms(self.vars.clone(), terms)
    }

    /// Re-expands the polynomial about `p`: the coefficient of `m` in the
    /// result is the coefficient of `(x - p)^m` in `self`.
    ///
    /// One synthetic (Horner) shift per variable.
    pub fn taylor_shift(&self, p: &[f64]) -> Result<Polynomial, PolyError> {
        self.check_dim(p)?;
        let mut terms: Vec<(Monomial, f64)> = self.terms.iter().map(|(m, c)| (m.clone(), *c)).collect();
        for (i, &a) in p.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            terms = shift_variable(terms, i, a);
        }
        Ok(Polynomial::from_terms(self.vars.clone(), terms))
    }

    /// Taylor coefficients about `p` up to total order `max_order`.
    pub fn taylor_coefficients(
        &self,
        p: &[f64],
        max_order: u32,
    ) -> Result<BTreeMap<Monomial, f64>, PolyError> {
        let shifted = self.taylor_shift(p)?;
        Ok(shifted
            .terms
            .into_iter()
            .filter(|(m, _)| m.degree() <= max_order)
            .collect())
    }

    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.check_dim(p)?;
        Ok((0..self.nvars()).map(|i| self.partial(i).eval_unchecked(p)).collect())
    }

    pub fn scale(&self, a: f64) -> Polynomial {
        Polynomial::from_terms(self.vars.clone(), self.terms.iter().map(|(m, c)| (m.clone(), c * a)))
    }

    /// Multiplies by the variable with index `i`.
    pub fn mul_var(&self, i: usize) -> Polynomial {
        let terms = self.terms.iter().map(|(m, c)| {
            let mut e = m.0.clone();
            e[i] += 1;
            (Monomial(e), *c)
        });
        Polynomial::from_terms(self.vars.clone(), terms)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.vars.clone(), 1.0);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Re-expresses the polynomial over `new_vars`, which must start with the
    /// current variable list.
    pub fn extend_vars(&self, new_vars: &Variables) -> Result<Polynomial, PolyError> {
        if new_vars.len() < self.nvars() || new_vars[..self.nvars()] != self.vars[..] {
            return Err(PolyError::NotAnExtension {
                old: self.vars.join(","),
                new: new_vars.join(","),
            });
        }
        let n = new_vars.len();
        Ok(Polynomial {
            vars: new_vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.padded(n), *c)).collect(),
        })
    }

    /// Drops trailing variables that do not occur; used to project onto the
    /// original coordinates.
    pub fn restrict_vars(&self, nvars: usize) -> Option<Polynomial> {
        if self.terms.keys().any(|m| m.0[nvars..].iter().any(|&e| e > 0)) {
            return None;
        }
        let vars: Variables = self.vars[..nvars].to_vec().into();
        Some(Polynomial {
            vars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (Monomial(m.0[..nvars].to_vec()), *c))
                .collect(),
        })
    }

    /// True if `self = c * other` for some nonzero `c`, up to relative `tol`.
    pub fn is_scalar_multiple_of(&self, other: &Polynomial, tol: f64) -> bool {
        if self.nterms() != other.nterms() || self.is_zero() {
            return false;
        }
        let Some((m0, c0)) = other.terms.iter().next() else { return false };
        let Some(s0) = self.terms.get(m0) else { return false };
        let ratio = s0 / c0;
        other.terms.iter().all(|(m, c)| match self.terms.get(m) {
            Some(s) => (s - ratio * c).abs() <= tol * s.abs().max(1.0),
            None => false,
        })
    }

    fn same_vars(&self, other: &Polynomial) {
        assert!(
            self.vars == other.vars,
            "polynomial arithmetic over different variable lists"
        );
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Substitutes `x_i -> x_i + a` in a term list.
fn shift_variable(terms: Vec<(Monomial, f64)>, i: usize, a: f64) -> Vec<(Monomial, f64)> {
    let mut groups: HashMap<Vec<u32>, Vec<f64>> = HashMap::new();
    for (m, c) in terms {
        let mut rest = m.0;
        let e = rest[i] as usize;
        rest[i] = 0;
        let coeffs = groups.entry(rest).or_default();
        if coeffs.len() <= e {
            coeffs.resize(e + 1, 0.0);
        }
        coeffs[e] += c;
    }
    let mut out = Vec::new();
    for (rest, mut c) in groups {
        let d = c.len() - 1;
        for k in 0..d {
            for j in (k..d).rev() {
                c[j] += a * c[j + 1];
            }
        }
        for (e, coeff) in c.into_iter().enumerate() {
            if coeff != 0.0 {
                let mut m = rest.clone();
                m[i] = e as u32;
                out.push((Monomial(m), coeff));
            }
        }
    }
    out
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

/// Prints in the text grammar accepted by [`crate::text::parse_system`],
/// leading (highest graded-lex) term first.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            match (k, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            let mono = format_monomial(&self.vars, m);
            match (mono.is_empty(), mag == 1.0) {
                (true, _) => write!(f, "{}", format_coefficient(mag))?,
                (false, true) => write!(f, "{mono}")?,
                (false, false) => write!(f, "{}*{mono}", format_coefficient(mag))?,
            }
        }
        Ok(())
    }
}

fn format_monomial(vars: &[String], m: &Monomial) -> String {
    m.0.iter()
        .zip(vars)
        .filter(|(e, _)| **e > 0)
        .map(|(&e, v)| if e == 1 { v.clone() } else { format!("{v}^{e}") })
        .collect::<Vec<_>>()
        .join("*")
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_coefficient(c: f64) -> String {
    let plain = format!("{c}");
    if plain.len() <= 24 {
        plain
    } else {
        format!("{c:e}")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.same_vars(rhs);
        let terms = self
            .terms
            .iter()
            .chain(rhs.terms.iter())
            .map(|(m, c)| (m.clone(), *c));
        Polynomial::from_terms(self.vars.clone(), terms)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.same_vars(rhs);
        let mut out: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                let m = Monomial(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                *out.entry(m).or_insert(0.0) += ca * cb;
            }
        }
        Polynomial::from_terms(self.vars.clone(), out)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// A point with finite real coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, PolyError> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(PolyError::NonFinite(i));
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A list of polynomials over one shared variable list.
#[derive(Clone, PartialEq)]
pub struct PolySystem {
    vars: Variables,
    polys: Vec<Polynomial>,
}

impl PolySystem {
    pub fn new(polys: Vec<Polynomial>) -> Result<Self, PolyError> {
        let first = polys.first().ok_or(PolyError::EmptySystem)?;
        let vars = first.vars.clone();
        if let Some(bad) = polys.iter().find(|p| p.vars != vars) {
            return Err(PolyError::VariableMismatch {
                left: vars.join(","),
                right: bad.vars.join(","),
            });
        }
        Ok(PolySystem { vars, polys })
    }

    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.len() == self.nvars()
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn into_polys(self) -> Vec<Polynomial> {
        self.polys
    }

    pub fn total_degree(&self) -> u32 {
        self.polys.iter().map(Polynomial::total_degree).max().unwrap_or(0)
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>, PolyError> {
        self.polys.iter().map(|f| f.evaluate(p)).collect()
    }

    /// Largest absolute residual.
    pub fn max_residual(&self, p: &[f64]) -> Result<f64, PolyError> {
        Ok(self.evaluate(p)?.into_iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub fn jacobian(&self, p: &[f64]) -> Result<Matrix, PolyError> {
        JacobianPolys::new(self).evaluate(p)
    }
}

impl fmt::Debug for PolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolySystem")
            .field("vars", &self.vars)
            .field("polys", &self.polys)
            .finish()
    }
}

/// Precomputed partial derivatives of a list of polynomials, for repeated
/// Jacobian evaluation.
#[derive(Debug, Clone)]
pub struct JacobianPolys {
    nvars: usize,
    rows: Vec<Vec<Polynomial>>,
}

impl JacobianPolys {
    pub fn new(system: &PolySystem) -> Self {
        Self::from_polys(system.polys(), system.nvars())
    }

    pub fn from_polys(polys: &[Polynomial], nvars: usize) -> Self {
        let rows = polys
            .iter()
            .map(|f| (0..nvars).map(|j| f.partial(j)).collect())
            .collect();
        JacobianPolys { nvars, rows }
    }

    pub fn rows(&self) -> &[Vec<Polynomial>] {
        &self.rows
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Matrix, PolyError> {
        if p.len() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                got: p.len(),
            });
        }
        let mut m = Matrix::zeros(self.rows.len(), self.nvars);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                m[(i, j)] = d.eval_unchecked(p);
            }
        }
        Ok(m)
    }
}
