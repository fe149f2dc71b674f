use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::linalg::{LinalgError, Lu, Matrix};
use crate::poly::{JacobianPolys, PolyError, PolySystem, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("system is not square ({equations} equations in {variables} unknowns)")]
    NotSquare { equations: usize, variables: usize },
    #[error("Jacobian at the midpoint is singular: {0}")]
    SingularMidpoint(LinalgError),
    #[error("no contraction after {inflations} inflations")]
    NoContraction { inflations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrawczykOptions {
    pub max_inflations: usize,
    /// Relative growth of the candidate box per inflation.
    pub inflation: f64,
    /// Absolute growth, keeps point intervals from staying degenerate.
    pub eta: f64,
}

impl Default for KrawczykOptions {
    fn default() -> Self {
        KrawczykOptions {
            max_inflations: 15,
            inflation: 1.1,
            eta: 1e-300,
        }
    }
}

/// A box proven to contain exactly one zero of the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedInclusion {
    #[serde(rename = "box")]
    pub enclosure: IntervalVector,
    pub unique: bool,
    /// Largest component width of the box.
    pub breadth: f64,
    pub inflations: usize,
}

impl VerifiedInclusion {
    /// The first `n` components, e.g. the original unknowns of a deflated
    /// system.
    pub fn project(&self, n: usize) -> IntervalVector {
        IntervalVector(self.enclosure.0[..n.min(self.enclosure.len())].to_vec())
    }
}

/// Natural interval extension of `f` over the box `x`.
pub fn interval_eval(f: &Polynomial, x: &IntervalVector) -> Result<Interval, PolyError> {
    if x.len() != f.nvars() {
        return Err(PolyError::DimensionMismatch {
            expected: f.nvars(),
            got: x.len(),
        });
    }
    let mut acc = Interval::point(0.0);
    for (m, c) in f.terms() {
        let mut t = Interval::point(c);
        for (i, &e) in m.exponents().iter().enumerate() {
            if e > 0 {
                t = t * x.0[i].powi(e);
            }
        }
        acc = acc + t;
    }
    Ok(acc)
}

fn eval_jacobian(jp: &JacobianPolys, x: &IntervalVector) -> Result<IntervalMatrix, PolyError> {
    let rows = jp.rows();
    let cols = rows.first().map_or(0, Vec::len);
    let mut vals = Vec::with_capacity(rows.len() * cols);
    for row in rows {
        for d in row {
            vals.push(interval_eval(d, x)?);
        }
    }
    Ok(IntervalMatrix::from_fn(rows.len(), cols, |i, j| vals[i * cols + j]))
}

pub fn interval_jacobian(system: &PolySystem, x: &IntervalVector) -> Result<IntervalMatrix, PolyError> {
    eval_jacobian(&JacobianPolys::new(system), x)
}

fn point_times(r: &Matrix, v: &IntervalVector) -> IntervalVector {
    let rm = IntervalMatrix::from_fn(r.rows(), r.cols(), |i, j| Interval::point(r[(i, j)]));
    rm.matvec(v)
}

/// Krawczyk test around the float point `m`.
///
/// With `R` an approximate inverse of `J(m)`, `Z = -R F(m)` and a candidate
/// offset box `Y`, the operator `K = Z + (I - R J(m + Y)) Y` satisfies: if
/// `K` lies in the interior of `Y` then `m + Y` holds exactly one zero, and
/// it lies in `m + K`. `Y` starts at `Z` and is inflated up to
/// `max_inflations` times.
pub fn krawczyk_verify(
    system: &PolySystem,
    m: &[f64],
    opts: &KrawczykOptions,
) -> Result<VerifiedInclusion, VerifyError> {
    let n = system.nvars();
    if system.len() != n {
        return Err(VerifyError::NotSquare {
            equations: system.len(),
            variables: n,
        });
    }
    let jp = JacobianPolys::new(system);
    let jm = jp.evaluate(m)?;
    let r = Lu::new(&jm).map_err(VerifyError::SingularMidpoint)?.inverse();
    let mbox = IntervalVector::from_point(m);
    let fm = IntervalVector(
        system
            .polys()
            .iter()
            .map(|f| interval_eval(f, &mbox))
            .collect::<Result<_, _>>()?,
    );
    let z = IntervalVector(point_times(&r, &fm).0.into_iter().map(|i| -i).collect());
    let mut x = z.clone();
    for k in 1..=opts.max_inflations {
        let y = IntervalVector(
            x.0.iter()
                .map(|i| Interval::around(i.mid(), i.rad() * opts.inflation + opts.eta))
                .collect(),
        );
        let jx = eval_jacobian(&jp, &y.offset(m))?;
        let rm = IntervalMatrix::from_fn(n, n, |i, j| {
            let s = (0..n).fold(Interval::point(0.0), |acc, l| acc + jx.get(l, j).scale(r[(i, l)]));
            let id = if i == j { 1.0 } else { 0.0 };
            Interval::point(id) - s
        });
        let cy = rm.matvec(&y);
        let kk = IntervalVector(z.0.iter().zip(&cy.0).map(|(a, b)| *a + *b).collect());
        if y.interior_contains(&kk) {
            let enclosure = kk.offset(m);
            return Ok(VerifiedInclusion {
                breadth: enclosure.max_width(),
                enclosure,
                unique: true,
                inflations: k,
            });
        }
        x = kk;
    }
    Err(VerifyError::NoContraction {
        inflations: opts.max_inflations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_system;

    fn sys(t: &str) -> PolySystem {
        parse_system(t).unwrap().system
    }

    #[test]
    fn sqrt2() {
        let s = sys("x^2 - 2");
        let v = krawczyk_verify(&s, &[std::f64::consts::SQRT_2], &KrawczykOptions::default()).unwrap();
        assert!(v.enclosure.contains_point(&[std::f64::consts::SQRT_2]));
        assert!(v.breadth < 1e-15);
        let b = v.enclosure.0[0];
        assert!(b.lo() <= std::f64::consts::SQRT_2 && std::f64::consts::SQRT_2 <= b.hi());
    }

    #[test]
    fn linear_system() {
        let s = sys("x + y - 3\nx - y - 1");
        let v = krawczyk_verify(&s, &[2.0, 1.0], &KrawczykOptions::default()).unwrap();
        assert!(v.enclosure.contains_point(&[2.0, 1.0]));
        assert!(v.breadth < 1e-290);
    }

    #[test]
    fn far_point_fails() {
        let s = sys("x^2 - 2");
        assert!(matches!(
            krawczyk_verify(&s, &[3.0], &KrawczykOptions::default()),
            Err(VerifyError::NoContraction { .. })
        ));
    }

    #[test]
    fn singular_midpoint() {
        let s = sys("x^2\ny");
        assert!(matches!(
            krawczyk_verify(&s, &[0.0, 0.0], &KrawczykOptions::default()),
            Err(VerifyError::SingularMidpoint(_))
        ));
    }

    #[test]
    fn interval_eval_even_powers() {
        let f = sys("x^2 + y^2").polys()[0].clone();
        let b = IntervalVector(vec![Interval::new(-1.0, 1.0), Interval::new(-2.0, 1.0)]);
        assert_eq!(interval_eval(&f, &b).unwrap(), Interval::new(0.0, 5.0));
    }
}
