//! Tolerance-based regularity of a polynomial at an approximate zero, and the
//! harvest of regular derivatives used to seed deflation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{Monomial, Polynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegularityKind {
    ThetaRegular,
    ThetaSingular,
    NonVanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub kind: RegularityKind,
    /// Index of the largest gradient component (`None` without variables).
    pub witness: Option<usize>,
    /// `|f(p)|`
    pub value: f64,
    /// `max_j |df/dx_j (p)|`
    pub max_gradient: f64,
}

/// Classifies `f` at `p` against `theta`.
///
/// `p` may carry extra trailing coordinates; only the first `f.nvars()` are
/// read.
pub fn classify(f: &Polynomial, p: &[f64], theta: f64) -> RegularityVerdict {
    assert!(theta > 0.0, "theta must be positive");
    let p = &p[..f.nvars()];
    let value = f.eval_unchecked(p).abs();
    let mut witness = None;
    let mut max_gradient = 0.0;
    for j in 0..f.nvars() {
        let g = f.partial(j).eval_unchecked(p).abs();
        if witness.is_none() || g > max_gradient {
            witness = Some(j);
            max_gradient = g;
        }
    }
    let kind = if value >= theta {
        RegularityKind::NonVanishing
    } else if max_gradient >= theta {
        RegularityKind::ThetaRegular
    } else {
        RegularityKind::ThetaSingular
    };
    RegularityVerdict {
        kind,
        witness,
        value,
        max_gradient,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarvestError {
    #[error("polynomial does not vanish at the point (|f(p)| = {value:e} >= theta = {theta:e})")]
    NonVanishing { value: f64, theta: f64 },
    #[error("no Taylor coefficient reaches theta = {theta:e}; retry with a smaller theta")]
    Exhausted { theta: f64 },
}

/// A derivative `d^gamma f` found to be regular at the point.
#[derive(Debug, Clone, PartialEq)]
pub struct Harvested {
    pub gamma: Monomial,
    pub poly: Polynomial,
}

/// Regular derivatives of `f` at `p` of the lowest order that works.
///
/// A regular `f` is returned as is. Otherwise the Taylor expansion at `p` is
/// scanned for the lowest order `d` holding a coefficient of size at least
/// `theta`; each such `(x - p)^gamma` yields the candidates
/// `d^(gamma - e_i) f`, which are kept when they classify as regular.
pub fn harvest_regular_derivatives(
    f: &Polynomial,
    p: &[f64],
    theta: f64,
) -> Result<Vec<Harvested>, HarvestError> {
    let n = f.nvars();
    let p = &p[..n];
    let verdict = classify(f, p, theta);
    match verdict.kind {
        RegularityKind::ThetaRegular => {
            return Ok(vec![Harvested {
                gamma: Monomial::one(n),
                poly: f.clone(),
            }])
        }
        RegularityKind::NonVanishing => {
            return Err(HarvestError::NonVanishing {
                value: verdict.value,
                theta,
            })
        }
        RegularityKind::ThetaSingular => {}
    }
    let coeffs = f
        .taylor_coefficients(p, f.total_degree())
        .expect("dimension checked above");
    let Some(order) = coeffs
        .iter()
        .filter(|(_, c)| c.abs() >= theta)
        .map(|(m, _)| m.degree())
        .min()
    else {
        return Err(HarvestError::Exhausted { theta });
    };
    let mut out: Vec<Harvested> = Vec::new();
    for (gamma, _) in coeffs
        .iter()
        .filter(|(m, c)| m.degree() == order && c.abs() >= theta)
    {
        for i in 0..n {
            if gamma.exponents()[i] == 0 {
                continue;
            }
            let mut e = gamma.exponents().to_vec();
            e[i] -= 1;
            let beta = Monomial::new(e);
            if out.iter().any(|h| h.gamma == beta) {
                continue;
            }
            let poly = f.diff_functional(&beta);
            if classify(&poly, p, theta).kind != RegularityKind::ThetaRegular {
                continue;
            }
            if out.iter().any(|h| h.poly == poly) {
                continue;
            }
            out.push(Harvested { gamma: beta, poly });
        }
    }
    if out.is_empty() {
        return Err(HarvestError::Exhausted { theta });
    }
    // earlier variables first: d/dx before d/dy
    out.sort_by(|a, b| b.gamma.exponents().cmp(a.gamma.exponents()));
    Ok(out)
}

/// Tolerance suggested by the spread of the coefficients of `f`, for an
/// approximate zero with `digits` correct digits.
pub fn theta_heuristic(f: &Polynomial, digits: u32) -> f64 {
    let (m, big_m) = f
        .coefficient_range()
        .expect("theta_heuristic needs a nonzero polynomial");
    let scale = 10f64.powi(digits as i32);
    if m / big_m <= 1.0 / scale {
        (m + big_m) / (2.0 * big_m)
    } else {
        (m + big_m) / (2.0 * big_m * scale)
    }
}

/// How `theta` is chosen for each polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThetaPolicy {
    Fixed(f64),
    /// Per-polynomial [`theta_heuristic`] with the given digit count.
    Heuristic { digits: u32 },
}

impl Default for ThetaPolicy {
    fn default() -> Self {
        ThetaPolicy::Heuristic { digits: 2 }
    }
}

impl ThetaPolicy {
    pub fn resolve(&self, f: &Polynomial) -> f64 {
        match *self {
            ThetaPolicy::Fixed(t) => t,
            ThetaPolicy::Heuristic { digits } => theta_heuristic(f, digits),
        }
    }
}
