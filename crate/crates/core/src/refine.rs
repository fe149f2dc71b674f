//! Newton refinement of deflated systems, convergence classification and the
//! exact-versus-perturbed diagnosis with adaptive tolerance retries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deflation::{
    cdss, rank_guess_pipeline, CdssOptions, DeflatedSystem, DeflationError, Judged, Judgement,
    RankGuessOptions,
};
use crate::exec::Execution;
use crate::linalg::{self, norm2, RankMode};
use crate::poly::{Point, PolyError, PolySystem};
use crate::regularity::{HarvestError, ThetaPolicy};

#[derive(Debug, Error)]
pub enum RefineError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("system is not square: {equations} equations in {variables} variables")]
    NotSquare { equations: usize, variables: usize },
    #[error("no deflation strategy produced a system ({} attempts)", attempts.len())]
    Exhausted { attempts: Vec<Attempt> },
}

/// Newton iterates with their residual and step norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iterates: Vec<Vec<f64>>,
    pub residual_norms: Vec<f64>,
    /// `step_norms[k] = |iterates[k+1] - iterates[k]|`
    pub step_norms: Vec<f64>,
    /// Stopped on a numerically singular Jacobian.
    pub singular: bool,
    /// Last step fell below the tolerance.
    pub converged: bool,
}

impl IterationTrace {
    /// Trace of a hand-made iterate sequence.
    pub fn from_iterates(iterates: Vec<Vec<f64>>, residual_norms: Vec<f64>, tol: f64) -> Self {
        let step_norms: Vec<f64> = iterates
            .windows(2)
            .map(|w| norm2(&w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .collect();
        let converged = step_norms.last().is_some_and(|&s| s < tol);
        IterationTrace {
            iterates,
            residual_norms,
            step_norms,
            singular: false,
            converged,
        }
    }

    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("trace holds the starting point")
    }
}

pub fn default_tol(p0: &[f64]) -> f64 {
    1e-14 * (1.0 + norm2(p0))
}

pub const DEFAULT_MAX_ITER: usize = 50;

/// Plain Newton iteration on a square system.
///
/// Stops when a step is shorter than `tol`, after `max_iter` steps, or when
/// the Jacobian is singular to working precision (flagged in the trace).
pub fn newton_refine(
    system: &PolySystem,
    p0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Point, IterationTrace), RefineError> {
    if !system.is_square() {
        return Err(RefineError::NotSquare {
            equations: system.len(),
            variables: system.nvars(),
        });
    }
    let jac = crate::poly::JacobianPolys::new(system);
    let mut x = p0.to_vec();
    let mut fx = system.evaluate(&x)?;
    let mut trace = IterationTrace {
        iterates: vec![x.clone()],
        residual_norms: vec![norm2(&fx)],
        step_norms: Vec::new(),
        singular: false,
        converged: false,
    };
    for _ in 0..max_iter {
        let step = if fx.iter().all(|v| *v == 0.0) {
            vec![0.0; x.len()]
        } else {
            let rhs: Vec<f64> = fx.iter().map(|v| -v).collect();
            match linalg::solve_linear(&jac.evaluate(&x)?, &rhs) {
                Ok(d) => d,
                Err(_) => {
                    trace.singular = true;
                    break;
                }
            }
        };
        if step.iter().any(|v| !v.is_finite()) {
            break;
        }
        for (xi, di) in x.iter_mut().zip(&step) {
            *xi += di;
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1e150) {
            break;
        }
        fx = system.evaluate(&x)?;
        let s = norm2(&step);
        trace.iterates.push(x.clone());
        trace.residual_norms.push(norm2(&fx));
        trace.step_norms.push(s);
        if s < tol {
            trace.converged = true;
            break;
        }
    }
    let last = Point::new(trace.last().to_vec())?;
    Ok((last, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convergence {
    Quadratic,
    Linear,
    Stalled,
    Diverged,
}

/// Convergence rate of a Newton trace, judged from step norms.
///
/// Steps above a rounding floor count as significant. Quadratic: the run
/// converged and each of the last three significant steps shrinks by more
/// than ten and either satisfies `s' <= max(s^1.5, floor)` or at least
/// halves the previous contraction ratio `s'/s`. Linear: a log-linear fit
/// over the tail gives a ratio in `(0.1, 0.95)` with `R^2 > 0.9`.
pub fn classify_convergence(trace: &IterationTrace) -> Convergence {
    let s = &trace.step_norms;
    if s.iter().any(|v| !v.is_finite()) || trace.iterates.last().is_some_and(|x| x.iter().any(|v| !v.is_finite())) {
        return Convergence::Diverged;
    }
    let xnorm = trace.iterates.last().map_or(0.0, |x| norm2(x));
    let floor = 64.0 * f64::EPSILON * (1.0 + xnorm);
    if s.is_empty() {
        return Convergence::Stalled;
    }
    let significant: Vec<usize> = (0..s.len()).filter(|&k| s[k] > floor).collect();
    let pairs: Vec<(f64, f64)> = significant
        .iter()
        .filter(|&&k| k + 1 < s.len())
        .map(|&k| (s[k], s[k + 1]))
        .collect();
    let converged = trace.converged || s.last().is_some_and(|&v| v <= floor);
    if converged {
        if pairs.is_empty() {
            let residual = trace.residual_norms.last().copied().unwrap_or(f64::INFINITY);
            return if residual <= floor {
                Convergence::Quadratic
            } else {
                Convergence::Stalled
            };
        }
        let from = pairs.len().saturating_sub(3);
        let contracting = pairs[from..].iter().all(|&(a, b)| b < 0.1 * a);
        let superlinear = (from..pairs.len()).all(|j| {
            let (a, b) = pairs[j];
            if b <= a.powf(1.5).max(floor) {
                return true;
            }
            // first step may still be far from the zero
            if j == 0 {
                return pairs.len() > 1;
            }
            let (a0, b0) = pairs[j - 1];
            b / a <= 0.5 * (b0 / a0)
        });
        if contracting && superlinear {
            return Convergence::Quadratic;
        }
    }
    let tail: Vec<f64> = significant.iter().map(|&k| s[k]).collect();
    if tail.len() >= 3 {
        let grow = tail.windows(2).filter(|w| w[1] > w[0]).count();
        if !converged && grow * 2 > tail.len() && tail[tail.len() - 1] > 10.0 * tail[0] {
            return Convergence::Diverged;
        }
        let fit_from = if tail.len() >= 5 { 1 } else { 0 };
        let window = &tail[fit_from..];
        let window = &window[window.len().saturating_sub(12)..];
        if let Some((rho, r2)) = geometric_fit(window) {
            if rho > 0.1 && rho < 0.95 && r2 > 0.9 {
                return Convergence::Linear;
            }
        }
    }
    if !converged && s.len() >= 2 && s[s.len() - 1] > 10.0 * s[0].max(floor) {
        return Convergence::Diverged;
    }
    Convergence::Stalled
}

/// Least-squares fit `log s_k = a + k log rho`; returns `(rho, R^2)`.
fn geometric_fit(s: &[f64]) -> Option<(f64, f64)> {
    if s.len() < 3 {
        return None;
    }
    let y: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (k, yk) in y.iter().enumerate() {
        let dx = k as f64 - xm;
        sxy += dx * (yk - ym);
        sxx += dx * dx;
        syy += (yk - ym) * (yk - ym);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope.exp(), r2))
}

/// Largest input residual at `p` (extra trailing coordinates ignored).
pub fn residual_delta(inputs: &PolySystem, p: &[f64]) -> f64 {
    inputs
        .polys()
        .iter()
        .map(|f| f.eval_unchecked(&p[..f.nvars()]).abs())
        .fold(0.0, f64::max)
}

/// Post-refinement check of the regularity judgements: value and gradient
/// of polynomials judged singular, value only for those judged regular,
/// taken at the refined point.
pub fn max_err(judged: &[Judged], p: &[f64]) -> f64 {
    judged
        .iter()
        .map(|j| {
            let n = j.poly.nvars();
            let q = &p[..n];
            let value = j.poly.eval_unchecked(q).abs();
            match j.judgement {
                Judgement::Regular => value,
                Judgement::Singular => (0..n)
                    .map(|v| j.poly.partial(v).eval_unchecked(q).abs())
                    .fold(value, f64::max),
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Exact,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub convergence: Convergence,
    pub delta: f64,
    pub max_err: f64,
    pub verdict: Verdict,
}

/// Refines `deflated` from its own starting point and judges the result.
pub fn diagnose(
    deflated: &DeflatedSystem,
    theta_prime: f64,
    max_iter: usize,
) -> Result<(Point, IterationTrace, Diagnosis), RefineError> {
    let p0 = deflated.point.coords();
    let (p, trace) = newton_refine(&deflated.system, p0, default_tol(p0), max_iter)?;
    let convergence = classify_convergence(&trace);
    let delta = residual_delta(&deflated.inputs, p.coords());
    let verdict = if convergence == Convergence::Quadratic && delta < theta_prime {
        Verdict::Exact
    } else {
        Verdict::Perturbed
    };
    let diagnosis = Diagnosis {
        convergence,
        delta,
        max_err: max_err(&deflated.judged, p.coords()),
        verdict,
    };
    Ok((p, trace, diagnosis))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub theta: ThetaPolicy,
    pub eps: f64,
    pub rank_mode: RankMode,
    pub theta_prime: f64,
    pub max_retries: usize,
    pub max_iter: usize,
    /// Skip the harvest-based passes and go straight to rank guessing.
    pub force_rank_guess: bool,
    pub multiplicity: Option<u32>,
    pub residual_bound: f64,
    pub execution: Execution,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            theta: ThetaPolicy::default(),
            eps: 0.005,
            rank_mode: RankMode::Absolute,
            theta_prime: 1e-12,
            max_retries: 3,
            max_iter: DEFAULT_MAX_ITER,
            force_rank_guess: false,
            multiplicity: None,
            residual_bound: 1e-2,
            execution: Execution::default(),
        }
    }
}

impl RefineOptions {
    pub fn cdss_options(&self, theta: ThetaPolicy) -> CdssOptions {
        CdssOptions {
            theta,
            eps: self.eps,
            rank_mode: self.rank_mode,
            multiplicity: self.multiplicity,
            residual_bound: self.residual_bound,
            ..CdssOptions::default()
        }
    }

    pub fn rank_guess_options(&self) -> RankGuessOptions {
        RankGuessOptions {
            eps: self.eps,
            rank_mode: self.rank_mode,
            theta_prime: self.theta_prime,
            max_iter: self.max_iter,
            residual_bound: self.residual_bound,
            execution: self.execution,
            ..RankGuessOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Cdss,
    RankGuess,
}

/// One pass of the adaptive loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub strategy: Strategy,
    /// Largest tolerance used for the regularity judgements (`None` for
    /// rank guessing).
    pub theta: Option<f64>,
    pub final_size: Option<usize>,
    pub diagnosis: Option<Diagnosis>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub deflated: DeflatedSystem,
    pub point: Point,
    pub trace: IterationTrace,
    pub diagnosis: Diagnosis,
    pub strategy: Strategy,
    pub attempts: Vec<Attempt>,
}

impl RefineOutcome {
    pub fn retries(&self) -> usize {
        self.attempts.len().saturating_sub(1)
    }
}

fn theta_of(policy: &ThetaPolicy, system: &PolySystem) -> f64 {
    system
        .polys()
        .iter()
        .map(|f| policy.resolve(f))
        .fold(0.0, f64::max)
}

/// Deflate, refine and diagnose, retrying with smaller tolerances when the
/// post-refinement error suggests a misjudged polynomial and finally falling
/// back to rank guessing. A perturbed result is returned (not an error) when
/// nothing better is found.
pub fn adaptive_refine(
    system: &PolySystem,
    p0: &[f64],
    opts: &RefineOptions,
) -> Result<RefineOutcome, RefineError> {
    if !system.is_square() {
        return Err(RefineError::NotSquare {
            equations: system.len(),
            variables: system.nvars(),
        });
    }
    let mut attempts = Vec::new();
    let mut best: Option<RefineOutcome> = None;
    if !opts.force_rank_guess {
        let mut theta = opts.theta;
        let mut start = p0.to_vec();
        let mut rejudged = false;
        let mut lowered = false;
        for k in 0..=opts.max_retries.max(1) {
            let theta1 = theta_of(&theta, system);
            let mut attempt = Attempt {
                strategy: Strategy::Cdss,
                theta: Some(theta1),
                final_size: None,
                diagnosis: None,
                error: None,
            };
            match cdss(system, &start, &opts.cdss_options(theta)) {
                Ok(deflated) => {
                    let (point, trace, diagnosis) = diagnose(&deflated, opts.theta_prime, opts.max_iter)?;
                    attempt.final_size = Some(deflated.size());
                    attempt.diagnosis = Some(diagnosis.clone());
                    attempts.push(attempt);
                    let theta2 = diagnosis.max_err;
                    let exact = diagnosis.verdict == Verdict::Exact;
                    let outcome = RefineOutcome {
                        deflated,
                        point,
                        trace,
                        diagnosis,
                        strategy: Strategy::Cdss,
                        attempts: Vec::new(),
                    };
                    if exact {
                        return Ok(RefineOutcome { attempts, ..outcome });
                    }
                    let slow = outcome.diagnosis.convergence != Convergence::Quadratic;
                    let refined = outcome.deflated.project(outcome.point.coords()).to_vec();
                    best.get_or_insert(outcome);
                    if slow && !rejudged && k < opts.max_retries {
                        // judge again where Newton ended up
                        if let Ok(r) = system.max_residual(&refined) {
                            if r.is_finite() && r <= opts.residual_bound {
                                rejudged = true;
                                start = refined;
                                continue;
                            }
                        }
                    }
                    let misjudged = theta2 > theta1 || theta2 > theta1 / 100.0;
                    if !misjudged || k == opts.max_retries {
                        break;
                    }
                    theta = ThetaPolicy::Fixed(theta1.min(theta2) / 10.0);
                    lowered = true;
                }
                Err(DeflationError::Harvest {
                    source: HarvestError::Exhausted { .. },
                    ..
                }) if k < opts.max_retries => {
                    attempt.error = Some("harvest exhausted; lowering theta".into());
                    attempts.push(attempt);
                    theta = ThetaPolicy::Fixed(theta1 / 10.0);
                    lowered = true;
                }
                Err(
                    e @ (DeflationError::NotFullRank { .. }
                    | DeflationError::RoundCap { .. }
                    | DeflationError::VariableCap { .. }),
                ) if !lowered && k < opts.max_retries && theta1 < 0.1 => {
                    // a singular input judged regular leaves a rank gap no
                    // combination closes
                    attempt.error = Some(format!("{e}; raising theta"));
                    attempts.push(attempt);
                    theta = ThetaPolicy::Fixed(theta1 * 10.0);
                }
                Err(e) => {
                    attempt.error = Some(e.to_string());
                    attempts.push(attempt);
                    break;
                }
            }
        }
    }
    match rank_guess_pipeline(system, p0, &opts.rank_guess_options()) {
        Ok(rg) => {
            attempts.push(Attempt {
                strategy: Strategy::RankGuess,
                theta: None,
                final_size: Some(rg.deflated.size()),
                diagnosis: Some(rg.diagnosis.clone()),
                error: None,
            });
            return Ok(RefineOutcome {
                deflated: rg.deflated,
                point: rg.point,
                trace: rg.trace,
                diagnosis: rg.diagnosis,
                strategy: Strategy::RankGuess,
                attempts,
            });
        }
        Err(e) => attempts.push(Attempt {
            strategy: Strategy::RankGuess,
            theta: None,
            final_size: None,
            diagnosis: None,
            error: Some(e.to_string()),
        }),
    }
    match best {
        Some(b) => Ok(RefineOutcome { attempts, ..b }),
        None => Err(RefineError::Exhausted { attempts }),
    }
}
