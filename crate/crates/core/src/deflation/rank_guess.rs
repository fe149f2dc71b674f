//! Deflation without regularity tolerances: guess the numerical rank of the
//! Jacobian (from full rank downwards), deflate accordingly and accept the
//! first branch whose Newton run converges quadratically to a point where
//! the inputs vanish.

use serde::{Deserialize, Serialize};

use super::{check_input, extract_with_fill, greedy_rows, DeflatedSystem, DeflationError, DeflationState};
use crate::exec::Execution;
use crate::linalg::RankMode;
use crate::poly::{Point, PolySystem};
use crate::refine::{diagnose, Convergence, Diagnosis, IterationTrace, Verdict, DEFAULT_MAX_ITER};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankGuessOptions {
    pub eps: f64,
    pub rank_mode: RankMode,
    pub theta_prime: f64,
    pub max_iter: usize,
    /// Nested combination rounds explored below a top-level guess.
    pub max_depth: usize,
    /// Search nodes visited per top-level guess.
    pub max_nodes: usize,
    /// Relative singular-value cutoff used to complete a forced selection.
    pub fill_tol: f64,
    pub residual_bound: f64,
    pub execution: Execution,
}

impl Default for RankGuessOptions {
    fn default() -> Self {
        RankGuessOptions {
            eps: 0.005,
            rank_mode: RankMode::Absolute,
            theta_prime: 1e-12,
            max_iter: DEFAULT_MAX_ITER,
            max_depth: 3,
            max_nodes: 64,
            fill_tol: 1e-10,
            residual_bound: 1e-2,
            execution: Execution::default(),
        }
    }
}

/// One explored leaf: a square system refined and judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    /// Rank guesses along the path, outermost first.
    pub guesses: Vec<usize>,
    /// `(H1, h)` combinations along the path.
    pub combinations: Vec<(Vec<usize>, usize)>,
    pub size: Option<usize>,
    pub convergence: Option<Convergence>,
    pub delta: Option<f64>,
    pub accepted: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RankGuessOutcome {
    pub deflated: DeflatedSystem,
    pub point: Point,
    pub trace: IterationTrace,
    pub diagnosis: Diagnosis,
    /// Every explored leaf in search order, up to and including the accepted
    /// one.
    pub branches: Vec<BranchReport>,
}

struct Accepted {
    deflated: DeflatedSystem,
    point: Point,
    trace: IterationTrace,
    diagnosis: Diagnosis,
}

struct Search<'a> {
    opts: &'a RankGuessOptions,
    nodes: usize,
    reports: Vec<BranchReport>,
}

impl Search<'_> {
    fn branch(
        &mut self,
        state: &DeflationState,
        guess: usize,
        depth: usize,
        guesses: &[usize],
        combos: &[(Vec<usize>, usize)],
    ) -> Option<Accepted> {
        if self.nodes >= self.opts.max_nodes {
            return None;
        }
        self.nodes += 1;
        let mut path = guesses.to_vec();
        path.push(guess);
        if guess == state.nvars() {
            return self.leaf(state, path, combos);
        }
        if depth >= self.opts.max_depth || guess == 0 {
            return None;
        }
        let jac = state.jacobian();
        let order: Vec<usize> = (0..state.members.len()).collect();
        let mut subset = greedy_rows(&jac, &order, guess, self.opts.eps, self.opts.rank_mode).ok()?;
        if subset.len() < guess {
            let rest: Vec<usize> = order.iter().copied().filter(|i| !subset.contains(i)).collect();
            let filled = greedy_rows(&jac.select_rows(&rest), &(0..rest.len()).collect::<Vec<_>>(), guess - subset.len(), self.opts.fill_tol, RankMode::Relative).ok()?;
            let mut trial = subset.clone();
            trial.extend(filled.iter().map(|&k| rest[k]));
            if trial.len() < guess {
                return None;
            }
            subset = trial;
            subset.sort_unstable();
        }
        for target in (0..state.members.len()).filter(|i| !subset.contains(i)) {
            let Ok(child) = state.augmented(&subset, target) else { continue };
            let mut child_combos = combos.to_vec();
            child_combos.push((subset.clone(), target));
            for g in (guess.max(1)..=child.nvars()).rev() {
                if let Some(a) = self.branch(&child, g, depth + 1, &path, &child_combos) {
                    return Some(a);
                }
                if self.nodes >= self.opts.max_nodes {
                    return None;
                }
            }
        }
        None
    }

    fn leaf(&mut self, state: &DeflationState, guesses: Vec<usize>, combos: &[(Vec<usize>, usize)]) -> Option<Accepted> {
        let mut report = BranchReport {
            guesses,
            combinations: combos.to_vec(),
            size: None,
            convergence: None,
            delta: None,
            accepted: false,
            error: None,
        };
        let deflated = match extract_with_fill(state, self.opts.eps, self.opts.rank_mode, Some(self.opts.fill_tol)) {
            Ok(d) => d,
            Err(e) => {
                report.error = Some(e.to_string());
                self.reports.push(report);
                return None;
            }
        };
        report.size = Some(deflated.size());
        match diagnose(&deflated, self.opts.theta_prime, self.opts.max_iter) {
            Ok((point, trace, diagnosis)) => {
                report.convergence = Some(diagnosis.convergence);
                report.delta = Some(diagnosis.delta);
                report.accepted = diagnosis.verdict == Verdict::Exact;
                self.reports.push(report);
                (diagnosis.verdict == Verdict::Exact).then_some(Accepted {
                    deflated,
                    point,
                    trace,
                    diagnosis,
                })
            }
            Err(e) => {
                report.error = Some(e.to_string());
                self.reports.push(report);
                None
            }
        }
    }
}

/// Rank-guess deflation: for each guess `r = n, n-1, ..., 1` of the rank of
/// `J(F)(p)`, deflate with an `r`-row subset and every remaining equation as
/// the combination target, recursing on the augmented system. The first
/// branch (in that order) judged exact wins.
///
/// Top-level guesses are explored independently and may run in parallel;
/// the winner does not depend on the execution mode.
pub fn rank_guess_pipeline(
    system: &PolySystem,
    point: &[f64],
    opts: &RankGuessOptions,
) -> Result<RankGuessOutcome, DeflationError> {
    check_input(system, point, opts.residual_bound)?;
    let root = DeflationState::new(system, point)?;
    let n = root.nvars();
    let guesses: Vec<usize> = (1..=n).rev().collect();
    let results = opts.execution.map(guesses, |g| {
        let mut search = Search {
            opts,
            nodes: 0,
            reports: Vec::new(),
        };
        let accepted = search.branch(&root, g, 0, &[], &[]);
        (accepted, search.reports)
    });
    let mut branches = Vec::new();
    for (accepted, reports) in results {
        branches.extend(reports);
        if let Some(a) = accepted {
            return Ok(RankGuessOutcome {
                deflated: a.deflated,
                point: a.point,
                trace: a.trace,
                diagnosis: a.diagnosis,
                branches,
            });
        }
    }
    Err(DeflationError::BranchesExhausted { branches })
}
