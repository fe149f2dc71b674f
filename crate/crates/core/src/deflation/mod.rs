//! Deflation by combination and differentiation: grow an augmented system
//! over `(x, alpha)` until its Jacobian has full numerical rank, then pick a
//! square subsystem.

mod rank_guess;

pub use rank_guess::{rank_guess_pipeline, BranchReport, RankGuessOptions, RankGuessOutcome};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError, Matrix, RankMode};
use crate::poly::{Monomial, Point, PolyError, PolySystem, Polynomial, Variables};
use crate::regularity::{harvest_regular_derivatives, HarvestError, RegularityKind, ThetaPolicy};

#[derive(Debug, Error)]
pub enum DeflationError {
    #[error("system is not square: {equations} equations in {variables} variables")]
    NotSquare { equations: usize, variables: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("point is not an approximate zero: residual {residual:e} exceeds {bound:e}")]
    NotNearZero { residual: f64, bound: f64 },
    #[error("harvest failed for equation {input}: {source}")]
    Harvest {
        input: usize,
        #[source]
        source: HarvestError,
    },
    #[error("no full-rank system after {rounds} combination rounds")]
    RoundCap { rounds: usize, trace: Vec<TraceEvent> },
    #[error("variable count {count} exceeds the cap {cap}")]
    VariableCap { count: usize, cap: usize, trace: Vec<TraceEvent> },
    #[error("could not select {needed} independent equations (rank {rank})")]
    NotFullRank { rank: usize, needed: usize },
    #[error("no rank-guess branch was accepted ({} branches tried)", branches.len())]
    BranchesExhausted { branches: Vec<BranchReport> },
    #[error("invalid combination: {0}")]
    InvalidCombination(String),
}

/// Where an active polynomial came from. Indices refer to the input system
/// (`input`), the active set (`member`) or the combination list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Input { index: usize },
    /// `d^gamma f_input`
    Derivative { input: usize, gamma: Monomial },
    /// `d g / d v` for a combination `g`.
    CombinationDerivative { combination: usize, variable: usize },
    /// `d h / d v` for an earlier member `h`.
    Partial { member: usize, variable: usize },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Input { index } => write!(f, "f{}", index + 1),
            Provenance::Derivative { input, gamma } => {
                write!(f, "d^{:?} f{}", gamma.exponents(), input + 1)
            }
            Provenance::CombinationDerivative {
                combination,
                variable,
            } => write!(f, "dg{}/dv{}", combination + 1, variable + 1),
            Provenance::Partial { member, variable } => {
                write!(f, "dh{}/dv{}", member + 1, variable + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub poly: Polynomial,
    pub provenance: Provenance,
    pub round: usize,
}

/// `g = h + sum_j alpha_j h_j` built in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub round: usize,
    /// Active-set index of `h`.
    pub target: usize,
    /// `(active-set index of h_j, variable index of alpha_j)`
    pub partners: Vec<(usize, usize)>,
    pub poly: Polynomial,
    pub alpha_init: Vec<f64>,
    /// The least-squares problem for `alpha` was rank deficient.
    pub rank_deficient: bool,
}

/// How a polynomial was judged when the system was built; feeds the
/// post-refinement error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Judgement {
    Regular,
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Judged {
    pub poly: Polynomial,
    pub judgement: Judgement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceEvent {
    Harvest {
        input: usize,
        theta: f64,
        verdict: RegularityKind,
        produced: usize,
    },
    Rank {
        round: usize,
        rank: usize,
        needed: usize,
    },
    Select {
        round: usize,
        subset: Vec<usize>,
    },
    Combine {
        round: usize,
        target: usize,
        alpha_init: Vec<f64>,
        deficiency_after: usize,
        accepted: bool,
    },
    RankZero {
        round: usize,
        added: usize,
    },
    Extract {
        members: Vec<usize>,
    },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Harvest {
                input,
                theta,
                verdict,
                produced,
            } => write!(f, "harvest f{} theta={theta:e} {verdict:?} -> {produced}", input + 1),
            TraceEvent::Rank {
                round,
                rank,
                needed,
            } => write!(f, "round {round}: rank {rank} of {needed}"),
            TraceEvent::Select { round, subset } => write!(f, "round {round}: H1 = {subset:?}"),
            TraceEvent::Combine {
                round,
                target,
                alpha_init,
                deficiency_after,
                accepted,
            } => write!(
                f,
                "round {round}: combine h={target} alpha={alpha_init:?} deficiency {deficiency_after} {}",
                if *accepted { "accepted" } else { "rejected" }
            ),
            TraceEvent::RankZero { round, added } => {
                write!(f, "round {round}: rank 0, added {added} partials")
            }
            TraceEvent::Extract { members } => write!(f, "extract {members:?}"),
        }
    }
}

/// The evolving active set `H` over `(x, alpha)`.
#[derive(Debug, Clone)]
pub struct DeflationState {
    inputs: PolySystem,
    vars: Variables,
    members: Vec<Member>,
    combinations: Vec<Combination>,
    point: Vec<f64>,
    round: usize,
    last_subset: Vec<usize>,
    judged: Vec<Judged>,
    trace: Vec<TraceEvent>,
}

impl DeflationState {
    /// Active set equal to the input system.
    pub fn new(inputs: &PolySystem, point: &[f64]) -> Result<Self, DeflationError> {
        if point.len() != inputs.nvars() {
            return Err(PolyError::DimensionMismatch {
                expected: inputs.nvars(),
                got: point.len(),
            }
            .into());
        }
        let members = inputs
            .polys()
            .iter()
            .enumerate()
            .map(|(index, f)| Member {
                poly: f.clone(),
                provenance: Provenance::Input { index },
                round: 0,
            })
            .collect();
        Ok(DeflationState {
            inputs: inputs.clone(),
            vars: inputs.vars().clone(),
            members,
            combinations: Vec::new(),
            point: point.to_vec(),
            round: 0,
            last_subset: Vec::new(),
            judged: Vec::new(),
            trace: Vec::new(),
        })
    }

    /// Active set built from regular derivatives of the inputs, followed by
    /// the inputs that were replaced.
    pub fn harvested(
        inputs: &PolySystem,
        point: &[f64],
        theta: &ThetaPolicy,
    ) -> Result<Self, DeflationError> {
        let mut state = Self::new(inputs, point)?;
        state.members.clear();
        let mut replaced = Vec::new();
        for (i, f) in inputs.polys().iter().enumerate() {
            let t = theta.resolve(f);
            let harvest = harvest_regular_derivatives(f, point, t)
                .map_err(|source| DeflationError::Harvest { input: i, source })?;
            let kept = harvest.len() == 1 && harvest[0].gamma.is_one();
            state.trace.push(TraceEvent::Harvest {
                input: i,
                theta: t,
                verdict: if kept {
                    RegularityKind::ThetaRegular
                } else {
                    RegularityKind::ThetaSingular
                },
                produced: harvest.len(),
            });
            state.judged.push(Judged {
                poly: f.clone(),
                judgement: if kept {
                    Judgement::Regular
                } else {
                    Judgement::Singular
                },
            });
            if kept {
                state.members.push(Member {
                    poly: f.clone(),
                    provenance: Provenance::Input { index: i },
                    round: 0,
                });
                continue;
            }
            replaced.push(i);
            for h in harvest {
                state.judged.push(Judged {
                    poly: h.poly.clone(),
                    judgement: Judgement::Regular,
                });
                if state.members.iter().any(|m| m.poly == h.poly) {
                    continue;
                }
                state.members.push(Member {
                    poly: h.poly,
                    provenance: Provenance::Derivative {
                        input: i,
                        gamma: h.gamma,
                    },
                    round: 0,
                });
            }
        }
        for i in replaced {
            state.members.push(Member {
                poly: inputs.polys()[i].clone(),
                provenance: Provenance::Input { index: i },
                round: 0,
            });
        }
        Ok(state)
    }

    pub fn inputs(&self) -> &PolySystem {
        &self.inputs
    }

    pub fn vars(&self) -> &Variables {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_original(&self) -> usize {
        self.inputs.nvars()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn combinations(&self) -> &[Combination] {
        &self.combinations
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn judged(&self) -> &[Judged] {
        &self.judged
    }

    /// Jacobian of the whole active set at the current point.
    pub fn jacobian(&self) -> Matrix {
        let n = self.nvars();
        let mut j = Matrix::zeros(self.members.len(), n);
        for (i, m) in self.members.iter().enumerate() {
            for v in 0..n {
                j[(i, v)] = m.poly.partial(v).eval_unchecked(&self.point);
            }
        }
        j
    }

    pub fn rank(&self, eps: f64, mode: RankMode) -> Result<usize, LinalgError> {
        linalg::numerical_rank(&self.jacobian(), eps, mode)
    }

    fn alpha_name(&self, k: usize) -> String {
        let mut name = format!("alpha{k}");
        while self.vars.contains(&name) {
            name.push('_');
        }
        name
    }

    /// Adds the partials of every member (used when the Jacobian vanishes).
    fn add_all_partials(&mut self) -> usize {
        let before = self.members.len();
        for idx in 0..before {
            for v in 0..self.nvars() {
                let d = self.members[idx].poly.partial(v);
                if d.is_zero() || d.is_constant() || self.members.iter().any(|m| m.poly == d) {
                    continue;
                }
                self.members.push(Member {
                    poly: d,
                    provenance: Provenance::Partial {
                        member: idx,
                        variable: v,
                    },
                    round: self.round,
                });
            }
        }
        self.members.len() - before
    }

    /// Applies a combination computed by [`combine_and_differentiate`].
    pub fn apply(&mut self, subset: &[usize], target: usize, aug: Augmentation) {
        let old_n = self.nvars();
        self.round += 1;
        for m in &mut self.members {
            m.poly = m.poly.extend_vars(&aug.vars).expect("new variables extend the old list");
        }
        for j in &mut self.judged {
            j.poly = j.poly.extend_vars(&aug.vars).expect("new variables extend the old list");
        }
        let c = self.combinations.len();
        self.combinations.push(Combination {
            round: self.round,
            target,
            partners: subset
                .iter()
                .enumerate()
                .map(|(j, &m)| (m, old_n + j))
                .collect(),
            poly: aug.combination.clone(),
            alpha_init: aug.alpha_init.clone(),
            rank_deficient: aug.rank_deficient,
        });
        self.judged.push(Judged {
            poly: aug.combination,
            judgement: Judgement::Singular,
        });
        for (v, poly) in aug.new_polys.into_iter().enumerate() {
            self.members.push(Member {
                poly,
                provenance: Provenance::CombinationDerivative {
                    combination: c,
                    variable: v,
                },
                round: self.round,
            });
        }
        self.vars = aug.vars;
        self.point.extend_from_slice(&aug.alpha_init);
        self.last_subset = subset.to_vec();
    }

    /// Combination of `target` with `subset` applied to a copy of the state.
    pub fn augmented(&self, subset: &[usize], target: usize) -> Result<Self, DeflationError> {
        let aug = combine_and_differentiate(subset, target, self)?;
        let mut next = self.clone();
        next.apply(subset, target, aug);
        Ok(next)
    }
}

/// Result of one combination step, not yet applied to the state.
#[derive(Debug, Clone)]
pub struct Augmentation {
    pub alpha_init: Vec<f64>,
    /// `g = h + sum_j alpha_j h_j` over the extended variables.
    pub combination: Polynomial,
    /// `d g / d v` for every variable `v` present before this step.
    pub new_polys: Vec<Polynomial>,
    pub vars: Variables,
    pub rank_deficient: bool,
}

/// Builds `g = h + sum_j alpha_j h_j` with fresh variables `alpha_j`, starts
/// them at the least-squares solution of `J(H1, h)^T (alpha, 1) = 0` and
/// differentiates `g` with respect to every existing variable.
pub fn combine_and_differentiate(
    subset: &[usize],
    target: usize,
    state: &DeflationState,
) -> Result<Augmentation, DeflationError> {
    let nm = state.members.len();
    if subset.is_empty() {
        return Err(DeflationError::InvalidCombination("empty subset".into()));
    }
    if target >= nm || subset.iter().any(|&i| i >= nm) || subset.contains(&target) {
        return Err(DeflationError::InvalidCombination(format!(
            "target {target} / subset {subset:?} out of range or overlapping"
        )));
    }
    let n = state.nvars();
    let rows: Vec<usize> = subset.iter().copied().chain([target]).collect();
    let stack = state.jacobian().select_rows(&rows);
    let ls = linalg::least_squares_combination(&stack)?;

    let base_alpha = n - state.n_original();
    let mut names: Vec<String> = state.vars.to_vec();
    for j in 0..subset.len() {
        names.push(state.alpha_name(base_alpha + j + 1));
    }
    let vars: Variables = names.into();
    let mut g = state.members[target].poly.extend_vars(&vars)?;
    for (j, &m) in subset.iter().enumerate() {
        let hj = state.members[m].poly.extend_vars(&vars)?;
        g = &g + &hj.mul_var(n + j);
    }
    let new_polys = (0..n).map(|v| g.partial(v)).collect();
    Ok(Augmentation {
        alpha_init: ls.x,
        combination: g,
        new_polys,
        vars,
        rank_deficient: ls.rank_deficient,
    })
}

/// Greedy row selection: walks `order` and keeps a row when it raises the
/// numerical rank, until `target` rows are kept.
pub(crate) fn greedy_rows(
    j: &Matrix,
    order: &[usize],
    target: usize,
    eps: f64,
    mode: RankMode,
) -> Result<Vec<usize>, LinalgError> {
    let mut chosen: Vec<usize> = Vec::new();
    for &i in order {
        if chosen.len() == target {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(i);
        if linalg::numerical_rank(&j.select_rows(&trial), eps, mode)? == trial.len() {
            chosen = trial;
        }
    }
    Ok(chosen)
}

/// Indices of `r` polynomials whose Jacobian at `p` has numerical rank `r`,
/// chosen greedily in list order.
pub fn select_full_rank_subset(
    polys: &[Polynomial],
    p: &[f64],
    eps: f64,
    mode: RankMode,
    r: usize,
) -> Result<Vec<usize>, DeflationError> {
    if r == 0 || polys.is_empty() {
        return Ok(Vec::new());
    }
    let n = polys[0].nvars();
    let jac = crate::poly::JacobianPolys::from_polys(polys, n).evaluate(p)?;
    let order: Vec<usize> = (0..polys.len()).collect();
    let chosen = greedy_rows(&jac, &order, r, eps, mode)?;
    if chosen.len() < r {
        return Err(DeflationError::NotFullRank {
            rank: chosen.len(),
            needed: r,
        });
    }
    Ok(chosen)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdssOptions {
    pub theta: ThetaPolicy,
    pub eps: f64,
    pub rank_mode: RankMode,
    pub max_rounds: usize,
    /// Largest input residual accepted at the starting point.
    pub residual_bound: f64,
    /// Known multiplicity; bounds the variable count by `2^mu * n`.
    pub multiplicity: Option<u32>,
    /// Hard cap on the number of variables.
    pub max_vars: usize,
    /// Combination targets tried per round before settling for the last.
    pub max_candidates: usize,
}

impl Default for CdssOptions {
    fn default() -> Self {
        CdssOptions {
            theta: ThetaPolicy::default(),
            eps: 0.005,
            rank_mode: RankMode::Absolute,
            max_rounds: 32,
            residual_bound: 1e-2,
            multiplicity: None,
            max_vars: 512,
            max_candidates: 16,
        }
    }
}

/// A square system over `(x, alpha)` with its starting point and history.
#[derive(Debug, Clone)]
pub struct DeflatedSystem {
    pub system: PolySystem,
    pub point: Point,
    pub n_original: usize,
    pub rounds: usize,
    /// Selected members, parallel to `system.polys()`.
    pub members: Vec<Member>,
    /// Active-set indices of the selected members.
    pub selected: Vec<usize>,
    pub active_size: usize,
    pub combinations: Vec<Combination>,
    pub judged: Vec<Judged>,
    pub trace: Vec<TraceEvent>,
    pub inputs: PolySystem,
}

impl DeflatedSystem {
    pub fn size(&self) -> usize {
        self.system.len()
    }

    pub fn n_alpha(&self) -> usize {
        self.system.nvars() - self.n_original
    }

    /// Square size plus the inputs that do not appear in the square system.
    pub fn poly_count(&self) -> usize {
        let present = |i: usize| {
            self.members
                .iter()
                .any(|m| m.provenance == Provenance::Input { index: i })
        };
        self.size() + (0..self.inputs.len()).filter(|&i| !present(i)).count()
    }

    /// Largest degree in the original variables over the square system.
    pub fn max_x_degree(&self) -> u32 {
        let xs: Vec<usize> = (0..self.n_original).collect();
        self.system
            .polys()
            .iter()
            .map(|f| f.degree_in(&xs))
            .max()
            .unwrap_or(0)
    }

    /// Largest value at the starting point among selected members that are
    /// derivatives of inputs: a bound on the constant each could be off by
    /// when its input was judged singular by mistake.
    pub fn perturbation_bound(&self) -> f64 {
        let x = &self.point.coords()[..self.n_original];
        self.members
            .iter()
            .filter(|m| matches!(m.provenance, Provenance::Derivative { .. }))
            .map(|m| m.poly.eval_unchecked(&padded(x, m.poly.nvars())).abs())
            .fold(0.0, f64::max)
    }

    pub fn project<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[..self.n_original]
    }

    pub fn trace_log(&self) -> String {
        self.trace.iter().map(|e| format!("{e}\n")).collect()
    }
}

fn padded(x: &[f64], n: usize) -> Vec<f64> {
    let mut v = x.to_vec();
    v.resize(n, 0.0);
    v
}

/// Picks `|variables|` members with a full-rank Jacobian, preferring the
/// latest round's derivatives, then the latest `H1`, then the rest in
/// active-set order. The result is listed in active-set order.
pub fn extract_square_system(
    state: &DeflationState,
    eps: f64,
    mode: RankMode,
) -> Result<DeflatedSystem, DeflationError> {
    extract_with_fill(state, eps, mode, None)
}

pub(crate) fn extract_with_fill(
    state: &DeflationState,
    eps: f64,
    mode: RankMode,
    fill_tol: Option<f64>,
) -> Result<DeflatedSystem, DeflationError> {
    let n = state.nvars();
    let order = preference_order(state);
    let jac = state.jacobian();
    let mut chosen = greedy_rows(&jac, &order, n, eps, mode)?;
    if chosen.len() < n {
        if let Some(tol) = fill_tol {
            let rest: Vec<usize> = order.iter().copied().filter(|i| !chosen.contains(i)).collect();
            for i in rest {
                if chosen.len() == n {
                    break;
                }
                let mut trial = chosen.clone();
                trial.push(i);
                if linalg::numerical_rank(&jac.select_rows(&trial), tol, RankMode::Relative)? == trial.len() {
                    chosen = trial;
                }
            }
        }
    }
    if chosen.len() < n {
        return Err(DeflationError::NotFullRank {
            rank: chosen.len(),
            needed: n,
        });
    }
    chosen.sort_unstable();
    let members: Vec<Member> = chosen.iter().map(|&i| state.members[i].clone()).collect();
    let system = PolySystem::new(members.iter().map(|m| m.poly.clone()).collect())?;
    let mut trace = state.trace.clone();
    trace.push(TraceEvent::Extract {
        members: chosen.clone(),
    });
    Ok(DeflatedSystem {
        system,
        point: Point::new(state.point.clone())?,
        n_original: state.n_original(),
        rounds: state.round,
        members,
        selected: chosen,
        active_size: state.members.len(),
        combinations: state.combinations.clone(),
        judged: state.judged.clone(),
        trace,
        inputs: state.inputs.clone(),
    })
}

fn preference_order(state: &DeflationState) -> Vec<usize> {
    let latest: Vec<usize> = (0..state.members.len())
        .filter(|&i| {
            state.round > 0
                && state.members[i].round == state.round
                && matches!(state.members[i].provenance, Provenance::CombinationDerivative { .. })
        })
        .collect();
    let mut order = latest.clone();
    order.extend(state.last_subset.iter().copied().filter(|i| !latest.contains(i)));
    let rest: Vec<usize> = (0..state.members.len()).filter(|i| !order.contains(i)).collect();
    order.extend(rest);
    order
}

fn check_input(system: &PolySystem, point: &[f64], bound: f64) -> Result<(), DeflationError> {
    if !system.is_square() {
        return Err(DeflationError::NotSquare {
            equations: system.len(),
            variables: system.nvars(),
        });
    }
    let residual = system.max_residual(point)?;
    if residual > bound {
        return Err(DeflationError::NotNearZero { residual, bound });
    }
    Ok(())
}

/// Combination rounds on `state` until its Jacobian has full numerical rank.
pub fn deflate_state(state: &mut DeflationState, opts: &CdssOptions) -> Result<(), DeflationError> {
    let var_cap = match opts.multiplicity {
        Some(mu) if mu < 20 => opts.max_vars.min((1usize << mu) * state.n_original()),
        _ => opts.max_vars,
    };
    loop {
        let needed = state.nvars();
        let jac = state.jacobian();
        let rank = linalg::numerical_rank(&jac, opts.eps, opts.rank_mode)?;
        state.trace.push(TraceEvent::Rank {
            round: state.round,
            rank,
            needed,
        });
        if rank >= needed {
            return Ok(());
        }
        if state.round >= opts.max_rounds {
            return Err(DeflationError::RoundCap {
                rounds: state.round,
                trace: state.trace.clone(),
            });
        }
        if needed + rank > var_cap {
            return Err(DeflationError::VariableCap {
                count: needed + rank,
                cap: var_cap,
                trace: state.trace.clone(),
            });
        }
        if rank == 0 {
            state.round += 1;
            let added = state.add_all_partials();
            state.trace.push(TraceEvent::RankZero {
                round: state.round,
                added,
            });
            if added == 0 {
                return Err(DeflationError::NotFullRank { rank, needed });
            }
            continue;
        }
        let order: Vec<usize> = (0..state.members.len()).collect();
        let subset = greedy_rows(&jac, &order, rank, opts.eps, opts.rank_mode)?;
        state.trace.push(TraceEvent::Select {
            round: state.round + 1,
            subset: subset.clone(),
        });
        let deficiency = needed - rank;
        let mut chosen: Option<DeflationState> = None;
        let mut events = Vec::new();
        for target in (0..state.members.len())
            .filter(|i| !subset.contains(i))
            .take(opts.max_candidates.max(1))
        {
            let next = state.augmented(&subset, target)?;
            let next_rank = next.rank(opts.eps, opts.rank_mode)?;
            let next_def = next.nvars().saturating_sub(next_rank);
            let accepted = next_def < deficiency;
            events.push(TraceEvent::Combine {
                round: next.round,
                target,
                alpha_init: next.combinations.last().map(|c| c.alpha_init.clone()).unwrap_or_default(),
                deficiency_after: next_def,
                accepted,
            });
            chosen = Some(next);
            if accepted {
                break;
            }
        }
        let Some(mut next) = chosen else {
            return Err(DeflationError::NotFullRank { rank, needed });
        };
        let mut trace = std::mem::take(&mut state.trace);
        trace.extend(events);
        next.trace = trace;
        *state = next;
    }
}

/// Deflated square system for `system` near `point`.
///
/// Regular derivatives of the inputs seed the active set; combinations
/// `h + sum alpha_j h_j` and their derivatives are added until the Jacobian
/// has full numerical rank, then a square subsystem is extracted.
pub fn cdss(system: &PolySystem, point: &[f64], opts: &CdssOptions) -> Result<DeflatedSystem, DeflationError> {
    if point.len() != system.nvars() {
        return Err(PolyError::DimensionMismatch {
            expected: system.nvars(),
            got: point.len(),
        }
        .into());
    }
    check_input(system, point, opts.residual_bound)?;
    let mut state = DeflationState::harvested(system, point, &opts.theta)?;
    deflate_state(&mut state, opts)?;
    extract_square_system(&state, opts.eps, opts.rank_mode)
}

#[cfg(test)]
mod tests;
