//! End-to-end runs (deflate, refine, certify) and their tabular summaries.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::corpus::BenchmarkCase;
use crate::exec::Execution;
use crate::poly::PolySystem;
use crate::refine::{adaptive_refine, Convergence, RefineError, RefineOptions, RefineOutcome, Strategy, Verdict};
use crate::regularity::ThetaPolicy;
use crate::verify::{krawczyk_verify, IntervalVector, KrawczykOptions, VerifiedInclusion, VerifyError};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineOptions {
    pub refine: RefineOptions,
    /// Skip interval certification.
    pub no_verify: bool,
    pub krawczyk: KrawczykOptions,
}

impl PipelineOptions {
    /// Applies a case's recommended tolerances on top of `self`.
    pub fn for_case(&self, case: &BenchmarkCase) -> PipelineOptions {
        let mut o = *self;
        if let Some(t) = case.tolerances.theta {
            o.refine.theta = ThetaPolicy::Fixed(t);
        }
        if let Some(e) = case.tolerances.eps {
            o.refine.eps = e;
        }
        o.refine.force_rank_guess |= case.tolerances.rank_guess;
        if o.refine.multiplicity.is_none() {
            o.refine.multiplicity = case.reference_multiplicity.and_then(|m| u32::try_from(m).ok());
        }
        o
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub outcome: RefineOutcome,
    pub inclusion: Result<VerifiedInclusion, VerifyError>,
    pub elapsed: Duration,
}

impl PipelineRun {
    pub fn verified(&self) -> bool {
        self.inclusion.is_ok()
    }

    /// Certified box for the original unknowns.
    pub fn projected_inclusion(&self) -> Option<IntervalVector> {
        let n = self.outcome.deflated.n_original;
        self.inclusion.as_ref().ok().map(|v| v.project(n))
    }

    pub fn report(&self, name: &str, input: &PolySystem, multiplicity: Option<u64>) -> RunReport {
        let d = &self.outcome.deflated;
        let diag = &self.outcome.diagnosis;
        RunReport {
            name: name.to_string(),
            n_vars: input.nvars(),
            multiplicity,
            n_alpha: Some(d.n_alpha()),
            final_size: Some(d.size()),
            poly_count: Some(d.poly_count()),
            no_deflation_needed: d.size() == input.len() && d.n_alpha() == 0 && d.system == *input,
            verdict: Some(diag.verdict),
            convergence: Some(diag.convergence),
            strategy: Some(self.outcome.strategy),
            retries: self.outcome.retries(),
            delta: Some(diag.delta),
            max_err: Some(diag.max_err),
            perturbation: (diag.verdict == Verdict::Perturbed).then(|| d.perturbation_bound()),
            breadth: self.inclusion.as_ref().ok().map(|v| v.breadth),
            inclusion: self.projected_inclusion(),
            verify_error: self.inclusion.as_ref().err().map(ToString::to_string),
            point: self.outcome.point.coords().to_vec(),
            max_x_degree: Some(d.max_x_degree()),
            input_degree: input.total_degree(),
            seconds: self.elapsed.as_secs_f64(),
            error: None,
        }
    }
}

/// Refine and, unless disabled, certify.
pub fn run_pipeline(system: &PolySystem, p0: &[f64], opts: &PipelineOptions) -> Result<PipelineRun, RefineError> {
    let start = Instant::now();
    let outcome = adaptive_refine(system, p0, &opts.refine)?;
    let inclusion = if opts.no_verify {
        Err(VerifyError::NoContraction { inflations: 0 })
    } else {
        krawczyk_verify(&outcome.deflated.system, outcome.point.coords(), &opts.krawczyk)
    };
    Ok(PipelineRun {
        outcome,
        inclusion,
        elapsed: start.elapsed(),
    })
}

/// One row of a result table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub n_vars: usize,
    pub multiplicity: Option<u64>,
    pub n_alpha: Option<usize>,
    /// Equations (and unknowns) of the square deflated system.
    pub final_size: Option<usize>,
    /// Final size plus the inputs left out of the deflated system.
    pub poly_count: Option<usize>,
    pub no_deflation_needed: bool,
    pub verdict: Option<Verdict>,
    pub convergence: Option<Convergence>,
    pub strategy: Option<Strategy>,
    pub retries: usize,
    pub delta: Option<f64>,
    pub max_err: Option<f64>,
    /// Size of the perturbation terms when the verdict is perturbed.
    pub perturbation: Option<f64>,
    /// Width of the certified box; `None` when unverified.
    pub breadth: Option<f64>,
    /// Certified box over the original unknowns.
    pub inclusion: Option<IntervalVector>,
    pub verify_error: Option<String>,
    pub point: Vec<f64>,
    pub max_x_degree: Option<u32>,
    pub input_degree: u32,
    pub seconds: f64,
    pub error: Option<String>,
}

impl RunReport {
    pub fn failed(case: &BenchmarkCase, error: String, seconds: f64) -> Self {
        RunReport {
            name: case.name.clone(),
            n_vars: case.system.nvars(),
            multiplicity: case.reference_multiplicity,
            n_alpha: None,
            final_size: None,
            poly_count: None,
            no_deflation_needed: false,
            verdict: None,
            convergence: None,
            strategy: None,
            retries: 0,
            delta: None,
            max_err: None,
            perturbation: None,
            breadth: None,
            inclusion: None,
            verify_error: None,
            point: Vec::new(),
            max_x_degree: None,
            input_degree: case.system.total_degree(),
            seconds,
            error: Some(error),
        }
    }

    /// Exit status for a single run: 0 exact and certified, 2 perturbed,
    /// 3 exact but not certified, 1 failed.
    pub fn exit_code(&self) -> i32 {
        match (self.verdict, self.breadth) {
            (None, _) => 1,
            (Some(Verdict::Perturbed), _) => 2,
            (Some(Verdict::Exact), Some(_)) => 0,
            (Some(Verdict::Exact), None) => 3,
        }
    }
}

pub fn run_case(case: &BenchmarkCase, opts: &PipelineOptions) -> RunReport {
    let o = opts.for_case(case);
    let start = Instant::now();
    match run_pipeline(&case.system, case.approx_zero.coords(), &o) {
        Ok(run) => run.report(&case.name, &case.system, case.reference_multiplicity),
        Err(e) => RunReport::failed(case, e.to_string(), start.elapsed().as_secs_f64()),
    }
}

/// Runs every case; rows come back in case order whatever the execution
/// mode, and a failing case only affects its own row.
pub fn bench(cases: &[BenchmarkCase], opts: &PipelineOptions, execution: Execution) -> Vec<RunReport> {
    let mut o = *opts;
    // cases already run side by side; keep each one sequential inside
    if execution == Execution::Parallel {
        o.refine.execution = Execution::Sequential;
    }
    execution.map(cases.iter().collect(), |c| run_case(c, &o))
}

/// Magnitude in the `e-14` style of a result table; `true` for an exact
/// zero width.
pub fn magnitude(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("e{}", x.abs().log10().floor() as i32)
}

pub fn format_table(reports: &[RunReport]) -> String {
    let header = ["System", "var", "mul", "Verified acc", "Max err", "time", "Final size"];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            let acc = match (&r.error, r.breadth) {
                (Some(_), _) => "error".to_string(),
                (None, Some(0.0)) => "true".to_string(),
                (None, Some(b)) => magnitude(b),
                (None, None) => "unverified".to_string(),
            };
            let size = match (r.final_size, r.n_alpha) {
                (Some(s), Some(a)) => format!("{s} ({a} new)"),
                _ => "-".into(),
            };
            [
                r.name.clone(),
                r.n_vars.to_string(),
                r.multiplicity.map_or("-".into(), |m| m.to_string()),
                acc,
                r.max_err.map_or("-".into(), magnitude),
                format!("{:.4}", r.seconds),
                size,
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    for r in reports.iter().filter(|r| r.error.is_some()) {
        out.push_str(&format!("{}: {}\n", r.name, r.error.as_deref().unwrap_or_default()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_case;

    #[test]
    fn magnitudes() {
        assert_eq!(magnitude(3.2e-14), "e-14");
        assert_eq!(magnitude(0.0), "0");
        assert_eq!(magnitude(1.060320e-16), "e-16");
    }

    #[test]
    fn empty_bench_is_empty_table() {
        let rows = bench(&[], &PipelineOptions::default(), Execution::Sequential);
        assert!(rows.is_empty());
        assert_eq!(format_table(&rows).lines().count(), 2);
    }

    #[test]
    fn exit_codes_follow_verdicts() {
        let case = load_case("ex3").unwrap();
        let mut r = RunReport::failed(&case, "boom".into(), 0.0);
        assert_eq!(r.exit_code(), 1);
        r.verdict = Some(Verdict::Perturbed);
        r.breadth = Some(1e-16);
        assert_eq!(r.exit_code(), 2);
        r.verdict = Some(Verdict::Exact);
        assert_eq!(r.exit_code(), 0);
        r.breadth = None;
        assert_eq!(r.exit_code(), 3);
    }

    #[test]
    fn dz2_row() {
        let case = load_case("dz2").unwrap();
        let r = run_case(&case, &PipelineOptions::default());
        assert_eq!(r.final_size, Some(3));
        assert_eq!(r.n_alpha, Some(0));
        assert_eq!(r.exit_code(), 0);
        assert!(format_table(&[r]).contains("dz2"));
    }
}
