//! Prints the result table for the built-in cases plus a larger breadth system.

use deflate_core::corpus::{generate_breadth_system, list_cases, load_case};
use deflate_core::exec::Execution;
use deflate_core::report::{bench, format_table, PipelineOptions};

fn main() {
    let mut cases: Vec<_> = list_cases().into_iter().map(|n| load_case(n).unwrap()).collect();
    cases.push(generate_breadth_system(20).unwrap());
    let rows = bench(&cases, &PipelineOptions::default(), Execution::default());
    print!("{}", format_table(&rows));
}
