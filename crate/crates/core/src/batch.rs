//! Many independent runs at once. Each seed is simulated in isolation, so
//! the results do not depend on the execution strategy.

use crate::world::{run, RunResult, Scenario, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work stealing; same as `Sequential` without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Order-preserving map over `items`.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

#[derive(Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub result: Result<RunResult, SimError>,
}

pub fn run_seeds(scenario: &Scenario, seeds: &[u64], ticks: u64, exec: Execution) -> Vec<SeedRun> {
    map(exec, seeds, |&seed| SeedRun {
        seed,
        result: run(scenario, Some(seed), ticks),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let s = Scenario::builtin("default").unwrap();
        let seeds = [1, 2, 3, 4];
        let a = run_seeds(&s, &seeds, 60, Execution::Sequential);
        let b = run_seeds(&s, &seeds, 60, Execution::Parallel);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(
                x.result.as_ref().unwrap().events,
                y.result.as_ref().unwrap().events
            );
        }
    }
}
