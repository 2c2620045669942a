//! Benchmark runner: median wall time of each decider over seeded inputs.
//!
//! Targets are extensions of random formulas, so they are definable. Only
//! the decide call is timed; input generation and the check of the returned
//! formula happen outside the timed region.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::algebra::Algebra;
use crate::decision::{DecideError, Decision, Options};
use crate::generate::{
    abelian_factors_for_size, gen_abelian_group, gen_boolean_algebra, gen_random_algebra,
    gen_random_formula, gen_random_graph, rng, FormulaBounds, GenError, DEFAULT_SIGNATURE,
};
use crate::merging::merging_decide_with;
use crate::oracle::graph_star;
use crate::relation::Relation;
use crate::splitting::splitting_decide_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Random,
    BooleanAlgebra,
    AbelianGroup,
    GraphStar,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Random => "random",
            Family::BooleanAlgebra => "boolean-algebra",
            Family::AbelianGroup => "abelian-group",
            Family::GraphStar => "graph-star",
        }
    }

    /// The algebra of a family at a given size; `seed` matters for random and graph-star.
    pub fn algebra(self, size: usize, seed: u64) -> Result<Algebra, GenError> {
        match self {
            Family::Random => {
                if size == 0 {
                    return Err(GenError::TooSmall { size, min: 1 });
                }
                Ok(gen_random_algebra(size, DEFAULT_SIGNATURE, seed))
            }
            Family::BooleanAlgebra => {
                if !size.is_power_of_two() || size < 2 {
                    return Err(GenError::NotPowerOfTwo(size));
                }
                gen_boolean_algebra(size.trailing_zeros() as usize)
            }
            Family::AbelianGroup => gen_abelian_group(&abelian_factors_for_size(size)?),
            Family::GraphStar => {
                if size < 3 {
                    return Err(GenError::TooSmall { size, min: 3 });
                }
                Ok(graph_star(&gen_random_graph(size - 2, 0.5, seed)).algebra)
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Family::Random),
            "boolean-algebra" | "bool" => Ok(Family::BooleanAlgebra),
            "abelian-group" | "group" => Ok(Family::AbelianGroup),
            "graph-star" => Ok(Family::GraphStar),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Merging,
    Splitting,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Merging => "merging",
            Strategy::Splitting => "splitting",
        }
    }

    pub fn decide(
        self,
        alg: &Algebra,
        r: &Relation,
        options: &Options,
    ) -> Result<Decision, DecideError> {
        match self {
            Strategy::Merging => merging_decide_with(alg, r, options).map(|(d, _)| d),
            Strategy::Splitting => splitting_decide_with(alg, r, options).map(|(d, _)| d),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "merging" => Ok(Strategy::Merging),
            "splitting" => Ok(Strategy::Splitting),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub samples: usize,
    pub target_arity: usize,
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    pub time_budget: Option<Duration>,
    pub formula: FormulaBounds,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            family: Family::AbelianGroup,
            sizes: vec![4, 8, 16],
            samples: 20,
            target_arity: 2,
            strategies: vec![Strategy::Merging, Strategy::Splitting],
            seed: 0,
            time_budget: Some(Duration::from_secs(60)),
            formula: FormulaBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub family: Family,
    pub size: usize,
    pub strategy: Strategy,
    /// Completed samples.
    pub samples: usize,
    /// Median over completed samples; `None` if every sample timed out.
    pub median_ms: Option<f64>,
    pub timeouts: usize,
    pub definable: usize,
    pub not_definable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error("{strategy} gave a wrong answer on sample {sample} at size {size}: {reason}")]
    WrongAnswer {
        strategy: &'static str,
        size: usize,
        sample: usize,
        reason: String,
    },
}

/// One benchmark input: the algebra and a target that is the extension of a random formula.
pub fn sample_input(
    config: &BenchConfig,
    size: usize,
    sample_seed: u64,
) -> Result<(Algebra, Relation), BenchError> {
    let alg = config.family.algebra(size, sample_seed)?;
    let k = config.target_arity;
    let total = alg.size().checked_pow(k as u32).unwrap_or(usize::MAX);
    let mut last = None;
    // prefer targets that are neither empty nor everything
    for attempt in 0..16u64 {
        let phi = gen_random_formula(
            &alg,
            k,
            config.formula,
            sample_seed.wrapping_add(attempt << 32),
        );
        let r = alg
            .extension(&phi, k)
            .expect("generated formula is well formed");
        if !r.is_empty() && r.len() < total {
            return Ok((alg, r));
        }
        last = Some(r);
    }
    Ok((alg, last.expect("at least one attempt")))
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

/// Runs every (size, strategy) point sequentially; samples are shared across strategies.
pub fn bench(config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    if config.samples == 0 {
        return Err(BenchError::Config("samples must be at least 1".into()));
    }
    if config.sizes.contains(&0) {
        return Err(BenchError::Config("sizes must be positive".into()));
    }
    if config.target_arity == 0 {
        return Err(BenchError::Config("target arity must be at least 1".into()));
    }
    let mut records = Vec::new();
    for &size in &config.sizes {
        let mut seeds = rng(config.seed ^ (size as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let inputs: Vec<(Algebra, Relation)> = (0..config.samples)
            .map(|_| sample_input(config, size, seeds.gen()))
            .collect::<Result<_, _>>()?;
        for &strategy in &config.strategies {
            let mut times = Vec::new();
            let mut record = BenchRecord {
                family: config.family,
                size,
                strategy,
                samples: 0,
                median_ms: None,
                timeouts: 0,
                definable: 0,
                not_definable: 0,
            };
            for (sample, (alg, r)) in inputs.iter().enumerate() {
                let options = Options {
                    check_invariants: false,
                    deadline: config.time_budget.map(|b| Instant::now() + b),
                };
                let start = Instant::now();
                let outcome = strategy.decide(alg, r, &options);
                let elapsed = start.elapsed();
                match outcome {
                    Ok(decision) => {
                        decision
                            .verify(alg, r)
                            .map_err(|reason| BenchError::WrongAnswer {
                                strategy: strategy.name(),
                                size,
                                sample,
                                reason,
                            })?;
                        if decision.is_definable() {
                            record.definable += 1;
                        } else {
                            record.not_definable += 1;
                        }
                        record.samples += 1;
                        times.push(elapsed.as_secs_f64() * 1000.0);
                    }
                    Err(DecideError::Timeout) => record.timeouts += 1,
                    Err(e) => {
                        return Err(BenchError::WrongAnswer {
                            strategy: strategy.name(),
                            size,
                            sample,
                            reason: e.to_string(),
                        })
                    }
                }
            }
            record.median_ms = median(&mut times);
            tracing::info!(family = %config.family, size, %strategy, median_ms = ?record.median_ms, "bench point");
            records.push(record);
        }
    }
    Ok(records)
}

pub const CSV_HEADER: &str = "family,size,strategy,samples,median_ms,timeouts";

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let median = r
            .median_ms
            .map(|m| format!("{m:.3}"))
            .unwrap_or_else(|| "nan".into());
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.family, r.size, r.strategy, r.samples, median, r.timeouts
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sample_per_strategy() {
        let config = BenchConfig {
            sizes: vec![4],
            samples: 1,
            ..BenchConfig::default()
        };
        let records = bench(&config).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records
            .iter()
            .all(|r| r.samples == 1 && r.timeouts == 0 && r.definable == 1));
        let csv = to_csv(&records);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("abelian-group,4,merging,1,"));
        assert!(lines[2].starts_with("abelian-group,4,splitting,1,"));
    }

    #[test]
    fn inputs_are_reproducible() {
        let config = BenchConfig::default();
        assert_eq!(
            sample_input(&config, 8, 5).unwrap(),
            sample_input(&config, 8, 5).unwrap()
        );
        let random = BenchConfig {
            family: Family::Random,
            ..BenchConfig::default()
        };
        assert_eq!(
            sample_input(&random, 4, 1).unwrap(),
            sample_input(&random, 4, 1).unwrap()
        );
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = BenchConfig {
            samples: 0,
            ..BenchConfig::default()
        };
        assert!(bench(&bad).is_err());
        assert!(Family::BooleanAlgebra.algebra(6, 0).is_err());
        assert_eq!("graph-star".parse::<Family>(), Ok(Family::GraphStar));
        assert!("quick".parse::<Strategy>().is_err());
    }
}
