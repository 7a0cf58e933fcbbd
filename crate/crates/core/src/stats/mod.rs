//! Test functions, generators, two-sample tests and experiment reports.

pub mod exchange;
pub mod generator;
pub mod report;
pub mod summary;
pub mod testfn;
pub mod twosample;

pub use exchange::{exchangeability_check, ExchangeabilityReport, Observable, PairTest};
pub use generator::{generator_check, generator_rho, generator_rv, GeneratorCheck};
pub use report::{mean_se, median, Condition, Estimate, ExperimentReport, Header, TOOL, VERSION};
pub use summary::{
    equilibrium_gap, polynomial_exact, polynomial_mc, summarize, EquilibriumGap, GapEstimate, Quantity, Summary,
};
pub use testfn::{flatten_marked, flatten_upper, pair_index, registry, TestFunction};
pub use twosample::{
    chi_square_two_sample, energy_two_sample, ks_statistic, ks_two_sample, TestOutcome, MIN_PERMUTATIONS,
    MIN_SAMPLE,
};
