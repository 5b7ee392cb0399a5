//! Criterion benchmarks for the estimator update and a full Monte-Carlo
//! trial; see `benches/step.rs`.
