//! Criterion benchmarks for the nilcmc pipeline live in `benches/`.
