//! Criterion benchmarks for the `iekf` crate live in `benches/`.
