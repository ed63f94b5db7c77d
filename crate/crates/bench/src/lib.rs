//! Criterion benchmarks for the qlax kernels; see `benches/kernels.rs`.
