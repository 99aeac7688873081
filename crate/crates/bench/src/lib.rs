//! Criterion benchmarks for `masim-core`; see `benches/`.
