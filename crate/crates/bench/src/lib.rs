//! Benchmarks for `ctxent` live under `benches/`.
