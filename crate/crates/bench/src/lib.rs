//! Benchmarks for the identification pipeline live in `benches/`.
