//! Criterion benchmarks for the propagator and eigensolvers live in `benches/`.
