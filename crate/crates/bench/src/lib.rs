//! Criterion benchmarks for the field kernel live in `benches/`.
