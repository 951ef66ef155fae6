//! Criterion benchmarks for the dcidc engine live in `benches/`.
