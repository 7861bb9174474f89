//! Criterion benchmarks for the rigidity algebra and the closed-loop simulation; see `benches/`.
