//! Benchmarks for `dscm-core`; see `benches/`.
