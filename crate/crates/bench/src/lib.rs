//! Criterion benchmarks for the counting kernels; see `benches/`.

use num_bigint::BigInt;
use polyavg_core::{CountOptions, Curve};

pub fn curve(text: &str) -> Curve {
    Curve::parse(text).expect("benchmark curve parses")
}

pub fn opts() -> CountOptions {
    CountOptions::default()
}

pub fn big(v: i64) -> BigInt {
    BigInt::from(v)
}
