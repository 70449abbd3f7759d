//! Exact discrete averages along integer polynomial curves.
//!
//! The crate covers integer polynomials and curves ([`poly`], [`curve`]),
//! exponent-region geometry ([`exponent`]), sparse lattice functions and the
//! averaging operators ([`lattice`]), exact Diophantine counting ([`dio`]),
//! refinement towers ([`refinement`]) and extremizer/regression tooling
//! ([`analysis`]).

pub mod analysis;
pub mod curve;
pub mod dio;
pub mod divisors;
pub mod error;
pub mod exponent;
pub mod lattice;
pub mod point;
pub mod poly;
pub mod refinement;

pub use dio::{CountOptions, CountRecord, Method, Mode};
pub use curve::{apply_transform, reduce_canonical, AffineTransform, Curve, TransformStep};
pub use error::{Error, Result};
pub use exponent::{classify_exponents, conjectured_constant, ExponentPair, Region};
pub use lattice::{LatticePoint, SparseFunction, SparseSet};
pub use poly::{parse_poly, IntPoly};

/// Runs `f` on a dedicated pool with `threads` workers (0 = rayon default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(f)
}
