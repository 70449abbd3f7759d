//! Bundled instances for `refine --demo`.

use polyavg_core::analysis::{make_extremizer, ExtremizerKind};
use polyavg_core::{Curve, LatticePoint, SparseSet};

use crate::{CliError, CliResult};

const GRID_E: &str = include_str!("../demo/grid_e.txt");
const GRID_F: &str = include_str!("../demo/grid_f.txt");

pub const NAMES: &[&str] = &["grid", "dual", "box", "far"];

/// `(E, F)` for a named demo. `grid` is a fixed planar pair; `far` has no flow.
pub fn demo_sets(name: &str, c: &Curve, n: u64, c_box: &num_rational::BigRational) -> CliResult<(SparseSet, SparseSet)> {
    match name {
        "grid" => {
            if c.dim() != 2 {
                return Err(CliError::usage("the grid demo is planar; use a curve with two components"));
            }
            Ok((SparseSet::parse(GRID_E, 2)?, SparseSet::parse(GRID_F, 2)?))
        }
        "dual" => Ok(make_extremizer(&ExtremizerKind::CurveImageDual, c, n)?),
        "box" => Ok(make_extremizer(&ExtremizerKind::ParabolicBox(c_box.clone()), c, n)?),
        "far" => {
            let d = c.dim();
            let far = LatticePoint::from_i64(&vec![1_000_000; d]);
            Ok((SparseSet::from_points(d, [far])?, SparseSet::from_points(d, [LatticePoint::origin(d)])?))
        }
        _ => Err(CliError::usage(format!("unknown demo '{name}' (expected one of {})", NAMES.join(", ")))),
    }
}
