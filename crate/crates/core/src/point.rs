//! Point representations used by the enumeration kernels.
//!
//! Kernels are generic over [`Coords`]. [`SmallPoint`] packs up to four `i64`
//! coordinates inline and is chosen whenever every input coordinate is below
//! [`SMALL_LIMIT`] in absolute value; sums of up to 256 such values cannot
//! overflow. Anything else runs on [`LatticePoint`], which is unbounded.

use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::lattice::LatticePoint;

pub const SMALL_DIM: usize = 4;
pub const SMALL_LIMIT: i64 = 1 << 54;

pub trait Coords: Clone + Eq + Ord + Hash + Send + Sync + Debug {
    fn origin(dim: usize) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_origin(&self) -> bool;
    fn dim(&self) -> usize;
    /// The first coordinate as a one-dimensional point.
    fn head(&self) -> Self;
    /// Everything after the first coordinate.
    fn tail(&self) -> Self;
    /// Inverse of `(head, tail)`.
    fn join(head: &Self, tail: &Self) -> Self;
    fn to_lattice(&self) -> LatticePoint;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SmallPoint {
    len: u8,
    c: [i64; SMALL_DIM],
}

impl SmallPoint {
    pub fn try_from_lattice(p: &LatticePoint) -> Option<SmallPoint> {
        if p.dim() > SMALL_DIM {
            return None;
        }
        let mut c = [0i64; SMALL_DIM];
        for (slot, x) in c.iter_mut().zip(p.coords()) {
            let v = x.to_i64()?;
            if v.abs() >= SMALL_LIMIT {
                return None;
            }
            *slot = v;
        }
        Some(SmallPoint { len: p.dim() as u8, c })
    }

    pub fn from_slice(v: &[i64]) -> SmallPoint {
        assert!(v.len() <= SMALL_DIM);
        let mut c = [0i64; SMALL_DIM];
        c[..v.len()].copy_from_slice(v);
        SmallPoint { len: v.len() as u8, c }
    }

    pub fn coords(&self) -> &[i64] {
        &self.c[..self.len as usize]
    }
}

impl Coords for SmallPoint {
    fn origin(dim: usize) -> Self {
        assert!(dim <= SMALL_DIM);
        SmallPoint { len: dim as u8, c: [0; SMALL_DIM] }
    }

    #[inline]
    fn add(&self, o: &Self) -> Self {
        let mut c = self.c;
        for i in 0..SMALL_DIM {
            c[i] += o.c[i];
        }
        SmallPoint { len: self.len, c }
    }

    #[inline]
    fn sub(&self, o: &Self) -> Self {
        let mut c = self.c;
        for i in 0..SMALL_DIM {
            c[i] -= o.c[i];
        }
        SmallPoint { len: self.len, c }
    }

    fn neg(&self) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x = -*x);
        SmallPoint { len: self.len, c }
    }

    #[inline]
    fn is_origin(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    fn dim(&self) -> usize {
        self.len as usize
    }

    fn head(&self) -> Self {
        SmallPoint::from_slice(&self.c[..1])
    }

    fn tail(&self) -> Self {
        SmallPoint::from_slice(&self.coords()[1..])
    }

    fn join(head: &Self, tail: &Self) -> Self {
        let mut v = head.coords().to_vec();
        v.extend_from_slice(tail.coords());
        SmallPoint::from_slice(&v)
    }

    fn to_lattice(&self) -> LatticePoint {
        LatticePoint::from_i64(self.coords())
    }
}

impl Coords for LatticePoint {
    fn origin(dim: usize) -> Self {
        LatticePoint::origin(dim)
    }

    fn add(&self, o: &Self) -> Self {
        LatticePoint::new(self.coords().iter().zip(o.coords()).map(|(a, b)| a + b).collect())
    }

    fn sub(&self, o: &Self) -> Self {
        LatticePoint::new(self.coords().iter().zip(o.coords()).map(|(a, b)| a - b).collect())
    }

    fn neg(&self) -> Self {
        LatticePoint::new(self.coords().iter().map(|a| -a).collect())
    }

    fn is_origin(&self) -> bool {
        self.coords().iter().all(BigInt::is_zero)
    }

    fn dim(&self) -> usize {
        LatticePoint::dim(self)
    }

    fn head(&self) -> Self {
        LatticePoint::new(vec![self.coords()[0].clone()])
    }

    fn tail(&self) -> Self {
        LatticePoint::new(self.coords()[1..].to_vec())
    }

    fn join(head: &Self, tail: &Self) -> Self {
        LatticePoint::new(head.coords().iter().chain(tail.coords()).cloned().collect())
    }

    fn to_lattice(&self) -> LatticePoint {
        self.clone()
    }
}

/// Converts every point to the packed form, or `None` if any is out of range.
pub fn pack_all(points: &[LatticePoint]) -> Option<Vec<SmallPoint>> {
    points.iter().map(SmallPoint::try_from_lattice).collect()
}
