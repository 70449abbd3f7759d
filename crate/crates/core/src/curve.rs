//! Polynomial curves `n -> (P_1(n), ..., P_d(n))` with separated degrees, and
//! the integer dilations, shears and projections acting on them.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::poly::{parse_poly, IntPoly};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Curve {
    components: Vec<IntPoly>,
    total_degree: usize,
    separated: bool,
}

impl Curve {
    /// Builds a curve, rejecting constant components and non-separated degrees.
    pub fn new(components: Vec<IntPoly>) -> Result<Self> {
        let c = Curve::unchecked(components)?;
        c.validate()?;
        Ok(c)
    }

    /// Builds a curve whose degrees need not be separated. Used for transform
    /// intermediates; counting and operator entry points call [`Curve::validate`].
    pub fn unchecked(components: Vec<IntPoly>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidCurve("curve has no components".into()));
        }
        if let Some(i) = components.iter().position(IntPoly::is_constant) {
            return Err(Error::ConstantComponent(i));
        }
        let total_degree = components.iter().map(IntPoly::deg).sum();
        let separated = components.windows(2).all(|w| w[0].deg() < w[1].deg());
        Ok(Curve { components, total_degree, separated })
    }

    pub fn validate(&self) -> Result<()> {
        if self.separated {
            Ok(())
        } else {
            let degs: Vec<_> = self.components.iter().map(IntPoly::deg).collect();
            Err(Error::InvalidCurve(format!("degrees {degs:?} are not strictly increasing")))
        }
    }

    /// `(n, n^2, ..., n^d)`
    pub fn moment(d: usize) -> Self {
        Curve::new((1..=d).map(|k| IntPoly::monomial(1, k)).collect()).expect("moment curve")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut comps = Vec::new();
        let mut offset = 0;
        for part in text.split(',') {
            let p = parse_poly(part).map_err(|e| match e {
                Error::Parse { pos, msg } => Error::Parse { pos: pos + offset, msg },
                e => e,
            })?;
            comps.push(p);
            offset += part.len() + 1;
        }
        Curve::new(comps)
    }

    pub fn components(&self) -> &[IntPoly] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn total_degree(&self) -> usize {
        self.total_degree
    }

    pub fn is_separated(&self) -> bool {
        self.separated
    }

    pub fn eval(&self, n: &BigInt) -> LatticePoint {
        LatticePoint::new(self.components.iter().map(|p| p.eval(n)).collect())
    }

    pub fn eval_i64(&self, n: i64) -> LatticePoint {
        self.eval(&BigInt::from(n))
    }

    /// `p_c = 2 - 1/D`
    pub fn critical_exponent(&self) -> BigRational {
        let d = BigInt::from(self.total_degree);
        BigRational::from_integer(BigInt::from(2)) - BigRational::new(BigInt::one(), d)
    }

    /// Keeps the listed (0-based) components, in increasing index order.
    pub fn project(&self, coords: &[usize]) -> Result<Curve> {
        let mut idx = coords.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if idx.is_empty() {
            return Err(Error::InvalidCurve("empty projection".into()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim()) {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: bad + 1 });
        }
        Curve::unchecked(idx.iter().map(|&i| self.components[i].clone()).collect())
    }

    /// Whether every component is injective on the integers `1..=n`.
    pub fn is_injective_on(&self, n: i64) -> bool {
        let mut seen = std::collections::HashSet::new();
        (1..=n).all(|k| seen.insert(self.eval_i64(k)))
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for Curve {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Curve::parse(s)
    }
}

/// One elementary step. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransformStep {
    /// `x_i -> a_i x_i`
    Dilation(Vec<BigInt>),
    /// `x_j -> x_j - b x_k`
    Shear { j: usize, k: usize, b: BigInt },
    /// `x -> x + v`
    Translation(Vec<BigInt>),
}

/// A composition of steps, applied first to last.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AffineTransform {
    pub steps: Vec<TransformStep>,
}

impl AffineTransform {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn dilation(a: Vec<BigInt>) -> Result<Self> {
        Self::from_step(TransformStep::Dilation(a))
    }

    pub fn shear(j: usize, k: usize, b: impl Into<BigInt>) -> Result<Self> {
        Self::from_step(TransformStep::Shear { j, k, b: b.into() })
    }

    pub fn translation(v: Vec<BigInt>) -> Result<Self> {
        Self::from_step(TransformStep::Translation(v))
    }

    fn from_step(step: TransformStep) -> Result<Self> {
        check_step(&step)?;
        Ok(AffineTransform { steps: vec![step] })
    }

    /// `other` after `self`.
    pub fn then(mut self, other: AffineTransform) -> Self {
        self.steps.extend(other.steps);
        self
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    /// Linear part only: translations are dropped.
    pub fn linear_part(&self) -> AffineTransform {
        AffineTransform {
            steps: self
                .steps
                .iter()
                .filter(|s| !matches!(s, TransformStep::Translation(_)))
                .cloned()
                .collect(),
        }
    }

    pub fn apply_point(&self, x: &LatticePoint) -> Result<LatticePoint> {
        let mut c: Vec<BigInt> = x.coords().to_vec();
        for step in &self.steps {
            check_dim(step, c.len())?;
            match step {
                TransformStep::Dilation(a) => c.iter_mut().zip(a).for_each(|(x, a)| *x *= a),
                TransformStep::Shear { j, k, b } => {
                    let t = &c[*k] * b;
                    c[*j] -= t;
                }
                TransformStep::Translation(v) => c.iter_mut().zip(v).for_each(|(x, v)| *x += v),
            }
        }
        Ok(LatticePoint::new(c))
    }

    /// Inverse map on `Z^d`; only defined when every dilation factor is a unit.
    pub fn inverse(&self) -> Option<AffineTransform> {
        let mut steps = Vec::with_capacity(self.steps.len());
        for step in self.steps.iter().rev() {
            steps.push(match step {
                TransformStep::Dilation(a) => {
                    if a.iter().any(|x| !x.is_one() && *x != -BigInt::one()) {
                        return None;
                    }
                    TransformStep::Dilation(a.clone())
                }
                TransformStep::Shear { j, k, b } => TransformStep::Shear { j: *j, k: *k, b: -b },
                TransformStep::Translation(v) => TransformStep::Translation(v.iter().map(|x| -x).collect()),
            });
        }
        Some(AffineTransform { steps })
    }
}

fn check_step(step: &TransformStep) -> Result<()> {
    match step {
        TransformStep::Dilation(a) if a.iter().any(Zero::is_zero) => {
            Err(Error::Hypothesis("dilation factors must be nonzero".into()))
        }
        TransformStep::Shear { j, k, .. } if j == k => {
            Err(Error::Hypothesis("shear indices must be distinct".into()))
        }
        _ => Ok(()),
    }
}

fn check_dim(step: &TransformStep, d: usize) -> Result<()> {
    check_step(step)?;
    let need = match step {
        TransformStep::Dilation(a) => a.len(),
        TransformStep::Translation(v) => v.len(),
        TransformStep::Shear { j, k, .. } => {
            let m = (*j).max(*k) + 1;
            if m > d {
                return Err(Error::DimensionMismatch { expected: d, got: m });
            }
            d
        }
    };
    if need != d {
        return Err(Error::DimensionMismatch { expected: d, got: need });
    }
    Ok(())
}

/// Applies `t` to the curve, componentwise. The result may have non-separated
/// degrees; check [`Curve::is_separated`].
pub fn apply_transform(c: &Curve, t: &AffineTransform) -> Result<Curve> {
    let mut comps: Vec<IntPoly> = c.components.clone();
    for step in &t.steps {
        check_dim(step, comps.len())?;
        match step {
            TransformStep::Dilation(a) => {
                for (p, a) in comps.iter_mut().zip(a) {
                    *p = p.scale(a);
                }
            }
            TransformStep::Shear { j, k, b } => {
                comps[*j] = comps[*j].sub(&comps[*k].scale(b));
                if comps[*j].is_constant() {
                    return Err(Error::ConstantComponent(*j));
                }
            }
            TransformStep::Translation(v) => {
                for (p, v) in comps.iter_mut().zip(v) {
                    *p = p.add(&IntPoly::new([v.clone()]));
                }
            }
        }
    }
    Curve::unchecked(comps)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub curve: Curve,
    pub transform: AffineTransform,
    pub diagnostic: Option<String>,
}

/// Reduces a curve with linear first component towards `(n, P(n))` or
/// `(n, n^2, n^3, ...)`: every later component has its coefficients at the
/// degrees of earlier components removed by integer shears where the leading
/// coefficient divides exactly, and constant terms are removed by a
/// translation. Curves whose first component is not linear come back unchanged.
pub fn reduce_canonical(c: &Curve) -> Reduction {
    let unchanged = |diagnostic| Reduction {
        curve: c.clone(),
        transform: AffineTransform::identity(),
        diagnostic,
    };
    if c.components[0].deg() != 1 {
        return unchanged(None);
    }
    let mut comps = c.components.clone();
    let mut steps = Vec::new();
    for j in 1..comps.len() {
        for k in (0..j).rev() {
            let lead = comps[k].leading();
            let target = comps[j].coeff(comps[k].deg());
            if target.is_zero() || !target.is_multiple_of(&lead) {
                continue;
            }
            let b = &target / &lead;
            comps[j] = comps[j].sub(&comps[k].scale(&b));
            if comps[j].is_constant() {
                return unchanged(Some(format!(
                    "constant component after shear (component {j} minus {b} times component {k})"
                )));
            }
            steps.push(TransformStep::Shear { j, k, b });
        }
    }
    let consts: Vec<BigInt> = comps.iter().map(|p| -p.coeff(0)).collect();
    if consts.iter().any(|x| !x.is_zero()) {
        for (p, v) in comps.iter_mut().zip(&consts) {
            *p = p.add(&IntPoly::new([v.clone()]));
        }
        steps.push(TransformStep::Translation(consts));
    }
    match Curve::unchecked(comps) {
        Ok(curve) => Reduction { curve, transform: AffineTransform { steps }, diagnostic: None },
        Err(e) => unchanged(Some(e.to_string())),
    }
}
