//! Integration regions: intervals with singular-endpoint flags and
//! ordered-limit (iterated) regions in up to four variables.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A limit function of the already-fixed outer variables (outermost first).
pub type LimitFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Maps integration variables to family parameters.
pub type TransformFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

pub const MAX_NESTED_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_singular: bool,
    pub hi_singular: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_singular: false,
            hi_singular: false,
        }
    }

    /// Both endpoints flagged as integrable singularities.
    pub fn singular(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_singular: true,
            hi_singular: true,
        }
    }

    pub fn with_flags(lo: f64, hi: f64, lo_singular: bool, hi_singular: bool) -> Self {
        Self {
            lo,
            hi,
            lo_singular,
            hi_singular,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Splits at the given points that fall strictly inside. New interior
    /// endpoints are not singular; the outer flags are kept.
    pub fn split_at(&self, points: &[f64]) -> Vec<Interval> {
        let mut cuts: Vec<f64> = points
            .iter()
            .copied()
            .filter(|&p| p > self.lo && p < self.hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut out = Vec::with_capacity(cuts.len() + 1);
        let mut lo = self.lo;
        let mut lo_s = self.lo_singular;
        for c in cuts {
            out.push(Interval::with_flags(lo, c, lo_s, false));
            lo = c;
            lo_s = false;
        }
        out.push(Interval::with_flags(lo, self.hi, lo_s, self.hi_singular));
        out
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_singular { "(*" } else { "[" },
            self.lo,
            self.hi,
            if self.hi_singular { "*)" } else { "]" }
        )
    }
}

/// One variable of an ordered-limit region.
#[derive(Clone)]
pub struct Level {
    pub name: String,
    pub lo: LimitFn,
    pub hi: LimitFn,
    pub lo_singular: bool,
    pub hi_singular: bool,
}

impl Level {
    pub fn new(
        name: &str,
        lo: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        hi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            lo: Arc::new(lo),
            hi: Arc::new(hi),
            lo_singular: true,
            hi_singular: true,
        }
    }

    pub fn constant(name: &str, lo: f64, hi: f64) -> Self {
        Self::new(name, move |_| lo, move |_| hi)
    }

    pub fn flags(mut self, lo_singular: bool, hi_singular: bool) -> Self {
        self.lo_singular = lo_singular;
        self.hi_singular = hi_singular;
        self
    }

    pub fn interval(&self, outer: &[f64]) -> Interval {
        Interval::with_flags((self.lo)(outer), (self.hi)(outer), self.lo_singular, self.hi_singular)
    }
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Level").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    NestedLimits,
    Simplex,
    Product,
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionKind::NestedLimits => "nested-limits",
            RegionKind::Simplex => "simplex",
            RegionKind::Product => "product",
        })
    }
}

/// Iterated region: `levels[0]` is outermost. Integration variables map to
/// family parameters through an optional transform with constant Jacobian.
#[derive(Clone)]
pub struct NestedRegion {
    pub kind: RegionKind,
    pub levels: Vec<Level>,
    pub transform: Option<TransformFn>,
    /// |∂θ/∂u|, constant over the region.
    pub jacobian: f64,
}

impl fmt::Debug for NestedRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NestedRegion")
            .field("kind", &self.kind)
            .field("levels", &self.levels)
            .field("jacobian", &self.jacobian)
            .finish_non_exhaustive()
    }
}

impl NestedRegion {
    pub fn new(kind: RegionKind, levels: Vec<Level>) -> Self {
        assert!(
            !levels.is_empty() && levels.len() <= MAX_NESTED_DIM,
            "nested regions have 1 to {MAX_NESTED_DIM} levels"
        );
        Self {
            kind,
            levels,
            transform: None,
            jacobian: 1.0,
        }
    }

    pub fn with_transform(
        mut self,
        jacobian: f64,
        transform: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.transform = Some(Arc::new(transform));
        self.jacobian = jacobian;
        self
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.levels.iter().map(|l| l.name.as_str()).collect()
    }

    pub fn to_params(&self, vars: &[f64]) -> Vec<f64> {
        match &self.transform {
            Some(t) => t(vars),
            None => vars.to_vec(),
        }
    }

    /// Whether the integration-variable point satisfies every ordered limit.
    pub fn contains_vars(&self, vars: &[f64], slack: f64) -> bool {
        vars.len() == self.dim()
            && self.levels.iter().enumerate().all(|(i, lvl)| {
                let iv = lvl.interval(&vars[..i]);
                vars[i] >= iv.lo - slack && vars[i] <= iv.hi + slack
            })
    }

    /// Maps a point of the unit cube into the region (integration variables).
    pub fn sample_vars(&self, unit: &[f64]) -> Vec<f64> {
        assert_eq!(unit.len(), self.dim());
        let mut vars = Vec::with_capacity(self.dim());
        for (lvl, &u) in self.levels.iter().zip(unit) {
            let iv = lvl.interval(&vars);
            vars.push(iv.lo + u * (iv.hi - iv.lo));
        }
        vars
    }
}

#[derive(Debug, Clone)]
pub enum RegionSpec {
    Interval(Interval),
    Nested(NestedRegion),
    /// Disjoint pieces (overlaps of measure zero only).
    Union(Vec<RegionSpec>),
    Empty,
    /// No integration region is defined; the string says why.
    Unspecified(String),
}

impl RegionSpec {
    pub fn kind_label(&self) -> String {
        match self {
            RegionSpec::Interval(_) => "interval".into(),
            RegionSpec::Nested(n) => n.kind.to_string(),
            RegionSpec::Union(parts) => {
                let inner: Vec<String> = parts.iter().map(|p| p.kind_label()).collect();
                format!("union[{}]", inner.join(","))
            }
            RegionSpec::Empty => "empty".into(),
            RegionSpec::Unspecified(_) => "unspecified".into(),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            RegionSpec::Interval(_) => Some(1),
            RegionSpec::Nested(n) => Some(n.dim()),
            RegionSpec::Union(parts) => parts.first().and_then(|p| p.dim()),
            RegionSpec::Empty | RegionSpec::Unspecified(_) => None,
        }
    }

    pub fn as_interval(&self) -> Option<Interval> {
        match self {
            RegionSpec::Interval(iv) => Some(*iv),
            _ => None,
        }
    }

    /// Samples a parameter point from unit-cube coordinates. For unions the
    /// first coordinate selects the piece and is then rescaled.
    pub fn sample(&self, unit: &[f64]) -> Result<Vec<f64>> {
        match self {
            RegionSpec::Interval(iv) => {
                let u = *unit.first().ok_or_else(|| Error::Usage("need one coordinate".into()))?;
                Ok(vec![iv.lo + u * iv.width()])
            }
            RegionSpec::Nested(n) => {
                if unit.len() != n.dim() {
                    return Err(Error::Usage(format!(
                        "need {} coordinates, got {}",
                        n.dim(),
                        unit.len()
                    )));
                }
                Ok(n.to_params(&n.sample_vars(unit)))
            }
            RegionSpec::Union(parts) => {
                if parts.is_empty() || unit.is_empty() {
                    return Err(Error::Usage("cannot sample an empty union".into()));
                }
                let scaled = unit[0] * parts.len() as f64;
                let idx = (scaled.floor() as usize).min(parts.len() - 1);
                let mut inner = unit.to_vec();
                inner[0] = (scaled - idx as f64).clamp(0.0, 1.0);
                parts[idx].sample(&inner)
            }
            RegionSpec::Empty => Err(Error::Usage("cannot sample an empty region".into())),
            RegionSpec::Unspecified(why) => Err(Error::Usage(format!("no region: {why}"))),
        }
    }
}

impl From<Interval> for RegionSpec {
    fn from(iv: Interval) -> Self {
        RegionSpec::Interval(iv)
    }
}

impl From<NestedRegion> for RegionSpec {
    fn from(n: NestedRegion) -> Self {
        RegionSpec::Nested(n)
    }
}

/// The standard 3-simplex x, y, z ≥ 0, x + y + z ≤ 1, all faces flagged singular.
pub fn simplex3(names: [&str; 3]) -> NestedRegion {
    NestedRegion::new(
        RegionKind::Simplex,
        vec![
            Level::constant(names[0], 0.0, 1.0),
            Level::new(names[1], |_| 0.0, |o| 1.0 - o[0]),
            Level::new(names[2], |_| 0.0, |o| 1.0 - o[0] - o[1]),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_keeps_outer_flags() {
        let iv = Interval::singular(-0.25, 1.0 / 12.0);
        let parts = iv.split_at(&[-1.0 / 12.0, 1.0 / 12.0, 0.5]);
        assert_eq!(parts.len(), 2);
        assert!(parts[0].lo_singular && !parts[0].hi_singular);
        assert!(!parts[1].lo_singular && parts[1].hi_singular);
        assert_eq!(parts[0].hi, parts[1].lo);
    }

    #[test]
    fn simplex_samples_stay_inside() {
        let s = simplex3(["x", "y", "z"]);
        for &u in &[[0.1, 0.9, 0.5], [0.99, 0.99, 0.99], [0.0, 0.0, 1.0]] {
            let p = s.sample_vars(&u);
            assert!(p.iter().all(|&c| c >= 0.0));
            assert!(p.iter().sum::<f64>() <= 1.0 + 1e-15);
            assert!(s.contains_vars(&p, 1e-15));
        }
    }

    #[test]
    fn union_sampling_selects_pieces() {
        let u = RegionSpec::Union(vec![
            Interval::new(0.0, 1.0).into(),
            Interval::new(10.0, 11.0).into(),
        ]);
        assert!(u.sample(&[0.25]).unwrap()[0] < 1.0);
        assert!(u.sample(&[0.75]).unwrap()[0] >= 10.0);
        assert_eq!(u.kind_label(), "union[interval,interval]");
    }
}
