//! Bounded time scales built from closed intervals and isolated points.
//!
//! The jump operators σ, ρ and the graininess functions μ, ν are computed
//! from the structural segment list, never from a sampled grid, so values at
//! scattered points are exact. A [`Grid`] is a finite sample of the time scale
//! that keeps every scattered point and subdivides interval interiors.

use std::fmt;

use thiserror::Error;

/// Absolute tolerance used when deciding whether a real belongs to the scale.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeScaleError {
    #[error("time scale needs at least one segment")]
    Empty,
    #[error("time scale must contain at least two distinct points")]
    SinglePoint,
    #[error("segment bound is not finite: ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("segment ({0}, {1}) has lo > hi")]
    Reversed(f64, f64),
    #[error("segments overlap near {0}")]
    Overlap(f64),
    #[error("{0} is not a point of the time scale")]
    NotInTimeScale(f64),
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
    #[error("cannot parse time scale: {0}")]
    Syntax(String),
}

/// One closed piece of a time scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Interval { lo: f64, hi: f64 },
    Point(f64),
}

impl Segment {
    pub fn lo(&self) -> f64 {
        match *self {
            Segment::Interval { lo, .. } => lo,
            Segment::Point(p) => p,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Segment::Interval { hi, .. } => hi,
            Segment::Point(p) => p,
        }
    }
}

/// Left/right density of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Dense,
    Scattered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointClass {
    pub left: Side,
    pub right: Side,
}

/// A closed bounded time scale in canonical form: sorted, pairwise disjoint,
/// non-adjacent segments.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScale {
    segments: Vec<Segment>,
}

impl TimeScale {
    /// Builds a time scale from `(lo, hi)` pairs. Pairs with `lo == hi` are
    /// isolated points; touching intervals are merged and overlaps rejected.
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self, TimeScaleError> {
        if pairs.is_empty() {
            return Err(TimeScaleError::Empty);
        }
        let mut raw = Vec::with_capacity(pairs.len());
        for &(lo, hi) in pairs {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(TimeScaleError::NonFinite(lo, hi));
            }
            if lo > hi {
                return Err(TimeScaleError::Reversed(lo, hi));
            }
            raw.push((lo, hi));
        }
        raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match merged.last_mut() {
                // touching pieces merge; anything starting before the end overlaps
                Some(last) if lo <= last.1 + MEMBERSHIP_TOL => {
                    if lo < last.1 - MEMBERSHIP_TOL {
                        return Err(TimeScaleError::Overlap(lo));
                    }
                    last.1 = last.1.max(hi);
                }
                _ => merged.push((lo, hi)),
            }
        }

        let segments: Vec<Segment> = merged
            .into_iter()
            .map(|(lo, hi)| {
                if hi - lo <= MEMBERSHIP_TOL {
                    Segment::Point(lo)
                } else {
                    Segment::Interval { lo, hi }
                }
            })
            .collect();
        if segments.len() == 1 && matches!(segments[0], Segment::Point(_)) {
            return Err(TimeScaleError::SinglePoint);
        }
        Ok(Self { segments })
    }

    /// Parses the text syntax `[lo,hi]` for intervals and `{p}` for points,
    /// comma separated: `[0,1],[2,3]` or `{0},{0.5},{1}`.
    pub fn parse(text: &str) -> Result<Self, TimeScaleError> {
        let mut pairs = Vec::new();
        let mut rest = text.trim();
        let num = |s: &str| -> Result<f64, TimeScaleError> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| TimeScaleError::Syntax(format!("bad number '{}'", s.trim())))
        };
        while !rest.is_empty() {
            let (close, is_interval) = match rest.as_bytes()[0] {
                b'[' => (']', true),
                b'{' => ('}', false),
                _ => {
                    return Err(TimeScaleError::Syntax(format!(
                        "expected '[' or '{{' at '{rest}'"
                    )))
                }
            };
            let end = rest
                .find(close)
                .ok_or_else(|| TimeScaleError::Syntax(format!("missing '{close}'")))?;
            let body = &rest[1..end];
            if is_interval {
                let (lo, hi) = body
                    .split_once(',')
                    .ok_or_else(|| TimeScaleError::Syntax(format!("interval '[{body}]' needs two bounds")))?;
                pairs.push((num(lo)?, num(hi)?));
            } else {
                let p = num(body)?;
                pairs.push((p, p));
            }
            rest = rest[end + 1..].trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
                if rest.is_empty() {
                    return Err(TimeScaleError::Syntax("trailing comma".into()));
                }
            } else if !rest.is_empty() {
                return Err(TimeScaleError::Syntax(format!("expected ',' before '{rest}'")));
            }
        }
        Self::new(&pairs)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Minimum `a`.
    pub fn a(&self) -> f64 {
        self.segments[0].lo()
    }

    /// Maximum `b`.
    pub fn b(&self) -> f64 {
        self.segments[self.segments.len() - 1].hi()
    }

    /// True when the scale has no interval part.
    pub fn is_discrete(&self) -> bool {
        self.segments.iter().all(|s| matches!(s, Segment::Point(_)))
    }

    fn locate(&self, t: f64) -> Result<usize, TimeScaleError> {
        if !t.is_finite() {
            return Err(TimeScaleError::NotInTimeScale(t));
        }
        let idx = self.segments.partition_point(|s| s.hi() + MEMBERSHIP_TOL < t);
        match self.segments.get(idx) {
            Some(s) if t >= s.lo() - MEMBERSHIP_TOL => Ok(idx),
            _ => Err(TimeScaleError::NotInTimeScale(t)),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(t).is_ok()
    }

    /// Forward jump: the least element strictly greater than `t`, with σ(b) = b.
    pub fn sigma(&self, t: f64) -> Result<f64, TimeScaleError> {
        let i = self.locate(t)?;
        let seg = self.segments[i];
        if let Segment::Interval { hi, .. } = seg {
            if t < hi - MEMBERSHIP_TOL {
                return Ok(t);
            }
        }
        Ok(match self.segments.get(i + 1) {
            Some(next) => next.lo(),
            None => seg.hi(),
        })
    }

    /// Backward jump: the greatest element strictly less than `t`, with ρ(a) = a.
    pub fn rho(&self, t: f64) -> Result<f64, TimeScaleError> {
        let i = self.locate(t)?;
        let seg = self.segments[i];
        if let Segment::Interval { lo, .. } = seg {
            if t > lo + MEMBERSHIP_TOL {
                return Ok(t);
            }
        }
        Ok(if i == 0 { seg.lo() } else { self.segments[i - 1].hi() })
    }

    /// Forward graininess μ(t) = σ(t) − t.
    pub fn mu(&self, t: f64) -> Result<f64, TimeScaleError> {
        let s = self.sigma(t)?;
        Ok(if s == t { 0.0 } else { (s - t).max(0.0) })
    }

    /// Backward graininess ν(t) = t − ρ(t).
    pub fn nu(&self, t: f64) -> Result<f64, TimeScaleError> {
        let r = self.rho(t)?;
        Ok(if r == t { 0.0 } else { (t - r).max(0.0) })
    }

    pub fn classify(&self, t: f64) -> Result<PointClass, TimeScaleError> {
        let side = |gap: f64| if gap > 0.0 { Side::Scattered } else { Side::Dense };
        Ok(PointClass {
            left: side(self.nu(t)?),
            right: side(self.mu(t)?),
        })
    }

    /// Membership in 𝕋^κ: everything except a left-scattered maximum.
    pub fn in_kappa_upper(&self, t: f64) -> Result<bool, TimeScaleError> {
        let i = self.locate(t)?;
        let at_b = i + 1 == self.segments.len() && t >= self.b() - MEMBERSHIP_TOL;
        Ok(!(at_b && self.nu(t)? > 0.0))
    }

    /// Membership in 𝕋_κ: everything except a right-scattered minimum.
    pub fn in_kappa_lower(&self, t: f64) -> Result<bool, TimeScaleError> {
        let i = self.locate(t)?;
        let at_a = i == 0 && t <= self.a() + MEMBERSHIP_TOL;
        Ok(!(at_a && self.mu(t)? > 0.0))
    }

    /// σ(ρ(t)) = t and ρ(σ(t)) = t for every t.
    ///
    /// The identities break exactly at points that are dense on one side and
    /// scattered on the other, and at a scattered minimum or maximum. With two
    /// or more segments one of these always occurs: either an end is an
    /// isolated point or the first interval ends next to a gap.
    pub fn is_regular(&self) -> bool {
        self.segments.len() == 1 && matches!(self.segments[0], Segment::Interval { .. })
    }

    /// Samples the scale: all isolated points and segment ends, and each
    /// interval `[l, r]` split into `ceil((r − l)·dense_resolution)` cells.
    pub fn build_grid(&self, dense_resolution: usize) -> Result<Grid, TimeScaleError> {
        Grid::new(self.clone(), dense_resolution)
    }
}

impl fmt::Display for TimeScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match *s {
                Segment::Interval { lo, hi } => write!(f, "[{lo},{hi}]")?,
                Segment::Point(p) => write!(f, "{{{p}}}")?,
            }
        }
        Ok(())
    }
}

/// Finite ordered sample of a time scale.
///
/// Besides the nodes, the grid caches the node indices of the exact σ and ρ
/// of every node (scattered neighbours are always nodes) and the κ flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    timescale: TimeScale,
    nodes: Vec<f64>,
    dense_resolution: usize,
    sigma_idx: Vec<usize>,
    rho_idx: Vec<usize>,
    kappa_upper: Vec<bool>,
    kappa_lower: Vec<bool>,
}

impl Grid {
    pub fn new(timescale: TimeScale, dense_resolution: usize) -> Result<Self, TimeScaleError> {
        if dense_resolution == 0 {
            return Err(TimeScaleError::ZeroResolution);
        }
        let mut nodes = Vec::new();
        // segment index each node belongs to, plus whether it is an interval end
        for seg in timescale.segments() {
            match *seg {
                Segment::Point(p) => nodes.push(p),
                Segment::Interval { lo, hi } => {
                    let cells = (((hi - lo) * dense_resolution as f64) - 1e-9).ceil().max(1.0) as usize;
                    nodes.extend((0..cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64));
                    nodes.push(hi);
                }
            }
        }
        nodes.dedup_by(|x, y| (*x - *y).abs() <= MEMBERSHIP_TOL);

        let n = nodes.len();
        let mut sigma_idx = Vec::with_capacity(n);
        let mut rho_idx = Vec::with_capacity(n);
        let mut kappa_upper = Vec::with_capacity(n);
        let mut kappa_lower = Vec::with_capacity(n);
        for (i, &t) in nodes.iter().enumerate() {
            let s = timescale.sigma(t)?;
            let r = timescale.rho(t)?;
            sigma_idx.push(if s > t { i + 1 } else { i });
            rho_idx.push(if r < t { i - 1 } else { i });
            kappa_upper.push(timescale.in_kappa_upper(t)?);
            kappa_lower.push(timescale.in_kappa_lower(t)?);
        }
        Ok(Self {
            timescale,
            nodes,
            dense_resolution,
            sigma_idx,
            rho_idx,
            kappa_upper,
            kappa_lower,
        })
    }

    pub fn timescale(&self) -> &TimeScale {
        &self.timescale
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dense_resolution(&self) -> usize {
        self.dense_resolution
    }

    /// Node spacing `t_{i+1} − t_i`.
    pub fn step(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index of the node equal to `t` (within [`MEMBERSHIP_TOL`]).
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let i = self.nodes.partition_point(|&x| x < t - MEMBERSHIP_TOL);
        (i < self.nodes.len() && (self.nodes[i] - t).abs() <= MEMBERSHIP_TOL).then_some(i)
    }

    /// Node index of the exact σ(t_i).
    pub fn sigma_index(&self, i: usize) -> usize {
        self.sigma_idx[i]
    }

    /// Node index of the exact ρ(t_i).
    pub fn rho_index(&self, i: usize) -> usize {
        self.rho_idx[i]
    }

    /// t_i ∈ 𝕋^κ of the underlying time scale.
    pub fn in_kappa_upper(&self, i: usize) -> bool {
        self.kappa_upper[i]
    }

    /// t_i ∈ 𝕋_κ of the underlying time scale.
    pub fn in_kappa_lower(&self, i: usize) -> bool {
        self.kappa_lower[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p11() -> TimeScale {
        TimeScale::new(&[(0.0, 1.0), (2.0, 3.0)]).unwrap()
    }

    fn half() -> TimeScale {
        TimeScale::new(&[(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)]).unwrap()
    }

    fn unit() -> TimeScale {
        TimeScale::new(&[(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn construction_canonicalizes() {
        let ts = TimeScale::new(&[(0.5, 1.0), (0.0, 0.5)]).unwrap();
        assert_eq!(ts.segments(), &[Segment::Interval { lo: 0.0, hi: 1.0 }]);
        assert_eq!(half().segments().len(), 3);
        assert!(half().is_discrete());
        assert_eq!((p11().a(), p11().b()), (0.0, 3.0));
        // a point on an interval end is absorbed
        let ts = TimeScale::new(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(ts.segments().len(), 1);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(TimeScale::new(&[]), Err(TimeScaleError::Empty));
        assert_eq!(TimeScale::new(&[(1.0, 1.0)]), Err(TimeScaleError::SinglePoint));
        assert_eq!(TimeScale::new(&[(2.0, 2.0), (2.0, 2.0)]), Err(TimeScaleError::SinglePoint));
        assert!(matches!(TimeScale::new(&[(0.0, f64::NAN)]), Err(TimeScaleError::NonFinite(..))));
        assert!(matches!(TimeScale::new(&[(0.0, f64::INFINITY)]), Err(TimeScaleError::NonFinite(..))));
        assert!(matches!(TimeScale::new(&[(0.0, 1.0), (0.5, 2.0)]), Err(TimeScaleError::Overlap(_))));
        assert!(matches!(TimeScale::new(&[(0.0, 1.0), (0.5, 0.5)]), Err(TimeScaleError::Overlap(_))));
        assert!(matches!(TimeScale::new(&[(1.0, 0.0)]), Err(TimeScaleError::Reversed(..))));
    }

    #[test]
    fn parse_syntax() {
        assert_eq!(TimeScale::parse("[0,1],[2,3]").unwrap(), p11());
        assert_eq!(TimeScale::parse(" {0}, {0.5} ,{1} ").unwrap(), half());
        assert_eq!(p11().to_string(), "[0,1],[2,3]");
        assert_eq!(TimeScale::parse(&half().to_string()).unwrap(), half());
        for bad in ["", "[0,1", "(0,1)", "[0,1],", "[0 1]", "{x}", "[0,1] [2,3]"] {
            assert!(TimeScale::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn jump_operators_on_p11() {
        let ts = p11();
        assert_eq!(ts.sigma(1.0).unwrap(), 2.0);
        assert_eq!(ts.sigma(0.5).unwrap(), 0.5);
        assert_eq!(ts.sigma(3.0).unwrap(), 3.0);
        assert_eq!(ts.rho(2.0).unwrap(), 1.0);
        assert_eq!(ts.rho(0.0).unwrap(), 0.0);
        assert_eq!(ts.rho(2.5).unwrap(), 2.5);
        assert_eq!(ts.mu(0.3).unwrap(), 0.0);
        assert_eq!(ts.nu(2.0).unwrap(), 1.0);
        assert_eq!(ts.mu(1.0).unwrap(), 1.0);
        assert_eq!(
            ts.classify(1.0).unwrap(),
            PointClass { left: Side::Dense, right: Side::Scattered }
        );
        assert!(matches!(ts.sigma(1.5), Err(TimeScaleError::NotInTimeScale(_))));
        assert!(matches!(ts.rho(-1.0), Err(TimeScaleError::NotInTimeScale(_))));
    }

    #[test]
    fn jump_operators_on_discrete() {
        let ts = half();
        assert_eq!(ts.sigma(0.5).unwrap(), 1.0);
        assert_eq!(ts.rho(0.5).unwrap(), 0.0);
        assert_eq!(ts.mu(0.0).unwrap(), 0.5);
        assert_eq!(ts.nu(0.0).unwrap(), 0.0);
        assert_eq!(ts.mu(1.0).unwrap(), 0.0);
        assert!(ts.sigma(0.25).is_err());
    }

    #[test]
    fn kappa_sets() {
        let ts = half();
        assert!(!ts.in_kappa_upper(1.0).unwrap());
        assert!(ts.in_kappa_upper(0.5).unwrap());
        assert!(!ts.in_kappa_lower(0.0).unwrap());
        assert!(ts.in_kappa_lower(1.0).unwrap());
        assert!(unit().in_kappa_upper(1.0).unwrap());
        assert!(unit().in_kappa_lower(0.0).unwrap());
        assert!(ts.in_kappa_upper(0.7).is_err());
    }

    fn brute_regular(ts: &TimeScale, grid: &Grid) -> bool {
        grid.nodes().iter().all(|&t| {
            ts.sigma(ts.rho(t).unwrap()).unwrap() == t && ts.rho(ts.sigma(t).unwrap()).unwrap() == t
        })
    }

    #[test]
    fn regularity() {
        assert!(unit().is_regular());
        assert!(!half().is_regular());
        assert!(!p11().is_regular());
        assert!(!TimeScale::new(&[(0.0, 1.0), (2.0, 2.0)]).unwrap().is_regular());
        assert!(!TimeScale::new(&[(-1.0, -1.0), (0.0, 1.0)]).unwrap().is_regular());
        // brute force over all three points of {0, 1/2, 1}
        let g = half().build_grid(1).unwrap();
        assert!(!brute_regular(&half(), &g));
    }

    #[test]
    fn grids() {
        assert_eq!(half().build_grid(7).unwrap().nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(unit().build_grid(2).unwrap().nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(p11().build_grid(1).unwrap().nodes(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(unit().build_grid(0), Err(TimeScaleError::ZeroResolution));
        let g = p11().build_grid(4).unwrap();
        assert_eq!(g.len(), 10);
        let i1 = g.node_index(1.0).unwrap();
        assert_eq!(g.sigma_index(i1), i1 + 1);
        assert_eq!(g.rho_index(i1), i1);
        assert_eq!(g.rho_index(i1 + 1), i1);
        assert_eq!(g.node_index(1.5), None);
    }

    #[test]
    fn grid_structure_invariants() {
        let scales = [unit(), half(), p11(), TimeScale::parse("{-1},[0,0.3],{0.7},[1,2.5],{4}").unwrap()];
        for ts in &scales {
            for res in [1, 3, 10] {
                let g = ts.build_grid(res).unwrap();
                assert_eq!(g.nodes()[0], ts.a());
                assert_eq!(*g.nodes().last().unwrap(), ts.b());
                for s in ts.segments() {
                    assert!(g.node_index(s.lo()).is_some() && g.node_index(s.hi()).is_some());
                }
                let mut prev_s = f64::NEG_INFINITY;
                for (i, &t) in g.nodes().iter().enumerate() {
                    assert!(ts.contains(t));
                    let (s, r) = (ts.sigma(t).unwrap(), ts.rho(t).unwrap());
                    assert!(s >= t && r <= t && s >= prev_s);
                    prev_s = s;
                    let rs = ts.rho(s).unwrap();
                    let sr = ts.sigma(r).unwrap();
                    assert!(rs <= t && t <= sr);
                    assert_eq!(g.nodes()[g.sigma_index(i)], s);
                    assert_eq!(g.nodes()[g.rho_index(i)], r);
                    // μ vanishes exactly at right-dense points, else it is the gap
                    let mu = ts.mu(t).unwrap();
                    if i + 1 < g.len() && g.sigma_index(i) == i + 1 {
                        assert_eq!(mu, g.nodes()[i + 1] - t);
                    } else {
                        assert_eq!(mu, 0.0);
                    }
                }
                assert_eq!(ts.is_regular(), brute_regular(ts, &g), "{ts}");
            }
        }
    }
}
