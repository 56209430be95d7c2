//! Morphable transfer functions.
//!
//! A transfer function is assembled from branches
//! `B_i(x) = tanh(x - Π_i) + tanh(Π_i)`, one per epi-critical point (ECP)
//! `Π_i`. Every branch passes through `(Π_i, tanh(Π_i))` with unit slope, so
//! the ECPs sit on the underlying `tanh` curve. Between neighbouring ECPs the
//! branches are joined by one of two rules:
//!
//! - if the branches cross strictly inside the segment, θ switches from
//!   `B_i` to `B_{i+1}` at the crossing (identical for both variants);
//! - otherwise `B_i` lies above `B_{i+1}` and a joining piece is needed:
//!   [`Variant::Plateau`] holds the mid level `(h_i + h_{i+1}) / 2` flat,
//!   [`Variant::Bridge`] uses a C¹ connector whose slope dips but stays
//!   strictly positive.
//!
//! Outside the extreme ECPs θ follows the outermost branch. The origin is
//! always an ECP, which makes plain `tanh` the single-ECP special case.
//!
//! Slopes at kinks are reported from the right.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Minimum distance between neighbouring ECPs.
pub const MIN_ECP_SPACING: f64 = 1e-6;

/// Largest admissible |Π|. Beyond it `tanh` saturates in double precision
/// and neighbouring anchors become indistinguishable.
pub const MAX_ECP_ABS: f64 = 10.0;

const ROOT_TOLERANCE: f64 = 1e-14;

/// Sorted list of ECP abscissae; always contains 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EcpList(Vec<f64>);

impl EcpList {
    /// Sorts the points, inserts the origin when absent and checks spacing.
    pub fn new(points: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut pts: Vec<f64> = points.into_iter().collect();
        if let Some(&bad) = pts.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEcp(bad));
        }
        if let Some(&big) = pts.iter().find(|v| v.abs() > MAX_ECP_ABS) {
            return Err(Error::InvalidParameter(format!(
                "ECP {big} outside [-{MAX_ECP_ABS}, {MAX_ECP_ABS}]"
            )));
        }
        // -0.0 and 0.0 are the same ECP.
        for p in pts.iter_mut() {
            if *p == 0.0 {
                *p = 0.0;
            }
        }
        if !pts.contains(&0.0) {
            pts.push(0.0);
        }
        pts.sort_by(f64::total_cmp);
        for w in pts.windows(2) {
            if w[1] - w[0] < MIN_ECP_SPACING {
                return Err(Error::EcpSpacing {
                    left: w[0],
                    right: w[1],
                    min: MIN_ECP_SPACING,
                });
            }
        }
        Ok(Self(pts))
    }

    /// Seeded random list of 1 to `max_points` points, uniform in
    /// `[-half_width, half_width]`. About one point in five is placed
    /// between 1e-6 and 1e-2 away from the previous one to exercise tight
    /// segments.
    pub fn random(seed: u64, max_points: usize, half_width: f64) -> Result<Self> {
        if max_points == 0 || !(half_width > 0.0 && half_width <= MAX_ECP_ABS) {
            return Err(Error::InvalidParameter(format!(
                "random ECPs need max_points >= 1 and half_width in (0, {MAX_ECP_ABS}]"
            )));
        }
        let mut rng = rng::stream(seed, rng::streams::ECPS);
        loop {
            let count = rng.random_range(1..=max_points);
            let mut pts: Vec<f64> = Vec::with_capacity(count);
            for _ in 0..count {
                let near = pts.last().copied().filter(|_| rng.random_bool(0.2));
                let p = match near {
                    Some(prev) => {
                        let gap = 10f64.powf(rng.random_range(-5.9..-2.0));
                        prev + if rng.random_bool(0.5) { gap } else { -gap }
                    }
                    None => half_width * rng::symmetric_unit(&mut rng),
                };
                pts.push(p.clamp(-half_width, half_width));
            }
            if let Ok(list) = Self::new(pts) {
                return Ok(list);
            }
        }
    }

    /// The expected-input ECP set `{-1, 0, 1}` of the alternating one-neuron network.
    pub fn unit_pair() -> Self {
        Self(vec![-1.0, 0.0, 1.0])
    }

    pub fn origin() -> Self {
        Self(vec![0.0])
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0[0]
    }

    pub fn max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl fmt::Display for EcpList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for EcpList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let pts = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("ECP '{p}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts)
    }
}

/// How the gap between two non-crossing branches is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Variant {
    /// Constant mid level between the branches; slope 0 on the plateau.
    Plateau,
    /// C¹ connector with strictly positive slope.
    #[default]
    Bridge,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plateau => "plateau",
            Variant::Bridge => "bridge",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plateau" => Ok(Variant::Plateau),
            "bridge" => Ok(Variant::Bridge),
            other => Err(Error::Parse(format!("unknown variant '{other}'"))),
        }
    }
}

fn branch(center: f64, x: f64) -> f64 {
    (x - center).tanh() + center.tanh()
}

fn sech2(z: f64) -> f64 {
    let c = z.cosh();
    1.0 / (c * c)
}

/// One analytic piece of the assembled function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Shape {
    /// `tanh(x - center) + tanh(center)`.
    Branch {
        center: f64,
    },
    Flat {
        level: f64,
    },
    /// Slope `σ(1 - β(1 - u^m))` with `u = 2τ - 1`, `τ = (x - start) / run`,
    /// integrated from `base` at `start`.
    Connector {
        start: f64,
        run: f64,
        base: f64,
        sigma: f64,
        beta: f64,
        exponent: f64,
    },
}

impl Shape {
    /// Constant part of the value.
    fn anchor(&self) -> f64 {
        match *self {
            Shape::Branch { center } => center.tanh(),
            Shape::Flat { level } => level,
            Shape::Connector { base, .. } => base,
        }
    }

    /// Value minus [`Shape::anchor`]; small increments survive intact here.
    fn local(&self, x: f64) -> f64 {
        match *self {
            Shape::Branch { center } => (x - center).tanh(),
            Shape::Flat { .. } => 0.0,
            Shape::Connector {
                start,
                run,
                sigma,
                beta,
                exponent,
                ..
            } => {
                let tau = ((x - start) / run).clamp(0.0, 1.0);
                let u = 2.0 * tau - 1.0;
                // ∫_0^τ (1 - u^m) dτ'
                let dip = tau - (u * u.abs().powf(exponent) + 1.0) / (2.0 * (exponent + 1.0));
                run * sigma * (tau - beta * dip)
            }
        }
    }

    fn slope(&self, x: f64) -> f64 {
        match *self {
            Shape::Branch { center } => sech2(x - center),
            Shape::Flat { .. } => 0.0,
            Shape::Connector {
                start,
                run,
                sigma,
                beta,
                exponent,
                ..
            } => {
                let tau = ((x - start) / run).clamp(0.0, 1.0);
                let u = 2.0 * tau - 1.0;
                sigma * (1.0 - beta * (1.0 - u.abs().powf(exponent)))
            }
        }
    }

    /// Finite-difference step that resolves this piece's curvature.
    fn fd_step(&self) -> f64 {
        match *self {
            Shape::Connector { run, exponent, .. } => (2e-4 * run / exponent.max(1.0)).min(1e-6),
            _ => 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub(crate) shape: Shape,
    /// Values at the piece's own boundaries; evaluation clamps into them so
    /// rounding never breaks monotonicity across a join.
    lo: f64,
    hi: f64,
}

impl Piece {
    fn value(&self, x: f64) -> f64 {
        self.raw(x).clamp(self.lo, self.hi)
    }

    fn raw(&self, x: f64) -> f64 {
        self.shape.anchor() + self.shape.local(x)
    }
}

/// How one ECP segment is joined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Join {
    /// Branches cross at `at`; θ switches there.
    Crossing {
        at: f64,
    },
    Plateau {
        from: f64,
        to: f64,
        level: f64,
    },
    Bridge {
        from: f64,
        to: f64,
        sigma: f64,
        beta: f64,
        exponent: f64,
    },
}

/// Decides how to join the branches of `left < right`.
pub(crate) fn plan_segment(left: f64, right: f64, variant: Variant) -> Result<Join> {
    let (h_l, h_r) = (left.tanh(), right.tanh());
    let width = right - left;
    let rise = h_r - h_l;
    if rise.is_nan() || rise <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ECPs {left} and {right} have indistinguishable tanh anchors"
        )));
    }
    if width.tanh() < rise {
        // g = B_l - B_r is even about the midpoint, negative at the ends and
        // non-negative at the midpoint; take the crossing in the left half.
        let g = |x: f64| branch(left, x) - branch(right, x);
        let mid = 0.5 * (left + right);
        let at = bisect(g, left, mid)?;
        return Ok(Join::Crossing { at });
    }
    let half_rise = 0.5 * rise;
    match variant {
        Variant::Plateau => {
            let off = half_rise.atanh();
            let (mut from, mut to) = (left + off, right - off);
            if from > to {
                let mid = 0.5 * (left + right);
                from = mid;
                to = mid;
            }
            Ok(Join::Plateau {
                from,
                to,
                level: h_l + half_rise,
            })
        }
        Variant::Bridge => {
            // Leave the branches halfway to where the plateau would start.
            let off = 0.5 * half_rise.atanh();
            let sigma = sech2(off);
            let span = width - 2.0 * off;
            let climb = rise - 2.0 * off.tanh();
            let ratio = climb / (span * sigma);
            let n = (1.0 / ratio).ceil().max(1.0);
            let exponent = 2.0 * n;
            let beta = ((1.0 - ratio) * (exponent + 1.0) / exponent).max(0.0);
            Ok(Join::Bridge {
                from: left + off,
                to: right - off,
                sigma,
                beta,
                exponent,
            })
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoRoot(format!("no sign change on [{lo}, {hi}]")));
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() < ROOT_TOLERANCE || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Piecewise transfer function with ECPs anchored on `tanh`.
///
/// Immutable after [`MorphableTransfer::build`].
#[derive(Debug, Clone, PartialEq)]
pub struct MorphableTransfer {
    ecps: EcpList,
    variant: Variant,
    /// Sorted piece boundaries; piece `j` covers `[breaks[j-1], breaks[j])`.
    breaks: Vec<f64>,
    pieces: Vec<Piece>,
    /// Boundaries where the slope jumps.
    kinks: Vec<f64>,
}

impl MorphableTransfer {
    pub fn build(ecps: EcpList, variant: Variant) -> Result<Self> {
        let pts = ecps.points().to_vec();
        let mut breaks = Vec::new();
        let mut kinks = Vec::new();
        let mut pieces = vec![Piece {
            shape: Shape::Branch { center: pts[0] },
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }];

        for w in pts.windows(2) {
            let (left, right) = (w[0], w[1]);
            let next_branch = Shape::Branch { center: right };
            match plan_segment(left, right, variant)? {
                Join::Crossing { at } => {
                    let v = branch(left, at);
                    close_last(&mut pieces, v);
                    breaks.push(at);
                    kinks.push(at);
                    pieces.push(Piece {
                        shape: next_branch,
                        lo: v,
                        hi: f64::INFINITY,
                    });
                }
                Join::Plateau { from, to, level } => {
                    close_last(&mut pieces, level);
                    breaks.extend([from, to]);
                    kinks.extend([from, to]);
                    pieces.push(Piece {
                        shape: Shape::Flat { level },
                        lo: level,
                        hi: level,
                    });
                    pieces.push(Piece {
                        shape: next_branch,
                        lo: level,
                        hi: f64::INFINITY,
                    });
                }
                Join::Bridge {
                    from,
                    to,
                    sigma,
                    beta,
                    exponent,
                } => {
                    let start_value = branch(left, from);
                    let end_value = branch(right, to);
                    close_last(&mut pieces, start_value);
                    breaks.extend([from, to]);
                    pieces.push(Piece {
                        shape: Shape::Connector {
                            start: from,
                            run: to - from,
                            base: start_value,
                            sigma,
                            beta,
                            exponent,
                        },
                        lo: start_value,
                        hi: end_value,
                    });
                    pieces.push(Piece {
                        shape: next_branch,
                        lo: end_value,
                        hi: f64::INFINITY,
                    });
                }
            }
        }

        Ok(Self {
            ecps,
            variant,
            breaks,
            pieces,
            kinks,
        })
    }

    /// Plain `tanh`, i.e. the single ECP at the origin.
    pub fn tanh() -> Self {
        Self::build(EcpList::origin(), Variant::Bridge).expect("origin-only ECP list is valid")
    }

    pub fn ecps(&self) -> &EcpList {
        &self.ecps
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Abscissae where the slope is discontinuous.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// Boundaries between analytic pieces (kinks and C¹ joins).
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    fn piece_index(&self, x: f64) -> usize {
        self.breaks.partition_point(|&b| b <= x)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].value(x)
    }

    /// Analytic slope; right-sided at kinks.
    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].shape.slope(x)
    }

    /// `n` evenly spaced rows `(x, θ(x), θ'(x))` over `[lo, hi]`, both ends included.
    pub fn sample(&self, lo: f64, hi: f64, n: usize) -> Result<Vec<SampleRow>> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && n >= 2) {
            return Err(Error::InvalidRange { lo, hi, n });
        }
        let last = (n - 1) as f64;
        Ok((0..n)
            .map(|i| {
                let x = if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * (i as f64) / last
                };
                SampleRow {
                    x,
                    theta: self.eval(x),
                    slope: self.slope(x),
                }
            })
            .collect())
    }

    /// Dense-grid check of every structural invariant over
    /// `[Π_min - 5, Π_max + 5]`.
    pub fn validate(&self, grid_step: f64) -> Result<ValidationReport> {
        if !(grid_step > 0.0 && grid_step <= 1e-2) {
            return Err(Error::InvalidParameter(format!(
                "grid step {grid_step} outside (0, 1e-2]"
            )));
        }
        let mut report = ValidationReport {
            grid_step,
            points_checked: 0,
            violations: Vec::new(),
        };
        let ecps = self.ecps.points();
        let (e_min, e_max) = (self.ecps.min(), self.ecps.max());

        for &p in ecps {
            let v = self.eval(p);
            if v != p.tanh() {
                report.push(ViolationKind::Anchor, p, v - p.tanh());
            }
            let s = self.slope(p);
            if s != 1.0 {
                report.push(ViolationKind::EcpSlope, p, s);
            }
        }

        for (j, &b) in self.breaks.iter().enumerate() {
            let gap = (self.pieces[j].raw(b) - self.pieces[j + 1].raw(b)).abs();
            if gap > CONTINUITY_TOLERANCE {
                report.push(ViolationKind::Discontinuity, b, gap);
            }
        }

        let bound = 1.0 + e_min.tanh().abs().max(e_max.tanh().abs());
        let lo = e_min - 5.0;
        let hi = e_max + 5.0;
        let steps = ((hi - lo) / grid_step).ceil() as usize;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=steps {
            let x = if i == steps {
                hi
            } else {
                lo + grid_step * i as f64
            };
            let v = self.eval(x);
            let s = self.slope(x);
            report.points_checked += 1;

            if !(0.0..=1.0).contains(&s) {
                report.push(ViolationKind::SlopeRange, x, s);
            }
            if s >= 1.0 - UNIT_SLOPE_MARGIN && !near_any(ecps, x, grid_step) {
                report.push(ViolationKind::UnitSlopeOffEcp, x, s);
            }
            if self.variant == Variant::Bridge && x > e_min && x < e_max && (s.is_nan() || s <= 0.0)
            {
                report.push(ViolationKind::FlatInBridge, x, s);
            }
            if v.abs() > bound {
                report.push(ViolationKind::Bound, x, v);
            }
            if let Some((px, pv)) = prev {
                let dv = v - pv;
                if dv < -ROUNDING_SLACK {
                    report.push(ViolationKind::NonMonotone, x, dv);
                }
                if dv > (x - px) + ROUNDING_SLACK {
                    report.push(ViolationKind::Lipschitz, x, dv / (x - px));
                }
            }
            prev = Some((x, v));

            if let Some(fd) = self.local_difference_slope(x) {
                if (fd - s).abs() > FD_TOLERANCE {
                    report.push(ViolationKind::FiniteDifference, x, fd - s);
                }
            }
        }
        Ok(report)
    }

    /// Central difference of the piece containing `x`, or `None` when the
    /// stencil leaves the piece.
    fn local_difference_slope(&self, x: f64) -> Option<f64> {
        let j = self.piece_index(x);
        let shape = self.pieces[j].shape;
        let h = shape.fd_step();
        if self.piece_index(x - h) != j || self.piece_index(x + h) != j {
            return None;
        }
        Some((shape.local(x + h) - shape.local(x - h)) / (2.0 * h))
    }
}

fn close_last(pieces: &mut [Piece], value: f64) {
    if let Some(last) = pieces.last_mut() {
        last.hi = value;
    }
}

fn near_any(sorted: &[f64], x: f64, radius: f64) -> bool {
    let i = sorted.partition_point(|&p| p < x);
    (i < sorted.len() && sorted[i] - x <= radius) || (i > 0 && x - sorted[i - 1] <= radius)
}

const CONTINUITY_TOLERANCE: f64 = 1e-12;
const FD_TOLERANCE: f64 = 1e-6;
const UNIT_SLOPE_MARGIN: f64 = 1e-12;
/// Rounding allowance for grid differences.
const ROUNDING_SLACK: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub x: f64,
    pub theta: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    Anchor,
    EcpSlope,
    SlopeRange,
    UnitSlopeOffEcp,
    FlatInBridge,
    NonMonotone,
    Lipschitz,
    Discontinuity,
    FiniteDifference,
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub x: f64,
    /// Offending quantity (deviation, slope or value depending on kind).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub grid_step: f64,
    pub points_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, x: f64, value: f64) {
        self.violations.push(Violation { kind, x, value });
    }
}
