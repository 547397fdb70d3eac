//! Right-continuous drivers of bounded variation on a segment `[a, b]`.
//!
//! A driver is stored as a continuous piecewise-cubic part plus a sorted table
//! of jumps. Outside `[a, b]` the driver is extended by its boundary values:
//! `L(t) = L(a)` for `t < a` and `L(t) = L(b)` for `t > b`.

use crate::error::{Error, Result};

const JOIN_TOL: f64 = 1e-9;

/// One cubic piece of the continuous part, in the local variable `s = t - start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    start: f64,
    end: f64,
    coeffs: [f64; 4],
}

impl Segment {
    /// `coeffs[k]` multiplies `(t - start)^k`; at most four coefficients.
    pub fn new(start: f64, end: f64, coeffs: &[f64]) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start >= end {
            return Err(Error::InvalidDriver(format!(
                "segment [{start}, {end}] is empty or not finite"
            )));
        }
        if coeffs.len() > 4 {
            return Err(Error::InvalidDriver(format!(
                "segment [{start}, {end}] has degree {} > 3",
                coeffs.len() - 1
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDriver(format!(
                "segment [{start}, {end}] has non-finite coefficients"
            )));
        }
        let mut c = [0.0; 4];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Self {
            start,
            end,
            coeffs: c,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn coeffs(&self) -> [f64; 4] {
        self.coeffs
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let s = t - self.start;
        let c = &self.coeffs;
        ((c[3] * s + c[2]) * s + c[1]) * s + c[0]
    }

    fn is_constant(&self) -> bool {
        self.coeffs[1] == 0.0 && self.coeffs[2] == 0.0 && self.coeffs[3] == 0.0
    }

    /// Zeros of the derivative strictly inside `(lo, hi)`, in absolute time, sorted.
    fn critical_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let [_, c1, c2, c3] = self.coeffs;
        // derivative: 3 c3 s^2 + 2 c2 s + c1
        let (qa, qb, qc) = (3.0 * c3, 2.0 * c2, c1);
        let mut roots = Vec::with_capacity(2);
        if qa == 0.0 {
            if qb != 0.0 {
                roots.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let sign = if qb >= 0.0 { 1.0 } else { -1.0 };
                let q = -0.5 * (qb + sign * sq);
                if q != 0.0 {
                    roots.push(q / qa);
                    roots.push(qc / q);
                } else {
                    roots.push(0.0);
                }
            }
        }
        let mut out: Vec<f64> = roots
            .into_iter()
            .map(|s| s + self.start)
            .filter(|t| *t > lo && *t < hi)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// A jump of size `size` at `epoch`: `L(epoch) - L(epoch-) = size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub epoch: f64,
    pub size: f64,
}

/// Right-continuous function of bounded variation on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BVFunction {
    a: f64,
    b: f64,
    segments: Vec<Segment>,
    jumps: Vec<Jump>,
    base_value: f64,
    flat: bool,
}

/// Incremental constructor for [`BVFunction`].
#[derive(Debug, Clone)]
pub struct BVBuilder {
    a: f64,
    b: f64,
    base: f64,
    segments: Vec<(f64, f64, Vec<f64>)>,
    jumps: Vec<Jump>,
}

impl BVBuilder {
    /// Constant value of the continuous part when no segments are given.
    pub fn base(mut self, value: f64) -> Self {
        self.base = value;
        self
    }

    pub fn segment(mut self, start: f64, end: f64, coeffs: &[f64]) -> Self {
        self.segments.push((start, end, coeffs.to_vec()));
        self
    }

    pub fn jump(mut self, epoch: f64, size: f64) -> Self {
        self.jumps.push(Jump { epoch, size });
        self
    }

    pub fn build(self) -> Result<BVFunction> {
        let Self {
            a,
            b,
            base,
            segments,
            jumps,
        } = self;
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidDriver(format!(
                "domain [{a}, {b}] is empty or not finite"
            )));
        }
        if !base.is_finite() {
            return Err(Error::InvalidDriver("base value is not finite".into()));
        }
        let scale = (b - a).max(1.0);

        let mut segs = Vec::with_capacity(segments.len().max(1));
        if segments.is_empty() {
            segs.push(Segment::new(a, b, &[base])?);
        } else {
            let mut raw = segments;
            raw.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (start, end, coeffs) in &raw {
                segs.push(Segment::new(*start, *end, coeffs)?);
            }
            if (segs[0].start - a).abs() > 1e-12 * scale {
                return Err(Error::InvalidDriver(format!(
                    "first segment starts at {} but the domain starts at {a}",
                    segs[0].start
                )));
            }
            segs[0].start = a;
            let last = segs.len() - 1;
            if (segs[last].end - b).abs() > 1e-12 * scale {
                return Err(Error::InvalidDriver(format!(
                    "last segment ends at {} but the domain ends at {b}",
                    segs[last].end
                )));
            }
            segs[last].end = b;
            for i in 0..last {
                let (end, next_start) = (segs[i].end, segs[i + 1].start);
                if (end - next_start).abs() > 1e-12 * scale {
                    return Err(Error::InvalidDriver(format!(
                        "segments do not tile the domain: gap or overlap between {end} and {next_start}"
                    )));
                }
                let left = segs[i].value(end);
                let right = segs[i + 1].value(next_start);
                if (left - right).abs() > JOIN_TOL * (1.0 + left.abs().max(right.abs())) {
                    return Err(Error::InvalidDriver(format!(
                        "continuous part is discontinuous at t = {end} ({left} vs {right}); \
                         put the difference in the jump table"
                    )));
                }
                segs[i].end = next_start;
            }
        }

        let mut js: Vec<Jump> = Vec::with_capacity(jumps.len());
        for j in jumps {
            if !(j.epoch.is_finite() && j.size.is_finite()) {
                return Err(Error::InvalidDriver("jump with non-finite entries".into()));
            }
            if j.size == 0.0 {
                return Err(Error::InvalidDriver(format!(
                    "zero-size jump at t = {}",
                    j.epoch
                )));
            }
            if j.epoch <= a || j.epoch > b {
                return Err(Error::InvalidDriver(format!(
                    "jump epoch {} is outside ({a}, {b}]",
                    j.epoch
                )));
            }
            js.push(j);
        }
        js.sort_by(|x, y| x.epoch.total_cmp(&y.epoch));
        let mut merged: Vec<Jump> = Vec::with_capacity(js.len());
        for j in js {
            match merged.last_mut() {
                Some(prev) if prev.epoch == j.epoch => prev.size += j.size,
                _ => merged.push(j),
            }
        }
        if let Some(j) = merged.iter().find(|j| j.size == 0.0) {
            return Err(Error::InvalidDriver(format!(
                "coincident jumps at t = {} cancel out",
                j.epoch
            )));
        }

        let flat = segs.iter().all(Segment::is_constant);
        let base_value = segs[0].value(a);
        Ok(BVFunction {
            a,
            b,
            segments: segs,
            jumps: merged,
            base_value,
            flat,
        })
    }
}

impl BVFunction {
    pub fn builder(a: f64, b: f64) -> BVBuilder {
        BVBuilder {
            a,
            b,
            base: 0.0,
            segments: Vec::new(),
            jumps: Vec::new(),
        }
    }

    /// `L(t) = intercept + slope * (t - a)` on `[a, b]`.
    pub fn linear(a: f64, b: f64, intercept: f64, slope: f64) -> Result<Self> {
        Self::builder(a, b)
            .segment(a, b, &[intercept, slope])
            .build()
    }

    pub fn constant(a: f64, b: f64, value: f64) -> Result<Self> {
        Self::builder(a, b).base(value).build()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// `L(a)`.
    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    /// True when the continuous part is constant.
    pub fn has_flat_continuous_part(&self) -> bool {
        self.flat
    }

    /// Interior segment boundaries, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    #[inline]
    fn segment_index(&self, t: f64) -> usize {
        let idx = self.segments.partition_point(|s| s.start <= t);
        idx.saturating_sub(1)
    }

    /// Value of the continuous part, extended by constants outside the domain.
    #[inline]
    pub fn continuous_value(&self, t: f64) -> f64 {
        let tc = t.clamp(self.a, self.b);
        self.segments[self.segment_index(tc)].value(tc)
    }

    /// Sum of jump sizes with epoch `<= t`.
    #[inline]
    pub fn jump_sum(&self, t: f64) -> f64 {
        let k = self.jumps.partition_point(|j| j.epoch <= t);
        self.jumps[..k].iter().map(|j| j.size).sum()
    }

    /// `L(t)`, right-continuous, with the constant extension outside `[a, b]`.
    pub fn eval(&self, t: f64) -> f64 {
        let tc = t.clamp(self.a, self.b);
        self.continuous_value(tc) + self.jump_sum(tc)
    }

    /// `L(t-)`. Defined for `t > a`.
    pub fn left_limit(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t <= self.a {
            return Err(Error::Domain {
                t,
                a: self.a,
                b: self.b,
            });
        }
        Ok(self.eval(t) - self.jump_at(t))
    }

    /// `L(t) - L(t-)`; zero away from jump epochs.
    pub fn jump_at(&self, t: f64) -> f64 {
        match self.jumps.binary_search_by(|j| j.epoch.total_cmp(&t)) {
            Ok(i) => self.jumps[i].size,
            Err(_) => 0.0,
        }
    }

    /// Total variation over `[u, v]`: the continuous part's variation plus
    /// `|size|` for every jump with `u < epoch <= v`. Bounds are clamped to the
    /// domain, where the extension is constant.
    pub fn total_variation(&self, u: f64, v: f64) -> Result<f64> {
        if u > v || u.is_nan() || v.is_nan() {
            return Err(Error::Order { u, v });
        }
        let jumps: f64 = self
            .jumps
            .iter()
            .filter(|j| j.epoch > u && j.epoch <= v)
            .map(|j| j.size.abs())
            .sum();
        Ok(self.continuous_variation(u, v) + jumps)
    }

    /// Variation of the continuous part over `[u, v]` (clamped to the domain).
    pub fn continuous_variation(&self, u: f64, v: f64) -> f64 {
        let (lo, hi) = (u.max(self.a), v.min(self.b));
        if lo >= hi {
            return 0.0;
        }
        let pieces = self.monotone_pieces(lo, hi);
        pieces
            .windows(2)
            .map(|w| (self.continuous_value(w[1]) - self.continuous_value(w[0])).abs())
            .sum()
    }

    /// Same function without its jumps.
    pub fn continuous_part(&self) -> BVFunction {
        BVFunction {
            jumps: Vec::new(),
            ..self.clone()
        }
    }

    /// The polynomial piece covering all of `[lo, hi]`, if one exists inside the domain.
    pub(crate) fn piece_covering(&self, lo: f64, hi: f64) -> Option<&Segment> {
        if lo < self.a || hi > self.b {
            return None;
        }
        let seg = &self.segments[self.segment_index(lo)];
        (seg.start <= lo && hi <= seg.end).then_some(seg)
    }

    /// Sorted points `lo = p_0 < ... < p_m = hi` such that the continuous part is
    /// monotone on each `[p_i, p_{i+1}]`.
    pub(crate) fn monotone_pieces(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = vec![lo];
        for seg in &self.segments {
            if seg.end <= lo || seg.start >= hi {
                continue;
            }
            if seg.start > lo {
                pts.push(seg.start);
            }
            if !seg.is_constant() {
                pts.extend(seg.critical_points(lo.max(seg.start), hi.min(seg.end)));
            }
        }
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Time nodes on `[u, v]` such that every step carries continuous-part
    /// variation at most `v_max` and spans at most `dt_max` time.
    pub(crate) fn variation_nodes(&self, u: f64, v: f64, v_max: f64, dt_max: f64) -> Vec<f64> {
        let mut nodes = vec![u];
        if v <= u {
            return nodes;
        }
        let pieces = self.monotone_pieces(u, v);
        for w in pieces.windows(2) {
            let (p0, p1) = (w[0], w[1]);
            let (l0, l1) = (self.continuous_value(p0), self.continuous_value(p1));
            let var = (l1 - l0).abs();
            let by_var = (var / v_max).ceil() as usize;
            let by_time = ((p1 - p0) / dt_max).ceil() as usize;
            let m = by_var.max(by_time).max(1);
            if var == 0.0 || by_var <= 1 {
                for j in 1..m {
                    nodes.push(p0 + (p1 - p0) * j as f64 / m as f64);
                }
            } else {
                let increasing = l1 > l0;
                for j in 1..by_var {
                    let target = l0 + (l1 - l0) * j as f64 / by_var as f64;
                    let (mut lo, mut hi) = (p0, p1);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        let below = self.continuous_value(mid) < target;
                        if below == increasing {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    push_capped(&mut nodes, 0.5 * (lo + hi), dt_max);
                }
            }
            push_capped(&mut nodes, p1, dt_max);
        }
        nodes.dedup();
        nodes
    }
}

/// Appends `t`, inserting equal substeps so no gap exceeds `dt_max`.
fn push_capped(nodes: &mut Vec<f64>, t: f64, dt_max: f64) {
    let last = *nodes.last().expect("node list starts non-empty");
    let gap = t - last;
    let m = (gap / dt_max).ceil().max(1.0) as usize;
    for j in 1..m {
        nodes.push(last + gap * j as f64 / m as f64);
    }
    nodes.push(t);
}
