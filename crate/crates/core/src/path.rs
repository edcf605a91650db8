//! Piecewise-linear sample paths and their reflections.
//!
//! A [`Path`] is an immutable base polyline (knot times and fixed-point knot
//! values, starting at `w(0) = 0`) viewed through a sequence of reflection
//! pieces. Each piece covers `[start, next start)` and maps a base value `x` to
//! `offset + x` or `offset - x`. Reflecting at time `r` about the path value
//! `p` replaces every map `m` active after `r` by `2p - m`, which is the same
//! as negating every increment after `r`. Because offsets are exact integers
//! the operation is a bit-exact involution, and because crossing times are
//! always solved on the untouched base segment, stopping times computed on a
//! reflected path agree to the last bit with those computed on the original.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::level::Level;

/// Relative tolerance for the betweenness check of [`Path::insert_knot`].
pub const KNOT_TOLERANCE: f64 = 1e-9;

/// A stopping time evaluated on a finite-horizon path. `NotObserved` stands in
/// for an infinite time and compares greater than every finite time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopTime {
    At(f64),
    NotObserved,
}

impl StopTime {
    pub fn finite(self) -> Option<f64> {
        match self {
            StopTime::At(t) => Some(t),
            StopTime::NotObserved => None,
        }
    }

    pub fn is_observed(self) -> bool {
        matches!(self, StopTime::At(_))
    }

    /// The time itself, or `fallback` when not observed.
    pub fn unwrap_or(self, fallback: f64) -> f64 {
        self.finite().unwrap_or(fallback)
    }
}

impl Eq for StopTime {}

impl Ord for StopTime {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (StopTime::At(a), StopTime::At(b)) => a.total_cmp(b),
            (StopTime::At(_), StopTime::NotObserved) => Ordering::Less,
            (StopTime::NotObserved, StopTime::At(_)) => Ordering::Greater,
            (StopTime::NotObserved, StopTime::NotObserved) => Ordering::Equal,
        }
    }
}

impl PartialOrd for StopTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Option<Stop>> for StopTime {
    fn from(stop: Option<Stop>) -> Self {
        stop.map_or(StopTime::NotObserved, |s| StopTime::At(s.time))
    }
}

impl fmt::Display for StopTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopTime::At(t) => write!(f, "{t}"),
            StopTime::NotObserved => f.write_str("NOT_OBSERVED"),
        }
    }
}

/// A realised stopping time together with the exact path value there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stop {
    pub time: f64,
    pub value: Level,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Piece {
    start: f64,
    /// Path value at `start`.
    anchor: Level,
    offset: Level,
    flipped: bool,
}

impl Piece {
    fn apply(&self, base: Level) -> Level {
        if self.flipped {
            self.offset - base
        } else {
            self.offset + base
        }
    }

    fn base_value(&self, value: Level) -> Level {
        if self.flipped {
            self.offset - value
        } else {
            value - self.offset
        }
    }

    fn same_map(&self, other: &Piece) -> bool {
        self.offset == other.offset && self.flipped == other.flipped
    }

    fn reflected(&self, pivot: Level) -> Piece {
        Piece {
            start: self.start,
            anchor: self.anchor.reflect_about(pivot),
            offset: self.offset.reflect_about(pivot),
            flipped: !self.flipped,
        }
    }
}

const IDENTITY: Piece = Piece {
    start: 0.0,
    anchor: Level::ZERO,
    offset: Level::ZERO,
    flipped: false,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    knots: Arc<[f64]>,
    base: Arc<[Level]>,
    pieces: Vec<Piece>,
}

/// One linear stretch of a path: part of a base segment inside one piece.
#[derive(Clone, Copy, Debug)]
struct Span {
    segment: usize,
    piece: usize,
    t0: f64,
    t1: f64,
    y0: Level,
    y1: Level,
}

fn crosses(y0: Level, y1: Level, target: Level) -> bool {
    (y0 < target && target <= y1) || (y0 > target && target >= y1)
}

impl Path {
    /// Builds a path from shared knot times and knot values (`values[0]` must be
    /// zero).
    pub fn from_levels(knots: Arc<[f64]>, values: Vec<Level>) -> Result<Path> {
        validate_knots(&knots)?;
        if values.len() != knots.len() {
            return Err(Error::InvalidPath(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if values[0] != Level::ZERO {
            return Err(Error::InvalidPath("w(0) must be 0".into()));
        }
        Ok(Path {
            knots,
            base: values.into(),
            pieces: vec![IDENTITY],
        })
    }

    /// Unchecked constructor for a sampler grid, validated once by the
    /// sampler, and values starting at zero.
    pub(crate) fn from_grid(knots: Arc<[f64]>, base: Arc<[Level]>) -> Path {
        debug_assert!(validate_knots(&knots).is_ok());
        debug_assert!(base.len() == knots.len() && base[0] == Level::ZERO);
        Path {
            knots,
            base,
            pieces: vec![IDENTITY],
        }
    }

    /// `increments[i]` is `w(t_{i+1}) - w(t_i)`; there is one fewer increment
    /// than knots.
    pub fn from_increments(knots: Vec<f64>, increments: &[f64]) -> Result<Path> {
        if increments.len() + 1 != knots.len() {
            return Err(Error::InvalidPath(format!(
                "{} knots need {} increments, got {}",
                knots.len(),
                knots.len().saturating_sub(1),
                increments.len()
            )));
        }
        let mut values = Vec::with_capacity(knots.len());
        let mut acc = Level::ZERO;
        values.push(acc);
        for &d in increments {
            acc = acc + Level::from_f64(d)?;
            Level::from_f64(acc.to_f64())?;
            values.push(acc);
        }
        Path::from_levels(knots.into(), values)
    }

    pub fn from_values(knots: Vec<f64>, values: &[f64]) -> Result<Path> {
        let values = values
            .iter()
            .map(|&v| Level::from_f64(v))
            .collect::<Result<Vec<_>>>()?;
        Path::from_levels(knots.into(), values)
    }

    /// The constant path `w = 0` on `[0, horizon]`.
    pub fn zero(horizon: f64) -> Result<Path> {
        Path::from_levels(vec![0.0, horizon].into(), vec![Level::ZERO; 2])
    }

    pub fn horizon(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// All knot times: the base knots plus every reflection point.
    pub fn knots(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.knots.len() + self.pieces.len());
        let mut pieces = self.pieces.iter().skip(1).map(|p| p.start).peekable();
        for &t in self.knots.iter() {
            while let Some(&s) = pieces.peek() {
                if s < t {
                    out.push(s);
                    pieces.next();
                } else {
                    if s == t {
                        pieces.next();
                    }
                    break;
                }
            }
            out.push(t);
        }
        out
    }

    /// Path values at [`Path::knots`].
    pub fn knot_values(&self) -> Vec<Level> {
        self.spans_from(0.0, Level::ZERO)
            .fold(vec![Level::ZERO], |mut acc, s| {
                acc.push(s.y1);
                acc
            })
    }

    pub fn increments(&self) -> Vec<f64> {
        self.knot_values()
            .windows(2)
            .map(|w| (w[1] - w[0]).to_f64())
            .collect()
    }

    /// Number of reflection points carried by this path.
    pub fn reflection_count(&self) -> usize {
        self.pieces.len() - 1
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && (0.0..=self.horizon()).contains(&t) {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange {
                time: t,
                horizon: self.horizon(),
            })
        }
    }

    /// Index `i >= 1` of the base segment `[t_{i-1}, t_i)` holding `t`
    /// (the last segment for `t = horizon`).
    fn segment_index(&self, t: f64) -> usize {
        self.knots
            .partition_point(|&k| k <= t)
            .clamp(1, self.knots.len() - 1)
    }

    fn piece_index(&self, t: f64) -> usize {
        self.pieces.partition_point(|p| p.start <= t).max(1) - 1
    }

    fn base_level_at(&self, t: f64) -> Level {
        let i = self.segment_index(t);
        let (ta, tb) = (self.knots[i - 1], self.knots[i]);
        let (xa, xb) = (self.base[i - 1], self.base[i]);
        if t == ta {
            xa
        } else if t == tb {
            xb
        } else {
            let frac = (t - ta) / (tb - ta);
            xa + Level::from_raw((frac * (xb - xa).raw() as f64).round() as i64)
        }
    }

    /// Exact value at knots and reflection points, grid-rounded linear
    /// interpolation elsewhere.
    pub fn level_at(&self, t: f64) -> Result<Level> {
        self.check_time(t)?;
        let j = self.piece_index(t);
        let piece = &self.pieces[j];
        if piece.start == t {
            return Ok(piece.anchor);
        }
        Ok(piece.apply(self.base_level_at(t)))
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        self.level_at(t).map(Level::to_f64)
    }

    pub fn terminal_level(&self) -> Level {
        // reflection points lie strictly before the horizon
        let last = self.pieces.last().expect("at least one piece");
        last.apply(self.base[self.base.len() - 1])
    }

    fn spans_from(&self, from: f64, from_value: Level) -> Spans<'_> {
        Spans {
            path: self,
            segment: self.segment_index(from),
            piece: self.piece_index(from),
            t: from,
            y: from_value,
            done: from >= self.horizon(),
        }
    }

    /// Solves the crossing of `base_level` on base segment `segment`, kept
    /// inside `(lo, hi)`.
    fn crossing_time(&self, segment: usize, base_level: Level, lo: f64, hi: f64) -> f64 {
        let (ta, tb) = (self.knots[segment - 1], self.knots[segment]);
        let (xa, xb) = (self.base[segment - 1], self.base[segment]);
        let frac = (base_level - xa).raw() as f64 / (xb - xa).raw() as f64;
        let t = ta + frac * (tb - ta);
        if t <= lo {
            let up = lo.next_up();
            if up < hi {
                up
            } else {
                hi
            }
        } else if t >= hi {
            let down = hi.next_down();
            if down > lo {
                down
            } else {
                hi
            }
        } else {
            t
        }
    }

    /// First time `t >= from` at which the path equals one of `targets`, with
    /// the index of the target reached. `from_value` must be the path value at
    /// `from`.
    pub(crate) fn first_hit(
        &self,
        from: f64,
        from_value: Level,
        targets: &[Level],
    ) -> Option<(Stop, usize)> {
        if let Some(k) = targets.iter().position(|&y| y == from_value) {
            return Some((
                Stop {
                    time: from,
                    value: from_value,
                },
                k,
            ));
        }
        let mut spans = self.spans_from(from, from_value);
        let mut base_targets: Vec<Level> = Vec::with_capacity(targets.len());
        let mut cached_piece = usize::MAX;
        loop {
            if spans.piece != cached_piece {
                cached_piece = spans.piece;
                let piece = &self.pieces[cached_piece];
                base_targets.clear();
                base_targets.extend(targets.iter().map(|&y| piece.base_value(y)));
            }
            spans.skip_clear(&base_targets);
            let Some(span) = spans.next() else {
                break;
            };
            let mut best: Option<(f64, usize)> = None;
            for (k, &y) in targets.iter().enumerate() {
                if !crosses(span.y0, span.y1, y) {
                    continue;
                }
                let t = if y == span.y1 {
                    span.t1
                } else {
                    let piece = &self.pieces[span.piece];
                    self.crossing_time(span.segment, piece.base_value(y), span.t0, span.t1)
                };
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, k));
                }
            }
            if let Some((time, k)) = best {
                return Some((
                    Stop {
                        time,
                        value: targets[k],
                    },
                    k,
                ));
            }
        }
        None
    }

    /// First time the path equals `level`.
    pub fn first_passage(&self, level: Level) -> Option<Stop> {
        self.first_hit(0.0, Level::ZERO, &[level]).map(|(s, _)| s)
    }

    /// Reflection at `time` about `pivot`, which must be the path value there.
    pub(crate) fn reflect_about(&self, time: f64, pivot: Level) -> Path {
        if time >= self.horizon() {
            return self.clone();
        }
        let j = self.piece_index(time);
        let mut pieces = Vec::with_capacity(self.pieces.len() + 1);
        pieces.extend_from_slice(&self.pieces[..j]);
        let current = &self.pieces[j];
        if current.start == time {
            pieces.push(current.reflected(pivot));
        } else {
            pieces.push(*current);
            pieces.push(Piece {
                start: time,
                anchor: pivot,
                offset: current.offset.reflect_about(pivot),
                flipped: !current.flipped,
            });
        }
        pieces.extend(self.pieces[j + 1..].iter().map(|p| p.reflected(pivot)));
        // drop reflection points that no longer change anything
        let mut merged: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match merged.last() {
                Some(prev) if prev.same_map(&p) => {}
                _ => merged.push(p),
            }
        }
        Path {
            knots: Arc::clone(&self.knots),
            base: Arc::clone(&self.base),
            pieces: merged,
        }
    }

    /// `rho_r`: keeps the path on `[0, r]` and negates every increment after
    /// `r`, so that `w'(t) = 2 w(r) - w(t)` for `t >= r`.
    pub fn reflect_at_time(&self, r: f64) -> Result<Path> {
        let pivot = self.level_at(r)?;
        Ok(self.reflect_about(r, pivot))
    }

    /// Reflection at a realised stop; `None` (not observed) leaves the path
    /// unchanged.
    pub fn reflect_at_stop(&self, stop: Option<Stop>) -> Path {
        match stop {
            Some(s) => self.reflect_about(s.time, s.value),
            None => self.clone(),
        }
    }

    /// Returns a path with a knot at `t` taking exactly the value `v`.
    pub fn insert_knot(&self, t: f64, v: f64) -> Result<Path> {
        self.insert_knot_level(t, Level::from_f64(v)?)
    }

    pub fn insert_knot_level(&self, t: f64, v: Level) -> Result<Path> {
        self.check_time(t)?;
        let j = self.piece_index(t);
        let base_hit = self.knots.binary_search_by(|k| k.total_cmp(&t)).ok();
        if base_hit.is_some() || self.pieces[j].start == t {
            let existing = self.level_at(t)?;
            if existing != v {
                return Err(Error::KnotConflict {
                    time: t,
                    existing: existing.to_f64(),
                    requested: v.to_f64(),
                });
            }
            return Ok(self.clone());
        }
        let span = self
            .spans_from(0.0, Level::ZERO)
            .find(|s| s.t0 < t && t < s.t1)
            .expect("interior time lies in some span");
        let (left, right, value) = (span.y0.to_f64(), span.y1.to_f64(), v.to_f64());
        let slack = (value - left).abs() + (right - value).abs() - (right - left).abs();
        let scale = left.abs().max(right.abs()).max((right - left).abs()).max(1.0);
        if slack > KNOT_TOLERANCE * scale {
            return Err(Error::InconsistentKnot {
                time: t,
                value,
                left,
                right,
            });
        }
        let i = span.segment;
        let mut knots = self.knots.to_vec();
        let mut base = self.base.to_vec();
        knots.insert(i, t);
        base.insert(i, self.pieces[j].base_value(v));
        Ok(Path {
            knots: knots.into(),
            base: base.into(),
            pieces: self.pieces.clone(),
        })
    }

    /// The restriction of the path to `[0, h]`.
    pub fn truncate(&self, h: f64) -> Result<Path> {
        self.check_time(h)?;
        if h <= 0.0 {
            return Err(Error::InvalidPath("horizon must be positive".into()));
        }
        let i = self.knots.partition_point(|&k| k < h);
        let mut knots = self.knots[..i].to_vec();
        let mut base = self.base[..i].to_vec();
        knots.push(h);
        base.push(self.base_level_at(h));
        let pieces = self.pieces.iter().copied().filter(|p| p.start < h).collect();
        Ok(Path {
            knots: knots.into(),
            base: base.into(),
            pieces,
        })
    }

    /// Appends the increments of `tail` after this path's horizon.
    pub fn concat(&self, tail: &Path) -> Result<Path> {
        let h = self.horizon();
        let end = self.terminal_level();
        let last = *self.pieces.last().expect("at least one piece");
        let mut knots = self.knots.to_vec();
        let mut base = self.base.to_vec();
        for (t, y) in tail.knots().into_iter().zip(tail.knot_values()).skip(1) {
            let value = end + y;
            Level::from_f64(value.to_f64())?;
            knots.push(h + t);
            base.push(last.base_value(value));
        }
        validate_knots(&knots)?;
        Ok(Path {
            knots: knots.into(),
            base: base.into(),
            pieces: self.pieces.clone(),
        })
    }

    /// Largest `|w(s)|` over `s` in `[0, t]`.
    pub fn max_abs_until(&self, t: f64) -> Result<Level> {
        self.check_time(t)?;
        let mut best = Level::ZERO;
        for span in self.spans_from(0.0, Level::ZERO) {
            if span.t1 > t {
                break;
            }
            best = best.max(span.y1.abs());
        }
        Ok(best.max(self.level_at(t)?.abs()))
    }

    pub fn running_max(&self) -> Level {
        self.knot_values().into_iter().max().unwrap_or(Level::ZERO)
    }

    pub fn running_min(&self) -> Level {
        self.knot_values().into_iter().min().unwrap_or(Level::ZERO)
    }

    /// CSV with header `t,x`, one row per knot.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x\n");
        for (t, x) in self.knots().into_iter().zip(self.knot_values()) {
            out.push_str(&format!("{},{}\n", t, x.to_f64()));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Path> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("t,x") => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected header \"t,x\", found {other:?}"
                )))
            }
        }
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for (n, line) in lines.enumerate() {
            let (t, x) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("row {}: expected two columns", n + 2)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", n + 2)))
            };
            knots.push(parse(t)?);
            values.push(parse(x)?);
        }
        if values.first().is_some_and(|&v| v != 0.0) {
            return Err(Error::InvalidPath("w(0) must be 0".into()));
        }
        Path::from_values(knots, &values)
    }
}

// comparisons are negated so that NaN fails them
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn validate_knots(knots: &[f64]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::InvalidPath("a path needs at least two knots".into()));
    }
    if knots[0] != 0.0 {
        return Err(Error::InvalidPath("the first knot must be t = 0".into()));
    }
    if let Some(w) = knots.windows(2).find(|w| !(w[0] < w[1]) || !w[1].is_finite()) {
        return Err(Error::InvalidPath(format!(
            "knot times must be finite and strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

struct Spans<'a> {
    path: &'a Path,
    segment: usize,
    piece: usize,
    t: f64,
    y: Level,
    done: bool,
}

impl Spans<'_> {
    /// From a knot, skips whole base segments of the current piece on which
    /// none of `base_targets` (in base coordinates of that piece) is met.
    /// Piece maps are monotone, so crossings can be tested on base values.
    fn skip_clear(&mut self, base_targets: &[Level]) {
        let path = self.path;
        if self.done || self.t != path.knots[self.segment - 1] {
            return;
        }
        let limit = path
            .pieces
            .get(self.piece + 1)
            .map_or(f64::INFINITY, |p| p.start);
        let n = path.knots.len();
        let mut s = self.segment;
        while s < n && path.knots[s] < limit {
            let (x0, x1) = (path.base[s - 1], path.base[s]);
            if base_targets.iter().any(|&y| crosses(x0, x1, y)) {
                break;
            }
            s += 1;
        }
        if s != self.segment {
            self.segment = s;
            self.t = path.knots[s - 1];
            self.y = path.pieces[self.piece].apply(path.base[s - 1]);
            if s == n {
                self.done = true;
            }
        }
    }
}

impl Iterator for Spans<'_> {
    type Item = Span;

    fn next(&mut self) -> Option<Span> {
        if self.done {
            return None;
        }
        let path = self.path;
        let seg_end = path.knots[self.segment];
        let next_piece = path.pieces.get(self.piece + 1);
        let span = match next_piece {
            Some(np) if np.start < seg_end => {
                let span = Span {
                    segment: self.segment,
                    piece: self.piece,
                    t0: self.t,
                    t1: np.start,
                    y0: self.y,
                    y1: np.anchor,
                };
                self.piece += 1;
                span
            }
            _ => {
                let span = Span {
                    segment: self.segment,
                    piece: self.piece,
                    t0: self.t,
                    t1: seg_end,
                    y0: self.y,
                    y1: path.pieces[self.piece].apply(path.base[self.segment]),
                };
                if next_piece.is_some_and(|np| np.start == seg_end) {
                    self.piece += 1;
                }
                self.segment += 1;
                if self.segment == path.knots.len() {
                    self.done = true;
                }
                span
            }
        };
        self.t = span.t1;
        self.y = span.y1;
        Some(span)
    }
}
