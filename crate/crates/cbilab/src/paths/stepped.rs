//! Finite right-continuous piecewise-linear-with-jumps paths.
//!
//! A [`SteppedPath`] is the computational stand-in for a càdlàg driver: a
//! strictly increasing list of breakpoints starting at 0, an affine segment
//! on each inter-breakpoint interval, and a (possibly zero) jump at every
//! interior breakpoint. The stored value at a breakpoint is the post-jump
//! value, so evaluation is right-continuous by construction. A path can be
//! absorbed at `+∞` from some time on, which is how killed Lévy drivers are
//! represented.

use std::io::Write as _;

use serde::{Deserialize, Serialize};

use super::PathError;

#[derive(Debug, Clone, PartialEq)]
pub struct SteppedPath {
    starts: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    horizon: f64,
    absorbed_at: Option<f64>,
}

impl SteppedPath {
    /// Build a path from raw segment data. `starts` must begin at `0` and
    /// be strictly increasing; segment `i` has post-jump value `values[i]`
    /// and slope `slopes[i]`, and the last segment extends past `horizon`.
    pub fn new(
        starts: Vec<f64>,
        values: Vec<f64>,
        slopes: Vec<f64>,
        horizon: f64,
    ) -> Result<Self, PathError> {
        if starts.is_empty() || starts.len() != values.len() || starts.len() != slopes.len() {
            return Err(PathError::Invalid("inconsistent segment arrays".into()));
        }
        if starts[0] != 0.0 {
            return Err(PathError::Invalid("breakpoints must start at 0".into()));
        }
        if starts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PathError::Invalid(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if !horizon.is_finite() || horizon < *starts.last().unwrap() {
            return Err(PathError::Invalid(
                "horizon must be finite and cover all breakpoints".into(),
            ));
        }
        if starts
            .iter()
            .chain(values.iter())
            .chain(slopes.iter())
            .any(|x| !x.is_finite())
        {
            return Err(PathError::Invalid("non-finite segment data".into()));
        }
        Ok(Self {
            starts,
            values,
            slopes,
            horizon,
            absorbed_at: None,
        })
    }

    /// Constant path `t ↦ v` on `[0, horizon]`.
    pub fn constant(v: f64, horizon: f64) -> Self {
        Self::new(vec![0.0], vec![v], vec![0.0], horizon).expect("valid")
    }

    /// Affine path `t ↦ v0 + slope·t`.
    pub fn affine(v0: f64, slope: f64, horizon: f64) -> Self {
        Self::new(vec![0.0], vec![v0], vec![slope], horizon).expect("valid")
    }

    /// Right-continuous step path through `(times[i], values[i])`.
    pub fn step_function(times: Vec<f64>, values: Vec<f64>) -> Result<Self, PathError> {
        let horizon = *times
            .last()
            .ok_or_else(|| PathError::Invalid("empty grid".into()))?;
        let slopes = vec![0.0; times.len()];
        Self::new(times, values, slopes, horizon)
    }

    /// Piecewise-linear interpolation of `f` on knots `0, dx, 2dx, …, x_max`.
    ///
    /// Values are accumulated from the slopes so interior jumps are exactly
    /// zero; knot values then differ from `f` by at most a few ulps of
    /// accumulated rounding.
    pub fn sample_function(f: impl Fn(f64) -> f64, x_max: f64, dx: f64) -> Result<Self, PathError> {
        if !(dx > 0.0 && x_max > 0.0) {
            return Err(PathError::Invalid("need dx > 0 and x_max > 0".into()));
        }
        let n = (x_max / dx).ceil() as usize;
        let mut starts = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut slopes = Vec::with_capacity(n);
        let mut x = 0.0;
        let mut v = f(0.0);
        for i in 0..n {
            let x_next = if i + 1 == n {
                x_max
            } else {
                (i + 1) as f64 * dx
            };
            let v_next = f(x_next);
            starts.push(x);
            values.push(v);
            slopes.push((v_next - v) / (x_next - x));
            v += slopes[i] * (x_next - x);
            x = x_next;
        }
        Self::new(starts, values, slopes, x_max)
    }

    /// Mark the path as absorbed at `+∞` from time `tau` on.
    pub fn with_absorption(mut self, tau: f64) -> Self {
        assert!(tau >= 0.0);
        self.absorbed_at = Some(tau);
        self
    }

    pub fn absorbed_at(&self) -> Option<f64> {
        self.absorbed_at
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.starts
    }

    fn segment_index(&self, t: f64) -> usize {
        self.starts.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Value at `t ≥ 0` (right-continuous; `+∞` after absorption). The last
    /// segment extends past the horizon with its own slope.
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        if self.absorbed_at.is_some_and(|tau| t >= tau) {
            return f64::INFINITY;
        }
        let i = self.segment_index(t);
        self.values[i] + self.slopes[i] * (t - self.starts[i])
    }

    /// Left limit at `t > 0`.
    pub fn eval_left(&self, t: f64) -> f64 {
        debug_assert!(t > 0.0);
        if self.absorbed_at.is_some_and(|tau| t > tau) {
            return f64::INFINITY;
        }
        let i = self.segment_index(t);
        if t == self.starts[i] && i > 0 {
            self.values[i - 1] + self.slopes[i - 1] * (t - self.starts[i - 1])
        } else {
            self.values[i] + self.slopes[i] * (t - self.starts[i])
        }
    }

    /// Value and slope of the segment active at `t` (right-continuous).
    /// Panics past absorption; callers handle the absorbed region first.
    pub fn value_and_slope(&self, t: f64) -> (f64, f64) {
        debug_assert!(self.absorbed_at.is_none_or(|tau| t < tau));
        let i = self.segment_index(t);
        (
            self.values[i] + self.slopes[i] * (t - self.starts[i]),
            self.slopes[i],
        )
    }

    /// First breakpoint strictly greater than `t`, if any.
    pub fn next_breakpoint_after(&self, t: f64) -> Option<f64> {
        let i = self.starts.partition_point(|&s| s <= t);
        self.starts.get(i).copied()
    }

    /// Insert a breakpoint at `t` with zero jump (the function is
    /// unchanged). No-op when `t` is already a breakpoint or non-interior.
    pub fn refine(&self, t: f64) -> Self {
        if t <= 0.0
            || self
                .starts
                .binary_search_by(|s| s.partial_cmp(&t).unwrap())
                .is_ok()
        {
            return self.clone();
        }
        let i = self.segment_index(t);
        let mut out = self.clone();
        out.starts.insert(i + 1, t);
        out.values.insert(
            i + 1,
            self.values[i] + self.slopes[i] * (t - self.starts[i]),
        );
        out.slopes.insert(i + 1, self.slopes[i]);
        out
    }

    /// Supremum of a non-decreasing path over `[0, ∞)` (the final segment
    /// extends indefinitely).
    pub fn sup_value(&self) -> f64 {
        if self.absorbed_at.is_some() {
            return f64::INFINITY;
        }
        if *self.slopes.last().unwrap() > 0.0 {
            f64::INFINITY
        } else {
            *self.values.last().unwrap()
        }
    }

    /// Jump at interior breakpoint `i ≥ 1`.
    pub fn jump_at(&self, i: usize) -> f64 {
        assert!(i >= 1 && i < self.starts.len());
        self.values[i]
            - (self.values[i - 1] + self.slopes[i - 1] * (self.starts[i] - self.starts[i - 1]))
    }

    /// All interior jumps.
    pub fn jumps(&self) -> Vec<f64> {
        (1..self.starts.len()).map(|i| self.jump_at(i)).collect()
    }

    /// True when no interior jump is negative (admissible reproduction
    /// path).
    pub fn has_no_negative_jumps(&self) -> bool {
        (1..self.starts.len()).all(|i| self.jump_at(i) >= 0.0)
    }

    /// True when all slopes and jumps are non-negative (admissible
    /// immigration path).
    pub fn is_non_decreasing(&self) -> bool {
        self.slopes.iter().all(|&s| s >= 0.0) && self.has_no_negative_jumps()
    }

    /// The path `t ↦ self(t) + dv`.
    pub fn translate(&self, dv: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v += dv;
        }
        out
    }

    /// The scaling operator: `(S_a^b f)(t) = f(a t) / b`, `a, b > 0`.
    pub fn rescale(&self, a: f64, b: f64) -> Self {
        assert!(a > 0.0 && b > 0.0);
        Self {
            starts: self.starts.iter().map(|t| t / a).collect(),
            values: self.values.iter().map(|v| v / b).collect(),
            slopes: self.slopes.iter().map(|s| s * a / b).collect(),
            horizon: self.horizon / a,
            absorbed_at: self.absorbed_at.map(|tau| tau / a),
        }
    }

    // -- CSV round trip ------------------------------------------------

    /// Serialize as `time,value,jump` rows: one row per breakpoint, then
    /// exactly one closing row — at the absorption time with the `inf`
    /// sentinel in the jump column (the value column keeps the left limit,
    /// which pins the final slope), or at the horizon with jump `0`.
    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        writeln!(out, "time,value,jump").unwrap();
        let tau = self.absorbed_at.unwrap_or(f64::INFINITY);
        for i in 0..self.starts.len() {
            if self.starts[i] >= tau {
                break;
            }
            let jump = if i == 0 { 0.0 } else { self.jump_at(i) };
            writeln!(out, "{},{},{}", self.starts[i], self.values[i], jump).unwrap();
        }
        if tau <= self.horizon {
            let i = self.segment_index(tau);
            let left = self.values[i] + self.slopes[i] * (tau - self.starts[i]);
            writeln!(out, "{},{},inf", tau, left).unwrap();
        } else {
            writeln!(out, "{},{},0", self.horizon, self.eval(self.horizon)).unwrap();
        }
        String::from_utf8(out).unwrap()
    }

    /// Parse the `to_csv` format back into a path.
    pub fn from_csv(text: &str) -> Result<Self, PathError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| PathError::Csv(e.to_string()))?;
            if rec.len() != 3 {
                return Err(PathError::Csv("expected 3 columns".into()));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| PathError::Csv(format!("bad number {s:?}: {e}")))
            };
            rows.push((parse(&rec[0])?, parse(&rec[1])?, parse(&rec[2])?));
        }
        if rows.len() < 2 {
            return Err(PathError::Csv(
                "need at least one breakpoint row and the closing row".into(),
            ));
        }
        // The last row is always the closing marker: absorption when its
        // jump column is `inf` (the value column then holds the left
        // limit), a horizon marker otherwise. Earlier rows are breakpoints.
        let marker = *rows.last().unwrap();
        let absorbed_at = marker.2.is_infinite().then_some(marker.0);
        let breaks = &rows[..rows.len() - 1];
        let mut starts = Vec::with_capacity(breaks.len());
        let mut values = Vec::with_capacity(breaks.len());
        let mut slopes = Vec::with_capacity(breaks.len());
        for (i, &(t, v, _)) in breaks.iter().enumerate() {
            let (t2, v2, j2) = if i + 1 < breaks.len() {
                breaks[i + 1]
            } else {
                marker
            };
            let arrival = if j2.is_infinite() { v2 } else { v2 - j2 };
            let slope = if t2 > t {
                (arrival - v) / (t2 - t)
            } else {
                0.0
            };
            starts.push(t);
            values.push(v);
            slopes.push(slope);
        }
        let horizon = marker.0.max(*starts.last().unwrap());
        let path = Self::new(starts, values, slopes, horizon)?;
        Ok(match absorbed_at {
            Some(tau) => path.with_absorption(tau),
            None => path,
        })
    }
}

/// JSON envelope stored next to a sampled path: enough metadata to
/// regenerate the CSV bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEnvelope {
    /// Mechanism spec in the canonical JSON form.
    pub mechanism: serde_json::Value,
    pub seed: u64,
    pub horizon: f64,
    /// File name of the CSV the envelope describes.
    pub csv: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_is_right_continuous() {
        let p = SteppedPath::new(vec![0.0, 1.0], vec![0.0, 2.0], vec![1.0, 0.5], 3.0).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.eval_left(1.0), 1.0);
        assert_eq!(p.jump_at(1), 1.0);
        assert_eq!(p.eval(2.0), 2.5);
    }

    #[test]
    fn absorption_sentinel() {
        let p = SteppedPath::affine(0.0, 1.0, 5.0).with_absorption(2.0);
        assert_eq!(p.eval(1.9), 1.9);
        assert!(p.eval(2.0).is_infinite());
    }

    #[test]
    fn csv_round_trip_with_jumps() {
        let p = SteppedPath::new(
            vec![0.0, 0.5, 2.0],
            vec![1.0, 2.5, 2.0],
            vec![1.0, -0.5, 0.25],
            4.0,
        )
        .unwrap();
        let q = SteppedPath::from_csv(&p.to_csv()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn csv_round_trip_absorbed() {
        let p = SteppedPath::affine(1.0, 2.0, 3.0).with_absorption(1.5);
        let q = SteppedPath::from_csv(&p.to_csv()).unwrap();
        for t in [0.0, 0.7, 1.49] {
            assert_eq!(p.eval(t), q.eval(t));
        }
        assert!(q.eval(1.5).is_infinite());
        assert_eq!(q.absorbed_at(), Some(1.5));
    }

    #[test]
    fn sampled_function_has_zero_jumps() {
        let p = SteppedPath::sample_function(|x| (1.0 - x).abs().sqrt(), 1.2, 1e-3).unwrap();
        assert!(p.has_no_negative_jumps());
        assert!(p.jumps().iter().all(|&j| j == 0.0));
        assert!((p.eval(0.5) - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rescale_matches_definition() {
        let p = SteppedPath::new(vec![0.0, 1.0], vec![0.0, 3.0], vec![2.0, 1.0], 2.0).unwrap();
        let s = p.rescale(2.0, 4.0);
        for t in [0.0, 0.25, 0.5, 0.9] {
            assert!((s.eval(t) - p.eval(2.0 * t) / 4.0).abs() < 1e-15);
        }
    }
}
