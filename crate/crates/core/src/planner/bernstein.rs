use crate::error::{Error, Result};
use crate::world::Vec2;

/// Binomial coefficients C(5, i).
const BINOM5: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];

/// Quintic Bernstein (degree-5 Bézier) curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySegment {
    pub control_points: [Vec2; 6],
    /// Arc-length spacing of execution samples, meters.
    pub sample_spacing: f64,
}

impl TrajectorySegment {
    pub fn new(control_points: [Vec2; 6]) -> Self {
        Self {
            control_points,
            sample_spacing: 1.0,
        }
    }

    /// Heading-continuous segment from `a` (leaving along `ta`) to `b`
    /// (arriving along `tb`). `tension` scales how far the interior control
    /// points reach along the tangents; 0 gives the straight chord.
    pub fn hermite_like(a: Vec2, ta: Vec2, b: Vec2, tb: Vec2, tension: f64) -> Self {
        let reach = a.dist(b) / 5.0 * tension;
        let ta = ta.normalized();
        let tb = tb.normalized();
        let chord = b - a;
        let straight = |k: f64| a + chord * (k / 5.0);
        if tension == 0.0 {
            return Self::new([a, straight(1.0), straight(2.0), straight(3.0), straight(4.0), b]);
        }
        Self::new([a, a + ta * reach, a + ta * (2.0 * reach), b - tb * (2.0 * reach), b - tb * reach, b])
    }

    pub fn eval(&self, t: f64) -> Result<Vec2> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Range(format!("curve parameter {t} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(t))
    }

    /// `Σ C(5,i) tⁱ (1−t)⁵⁻ⁱ Pᵢ`
    pub fn eval_unchecked(&self, t: f64) -> Vec2 {
        let s = 1.0 - t;
        let mut tp = [1.0; 6];
        let mut sp = [1.0; 6];
        for i in 1..6 {
            tp[i] = tp[i - 1] * t;
            sp[i] = sp[i - 1] * s;
        }
        let mut out = Vec2::ZERO;
        for i in 0..6 {
            out = out + self.control_points[i] * (BINOM5[i] * tp[i] * sp[5 - i]);
        }
        out
    }

    /// Dense polyline approximation with `n + 1` points.
    pub fn polyline(&self, n: usize) -> Vec<Vec2> {
        (0..=n).map(|k| self.eval_unchecked(k as f64 / n as f64)).collect()
    }

    /// Points spaced roughly `sample_spacing` apart along the curve, both
    /// endpoints included.
    pub fn samples(&self) -> Vec<Vec2> {
        let dense = self.polyline(400);
        let mut out = vec![dense[0]];
        let mut acc = 0.0;
        for w in dense.windows(2) {
            acc += w[0].dist(w[1]);
            if acc >= self.sample_spacing {
                out.push(w[1]);
                acc = 0.0;
            }
        }
        let end = *dense.last().unwrap();
        if out.last().unwrap().dist(end) < 0.5 * self.sample_spacing && out.len() > 1 {
            out.pop();
        }
        out.push(end);
        out
    }
}
