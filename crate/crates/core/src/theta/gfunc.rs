use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::theta::table::{envelopes, ThetaTable};

/// Convex nonincreasing piecewise-linear model of `g_α(x) = x^(−2/d) θ(α x^(1/d))`.
///
/// Below `x[0]` the value is held at `g[0]`; beyond `t_alpha` it is zero.
/// Without a cutoff the last value is held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GFunction<T> {
    pub alpha: T,
    pub d: usize,
    pub x: Vec<T>,
    pub g: Vec<T>,
    pub t_alpha: Option<T>,
}

/// Raw (unconvexified) samples of `g_α`.
pub fn raw_g<T: Real>(theta: impl Fn(T) -> T, alpha: T, d: usize, x_grid: &[T]) -> Vec<T> {
    let inv_d = T::from_usize_lossy(d).recip();
    x_grid
        .iter()
        .map(|&x| x.powf(-T::lit(2.0) * inv_d) * theta(alpha * x.powf(inv_d)))
        .collect()
}

/// Vertices of the lower convex hull of `(x_i, y_i)` (monotone chain),
/// with strictly increasing slopes.
pub fn lower_hull<T: Real>(x: &[T], y: &[T]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b unless slope(a,b) < slope(b,i)
            let s1 = (y[b] - y[a]) / (x[b] - x[a]);
            let s2 = (y[i] - y[b]) / (x[i] - x[b]);
            if s1 < s2 {
                break;
            }
            hull.pop();
        }
        hull.push(i);
    }
    hull
}

impl<T: Real> GFunction<T> {
    /// Convexifies samples `g(x_i)`; the cutoff is the first `x_i` with a
    /// zero sample, after which everything is dropped.
    pub fn from_samples(alpha: T, d: usize, x: &[T], g: &[T]) -> Result<Self> {
        if x.is_empty() || x.len() != g.len() {
            return Err(Error::InvalidInput("need matching, nonempty breakpoint lists".into()));
        }
        if !(x[0] > T::zero()) || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "breakpoints must be positive and increasing".into(),
            ));
        }
        if g.iter().any(|&v| !(v >= T::zero() && v.is_finite())) {
            return Err(Error::InvalidInput("g samples must be finite and nonnegative".into()));
        }
        let cut = g.iter().position(|&v| v == T::zero());
        let end = cut.map_or(x.len(), |j| j + 1);
        let hull = lower_hull(&x[..end], &g[..end]);
        Ok(Self {
            alpha,
            d,
            x: hull.iter().map(|&i| x[i]).collect(),
            g: hull.iter().map(|&i| g[i]).collect(),
            t_alpha: cut.map(|j| x[j]),
        })
    }

    pub fn eval(&self, x: T) -> T {
        if let Some(t) = self.t_alpha {
            if x >= t {
                return T::zero();
            }
        }
        let (xs, gs) = (&self.x, &self.g);
        if x <= xs[0] {
            return gs[0];
        }
        if x >= xs[xs.len() - 1] {
            return gs[gs.len() - 1];
        }
        let j = xs.partition_point(|&v| v <= x) - 1;
        let s = (x - xs[j]) / (xs[j + 1] - xs[j]);
        gs[j] + s * (gs[j + 1] - gs[j])
    }

    /// Segment slopes `s_j` between consecutive breakpoints (increasing).
    pub fn slopes(&self) -> Vec<T> {
        self.x
            .windows(2)
            .zip(self.g.windows(2))
            .map(|(x, g)| (g[1] - g[0]) / (x[1] - x[0]))
            .collect()
    }

    /// `−∂g(x)` as an interval `[lo, hi]`; `hi` may be `+∞` at `x ≤ x₀`.
    pub fn neg_subdifferential(&self, x: T) -> (T, T) {
        self.neg_subdifferential_with(&self.slopes(), x)
    }

    /// [`Self::neg_subdifferential`] with precomputed [`Self::slopes`].
    pub fn neg_subdifferential_with(&self, s: &[T], x: T) -> (T, T) {
        let xs = &self.x;
        let m = xs.len();
        if let Some(t) = self.t_alpha {
            if x > t {
                return (T::zero(), T::zero());
            }
        }
        if x <= xs[0] {
            let lo = s.first().map_or(T::zero(), |&v| -v);
            return (lo, T::infinity());
        }
        if x >= xs[m - 1] {
            let hi = s.last().map_or(T::zero(), |&v| -v);
            return (T::zero(), hi);
        }
        let j = xs.partition_point(|&v| v <= x) - 1;
        if x == xs[j] {
            (-s[j], -s[j - 1])
        } else {
            (-s[j], -s[j])
        }
    }

    /// `{x : t ∈ −∂g(x)}` as `[x_lo, x_hi]`.
    ///
    /// `t = +∞` gives `[0, x₀]`; `t ≤ 0` gives the cutoff (or the last
    /// breakpoint); `t` equal to a slope magnitude gives that whole segment.
    pub fn subdiff_inverse(&self, t: T) -> (T, T) {
        self.subdiff_inverse_with(&self.slopes(), t)
    }

    /// [`Self::subdiff_inverse`] with precomputed [`Self::slopes`].
    pub fn subdiff_inverse_with(&self, s: &[T], t: T) -> (T, T) {
        let xs = &self.x;
        let m = xs.len();
        let last = self.t_alpha.unwrap_or(xs[m - 1]);
        if t == T::infinity() {
            return (T::zero(), xs[0]);
        }
        if t <= T::zero() {
            return (last, last);
        }
        // magnitudes −s_j are decreasing in j
        let j = s.partition_point(|&v| -v > t);
        if j == 0 {
            if s.first().is_some_and(|&v| -v == t) {
                return (xs[0], xs[1]);
            }
            return (xs[0], xs[0]);
        }
        if j == s.len() {
            return (xs[m - 1], xs[m - 1]);
        }
        if -s[j] == t {
            (xs[j], xs[j + 1])
        } else {
            (xs[j], xs[j])
        }
    }

    /// True when no two consecutive segments share a slope.
    pub fn is_strictly_convex(&self) -> bool {
        self.slopes().windows(2).all(|w| w[0] < w[1])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: GFunction<T> = serde_json::from_str(s)?;
        if g.x.is_empty() || g.x.len() != g.g.len() {
            return Err(Error::InvalidInput("malformed g function".into()));
        }
        Ok(g)
    }
}

/// `g_α` from a θ table through the lower envelope `θ⁻`, then convexified.
pub fn build_g<T: Real>(table: &ThetaTable<T>, alpha: T, x_grid: &[T]) -> Result<GFunction<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    let (lower, _) = envelopes(table);
    let raw = raw_g(|a| lower.eval(a), alpha, table.d, x_grid);
    GFunction::from_samples(alpha, table.d, x_grid, &raw)
}
