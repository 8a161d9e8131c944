use serde::Serialize;

use crate::error::Result;
use crate::scalar::Real;
use crate::theta::bounds::theta_derivative_bound;
use crate::theta::gfunc::GFunction;
use crate::theta::table::{isotonic_decreasing, t1_estimate, ThetaTable};

/// Absolute slack added to every tolerance comparison.
const FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct IsotonicCheck<T> {
    pub alpha: T,
    pub raw: T,
    pub fitted: T,
    pub err: T,
    pub ok: bool,
}

/// Raw samples against their nonincreasing fit; each must lie within twice
/// its error bar.
pub fn isotonic_check<T: Real>(table: &ThetaTable<T>) -> Vec<IsotonicCheck<T>> {
    let fitted = isotonic_decreasing(&table.thetas());
    table
        .samples
        .iter()
        .zip(fitted)
        .map(|(s, f)| IsotonicCheck {
            alpha: s.alpha,
            raw: s.theta,
            fitted: f,
            err: s.err,
            ok: (s.theta - f).abs() <= T::lit(2.0) * s.err + T::lit(FLOOR),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct GConvexityCheck<T> {
    pub alpha: T,
    pub x: Vec<T>,
    pub raw: Vec<T>,
    /// Error bar carried over from the table, `x^(−2/d)·err`.
    pub raw_err: Vec<T>,
    /// Relative slope increments `(s_i − s_{i−1}) / max(|s_i|, |s_{i−1}|)`.
    pub relative_second_differences: Vec<T>,
    pub min_relative_second_difference: T,
    /// `raw − convexified` at each point.
    pub hull_gap: Vec<T>,
    pub convex_within: T,
    pub convex_ok: bool,
    pub hull_ok: bool,
}

/// Raw `g_α` at the points `x_j = (α_j/α)^d` where the table is sampled, its
/// discrete convexity, and the distance to its convex envelope.
pub fn g_convexity_check<T: Real>(table: &ThetaTable<T>, alpha: T, tolerance: T) -> Result<GConvexityCheck<T>> {
    let d = table.d;
    let dd = T::from_usize_lossy(d);
    let mut x = Vec::new();
    let mut raw = Vec::new();
    let mut raw_err = Vec::new();
    for s in table.samples.iter().filter(|s| s.alpha > T::zero()) {
        let xi = (s.alpha / alpha).powf(dd);
        let w = xi.powf(-T::lit(2.0) / dd);
        x.push(xi);
        raw.push(w * s.theta);
        raw_err.push(w * s.err);
    }
    // stop at the first zero; beyond it g vanishes identically
    let end = raw.iter().position(|&v| v == T::zero()).map_or(raw.len(), |j| j + 1);
    let slopes: Vec<T> = (1..end).map(|i| (raw[i] - raw[i - 1]) / (x[i] - x[i - 1])).collect();
    let rel: Vec<T> = slopes
        .windows(2)
        .map(|w| {
            let scale = w[0].abs().max(w[1].abs());
            if scale == T::zero() {
                T::zero()
            } else {
                (w[1] - w[0]) / scale
            }
        })
        .collect();
    let min_rel = rel.iter().copied().fold(T::infinity(), T::min);
    let g = GFunction::from_samples(alpha, d, &x, &raw)?;
    let hull_gap: Vec<T> = x.iter().zip(&raw).map(|(&xi, &ri)| ri - g.eval(xi)).collect();
    let hull_ok = hull_gap.iter().zip(&raw_err).all(|(&gap, &e)| gap <= e + T::lit(FLOOR));
    Ok(GConvexityCheck {
        alpha,
        x,
        raw,
        raw_err,
        relative_second_differences: rel,
        min_relative_second_difference: min_rel,
        hull_gap,
        convex_within: tolerance,
        convex_ok: !(min_rel < -tolerance),
        hull_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct DerivativeCheck<T> {
    pub a: T,
    pub b: T,
    /// `−Δθ̂/Δα`.
    pub slope: T,
    pub bound: T,
    /// `slope + 2(e_a + e_b)/Δα − bound`; nonnegative when consistent.
    pub margin: T,
    pub ok: bool,
}

/// Finite-difference slopes on consecutive samples inside `(0, t₁)` compared
/// with the derivative bound at the midpoint.
pub fn derivative_check<T: Real>(table: &ThetaTable<T>, t1: T) -> Result<Vec<DerivativeCheck<T>>> {
    let mut out = Vec::new();
    for w in table.samples.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        if !(p.alpha > T::zero() && q.alpha < t1) {
            continue;
        }
        let da = q.alpha - p.alpha;
        let slope = -(q.theta - p.theta) / da;
        let bound = theta_derivative_bound((p.alpha + q.alpha) / T::lit(2.0), table.d)?;
        let margin = slope + T::lit(2.0) * (p.err + q.err) / da - bound;
        out.push(DerivativeCheck {
            a: p.alpha,
            b: q.alpha,
            slope,
            bound,
            margin,
            ok: margin >= -T::lit(FLOOR),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct Diagnostics<T> {
    pub t1: T,
    pub t1_not_reached: bool,
    pub isotonic: Vec<IsotonicCheck<T>>,
    pub derivative: Vec<DerivativeCheck<T>>,
    /// Largest `|Δθ̂/Δα|` inside `(0, t₁)`.
    pub max_slope: T,
    pub g: Option<GConvexityCheck<T>>,
}

/// All table diagnostics; the `g` check runs when `g_alpha` is given.
pub fn diagnostics<T: Real>(table: &ThetaTable<T>, g_alpha: Option<T>) -> Result<Diagnostics<T>> {
    let t1 = t1_estimate(table, None);
    let derivative = derivative_check(table, t1.t1)?;
    let max_slope = derivative.iter().map(|c| c.slope.abs()).fold(T::zero(), T::max);
    let g = match g_alpha {
        Some(a) => Some(g_convexity_check(table, a, T::lit(0.05))?),
        None => None,
    };
    Ok(Diagnostics {
        t1: t1.t1,
        t1_not_reached: t1.not_reached,
        isotonic: isotonic_check(table),
        derivative,
        max_slope,
        g,
    })
}
