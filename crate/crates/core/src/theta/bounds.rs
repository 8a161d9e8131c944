//! Closed-form bounds on the cell constant `θ(α)`.

use crate::error::{Error, Result};
use crate::scalar::{unit_ball_volume, Real};

/// Half-diagonal of the unit cube, the radius of the ball enclosing a cell.
pub fn half_diagonal<T: Real>(d: usize) -> T {
    T::from_usize_lossy(d).sqrt() / T::lit(2.0)
}

/// Surface area of the unit sphere `S^{d-1}` (`2` for `d = 1`).
pub fn sphere_area<T: Real>(d: usize) -> T {
    T::from_usize_lossy(d) * unit_ball_volume::<T>(d)
}

/// Radial solution of `−Δw = 1` in the annulus `α < |x| < r₀` with `w = 0`
/// on the inner sphere and zero flux on the outer one.
pub fn neumann_profile<T: Real>(alpha: T, d: usize, r: T) -> T {
    let r0 = half_diagonal::<T>(d);
    let dd = T::from_usize_lossy(d);
    let quad = (r * r - alpha * alpha) / (T::lit(2.0) * dd);
    match d {
        1 => r0 * (r - alpha) - quad,
        2 => r0 * r0 / T::lit(2.0) * (r / alpha).ln() - quad,
        _ => {
            let k = neumann_constant::<T>(d);
            let p = T::lit(2.0) - dd;
            k * (alpha.powf(p) - r.powf(p)) - quad
        }
    }
}

/// Coefficient of the fundamental solution in the radial profile.
pub fn neumann_constant<T: Real>(d: usize) -> T {
    let r0 = half_diagonal::<T>(d);
    let dd = T::from_usize_lossy(d);
    match d {
        1 => r0,
        2 => r0 * r0 / T::lit(2.0),
        _ => r0.powf(dd) / (dd * (dd - T::lit(2.0))),
    }
}

/// `∫ w` over the annulus around one hole: an upper bound for `θ(α)`.
pub fn upper_bound_neumann<T: Real>(alpha: T, d: usize) -> Result<T> {
    check_dim(d)?;
    let r0 = half_diagonal::<T>(d);
    if !(alpha > T::zero() && alpha < r0) {
        return Err(Error::InvalidInput(format!("need 0 < alpha < {r0}, got {alpha}")));
    }
    let two = T::lit(2.0);
    let dd = T::from_usize_lossy(d);
    let k = neumann_constant::<T>(d);
    let a2 = alpha * alpha;
    let r02 = r0 * r0;
    let value = match d {
        1 => {
            let l = r0 - alpha;
            two * l * l * l / T::lit(3.0)
        }
        2 => {
            let log_term = r02 / two * (r0 / alpha).ln() - (r02 - a2) / T::lit(4.0);
            two * T::PI() * (k * log_term - (r02 - a2) * (r02 - a2) / T::lit(16.0))
        }
        _ => {
            let ad = alpha.powf(dd);
            let r0d = r0.powf(dd);
            let fundamental = alpha.powf(two - dd) * (r0d - ad) / dd - (r02 - a2) / two;
            let quadratic =
                ((r0.powf(dd + two) - alpha.powf(dd + two)) / (dd + two) - a2 * (r0d - ad) / dd) / (two * dd);
            sphere_area::<T>(d) * (k * fundamental - quadratic)
        }
    };
    Ok(value.max(T::zero()))
}

/// Dominant term of the upper bound: `k·log(r₀/α)` for `d = 2`, `k·α^(2−d)`
/// for `d ≥ 3`.
pub fn upper_bound_leading<T: Real>(alpha: T, d: usize) -> Result<T> {
    check_dim(d)?;
    if d < 2 {
        return Err(Error::InvalidInput("leading term is defined for d >= 2".into()));
    }
    let k = neumann_constant::<T>(d);
    Ok(match d {
        2 => k * (half_diagonal::<T>(2) / alpha).ln(),
        _ => k * alpha.powf(T::lit(2.0) - T::from_usize_lossy(d)),
    })
}

/// The constant subtracted in [`lower_bound`].
pub fn lower_bound_constant<T: Real>(d: usize, t1: T) -> T {
    let dd = T::from_usize_lossy(d);
    if d == 2 {
        (t1.recip()).ln() / (T::lit(2.0) * T::PI()) + t1 * t1 / T::lit(2.0)
    } else {
        t1 * t1 / dd + t1.powf(T::lit(2.0) - dd) / (dd * (dd - T::lit(2.0)) * unit_ball_volume::<T>(d))
    }
}

/// Lower bound on `θ(α)` with `t₁` replaced by `t1_cap` (default `√d/2`).
/// May be negative, in which case it carries no information.
pub fn lower_bound<T: Real>(alpha: T, d: usize, t1_cap: Option<T>) -> Result<T> {
    check_dim(d)?;
    if d < 2 {
        return Err(Error::InvalidInput("lower bound is stated for d >= 2".into()));
    }
    let t1 = t1_cap.unwrap_or_else(|| half_diagonal(d));
    let dd = T::from_usize_lossy(d);
    let lead = if d == 2 {
        alpha.recip().ln() / (T::lit(2.0) * T::PI())
    } else {
        alpha.powf(T::lit(2.0) - dd) / (dd * (dd - T::lit(2.0)) * unit_ball_volume::<T>(d))
    };
    Ok(lead - lower_bound_constant(d, t1))
}

/// The derivative bound integrated from `α` to `t₁`; it vanishes at `α = t₁`
/// and is never weaker than [`lower_bound`].
pub fn lower_bound_integrated<T: Real>(alpha: T, d: usize, t1_cap: Option<T>) -> Result<T> {
    check_dim(d)?;
    if d < 2 {
        return Err(Error::InvalidInput("lower bound is stated for d >= 2".into()));
    }
    let t1 = t1_cap.unwrap_or_else(|| half_diagonal(d));
    if alpha >= t1 {
        return Ok(T::zero());
    }
    let dd = T::from_usize_lossy(d);
    let quad = (t1 * t1 - alpha * alpha) / dd;
    let lead = if d == 2 {
        (t1 / alpha).ln() / (T::lit(2.0) * T::PI())
    } else {
        let p = T::lit(2.0) - dd;
        (alpha.powf(p) - t1.powf(p)) / (dd * (dd - T::lit(2.0)) * unit_ball_volume::<T>(d))
    };
    Ok(lead - quad)
}

/// `max(0, α^(1−d)/(d·ω_d) − 2α/d)`, a lower bound for `−θ′(α)`.
pub fn theta_derivative_bound<T: Real>(alpha: T, d: usize) -> Result<T> {
    check_dim(d)?;
    if !(alpha > T::zero()) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    let dd = T::from_usize_lossy(d);
    let v = alpha.powf(T::one() - dd) / (dd * unit_ball_volume::<T>(d)) - T::lit(2.0) * alpha / dd;
    Ok(v.max(T::zero()))
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("dimension must be 1, 2 or 3, got {d}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule for `S_d ∫_α^{r₀} w(r) r^{d−1} dr`.
    fn radial_oracle(alpha: f64, d: usize) -> f64 {
        let r0 = (d as f64).sqrt() / 2.0;
        let m = 20_000;
        let h = (r0 - alpha) / m as f64;
        let g = |r: f64| neumann_profile(alpha, d, r) * r.powi(d as i32 - 1);
        let mut s = g(alpha) + g(r0);
        for i in 1..m {
            s += g(alpha + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        sphere_area::<f64>(d) * s * h / 3.0
    }

    #[test]
    fn upper_bound_matches_radial_quadrature() {
        for d in 1..=3 {
            for alpha in [0.05, 0.1, 0.3] {
                let exact = upper_bound_neumann(alpha, d).unwrap();
                let oracle = radial_oracle(alpha, d);
                assert!((exact - oracle).abs() < 1e-6, "d={d} α={alpha}: {exact} vs {oracle}");
            }
        }
    }

    #[test]
    fn one_dimensional_upper_bound_is_exact() {
        for alpha in [0.0001f64, 0.1, 0.25, 0.4] {
            let exact = (1.0 - 2.0 * alpha).powi(3) / 12.0;
            assert!((upper_bound_neumann(alpha, 1).unwrap() - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn neumann_condition_at_outer_radius() {
        for d in 1..=3 {
            let r0 = (d as f64).sqrt() / 2.0;
            let e = 1e-6;
            let slope = (neumann_profile(0.1, d, r0) - neumann_profile(0.1, d, r0 - e)) / e;
            assert!(slope.abs() < 1e-5, "d={d} slope {slope}");
        }
    }

    #[test]
    fn leading_terms() {
        let lead2 = upper_bound_leading(0.1, 2).unwrap();
        assert!((lead2 - 0.25 * (1.0 / (2f64.sqrt() * 0.1)).ln()).abs() < 1e-14);
        assert!((lead2 - 0.489).abs() < 1e-3);
        let lead3 = upper_bound_leading(0.1, 3).unwrap();
        let k3 = (3f64.sqrt() / 2.0).powi(3) / 3.0;
        assert!((lead3 - k3 / 0.1).abs() < 1e-12);
    }

    #[test]
    fn degenerate_annulus() {
        let r0 = 2f64.sqrt() / 2.0;
        let v = upper_bound_neumann(r0 - 1e-9, 2).unwrap();
        assert!((0.0..1e-12).contains(&v));
        assert!(upper_bound_neumann(r0, 2).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let t1 = 2f64.sqrt() / 2.0;
        let v = lower_bound(0.1, 2, None).unwrap();
        let independent =
            10f64.ln() / (2.0 * std::f64::consts::PI) - (2f64.sqrt().ln() / (2.0 * std::f64::consts::PI) + 0.25);
        assert!((v - independent).abs() < 1e-14);
        assert!((v - 0.0613).abs() < 1e-4);

        let w3 = 4.0 * std::f64::consts::PI / 3.0;
        let t13 = 3f64.sqrt() / 2.0;
        let c3 = t13 * t13 / 3.0 + 1.0 / (t13 * 3.0 * w3);
        let v3 = lower_bound(0.05, 3, None).unwrap();
        assert!((v3 - (20.0 / (3.0 * w3) - c3)).abs() < 1e-12);

        assert_eq!(lower_bound_integrated(t1, 2, None).unwrap(), 0.0);
        for alpha in [0.05, 0.1, 0.3, 0.6] {
            assert!(lower_bound_integrated(alpha, 2, None).unwrap() >= lower_bound(alpha, 2, None).unwrap());
        }
    }

    #[test]
    fn derivative_bound_examples() {
        let v = theta_derivative_bound(0.1, 2).unwrap();
        assert!((v - (10.0 / (2.0 * std::f64::consts::PI) - 0.1)).abs() < 1e-12);
        let v1: f64 = theta_derivative_bound(0.1, 1).unwrap();
        assert!((v1 - 0.3).abs() < 1e-12);
        // exact −θ′ in one dimension: (1 − 2α)²/2
        assert!(0.5 * 0.8f64.powi(2) >= v1);
        assert_eq!(theta_derivative_bound(0.9, 2).unwrap(), 0.0);
    }
}
