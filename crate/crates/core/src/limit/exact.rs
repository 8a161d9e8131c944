//! Closed forms in one dimension.

use crate::error::{Error, Result};
use crate::limit::DensityMeasure;
use crate::pde::field::ScalarField;
use crate::scalar::Real;
use crate::theta::gfunc::GFunction;

/// `(1 − 2α)³/12` for `α ≤ 1/2`, else `0`.
pub fn oned_theta_exact<T: Real>(alpha: T) -> T {
    let half = T::lit(0.5);
    if alpha >= half {
        return T::zero();
    }
    let l = T::one() - T::lit(2.0) * alpha;
    l * l * l / T::lit(12.0)
}

/// `g_α(x) = (1 − 2αx)³ / (12x²)` sampled every `spacing` from `x_min`,
/// ending at the cutoff `1/(2α)` when `α > 0` and at `x_max` otherwise.
pub fn oned_g_exact<T: Real>(alpha: T, x_min: T, x_max: T, spacing: T) -> Result<GFunction<T>> {
    if !(x_min > T::zero() && spacing > T::zero() && x_max > x_min && alpha >= T::zero()) {
        return Err(Error::InvalidInput(
            "need 0 < x_min < x_max, spacing > 0, alpha >= 0".into(),
        ));
    }
    let end = if alpha > T::zero() {
        (T::lit(2.0) * alpha).recip()
    } else {
        x_max
    };
    if end <= x_min {
        return Err(Error::InvalidInput(format!("cutoff {end} lies below x_min = {x_min}")));
    }
    let g = |x: T| oned_theta_exact(alpha * x) / (x * x);
    let count = ((end - x_min) / spacing).ceil().to_usize().unwrap_or(0);
    let mut xs: Vec<T> = (0..count)
        .map(|i| x_min + spacing * T::from_usize_lossy(i))
        .filter(|&x| x < end)
        .collect();
    xs.push(end);
    let gs: Vec<T> = xs.iter().map(|&x| g(x)).collect();
    GFunction::from_samples(alpha, 1, &xs, &gs)
}

/// The point-case optimum on an interval: `μ = c f^(2/3)` with
/// `c = (∫f^(2/3))⁻¹`, objective `(∫f^(2/3))³/12`.
pub fn oned_limit_exact<T: Real>(f: &ScalarField<T>) -> Result<(DensityMeasure<T>, T)> {
    if f.grid().dim() != 1 {
        return Err(Error::InvalidInput("the exact limit is one-dimensional".into()));
    }
    if f.values().iter().any(|&v| v < T::zero()) {
        return Err(Error::InvalidInput("load must be nonnegative".into()));
    }
    let two_thirds = T::lit(2.0) / T::lit(3.0);
    let p = f.map(|v| v.powf(two_thirds))?;
    let integral = p.integral();
    if !(integral > T::zero()) {
        return Err(Error::InvalidInput("∫ f^(2/3) vanishes".into()));
    }
    let c = integral.recip();
    let mu = DensityMeasure::new(p.map(|v| v * c)?)?;
    Ok((mu, integral * integral * integral / T::lit(12.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::domain::{Domain, OuterBoundary};
    use crate::pde::grid::Grid;

    #[test]
    fn theta_values() {
        assert_eq!(oned_theta_exact(0.0f64), 1.0 / 12.0);
        assert!((oned_theta_exact(0.25f64) - 1.0 / 96.0).abs() < 1e-16);
        assert_eq!(oned_theta_exact(0.7f64), 0.0);
    }

    #[test]
    fn g_has_cutoff_and_is_convex() {
        let g = oned_g_exact(0.2f64, 1e-2, 10.0, 1e-2).unwrap();
        assert_eq!(g.t_alpha, Some(2.5));
        assert!(g.is_strictly_convex());
        assert!((g.eval(1.0) - oned_theta_exact(0.2)).abs() < 1e-12);
    }

    /// Minimizes `(1/12)∫ f²/μ²` over step densities with unit mass on a
    /// coarse partition by coordinate search (independent of the closed form).
    fn simplex_oracle(f: &[f64], length: f64) -> f64 {
        let m = f.len();
        let w = length / m as f64;
        let mut mu = vec![1.0 / length; m];
        let value = |mu: &[f64]| {
            f.iter()
                .zip(mu)
                .map(|(&fi, &mi)| if fi == 0.0 { 0.0 } else { w * fi * fi / (mi * mi) })
                .sum::<f64>()
                / 12.0
        };
        let mut step = 0.5 / length;
        while step > 1e-9 {
            let mut improved = false;
            for i in 0..m {
                for j in 0..m {
                    if i == j || mu[j] < step {
                        continue;
                    }
                    let mut trial = mu.clone();
                    trial[i] += step;
                    trial[j] -= step;
                    if value(&trial) < value(&mu) {
                        mu = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        value(&mu)
    }

    #[test]
    fn closed_forms_against_simplex_oracle() {
        let grid = Grid::new(Domain::<f64>::unit_cube(1).unwrap(), &[1000]).unwrap();
        let (mu, obj) = oned_limit_exact(&ScalarField::constant(grid, 1.0)).unwrap();
        assert!(mu.density.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!((obj - 1.0 / 12.0).abs() < 1e-12);

        let dom = Domain::<f64>::new(vec![2.0], OuterBoundary::Dirichlet).unwrap();
        let grid = Grid::new(dom, &[1000]).unwrap();
        let (mu, obj) = oned_limit_exact(&ScalarField::constant(grid, 1.0)).unwrap();
        assert!(mu.density.values().iter().all(|&v| (v - 0.5).abs() < 1e-12));
        assert!((obj - 8.0 / 12.0).abs() < 1e-12);
        assert!((simplex_oracle(&[1.0; 4], 2.0) - obj).abs() < 1e-6);

        let grid = Grid::new(Domain::<f64>::unit_cube(1).unwrap(), &[1000]).unwrap();
        let f = ScalarField::from_fn(grid, |x| if x[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let (mu, obj) = oned_limit_exact(&f).unwrap();
        assert!((mu.density.values()[100] - 2.0).abs() < 1e-2);
        assert!((obj - 1.0 / 96.0).abs() < 1e-4);
        assert!((simplex_oracle(&[1.0, 1.0, 0.0, 0.0], 1.0) - 1.0 / 96.0).abs() < 1e-6);
    }
}
