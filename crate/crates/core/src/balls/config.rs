use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::domain::{Domain, OuterBoundary};
use crate::scalar::Real;

/// `n` closed balls of common radius `r = α·n^(-1/d)` placed in a box.
///
/// Balls may overlap and may stick out of the box; the admissible class only
/// requires every center to lie within distance `r` of the closed box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "BallConfigFile<T>", into = "BallConfigFile<T>")]
pub struct BallConfig<T: Real> {
    domain: Domain<T>,
    alpha: T,
    centers: Vec<Vec<T>>,
}

/// On-disk layout: `{d, alpha, n, extents, centers: [[...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct BallConfigFile<T> {
    pub d: usize,
    pub alpha: T,
    pub n: usize,
    pub extents: Vec<T>,
    pub centers: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<BallConfigFile<T>> for BallConfig<T> {
    type Error = Error;

    fn try_from(file: BallConfigFile<T>) -> Result<Self> {
        if file.extents.len() != file.d {
            return Err(Error::InvalidInput(format!(
                "d = {} but {} extents given",
                file.d,
                file.extents.len()
            )));
        }
        if file.centers.len() != file.n {
            return Err(Error::InvalidInput(format!(
                "n = {} but {} centers given",
                file.n,
                file.centers.len()
            )));
        }
        let domain = Domain::new(file.extents, OuterBoundary::Dirichlet)?;
        BallConfig::new(domain, file.alpha, file.centers)
    }
}

impl<T: Real> From<BallConfig<T>> for BallConfigFile<T> {
    fn from(c: BallConfig<T>) -> Self {
        BallConfigFile {
            d: c.dim(),
            alpha: c.alpha,
            n: c.n(),
            extents: c.domain.extents().to_vec(),
            centers: c.centers,
        }
    }
}

/// `n^(-1/d)`, computed with the dedicated root for accuracy.
pub fn inverse_root<T: Real>(n: usize, d: usize) -> T {
    let n = T::from_usize_lossy(n);
    match d {
        1 => n.recip(),
        2 => n.sqrt().recip(),
        3 => n.cbrt().recip(),
        _ => n.powf(-T::from_usize_lossy(d).recip()),
    }
}

impl<T: Real> BallConfig<T> {
    pub fn new(domain: Domain<T>, alpha: T, centers: Vec<Vec<T>>) -> Result<Self> {
        let d = domain.dim();
        if centers.is_empty() {
            return Err(Error::InvalidInput("a configuration needs at least one ball".into()));
        }
        if !(alpha.is_finite() && alpha >= T::zero()) {
            return Err(Error::InvalidInput(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        for (i, c) in centers.iter().enumerate() {
            if c.len() != d {
                return Err(Error::InvalidInput(format!(
                    "center {i} has {} coordinates, expected {d}",
                    c.len()
                )));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("center {i} is not finite")));
            }
        }
        Ok(Self { domain, alpha, centers })
    }

    /// Builds a configuration from its radius; `α` is recovered as `r·n^(1/d)`.
    pub fn from_radius(domain: Domain<T>, radius: T, centers: Vec<Vec<T>>) -> Result<Self> {
        let n = centers.len().max(1);
        let alpha = radius / inverse_root::<T>(n, domain.dim());
        Self::new(domain, alpha, centers)
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn radius(&self) -> T {
        self.alpha * inverse_root::<T>(self.n(), self.dim())
    }

    pub fn centers(&self) -> &[Vec<T>] {
        &self.centers
    }

    /// Same `α` and domain with new centers (the count may change `r`).
    pub fn with_centers(&self, centers: Vec<Vec<T>>) -> Result<Self> {
        Self::new(self.domain.clone(), self.alpha, centers)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Verdict of [`admissible`], naming every violated clause.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub violations: Vec<String>,
}

/// Checks membership of the admissible class: equal radii `α·n^(-1/d)` and all
/// centers inside the closed `r`-neighbourhood of the box.
pub fn admissible<T: Real>(config: &BallConfig<T>) -> Admissibility {
    let mut violations = Vec::new();
    let r = config.radius();
    if !(config.alpha().is_finite() && config.alpha() >= T::zero()) {
        violations.push(format!("alpha = {} is not a nonnegative real", config.alpha()));
    }
    let scale = config.domain().extents().iter().fold(T::one(), |a, &b| a.max(b));
    let tol = T::lit(1e-12) * scale;
    for (i, c) in config.centers().iter().enumerate() {
        if c.len() != config.dim() || c.iter().any(|x| !x.is_finite()) {
            violations.push(format!("center {i} is malformed"));
            continue;
        }
        let dist = config.domain().distance_to_box(c);
        if dist > r + tol {
            violations.push(format!("center {i} outside Ω_r (distance {dist:.6e} > r = {r:.6e})"));
        }
    }
    Admissibility {
        admissible: violations.is_empty(),
        violations,
    }
}

/// Componentwise clamp onto the closed box. Idempotent and 1-Lipschitz.
pub fn project<T: Real>(point: &[T], domain: &Domain<T>) -> Vec<T> {
    domain.clamp(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Domain<f64> {
        Domain::unit_cube(2).unwrap()
    }

    #[test]
    fn single_centered_ball_is_admissible_for_any_alpha() {
        for alpha in [0.0, 0.1, 0.7, 3.0] {
            let c = BallConfig::new(square(), alpha, vec![vec![0.5, 0.5]]).unwrap();
            assert!(admissible(&c).admissible);
        }
    }

    #[test]
    fn far_center_is_flagged() {
        let c = BallConfig::new(Domain::unit_cube(1).unwrap(), 0.1, vec![vec![1.2]]).unwrap();
        let v = admissible(&c);
        assert!(!v.admissible);
        assert!(v.violations[0].contains("center 0 outside Ω_r"), "{:?}", v.violations);
    }

    #[test]
    fn radius_formula_for_small_lattice() {
        let centers = vec![vec![0.25, 0.25], vec![0.75, 0.25], vec![0.25, 0.75], vec![0.75, 0.75]];
        let c = BallConfig::new(square(), 0.3, centers).unwrap();
        assert!(admissible(&c).admissible);
        assert!((c.radius() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn projection_clamps() {
        let d = square();
        assert_eq!(project(&[0.3, 0.4], &d), vec![0.3, 0.4]);
        assert_eq!(project(&[1.2, 0.5], &d), vec![1.0, 0.5]);
        assert_eq!(project(&[-0.1, 1.3], &d), vec![0.0, 1.0]);
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let c = BallConfig::new(square(), 0.3, vec![vec![0.5, 0.5]]).unwrap();
        let s = c.to_json().unwrap();
        assert!(s.contains("\"extents\""));
        assert_eq!(BallConfig::<f64>::from_json(&s).unwrap(), c);
        let bad = r#"{"d":2,"alpha":0.1,"n":2,"extents":[1,1],"centers":[[0.5,0.5]]}"#;
        assert!(BallConfig::<f64>::from_json(bad).is_err());
    }
}
