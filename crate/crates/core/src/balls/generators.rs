//! Configuration generators: cell lattices, homogenized tilings and
//! boundary covers of the unit cube.

use crate::balls::config::{inverse_root, BallConfig};
use crate::error::{Error, Result};
use crate::pde::domain::Domain;
use crate::scalar::Real;

/// Visits every multi-index of `0..counts[0] × … × 0..counts[d-1]`, axis 0 fastest.
fn for_each_index(counts: &[usize], mut visit: impl FnMut(&[usize])) {
    if counts.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; counts.len()];
    loop {
        visit(&idx);
        let mut a = 0;
        loop {
            if a == counts.len() {
                return;
            }
            idx[a] += 1;
            if idx[a] < counts[a] {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// `k^d` balls of radius `α/k` at the midpoints of the regular `k`-partition
/// of the unit cube.
pub fn lattice_config<T: Real>(k: usize, alpha: T, d: usize) -> Result<BallConfig<T>> {
    if k == 0 {
        return Err(Error::InvalidInput("lattice order k must be at least 1".into()));
    }
    let domain = Domain::unit_cube(d)?;
    let kk = T::from_usize_lossy(k);
    let mut centers = Vec::with_capacity(k.pow(d as u32));
    for_each_index(&vec![k; d], |m| {
        centers.push(m.iter().map(|&i| (T::from_usize_lossy(i) + T::lit(0.5)) / kk).collect());
    });
    BallConfig::new(domain, alpha, centers)
}

/// Tiles `target` with `1/k`-scaled copies of a unit-cube configuration.
///
/// One copy is placed in every cell of the lattice `k^{-1}Z^d` whose
/// interior meets the target box, so a unit-cube target receives exactly
/// `k^d·n` balls. Balls on shared cell faces appear once per copy. Copies in
/// cells that stick out of a non-commensurate box drop balls whose centers
/// leave the `r`-neighbourhood. The result has radius `r_base / k`.
pub fn homogenize<T: Real>(base: &BallConfig<T>, k: usize, target: &Domain<T>) -> Result<BallConfig<T>> {
    if k == 0 {
        return Err(Error::InvalidInput("homogenization order k must be at least 1".into()));
    }
    if !base.domain().is_unit_cube() {
        return Err(Error::InvalidInput(
            "base configuration must live in the unit cube".into(),
        ));
    }
    let d = base.dim();
    if target.dim() != d {
        return Err(Error::DomainMismatch(format!(
            "base is {d}-dimensional, target is {}-dimensional",
            target.dim()
        )));
    }
    let kk = T::from_usize_lossy(k);
    let r = base.radius() / kk;
    let tol = T::lit(1e-12);
    let counts: Vec<usize> = target
        .extents()
        .iter()
        .map(|&l| (l * kk - tol).ceil().to_usize().unwrap_or(0).max(1))
        .collect();
    let mut centers = Vec::new();
    for_each_index(&counts, |m| {
        for c in base.centers() {
            let p: Vec<T> = c
                .iter()
                .zip(m)
                .map(|(&x, &j)| (T::from_usize_lossy(j) + x) / kk)
                .collect();
            if target.distance_to_box(&p) <= r + tol {
                centers.push(p);
            }
        }
    });
    if centers.is_empty() {
        return Err(Error::InvalidInput("no translated ball meets the target box".into()));
    }
    BallConfig::from_radius(target.clone(), r, centers)
}

/// Surface-lattice spacing used to cover the faces of the unit cube.
pub fn cover_spacing<T: Real>(r: T, d: usize) -> T {
    if d <= 1 {
        T::one()
    } else {
        r * (T::lit(2.0) / T::from_usize_lossy(d - 1)).sqrt()
    }
}

/// Appends balls of the same radius covering `∂I^d`.
///
/// In one dimension these are the two endpoints. Otherwise every face gets
/// the regular lattice `{i/q}` with `q = ⌈1/s⌉` intervals per axis,
/// `s = r·√(2/(d−1))`; lattice points shared by several faces are placed
/// once, giving `(q+1)^d − (q−1)^d` extra balls. `α` is updated so that the
/// radius is unchanged.
pub fn boundary_cover<T: Real>(config: &BallConfig<T>) -> Result<BallConfig<T>> {
    if !config.domain().is_unit_cube() {
        return Err(Error::InvalidInput("boundary covers are built on the unit cube".into()));
    }
    let d = config.dim();
    let r = config.radius();
    let mut centers = config.centers().to_vec();
    if d == 1 {
        centers.push(vec![T::zero()]);
        centers.push(vec![T::one()]);
    } else {
        if r <= T::zero() {
            return Err(Error::InvalidInput("cannot cover faces with zero-radius balls".into()));
        }
        let q = (T::one() / cover_spacing(r, d)).ceil().to_usize().unwrap_or(1).max(1);
        let qq = T::from_usize_lossy(q);
        for_each_index(&vec![q + 1; d], |m| {
            if m.iter().any(|&i| i == 0 || i == q) {
                centers.push(m.iter().map(|&i| T::from_usize_lossy(i) / qq).collect());
            }
        });
    }
    BallConfig::from_radius(config.domain().clone(), r, centers)
}

/// Checks `∂I^d ⊂ Σ` by sampling each face on a regular grid with
/// `per_axis` points per face axis (corners included).
pub fn is_boundary_covering<T: Real>(config: &BallConfig<T>, per_axis: usize) -> bool {
    let d = config.dim();
    let r = config.radius();
    let tol = T::lit(1e-9) * r.max(T::lit(1e-12));
    let covered = |p: &[T]| {
        config.centers().iter().any(|c| {
            let dist2 = c
                .iter()
                .zip(p)
                .map(|(&a, &b)| (a - b) * (a - b))
                .fold(T::zero(), |s, e| s + e);
            dist2.sqrt() <= r + tol
        })
    };
    if d == 1 {
        return covered(&[T::zero()]) && covered(&[T::one()]);
    }
    let m = per_axis.max(2);
    let step = T::one() / T::from_usize_lossy(m - 1);
    let mut ok = true;
    for axis in 0..d {
        for side in [T::zero(), T::one()] {
            for_each_index(&vec![m; d - 1], |idx| {
                if !ok {
                    return;
                }
                let mut p = Vec::with_capacity(d);
                let mut it = idx.iter();
                for a in 0..d {
                    if a == axis {
                        p.push(side);
                    } else {
                        p.push(T::from_usize_lossy(*it.next().unwrap()) * step);
                    }
                }
                ok = covered(&p);
            });
        }
    }
    ok
}

/// `n^(-1/d)` for callers that need the scale of a configuration of size `n`.
pub fn spacing_scale<T: Real>(n: usize, d: usize) -> T {
    inverse_root(n, d)
}
