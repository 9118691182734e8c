//! Single-particle relativistic kinematics.
//!
//! Momenta `v` are physical momenta; the species mass enters through the
//! energy `v⁰_α = √(m_α² + |v|²)`. The velocity map `hat` sends momenta to
//! subluminal speeds and `check` is its inverse at unit mass.

use crate::error::{Error, Result};
use crate::math::{sqrt, CompensatedSum, Vec3};

/// Largest speed accepted by [`check`]; anything closer to the light cone is
/// rejected so that quadratures never ingest near-singular momenta.
pub const MAX_SPEED: f64 = 1.0 - 1e-12;

/// A particle species with mass `m_α > 0` and charge `e_α ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    mass: f64,
    charge: f64,
    label: alloc::string::String,
}

impl Species {
    pub fn new(label: &str, mass: f64, charge: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Validation("species mass must be positive and finite"));
        }
        if !(charge.is_finite() && charge != 0.0) {
            return Err(Error::Validation("species charge must be nonzero and finite"));
        }
        Ok(Self { mass, charge, label: label.into() })
    }

    /// Unit-mass, unit-charge species used for the `check`/`hat` inverse pair.
    pub fn unit() -> Self {
        Self { mass: 1.0, charge: 1.0, label: "unit".into() }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_charge(&self, charge: f64) -> Result<Self> {
        Species::new(&self.label, self.mass, charge)
    }
}

/// `v⁰ = √(m² + |v|²)`.
pub fn energy(v: Vec3, s: &Species) -> f64 {
    energy_m(v, s.mass)
}

#[inline]
pub fn energy_m(v: Vec3, mass: f64) -> f64 {
    sqrt(mass * mass + v.norm_sq())
}

/// Relativistic speed `v / √(m² + |v|²)`.
pub fn hat(v: Vec3, s: &Species) -> Vec3 {
    hat_m(v, s.mass)
}

pub fn hat_m(v: Vec3, mass: f64) -> Vec3 {
    // energy in double-double so each component is close to correctly rounded
    let mut sq = CompensatedSum::default();
    for x in [mass, v[0], v[1], v[2]] {
        let p = x * x;
        sq.add(p);
        sq.add(libm::fma(x, x, -p));
    }
    let s = sq.value();
    let s_lo = sq.residual();
    let h = sqrt(s);
    if h == 0.0 || !h.is_finite() {
        return v / h;
    }
    let l = (libm::fma(-h, h, s) + s_lo) / (2.0 * h);
    let mut out = Vec3::ZERO;
    for i in 0..3 {
        let q = v[i] / h;
        let r = libm::fma(-q, h, v[i]) - q * l;
        out[i] = q + r / h;
    }
    out
}

/// `⟨v⟩ = √(1 + |v|²)`, the unit-mass energy.
#[inline]
pub fn japanese(v: Vec3) -> f64 {
    energy_m(v, 1.0)
}

/// Inverse of `hat` at unit mass: `ǔ = u / √(1 − |u|²)`.
pub fn check(u: Vec3) -> Result<Vec3> {
    let u2 = u.norm_sq();
    if !(u2.is_finite()) || sqrt(u2) >= MAX_SPEED {
        return Err(Error::Domain("check requires |u| < 1 (superluminal input)"));
    }
    let mut gap = CompensatedSum::default();
    gap.add(1.0);
    for i in 0..3 {
        let p = u[i] * u[i];
        gap.add(-p);
        gap.add(-libm::fma(u[i], u[i], -p));
    }
    Ok(u / sqrt(gap.value()))
}

/// Jacobian `∂ v̂_α / ∂ v = (I − v̂ v̂ᵀ) / v⁰_α` applied to `w`.
pub fn hat_jacobian_apply(v: Vec3, mass: f64, w: Vec3) -> Vec3 {
    let e = energy_m(v, mass);
    let vh = v / e;
    (w - vh * vh.dot(w)) / e
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn energy_examples() {
        let m1 = Species::new("a", 1.0, 1.0).unwrap();
        let m2 = Species::new("b", 2.0, -1.0).unwrap();
        assert_eq!(energy(Vec3::ZERO, &m1), 1.0);
        assert_eq!(energy(Vec3::new(3.0, 0.0, 0.0), &m1), sqrt(10.0));
        assert_eq!(energy(Vec3::new(1.0, 2.0, 2.0), &m2), sqrt(13.0));
    }

    #[test]
    fn hat_examples() {
        let m1 = Species::unit();
        let m2 = Species::new("b", 2.0, 1.0).unwrap();
        assert_eq!(hat(Vec3::ZERO, &m2), Vec3::ZERO);
        assert!(close(hat(Vec3::new(3.0, 0.0, 0.0), &m1), Vec3::new(3.0 / sqrt(10.0), 0.0, 0.0), 1e-16));
        assert!(close(hat(Vec3::new(1.0, 0.0, 0.0), &m2), Vec3::new(1.0 / sqrt(5.0), 0.0, 0.0), 1e-16));
    }

    #[test]
    fn check_examples() {
        assert_eq!(check(Vec3::ZERO).unwrap(), Vec3::ZERO);
        let u = Vec3::new(3.0 / sqrt(10.0), 0.0, 0.0);
        assert!(close(check(u).unwrap(), Vec3::new(3.0, 0.0, 0.0), 1e-14));
    }

    #[test]
    fn check_rejects_superluminal() {
        assert!(matches!(check(Vec3::new(1.0, 0.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(check(Vec3::new(0.8, 0.7, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(check(Vec3::new(1.0 - 1e-13, 0.0, 0.0)), Err(Error::Domain(_))));
        assert!(check(Vec3::new(1.0 - 1e-9, 0.0, 0.0)).is_ok());
    }

    #[test]
    fn species_validation() {
        assert!(Species::new("x", 0.0, 1.0).is_err());
        assert!(Species::new("x", -1.0, 1.0).is_err());
        assert!(Species::new("x", 1.0, 0.0).is_err());
        assert!(Species::new("x", f64::NAN, 1.0).is_err());
    }

    #[test]
    fn check_hat_round_trip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let unit = Species::unit();
        let mut worst = 0.0_f64;
        for _ in 0..10_000 {
            let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if dir.norm() == 0.0 {
                continue;
            }
            let v = dir / dir.norm() * rng.gen_range(0.0..10.0);
            let back = check(hat(v, &unit)).unwrap();
            worst = worst.max((back - v).max_abs());
        }
        assert!(worst <= 1e-13, "worst round-trip error {worst:e}");
    }

    proptest! {
        #[test]
        fn hat_is_subluminal_and_consistent(
            x in -50.0..50.0f64, y in -50.0..50.0f64, z in -50.0..50.0f64, m in 0.01..20.0f64
        ) {
            let s = Species::new("p", m, 1.0).unwrap();
            let v = Vec3::new(x, y, z);
            let vh = hat(v, &s);
            prop_assert!(vh.norm() < 1.0);
            let e = energy(v, &s);
            prop_assert!((e * vh.norm() - v.norm()).abs() <= 1e-12 * (1.0 + v.norm()));
            prop_assert!(e >= m.max(v.norm()));
            // parallel to v
            prop_assert!(vh.cross(v).norm() <= 1e-12 * (1.0 + v.norm_sq()));
        }

        #[test]
        fn check_inverts_hat_relative(x in -1e3..1e3f64, y in -1e3..1e3f64, z in -1e3..1e3f64) {
            let unit = Species::unit();
            let v = Vec3::new(x, y, z);
            let u = hat(v, &unit);
            prop_assume!(u.norm() < MAX_SPEED);
            let back = check(u).unwrap();
            prop_assert!((back - v).norm() <= 1e-12 * v.norm().max(1.0) * (1.0 + v.norm_sq()).sqrt());
            prop_assert!((hat(back, &unit) - u).norm() <= 1e-15);
        }

        #[test]
        fn energy_monotone_in_norm(r1 in 0.0..100.0f64, dr in 0.0..10.0f64, m in 0.1..5.0f64) {
            let a = energy_m(Vec3::new(r1, 0.0, 0.0), m);
            let b = energy_m(Vec3::new(0.0, r1 + dr, 0.0), m);
            prop_assert!(b >= a);
        }
    }
}
