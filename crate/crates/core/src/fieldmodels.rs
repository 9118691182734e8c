//! Prescribed spacetime electromagnetic fields.
//!
//! The central family is the self-similar field `E(t, x) = 𝔼(ǔ)/t²`,
//! `B(t, x) = 𝔹(ǔ)/t²` with `u = x/t`, switched on at `t_on` and cut off
//! smoothly inside the light cone.

use alloc::sync::Arc;

use crate::error::{Error, Result};
use crate::faraday::{transform_field, EMField};
use crate::kinematics::hat_m;
use crate::lorentz::{FourVector, LorentzTransform};
use crate::math::{sqrt, Vec3};

const PI: f64 = core::f64::consts::PI;

/// A prescribed field `(t, x) ↦ (E, B)`.
pub trait FieldModel: Send + Sync {
    fn evaluate(&self, t: f64, x: Vec3) -> Result<EMField>;

    /// Support constant `k` of the decay bound.
    fn support_k(&self) -> f64;

    /// Analytic constant `C₀` in `|(E,B)| ≤ C₀/((t+|x|+2k)(t−|x|+2k))`,
    /// `None` for models that do not decay.
    fn decay_constant(&self) -> Option<f64>;

    /// Time at which the field is switched on, if discontinuous there.
    fn switch_on(&self) -> Option<f64> {
        None
    }
}

/// Vanishing field.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField {
    pub k: f64,
}

impl FieldModel for ZeroField {
    fn evaluate(&self, _t: f64, _x: Vec3) -> Result<EMField> {
        Ok(EMField::ZERO)
    }

    fn support_k(&self) -> f64 {
        self.k
    }

    fn decay_constant(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Constant field, used for gyration tests. Does not decay.
#[derive(Debug, Clone, Copy)]
pub struct UniformField {
    pub field: EMField,
    pub k: f64,
}

impl FieldModel for UniformField {
    fn evaluate(&self, _t: f64, _x: Vec3) -> Result<EMField> {
        Ok(self.field)
    }

    fn support_k(&self) -> f64 {
        self.k
    }

    fn decay_constant(&self) -> Option<f64> {
        None
    }
}

/// Radially symmetric charge in speed space,
/// `ρ_u(s) = q·c·(1 − s²/R²)³` for `s < R`, normalised so that
/// `4π ∫ ρ_u s² ds = q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialCharge {
    pub q: f64,
    pub radius: f64,
}

impl RadialCharge {
    fn norm(&self) -> f64 {
        315.0 / (64.0 * PI * self.radius * self.radius * self.radius)
    }

    pub fn density(&self, s: f64) -> f64 {
        if s >= self.radius {
            return 0.0;
        }
        let y = 1.0 - (s / self.radius) * (s / self.radius);
        self.q * self.norm() * y * y * y
    }

    /// `∫₀ʳ ρ_u(s) s² ds`.
    pub fn enclosed(&self, r: f64) -> f64 {
        let y = (r / self.radius).min(1.0);
        let y2 = y * y;
        let p = y2 * y * (1.0 / 3.0 - y2 * (3.0 / 5.0 - y2 * (3.0 / 7.0 - y2 / 9.0)));
        self.q * self.norm() * self.radius * self.radius * self.radius * p
    }

    /// Radial field strength `4π ∫₀ʳ ρ_u s² ds / r²`.
    pub fn field(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        4.0 * PI * self.enclosed(r) / (r * r)
    }

    /// Upper bound on `|field|` over all radii.
    pub fn field_bound(&self) -> f64 {
        4.0 * PI * crate::math::abs(self.q) * self.norm() * self.radius / 3.0
    }
}

/// Self-similar field profile, parametrised in speed space `u = v̂`.
///
/// `𝔼 = χ(|u|)·(uniform + charge field)` and `𝔹 = ω × 𝔼`, with `χ` a C¹
/// cutoff equal to 1 up to `r_in` and 0 from `0.95·support` on.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarProfile {
    pub uniform: Vec3,
    pub charge: Option<RadialCharge>,
    pub omega: Vec3,
    pub support: f64,
    pub r_in: f64,
    pub t_on: f64,
}

impl SelfSimilarProfile {
    pub fn zero() -> Self {
        Self { uniform: Vec3::ZERO, charge: None, omega: Vec3::ZERO, support: 0.9, r_in: 0.75, t_on: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support > 0.0 && self.support < 1.0) {
            return Err(Error::Validation("profile support must lie in (0, 1)"));
        }
        if !(self.r_in > 0.0 && self.r_in < self.r_out()) {
            return Err(Error::Validation("cutoff start must lie in (0, 0.95·support)"));
        }
        if !(self.t_on.is_finite() && self.t_on > 0.0) {
            return Err(Error::Validation("switch-on time must be positive"));
        }
        if !(self.uniform.is_finite() && self.omega.is_finite()) {
            return Err(Error::Validation("profile vectors must be finite"));
        }
        if let Some(c) = self.charge {
            if !(c.q.is_finite() && c.radius > 0.0 && c.radius < 1.0) {
                return Err(Error::Validation("charge radius must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    /// Speed at which the cutoff reaches zero.
    pub fn r_out(&self) -> f64 {
        0.95 * self.support
    }

    pub fn cutoff(&self, r: f64) -> f64 {
        let r_out = self.r_out();
        if r <= self.r_in {
            1.0
        } else if r >= r_out {
            0.0
        } else {
            let s = (r - self.r_in) / (r_out - self.r_in);
            1.0 - s * s * (3.0 - 2.0 * s)
        }
    }

    /// `𝔼` as a function of the speed `u = v̂`.
    pub fn e_of_speed(&self, u: Vec3) -> Vec3 {
        let r = u.norm();
        let chi = self.cutoff(r);
        if chi == 0.0 {
            return Vec3::ZERO;
        }
        let mut e = self.uniform;
        if let Some(c) = self.charge {
            if r > 0.0 {
                e += u * (c.field(r) / r);
            }
        }
        e * chi
    }

    pub fn b_of_speed(&self, u: Vec3) -> Vec3 {
        self.omega.cross(self.e_of_speed(u))
    }

    /// `𝔼(v)` at unit-mass momentum `v`.
    pub fn ebb(&self, v: Vec3) -> Vec3 {
        self.e_of_speed(hat_m(v, 1.0))
    }

    pub fn bbb(&self, v: Vec3) -> Vec3 {
        self.b_of_speed(hat_m(v, 1.0))
    }

    /// `𝕃(v) = 𝔼(v) + v̂ × 𝔹(v)`.
    pub fn lbb(&self, v: Vec3) -> Vec3 {
        let u = hat_m(v, 1.0);
        let e = self.e_of_speed(u);
        e + u.cross(self.omega.cross(e))
    }

    /// Upper bound on `|(𝔼, 𝔹)|`.
    pub fn sup_bound(&self) -> f64 {
        let e = self.uniform.norm() + self.charge.map_or(0.0, |c| c.field_bound());
        e * sqrt(1.0 + self.omega.norm_sq())
    }

    /// `C₀ = (1 + r_out + 2k/t_on)(1 + 2k/t_on)·sup|(𝔼, 𝔹)|`.
    pub fn decay_constant(&self, k: f64) -> f64 {
        let a = 2.0 * k / self.t_on;
        (1.0 + self.r_out() + a) * (1.0 + a) * self.sup_bound()
    }
}

/// `E = 𝔼(ǔ)/t²`, `B = 𝔹(ǔ)/t²` with `u = x/t`.
pub fn self_similar_field(p: &SelfSimilarProfile, t: f64, x: Vec3) -> Result<EMField> {
    if !(t >= p.t_on) {
        return Err(Error::Domain("self-similar field evaluated before its switch-on time"));
    }
    let u = x / t;
    let e = p.e_of_speed(u);
    let inv = 1.0 / (t * t);
    Ok(EMField::new(e * inv, p.omega.cross(e) * inv))
}

/// Self-similar field extended by zero before `t_on`.
#[derive(Debug, Clone)]
pub struct SelfSimilarField {
    pub profile: SelfSimilarProfile,
    pub k: f64,
}

impl SelfSimilarField {
    pub fn new(profile: SelfSimilarProfile, k: f64) -> Result<Self> {
        profile.validate()?;
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Validation("support constant k must be positive"));
        }
        Ok(Self { profile, k })
    }
}

impl FieldModel for SelfSimilarField {
    fn evaluate(&self, t: f64, x: Vec3) -> Result<EMField> {
        if t < self.profile.t_on {
            return Ok(EMField::ZERO);
        }
        self_similar_field(&self.profile, t, x)
    }

    fn support_k(&self) -> f64 {
        self.k
    }

    fn decay_constant(&self) -> Option<f64> {
        Some(self.profile.decay_constant(self.k))
    }

    fn switch_on(&self) -> Option<f64> {
        Some(self.profile.t_on)
    }
}

/// The field `F^A(X) = A⁻¹ F(AX) A⁻ᵀ` of another model seen through `a`.
#[derive(Clone)]
pub struct TransformedField {
    pub inner: Arc<dyn FieldModel>,
    pub transform: LorentzTransform,
}

impl FieldModel for TransformedField {
    fn evaluate(&self, t: f64, x: Vec3) -> Result<EMField> {
        let y = self.transform.apply(FourVector::new(t, x));
        let em = self.inner.evaluate(y.t, y.x)?;
        Ok(transform_field(&em, &self.transform))
    }

    fn support_k(&self) -> f64 {
        self.inner.support_k()
    }

    fn decay_constant(&self) -> Option<f64> {
        None
    }
}

/// Analytic asymptotic charge paired with [`coulomb_pair`]:
/// `Q∞(v) = ρ_u(|v̂|)/⟨v⟩⁵`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoulombQ {
    pub charge: RadialCharge,
}

impl CoulombQ {
    pub fn value(&self, v: Vec3) -> f64 {
        let e2 = 1.0 + v.norm_sq();
        let e5 = e2 * e2 * sqrt(e2);
        self.charge.density(hat_m(v, 1.0).norm()) / e5
    }

    /// Total `∫ Q∞ dv = q`.
    pub fn total(&self) -> f64 {
        self.charge.q
    }
}

pub const COULOMB_SUPPORT: f64 = 0.9;
pub const COULOMB_R_IN: f64 = 0.75;
pub const COULOMB_RADIUS: f64 = 0.6;

/// Analytically consistent `(𝔼, Q∞)` pair: a radial speed-space charge of
/// total `q` and its radial field. Both sides of the volume/surface
/// identity agree for every radius up to `delta`.
pub fn coulomb_pair(q: f64, delta: f64) -> Result<(SelfSimilarProfile, CoulombQ)> {
    if !(delta > 0.0 && delta <= COULOMB_R_IN) {
        return Err(Error::Domain("delta must lie in (0, r_in] of the coulomb profile"));
    }
    if !q.is_finite() {
        return Err(Error::Validation("charge must be finite"));
    }
    let charge = RadialCharge { q, radius: COULOMB_RADIUS };
    let profile = SelfSimilarProfile {
        uniform: Vec3::ZERO,
        charge: Some(charge),
        omega: Vec3::ZERO,
        support: COULOMB_SUPPORT,
        r_in: COULOMB_R_IN,
        t_on: 1.0,
    };
    Ok((profile, CoulombQ { charge }))
}

/// Maximum of `(t+|x|+2k)|t−|x|+2k|·|(E,B)|` over the sample set,
/// the empirical decay constant.
pub fn empirical_decay_constant(model: &dyn FieldModel, times: &[f64], radii_frac: &[f64], dirs: &[Vec3]) -> Result<f64> {
    let k = model.support_k();
    let mut worst = 0.0_f64;
    for &t in times {
        for &f in radii_frac {
            for &d in dirs {
                let x = d * (f * (t + k));
                let em = model.evaluate(t, x)?;
                let r = x.norm();
                let w = (t + r + 2.0 * k) * crate::math::abs(t - r + 2.0 * k);
                worst = worst.max(w * em.norm());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{ball_integral, GaussLegendre, SphereRule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn drift_profile() -> SelfSimilarProfile {
        SelfSimilarProfile {
            uniform: Vec3::new(0.3, -0.1, 0.2),
            charge: Some(RadialCharge { q: 0.5, radius: 0.5 }),
            omega: Vec3::new(0.0, 0.0, 0.7),
            ..SelfSimilarProfile::zero()
        }
    }

    #[test]
    fn zero_profile_gives_zero_field() {
        let p = SelfSimilarProfile::zero();
        let f = self_similar_field(&p, 3.0, Vec3::new(1.0, 0.5, 0.0)).unwrap();
        assert_eq!(f, EMField::ZERO);
    }

    #[test]
    fn before_switch_on_is_domain_error() {
        let p = drift_profile();
        assert!(matches!(self_similar_field(&p, 0.5, Vec3::ZERO), Err(Error::Domain(_))));
        let model = SelfSimilarField::new(p, 1.0).unwrap();
        assert_eq!(model.evaluate(0.5, Vec3::ZERO).unwrap(), EMField::ZERO);
    }

    #[test]
    fn profile_recovered_along_rays() {
        let p = drift_profile();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let t = rng.gen_range(1.0..1e6);
            let f = self_similar_field(&p, t, hat_m(v, 1.0) * t).unwrap();
            assert!((f.e * (t * t) - p.ebb(v)).max_abs() <= 1e-12);
            assert!((f.b * (t * t) - p.bbb(v)).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_self_similarity() {
        let p = drift_profile();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let t = rng.gen_range(1.0..100.0);
            let x = Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)) * t;
            let lam = rng.gen_range(1.0..50.0);
            let a = self_similar_field(&p, t, x).unwrap();
            let b = self_similar_field(&p, lam * t, x * lam).unwrap();
            let scale = a.norm().max(1e-300);
            assert!((b.e * (lam * lam) - a.e).max_abs() <= 1e-12 * scale.max(1.0));
            assert!((b.b * (lam * lam) - a.b).max_abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn cutoff_is_c1_and_bounded() {
        let p = drift_profile();
        assert_eq!(p.cutoff(0.0), 1.0);
        assert_eq!(p.cutoff(p.r_out()), 0.0);
        let h = 1e-7;
        let d_in = (p.cutoff(p.r_in + h) - p.cutoff(p.r_in)) / h;
        let d_out = (p.cutoff(p.r_out()) - p.cutoff(p.r_out() - h)) / h;
        assert!(d_in.abs() < 1e-4 && d_out.abs() < 1e-4);
        assert_eq!(self_similar_field(&p, 2.0, Vec3::new(1.95, 0.0, 0.0)).unwrap(), EMField::ZERO);
    }

    #[test]
    fn empirical_decay_below_analytic_constant() {
        let model = SelfSimilarField::new(drift_profile(), 2.0).unwrap();
        let times: Vec<f64> = (0..40).map(|i| 10f64.powf(i as f64 / 8.0)).collect();
        let fracs: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let dirs = [Vec3::unit(0), -Vec3::unit(0), Vec3::unit(1), Vec3::new(0.6, 0.0, 0.8), Vec3::new(-0.48, 0.6, 0.64)];
        let c_emp = empirical_decay_constant(&model, &times, &fracs, &dirs).unwrap();
        let c0 = model.decay_constant().unwrap();
        assert!(c_emp.is_finite() && c_emp > 0.0);
        assert!(c_emp <= c0, "{c_emp} > {c0}");
    }

    #[test]
    fn coulomb_pair_rejects_bad_delta() {
        assert!(matches!(coulomb_pair(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(coulomb_pair(1.0, 0.8), Err(Error::Domain(_))));
        assert!(coulomb_pair(1.0, COULOMB_R_IN).is_ok());
    }

    #[test]
    fn coulomb_zero_charge_is_zero() {
        let (p, q) = coulomb_pair(0.0, 0.5).unwrap();
        assert_eq!(q.value(Vec3::new(0.1, 0.2, 0.0)), 0.0);
        assert_eq!(p.ebb(Vec3::new(0.3, 0.0, 0.0)), Vec3::ZERO);
    }

    #[test]
    fn coulomb_total_charge_integrates() {
        let q = CoulombQ { charge: RadialCharge { q: 2.5, radius: 0.6 } };
        let gl = GaussLegendre::new(12);
        let rule = SphereRule::new(4, 8);
        // substitute u = v̂: dv = ⟨v⟩⁵ du, ∫ Q dv = ∫ ρ_u du
        let got = ball_integral(&gl, 4, &rule, 0.6, |u| {
            let v = u / (1.0 - u.norm_sq()).sqrt();
            let e2 = 1.0 + v.norm_sq();
            q.value(v) * e2 * e2 * e2.sqrt()
        });
        assert!((got - 2.5).abs() < 1e-12, "{got}");
    }

    #[test]
    fn coulomb_surface_matches_volume() {
        let (p, q) = coulomb_pair(1.7, 0.7).unwrap();
        let gl = GaussLegendre::new(16);
        let rule = SphereRule::new(10, 20);
        for delta in [0.1, 0.35, 0.6, 0.7] {
            let vol = 4.0
                * PI
                * ball_integral(&gl, 8, &rule, delta, |x| {
                    let v = crate::kinematics::check(x).unwrap();
                    let e2 = 1.0 + v.norm_sq();
                    e2 * e2 * e2.sqrt() * q.value(v)
                });
            let surf = delta * delta * rule.integrate(|n| p.e_of_speed(n * delta).dot(n));
            assert!((vol - surf).abs() <= 1e-8 * vol.abs().max(1.0), "delta {delta}: {vol} vs {surf}");
        }
    }

    #[test]
    fn enclosed_is_monotone_for_positive_charge() {
        let c = RadialCharge { q: 1.0, radius: 0.6 };
        let mut last = 0.0;
        for i in 0..=100 {
            let e = c.enclosed(0.008 * i as f64);
            assert!(e >= last);
            last = e;
        }
        assert!((4.0 * PI * c.enclosed(0.6) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn l_parallel_part_equals_e_parallel_part() {
        let p = drift_profile();
        let v = Vec3::new(0.2, -0.4, 0.1);
        let u = hat_m(v, 1.0);
        assert!((p.lbb(v).dot(u) - p.ebb(v).dot(u)).abs() < 1e-15);
    }

    #[test]
    fn transformed_identity_is_passthrough() {
        let inner: Arc<dyn FieldModel> = Arc::new(SelfSimilarField::new(drift_profile(), 1.0).unwrap());
        let tf = TransformedField { inner: inner.clone(), transform: LorentzTransform::identity() };
        let x = Vec3::new(0.3, 0.2, -0.1);
        assert_eq!(tf.evaluate(2.0, x).unwrap(), inner.evaluate(2.0, x).unwrap());
    }
}
