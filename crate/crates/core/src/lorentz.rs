//! The restricted Lorentz group `SO₀(3,1)` acting on `(t, x)`.
//!
//! Every transform is a 4×4 matrix with time as index 0. The group is
//! generated by embedded rotations and boosts along the first spatial axis;
//! [`decompose`] recovers such a factorisation `R₁ A_φ R₂` for any element.

use crate::error::{Error, Result};
use crate::math::{abs, asinh, cosh, sinh, sqrt, Mat3, Mat4, Vec3};

/// Tolerance used when validating group membership.
pub const GROUP_TOL: f64 = 1e-10;

/// Largest rapidity accepted by [`boost_x`]; `cosh` overflows past ~710.
pub const MAX_RAPIDITY: f64 = 700.0;

/// Spacetime point or energy–momentum vector `(t, x)`, signature `(−,+,+,+)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector {
    pub t: f64,
    pub x: Vec3,
}

impl FourVector {
    pub const fn new(t: f64, x: Vec3) -> Self {
        Self { t, x }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { t: a[0], x: Vec3([a[1], a[2], a[3]]) }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.t, self.x[0], self.x[1], self.x[2]]
    }

    /// `η(X, X) = −t² + |x|²`.
    pub fn interval(self) -> f64 {
        self.x.norm_sq() - self.t * self.t
    }

    pub fn is_future_timelike(self) -> bool {
        self.t > 0.0 && self.x.norm() < self.t
    }
}

/// What the matrix is known to be; kept for reporting, never trusted for math.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformKind {
    Identity,
    BoostX(f64),
    Rotation,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzTransform {
    m: Mat4,
    kind: TransformKind,
}

impl LorentzTransform {
    pub fn identity() -> Self {
        Self { m: Mat4::IDENTITY, kind: TransformKind::Identity }
    }

    /// Wraps a raw matrix after checking `mᵀηm = η`, `m⁰⁰ ≥ 1`, `det m = 1`.
    pub fn from_matrix(m: Mat4) -> Result<Self> {
        validate_matrix(&m)?;
        Ok(Self { m, kind: TransformKind::General })
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn apply(&self, x: FourVector) -> FourVector {
        FourVector::from_array(self.m.mul_vec(x.to_array()))
    }

    /// Time component `A⁰(t, x)`.
    pub fn time_of(&self, x: FourVector) -> f64 {
        let r = &self.m.0[0];
        r[0] * x.t + r[1] * x.x[0] + r[2] * x.x[1] + r[3] * x.x[2]
    }

    /// Spatial component `Aˢ(t, x)`.
    pub fn space_of(&self, x: FourVector) -> Vec3 {
        self.apply(x).x
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LorentzTransform) -> LorentzTransform {
        let kind = match (self.kind, other.kind) {
            (TransformKind::Identity, k) | (k, TransformKind::Identity) => k,
            (TransformKind::Rotation, TransformKind::Rotation) => TransformKind::Rotation,
            (TransformKind::BoostX(a), TransformKind::BoostX(b)) => TransformKind::BoostX(a + b),
            _ => TransformKind::General,
        };
        Self { m: self.m.mul_mat(&other.m), kind }
    }

    /// Exact group inverse `η mᵀ η`.
    pub fn inverse(&self) -> LorentzTransform {
        let mut inv = self.m.transpose();
        for i in 1..4 {
            inv.0[0][i] = -inv.0[0][i];
            inv.0[i][0] = -inv.0[i][0];
        }
        let kind = match self.kind {
            TransformKind::BoostX(phi) => TransformKind::BoostX(-phi),
            k => k,
        };
        Self { m: inv, kind }
    }

    /// Spatial 3×3 block, meaningful as a rotation only when the transform is one.
    pub fn spatial_block(&self) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m.0[i + 1][j + 1];
            }
        }
        Mat3(r)
    }

    /// Maximum deviation from `mᵀηm = η`.
    pub fn metric_defect(&self) -> f64 {
        let mt = self.m.transpose();
        mt.mul_mat(&Mat4::ETA).mul_mat(&self.m).max_abs_diff(&Mat4::ETA)
    }

    pub fn validate(&self) -> Result<()> {
        validate_matrix(&self.m)
    }
}

fn validate_matrix(m: &Mat4) -> Result<()> {
    if !m.0.iter().flatten().all(|x| x.is_finite()) {
        return Err(Error::Validation("Lorentz matrix has non-finite entries"));
    }
    // Scale the metric tolerance with the entry size so large boosts are
    // not rejected for roundoff alone.
    let scale = m.max_abs().max(1.0);
    let lt = LorentzTransform { m: *m, kind: TransformKind::General };
    if lt.metric_defect() > GROUP_TOL * scale * scale {
        return Err(Error::Validation("matrix does not preserve the Minkowski metric"));
    }
    if m.0[0][0] < 1.0 - GROUP_TOL * scale {
        return Err(Error::Validation("matrix is not orthochronous"));
    }
    if abs(m.det() - 1.0) > GROUP_TOL * crate::math::powi(scale, 4) {
        return Err(Error::Validation("matrix has determinant != 1"));
    }
    Ok(())
}

/// Boost `A_φ` along the first spatial axis.
pub fn boost_x(phi: f64) -> Result<LorentzTransform> {
    if !phi.is_finite() || abs(phi) > MAX_RAPIDITY {
        return Err(Error::Overflow("boost rapidity |phi| > 700"));
    }
    if phi == 0.0 {
        return Ok(LorentzTransform::identity());
    }
    let (c, s) = (cosh(phi), sinh(phi));
    let m = Mat4([[c, s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]);
    Ok(LorentzTransform { m, kind: TransformKind::BoostX(phi) })
}

/// Block-diagonal embedding `diag(1, R̃)` of a proper 3D rotation.
pub fn embed_rotation(r: &Mat3) -> Result<LorentzTransform> {
    if !r.0.iter().flatten().all(|x| x.is_finite()) {
        return Err(Error::Validation("rotation has non-finite entries"));
    }
    if r.transpose().mul_mat(r).max_abs_diff(&Mat3::IDENTITY) > GROUP_TOL {
        return Err(Error::Validation("rotation matrix is not orthogonal"));
    }
    if abs(r.det() - 1.0) > GROUP_TOL {
        return Err(Error::Validation("rotation matrix is improper (det != 1)"));
    }
    Ok(embed_unchecked(r))
}

fn embed_unchecked(r: &Mat3) -> LorentzTransform {
    let mut m = Mat4::IDENTITY;
    for i in 0..3 {
        for j in 0..3 {
            m.0[i + 1][j + 1] = r.0[i][j];
        }
    }
    LorentzTransform { m, kind: TransformKind::Rotation }
}

/// Matrix-vector product `A X`.
pub fn apply(a: &LorentzTransform, x: FourVector) -> FourVector {
    a.apply(x)
}

/// Proper rotation taking `e₁` onto the unit vector `n`.
///
/// Rodrigues form `I + [k]× + [k]×²/(1 + c)` with `k = e₁ × n`, `c = e₁·n`;
/// near `n = −e₁` it first flips `e₁` by a half-turn about `e₃`.
pub fn rotation_e1_to(n: Vec3) -> Mat3 {
    let n = n / n.norm();
    let c = n[0];
    if c < -0.5 {
        let half_turn = Mat3([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]);
        return rodrigues_between(-Vec3::unit(0), n).mul_mat(&half_turn);
    }
    rodrigues_between(Vec3::unit(0), n)
}

fn rodrigues_between(a: Vec3, b: Vec3) -> Mat3 {
    let k = a.cross(b);
    let c = a.dot(b);
    let kx = crate::math::cross_matrix(k);
    let kx2 = kx.mul_mat(&kx);
    let f = 1.0 / (1.0 + c);
    let mut out = Mat3::IDENTITY.0;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += kx.0[i][j] + f * kx2.0[i][j];
        }
    }
    Mat3(out)
}

/// Factorisation `a = R₁ A_φ R₂` with `φ ≥ 0`.
#[derive(Debug, Clone, Copy)]
pub struct Decomposition {
    pub r1: LorentzTransform,
    pub phi: f64,
    pub r2: LorentzTransform,
}

impl Decomposition {
    pub fn reconstruct(&self) -> LorentzTransform {
        // phi was validated when the decomposition was built.
        let boost = boost_x(self.phi).expect("rapidity in range");
        self.r1.compose(&boost).compose(&self.r2)
    }
}

/// Constructive factorisation of a restricted Lorentz transform.
///
/// The image of `(1,0,0,0)` is `(cosh φ, sinh φ·n)`. `R₁` rotates `e₁` onto
/// `n`, and `R₂ = A_φ⁻¹ R₁⁻¹ a` must then be a rotation, which is checked.
pub fn decompose(a: &LorentzTransform) -> Result<Decomposition> {
    a.validate()?;
    let m = a.matrix();
    let spatial = Vec3([m.0[1][0], m.0[2][0], m.0[3][0]]);
    let sinh_phi = spatial.norm();
    if sinh_phi < 1e-12 {
        let r = extract_rotation(m, 1.0)?;
        return Ok(Decomposition { r1: r, phi: 0.0, r2: LorentzTransform::identity() });
    }
    let phi = asinh(sinh_phi);
    let r1 = embed_unchecked(&rotation_e1_to(spatial));
    let boost_inv = boost_x(-phi)?;
    let r2m = boost_inv.compose(&r1.inverse()).compose(a);
    let amp = m.max_abs();
    let r2 = extract_rotation(r2m.matrix(), amp * amp)?;
    Ok(Decomposition { r1, phi, r2 })
}

/// Reads the spatial block of a matrix that must fix the time axis.
/// `amp` is the amplification of rounding error in `m`.
fn extract_rotation(m: &Mat4, amp: f64) -> Result<LorentzTransform> {
    let scale = m.max_abs().max(amp).max(1.0);
    let tol = 1e-9 * scale;
    if abs(m.0[0][0] - 1.0) > tol || (1..4).any(|i| abs(m.0[0][i]) > tol || abs(m.0[i][0]) > tol) {
        return Err(Error::Validation("residual factor of the decomposition is not a rotation"));
    }
    let lt = LorentzTransform { m: *m, kind: TransformKind::Rotation };
    let r = lt.spatial_block();
    if r.transpose().mul_mat(&r).max_abs_diff(&Mat3::IDENTITY) > tol || abs(r.det() - 1.0) > tol {
        return Err(Error::Validation("residual factor of the decomposition is not a rotation"));
    }
    Ok(embed_unchecked(&r))
}

/// Boost taking the rest frame onto the timelike direction of `p`:
/// `A (√(t² − |x|²), 0, 0, 0) = p`, built as `R A_φ R⁻¹`.
pub fn boost_to_rest(p: FourVector) -> Result<LorentzTransform> {
    if !(p.t.is_finite() && p.x.is_finite()) || !p.is_future_timelike() {
        return Err(Error::Domain("boost_to_rest needs a future-directed timelike vector"));
    }
    let tau = sqrt((p.t - p.x.norm()) * (p.t + p.x.norm()));
    let u = p.x / tau;
    let speed = u.norm();
    if speed == 0.0 {
        return Ok(LorentzTransform::identity());
    }
    let phi = asinh(speed);
    let r = embed_unchecked(&rotation_e1_to(u));
    let boost = boost_x(phi)?;
    Ok(r.compose(&boost).compose(&r.inverse()))
}

/// Earliest boosted-frame time `T_A = |sinh φ|·k` at which the transformed
/// solution is globally defined, `k` being the support constant.
pub fn activation_time(a: &LorentzTransform, k: f64) -> Result<f64> {
    let d = decompose(a)?;
    Ok(abs(sinh(d.phi)) * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_rotation(rng: &mut impl Rng) -> Mat3 {
        let axis = loop {
            let a = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if a.norm() > 1e-3 {
                break a;
            }
        };
        Mat3::axis_angle(axis, rng.gen_range(-3.2..3.2))
    }

    fn random_transform(rng: &mut impl Rng, factors: usize) -> LorentzTransform {
        let mut a = LorentzTransform::identity();
        for _ in 0..factors {
            let f =
                if rng.gen_bool(0.5) { embed_rotation(&random_rotation(rng)).unwrap() } else { boost_x(rng.gen_range(-0.5..0.5)).unwrap() };
            a = a.compose(&f);
        }
        a
    }

    #[test]
    fn boost_zero_is_identity() {
        assert_eq!(*boost_x(0.0).unwrap().matrix(), Mat4::IDENTITY);
    }

    #[test]
    fn boost_inverse_pairs() {
        for phi in [0.5, -0.5, 2.0, -2.0] {
            let p = boost_x(phi).unwrap().compose(&boost_x(-phi).unwrap());
            assert!(p.matrix().max_abs_diff(&Mat4::IDENTITY) <= 1e-12, "phi {phi}");
            let inv = boost_x(phi).unwrap().inverse();
            assert!(inv.matrix().max_abs_diff(boost_x(-phi).unwrap().matrix()) <= 1e-15);
        }
    }

    #[test]
    fn boost_overflow_guard() {
        assert!(matches!(boost_x(701.0), Err(Error::Overflow(_))));
        assert!(matches!(boost_x(-701.0), Err(Error::Overflow(_))));
        assert!(boost_x(699.0).is_ok());
    }

    #[test]
    fn boost_applied_to_rest_vector() {
        let y = boost_x(1.0).unwrap().apply(FourVector::new(1.0, Vec3::ZERO));
        assert_eq!(y, FourVector::new(cosh(1.0), Vec3::new(sinh(1.0), 0.0, 0.0)));
    }

    #[test]
    fn rotation_embedding_examples() {
        assert_eq!(*embed_rotation(&Mat3::IDENTITY).unwrap().matrix(), Mat4::IDENTITY);
        let rz = Mat3::axis_angle(Vec3::unit(2), core::f64::consts::FRAC_PI_2);
        let y = embed_rotation(&rz).unwrap().apply(FourVector::new(1.0, Vec3::new(1.0, 0.0, 0.0)));
        assert_eq!(y.t, 1.0);
        assert!((y.x - Vec3::new(0.0, 1.0, 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn rotation_embedding_rejects_bad_input() {
        let reflection = Mat3([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(embed_rotation(&reflection), Err(Error::Validation(_))));
        let shear = Mat3([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(embed_rotation(&shear), Err(Error::Validation(_))));
    }

    #[test]
    fn rotations_preserve_spatial_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let r = embed_rotation(&random_rotation(&mut rng)).unwrap();
            let x = FourVector::new(
                rng.gen_range(-5.0..5.0),
                Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
            );
            let y = r.apply(x);
            assert_eq!(y.t, x.t);
            assert!((y.x.norm() - x.x.norm()).abs() <= 1e-13 * x.x.norm().max(1.0));
        }
    }

    #[test]
    fn metric_invariance_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..8);
            let a = random_transform(&mut rng, n);
            let x = FourVector::new(
                rng.gen_range(-1.0..1.0),
                Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
            assert!((a.apply(x).interval() - x.interval()).abs() <= 1e-10);
        }
    }

    #[test]
    fn boost_x_first_axis_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let a = boost_x(rng.gen_range(-3.0..3.0)).unwrap();
            let x = FourVector::new(rng.gen_range(-2.0..2.0), Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.3));
            let y = a.apply(x);
            let lhs = y.x[0] * y.x[0] - y.t * y.t;
            let rhs = x.x[0] * x.x[0] - x.t * x.t;
            assert!((lhs - rhs).abs() <= 1e-10);
        }
    }

    #[test]
    fn decompose_identity_and_boost() {
        let d = decompose(&LorentzTransform::identity()).unwrap();
        assert_eq!(d.phi, 0.0);
        assert!(d.r1.matrix().max_abs_diff(&Mat4::IDENTITY) < 1e-15);
        assert!(d.r2.matrix().max_abs_diff(&Mat4::IDENTITY) < 1e-15);

        let b = boost_x(1.3).unwrap();
        let d = decompose(&b).unwrap();
        assert!((d.phi - 1.3).abs() < 1e-12);
        assert!(d.reconstruct().matrix().max_abs_diff(b.matrix()) <= 1e-10);
        // negative rapidities fold into R₁ (phi >= 0 gauge)
        let d = decompose(&boost_x(-0.7).unwrap()).unwrap();
        assert!((d.phi - 0.7).abs() < 1e-12);
    }

    #[test]
    fn decompose_random_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let a = random_transform(&mut rng, 20);
            let d = decompose(&a).unwrap();
            assert!(d.phi >= 0.0);
            assert_eq!(d.r1.kind(), TransformKind::Rotation);
            let err = d.reconstruct().matrix().max_abs_diff(a.matrix());
            assert!(err <= 1e-9, "reconstruction error {err:e}");
        }
    }

    #[test]
    fn decompose_rejects_non_group_matrix() {
        let mut m = Mat4::IDENTITY;
        m.0[1][2] = 0.3;
        assert!(matches!(decompose(&LorentzTransform { m, kind: TransformKind::General }), Err(Error::Validation(_))));
        assert!(LorentzTransform::from_matrix(m).is_err());
        // time reversal is a Lorentz isometry but not orthochronous
        let mut tr = Mat4::IDENTITY;
        tr.0[0][0] = -1.0;
        tr.0[1][1] = -1.0;
        assert!(LorentzTransform::from_matrix(tr).is_err());
    }

    #[test]
    fn boost_to_rest_examples() {
        let a = boost_to_rest(FourVector::new(1.0, Vec3::ZERO)).unwrap();
        assert_eq!(*a.matrix(), Mat4::IDENTITY);

        let v: f64 = 0.8;
        let p = FourVector::new((1.0 + v * v).sqrt(), Vec3::new(v, 0.0, 0.0));
        let a = boost_to_rest(p).unwrap();
        assert!(a.matrix().max_abs_diff(boost_x(v.asinh()).unwrap().matrix()) < 1e-14);

        let p = FourVector::new(3.0, Vec3::new(1.0, 2.0, 0.0));
        let a = boost_to_rest(p).unwrap();
        let img = a.apply(FourVector::new(2.0, Vec3::ZERO));
        assert!((img.t - 3.0).abs() <= 1e-10 && (img.x - p.x).max_abs() <= 1e-10);
        a.validate().unwrap();
    }

    #[test]
    fn boost_to_rest_domain_errors() {
        assert!(matches!(boost_to_rest(FourVector::new(1.0, Vec3::new(1.0, 0.0, 0.0))), Err(Error::Domain(_))));
        assert!(matches!(boost_to_rest(FourVector::new(-2.0, Vec3::ZERO)), Err(Error::Domain(_))));
        assert!(matches!(boost_to_rest(FourVector::new(1.0, Vec3::new(0.0, 3.0, 0.0))), Err(Error::Domain(_))));
    }

    #[test]
    fn rotation_e1_to_handles_antipode() {
        for n in [Vec3::new(-1.0, 0.0, 0.0), Vec3::new(-1.0, 1e-9, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0)] {
            let r = rotation_e1_to(n);
            assert!((r.mul_vec(Vec3::unit(0)) - n / n.norm()).max_abs() < 1e-14);
            assert!((r.det() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn activation_time_of_boost() {
        let a = boost_x(-0.6).unwrap();
        assert!((activation_time(&a, 2.0).unwrap() - 2.0 * (0.6f64).sinh()).abs() < 1e-12);
        let r = embed_rotation(&Mat3::axis_angle(Vec3::new(1.0, 2.0, 3.0), 0.4)).unwrap();
        assert_eq!(activation_time(&r, 2.0).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn group_closure(seed in 0u64..10_000, n in 1usize..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_transform(&mut rng, n);
            prop_assert!(a.validate().is_ok());
            prop_assert!(a.compose(&a.inverse()).matrix().max_abs_diff(&Mat4::IDENTITY) <= 1e-9);
        }

        #[test]
        fn boost_to_rest_transitive(vx in -5.0..5.0f64, vy in -5.0..5.0f64, vz in -5.0..5.0f64) {
            let v = Vec3::new(vx, vy, vz);
            let p = FourVector::new((1.0 + v.norm_sq()).sqrt(), v);
            let a = boost_to_rest(p).unwrap();
            let img = a.apply(FourVector::new(1.0, Vec3::ZERO));
            prop_assert!((img.t - p.t).abs() <= 1e-10);
            prop_assert!((img.x - p.x).max_abs() <= 1e-10);
        }
    }
}
