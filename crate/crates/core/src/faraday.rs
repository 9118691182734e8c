//! Faraday tensor packaging of an electromagnetic field.
//!
//! Layout (row = first index, time first):
//!
//! ```text
//!   0    E¹   E²   E³
//!  −E¹   0    B³  −B²
//!  −E²  −B³   0    B¹
//!  −E³   B²  −B¹   0
//! ```
//!
//! Under a restricted Lorentz transform `A` acting by composition
//! (`f^A(X) = f(AX)`), the tensor pulls back as `F^A = A⁻¹ F A⁻ᵀ`. For the
//! symmetric transforms (every pure boost, in particular `A_φ`) this is the
//! product `A⁻¹ F A⁻¹`.

use crate::error::{Error, Result};
use crate::lorentz::LorentzTransform;
use crate::math::{Mat4, Vec3};

/// Electric and magnetic field at one spacetime point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EMField {
    pub e: Vec3,
    pub b: Vec3,
}

impl EMField {
    pub const ZERO: EMField = EMField { e: Vec3::ZERO, b: Vec3::ZERO };

    pub fn new(e: Vec3, b: Vec3) -> Self {
        Self { e, b }
    }

    /// `|(E, B)|`, Euclidean norm of the six components.
    pub fn norm(&self) -> f64 {
        crate::math::sqrt(self.e.norm_sq() + self.b.norm_sq())
    }

    pub fn scaled(&self, s: f64) -> EMField {
        EMField { e: self.e * s, b: self.b * s }
    }

    /// `|B|² − |E|²`.
    pub fn invariant_field(&self) -> f64 {
        self.b.norm_sq() - self.e.norm_sq()
    }

    /// `E·B`.
    pub fn invariant_pseudo(&self) -> f64 {
        self.e.dot(self.b)
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.b.is_finite()
    }
}

/// Antisymmetric 4×4 tensor, stored as its upper triangle
/// `[F⁰¹, F⁰², F⁰³, F¹², F¹³, F²³]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FaradayTensor {
    upper: [f64; 6],
}

const UPPER_INDEX: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl FaradayTensor {
    pub fn upper(&self) -> [f64; 6] {
        self.upper
    }

    pub fn to_matrix(&self) -> Mat4 {
        let mut m = Mat4::ZERO;
        for (k, &(i, j)) in UPPER_INDEX.iter().enumerate() {
            m.0[i][j] = self.upper[k];
            m.0[j][i] = -self.upper[k];
        }
        m
    }

    /// Accepts a matrix whose antisymmetric defect is within `tol`
    /// (relative to its largest entry); the stored tensor uses the upper
    /// triangle.
    pub fn from_matrix(m: &Mat4, tol: f64) -> Result<Self> {
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        let mut defect = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                defect = defect.max(crate::math::abs(m.0[i][j] + m.0[j][i]));
            }
        }
        if !(defect <= tol * scale) {
            return Err(Error::Validation("Faraday matrix is not antisymmetric"));
        }
        let mut upper = [0.0; 6];
        for (k, &(i, j)) in UPPER_INDEX.iter().enumerate() {
            upper[k] = m.0[i][j];
        }
        Ok(Self { upper })
    }
}

pub fn to_tensor(em: &EMField) -> FaradayTensor {
    let (e, b) = (em.e, em.b);
    FaradayTensor { upper: [e[0], e[1], e[2], b[2], -b[1], b[0]] }
}

/// Reads `(E, B)` from a matrix, which must be exactly antisymmetric.
pub fn from_tensor_matrix(m: &Mat4) -> Result<EMField> {
    Ok(from_tensor(&FaradayTensor::from_matrix(m, 0.0)?))
}

pub fn from_tensor(f: &FaradayTensor) -> EMField {
    let u = f.upper;
    EMField { e: Vec3([u[0], u[1], u[2]]), b: Vec3([u[5], -u[4], u[3]]) }
}

/// Raw transformed matrix `A⁻¹ F A⁻ᵀ`.
pub fn transform_matrix(f: &FaradayTensor, a: &LorentzTransform) -> Mat4 {
    let inv = a.inverse();
    let ai = inv.matrix();
    ai.mul_mat(&f.to_matrix()).mul_mat(&ai.transpose())
}

/// Pull-back of the tensor by `a`. The result is re-antisymmetrised from
/// the upper triangle; the lower triangle agrees to roundoff.
pub fn transform(f: &FaradayTensor, a: &LorentzTransform) -> FaradayTensor {
    let m = transform_matrix(f, a);
    let mut upper = [0.0; 6];
    for (k, &(i, j)) in UPPER_INDEX.iter().enumerate() {
        upper[k] = 0.5 * (m.0[i][j] - m.0[j][i]);
    }
    FaradayTensor { upper }
}

/// Field seen in the transformed frame at the same underlying event.
pub fn transform_field(em: &EMField, a: &LorentzTransform) -> EMField {
    from_tensor(&transform(&to_tensor(em), a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::{boost_x, embed_rotation};
    use crate::math::{cosh, sinh, Mat3};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut impl Rng, s: f64) -> Vec3 {
        Vec3::new(rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s))
    }

    #[test]
    fn layout_examples() {
        assert_eq!(to_tensor(&EMField::ZERO).to_matrix(), Mat4::ZERO);
        let m = to_tensor(&EMField::new(Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO)).to_matrix();
        let mut expect = Mat4::ZERO;
        expect.0[0][1] = 1.0;
        expect.0[1][0] = -1.0;
        assert_eq!(m, expect);

        let mut f = Mat4::ZERO;
        f.0[2][3] = 1.0;
        f.0[3][2] = -1.0;
        let em = from_tensor_matrix(&f).unwrap();
        assert_eq!(em, EMField::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)));
        assert_eq!(from_tensor_matrix(&Mat4::ZERO).unwrap(), EMField::ZERO);
    }

    #[test]
    fn full_layout_matches_table() {
        let em = EMField::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0));
        let m = to_tensor(&em).to_matrix();
        let expect = Mat4([[0.0, 1.0, 2.0, 3.0], [-1.0, 0.0, 6.0, -5.0], [-2.0, -6.0, 0.0, 4.0], [-3.0, 5.0, -4.0, 0.0]]);
        assert_eq!(m, expect);
    }

    #[test]
    fn rejects_non_antisymmetric() {
        let mut f = Mat4::ZERO;
        f.0[0][1] = 1.0;
        assert!(matches!(from_tensor_matrix(&f), Err(Error::Validation(_))));
        f.0[1][0] = -1.0;
        f.0[2][2] = 1e-3;
        assert!(from_tensor_matrix(&f).is_err());
    }

    #[test]
    fn round_trip_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let em = EMField::new(rand_vec(&mut rng, 10.0), rand_vec(&mut rng, 10.0));
            assert_eq!(from_tensor(&to_tensor(&em)), em);
            assert_eq!(from_tensor_matrix(&to_tensor(&em).to_matrix()).unwrap(), em);
        }
    }

    #[test]
    fn identity_transform_is_noop() {
        let em = EMField::new(Vec3::new(0.3, -1.0, 2.0), Vec3::new(1.5, 0.25, -0.75));
        assert_eq!(transform_field(&em, &LorentzTransform::identity()), em);
    }

    /// Literal triple product `A⁻¹ F A⁻¹` for a symmetric boost, written out
    /// entry by entry; pins the sign conventions.
    #[test]
    fn boost_matches_explicit_triple_product() {
        let phi = 0.7;
        let (c, s) = (cosh(phi), sinh(phi));
        let ainv = Mat4([[c, -s, 0.0, 0.0], [-s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]);
        let em = EMField::new(Vec3::new(0.4, -1.1, 0.6), Vec3::new(0.2, 0.9, -0.5));
        let f = to_tensor(&em).to_matrix();
        let mut oracle = Mat4::ZERO;
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    for l in 0..4 {
                        acc += ainv.0[i][k] * f.0[k][l] * ainv.0[l][j];
                    }
                }
                oracle.0[i][j] = acc;
            }
        }
        let got = transform(&to_tensor(&em), &boost_x(phi).unwrap()).to_matrix();
        assert!(got.max_abs_diff(&oracle) < 1e-14);
        // Standard boost along x: parallel components unchanged, transverse
        // ones mix with factor c, s.
        let out = from_tensor(&transform(&to_tensor(&em), &boost_x(phi).unwrap()));
        assert!((out.e[0] - em.e[0]).abs() < 1e-15 && (out.b[0] - em.b[0]).abs() < 1e-15);
        assert!((out.e[1] - (c * em.e[1] - s * em.b[2])).abs() < 1e-14);
        assert!((out.e[2] - (c * em.e[2] + s * em.b[1])).abs() < 1e-14);
        assert!((out.b[1] - (c * em.b[1] + s * em.e[2])).abs() < 1e-14);
        assert!((out.b[2] - (c * em.b[2] - s * em.e[1])).abs() < 1e-14);
    }

    #[test]
    fn pure_parallel_e_is_invariant_under_boost_x() {
        let em = EMField::new(Vec3::new(2.5, 0.0, 0.0), Vec3::ZERO);
        for phi in [-2.0, -0.3, 0.6, 1.7] {
            let out = transform_field(&em, &boost_x(phi).unwrap());
            assert!((out.e - em.e).max_abs() < 1e-14);
            assert!(out.b.max_abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_acts_as_inverse_rotation_on_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let r3 = Mat3::axis_angle(rand_vec(&mut rng, 1.0) + Vec3::new(0.0, 0.0, 1e-3), rng.gen_range(-3.0..3.0));
            let r = embed_rotation(&r3).unwrap();
            let em = EMField::new(rand_vec(&mut rng, 3.0), rand_vec(&mut rng, 3.0));
            let out = transform_field(&em, &r);
            let rt = r3.transpose();
            assert!((out.e - rt.mul_vec(em.e)).max_abs() < 1e-13);
            assert!((out.b - rt.mul_vec(em.b)).max_abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn invariants_and_inverse(seed in 0u64..5000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = LorentzTransform::identity();
            for _ in 0..rng.gen_range(1..6) {
                let f = if rng.gen_bool(0.5) {
                    embed_rotation(&Mat3::axis_angle(rand_vec(&mut rng, 1.0) + Vec3::new(1e-3, 0.0, 0.0), rng.gen_range(-3.0..3.0))).unwrap()
                } else {
                    boost_x(rng.gen_range(-0.8..0.8)).unwrap()
                };
                a = a.compose(&f);
            }
            let em = EMField::new(rand_vec(&mut rng, 2.0), rand_vec(&mut rng, 2.0));
            let raw = transform_matrix(&to_tensor(&em), &a);
            let mut defect = 0.0_f64;
            for i in 0..4 { for j in 0..4 { defect = defect.max((raw.0[i][j] + raw.0[j][i]).abs()); } }
            prop_assert!(defect <= 1e-12 * raw.max_abs().max(1.0));
            let out = transform_field(&em, &a);
            prop_assert!((out.invariant_field() - em.invariant_field()).abs() <= 1e-10 * (1.0 + em.norm() * em.norm()));
            prop_assert!((out.invariant_pseudo() - em.invariant_pseudo()).abs() <= 1e-10 * (1.0 + em.norm() * em.norm()));
            let back = transform(&transform(&to_tensor(&em), &a), &a.inverse());
            let diff = back.to_matrix().max_abs_diff(&to_tensor(&em).to_matrix());
            prop_assert!(diff <= 1e-12 * a.matrix().max_abs().powi(4).max(1.0));
        }
    }
}
