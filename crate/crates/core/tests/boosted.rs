use modscat_core::asymptotics::{asymptotic_momenta, verify_boosted_extraction, VelocityGrid};
use modscat_core::fieldmodels::{FieldModel, RadialCharge, SelfSimilarField, SelfSimilarProfile, ZeroField};
use modscat_core::kinematics::Species;
use modscat_core::lorentz::{boost_x, LorentzTransform};
use modscat_core::transport::{push, ParticleEnsemble, ParticleState, PushConfig};
use modscat_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump(n: usize, seed: u64) -> ParticleEnsemble {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ball = |r: f64| loop {
        let v = Vec3::new(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r));
        if v.norm() < r {
            break v;
        }
    };
    let parts = (0..n)
        .map(|_| {
            let x = ball(0.8);
            let v = ball(0.45) + Vec3::new(0.1, 0.0, 0.0);
            ParticleState::new(x, v, 1.0 / n as f64).unwrap()
        })
        .collect();
    ParticleEnsemble::new(Species::new("e", 1.0, -1.0).unwrap(), parts, 0.0, 1.0).unwrap().with_worldlines()
}

fn run(field: &dyn FieldModel, t_end: f64) -> ParticleEnsemble {
    push(&bump(300, 11), field, t_end, &PushConfig::default()).unwrap()
}

#[test]
fn free_streaming_boost_is_exact() {
    let out = run(&ZeroField { k: 1.0 }, 1e3);
    let v_inf = asymptotic_momenta(&out, 10.0).unwrap();
    let grid = VelocityGrid::new(16, 1.6).unwrap();
    let rep = verify_boosted_extraction(&[out], &[v_inf], &boost_x(0.6).unwrap(), &[5.0, 50.0, 500.0], &grid).unwrap();
    for c in &rep.comparisons {
        assert!(c.weak_deviation <= 1e-8, "t = {}: {:e}", c.time, c.weak_deviation);
    }
}

#[test]
fn identity_boost_reproduces_extraction() {
    let out = run(&ZeroField { k: 1.0 }, 1e3);
    let v_inf = asymptotic_momenta(&out, 10.0).unwrap();
    let grid = VelocityGrid::new(16, 1.6).unwrap();
    let rep = verify_boosted_extraction(&[out], &[v_inf], &LorentzTransform::identity(), &[100.0], &grid).unwrap();
    assert!(rep.max_weak_deviation <= 1e-12);
    assert!(rep.comparisons[0].pointwise_deviation <= 1e-12);
}

#[test]
fn prescribed_field_boost_within_five_percent() {
    let prof = SelfSimilarProfile {
        uniform: Vec3::new(0.05, 0.02, 0.0),
        charge: Some(RadialCharge { q: 0.1, radius: 0.5 }),
        omega: Vec3::new(0.0, 0.0, 0.4),
        ..SelfSimilarProfile::zero()
    };
    let out = run(&SelfSimilarField::new(prof, 1.0).unwrap(), 1e6);
    let v_inf = asymptotic_momenta(&out, 1e3).unwrap();
    let grid = VelocityGrid::new(16, 1.6).unwrap();
    let rep = verify_boosted_extraction(&[out], &[v_inf], &boost_x(0.6).unwrap(), &[1e2, 1e3, 1e4, 1e5], &grid).unwrap();
    let devs: Vec<f64> = rep.comparisons.iter().map(|c| c.weak_deviation).collect();
    assert!(rep.max_weak_deviation <= 0.05, "{devs:?}");
    assert!(devs[3] <= devs[0], "{devs:?}");
}

#[test]
fn slice_before_activation_is_rejected() {
    let out = run(&ZeroField { k: 1.0 }, 10.0);
    let v_inf = asymptotic_momenta(&out, 1.0).unwrap();
    let grid = VelocityGrid::new(8, 1.6).unwrap();
    assert!(verify_boosted_extraction(&[out], &[v_inf], &boost_x(0.6).unwrap(), &[0.1], &grid).is_err());
}
