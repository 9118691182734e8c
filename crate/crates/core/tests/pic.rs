use modscat_core::kinematics::Species;
use modscat_core::maxwell::{deposit, div_b_relative, gauss_residual, init_constrained, GridSpec, PicConfig, PicRun};
use modscat_core::transport::{ParticleEnsemble, ParticleState};
use modscat_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump(x: Vec3, a: f64) -> f64 {
    let s = 1.0 - x.norm_sq() / (a * a);
    if s > 0.0 {
        s.powi(4)
    } else {
        0.0
    }
}

/// Charges at nodes reproducing `ρ = −Δ_h ψ / 4π` for a compact `ψ`.
#[test]
fn field_of_compact_charge_vanishes_outside() {
    let k = 3.0;
    let spec = GridSpec::cube(32, 8.0).unwrap();
    let h = spec.dx()[0];
    let a = 0.6 * k;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 1..32 {
        for j in 1..32 {
            for l in 1..32 {
                let x = spec.node(i, j, l);
                let c = bump(x, a);
                let mut lap = -6.0 * c;
                for d in [Vec3::new(h, 0.0, 0.0), Vec3::new(0.0, h, 0.0), Vec3::new(0.0, 0.0, h)] {
                    lap += bump(x + d, a) + bump(x - d, a);
                }
                let q = -lap / (h * h) / (4.0 * std::f64::consts::PI) * h * h * h;
                if q > 0.0 {
                    pos.push(ParticleState::new(x, Vec3::ZERO, q).unwrap());
                } else if q < 0.0 {
                    neg.push(ParticleState::new(x, Vec3::ZERO, -q).unwrap());
                }
            }
        }
    }
    let ens = vec![
        ParticleEnsemble::new(Species::new("p", 1.0, 1.0).unwrap(), pos, 0.0, k).unwrap(),
        ParticleEnsemble::new(Species::new("n", 1.0, -1.0).unwrap(), neg, 0.0, k).unwrap(),
    ];
    let g = init_constrained(&ens, &spec, None).unwrap();
    let src = deposit(&ens, &spec).unwrap();
    assert!(gauss_residual(&g, &src) <= 1e-10 * g.max_e().max(1.0));
    let peak = g.max_e();
    let mut outside = 0.0_f64;
    for i in 0..=32 {
        for j in 0..=32 {
            for l in 0..=32 {
                let x = spec.node(i, j, l);
                if x.norm() > k + h {
                    let f = g.gather(x);
                    outside = outside.max(f.e.norm());
                }
            }
        }
    }
    assert!(peak > 0.0);
    assert!(outside <= 1e-6 * peak, "outside {outside:e} peak {peak:e}");
}

fn slow_plasma(seed: u64, n: usize) -> Vec<ParticleEnsemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| {
        let x = Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let v = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        ParticleState::new(x, v, 0.01).unwrap()
    };
    let p: Vec<_> = (0..n).map(|_| sample(&mut rng)).collect();
    let q: Vec<_> = (0..n).map(|_| sample(&mut rng)).collect();
    vec![
        ParticleEnsemble::new(Species::new("ion", 1e4, 1.0).unwrap(), p, 0.0, 4.0).unwrap(),
        ParticleEnsemble::new(Species::new("anti", 1e4, -1.0).unwrap(), q, 0.0, 4.0).unwrap(),
    ]
}

#[test]
fn constraints_hold_over_long_run() {
    let spec = GridSpec::cube(24, 12.0).unwrap();
    let cfg = PicConfig { dt: 0.5 * spec.courant_limit(), k: 4.0, monitor_every: 500, conserving: true };
    let mut run = PicRun::new(slow_plasma(7, 100), spec, cfg, &[(0, 0)]).unwrap();
    for _ in 0..10_000 {
        run.step().unwrap();
    }
    let scale = run.charge_scale();
    let first = run.monitors[0].gauss_residual;
    for m in &run.monitors {
        assert!(m.gauss_residual <= 1e-10 * scale, "t = {}: {:e}", m.time, m.gauss_residual);
        assert!(m.div_b <= 1e-12, "t = {}: {:e}", m.time, m.div_b);
    }
    let last = run.monitors.last().unwrap().gauss_residual;
    assert!(last <= 10.0 * first.max(1e-14 * scale));
    assert!(div_b_relative(&run.grid) <= 1e-12);
    assert_eq!(run.tracks[0].worldline.len(), 10_000);
}

#[test]
fn non_conserving_deposit_breaks_gauss() {
    let spec = GridSpec::cube(24, 12.0).unwrap();
    let cfg = PicConfig { dt: 0.5 * spec.courant_limit(), k: 4.0, monitor_every: 50, conserving: false };
    let mut run = PicRun::new(slow_plasma(7, 100), spec, cfg, &[]).unwrap();
    run.run_until(500.0 * cfg.dt).unwrap();
    let scale = run.charge_scale();
    let last = run.monitors.last().unwrap().gauss_residual;
    assert!(last > 1e-6 * scale, "residual {last:e}");
}

#[test]
fn identical_runs_are_bitwise_reproducible() {
    let spec = GridSpec::cube(12, 6.0).unwrap();
    let cfg = PicConfig { dt: 0.5 * spec.courant_limit(), k: 4.0, monitor_every: 10, conserving: true };
    let a = {
        let mut r = PicRun::new(slow_plasma(3, 20), spec.clone(), cfg, &[]).unwrap();
        r.run_until(20.0).unwrap();
        r
    };
    let mut b = PicRun::new(slow_plasma(3, 20), spec, cfg, &[]).unwrap();
    b.run_until(20.0).unwrap();
    assert_eq!(a.grid, b.grid);
    assert_eq!(a.ensembles(), b.ensembles());
}
