//! Initial data: smooth compactly supported bumps sampled by particles.

use modscat_core::kinematics::Species;
use modscat_core::transport::{ParticleEnsemble, ParticleState};
use modscat_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Sampling, Scenario, SpeciesConfig};
use crate::error::{Context, RunResult};

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// `(1 − s²)²` for `s < 1`, zero beyond.
fn profile(s2: f64) -> f64 {
    if s2 < 1.0 {
        (1.0 - s2) * (1.0 - s2)
    } else {
        0.0
    }
}

/// `f(x, v) = A (1 − |x−x_c|²/r_x²)² (1 − |v−v_c|²/r_v²)²`.
pub fn bump_density(s: &SpeciesConfig, x: Vec3, v: Vec3) -> f64 {
    let dx = (x - v3(s.x_center)).norm_sq() / (s.x_radius * s.x_radius);
    let dv = (v - v3(s.v_center)).norm_sq() / (s.v_radius * s.v_radius);
    s.amplitude * profile(dx) * profile(dv)
}

fn ball_point(rng: &mut ChaCha8Rng, c: Vec3, r: f64) -> Vec3 {
    loop {
        let u = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if u.norm_sq() < 1.0 {
            return c + u * r;
        }
    }
}

/// Cell centres of the cube around a ball that fall strictly inside it.
fn lattice(c: Vec3, r: f64, n: usize) -> (Vec<Vec3>, f64) {
    let h = 2.0 * r / n as f64;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let p = Vec3::new(-r + (i as f64 + 0.5) * h, -r + (j as f64 + 0.5) * h, -r + (k as f64 + 0.5) * h);
                if p.norm() < r {
                    out.push(c + p);
                }
            }
        }
    }
    (out, h * h * h)
}

fn sample(s: &SpeciesConfig, seed: u64, stream: u64) -> Vec<ParticleState> {
    let (xc, vc) = (v3(s.x_center), v3(s.v_center));
    let mut parts = Vec::new();
    match s.sampling {
        Sampling::Random => {
            let n = s.count.unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let ball = |r: f64| 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
            let vol = ball(s.x_radius) * ball(s.v_radius) / n as f64;
            while parts.len() < n {
                let x = ball_point(&mut rng, xc, s.x_radius);
                let v = ball_point(&mut rng, vc, s.v_radius);
                let w = bump_density(s, x, v) * vol;
                if w > 0.0 {
                    parts.push(ParticleState { x, v, w });
                }
            }
        }
        Sampling::Lattice => {
            let [nx, nv] = s.lattice.unwrap_or([1, 1]);
            let (xs, hx) = lattice(xc, s.x_radius, nx);
            let (vs, hv) = lattice(vc, s.v_radius, nv);
            for x in &xs {
                for v in &vs {
                    let w = bump_density(s, *x, *v) * hx * hv;
                    if w > 0.0 {
                        parts.push(ParticleState { x: *x, v: *v, w });
                    }
                }
            }
        }
    }
    if let Some(total) = s.total_weight {
        let sum: f64 = parts.iter().map(|p| p.w).sum();
        if sum > 0.0 {
            let scale = total / sum;
            for p in parts.iter_mut() {
                p.w *= scale;
            }
        }
    }
    parts
}

/// One ensemble per configured species, at time zero.
pub fn build_ensembles(sc: &Scenario) -> RunResult<Vec<ParticleEnsemble>> {
    let mut out: Vec<ParticleEnsemble> = Vec::with_capacity(sc.species.len());
    for (i, s) in sc.species.iter().enumerate() {
        let species = Species::new(&s.label, s.mass, s.charge).ctx("kinematics", "Species::new")?;
        let particles = match &s.mirror_of {
            Some(src) => {
                let j = sc.species.iter().position(|o| &o.label == src).expect("validated mirror source");
                out[j].particles.clone()
            }
            None => sample(s, sc.seed, i as u64),
        };
        out.push(ParticleEnsemble::new(species, particles, 0.0, sc.k).ctx("transport", "ParticleEnsemble::new")?);
    }
    Ok(out)
}
