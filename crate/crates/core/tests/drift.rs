use modscat_core::fieldmodels::{FieldModel, RadialCharge, SelfSimilarField, SelfSimilarProfile, ZeroField};
use modscat_core::kinematics::{energy_m, hat_m, Species};
use modscat_core::transport::{
    asymptotic_momentum, drift_fit, predicted_drift, push, ParticleEnsemble, ParticleState, PushConfig, StoragePolicy,
};
use modscat_core::Vec3;

fn profile() -> SelfSimilarProfile {
    SelfSimilarProfile {
        uniform: Vec3::new(0.04, -0.02, 0.03),
        charge: Some(RadialCharge { q: 0.05, radius: 0.5 }),
        omega: Vec3::new(0.2, -0.1, 0.6),
        ..SelfSimilarProfile::zero()
    }
}

/// Fixed-step RK4 in `s = log t` on `(z = x/t, v)`, started at `t = 1`
/// from the free-streamed state.
fn oracle(field: &dyn FieldModel, sp: &Species, x0: Vec3, v0: Vec3, t_end: f64, out_times: &[f64]) -> Vec<(f64, Vec3, Vec3)> {
    let m = sp.mass();
    let x1 = x0 + hat_m(v0, m);
    let mut z = x1;
    let mut v = v0;
    let ds = 10f64.ln() / 1000.0;
    let s_end = t_end.ln();
    let n = (s_end / ds).ceil() as usize;
    let h = s_end / n as f64;
    let f = |s: f64, z: Vec3, v: Vec3| -> (Vec3, Vec3) {
        let t = s.exp();
        let em = field.evaluate(t, z * t).unwrap();
        let vh = hat_m(v, m);
        let a = (em.e + vh.cross(em.b)) * sp.charge();
        (vh - z, a * t)
    };
    let mut out = Vec::new();
    let mut next = 0;
    for i in 0..n {
        let s = i as f64 * h;
        let (k1z, k1v) = f(s, z, v);
        let (k2z, k2v) = f(s + 0.5 * h, z + k1z * (0.5 * h), v + k1v * (0.5 * h));
        let (k3z, k3v) = f(s + 0.5 * h, z + k2z * (0.5 * h), v + k2v * (0.5 * h));
        let (k4z, k4v) = f(s + h, z + k3z * h, v + k3v * h);
        z += (k1z + k2z * 2.0 + k3z * 2.0 + k4z) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        let t = ((i + 1) as f64 * h).exp();
        while next < out_times.len() && t >= out_times[next] * (1.0 - 1e-12) {
            out.push((t, z * t, v));
            next += 1;
        }
    }
    out
}

fn initial_states() -> Vec<ParticleState> {
    let mut out = Vec::new();
    for i in 0..12 {
        let a = 0.9 + i as f64 * 0.53;
        let r = 0.15 + 0.05 * (i % 6) as f64;
        let v = Vec3::new(a.cos() * r, a.sin() * r, 0.4 * (1.7 * a).sin() * r);
        let x = Vec3::new(0.3 * (2.1 * a).cos(), -0.2 * a.sin(), 0.1);
        out.push(ParticleState::new(x, v, 1.0).unwrap());
    }
    out
}

#[test]
fn log_slope_matches_force_profile() {
    let sp = Species::new("e", 1.0, -1.0).unwrap();
    let prof = profile();
    let field = SelfSimilarField::new(prof.clone(), 2.0).unwrap();
    let ens = ParticleEnsemble::new(sp.clone(), initial_states(), 0.0, 2.0).unwrap().with_worldlines();
    let cfg = PushConfig { storage: StoragePolicy { dense_until: 10.0, dense_dt: 0.5, ratio: 1.05 }, ..Default::default() };
    let out = push(&ens, &field, 1e9, &cfg).unwrap();
    let mut worst_mag = 0.0_f64;
    let mut worst_deg = 0.0_f64;
    for wl in out.worldlines.as_ref().unwrap() {
        let am = asymptotic_momentum(wl, 1e3).unwrap();
        let v_inf = am.extrapolated;
        let fit = drift_fit(wl, &sp, v_inf, (1e3, 1e6)).unwrap();
        let pred = predicted_drift(&sp, v_inf, prof.lbb(v_inf / sp.mass()));
        let rel = (fit.b.norm() - pred.norm()).abs() / pred.norm();
        let cos = fit.b.dot(pred) / (fit.b.norm() * pred.norm());
        let deg = cos.clamp(-1.0, 1.0).acos().to_degrees();
        worst_mag = worst_mag.max(rel);
        worst_deg = worst_deg.max(deg);
        // |b| = (|e|/v⁰)|𝕃 − v̂(v̂·𝕃)|
        let l = prof.lbb(v_inf);
        let u = hat_m(v_inf, 1.0);
        let expect = sp.charge().abs() / energy_m(v_inf, 1.0) * (l - u * u.dot(l)).norm();
        assert!((pred.norm() - expect).abs() <= 1e-12 * expect);
    }
    assert!(worst_mag <= 0.02, "magnitude mismatch {worst_mag}");
    assert!(worst_deg <= 2.0, "direction mismatch {worst_deg} deg");
}

#[test]
fn adaptive_run_agrees_with_log_time_oracle() {
    let sp = Species::new("e", 2.0, 1.5).unwrap();
    let field = SelfSimilarField::new(profile(), 2.0).unwrap();
    let states = initial_states();
    let times = [1e2, 1e3, 1e4, 1e5];
    let ens = ParticleEnsemble::new(sp.clone(), states[..3].to_vec(), 0.0, 2.0).unwrap().with_worldlines();
    let ratio = 10f64.powf(0.05);
    let cfg = PushConfig { storage: StoragePolicy { dense_until: 10.0, dense_dt: 0.5, ratio }, ..Default::default() };
    let out = push(&ens, &field, 1e5, &cfg).unwrap();
    for (p, wl) in states[..3].iter().zip(out.worldlines.as_ref().unwrap()) {
        let orc = oracle(&field, &sp, p.x, p.v, 1e5, &times);
        for (t, x, v) in orc {
            let s = wl.samples().iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs())).unwrap();
            assert!((s.t - t).abs() <= 1e-9 * t);
            assert!((s.v - v).max_abs() <= 1e-9, "v at {t}: {:e}", (s.v - v).max_abs());
            assert!((s.x - x).max_abs() <= 1e-9 * t, "x at {t}: {:e}", (s.x - x).max_abs());
        }
    }
}

#[test]
fn doubling_charge_doubles_slope() {
    let base = profile();
    let prof = SelfSimilarProfile { uniform: base.uniform * 0.01, charge: Some(RadialCharge { q: 5e-4, radius: 0.5 }), ..base };
    let field = SelfSimilarField::new(prof, 2.0).unwrap();
    let mut slopes = Vec::new();
    for e in [0.5, 1.0] {
        let sp = Species::new("p", 1.0, e).unwrap();
        let ens = ParticleEnsemble::new(sp.clone(), initial_states()[..2].to_vec(), 0.0, 2.0).unwrap().with_worldlines();
        let out = push(&ens, &field, 1e9, &PushConfig::default()).unwrap();
        let wl = &out.worldlines.as_ref().unwrap()[1];
        let am = asymptotic_momentum(wl, 1e3).unwrap();
        slopes.push(drift_fit(wl, &sp, am.extrapolated, (1e3, 1e6)).unwrap().b.norm());
    }
    let ratio = slopes[1] / slopes[0];
    assert!((ratio - 2.0).abs() <= 0.04, "ratio {ratio}");
}

#[test]
fn zero_field_control_slope() {
    let sp = Species::new("p", 1.0, 1.0).unwrap();
    let ens = ParticleEnsemble::new(sp.clone(), initial_states(), 0.0, 2.0).unwrap().with_worldlines();
    let out = push(&ens, &ZeroField { k: 2.0 }, 1e6, &PushConfig::default()).unwrap();
    for wl in out.worldlines.as_ref().unwrap() {
        let am = asymptotic_momentum(wl, 1e3).unwrap();
        let fit = drift_fit(wl, &sp, am.extrapolated, (1e3, 1e6)).unwrap();
        assert!(fit.b.norm() <= 1e-8, "{:e}", fit.b.norm());
    }
}

#[test]
fn momentum_cauchy_rate_is_inverse_time() {
    let sp = Species::new("p", 1.0, 1.0).unwrap();
    let field = SelfSimilarField::new(profile(), 2.0).unwrap();
    let ens = ParticleEnsemble::new(sp, initial_states()[..1].to_vec(), 0.0, 2.0).unwrap().with_worldlines();
    let out = push(&ens, &field, 1e7, &PushConfig::default()).unwrap();
    let wl = &out.worldlines.as_ref().unwrap()[0];
    let ts: Vec<f64> = (0..8).map(|i| 1e3 * 2f64.powi(i)).collect();
    let d: Vec<f64> = ts.iter().map(|&t| (wl.at(t).unwrap().v - wl.at(2.0 * t).unwrap().v).norm()).collect();
    let n = ts.len() as f64;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = d.iter().map(|x| x.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let slope = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() <= 0.1, "power {slope}");
    for s in wl.samples() {
        assert!(s.v.norm() <= 1.0);
    }
}
