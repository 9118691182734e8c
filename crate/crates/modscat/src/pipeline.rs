//! Scenario execution: initial data, transport or self-consistent
//! evolution, extraction, classification and artifact output.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use modscat_core::asymptotics::{
    asymptotic_momenta, classify_scattering, enclosed_charge_particles, extract_field_profile, extract_q, find_witness, gauss_identity,
    rest_frame_pipeline, verify_boosted_extraction, FieldProfile, IdentityQuadrature, LProfile, ProfileField, QProfile, SnapshotProfile,
    Thresholds, VelocityGrid,
};
use modscat_core::faraday::EMField;
use modscat_core::fieldmodels::{FieldModel, RadialCharge, SelfSimilarField, SelfSimilarProfile, UniformField, ZeroField};
use modscat_core::kinematics::hat_m;
use modscat_core::lorentz::{activation_time, boost_x, embed_rotation, LorentzTransform};
use modscat_core::maxwell::{GridSnapshot, GridSpec, Monitor, PicConfig, PicRun};
use modscat_core::transport::{
    advance_particle, asymptotic_momentum, boosted_slice, drift_fit, predicted_drift, AdaptiveConfig, DriftFit, Integrator,
    ParticleEnsemble, PushConfig, StoragePolicy, Worldline,
};
use modscat_core::{Mat3, Vec3};
use rayon::prelude::*;

use crate::config::{FieldMode, IntegratorKind, Scenario};
use crate::error::{Context, ErrorKind, RunError, RunResult};
use crate::formats;
use crate::init::build_ensembles;
use crate::report::*;

pub const OUTPUT_ROOT_ENV: &str = "MODSCAT_OUTPUT_ROOT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn arr(v: Vec3) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn push_config(sc: &Scenario) -> PushConfig {
    let it = &sc.integrator;
    let integrator = match it.kind {
        IntegratorKind::Adaptive => Integrator::Adaptive(AdaptiveConfig { rtol: it.rtol, atol: it.atol, ..AdaptiveConfig::default() }),
        IntegratorKind::Boris => Integrator::Boris { dt: it.dt.unwrap_or(0.1) },
    };
    PushConfig { integrator, storage: StoragePolicy { dense_until: it.dense_until, dense_dt: it.dense_dt, ratio: it.storage_ratio } }
}

fn self_similar_profile(sc: &Scenario) -> SelfSimilarProfile {
    let f = &sc.field;
    SelfSimilarProfile {
        uniform: v3(f.uniform),
        charge: (f.charge_q != 0.0).then_some(RadialCharge { q: f.charge_q, radius: f.charge_radius }),
        omega: v3(f.omega),
        support: f.support,
        r_in: f.r_in,
        t_on: f.t_on,
    }
}

fn prescribed_field(sc: &Scenario) -> RunResult<Arc<dyn FieldModel>> {
    Ok(match sc.field.mode {
        FieldMode::Zero => Arc::new(ZeroField { k: sc.k }),
        FieldMode::Uniform => Arc::new(UniformField { field: EMField::new(v3(sc.field.e), v3(sc.field.b)), k: sc.k }),
        FieldMode::SelfSimilar => {
            Arc::new(SelfSimilarField::new(self_similar_profile(sc), sc.k).ctx("fieldmodels", "SelfSimilarField::new")?)
        }
        FieldMode::SelfConsistent => unreachable!("self-consistent runs have no prescribed field"),
    })
}

/// Advances every particle from the ensemble time to `t1` in parallel,
/// storing worldlines when present. Results do not depend on the worker
/// count.
pub fn push_parallel(ens: &ParticleEnsemble, field: &dyn FieldModel, t1: f64, cfg: &PushConfig) -> RunResult<ParticleEnsemble> {
    let t0 = ens.time;
    let species = &ens.species;
    let mut out = ens.clone();
    match out.worldlines.as_mut() {
        Some(wls) => {
            let res: Vec<_> = out
                .particles
                .par_iter_mut()
                .zip(wls.par_iter_mut())
                .map(|(p, wl)| advance_particle(field, species, cfg, t0, t1, p, Some(wl)))
                .collect();
            res.into_iter().collect::<modscat_core::Result<Vec<()>>>().ctx("transport", "push")?;
        }
        None => {
            let res: Vec<_> = out.particles.par_iter_mut().map(|p| advance_particle(field, species, cfg, t0, t1, p, None)).collect();
            res.into_iter().collect::<modscat_core::Result<Vec<()>>>().ctx("transport", "push")?;
        }
    }
    out.time = t1;
    Ok(out)
}

/// State of every particle at `t`, interpolated on its worldline.
fn ensemble_at(ens: &ParticleEnsemble, t: f64) -> RunResult<ParticleEnsemble> {
    let wls = ens
        .worldlines
        .as_deref()
        .ok_or_else(|| RunError::new(ErrorKind::Precondition, "transport", "ensemble_at", "no stored worldlines"))?;
    let mut out = ParticleEnsemble { worldlines: None, time: t, ..ens.clone() };
    for (p, wl) in out.particles.iter_mut().zip(wls) {
        let s = wl.at(t).ctx("transport", "Worldline::at")?;
        p.x = s.x;
        p.v = s.v;
    }
    Ok(out)
}

/// First `n` particles of an ensemble, with fresh worldline storage.
fn subset(ens: &ParticleEnsemble, n: usize) -> ParticleEnsemble {
    let n = n.min(ens.len());
    ParticleEnsemble { particles: ens.particles[..n].to_vec(), worldlines: None, ..ens.clone() }.with_worldlines()
}

fn fit_records(
    ens: &[ParticleEnsemble],
    window: (f64, f64),
    profile: Option<&dyn FieldProfile>,
) -> RunResult<(Vec<FitRecord>, Vec<DriftFit>)> {
    let mut recs = Vec::new();
    let mut fits = Vec::new();
    for e in ens {
        let wls = e.worldlines.as_deref().unwrap_or(&[]);
        for (i, wl) in wls.iter().enumerate() {
            let am = asymptotic_momentum(wl, window.0).ctx("transport", "asymptotic_momentum")?;
            let v_inf = am.extrapolated;
            let fit = drift_fit(wl, &e.species, v_inf, window).ctx("transport", "drift_fit")?;
            let predicted = match profile {
                Some(p) => Some(predicted_drift(&e.species, v_inf, p.l_at(v_inf / e.species.mass()).ctx("asymptotics", "profile")?)),
                None => None,
            };
            let (rel, ang) = match predicted {
                Some(p) if p.norm() > 0.0 && fit.b.norm() > 0.0 => {
                    let cos = (fit.b.dot(p) / (fit.b.norm() * p.norm())).clamp(-1.0, 1.0);
                    (Some((fit.b.norm() - p.norm()).abs() / p.norm()), Some(cos.acos().to_degrees()))
                }
                _ => (None, None),
            };
            recs.push(FitRecord {
                species: e.species.label().to_string(),
                particle: i,
                v_inf: arr(v_inf),
                momentum_cauchy: am.cauchy,
                slope: arr(fit.b),
                slope_norm: fit.b.norm(),
                predicted: predicted.map(arr),
                predicted_norm: predicted.map(|p| p.norm()),
                relative_error: rel,
                angle_deg: ang,
                residual: fit.residual,
            });
            fits.push(fit);
        }
    }
    Ok((recs, fits))
}

fn species_summaries(ens: &[ParticleEnsemble]) -> Vec<SpeciesSummary> {
    ens.iter()
        .map(|e| {
            let beta = e.max_momentum();
            SpeciesSummary {
                label: e.species.label().to_string(),
                mass: e.species.mass(),
                charge: e.species.charge(),
                count: e.len(),
                total_weight: e.total_weight(),
                beta,
                beta_hat: beta / (e.species.mass().powi(2) + beta * beta).sqrt(),
            }
        })
        .collect()
}

fn extraction_records(profiles: &[QProfile]) -> RunResult<Vec<ExtractionRecord>> {
    let mut out: Vec<ExtractionRecord> = Vec::new();
    for (i, q) in profiles.iter().enumerate() {
        let cauchy = if i > 0 { Some(q.cauchy_difference(&profiles[i - 1]).ctx("asymptotics", "cauchy_difference")?) } else { None };
        let scaled = cauchy.map(|d| {
            let s = 2.0 + profiles[i - 1].time;
            s * d / s.ln().powi(5)
        });
        out.push(ExtractionRecord {
            time: q.time,
            max_abs_q: q.max_abs_total(),
            total_charge: q.total_charge(),
            cauchy,
            cauchy_scaled: scaled,
        });
    }
    Ok(out)
}

fn identity_records(sc: &Scenario, q: &QProfile, ens: &[ParticleEnsemble], field: &dyn FieldModel, t: f64) -> Vec<IdentityRecord> {
    let snap = SnapshotProfile { field, time: t };
    let quad = IdentityQuadrature::default();
    sc.extraction
        .deltas
        .iter()
        .map(|&d| {
            let lhs_particles = enclosed_charge_particles(ens, d);
            match gauss_identity(q, &snap, d, &quad) {
                Ok((lhs, rhs)) => {
                    let scale = lhs_particles.abs().max(rhs.abs());
                    IdentityRecord {
                        delta: d,
                        lhs_quadrature: Some(lhs),
                        lhs_particles,
                        rhs: Some(rhs),
                        abs_difference: Some((lhs_particles - rhs).abs()),
                        relative_difference: (scale > 0.0).then(|| (lhs_particles - rhs).abs() / scale),
                        error: None,
                    }
                }
                Err(e) => IdentityRecord {
                    delta: d,
                    lhs_quadrature: None,
                    lhs_particles,
                    rhs: None,
                    abs_difference: None,
                    relative_difference: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn rest_frame_record(q: &QProfile, threshold: f64) -> RestFrameRecord {
    match rest_frame_pipeline(q, threshold) {
        Ok(r) => RestFrameRecord {
            v_star: Some(arr(r.v_star)),
            q_star: Some(r.q_star),
            q_rest: Some(r.q_rest),
            expected: Some(r.expected),
            relative_error: Some(r.relative_error),
            error: None,
        },
        Err(e) => {
            RestFrameRecord { v_star: None, q_star: None, q_rest: None, expected: None, relative_error: None, error: Some(e.to_string()) }
        }
    }
}

fn monitor_summary(ms: &[Monitor], steps: usize, charge_scale: f64) -> MonitorSummary {
    let first = ms[0];
    let last = *ms.last().unwrap();
    let half = ms.len() / 2;
    let (early, late) = ms.split_at(half.max(1));
    let maxf = |s: &[Monitor], f: fn(&Monitor) -> f64| s.iter().map(f).fold(0.0_f64, f64::max);
    let decay_early = maxf(early, |m| m.decay);
    let decay_late = maxf(late, |m| m.decay);
    let gauss_drift = ms.iter().map(|m| (m.gauss_residual - first.gauss_residual).abs()).fold(0.0_f64, f64::max);
    MonitorSummary {
        steps,
        count: ms.len(),
        charge_scale,
        gauss_initial: first.gauss_residual,
        gauss_max: maxf(ms, |m| m.gauss_residual),
        gauss_final: last.gauss_residual,
        gauss_relative_drift: if charge_scale > 0.0 { gauss_drift / charge_scale } else { gauss_drift },
        div_b_max: maxf(ms, |m| m.div_b),
        energy_initial: first.energy,
        energy_final: last.energy,
        energy_relative_drift: if first.energy != 0.0 { (last.energy - first.energy).abs() / first.energy.abs() } else { 0.0 },
        decay_early_max: decay_early,
        decay_late_max: decay_late,
        decay_bounded: decay_late <= 2.0 * decay_early.max(f64::MIN_POSITIVE),
    }
}

fn classify(
    sc: &Scenario,
    fits: &[DriftFit],
    control: &[DriftFit],
    q: &QProfile,
    l: &LProfile,
) -> RunResult<(ClassifierRecord, Thresholds)> {
    let th = Thresholds::from_noise(q, control, sc.extraction.tol_l);
    let rep = classify_scattering(fits, q, Some(l), th).ctx("asymptotics", "classify_scattering")?;
    Ok((
        ClassifierRecord {
            verdict: rep.verdict.as_str().to_string(),
            max_q: rep.max_q,
            charge_indicator: rep.charge_indicator,
            max_slope: rep.max_slope,
            noise_q: th.noise_q,
            noise_slope: th.noise_slope,
            tol_q: th.tol_q,
            tol_slope: th.tol_slope,
            tol_l: th.tol_l,
        },
        th,
    ))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> RunResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::io("serialise report", e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| RunError::io("write report", format!("{}: {e}", path.display())))
}

fn mkdir(dir: &Path) -> RunResult<()> {
    fs::create_dir_all(dir).map_err(|e| RunError::io("create output directory", format!("{}: {e}", dir.display())))
}

/// Runs a scenario and writes its artifacts to `out_dir`.
pub fn run_scenario_in(sc: &Scenario, out_dir: &Path) -> RunResult<Report> {
    sc.validate()?;
    mkdir(out_dir)?;
    fs::write(out_dir.join("config.toml"), sc.to_toml()).map_err(|e| RunError::io("write config", e))?;
    let initial = build_ensembles(sc)?;
    formats::write_ensembles(&out_dir.join("ensembles_initial.bin"), &initial)?;
    let vgrid = VelocityGrid::new(sc.extraction.velocity_n, sc.extraction.velocity_half_width).ctx("asymptotics", "VelocityGrid::new")?;
    let window = (sc.extraction.fit_window[0], sc.extraction.fit_window[1]);
    let report = match sc.field.mode {
        FieldMode::SelfConsistent => run_self_consistent(sc, initial, &vgrid, window, out_dir)?,
        _ => run_prescribed(sc, initial, &vgrid, window, out_dir)?,
    };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

/// Runs a scenario under the output root and returns the artifact directory.
pub fn run_scenario(config: &Path) -> RunResult<(PathBuf, Report)> {
    let sc = Scenario::load(config)?;
    let dir = output_root().join(sc.output_name());
    match run_scenario_in(&sc, &dir) {
        Ok(r) => Ok((dir, r)),
        Err(e) => {
            if dir.is_dir() {
                let _ = write_json(&dir.join("error.json"), &e);
            }
            Err(e)
        }
    }
}

fn run_prescribed(
    sc: &Scenario,
    initial: Vec<ParticleEnsemble>,
    vgrid: &VelocityGrid,
    window: (f64, f64),
    dir: &Path,
) -> RunResult<Report> {
    let field = prescribed_field(sc)?;
    let cfg = push_config(sc);
    let t_final = sc.integrator.t_final;
    let finals = initial
        .iter()
        .map(|e| push_parallel(&e.clone().with_worldlines(), field.as_ref(), t_final, &cfg))
        .collect::<RunResult<Vec<_>>>()?;
    formats::write_ensembles(&dir.join("ensembles_final.bin"), &finals)?;
    if sc.integrator.store_worldlines {
        formats::write_worldlines(&dir.join("worldlines.bin"), &finals)?;
    }

    let mut profiles = Vec::new();
    let mut snapshots = Vec::new();
    for &t in &sc.extraction.times {
        let at = finals.iter().map(|e| ensemble_at(e, t)).collect::<RunResult<Vec<_>>>()?;
        profiles.push(extract_q(&at, vgrid).ctx("asymptotics", "extract_q")?);
        snapshots.push(at);
    }
    let t_last = *sc.extraction.times.last().unwrap();
    let l = extract_field_profile(field.as_ref(), t_last, vgrid).ctx("asymptotics", "extract_field_profile")?;

    let ssp = (sc.field.mode == FieldMode::SelfSimilar).then(|| self_similar_profile(sc));
    let fit_ens: Vec<ParticleEnsemble> = finals
        .iter()
        .map(|e| ParticleEnsemble {
            particles: e.particles[..sc.extraction.fit_particles.min(e.len())].to_vec(),
            worldlines: e.worldlines.as_ref().map(|w| w[..sc.extraction.fit_particles.min(e.len())].to_vec()),
            ..e.clone()
        })
        .collect();
    let (fit_recs, fits) = fit_records(&fit_ens, window, ssp.as_ref().map(|p| p as &dyn FieldProfile))?;
    let control = initial
        .iter()
        .map(|e| push_parallel(&subset(e, sc.extraction.fit_particles), &ZeroField { k: sc.k }, window.1, &cfg))
        .collect::<RunResult<Vec<_>>>()?;
    let (_, control_fits) = fit_records(&control, window, None)?;

    finish_report(
        sc,
        dir,
        &initial,
        &finals,
        profiles,
        &snapshots.last().unwrap().clone(),
        l,
        field.as_ref(),
        t_last,
        fit_recs,
        fits,
        control_fits,
        None,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    sc: &Scenario,
    dir: &Path,
    initial: &[ParticleEnsemble],
    finals: &[ParticleEnsemble],
    profiles: Vec<QProfile>,
    at_last: &[ParticleEnsemble],
    l: LProfile,
    field: &dyn FieldModel,
    t_last: f64,
    fit_recs: Vec<FitRecord>,
    fits: Vec<DriftFit>,
    control_fits: Vec<DriftFit>,
    monitors: Option<MonitorSummary>,
) -> RunResult<Report> {
    let q_last = profiles.last().unwrap().clone();
    formats::write_q_profile(&dir.join("q_profile.msprof"), &q_last)?;
    formats::write_l_profile(&dir.join("l_profile.msprof"), &l)?;
    formats::export_q_csv(&dir.join("q_profile.csv"), &q_last)?;
    formats::export_l_csv(&dir.join("l_profile.csv"), &l)?;
    let rows: Vec<Vec<f64>> = fit_recs
        .iter()
        .map(|f| {
            let mut r = vec![f.particle as f64];
            r.extend(f.v_inf);
            r.extend(f.slope);
            r.extend(f.predicted.unwrap_or([f64::NAN; 3]));
            r.push(f.residual);
            r
        })
        .collect();
    formats::export_table(
        &dir.join("fits.csv"),
        &["particle", "vinf0", "vinf1", "vinf2", "b0", "b1", "b2", "pred0", "pred1", "pred2", "residual"],
        &rows,
    )?;
    let (classifier, th) = classify(sc, &fits, &control_fits, &q_last, &l)?;
    let witness = find_witness(&q_last, &l, th.tol_q, th.tol_l).ctx("asymptotics", "find_witness")?.map(arr);
    let identity = identity_records(sc, &q_last, at_last, field, t_last);
    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: sc.name.clone(),
        config: sc.clone(),
        species: species_summaries(initial),
        final_species: species_summaries(finals),
        extraction: extraction_records(&profiles)?,
        field_profile: FieldProfileRecord { time: l.time, max_abs_l: l.max_abs_l(), skipped: l.skipped },
        fits: fit_recs,
        control_max_slope: control_fits.iter().map(|f| f.b.norm()).fold(0.0, f64::max),
        classifier,
        witness,
        identity,
        rest_frame: rest_frame_record(&q_last, th.tol_q),
        monitors,
    })
}

fn run_self_consistent(
    sc: &Scenario,
    initial: Vec<ParticleEnsemble>,
    vgrid: &VelocityGrid,
    window: (f64, f64),
    dir: &Path,
) -> RunResult<Report> {
    let g = sc.grid.as_ref().expect("validated grid");
    let spec = GridSpec::cube(g.n, g.half_width).ctx("maxwell", "GridSpec::cube")?;
    let pic_cfg = PicConfig { dt: g.courant * spec.courant_limit(), k: sc.k, monitor_every: g.monitor_every, conserving: true };
    let mut tracked = Vec::new();
    for (s, e) in initial.iter().enumerate() {
        for i in 0..sc.extraction.fit_particles.min(e.len()) {
            tracked.push((s, i));
        }
    }
    let mut run = PicRun::new(initial.clone(), spec, pic_cfg, &tracked).ctx("maxwell", "init_constrained")?;
    let mut profiles = Vec::new();
    for &t in &sc.extraction.times {
        run.run_until(t).ctx("maxwell", "field_step")?;
        profiles.push(extract_q(&run.ensembles(), vgrid).ctx("asymptotics", "extract_q")?);
    }
    run.run_until(sc.integrator.t_final).ctx("maxwell", "field_step")?;
    let finals = run.ensembles();
    let t_end = run.time();
    formats::write_ensembles(&dir.join("ensembles_final.bin"), &finals)?;
    formats::write_field(&dir.join("field_final.bin"), &run.grid)?;
    formats::export_monitors_csv(&dir.join("monitors.csv"), &run.monitors)?;
    let charge_scale = run.charge_scale();
    let monitors = monitor_summary(&run.monitors, run.steps(), charge_scale);

    let snapshot = GridSnapshot { grid: run.grid.clone(), k: sc.k };
    let l = extract_field_profile(&snapshot, t_end, vgrid).ctx("asymptotics", "extract_field_profile")?;

    let cfg = push_config(sc);
    let extension = ProfileField { profile: l.clone(), t_on: t_end, k: sc.k };
    let mut cont = Vec::new();
    let mut control = Vec::new();
    for e in &finals {
        let sub = subset(e, sc.extraction.fit_particles);
        cont.push(push_parallel(&sub, &extension, g.continuation_horizon, &cfg)?);
        control.push(push_parallel(&sub, &ZeroField { k: sc.k }, g.continuation_horizon, &cfg)?);
    }
    let (fit_recs, fits) = fit_records(&cont, window, Some(&l))?;
    let (_, control_fits) = fit_records(&control, window, None)?;
    let mut tracks = finals.clone();
    for (s, e) in tracks.iter_mut().enumerate() {
        let wls: Vec<Worldline> = run.tracks.iter().filter(|t| t.species == s).map(|t| t.worldline.clone()).collect();
        e.particles.truncate(wls.len());
        e.worldlines = Some(wls);
    }
    formats::write_worldlines(&dir.join("worldlines_tracked.bin"), &tracks)?;
    finish_report(sc, dir, &initial, &finals, profiles, &finals, l, &snapshot, t_end, fit_recs, fits, control_fits, Some(monitors))
}

/// Transform `boost_x(φ)` optionally followed by a rotation.
pub fn boost_transform(phi: f64, rotation: Option<[f64; 4]>) -> RunResult<LorentzTransform> {
    let b = boost_x(phi).ctx("lorentz", "boost_x")?;
    match rotation {
        None => Ok(b),
        Some(r) => {
            let m = Mat3::axis_angle(Vec3::new(r[0], r[1], r[2]), r[3]);
            Ok(embed_rotation(&m).ctx("lorentz", "embed_rotation")?.compose(&b))
        }
    }
}

/// Boosted slices of a stored prescribed-field run and the comparison
/// against the transformation law.
pub fn boost_rerun(dir: &Path, phi: f64) -> RunResult<(PathBuf, BoostReport)> {
    let cfg_path = dir.join("config.toml");
    let sc = Scenario::load(&cfg_path)?;
    if sc.field.mode == FieldMode::SelfConsistent {
        return Err(RunError::new(
            ErrorKind::Precondition,
            "transport",
            "boosted_slice",
            "boosts apply to prescribed-field runs only; self-consistent runs store tracked characteristics but no full worldlines",
        ));
    }
    let wl_path = dir.join("worldlines.bin");
    if !wl_path.is_file() {
        return Err(RunError::new(
            ErrorKind::Precondition,
            "transport",
            "boosted_slice",
            "the run has no stored worldlines; rerun with integrator.store_worldlines = true",
        ));
    }
    let finals = formats::read_ensembles(&dir.join("ensembles_final.bin"))?;
    let wls = formats::read_worldlines(&wl_path)?;
    let mut ens = Vec::new();
    for (e, (label, w)) in finals.into_iter().zip(wls) {
        if label != e.species.label() || w.len() != e.len() {
            return Err(RunError::new(ErrorKind::Runtime, "formats", "read_worldlines", "worldlines do not match the stored ensembles"));
        }
        ens.push(ParticleEnsemble { worldlines: Some(w), ..e });
    }
    let rotation = sc.boost.as_ref().and_then(|b| b.rotation);
    let a = boost_transform(phi, rotation)?;
    let k = sc.k;
    let t_a = activation_time(&a, k).ctx("lorentz", "activation_time")?;
    let horizon = ens
        .iter()
        .flat_map(|e| e.worldlines.as_deref().unwrap_or(&[]).iter().filter_map(|w| w.last().map(|s| s.t)))
        .fold(f64::INFINITY, f64::min);
    let reach = 0.5 * horizon * (-phi.abs()).exp() - t_a;
    let times: Vec<f64> = match sc.boost.as_ref().map(|b| b.times.clone()).filter(|t| !t.is_empty()) {
        Some(t) => t,
        None => [1e-3, 1e-2, 1e-1, 1.0].iter().map(|f| f * reach).filter(|t| *t >= t_a).collect(),
    };
    if times.is_empty() || reach < t_a {
        return Err(RunError::new(
            ErrorKind::Precondition,
            "transport",
            "boosted_slice",
            format!("activation time T = {t_a:e} exceeds the stored horizon {horizon:e}; store longer worldlines or reduce phi"),
        ));
    }
    let start = ens
        .iter()
        .flat_map(|e| e.worldlines.as_deref().unwrap_or(&[]).iter().filter_map(|w| w.first().map(|s| s.t)))
        .fold(f64::NEG_INFINITY, f64::max);
    let t_min = (horizon / 100.0).max(start);
    let v_inf = ens.iter().map(|e| asymptotic_momenta(e, t_min)).collect::<Result<Vec<_>, _>>().ctx("transport", "asymptotic_momentum")?;
    let vgrid = VelocityGrid::new(sc.extraction.velocity_n, sc.extraction.velocity_half_width).ctx("asymptotics", "VelocityGrid::new")?;
    let rep = verify_boosted_extraction(&ens, &v_inf, &a, &times, &vgrid).map_err(|e| {
        let kind = match e {
            modscat_core::Error::Domain(_) | modscat_core::Error::Precondition(_) => ErrorKind::Precondition,
            _ => ErrorKind::Runtime,
        };
        RunError::new(kind, "asymptotics", "verify_boosted_extraction", e.to_string())
    })?;
    let out = dir.join(format!("boost_phi_{phi}"));
    mkdir(&out)?;
    let t_last = *times.last().unwrap();
    let sliced = ens.iter().map(|e| boosted_slice(e, &a, t_last)).collect::<Result<Vec<_>, _>>().ctx("transport", "boosted_slice")?;
    formats::write_ensembles(&out.join("ensembles_boosted.bin"), &sliced)?;
    let q = extract_q(&sliced, &vgrid).ctx("asymptotics", "extract_q")?;
    formats::write_q_profile(&out.join("q_boosted.msprof"), &q)?;
    formats::export_q_csv(&out.join("q_boosted.csv"), &q)?;
    let report = BoostReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: sc.name.clone(),
        config: sc.clone(),
        phi,
        rotation,
        activation_time: t_a,
        horizon,
        comparisons: rep
            .comparisons
            .iter()
            .map(|c| BoostComparisonRecord { time: c.time, weak_deviation: c.weak_deviation, pointwise_deviation: c.pointwise_deviation })
            .collect(),
        max_weak_deviation: rep.max_weak_deviation,
        boosted_support_k: sliced.first().map_or(k, |e| e.support_k),
        max_boosted_speed: sliced
            .iter()
            .flat_map(|e| e.particles.iter().map(move |p| hat_m(p.v, e.species.mass()).norm()))
            .fold(0.0, f64::max),
    };
    write_json(&out.join("boost_report.json"), &report)?;
    Ok((out, report))
}

/// Reads a run's report.
pub fn load_report(dir: &Path) -> RunResult<serde_json::Value> {
    let path = dir.join("report.json");
    let text = fs::read_to_string(&path).map_err(|e| RunError::io("read report", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::io("parse report", e))
}
