//! Characteristics of the Vlasov equation: weighted particles pushed by the
//! Lorentz force, stored worldlines, asymptotic momenta, logarithmic drift
//! fits and boosted constant-time slices.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fieldmodels::FieldModel;
use crate::kinematics::{energy_m, hat_jacobian_apply, hat_m, Species};
use crate::lorentz::{activation_time, decompose, FourVector, LorentzTransform};
use crate::math::{abs, exp, floor, ln, powf, sqrt, CompensatedSum, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub x: Vec3,
    pub v: Vec3,
    pub w: f64,
}

impl ParticleState {
    pub fn new(x: Vec3, v: Vec3, w: f64) -> Result<Self> {
        if !(x.is_finite() && v.is_finite() && w.is_finite()) {
            return Err(Error::Validation("particle state must be finite"));
        }
        if w < 0.0 {
            return Err(Error::Validation("particle weight must be nonnegative"));
        }
        Ok(Self { x, v, w })
    }
}

/// One stored point `(t, x(t), v(t))` of a characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
}

/// Time-ordered samples of a single characteristic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Worldline {
    samples: Vec<Sample>,
}

impl Worldline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Validation("worldline samples must be strictly increasing in time"));
        }
        Ok(Self { samples })
    }

    pub fn push(&mut self, s: Sample) {
        match self.samples.last() {
            Some(last) if s.t <= last.t => {}
            _ => self.samples.push(s),
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Linear interpolation in `t`.
    pub fn at(&self, t: f64) -> Result<Sample> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return Err(Error::Precondition("requested time outside the stored worldline"));
        }
        let j = s.partition_point(|p| p.t <= t).saturating_sub(1).min(s.len().saturating_sub(2));
        if s.len() == 1 {
            return Ok(s[0]);
        }
        let (a, b) = (s[j], s[j + 1]);
        let f = (t - a.t) / (b.t - a.t);
        Ok(Sample { t, x: a.x + (b.x - a.x) * f, v: a.v + (b.v - a.v) * f })
    }

    /// Bound on the linear-interpolation error of positions, from second
    /// divided differences: `max h²/8 · |x''|`.
    pub fn interpolation_error_bound(&self) -> f64 {
        let s = &self.samples;
        let mut worst = 0.0_f64;
        for w in s.windows(3) {
            let (h0, h1) = (w[1].t - w[0].t, w[2].t - w[1].t);
            let d0 = (w[1].x - w[0].x) / h0;
            let d1 = (w[2].x - w[1].x) / h1;
            let second = (d1 - d0) / (0.5 * (h0 + h1));
            let h = h0.max(h1);
            worst = worst.max(h * h / 8.0 * second.norm());
        }
        worst
    }
}

/// Uniform storage up to `dense_until`, geometric (`ratio`) afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoragePolicy {
    pub dense_until: f64,
    pub dense_dt: f64,
    pub ratio: f64,
}

impl Default for StoragePolicy {
    fn default() -> Self {
        Self { dense_until: 10.0, dense_dt: 0.1, ratio: 1.1 }
    }
}

impl StoragePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.dense_until > 0.0 && self.dense_dt > 0.0 && self.ratio > 1.0) {
            return Err(Error::Validation("storage policy needs positive spacing and ratio > 1"));
        }
        Ok(())
    }

    /// First storage time strictly after `t`.
    pub fn next_after(&self, t: f64) -> f64 {
        if t < self.dense_until {
            let n = floor(t / self.dense_dt) + 1.0;
            let mut next = n * self.dense_dt;
            if next <= t {
                next += self.dense_dt;
            }
            return next.min(self.dense_until);
        }
        let n = floor(ln(t / self.dense_until) / ln(self.ratio)) + 1.0;
        let mut next = self.dense_until * powf(self.ratio, n);
        while next <= t {
            next *= self.ratio;
        }
        next
    }
}

/// Adaptive Dormand–Prince 5(4) settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    Adaptive(AdaptiveConfig),
    /// Relativistic Boris pusher, drift–kick–drift, with maximal step `dt`.
    Boris {
        dt: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushConfig {
    pub integrator: Integrator,
    pub storage: StoragePolicy,
}

impl Default for PushConfig {
    fn default() -> Self {
        Self { integrator: Integrator::Adaptive(AdaptiveConfig::default()), storage: StoragePolicy::default() }
    }
}

/// Weighted particles of one species.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub species: Species,
    pub particles: Vec<ParticleState>,
    pub time: f64,
    /// Support constant `k`: initial data live in `|x| ≤ k, |v| ≤ k`.
    pub support_k: f64,
    pub worldlines: Option<Vec<Worldline>>,
}

impl ParticleEnsemble {
    pub fn new(species: Species, particles: Vec<ParticleState>, time: f64, support_k: f64) -> Result<Self> {
        if !(support_k.is_finite() && support_k > 0.0) {
            return Err(Error::Validation("support constant k must be positive"));
        }
        if !time.is_finite() {
            return Err(Error::Validation("ensemble time must be finite"));
        }
        Ok(Self { species, particles, time, support_k, worldlines: None })
    }

    /// Starts worldline storage from the current state.
    pub fn with_worldlines(mut self) -> Self {
        let t = self.time;
        self.worldlines = Some(self.particles.iter().map(|p| Worldline { samples: alloc::vec![Sample { t, x: p.x, v: p.v }] }).collect());
        self
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        let mut s = CompensatedSum::default();
        for p in &self.particles {
            s.add(p.w);
        }
        s.value()
    }

    /// `max |v|` over particles, the empirical `β`.
    pub fn max_momentum(&self) -> f64 {
        self.particles.iter().fold(0.0, |m, p| m.max(p.v.norm()))
    }

    /// `max (|x| − β̂ t)` for the given `β̂`, to be compared with `k`.
    pub fn support_excess(&self, beta_hat: f64) -> f64 {
        self.particles.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.x.norm() - beta_hat * self.time))
    }
}

/// Lorentz force `e(E + v̂×B)` at `(t, x)`.
fn force(field: &dyn FieldModel, species: &Species, t: f64, x: Vec3, v: Vec3) -> Result<Vec3> {
    let em = field.evaluate(t, x)?;
    let vh = hat_m(v, species.mass());
    Ok((em.e + vh.cross(em.b)) * species.charge())
}

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

type State6 = [f64; 6];

/// Right-hand side in the drift-free variables `(w, v)`, `w = x − t·v̂(v)`.
fn rhs(field: &dyn FieldModel, species: &Species, t: f64, y: &State6) -> Result<State6> {
    let m = species.mass();
    let w = Vec3([y[0], y[1], y[2]]);
    let v = Vec3([y[3], y[4], y[5]]);
    let x = w + hat_m(v, m) * t;
    let a = force(field, species, t, x, v)?;
    let dw = hat_jacobian_apply(v, m, a) * (-t);
    Ok([dw[0], dw[1], dw[2], a[0], a[1], a[2]])
}

fn to_state(t: f64, x: Vec3, v: Vec3, m: f64) -> State6 {
    let w = x - hat_m(v, m) * t;
    [w[0], w[1], w[2], v[0], v[1], v[2]]
}

fn from_state(t: f64, y: &State6, m: f64) -> (Vec3, Vec3) {
    let v = Vec3([y[3], y[4], y[5]]);
    let x = Vec3([y[0], y[1], y[2]]) + hat_m(v, m) * t;
    (x, v)
}

/// Integrates one characteristic from `t0` to `t1 ≥ t0` with DOPRI5,
/// landing exactly on every time in `stops` (sorted, within `(t0, t1]`)
/// and calling `visit` there.
fn dopri_segmented(
    field: &dyn FieldModel,
    species: &Species,
    cfg: &AdaptiveConfig,
    t0: f64,
    x: Vec3,
    v: Vec3,
    stops: &mut dyn Iterator<Item = f64>,
    visit: &mut dyn FnMut(f64, Vec3, Vec3),
) -> Result<(Vec3, Vec3)> {
    let m = species.mass();
    let mut t = t0;
    let mut y = to_state(t, x, v, m);
    let mut h = 1e-3 * t.max(1.0);
    let mut steps = 0usize;
    for stop in stops {
        while t < stop {
            steps += 1;
            if steps > cfg.max_steps {
                return Err(Error::StepSizeUnderflow { t });
            }
            let last = h >= stop - t;
            let hh = if last { stop - t } else { h };
            let mut k = [[0.0; 6]; 7];
            k[0] = rhs(field, species, t, &y)?;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..6 {
                            ys[i] += hh * a * kj[i];
                        }
                    }
                }
                k[s] = rhs(field, species, t + C[s] * hh, &ys)?;
            }
            let mut y5 = y;
            let mut err = 0.0_f64;
            for i in 0..6 {
                let mut d5 = 0.0;
                let mut d4 = 0.0;
                for s in 0..7 {
                    d5 += B5[s] * k[s][i];
                    d4 += B4[s] * k[s][i];
                }
                y5[i] = y[i] + hh * d5;
                let sc = cfg.atol + cfg.rtol * abs(y[i]).max(abs(y5[i]));
                err = err.max(abs(hh * (d5 - d4)) / sc);
            }
            if !err.is_finite() {
                h *= 0.1;
                continue;
            }
            if err <= 1.0 {
                t = if last { stop } else { t + hh };
                y = y5;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * powf(err, -0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) {
                h = hh * fac;
            } else {
                h = h.max(hh * fac);
            }
            if h < 1e-14 * t.max(1.0) {
                return Err(Error::StepSizeUnderflow { t });
            }
        }
        let (xs, vs) = from_state(t, &y, m);
        visit(t, xs, vs);
    }
    Ok(from_state(t, &y, m))
}

/// One reversible drift–kick–drift Boris step of length `h` (which may be
/// negative) starting at time `t`.
pub fn boris_step(field: &dyn FieldModel, species: &Species, t: f64, x: Vec3, v: Vec3, h: f64) -> Result<(Vec3, Vec3)> {
    let m = species.mass();
    let xm = x + hat_m(v, m) * (0.5 * h);
    let em = field.evaluate(t + 0.5 * h, xm)?;
    let v_new = boris_kick(v, em.e, em.b, species.charge(), m, h);
    Ok((xm + hat_m(v_new, m) * (0.5 * h), v_new))
}

/// Boris velocity update for momentum `v` over time `h` in a fixed `(E, B)`.
pub fn boris_kick(v: Vec3, e: Vec3, b: Vec3, charge: f64, mass: f64, h: f64) -> Vec3 {
    let vm = v + e * (0.5 * charge * h);
    let g = energy_m(vm, mass);
    let tv = b * (0.5 * charge * h / g);
    let s = tv * (2.0 / (1.0 + tv.norm_sq()));
    let vp = vm + vm.cross(tv);
    let vplus = vm + vp.cross(s);
    vplus + e * (0.5 * charge * h)
}

/// Sorted stop times in `(t0, t1]`: storage times, the field switch-on
/// and `t1` itself.
fn stop_times(t0: f64, t1: f64, storage: Option<&StoragePolicy>, switch_on: Option<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    if let Some(p) = storage {
        let mut s = p.next_after(t0);
        while s < t1 {
            out.push(s);
            s = p.next_after(s);
        }
    }
    if let Some(ts) = switch_on {
        if ts > t0 && ts < t1 {
            out.push(ts);
        }
    }
    out.push(t1);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    out.dedup();
    out
}

/// Advances one particle from `t0` to `t1`, appending samples to `wl` at
/// the storage times.
pub fn advance_particle(
    field: &dyn FieldModel,
    species: &Species,
    cfg: &PushConfig,
    t0: f64,
    t1: f64,
    state: &mut ParticleState,
    wl: Option<&mut Worldline>,
) -> Result<()> {
    if !(t1 >= t0) {
        return Err(Error::Domain("push needs a nonnegative time step"));
    }
    if t1 == t0 {
        return Ok(());
    }
    let storing = wl.is_some();
    let stops = stop_times(t0, t1, storing.then_some(&cfg.storage), field.switch_on());
    let mut wl = wl;
    let mut record = |t: f64, x: Vec3, v: Vec3| {
        if let Some(w) = wl.as_deref_mut() {
            w.push(Sample { t, x, v });
        }
    };
    match cfg.integrator {
        Integrator::Adaptive(ac) => {
            let (x, v) = dopri_segmented(field, species, &ac, t0, state.x, state.v, &mut stops.into_iter(), &mut record)?;
            state.x = x;
            state.v = v;
        }
        Integrator::Boris { dt } => {
            if !(dt > 0.0) {
                return Err(Error::Validation("Boris step must be positive"));
            }
            let (mut x, mut v) = (state.x, state.v);
            let mut t = t0;
            for stop in stops {
                while t < stop {
                    let h = if stop - t <= dt * (1.0 + 1e-12) { stop - t } else { dt };
                    let (xn, vn) = boris_step(field, species, t, x, v, h)?;
                    x = xn;
                    v = vn;
                    t = if h == stop - t { stop } else { t + h };
                }
                record(t, x, v);
            }
            state.x = x;
            state.v = v;
        }
    }
    Ok(())
}

/// Advances every particle by `dt`; weights are untouched.
pub fn push(ens: &ParticleEnsemble, field: &dyn FieldModel, dt: f64, cfg: &PushConfig) -> Result<ParticleEnsemble> {
    if !(dt > 0.0) {
        return Err(Error::Domain("push needs dt > 0"));
    }
    cfg.storage.validate()?;
    let mut out = ens.clone();
    let t0 = ens.time;
    let t1 = t0 + dt;
    match out.worldlines.as_mut() {
        Some(wls) => {
            for (p, wl) in out.particles.iter_mut().zip(wls.iter_mut()) {
                advance_particle(field, &ens.species, cfg, t0, t1, p, Some(wl))?;
            }
        }
        None => {
            for p in out.particles.iter_mut() {
                advance_particle(field, &ens.species, cfg, t0, t1, p, None)?;
            }
        }
    }
    out.time = t1;
    Ok(out)
}

/// Late-time momentum of a characteristic with convergence estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticMomentum {
    /// `v` at the last stored time.
    pub v_final: Vec3,
    pub t_final: f64,
    /// `sup_{t ≥ t_min} |v(t) − v(t_final)|`.
    pub cauchy: f64,
    /// Richardson estimate `2v(T) − v(T/2)`, removing the `1/t` tail.
    pub extrapolated: Vec3,
}

pub fn asymptotic_momentum(wl: &Worldline, t_min: f64) -> Result<AsymptoticMomentum> {
    let last = *wl.last().ok_or(Error::Precondition("empty worldline"))?;
    let first = wl.first().map_or(last.t, |s| s.t);
    if !(last.t > t_min) || t_min < first {
        return Err(Error::Precondition("worldline does not extend past t_min"));
    }
    let mut cauchy = 0.0_f64;
    for s in wl.samples().iter().filter(|s| s.t >= t_min) {
        cauchy = cauchy.max((s.v - last.v).norm());
    }
    let half = 0.5 * last.t;
    let extrapolated = if half >= first { last.v * 2.0 - wl.at(half)?.v } else { last.v };
    Ok(AsymptoticMomentum { v_final: last.v, t_final: last.t, cauchy, extrapolated })
}

/// Least-squares fit `x(t) − t·v̂(v_∞) ≈ a + b·log t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftFit {
    pub a: Vec3,
    pub b: Vec3,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub window: (f64, f64),
}

pub fn drift_fit(wl: &Worldline, species: &Species, v_inf: Vec3, window: (f64, f64)) -> Result<DriftFit> {
    let (lo, hi) = window;
    if !(lo < hi) || lo < 10.0 {
        return Err(Error::Precondition("drift window needs 10 ≤ t_lo < t_hi"));
    }
    let (first, last) = match (wl.first(), wl.last()) {
        (Some(f), Some(l)) => (f.t, l.t),
        _ => return Err(Error::Precondition("empty worldline")),
    };
    if lo < first || hi > last * (1.0 + 1e-12) {
        return Err(Error::Precondition("drift window exceeds the stored worldline"));
    }
    let vh = hat_m(v_inf, species.mass());
    let pts: Vec<(f64, Vec3)> = wl.samples().iter().filter(|s| s.t >= lo && s.t <= hi).map(|s| (ln(s.t), s.x - vh * s.t)).collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::Singular("fewer than three samples in the drift window"));
    }
    let mean_l = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let mean_y = pts.iter().fold(Vec3::ZERO, |acc, p| acc + p.1) / n as f64;
    let mut sll = 0.0;
    let mut sly = Vec3::ZERO;
    for (l, y) in &pts {
        let d = l - mean_l;
        sll += d * d;
        sly += (*y - mean_y) * d;
    }
    if !(sll > 1e-12 * n as f64) {
        return Err(Error::Singular("drift window too short for a log fit"));
    }
    let b = sly / sll;
    let a = mean_y - b * mean_l;
    let mut rss = 0.0;
    for (l, y) in &pts {
        rss += (*y - a - b * *l).norm_sq();
    }
    Ok(DriftFit { a, b, residual: sqrt(rss / n as f64), window })
}

/// Predicted log-slope `(e/v⁰)(v̂(v̂·𝕃) − 𝕃)` for asymptotic momentum `v`
/// and asymptotic force profile value `l = 𝕃(v/m)`.
pub fn predicted_drift(species: &Species, v: Vec3, l: Vec3) -> Vec3 {
    let m = species.mass();
    let vh = hat_m(v, m);
    (vh * vh.dot(l) - l) * (species.charge() / energy_m(v, m))
}

/// Re-slices one worldline at new-frame time `t_new` under `inv = a⁻¹`,
/// returning the new state and the transformed worldline.
fn slice_worldline(wl: &Worldline, mass: f64, inv: &LorentzTransform, t_new: f64, weight: f64) -> Result<(ParticleState, Worldline)> {
    let s = wl.samples();
    if s.len() < 2 {
        return Err(Error::Precondition("worldline too short for a boosted slice"));
    }
    let tau = |p: &Sample| inv.time_of(FourVector::new(p.t, p.x));
    if tau(&s[0]) > t_new {
        return Err(Error::Domain("slice intersects the unextended region"));
    }
    let tol = 1e-12 * t_new.abs().max(1.0);
    let tau_last = tau(&s[s.len() - 1]);
    if tau_last < t_new - tol {
        return Err(Error::Precondition("worldline too short: rerun to a later time"));
    }
    let j = if tau_last <= t_new {
        s.len() - 2
    } else {
        let mut lo = 0usize;
        let mut hi = s.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if tau(&s[mid]) <= t_new {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let (a, b) = (s[j], s[j + 1]);
    let (ta, tb) = (tau(&a), tau(&b));
    let f = if tb > ta { ((t_new - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 1.0 };
    let event = FourVector::new(a.t + (b.t - a.t) * f, a.x + (b.x - a.x) * f);
    let v = a.v + (b.v - a.v) * f;
    let x_new = inv.space_of(event);
    let v_new = inv.space_of(FourVector::new(energy_m(v, mass), v));
    let mut out = Worldline::new();
    for p in s {
        let ev = inv.apply(FourVector::new(p.t, p.x));
        let mom = inv.space_of(FourVector::new(energy_m(p.v, mass), p.v));
        out.push(Sample { t: ev.t, x: ev.x, v: mom });
    }
    Ok((ParticleState { x: x_new, v: v_new, w: weight }, out))
}

/// Synchronises the stored worldlines on the constant-time hyperplane
/// `t_new` of the frame transformed by `a`, realising `f^A(t_new, ·, ·)`
/// with `f^A(t, x, v) = f(A(t, x), Aˢ(v⁰, v))`.
///
/// The output carries the transformed worldlines, so slicing again with
/// `a⁻¹` recovers the original hyperplane.
pub fn boosted_slice(ens: &ParticleEnsemble, a: &LorentzTransform, t_new: f64) -> Result<ParticleEnsemble> {
    let wls =
        ens.worldlines.as_ref().ok_or(Error::Precondition("ensemble has no stored worldlines; rerun with worldline storage enabled"))?;
    let t_a = activation_time(a, ens.support_k)?;
    if t_new < t_a {
        return Err(Error::Domain("slice intersects the unextended region (t_new < T_A)"));
    }
    let inv = a.inverse();
    let mut particles = Vec::with_capacity(ens.len());
    let mut new_wls = Vec::with_capacity(ens.len());
    for (p, wl) in ens.particles.iter().zip(wls) {
        let (state, nwl) = slice_worldline(wl, ens.species.mass(), &inv, t_new, p.w)?;
        particles.push(state);
        new_wls.push(nwl);
    }
    let phi = decompose(a)?.phi;
    Ok(ParticleEnsemble {
        species: ens.species.clone(),
        particles,
        time: t_new,
        support_k: ens.support_k * exp(phi),
        worldlines: Some(new_wls),
    })
}

/// Public single-worldline form of [`boosted_slice`] for callers that
/// parallelise over particles.
pub fn boosted_slice_particle(
    wl: &Worldline,
    species: &Species,
    a: &LorentzTransform,
    t_new: f64,
    weight: f64,
) -> Result<(ParticleState, Worldline)> {
    slice_worldline(wl, species.mass(), &a.inverse(), t_new, weight)
}
