//! Asymptotic observables: charge profiles `Q∞`, field profiles `(𝔼, 𝔹, 𝕃)`,
//! the volume/surface charge identity, the scattering classifier and the
//! transformation law of `Q∞` under Lorentz maps.
//!
//! Profiles live on a cubic grid of unit-mass momenta `u`. A species of
//! mass `m` contributes at `u = v/m`, and
//! `Q∞(u) = Σ_α e_α m_α³ Q∞^α(u)` where `Q∞^α(u)` is the momentum density
//! of `∫ f_α dx` evaluated at `v = m_α u`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::faraday::EMField;
use crate::fieldmodels::{CoulombQ, FieldModel, SelfSimilarProfile};
use crate::kinematics::{check, energy_m, hat_m, japanese, Species};
use crate::lorentz::{boost_to_rest, FourVector, LorentzTransform};
use crate::math::{abs, floor, sqrt, CompensatedSum, Vec3};
use crate::quadrature::{ball_integral, GaussLegendre, SphereRule};
use crate::transport::{boosted_slice, DriftFit, ParticleEnsemble, Worldline};

const FOUR_PI: f64 = 4.0 * core::f64::consts::PI;

/// Cube `[-h, h]³` of unit-mass momenta with `n` cells per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    pub n: usize,
    pub half_width: f64,
}

impl VelocityGrid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation("velocity grid needs at least 2 cells per side"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Validation("velocity grid half-width must be positive"));
        }
        Ok(Self { n, half_width })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        let d = self.spacing();
        d * d * d
    }

    pub fn len(&self) -> usize {
        (self.n + 1).pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.n + 1) + j) * (self.n + 1) + k
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let d = self.spacing();
        let h = self.half_width;
        Vec3::new(-h + i as f64 * d, -h + j as f64 * d, -h + k as f64 * d)
    }

    /// All nodes in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = Vec3> + '_ {
        let n = self.n;
        (0..=n).flat_map(move |i| (0..=n).flat_map(move |j| (0..=n).map(move |k| self.node(i, j, k))))
    }

    /// Largest speed `|û|` such that the whole ball of that speed lies in
    /// the grid.
    pub fn speed_support(&self) -> f64 {
        let h = self.half_width;
        h / sqrt(1.0 + h * h)
    }

    fn locate(&self, u: Vec3) -> Option<([usize; 3], [f64; 3])> {
        let d = self.spacing();
        let mut base = [0usize; 3];
        let mut f = [0.0; 3];
        for c in 0..3 {
            let xi = (u[c] + self.half_width) / d;
            if !(xi >= 0.0 && xi <= self.n as f64) {
                return None;
            }
            let i0 = floor(xi).min((self.n - 1) as f64);
            base[c] = i0 as usize;
            f[c] = xi - i0;
        }
        Some((base, f))
    }

    fn corners(&self, base: [usize; 3], f: [f64; 3]) -> [(usize, f64); 8] {
        let mut out = [(0usize, 0.0); 8];
        let mut m = 0;
        for a in 0..2 {
            let wa = if a == 0 { 1.0 - f[0] } else { f[0] };
            for b in 0..2 {
                let wb = if b == 0 { 1.0 - f[1] } else { f[1] };
                for c in 0..2 {
                    let wc = if c == 0 { 1.0 - f[2] } else { f[2] };
                    out[m] = (self.idx(base[0] + a, base[1] + b, base[2] + c), wa * wb * wc);
                    m += 1;
                }
            }
        }
        out
    }

    /// Trilinear interpolation of nodal values, `None` outside the grid.
    pub fn interpolate(&self, values: &[f64], u: Vec3) -> Option<f64> {
        let (base, f) = self.locate(u)?;
        Some(self.corners(base, f).iter().map(|&(i, w)| w * values[i]).sum())
    }

    fn interpolate_vec(&self, values: &[Vec3], u: Vec3) -> Option<Vec3> {
        let (base, f) = self.locate(u)?;
        Some(self.corners(base, f).iter().fold(Vec3::ZERO, |acc, &(i, w)| acc + values[i] * w))
    }

    /// Whether every boundary node of `values` is zero.
    fn vanishes_on_boundary(&self, values: &[f64]) -> bool {
        let n = self.n;
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    let edge = i == 0 || j == 0 || k == 0 || i == n || j == n || k == n;
                    if edge && values[self.idx(i, j, k)] != 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Profile of one species: `Q∞^α` at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesProfile {
    pub label: String,
    pub mass: f64,
    pub charge: f64,
    pub values: Vec<f64>,
}

impl SpeciesProfile {
    /// `e m³ Q∞^α`, the contribution to the total.
    fn weighted(&self) -> impl Iterator<Item = f64> + '_ {
        let s = self.charge * self.mass * self.mass * self.mass;
        self.values.iter().map(move |v| s * v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QProfile {
    pub grid: VelocityGrid,
    pub species: Vec<SpeciesProfile>,
    pub total: Vec<f64>,
    pub time: f64,
    /// Max-norm difference to a previous extraction, when known.
    pub cauchy: Option<f64>,
}

impl QProfile {
    pub fn zeros(grid: VelocityGrid, time: f64) -> Self {
        Self { grid, species: Vec::new(), total: vec![0.0; grid.len()], time, cauchy: None }
    }

    /// Builds a profile from sampled species values and recomputes the total.
    pub fn from_species(grid: VelocityGrid, species: Vec<SpeciesProfile>, time: f64) -> Result<Self> {
        if species.iter().any(|s| s.values.len() != grid.len()) {
            return Err(Error::Validation("species profile does not match the grid"));
        }
        let mut p = Self { grid, species, total: Vec::new(), time, cauchy: None };
        p.recompute_total();
        Ok(p)
    }

    fn recompute_total(&mut self) {
        let mut total = vec![0.0; self.grid.len()];
        for s in &self.species {
            for (t, v) in total.iter_mut().zip(s.weighted()) {
                *t += v;
            }
        }
        self.total = total;
    }

    pub fn max_abs_total(&self) -> f64 {
        self.total.iter().fold(0.0, |m, v| m.max(abs(*v)))
    }

    /// `∫ Q∞ du` by the nodal sum.
    pub fn total_charge(&self) -> f64 {
        let mut s = CompensatedSum::default();
        for v in &self.total {
            s.add(*v);
        }
        s.value() * self.grid.cell_volume()
    }

    /// Rounding floor of the total: `64 ε max_u Σ_α |e_α| m_α³ Q∞^α(u)`.
    pub fn rounding_floor(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.grid.len() {
            let s: f64 = self.species.iter().map(|p| abs(p.charge) * p.mass * p.mass * p.mass * p.values[i]).sum();
            worst = worst.max(s);
        }
        64.0 * f64::EPSILON * worst
    }

    /// Max-norm distance of the totals.
    pub fn cauchy_difference(&self, other: &QProfile) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Validation("profiles live on different grids"));
        }
        Ok(self.total.iter().zip(&other.total).fold(0.0, |m, (a, b)| m.max(abs(a - b))))
    }
}

/// Bins an ensemble by momentum with cloud-in-cell weights.
pub fn extract_species(ens: &ParticleEnsemble, grid: &VelocityGrid) -> Result<SpeciesProfile> {
    let m = ens.species.mass();
    let mut values = vec![0.0; grid.len()];
    let scale = 1.0 / (grid.cell_volume() * m * m * m);
    for p in &ens.particles {
        let (base, f) = grid.locate(p.v / m).ok_or(Error::Domain("particle momentum outside the velocity grid"))?;
        for (i, w) in grid.corners(base, f) {
            values[i] += p.w * w * scale;
        }
    }
    Ok(SpeciesProfile { label: ens.species.label().into(), mass: m, charge: ens.species.charge(), values })
}

/// `Q∞^α` of every ensemble and the charge-weighted total.
pub fn extract_q(ensembles: &[ParticleEnsemble], grid: &VelocityGrid) -> Result<QProfile> {
    let time = ensembles.first().map_or(0.0, |e| e.time);
    let species = ensembles.iter().map(|e| extract_species(e, grid)).collect::<Result<Vec<_>>>()?;
    QProfile::from_species(*grid, species, time)
}

/// Sampled `𝔼`, `𝔹` and `𝕃 = 𝔼 + û × 𝔹`.
#[derive(Debug, Clone, PartialEq)]
pub struct LProfile {
    pub grid: VelocityGrid,
    pub ebb: Vec<Vec3>,
    pub bbb: Vec<Vec3>,
    pub lbb: Vec<Vec3>,
    pub time: f64,
    /// Nodes too close to the light cone to sample.
    pub skipped: usize,
}

impl LProfile {
    pub fn max_abs_l(&self) -> f64 {
        self.lbb.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Max-norm distance of the `𝕃` samples.
    pub fn cauchy_difference(&self, other: &LProfile) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Validation("profiles live on different grids"));
        }
        Ok(self.lbb.iter().zip(&other.lbb).fold(0.0, |m, (a, b)| m.max((*a - *b).norm())))
    }
}

/// Samples `t² E(t, t û)` and `t² B(t, t û)` at every grid node.
pub fn extract_field_profile(field: &dyn FieldModel, t: f64, grid: &VelocityGrid) -> Result<LProfile> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Validation("extraction time must be positive"));
    }
    let n = grid.len();
    let mut out =
        LProfile { grid: *grid, ebb: vec![Vec3::ZERO; n], bbb: vec![Vec3::ZERO; n], lbb: vec![Vec3::ZERO; n], time: t, skipped: 0 };
    let t2 = t * t;
    for (i, u) in grid.nodes().enumerate() {
        let uh = hat_m(u, 1.0);
        if uh.norm() >= 1.0 - 1e-12 {
            out.skipped += 1;
            continue;
        }
        let em = field.evaluate(t, uh * t)?;
        let (e, b) = (em.e * t2, em.b * t2);
        out.ebb[i] = e;
        out.bbb[i] = b;
        out.lbb[i] = e + uh.cross(b);
    }
    Ok(out)
}

/// A scalar asymptotic charge density of unit-mass momentum.
pub trait ChargeDensity {
    fn q_at(&self, u: Vec3) -> Result<f64>;
    /// Speed below which the density is known.
    fn speed_support(&self) -> f64;
}

/// An asymptotic field profile of unit-mass momentum.
pub trait FieldProfile {
    fn e_at(&self, u: Vec3) -> Result<Vec3>;
    fn b_at(&self, u: Vec3) -> Result<Vec3>;
    fn speed_support(&self) -> f64;

    fn l_at(&self, u: Vec3) -> Result<Vec3> {
        let uh = hat_m(u, 1.0);
        Ok(self.e_at(u)? + uh.cross(self.b_at(u)?))
    }
}

impl ChargeDensity for QProfile {
    fn q_at(&self, u: Vec3) -> Result<f64> {
        self.grid.interpolate(&self.total, u).ok_or(Error::Extrapolation)
    }

    fn speed_support(&self) -> f64 {
        self.grid.speed_support()
    }
}

impl ChargeDensity for CoulombQ {
    fn q_at(&self, u: Vec3) -> Result<f64> {
        Ok(self.value(u))
    }

    fn speed_support(&self) -> f64 {
        crate::fieldmodels::COULOMB_SUPPORT
    }
}

impl FieldProfile for LProfile {
    fn e_at(&self, u: Vec3) -> Result<Vec3> {
        self.grid.interpolate_vec(&self.ebb, u).ok_or(Error::Extrapolation)
    }

    fn b_at(&self, u: Vec3) -> Result<Vec3> {
        self.grid.interpolate_vec(&self.bbb, u).ok_or(Error::Extrapolation)
    }

    fn speed_support(&self) -> f64 {
        self.grid.speed_support()
    }
}

impl FieldProfile for SelfSimilarProfile {
    fn e_at(&self, u: Vec3) -> Result<Vec3> {
        Ok(self.ebb(u))
    }

    fn b_at(&self, u: Vec3) -> Result<Vec3> {
        Ok(self.bbb(u))
    }

    fn speed_support(&self) -> f64 {
        self.support
    }

    fn l_at(&self, u: Vec3) -> Result<Vec3> {
        Ok(self.lbb(u))
    }
}

/// `t² (E, B)(t, t û)` read directly from a field model at a fixed time.
pub struct SnapshotProfile<'a> {
    pub field: &'a dyn FieldModel,
    pub time: f64,
}

impl SnapshotProfile<'_> {
    fn sample(&self, u: Vec3) -> Result<EMField> {
        let t = self.time;
        Ok(self.field.evaluate(t, hat_m(u, 1.0) * t)?.scaled(t * t))
    }
}

impl FieldProfile for SnapshotProfile<'_> {
    fn e_at(&self, u: Vec3) -> Result<Vec3> {
        Ok(self.sample(u)?.e)
    }

    fn b_at(&self, u: Vec3) -> Result<Vec3> {
        Ok(self.sample(u)?.b)
    }

    fn speed_support(&self) -> f64 {
        1.0 - 1e-12
    }
}

/// The self-similar field `E = 𝔼(ǔ)/t²`, `B = 𝔹(ǔ)/t²` (`u = x/t`) generated
/// by a sampled profile. Zero before `t_on`, outside the light cone and
/// outside the sampled grid.
#[derive(Debug, Clone)]
pub struct ProfileField {
    pub profile: LProfile,
    pub t_on: f64,
    pub k: f64,
}

impl FieldModel for ProfileField {
    fn evaluate(&self, t: f64, x: Vec3) -> Result<EMField> {
        if t < self.t_on {
            return Ok(EMField::ZERO);
        }
        let s = x / t;
        if s.norm() >= 1.0 - 1e-12 {
            return Ok(EMField::ZERO);
        }
        let u = check(s)?;
        let inv = 1.0 / (t * t);
        match (self.profile.e_at(u), self.profile.b_at(u)) {
            (Ok(e), Ok(b)) => Ok(EMField::new(e * inv, b * inv)),
            _ => Ok(EMField::ZERO),
        }
    }

    fn support_k(&self) -> f64 {
        self.k
    }

    fn decay_constant(&self) -> Option<f64> {
        None
    }

    fn switch_on(&self) -> Option<f64> {
        Some(self.t_on)
    }
}

/// Radial and angular rules for the charge identity.
#[derive(Debug, Clone)]
pub struct IdentityQuadrature {
    pub radial: GaussLegendre,
    pub panels: usize,
    pub sphere: SphereRule,
}

impl Default for IdentityQuadrature {
    fn default() -> Self {
        Self { radial: GaussLegendre::new(16), panels: 8, sphere: SphereRule::new(24, 48) }
    }
}

/// `(lhs, rhs)` with `lhs = 4π ∫_{|x|<δ} ⟨x̌⟩⁵ Q∞(x̌) dx` and
/// `rhs = ∮_{|ω|=δ} 𝔼(ω̌)·ω/|ω| dμ`.
pub fn gauss_identity(q: &dyn ChargeDensity, l: &dyn FieldProfile, delta: f64, quad: &IdentityQuadrature) -> Result<(f64, f64)> {
    let support = q.speed_support().min(l.speed_support());
    if !(delta > 0.0 && delta <= support) {
        return Err(Error::Domain("delta exceeds the profile support"));
    }
    let mut err = None;
    let lhs = ball_integral(&quad.radial, quad.panels, &quad.sphere, delta, |x| {
        let run = || -> Result<f64> {
            let v = check(x)?;
            let j = japanese(v);
            let j5 = j * j * j * j * j;
            Ok(j5 * q.q_at(v)?)
        };
        run().unwrap_or_else(|e| {
            err.get_or_insert(e);
            0.0
        })
    }) * FOUR_PI;
    if let Some(e) = err {
        return Err(e);
    }
    let mut err = None;
    let rhs = delta
        * delta
        * quad.sphere.integrate(|n| {
            let run = || -> Result<f64> { Ok(l.e_at(check(n * delta)?)?.dot(n)) };
            run().unwrap_or_else(|e| {
                err.get_or_insert(e);
                0.0
            })
        });
    if let Some(e) = err {
        return Err(e);
    }
    Ok((lhs, rhs))
}

/// Particle form of the left-hand side: `4π Σ e w` over particles with
/// `|v̂| < δ`.
pub fn enclosed_charge_particles(ensembles: &[ParticleEnsemble], delta: f64) -> f64 {
    let mut s = CompensatedSum::default();
    for ens in ensembles {
        let (m, e) = (ens.species.mass(), ens.species.charge());
        for p in &ens.particles {
            if hat_m(p.v, m).norm() < delta {
                s.add(e * p.w);
            }
        }
    }
    FOUR_PI * s.value()
}

/// Grid node maximising `|Q∞(u)|·|𝕃(u)·û|` among nodes with
/// `|Q∞| > tol_q` and `|𝕃| > tol_l`.
pub fn find_witness(q: &QProfile, l: &LProfile, tol_q: f64, tol_l: f64) -> Result<Option<Vec3>> {
    if q.grid != l.grid {
        return Err(Error::Validation("profiles live on different grids"));
    }
    let mut best: Option<(f64, Vec3)> = None;
    for (i, u) in q.grid.nodes().enumerate() {
        let (qv, lv) = (q.total[i], l.lbb[i]);
        if abs(qv) > tol_q && lv.norm() > tol_l {
            let score = abs(qv) * abs(lv.dot(hat_m(u, 1.0)));
            if score > 0.0 && best.is_none_or(|(s, _)| score > s) {
                best = Some((score, u));
            }
        }
    }
    Ok(best.map(|(_, u)| u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Linear,
    Modified,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Linear => "LINEAR",
            Verdict::Modified => "MODIFIED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Classifier thresholds with the noise floors they derive from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub noise_q: f64,
    pub noise_slope: f64,
    pub tol_q: f64,
    pub tol_slope: f64,
    pub tol_l: f64,
}

impl Thresholds {
    /// Five times the noise floors: the rounding floor of `Q∞` and the
    /// largest slope of a zero-field control run (at least `1e-12`).
    pub fn from_noise(q: &QProfile, control: &[DriftFit], tol_l: f64) -> Self {
        let noise_q = q.rounding_floor();
        let noise_slope = control.iter().fold(1e-12_f64, |m, f| m.max(f.b.norm()));
        Self { noise_q, noise_slope, tol_q: 5.0 * noise_q, tol_slope: 5.0 * noise_slope, tol_l }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierReport {
    /// `max |Q∞|` over the whole grid.
    pub max_q: f64,
    /// `max |Q∞|` over nodes where `|𝕃| > tol_l` (all nodes without a
    /// field profile).
    pub charge_indicator: f64,
    pub max_slope: f64,
    pub thresholds: Thresholds,
    pub verdict: Verdict,
}

pub fn classify_scattering(fits: &[DriftFit], q: &QProfile, l: Option<&LProfile>, th: Thresholds) -> Result<ClassifierReport> {
    let max_q = q.max_abs_total();
    let charge_indicator = match l {
        None => max_q,
        Some(l) => {
            if l.grid != q.grid {
                return Err(Error::Validation("profiles live on different grids"));
            }
            q.total.iter().zip(&l.lbb).filter(|(_, lv)| lv.norm() > th.tol_l).fold(0.0_f64, |m, (v, _)| m.max(abs(*v)))
        }
    };
    let max_slope = fits.iter().fold(0.0_f64, |m, f| m.max(f.b.norm()));
    let big_q = charge_indicator > th.tol_q;
    let big_s = max_slope > th.tol_slope;
    let verdict = match (big_q, big_s) {
        (true, true) => Verdict::Modified,
        (false, false) => Verdict::Linear,
        _ => Verdict::Inconclusive,
    };
    Ok(ClassifierReport { max_q, charge_indicator, max_slope, thresholds: th, verdict })
}

/// Image of a unit-mass momentum under `a`: `(A⁰(u⁰, u)/u⁰, Aˢ(u⁰, u))`.
fn image(a: &LorentzTransform, u: Vec3) -> (f64, Vec3) {
    let u0 = energy_m(u, 1.0);
    let y = a.apply(FourVector::new(u0, u));
    (y.t / u0, y.x)
}

/// `Q^A(u) = (A⁰(u⁰, u)/u⁰)·Q(Aˢ(u⁰, u))` for an arbitrary density.
pub fn q_transform_fn<'a, F: Fn(Vec3) -> f64 + 'a>(q: F, a: &'a LorentzTransform) -> impl Fn(Vec3) -> f64 + 'a {
    move |u| {
        let (jac, w) = image(a, u);
        jac * q(w)
    }
}

/// Predicted profile of the transformed solution, per species and in
/// total. Images outside the grid count as zero when the species profile
/// vanishes on the grid boundary and are an extrapolation error otherwise.
pub fn q_transform_law(q: &QProfile, a: &LorentzTransform) -> Result<QProfile> {
    a.validate()?;
    let g = q.grid;
    let mut species = Vec::with_capacity(q.species.len());
    for s in &q.species {
        let zero_outside = g.vanishes_on_boundary(&s.values);
        let mut values = vec![0.0; g.len()];
        for (i, u) in g.nodes().enumerate() {
            let (jac, w) = image(a, u);
            values[i] = match g.interpolate(&s.values, w) {
                Some(v) => jac * v,
                None if zero_outside => 0.0,
                None => return Err(Error::Extrapolation),
            };
        }
        species.push(SpeciesProfile { values, ..s.clone() });
    }
    QProfile::from_species(g, species, q.time)
}

/// One boosted time of [`verify_boosted_extraction`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedComparison {
    pub time: f64,
    /// `max |binned slice − binned pushforward| / max |binned pushforward|`.
    pub weak_deviation: f64,
    /// Same against the transformation law applied to the binned profile.
    pub pointwise_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedReport {
    pub comparisons: Vec<BoostedComparison>,
    pub max_weak_deviation: f64,
}

/// Compares `Q` extracted from boosted slices against the prediction.
///
/// The prediction bins the asymptotic momenta `v∞` of the original
/// particles carried through the inverse mass-shell map
/// `v ↦ (A⁻¹(v⁰, v))ˢ`, with unchanged weights. This is the weak form of
/// the transformation law: for every test function `g`,
/// `∫ Q^A g = ∫ Q(w) g((A⁻¹w)ˢ) dw`.
pub fn verify_boosted_extraction(
    ensembles: &[ParticleEnsemble],
    asymptotic: &[Vec<Vec3>],
    a: &LorentzTransform,
    times: &[f64],
    grid: &VelocityGrid,
) -> Result<BoostedReport> {
    if asymptotic.len() != ensembles.len() || ensembles.iter().zip(asymptotic).any(|(e, v)| e.len() != v.len()) {
        return Err(Error::Validation("asymptotic momenta do not match the ensembles"));
    }
    let inv = a.inverse();
    let mut predicted_ens = Vec::with_capacity(ensembles.len());
    let mut asymptotic_ens = Vec::with_capacity(ensembles.len());
    for (ens, vs) in ensembles.iter().zip(asymptotic) {
        let m = ens.species.mass();
        let mut pe = ParticleEnsemble { worldlines: None, ..ens.clone() };
        let mut ae = pe.clone();
        for ((p, q), v) in pe.particles.iter_mut().zip(ae.particles.iter_mut()).zip(vs) {
            p.v = inv.space_of(FourVector::new(energy_m(*v, m), *v));
            q.v = *v;
        }
        predicted_ens.push(pe);
        asymptotic_ens.push(ae);
    }
    let predicted = extract_q(&predicted_ens, grid)?;
    let pointwise = q_transform_law(&extract_q(&asymptotic_ens, grid)?, a)?;
    let scale = predicted.max_abs_total().max(f64::MIN_POSITIVE);
    let pscale = pointwise.max_abs_total().max(f64::MIN_POSITIVE);
    let mut comparisons = Vec::with_capacity(times.len());
    for &t in times {
        let sliced = ensembles.iter().map(|e| boosted_slice(e, a, t)).collect::<Result<Vec<_>>>()?;
        let got = extract_q(&sliced, grid)?;
        comparisons.push(BoostedComparison {
            time: t,
            weak_deviation: got.cauchy_difference(&predicted)? / scale,
            pointwise_deviation: got.cauchy_difference(&pointwise)? / pscale,
        });
    }
    let max_weak_deviation = comparisons.last().map_or(0.0, |c| c.weak_deviation);
    Ok(BoostedReport { comparisons, max_weak_deviation })
}

/// Asymptotic momenta of every stored worldline by Richardson extrapolation.
pub fn asymptotic_momenta(ens: &ParticleEnsemble, t_min: f64) -> Result<Vec<Vec3>> {
    let wls: &[Worldline] = ens.worldlines.as_deref().ok_or(Error::Precondition("ensemble has no stored worldlines"))?;
    wls.iter().map(|wl| crate::transport::asymptotic_momentum(wl, t_min).map(|a| a.extrapolated)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestFrameReport {
    pub v_star: Vec3,
    pub q_star: f64,
    pub transform: LorentzTransform,
    /// `Q∞^A(0)` from the transformation law.
    pub q_rest: f64,
    /// `v*⁰ Q∞(v*)`.
    pub expected: f64,
    pub relative_error: f64,
}

fn rest_frame_from<F: Fn(Vec3) -> Result<f64>>(v_star: Vec3, q: F) -> Result<RestFrameReport> {
    let v0 = energy_m(v_star, 1.0);
    let transform = boost_to_rest(FourVector::new(v0, v_star))?;
    let (jac, w) = image(&transform, Vec3::ZERO);
    let q_star = q(v_star)?;
    let q_rest = jac * q(w)?;
    let expected = v0 * q_star;
    let relative_error = abs(q_rest - expected) / abs(expected).max(f64::MIN_POSITIVE);
    if relative_error > 1e-10 {
        return Err(Error::Singular("rest-frame identity violated"));
    }
    Ok(RestFrameReport { v_star, q_star, transform, q_rest, expected, relative_error })
}

/// Picks `v* = argmax |Q∞|` on the grid (first maximiser in storage
/// order), boosts it to rest and checks `Q∞^A(0) = v*⁰ Q∞(v*)`.
pub fn rest_frame_pipeline(q: &QProfile, threshold: f64) -> Result<RestFrameReport> {
    let mut best = (0.0_f64, 0usize);
    for (i, v) in q.total.iter().enumerate() {
        if abs(*v) > best.0 {
            best = (abs(*v), i);
        }
    }
    if !(best.0 > threshold) {
        return Err(Error::Precondition("no nonzero asymptotic charge"));
    }
    let n = q.grid.n + 1;
    let i = best.1;
    let v_star = q.grid.node(i / (n * n), (i / n) % n, i % n);
    rest_frame_from(v_star, |u| q.q_at(u))
}

/// [`rest_frame_pipeline`] for an analytic density with known peak.
pub fn rest_frame_analytic<F: Fn(Vec3) -> f64>(q: F, v_star: Vec3) -> Result<RestFrameReport> {
    if q(v_star) == 0.0 {
        return Err(Error::Precondition("no nonzero asymptotic charge"));
    }
    rest_frame_from(v_star, |u| Ok(q(u)))
}

/// Species record used when rebuilding ensembles from stored artifacts.
pub fn species_of(p: &SpeciesProfile) -> Result<Species> {
    Species::new(&p.label, p.mass, p.charge)
}
