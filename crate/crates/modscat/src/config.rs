//! Scenario files. Every table rejects unknown keys.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{RunError, RunResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory name under the output root; defaults to `name`.
    #[serde(default)]
    pub output: Option<String>,
    /// Support constant: initial data live in `|x| ≤ k`, `|v| ≤ k`.
    pub k: f64,
    pub species: Vec<SpeciesConfig>,
    pub field: FieldConfig,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    pub extraction: ExtractionConfig,
    #[serde(default)]
    pub boost: Option<BoostConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Random,
    Lattice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub label: String,
    pub mass: f64,
    pub charge: f64,
    /// Copy the particles of another species (same positions, momenta and
    /// weights); the bump parameters below are then ignored.
    #[serde(default)]
    pub mirror_of: Option<String>,
    #[serde(default = "default_sampling")]
    pub sampling: Sampling,
    /// Particle count for random sampling.
    #[serde(default)]
    pub count: Option<usize>,
    /// Lattice points per axis in position and momentum.
    #[serde(default)]
    pub lattice: Option<[usize; 2]>,
    #[serde(default)]
    pub x_center: [f64; 3],
    #[serde(default = "one")]
    pub x_radius: f64,
    #[serde(default)]
    pub v_center: [f64; 3],
    #[serde(default = "one")]
    pub v_radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Rescale weights so that they sum to this value.
    #[serde(default)]
    pub total_weight: Option<f64>,
}

fn default_sampling() -> Sampling {
    Sampling::Random
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMode {
    Zero,
    Uniform,
    SelfSimilar,
    SelfConsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub mode: FieldMode,
    /// Uniform mode: constant fields.
    #[serde(default)]
    pub e: [f64; 3],
    #[serde(default)]
    pub b: [f64; 3],
    /// Self-similar mode: constant part of the electric profile.
    #[serde(default)]
    pub uniform: [f64; 3],
    #[serde(default)]
    pub charge_q: f64,
    #[serde(default = "half")]
    pub charge_radius: f64,
    /// Self-similar mode: magnetic profile is `omega × 𝔼`.
    #[serde(default)]
    pub omega: [f64; 3],
    #[serde(default = "support")]
    pub support: f64,
    #[serde(default = "r_in")]
    pub r_in: f64,
    #[serde(default = "one")]
    pub t_on: f64,
}

fn half() -> f64 {
    0.5
}

fn support() -> f64 {
    0.9
}

fn r_in() -> f64 {
    0.75
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorKind {
    Adaptive,
    Boris,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "adaptive")]
    pub kind: IntegratorKind,
    pub t_final: f64,
    #[serde(default = "rtol")]
    pub rtol: f64,
    #[serde(default = "atol")]
    pub atol: f64,
    /// Boris step.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "dense_until")]
    pub dense_until: f64,
    #[serde(default = "dense_dt")]
    pub dense_dt: f64,
    #[serde(default = "ratio")]
    pub storage_ratio: f64,
    #[serde(default = "yes")]
    pub store_worldlines: bool,
}

fn adaptive() -> IntegratorKind {
    IntegratorKind::Adaptive
}

fn rtol() -> f64 {
    1e-12
}

fn atol() -> f64 {
    1e-14
}

fn dense_until() -> f64 {
    10.0
}

fn dense_dt() -> f64 {
    0.5
}

fn ratio() -> f64 {
    1.05
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
    /// Leapfrog step as a fraction of the stability limit.
    #[serde(default = "courant")]
    pub courant: f64,
    #[serde(default = "monitor_every")]
    pub monitor_every: usize,
    /// Horizon to which tracked characteristics are continued in the
    /// self-similar extension of the final field profile.
    #[serde(default = "continuation")]
    pub continuation_horizon: f64,
}

fn courant() -> f64 {
    0.5
}

fn monitor_every() -> usize {
    5
}

fn continuation() -> f64 {
    1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionConfig {
    /// Times at which `Q∞` is extracted; successive differences give the
    /// Cauchy estimates.
    pub times: Vec<f64>,
    pub velocity_n: usize,
    pub velocity_half_width: f64,
    #[serde(default = "window")]
    pub fit_window: [f64; 2],
    /// Particles per species entering drift fits.
    #[serde(default = "fit_particles")]
    pub fit_particles: usize,
    /// Speeds at which the charge identity is evaluated.
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default = "tol_l")]
    pub tol_l: f64,
}

fn window() -> [f64; 2] {
    [1e3, 1e6]
}

fn fit_particles() -> usize {
    12
}

fn tol_l() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostConfig {
    #[serde(default)]
    pub phi: f64,
    /// Optional rotation `[axis_x, axis_y, axis_z, angle]` applied after
    /// the boost.
    #[serde(default)]
    pub rotation: Option<[f64; 4]>,
    /// Boosted times; default is four geometric times ending at a quarter
    /// of the stored horizon.
    #[serde(default)]
    pub times: Vec<f64>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> RunResult<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| RunError::validation(vec![e.to_string()]))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> RunResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io("read config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn output_name(&self) -> &str {
        self.output.as_deref().unwrap_or(&self.name)
    }

    /// Collects every violated invariant.
    pub fn validate(&self) -> RunResult<()> {
        let mut errs = Vec::new();
        let mut bad = |cond: bool, msg: String| {
            if cond {
                errs.push(msg);
            }
        };
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let norm = |a: [f64; 3]| (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        bad(self.name.is_empty(), "name: must not be empty".into());
        bad(!pos(self.k), "k: must be positive".into());
        bad(self.species.is_empty(), "species: at least one species is required".into());
        for (i, s) in self.species.iter().enumerate() {
            let p = format!("species[{i}]");
            bad(!pos(s.mass), format!("{p}.mass: must be positive"));
            bad(!s.charge.is_finite(), format!("{p}.charge: must be finite"));
            bad(self.species.iter().filter(|o| o.label == s.label).count() > 1, format!("{p}.label: duplicate label {:?}", s.label));
            if let Some(src) = &s.mirror_of {
                let found = self.species.iter().position(|o| &o.label == src);
                bad(found.is_none(), format!("{p}.mirror_of: unknown species {src:?}"));
                bad(
                    found.is_some_and(|j| j >= i || self.species[j].mirror_of.is_some()),
                    format!("{p}.mirror_of: must name an earlier, non-mirrored species"),
                );
                continue;
            }
            match s.sampling {
                Sampling::Random => bad(!s.count.is_some_and(|c| c > 0), format!("{p}.count: random sampling needs a positive count")),
                Sampling::Lattice => {
                    bad(!s.lattice.is_some_and(|[a, b]| a > 0 && b > 0), format!("{p}.lattice: lattice sampling needs two positive sizes"))
                }
            }
            bad(!pos(s.x_radius), format!("{p}.x_radius: must be positive"));
            bad(!pos(s.v_radius), format!("{p}.v_radius: must be positive"));
            bad(!pos(s.amplitude), format!("{p}.amplitude: must be positive"));
            bad(s.total_weight.is_some_and(|w| !pos(w)), format!("{p}.total_weight: must be positive"));
            bad(norm(s.x_center) + s.x_radius > self.k * (1.0 + 1e-12), format!("{p}: position support exceeds |x| <= k"));
            bad(norm(s.v_center) + s.v_radius > self.k * (1.0 + 1e-12), format!("{p}: momentum support exceeds |v| <= k"));
        }
        let f = &self.field;
        if f.mode == FieldMode::SelfSimilar {
            bad(!(f.support > 0.0 && f.support < 1.0), "field.support: must lie in (0, 1)".into());
            bad(!(f.r_in > 0.0 && f.r_in < 0.95 * f.support), "field.r_in: must lie in (0, 0.95 support)".into());
            bad(!pos(f.t_on), "field.t_on: must be positive".into());
            bad(!(f.charge_radius > 0.0 && f.charge_radius < 1.0), "field.charge_radius: must lie in (0, 1)".into());
        }
        let it = &self.integrator;
        bad(!pos(it.t_final), "integrator.t_final: must be positive".into());
        bad(!pos(it.rtol) || !pos(it.atol), "integrator.rtol/atol: must be positive".into());
        bad(it.kind == IntegratorKind::Boris && !it.dt.is_some_and(pos), "integrator.dt: Boris needs a positive step".into());
        bad(
            !pos(it.dense_until) || !pos(it.dense_dt) || !(it.storage_ratio > 1.0),
            "integrator storage: need dense_until, dense_dt > 0 and storage_ratio > 1".into(),
        );
        if f.mode == FieldMode::SelfConsistent {
            match &self.grid {
                None => bad(true, "grid: required for the self-consistent field mode".into()),
                Some(g) => {
                    bad(g.n < 8, "grid.n: need at least 8 cells".into());
                    bad(!pos(g.half_width), "grid.half_width: must be positive".into());
                    bad(!(g.courant > 0.0 && g.courant <= 1.0), "grid.courant: must lie in (0, 1]".into());
                    bad(g.monitor_every == 0, "grid.monitor_every: must be positive".into());
                    bad(!pos(g.continuation_horizon), "grid.continuation_horizon: must be positive".into());
                    bad(g.half_width < it.t_final + 2.0 * self.k, "grid.half_width: must be at least t_final + 2k".into());
                    bad(
                        g.continuation_horizon < self.extraction.fit_window[1],
                        "grid.continuation_horizon: must reach the end of the fit window".into(),
                    );
                }
            }
            let mut total = 0.0;
            let mut scale = 0.0;
            for s in &self.species {
                let src = s.mirror_of.as_ref().and_then(|m| self.species.iter().find(|o| &o.label == m)).unwrap_or(s);
                if let Some(w) = src.total_weight {
                    total += s.charge * w;
                    scale += (s.charge * w).abs();
                } else {
                    bad(true, format!("species {:?}: self-consistent runs need total_weight to fix the charge balance", s.label));
                }
            }
            bad(total.abs() > 1e-12 * scale, format!("species: total charge {total:e} is not neutral"));
        }
        let ex = &self.extraction;
        if f.mode != FieldMode::SelfConsistent {
            bad(it.t_final < ex.fit_window[1], "integrator.t_final: must reach the end of extraction.fit_window".into());
        }
        bad(ex.times.is_empty(), "extraction.times: need at least one time".into());
        bad(ex.times.iter().any(|t| !pos(*t) || *t > it.t_final), "extraction.times: must lie in (0, t_final]".into());
        bad(ex.times.windows(2).any(|w| w[1] <= w[0]), "extraction.times: must increase".into());
        bad(ex.velocity_n < 2, "extraction.velocity_n: need at least 2 cells".into());
        bad(!pos(ex.velocity_half_width), "extraction.velocity_half_width: must be positive".into());
        bad(!(ex.fit_window[0] >= 10.0 && ex.fit_window[1] > ex.fit_window[0]), "extraction.fit_window: need 10 <= lo < hi".into());
        let vmax = ex.velocity_half_width / (1.0 + ex.velocity_half_width.powi(2)).sqrt();
        bad(
            ex.deltas.iter().any(|d| !(*d > 0.0 && *d <= vmax)),
            "extraction.deltas: must lie in (0, speed support of the velocity grid]".into(),
        );
        bad(!(ex.tol_l >= 0.0), "extraction.tol_l: must be nonnegative".into());
        if let Some(b) = &self.boost {
            bad(!b.phi.is_finite(), "boost.phi: must be finite".into());
            bad(b.times.iter().any(|t| !pos(*t)), "boost.times: must be positive".into());
            if let Some(r) = b.rotation {
                bad(
                    norm([r[0], r[1], r[2]]) == 0.0 || r.iter().any(|x| !x.is_finite()),
                    "boost.rotation: need a nonzero finite axis".into(),
                );
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(RunError::validation(errs))
        }
    }
}
