//! Self-consistent fields on a Yee grid.
//!
//! Layout on `n[0] × n[1] × n[2]` cells, every array sized to the node
//! count `(n+1)³` and indexed by the lower node:
//! `ρ` at nodes, `E_c` on edges offset by half a cell along `c`, `B_c` on
//! faces offset by half a cell in the two other directions. The box
//! boundary is a perfect conductor: tangential `E` stays zero there.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::faraday::EMField;
use crate::fieldmodels::FieldModel;
use crate::kinematics::{energy_m, hat_m};
use crate::math::{abs, floor, sqrt, CompensatedSum, Vec3};
use crate::transport::{boris_kick, ParticleEnsemble, Sample, Worldline};

const FOUR_PI: f64 = 4.0 * core::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: [usize; 3],
    pub lo: Vec3,
    pub hi: Vec3,
}

impl GridSpec {
    /// Cube `[-h, h]³` with `n` cells per side.
    pub fn cube(n: usize, half_width: f64) -> Result<Self> {
        let g = Self { n: [n; 3], lo: Vec3::new(-half_width, -half_width, -half_width), hi: Vec3::new(half_width, half_width, half_width) };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.iter().any(|&n| n < 4) {
            return Err(Error::Validation("grid needs at least 4 cells per direction"));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || (0..3).any(|d| !(self.hi[d] > self.lo[d])) {
            return Err(Error::Validation("grid extent must be a nonempty finite box"));
        }
        Ok(())
    }

    pub fn dx(&self) -> [f64; 3] {
        [0, 1, 2].map(|d| (self.hi[d] - self.lo[d]) / self.n[d] as f64)
    }

    pub fn len(&self) -> usize {
        (self.n[0] + 1) * (self.n[1] + 1) * (self.n[2] + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * (self.n[1] + 1) + j) * (self.n[2] + 1) + k
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let dx = self.dx();
        Vec3::new(self.lo[0] + i as f64 * dx[0], self.lo[1] + j as f64 * dx[1], self.lo[2] + k as f64 * dx[2])
    }

    pub fn cell_volume(&self) -> f64 {
        let dx = self.dx();
        dx[0] * dx[1] * dx[2]
    }

    /// Largest stable leapfrog step `1/√(Σ 1/dx²)`.
    pub fn courant_limit(&self) -> f64 {
        let dx = self.dx();
        1.0 / sqrt(dx.iter().map(|h| 1.0 / (h * h)).sum::<f64>())
    }

    /// Position in node units.
    fn xi(&self, x: Vec3) -> [f64; 3] {
        let dx = self.dx();
        [0, 1, 2].map(|d| (x[d] - self.lo[d]) / dx[d])
    }

    /// Whether the CIC stencil of a particle at `x` stays one cell clear of
    /// the boundary.
    pub fn interior(&self, x: Vec3) -> bool {
        let xi = self.xi(x);
        (0..3).all(|d| xi[d] >= 1.0 && xi[d] <= self.n[d] as f64 - 2.0)
    }
}

const E_OFFSET: [[f64; 3]; 3] = [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.5]];
const B_OFFSET: [[f64; 3]; 3] = [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub e: [Vec<f64>; 3],
    pub b: [Vec<f64>; 3],
    pub time: f64,
}

impl FieldGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        let n = spec.len();
        Self { e: [vec![0.0; n], vec![0.0; n], vec![0.0; n]], b: [vec![0.0; n], vec![0.0; n], vec![0.0; n]], spec, time: 0.0 }
    }

    /// Trilinear gather of `(E, B)` at `x` from the staggered positions.
    pub fn gather(&self, x: Vec3) -> EMField {
        let mut e = Vec3::ZERO;
        let mut b = Vec3::ZERO;
        for c in 0..3 {
            e[c] = interp(&self.spec, &self.e[c], E_OFFSET[c], x);
            b[c] = interp(&self.spec, &self.b[c], B_OFFSET[c], x);
        }
        EMField::new(e, b)
    }

    pub fn max_e(&self) -> f64 {
        self.e.iter().flat_map(|a| a.iter()).fold(0.0, |m, v| m.max(abs(*v)))
    }

    pub fn max_b(&self) -> f64 {
        self.b.iter().flat_map(|a| a.iter()).fold(0.0, |m, v| m.max(abs(*v)))
    }
}

fn interp(spec: &GridSpec, arr: &[f64], off: [f64; 3], x: Vec3) -> f64 {
    let xi = spec.xi(x);
    let mut base = [0usize; 3];
    let mut f = [0.0; 3];
    for d in 0..3 {
        let s = xi[d] - off[d];
        let i0 = floor(s).clamp(0.0, (spec.n[d] - 1) as f64);
        base[d] = i0 as usize;
        f[d] = (s - i0).clamp(0.0, 1.0);
    }
    let mut acc = 0.0;
    for a in 0..2 {
        let wa = if a == 0 { 1.0 - f[0] } else { f[0] };
        for b in 0..2 {
            let wb = if b == 0 { 1.0 - f[1] } else { f[1] };
            for c in 0..2 {
                let wc = if c == 0 { 1.0 - f[2] } else { f[2] };
                acc += wa * wb * wc * arr[spec.idx(base[0] + a, base[1] + b, base[2] + c)];
            }
        }
    }
    acc
}

/// A field snapshot read as a field model: the gathered grid field inside
/// the box and zero outside, whatever the requested time.
#[derive(Debug, Clone)]
pub struct GridSnapshot {
    pub grid: FieldGrid,
    pub k: f64,
}

impl FieldModel for GridSnapshot {
    fn evaluate(&self, _t: f64, x: Vec3) -> Result<EMField> {
        let s = &self.grid.spec;
        if (0..3).any(|d| !(x[d] >= s.lo[d] && x[d] <= s.hi[d])) {
            return Ok(EMField::ZERO);
        }
        Ok(self.grid.gather(x))
    }

    fn support_k(&self) -> f64 {
        self.k
    }

    fn decay_constant(&self) -> Option<f64> {
        None
    }
}

/// Charge density at nodes and current density on `E` edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceGrid {
    pub rho: Vec<f64>,
    pub j: [Vec<f64>; 3],
}

impl SourceGrid {
    pub fn zeros(spec: &GridSpec) -> Self {
        let n = spec.len();
        Self { rho: vec![0.0; n], j: [vec![0.0; n], vec![0.0; n], vec![0.0; n]] }
    }

    /// `Σ ρ dV`.
    pub fn total_charge(&self, spec: &GridSpec) -> f64 {
        let mut s = CompensatedSum::default();
        for r in &self.rho {
            s.add(*r);
        }
        s.value() * spec.cell_volume()
    }
}

/// CIC weights of nodes `base..base+3` along one axis.
fn cic3(xi: f64, base: i64) -> [f64; 3] {
    [0, 1, 2].map(|a| (1.0 - abs(xi - (base + a) as f64)).max(0.0))
}

fn deposit_rho(spec: &GridSpec, rho: &mut [f64], x: Vec3, q: f64) {
    let xi = spec.xi(x);
    let base = [0, 1, 2].map(|d| floor(xi[d]) as i64);
    let w = [0, 1, 2].map(|d| cic3(xi[d], base[d]));
    let s = q / spec.cell_volume();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                let i = spec.idx((base[0] + a) as usize, (base[1] + b) as usize, (base[2] + c) as usize);
                rho[i] += s * w[0][a as usize] * w[1][b as usize] * w[2][c as usize];
            }
        }
    }
}

fn deposit_staggered(spec: &GridSpec, arr: &mut [f64], off: [f64; 3], x: Vec3, value: f64) {
    let xi = spec.xi(x);
    let mut base = [0usize; 3];
    let mut f = [0.0; 3];
    for d in 0..3 {
        let s = xi[d] - off[d];
        let i0 = floor(s);
        base[d] = i0 as usize;
        f[d] = s - i0;
    }
    let s = value / spec.cell_volume();
    for a in 0..2 {
        let wa = if a == 0 { 1.0 - f[0] } else { f[0] };
        for b in 0..2 {
            let wb = if b == 0 { 1.0 - f[1] } else { f[1] };
            for c in 0..2 {
                let wc = if c == 0 { 1.0 - f[2] } else { f[2] };
                arr[spec.idx(base[0] + a, base[1] + b, base[2] + c)] += s * wa * wb * wc;
            }
        }
    }
}

/// Charge density (CIC at nodes) and current density (CIC at edges) of
/// all ensembles. Species are deposited into separate buffers and summed
/// in order.
pub fn deposit(ensembles: &[ParticleEnsemble], spec: &GridSpec) -> Result<SourceGrid> {
    spec.validate()?;
    let mut out = SourceGrid::zeros(spec);
    let mut offset = 0;
    for ens in ensembles {
        let mut part = SourceGrid::zeros(spec);
        let (m, e) = (ens.species.mass(), ens.species.charge());
        for (i, p) in ens.particles.iter().enumerate() {
            if !spec.interior(p.x) {
                return Err(Error::Outflow { particle: offset + i });
            }
            let q = e * p.w;
            deposit_rho(spec, &mut part.rho, p.x, q);
            let vh = hat_m(p.v, m);
            for c in 0..3 {
                deposit_staggered(spec, &mut part.j[c], E_OFFSET[c], p.x, q * vh[c]);
            }
        }
        add_into(&mut out, &part);
        offset += ens.len();
    }
    Ok(out)
}

fn add_into(dst: &mut SourceGrid, src: &SourceGrid) {
    for (d, s) in dst.rho.iter_mut().zip(&src.rho) {
        *d += s;
    }
    for c in 0..3 {
        for (d, s) in dst.j[c].iter_mut().zip(&src.j[c]) {
            *d += s;
        }
    }
}

/// Esirkepov charge-conserving current of a charge `q` moving from `x0`
/// to `x1` during `dt`, accumulated into `j`.
pub fn deposit_current_esirkepov(spec: &GridSpec, j: &mut [Vec<f64>; 3], x0: Vec3, x1: Vec3, q: f64, dt: f64) {
    let (a, b) = (spec.xi(x0), spec.xi(x1));
    let base = [0, 1, 2].map(|d| floor(a[d]).min(floor(b[d])) as i64);
    let s0 = [0, 1, 2].map(|d| cic3(a[d], base[d]));
    let s1 = [0, 1, 2].map(|d| cic3(b[d], base[d]));
    let ds = [0, 1, 2].map(|d| [0, 1, 2].map(|i| s1[d][i] - s0[d][i]));
    let dx = spec.dx();
    let dv = spec.cell_volume();
    for c in 0..3 {
        let (p, r) = ((c + 1) % 3, (c + 2) % 3);
        let scale = -q * dx[c] / (dv * dt);
        for u in 0..3 {
            for w in 0..3 {
                let transverse = s0[p][u] * s0[r][w] + 0.5 * ds[p][u] * s0[r][w] + 0.5 * s0[p][u] * ds[r][w] + ds[p][u] * ds[r][w] / 3.0;
                if transverse == 0.0 {
                    continue;
                }
                let mut acc = 0.0;
                for a_ in 0..2 {
                    acc += scale * ds[c][a_] * transverse;
                    let mut g = [0i64; 3];
                    g[c] = base[c] + a_ as i64;
                    g[p] = base[p] + u as i64;
                    g[r] = base[r] + w as i64;
                    j[c][spec.idx(g[0] as usize, g[1] as usize, g[2] as usize)] += acc;
                }
            }
        }
    }
}

fn curl_e_into(g: &FieldGrid, out: &mut [Vec<f64>; 3]) {
    let s = &g.spec;
    let [nx, ny, nz] = s.n;
    let [dx, dy, dz] = s.dx();
    let (ex, ey, ez) = (&g.e[0], &g.e[1], &g.e[2]);
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                let id = s.idx(i, j, k);
                if j < ny && k < nz {
                    out[0][id] = (ez[s.idx(i, j + 1, k)] - ez[id]) / dy - (ey[s.idx(i, j, k + 1)] - ey[id]) / dz;
                }
                if i < nx && k < nz {
                    out[1][id] = (ex[s.idx(i, j, k + 1)] - ex[id]) / dz - (ez[s.idx(i + 1, j, k)] - ez[id]) / dx;
                }
                if i < nx && j < ny {
                    out[2][id] = (ey[s.idx(i + 1, j, k)] - ey[id]) / dx - (ex[s.idx(i, j + 1, k)] - ex[id]) / dy;
                }
            }
        }
    }
}

fn update_b(g: &mut FieldGrid, h: f64, scratch: &mut [Vec<f64>; 3]) {
    curl_e_into(g, scratch);
    for c in 0..3 {
        for (b, ce) in g.b[c].iter_mut().zip(&scratch[c]) {
            *b -= h * ce;
        }
    }
}

fn update_e(g: &mut FieldGrid, j: &[Vec<f64>; 3], h: f64) {
    let s = g.spec.clone();
    let [nx, ny, nz] = s.n;
    let [dx, dy, dz] = s.dx();
    for i in 0..=nx {
        for jj in 0..=ny {
            for k in 0..=nz {
                let id = s.idx(i, jj, k);
                let (ji, jk, jj_) = (i > 0 && i < nx, k > 0 && k < nz, jj > 0 && jj < ny);
                if i < nx && jj_ && jk {
                    let bz = &g.b[2];
                    let by = &g.b[1];
                    let curl = (bz[id] - bz[s.idx(i, jj - 1, k)]) / dy - (by[id] - by[s.idx(i, jj, k - 1)]) / dz;
                    g.e[0][id] += h * (curl - FOUR_PI * j[0][id]);
                }
                if jj < ny && ji && jk {
                    let bx = &g.b[0];
                    let bz = &g.b[2];
                    let curl = (bx[id] - bx[s.idx(i, jj, k - 1)]) / dz - (bz[id] - bz[s.idx(i - 1, jj, k)]) / dx;
                    g.e[1][id] += h * (curl - FOUR_PI * j[1][id]);
                }
                if k < nz && ji && jj_ {
                    let by = &g.b[1];
                    let bx = &g.b[0];
                    let curl = (by[id] - by[s.idx(i - 1, jj, k)]) / dx - (bx[id] - bx[s.idx(i, jj - 1, k)]) / dy;
                    g.e[2][id] += h * (curl - FOUR_PI * j[2][id]);
                }
            }
        }
    }
}

/// One leapfrog update: half `B`, full `E` with the source current, half `B`.
pub fn field_step(grid: &FieldGrid, src: &SourceGrid, dt: f64) -> Result<FieldGrid> {
    let mut g = grid.clone();
    advance_fields(&mut g, src, dt)?;
    Ok(g)
}

fn advance_fields(g: &mut FieldGrid, src: &SourceGrid, dt: f64) -> Result<()> {
    if !(dt > 0.0) || dt > g.spec.courant_limit() * (1.0 + 1e-12) {
        return Err(Error::Validation("dt violates the leapfrog stability bound"));
    }
    let before = g.max_e().max(g.max_b());
    let jmax = src.j.iter().flat_map(|a| a.iter()).fold(0.0_f64, |m, v| m.max(abs(*v)));
    let n = g.spec.len();
    let mut scratch = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    update_b(g, 0.5 * dt, &mut scratch);
    update_e(g, &src.j, dt);
    update_b(g, 0.5 * dt, &mut scratch);
    g.time += dt;
    let after = g.max_e().max(g.max_b());
    if !after.is_finite() || after > 10.0 * (before + FOUR_PI * dt * jmax) && after > 1e-300 {
        return Err(Error::Unstable { step_growth: after / before.max(f64::MIN_POSITIVE) });
    }
    Ok(())
}

/// Discrete `∇·E` at node `(i, j, k)`.
fn div_e_at(g: &FieldGrid, i: usize, j: usize, k: usize) -> f64 {
    let s = &g.spec;
    let [dx, dy, dz] = s.dx();
    let id = s.idx(i, j, k);
    (g.e[0][id] - g.e[0][s.idx(i - 1, j, k)]) / dx
        + (g.e[1][id] - g.e[1][s.idx(i, j - 1, k)]) / dy
        + (g.e[2][id] - g.e[2][s.idx(i, j, k - 1)]) / dz
}

/// `max |∇·E − 4πρ|` over interior nodes.
pub fn gauss_residual(grid: &FieldGrid, src: &SourceGrid) -> f64 {
    let s = &grid.spec;
    let mut worst = 0.0_f64;
    for i in 1..s.n[0] {
        for j in 1..s.n[1] {
            for k in 1..s.n[2] {
                let r = div_e_at(grid, i, j, k) - FOUR_PI * src.rho[s.idx(i, j, k)];
                worst = worst.max(abs(r));
            }
        }
    }
    worst
}

/// `max |∇·B|` over cells.
pub fn div_b(grid: &FieldGrid) -> f64 {
    let s = &grid.spec;
    let [dx, dy, dz] = s.dx();
    let mut worst = 0.0_f64;
    for i in 0..s.n[0] {
        for j in 0..s.n[1] {
            for k in 0..s.n[2] {
                let id = s.idx(i, j, k);
                let d = (grid.b[0][s.idx(i + 1, j, k)] - grid.b[0][id]) / dx
                    + (grid.b[1][s.idx(i, j + 1, k)] - grid.b[1][id]) / dy
                    + (grid.b[2][s.idx(i, j, k + 1)] - grid.b[2][id]) / dz;
                worst = worst.max(abs(d));
            }
        }
    }
    worst
}

/// `max |∇·B| · dx / max(|E|, |B|)`, zero for a vanishing field.
pub fn div_b_relative(grid: &FieldGrid) -> f64 {
    let bmax = grid.max_b().max(grid.max_e());
    if bmax == 0.0 {
        return 0.0;
    }
    let h = grid.spec.dx().iter().fold(f64::INFINITY, |m, v| m.min(*v));
    div_b(grid) * h / bmax
}

/// `(1/8π) ∫ |E|² + |B|²`.
pub fn field_energy(grid: &FieldGrid) -> f64 {
    let mut s = CompensatedSum::default();
    for a in grid.e.iter().chain(grid.b.iter()) {
        for v in a {
            s.add(v * v);
        }
    }
    s.value() * grid.spec.cell_volume() / (2.0 * FOUR_PI)
}

/// `Σ w (v⁰ − m)` over all particles.
pub fn kinetic_energy(ensembles: &[ParticleEnsemble]) -> f64 {
    let mut s = CompensatedSum::default();
    for ens in ensembles {
        let m = ens.species.mass();
        for p in &ens.particles {
            let e0 = energy_m(p.v, m);
            s.add(p.w * (p.v.norm_sq() / (e0 + m)));
        }
    }
    s.value()
}

/// `max (t+|x|+2k)|t−|x|+2k|·|(E,B)|` over interior nodes, with node values
/// averaged from the staggered neighbours.
pub fn decay_monitor(grid: &FieldGrid, k: f64) -> f64 {
    let s = &grid.spec;
    let t = grid.time;
    let mut worst = 0.0_f64;
    for i in 1..s.n[0] {
        for j in 1..s.n[1] {
            for kk in 1..s.n[2] {
                let id = s.idx(i, j, kk);
                let e = Vec3::new(
                    0.5 * (grid.e[0][id] + grid.e[0][s.idx(i - 1, j, kk)]),
                    0.5 * (grid.e[1][id] + grid.e[1][s.idx(i, j - 1, kk)]),
                    0.5 * (grid.e[2][id] + grid.e[2][s.idx(i, j, kk - 1)]),
                );
                let b = Vec3::new(
                    0.25 * (grid.b[0][id]
                        + grid.b[0][s.idx(i, j - 1, kk)]
                        + grid.b[0][s.idx(i, j, kk - 1)]
                        + grid.b[0][s.idx(i, j - 1, kk - 1)]),
                    0.25 * (grid.b[1][id]
                        + grid.b[1][s.idx(i - 1, j, kk)]
                        + grid.b[1][s.idx(i, j, kk - 1)]
                        + grid.b[1][s.idx(i - 1, j, kk - 1)]),
                    0.25 * (grid.b[2][id]
                        + grid.b[2][s.idx(i - 1, j, kk)]
                        + grid.b[2][s.idx(i, j - 1, kk)]
                        + grid.b[2][s.idx(i - 1, j - 1, kk)]),
                );
                let mag = sqrt(e.norm_sq() + b.norm_sq());
                if mag == 0.0 {
                    continue;
                }
                let r = s.node(i, j, kk).norm();
                worst = worst.max((t + r + 2.0 * k) * abs(t - r + 2.0 * k) * mag);
            }
        }
    }
    worst
}

/// Solves `−Δ_h φ = 4πρ` with `φ = 0` on the boundary by conjugate
/// gradients and sets `E = −∇_h φ`, so that `∇·E = 4πρ` at interior nodes.
/// `b0`, when given, must be divergence free.
pub fn init_constrained(ensembles: &[ParticleEnsemble], spec: &GridSpec, b0: Option<[Vec<f64>; 3]>) -> Result<FieldGrid> {
    let src = deposit(ensembles, spec)?;
    let mut total = CompensatedSum::default();
    let mut scale = 0.0;
    for ens in ensembles {
        for p in &ens.particles {
            let q = ens.species.charge() * p.w;
            total.add(q);
            scale += abs(q);
        }
    }
    if abs(total.value()) > 1e-12 * scale {
        return Err(Error::Validation("initial data are not globally neutral"));
    }
    let mut grid = solve_gauss(spec, &src.rho)?;
    if let Some(b) = b0 {
        if b.iter().any(|a| a.len() != spec.len()) {
            return Err(Error::Validation("initial magnetic field has the wrong grid size"));
        }
        grid.b = b;
        if div_b_relative(&grid) > 1e-12 {
            return Err(Error::Validation("initial magnetic field is not divergence free"));
        }
    }
    Ok(grid)
}

/// Electric field of the Poisson solution for a nodal charge density.
pub fn solve_gauss(spec: &GridSpec, rho: &[f64]) -> Result<FieldGrid> {
    spec.validate()?;
    let [nx, ny, nz] = spec.n;
    let [dx, dy, dz] = spec.dx();
    let (cx, cy, cz) = (1.0 / (dx * dx), 1.0 / (dy * dy), 1.0 / (dz * dz));
    let n = spec.len();
    let interior = |i: usize, j: usize, k: usize| i > 0 && i < nx && j > 0 && j < ny && k > 0 && k < nz;
    let apply = |p: &[f64], out: &mut [f64]| {
        for i in 1..nx {
            for j in 1..ny {
                for k in 1..nz {
                    let id = spec.idx(i, j, k);
                    let c = p[id];
                    out[id] = cx * (2.0 * c - p[spec.idx(i - 1, j, k)] - p[spec.idx(i + 1, j, k)])
                        + cy * (2.0 * c - p[spec.idx(i, j - 1, k)] - p[spec.idx(i, j + 1, k)])
                        + cz * (2.0 * c - p[spec.idx(i, j, k - 1)] - p[spec.idx(i, j, k + 1)]);
                }
            }
        }
    };
    let mut b = vec![0.0; n];
    let mut bmax = 0.0_f64;
    for i in 1..nx {
        for j in 1..ny {
            for k in 1..nz {
                let id = spec.idx(i, j, k);
                b[id] = FOUR_PI * rho[id];
                bmax = bmax.max(abs(b[id]));
            }
        }
    }
    let mut phi = vec![0.0; n];
    if bmax > 0.0 {
        let dot = |a: &[f64], c: &[f64]| {
            let mut s = CompensatedSum::default();
            for (x, y) in a.iter().zip(c) {
                s.add(x * y);
            }
            s.value()
        };
        let mut r = b.clone();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        let target = 1e-13 * bmax;
        let max_iter = 20 * (nx + ny + nz) + 1000;
        let mut converged = false;
        for _ in 0..max_iter {
            apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for id in 0..n {
                phi[id] += alpha * p[id];
                r[id] -= alpha * ap[id];
            }
            let rmax = r.iter().fold(0.0_f64, |m, v| m.max(abs(*v)));
            if rmax <= target {
                converged = true;
                break;
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for id in 0..n {
                p[id] = r[id] + beta * p[id];
            }
        }
        if !converged {
            apply(&phi, &mut ap);
            let res = (0..n).fold(0.0_f64, |m, id| m.max(abs(ap[id] - b[id])));
            return Err(Error::NoConvergence { residual: res });
        }
    }
    let mut grid = FieldGrid::zeros(spec.clone());
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                let id = spec.idx(i, j, k);
                if i < nx && interior(1, j, k) {
                    grid.e[0][id] = -(phi[spec.idx(i + 1, j, k)] - phi[id]) / dx;
                }
                if j < ny && interior(i, 1, k) {
                    grid.e[1][id] = -(phi[spec.idx(i, j + 1, k)] - phi[id]) / dy;
                }
                if k < nz && interior(i, j, 1) {
                    grid.e[2][id] = -(phi[spec.idx(i, j, k + 1)] - phi[id]) / dz;
                }
            }
        }
    }
    Ok(grid)
}

/// Scalar monitors recorded along a self-consistent run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    pub time: f64,
    pub gauss_residual: f64,
    pub div_b: f64,
    pub energy: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicConfig {
    pub dt: f64,
    /// Support constant used by the decay monitor.
    pub k: f64,
    pub monitor_every: usize,
    /// Charge-conserving current deposition; `false` deposits `q v̂` at the
    /// midpoint instead, which breaks the discrete continuity equation.
    pub conserving: bool,
}

/// A tracked characteristic in a self-consistent run.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub species: usize,
    pub particle: usize,
    pub worldline: Worldline,
}

/// Leapfrog particle-in-cell loop. Positions live at integer steps and
/// momenta at half steps internally.
#[derive(Debug, Clone)]
pub struct PicRun {
    pub grid: FieldGrid,
    pub cfg: PicConfig,
    ensembles: Vec<ParticleEnsemble>,
    pub monitors: Vec<Monitor>,
    pub tracks: Vec<Track>,
    steps: usize,
    rho: Vec<f64>,
    rho_stale: bool,
}

impl PicRun {
    /// Constrained initial field, then a backward half kick of the momenta.
    pub fn new(ensembles: Vec<ParticleEnsemble>, spec: GridSpec, cfg: PicConfig, tracked: &[(usize, usize)]) -> Result<Self> {
        if !(cfg.dt > 0.0 && cfg.dt <= spec.courant_limit()) {
            return Err(Error::Validation("dt violates the leapfrog stability bound"));
        }
        if cfg.monitor_every == 0 {
            return Err(Error::Validation("monitor interval must be positive"));
        }
        let grid = init_constrained(&ensembles, &spec, None)?;
        let mut ensembles = ensembles;
        let t0 = ensembles.first().map_or(0.0, |e| e.time);
        let mut grid = grid;
        grid.time = t0;
        for ens in ensembles.iter_mut() {
            let (m, e) = (ens.species.mass(), ens.species.charge());
            for p in ens.particles.iter_mut() {
                let f = grid.gather(p.x);
                p.v = boris_kick(p.v, f.e, f.b, e, m, -0.5 * cfg.dt);
            }
        }
        let mut tracks = Vec::new();
        for &(s, i) in tracked {
            if s >= ensembles.len() || i >= ensembles[s].len() {
                return Err(Error::Validation("tracked particle index out of range"));
            }
            tracks.push(Track { species: s, particle: i, worldline: Worldline::new() });
        }
        let rho = deposit(&ensembles, &spec)?.rho;
        let mut run = Self { grid, cfg, ensembles, monitors: Vec::new(), tracks, steps: 0, rho, rho_stale: false };
        run.record_monitor();
        Ok(run)
    }

    pub fn time(&self) -> f64 {
        self.grid.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn refresh_rho(&mut self) {
        if self.rho_stale {
            self.rho = deposit(&self.ensembles, &self.grid.spec).map(|s| s.rho).unwrap_or_default();
            self.rho_stale = false;
        }
    }

    fn record_monitor(&mut self) {
        self.refresh_rho();
        let src = SourceGrid { rho: self.rho.clone(), j: [Vec::new(), Vec::new(), Vec::new()] };
        let m = Monitor {
            time: self.grid.time,
            gauss_residual: gauss_residual(&self.grid, &src),
            div_b: div_b_relative(&self.grid),
            energy: field_energy(&self.grid) + kinetic_energy(&self.ensembles),
            decay: decay_monitor(&self.grid, self.cfg.k),
        };
        self.monitors.push(m);
    }

    /// Source scale `4π max|ρ|` for relative Gauss residuals.
    pub fn charge_scale(&mut self) -> f64 {
        self.refresh_rho();
        FOUR_PI * self.rho.iter().fold(0.0_f64, |m, v| m.max(abs(*v)))
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        let spec = self.grid.spec.clone();
        let t = self.grid.time;
        let mut src = SourceGrid::zeros(&spec);
        let mut offset = 0;
        for (s, ens) in self.ensembles.iter_mut().enumerate() {
            let (m, e) = (ens.species.mass(), ens.species.charge());
            let mut j_part = [vec![0.0; spec.len()], vec![0.0; spec.len()], vec![0.0; spec.len()]];
            for (i, p) in ens.particles.iter_mut().enumerate() {
                let f = self.grid.gather(p.x);
                let v_new = boris_kick(p.v, f.e, f.b, e, m, dt);
                for tr in self.tracks.iter_mut().filter(|tr| tr.species == s && tr.particle == i) {
                    tr.worldline.push(Sample { t, x: p.x, v: (p.v + v_new) * 0.5 });
                }
                let x_new = p.x + hat_m(v_new, m) * dt;
                if !spec.interior(x_new) {
                    return Err(Error::Outflow { particle: offset + i });
                }
                let q = e * p.w;
                if self.cfg.conserving {
                    deposit_current_esirkepov(&spec, &mut j_part, p.x, x_new, q, dt);
                } else {
                    let vh = hat_m(v_new, m);
                    let mid = (p.x + x_new) * 0.5;
                    for c in 0..3 {
                        deposit_staggered(&spec, &mut j_part[c], E_OFFSET[c], mid, q * vh[c]);
                    }
                }
                p.x = x_new;
                p.v = v_new;
            }
            for c in 0..3 {
                for (d, v) in src.j[c].iter_mut().zip(&j_part[c]) {
                    *d += v;
                }
            }
            ens.time = t + dt;
            offset += ens.len();
        }
        advance_fields(&mut self.grid, &src, dt)?;
        self.steps += 1;
        self.rho_stale = true;
        if self.steps.is_multiple_of(self.cfg.monitor_every) {
            self.record_monitor();
        }
        Ok(())
    }

    /// Steps until `t_final` (within half a step).
    pub fn run_until(&mut self, t_final: f64) -> Result<()> {
        while self.grid.time + 0.5 * self.cfg.dt < t_final {
            self.step()?;
        }
        if self.monitors.last().map(|m| m.time) != Some(self.grid.time) {
            self.record_monitor();
        }
        Ok(())
    }

    /// Ensembles with momenta synchronised to the current time by a half
    /// kick.
    pub fn ensembles(&self) -> Vec<ParticleEnsemble> {
        let mut out = self.ensembles.clone();
        for ens in out.iter_mut() {
            let (m, e) = (ens.species.mass(), ens.species.charge());
            for p in ens.particles.iter_mut() {
                let f = self.grid.gather(p.x);
                p.v = boris_kick(p.v, f.e, f.b, e, m, 0.5 * self.cfg.dt);
            }
            ens.time = self.grid.time;
        }
        out
    }

    /// Current nodal charge density.
    pub fn sources(&mut self) -> SourceGrid {
        self.refresh_rho();
        SourceGrid { rho: self.rho.clone(), j: [vec![0.0; self.rho.len()], vec![0.0; self.rho.len()], vec![0.0; self.rho.len()]] }
    }
}
