//! Artifact files. All binary formats are little-endian and columnar: a
//! fixed header followed by one contiguous `f64` array per column.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use modscat_core::asymptotics::{LProfile, QProfile, SpeciesProfile, VelocityGrid};
use modscat_core::kinematics::Species;
use modscat_core::maxwell::{FieldGrid, GridSpec, Monitor};
use modscat_core::transport::{ParticleEnsemble, ParticleState, Sample, Worldline};
use modscat_core::Vec3;

use crate::error::{RunError, RunResult};

pub const ENSEMBLE_MAGIC: &[u8; 8] = b"MSENS1\0\0";
pub const FIELD_MAGIC: &[u8; 8] = b"MSFLD1\0\0";
pub const WORLDLINE_MAGIC: &[u8; 8] = b"MSWL1\0\0\0";
pub const PROFILE_MAGIC: &[u8; 8] = b"MSPROF1\0";
pub const VERSION: u32 = 1;

const KIND_Q: u32 = 0;
const KIND_L: u32 = 1;

struct Out<W: Write>(W);

impl<W: Write> Out<W> {
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.0.write_all(b)
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }
    fn column<I: IntoIterator<Item = f64>>(&mut self, it: I) -> std::io::Result<()> {
        for v in it {
            self.f64(v)?;
        }
        Ok(())
    }
}

struct In<R: Read>(R);

impl<R: Read> In<R> {
    fn array<const N: usize>(&mut self) -> std::io::Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b)?;
        Ok(b)
    }
    fn u32(&mut self) -> std::io::Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> std::io::Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> std::io::Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn str(&mut self) -> std::io::Result<String> {
        let n = self.u32()? as usize;
        let mut b = vec![0u8; n];
        self.0.read_exact(&mut b)?;
        String::from_utf8(b).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
    fn column(&mut self, n: usize) -> std::io::Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn header(&mut self, magic: &[u8; 8]) -> std::io::Result<()> {
        let m: [u8; 8] = self.array()?;
        if &m != magic {
            return Err(bad_data("wrong file magic"));
        }
        if self.u32()? != VERSION {
            return Err(bad_data("unsupported format version"));
        }
        Ok(())
    }
}

fn bad_data(msg: &str) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string())
}

fn create(path: &Path) -> RunResult<Out<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| RunError::io("create", format!("{}: {e}", path.display())))?;
    Ok(Out(BufWriter::new(f)))
}

fn open(path: &Path) -> RunResult<In<BufReader<File>>> {
    let f = File::open(path).map_err(|e| RunError::io("open", format!("{}: {e}", path.display())))?;
    Ok(In(BufReader::new(f)))
}

fn wrap<T>(path: &Path, op: &str, r: std::io::Result<T>) -> RunResult<T> {
    r.map_err(|e| RunError::io(op, format!("{}: {e}", path.display())))
}

fn vec_cols(vs: &[Vec3]) -> [Vec<f64>; 3] {
    [0, 1, 2].map(|c| vs.iter().map(|v| v[c]).collect())
}

/// Ensemble file: magic, version, species count, then per species
/// `label, mass, charge, time, k, n` and the columns `x0 x1 x2 v0 v1 v2 w`.
pub fn write_ensembles(path: &Path, ens: &[ParticleEnsemble]) -> RunResult<()> {
    let mut o = create(path)?;
    let r = (|| {
        o.bytes(ENSEMBLE_MAGIC)?;
        o.u32(VERSION)?;
        o.u32(ens.len() as u32)?;
        for e in ens {
            o.str(e.species.label())?;
            o.f64(e.species.mass())?;
            o.f64(e.species.charge())?;
            o.f64(e.time)?;
            o.f64(e.support_k)?;
            o.u64(e.len() as u64)?;
            let xs: Vec<Vec3> = e.particles.iter().map(|p| p.x).collect();
            let vs: Vec<Vec3> = e.particles.iter().map(|p| p.v).collect();
            for c in vec_cols(&xs).into_iter().chain(vec_cols(&vs)) {
                o.column(c)?;
            }
            o.column(e.particles.iter().map(|p| p.w))?;
        }
        o.0.flush()
    })();
    wrap(path, "write ensembles", r)
}

/// Label, mass, charge, time, support constant and particles.
type StoredSpecies = (String, f64, f64, f64, f64, Vec<ParticleState>);

pub fn read_ensembles(path: &Path) -> RunResult<Vec<ParticleEnsemble>> {
    let mut i = open(path)?;
    let r = (|| -> std::io::Result<Vec<StoredSpecies>> {
        i.header(ENSEMBLE_MAGIC)?;
        let ns = i.u32()?;
        let mut out = Vec::new();
        for _ in 0..ns {
            let label = i.str()?;
            let (m, e, t, k) = (i.f64()?, i.f64()?, i.f64()?, i.f64()?);
            let n = i.u64()? as usize;
            let cols: Vec<Vec<f64>> = (0..7).map(|_| i.column(n)).collect::<std::io::Result<_>>()?;
            let parts = (0..n)
                .map(|j| ParticleState {
                    x: Vec3::new(cols[0][j], cols[1][j], cols[2][j]),
                    v: Vec3::new(cols[3][j], cols[4][j], cols[5][j]),
                    w: cols[6][j],
                })
                .collect();
            out.push((label, m, e, t, k, parts));
        }
        Ok(out)
    })();
    let raw = wrap(path, "read ensembles", r)?;
    raw.into_iter()
        .map(|(label, m, e, t, k, parts)| {
            let sp = Species::new(&label, m, e).map_err(|e| RunError::io("read ensembles", e))?;
            ParticleEnsemble::new(sp, parts, t, k).map_err(|e| RunError::io("read ensembles", e))
        })
        .collect()
}

/// Worldline file: magic, version, species count, then per species
/// `label, mass, charge, particle count` and per particle a sample count
/// and the columns `t x0 x1 x2 v0 v1 v2`.
pub fn write_worldlines(path: &Path, ens: &[ParticleEnsemble]) -> RunResult<()> {
    let mut o = create(path)?;
    let r = (|| {
        o.bytes(WORLDLINE_MAGIC)?;
        o.u32(VERSION)?;
        o.u32(ens.len() as u32)?;
        for e in ens {
            o.str(e.species.label())?;
            o.f64(e.species.mass())?;
            o.f64(e.species.charge())?;
            let wls = e.worldlines.as_deref().unwrap_or(&[]);
            o.u64(wls.len() as u64)?;
            for wl in wls {
                let s = wl.samples();
                o.u64(s.len() as u64)?;
                o.column(s.iter().map(|p| p.t))?;
                let xs: Vec<Vec3> = s.iter().map(|p| p.x).collect();
                let vs: Vec<Vec3> = s.iter().map(|p| p.v).collect();
                for c in vec_cols(&xs).into_iter().chain(vec_cols(&vs)) {
                    o.column(c)?;
                }
            }
        }
        o.0.flush()
    })();
    wrap(path, "write worldlines", r)
}

/// Worldlines per species, in file order.
pub fn read_worldlines(path: &Path) -> RunResult<Vec<(String, Vec<Worldline>)>> {
    let mut i = open(path)?;
    let r = (|| -> std::io::Result<Vec<(String, Vec<Vec<Sample>>)>> {
        i.header(WORLDLINE_MAGIC)?;
        let ns = i.u32()?;
        let mut out = Vec::new();
        for _ in 0..ns {
            let label = i.str()?;
            let _mass = i.f64()?;
            let _charge = i.f64()?;
            let np = i.u64()?;
            let mut wls = Vec::new();
            for _ in 0..np {
                let n = i.u64()? as usize;
                let c: Vec<Vec<f64>> = (0..7).map(|_| i.column(n)).collect::<std::io::Result<_>>()?;
                wls.push(
                    (0..n)
                        .map(|j| Sample { t: c[0][j], x: Vec3::new(c[1][j], c[2][j], c[3][j]), v: Vec3::new(c[4][j], c[5][j], c[6][j]) })
                        .collect(),
                );
            }
            out.push((label, wls));
        }
        Ok(out)
    })();
    let raw = wrap(path, "read worldlines", r)?;
    raw.into_iter()
        .map(|(l, wls)| {
            let wls = wls
                .into_iter()
                .map(Worldline::from_samples)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| RunError::io("read worldlines", e))?;
            Ok((l, wls))
        })
        .collect()
}

/// Field snapshot: magic, version, `n[3]` (u64), `lo[3]`, `hi[3]`, time,
/// then the columns `ex ey ez bx by bz`, each over all `(n+1)³` nodes.
pub fn write_field(path: &Path, g: &FieldGrid) -> RunResult<()> {
    let mut o = create(path)?;
    let r = (|| {
        o.bytes(FIELD_MAGIC)?;
        o.u32(VERSION)?;
        for n in g.spec.n {
            o.u64(n as u64)?;
        }
        for d in 0..3 {
            o.f64(g.spec.lo[d])?;
        }
        for d in 0..3 {
            o.f64(g.spec.hi[d])?;
        }
        o.f64(g.time)?;
        for c in g.e.iter().chain(g.b.iter()) {
            o.column(c.iter().copied())?;
        }
        o.0.flush()
    })();
    wrap(path, "write field", r)
}

pub fn read_field(path: &Path) -> RunResult<FieldGrid> {
    let mut i = open(path)?;
    let r = (|| -> std::io::Result<FieldGrid> {
        i.header(FIELD_MAGIC)?;
        let n = [i.u64()? as usize, i.u64()? as usize, i.u64()? as usize];
        let lo = Vec3::new(i.f64()?, i.f64()?, i.f64()?);
        let hi = Vec3::new(i.f64()?, i.f64()?, i.f64()?);
        let time = i.f64()?;
        let spec = GridSpec { n, lo, hi };
        let len = spec.len();
        let mut g = FieldGrid::zeros(spec);
        g.time = time;
        for c in 0..3 {
            g.e[c] = i.column(len)?;
        }
        for c in 0..3 {
            g.b[c] = i.column(len)?;
        }
        Ok(g)
    })();
    wrap(path, "read field", r)
}

/// Profile container: magic, version, kind (`0` charge, `1` field), grid
/// `n` (u64) and half-width, time. Charge profiles continue with a species
/// count, per species `label, mass, charge, values`, then the total; field
/// profiles with the skipped count and the columns
/// `E0 E1 E2 B0 B1 B2 L0 L1 L2`.
pub fn write_q_profile(path: &Path, q: &QProfile) -> RunResult<()> {
    let mut o = create(path)?;
    let r = (|| {
        o.bytes(PROFILE_MAGIC)?;
        o.u32(VERSION)?;
        o.u32(KIND_Q)?;
        o.u64(q.grid.n as u64)?;
        o.f64(q.grid.half_width)?;
        o.f64(q.time)?;
        o.u32(q.species.len() as u32)?;
        for s in &q.species {
            o.str(&s.label)?;
            o.f64(s.mass)?;
            o.f64(s.charge)?;
            o.column(s.values.iter().copied())?;
        }
        o.column(q.total.iter().copied())?;
        o.0.flush()
    })();
    wrap(path, "write profile", r)
}

pub fn write_l_profile(path: &Path, l: &LProfile) -> RunResult<()> {
    let mut o = create(path)?;
    let r = (|| {
        o.bytes(PROFILE_MAGIC)?;
        o.u32(VERSION)?;
        o.u32(KIND_L)?;
        o.u64(l.grid.n as u64)?;
        o.f64(l.grid.half_width)?;
        o.f64(l.time)?;
        o.u64(l.skipped as u64)?;
        for arr in [&l.ebb, &l.bbb, &l.lbb] {
            for c in vec_cols(arr) {
                o.column(c)?;
            }
        }
        o.0.flush()
    })();
    wrap(path, "write profile", r)
}

pub enum Profile {
    Charge(QProfile),
    Field(LProfile),
}

pub fn read_profile(path: &Path) -> RunResult<Profile> {
    let mut i = open(path)?;
    let r = (|| -> std::io::Result<Profile> {
        i.header(PROFILE_MAGIC)?;
        let kind = i.u32()?;
        let n = i.u64()? as usize;
        let h = i.f64()?;
        let time = i.f64()?;
        let grid = VelocityGrid::new(n, h).map_err(|e| bad_data(&e.to_string()))?;
        let len = grid.len();
        match kind {
            KIND_Q => {
                let ns = i.u32()?;
                let mut species = Vec::new();
                for _ in 0..ns {
                    let label = i.str()?;
                    let (mass, charge) = (i.f64()?, i.f64()?);
                    species.push(SpeciesProfile { label, mass, charge, values: i.column(len)? });
                }
                let total = i.column(len)?;
                let mut q = QProfile::from_species(grid, species, time).map_err(|e| bad_data(&e.to_string()))?;
                if q.total != total {
                    return Err(bad_data("stored total disagrees with species profiles"));
                }
                q.total = total;
                Ok(Profile::Charge(q))
            }
            KIND_L => {
                let skipped = i.u64()? as usize;
                let mut arrs = Vec::new();
                for _ in 0..3 {
                    let c: Vec<Vec<f64>> = (0..3).map(|_| i.column(len)).collect::<std::io::Result<_>>()?;
                    arrs.push((0..len).map(|j| Vec3::new(c[0][j], c[1][j], c[2][j])).collect::<Vec<_>>());
                }
                let lbb = arrs.pop().unwrap();
                let bbb = arrs.pop().unwrap();
                let ebb = arrs.pop().unwrap();
                Ok(Profile::Field(LProfile { grid, ebb, bbb, lbb, time, skipped }))
            }
            _ => Err(bad_data("unknown profile kind")),
        }
    })();
    wrap(path, "read profile", r)
}

fn csv_writer(path: &Path) -> RunResult<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| RunError::io("create csv", format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::io("write csv", format!("{}: {e}", path.display()))
}

/// `ux,uy,uz,q_total,q_<label>...` per grid node.
pub fn export_q_csv(path: &Path, q: &QProfile) -> RunResult<()> {
    let mut w = csv_writer(path)?;
    let mut head = vec!["ux".to_string(), "uy".into(), "uz".into(), "q_total".into()];
    head.extend(q.species.iter().map(|s| format!("q_{}", s.label)));
    w.write_record(&head).map_err(|e| csv_err(path, e))?;
    for (i, u) in q.grid.nodes().enumerate() {
        let mut row = vec![u[0], u[1], u[2], q.total[i]];
        row.extend(q.species.iter().map(|s| s.values[i]));
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e))
}

/// `ux,uy,uz,E0..E2,B0..B2,L0..L2` per grid node.
pub fn export_l_csv(path: &Path, l: &LProfile) -> RunResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["ux", "uy", "uz", "E0", "E1", "E2", "B0", "B1", "B2", "L0", "L1", "L2"]).map_err(|e| csv_err(path, e))?;
    for (i, u) in l.grid.nodes().enumerate() {
        let (e, b, lv) = (l.ebb[i], l.bbb[i], l.lbb[i]);
        let row = [u[0], u[1], u[2], e[0], e[1], e[2], b[0], b[1], b[2], lv[0], lv[1], lv[2]];
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e))
}

/// `time,gauss_residual,divB,energy,decay`.
pub fn export_monitors_csv(path: &Path, ms: &[Monitor]) -> RunResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["time", "gauss_residual", "divB", "energy", "decay"]).map_err(|e| csv_err(path, e))?;
    for m in ms {
        let row = [m.time, m.gauss_residual, m.div_b, m.energy, m.decay];
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e))
}

/// Header plus rows of numbers.
pub fn export_table(path: &Path, head: &[&str], rows: &[Vec<f64>]) -> RunResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(head).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| csv_err(path, e))
}
