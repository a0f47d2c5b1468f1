//! `CHC1` binary snapshots.
//!
//! All integers are little-endian `u32`/`u64`, all reals little-endian `f64`.
//!
//! ```text
//! offset  field
//!      0  magic "CHC1"
//!      4  version u32 (= 1)
//!      8  kind u32 (0 trajectory state, 1 equilibrium)
//!     12  nx u64, ny u64, lx f64, ly f64
//!     44  t f64, steps u64, dt f64
//!     68  digest u64 (FNV-1a over grid and model parameters)
//!     76  theta0 f64, chi0 f64, chi1 f64   (initial-data means)
//!    100  mu f64, residual f64             (NaN for trajectory states)
//!    116  θ, qx, qy, χ  (nx·ny each), ξ bottom, ξ top (nx each), v (nx·ny)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use chdyn_core::diagnostics::ReferenceMeans;
use chdyn_core::grid::{BoundaryField, FluxField, InteriorField};
use chdyn_core::model::ModelParams;
use chdyn_core::steady::Equilibrium;
use chdyn_core::{GridSpec, SystemState};

use crate::error::AppError;

pub const MAGIC: &[u8; 4] = b"CHC1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 116;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    State,
    Equilibrium,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub kind: Kind,
    pub dt: f64,
    pub digest: u64,
    pub reference: ReferenceMeans,
    pub mu: f64,
    pub residual: f64,
    pub state: SystemState,
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn bytes(&mut self, b: &[u8]) {
        for x in b {
            self.0 ^= *x as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn f(&mut self, x: f64) {
        self.bytes(&x.to_le_bytes());
    }

    fn u(&mut self, x: u64) {
        self.bytes(&x.to_le_bytes());
    }
}

/// FNV-1a over the grid and every model parameter, bit patterns included.
pub fn digest(g: &GridSpec, p: &ModelParams) -> u64 {
    let mut h = Fnv::new();
    h.u(g.nx as u64);
    h.u(g.ny as u64);
    h.f(g.lx);
    h.f(g.ly);
    h.f(p.epsilon);
    h.f(p.sigma);
    h.f(p.alpha);
    for poly in [p.f.poly(), p.g.poly()] {
        h.u(poly.coeffs().len() as u64);
        for c in poly.coeffs() {
            h.f(*c);
        }
    }
    h.0
}

impl Snapshot {
    pub fn of_state(s: &SystemState, p: &ModelParams, dt: f64, reference: ReferenceMeans) -> Self {
        Self {
            kind: Kind::State,
            dt,
            digest: digest(s.grid(), p),
            reference,
            mu: f64::NAN,
            residual: f64::NAN,
            state: s.clone(),
        }
    }

    pub fn of_equilibrium(e: &Equilibrium, p: &ModelParams, dt: f64, reference: ReferenceMeans) -> Self {
        let state = e.to_state();
        Self {
            kind: Kind::Equilibrium,
            dt,
            digest: digest(state.grid(), p),
            reference,
            mu: e.mu_inf,
            residual: e.residual_norm,
            state,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let s = &self.state;
        let g = *s.grid();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * (5 * g.len() + 2 * g.nx));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let kind: u32 = match self.kind {
            Kind::State => 0,
            Kind::Equilibrium => 1,
        };
        out.extend_from_slice(&kind.to_le_bytes());
        out.extend_from_slice(&(g.nx as u64).to_le_bytes());
        out.extend_from_slice(&(g.ny as u64).to_le_bytes());
        for x in [g.lx, g.ly, s.t] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&s.steps.to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        out.extend_from_slice(&self.digest.to_le_bytes());
        let r = &self.reference;
        for x in [r.theta0, r.chi0, r.chi1, self.mu, self.residual] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        debug_assert_eq!(out.len(), HEADER_LEN);
        let arrays: [&[f64]; 7] = [s.theta.values(), &s.q.qx, &s.q.qy, s.chi.values(), &s.xi.bottom, &s.xi.top, s.v.values()];
        for a in arrays {
            for x in a {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, AppError> {
        let bad = |m: &str| AppError::Input(format!("snapshot: {m}"));
        if b.len() < HEADER_LEN {
            return Err(bad("truncated header"));
        }
        if &b[0..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut r = Cursor { b, pos: 4 };
        let version = r.u32();
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let kind = match r.u32() {
            0 => Kind::State,
            1 => Kind::Equilibrium,
            k => return Err(bad(&format!("unknown kind {k}"))),
        };
        let (nx, ny) = (r.u64(), r.u64());
        let (lx, ly) = (r.f64(), r.f64());
        let nx = usize::try_from(nx).map_err(|_| bad("nx overflows"))?;
        let ny = usize::try_from(ny).map_err(|_| bad("ny overflows"))?;
        let g = GridSpec::new(lx, ly, nx, ny).map_err(|e| bad(&e.to_string()))?;
        let n = nx.checked_mul(ny).ok_or_else(|| bad("grid overflows"))?;
        let expected = n
            .checked_mul(5)
            .and_then(|m| m.checked_add(2 * nx))
            .and_then(|m| m.checked_mul(8))
            .and_then(|m| m.checked_add(HEADER_LEN))
            .ok_or_else(|| bad("grid overflows"))?;
        if b.len() != expected {
            return Err(bad(&format!("expected {expected} bytes, found {}", b.len())));
        }
        let t = r.f64();
        let steps = r.u64();
        let dt = r.f64();
        let digest = r.u64();
        let reference = ReferenceMeans { theta0: r.f64(), chi0: r.f64(), chi1: r.f64() };
        let mu = r.f64();
        let residual = r.f64();
        let theta = InteriorField::from_vec(g, r.vec(n))?;
        let qx = r.vec(n);
        let qy = r.vec(n);
        let q = FluxField::from_parts(g, qx, qy)?;
        let chi = InteriorField::from_vec(g, r.vec(n))?;
        let bottom = r.vec(nx);
        let top = r.vec(nx);
        let xi = BoundaryField::from_parts(g, bottom, top)?;
        let v = InteriorField::from_vec(g, r.vec(n))?;
        let state = SystemState { theta, q, chi, xi, v, t, steps };
        Ok(Self { kind, dt, digest, reference, mu, residual, state })
    }

    pub fn write(&self, path: &Path) -> Result<(), AppError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, AppError> {
        let mut b = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?
            .read_to_end(&mut b)?;
        Self::from_bytes(&b)
    }

    /// Errors unless the snapshot was written for this grid and these parameters.
    pub fn check_matches(&self, g: &GridSpec, p: &ModelParams) -> Result<(), AppError> {
        let want = digest(g, p);
        if self.digest != want {
            return Err(AppError::Config(format!(
                "snapshot digest {:016x} does not match the config ({want:016x})",
                self.digest
            )));
        }
        Ok(())
    }
}

struct Cursor<'a> {
    b: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.b[self.pos..self.pos + N].try_into().expect("length checked");
        self.pos += N;
        out
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }

    fn vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.f64()).collect()
    }
}
