//! Lattice geometry, disorder sampling and assembly of the one-particle
//! matrices `h0` (weighted graph Laplacian plus on-site springs) and
//! `h = mu^{1/2} h0 mu^{1/2}` with `mu = diag(1 / (2 m_x))`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of lattice sites (dense matrices are `n x n`).
pub const DEFAULT_MAX_SITES: usize = 4096;

/// Stream bit reserved for the single resample allowed per realization.
pub const RESAMPLE_STREAM_BIT: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Open box; the graph Laplacian only couples sites inside the box.
    #[default]
    Open,
    /// Discrete torus of side `2L + 1`. Distances wrap around.
    Periodic,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    }
}

/// The box `[-L, L]^d ∩ Z^d` with its nearest-neighbour edges.
///
/// Sites are enumerated lexicographically, first coordinate slowest. Edges
/// are stored as `(i, j)` with `i < j` and sorted, so the edge set does not
/// depend on construction order.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dim: usize,
    half_width: usize,
    boundary: Boundary,
    coords: Vec<i64>,
    edges: Vec<(usize, usize)>,
}

impl Lattice {
    pub fn new(dim: usize, half_width: usize, boundary: Boundary) -> Result<Self> {
        Self::with_limit(dim, half_width, boundary, DEFAULT_MAX_SITES)
    }

    pub fn with_limit(
        dim: usize,
        half_width: usize,
        boundary: Boundary,
        max_sites: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("lattice dimension must be at least 1".into()));
        }
        let side = 2 * half_width + 1;
        let mut count: usize = 1;
        for _ in 0..dim {
            count = count
                .checked_mul(side)
                .filter(|&c| c <= max_sites)
                .ok_or(Error::Size {
                    sites: side.saturating_pow(dim as u32),
                    max: max_sites,
                })?;
        }

        let l = half_width as i64;
        let mut coords = Vec::with_capacity(count * dim);
        for idx in 0..count {
            let mut rem = idx;
            let mut c = vec![0i64; dim];
            for j in (0..dim).rev() {
                c[j] = (rem % side) as i64 - l;
                rem /= side;
            }
            coords.extend_from_slice(&c);
        }

        let mut lattice = Lattice {
            dim,
            half_width,
            boundary,
            coords,
            edges: Vec::new(),
        };

        let mut edges = Vec::new();
        for i in 0..count {
            for axis in 0..dim {
                let mut c = lattice.coords(i).to_vec();
                if c[axis] < l {
                    c[axis] += 1;
                } else if boundary == Boundary::Periodic && side >= 3 {
                    c[axis] = -l;
                } else {
                    continue;
                }
                let j = lattice.index_of(&c).expect("neighbour inside box");
                edges.push((i.min(j), i.max(j)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        lattice.edges = edges;
        Ok(lattice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn coords(&self, site: usize) -> &[i64] {
        &self.coords[site * self.dim..(site + 1) * self.dim]
    }

    pub fn index_of(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let l = self.half_width as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &c in coords {
            if c < -l || c > l {
                return None;
            }
            idx = idx * side + (c + l) as usize;
        }
        Some(idx)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Index of the site at the origin.
    pub fn center(&self) -> usize {
        (self.num_sites() - 1) / 2
    }

    /// `|x - y|_1`, measured on the torus for periodic boundaries.
    pub fn distance(&self, x: usize, y: usize) -> usize {
        let side = self.side() as i64;
        self.coords(x)
            .iter()
            .zip(self.coords(y))
            .map(|(a, b)| {
                let d = (a - b).abs();
                match self.boundary {
                    Boundary::Open => d,
                    Boundary::Periodic => d.min(side - d),
                }
            })
            .sum::<i64>() as usize
    }

    /// Sites on the coordinate axes through the centre, paired with their
    /// distance from it. The centre itself comes first.
    pub fn axis_sites(&self) -> Vec<(usize, usize)> {
        let center = self.center();
        let l = self.half_width as i64;
        let mut out = vec![(0, center)];
        for axis in 0..self.dim {
            for offset in (-l..=l).filter(|&o| o != 0) {
                let mut c = vec![0i64; self.dim];
                c[axis] = offset;
                let site = self.index_of(&c).expect("axis site inside box");
                out.push((self.distance(center, site), site));
            }
        }
        out
    }
}

/// Convenience wrapper for an open box.
pub fn build_lattice(dim: usize, half_width: usize) -> Result<Lattice> {
    Lattice::new(dim, half_width, Boundary::Open)
}

/// Uniform bounds of the form `0 < m_min <= m_x <= m_max`, `0 <= k_x <= k_max`,
/// `0 <= lambda <= lambda_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub m_min: f64,
    pub m_max: f64,
    pub k_max: f64,
    pub lambda_max: f64,
}

impl ParamBounds {
    /// Upper bound on `||h||`: `(4 d lambda_max + k_max / 2) / (2 m_min)`.
    pub fn h_norm_bound(&self, dim: usize) -> f64 {
        (4.0 * dim as f64 * self.lambda_max + 0.5 * self.k_max) / (2.0 * self.m_min)
    }
}

/// Masses, spring constants and couplings on a lattice.
#[derive(Debug, Clone)]
pub struct ModelParams {
    lattice: Arc<Lattice>,
    mass: Vec<f64>,
    spring: Vec<f64>,
    coupling: Vec<f64>,
}

impl ModelParams {
    pub fn new(
        lattice: Arc<Lattice>,
        mass: Vec<f64>,
        spring: Vec<f64>,
        coupling: Vec<f64>,
    ) -> Result<Self> {
        let n = lattice.num_sites();
        if mass.len() != n || spring.len() != n {
            return Err(Error::Config(format!(
                "expected {n} masses and spring constants, got {} and {}",
                mass.len(),
                spring.len()
            )));
        }
        if coupling.len() != lattice.edges().len() {
            return Err(Error::Config(format!(
                "expected {} couplings, got {}",
                lattice.edges().len(),
                coupling.len()
            )));
        }
        if let Some(m) = mass.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::Config(format!("mass must be positive, got {m}")));
        }
        if let Some(k) = spring.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::Config(format!(
                "spring constant must be non-negative, got {k}"
            )));
        }
        if let Some(c) = coupling.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::Config(format!(
                "coupling must be non-negative, got {c}"
            )));
        }
        Ok(ModelParams {
            lattice,
            mass,
            spring,
            coupling,
        })
    }

    /// Constant mass, spring constant and coupling everywhere.
    pub fn uniform(lattice: Arc<Lattice>, mass: f64, spring: f64, coupling: f64) -> Result<Self> {
        let n = lattice.num_sites();
        let e = lattice.edges().len();
        Self::new(lattice, vec![mass; n], vec![spring; n], vec![coupling; e])
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn num_sites(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn spring(&self) -> &[f64] {
        &self.spring
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    /// `mu_x^{1/2} = (2 m_x)^{-1/2}`.
    pub fn mu_sqrt(&self, site: usize) -> f64 {
        1.0 / (2.0 * self.mass[site]).sqrt()
    }

    /// `mu_x^{-1/2} = (2 m_x)^{1/2}`.
    pub fn mu_inv_sqrt(&self, site: usize) -> f64 {
        (2.0 * self.mass[site]).sqrt()
    }

    /// Tightest bounds satisfied by these parameters.
    pub fn bounds(&self) -> ParamBounds {
        let fold = |v: &[f64], init: f64, f: fn(f64, f64) -> f64| v.iter().copied().fold(init, f);
        ParamBounds {
            m_min: fold(&self.mass, f64::INFINITY, f64::min),
            m_max: fold(&self.mass, 0.0, f64::max),
            k_max: fold(&self.spring, 0.0, f64::max),
            lambda_max: fold(&self.coupling, 0.0, f64::max),
        }
    }

    pub fn satisfies(&self, b: &ParamBounds) -> bool {
        self.mass.iter().all(|&m| m >= b.m_min && m <= b.m_max)
            && self.spring.iter().all(|&k| k <= b.k_max)
            && self.coupling.iter().all(|&c| c <= b.lambda_max)
    }
}

/// i.i.d. uniform spring constants on `[k_low, k_low + k_width]` with
/// constant mass and coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub k_low: f64,
    pub k_width: f64,
    pub mass: f64,
    pub coupling: f64,
    pub seed: u64,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        DisorderSpec {
            k_low: 0.0,
            k_width: 8.0,
            mass: 0.5,
            coupling: 1.0,
            seed: 0,
        }
    }
}

impl DisorderSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_width.is_finite() && self.k_width >= 0.0) {
            return Err(Error::Config(format!(
                "disorder width must be non-negative, got {}",
                self.k_width
            )));
        }
        if !(self.k_low.is_finite() && self.k_low >= 0.0) {
            return Err(Error::Config(format!(
                "lower spring bound must be non-negative, got {}",
                self.k_low
            )));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::Config(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::Config(format!(
                "coupling must be non-negative, got {}",
                self.coupling
            )));
        }
        Ok(())
    }

    pub fn k_max(&self) -> f64 {
        self.k_low + self.k_width
    }

    /// Sup norm of the spring-constant density (`1 / W`); infinite for `W = 0`.
    pub fn density_sup(&self) -> f64 {
        1.0 / self.k_width
    }

    pub fn bounds(&self) -> ParamBounds {
        ParamBounds {
            m_min: self.mass,
            m_max: self.mass,
            k_max: self.k_max(),
            lambda_max: self.coupling,
        }
    }
}

/// Draws one realization. Spring constant `k_x` is read from the ChaCha
/// stream `realization` at word position `2x`, so each value is keyed by
/// `(seed, realization, site)` alone.
pub fn sample_params(
    spec: &DisorderSpec,
    lattice: &Arc<Lattice>,
    realization: u64,
) -> Result<ModelParams> {
    sample_params_stream(spec, lattice, realization)
}

/// Same as [`sample_params`] but drawn from the reserved resample substream.
pub fn resample_params(
    spec: &DisorderSpec,
    lattice: &Arc<Lattice>,
    realization: u64,
) -> Result<ModelParams> {
    sample_params_stream(spec, lattice, realization | RESAMPLE_STREAM_BIT)
}

fn sample_params_stream(
    spec: &DisorderSpec,
    lattice: &Arc<Lattice>,
    stream: u64,
) -> Result<ModelParams> {
    spec.validate()?;
    let n = lattice.num_sites();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let spring = (0..n)
        .map(|site| {
            rng.set_word_pos(2 * site as u128);
            let u: f64 = rng.random();
            spec.k_low + spec.k_width * u
        })
        .collect();
    ModelParams::new(
        Arc::clone(lattice),
        vec![spec.mass; n],
        spring,
        vec![spec.coupling; lattice.edges().len()],
    )
}

pub(crate) fn assemble_h0_raw(
    n: usize,
    spring: &[f64],
    edges: &[(usize, usize)],
    coupling: &[f64],
) -> DMatrix<f64> {
    let mut h0 = DMatrix::zeros(n, n);
    for (x, &k) in spring.iter().enumerate() {
        h0[(x, x)] = 0.5 * k;
    }
    for (&(x, y), &c) in edges.iter().zip(coupling) {
        h0[(x, x)] += c;
        h0[(y, y)] += c;
        h0[(x, y)] -= c;
        h0[(y, x)] -= c;
    }
    h0
}

/// `<δ_x, h0 δ_y>`: `k_x / 2 + Σ_u λ_{x,u}` on the diagonal, `-λ_{x,y}` on edges.
pub fn assemble_h0(params: &ModelParams) -> DMatrix<f64> {
    assemble_h0_raw(
        params.num_sites(),
        &params.spring,
        params.lattice.edges(),
        &params.coupling,
    )
}

/// `h = D h0 D` with `D = diag((2 m_x)^{-1/2})`.
pub fn assemble_h(params: &ModelParams) -> DMatrix<f64> {
    let mut h = assemble_h0(params);
    let n = params.num_sites();
    for j in 0..n {
        let dj = params.mu_sqrt(j);
        for i in 0..n {
            h[(i, j)] *= params.mu_sqrt(i) * dj;
        }
    }
    h
}
