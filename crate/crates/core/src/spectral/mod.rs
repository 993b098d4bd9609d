//! Dense diagonalization of `h`, functional calculus `<δ_x, φ(h) δ_y>`, and
//! eigenfunction correlators.

mod tridiagonal;

use std::ops::{Bound, Range, RangeBounds};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Default positivity threshold, relative to `||h||`.
pub const DEFAULT_PTOL: f64 = 1e-12;
/// Default cluster tolerance, relative to the largest eigenvalue.
pub const DEFAULT_CTOL: f64 = 1e-10;
/// Largest admissible cluster tolerance.
pub const MAX_CTOL: f64 = 1e-6;
/// Relative asymmetry tolerated on input.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub ptol: f64,
    pub ctol: f64,
    /// Rebuild eigenvectors of tridiagonal (open chain) matrices by twisted
    /// factorization so that exponentially small tails are resolved.
    pub refine_tails: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            ptol: DEFAULT_PTOL,
            ctol: DEFAULT_CTOL,
            refine_tails: true,
        }
    }
}

/// Eigenvalues `γ_k²` (ascending) and orthonormal eigenvectors of `h`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    gammas: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    vectors: DMatrix<f64>,
    /// Transpose of `vectors`; column `x` holds `O_k(x)` for all `k`.
    site_major: DMatrix<f64>,
    norm: f64,
    clusters: EigenvalueClusters,
}

pub fn diagonalize(h: &DMatrix<f64>) -> Result<SpectralData> {
    diagonalize_with(h, &SpectralOptions::default())
}

pub fn diagonalize_with(h: &DMatrix<f64>, opts: &SpectralOptions) -> Result<SpectralData> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::Numerical(format!(
            "expected a non-empty square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let scale = h.amax();
    let mut asym = 0.0_f64;
    for j in 0..n {
        for i in j + 1..n {
            asym = asym.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric {
            asymmetry: asym / scale,
        });
    }

    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);

    let norm = eigenvalues[0].abs().max(eigenvalues[n - 1].abs());
    let threshold = opts.ptol * norm;
    if eigenvalues[0] <= threshold {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: eigenvalues[0],
            threshold,
        });
    }

    if opts.refine_tails {
        if let Some((diag, off)) = tridiagonal::jacobi_parts(h) {
            tridiagonal::refine_tails(&diag, &off, &eigenvalues, &mut vectors, norm);
        }
    }

    let clusters = EigenvalueClusters::from_sorted(&eigenvalues, opts.ctol)?;
    let gammas = eigenvalues.iter().map(|e| e.sqrt()).collect();
    let site_major = vectors.transpose();
    Ok(SpectralData {
        eigenvalues,
        gammas,
        vectors,
        site_major,
        norm,
        clusters,
    })
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `γ_k²`, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `γ_k = +sqrt(γ_k²)`.
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// `O_k(x)` for every mode `k`.
    pub fn site_row(&self, x: usize) -> &[f64] {
        let n = self.dim();
        &self.site_major.as_slice()[x * n..(x + 1) * n]
    }

    /// Spectral norm `||h||` (the largest eigenvalue).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn clusters(&self) -> &EigenvalueClusters {
        &self.clusters
    }

    /// `φ(γ_k²)` for every mode, failing on the first non-finite value.
    pub fn weights<F: Fn(f64) -> Complex64>(&self, phi: F) -> Result<Vec<Complex64>> {
        self.eigenvalues
            .iter()
            .map(|&s| {
                let w = phi(s);
                if w.re.is_finite() && w.im.is_finite() {
                    Ok(w)
                } else {
                    Err(Error::NonFinite { eigenvalue: s })
                }
            })
            .collect()
    }

    /// `<δ_x, φ(h) δ_y> = Σ_k O_k(x) φ(γ_k²) O_k(y)`.
    pub fn matel<F: Fn(f64) -> Complex64>(&self, phi: F, x: usize, y: usize) -> Result<Complex64> {
        let w = self.weights(phi)?;
        let (ox, oy) = (self.site_row(x), self.site_row(y));
        Ok(w.iter()
            .zip(ox.iter().zip(oy))
            .map(|(w, (a, b))| w * (a * b))
            .sum())
    }

    /// Real-valued variant of [`SpectralData::matel`].
    pub fn matel_real<F: Fn(f64) -> f64>(&self, phi: F, x: usize, y: usize) -> Result<f64> {
        let (ox, oy) = (self.site_row(x), self.site_row(y));
        let mut acc = 0.0;
        for (k, &s) in self.eigenvalues.iter().enumerate() {
            let w = phi(s);
            if !w.is_finite() {
                return Err(Error::NonFinite { eigenvalue: s });
            }
            acc += ox[k] * w * oy[k];
        }
        Ok(acc)
    }

    /// `Oᵀ v`: coordinates of `v` in the eigenbasis.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.vectors.tr_mul(v)
    }

    /// `O c`: back from eigenbasis coordinates.
    pub fn expand(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.vectors * c
    }

    /// `<u, φ(h) v>` for real vectors and real `φ`.
    pub fn form<F: Fn(f64) -> f64>(&self, u: &DVector<f64>, phi: F, v: &DVector<f64>) -> f64 {
        let (pu, pv) = (self.project(u), self.project(v));
        self.eigenvalues
            .iter()
            .zip(pu.iter().zip(pv.iter()))
            .map(|(&s, (a, b))| a * phi(s) * b)
            .sum()
    }

    /// `Σ_c |Σ_{k∈c} coeff_k|`: the supremum over `|u| <= 1` of
    /// `|Σ_k u(γ_k²) coeff_k|`, with `u` constant on each cluster.
    pub fn cluster_abs_sum(&self, coeff: &[f64]) -> f64 {
        self.clusters
            .groups()
            .iter()
            .map(|g| coeff[g.clone()].iter().sum::<f64>().abs())
            .sum()
    }
}

/// Maximal runs of (sorted) eigenvalues linked by gaps of at most
/// `ctol * max γ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueClusters {
    groups: Vec<Range<usize>>,
    representatives: Vec<f64>,
}

impl EigenvalueClusters {
    /// Clusters an ascending eigenvalue list.
    pub fn from_sorted(eigenvalues: &[f64], ctol: f64) -> Result<Self> {
        if !(0.0..=MAX_CTOL).contains(&ctol) {
            return Err(Error::Config(format!(
                "cluster tolerance must lie in [0, {MAX_CTOL:e}], got {ctol:e}"
            )));
        }
        let top = eigenvalues.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        let tol = ctol * top;
        let mut groups = Vec::new();
        let mut start = 0;
        for k in 1..=eigenvalues.len() {
            if k == eigenvalues.len() || eigenvalues[k] - eigenvalues[k - 1] > tol {
                groups.push(start..k);
                start = k;
            }
        }
        if ctol == 0.0 {
            groups = (0..eigenvalues.len()).map(|k| k..k + 1).collect();
        }
        let representatives = groups
            .iter()
            .map(|g| eigenvalues[g.clone()].iter().sum::<f64>() / g.len() as f64)
            .collect();
        Ok(EigenvalueClusters {
            groups,
            representatives,
        })
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    /// Mean eigenvalue of each cluster.
    pub fn representatives(&self) -> &[f64] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

pub fn cluster_eigenvalues(spec: &SpectralData, ctol: f64) -> Result<EigenvalueClusters> {
    EigenvalueClusters::from_sorted(spec.eigenvalues(), ctol)
}

/// Energy interval for windowed correlators. A cluster belongs to the
/// window iff its representative does, so adjacent windows never split a
/// cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWindow {
    pub lower: Bound<f64>,
    pub upper: Bound<f64>,
}

impl EnergyWindow {
    pub fn closed(a: f64, b: f64) -> Self {
        EnergyWindow {
            lower: Bound::Included(a),
            upper: Bound::Included(b),
        }
    }

    pub fn all() -> Self {
        EnergyWindow {
            lower: Bound::Unbounded,
            upper: Bound::Unbounded,
        }
    }

    pub fn contains(&self, e: f64) -> bool {
        (self.lower, self.upper).contains(&e)
    }
}

/// `Q_α(x, y)` restricted to `window`: `Σ_c λ_c^α |Σ_{k∈c} O_k(x) O_k(y)|`.
pub fn correlator_q(
    spec: &SpectralData,
    alpha: f64,
    x: usize,
    y: usize,
    window: Option<&EnergyWindow>,
) -> f64 {
    let (ox, oy) = (spec.site_row(x), spec.site_row(y));
    let clusters = spec.clusters();
    clusters
        .groups()
        .iter()
        .zip(clusters.representatives())
        .filter(|(_, &rep)| window.is_none_or(|w| w.contains(rep)))
        .map(|(g, &rep)| {
            let proj: f64 = g.clone().map(|k| ox[k] * oy[k]).sum();
            rep.powf(alpha) * proj.abs()
        })
        .sum()
}

/// `S = [[μ^{1/2} O, 0], [0, μ^{-1/2} O]]`, mapping normal-mode coordinates
/// `(Q, P)` to `(q, p)`.
pub fn symplectic_matrix(spec: &SpectralData, params: &ModelParams) -> DMatrix<f64> {
    let n = spec.dim();
    let o = spec.vectors();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        for x in 0..n {
            s[(x, k)] = params.mu_sqrt(x) * o[(x, k)];
            s[(n + x, n + k)] = params.mu_inv_sqrt(x) * o[(x, k)];
        }
    }
    s
}

/// Standard symplectic form `[[0, -I], [I, 0]]`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}
