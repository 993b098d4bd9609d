//! Finite-volume Green functions `G(x, y; z) = ⟨δ_x, (h − z)^{-1} δ_y⟩` and
//! Monte Carlo estimates of their fractional moments `E|G|^s`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{assemble_h, resample_params, sample_params, DisorderSpec, Lattice};
use crate::spectral::SpectralData;
use crate::stats::{jackknife_mean, map_indexed};

/// Largest fraction of realizations that may need a resample.
pub const MAX_RESAMPLE_FRACTION: f64 = 0.01;

/// `z = E + iε`. `ε = 0` is allowed in finite volume as long as `E` is not
/// an eigenvalue; that is checked when solving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParameterZ {
    pub energy: f64,
    pub epsilon: f64,
}

impl SpectralParameterZ {
    pub fn new(energy: f64, epsilon: f64) -> Self {
        SpectralParameterZ { energy, epsilon }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.energy, self.epsilon)
    }
}

/// Column `G(·, y; z)`, from an LU solve of `(h − z) g = δ_y`.
///
/// Fails with a conditioning error if the solve is singular, if the
/// residual exceeds `1e-10 (1 + |z|)`, or (for real `z`) if `z` lies within
/// `1e-12 ||h||` of the spectrum.
pub fn green_column(h: &DMatrix<f64>, y: usize, z: SpectralParameterZ) -> Result<DVector<Complex64>> {
    let n = h.nrows();
    let zc = z.z();
    let scale = h.amax().max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(h[(i, j)], 0.0) - if i == j { zc } else { Complex64::new(0.0, 0.0) }
    });
    let mut rhs = DVector::from_element(n, Complex64::new(0.0, 0.0));
    rhs[y] = Complex64::new(1.0, 0.0);
    let fail = || conditioning_error(h, z);
    let g = a.clone().lu().solve(&rhs).ok_or_else(fail)?;
    if g.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(fail());
    }
    let residual = (&a * &g - &rhs).norm();
    if residual > 1e-10 * (1.0 + zc.norm()) {
        return Err(fail());
    }
    // ||g|| <= 1/dist(z, spectrum), so a huge solution certifies closeness.
    if z.epsilon == 0.0 && g.norm() * 1e-12 * n as f64 * scale > 1.0 {
        return Err(fail());
    }
    Ok(g)
}

/// `G(x, y; z)` by a linear solve.
pub fn green_function(
    h: &DMatrix<f64>,
    x: usize,
    y: usize,
    z: SpectralParameterZ,
) -> Result<Complex64> {
    Ok(green_column(h, y, z)?[x])
}

/// `G(x, y; z)` through the eigendecomposition, `Σ_k O_k(x) O_k(y) / (γ_k² − z)`.
pub fn green_spectral(
    spec: &SpectralData,
    x: usize,
    y: usize,
    z: SpectralParameterZ,
) -> Result<Complex64> {
    let zc = z.z();
    spec.matel(|s| (Complex64::new(s, 0.0) - zc).inv(), x, y)
}

fn conditioning_error(h: &DMatrix<f64>, z: SpectralParameterZ) -> Error {
    let zc = z.z();
    let distance = h
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .map(|&e| (Complex64::new(e, 0.0) - zc).norm())
        .fold(f64::INFINITY, f64::min);
    Error::Conditioning {
        re: z.energy,
        im: z.epsilon,
        distance,
    }
}

/// Disorder-averaged `|G(anchor, y; z)|^s` for several targets `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    /// `(mean, jackknife standard error)` per target.
    pub values: Vec<(f64, f64)>,
    pub realizations: u64,
    pub resamples: u64,
}

/// Monte Carlo estimate of `E|G(anchor, y; z)|^s` for each `y` in
/// `targets`. A realization whose resolvent is ill-conditioned is redrawn
/// once from its reserved substream; if more than 1% of realizations need
/// that, the estimate is rejected.
#[allow(clippy::too_many_arguments)]
pub fn fractional_moments(
    spec: &DisorderSpec,
    lattice: &Arc<Lattice>,
    s: f64,
    anchor: usize,
    targets: &[usize],
    z: SpectralParameterZ,
    realizations: u64,
    workers: usize,
) -> Result<MomentEstimate> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Config(format!("moment exponent s must lie in (0, 1), got {s}")));
    }
    if realizations == 0 {
        return Err(Error::Config("at least one realization is required".into()));
    }
    spec.validate()?;
    let per_realization = map_indexed(realizations, workers, |r| {
        let column = |resample: bool| -> Result<DVector<Complex64>> {
            let p = if resample {
                resample_params(spec, lattice, r)?
            } else {
                sample_params(spec, lattice, r)?
            };
            green_column(&assemble_h(&p), anchor, z)
        };
        let (g, resampled) = match column(false) {
            Ok(g) => (g, false),
            Err(Error::Conditioning { .. }) => (column(true)?, true),
            Err(e) => return Err(e),
        };
        let vals: Vec<f64> = targets.iter().map(|&y| g[y].norm().powf(s)).collect();
        Ok((vals, resampled))
    })?;
    let resamples = per_realization.iter().filter(|(_, r)| *r).count() as u64;
    check_resamples(resamples, realizations)?;
    let values = (0..targets.len())
        .map(|i| {
            let col: Vec<f64> = per_realization.iter().map(|(v, _)| v[i]).collect();
            jackknife_mean(&col)
        })
        .collect();
    Ok(MomentEstimate {
        values,
        realizations,
        resamples,
    })
}

pub(crate) fn check_resamples(resamples: u64, realizations: u64) -> Result<()> {
    if resamples as f64 > MAX_RESAMPLE_FRACTION * realizations as f64 {
        return Err(Error::Statistical(format!(
            "{resamples} of {realizations} realizations had to be resampled (limit {}%)",
            100.0 * MAX_RESAMPLE_FRACTION
        )));
    }
    Ok(())
}

/// `E|G(x, y; z)|^s` with its jackknife standard error.
#[allow(clippy::too_many_arguments)]
pub fn fractional_moment_estimate(
    spec: &DisorderSpec,
    lattice: &Arc<Lattice>,
    s: f64,
    x: usize,
    y: usize,
    z: SpectralParameterZ,
    realizations: u64,
    workers: usize,
) -> Result<(f64, f64)> {
    let est = fractional_moments(spec, lattice, s, x, &[y], z, realizations, workers)?;
    Ok(est.values[0])
}
