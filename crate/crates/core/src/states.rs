//! Ground-state and thermal expectations and correlations of Weyl
//! operators, positions and momenta.
//!
//! Thermal formulas carry the weight `A_β = coth(βγ)` per mode; the ground
//! state is the `A = 1` case and is selected by [`ThermalSpec::Ground`]
//! rather than by evaluating `coth` at infinity.

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;

use crate::dynamics::{im_pairing, mode_coordinates, Entry, WeylSymbol};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::SpectralData;

const COTH_SMALL: f64 = 1e-4;
const COTH_LARGE: f64 = 20.0;

/// Inverse temperature, or the ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThermalSpec {
    Ground,
    Beta(f64),
}

impl ThermalSpec {
    /// `β = +∞` maps to [`ThermalSpec::Ground`].
    pub fn new(beta: f64) -> Result<Self> {
        if beta == f64::INFINITY {
            Ok(ThermalSpec::Ground)
        } else if beta.is_finite() && beta > 0.0 {
            Ok(ThermalSpec::Beta(beta))
        } else {
            Err(Error::Config(format!("beta must be positive, got {beta}")))
        }
    }

    /// `coth(βγ)`, or 1 in the ground state.
    pub fn weight(self, gamma: f64) -> f64 {
        match self {
            ThermalSpec::Ground => 1.0,
            ThermalSpec::Beta(b) => coth_stable(b * gamma),
        }
    }

    fn weights(self, spec: &SpectralData) -> Vec<f64> {
        spec.gammas().iter().map(|&g| self.weight(g)).collect()
    }
}

/// `coth(x)` for `x > 0`: Laurent expansion below `1e-4`, exactly 1 above
/// 20 (where `coth(x) - 1 < 1e-17`).
pub fn coth_stable(x: f64) -> f64 {
    if x < COTH_SMALL {
        1.0 / x + x / 3.0
    } else if x > COTH_LARGE {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// `V f = γ^{-1/2} Oᵀ μ^{1/2} Re f + i γ^{1/2} Oᵀ μ^{-1/2} Im f`.
pub fn v_map(spec: &SpectralData, params: &ModelParams, f: &WeylSymbol) -> Vec<Complex64> {
    let (a, b) = mode_coordinates(spec, params, f);
    a.into_iter().zip(b).map(|(a, b)| Complex64::new(a, b)).collect()
}

/// `⟨W(f)⟩ = exp(-||Vf||² / 4)`.
pub fn gs_weyl_expectation(spec: &SpectralData, params: &ModelParams, f: &WeylSymbol) -> f64 {
    weyl_expectation(spec, params, f, ThermalSpec::Ground)
}

/// `⟨W(f)⟩_β = exp(-Σ_k coth(βγ_k) |(Vf)_k|² / 4)`.
pub fn thermal_weyl_expectation(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    beta: f64,
) -> Result<f64> {
    Ok(weyl_expectation(spec, params, f, ThermalSpec::new(beta)?))
}

pub fn weyl_expectation(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    state: ThermalSpec,
) -> f64 {
    (-0.25 * weighted_norm_sq(spec, params, f, state)).exp()
}

fn weighted_norm_sq(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    state: ThermalSpec,
) -> f64 {
    let (a, b) = mode_coordinates(spec, params, f);
    spec.gammas()
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(&g, (a, b))| state.weight(g) * (a * a + b * b))
        .sum()
}

/// `Re⟨A_β V f_t, V g⟩` as a sum over modes.
pub fn weighted_re_pairing(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
    t: f64,
    state: ThermalSpec,
) -> f64 {
    let (a, b) = mode_coordinates(spec, params, f);
    let (c, d) = mode_coordinates(spec, params, g);
    spec.gammas()
        .iter()
        .enumerate()
        .map(|(k, &gm)| {
            let (s, co) = (2.0 * gm * t).sin_cos();
            state.weight(gm) * (co * (a[k] * c[k] + b[k] * d[k]) + s * (a[k] * d[k] - b[k] * c[k]))
        })
        .sum()
}

/// The same quantity through functional calculus:
/// `⟨μ^{1/2}Re f, φ₁ μ^{1/2}Re g⟩ − ⟨μ^{-1/2}Im f, φ₂ μ^{1/2}Re g⟩
///  + ⟨μ^{1/2}Re f, φ₂ μ^{-1/2}Im g⟩ + ⟨μ^{-1/2}Im f, φ₃ μ^{-1/2}Im g⟩`
/// with `φ₁(s) = s^{-1/2} coth(β s^{1/2}) cos(2t s^{1/2})`,
/// `φ₂(s) = coth(β s^{1/2}) sin(2t s^{1/2})` and `φ₃(s) = s φ₁(s)`.
pub fn weighted_re_pairing_expanded(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
    t: f64,
    state: ThermalSpec,
) -> f64 {
    let n = spec.dim();
    let weigh = |v: DVector<f64>, w: fn(&ModelParams, usize) -> f64| {
        DVector::from_iterator(n, v.iter().enumerate().map(|(x, e)| e * w(params, x)))
    };
    let rf = weigh(f.re(), ModelParams::mu_sqrt);
    let jf = weigh(f.im(), ModelParams::mu_inv_sqrt);
    let rg = weigh(g.re(), ModelParams::mu_sqrt);
    let jg = weigh(g.im(), ModelParams::mu_inv_sqrt);
    let phi1 = |s: f64| state.weight(s.sqrt()) * (2.0 * t * s.sqrt()).cos() / s.sqrt();
    let phi2 = |s: f64| state.weight(s.sqrt()) * (2.0 * t * s.sqrt()).sin();
    let phi3 = |s: f64| s * phi1(s);
    spec.form(&rf, phi1, &rg) - spec.form(&jf, phi2, &rg) + spec.form(&rf, phi2, &jg)
        + spec.form(&jf, phi3, &jg)
}

/// `C(f, g; t) = ⟨τ_t(W(f)) W(g)⟩ − ⟨W(f)⟩⟨W(g)⟩
///  = (e^{-iθ/2} e^{-ρ/2} − 1) e^{-(||A^{1/2}Vf||² + ||A^{1/2}Vg||²)/4}`
/// with `θ = Im⟨f_t, g⟩` and `ρ = Re⟨A V f_t, V g⟩`.
pub fn weyl_correlation(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
    t: f64,
    state: ThermalSpec,
) -> Complex64 {
    let theta = im_pairing(spec, params, f, g, t);
    let rho = weighted_re_pairing(spec, params, f, g, t, state);
    let damp = (-0.25
        * (weighted_norm_sq(spec, params, f, state) + weighted_norm_sq(spec, params, g, state)))
    .exp();
    (Complex64::from_polar((-0.5 * rho).exp(), -0.5 * theta) - 1.0) * damp
}

pub fn gs_weyl_correlation(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
    t: f64,
) -> Complex64 {
    weyl_correlation(spec, params, f, g, t, ThermalSpec::Ground)
}

pub fn thermal_weyl_correlation(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
    t: f64,
    beta: f64,
) -> Result<Complex64> {
    Ok(weyl_correlation(spec, params, f, g, t, ThermalSpec::new(beta)?))
}

/// Scalar prefactors of the four correlation entries, e.g.
/// `(1/4)(m_x m_y)^{-1/2}` for `⟨τ_t(q_x) q_y⟩`.
fn pq_prefactors(params: &ModelParams, x: usize, y: usize) -> Matrix2<Complex64> {
    let (mx, my) = (params.mass()[x], params.mass()[y]);
    let i = Complex64::i();
    Matrix2::new(
        Complex64::new(0.25 / (mx * my).sqrt(), 0.0),
        0.5 * i * (my / mx).sqrt(),
        -0.5 * i * (mx / my).sqrt(),
        Complex64::new((mx * my).sqrt(), 0.0),
    )
}

/// Matrix of `⟨τ_t(a_x) b_y⟩` for `a, b ∈ {q, p}` (rows: `a`).
///
/// Per mode, with `A = coth(βγ)` (1 in the ground state):
/// `qq ∝ γ^{-1}(A cos − i sin)`, `qp, pq ∝ cos − i A sin`,
/// `pp ∝ γ (A cos − i sin)`, all at argument `2γt`.
pub fn pq_correlations(
    spec: &SpectralData,
    params: &ModelParams,
    x: usize,
    y: usize,
    t: f64,
    state: ThermalSpec,
) -> Matrix2<Complex64> {
    let (ox, oy) = (spec.site_row(x), spec.site_row(y));
    let mut qq = Complex64::new(0.0, 0.0);
    let mut mixed = Complex64::new(0.0, 0.0);
    let mut pp = Complex64::new(0.0, 0.0);
    for (k, &g) in spec.gammas().iter().enumerate() {
        let p = ox[k] * oy[k];
        let w = state.weight(g);
        let (s, c) = (2.0 * g * t).sin_cos();
        let even = Complex64::new(w * c, -s);
        qq += p / g * even;
        mixed += p * Complex64::new(c, -w * s);
        pp += p * g * even;
    }
    let pre = pq_prefactors(params, x, y);
    Matrix2::new(
        pre[(0, 0)] * qq,
        pre[(0, 1)] * mixed,
        pre[(1, 0)] * mixed,
        pre[(1, 1)] * pp,
    )
}

pub fn gs_pq_correlations(
    spec: &SpectralData,
    params: &ModelParams,
    x: usize,
    y: usize,
    t: f64,
) -> Matrix2<Complex64> {
    pq_correlations(spec, params, x, y, t, ThermalSpec::Ground)
}

pub fn thermal_pq_correlations(
    spec: &SpectralData,
    params: &ModelParams,
    x: usize,
    y: usize,
    t: f64,
    beta: f64,
) -> Result<Matrix2<Complex64>> {
    Ok(pq_correlations(spec, params, x, y, t, ThermalSpec::new(beta)?))
}

/// Entrywise `sup_t |⟨τ_t(a_x) b_y⟩|` in closed form. Each mode traces an
/// ellipse with semi-axes `A >= 1` and 1, so a cluster contributes
/// `A_c |Σ_{k∈c} coeff_k|`.
pub fn pq_correlations_sup(
    spec: &SpectralData,
    params: &ModelParams,
    x: usize,
    y: usize,
    state: ThermalSpec,
) -> Matrix2<f64> {
    let (ox, oy) = (spec.site_row(x), spec.site_row(y));
    let w = state.weights(spec);
    let g = spec.gammas();
    let n = spec.dim();
    let mut qq = Vec::with_capacity(n);
    let mut mixed = Vec::with_capacity(n);
    let mut pp = Vec::with_capacity(n);
    for k in 0..n {
        let p = ox[k] * oy[k] * w[k];
        qq.push(p / g[k]);
        mixed.push(p);
        pp.push(p * g[k]);
    }
    let pre = pq_prefactors(params, x, y).map(|c| c.norm());
    let m = spec.cluster_abs_sum(&mixed);
    Matrix2::new(
        pre[(0, 0)] * spec.cluster_abs_sum(&qq),
        pre[(0, 1)] * m,
        pre[(1, 0)] * m,
        pre[(1, 1)] * spec.cluster_abs_sum(&pp),
    )
}

/// `|⟨a_x b_y⟩|` at `t = 0` for one entry.
pub fn static_correlation(
    spec: &SpectralData,
    params: &ModelParams,
    x: usize,
    y: usize,
    entry: Entry,
    state: ThermalSpec,
) -> f64 {
    let (i, j) = entry.index();
    pq_correlations(spec, params, x, y, 0.0, state)[(i, j)].norm()
}
