//! Heisenberg dynamics of Weyl symbols and position/momentum commutators.
//!
//! The evolved symbol is `f_t = V^{-1} e^{2iγt} V f` where
//! `V f = γ^{-1/2} Oᵀ μ^{1/2} Re f + i γ^{1/2} Oᵀ μ^{-1/2} Im f`.
//! Time suprema are taken in closed form: an almost periodic sum
//! `Σ_k c_k e^{2iγ_k t}` has supremum `Σ_c |Σ_{k∈c} c_k|` over clusters of
//! equal frequencies when the distinct frequencies are rationally
//! independent, and that sum is an upper bound in every case.

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;

use crate::model::ModelParams;
use crate::spectral::SpectralData;

/// Complex function on the lattice. `Re f(x)` pairs with `q_x` and
/// `Im f(x)` with `p_x` in the exponent of `W(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylSymbol {
    values: Vec<Complex64>,
}

impl WeylSymbol {
    pub fn new(values: Vec<Complex64>) -> Self {
        WeylSymbol { values }
    }

    /// The symbol of the identity operator.
    pub fn zero(n: usize) -> Self {
        WeylSymbol {
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// `c δ_site`.
    pub fn delta(n: usize, site: usize, c: Complex64) -> Self {
        let mut s = Self::zero(n);
        s.values[site] = c;
        s
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn re(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.values.iter().map(|c| c.re))
    }

    pub fn im(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.values.iter().map(|c| c.im))
    }

    /// `⟨f, g⟩ = Σ_x conj(f(x)) g(x)`.
    pub fn inner(&self, other: &WeylSymbol) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Real and imaginary parts of `V f`, one entry per mode.
pub fn mode_coordinates(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
) -> (Vec<f64>, Vec<f64>) {
    let n = spec.dim();
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for (x, c) in f.values().iter().enumerate() {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let row = spec.site_row(x);
        let (wr, wi) = (params.mu_sqrt(x) * c.re, params.mu_inv_sqrt(x) * c.im);
        for k in 0..n {
            re[k] += wr * row[k];
            im[k] += wi * row[k];
        }
    }
    for (k, &g) in spec.gammas().iter().enumerate() {
        let sg = g.sqrt();
        re[k] /= sg;
        im[k] *= sg;
    }
    (re, im)
}

/// `f_t` for the harmonic dynamics; `f_0 = f`.
pub fn evolve_symbol(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    t: f64,
) -> WeylSymbol {
    if t == 0.0 {
        return f.clone();
    }
    let n = spec.dim();
    let mut u = f.re();
    let mut v = f.im();
    for x in 0..n {
        u[x] *= params.mu_sqrt(x);
        v[x] *= params.mu_inv_sqrt(x);
    }
    let a = spec.project(&u);
    let b = spec.project(&v);
    let mut ca = DVector::zeros(n);
    let mut cb = DVector::zeros(n);
    for (k, &g) in spec.gammas().iter().enumerate() {
        let (s, c) = (2.0 * g * t).sin_cos();
        ca[k] = c * a[k] - g * s * b[k];
        cb[k] = c * b[k] + s / g * a[k];
    }
    let re = spec.expand(&ca);
    let im = spec.expand(&cb);
    WeylSymbol::new(
        (0..n)
            .map(|x| Complex64::new(params.mu_inv_sqrt(x) * re[x], params.mu_sqrt(x) * im[x]))
            .collect(),
    )
}

/// `Im⟨f_t, g⟩ = ⟨Re f_t, Im g⟩ − ⟨Im f_t, Re g⟩`, expanded into four
/// quadratic forms of functions of `h`:
///
/// `−⟨μ^{1/2}Re f, h^{-1/2} sin μ^{1/2}Re g⟩ − ⟨μ^{-1/2}Im f, cos μ^{1/2}Re g⟩
///  + ⟨μ^{1/2}Re f, cos μ^{-1/2}Im g⟩ − ⟨μ^{-1/2}Im f, h^{1/2} sin μ^{-1/2}Im g⟩`
///
/// with `sin = sin(2t h^{1/2})`, `cos = cos(2t h^{1/2})`.
pub fn im_pairing(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
    t: f64,
) -> f64 {
    let n = spec.dim();
    let scale = |v: DVector<f64>, w: &dyn Fn(usize) -> f64| {
        DVector::from_iterator(n, v.iter().enumerate().map(|(x, e)| e * w(x)))
    };
    let rf = scale(f.re(), &|x| params.mu_sqrt(x));
    let jf = scale(f.im(), &|x| params.mu_inv_sqrt(x));
    let rg = scale(g.re(), &|x| params.mu_sqrt(x));
    let jg = scale(g.im(), &|x| params.mu_inv_sqrt(x));
    let sin_over = |s: f64| (2.0 * t * s.sqrt()).sin() / s.sqrt();
    let cos = |s: f64| (2.0 * t * s.sqrt()).cos();
    let sin_times = |s: f64| (2.0 * t * s.sqrt()).sin() * s.sqrt();
    -spec.form(&rf, sin_over, &rg) - spec.form(&jf, cos, &rg) + spec.form(&rf, cos, &jg)
        - spec.form(&jf, sin_times, &jg)
}

/// `||[τ_t(W(f)), W(g)]|| = |e^{-iθ} − 1| = 2|sin(θ/2)|` with
/// `θ = Im⟨f_t, g⟩`.
pub fn weyl_commutator_norm(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
    t: f64,
) -> f64 {
    commutator_from_phase(im_pairing(spec, params, f, g, t))
}

fn commutator_from_phase(theta: f64) -> f64 {
    2.0 * (0.5 * theta).sin().abs()
}

/// `θ(t) = Im Σ_k e^{-2iγ_k t} conj(Vf_k) Vg_k` from precomputed mode
/// coordinates.
pub fn phase_from_modes(
    spec: &SpectralData,
    (a, b): (&[f64], &[f64]),
    (c, d): (&[f64], &[f64]),
    t: f64,
) -> f64 {
    spec.gammas()
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let (s, co) = (2.0 * g * t).sin_cos();
            co * (a[k] * d[k] - b[k] * c[k]) - s * (a[k] * c[k] + b[k] * d[k])
        })
        .sum()
}

/// `sup_t |Im⟨f_t, g⟩|` in closed form.
pub fn im_pairing_sup(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
) -> f64 {
    let (a, b) = mode_coordinates(spec, params, f);
    let (c, d) = mode_coordinates(spec, params, g);
    spec.clusters()
        .groups()
        .iter()
        .map(|grp| {
            let (mut p, mut r) = (0.0, 0.0);
            for k in grp.clone() {
                p += a[k] * d[k] - b[k] * c[k];
                r += a[k] * c[k] + b[k] * d[k];
            }
            p.hypot(r)
        })
        .sum()
}

/// `sup_t ||[τ_t(W(f)), W(g)]||`. The phase `θ(t)` is continuous and its
/// supremum magnitude is `S` from [`im_pairing_sup`], so the commutator
/// supremum is `2 sin(min(S, π)/2)`.
pub fn weyl_commutator_sup(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
) -> f64 {
    let s = im_pairing_sup(spec, params, f, g);
    2.0 * (0.5 * s.min(std::f64::consts::PI)).sin()
}

/// Largest commutator norm on a time grid. A lower-bound sanity check for
/// [`weyl_commutator_sup`], never an estimator.
pub fn weyl_commutator_scan(
    spec: &SpectralData,
    params: &ModelParams,
    f: &WeylSymbol,
    g: &WeylSymbol,
    times: &[f64],
) -> f64 {
    let (a, b) = mode_coordinates(spec, params, f);
    let (c, d) = mode_coordinates(spec, params, g);
    times
        .iter()
        .map(|&t| commutator_from_phase(phase_from_modes(spec, (&a, &b), (&c, &d), t)))
        .fold(0.0, f64::max)
}

/// Entry selector for 2x2 position/momentum matrices (row: `τ_t` side).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entry {
    Qq,
    Qp,
    Pq,
    Pp,
}

impl Entry {
    pub const ALL: [Entry; 4] = [Entry::Qq, Entry::Qp, Entry::Pq, Entry::Pp];

    pub fn index(self) -> (usize, usize) {
        match self {
            Entry::Qq => (0, 0),
            Entry::Qp => (0, 1),
            Entry::Pq => (1, 0),
            Entry::Pp => (1, 1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Entry::Qq => "qq",
            Entry::Qp => "qp",
            Entry::Pq => "pq",
            Entry::Pp => "pp",
        }
    }

    pub fn parse(s: &str) -> Option<Entry> {
        Entry::ALL.into_iter().find(|e| e.as_str() == s)
    }

    /// True for entries involving a momentum.
    pub fn has_momentum(self) -> bool {
        self != Entry::Qq
    }
}

/// Prefactors of the four entries of `A_{x,y}(t)`: the `μ` weights with
/// their signs.
fn pq_prefactors(params: &ModelParams, x: usize, y: usize) -> Matrix2<f64> {
    let (sx, sy) = (params.mu_sqrt(x), params.mu_sqrt(y));
    let (ix, iy) = (params.mu_inv_sqrt(x), params.mu_inv_sqrt(y));
    Matrix2::new(-sx * sy, sx * iy, -ix * sy, -ix * iy)
}

/// `A_{x,y}(t) = -i [[ [τ_t(q_x), q_y], [τ_t(q_x), p_y] ], [ [τ_t(p_x), q_y], [τ_t(p_x), p_y] ]]`
/// as scalar coefficients of the identity.
pub fn pq_commutator_matrix(
    spec: &SpectralData,
    params: &ModelParams,
    x: usize,
    y: usize,
    t: f64,
) -> Matrix2<f64> {
    let (ox, oy) = (spec.site_row(x), spec.site_row(y));
    let (mut s_over, mut cos, mut s_times) = (0.0, 0.0, 0.0);
    for (k, &g) in spec.gammas().iter().enumerate() {
        let p = ox[k] * oy[k];
        let (s, c) = (2.0 * g * t).sin_cos();
        s_over += p * s / g;
        cos += p * c;
        s_times += p * s * g;
    }
    let pre = pq_prefactors(params, x, y);
    Matrix2::new(
        pre[(0, 0)] * s_over,
        pre[(0, 1)] * cos,
        pre[(1, 0)] * cos,
        pre[(1, 1)] * s_times,
    )
}

/// Entrywise `sup_t |A_{x,y}(t)|` in closed form.
pub fn pq_commutator_sup(
    spec: &SpectralData,
    params: &ModelParams,
    x: usize,
    y: usize,
) -> Matrix2<f64> {
    let (ox, oy) = (spec.site_row(x), spec.site_row(y));
    let g = spec.gammas();
    let p: Vec<f64> = ox.iter().zip(oy).map(|(a, b)| a * b).collect();
    let over: Vec<f64> = p.iter().zip(g).map(|(p, g)| p / g).collect();
    let times: Vec<f64> = p.iter().zip(g).map(|(p, g)| p * g).collect();
    let cos = spec.cluster_abs_sum(&p);
    let pre = pq_prefactors(params, x, y).abs();
    Matrix2::new(
        pre[(0, 0)] * spec.cluster_abs_sum(&over),
        pre[(0, 1)] * cos,
        pre[(1, 0)] * cos,
        pre[(1, 1)] * spec.cluster_abs_sum(&times),
    )
}

/// Entrywise maximum of `|A_{x,y}(t)|` over a time grid.
pub fn pq_commutator_scan(
    spec: &SpectralData,
    params: &ModelParams,
    x: usize,
    y: usize,
    times: &[f64],
) -> Matrix2<f64> {
    times.iter().fold(Matrix2::zeros(), |acc, &t| {
        acc.zip_map(&pq_commutator_matrix(spec, params, x, y, t).abs(), f64::max)
    })
}

/// `n` equally spaced times on `[0, t_max]`.
pub fn time_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect(),
    }
}
