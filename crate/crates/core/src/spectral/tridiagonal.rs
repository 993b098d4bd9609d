//! Eigenvector tails for Jacobi (symmetric tridiagonal) matrices.
//!
//! A dense eigensolver resolves eigenvector entries only to an absolute
//! accuracy of order `eps * ||h||`, which hides exponentially small tails of
//! localized modes under round-off. For a chain the eigenvector can instead
//! be rebuilt from a twisted factorization `T - λ = N_r Δ_r N_r^T`: entries
//! away from the twist index `r` are products of ratios, each computed by a
//! recurrence that runs from the boundary towards `r`, so tiny entries keep
//! their relative accuracy.

use nalgebra::DMatrix;

/// Diagonal and off-diagonal of `h` if it is tridiagonal with every
/// off-diagonal entry non-zero.
pub(crate) fn jacobi_parts(h: &DMatrix<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = h.nrows();
    if n < 3 {
        return None;
    }
    for j in 0..n {
        for i in 0..n {
            if i.abs_diff(j) > 1 && h[(i, j)] != 0.0 {
                return None;
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| h[(i, i)]).collect();
    let off: Vec<f64> = (0..n - 1).map(|i| h[(i, i + 1)]).collect();
    if off.contains(&0.0) {
        return None;
    }
    Some((diag, off))
}

/// Unit eigenvector of the Jacobi matrix `(diag, off)` for the (accurate)
/// eigenvalue approximation `lambda`.
pub(crate) fn twisted_eigenvector(diag: &[f64], off: &[f64], lambda: f64, scale: f64) -> Vec<f64> {
    let n = diag.len();
    let pivmin = f64::MIN_POSITIVE.max(scale * f64::EPSILON * f64::EPSILON);
    let guard = |d: f64| if d.abs() < pivmin { pivmin.copysign(d) } else { d };

    let mut dplus = vec![0.0; n];
    dplus[0] = guard(diag[0] - lambda);
    for i in 1..n {
        dplus[i] = guard(diag[i] - lambda - off[i - 1] * off[i - 1] / dplus[i - 1]);
    }
    let mut dminus = vec![0.0; n];
    dminus[n - 1] = guard(diag[n - 1] - lambda);
    for i in (0..n - 1).rev() {
        dminus[i] = guard(diag[i] - lambda - off[i] * off[i] / dminus[i + 1]);
    }

    let twist = (0..n)
        .min_by(|&a, &b| {
            let ga = (dplus[a] + dminus[a] - (diag[a] - lambda)).abs();
            let gb = (dplus[b] + dminus[b] - (diag[b] - lambda)).abs();
            ga.total_cmp(&gb)
        })
        .unwrap_or(0);

    let mut v = vec![0.0; n];
    v[twist] = 1.0;
    for i in (0..twist).rev() {
        v[i] = -off[i] * v[i + 1] / dplus[i];
        if v[i].abs() > 1e100 {
            v[i..].iter_mut().for_each(|e| *e *= 1e-100);
        }
    }
    for i in twist + 1..n {
        v[i] = -off[i - 1] * v[i - 1] / dminus[i];
        if v[i].abs() > 1e100 {
            v[..=i].iter_mut().for_each(|e| *e *= 1e-100);
        }
    }
    let norm = v.iter().map(|e| e * e).sum::<f64>().sqrt();
    v.iter_mut().for_each(|e| *e /= norm);
    v
}

/// Replaces dense eigenvectors (columns of `vectors`, eigenvalues ascending)
/// with twisted-factorization vectors wherever that is safe. Returns the
/// number of replaced columns.
///
/// A replacement is kept only if it agrees with the dense column up to the
/// dense solver's own accuracy and stays orthogonal (to `1e-13`) to every
/// replaced neighbour with a nearby eigenvalue; otherwise the dense column
/// is kept.
pub(crate) fn refine_tails(
    diag: &[f64],
    off: &[f64],
    eigenvalues: &[f64],
    vectors: &mut DMatrix<f64>,
    scale: f64,
) -> usize {
    let n = eigenvalues.len();
    let mut refined: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        let mut v = twisted_eigenvector(diag, off, lambda, scale);
        let dense = vectors.column(k);
        let dot: f64 = v.iter().zip(dense.iter()).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            v.iter_mut().for_each(|e| *e = -*e);
        }
        let gap = neighbour_gap(eigenvalues, k);
        // Dense columns are accurate to about eps * scale / gap in norm.
        let allowed = 1e-8_f64.max(1e3 * f64::EPSILON * scale / gap.max(f64::MIN_POSITIVE));
        let diff = v
            .iter()
            .zip(dense.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let residual = jacobi_residual(diag, off, lambda, &v);
        if diff <= allowed.min(1e-4) && residual <= 1e3 * f64::EPSILON * scale {
            refined.push(Some(v));
        } else {
            refined.push(None);
        }
    }

    // Pairwise orthogonality among close eigenvalues.
    let window = 1e-3 * scale;
    for k in 0..n {
        if refined[k].is_none() {
            continue;
        }
        let mut j = k + 1;
        while j < n && eigenvalues[j] - eigenvalues[k] <= window {
            if let (Some(a), Some(b)) = (&refined[k], &refined[j]) {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                if dot.abs() > 1e-13 {
                    refined[k] = None;
                    refined[j] = None;
                    break;
                }
            }
            j += 1;
        }
    }

    let mut count = 0;
    for (k, v) in refined.into_iter().enumerate() {
        if let Some(v) = v {
            vectors.column_mut(k).copy_from_slice(&v);
            count += 1;
        }
    }
    count
}

fn neighbour_gap(eigenvalues: &[f64], k: usize) -> f64 {
    let below = k.checked_sub(1).map(|j| eigenvalues[k] - eigenvalues[j]);
    let above = eigenvalues.get(k + 1).map(|e| e - eigenvalues[k]);
    match (below, above) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => f64::INFINITY,
    }
}

fn jacobi_residual(diag: &[f64], off: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut r = (diag[i] - lambda) * v[i];
            if i > 0 {
                r += off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                r += off[i] * v[i + 1];
            }
            r * r
        })
        .sum::<f64>()
        .sqrt()
}
