//! Log-linear weighted least squares for `mean ≈ C' e^{-mu' r}`.

use serde::{Deserialize, Serialize};

use super::{EstimateRow, EstimateTable};
use crate::error::{Error, Result};
use crate::stats::jackknife_spread;

/// Relative errors below this are clipped so that weights stay finite.
const REL_ERR_FLOOR: f64 = 1e-9;
const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c_prime: f64,
    pub mu_prime: f64,
    pub mu_stderr: f64,
    pub r_squared: f64,
    pub r_min: usize,
    pub r_max: usize,
    pub points: usize,
}

/// Fit of the rows with `r_min <= separation <= r_max`. Weights are
/// `(mean / stderr)^2`, the inverse delta-method variance of `log(mean)`.
pub fn fit_exponential_decay(table: &EstimateTable, r_min: usize, r_max: usize) -> Result<DecayFit> {
    fit_rows(&table.rows, r_min, r_max)
}

pub fn fit_rows(rows: &[EstimateRow], r_min: usize, r_max: usize) -> Result<DecayFit> {
    let sel: Vec<&EstimateRow> = rows
        .iter()
        .filter(|r| r.separation >= r_min && r.separation <= r_max)
        .collect();
    let mut seps: Vec<usize> = sel.iter().map(|r| r.separation).collect();
    seps.dedup();
    if seps.len() < MIN_POINTS {
        return Err(Error::FitDomain(format!(
            "need at least {MIN_POINTS} separations in [{r_min}, {r_max}], found {}",
            seps.len()
        )));
    }
    if let Some(bad) = sel.iter().find(|r| !(r.mean > 0.0 && r.mean.is_finite())) {
        return Err(Error::FitDomain(format!(
            "mean {} at separation {} is not positive; shrink the fit window",
            bad.mean, bad.separation
        )));
    }
    let xs: Vec<f64> = sel.iter().map(|r| r.separation as f64).collect();
    let ys: Vec<f64> = sel.iter().map(|r| r.mean.ln()).collect();
    let ws: Vec<f64> = sel
        .iter()
        .map(|r| {
            let rel = (r.stderr / r.mean).max(REL_ERR_FLOOR);
            1.0 / (rel * rel)
        })
        .collect();
    let line = wls(&xs, &ys, &ws);
    Ok(DecayFit {
        c_prime: line.intercept.exp(),
        mu_prime: -line.slope,
        mu_stderr: line.slope_stderr,
        r_squared: line.r_squared,
        r_min,
        r_max,
        points: sel.len(),
    })
}

/// Same point estimate as [`fit_exponential_decay`], with `mu_stderr`
/// replaced by a jackknife over realizations: each replicate refits the
/// means computed without one realization (weights held fixed).
pub fn fit_exponential_decay_jackknife(
    table: &EstimateTable,
    r_min: usize,
    r_max: usize,
) -> Result<DecayFit> {
    let mut fit = fit_exponential_decay(table, r_min, r_max)?;
    let n = table.realizations as usize;
    if n < 2 {
        fit.mu_stderr = 0.0;
        return Ok(fit);
    }
    let idx: Vec<usize> = (0..table.rows.len())
        .filter(|&i| (r_min..=r_max).contains(&table.rows[i].separation))
        .collect();
    let totals: Vec<f64> = idx.iter().map(|&i| table.samples[i].iter().sum()).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| table.rows[i].separation as f64).collect();
    let ws: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let r = &table.rows[i];
            let rel = (r.stderr / r.mean).max(REL_ERR_FLOOR);
            1.0 / (rel * rel)
        })
        .collect();
    let mut replicates = Vec::with_capacity(n);
    for j in 0..n {
        let ys: Vec<f64> = idx
            .iter()
            .zip(&totals)
            .map(|(&i, t)| ((t - table.samples[i][j]) / (n - 1) as f64).ln())
            .collect();
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::FitDomain(format!(
                "leave-one-out mean without realization {j} is not positive"
            )));
        }
        replicates.push(-wls(&xs, &ys, &ws).slope);
    }
    fit.mu_stderr = jackknife_spread(&replicates);
    Ok(fit)
}

struct Line {
    slope: f64,
    intercept: f64,
    slope_stderr: f64,
    r_squared: f64,
}

fn wls(xs: &[f64], ys: &[f64], ws: &[f64]) -> Line {
    let sw: f64 = ws.iter().sum();
    let xbar = xs.iter().zip(ws).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ybar = ys.iter().zip(ws).map(|(y, w)| w * y).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - xbar) * (x - xbar);
        sxy += w * (x - xbar) * (y - ybar);
        syy += w * (y - ybar) * (y - ybar);
    }
    let spread = ys.iter().fold(0.0_f64, |m, y| m.max((y - ys[0]).abs()));
    let flat = spread <= 1e-14 * (1.0 + ys[0].abs());
    if flat {
        return Line {
            slope: 0.0,
            intercept: ybar,
            slope_stderr: (1.0 / sxx).sqrt(),
            r_squared: 0.0,
        };
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| {
            let e = y - intercept - slope * x;
            w * e * e
        })
        .sum();
    let dof = xs.len().saturating_sub(2).max(1) as f64;
    // Inverse-variance error, inflated by the reduced chi-square when the
    // scatter exceeds the stated errors.
    let slope_stderr = ((ss_res / dof).max(1.0) / sxx).sqrt();
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    Line {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rows(mut f: impl FnMut(usize) -> (f64, f64), range: std::ops::RangeInclusive<usize>) -> Vec<EstimateRow> {
        range
            .map(|r| {
                let (mean, stderr) = f(r);
                EstimateRow {
                    separation: r,
                    mean,
                    stderr,
                    count: 1,
                }
            })
            .collect()
    }

    #[test]
    fn exact_exponential() {
        let rs = rows(|r| (3.0 * (-0.7 * r as f64).exp(), 0.0), 1..=10);
        let fit = fit_rows(&rs, 1, 10).unwrap();
        assert!((fit.c_prime - 3.0).abs() < 1e-10);
        assert!((fit.mu_prime - 0.7).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.points, 10);
    }

    #[test]
    fn flat_data() {
        let rs = rows(|_| (0.25, 0.01), 0..=8);
        let fit = fit_rows(&rs, 0, 8).unwrap();
        assert_eq!(fit.mu_prime, 0.0);
        assert_eq!(fit.r_squared, 0.0);
        assert!((fit.c_prime - 0.25).abs() < 1e-14);
    }

    #[test]
    fn noisy_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rs = rows(
            |r| {
                let noise = 1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt();
                ((-0.7 * r as f64).exp() * noise, 0.01 * (-0.7 * r as f64).exp())
            },
            1..=20,
        );
        let fit = fit_rows(&rs, 1, 20).unwrap();
        assert!((0.6..=0.8).contains(&fit.mu_prime), "{}", fit.mu_prime);
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn domain_errors() {
        let rs = rows(|r| ((-(r as f64)).exp(), 0.0), 0..=3);
        assert!(fit_rows(&rs, 0, 3).is_ok());
        assert!(matches!(fit_rows(&rs, 1, 3), Err(Error::FitDomain(_))));
        let rs = rows(|r| (if r == 4 { 0.0 } else { 1.0 / (r + 1) as f64 }, 0.0), 0..=8);
        assert!(matches!(fit_rows(&rs, 0, 8), Err(Error::FitDomain(_))));
        assert!(fit_rows(&rs, 5, 8).is_ok());
    }

    #[test]
    fn jackknife_fit_agrees_with_point_estimate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40;
        let samples: Vec<Vec<f64>> = (0..10)
            .map(|r| (0..n).map(|_| (-0.5 * r as f64).exp() * rng.random_range(0.5..1.5)).collect())
            .collect();
        let rows: Vec<EstimateRow> = samples
            .iter()
            .enumerate()
            .map(|(r, s)| {
                let (mean, stderr) = crate::stats::jackknife_mean(s);
                EstimateRow {
                    separation: r,
                    mean,
                    stderr,
                    count: n as u64,
                }
            })
            .collect();
        let table = EstimateTable {
            rows,
            samples,
            observable: "test".into(),
            realizations: n as u64,
            resamples: 0,
            seed: 0,
            dim: 1,
            half_width: 10,
        };
        let a = fit_exponential_decay(&table, 0, 9).unwrap();
        let b = fit_exponential_decay_jackknife(&table, 0, 9).unwrap();
        assert_eq!(a.mu_prime, b.mu_prime);
        assert!(b.mu_stderr > 0.0 && b.mu_stderr < 0.1);
        assert!((a.mu_prime - 0.5).abs() < 4.0 * b.mu_stderr);
    }
}
