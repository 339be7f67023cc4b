//! Least-squares fit of `y = y0 + A·exp(-B·x)` by variable projection.
//!
//! For a fixed decay rate `B` the model is linear in `(y0, A)`, so the
//! residual sum of squares can be minimised in closed form and the search
//! collapses to one dimension. `B` is located with a log-spaced grid over
//! `[b_min, b_max]` followed by golden-section refinement (in `ln B`) around
//! the best grid cell. Every step is deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `SS_tot` below this is treated as a zero-variance target.
pub const DEGENERATE_VARIANCE: f64 = 1e-15;
/// Basis spread below this means `exp(-B·x)` is indistinguishable from a constant.
const FLAT_BASIS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub b_min: f64,
    pub b_max: f64,
    pub grid_points: usize,
    /// Relative tolerance on `B` for the golden-section stage.
    pub rel_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            b_min: 1e-3,
            b_max: 1e3,
            grid_points: 481,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedCurve {
    pub y0: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Set when the targets have (numerically) zero variance, in which case
    /// `r_squared` is reported as 1 by convention.
    #[serde(default)]
    pub degenerate: bool,
}

impl FittedCurve {
    pub fn eval(&self, x: f64) -> f64 {
        self.y0 + self.a * (-self.b * x).exp()
    }

    pub fn residual_sum_of_squares(&self, points: &[(f64, f64)]) -> f64 {
        points
            .iter()
            .map(|&(x, y)| (y - self.eval(x)).powi(2))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSquared {
    pub value: f64,
    pub degenerate: bool,
}

/// Linear part of the fit at fixed `b`: `(y0, A, SSE)`.
#[derive(Debug, Clone, Copy)]
struct Projection {
    y0: f64,
    a: f64,
    sse: f64,
}

fn project(points: &[(f64, f64)], b: f64) -> Projection {
    let n = points.len() as f64;
    let basis: Vec<f64> = points.iter().map(|&(x, _)| (-b * x).exp()).collect();
    let mean_e = basis.iter().sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (lo, hi) = basis
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
    let (y0, a) = if hi - lo < FLAT_BASIS {
        (mean_y, 0.0)
    } else {
        let mut see = 0.0;
        let mut sey = 0.0;
        for (e, &(_, y)) in basis.iter().zip(points) {
            see += (e - mean_e) * (e - mean_e);
            sey += (e - mean_e) * (y - mean_y);
        }
        let a = sey / see;
        (mean_y - a * mean_e, a)
    };
    let sse = basis
        .iter()
        .zip(points)
        .map(|(e, &(_, y))| (y - y0 - a * e).powi(2))
        .sum();
    Projection { y0, a, sse }
}

fn validate(points: &[(f64, f64)]) -> Result<()> {
    if points
        .iter()
        .any(|&(x, y)| !(x.is_finite() && y.is_finite()))
    {
        return Err(Error::Validation("non-finite point coordinates".into()));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 distinct x values, got {}",
            xs.len()
        )));
    }
    Ok(())
}

pub fn fit_exp_decay(points: &[(f64, f64)]) -> Result<FittedCurve> {
    fit_exp_decay_with(points, &FitOptions::default())
}

pub fn fit_exp_decay_with(points: &[(f64, f64)], opts: &FitOptions) -> Result<FittedCurve> {
    validate(points)?;
    if !(opts.b_min > 0.0 && opts.b_max > opts.b_min && opts.grid_points >= 3) {
        return Err(Error::Validation(format!("invalid fit options {opts:?}")));
    }
    let (ln_lo, ln_hi) = (opts.b_min.ln(), opts.b_max.ln());
    let step = (ln_hi - ln_lo) / (opts.grid_points - 1) as f64;
    let grid: Vec<f64> = (0..opts.grid_points)
        .map(|i| ln_lo + step * i as f64)
        .collect();
    let sse_at = |ln_b: f64| project(points, ln_b.exp()).sse;

    // Strict `<` keeps the lowest-B candidate on ties.
    let (best_idx, best_sse) =
        grid.iter()
            .map(|&g| sse_at(g))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, s)| if s < acc.1 { (i, s) } else { acc },
            );
    let mut best_ln_b = grid[best_idx];
    let mut best = best_sse;

    let mut lo = grid[best_idx.saturating_sub(1)];
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (sse_at(c), sse_at(d));
    // Interval width in ln B approximates the relative tolerance on B.
    while hi - lo > opts.rel_tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = sse_at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = sse_at(d);
        }
    }
    for (ln_b, s) in [(c, fc), (d, fd)] {
        if s < best || (s == best && ln_b < best_ln_b) {
            best = s;
            best_ln_b = ln_b;
        }
    }

    let b = best_ln_b.exp();
    let proj = project(points, b);
    let mut curve = FittedCurve {
        y0: proj.y0,
        a: proj.a,
        b,
        r_squared: 0.0,
        n_points: points.len(),
        degenerate: false,
    };
    let r2 = r_squared(points, &curve)?;
    curve.r_squared = r2.value;
    curve.degenerate = r2.degenerate;
    Ok(curve)
}

/// `1 - SS_res / SS_tot`; a zero-variance target yields 1 with the
/// degenerate flag set.
pub fn r_squared(points: &[(f64, f64)], curve: &FittedCurve) -> Result<RSquared> {
    if points.len() < 2 {
        return Err(Error::Domain(format!(
            "R² needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|&(_, y)| (y - mean_y).powi(2)).sum();
    if ss_tot < DEGENERATE_VARIANCE {
        return Ok(RSquared {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(RSquared {
        value: 1.0 - curve.residual_sum_of_squares(points) / ss_tot,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(y0: f64, a: f64, b: f64, xs: impl Iterator<Item = f64>) -> Vec<(f64, f64)> {
        xs.map(|x| (x, y0 + a * (-b * x).exp())).collect()
    }

    #[test]
    fn recovers_noiseless_curve() {
        let pts = sample(1.0, 2.0, 3.0, (0..=10).map(|i| i as f64 / 10.0));
        let c = fit_exp_decay(&pts).unwrap();
        assert!((c.y0 - 1.0).abs() < 1e-6, "{c:?}");
        assert!((c.a - 2.0).abs() < 1e-6, "{c:?}");
        assert!((c.b - 3.0).abs() < 1e-6, "{c:?}");
        assert!(c.r_squared >= 1.0 - 1e-9);
        assert_eq!(c.n_points, 11);
    }

    #[test]
    fn flat_data() {
        let pts: Vec<_> = (0..6).map(|i| (i as f64 * 0.2, 4.2)).collect();
        let c = fit_exp_decay(&pts).unwrap();
        assert!((c.y0 - 4.2).abs() < 1e-12);
        assert!(c.a.abs() < 1e-12);
        assert_eq!(c.r_squared, 1.0);
        assert!(c.degenerate);
    }

    #[test]
    fn insufficient_data() {
        let err = fit_exp_decay(&[(0.0, 1.0), (1.0, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        let err = fit_exp_decay(&[(0.0, 1.0), (1.0, 2.0), (1.0, 3.0), (0.0, 0.5)]).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        assert!(fit_exp_decay(&[(0.0, 1.0), (0.5, f64::NAN), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn r_squared_of_mean_curve_is_zero() {
        let pts = vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)];
        let flat = FittedCurve {
            y0: 2.0,
            a: 0.0,
            b: 1.0,
            r_squared: 0.0,
            n_points: 3,
            degenerate: false,
        };
        assert_eq!(r_squared(&pts, &flat).unwrap().value, 0.0);
        assert!(r_squared(&[], &flat).is_err());
    }

    #[test]
    fn r_squared_hand_instance() {
        // Residuals and totals worked out by hand:
        // curve 1 + 2e^{-x} at x = 0, ln2, ln4, ln8 → 3, 2, 1.5, 1.25
        // y = 3.1, 1.9, 1.5, 1.3 → residuals 0.1, -0.1, 0, 0.05 → SS_res = 0.0225
        // mean y = 1.95 → SS_tot = 1.3225 + 0.0025 + 0.2025 + 0.4225 = 1.95
        let pts = vec![
            (0.0, 3.1),
            (2f64.ln(), 1.9),
            (4f64.ln(), 1.5),
            (8f64.ln(), 1.3),
        ];
        let curve = FittedCurve {
            y0: 1.0,
            a: 2.0,
            b: 1.0,
            r_squared: 0.0,
            n_points: 4,
            degenerate: false,
        };
        let r2 = r_squared(&pts, &curve).unwrap();
        assert!((r2.value - (1.0 - 0.0225 / 1.95)).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let pts: Vec<_> = (0..20)
            .map(|i| {
                let x = i as f64 / 19.0;
                (
                    x,
                    0.5 + 3.0 * (-2.0 * x).exp() + 0.05 * ((i * 7 % 5) as f64 - 2.0),
                )
            })
            .collect();
        let a = fit_exp_decay(&pts).unwrap();
        let b = fit_exp_decay(&pts).unwrap();
        assert_eq!(a.b.to_bits(), b.b.to_bits());
        assert_eq!(a.y0.to_bits(), b.y0.to_bits());
    }
}
