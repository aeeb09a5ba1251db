//! Levenberg-Marquardt least squares for a gaussian on a constant baseline:
//! y = b + a·exp(−4 ln2 (x − c)² / w²).
//!
//! Peaks fit with a > 0, dips with a < 0; the solver does not constrain the
//! sign. Standard errors come from the residual variance and the local
//! normal-equations inverse.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },
    #[error("normal equations are singular")]
    Singular,
    #[error("fit did not converge after {iterations} iterations (sse {sse:.3e})")]
    DidNotConverge { iterations: usize, sse: f64 },
}

/// Converged gaussian-plus-baseline parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub center_stderr: f64,
    pub fwhm_stderr: f64,
    pub sse: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GaussianGuess {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub baseline: f64,
}

const LN2_4: f64 = 4.0 * std::f64::consts::LN_2;

#[inline]
fn model(p: &[f64; 4], x: f64) -> f64 {
    let u = (x - p[0]) / p[1];
    p[3] + p[2] * (-LN2_4 * u * u).exp()
}

#[inline]
fn jacobian_row(p: &[f64; 4], x: f64) -> [f64; 4] {
    let d = x - p[0];
    let w = p[1];
    let e = (-LN2_4 * d * d / (w * w)).exp();
    [
        p[2] * e * 2.0 * LN2_4 * d / (w * w),
        p[2] * e * 2.0 * LN2_4 * d * d / (w * w * w),
        e,
        1.0,
    ]
}

fn sse(p: &[f64; 4], xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - model(p, x);
            r * r
        })
        .sum()
}

/// Solves A·x = b for a 4×4 system by gaussian elimination with partial
/// pivoting. Returns `None` when the pivot collapses.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for col in (0..4).rev() {
        let mut s = b[col];
        for k in col + 1..4 {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

fn invert4(a: [[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut inv = [[0.0; 4]; 4];
    for col in 0..4 {
        let mut e = [0.0; 4];
        e[col] = 1.0;
        let x = solve4(a, e)?;
        for row in 0..4 {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

/// Fits the four gaussian-plus-baseline parameters to (x, y) samples.
pub fn fit_gaussian(
    xs: &[f64],
    ys: &[f64],
    guess: GaussianGuess,
) -> Result<GaussianFit, FitError> {
    let n = xs.len();
    if n < 5 || ys.len() != n {
        return Err(FitError::NotEnoughPoints { needed: 5, got: n });
    }
    let mut p = [guess.center, guess.fwhm.abs().max(1e-12), guess.amplitude, guess.baseline];
    let mut lambda = 1e-3;
    let mut current_sse = sse(&p, xs, ys);
    let mut iterations = 0usize;
    let max_iterations = 300;

    while iterations < max_iterations {
        iterations += 1;
        // Accumulate JᵀJ and Jᵀr.
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        for (&x, &y) in xs.iter().zip(ys) {
            let row = jacobian_row(&p, x);
            let r = y - model(&p, x);
            for i in 0..4 {
                jtr[i] += row[i] * r;
                for j in i..4 {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..i {
                jtj[i][j] = jtj[j][i];
            }
        }

        let mut advanced = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-30);
            }
            let Some(step) = solve4(damped, jtr) else {
                return Err(FitError::Singular);
            };
            let mut trial = [
                p[0] + step[0],
                (p[1] + step[1]).abs().max(1e-12),
                p[2] + step[2],
                p[3] + step[3],
            ];
            if !trial.iter().all(|v| v.is_finite()) {
                trial = p;
            }
            let trial_sse = sse(&trial, xs, ys);
            if trial_sse <= current_sse {
                let relative_drop = (current_sse - trial_sse) / current_sse.max(1e-300);
                p = trial;
                current_sse = trial_sse;
                lambda = (lambda / 4.0).max(1e-12);
                advanced = true;
                if relative_drop < 1e-12 {
                    iterations = max_iterations; // converged
                }
                break;
            }
            lambda *= 8.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !advanced {
            break;
        }
    }

    // Covariance at the optimum: s² (JᵀJ)⁻¹.
    let mut jtj = [[0.0f64; 4]; 4];
    for &x in xs {
        let row = jacobian_row(&p, x);
        for i in 0..4 {
            for j in i..4 {
                jtj[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..4 {
        for j in 0..i {
            jtj[i][j] = jtj[j][i];
        }
    }
    let dof = (n.saturating_sub(4)).max(1) as f64;
    let s2 = current_sse / dof;
    let (center_stderr, fwhm_stderr) = match invert4(jtj) {
        Some(inv) => ((s2 * inv[0][0]).max(0.0).sqrt(), (s2 * inv[1][1]).max(0.0).sqrt()),
        None => (f64::NAN, f64::NAN),
    };

    if !p.iter().all(|v| v.is_finite()) {
        return Err(FitError::DidNotConverge {
            iterations,
            sse: current_sse,
        });
    }

    Ok(GaussianFit {
        center: p[0],
        fwhm: p[1],
        amplitude: p[2],
        baseline: p[3],
        center_stderr,
        fwhm_stderr,
        sse: current_sse,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synth(center: f64, fwhm: f64, amp: f64, base: f64, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| model(&[center, fwhm, amp, base], x)).collect()
    }

    #[test]
    fn recovers_noiseless_peak_exactly() {
        let xs: Vec<f64> = (0..200).map(|i| -1000.0 + 10.0 * i as f64).collect();
        let ys = synth(42.0, 400.0, 900.0, 25.0, &xs);
        let fit = fit_gaussian(
            &xs,
            &ys,
            GaussianGuess {
                center: 0.0,
                fwhm: 200.0,
                amplitude: 500.0,
                baseline: 0.0,
            },
        )
        .unwrap();
        assert_relative_eq!(fit.center, 42.0, max_relative = 1e-6);
        assert_relative_eq!(fit.fwhm, 400.0, max_relative = 1e-6);
        assert_relative_eq!(fit.amplitude, 900.0, max_relative = 1e-6);
        assert_relative_eq!(fit.baseline, 25.0, max_relative = 1e-4);
    }

    #[test]
    fn recovers_noiseless_dip() {
        let xs: Vec<f64> = (0..300).map(|i| -3000.0 + 20.0 * i as f64).collect();
        let ys = synth(0.0, 500.0, -780.0, 1000.0, &xs);
        let fit = fit_gaussian(
            &xs,
            &ys,
            GaussianGuess {
                center: 100.0,
                fwhm: 300.0,
                amplitude: -500.0,
                baseline: 900.0,
            },
        )
        .unwrap();
        assert_relative_eq!(fit.amplitude, -780.0, max_relative = 1e-6);
        assert_relative_eq!(fit.baseline, 1000.0, max_relative = 1e-6);
        assert_relative_eq!(fit.fwhm, 500.0, max_relative = 1e-6);
    }

    #[test]
    fn rejects_tiny_input() {
        assert!(matches!(
            fit_gaussian(&[0.0, 1.0], &[0.0, 1.0], GaussianGuess {
                center: 0.0,
                fwhm: 1.0,
                amplitude: 1.0,
                baseline: 0.0
            }),
            Err(FitError::NotEnoughPoints { .. })
        ));
    }
}
