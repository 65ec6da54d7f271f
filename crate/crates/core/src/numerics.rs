//! Dense symmetric linear algebra and chi-squared quantiles.
//!
//! Everything here is a pure function of its inputs. Matrices are small to
//! moderate (at most a few hundred rows after the dual route in
//! [`crate::robust`]), so plain cyclic Jacobi is fast enough and gives
//! eigenvectors that are orthonormal to machine precision.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative rank tolerance used for full-rank spectral work.
pub const RANK_TOL_FULL: f64 = 1e-10;
/// Relative rank tolerance used when a scatter matrix is known to be rank
/// deficient (more variables than weighted cases).
pub const RANK_TOL_FAT: f64 = 1e-6;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// A square matrix with exactly symmetric storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Wraps `m` after checking shape, finiteness and symmetry. Entries that
    /// differ from their transpose by rounding noise are averaged.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let scale = m.amax().max(1.0);
        for j in 0..n {
            for k in (j + 1)..n {
                if (m[(j, k)] - m[(k, j)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({j}, {k})"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds from a full matrix by averaging with its transpose. Callers are
    /// responsible for the input being symmetric up to rounding.
    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for k in (j + 1)..n {
                let v = 0.5 * (m[(j, k)] + m[(k, j)]);
                m[(j, k)] = v;
                m[(k, j)] = v;
            }
        }
        Self(m)
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0[(j, k)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

/// Eigenvalues sorted descending with matching orthonormal eigenvector
/// columns.
///
/// `eigenvectors` has one column per stored eigenvalue. Decompositions built
/// through the dual (Gram matrix) route in [`crate::robust`] store only the
/// retained pairs; the remaining eigenvalues are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub retained_rank: usize,
}

impl SpectralDecomposition {
    /// Dimension of the space the eigenvectors live in.
    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Rebuilds `P diag(lambda) P^T` from the stored pairs.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.eigenvalues.len(), |r, c| {
            self.eigenvectors[(r, c)] * self.eigenvalues[c]
        });
        &scaled * self.eigenvectors.transpose()
    }

    /// Applies the pseudo-inverse restricted to the retained eigenspace.
    pub fn pinv_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for k in 0..self.retained_rank {
            let col = self.eigenvectors.column(k);
            let coef = col.dot(v) / self.eigenvalues[k];
            out.axpy(coef, &col, 1.0);
        }
        out
    }

    /// `v^T S^+ v` over the retained eigenspace.
    pub fn pinv_quadratic(&self, v: &DVector<f64>) -> f64 {
        (0..self.retained_rank)
            .map(|k| {
                let proj = self.eigenvectors.column(k).dot(v);
                proj * proj / self.eigenvalues[k]
            })
            .sum()
    }
}

pub(crate) fn count_retained(eigenvalues: &DVector<f64>, rank_tolerance: f64) -> usize {
    let lambda_max = eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    if lambda_max <= 0.0 {
        return 0;
    }
    eigenvalues
        .iter()
        .filter(|&&l| l > rank_tolerance * lambda_max)
        .count()
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm falls below
/// `1e-12 * ||S||_F`. `retained_rank` counts eigenvalues above
/// `rank_tolerance * lambda_max`.
pub fn sym_eigen(s: &SymmetricMatrix, rank_tolerance: f64) -> Result<SpectralDecomposition> {
    if !(rank_tolerance > 0.0 && rank_tolerance < 1.0) {
        return Err(Error::InvalidInput(format!(
            "rank tolerance must lie in (0, 1), got {rank_tolerance}"
        )));
    }
    let n = s.dim();
    // Row-major working copies.
    let mut a: Vec<f64> = (0..n * n).map(|idx| s.get(idx / n, idx % n)).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_REL_TOL * frob;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                let tau = sn / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = arp - sn * (arq + tau * arp);
                    let new_rq = arq + sn * (arp - tau * arq);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - sn * (vrq + tau * vrp);
                    v[r * n + q] = vrq + sn * (vrp - tau * vrq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| a[i * n + i]));
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    let retained_rank = count_retained(&eigenvalues, rank_tolerance);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        retained_rank,
    })
}

/// Lower Cholesky factor `L` with `L L^T = S`.
pub fn cholesky_lower(s: &SymmetricMatrix) -> Result<DMatrix<f64>> {
    let n = s.dim();
    let max_diag = (0..n).map(|i| s.get(i, i).abs()).fold(0.0, f64::max);
    let floor = f64::EPSILON * n as f64 * max_diag;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = s.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::SingularMatrix);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut acc = s.get(i, j);
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / djj;
        }
    }
    Ok(l)
}

/// Solves `S v = b` for symmetric positive-definite `S`.
pub fn solve_spd(s: &SymmetricMatrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    if b.len() != s.dim() {
        return Err(Error::InvalidInput(format!(
            "right-hand side has length {}, matrix has dimension {}",
            b.len(),
            s.dim()
        )));
    }
    let l = cholesky_lower(s)?;
    let n = s.dim();
    let mut y = b.clone();
    for i in 0..n {
        let mut acc = y[i];
        for k in 0..i {
            acc -= l[(i, k)] * y[k];
        }
        y[i] = acc / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l[(k, i)] * y[k];
        }
        y[i] = acc / l[(i, i)];
    }
    Ok(y)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Chi-squared distribution function with `df` degrees of freedom.
pub fn chi2_cdf(q: f64, df: usize) -> f64 {
    regularized_gamma_p(0.5 * df as f64, 0.5 * q)
}

fn chi2_density(q: f64, df: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * df as f64;
    let x = 0.5 * q;
    0.5 * ((a - 1.0) * x.ln() - x - ln_gamma(a)).exp()
}

/// Quantile of the chi-squared distribution: the `q` with
/// `P(df/2, q/2) = prob`.
///
/// Newton iteration on the incomplete gamma function, guarded by a bracket
/// that falls back to bisection whenever a Newton step leaves it.
pub fn chi2_quantile(prob: f64, df: usize) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidInput(format!(
            "probability must lie in (0, 1), got {prob}"
        )));
    }
    if df == 0 {
        return Err(Error::InvalidInput(
            "degrees of freedom must be positive".into(),
        ));
    }
    let mut lo = 0.0_f64;
    let mut hi = (df as f64).max(1.0);
    while chi2_cdf(hi, df) < prob {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..300 {
        let f = chi2_cdf(x, df) - prob;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = chi2_density(x, df);
        let newton = if dens > 0.0 { x - f / dens } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Standard normal quantile, obtained from the one-degree-of-freedom
/// chi-squared quantile.
pub fn normal_quantile(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidInput(format!(
            "probability must lie in (0, 1), got {prob}"
        )));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    let z = chi2_quantile((2.0 * prob - 1.0).abs(), 1)?.sqrt();
    Ok(if prob > 0.5 { z } else { -z })
}
