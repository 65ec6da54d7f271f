//! Robust standardization, case-weight detection, weighted moments and
//! outlyingness.
//!
//! The detector is a deterministic concentration-step estimator rather than a
//! full MCD: start from coordinatewise medians and a diagonal Q_n scatter,
//! repeatedly refit mean and covariance on the `h` cases with the smallest
//! distances, then hard-reject cases beyond the chi-squared cutoff. When there
//! are at least as many variables as cases the same estimator runs on a small
//! number of principal component scores and is paired with an orthogonal
//! distance cutoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    self, chi2_quantile, normal_quantile, SpectralDecomposition, SymmetricMatrix,
};

const QN_CONSISTENCY: f64 = 2.2219;
const QN_SMALL_SAMPLE: [f64; 8] = [0.399, 0.994, 0.512, 0.844, 0.611, 0.857, 0.669, 0.872];
const CSTEP_MAX_ITER: usize = 50;
const REWEIGHT_MAX_ITER: usize = 10;
/// Upper bound on the number of principal components the fat-data detector
/// works with.
const FAT_MAX_COMPONENTS: usize = 10;

/// An `n x p` observation matrix with optional column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    column_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, column_names: Option<Vec<String>>) -> Result<Self> {
        if values.nrows() < 2 || values.ncols() < 1 {
            return Err(Error::InvalidInput(format!(
                "data needs at least 2 cases and 1 variable, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some((idx, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let n = values.nrows();
            return Err(Error::InvalidInput(format!(
                "non-finite value at case {}, variable {}",
                idx % n,
                idx / n
            )));
        }
        if let Some(names) = &column_names {
            if names.len() != values.ncols() {
                return Err(Error::InvalidInput(format!(
                    "{} column names for {} columns",
                    names.len(),
                    values.ncols()
                )));
            }
        }
        Ok(Self {
            values,
            column_names,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]), None)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Header label of column `j`, or its 1-based index when unnamed.
    pub fn column_label(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => (j + 1).to_string(),
        }
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::InvalidInput(format!(
                "{} column names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    /// Keeps the listed columns, in the order given.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let values = self.values.select_columns(cols.iter());
        let names = self
            .column_names
            .as_ref()
            .map(|names| cols.iter().map(|&j| names[j].clone()).collect());
        Self::new(values, names)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(
            self.values.select_rows(rows.iter()),
            self.column_names.clone(),
        )
    }
}

/// Per-case weights in `[0, 1]` and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseWeights {
    weights: Vec<f64>,
    n_w: f64,
}

impl CaseWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && **w <= 1.0)) {
            return Err(Error::InvalidInput(format!(
                "case weight {w} outside [0, 1]"
            )));
        }
        let n_w: f64 = weights.iter().sum();
        if !(n_w > 1.0) {
            return Err(Error::DegenerateWeights(n_w));
        }
        Ok(Self { weights, n_w })
    }

    pub fn ones(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn n_w(&self) -> f64 {
        self.n_w
    }

    /// Copy with the weight of case `i` replaced by `epsilon` when it is zero.
    pub fn with_floor_at(&self, i: usize, epsilon: f64) -> Result<Self> {
        let mut w = self.weights.clone();
        if w[i] == 0.0 {
            w[i] = epsilon;
        }
        Self::new(w)
    }
}

/// Columnwise medians and Q_n scales used to standardize a data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
}

/// Weighted location and scatter with the spectral form of the scatter.
///
/// `scatter` is only materialised when there are fewer variables than the
/// weighted case count; otherwise the scatter is held through its retained
/// eigenpairs alone.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustSummary {
    pub location: DVector<f64>,
    pub scatter: Option<SymmetricMatrix>,
    pub spectral: SpectralDecomposition,
    pub effective_df: usize,
    pub n_w: f64,
}

impl RobustSummary {
    /// Chi-squared cutoff at `prob` with `effective_df` degrees of freedom.
    pub fn cutoff(&self, prob: f64) -> Result<f64> {
        chi2_quantile(prob, self.effective_df)
    }

    /// Scatter matrix, rebuilt from the spectral form when it was not stored.
    pub fn scatter_matrix(&self) -> DMatrix<f64> {
        match &self.scatter {
            Some(s) => s.as_matrix().clone(),
            None => self.spectral.reconstruct(),
        }
    }
}

/// Which detector produces the case weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    ConcentrationSteps,
    External(CaseWeights),
}

/// Median with the usual midpoint convention for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    median_in_place(&mut v)
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    assert!(n > 0, "median of empty slice");
    let mid = n / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

fn qn_correction(n: usize) -> f64 {
    if n <= 9 {
        QN_SMALL_SAMPLE[n - 2]
    } else if n % 2 == 1 {
        n as f64 / (n as f64 + 1.4)
    } else {
        n as f64 / (n as f64 + 3.8)
    }
}

/// Number of pairs `i < j` of the sorted slice with `x[j] - x[i] <= d`.
fn pairs_within(sorted: &[f64], d: f64) -> u64 {
    let mut count = 0u64;
    let mut lo = 0;
    for j in 0..sorted.len() {
        while sorted[j] - sorted[lo] > d {
            lo += 1;
        }
        count += (j - lo) as u64;
    }
    count
}

/// Rousseeuw-Croux Q_n scale estimator.
///
/// The order statistic of pairwise gaps is found exactly by bisecting over
/// the bit patterns of non-negative doubles: the count of gaps `<= d` is
/// monotone in `d` and only jumps at values that are themselves computed gaps.
pub fn qn_scale(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput("Q_n needs at least 2 values".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "Q_n input has non-finite values".into(),
        ));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = n / 2 + 1;
    let k = (h * (h - 1) / 2) as u64;

    let (mut lo, mut hi) = (0u64, (sorted[n - 1] - sorted[0]).to_bits());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pairs_within(&sorted, f64::from_bits(mid)) >= k {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(QN_CONSISTENCY * qn_correction(n) * f64::from_bits(lo))
}

/// Centers every column at its median and scales it by its Q_n.
pub fn standardize(x: &DataMatrix) -> Result<(DataMatrix, StandardizationParams)> {
    let p = x.p();
    let mut centers = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    for j in 0..p {
        let col = x.column(j);
        let s = qn_scale(&col)?;
        if s <= 0.0 {
            return Err(Error::DegenerateColumn(j));
        }
        centers.push(median(&col));
        scales.push(s);
    }
    let z = DMatrix::from_fn(x.n(), p, |i, j| (x.get(i, j) - centers[j]) / scales[j]);
    let z = DataMatrix::new(z, x.column_names.clone())?;
    Ok((z, StandardizationParams { centers, scales }))
}

/// Squared Mahalanobis distance of `x` from `location`, computed over the
/// retained eigenpairs of the scatter.
pub fn mahalanobis_sq(
    x: &DVector<f64>,
    location: &DVector<f64>,
    spectral: &SpectralDecomposition,
) -> Result<f64> {
    if spectral.retained_rank == 0 {
        return Err(Error::SingularMatrix);
    }
    if x.len() != location.len() || x.len() != spectral.dim() {
        return Err(Error::InvalidInput(format!(
            "point has dimension {}, summary has {}",
            x.len(),
            spectral.dim()
        )));
    }
    Ok(spectral.pinv_quadratic(&(x - location)))
}

/// Squared outlyingness of `x` against the weighted moments in `summary`.
pub fn outlyingness_sq(x: &DVector<f64>, summary: &RobustSummary) -> Result<f64> {
    mahalanobis_sq(x, &summary.location, &summary.spectral)
}

/// Weighted mean and covariance (divisor `n_w - 1`) with their spectral
/// decomposition.
///
/// With fewer variables than weighted cases the covariance is formed and
/// diagonalised directly. Otherwise the eigenpairs come from the much smaller
/// weighted Gram matrix of the centered cases, and only the nonzero part of
/// the spectrum is kept.
pub fn weighted_moments(x: &DataMatrix, w: &CaseWeights) -> Result<RobustSummary> {
    let (n, p) = (x.n(), x.p());
    if w.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} cases",
            w.len(),
            n
        )));
    }
    let n_w = w.n_w();
    if !(n_w > 1.0) {
        return Err(Error::DegenerateWeights(n_w));
    }
    let values = x.values();
    let mut location = DVector::zeros(p);
    for i in 0..n {
        if w.get(i) > 0.0 {
            location.axpy(w.get(i) / n_w, &values.row(i).transpose(), 1.0);
        }
    }
    let active: Vec<usize> = (0..n).filter(|&i| w.get(i) > 0.0).collect();
    let centered = DMatrix::from_fn(active.len(), p, |r, j| {
        let i = active[r];
        w.get(i).sqrt() * (values[(i, j)] - location[j])
    });
    let divisor = n_w - 1.0;

    let (scatter, spectral) = if (p as f64) < n_w {
        let s = SymmetricMatrix::symmetrized(centered.transpose() * &centered / divisor);
        let spectral = numerics::sym_eigen(&s, numerics::RANK_TOL_FULL)?;
        (Some(s), spectral)
    } else {
        let gram = SymmetricMatrix::symmetrized(&centered * centered.transpose() / divisor);
        let dual = numerics::sym_eigen(&gram, numerics::RANK_TOL_FAT)?;
        let r = dual.retained_rank;
        let mut vectors = DMatrix::zeros(p, r);
        for k in 0..r {
            let scale = 1.0 / (dual.eigenvalues[k] * divisor).sqrt();
            let v = centered.transpose() * dual.eigenvectors.column(k) * scale;
            vectors.set_column(k, &v);
        }
        let spectral = SpectralDecomposition {
            eigenvalues: dual.eigenvalues.rows(0, r).into_owned(),
            eigenvectors: vectors,
            retained_rank: r,
        };
        (None, spectral)
    };
    if spectral.retained_rank == 0 {
        return Err(Error::SingularMatrix);
    }
    Ok(RobustSummary {
        location,
        scatter,
        effective_df: spectral.retained_rank,
        spectral,
        n_w,
    })
}

/// Hard 0/1 case weights from a robust fit, or externally supplied weights.
///
/// For [`Detector::ConcentrationSteps`] with more cases than variables, the
/// raw weights keep the cases whose consistency-scaled squared distance to the
/// concentration-step fit is at most `chi2_quantile(alpha, p)`. They are then
/// refined against the classical moments of the kept cases: kept cases are
/// tested with the exact in-sample Beta law of their distances, the others
/// with the out-of-sample F law, both at level `alpha`. With at least as many
/// variables as cases the fit runs on leading principal component scores, and
/// a case must additionally pass an orthogonal distance cutoff.
pub fn detect_weights(z: &DataMatrix, alpha: f64, detector: &Detector) -> Result<CaseWeights> {
    match detector {
        Detector::External(w) => {
            if w.len() != z.n() {
                return Err(Error::InvalidInput(format!(
                    "{} external weights for {} cases",
                    w.len(),
                    z.n()
                )));
            }
            Ok(w.clone())
        }
        Detector::ConcentrationSteps => {
            if !(alpha > 0.5 && alpha < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "detection alpha must lie in (0.5, 1), got {alpha}"
                )));
            }
            let weights = if z.p() < z.n() {
                let d2 = concentration_distances(z.values())?;
                let cutoff = chi2_quantile(alpha, z.p())?;
                let raw = d2.iter().map(|&d| d <= cutoff).collect();
                calibrated_reweighting(z.values(), raw, alpha)?
                    .into_iter()
                    .map(f64::from)
                    .collect()
            } else {
                fat_data_weights(z.values(), alpha)?
            };
            CaseWeights::new(weights)
        }
    }
}

/// Consistency-scaled squared distances of every row to the converged
/// concentration-step estimate.
fn concentration_distances(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (n, p) = (x.nrows(), x.ncols());
    let h = (n + p + 1).div_ceil(2);
    let h = h.min(n);

    let mut center = DVector::from_iterator(p, (0..p).map(|j| median(x.column(j).as_slice())));
    let mut diag = Vec::with_capacity(p);
    for j in 0..p {
        let s = qn_scale(x.column(j).as_slice())?;
        if s <= 0.0 {
            return Err(Error::DegenerateColumn(j));
        }
        diag.push(s * s);
    }
    let mut scatter = SymmetricMatrix::from_diagonal(&diag)?;

    let mut subset: Vec<usize> = Vec::new();
    let mut d2 = distances(x, &center, &scatter)?;
    for _ in 0..CSTEP_MAX_ITER {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(a.cmp(&b)));
        let mut next: Vec<usize> = order[..h].to_vec();
        next.sort_unstable();
        if next == subset {
            break;
        }
        subset = next;
        let (c, s) = classical_moments(x, &subset)?;
        center = c;
        scatter = s;
        d2 = distances(x, &center, &scatter)?;
    }
    let med = median(&d2);
    let factor = med / chi2_quantile(0.5, p)?;
    if !(factor > 0.0) {
        return Err(Error::SingularMatrix);
    }
    Ok(d2.into_iter().map(|d| d / factor).collect())
}

fn classical_moments(x: &DMatrix<f64>, rows: &[usize]) -> Result<(DVector<f64>, SymmetricMatrix)> {
    let p = x.ncols();
    let m = rows.len() as f64;
    let mut center = DVector::zeros(p);
    for &i in rows {
        center += x.row(i).transpose();
    }
    center /= m;
    let centered = DMatrix::from_fn(rows.len(), p, |r, j| x[(rows[r], j)] - center[j]);
    let cov = centered.transpose() * &centered / (m - 1.0);
    Ok((center, SymmetricMatrix::symmetrized(cov)))
}

/// Finite-sample reweighting. With `m` kept cases in dimension `q`, a kept
/// case's squared distance times `m / (m-1)^2` is Beta(q/2, (m-q-1)/2), and an
/// excluded case's times `m (m-q) / ((m^2-1) q)` is F(q, m-q), under Gaussian
/// data. Iterates until the kept set is stable.
fn calibrated_reweighting(
    x: &DMatrix<f64>,
    mut inside: Vec<bool>,
    alpha: f64,
) -> Result<Vec<bool>> {
    let q = x.ncols();
    for _ in 0..REWEIGHT_MAX_ITER {
        let rows: Vec<usize> = (0..inside.len()).filter(|&i| inside[i]).collect();
        let m = rows.len();
        if m < q + 2 {
            break;
        }
        let (mf, qf) = (m as f64, q as f64);
        let (center, scatter) = classical_moments(x, &rows)?;
        let d2 = match distances(x, &center, &scatter) {
            Ok(d) => d,
            Err(Error::SingularMatrix) => break,
            Err(e) => return Err(e),
        };
        let in_cut =
            beta_quantile(qf / 2.0, (mf - qf - 1.0) / 2.0, alpha)? * (mf - 1.0).powi(2) / mf;
        // F(q, m-q) quantile from the Beta(q/2, (m-q)/2) quantile b: F = (m-q) b / (q (1-b)).
        let b = beta_quantile(qf / 2.0, (mf - qf) / 2.0, alpha)?;
        let f = (mf - qf) * b / (qf * (1.0 - b));
        let out_cut = f * (mf * mf - 1.0) * qf / (mf * (mf - qf));
        let next: Vec<bool> = d2
            .iter()
            .zip(&inside)
            .map(|(&d, &kept)| d <= if kept { in_cut } else { out_cut })
            .collect();
        if next == inside {
            break;
        }
        inside = next;
    }
    Ok(inside)
}

fn beta_quantile(a: f64, b: f64, prob: f64) -> Result<f64> {
    let dist = statrs::distribution::Beta::new(a, b)
        .map_err(|e| Error::InvalidInput(format!("beta({a}, {b}): {e}")))?;
    Ok(statrs::distribution::ContinuousCDF::inverse_cdf(
        &dist, prob,
    ))
}

/// Squared distances via Cholesky, falling back to the spectral
/// pseudo-inverse when the scatter is singular.
fn distances(
    x: &DMatrix<f64>,
    center: &DVector<f64>,
    scatter: &SymmetricMatrix,
) -> Result<Vec<f64>> {
    let n = x.nrows();
    match numerics::cholesky_lower(scatter) {
        Ok(l) => {
            let diff = DMatrix::from_fn(x.ncols(), n, |j, i| x[(i, j)] - center[j]);
            let solved = l
                .solve_lower_triangular(&diff)
                .ok_or(Error::SingularMatrix)?;
            Ok(solved.column_iter().map(|c| c.norm_squared()).collect())
        }
        Err(_) => {
            let spectral = numerics::sym_eigen(scatter, numerics::RANK_TOL_FAT)?;
            if spectral.retained_rank == 0 {
                return Err(Error::SingularMatrix);
            }
            Ok((0..n)
                .map(|i| spectral.pinv_quadratic(&(x.row(i).transpose() - center)))
                .collect())
        }
    }
}

/// Detector for `p >= n`: concentration steps on a few principal component
/// scores of the median-centered data, plus a cutoff on the distance to the
/// component subspace.
fn fat_data_weights(x: &DMatrix<f64>, alpha: f64) -> Result<Vec<f64>> {
    let (n, p) = (x.nrows(), x.ncols());
    let center: Vec<f64> = (0..p).map(|j| median(x.column(j).as_slice())).collect();
    let centered = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - center[j]);
    let gram = SymmetricMatrix::symmetrized(&centered * centered.transpose());
    let eig = numerics::sym_eigen(&gram, numerics::RANK_TOL_FAT)?;
    let k = eig
        .retained_rank
        .min(FAT_MAX_COMPONENTS)
        .min((n / 5).max(1));
    if k == 0 {
        return Err(Error::SingularMatrix);
    }
    // Scores of case i on component c are u_ic * sqrt(lambda_c).
    let scores = DMatrix::from_fn(n, k, |i, c| {
        eig.eigenvectors[(i, c)] * eig.eigenvalues[c].sqrt()
    });
    let sd2 = concentration_distances(&scores)?;
    let sd_cut = chi2_quantile(alpha, k)?;
    let inside =
        calibrated_reweighting(&scores, sd2.iter().map(|&d| d <= sd_cut).collect(), alpha)?;

    let od: Vec<f64> = (0..n)
        .map(|i| {
            let total = centered.row(i).norm_squared();
            let inside = scores.row(i).norm_squared();
            (total - inside).max(0.0).sqrt()
        })
        .collect();
    let od_cut = orthogonal_cutoff(&od, alpha)?;

    Ok((0..n)
        .map(|i| f64::from(inside[i] && od[i] <= od_cut))
        .collect())
}

/// Cutoff on orthogonal distances: the cube-root-transformed distances are
/// treated as roughly normal and bounded by median + z_alpha * MAD.
fn orthogonal_cutoff(od: &[f64], alpha: f64) -> Result<f64> {
    let t: Vec<f64> = od.iter().map(|d| d.powf(2.0 / 3.0)).collect();
    let med = median(&t);
    let mad = 1.482_6 * median(&t.iter().map(|v| (v - med).abs()).collect::<Vec<_>>());
    Ok((med + mad * normal_quantile(alpha)?).max(0.0).powf(1.5))
}
