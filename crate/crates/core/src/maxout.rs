//! Direction of maximal outlyingness.
//!
//! Two routes to the same vector: the closed form `S^-1 (x - mu)` normalised,
//! and the normed least-squares coefficients of a weighted regression of the
//! indicator of `x` on the centered data with `x` appended at weight
//! `epsilon`. The second route is what makes a sparse regression fit usable as
//! a sparse direction estimate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{solve_spd, SymmetricMatrix};
use crate::robust::{CaseWeights, DataMatrix, RobustSummary};

/// A unit-norm direction whose largest-magnitude component is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitDirection(DVector<f64>);

impl UnitDirection {
    /// Normalises `v` and fixes its sign.
    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroDirection);
        }
        let mut v = v / norm;
        let lead = v.iamax();
        if v[lead] < 0.0 {
            v.neg_mut();
        }
        Ok(Self(v))
    }

    pub fn components(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn cosine(&self, other: &UnitDirection) -> f64 {
        self.0.dot(&other.0)
    }
}

/// Centered, weighted regression problem whose normed least-squares solution
/// tends to the direction of maximal outlyingness of `x` as `epsilon -> 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedRegression {
    pub design: DMatrix<f64>,
    pub response: DVector<f64>,
    pub epsilon: f64,
    pub center: DVector<f64>,
    pub n_w_eps: f64,
}

impl AugmentedRegression {
    /// Ordinary least squares through the normal equations.
    pub fn least_squares(&self) -> Result<DVector<f64>> {
        let xtx = SymmetricMatrix::symmetrized(self.design.transpose() * &self.design);
        let xty = self.design.transpose() * &self.response;
        solve_spd(&xtx, &xty)
    }
}

/// Projected standardized distance `|x'a - mu'a| / sqrt(a' S a)`.
pub fn projected_outlyingness(x: &DVector<f64>, a: &DVector<f64>, summary: &RobustSummary) -> f64 {
    let shift = (x - &summary.location).dot(a).abs();
    let spectral = &summary.spectral;
    let spread: f64 = (0..spectral.eigenvalues.len())
        .map(|k| {
            let c = spectral.eigenvectors.column(k).dot(a);
            spectral.eigenvalues[k] * c * c
        })
        .sum();
    shift / spread.sqrt()
}

/// `normalize(S_w^-1 (x - mu_w))`, with the inverse taken over the retained
/// eigenspace of the weighted scatter.
pub fn max_outlying_direction(x: &DVector<f64>, summary: &RobustSummary) -> Result<UnitDirection> {
    if x.len() != summary.location.len() {
        return Err(Error::InvalidInput(format!(
            "point has dimension {}, summary has {}",
            x.len(),
            summary.location.len()
        )));
    }
    if summary.spectral.retained_rank == 0 {
        return Err(Error::SingularMatrix);
    }
    let diff = x - &summary.location;
    if diff.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroDirection);
    }
    UnitDirection::from_vector(summary.spectral.pinv_apply(&diff))
}

/// Appends `x` at weight `epsilon` to the weighted data and centers every row
/// at the combined weighted mean.
pub fn build_augmented_regression(
    data: &DataMatrix,
    w: &CaseWeights,
    x: &DVector<f64>,
    epsilon: f64,
) -> Result<AugmentedRegression> {
    let (n, p) = (data.n(), data.p());
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if w.len() != n || x.len() != p {
        return Err(Error::InvalidInput(
            "dimension mismatch in augmented regression".into(),
        ));
    }
    let n_w_eps = w.n_w() + epsilon;
    let mut center = x * epsilon;
    for i in 0..n {
        center.axpy(w.get(i), &data.row(i), 1.0);
    }
    center /= n_w_eps;

    let values = data.values();
    let root_eps = epsilon.sqrt();
    let design = DMatrix::from_fn(n + 1, p, |i, j| {
        if i < n {
            w.get(i).sqrt() * (values[(i, j)] - center[j])
        } else {
            root_eps * (x[j] - center[j])
        }
    });
    let mut response = DVector::zeros(n + 1);
    response[n] = 1.0;
    Ok(AugmentedRegression {
        design,
        response,
        epsilon,
        center,
        n_w_eps,
    })
}

/// Normed least-squares coefficients of the augmented regression.
pub fn regression_direction(
    data: &DataMatrix,
    w: &CaseWeights,
    x: &DVector<f64>,
    epsilon: f64,
) -> Result<UnitDirection> {
    let reg = build_augmented_regression(data, w, x, epsilon)?;
    UnitDirection::from_vector(reg.least_squares()?)
}

/// Rows `sqrt(w_j) (x_j - mu_w)` of the weighted, centered data.
pub fn weighted_centered_design(data: &DataMatrix, w: &CaseWeights) -> DMatrix<f64> {
    let (n, p) = (data.n(), data.p());
    let mut center = DVector::zeros(p);
    for i in 0..n {
        center.axpy(w.get(i) / w.n_w(), &data.row(i), 1.0);
    }
    let values = data.values();
    DMatrix::from_fn(n, p, |i, j| w.get(i).sqrt() * (values[(i, j)] - center[j]))
}

/// Direction for a case that belongs to the sample: its zero weight (if any)
/// is replaced by `epsilon` and the indicator of the case is regressed on the
/// weighted, centered data.
pub fn in_sample_direction(
    data: &DataMatrix,
    w: &CaseWeights,
    case: usize,
    epsilon: f64,
) -> Result<UnitDirection> {
    if case >= data.n() {
        return Err(Error::InvalidInput(format!("case {case} out of range")));
    }
    let w = w.with_floor_at(case, epsilon)?;
    let design = weighted_centered_design(data, &w);
    let xtx = SymmetricMatrix::symmetrized(design.transpose() * &design);
    let xty = design.row(case).transpose();
    UnitDirection::from_vector(solve_spd(&xtx, &xty)?)
}
