//! Sparse NIPALS partial least squares for a univariate response.
//!
//! Each component takes the covariance vector `X'y` of the current deflated
//! predictors, soft-thresholds it at `eta * max|X'y|`, and uses the normalised
//! result as weighting vector. Coefficients are assembled from the rank-one
//! regressions of `y` on the mutually orthogonal scores, so they are exactly
//! zero outside the union of the weighting vectors' supports.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A fitted SNIPLS model.
#[derive(Debug, Clone, PartialEq)]
pub struct SniplsModel {
    pub eta: f64,
    pub n_components: usize,
    pub coefficients: DVector<f64>,
    /// Columns with a nonzero coefficient, ascending.
    pub selected: Vec<usize>,
    pub weighting_vectors: Vec<DVector<f64>>,
    pub scores: Vec<DVector<f64>>,
    pub y_loadings: Vec<f64>,
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!(
            "eta must lie in [0, 1), got {eta}"
        )));
    }
    Ok(())
}

/// `sign(z_j) max(|z_j| - eta max|z|, 0)`, normalised to unit length.
pub fn soft_threshold_weights(z: &DVector<f64>, eta: f64) -> Result<DVector<f64>> {
    check_eta(eta)?;
    let zmax = z.amax();
    if !(zmax > 0.0) {
        return Err(Error::ZeroCovariance);
    }
    let threshold = eta * zmax;
    let w = z.map(|v| v.signum() * (v.abs() - threshold).max(0.0));
    let norm = w.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroCovariance);
    }
    Ok(w / norm)
}

/// Fits `h` SNIPLS components of `y` on the (already centered) predictors.
pub fn snipls_fit(x: &DMatrix<f64>, y: &DVector<f64>, h: usize, eta: f64) -> Result<SniplsModel> {
    check_eta(eta)?;
    let (n, p) = x.shape();
    if h == 0 {
        return Err(Error::InvalidInput("need at least one component".into()));
    }
    if y.len() != n {
        return Err(Error::InvalidInput(format!(
            "response has length {}, predictors have {n} rows",
            y.len()
        )));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidInput("response is identically zero".into()));
    }

    let mut deflated = x.clone();
    let mut weighting_vectors = Vec::with_capacity(h);
    let mut scores = Vec::with_capacity(h);
    let mut y_loadings = Vec::with_capacity(h);
    // Rotation vectors r_k with X r_k = t_k, and x-loadings p_k.
    let mut rotations: Vec<DVector<f64>> = Vec::with_capacity(h);
    let mut x_loadings: Vec<DVector<f64>> = Vec::with_capacity(h);

    for component in 0..h {
        let z = deflated.tr_mul(y);
        let w = match soft_threshold_weights(&z, eta) {
            Ok(w) => w,
            Err(Error::ZeroCovariance) if component == 0 => return Err(Error::ZeroCovariance),
            Err(Error::ZeroCovariance) => return Err(Error::EmptySelection { component }),
            Err(e) => return Err(e),
        };
        let t = &deflated * &w;
        let tt = t.norm_squared();
        if !(tt > 0.0) {
            return Err(Error::DegenerateComponent { component });
        }
        let loading = deflated.tr_mul(&t) / tt;
        let c = t.dot(y) / tt;

        let mut r = w.clone();
        for (rj, pj) in rotations.iter().zip(&x_loadings) {
            r.axpy(-pj.dot(&w), rj, 1.0);
        }
        if component + 1 < h {
            deflated -= &t * loading.transpose();
        }
        rotations.push(r);
        x_loadings.push(loading);
        weighting_vectors.push(w);
        scores.push(t);
        y_loadings.push(c);
    }

    let mut coefficients = DVector::zeros(p);
    for (r, c) in rotations.iter().zip(&y_loadings) {
        coefficients.axpy(*c, r, 1.0);
    }
    let selected = (0..p).filter(|&j| coefficients[j] != 0.0).collect();
    Ok(SniplsModel {
        eta,
        n_components: h,
        coefficients,
        selected,
        weighting_vectors,
        scores,
        y_loadings,
    })
}
