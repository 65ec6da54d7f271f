use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular or not positive definite")]
    SingularMatrix,

    #[error("column {0} has zero robust scale")]
    DegenerateColumn(usize),

    #[error("sum of case weights is {0}, must exceed 1")]
    DegenerateWeights(f64),

    #[error("point coincides with the weighted center; no direction exists")]
    ZeroDirection,

    #[error("covariance between predictors and response is zero")]
    ZeroCovariance,

    #[error("sparsity threshold removed every variable at component {component}")]
    EmptySelection { component: usize },

    #[error("latent score vector {component} has zero norm")]
    DegenerateComponent { component: usize },

    #[error("case {case} is not outlying (o^2 = {outlyingness_sq:.4} < cutoff {cutoff:.4})")]
    NotOutlying {
        case: usize,
        outlyingness_sq: f64,
        cutoff: f64,
    },
}
