//! Fixtures shared by the benchmarks.

use outlyingness::robust::standardize;
use outlyingness::simlab::{contaminate, gen_a09_dataset};
use outlyingness::{DataMatrix, Result};

/// Standardized A09 data with `ceil(fraction * p)` cells of `case` set to `gamma`.
pub fn contaminated_a09(
    n: usize,
    p: usize,
    fraction: f64,
    gamma: f64,
    seed: u64,
) -> Result<(DataMatrix, usize)> {
    let x = gen_a09_dataset(n, p, seed)?;
    let case = 0;
    let (x, _) = contaminate(&x, case, fraction, gamma, seed ^ 0x5eed)?;
    let (z, _) = standardize(&x)?;
    Ok((z, case))
}
