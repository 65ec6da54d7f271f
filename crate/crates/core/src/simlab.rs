//! Simulation protocol: correlated Gaussian data, one cellwise-contaminated
//! case per data set, and the flagged / detected / swamped metrics.
//!
//! Every replication draws from its own ChaCha stream (`seed`, stream =
//! replication index), so studies are reproducible regardless of how many
//! threads run them.

use nalgebra::DMatrix;
use rand::{seq::index, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cholesky_lower, SymmetricMatrix};
use crate::robust::{detect_weights, standardize, DataMatrix, Detector};
use crate::spadimo::{default_grid, spadimo_explain, SpadimoConfig, SpadimoReport};

const A09_RHO: f64 = -0.9;

/// Index of the planted outlier in [`toy_dataset`].
pub const TOY_OUTLIER_CASE: usize = 50;
/// Correlation of the two informative variables in [`toy_dataset`].
pub const TOY_CORRELATION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationModel {
    A09,
    /// Rescaled `G G' + 0.1 I` with standard normal `G`, drawn from `seed`.
    RandomSubstitute {
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub correlation: CorrelationModel,
    pub contamination_fraction: f64,
    pub magnitude: f64,
    pub replications: usize,
    pub seed: u64,
    /// `None` selects [`default_grid`] for the data shape.
    pub spadimo: Option<SpadimoConfig>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(Error::InvalidInput(format!(
                "need n >= 2 and p >= 1, got {}x{}",
                self.n, self.p
            )));
        }
        if !(self.contamination_fraction > 0.0 && self.contamination_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "contamination fraction must lie in (0, 1), got {}",
                self.contamination_fraction
            )));
        }
        if !self.magnitude.is_finite() {
            return Err(Error::InvalidInput(
                "contamination magnitude must be finite".into(),
            ));
        }
        if self.replications == 0 {
            return Err(Error::InvalidInput("need at least one replication".into()));
        }
        contaminated_count(self.p, self.contamination_fraction)?;
        self.spadimo_config().validate()
    }

    pub fn spadimo_config(&self) -> SpadimoConfig {
        self.spadimo
            .clone()
            .unwrap_or_else(|| default_grid(self.n, self.p))
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub case: usize,
    pub truth: Vec<usize>,
    pub flagged: Vec<usize>,
    pub flagged_count: usize,
    pub detected_pct: f64,
    pub swamped_pct: f64,
    pub eta: Option<f64>,
    pub failure: Option<String>,
}

/// Study averages with the per-replication records behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub flagged_count: f64,
    pub detected_pct: f64,
    pub swamped_pct: f64,
    /// Mean selected eta over replications whose scan converged.
    pub mean_eta: Option<f64>,
    pub failures: usize,
    pub records: Vec<ReplicationRecord>,
}

/// `rho_jk = (-0.9)^|j-k|`.
pub fn a09_correlation(p: usize) -> Result<SymmetricMatrix> {
    if p == 0 {
        return Err(Error::InvalidInput("p must be positive".into()));
    }
    SymmetricMatrix::from_fn(p, |j, k| A09_RHO.powi(j.abs_diff(k) as i32))
}

pub fn random_correlation(p: usize, seed: u64) -> Result<SymmetricMatrix> {
    if p == 0 {
        return Err(Error::InvalidInput("p must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: DMatrix<f64> = DMatrix::from_fn(p, p, |_, _| StandardNormal.sample(&mut rng));
    let mut s: DMatrix<f64> = &g * g.transpose();
    for j in 0..p {
        s[(j, j)] += 0.1;
    }
    let d: Vec<f64> = (0..p).map(|j| s[(j, j)].sqrt()).collect();
    let mut c = DMatrix::from_fn(p, p, |j, k| s[(j, k)] / (d[j] * d[k]));
    for j in 0..p {
        c[(j, j)] = 1.0;
    }
    Ok(SymmetricMatrix::symmetrized(c))
}

/// `n` rows drawn i.i.d. from `N(0, corr)` as `L e` with `L` the Cholesky
/// factor of `corr`.
pub fn gen_dataset(n: usize, corr: &SymmetricMatrix, seed: u64) -> Result<DataMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_with_rng(n, corr, &mut rng)
}

fn gen_with_rng(n: usize, corr: &SymmetricMatrix, rng: &mut ChaCha8Rng) -> Result<DataMatrix> {
    let p = corr.dim();
    let l = cholesky_lower(corr)?;
    let e: DMatrix<f64> = DMatrix::from_fn(p, n, |_, _| StandardNormal.sample(rng));
    DataMatrix::new((l * e).transpose(), None)
}

/// Same distribution as [`gen_dataset`] with the A09 matrix, generated by the
/// equivalent first-order recursion `x_j = rho x_{j-1} + sqrt(1 - rho^2) e_j`
/// so that no `p x p` factor is needed.
pub fn gen_a09_dataset(n: usize, p: usize, seed: u64) -> Result<DataMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_a09_with_rng(n, p, &mut rng)
}

fn gen_a09_with_rng(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Result<DataMatrix> {
    let innovation = (1.0 - A09_RHO * A09_RHO).sqrt();
    let mut x = DMatrix::zeros(n, p);
    // Column-major draw order matches gen_dataset's `p x n` innovation matrix.
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let e: f64 = StandardNormal.sample(rng);
            let v = if j == 0 {
                e
            } else {
                A09_RHO * prev + innovation * e
            };
            x[(i, j)] = v;
            prev = v;
        }
    }
    DataMatrix::new(x, None)
}

fn contaminated_count(p: usize, fraction: f64) -> Result<usize> {
    let m = (fraction * p as f64 - 1e-9).ceil() as usize;
    if m == 0 || m > p {
        return Err(Error::InvalidInput(format!(
            "ceil({fraction} * {p}) = {m} cells cannot be contaminated"
        )));
    }
    Ok(m)
}

/// Replaces `ceil(fraction * p)` distinct, uniformly chosen cells of row
/// `case` by `gamma`. Returns the new data and the sorted contaminated
/// columns.
pub fn contaminate(
    x: &DataMatrix,
    case: usize,
    fraction: f64,
    gamma: f64,
    seed: u64,
) -> Result<(DataMatrix, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    contaminate_with_rng(x, case, fraction, gamma, &mut rng)
}

fn contaminate_with_rng(
    x: &DataMatrix,
    case: usize,
    fraction: f64,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(DataMatrix, Vec<usize>)> {
    if case >= x.n() {
        return Err(Error::InvalidInput(format!("case {case} out of range")));
    }
    let m = contaminated_count(x.p(), fraction)?;
    let mut truth = index::sample(rng, x.p(), m).into_vec();
    truth.sort_unstable();
    let mut values = x.values().clone();
    for &j in &truth {
        values[(case, j)] = gamma;
    }
    let names = x.column_names().map(<[String]>::to_vec);
    Ok((DataMatrix::new(values, names)?, truth))
}

/// Flagged count, detected percentage and swamped percentage of `flagged`
/// against the true contaminated columns among `p`.
pub fn evaluate(flagged: &[usize], truth: &[usize], p: usize) -> (usize, f64, f64) {
    let hits = flagged.iter().filter(|j| truth.contains(j)).count();
    let false_hits = flagged.len() - hits;
    let detected = if truth.is_empty() {
        0.0
    } else {
        100.0 * hits as f64 / truth.len() as f64
    };
    let clean = p - truth.len();
    let swamped = if clean == 0 {
        0.0
    } else {
        100.0 * false_hits as f64 / clean as f64
    };
    (flagged.len(), detected, swamped)
}

/// Metrics record for a finished report.
pub fn evaluate_report(
    report: &SpadimoReport,
    truth: &[usize],
    p: usize,
    replication: usize,
) -> ReplicationRecord {
    let flagged = report.flagged_columns();
    let (flagged_count, detected_pct, swamped_pct) = evaluate(&flagged, truth, p);
    ReplicationRecord {
        replication,
        case: report.case_index,
        truth: truth.to_vec(),
        flagged,
        flagged_count,
        detected_pct,
        swamped_pct,
        eta: report.selected_eta,
        failure: None,
    }
}

/// Fifty correlated bivariate Gaussian cases, one outlier at `(10, 0)` as the
/// last case, and 28 independent standard normal noise variables.
pub fn toy_dataset(seed: u64) -> Result<DataMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = TOY_OUTLIER_CASE + 1;
    let p = 30;
    let slope = (1.0 - TOY_CORRELATION * TOY_CORRELATION).sqrt();
    let mut x = DMatrix::zeros(n, p);
    for i in 0..TOY_OUTLIER_CASE {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        x[(i, 0)] = a;
        x[(i, 1)] = TOY_CORRELATION * a + slope * b;
    }
    x[(TOY_OUTLIER_CASE, 0)] = 10.0;
    x[(TOY_OUTLIER_CASE, 1)] = 0.0;
    for i in 0..n {
        for j in 2..p {
            x[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    DataMatrix::new(x, None)
}

fn run_replication(
    cfg: &SimConfig,
    spadimo: &SpadimoConfig,
    replication: usize,
) -> ReplicationRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(replication as u64);

    let mut record = ReplicationRecord {
        replication,
        case: 0,
        truth: Vec::new(),
        flagged: Vec::new(),
        flagged_count: 0,
        detected_pct: 0.0,
        swamped_pct: 0.0,
        eta: None,
        failure: None,
    };
    let outcome = (|| -> Result<ReplicationRecord> {
        let x = match cfg.correlation {
            CorrelationModel::A09 => gen_a09_with_rng(cfg.n, cfg.p, &mut rng)?,
            CorrelationModel::RandomSubstitute { seed } => {
                let corr = random_correlation(cfg.p, seed.wrapping_add(replication as u64))?;
                gen_with_rng(cfg.n, &corr, &mut rng)?
            }
        };
        let case = rng.random_range(0..cfg.n);
        record.case = case;
        let (x, truth) = contaminate_with_rng(
            &x,
            case,
            cfg.contamination_fraction,
            cfg.magnitude,
            &mut rng,
        )?;
        record.truth = truth.clone();
        let (z, _) = standardize(&x)?;
        let w = detect_weights(&z, spadimo.detect_alpha, &Detector::ConcentrationSteps)?;
        let report = spadimo_explain(&z, &w, case, spadimo)?;
        Ok(evaluate_report(&report, &truth, cfg.p, replication))
    })();
    match outcome {
        Ok(r) => r,
        Err(e) => {
            let (_, detected, swamped) = evaluate(&[], &record.truth, cfg.p);
            record.detected_pct = detected;
            record.swamped_pct = swamped;
            record.failure = Some(e.to_string());
            record
        }
    }
}

/// Runs every replication (in parallel) and averages the metrics in
/// replication order. Failed replications count as flagging nothing.
pub fn run_study(cfg: &SimConfig) -> Result<SimMetrics> {
    cfg.validate()?;
    let spadimo = cfg.spadimo_config();
    let records: Vec<ReplicationRecord> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, &spadimo, r))
        .collect();
    Ok(aggregate(records))
}

pub fn aggregate(records: Vec<ReplicationRecord>) -> SimMetrics {
    let count = records.len() as f64;
    let mean = |f: &dyn Fn(&ReplicationRecord) -> f64| records.iter().map(f).sum::<f64>() / count;
    let etas: Vec<f64> = records.iter().filter_map(|r| r.eta).collect();
    SimMetrics {
        flagged_count: mean(&|r| r.flagged_count as f64),
        detected_pct: mean(&|r| r.detected_pct),
        swamped_pct: mean(&|r| r.swamped_pct),
        mean_eta: if etas.is_empty() {
            None
        } else {
            Some(etas.iter().sum::<f64>() / etas.len() as f64)
        },
        failures: records.iter().filter(|r| r.failure.is_some()).count(),
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sym_eigen;

    fn sample_corr(x: &DataMatrix, a: usize, b: usize) -> f64 {
        let (ca, cb) = (x.column(a), x.column(b));
        let n = ca.len() as f64;
        let (ma, mb) = (ca.iter().sum::<f64>() / n, cb.iter().sum::<f64>() / n);
        let cov: f64 = ca.iter().zip(&cb).map(|(u, v)| (u - ma) * (v - mb)).sum();
        let va: f64 = ca.iter().map(|u| (u - ma).powi(2)).sum();
        let vb: f64 = cb.iter().map(|v| (v - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn a09_entries() {
        let c = a09_correlation(2).unwrap();
        assert_eq!(c.as_matrix().as_slice(), &[1.0, -0.9, -0.9, 1.0]);
        let c = a09_correlation(3).unwrap();
        assert_eq!(c.get(0, 2), 0.81);
        assert_eq!(a09_correlation(1).unwrap().get(0, 0), 1.0);
    }

    #[test]
    fn a09_positive_definite() {
        for p in [2, 50] {
            let e = sym_eigen(&a09_correlation(p).unwrap(), 1e-10).unwrap();
            assert!(e.eigenvalues[p - 1] > 0.0);
        }
    }

    #[test]
    fn random_correlation_is_valid() {
        for seed in 0..100 {
            let c = random_correlation(20, seed).unwrap();
            for j in 0..20 {
                assert!((c.get(j, j) - 1.0).abs() < 1e-12);
                for k in 0..20 {
                    if j != k {
                        assert!(c.get(j, k).abs() < 1.0);
                    }
                }
            }
            let e = sym_eigen(&c, 1e-10).unwrap();
            assert!(e.eigenvalues[19] > 0.0, "seed {seed}");
        }
    }

    #[test]
    fn generated_correlations() {
        let x = gen_dataset(10_000, &SymmetricMatrix::identity(2), 1).unwrap();
        assert!(sample_corr(&x, 0, 1).abs() < 0.05);
        let x = gen_dataset(10_000, &a09_correlation(2).unwrap(), 2).unwrap();
        assert!((sample_corr(&x, 0, 1) + 0.9).abs() < 0.05);
        let x = gen_a09_dataset(10_000, 3, 3).unwrap();
        assert!((sample_corr(&x, 0, 2) - 0.81).abs() < 0.05);
    }

    #[test]
    fn a09_recursion_equals_cholesky_route() {
        let a = gen_a09_dataset(7, 4, 99).unwrap();
        // gen_dataset draws a p x n innovation matrix column by column, i.e.
        // case by case, exactly like the recursion.
        let b = gen_dataset(7, &a09_correlation(4).unwrap(), 99).unwrap();
        assert!((a.values() - b.values()).amax() < 1e-10);
    }

    #[test]
    fn generation_is_deterministic() {
        let c = a09_correlation(5).unwrap();
        assert_eq!(
            gen_dataset(20, &c, 4).unwrap(),
            gen_dataset(20, &c, 4).unwrap()
        );
    }

    #[test]
    fn contamination_counts() {
        let x = gen_a09_dataset(10, 50, 1).unwrap();
        let (y, truth) = contaminate(&x, 3, 0.05, 4.0, 8).unwrap();
        assert_eq!(truth.len(), 3);
        let (_, truth10) = contaminate(&x, 3, 0.10, 4.0, 8).unwrap();
        assert_eq!(truth10.len(), 5);
        let mut changed = Vec::new();
        for i in 0..10 {
            for j in 0..50 {
                if x.get(i, j) != y.get(i, j) {
                    changed.push((i, j));
                }
            }
        }
        assert_eq!(changed, truth.iter().map(|&j| (3, j)).collect::<Vec<_>>());
    }

    #[test]
    fn evaluate_arithmetic() {
        assert_eq!(evaluate(&[1, 2, 3], &[1, 2, 3], 50), (3, 100.0, 0.0));
        assert_eq!(evaluate(&[], &[1, 2, 3], 50), (0, 0.0, 0.0));
        let (c, d, s) = evaluate(&[1, 2, 3, 40], &[1, 2, 3], 50);
        assert_eq!((c, d), (4, 100.0));
        assert!((s - 100.0 / 47.0).abs() < 1e-12);
    }

    #[test]
    fn single_replication_aggregate_equals_record() {
        let cfg = SimConfig {
            n: 100,
            p: 10,
            correlation: CorrelationModel::A09,
            contamination_fraction: 0.2,
            magnitude: 6.0,
            replications: 1,
            seed: 5,
            spadimo: None,
        };
        let m = run_study(&cfg).unwrap();
        let r = &m.records[0];
        assert_eq!(m.flagged_count, r.flagged_count as f64);
        assert_eq!(m.detected_pct, r.detected_pct);
        assert_eq!(m.swamped_pct, r.swamped_pct);
        assert_eq!(m.mean_eta, r.eta);
        assert_eq!(run_study(&cfg).unwrap(), m);
    }

    #[test]
    fn toy_layout() {
        let x = toy_dataset(1).unwrap();
        assert_eq!((x.n(), x.p()), (51, 30));
        assert_eq!(x.get(TOY_OUTLIER_CASE, 0), 10.0);
        assert_eq!(x.get(TOY_OUTLIER_CASE, 1), 0.0);
    }
}
