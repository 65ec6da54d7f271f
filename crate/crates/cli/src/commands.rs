//! Command implementations. Each command writes its output and reports how
//! the run went; `main` turns that into the exit status.

use std::io::Write as _;
use std::path::Path;

use outlyingness::maxout::max_outlying_direction;
use outlyingness::numerics::chi2_quantile;
use outlyingness::robust::{detect_weights, outlyingness_sq, standardize, weighted_moments};
use outlyingness::simlab::run_study;
use outlyingness::spadimo::{default_grid, direction_path, spadimo_explain};
use outlyingness::{
    CaseWeights, CorrelationModel, DataMatrix, Detector, Error, SimConfig, SimMetrics,
    SpadimoConfig, SpadimoReport, SparseDirectionPath, StandardizationParams, Termination,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{
    Command, Correlation, DirectionArgs, ExplainArgs, Format, InputArgs, PathArgs, ScanArgs,
    SimulateArgs, WeightsArgs,
};
use crate::document::{
    CaseExplanation, CaseStatus, DatasetFingerprint, DetectorInfo, ExplanationDocument, ToolInfo,
};
use crate::error::{CliError, Result};
use crate::input::{load_csv, LoadedData};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Partial,
    Failed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Failed => 1,
            Outcome::Partial => 2,
        }
    }
}

pub fn run(command: &Command) -> Result<Outcome> {
    match command {
        Command::Explain(a) => explain(a),
        Command::Direction(a) => direction(a),
        Command::Path(a) => path(a),
        Command::Simulate(a) => simulate(a),
        Command::Weights(a) => weights(a),
    }
}

/// Standardized data and detector weights for an input file.
pub struct Prepared {
    pub loaded: LoadedData,
    pub z: DataMatrix,
    pub params: StandardizationParams,
    pub weights: CaseWeights,
    pub detect_alpha: f64,
}

impl Prepared {
    pub fn new(input: &InputArgs) -> Result<Self> {
        let loaded = load_csv(&input.input, input.drop_incomplete)?;
        let (z, params) = standardize(&loaded.data)?;
        let weights = detect_weights(&z, input.detect_alpha, &Detector::ConcentrationSteps)?;
        Ok(Self {
            loaded,
            z,
            params,
            weights,
            detect_alpha: input.detect_alpha,
        })
    }

    fn labels(&self) -> Vec<String> {
        (0..self.z.p())
            .map(|j| self.loaded.data.column_label(j))
            .collect()
    }

    fn case_index(&self, case: usize) -> Result<usize> {
        if case == 0 || case > self.z.n() {
            return Err(CliError::Usage(format!(
                "case must lie in 1..={}, got {case}",
                self.z.n()
            )));
        }
        Ok(case - 1)
    }

    fn outlying_cases(&self) -> Vec<usize> {
        (0..self.z.n())
            .filter(|&i| self.weights.get(i) == 0.0)
            .collect()
    }
}

pub fn scan_config(
    scan: &ScanArgs,
    detect_alpha: f64,
    n: usize,
    p: usize,
) -> Result<SpadimoConfig> {
    let mut cfg = default_grid(n, p);
    if let Some(g) = scan.grid {
        cfg.grid_low = g.low;
        cfg.grid_high = g.high;
        cfg.grid_step = g.step;
    }
    cfg.alpha = scan.alpha;
    cfg.detect_alpha = detect_alpha;
    cfg.h = scan.h;
    cfg.epsilon_weight = scan.eps_weight;
    cfg.refit_weights = !scan.no_refit;
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn usage(e: Error) -> CliError {
    match e {
        Error::InvalidInput(m) => CliError::Usage(m),
        other => CliError::Core(other),
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn explain_case(
    prep: &Prepared,
    labels: &[String],
    case: usize,
    cfg: &SpadimoConfig,
) -> CaseExplanation {
    let (status, message, report) = match spadimo_explain(&prep.z, &prep.weights, case, cfg) {
        Ok(r) => {
            let status = match r.terminated {
                Termination::Converged => CaseStatus::Converged,
                Termination::GridExhausted => CaseStatus::GridExhausted,
            };
            (status, None, Some(r))
        }
        Err(Error::NotOutlying {
            outlyingness_sq,
            cutoff,
            ..
        }) => (
            CaseStatus::NotOutlying,
            Some(format!(
                "not outlying: squared outlyingness {outlyingness_sq} is below the cutoff {cutoff}"
            )),
            None,
        ),
        Err(e) => (CaseStatus::Failed, Some(e.to_string()), None),
    };
    let flagged_variables = report
        .as_ref()
        .map(|r| r.flagged.iter().map(|f| labels[f.column].clone()).collect())
        .unwrap_or_default();
    CaseExplanation {
        case: case + 1,
        status,
        message,
        flagged_variables,
        report,
    }
}

/// Explanation document for the given 0-based cases, in case order.
pub fn explain_document(
    prep: &Prepared,
    cfg: &SpadimoConfig,
    cases: &[usize],
) -> ExplanationDocument {
    let labels = prep.labels();
    let explained: Vec<CaseExplanation> = cases
        .par_iter()
        .map(|&i| explain_case(prep, &labels, i, cfg))
        .collect();
    ExplanationDocument {
        tool: ToolInfo::current(),
        dataset: DatasetFingerprint {
            n: prep.z.n(),
            p: prep.z.p(),
            column_names: labels,
            sha256: prep.loaded.sha256.clone(),
            dropped_lines: prep.loaded.dropped_lines.clone(),
        },
        standardization: prep.params.clone(),
        detector: DetectorInfo {
            alpha: prep.detect_alpha,
            n_w: prep.weights.n_w(),
            outlying_cases: prep.outlying_cases().iter().map(|i| i + 1).collect(),
        },
        settings: cfg.clone(),
        cases: explained,
    }
}

fn flag_values(report: &SpadimoReport, p: usize) -> Vec<f64> {
    let mut row = vec![0.0; p];
    for f in &report.flagged {
        row[f.column] = f.coefficient;
    }
    row
}

fn explain(args: &ExplainArgs) -> Result<Outcome> {
    let prep = Prepared::new(&args.input)?;
    let cfg = scan_config(&args.scan, args.input.detect_alpha, prep.z.n(), prep.z.p())?;
    let cases = match args.case {
        Some(k) => vec![prep.case_index(k)?],
        None => prep.outlying_cases(),
    };
    let doc = explain_document(&prep, &cfg, &cases);

    let content = match args.format {
        Format::Json => doc.to_json()?,
        Format::Csv => csv_string(|w| {
            w.write_record([
                "case",
                "status",
                "variable",
                "column",
                "sign",
                "coefficient",
                "eta",
            ])?;
            for c in &doc.cases {
                let status = serde_json::to_value(c.status)?;
                let status = status.as_str().unwrap_or_default().to_owned();
                let flagged = c
                    .report
                    .as_ref()
                    .map(|r| r.flagged.as_slice())
                    .unwrap_or(&[]);
                if flagged.is_empty() {
                    w.write_record([&c.case.to_string(), &status, "", "", "", "", ""])?;
                }
                for f in flagged {
                    w.write_record([
                        c.case.to_string(),
                        status.clone(),
                        doc.dataset.column_names[f.column].clone(),
                        (f.column + 1).to_string(),
                        f.sign.symbol().to_owned(),
                        f.coefficient.to_string(),
                        f.eta.to_string(),
                    ])?;
                }
            }
            Ok(())
        })?,
        Format::Svg => {
            let rows: Vec<&CaseExplanation> =
                doc.cases.iter().filter(|c| c.report.is_some()).collect();
            let labels: Vec<String> = rows.iter().map(|c| format!("case {}", c.case)).collect();
            let values: Vec<Vec<f64>> = rows
                .iter()
                .filter_map(|c| c.report.as_ref())
                .map(|r| flag_values(r, doc.dataset.p))
                .collect();
            svg::heatmap(
                "Flagged variables per outlier",
                &labels,
                &doc.dataset.column_names,
                &values,
            )
        }
    };
    emit(args.out.as_deref(), &content)?;
    for c in doc
        .cases
        .iter()
        .filter(|c| c.status != CaseStatus::Converged)
    {
        eprintln!(
            "case {}: {}",
            c.case,
            c.message
                .as_deref()
                .unwrap_or("grid exhausted before the case stopped being outlying")
        );
    }
    Ok(
        if doc.cases.iter().any(|c| c.status == CaseStatus::Failed) {
            Outcome::Failed
        } else if doc.is_partial() {
            Outcome::Partial
        } else {
            Outcome::Success
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionComponent {
    pub variable: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionDocument {
    pub case: usize,
    pub eta: Option<f64>,
    pub components: Vec<DirectionComponent>,
}

fn direction(args: &DirectionArgs) -> Result<Outcome> {
    let prep = Prepared::new(&args.input)?;
    let case = prep.case_index(args.case)?;
    let values: Vec<f64> = match args.eta {
        None => {
            let summary = weighted_moments(&prep.z, &prep.weights)?;
            max_outlying_direction(&prep.z.row(case), &summary)?
                .into_inner()
                .iter()
                .copied()
                .collect()
        }
        Some(eta) => {
            let path = direction_path(
                &prep.z,
                &prep.weights,
                case,
                &[eta],
                args.h,
                args.eps_weight,
            )
            .map_err(usage)?;
            if let Some(s) = path.skipped.first() {
                eprintln!("eta {}: {}", s.eta, s.reason);
                return Ok(Outcome::Failed);
            }
            path.directions[0].clone()
        }
    };
    let doc = DirectionDocument {
        case: args.case,
        eta: args.eta,
        components: prep
            .labels()
            .into_iter()
            .zip(values)
            .map(|(variable, value)| DirectionComponent { variable, value })
            .collect(),
    };
    let content = match args.format {
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => csv_string(|w| {
            w.write_record(["variable", "value"])?;
            for c in &doc.components {
                w.write_record([c.variable.clone(), c.value.to_string()])?;
            }
            Ok(())
        })?,
        Format::Svg => return Err(CliError::Usage("direction supports json and csv".into())),
    };
    emit(args.out.as_deref(), &content)?;
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDocument {
    pub case: usize,
    pub column_names: Vec<String>,
    pub selected_eta: Option<f64>,
    pub flagged_variables: Vec<String>,
    pub path: SparseDirectionPath,
}

fn path(args: &PathArgs) -> Result<Outcome> {
    let prep = Prepared::new(&args.input)?;
    let case = prep.case_index(args.case)?;
    let cfg = scan_config(&args.scan, args.input.detect_alpha, prep.z.n(), prep.z.p())?;
    let path = direction_path(
        &prep.z,
        &prep.weights,
        case,
        &cfg.grid(),
        cfg.h,
        cfg.epsilon_weight,
    )?;
    let labels = prep.labels();
    let explained = explain_case(&prep, &labels, case, &cfg);
    if let Some(m) = &explained.message {
        eprintln!("case {}: {m}", args.case);
    }
    let selected = explained.report.as_ref().and_then(|r| r.selected_eta);
    let outcome = match explained.status {
        CaseStatus::Converged => Outcome::Success,
        CaseStatus::Failed => Outcome::Failed,
        _ => Outcome::Partial,
    };

    let screeplot_csv = csv_string(|w| {
        w.write_record(["eta", "count", "automatic"])?;
        for (e, c) in path.etas.iter().zip(&path.counts) {
            let mark = u8::from(Some(*e) == selected);
            w.write_record([e.to_string(), c.to_string(), mark.to_string()])?;
        }
        Ok(())
    })?;
    let directions_csv = csv_string(|w| {
        let mut head = vec!["eta".to_owned()];
        head.extend(labels.iter().cloned());
        w.write_record(&head)?;
        for (e, d) in path.etas.iter().zip(&path.directions) {
            let mut row = vec![e.to_string()];
            row.extend(d.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        Ok(())
    })?;

    match (args.format, args.out.as_deref()) {
        (Format::Json, out) => {
            let doc = PathDocument {
                case: args.case,
                column_names: labels,
                selected_eta: selected,
                flagged_variables: explained.flagged_variables,
                path,
            };
            emit(out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
        }
        (Format::Csv, None) => emit(None, &format!("{screeplot_csv}\n{directions_csv}"))?,
        (Format::Svg, None) => {
            return Err(CliError::Usage(
                "--format svg needs an output directory (--out)".into(),
            ))
        }
        (format, Some(dir)) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("screeplot.csv"), &screeplot_csv)?;
            std::fs::write(dir.join("directions.csv"), &directions_csv)?;
            if format == Format::Svg {
                std::fs::write(
                    dir.join("screeplot.svg"),
                    svg::screeplot(&path.etas, &path.counts, selected),
                )?;
                let rows: Vec<String> = path.etas.iter().map(|e| format!("eta {e:.2}")).collect();
                std::fs::write(
                    dir.join("heatmap.svg"),
                    svg::heatmap(
                        &format!("Sparse directions of case {}", args.case),
                        &rows,
                        &labels,
                        &path.directions,
                    ),
                )?;
            }
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDocument {
    pub config: SimConfig,
    pub metrics: SimMetrics,
}

pub fn sim_config(args: &SimulateArgs) -> Result<SimConfig> {
    let correlation = match args.corr {
        Correlation::A09 => CorrelationModel::A09,
        Correlation::Random => CorrelationModel::RandomSubstitute {
            seed: args.corr_seed,
        },
    };
    let cfg = SimConfig {
        n: args.n,
        p: args.p,
        correlation,
        contamination_fraction: args.frac,
        magnitude: args.gamma,
        replications: args.reps,
        seed: args.seed,
        spadimo: Some(scan_config(&args.scan, args.detect_alpha, args.n, args.p)?),
    };
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn simulate(args: &SimulateArgs) -> Result<Outcome> {
    let cfg = sim_config(args)?;
    let metrics = run_study(&cfg).map_err(usage)?;
    let content = match args.format {
        Format::Json => {
            let doc = StudyDocument {
                config: cfg,
                metrics,
            };
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Csv => {
            let corr = match args.corr {
                Correlation::A09 => "a09",
                Correlation::Random => "random",
            };
            let mut out = csv_string(|w| {
                w.write_record([
                    "n",
                    "p",
                    "correlation",
                    "fraction",
                    "gamma",
                    "replications",
                    "seed",
                    "h",
                    "flagged",
                    "detected_pct",
                    "swamped_pct",
                    "eta",
                    "failures",
                ])?;
                w.write_record([
                    cfg.n.to_string(),
                    cfg.p.to_string(),
                    corr.to_owned(),
                    cfg.contamination_fraction.to_string(),
                    cfg.magnitude.to_string(),
                    cfg.replications.to_string(),
                    cfg.seed.to_string(),
                    cfg.spadimo_config().h.to_string(),
                    format!("{:.3}", metrics.flagged_count),
                    format!("{:.3}", metrics.detected_pct),
                    format!("{:.3}", metrics.swamped_pct),
                    metrics
                        .mean_eta
                        .map(|e| format!("{e:.3}"))
                        .unwrap_or_default(),
                    metrics.failures.to_string(),
                ])?;
                Ok(())
            })?;
            if args.records {
                out.push('\n');
                out.push_str(&csv_string(|w| {
                    w.write_record([
                        "replication",
                        "case",
                        "flagged",
                        "detected_pct",
                        "swamped_pct",
                        "eta",
                        "failure",
                    ])?;
                    for r in &metrics.records {
                        w.write_record([
                            (r.replication + 1).to_string(),
                            (r.case + 1).to_string(),
                            r.flagged_count.to_string(),
                            r.detected_pct.to_string(),
                            r.swamped_pct.to_string(),
                            r.eta.map(|e| e.to_string()).unwrap_or_default(),
                            r.failure.clone().unwrap_or_default(),
                        ])?;
                    }
                    Ok(())
                })?);
            }
            out
        }
        Format::Svg => return Err(CliError::Usage("simulate supports json and csv".into())),
    };
    emit(args.out.as_deref(), &content)?;
    Ok(Outcome::Success)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseWeight {
    pub case: usize,
    pub weight: f64,
    pub outlyingness_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsDocument {
    pub n_w: f64,
    pub effective_df: usize,
    pub cutoff: f64,
    pub cases: Vec<CaseWeight>,
}

fn weights(args: &WeightsArgs) -> Result<Outcome> {
    let prep = Prepared::new(&args.input)?;
    let summary = weighted_moments(&prep.z, &prep.weights)?;
    let cutoff = summary.cutoff(args.alpha).map_err(usage)?;
    debug_assert_eq!(cutoff, chi2_quantile(args.alpha, summary.effective_df)?);
    let cases = (0..prep.z.n())
        .map(|i| {
            Ok(CaseWeight {
                case: i + 1,
                weight: prep.weights.get(i),
                outlyingness_sq: outlyingness_sq(&prep.z.row(i), &summary)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let doc = WeightsDocument {
        n_w: prep.weights.n_w(),
        effective_df: summary.effective_df,
        cutoff,
        cases,
    };
    let content = match args.format {
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => csv_string(|w| {
            w.write_record(["case", "weight", "outlyingness_sq", "cutoff"])?;
            for c in &doc.cases {
                w.write_record([
                    c.case.to_string(),
                    c.weight.to_string(),
                    c.outlyingness_sq.to_string(),
                    cutoff.to_string(),
                ])?;
            }
            Ok(())
        })?,
        Format::Svg => return Err(CliError::Usage("weights supports json and csv".into())),
    };
    emit(args.out.as_deref(), &content)?;
    Ok(Outcome::Success)
}
