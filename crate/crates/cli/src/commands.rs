use std::io::Write;
use std::path::Path;

use serde::Serialize;

use oneclick_core::bell::{bell_curve, BellMode};
use oneclick_core::lhs::{wnr_curve, WnrMode};
use oneclick_core::quantum::{delta_from_overlap, steered_assemblage, MeasurementFamily, SchmidtState};
use oneclick_core::sim::{run_pipeline, PipelineConfig};
use oneclick_core::thresholds::{asymptotic_threshold, lambda_max_equal_spaced};
use oneclick_core::witness::primal_value;

use crate::{CliError, Format};

fn io_error(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(format!("write failed: {e}"))
}

fn emit<T: Serialize>(rows: &[T], fmt: Format, out: Box<dyn Write>) -> Result<(), CliError> {
    match fmt {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(io_error)?;
            }
            w.flush().map_err(io_error)
        }
        Format::Json => emit_json(rows, out),
    }
}

fn emit_json<T: Serialize + ?Sized>(value: &T, mut out: Box<dyn Write>) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value).map_err(io_error)?;
    writeln!(out).map_err(io_error)
}

fn check_unit(name: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(CliError::Validation(format!("{name} value {v} outside [0, 1]"))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct ThresholdRow {
    #[serde(rename = "X")]
    settings: usize,
    delta: Option<f64>,
    epsilon_star: f64,
    lambda_max: f64,
}

pub fn threshold(
    settings: usize,
    delta: Option<f64>,
    limit: bool,
    fmt: Format,
    out: Box<dyn Write>,
) -> Result<(), CliError> {
    let row = if limit {
        let eps = asymptotic_threshold(settings)?;
        ThresholdRow {
            settings,
            delta: None,
            epsilon_star: eps,
            lambda_max: 1.0 / eps,
        }
    } else {
        let d = delta.ok_or_else(|| CliError::Validation("either --delta or --limit is required".into()))?;
        let lambda = lambda_max_equal_spaced(settings, d)?;
        ThresholdRow {
            settings,
            delta: Some(d),
            epsilon_star: 1.0 / lambda,
            lambda_max: lambda,
        }
    };
    emit(&[row], fmt, out)
}

#[derive(Serialize)]
struct SteeringRow {
    epsilon: f64,
    overlap: f64,
    delta: f64,
    parameter: f64,
}

pub fn curve_steering(
    eps: &[f64],
    alpha: f64,
    overlaps: &[f64],
    fmt: Format,
    out: Box<dyn Write>,
) -> Result<(), CliError> {
    check_unit("epsilon", eps)?;
    check_unit("overlap", overlaps)?;
    let state = SchmidtState::phi_plus_alpha(alpha)?;
    let mut rows = Vec::with_capacity(eps.len() * overlaps.len());
    for &e in eps {
        for &o in overlaps {
            let delta = delta_from_overlap(o);
            let asm = steered_assemblage(&state, &MeasurementFamily::one_click(2, delta, e)?)?;
            rows.push(SteeringRow {
                epsilon: e,
                overlap: o,
                delta,
                parameter: primal_value(&asm, state.lambda0())?,
            });
        }
    }
    emit(&rows, fmt, out)
}

pub fn curve_bell(mode: BellMode, eps: &[f64], fmt: Format, out: Box<dyn Write>) -> Result<(), CliError> {
    check_unit("epsilon", eps)?;
    emit(&bell_curve(mode, eps)?, fmt, out)
}

pub fn wnr_steering(mode: WnrMode, eps: &[f64], fmt: Format, out: Box<dyn Write>) -> Result<(), CliError> {
    check_unit("epsilon", eps)?;
    emit(&wnr_curve(eps, mode)?, fmt, out)
}

#[derive(Serialize)]
struct SimulationRow {
    overlap: f64,
    mean_parameter: f64,
    stderr: f64,
    epsilon_estimate: f64,
}

pub fn simulate(path: &Path, fmt: Format, out: Box<dyn Write>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let config: PipelineConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("bad config: {e}")))?;
    let report = run_pipeline(&config)?;
    match fmt {
        Format::Json => emit_json(&report, out),
        Format::Csv => {
            let rows: Vec<SimulationRow> = report
                .points
                .iter()
                .map(|p| SimulationRow {
                    overlap: p.overlap,
                    mean_parameter: p.mean_parameter,
                    stderr: p.stderr,
                    epsilon_estimate: p.epsilon_estimate,
                })
                .collect();
            emit(&rows, fmt, out)
        }
    }
}
