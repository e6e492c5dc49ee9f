//! Subcommand implementations.

use std::path::Path;

use cfi_core::{
    build_canonical_layout, enumerate_paths_oracle, image_mask, imaging_stats, p1_limit, p_triple,
    p_triple_equal_t, p_triple_reflective, simulate, trace_layout, ChainConfig, Error as CoreError,
    ImagingRun, Layout, ObjectModel, OutcomeDistribution, ProbabilityTriple, Spacings, TraceReport,
};
use serde::Serialize;

use crate::config::{load_mask, RunConfig};
use crate::output::{emit, write_atomic};
use crate::{pgm, CliError, CliResult};

const FORMULA_TOLERANCE: f64 = 1e-10;

/// Closed-form expectation for an object model, when one exists.
fn closed_form(
    config: &ChainConfig,
    object: &ObjectModel,
) -> Result<Option<ProbabilityTriple>, CliError> {
    let triple = match object {
        ObjectModel::Absorbing => Some(p_triple(&config.transmissivities)),
        ObjectModel::Reflective { offset_bins } if *offset_bins > 0 => {
            Some(p_triple_reflective(&config.transmissivities))
        }
        // A matched chain returns everything to the source.
        ObjectModel::Absent | ObjectModel::Reflective { .. } => Some(Ok(ProbabilityTriple {
            p0: 1.0,
            p1: 0.0,
            p2: 0.0,
        })),
        ObjectModel::Phase { .. } => None,
    };
    triple.transpose().map_err(CliError::input)
}

#[derive(Serialize)]
struct FormulaCheck {
    applicable: bool,
    pass: bool,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Serialize)]
struct OracleCheck {
    checked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

#[derive(Serialize)]
struct ProbsReport {
    n_stages: usize,
    object: ObjectModel,
    closed_form: Option<ProbabilityTriple>,
    simulated: OutcomeDistribution,
    delta: Option<ProbabilityTriple>,
    formula_check: FormulaCheck,
    oracle: OracleCheck,
}

pub fn probs(config_path: &Path, out: Option<&Path>) -> CliResult {
    let run = RunConfig::load(config_path)?;
    let (config, object) = run.chain()?;
    let simulated = simulate(&config, &object).map_err(CliError::input)?;

    let lossless = config.bs_loss == 0.0
        && config.mirror_loss == 0.0
        && config
            .arm_losses
            .as_ref()
            .is_none_or(|v| v.iter().all(|&x| x == 0.0));
    let closed = if lossless {
        closed_form(&config, &object)?
    } else {
        None
    };

    let (delta, formula_check) = match &closed {
        Some(triple) => {
            let delta = ProbabilityTriple {
                p0: simulated.p_source - triple.p0,
                p1: simulated.total_detector() - triple.p1,
                p2: simulated.p_object - triple.p2,
            };
            let max_delta = delta.p0.abs().max(delta.p1.abs()).max(delta.p2.abs());
            (
                Some(delta),
                FormulaCheck {
                    applicable: true,
                    pass: max_delta <= FORMULA_TOLERANCE,
                    tolerance: FORMULA_TOLERANCE,
                    max_delta: Some(max_delta),
                    note: None,
                },
            )
        }
        None => (
            None,
            FormulaCheck {
                applicable: false,
                pass: true,
                tolerance: FORMULA_TOLERANCE,
                max_delta: None,
                note: Some(if lossless {
                    "no closed form covers this object; simulation only".into()
                } else {
                    "closed forms assume a lossless chain".into()
                }),
            },
        ),
    };

    let oracle = match enumerate_paths_oracle(&config, &object) {
        Ok(reference) => {
            let max_delta = simulated.max_delta(&reference);
            OracleCheck {
                checked: true,
                pass: Some(max_delta <= FORMULA_TOLERANCE),
                max_delta: Some(max_delta),
                skipped: None,
            }
        }
        Err(e @ CoreError::OracleGuard { .. }) => OracleCheck {
            checked: false,
            pass: None,
            max_delta: None,
            skipped: Some(e.to_string()),
        },
        Err(e) => return Err(CliError::input(e)),
    };

    let report = ProbsReport {
        n_stages: config.n_stages,
        object,
        closed_form: closed,
        simulated,
        delta,
        formula_check,
        oracle,
    };
    let ok = report.formula_check.pass && report.oracle.pass.unwrap_or(true);
    let json = serde_json::to_string_pretty(&report).map_err(CliError::input)?;
    emit(out, "probs_report.json", &(json + "\n"))?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Check(
            "simulation disagrees with its reference beyond 1e-10".into(),
        ))
    }
}

fn format_sig(v: f64) -> String {
    // 15 significant digits.
    format!("{v:.14e}")
}

pub fn sweep(config_path: &Path, spec: &str, out: Option<&Path>) -> CliResult {
    let run = RunConfig::load(config_path)?;
    let (config, object) = run.chain()?;

    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::Input(format!(
            "sweep spec must be PARAM:START:END:STEPS, got {spec}"
        )));
    }
    let param = parts[0];
    let start: f64 = parts[1]
        .parse()
        .map_err(|e| CliError::Input(format!("bad sweep start: {e}")))?;
    let end: f64 = parts[2]
        .parse()
        .map_err(|e| CliError::Input(format!("bad sweep end: {e}")))?;
    let steps: usize = parts[3]
        .parse()
        .map_err(|e| CliError::Input(format!("bad sweep steps: {e}")))?;
    if steps < 1 {
        return Err(CliError::Input("sweep needs at least one step".into()));
    }
    let value_at = |k: usize| -> f64 {
        if steps == 1 {
            start
        } else {
            start + (end - start) * (k as f64) / (steps as f64 - 1.0)
        }
    };

    let mut csv = String::from("parameter,p0,p1,p2,p1_limit\n");
    match param {
        "t" => {
            let n = config.n_stages as u32;
            for k in 0..steps {
                let t = value_at(k);
                let triple = p_triple_equal_t(t, n).map_err(CliError::input)?;
                let limit = p1_limit(t).map_err(CliError::input)?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    format_sig(t),
                    format_sig(triple.p0),
                    format_sig(triple.p1),
                    format_sig(triple.p2),
                    format_sig(limit)
                ));
            }
        }
        "N" => {
            let t = mean_t(&config)?;
            let limit = p1_limit(t).map_err(CliError::input)?;
            for k in 0..steps {
                let n = value_at(k).round().max(1.0) as u32;
                let triple = p_triple_equal_t(t, n).map_err(CliError::input)?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    format_sig(f64::from(n)),
                    format_sig(triple.p0),
                    format_sig(triple.p1),
                    format_sig(triple.p2),
                    format_sig(limit)
                ));
            }
        }
        "phi" => {
            let tau = match object {
                ObjectModel::Phase { tau, .. } => tau,
                _ => 1.0,
            };
            let limit = p1_limit(mean_t(&config)?).map_err(CliError::input)?;
            for k in 0..steps {
                let phi = value_at(k);
                let dist =
                    simulate(&config, &ObjectModel::Phase { phi, tau }).map_err(CliError::input)?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    format_sig(phi),
                    format_sig(dist.p_source),
                    format_sig(dist.total_detector()),
                    format_sig(dist.p_object),
                    format_sig(limit)
                ));
            }
        }
        other => {
            return Err(CliError::Input(format!(
                "sweep parameter must be t, N or phi, got {other}"
            )))
        }
    }
    emit(out, "sweep.csv", &csv)
}

fn mean_t(config: &ChainConfig) -> Result<f64, CliError> {
    let first = config.transmissivities[0];
    if config.transmissivities.iter().all(|&t| t == first) {
        Ok(first)
    } else {
        Err(CliError::Input(
            "this sweep needs the equal-transmissivity shorthand".into(),
        ))
    }
}

#[derive(Serialize)]
struct ImageStats {
    width: usize,
    height: usize,
    photons_per_pixel: u32,
    seed: u64,
    false_negatives: u64,
    false_positives: u64,
    total_absorbed: u64,
    total_source_returns: u64,
    total_lost: u64,
    per_detector_clicks: Vec<u64>,
    expected_false_negative_rate: Option<f64>,
    expected_absorption_per_pixel: Option<f64>,
}

pub fn image(
    config_path: &Path,
    mask_path: &Path,
    out: &Path,
    seed: Option<u64>,
    photons: Option<u32>,
) -> CliResult {
    let run_config = RunConfig::load(config_path)?;
    let (config, _) = run_config.chain()?;
    let mask = load_mask(mask_path)?;
    for (idx, cell) in mask.cells.iter().enumerate() {
        config.validate_object(cell).map_err(|e| {
            CliError::Input(format!(
                "mask cell ({}, {}): {e}",
                idx % mask.width,
                idx / mask.width
            ))
        })?;
    }
    let run = ImagingRun {
        config: config.clone(),
        photons_per_pixel: photons.unwrap_or(run_config.photons),
        seed: seed.unwrap_or(run_config.seed),
    };
    let result = image_mask(&mask, &run).map_err(CliError::input)?;

    let m = run.photons_per_pixel;
    let detection: Vec<u32> = result
        .detection_image
        .iter()
        .map(|&d| if d { 255 } else { 0 })
        .collect();
    write_atomic(
        &out.join("detection.pgm"),
        &pgm::encode(result.width, result.height, 255, &detection),
    )?;
    write_atomic(
        &out.join("clicks.pgm"),
        &pgm::encode(result.width, result.height, m, &result.click_counts),
    )?;
    write_atomic(
        &out.join("dose.pgm"),
        &pgm::encode(result.width, result.height, m, &result.dose_map),
    )?;

    // Reference rates for an equal-transmissivity lossless chain.
    let reference_t = mean_t(&config).ok().filter(|_| {
        config.bs_loss == 0.0 && config.mirror_loss == 0.0 && config.arm_losses.is_none()
    });
    let stats = ImageStats {
        width: result.width,
        height: result.height,
        photons_per_pixel: m,
        seed: run.seed,
        false_negatives: result.stats.false_negatives,
        false_positives: result.stats.false_positives,
        total_absorbed: result.stats.total_absorbed,
        total_source_returns: result.stats.total_source_returns,
        total_lost: result.stats.total_lost,
        per_detector_clicks: result.stats.per_detector_clicks.clone(),
        expected_false_negative_rate: reference_t
            .and_then(|t| imaging_stats(t, config.n_stages as u32, m, false).ok())
            .map(|s| s.epsilon),
        expected_absorption_per_pixel: reference_t
            .map(|t| f64::from(m) * t.powi(config.n_stages as i32)),
    };
    let json = serde_json::to_string_pretty(&stats).map_err(CliError::input)?;
    write_atomic(&out.join("stats.json"), &(json + "\n"))
}

pub fn geometry(
    layout_path: Option<&Path>,
    canonical: Option<&[f64]>,
    n: usize,
    scale: f64,
    tolerance: f64,
    out: Option<&Path>,
) -> CliResult {
    let layout: Layout = match (layout_path, canonical) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let layout: Layout = serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("invalid layout {}: {e}", path.display())))?;
            layout.validate().map_err(CliError::input)?;
            layout
        }
        (None, Some(values)) => {
            let spacings =
                Spacings::new(values[0], values[1], values[2]).map_err(CliError::input)?;
            let layout = build_canonical_layout(&spacings, n, scale).map_err(CliError::input)?;
            if let Some(dir) = out {
                let json = serde_json::to_string_pretty(&layout).map_err(CliError::input)?;
                write_atomic(&dir.join("layout.json"), &(json + "\n"))?;
            }
            layout
        }
        _ => {
            return Err(CliError::Input(
                "give exactly one of --layout or --canonical".into(),
            ))
        }
    };

    let report: TraceReport = trace_layout(&layout, tolerance).map_err(CliError::input)?;
    let json = serde_json::to_string_pretty(&report).map_err(CliError::input)?;
    emit(out, "trace_report.json", &(json + "\n"))?;
    if report.all_ok() {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "trace checks failed: parallel={} lengths={} delay={} clearance={}",
            report.parallel.ok, report.lengths.ok, report.delay_match.ok, report.clearance.ok
        )))
    }
}
