//! Sweep and comparison planning and execution.
//!
//! A sweep is a list of cells, each a fully resolved config. Every cell is
//! validated (including dataset feasibility) before any training starts, so
//! a typo in the fifth value fails the run in milliseconds, not hours.
//! Cells run sequentially; a cell's trials run in parallel. One failing
//! trial marks its cell as errored without aborting the other cells.

use rayon::prelude::*;

use crate::data::{DailyRecord, WindowedDataset};
use crate::error::Error;
use crate::metrics::{aggregate, AggregateReport};
use crate::models::ModelFamily;
use crate::nn::NormPlacement;
use crate::Result;

use super::config::{ExperimentConfig, RawConfig};
use super::trial::{run_trial, TrialOutcome};

/// One point of a sweep: a resolved config plus its CSV identity.
#[derive(Debug, Clone)]
pub struct Cell {
    pub axis: String,
    pub value: String,
    pub placement: Option<NormPlacement>,
    pub cfg: ExperimentConfig,
}

/// Results of one executed cell. `aggregate` is present only when every
/// trial succeeded; `error` holds the first failure otherwise.
#[derive(Debug)]
pub struct CellOutcome {
    pub axis: String,
    pub value: String,
    pub placement: Option<NormPlacement>,
    pub epochs: usize,
    pub trials: Vec<TrialOutcome>,
    pub aggregate: Option<AggregateReport>,
    pub error: Option<Error>,
    pub wall_ms: u128,
}

impl CellOutcome {
    /// Placement column text: baselines have no norm placement.
    pub fn placement_label(&self) -> &'static str {
        match self.placement {
            Some(NormPlacement::PreLn) => "pre",
            Some(NormPlacement::PostLn) => "post",
            None => "-",
        }
    }

    /// Lowest-MAPE trial, if any succeeded.
    pub fn best_trial(&self) -> Option<&TrialOutcome> {
        self.trials
            .iter()
            .min_by(|a, b| a.report.mape.total_cmp(&b.report.mape))
    }
}

fn placement_expansion(cfg: &ExperimentConfig) -> Vec<Option<NormPlacement>> {
    if cfg.family == ModelFamily::Transformer {
        cfg.placements.iter().copied().map(Some).collect()
    } else {
        vec![None]
    }
}

fn validated_cell(
    axis: &str,
    value: &str,
    placement: Option<NormPlacement>,
    mut cfg: ExperimentConfig,
) -> Result<Cell> {
    if let Some(p) = placement {
        cfg.transformer.norm_placement = p;
    }
    match cfg.family {
        ModelFamily::Transformer => cfg.transformer.validate()?,
        _ => cfg.recurrent.validate()?,
    }
    cfg.scheduler().validate()?;
    Ok(Cell {
        axis: axis.to_string(),
        value: value.to_string(),
        placement,
        cfg,
    })
}

/// Expand the base config's sweep axis into cells, validating every value
/// up front.
pub fn plan_sweep(base: &ExperimentConfig) -> Result<Vec<Cell>> {
    let axis = base
        .sweep_axis
        .ok_or_else(|| Error::Config("sweep requires sweep.axis".into()))?;
    if base.sweep_values.is_empty() {
        return Err(Error::Config("sweep requires sweep.values".into()));
    }
    let mut cells = Vec::new();
    for value in &base.sweep_values {
        for placement in placement_expansion(base) {
            let mut cfg = base.clone();
            axis.apply(&mut cfg, value)?;
            cells.push(validated_cell(axis.label(), value, placement, cfg)?);
        }
    }
    Ok(cells)
}

/// The fixed three-family comparison: each family resolves its own defaults
/// from the same raw config and runs `best_of` trials.
pub fn plan_compare(raw: &RawConfig) -> Result<Vec<Cell>> {
    ModelFamily::ALL
        .iter()
        .map(|&family| {
            let mut cfg = ExperimentConfig::resolve_for_family(raw, Some(family))?;
            cfg.n_trials = cfg.best_of;
            let placement = (family == ModelFamily::Transformer)
                .then_some(cfg.transformer.norm_placement);
            validated_cell("model", family.label(), placement, cfg)
        })
        .collect()
}

/// A single-cell plan for plain training runs, so the train command shares
/// the sweep output format.
pub fn plan_single(base: &ExperimentConfig) -> Result<Vec<Cell>> {
    let value = match base.family {
        ModelFamily::Transformer => format!("d{}", base.transformer.d_model),
        _ => format!("h{}", base.recurrent.hidden_size),
    };
    let placement = (base.family == ModelFamily::Transformer)
        .then_some(base.transformer.norm_placement);
    Ok(vec![validated_cell(
        base.family.label(),
        &value,
        placement,
        base.clone(),
    )?])
}

/// Windowed dataset for one resolved config. An infeasible lag/horizon/
/// split combination is a config problem here; data-quality errors keep
/// their own kind.
pub fn build_dataset(cfg: &ExperimentConfig, records: &[DailyRecord]) -> Result<WindowedDataset> {
    let (lag, horizon, n_features) = cfg.active_dims();
    WindowedDataset::build(records, lag, horizon, n_features, &cfg.split).map_err(|e| match e {
        Error::Contract(m) | Error::Config(m) => Error::Config(m),
        other => other,
    })
}

/// Execute planned cells against one record series. Datasets for every cell
/// are built first; any infeasible cell aborts before training begins.
pub fn run_cells(cells: &[Cell], records: &[DailyRecord]) -> Result<Vec<CellOutcome>> {
    let datasets: Vec<WindowedDataset> = cells
        .iter()
        .map(|c| {
            build_dataset(&c.cfg, records).map_err(|e| {
                let ctx = format!("cell {}={} ({})", c.axis, c.value, cell_line(c));
                match e {
                    Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
                    Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
                    other => other,
                }
            })
        })
        .collect::<Result<_>>()?;

    let mut outcomes = Vec::with_capacity(cells.len());
    for (cell, data) in cells.iter().zip(&datasets) {
        log::info!(
            "cell {}={} placement {}: {} trial(s), {} epochs",
            cell.axis,
            cell.value,
            cell_line(cell),
            cell.cfg.n_trials,
            cell.cfg.epochs
        );
        let start = std::time::Instant::now();
        let results: Vec<Result<TrialOutcome>> = (0..cell.cfg.n_trials)
            .into_par_iter()
            .map(|t| run_trial(&cell.cfg, data, t))
            .collect();
        let wall_ms = start.elapsed().as_millis();

        let mut trials = Vec::new();
        let mut error = None;
        for r in results {
            match r {
                Ok(t) => trials.push(t),
                Err(e) => {
                    if error.is_none() {
                        error = Some(e);
                    }
                }
            }
        }
        let agg = if error.is_none() {
            let reports = trials.iter().map(|t| t.report.clone()).collect();
            Some(aggregate(reports, cell.cfg.std_mode)?)
        } else {
            None
        };
        outcomes.push(CellOutcome {
            axis: cell.axis.clone(),
            value: cell.value.clone(),
            placement: cell.placement,
            epochs: cell.cfg.epochs,
            trials,
            aggregate: agg,
            error,
            wall_ms,
        });
    }
    Ok(outcomes)
}

fn cell_line(c: &Cell) -> &'static str {
    match c.placement {
        Some(NormPlacement::PreLn) => "pre",
        Some(NormPlacement::PostLn) => "post",
        None => "-",
    }
}

/// Package externally run trials as one cell outcome (the plain-training
/// path, which keeps models alive and so cannot go through `run_cells`).
pub fn aggregate_outcomes(
    cfg: &ExperimentConfig,
    cell: Cell,
    trials: Vec<TrialOutcome>,
    wall_ms: u128,
) -> Result<CellOutcome> {
    let reports = trials.iter().map(|t| t.report.clone()).collect();
    let agg = aggregate(reports, cfg.std_mode)?;
    Ok(CellOutcome {
        axis: cell.axis,
        value: cell.value,
        placement: cell.placement,
        epochs: cfg.epochs,
        trials,
        aggregate: Some(agg),
        error: None,
        wall_ms,
    })
}

/// Index of the successful cell with the lowest mean MAPE.
pub fn best_cell(outcomes: &[CellOutcome]) -> Option<usize> {
    outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.aggregate.as_ref().map(|a| (i, a.mean_mape)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}
