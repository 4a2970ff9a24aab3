//! Config-driven experiment harness: resolve a flat key=value config, plan
//! sweep/comparison cells, run seeded trials, and emit CSV/SVG results.

pub mod config;
pub mod emit;
pub mod sweep;
pub mod trial;

pub use config::{ExperimentConfig, RawConfig, SchedKind, SweepAxis, KNOWN_KEYS};
pub use emit::{
    emit_outputs, per_day_bands, write_plot_svg, write_predictions_csv, write_sweep_csv,
    SWEEP_HEADER,
};
pub use sweep::{
    aggregate_outcomes, best_cell, build_dataset, plan_compare, plan_single, plan_sweep,
    run_cells, Cell, CellOutcome,
};
pub use trial::{
    build_model, checkpoint_meta, evaluate_test, fit, run_trial, run_trial_full, FitResult,
    TrainedModel, TrialOutcome,
};
