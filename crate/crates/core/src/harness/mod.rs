//! Experiment orchestration: configuration, single runs, sweeps and plot data.

mod config;
mod run;
mod sweep;

pub use config::{parse_pairs, read_pairs, DataSource, ExperimentConfig, KEYS};
pub use run::{
    echo, factorize, load_dataset, run_experiment, train_embedding, write_outcome, Fitted, RunOutcome,
    ERROR_MARKER, PARTIAL_USERS,
};
pub use sweep::{
    emit_plot_data, run_sweep, runs_from_combined_csv, write_plot_data, SweepAxis, SweepOutcome, SweepRun,
    SweepSpec,
};
