//! Experiment configuration, orchestration and artifact output.

mod config;
mod run;

pub use config::{parse_config, parse_config_str, ExperimentConfig, ExperimentKind, SourceKind, SourceSpec};
pub use run::{
    exit_code, run_experiment, Check, ErrorReport, RunOutcome, EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_IO, EXIT_OK,
    EXIT_PRECONDITION, EXIT_SOLVER,
};

/// Command-line overrides applied on top of a parsed config.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Finest level; the configured number of consecutive levels ending at
    /// this one is used.
    pub level: Option<usize>,
    pub output: Option<std::path::PathBuf>,
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) -> crate::Result<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(level) = o.level {
            let n = self.levels.len().min(level + 1).max(1);
            self.levels = (level + 1 - n..=level).collect();
        }
        if let Some(out) = &o.output {
            self.output = out.clone();
        }
        self.validate()
    }
}
