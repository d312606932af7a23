//! Message transport, leakage scanning, experiment configuration and the
//! experiment runner.

pub mod config;
pub mod experiment;
pub mod keyfile;
pub mod scanner;
pub mod transport;

pub use transport::{
    read_transcript, traffic, validate_transcript, write_transcript, Bus, Envelope, MessageKind, TrafficStats,
};
pub use config::{DataSource, ExperimentConfig, Regime, Scenario, TuningMode};
pub use experiment::{
    run_experiment, write_report, ExperimentReport, ExperimentRun, PartyMetrics, RegimeReport, RegimeStatus, ScenarioData, Timing,
    ALL_PARTIES, REPORT_FILES,
};
pub use scanner::{scan_transcript, Finding, FindingKind, ScanReport, ScanTargets, Secrets};
