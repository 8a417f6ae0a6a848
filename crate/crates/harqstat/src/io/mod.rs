//! Persistence of datasets, run configurations and reports in stable,
//! locale-independent text formats.

pub mod config;
pub mod dataset;
pub mod report;

pub use config::{parse_config, read_config, CodeChoice, ConfigDataset, RunConfig, TestSelection};
pub use dataset::{format_dataset, parse_dataset, read_dataset, write_dataset, LoadedDataset};
pub use report::{parse_machine, write_report, ReportEntry, ReportFormat};
