//! Reading AIS corpora and land maps, writing replay output, and the run
//! configuration file.

mod ais;
mod config;
mod export;
mod geojson;

use std::path::{Path, PathBuf};

pub use ais::{labels_path, load_ais_csv, load_labels, write_ais_csv, AisRecord, Role, AIS_COLUMNS};
pub use config::{run_config_schema, step_record_schema, ExportSettings, MapSettings, ReplaySettings, RunConfig};
pub use export::{csv_columns, export_run, format_sig, write_csv, write_jsonl, ExportFormat};
pub use geojson::{load_map_geojson, parse_map_geojson};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}, line {line}: {msg}")]
    Row { path: PathBuf, line: u64, msg: String },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl IoError {
    fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File { path: path.to_path_buf(), source }
    }

    fn format(path: &Path, msg: impl ToString) -> Self {
        IoError::Format { path: path.to_path_buf(), msg: msg.to_string() }
    }
}
