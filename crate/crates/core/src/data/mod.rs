//! Tabular datasets: schema, ingestion, synthetic generation, encoding, scaling.

mod csv_io;
mod dataset;
mod schema;
mod synth;
mod transform;

pub use csv_io::{load_csv, read_csv, save_csv, write_csv};
pub use dataset::{Column, Dataset, Targets};
pub use schema::{ColumnKind, ColumnRole, ColumnSpec, Schema, TaskKind};
pub use synth::{covid_schema, generate_covid_toy, BLOB_SD, COVID_MEAN, NO_COVID_MEAN};
pub use transform::{flip_labels, one_hot_encode, split, standardize, Scaler, ScalerParam};
