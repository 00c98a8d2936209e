use rand_distr::{Distribution, Normal};

use super::dataset::{Column, Dataset};
use super::schema::{ColumnKind, ColumnRole, ColumnSpec, Schema, TaskKind};
use crate::error::{arg_err, Result};
use crate::rng;

pub const NO_COVID_MEAN: (f64, f64) = (4.7, 3.0);
pub const COVID_MEAN: (f64, f64) = (3.1, 5.5);
pub const BLOB_SD: f64 = 0.6;

pub fn covid_schema() -> Schema {
    Schema::new(
        TaskKind::BinaryClassification,
        vec![
            ColumnSpec::new("LungCapacity", ColumnKind::Numeric, &[ColumnRole::Feature]),
            ColumnSpec::new("COLevel", ColumnKind::Numeric, &[ColumnRole::Feature]),
            ColumnSpec::new("Covid", ColumnKind::Categorical, &[ColumnRole::Label])
                .with_levels(&["NoCovid", "Covid"]),
        ],
    )
    .expect("static schema is valid")
}

/// Two Gaussian blobs over (LungCapacity, COLevel): NoCovid (id 0) around
/// (4.7, 3.0), Covid (id 1) around (3.1, 5.5), sd 0.6 on both axes.
/// Rows alternate NoCovid, Covid, ... so the split is 50/50 up to one row.
pub fn generate_covid_toy(n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return arg_err(format!("covid toy generator needs n >= 2, got {n}"));
    }
    let mut rng = rng::seeded(seed);
    let noise = Normal::new(0.0, BLOB_SD).expect("positive sd");
    let mut lung = Vec::with_capacity(n);
    let mut co = Vec::with_capacity(n);
    let mut label = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let (ml, mc) = if class == 0 { NO_COVID_MEAN } else { COVID_MEAN };
        lung.push(ml + noise.sample(&mut rng));
        co.push(mc + noise.sample(&mut rng));
        label.push(class);
    }
    Dataset::new(
        covid_schema(),
        vec![
            Column::Numeric(lung),
            Column::Numeric(co),
            Column::Categorical {
                levels: vec!["NoCovid".into(), "Covid".into()],
                codes: label,
            },
        ],
    )
}
