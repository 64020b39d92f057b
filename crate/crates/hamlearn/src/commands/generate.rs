use hamlearn_core::dataset::Dataset;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::write_dataset;
use crate::output::OutDir;

pub const DATASET_FILE: &str = "dataset.txt";

#[derive(Serialize)]
struct Summary {
    n: usize,
    records: usize,
    times: usize,
    bases: usize,
    engine: Option<String>,
}

pub fn run(cfg: &RunConfig, out: &OutDir) -> Result<Dataset> {
    super::progress(format_args!("generating n = {}, {} samples per cell", cfg.model.n, cfg.protocol.samples));
    let ds = super::synthesize(cfg, &cfg.bases_spec()?, cfg.protocol.samples, cfg.data_seed())?;
    write_dataset(&ds, &out.path(DATASET_FILE))?;
    out.json(
        "summary.json",
        &Summary { n: ds.n, records: ds.len(), times: ds.times.len(), bases: ds.bases.len(), engine: ds.metadata.engine.clone() },
    )?;
    Ok(ds)
}
