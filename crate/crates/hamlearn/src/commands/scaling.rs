use hamlearn_core::dataset::cell_seed;
use hamlearn_core::learner::Problem;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::output::{num, opt_num, OutDir, Plot, PlotAxis, Series};

use super::learn::ErrorRecord;

#[derive(Clone, Debug, Serialize)]
pub struct ScalingPoint {
    /// Requested size.
    pub d: usize,
    /// Size after rounding to whole samples per cell.
    pub d_actual: usize,
    pub samples_per_cell: usize,
    pub runs: usize,
    pub outliers: usize,
    pub median_epsilon: Option<f64>,
    /// Enters the fit; false when every run is an outlier.
    pub included: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    pub slope: f64,
    pub intercept: f64,
    /// Each step up in `d` raises the median `ε` by at most 50%.
    pub monotone: bool,
    pub excluded: Vec<usize>,
}

pub fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Least-squares line through `(x, y)`; `(slope, intercept)`.
pub fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

struct Job {
    size: usize,
    rep: usize,
    samples: usize,
}

pub fn run(cfg: &RunConfig, out: &OutDir) -> Result<ScalingReport> {
    let sc = &cfg.scaling;
    let cells = cfg.times().len() * cfg.bases_spec()?.resolve(cfg.model.n)?.len();
    let star = cfg.theta_star()?;
    let model = cfg.model()?;
    let inits = sc.inits.unwrap_or(cfg.learn.inits);
    let bases = cfg.bases_spec()?;
    let jobs: Vec<Job> = sc
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(size, &d)| {
            let samples = ((d as f64 / cells as f64).round() as usize).max(1);
            (0..sc.repetitions).map(move |rep| Job { size, rep, samples })
        })
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|job| {
            let ds = super::synthesize(cfg, &bases, job.samples, cell_seed(cfg.data_seed(), job.size, job.rep))?;
            let problem = Problem::new(&ds, &model, cfg.simulator.sim())?;
            super::progress(format_args!("scaling: d = {}, repetition {}", ds.len(), job.rep));
            let results = super::multi_start_par(&problem, inits, cell_seed(cfg.init_seed(), job.size, job.rep), &cfg.optimizer)?;
            results
                .iter()
                .enumerate()
                .map(|(rank, r)| ErrorRecord::new(rank, r, ds.n, Some(&star), cfg.learn.outlier_threshold))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut run_rows = Vec::new();
    let mut points = Vec::new();
    for (size, &d) in sc.sizes.iter().enumerate() {
        let mut eps = Vec::new();
        let (mut runs, mut outliers, mut samples) = (0, 0, 0);
        for (job, recs) in jobs.iter().zip(&per_job).filter(|(j, _)| j.size == size) {
            samples = job.samples;
            for r in recs {
                runs += 1;
                let e = r.epsilon.expect("θ* known");
                if r.outlier == Some(true) {
                    outliers += 1;
                } else {
                    eps.push(e);
                }
                run_rows.push(vec![
                    d.to_string(),
                    job.rep.to_string(),
                    r.run.to_string(),
                    num(r.final_loss),
                    num(r.loss_per_site),
                    num(e),
                    (r.outlier == Some(true)).to_string(),
                ]);
            }
        }
        let median_epsilon = median(&mut eps);
        points.push(ScalingPoint { d, d_actual: samples * cells, samples_per_cell: samples, runs, outliers, median_epsilon, included: median_epsilon.is_some() });
    }
    out.csv("scaling_runs.csv", &["d", "repetition", "run", "final_loss", "loss_per_site", "epsilon", "outlier"], run_rows)?;
    out.csv(
        "scaling.csv",
        &["d", "d_actual", "samples_per_cell", "runs", "outliers", "median_epsilon", "included"],
        points.iter().map(|p| {
            vec![p.d.to_string(), p.d_actual.to_string(), p.samples_per_cell.to_string(), p.runs.to_string(), p.outliers.to_string(), opt_num(p.median_epsilon), p.included.to_string()]
        }),
    )?;
    out.json(
        "scaling.plot.json",
        &Plot {
            title: "Median relative error against dataset size".into(),
            kind: "scatter",
            x: PlotAxis::log("d"),
            y: PlotAxis::log("median relative error"),
            series: vec![Series { label: "non-outlier median".into(), file: "scaling.csv".into(), x: "d_actual".into(), y: "median_epsilon".into(), filter: Some("included=true".into()), z: None }],
        },
    )?;
    let excluded: Vec<usize> = points.iter().filter(|p| !p.included).map(|p| p.d).collect();
    for d in &excluded {
        super::progress(format_args!("scaling: every run at d = {d} is an outlier; excluded from the fit"));
    }
    let logs: Vec<(f64, f64)> = points.iter().filter_map(|p| p.median_epsilon.map(|e| ((p.d_actual as f64).ln(), e.ln()))).collect();
    let (slope, intercept) = fit_line(&logs).ok_or_else(|| {
        Error::Core(hamlearn_core::Error::Domain(format!("slope undefined: {} usable size(s), need at least 2 distinct", logs.len())))
    })?;
    let mut sorted: Vec<&ScalingPoint> = points.iter().filter(|p| p.included).collect();
    sorted.sort_by_key(|p| p.d_actual);
    let monotone = sorted.windows(2).all(|w| w[1].median_epsilon.unwrap() <= 1.5 * w[0].median_epsilon.unwrap());
    let report = ScalingReport { points, slope, intercept, monotone, excluded };
    out.json("scaling_fit.json", &report)?;
    Ok(report)
}
