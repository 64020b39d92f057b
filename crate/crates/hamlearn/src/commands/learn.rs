use hamlearn_core::dataset::Dataset;
use hamlearn_core::hamiltonian::HamiltonianModel;
use hamlearn_core::learner::{relative_error, LearnResult, Problem};
use serde::Serialize;

use super::generate::DATASET_FILE;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{read_dataset, write_dataset};
use crate::output::{num, opt_num, OutDir, Plot, PlotAxis, Series};

/// One multi-start run as reported.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub run: usize,
    /// Position after sorting by final loss; 0 is the selected fit.
    pub rank: usize,
    pub init_seed: u64,
    pub final_loss: f64,
    pub loss_per_site: f64,
    pub epsilon: Option<f64>,
    pub outlier: Option<bool>,
    pub converged: bool,
    pub adam_epochs: usize,
    pub adam_steps: usize,
    pub bfgs_iterations: usize,
    pub fallback_steps: usize,
    pub theta_hat: Vec<f64>,
}

impl ErrorRecord {
    pub fn new(rank: usize, r: &LearnResult, n: usize, theta_star: Option<&[f64]>, threshold: f64) -> Result<Self> {
        let epsilon = theta_star.map(|s| relative_error(&r.theta_hat, s)).transpose()?;
        Ok(Self {
            run: r.run,
            rank,
            init_seed: r.seed,
            final_loss: r.final_loss,
            loss_per_site: r.final_loss / n as f64,
            epsilon,
            outlier: epsilon.map(|e| e > threshold),
            converged: r.converged,
            adam_epochs: r.adam_epochs,
            adam_steps: r.adam_steps,
            bfgs_iterations: r.bfgs_iterations,
            fallback_steps: r.fallback_steps,
            theta_hat: r.theta_hat.clone(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LearnReport {
    pub records: Vec<ErrorRecord>,
    pub theta_star: Option<Vec<f64>>,
    /// Runs with `ε` below 0.1.
    pub accurate: Option<usize>,
    pub outliers: Option<usize>,
    /// Every non-outlier's loss/n lies below every outlier's; `None` when
    /// either set is empty or `θ*` is unknown.
    pub separated: Option<bool>,
    #[serde(skip)]
    pub results: Vec<LearnResult>,
}

/// `max loss/n` over non-outliers below `min loss/n` over outliers.
pub fn separation(records: &[ErrorRecord]) -> Option<bool> {
    let (mut inlier_max, mut outlier_min) = (None::<f64>, None::<f64>);
    for r in records {
        match r.outlier? {
            true => outlier_min = Some(outlier_min.map_or(r.loss_per_site, |m| m.min(r.loss_per_site))),
            false => inlier_max = Some(inlier_max.map_or(r.loss_per_site, |m| m.max(r.loss_per_site))),
        }
    }
    Some(inlier_max? < outlier_min?)
}

pub fn load_or_synthesize(cfg: &RunConfig, out: &OutDir) -> Result<Dataset> {
    match &cfg.learn.dataset {
        Some(p) => read_dataset(p),
        None => {
            let ds = super::synthesize(cfg, &cfg.bases_spec()?, cfg.protocol.samples, cfg.data_seed())?;
            write_dataset(&ds, &out.path(DATASET_FILE))?;
            Ok(ds)
        }
    }
}

pub fn run(cfg: &RunConfig, out: &OutDir) -> Result<LearnReport> {
    let ds = load_or_synthesize(cfg, out)?;
    if ds.n != cfg.model.n {
        return Err(Error::Config(format!("dataset has n = {}, model.n = {}", ds.n, cfg.model.n)));
    }
    let model = cfg.model()?;
    let problem = Problem::new(&ds, &model, cfg.simulator.sim())?;
    super::progress(format_args!("learning from {} bit-strings, {} inits", ds.len(), cfg.learn.inits));
    let results = super::multi_start_par(&problem, cfg.learn.inits, cfg.init_seed(), &cfg.optimizer)?;
    let star = ds.metadata.theta_star.clone();
    let report = report(results, ds.n, star, cfg.learn.outlier_threshold)?;
    write(out, &report, &model.theta_names())?;
    Ok(report)
}

pub fn report(results: Vec<LearnResult>, n: usize, theta_star: Option<Vec<f64>>, threshold: f64) -> Result<LearnReport> {
    let records = results
        .iter()
        .enumerate()
        .map(|(rank, r)| ErrorRecord::new(rank, r, n, theta_star.as_deref(), threshold))
        .collect::<Result<Vec<_>>>()?;
    let known = theta_star.is_some();
    Ok(LearnReport {
        accurate: known.then(|| records.iter().filter(|r| r.epsilon.is_some_and(|e| e < 0.1)).count()),
        outliers: known.then(|| records.iter().filter(|r| r.outlier == Some(true)).count()),
        separated: separation(&records),
        records,
        theta_star,
        results,
    })
}

fn write(out: &OutDir, rep: &LearnReport, names: &[String]) -> Result<()> {
    let with_eps = rep.theta_star.is_some();
    let mut header = vec!["run", "rank", "init_seed", "final_loss", "loss_per_site"];
    if with_eps {
        header.extend(["epsilon", "outlier"]);
    }
    header.extend(["converged", "adam_epochs", "adam_steps", "bfgs_iterations", "fallback_steps"]);
    header.extend(names.iter().map(String::as_str));
    let rows = rep.records.iter().map(|r| {
        let mut row = vec![r.run.to_string(), r.rank.to_string(), r.init_seed.to_string(), num(r.final_loss), num(r.loss_per_site)];
        if with_eps {
            row.push(opt_num(r.epsilon));
            row.push(r.outlier.map(|o| o.to_string()).unwrap_or_default());
        }
        row.extend([r.converged.to_string(), r.adam_epochs.to_string(), r.adam_steps.to_string(), r.bfgs_iterations.to_string(), r.fallback_steps.to_string()]);
        row.extend(r.theta_hat.iter().map(|&x| num(x)));
        row
    });
    out.csv("runs.csv", &header, rows)?;

    let trace = rep.results.iter().flat_map(|r| {
        r.trace.iter().map(move |t| {
            let stage = match t.stage {
                hamlearn_core::learner::Stage::Adam => "adam",
                hamlearn_core::learner::Stage::Bfgs => "bfgs",
            };
            vec![r.run.to_string(), stage.to_string(), t.iteration.to_string(), num(t.loss), num(t.grad_norm), t.fallback.to_string()]
        })
    });
    out.csv("trace.csv", &["run", "stage", "iteration", "loss", "grad_norm", "fallback"], trace)?;
    out.json(
        "trace.plot.json",
        &Plot {
            title: "Loss during optimization".into(),
            kind: "line",
            x: PlotAxis::linear("iteration"),
            y: PlotAxis::log("loss"),
            series: ["adam", "bfgs"]
                .iter()
                .map(|s| Series { label: s.to_string(), file: "trace.csv".into(), x: "iteration".into(), y: "loss".into(), filter: Some(format!("stage={s}")), z: None })
                .collect(),
        },
    )?;

    if with_eps {
        let rows = rep.records.iter().map(|r| vec![r.run.to_string(), num(r.loss_per_site), opt_num(r.epsilon), r.outlier.unwrap_or(false).to_string()]);
        out.csv("loss_vs_error.csv", &["run", "loss_per_site", "epsilon", "outlier"], rows)?;
        out.json(
            "loss_vs_error.plot.json",
            &Plot {
                title: "Final loss per site against relative error".into(),
                kind: "scatter",
                x: PlotAxis::log("relative error"),
                y: PlotAxis::linear("loss / n"),
                series: [("converged", "false"), ("outlier", "true")]
                    .iter()
                    .map(|(label, v)| Series {
                        label: label.to_string(),
                        file: "loss_vs_error.csv".into(),
                        x: "epsilon".into(),
                        y: "loss_per_site".into(),
                        filter: Some(format!("outlier={v}")),
                        z: None,
                    })
                    .collect(),
            },
        )?;
    }
    let timing: Vec<(usize, Option<f64>)> = rep.results.iter().map(|r| (r.run, r.wall_clock)).collect();
    out.json("timing.json", &timing)?;
    out.json("summary.json", rep)
}
