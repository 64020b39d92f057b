use hamlearn_core::dataset::BasesSpec;
use hamlearn_core::hamiltonian::HamiltonianModel;
use hamlearn_core::learner::Problem;
use hamlearn_core::tebd::SimConfig;
use hamlearn_core::{Pauli, PauliBasis};
use rayon::prelude::*;
use serde::Serialize;

use super::generate::DATASET_FILE;
use crate::config::{Axis, RunConfig};
use crate::error::{Error, Result};
use crate::io::{read_dataset, write_dataset};
use crate::output::{num, OutDir, Plot, PlotAxis, Series};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LandscapeReport {
    pub argmin: Cell,
    pub min_loss: f64,
    /// Grid cell nearest to the projection of `θ*` onto the slice.
    pub star: Cell,
    /// Whether `θ*` itself lies on the slice.
    pub star_on_slice: bool,
    /// Chebyshev distance in cells between `argmin` and `star`.
    pub displacement: usize,
    #[serde(skip)]
    pub losses: Vec<f64>,
}

/// Sets `param` of `theta`; `h` sets every field.
fn set(theta: &mut [f64], names: &[String], param: &str, v: f64) {
    if param == "h" {
        theta[3..].iter_mut().for_each(|x| *x = v);
    } else {
        let i = names.iter().position(|n| n == param).expect("validated parameter name");
        theta[i] = v;
    }
}

fn project(theta: &[f64], names: &[String], param: &str) -> f64 {
    if param == "h" {
        let h = &theta[3..];
        h.iter().sum::<f64>() / h.len() as f64
    } else {
        theta[names.iter().position(|n| n == param).expect("validated parameter name")]
    }
}

fn nearest(a: &Axis, v: f64) -> usize {
    if a.points == 1 {
        return 0;
    }
    let step = (a.max - a.min) / (a.points - 1) as f64;
    ((v - a.min) / step).round().clamp(0.0, (a.points - 1) as f64) as usize
}

pub fn run(cfg: &RunConfig, out: &OutDir) -> Result<LandscapeReport> {
    let ls = &cfg.landscape;
    let (xs, ys) = (ls.x.values(), ls.y.values());
    let total = xs.len() * ys.len();
    if total > ls.max_points {
        return Err(Error::Core(hamlearn_core::Error::Resource(format!("{total} grid points exceed landscape.max_points = {}", ls.max_points))));
    }
    let ds = match &ls.dataset {
        Some(p) => read_dataset(p)?,
        None => {
            let n = cfg.model.n;
            let bases = ls.uniform_bases.chars().map(|c| PauliBasis::uniform(n, Pauli::from_char(c).expect("validated letter"))).collect();
            let ds = super::synthesize(cfg, &BasesSpec::Explicit(bases), ls.samples, cfg.data_seed())?;
            write_dataset(&ds, &out.path(DATASET_FILE))?;
            ds
        }
    };
    let model = cfg.model()?;
    let names = model.theta_names();
    let star = match &ds.metadata.theta_star {
        Some(s) => s.clone(),
        None => cfg.theta_star()?,
    };
    let problem = Problem::new(&ds, &model, SimConfig::new(ls.dt, ls.chi))?;
    super::progress(format_args!("landscape: {} × {} grid", xs.len(), ys.len()));
    let losses = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut theta = star.clone();
            set(&mut theta, &names, &ls.x.param, xs[i % xs.len()]);
            set(&mut theta, &names, &ls.y.param, ys[i / xs.len()]);
            Ok(problem.loss(&theta, false)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = (0..total).min_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b))).expect("non-empty grid");
    let cell = |ix: usize, iy: usize| Cell { ix, iy, x: xs[ix], y: ys[iy] };
    let argmin = cell(best % xs.len(), best / xs.len());
    let (px, py) = (project(&star, &names, &ls.x.param), project(&star, &names, &ls.y.param));
    let star_cell = cell(nearest(&ls.x, px), nearest(&ls.y, py));
    let mut on_slice = star.clone();
    set(&mut on_slice, &names, &ls.x.param, px);
    set(&mut on_slice, &names, &ls.y.param, py);
    let report = LandscapeReport {
        displacement: argmin.ix.abs_diff(star_cell.ix).max(argmin.iy.abs_diff(star_cell.iy)),
        min_loss: losses[best],
        argmin,
        star: star_cell,
        star_on_slice: on_slice == star,
        losses,
    };
    let rows = (0..total).map(|i| {
        let (ix, iy) = (i % xs.len(), i / xs.len());
        vec![
            ix.to_string(),
            iy.to_string(),
            num(xs[ix]),
            num(ys[iy]),
            num(report.losses[i]),
            (i == best).to_string(),
            (ix == report.star.ix && iy == report.star.iy).to_string(),
        ]
    });
    out.csv("landscape.csv", &["ix", "iy", &ls.x.param, &ls.y.param, "loss", "argmin", "star"], rows)?;
    out.json(
        "landscape.plot.json",
        &Plot {
            title: format!("Loss over ({}, {})", ls.x.param, ls.y.param),
            kind: "heatmap",
            x: PlotAxis::linear(&ls.x.param),
            y: PlotAxis::linear(&ls.y.param),
            series: vec![Series { label: "loss".into(), file: "landscape.csv".into(), x: ls.x.param.clone(), y: ls.y.param.clone(), filter: None, z: Some("loss".into()) }],
        },
    )?;
    out.json("summary.json", &report)?;
    Ok(report)
}
