//! Time evolution of an MPS under a Trotterized Hamiltonian, with optional
//! forward tangents, and Born-rule probabilities of the evolved states.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::hamiltonian::{build_trotter_plan, HamiltonianModel, TrotterPlan};
use crate::linalg_ad::{herm_expm_jvp, SvdJvpConfig, TangentBundle};
use crate::mps::{BitString, Mps, PauliBasis, Sweep, DEFAULT_CHI};
use crate::C64;

/// Trotter step used when none is configured.
pub const DEFAULT_DT: f64 = 0.05;
/// Cumulative discarded weight above which a run report carries a warning.
pub const DEFAULT_DISCARD_ALARM: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub chi: usize,
    pub discard_alarm: f64,
    pub svd: SvdJvpConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, chi: DEFAULT_CHI, discard_alarm: DEFAULT_DISCARD_ALARM, svd: SvdJvpConfig::default() }
    }
}

impl SimConfig {
    pub fn new(dt: f64, chi: usize) -> Self {
        Self { dt, chi, ..Self::default() }
    }
}

/// States at the requested times, evolved in one sweep.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub snapshots: Vec<Mps>,
    /// One plan per segment `[t_{j−1}, t_j]`.
    pub plans: Vec<TrotterPlan>,
    pub warnings: Vec<String>,
}

/// Gates `exp(−i·tau·h_b)` for one duration, indexed by bond.
struct GateSet {
    tau: f64,
    gates: Vec<TangentBundle>,
}

fn gate_set<M: HamiltonianModel + ?Sized>(model: &M, theta: &[f64], tau: f64, with_tangents: bool) -> Result<GateSet> {
    let scale = C64::new(0.0, -tau);
    let gates = (0..model.n() - 1)
        .map(|b| {
            let h = model.bond_generator(theta, b)?;
            let h = if with_tangents { h } else { h.strip() };
            herm_expm_jvp(&h, scale)
        })
        .collect::<Result<_>>()?;
    Ok(GateSet { tau, gates })
}

/// Evolves `psi0` to each of the ascending `times` under `H(theta)`.
///
/// With `with_tangents`, every site of every snapshot carries `ν` tangents
/// `∂/∂θ_l`.
pub fn evolve<M: HamiltonianModel + ?Sized>(
    psi0: &Mps,
    model: &M,
    theta: &[f64],
    times: &[f64],
    sim: &SimConfig,
    with_tangents: bool,
) -> Result<Evolution> {
    model.check_theta(theta)?;
    if psi0.n() != model.n() {
        bail!(Domain, "state has {} sites, model {}", psi0.n(), model.n());
    }
    if sim.chi == 0 {
        bail!(Domain, "chi must be positive");
    }
    if times.is_empty() {
        bail!(Domain, "no evolution times given");
    }
    let mut psi = psi0.clone().with_chi(sim.chi).with_svd_config(sim.svd);
    if with_tangents {
        if psi.nu() == 0 {
            psi = psi.with_tangents(model.nu());
        } else if psi.nu() != model.nu() {
            bail!(Dimension, "state carries {} tangents, model has {} parameters", psi.nu(), model.nu());
        }
    } else {
        psi = psi.strip_tangents();
    }

    let mut cache: Vec<GateSet> = Vec::new();
    let mut out = Evolution { snapshots: Vec::with_capacity(times.len()), plans: Vec::new(), warnings: Vec::new() };
    let mut prev = 0.0;
    let mut layer_parity = 0usize;
    for &t in times {
        if !(t >= prev) {
            bail!(Domain, "times must be ascending and non-negative, got {} after {}", t, prev);
        }
        if t > prev {
            let plan = build_trotter_plan(model, t - prev, sim.dt)?;
            for tau in plan.taus() {
                if !cache.iter().any(|g| g.tau == tau) {
                    cache.push(gate_set(model, theta, tau, with_tangents)?);
                }
            }
            for layer in &plan.layers {
                let set = cache.iter().find(|g| g.tau == layer.tau).expect("cached above");
                if layer_parity % 2 == 0 {
                    for &b in &layer.bonds {
                        psi.apply_gate_mut(b, &set.gates[b], sim.chi, Sweep::Right)?;
                    }
                } else {
                    for &b in layer.bonds.iter().rev() {
                        psi.apply_gate_mut(b, &set.gates[b], sim.chi, Sweep::Left)?;
                    }
                }
                layer_parity += 1;
            }
            if plan.dt_adjusted {
                out.warnings.push(format!(
                    "segment ending at t = {t}: step {} reduced to {} to divide the interval",
                    sim.dt, plan.dt
                ));
            }
            out.plans.push(plan);
        }
        out.snapshots.push(psi.clone());
        prev = t;
    }
    if psi.discarded_weight() > sim.discard_alarm {
        out.warnings.push(format!(
            "cumulative discarded weight {:e} exceeds the alarm threshold {:e}; consider a larger chi",
            psi.discarded_weight(),
            sim.discard_alarm
        ));
    }
    Ok(out)
}

/// Probability of outcome `s` when measuring `psi_t` in `basis`, with
/// `∂P/∂θ_l = 2·Re(conj(a)·∂a/∂θ_l)` when `psi_t` carries tangents.
pub fn born_probability(psi_t: &Mps, basis: &PauliBasis, s: &BitString) -> Result<(f64, Vec<f64>)> {
    let (a, da) = psi_t.basis_amplitude_jvp(basis, s)?;
    Ok(born_from_amplitude(a, &da))
}

/// Same as [`born_probability`] for a state already rotated into the basis.
pub fn born_probability_rotated(rotated: &Mps, s: &BitString) -> Result<(f64, Vec<f64>)> {
    let (a, da) = rotated.amplitude_jvp(s)?;
    Ok(born_from_amplitude(a, &da))
}

/// `|a|²` and `2 Re(a* da)`.
fn born_from_amplitude(a: C64, da: &[C64]) -> (f64, Vec<f64>) {
    (a.norm_sqr(), da.iter().map(|d| 2.0 * (a.conj() * d).re).collect())
}
