//! Alternating optimization of `(Q, r)` and the two baselines.

use crate::channel::{sample_paths, tx_field_matrix, PathSet, PhaseModel, PortDictionary};
use crate::error::{Error, Result};
use crate::geometry::{validate_selection, PortSelection, Scenario};
use crate::linalg::CMatrix;
use crate::metrics::{energy_efficiency, rate_upper_bound, Covariance};
use crate::portopt::{random_selection, PortSearch};
use crate::rng::{substream, Purpose};
use crate::txopt::{dinkelbach_with, DinkelbachOutcome, TransmitDirection, DEFAULT_MAX_ITER};

use super::config::{ChannelBlock, SolverBlock, SweepMode};

/// Channel geometry of one trial, shared by every scheme and sweep point.
#[derive(Debug, Clone)]
pub struct Link {
    pub paths_t: PathSet,
    pub paths_r: PathSet,
    pub tx: CMatrix,
    pub ports: PortDictionary,
    pub direction: TransmitDirection,
}

impl Link {
    /// Field responses depend on `N`, `M`, spacings and paths only, so a link
    /// can be reused across `m0` and SNR sweeps.
    pub fn new(paths_t: PathSet, paths_r: PathSet, scenario: &Scenario, model: PhaseModel) -> Self {
        let tx = tx_field_matrix(&paths_t, scenario, model);
        let ports = PortDictionary::new(&paths_r, scenario, model);
        let direction = TransmitDirection::from_field(&tx);
        Link { paths_t, paths_r, tx, ports, direction }
    }

    /// The trial's link from its dedicated substreams.
    pub fn sample(master_seed: u64, trial: u64, scenario: &Scenario, channel: &ChannelBlock) -> Result<Self> {
        let paths_t =
            sample_paths(&mut substream(master_seed, trial, Purpose::TxPaths), scenario.l_t_paths, channel.distance_range)?;
        let paths_r =
            sample_paths(&mut substream(master_seed, trial, Purpose::RxPaths), scenario.l_r_paths, channel.distance_range)?;
        Ok(Link::new(paths_t, paths_r, scenario, channel.phase_model))
    }

    /// Combined fingerprint of both path sets.
    pub fn path_hash(&self) -> u64 {
        self.paths_t.fingerprint() ^ self.paths_r.fingerprint().rotate_left(32)
    }

    pub fn rate(&self, q: &Covariance, sel: &PortSelection, scenario: &Scenario) -> Result<f64> {
        rate_upper_bound(&self.tx, &self.ports.select(sel), q, scenario)
    }

    pub fn efficiency(&self, q: &Covariance, sel: &PortSelection, scenario: &Scenario) -> Result<f64> {
        Ok(energy_efficiency(self.rate(q, sel, scenario)?, q, scenario))
    }

    /// Dinkelbach for a fixed selection.
    pub fn optimize_covariance(
        &self,
        sel: &PortSelection,
        scenario: &Scenario,
        q_init: &Covariance,
        max_iter: usize,
    ) -> Result<DinkelbachOutcome> {
        dinkelbach_with(&self.direction, &self.tx, &self.ports.select(sel), scenario, q_init, max_iter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AltOptions {
    pub dinkelbach_max_iter: usize,
    pub outer_max_iter: usize,
    pub sweep_mode: SweepMode,
}

impl Default for AltOptions {
    fn default() -> Self {
        AltOptions { dinkelbach_max_iter: DEFAULT_MAX_ITER, outer_max_iter: 50, sweep_mode: SweepMode::Single }
    }
}

impl From<&SolverBlock> for AltOptions {
    fn from(s: &SolverBlock) -> Self {
        AltOptions {
            dinkelbach_max_iter: s.dinkelbach_max_iter,
            outer_max_iter: s.outer_max_iter,
            sweep_mode: s.sweep_mode,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AltOptReport {
    /// `η` at the initial point followed by one entry per outer iteration.
    pub eta_per_iteration: Vec<f64>,
    pub final_selection: PortSelection,
    pub final_q: Covariance,
    pub final_rate: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Dinkelbach result of the first outer iteration (ports still at `init`).
    pub first_stage: DinkelbachOutcome,
}

impl AltOptReport {
    pub fn final_eta(&self) -> f64 {
        *self.eta_per_iteration.last().expect("at least the initial eta")
    }
}

/// Alternates Dinkelbach (ports fixed) and one port sweep (`Q` fixed) until
/// `η` changes by at most `ε`. Starts from `Q = (P_max/N)·I`.
pub fn alternate_on(link: &Link, scenario: &Scenario, init: &PortSelection, opts: &AltOptions) -> Result<AltOptReport> {
    validate_selection(init, scenario)?;
    let mut q = Covariance::uniform(scenario.n_tx, scenario.p_max);
    let mut sel = init.clone();
    let mut etas = vec![link.efficiency(&q, &sel, scenario)?];
    let mut first_stage = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.outer_max_iter {
        iterations += 1;
        let stage = link.optimize_covariance(&sel, scenario, &q, opts.dinkelbach_max_iter)?;
        q = stage.q.clone();
        first_stage.get_or_insert(stage);

        let search = PortSearch::for_covariance(&link.tx, &q, &link.ports, scenario)?;
        sel = match opts.sweep_mode {
            SweepMode::Single => search.sweep(&sel),
            SweepMode::FixedPoint => search.sweep_to_fixed_point(&sel, scenario.m_ports * scenario.m_active + 1),
        };

        let eta = link.efficiency(&q, &sel, scenario)?;
        let prev = *etas.last().unwrap();
        etas.push(eta);
        if (eta - prev).abs() <= scenario.epsilon {
            converged = true;
            break;
        }
    }

    let final_rate = link.rate(&q, &sel, scenario)?;
    Ok(AltOptReport {
        eta_per_iteration: etas,
        final_selection: sel,
        final_q: q,
        final_rate,
        outer_iterations: iterations,
        converged,
        first_stage: first_stage.expect("outer cap is at least one"),
    })
}

/// Builds the link from explicit paths and runs [`alternate_on`].
pub fn alternate(
    scenario: &Scenario,
    paths_t: &PathSet,
    paths_r: &PathSet,
    init: &PortSelection,
    model: PhaseModel,
    opts: &AltOptions,
) -> Result<AltOptReport> {
    let link = Link::new(paths_t.clone(), paths_r.clone(), scenario, model);
    alternate_on(&link, scenario, init, opts)
}

/// Energy efficiency and rate of a baseline (or the proposed scheme).
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub eta: f64,
    pub rate: f64,
    pub power: f64,
    pub selection: PortSelection,
    pub iterations: usize,
}

/// Random ports, then one Dinkelbach solve from uniform power.
pub fn run_baseline_random_with(
    link: &Link,
    scenario: &Scenario,
    sel: &PortSelection,
    dinkelbach_max_iter: usize,
) -> Result<SchemeOutcome> {
    validate_selection(sel, scenario)?;
    let q0 = Covariance::uniform(scenario.n_tx, scenario.p_max);
    let out = link.optimize_covariance(sel, scenario, &q0, dinkelbach_max_iter)?;
    Ok(SchemeOutcome {
        eta: out.eta,
        rate: out.rate,
        power: out.power,
        selection: sel.clone(),
        iterations: out.trace.iterations,
    })
}

/// Draws the random selection from `rng` and solves for `Q`.
pub fn run_baseline_random<R: rand::Rng + ?Sized>(
    link: &Link,
    scenario: &Scenario,
    rng: &mut R,
    dinkelbach_max_iter: usize,
) -> Result<SchemeOutcome> {
    let sel = random_selection(rng, scenario);
    run_baseline_random_with(link, scenario, &sel, dinkelbach_max_iter)
}

/// Two fixed antennas at the aperture ends, ports `{1, M}`.
pub fn run_baseline_fpa(link: &Link, scenario: &Scenario, dinkelbach_max_iter: usize) -> Result<SchemeOutcome> {
    if scenario.m_ports < 2 {
        return Err(Error::InvalidScenario("fixed-antenna baseline needs m_ports >= 2".into()));
    }
    let fpa = Scenario { m_active: 2, ..scenario.clone() };
    let sel = PortSelection::new(vec![1, scenario.m_ports], scenario.m_ports)?;
    let q0 = Covariance::uniform(fpa.n_tx, fpa.p_max);
    let out = link.optimize_covariance(&sel, &fpa, &q0, dinkelbach_max_iter)?;
    Ok(SchemeOutcome { eta: out.eta, rate: out.rate, power: out.power, selection: sel, iterations: out.trace.iterations })
}

/// Proposed scheme from a random initial selection drawn from the trial's
/// port substream, so it shares its first stage with the random baseline.
pub fn run_proposed(link: &Link, scenario: &Scenario, init: &PortSelection, opts: &AltOptions) -> Result<(SchemeOutcome, AltOptReport)> {
    let rep = alternate_on(link, scenario, init, opts)?;
    let out = SchemeOutcome {
        eta: rep.final_eta(),
        rate: rep.final_rate,
        power: rep.final_q.trace(),
        selection: rep.final_selection.clone(),
        iterations: rep.outer_iterations,
    };
    Ok((out, rep))
}
