//! Oracle and property suites behind `fas-sim validate`.

use rand::Rng;
use serde::Serialize;

use crate::channel::{sample_paths, PhaseModel};
use crate::error::Result;
use crate::geometry::{PortSelection, Scenario};
use crate::linalg::hermitian_eigenvalues;
use crate::metrics::{exact_rate_mc, expectation_identity_check, log2_det_paths, log2_det_ports, rate_upper_bound, Covariance};
use crate::portopt::{random_selection, PortGainContext, PortSearch, DEFAULT_EXHAUSTIVE_CAP};
use crate::rng::{substream, Purpose};
use crate::txopt::{dinkelbach_with, DEFAULT_MAX_ITER};

use super::altopt::{alternate_on, AltOptions, Link};

pub const SUITES: [&str; 6] =
    ["determinant", "jensen", "expectation", "dinkelbach-grid", "coordinate-exhaustive", "monotonicity"];

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

impl SuiteReport {
    fn new(suite: &str, cases: usize, failures: usize, allowed: usize, detail: String) -> Self {
        SuiteReport { suite: suite.to_string(), passed: failures <= allowed, cases, failures, detail }
    }
}

/// Per-case sizes; the acceptance tests run the full-size versions.
#[derive(Debug, Clone, Copy)]
pub struct SuiteSize {
    pub instances: usize,
    pub mc_draws: usize,
    pub grid_points: usize,
}

impl Default for SuiteSize {
    fn default() -> Self {
        SuiteSize { instances: 40, mc_draws: 1000, grid_points: 200_000 }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn link_for(seed: u64, case: u64, sc: &Scenario) -> Result<(Link, rand_chacha::ChaCha8Rng)> {
    let mut rng = substream(seed, case, Purpose::Validation);
    let pt = sample_paths(&mut rng, sc.l_t_paths, [1.0, 10.0])?;
    let pr = sample_paths(&mut rng, sc.l_r_paths, [1.0, 10.0])?;
    Ok((Link::new(pt, pr, sc, PhaseModel::Approx), rng))
}

fn random_scenario<R: Rng + ?Sized>(rng: &mut R) -> Scenario {
    let m_active = rng.random_range(1..=5);
    Scenario { m_active, ..Scenario::default() }.with_snr_db(rng.random_range(-5.0..20.0))
}

fn random_covariance<R: Rng + ?Sized>(rng: &mut R, sc: &Scenario) -> Covariance {
    Covariance::uniform(sc.n_tx, sc.p_max * rng.random_range(0.05..1.0))
}

pub fn determinant_suite(seed: u64, size: SuiteSize) -> Result<SuiteReport> {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for case in 0..size.instances as u64 {
        let (_, mut rng) = link_for(seed, case, &Scenario::default())?;
        let sc = random_scenario(&mut rng);
        let (link, _) = link_for(seed, case, &sc)?;
        let sel = random_selection(&mut rng, &sc);
        let q = random_covariance(&mut rng, &sc);
        let beta = crate::metrics::effective_gain(&link.tx, &q, &sc)?;
        let b = link.ports.select(&sel);
        let ports = log2_det_ports(beta, &b);
        let paths = log2_det_paths(beta, &b);
        let m = rng.random_range(1..=sc.m_active);
        let split = PortGainContext::for_slot(beta, &link.ports, &sel, m).rate_with(&link.ports.port(sel.slot(m)));
        let err = rel(paths, ports).max(rel(split, ports));
        worst = worst.max(err);
        if err > 1e-9 {
            failures += 1;
        }
    }
    Ok(SuiteReport::new("determinant", size.instances, failures, 0, format!("max relative error {worst:.3e}")))
}

pub fn jensen_suite(seed: u64, size: SuiteSize) -> Result<SuiteReport> {
    let mut failures = 0;
    for case in 0..size.instances as u64 {
        let (_, mut rng) = link_for(seed, case, &Scenario::default())?;
        let sc = random_scenario(&mut rng);
        let (link, _) = link_for(seed, case, &sc)?;
        let sel = random_selection(&mut rng, &sc);
        let q = random_covariance(&mut rng, &sc);
        let b = link.ports.select(&sel);
        let bound = rate_upper_bound(&link.tx, &b, &q, &sc)?;
        let mc = exact_rate_mc(&link.tx, &b, &q, &sc, &mut rng, size.mc_draws)?;
        if mc.mean > bound + 3.0 * mc.std_error {
            failures += 1;
        }
    }
    let allowed = size.instances / 100;
    Ok(SuiteReport::new("jensen", size.instances, failures, allowed, format!("{failures} cases above bound + 3 SE")))
}

/// Least-squares slope of `log err` against `log K`.
pub fn loglog_slope(ks: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Expectation identity error averaged over `reps` realizations per `K`.
pub fn expectation_errors(seed: u64, ks: &[usize], reps: usize) -> Result<Vec<f64>> {
    let sc = Scenario::default();
    let mut out = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let mut acc = 0.0;
        for rep in 0..reps as u64 {
            let (link, mut rng) = link_for(seed ^ 0x5eed, rep, &sc)?;
            let mut draws = substream(seed, (i as u64) << 32 | rep, Purpose::PathGains);
            let q = random_covariance(&mut rng, &sc);
            acc += expectation_identity_check(&link.tx, &q, &sc, &mut draws, k)?;
        }
        out.push(acc / reps as f64);
    }
    Ok(out)
}

pub fn expectation_suite(seed: u64, _size: SuiteSize) -> Result<SuiteReport> {
    let ks = [100usize, 1000, 10_000];
    let errs = expectation_errors(seed, &ks, 10)?;
    let slope = loglog_slope(&ks.map(|k| k as f64), &errs);
    let ok = (slope + 0.5).abs() <= 0.1;
    Ok(SuiteReport::new("expectation", ks.len(), usize::from(!ok), 0, format!("fitted slope {slope:.4}")))
}

/// Best `η` on a uniform power grid, from the eigenvalues alone.
pub fn grid_efficiency(lambda_max: f64, port_eigs: &[f64], sc: &Scenario, points: usize) -> f64 {
    let g = sc.gain_to_noise() * lambda_max;
    (0..=points)
        .map(|i| {
            let p = sc.p_max * i as f64 / points as f64;
            let r: f64 = port_eigs.iter().map(|mu| (g * mu * p).ln_1p()).sum::<f64>() / std::f64::consts::LN_2;
            r / (p + sc.p_c)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn dinkelbach_grid_suite(seed: u64, size: SuiteSize) -> Result<SuiteReport> {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for case in 0..size.instances as u64 {
        let (_, mut rng) = link_for(seed, case, &Scenario::default())?;
        let sc = random_scenario(&mut rng);
        let (link, _) = link_for(seed, case, &sc)?;
        let sel = random_selection(&mut rng, &sc);
        let b = link.ports.select(&sel);
        let lambda = hermitian_eigenvalues(&(&link.tx * link.tx.adjoint())).iter().cloned().fold(0.0, f64::max);
        let mu: Vec<f64> = hermitian_eigenvalues(&(b.adjoint() * &b)).iter().map(|m| m.max(0.0)).collect();
        let q0 = Covariance::uniform(sc.n_tx, sc.p_max);
        let out = dinkelbach_with(&link.direction, &link.tx, &b, &sc, &q0, DEFAULT_MAX_ITER)?;
        let grid = grid_efficiency(lambda, &mu, &sc, size.grid_points);
        let err = rel(out.eta, grid);
        worst = worst.max(err);
        if err > 1e-5 {
            failures += 1;
        }
    }
    Ok(SuiteReport::new("dinkelbach-grid", size.instances, failures, 0, format!("max relative gap {worst:.3e}")))
}

/// Best fixed point over every start versus full enumeration, `M = 8`, `m0 = 2`.
pub fn coordinate_exhaustive_suite(seed: u64, size: SuiteSize) -> Result<SuiteReport> {
    let sc = Scenario { m_ports: 8, m_active: 2, ..Scenario::default() };
    let mut failures = 0;
    let mut ratio_sum = 0.0;
    for case in 0..size.instances as u64 {
        let (link, mut rng) = link_for(seed, case, &sc)?;
        let q = random_covariance(&mut rng, &sc);
        let search = PortSearch::for_covariance(&link.tx, &q, &link.ports, &sc)?;
        let best = search.exhaustive(DEFAULT_EXHAUSTIVE_CAP)?;
        let mut best_start = f64::NEG_INFINITY;
        for a in 1..=8 {
            for b in a + 1..=8 {
                let start = PortSelection::new(vec![a, b], 8)?;
                let fp = search.sweep_to_fixed_point(&start, 64);
                best_start = best_start.max(search.rate(&fp));
            }
        }
        let single = search.rate(&search.sweep(&random_selection(&mut rng, &sc)));
        ratio_sum += single / best.rate;
        if rel(best_start, best.rate) > 1e-12 || single > best.rate * (1.0 + 1e-12) {
            failures += 1;
        }
    }
    let avg = ratio_sum / size.instances as f64;
    Ok(SuiteReport::new(
        "coordinate-exhaustive",
        size.instances,
        failures,
        0,
        format!("single-start average {:.2}% of optimum", 100.0 * avg),
    ))
}

pub fn monotonicity_suite(seed: u64, size: SuiteSize) -> Result<SuiteReport> {
    const SLACK: f64 = 1e-12;
    let mut failures = 0;
    for case in 0..size.instances as u64 {
        let sc = Scenario::default();
        let (link, mut rng) = link_for(seed, case, &sc)?;
        let sel = random_selection(&mut rng, &sc);
        let q0 = Covariance::uniform(sc.n_tx, sc.p_max);
        let d = link.optimize_covariance(&sel, &sc, &q0, DEFAULT_MAX_ITER)?;
        let alt = alternate_on(&link, &sc, &sel, &AltOptions::default())?;
        let small = Scenario { m_ports: 8, ..sc.clone() };
        let (small_link, _) = link_for(seed, case, &small)?;
        let mut prev = f64::NEG_INFINITY;
        let mut ladder_ok = true;
        for m0 in 1..=8 {
            let s = Scenario { m_active: m0, ..small.clone() };
            let r = PortSearch::for_covariance(&small_link.tx, &q0, &small_link.ports, &s)?
                .exhaustive(DEFAULT_EXHAUSTIVE_CAP)?
                .rate;
            ladder_ok &= r >= prev - SLACK;
            prev = r;
        }
        let nondecreasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] >= w[0] - SLACK);
        if !(nondecreasing(&d.trace.etas) && nondecreasing(&alt.eta_per_iteration) && ladder_ok) {
            failures += 1;
        }
    }
    Ok(SuiteReport::new("monotonicity", size.instances, failures, 0, format!("{failures} violating seeds")))
}

/// Runs the named suite, or every suite for `None`. Unknown names yield
/// `Ok(None)`.
pub fn run_suites(name: Option<&str>, seed: u64, size: SuiteSize) -> Result<Option<Vec<SuiteReport>>> {
    let names: Vec<&str> = match name {
        None => SUITES.to_vec(),
        Some(n) if SUITES.contains(&n) => vec![n],
        Some(_) => return Ok(None),
    };
    let mut out = Vec::new();
    for n in names {
        out.push(match n {
            "determinant" => determinant_suite(seed, size)?,
            "jensen" => jensen_suite(seed, size)?,
            "expectation" => expectation_suite(seed, size)?,
            "dinkelbach-grid" => dinkelbach_grid_suite(seed, size)?,
            "coordinate-exhaustive" => coordinate_exhaustive_suite(seed, size)?,
            "monotonicity" => monotonicity_suite(seed, size)?,
            _ => unreachable!(),
        });
    }
    Ok(Some(out))
}
