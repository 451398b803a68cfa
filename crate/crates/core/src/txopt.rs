//! Transmit-covariance optimization by Dinkelbach iterations.
//!
//! For fixed ports the rate bound depends on `Q` only through
//! `s = tr(AQAᴴ) ≤ tr(Q)·λ_max(AᴴA)`, with equality for `Q = P·v vᴴ` where `v`
//! is the top eigenvector of `AᴴA`. Each parametric subproblem
//! `max f(Q) − η g(Q)` therefore collapses to the concave scalar problem
//!
//! ```text
//! h(P) = Σᵢ log2(1 + κᵢ P) − η (P + P_c),   κᵢ = (α²/σ²)·λ_max·μᵢ,   P ∈ [0, P_max]
//! ```
//!
//! with `μᵢ` the eigenvalues of `BᴴB`, solved by bisection on `h′`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::geometry::Scenario;
use crate::linalg::{gram_power_iteration, hermitian_eigenvalues, CMatrix, CVector};
use crate::metrics::{rate_upper_bound, Covariance};

pub const DEFAULT_MAX_ITER: usize = 100;
pub const POWER_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-12;
const EIGEN_MAX_ITER: usize = 200_000;

/// Dominant eigenpair of `AᴴA`.
#[derive(Debug, Clone)]
pub struct TransmitDirection {
    /// `λ_max(AᴴA)`, equal to `‖Av‖²` for the stored `v`.
    pub lambda_max: f64,
    pub vector: CVector,
}

impl TransmitDirection {
    pub fn from_field(tx: &CMatrix) -> Self {
        let top = gram_power_iteration(tx, EIGEN_TOL, EIGEN_MAX_ITER);
        TransmitDirection { lambda_max: top.value, vector: top.vector }
    }

    /// `P·v vᴴ`.
    pub fn covariance(&self, power: f64) -> Covariance {
        if power == 0.0 {
            return Covariance::zero(self.vector.len());
        }
        Covariance::rank_one(power, &self.vector)
    }
}

/// The scalar power problem left after the rank-one reduction.
#[derive(Debug, Clone)]
pub struct PowerProblem {
    /// Slopes `κᵢ`; zero eigenvalues of `BᴴB` are dropped.
    pub slopes: Vec<f64>,
    pub p_max: f64,
    pub p_c: f64,
}

impl PowerProblem {
    pub fn new(lambda_max: f64, rx: &CMatrix, scenario: &Scenario) -> Self {
        let gram = rx.adjoint() * rx;
        let scale = scenario.gain_to_noise() * lambda_max;
        let slopes = hermitian_eigenvalues(&gram)
            .into_iter()
            .map(|mu| scale * mu.max(0.0))
            .filter(|&k| k > 0.0)
            .collect();
        PowerProblem { slopes, p_max: scenario.p_max, p_c: scenario.p_c }
    }

    /// `f(P) = Σ log2(1 + κᵢ P)`.
    pub fn rate(&self, power: f64) -> f64 {
        self.slopes.iter().map(|k| (k * power).ln_1p()).sum::<f64>() / LN_2
    }

    pub fn objective(&self, eta: f64, power: f64) -> f64 {
        self.rate(power) - eta * (power + self.p_c)
    }

    pub fn derivative(&self, eta: f64, power: f64) -> f64 {
        self.slopes.iter().map(|k| k / (1.0 + k * power)).sum::<f64>() / LN_2 - eta
    }

    pub fn efficiency(&self, power: f64) -> f64 {
        self.rate(power) / (power + self.p_c)
    }

    /// Maximizer of `h` on `[0, P_max]`, to within [`POWER_TOL`].
    pub fn argmax(&self, eta: f64) -> f64 {
        if self.slopes.is_empty() || self.derivative(eta, 0.0) <= 0.0 {
            return 0.0;
        }
        if self.derivative(eta, self.p_max) >= 0.0 {
            return self.p_max;
        }
        let (mut lo, mut hi) = (0.0, self.p_max);
        while hi - lo > POWER_TOL {
            let mid = 0.5 * (lo + hi);
            if self.derivative(eta, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        // the bracket is tiny; keep whichever point scores best
        [lo, mid, hi]
            .into_iter()
            .max_by(|a, b| self.objective(eta, *a).total_cmp(&self.objective(eta, *b)))
            .unwrap()
    }
}

/// Solves `max f(Q) − η g(Q)` over `Q ⪰ 0, tr(Q) ≤ P_max`; returns the
/// maximizer and the objective value.
pub fn inner_max(eta: f64, tx: &CMatrix, rx: &CMatrix, scenario: &Scenario) -> Result<(Covariance, f64)> {
    let dir = TransmitDirection::from_field(tx);
    inner_max_with(&dir, eta, tx, rx, scenario)
}

pub fn inner_max_with(
    dir: &TransmitDirection,
    eta: f64,
    tx: &CMatrix,
    rx: &CMatrix,
    scenario: &Scenario,
) -> Result<(Covariance, f64)> {
    let problem = PowerProblem::new(dir.lambda_max, rx, scenario);
    let power = problem.argmax(eta);
    let q = dir.covariance(power);
    let value = rate_upper_bound(tx, rx, &q, scenario)? - eta * (q.trace() + scenario.p_c);
    Ok((q, value))
}

/// Iteration history of one Dinkelbach run.
#[derive(Debug, Clone, PartialEq)]
pub struct DinkelbachTrace {
    /// `η⁽⁰⁾, η⁽¹⁾, …`; the last entry is the ratio at the returned `Q`.
    pub etas: Vec<f64>,
    /// `f(Q⁽ⁱ⁺¹⁾) − η⁽ⁱ⁾ g(Q⁽ⁱ⁺¹⁾)` per inner solve.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct DinkelbachOutcome {
    pub q: Covariance,
    /// Energy efficiency `f(Q)/g(Q)` at the returned `Q`.
    pub eta: f64,
    pub rate: f64,
    pub power: f64,
    pub trace: DinkelbachTrace,
}

pub fn dinkelbach(tx: &CMatrix, rx: &CMatrix, scenario: &Scenario, q_init: &Covariance) -> Result<DinkelbachOutcome> {
    let dir = TransmitDirection::from_field(tx);
    dinkelbach_with(&dir, tx, rx, scenario, q_init, DEFAULT_MAX_ITER)
}

/// Dinkelbach iterations with a precomputed transmit direction.
pub fn dinkelbach_with(
    dir: &TransmitDirection,
    tx: &CMatrix,
    rx: &CMatrix,
    scenario: &Scenario,
    q_init: &Covariance,
    max_iter: usize,
) -> Result<DinkelbachOutcome> {
    q_init.check(scenario.p_max)?;
    let problem = PowerProblem::new(dir.lambda_max, rx, scenario);
    let g = |q: &Covariance| q.trace() + scenario.p_c;

    let mut q = q_init.clone();
    let mut rate = rate_upper_bound(tx, rx, &q, scenario)?;
    let mut eta = rate / g(&q);
    let mut trace = DinkelbachTrace { etas: vec![eta], residuals: Vec::new(), iterations: 0 };

    for _ in 0..max_iter {
        let power = problem.argmax(eta);
        let next = dir.covariance(power);
        let next_rate = rate_upper_bound(tx, rx, &next, scenario)?;
        let residual = next_rate - eta * g(&next);
        trace.iterations += 1;
        trace.residuals.push(residual);
        // Dinkelbach never moves to a worse ratio; guard against a
        // roundoff-level regression when already at the optimum.
        let next_eta = next_rate / g(&next);
        if next_eta >= eta {
            q = next;
            rate = next_rate;
            eta = next_eta;
        }
        trace.etas.push(eta);
        if residual.abs() <= scenario.epsilon {
            let power = q.trace();
            return Ok(DinkelbachOutcome { q, eta, rate, power, trace });
        }
    }
    Err(Error::NonConvergence(Box::new(trace)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_paths, tx_field_matrix, PhaseModel, PortDictionary};
    use crate::metrics::transmit_trace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64, sc: &Scenario, ports: &[usize]) -> (CMatrix, CMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pt = sample_paths(&mut rng, sc.l_t_paths, [1.0, 10.0]).unwrap();
        let pr = sample_paths(&mut rng, sc.l_r_paths, [1.0, 10.0]).unwrap();
        (
            tx_field_matrix(&pt, sc, PhaseModel::Approx),
            PortDictionary::new(&pr, sc, PhaseModel::Approx).select_indices(ports),
        )
    }

    #[test]
    fn zero_eta_uses_full_power() {
        let sc = Scenario::default();
        let (a, b) = instance(1, &sc, &[2, 10, 18]);
        let (q, _) = inner_max(0.0, &a, &b, &sc).unwrap();
        assert!((q.trace() - sc.p_max).abs() < 1e-12);
    }

    #[test]
    fn huge_eta_switches_off() {
        let sc = Scenario::default();
        let (a, b) = instance(2, &sc, &[2, 10, 18]);
        let dir = TransmitDirection::from_field(&a);
        let prob = PowerProblem::new(dir.lambda_max, &b, &sc);
        let eta = prob.derivative(0.0, 0.0) * 2.0;
        let (q, value) = inner_max(eta, &a, &b, &sc).unwrap();
        assert_eq!(q.trace(), 0.0);
        assert!((value + eta * sc.p_c).abs() < 1e-12);
    }

    #[test]
    fn degenerate_transmit_field_returns_zero() {
        let sc = Scenario::default();
        let (_, b) = instance(3, &sc, &[1, 2, 3]);
        let a = CMatrix::zeros(3, 20);
        let (q, _) = inner_max(0.5, &a, &b, &sc).unwrap();
        assert_eq!(q.trace(), 0.0);
    }

    #[test]
    fn rank_one_output_achieves_top_eigenvalue() {
        let sc = Scenario::default();
        let (a, b) = instance(4, &sc, &[3, 11, 20]);
        let out = dinkelbach(&a, &b, &sc, &Covariance::uniform(20, sc.p_max)).unwrap();
        out.q.check(sc.p_max).unwrap();
        let gram = a.adjoint() * &a;
        let lam = hermitian_eigenvalues(&gram).into_iter().fold(f64::MIN, f64::max);
        let s = transmit_trace(&a, &out.q).unwrap();
        assert!((s - out.q.trace() * lam).abs() <= 1e-9 * s);
        let sv = out.q.matrix().singular_values();
        assert!(sv.iter().filter(|&&x| x > 1e-12 * out.q.trace()).count() <= 1);
    }

    #[test]
    fn start_from_zero_power() {
        let sc = Scenario::default();
        let (a, b) = instance(5, &sc, &[1, 7, 14]);
        let out = dinkelbach(&a, &b, &sc, &Covariance::zero(20)).unwrap();
        assert_eq!(out.trace.etas[0], 0.0);
        assert!(out.trace.etas[1] > 0.0);
        // first inner step at η=0 is the full-power point
        let dir = TransmitDirection::from_field(&a);
        let prob = PowerProblem::new(dir.lambda_max, &b, &sc);
        assert!((out.trace.etas[1] - prob.efficiency(sc.p_max)).abs() < 1e-9);
    }

    #[test]
    fn etas_nondecreasing_and_residual_small() {
        let sc = Scenario::default();
        for seed in 0..30 {
            let (a, b) = instance(seed, &sc, &[4, 5, 17]);
            let out = dinkelbach(&a, &b, &sc, &Covariance::uniform(20, sc.p_max)).unwrap();
            for w in out.trace.etas.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
            assert!(out.trace.residuals.last().unwrap().abs() <= sc.epsilon);
            assert_eq!(out.trace.residuals.len(), out.trace.iterations);
        }
    }

    #[test]
    fn concavity_of_scalar_objective() {
        let sc = Scenario::default();
        let (a, b) = instance(6, &sc, &[2, 9, 16]);
        let dir = TransmitDirection::from_field(&a);
        let prob = PowerProblem::new(dir.lambda_max, &b, &sc);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            use rand::Rng;
            let x: f64 = rng.random::<f64>() * sc.p_max;
            let y: f64 = rng.random::<f64>() * sc.p_max;
            let eta: f64 = rng.random::<f64>() * 50.0;
            let mid = prob.objective(eta, 0.5 * (x + y));
            let avg = 0.5 * (prob.objective(eta, x) + prob.objective(eta, y));
            assert!(mid >= avg - 1e-12);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let sc = Scenario { epsilon: 1e-300, ..Scenario::default() };
        let (a, b) = instance(7, &sc, &[2, 9, 16]);
        let dir = TransmitDirection::from_field(&a);
        match dinkelbach_with(&dir, &a, &b, &sc, &Covariance::uniform(20, sc.p_max), 1) {
            Err(Error::NonConvergence(trace)) => assert_eq!(trace.iterations, 1),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_start_rejected() {
        let sc = Scenario::default();
        let (a, b) = instance(8, &sc, &[2, 9, 16]);
        let q = Covariance::uniform(20, sc.p_max * 2.0);
        assert!(matches!(dinkelbach(&a, &b, &sc, &q), Err(Error::InvalidCovariance(_))));
    }
}
