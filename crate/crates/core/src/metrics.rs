//! Rate and energy-efficiency metrics.
//!
//! Rates are in bits per channel use (base-2 logarithms). The ergodic rate
//! `E_O[log2 det(I + HQHᴴ/σ²)]` is estimated by Monte Carlo; the Jensen
//! bound moves the expectation inside, where `E[OAQAᴴOᴴ] = α² tr(AQAᴴ) I`
//! reduces it to `log2 det(I + β BᴴB)` with `β = (α²/σ²) tr(AQAᴴ)`.

use rand::Rng;

use crate::channel::{sample_gain_matrix, PathGains};
use crate::error::{Error, Result};
use crate::geometry::Scenario;
use crate::linalg::{hermitian_defect, hermitian_eigenvalues, log2_det_identity_plus, trace_re, C64, CMatrix, CVector};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const BUDGET_TOL: f64 = 1e-9;

/// Hermitian PSD transmit covariance `Q` within a power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    matrix: CMatrix,
}

impl Covariance {
    /// Validates Hermitian symmetry, PSD-ness and `tr(Q) ≤ p_max`.
    pub fn new(matrix: CMatrix, p_max: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidCovariance(format!("not square: {:?}", matrix.shape())));
        }
        let defect = hermitian_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidCovariance(format!("Hermitian defect {defect:e}")));
        }
        let min_eig = hermitian_eigenvalues(&matrix).into_iter().fold(f64::INFINITY, f64::min);
        if matrix.nrows() > 0 && min_eig < -PSD_TOL {
            return Err(Error::InvalidCovariance(format!("eigenvalue {min_eig:e} below zero")));
        }
        let tr = trace_re(&matrix);
        if tr > p_max + BUDGET_TOL {
            return Err(Error::InvalidCovariance(format!("trace {tr} exceeds budget {p_max}")));
        }
        Ok(Covariance { matrix })
    }

    pub fn zero(n: usize) -> Self {
        Covariance { matrix: CMatrix::zeros(n, n) }
    }

    /// `(power/n)·I`.
    pub fn uniform(n: usize, power: f64) -> Self {
        Covariance { matrix: CMatrix::identity(n, n) * C64::new(power / n as f64, 0.0) }
    }

    /// `power·v vᴴ` for a unit-norm `v`.
    pub fn rank_one(power: f64, direction: &CVector) -> Self {
        let m = direction * direction.adjoint() * C64::new(power, 0.0);
        // symmetrize away roundoff in the outer product
        let matrix = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        Covariance { matrix }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.matrix)
    }

    /// `c·Q`, unchecked against any budget.
    pub fn scaled(&self, c: f64) -> Self {
        Covariance { matrix: &self.matrix * C64::new(c, 0.0) }
    }

    /// Re-runs all invariants against `p_max`.
    pub fn check(&self, p_max: f64) -> Result<()> {
        Covariance::new(self.matrix.clone(), p_max).map(|_| ())
    }
}

/// `tr(AQAᴴ)`.
pub fn transmit_trace(tx: &CMatrix, q: &Covariance) -> Result<f64> {
    if tx.ncols() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} columns, Q is {}x{}",
            tx.ncols(),
            q.dim(),
            q.dim()
        )));
    }
    Ok(trace_re(&(tx * q.matrix() * tx.adjoint())))
}

/// `β = (α²/σ²)·tr(AQAᴴ)`.
pub fn effective_gain(tx: &CMatrix, q: &Covariance, scenario: &Scenario) -> Result<f64> {
    Ok(scenario.gain_to_noise() * transmit_trace(tx, q)?)
}

/// `log2 det(I_{m0} + β BᴴB)`.
pub fn log2_det_ports(beta: f64, rx: &CMatrix) -> f64 {
    let gram = rx.adjoint() * rx * C64::new(beta, 0.0);
    log2_det_identity_plus(&gram).expect("I + beta*B^H B is positive definite for beta >= 0")
}

/// `log2 det(I_{L_r} + β BBᴴ)`, the same quantity on the path side.
pub fn log2_det_paths(beta: f64, rx: &CMatrix) -> f64 {
    let outer = rx * rx.adjoint() * C64::new(beta, 0.0);
    log2_det_identity_plus(&outer).expect("I + beta*B B^H is positive definite for beta >= 0")
}

/// Jensen upper bound `R̄` on the ergodic rate.
pub fn rate_upper_bound(tx: &CMatrix, rx: &CMatrix, q: &Covariance, scenario: &Scenario) -> Result<f64> {
    let beta = effective_gain(tx, q, scenario)?;
    if beta < -PSD_TOL {
        return Err(Error::InvalidCovariance(format!("negative transmit trace, beta = {beta:e}")));
    }
    Ok(log2_det_ports(beta.max(0.0), rx))
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate { mean, std_error, samples: n }
    }
}

/// `log2 det(I + HQHᴴ/σ²)` for one realization of `O`.
pub fn instantaneous_rate(
    tx: &CMatrix,
    rx: &CMatrix,
    gains: &PathGains,
    q: &Covariance,
    scenario: &Scenario,
) -> Result<f64> {
    let h = crate::channel::assemble_channel(rx, gains, tx)?.0;
    let m = &h * q.matrix() * h.adjoint() * C64::new(1.0 / scenario.noise_power, 0.0);
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    log2_det_identity_plus(&m)
        .ok_or_else(|| Error::InvalidCovariance("I + HQH^H/sigma^2 not positive definite".into()))
}

/// Ergodic rate with `O` supplied by `draw`; tests use this with a
/// point-mass gain distribution.
pub fn exact_rate_with<F>(
    tx: &CMatrix,
    rx: &CMatrix,
    q: &Covariance,
    scenario: &Scenario,
    samples: usize,
    mut draw: F,
) -> Result<McEstimate>
where
    F: FnMut() -> PathGains,
{
    if samples < 2 {
        return Err(Error::TooFewSamples { min: 2, got: samples });
    }
    let mut rates = Vec::with_capacity(samples);
    for _ in 0..samples {
        rates.push(instantaneous_rate(tx, rx, &draw(), q, scenario)?);
    }
    Ok(McEstimate::from_samples(&rates))
}

/// Monte-Carlo ergodic rate over fresh draws of `O`.
pub fn exact_rate_mc<R: Rng + ?Sized>(
    tx: &CMatrix,
    rx: &CMatrix,
    q: &Covariance,
    scenario: &Scenario,
    rng: &mut R,
    samples: usize,
) -> Result<McEstimate> {
    let (rows, cols) = (rx.nrows(), tx.nrows());
    exact_rate_with(tx, rx, q, scenario, samples, || {
        PathGains(sample_gain_matrix(rng, rows, cols, scenario.path_gain_var))
    })
}

/// Jensen bound alongside the Monte-Carlo ergodic rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub upper_bound: f64,
    pub mc_estimate: f64,
    pub mc_std_error: f64,
    pub sample_count: usize,
}

pub fn rate_report<R: Rng + ?Sized>(
    tx: &CMatrix,
    rx: &CMatrix,
    q: &Covariance,
    scenario: &Scenario,
    rng: &mut R,
    samples: usize,
) -> Result<RateReport> {
    let upper_bound = rate_upper_bound(tx, rx, q, scenario)?;
    let mc = exact_rate_mc(tx, rx, q, scenario, rng, samples)?;
    Ok(RateReport { upper_bound, mc_estimate: mc.mean, mc_std_error: mc.std_error, sample_count: mc.samples })
}

/// Relative Frobenius distance between the sample mean of `OAQAᴴOᴴ` and its
/// closed-form expectation `α² tr(AQAᴴ) I`.
pub fn expectation_identity_check<R: Rng + ?Sized>(
    tx: &CMatrix,
    q: &Covariance,
    scenario: &Scenario,
    rng: &mut R,
    samples: usize,
) -> Result<f64> {
    if samples < 10 {
        return Err(Error::TooFewSamples { min: 10, got: samples });
    }
    let s = transmit_trace(tx, q)?;
    if s.abs() <= f64::MIN_POSITIVE {
        return Err(Error::DegenerateTrace);
    }
    let inner = tx * q.matrix() * tx.adjoint();
    let l_r = scenario.l_r_paths;
    let mut acc = CMatrix::zeros(l_r, l_r);
    for _ in 0..samples {
        let o = sample_gain_matrix(rng, l_r, tx.nrows(), scenario.path_gain_var);
        acc += &o * &inner * o.adjoint();
    }
    let mean = acc / C64::new(samples as f64, 0.0);
    let target = CMatrix::identity(l_r, l_r) * C64::new(s * scenario.path_gain_var, 0.0);
    Ok((&mean - &target).norm() / target.norm())
}

/// `rate / (tr(Q) + P_c)`.
pub fn energy_efficiency(rate: f64, q: &Covariance, scenario: &Scenario) -> f64 {
    rate / (q.trace() + scenario.p_c)
}
