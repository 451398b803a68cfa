//! Activated-port selection for a fixed transmit covariance.
//!
//! With `β = (α²/σ²) tr(AQAᴴ)` fixed, the rate bound is
//! `log2 det(I + β Σₘ b(rₘ) b(rₘ)ᴴ)`. Holding every port but slot `m` fixed,
//! the determinant lemma splits it into
//! `log2(1 + β p(rₘ)) + log2 det(I + β B̄ₘ B̄ₘᴴ)` with
//! `p(r) = b(r)ᴴ (I + β B̄ₘ B̄ₘᴴ)⁻¹ b(r)`, so each coordinate step maximizes `p`.

use itertools::Itertools;
use rand::Rng;

use crate::channel::{rx_field_vector, PathSet, PhaseModel, PortDictionary};
use crate::error::{Error, Result};
use crate::geometry::{PortSelection, Scenario};
use crate::linalg::{hpd_cholesky, log2_det_from_cholesky, C64, CMatrix, CVector};
use crate::metrics::{effective_gain, log2_det_ports, Covariance};

pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 1_000_000;

/// Everything needed to score candidates for one slot.
#[derive(Debug, Clone)]
pub struct PortGainContext {
    pub beta: f64,
    /// `B̄ₘ`, the selection with slot `m` removed (L_r×(m0−1)).
    pub deflated_matrix: CMatrix,
    /// `(I + β B̄ₘ B̄ₘᴴ)⁻¹`.
    pub inverse_core: CMatrix,
    /// `log2 det(I + β B̄ₘ B̄ₘᴴ)`.
    pub core_log2_det: f64,
}

impl PortGainContext {
    pub fn new(beta: f64, deflated: CMatrix) -> Self {
        let l_r = deflated.nrows();
        let core = CMatrix::identity(l_r, l_r) + &deflated * deflated.adjoint() * C64::new(beta, 0.0);
        let chol = hpd_cholesky(&core).expect("I + beta*B B^H is positive definite for beta >= 0");
        let core_log2_det = log2_det_from_cholesky(&chol);
        let inv = chol.inverse();
        let inverse_core = (&inv + inv.adjoint()) * C64::new(0.5, 0.0);
        PortGainContext { beta, deflated_matrix: deflated, inverse_core, core_log2_det }
    }

    /// Context for 1-based slot `m` of `sel`.
    pub fn for_slot(beta: f64, dict: &PortDictionary, sel: &PortSelection, m: usize) -> Self {
        let others: Vec<usize> =
            sel.indices().iter().enumerate().filter(|(i, _)| i + 1 != m).map(|(_, &r)| r).collect();
        PortGainContext::new(beta, dict.select_indices(&others))
    }

    /// `bᴴ (I + β B̄ B̄ᴴ)⁻¹ b` for an explicit response vector.
    pub fn gain_of(&self, b: &CVector) -> f64 {
        b.dotc(&(&self.inverse_core * b)).re
    }

    /// Imaginary residue of the quadratic form; zero up to roundoff.
    pub fn gain_imaginary_part(&self, b: &CVector) -> f64 {
        b.dotc(&(&self.inverse_core * b)).im
    }

    /// Full rate bound with `b` placed in the open slot.
    pub fn rate_with(&self, b: &CVector) -> f64 {
        (self.beta * self.gain_of(b)).ln_1p() / std::f64::consts::LN_2 + self.core_log2_det
    }
}

/// `p(r)` for candidate port `r`.
pub fn port_gain(
    candidate: usize,
    ctx: &PortGainContext,
    paths: &PathSet,
    scenario: &Scenario,
    model: PhaseModel,
) -> Result<f64> {
    let b = rx_field_vector(candidate, paths, scenario, model)?;
    Ok(ctx.gain_of(&b))
}

/// Result of a full enumeration of port subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub selection: PortSelection,
    pub rate: f64,
    pub evaluations: u64,
}

/// Port-selection problem for fixed `β`.
#[derive(Debug, Clone)]
pub struct PortSearch<'a> {
    pub beta: f64,
    pub dict: &'a PortDictionary,
    pub m_active: usize,
}

impl<'a> PortSearch<'a> {
    pub fn new(beta: f64, dict: &'a PortDictionary, m_active: usize) -> Self {
        PortSearch { beta, dict, m_active }
    }

    pub fn for_covariance(tx: &CMatrix, q: &Covariance, dict: &'a PortDictionary, scenario: &Scenario) -> Result<Self> {
        Ok(PortSearch::new(effective_gain(tx, q, scenario)?.max(0.0), dict, scenario.m_active))
    }

    pub fn m_ports(&self) -> usize {
        self.dict.m_ports()
    }

    /// `R̄` at this `β` for `sel`.
    pub fn rate(&self, sel: &PortSelection) -> f64 {
        self.rate_of(sel.indices())
    }

    pub fn rate_of(&self, indices: &[usize]) -> f64 {
        log2_det_ports(self.beta, &self.dict.select_indices(indices))
    }

    /// Best index for slot `m` in the open window between its neighbours;
    /// ties go to the smallest index.
    pub fn coordinate_update(&self, m: usize, sel: &PortSelection) -> PortSelection {
        let idx = sel.indices();
        let lo = if m == 1 { 0 } else { idx[m - 2] };
        let hi = if m == sel.len() { self.m_ports() + 1 } else { idx[m] };
        let ctx = PortGainContext::for_slot(self.beta, self.dict, sel, m);
        let mut best = sel.slot(m);
        let mut best_gain = f64::NEG_INFINITY;
        for r in lo + 1..hi {
            let g = ctx.gain_of(&self.dict.port(r));
            if g > best_gain {
                best_gain = g;
                best = r;
            }
        }
        let mut out = sel.clone();
        out.set_slot(m, best);
        out
    }

    /// One pass `m = 1..m0`, rebuilding the slot context after each update.
    pub fn sweep(&self, sel: &PortSelection) -> PortSelection {
        (1..=sel.len()).fold(sel.clone(), |cur, m| self.coordinate_update(m, &cur))
    }

    /// Repeats sweeps until the selection stops changing (at most `max_sweeps`).
    pub fn sweep_to_fixed_point(&self, sel: &PortSelection, max_sweeps: usize) -> PortSelection {
        let mut cur = sel.clone();
        for _ in 0..max_sweeps {
            let next = self.sweep(&cur);
            if next == cur {
                break;
            }
            cur = next;
        }
        cur
    }

    /// Every strictly increasing `m0`-subset in lexicographic order; the first
    /// maximizer wins ties.
    pub fn exhaustive(&self, cap: u128) -> Result<ExhaustiveResult> {
        let count = binomial(self.m_ports() as u128, self.m_active as u128);
        if count > cap {
            return Err(Error::CapExceeded { count, cap });
        }
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut evaluations = 0u64;
        for combo in (1..=self.m_ports()).combinations(self.m_active) {
            let r = self.rate_of(&combo);
            evaluations += 1;
            if best.as_ref().is_none_or(|(_, b)| r > *b) {
                best = Some((combo, r));
            }
        }
        let (indices, rate) = best.expect("at least one combination");
        Ok(ExhaustiveResult { selection: PortSelection::from_sorted_unchecked(indices), rate, evaluations })
    }
}

/// One sweep for covariance `q`.
pub fn sweep_ports(
    sel: &PortSelection,
    tx: &CMatrix,
    q: &Covariance,
    dict: &PortDictionary,
    scenario: &Scenario,
) -> Result<PortSelection> {
    Ok(PortSearch::for_covariance(tx, q, dict, scenario)?.sweep(sel))
}

pub fn exhaustive_search(
    tx: &CMatrix,
    q: &Covariance,
    dict: &PortDictionary,
    scenario: &Scenario,
    cap: u128,
) -> Result<ExhaustiveResult> {
    PortSearch::for_covariance(tx, q, dict, scenario)?.exhaustive(cap)
}

/// Uniformly random `m0`-subset of `1..=M`, sorted.
pub fn random_selection<R: Rng + ?Sized>(rng: &mut R, scenario: &Scenario) -> PortSelection {
    let mut picked: Vec<usize> =
        rand::seq::index::sample(rng, scenario.m_ports, scenario.m_active).into_iter().map(|i| i + 1).collect();
    picked.sort_unstable();
    PortSelection::from_sorted_unchecked(picked)
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}
