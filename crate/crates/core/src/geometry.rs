//! Element and port coordinates on the two linear arrays.
//!
//! Both arrays are centred on their local origin. Indices are 1-based
//! throughout the public API: transmit element `n ∈ 1..=N`, port `r ∈ 1..=M`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

/// Physical and algorithmic constants of one link.
///
/// All lengths in meters, all powers in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Number of base-station antennas `N`.
    pub n_tx: usize,
    /// Number of fluid-antenna ports `M`.
    pub m_ports: usize,
    /// Number of simultaneously activated ports `m0`.
    pub m_active: usize,
    pub d_bs: f64,
    pub d_u: f64,
    pub wavelength: f64,
    /// Noise power `σ²`.
    pub noise_power: f64,
    /// Per-entry variance `α²` of the path-response matrix.
    pub path_gain_var: f64,
    pub p_max: f64,
    /// Static power consumption `P_c`.
    pub p_c: f64,
    /// Convergence tolerance `ε` shared by the Dinkelbach and outer loops.
    pub epsilon: f64,
    pub l_t_paths: usize,
    pub l_r_paths: usize,
}

impl Default for Scenario {
    /// N=20, M=21, m0=3, L_t=L_r=3, λ=5 mm, half-wavelength spacing,
    /// α²=1/L_r, σ²=10 dBm, P_c=0.1 W and P_max at 15 dB SNR.
    fn default() -> Self {
        let wavelength = 5e-3;
        let noise_power = 0.01;
        Scenario {
            n_tx: 20,
            m_ports: 21,
            m_active: 3,
            d_bs: wavelength / 2.0,
            d_u: wavelength / 2.0,
            wavelength,
            noise_power,
            path_gain_var: 1.0 / 3.0,
            p_max: snr_db_to_p_max(15.0, noise_power),
            p_c: 0.1,
            epsilon: 1e-6,
            l_t_paths: 3,
            l_r_paths: 3,
        }
    }
}

/// `P_max = σ²·10^{SNR/10}`.
pub fn snr_db_to_p_max(snr_db: f64, noise_power: f64) -> f64 {
    noise_power * 10f64.powf(snr_db / 10.0)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidScenario(msg));
        if self.n_tx < 1 {
            return fail("n_tx must be at least 1".into());
        }
        if self.m_active < 1 || self.m_active > self.m_ports {
            return fail(format!(
                "need 1 <= m_active <= m_ports, got m_active={} m_ports={}",
                self.m_active, self.m_ports
            ));
        }
        if self.l_t_paths < 1 || self.l_r_paths < 1 {
            return fail("path counts must be at least 1".into());
        }
        for (name, v) in [
            ("d_bs", self.d_bs),
            ("d_u", self.d_u),
            ("wavelength", self.wavelength),
            ("noise_power", self.noise_power),
            ("path_gain_var", self.path_gain_var),
            ("p_max", self.p_max),
            ("p_c", self.p_c),
            ("epsilon", self.epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.p_max = snr_db_to_p_max(snr_db, self.noise_power);
        self
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.p_max / self.noise_power).log10()
    }

    /// `α²/σ²`, the factor multiplying `tr(AQAᴴ)` in the rate bound.
    pub fn gain_to_noise(&self) -> f64 {
        self.path_gain_var / self.noise_power
    }

    /// Physical length of the fluid antenna, `d_U·(M−1)`.
    pub fn aperture(&self) -> f64 {
        self.d_u * (self.m_ports as f64 - 1.0)
    }
}

fn centred_offset(index: usize, count: usize, spacing: f64) -> Result<f64> {
    if index < 1 || index > count {
        return Err(Error::IndexOutOfRange { index, max: count });
    }
    Ok(centred_offset_unchecked(index, count, spacing))
}

#[inline]
pub(crate) fn centred_offset_unchecked(index: usize, count: usize, spacing: f64) -> f64 {
    (2.0 * (index as f64 - 1.0) - count as f64 + 1.0) / 2.0 * spacing
}

/// Signed position of transmit element `n` along the BS array.
pub fn tx_offset(n: usize, scenario: &Scenario) -> Result<f64> {
    centred_offset(n, scenario.n_tx, scenario.d_bs)
}

/// Signed position of port `r_m` along the fluid antenna.
pub fn port_offset(r_m: usize, scenario: &Scenario) -> Result<f64> {
    centred_offset(r_m, scenario.m_ports, scenario.d_u)
}

/// The first constraint a candidate selection violates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionViolation {
    #[error("port index {index} at slot {slot} outside 1..={max}")]
    Range { slot: usize, index: usize, max: usize },
    #[error("indices not strictly increasing at slot {slot} ({prev} then {next})")]
    Ordering { slot: usize, prev: usize, next: usize },
    #[error("expected {expected} activated ports, got {got}")]
    Cardinality { expected: usize, got: usize },
}

/// Strictly increasing 1-based indices of the activated ports.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PortSelection(Vec<usize>);

impl PortSelection {
    /// Builds a selection, checking range and ordering against `m_ports`.
    /// Cardinality is checked separately by [`validate_selection`].
    pub fn new(indices: Vec<usize>, m_ports: usize) -> std::result::Result<Self, SelectionViolation> {
        check_range_and_order(&indices, m_ports)?;
        Ok(PortSelection(indices))
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        PortSelection(indices)
    }

    /// Ports `1..=M`, `m0 = M`.
    pub fn all(m_ports: usize) -> Self {
        PortSelection((1..=m_ports).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index at 1-based slot `m`.
    pub fn slot(&self, m: usize) -> usize {
        self.0[m - 1]
    }

    pub(crate) fn set_slot(&mut self, m: usize, index: usize) {
        self.0[m - 1] = index;
    }
}

impl fmt::Display for PortSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}

fn check_range_and_order(indices: &[usize], m_ports: usize) -> std::result::Result<(), SelectionViolation> {
    for (slot, (i, &r)) in indices.iter().enumerate().map(|(i, r)| (i + 1, (i, r))) {
        if r < 1 || r > m_ports {
            return Err(SelectionViolation::Range { slot, index: r, max: m_ports });
        }
        if i > 0 && indices[i - 1] >= r {
            return Err(SelectionViolation::Ordering { slot, prev: indices[i - 1], next: r });
        }
    }
    Ok(())
}

/// Checks range, ordering and cardinality in that order, on raw indices.
pub fn validate_indices(indices: &[usize], scenario: &Scenario) -> std::result::Result<(), SelectionViolation> {
    check_range_and_order(indices, scenario.m_ports)?;
    if indices.len() != scenario.m_active {
        return Err(SelectionViolation::Cardinality { expected: scenario.m_active, got: indices.len() });
    }
    Ok(())
}

pub fn validate_selection(sel: &PortSelection, scenario: &Scenario) -> std::result::Result<(), SelectionViolation> {
    validate_indices(sel.indices(), scenario)
}
