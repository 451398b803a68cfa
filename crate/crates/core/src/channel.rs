//! Near-field field-response channel.
//!
//! Each side sees a handful of scatterers. For a path with elevation `θ` and
//! scatterer distance `l`, an element at signed offset `c` picks up the path
//! difference `ρ(c)`; its field response is `e^{j2πρ/λ}`. Stacking over
//! elements gives `A` (L_t×N) and over activated ports `B(r)` (L_r×m0). The
//! end-to-end channel is `H = Bᴴ O A` with i.i.d. complex Gaussian `O`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centred_offset_unchecked, PortSelection, Scenario};
use crate::linalg::{C64, CMatrix, CVector};

/// Which path-difference formula drives the phases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseModel {
    /// `−c·sinθ − c²·sin²θ/(2l)`.
    #[default]
    Approx,
    /// Law-of-cosines distance, no expansion.
    Exact,
    /// Second-order Taylor expansion of the exact form, `−c·sinθ + c²·cos²θ/(2l)`.
    Taylor,
}

impl PhaseModel {
    pub fn delta(self, offset: f64, elevation: f64, distance: f64) -> f64 {
        match self {
            PhaseModel::Approx => path_delta_approx(offset, elevation, distance),
            PhaseModel::Exact => path_delta_exact(offset, elevation, distance),
            PhaseModel::Taylor => path_delta_taylor(offset, elevation, distance),
        }
    }
}

/// Propagation paths seen from one side of the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    elevations: Vec<f64>,
    azimuths: Vec<f64>,
    distances: Vec<f64>,
}

impl PathSet {
    pub fn new(elevations: Vec<f64>, azimuths: Vec<f64>, distances: Vec<f64>) -> Result<Self> {
        let count = elevations.len();
        if azimuths.len() != count || distances.len() != count {
            return Err(Error::DimensionMismatch(format!(
                "path lists have lengths {}, {}, {}",
                count,
                azimuths.len(),
                distances.len()
            )));
        }
        if let Some(&d) = distances.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidRange { min: d, max: d });
        }
        if let Some(&t) = elevations.iter().find(|&&t| !(-FRAC_PI_2..=FRAC_PI_2).contains(&t)) {
            return Err(Error::InvalidScenario(format!("elevation {t} outside [-pi/2, pi/2]")));
        }
        Ok(PathSet { elevations, azimuths, distances })
    }

    pub fn count(&self) -> usize {
        self.elevations.len()
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    /// Sampled for completeness; the linear-array phases do not depend on them.
    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// FNV-1a over the IEEE bit patterns of all fields.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.elevations.iter().chain(&self.azimuths).chain(&self.distances) {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// Elevations `U[−π/2, π/2]`, azimuths `U[0, 2π]`, distances `U[min, max]`.
pub fn sample_paths<R: Rng + ?Sized>(rng: &mut R, count: usize, distance_range: [f64; 2]) -> Result<PathSet> {
    let [min, max] = distance_range;
    if !(min > 0.0 && max >= min && max.is_finite()) {
        return Err(Error::InvalidRange { min, max });
    }
    let mut elevations = Vec::with_capacity(count);
    let mut azimuths = Vec::with_capacity(count);
    let mut distances = Vec::with_capacity(count);
    for _ in 0..count {
        elevations.push(-FRAC_PI_2 + PI * rng.random::<f64>());
        azimuths.push(TAU * rng.random::<f64>());
        distances.push(min + (max - min) * rng.random::<f64>());
    }
    Ok(PathSet { elevations, azimuths, distances })
}

/// `√(l² + c² − 2lc·cos(π/2 − θ)) − l`.
pub fn path_delta_exact(offset: f64, elevation: f64, distance: f64) -> f64 {
    let c = offset;
    let l = distance;
    (l * l + c * c - 2.0 * l * c * (FRAC_PI_2 - elevation).cos()).sqrt() - l
}

/// `−c·sinθ − c²·sin²θ/(2l)`.
pub fn path_delta_approx(offset: f64, elevation: f64, distance: f64) -> f64 {
    let s = elevation.sin();
    -offset * s - offset * offset * s * s / (2.0 * distance)
}

/// `−c·sinθ + c²·cos²θ/(2l)`.
pub fn path_delta_taylor(offset: f64, elevation: f64, distance: f64) -> f64 {
    let (s, co) = elevation.sin_cos();
    -offset * s + offset * offset * co * co / (2.0 * distance)
}

fn field_vector(offset: f64, paths: &PathSet, wavelength: f64, model: PhaseModel) -> CVector {
    let k = TAU / wavelength;
    CVector::from_iterator(
        paths.count(),
        paths
            .elevations
            .iter()
            .zip(&paths.distances)
            .map(|(&theta, &l)| C64::from_polar(1.0, k * model.delta(offset, theta, l))),
    )
}

/// Transmit field response `a(n)`, one phase per transmit path.
pub fn tx_field_vector(n: usize, paths: &PathSet, scenario: &Scenario, model: PhaseModel) -> Result<CVector> {
    let c = crate::geometry::tx_offset(n, scenario)?;
    Ok(field_vector(c, paths, scenario.wavelength, model))
}

/// Receive field response `b(r)` of port `r`.
pub fn rx_field_vector(r: usize, paths: &PathSet, scenario: &Scenario, model: PhaseModel) -> Result<CVector> {
    let c = crate::geometry::port_offset(r, scenario)?;
    Ok(field_vector(c, paths, scenario.wavelength, model))
}

/// `A = [a(1) … a(N)]`.
pub fn tx_field_matrix(paths: &PathSet, scenario: &Scenario, model: PhaseModel) -> CMatrix {
    let cols: Vec<CVector> = (1..=scenario.n_tx)
        .map(|n| {
            let c = centred_offset_unchecked(n, scenario.n_tx, scenario.d_bs);
            field_vector(c, paths, scenario.wavelength, model)
        })
        .collect();
    CMatrix::from_columns(&cols)
}

/// Receive responses of every port, `[b(1) … b(M)]` (L_r×M).
///
/// `B(r)` is the column subset picked out by a selection; see
/// [`PortDictionary::select`].
#[derive(Debug, Clone)]
pub struct PortDictionary {
    columns: CMatrix,
}

impl PortDictionary {
    pub fn new(paths: &PathSet, scenario: &Scenario, model: PhaseModel) -> Self {
        let cols: Vec<CVector> = (1..=scenario.m_ports)
            .map(|r| {
                let c = centred_offset_unchecked(r, scenario.m_ports, scenario.d_u);
                field_vector(c, paths, scenario.wavelength, model)
            })
            .collect();
        PortDictionary { columns: CMatrix::from_columns(&cols) }
    }

    pub fn m_ports(&self) -> usize {
        self.columns.ncols()
    }

    pub fn l_r(&self) -> usize {
        self.columns.nrows()
    }

    /// `b(r)` for a 1-based port index.
    pub fn port(&self, r: usize) -> CVector {
        self.columns.column(r - 1).into_owned()
    }

    /// `B(r)`.
    pub fn select(&self, sel: &PortSelection) -> CMatrix {
        self.select_indices(sel.indices())
    }

    pub fn select_indices(&self, indices: &[usize]) -> CMatrix {
        let cols: Vec<CVector> = indices.iter().map(|&r| self.port(r)).collect();
        if cols.is_empty() {
            return CMatrix::zeros(self.l_r(), 0);
        }
        CMatrix::from_columns(&cols)
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.columns
    }
}

/// `B(r) = [b(r_1) … b(r_m0)]`.
pub fn rx_field_matrix(sel: &PortSelection, paths: &PathSet, scenario: &Scenario, model: PhaseModel) -> Result<CMatrix> {
    crate::geometry::validate_selection(sel, scenario)?;
    Ok(PortDictionary::new(paths, scenario, model).select(sel))
}

/// Transmit and receive field-response matrices for one port selection.
#[derive(Debug, Clone)]
pub struct FieldResponse {
    pub tx_matrix: CMatrix,
    pub rx_matrix: CMatrix,
}

impl FieldResponse {
    pub fn build(
        paths_t: &PathSet,
        paths_r: &PathSet,
        sel: &PortSelection,
        scenario: &Scenario,
        model: PhaseModel,
    ) -> Result<Self> {
        Ok(FieldResponse {
            tx_matrix: tx_field_matrix(paths_t, scenario, model),
            rx_matrix: rx_field_matrix(sel, paths_r, scenario, model)?,
        })
    }
}

/// Path-response matrix `O` (L_r×L_t).
#[derive(Debug, Clone, PartialEq)]
pub struct PathGains(pub CMatrix);

/// Circularly-symmetric complex Gaussian entries with variance `α²`.
pub fn sample_path_gains<R: Rng + ?Sized>(rng: &mut R, scenario: &Scenario) -> PathGains {
    PathGains(sample_gain_matrix(rng, scenario.l_r_paths, scenario.l_t_paths, scenario.path_gain_var))
}

pub(crate) fn sample_gain_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMatrix {
    let sd = (variance / 2.0).sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(sd * re, sd * im)
    })
}

/// End-to-end channel `H = Bᴴ O A` (m0×N).
#[derive(Debug, Clone)]
pub struct Channel(pub CMatrix);

pub fn assemble_channel(rx: &CMatrix, gains: &PathGains, tx: &CMatrix) -> Result<Channel> {
    let o = &gains.0;
    if rx.nrows() != o.nrows() || o.ncols() != tx.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "B is {}x{}, O is {}x{}, A is {}x{}",
            rx.nrows(),
            rx.ncols(),
            o.nrows(),
            o.ncols(),
            tx.nrows(),
            tx.ncols()
        )));
    }
    Ok(Channel(rx.adjoint() * o * tx))
}
