//! RIS phase profiles: near-field focusing onto the terminal phase centers,
//! far-field steering between the incidence and reflection directions, or
//! an externally supplied profile.

use std::f64::consts::PI;
use std::path::Path;

use crate::channel::ff_decomposition;
use crate::error::{CrbError, Result};
use crate::geometry::{element_positions, Pose, RisLattice, TerminalGeometry};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseMode {
    NearField,
    FarField,
    External,
}

/// Per-element phases in radians, row-major in `(n, m)`, unwrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    phases: Vec<f64>,
    mode: PhaseMode,
}

impl PhaseConfig {
    pub fn new(phases: Vec<f64>, mode: PhaseMode) -> Result<Self> {
        if let Some((k, v)) = phases.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(CrbError::InvalidInput(format!("phase {k} is not finite ({v})")));
        }
        Ok(Self { phases, mode })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn mode(&self) -> PhaseMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Same profile with a common phase offset added to every element.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            phases: self.phases.iter().map(|p| p + offset).collect(),
            mode: self.mode,
        }
    }

    pub fn check_lattice(&self, lattice: &RisLattice) -> Result<()> {
        if self.phases.len() != lattice.len() {
            return Err(CrbError::InvalidInput(format!(
                "phase profile has {} entries but the lattice has {} elements",
                self.phases.len(),
                lattice.len()
            )));
        }
        Ok(())
    }

    /// Reads one radian value per line (row-major in `(n, m)`). Blank lines
    /// and lines starting with `#` are skipped.
    pub fn from_text(text: &str, lattice: &RisLattice) -> Result<Self> {
        let mut phases = Vec::with_capacity(lattice.len());
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let v: f64 = t.parse().map_err(|e| {
                CrbError::InvalidInput(format!("phase file line {}: {e} ({t:?})", lineno + 1))
            })?;
            phases.push(v);
        }
        let cfg = Self::new(phases, PhaseMode::External)?;
        cfg.check_lattice(lattice)?;
        Ok(cfg)
    }

    pub fn load(path: &Path, lattice: &RisLattice) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CrbError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text, lattice)
    }
}

/// `Phi_nm = 2 pi f0 (|x_nm - x_T| + |x_R - x_nm|) / c`.
pub fn configure_nf(pose: &Pose, lattice: &RisLattice, terminal: &TerminalGeometry, f0: f64) -> Result<PhaseConfig> {
    let xt = terminal.tx_phase_center();
    let xr = terminal.rx_phase_center();
    let k = 2.0 * PI * f0 / SPEED_OF_LIGHT;
    let phases = element_positions(pose, lattice)
        .iter()
        .map(|e| k * ((e - xt).norm() + (xr - e).norm()))
        .collect();
    PhaseConfig::new(phases, PhaseMode::NearField)
}

/// `Phi_nm = 2 pi f0 (dtau_in_nm + dtau_out_nm)`: cancels the planar excess
/// phases at the carrier.
pub fn configure_ff(pose: &Pose, lattice: &RisLattice, terminal: &TerminalGeometry, f0: f64) -> Result<PhaseConfig> {
    let ff = ff_decomposition(pose, lattice, terminal)?;
    let phases = ff
        .dtau_in_nm
        .iter()
        .zip(&ff.dtau_out_nm)
        .map(|(a, b)| 2.0 * PI * f0 * (a + b))
        .collect();
    PhaseConfig::new(phases, PhaseMode::FarField)
}
