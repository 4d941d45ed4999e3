//! Frames, rotations, element lattices and coordinate transforms.
//!
//! The RIS local frame is obtained from the global one by the Euler rotation
//! `Q = Qz(psi_z) Qy(psi_y) Qx(psi_x)`. At zero orientation the two frames
//! coincide and the RIS lies in the global xy-plane with its normal along +z.

use crate::error::{CrbError, Result};
use crate::{Mat3, Vec3};

/// Roll, pitch and yaw in radians. Values are kept as given (no wrapping).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub psi_x: f64,
    pub psi_y: f64,
    pub psi_z: f64,
}

impl EulerAngles {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(psi_x: f64, psi_y: f64, psi_z: f64) -> Self {
        Self { psi_x, psi_y, psi_z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.psi_x, self.psi_y, self.psi_z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.psi_x.is_finite() && self.psi_y.is_finite() && self.psi_z.is_finite()
    }
}

/// RIS position (global frame, meters) and orientation: the six estimands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: EulerAngles,
}

impl Pose {
    pub fn new(position: Vec3, orientation: EulerAngles) -> Self {
        Self {
            position,
            orientation,
        }
    }

    /// Parameter vector in the fixed order (x, y, z, psi_x, psi_y, psi_z).
    pub fn to_params(&self) -> [f64; 6] {
        let p = &self.position;
        let o = &self.orientation;
        [p.x, p.y, p.z, o.psi_x, o.psi_y, o.psi_z]
    }

    pub fn from_params(t: [f64; 6]) -> Self {
        Self::new(
            Vec3::new(t[0], t[1], t[2]),
            EulerAngles::new(t[3], t[4], t[5]),
        )
    }

    pub fn rotation(&self) -> Mat3 {
        rotation_matrix(self.orientation)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.iter().all(|v| v.is_finite()) || !self.orientation.is_finite() {
            return Err(CrbError::InvalidInput(format!(
                "pose must be finite, got {:?}",
                self
            )));
        }
        Ok(())
    }
}

/// Planar N x M lattice of RIS elements with spacing `spacing` (meters) and
/// per-element radar cross section `gamma_elem` (square meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisLattice {
    pub n_count: usize,
    pub m_count: usize,
    pub spacing: f64,
    pub gamma_elem: f64,
}

impl RisLattice {
    pub fn new(n_count: usize, m_count: usize, spacing: f64, gamma_elem: f64) -> Result<Self> {
        for (key, v) in [("n_count", n_count), ("m_count", m_count)] {
            if v == 0 || v % 2 != 0 {
                return Err(CrbError::InvalidInput(format!(
                    "{key} must be a positive even integer, got {v}"
                )));
            }
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(CrbError::InvalidInput(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if !(gamma_elem > 0.0 && gamma_elem.is_finite()) {
            return Err(CrbError::InvalidInput(format!(
                "gamma_elem must be positive, got {gamma_elem}"
            )));
        }
        Ok(Self {
            n_count,
            m_count,
            spacing,
            gamma_elem,
        })
    }

    /// Lattice whose element cross section is the flat-plate value
    /// `4 pi d^4 / lambda^2` of a d x d plate at normal incidence.
    pub fn with_flat_plate_rcs(
        n_count: usize,
        m_count: usize,
        spacing: f64,
        wavelength: f64,
    ) -> Result<Self> {
        Self::new(
            n_count,
            m_count,
            spacing,
            flat_plate_rcs(spacing, wavelength),
        )
    }

    /// Square lattice covering a side length: `N = M = 2 floor(side / 2d)`.
    pub fn from_side(side: f64, spacing: f64, wavelength: f64) -> Result<Self> {
        let n = elements_for_side(side, spacing);
        if n == 0 {
            return Err(CrbError::InvalidInput(format!(
                "side {side} m is smaller than two element spacings ({} m)",
                2.0 * spacing
            )));
        }
        Self::with_flat_plate_rcs(n, n, spacing, wavelength)
    }

    pub fn len(&self) -> usize {
        self.n_count * self.m_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Signed lattice indices `(n, m)` in row-major order, `n` outer.
    pub fn indices(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (hn, hm) = (self.n_count as i64 / 2, self.m_count as i64 / 2);
        (-hn..hn).flat_map(move |n| (-hm..hm).map(move |m| (n, m)))
    }

    /// Local element positions `p_nm = [n d, m d, 0]`.
    pub fn local_positions(&self) -> Vec<Vec3> {
        let d = self.spacing;
        self.indices()
            .map(|(n, m)| Vec3::new(n as f64 * d, m as f64 * d, 0.0))
            .collect()
    }

    /// Flat index of `(n, m)`, or `None` outside the lattice.
    pub fn flat_index(&self, n: i64, m: i64) -> Option<usize> {
        let (hn, hm) = (self.n_count as i64 / 2, self.m_count as i64 / 2);
        if n < -hn || n >= hn || m < -hm || m >= hm {
            return None;
        }
        Some(((n + hn) as usize) * self.m_count + (m + hm) as usize)
    }

    /// Physical side lengths of the aperture along local x and y.
    pub fn aperture(&self) -> (f64, f64) {
        (
            self.n_count as f64 * self.spacing,
            self.m_count as f64 * self.spacing,
        )
    }
}

pub fn flat_plate_rcs(spacing: f64, wavelength: f64) -> f64 {
    4.0 * std::f64::consts::PI * spacing.powi(4) / (wavelength * wavelength)
}

/// Even element count per side for a given physical side length.
pub fn elements_for_side(side: f64, spacing: f64) -> usize {
    2 * (side / (2.0 * spacing) + 1e-9).floor().max(0.0) as usize
}

/// Antenna positions of the sensing terminal and the measurement channels.
///
/// Each channel is a `(tx_index, rx_index)` pair; phase centers are the
/// arithmetic means of the antenna positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalGeometry {
    tx_positions: Vec<Vec3>,
    rx_positions: Vec<Vec3>,
    tx_phase_center: Vec3,
    rx_phase_center: Vec3,
    channels: Vec<(usize, usize)>,
}

impl TerminalGeometry {
    pub fn new(
        tx_positions: Vec<Vec3>,
        rx_positions: Vec<Vec3>,
        channels: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if tx_positions.is_empty() || rx_positions.is_empty() {
            return Err(CrbError::InvalidInput(
                "terminal needs at least one Tx and one Rx antenna".into(),
            ));
        }
        if channels.is_empty() {
            return Err(CrbError::InvalidInput(
                "terminal needs at least one channel".into(),
            ));
        }
        if let Some(&(t, r)) = channels
            .iter()
            .find(|&&(t, r)| t >= tx_positions.len() || r >= rx_positions.len())
        {
            return Err(CrbError::InvalidInput(format!(
                "channel ({t}, {r}) references a missing antenna ({} Tx, {} Rx)",
                tx_positions.len(),
                rx_positions.len()
            )));
        }
        if !tx_positions
            .iter()
            .chain(&rx_positions)
            .all(|p| p.iter().all(|v| v.is_finite()))
        {
            return Err(CrbError::InvalidInput(
                "antenna positions must be finite".into(),
            ));
        }
        let tx_phase_center = mean(&tx_positions);
        let rx_phase_center = mean(&rx_positions);
        Ok(Self {
            tx_positions,
            rx_positions,
            tx_phase_center,
            rx_phase_center,
            channels,
        })
    }

    /// One channel per (Tx, Rx) pair, Tx index outer.
    pub fn all_pairs(tx_positions: Vec<Vec3>, rx_positions: Vec<Vec3>) -> Result<Self> {
        let channels = (0..tx_positions.len())
            .flat_map(|t| (0..rx_positions.len()).map(move |r| (t, r)))
            .collect();
        Self::new(tx_positions, rx_positions, channels)
    }

    pub fn tx_positions(&self) -> &[Vec3] {
        &self.tx_positions
    }

    pub fn rx_positions(&self) -> &[Vec3] {
        &self.rx_positions
    }

    pub fn tx_phase_center(&self) -> Vec3 {
        self.tx_phase_center
    }

    pub fn rx_phase_center(&self) -> Vec3 {
        self.rx_phase_center
    }

    pub fn channels(&self) -> &[(usize, usize)] {
        &self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Tx and Rx antenna positions of channel `l`.
    pub fn channel_positions(&self, l: usize) -> (Vec3, Vec3) {
        let (t, r) = self.channels[l];
        (self.tx_positions[t], self.rx_positions[r])
    }

    /// Same terminal rigidly translated by `shift`.
    pub fn translated(&self, shift: Vec3) -> Self {
        Self {
            tx_positions: self.tx_positions.iter().map(|p| p + shift).collect(),
            rx_positions: self.rx_positions.iter().map(|p| p + shift).collect(),
            tx_phase_center: self.tx_phase_center + shift,
            rx_phase_center: self.rx_phase_center + shift,
            channels: self.channels.clone(),
        }
    }

    /// Terminal with the roles of Tx and Rx exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tx_positions: self.rx_positions.clone(),
            rx_positions: self.tx_positions.clone(),
            tx_phase_center: self.rx_phase_center,
            rx_phase_center: self.tx_phase_center,
            channels: self.channels.iter().map(|&(t, r)| (r, t)).collect(),
        }
    }
}

fn mean(points: &[Vec3]) -> Vec3 {
    points.iter().sum::<Vec3>() / points.len() as f64
}

/// Regular `rows x cols` grid of antennas spanned by two unit axes and
/// centred (arithmetic mean) on `center`.
pub fn antenna_grid(center: Vec3, axis_u: Vec3, axis_v: Vec3, rows: usize, cols: usize, spacing: f64) -> Vec<Vec3> {
    let off_u = (rows as f64 - 1.0) / 2.0;
    let off_v = (cols as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for k in 0..cols {
            out.push(
                center
                    + axis_u * ((i as f64 - off_u) * spacing)
                    + axis_v * ((k as f64 - off_v) * spacing),
            );
        }
    }
    out
}

/// Elevation `phi` from local +z in [0, pi] and azimuth `theta` from local
/// +x in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalDirection {
    pub phi: f64,
    pub theta: f64,
}

impl SphericalDirection {
    /// Direction of a nonzero Cartesian vector. `theta` is 0 on the pole.
    pub fn from_vector(v: &Vec3) -> Result<Self> {
        let r = v.norm();
        if !(r > 0.0) || !r.is_finite() {
            return Err(CrbError::Domain(format!(
                "direction of a zero or non-finite vector {v:?}"
            )));
        }
        let phi = (v.z / r).clamp(-1.0, 1.0).acos();
        let theta = if v.x == 0.0 && v.y == 0.0 {
            0.0
        } else {
            v.y.atan2(v.x)
        };
        Ok(Self { phi, theta })
    }
}

/// `Q(gamma) = Qz(psi_z) Qy(psi_y) Qx(psi_x)`, each factor counterclockwise.
pub fn rotation_matrix(gamma: EulerAngles) -> Mat3 {
    rot_z(gamma.psi_z) * rot_y(gamma.psi_y) * rot_x(gamma.psi_x)
}

/// Partial derivatives of [`rotation_matrix`] with respect to psi_x, psi_y
/// and psi_z, in that order.
pub fn rotation_jacobian(gamma: EulerAngles) -> [Mat3; 3] {
    let (qx, qy, qz) = (rot_x(gamma.psi_x), rot_y(gamma.psi_y), rot_z(gamma.psi_z));
    [
        qz * qy * d_rot_x(gamma.psi_x),
        qz * d_rot_y(gamma.psi_y) * qx,
        d_rot_z(gamma.psi_z) * qy * qx,
    ]
}

fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn d_rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn d_rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

fn d_rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// Global positions `x + Q p_nm` of all elements, row-major in `(n, m)`.
pub fn element_positions(pose: &Pose, lattice: &RisLattice) -> Vec<Vec3> {
    let q = pose.rotation();
    lattice
        .local_positions()
        .iter()
        .map(|p| pose.position + q * p)
        .collect()
}

/// Direction of `point` as seen from the RIS, in RIS-local spherical
/// coordinates: `J(Q^T (point - x))`.
pub fn to_local_spherical(pose: &Pose, point: &Vec3) -> Result<SphericalDirection> {
    local_direction(pose, &(point - pose.position))
}

/// Direction of a global-frame vector expressed in the RIS-local frame.
pub fn local_direction(pose: &Pose, v: &Vec3) -> Result<SphericalDirection> {
    SphericalDirection::from_vector(&(pose.rotation().transpose() * v))
}

/// `[sin(phi) cos(theta), sin(phi) sin(theta), cos(phi)]`.
pub fn unit_vector(dir: SphericalDirection) -> Vec3 {
    let (sp, cp) = dir.phi.sin_cos();
    let (st, ct) = dir.theta.sin_cos();
    Vec3::new(sp * ct, sp * st, cp)
}
