//! Fisher information for the pose `theta = (x, y, z, psi_x, psi_y, psi_z)`.
//!
//! `F = (2 / N0) Re{ int_{-B/2}^{B/2} (da/dtheta)^H (da/dtheta) df }`, integrated
//! with Gauss-Legendre quadrature and verified by node doubling.
//!
//! Near-field Jacobians are analytic (exact delays and their gradients).
//! Far-field FIMs use the chain rule through the linearised delays
//! ([`far_field_jacobian`]); [`model_jacobian`] offers the far-field models
//! through Richardson-extrapolated central differences only.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, Matrix3, Matrix6};
use rayon::prelude::*;

use crate::channel::{ff_decomposition, log_path_loss_gradient, spectrum, Band, ForwardModel, ModelVariant, Scene, Wavefront};
use crate::error::{CrbError, Result};
use crate::geometry::{element_positions, rotation_jacobian, Pose, RisLattice, TerminalGeometry};
use crate::linalg;
use crate::{Complex, Mat3, Vec3, SPEED_OF_LIGHT};

const TWO_PI: f64 = 2.0 * PI;
const J: Complex = Complex::new(0.0, 1.0);
const ZERO: Complex = Complex::new(0.0, 0.0);

/// Default central-difference steps (position in m, angles in rad).
pub const FD_STEP_POSITION: f64 = 1e-5;
pub const FD_STEP_ANGLE: f64 = 1e-6;
/// Largest accepted disagreement between successive Richardson estimates.
pub const FD_CONSISTENCY_TOL: f64 = 1e-5;

/// 6x6 Fisher information, ordered (x, y, z, psi_x, psi_y, psi_z).
#[derive(Debug, Clone, PartialEq)]
pub struct Fim {
    matrix: Matrix6<f64>,
}

impl Fim {
    /// Wraps a matrix, replacing it by its symmetric part.
    pub fn from_matrix(matrix: Matrix6<f64>) -> Self {
        Self {
            matrix: (matrix + matrix.transpose()) * 0.5,
        }
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.matrix
    }

    pub fn block_xx(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn block_xg(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 3).into_owned()
    }

    pub fn block_gx(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(3, 0).into_owned()
    }

    pub fn block_gg(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(3, 3).into_owned()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(6, 6, |i, j| self.matrix[(i, j)])
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            matrix: self.matrix * k,
        }
    }

    /// Scaled condition number of the full matrix.
    pub fn condition_number(&self) -> f64 {
        linalg::condition_number(&self.to_dmatrix())
    }

    /// `min eig >= -tol * max eig`.
    pub fn is_psd(&self, tol: f64) -> bool {
        let (min, max) = linalg::eigen_range(&self.to_dmatrix());
        min >= -tol * max.abs()
    }
}

/// Orientation axis of an Euler angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// `da/dtheta` at one frequency: one row of six partials per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelJacobian {
    pub frequency: f64,
    pub rows: Vec<[Complex; 6]>,
}

impl ModelJacobian {
    pub fn zeros(frequency: f64, channels: usize) -> Self {
        Self {
            frequency,
            rows: vec![[ZERO; 6]; channels],
        }
    }

    pub fn column(&self, k: usize) -> Vec<Complex> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    pub fn column_norm(&self, k: usize) -> f64 {
        self.rows.iter().map(|r| r[k].norm_sqr()).sum::<f64>().sqrt()
    }

    /// Per-column relative error `|J_k - R_k| / |R_k|` against a reference,
    /// maximised over the six columns. Columns whose reference is exactly zero
    /// contribute their absolute difference.
    pub fn max_relative_column_error(&self, reference: &ModelJacobian) -> (f64, usize) {
        (0..6)
            .map(|k| {
                let diff = self
                    .rows
                    .iter()
                    .zip(&reference.rows)
                    .map(|(a, b)| (a[k] - b[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let scale = reference.column_norm(k);
                (if scale > 0.0 { diff / scale } else { diff }, k)
            })
            .fold((0.0, 0), |acc, v| if v.0 > acc.0 { v } else { acc })
    }

    /// `Re(J^H J)`, the per-frequency information density before the
    /// `2 / N0` factor.
    pub fn gram(&self) -> Matrix6<f64> {
        let mut g = Matrix6::zeros();
        for row in &self.rows {
            accumulate_gram(&mut g, row, 1.0);
        }
        g
    }
}

fn accumulate_gram(g: &mut Matrix6<f64>, row: &[Complex; 6], weight: f64) {
    for i in 0..6 {
        for j in i..6 {
            let v = weight * (row[i].conj() * row[j]).re;
            g[(i, j)] += v;
            if i != j {
                g[(j, i)] += v;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMethod {
    Analytic,
    FiniteDifference,
}

/// Gauss-Legendre rule with node doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Initial number of nodes.
    pub nodes: usize,
    /// Relative Frobenius change accepted between successive rules.
    pub refinement: f64,
    /// Doubling stops with an error beyond this many nodes.
    pub max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 129,
            refinement: 1e-8,
            max_nodes: 1 << 14,
        }
    }
}

impl QuadratureSpec {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            nodes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(CrbError::InvalidInput(format!(
                "quadrature needs at least 2 nodes, got {}",
                self.nodes
            )));
        }
        if !(self.refinement > 0.0) {
            return Err(CrbError::InvalidInput(format!(
                "quadrature refinement must be positive, got {}",
                self.refinement
            )));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-half, half]`, ascending and
/// exactly symmetric about zero.
pub fn gauss_legendre(k: usize, half: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(k).expect("k >= 1"));
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for i in 0..k / 2 {
        let (xl, wl) = pairs[i];
        let (xr, wr) = pairs[k - 1 - i];
        let x = 0.5 * (xr - xl);
        let w = 0.5 * (wl + wr);
        pairs[i] = (-x, w);
        pairs[k - 1 - i] = (x, w);
    }
    if k % 2 == 1 {
        pairs[k / 2].0 = 0.0;
    }
    pairs.into_iter().map(|(x, w)| (x * half, w * half)).collect()
}

/// Gradients of the exact delays with respect to the RIS position and
/// orientation, row-major by `(channel, element)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayGradients {
    pub num_channels: usize,
    pub num_elements: usize,
    pub d_in_dx: Vec<Vec3>,
    pub d_in_dgamma: Vec<Vec3>,
    pub d_out_dx: Vec<Vec3>,
    pub d_out_dgamma: Vec<Vec3>,
}

impl DelayGradients {
    pub fn index(&self, l: usize, nm: usize) -> usize {
        l * self.num_elements + nm
    }
}

/// `d(Q p_nm)/d gamma` for every element, as three columns.
fn lattice_rotation_columns(pose: &Pose, lattice: &RisLattice) -> Vec<[Vec3; 3]> {
    let dq = rotation_jacobian(pose.orientation);
    lattice
        .local_positions()
        .iter()
        .map(|p| [dq[0] * p, dq[1] * p, dq[2] * p])
        .collect()
}

fn unit_towards(from: &Vec3, to: &Vec3, what: &str) -> Result<(Vec3, f64)> {
    let d = to - from;
    let r = d.norm();
    if r > 0.0 {
        Ok((d / r, r))
    } else {
        Err(CrbError::Domain(format!("{what}: coincident points at {to:?}")))
    }
}

pub fn delay_gradients(pose: &Pose, lattice: &RisLattice, terminal: &TerminalGeometry) -> Result<DelayGradients> {
    let elements = element_positions(pose, lattice);
    let rot = lattice_rotation_columns(pose, lattice);
    let num_channels = terminal.num_channels();
    let n = num_channels * elements.len();
    let mut out = DelayGradients {
        num_channels,
        num_elements: elements.len(),
        d_in_dx: Vec::with_capacity(n),
        d_in_dgamma: Vec::with_capacity(n),
        d_out_dx: Vec::with_capacity(n),
        d_out_dgamma: Vec::with_capacity(n),
    };
    let project = |u: &Vec3, cols: &[Vec3; 3]| Vec3::new(u.dot(&cols[0]), u.dot(&cols[1]), u.dot(&cols[2]));
    for l in 0..num_channels {
        let (xt, xr) = terminal.channel_positions(l);
        for (e, cols) in elements.iter().zip(&rot) {
            let (u_in, _) = unit_towards(&xt, e, "Tx antenna and RIS element")?;
            let (u_out, _) = unit_towards(&xr, e, "Rx antenna and RIS element")?;
            out.d_in_dx.push(u_in / SPEED_OF_LIGHT);
            out.d_in_dgamma.push(project(&u_in, cols) / SPEED_OF_LIGHT);
            out.d_out_dx.push(u_out / SPEED_OF_LIGHT);
            out.d_out_dgamma.push(project(&u_out, cols) / SPEED_OF_LIGHT);
        }
    }
    Ok(out)
}

/// Near-field element sums of one channel at one frequency:
/// `S = sum w`, `S_x = sum w g`, `S_gamma = sum w (g . dQp/dgamma)` with
/// `w = exp(j Phi - j 2 pi (f0 + f) tau)` and `g = c dtau/dx`.
type ChannelSums = [Complex; 7];

struct NearFieldKernel<'a> {
    scene: &'a Scene,
    phases: &'a [f64],
    elements: Vec<Vec3>,
    rot: Vec<[Vec3; 3]>,
}

impl<'a> NearFieldKernel<'a> {
    fn new(scene: &'a Scene, phases: &'a [f64]) -> Result<Self> {
        if phases.len() != scene.lattice.len() {
            return Err(CrbError::InvalidInput(format!(
                "phase profile has {} entries, lattice has {}",
                phases.len(),
                scene.lattice.len()
            )));
        }
        let elements = element_positions(&scene.pose, &scene.lattice);
        let antennas = scene.terminal.tx_positions().iter().chain(scene.terminal.rx_positions());
        for a in antennas {
            if elements.iter().any(|e| e == a) {
                return Err(CrbError::Domain(format!("antenna at {a:?} coincides with a RIS element")));
            }
        }
        Ok(Self {
            scene,
            phases,
            elements,
            rot: lattice_rotation_columns(&scene.pose, &scene.lattice),
        })
    }

    /// Sums of channel `l` at every base-band frequency in `freqs`.
    ///
    /// When `freqs` is symmetric about zero, each `+f/-f` pair shares one
    /// `sin_cos` call.
    fn channel_sums(&self, l: usize, freqs: &[f64]) -> Vec<ChannelSums> {
        let f0 = self.scene.signal.f0;
        let (xt, xr) = self.scene.terminal.channel_positions(l);
        let k = freqs.len();
        let symmetric = (0..k / 2).all(|i| freqs[i] == -freqs[k - 1 - i]) && (k % 2 == 0 || freqs[k / 2] == 0.0);
        let half = if symmetric { k.div_ceil(2) } else { k };
        let mut acc = vec![[ZERO; 7]; k];
        let mut rot_f = vec![ZERO; half];

        for ((e, cols), phi) in self.elements.iter().zip(&self.rot).zip(self.phases) {
            let di = e - xt;
            let do_ = e - xr;
            let ri = di.norm();
            let ro = do_.norm();
            let g = di / ri + do_ / ro;
            let gg = [g.dot(&cols[0]), g.dot(&cols[1]), g.dot(&cols[2])];
            let tau = (ri + ro) / SPEED_OF_LIGHT;
            let base = Complex::cis(phi - TWO_PI * f0 * tau);
            for (i, slot) in rot_f.iter_mut().enumerate() {
                // Upper half of the nodes when symmetric.
                let f = if symmetric { freqs[k - 1 - i] } else { freqs[i] };
                *slot = Complex::cis(-TWO_PI * f * tau);
            }
            let mut add = |idx: usize, w: Complex| {
                let a = &mut acc[idx];
                a[0] += w;
                a[1] += w * g.x;
                a[2] += w * g.y;
                a[3] += w * g.z;
                a[4] += w * gg[0];
                a[5] += w * gg[1];
                a[6] += w * gg[2];
            };
            if symmetric {
                for (i, c) in rot_f.iter().enumerate() {
                    let hi = k - 1 - i;
                    add(hi, base * c);
                    if hi != i {
                        add(i, base * c.conj());
                    }
                }
            } else {
                for (i, c) in rot_f.iter().enumerate() {
                    add(i, base * c);
                }
            }
        }
        acc
    }
}

/// Jacobian rows of the near-field wideband model from the element sums.
fn nf_wideband_row(scene: &Scene, rho: Complex, grad_log_rho: &Vec3, f: f64, s: &ChannelSums) -> [Complex; 6] {
    let g = spectrum(&scene.signal, f);
    let pref = rho * g * (-J * TWO_PI * (scene.signal.f0 + f) / SPEED_OF_LIGHT);
    let amp = rho * g * s[0];
    [
        pref * s[1] + amp * grad_log_rho.x,
        pref * s[2] + amp * grad_log_rho.y,
        pref * s[3] + amp * grad_log_rho.z,
        pref * s[4],
        pref * s[5],
        pref * s[6],
    ]
}

/// Near-field narrowband rows: carrier sums `s0` with the macroscopic
/// base-band delay `tau_0` (gradient `grad_tau0`).
fn nf_narrowband_row(
    scene: &Scene,
    rho: Complex,
    grad_log_rho: &Vec3,
    tau_0: f64,
    grad_tau0: &Vec3,
    f: f64,
    s0: &ChannelSums,
) -> [Complex; 6] {
    let env = rho * spectrum(&scene.signal, f) * Complex::cis(-TWO_PI * f * tau_0);
    let carrier = -J * TWO_PI * scene.signal.f0 / SPEED_OF_LIGHT;
    let baseband = -J * TWO_PI * f;
    let pos = |k: usize, gt: f64, gl: f64| env * (carrier * s0[1 + k] + (baseband * gt + gl) * s0[0]);
    [
        pos(0, grad_tau0.x, grad_log_rho.x),
        pos(1, grad_tau0.y, grad_log_rho.y),
        pos(2, grad_tau0.z, grad_log_rho.z),
        env * carrier * s0[4],
        env * carrier * s0[5],
        env * carrier * s0[6],
    ]
}

fn macroscopic_delay(scene: &Scene) -> (f64, Vec3) {
    let x = scene.pose.position;
    let dt = x - scene.terminal.tx_phase_center();
    let dr = x - scene.terminal.rx_phase_center();
    (
        (dt.norm() + dr.norm()) / SPEED_OF_LIGHT,
        (dt / dt.norm() + dr / dr.norm()) / SPEED_OF_LIGHT,
    )
}

/// Far-field model derivatives by the chain rule.
///
/// The linearised element delay is `T_nm = p_nm . Q^T s / c` with
/// `s = u_T + u_R` the sum of the unit vectors from the Tx and Rx phase
/// centers to the RIS, so only the element sums `S = sum w` and
/// `S_p = sum w p_nm` are needed per frequency.
struct FarFieldKernel {
    f0: f64,
    phases: Vec<f64>,
    local: Vec<Vec3>,
    t_nm: Vec<f64>,
    rho: Complex,
    grad_log_rho: Vec3,
    tau_0: f64,
    grad_tau0: Vec3,
    dtau_l: Vec<f64>,
    grad_dtau_l: Vec<Vec3>,
    /// `dT_nm/dx = dt_dx * p_nm`.
    dt_dx: Mat3,
    /// `dT_nm/dpsi_k = dt_dgamma[k] . p_nm`.
    dt_dgamma: [Vec3; 3],
}

impl FarFieldKernel {
    fn new(scene: &Scene, phases: &[f64]) -> Result<Self> {
        if phases.len() != scene.lattice.len() {
            return Err(CrbError::InvalidInput(format!(
                "phase profile has {} entries, lattice has {}",
                phases.len(),
                scene.lattice.len()
            )));
        }
        let ff = ff_decomposition(&scene.pose, &scene.lattice, &scene.terminal)?;
        let x = scene.pose.position;
        let xt = scene.terminal.tx_phase_center();
        let xr = scene.terminal.rx_phase_center();
        let (u_t, r_t) = unit_towards(&xt, &x, "Tx phase center and RIS")?;
        let (u_r, r_r) = unit_towards(&xr, &x, "Rx phase center and RIS")?;
        let proj_t = (Mat3::identity() - u_t * u_t.transpose()) / r_t;
        let proj_r = (Mat3::identity() - u_r * u_r.transpose()) / r_r;
        let s = u_t + u_r;
        let q = scene.pose.rotation();
        let dq = rotation_jacobian(scene.pose.orientation);

        let grad_dtau_l = (0..scene.terminal.num_channels())
            .map(|l| {
                let (a_t, a_r) = scene.terminal.channel_positions(l);
                -(proj_t * (a_t - xt) + proj_r * (a_r - xr)) / SPEED_OF_LIGHT
            })
            .collect();
        Ok(Self {
            f0: scene.signal.f0,
            phases: phases.to_vec(),
            local: scene.lattice.local_positions(),
            t_nm: ff.dtau_in_nm.iter().zip(&ff.dtau_out_nm).map(|(a, b)| a + b).collect(),
            rho: scene.reflectivity()?.rho,
            grad_log_rho: log_path_loss_gradient(&x, &scene.terminal),
            tau_0: ff.tau_in_0 + ff.tau_out_0,
            grad_tau0: s / SPEED_OF_LIGHT,
            dtau_l: ff.dtau_in_l.iter().zip(&ff.dtau_out_l).map(|(a, b)| a + b).collect(),
            grad_dtau_l,
            dt_dx: (proj_t + proj_r) * q / SPEED_OF_LIGHT,
            dt_dgamma: std::array::from_fn(|k| dq[k].transpose() * s / SPEED_OF_LIGHT),
        })
    }

    /// `beta` and its six partials at angular frequency `w`.
    fn beta(&self, w: f64) -> (Complex, [Complex; 6]) {
        let mut sum = ZERO;
        let mut sum_p = [ZERO; 3];
        for ((phi, t), p) in self.phases.iter().zip(&self.t_nm).zip(&self.local) {
            let e = Complex::cis(phi - w * t);
            sum += e;
            sum_p[0] += e * p.x;
            sum_p[1] += e * p.y;
            sum_p[2] += e * p.z;
        }
        let beta = self.rho * sum;
        let pref = -J * w * self.rho;
        let dot = |v: &[f64; 3]| sum_p[0] * v[0] + sum_p[1] * v[1] + sum_p[2] * v[2];
        let row = |i: usize| [self.dt_dx[(i, 0)], self.dt_dx[(i, 1)], self.dt_dx[(i, 2)]];
        let g = &self.dt_dgamma;
        (
            beta,
            [
                beta * self.grad_log_rho.x + pref * dot(&row(0)),
                beta * self.grad_log_rho.y + pref * dot(&row(1)),
                beta * self.grad_log_rho.z + pref * dot(&row(2)),
                pref * dot(&[g[0].x, g[0].y, g[0].z]),
                pref * dot(&[g[1].x, g[1].y, g[1].z]),
                pref * dot(&[g[2].x, g[2].y, g[2].z]),
            ],
        )
    }

    /// Jacobian rows at base-band frequency `f`. The narrowband model keeps
    /// `beta` and the per-channel offsets at the carrier.
    fn rows(&self, scene: &Scene, band: Band, f: f64) -> Vec<[Complex; 6]> {
        let g = spectrum(&scene.signal, f);
        let w = TWO_PI * (self.f0 + f);
        let w_inner = match band {
            Band::Wideband => w,
            Band::Narrowband => TWO_PI * self.f0,
        };
        let (beta, dbeta) = self.beta(w_inner);
        self.dtau_l
            .iter()
            .zip(&self.grad_dtau_l)
            .map(|(dt, grad_dt)| {
                let env = g * Complex::cis(-w * self.tau_0 - w_inner * dt);
                let delay = |i: usize| -J * (w * self.grad_tau0[i] + w_inner * grad_dt[i]);
                [
                    env * (beta * delay(0) + dbeta[0]),
                    env * (beta * delay(1) + dbeta[1]),
                    env * (beta * delay(2) + dbeta[2]),
                    env * dbeta[3],
                    env * dbeta[4],
                    env * dbeta[5],
                ]
            })
            .collect()
    }
}

/// Chain-rule `da/dtheta` of a far-field model at base-band frequency `f`.
pub fn far_field_jacobian(f: f64, scene: &Scene, phases: &[f64], variant: ModelVariant) -> Result<ModelJacobian> {
    if variant.wavefront != Wavefront::FarField {
        return Err(CrbError::UnsupportedMethod(format!(
            "far-field chain rule requested for {variant}"
        )));
    }
    let kernel = FarFieldKernel::new(scene, phases)?;
    if !scene.signal.in_band(f) {
        return Ok(ModelJacobian::zeros(f, scene.terminal.num_channels()));
    }
    Ok(ModelJacobian {
        frequency: f,
        rows: kernel.rows(scene, variant.band, f),
    })
}

/// Richardson-extrapolated central differences of the forward model.
///
/// Each parameter is perturbed by `h`, `h/2` and `h/4`; the two
/// extrapolants `(4 D(h/2) - D(h)) / 3` and `(4 D(h/4) - D(h/2)) / 3` are
/// compared and the finer one is returned.
pub struct FiniteDifferenceJacobian {
    /// `models[param][step]` = (plus, minus) for steps h, h/2, h/4.
    models: Vec<[(ForwardModel, ForwardModel); 3]>,
    steps: [f64; 6],
    channels: usize,
}

impl FiniteDifferenceJacobian {
    pub fn new(scene: &Scene, phases: &[f64], variant: ModelVariant, step_position: f64, step_angle: f64) -> Result<Self> {
        let base = scene.pose.to_params();
        let steps = [step_position, step_position, step_position, step_angle, step_angle, step_angle];
        let mut models = Vec::with_capacity(6);
        for (p, &h) in steps.iter().enumerate() {
            let build = |delta: f64| -> Result<ForwardModel> {
                let mut t = base;
                t[p] += delta;
                ForwardModel::new(&scene.with_pose(Pose::from_params(t)), phases, variant)
            };
            models.push([
                (build(h)?, build(-h)?),
                (build(h / 2.0)?, build(-h / 2.0)?),
                (build(h / 4.0)?, build(-h / 4.0)?),
            ]);
        }
        Ok(Self {
            models,
            steps,
            channels: scene.terminal.num_channels(),
        })
    }

    /// Jacobian at `f` and the worst relative disagreement between the two
    /// Richardson extrapolants over the six columns.
    pub fn at(&self, f: f64) -> (ModelJacobian, f64) {
        let (jac, d) = self.at_columns(f);
        (jac, d.iter().copied().fold(0.0, f64::max))
    }

    /// As [`Self::at`], with the disagreement of each column.
    pub fn at_columns(&self, f: f64) -> (ModelJacobian, [f64; 6]) {
        let mut jac = ModelJacobian::zeros(f, self.channels);
        let mut worst = [0.0; 6];
        for (p, pairs) in self.models.iter().enumerate() {
            let d: Vec<Vec<Complex>> = pairs
                .iter()
                .enumerate()
                .map(|(s, (plus, minus))| {
                    let h = self.steps[p] / f64::from(1u32 << s);
                    plus.evaluate(f)
                        .iter()
                        .zip(minus.evaluate(f))
                        .map(|(a, b)| (a - b) / (2.0 * h))
                        .collect()
                })
                .collect();
            let mut diff2 = 0.0;
            let mut norm2 = 0.0;
            for l in 0..self.channels {
                let r1 = (4.0 * d[1][l] - d[0][l]) / 3.0;
                let r2 = (4.0 * d[2][l] - d[1][l]) / 3.0;
                diff2 += (r1 - r2).norm_sqr();
                norm2 += r2.norm_sqr();
                jac.rows[l][p] = r2;
            }
            if norm2 > 0.0 {
                worst[p] = (diff2 / norm2).sqrt();
            }
        }
        (jac, worst)
    }
}

/// `da/dtheta` at a single base-band frequency.
///
/// `Analytic` is available for the near-field wavefront only.
pub fn model_jacobian(
    f: f64,
    scene: &Scene,
    phases: &[f64],
    variant: ModelVariant,
    method: JacobianMethod,
) -> Result<ModelJacobian> {
    let channels = scene.terminal.num_channels();
    if !scene.signal.in_band(f) {
        return Ok(ModelJacobian::zeros(f, channels));
    }
    match method {
        JacobianMethod::Analytic => {
            if variant.wavefront == Wavefront::FarField {
                return Err(CrbError::UnsupportedMethod(format!(
                    "analytic Jacobian is only implemented for the near-field wavefront, not {variant}"
                )));
            }
            let kernel = NearFieldKernel::new(scene, phases)?;
            let rho = scene.reflectivity()?.rho;
            let grad_log_rho = log_path_loss_gradient(&scene.pose.position, &scene.terminal);
            let rows = match variant.band {
                Band::Wideband => (0..channels)
                    .map(|l| nf_wideband_row(scene, rho, &grad_log_rho, f, &kernel.channel_sums(l, &[f])[0]))
                    .collect(),
                Band::Narrowband => {
                    let (tau_0, grad_tau0) = macroscopic_delay(scene);
                    (0..channels)
                        .map(|l| {
                            let s0 = kernel.channel_sums(l, &[0.0])[0];
                            nf_narrowband_row(scene, rho, &grad_log_rho, tau_0, &grad_tau0, f, &s0)
                        })
                        .collect()
                }
            };
            Ok(ModelJacobian { frequency: f, rows })
        }
        JacobianMethod::FiniteDifference => {
            let fd = FiniteDifferenceJacobian::new(scene, phases, variant, FD_STEP_POSITION, FD_STEP_ANGLE)?;
            let (jac, disagreement) = fd.at(f);
            if disagreement > FD_CONSISTENCY_TOL {
                return Err(CrbError::FiniteDifference {
                    disagreement,
                    tolerance: FD_CONSISTENCY_TOL,
                });
            }
            Ok(jac)
        }
    }
}

/// Result of [`assemble_fim`]: the converged matrix, the number of nodes of
/// the accepted rule and the relative change against the previous rule.
#[derive(Debug, Clone)]
pub struct FimAssembly {
    pub fim: Fim,
    pub nodes: usize,
    pub relative_change: f64,
}

/// FIM with a fixed `nodes`-point Gauss-Legendre rule over the band.
pub fn integrate_fim(scene: &Scene, phases: &[f64], variant: ModelVariant, nodes: usize) -> Result<Fim> {
    scene.validate()?;
    let rule = gauss_legendre(nodes, 0.5 * scene.signal.bandwidth);
    let freqs: Vec<f64> = rule.iter().map(|&(f, _)| f).collect();
    let weights: Vec<f64> = rule.iter().map(|&(_, w)| w).collect();
    let channels = scene.terminal.num_channels();

    let total: Matrix6<f64> = match (variant.wavefront, variant.band) {
        (Wavefront::NearField, band) => {
            let kernel = NearFieldKernel::new(scene, phases)?;
            let rho = scene.reflectivity()?.rho;
            let grad_log_rho = log_path_loss_gradient(&scene.pose.position, &scene.terminal);
            let (tau_0, grad_tau0) = macroscopic_delay(scene);
            let per_channel: Vec<Matrix6<f64>> = (0..channels)
                .into_par_iter()
                .map(|l| {
                    let mut g = Matrix6::zeros();
                    match band {
                        Band::Wideband => {
                            let sums = kernel.channel_sums(l, &freqs);
                            for ((f, w), s) in freqs.iter().zip(&weights).zip(&sums) {
                                let row = nf_wideband_row(scene, rho, &grad_log_rho, *f, s);
                                accumulate_gram(&mut g, &row, *w);
                            }
                        }
                        Band::Narrowband => {
                            let s0 = kernel.channel_sums(l, &[0.0])[0];
                            for (f, w) in freqs.iter().zip(&weights) {
                                let row = nf_narrowband_row(scene, rho, &grad_log_rho, tau_0, &grad_tau0, *f, &s0);
                                accumulate_gram(&mut g, &row, *w);
                            }
                        }
                    }
                    g
                })
                .collect();
            per_channel.iter().fold(Matrix6::zeros(), |a, b| a + b)
        }
        (Wavefront::FarField, band) => {
            let kernel = FarFieldKernel::new(scene, phases)?;
            let per_node: Vec<Matrix6<f64>> = freqs
                .par_iter()
                .zip(&weights)
                .map(|(f, w)| {
                    let mut g = Matrix6::zeros();
                    for row in kernel.rows(scene, band, *f) {
                        accumulate_gram(&mut g, &row, *w);
                    }
                    g
                })
                .collect();
            per_node.iter().fold(Matrix6::zeros(), |a, b| a + b)
        }
    };
    Ok(Fim::from_matrix(total * (2.0 / scene.signal.noise_psd)))
}

fn to_array(m: &Matrix6<f64>) -> [[f64; 6]; 6] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

/// FIM with Gauss-Legendre node doubling (`K -> 2K - 1`) until the relative
/// Frobenius change drops below `quadrature.refinement`.
pub fn assemble_fim(scene: &Scene, phases: &[f64], variant: ModelVariant, quadrature: &QuadratureSpec) -> Result<FimAssembly> {
    quadrature.validate()?;
    let mut nodes = quadrature.nodes;
    let mut prev = integrate_fim(scene, phases, variant, nodes)?;
    loop {
        let next_nodes = 2 * nodes - 1;
        if next_nodes > quadrature.max_nodes + 1 {
            return Err(CrbError::NonConvergent {
                nodes,
                relative_change: f64::NAN,
                tolerance: quadrature.refinement,
                previous: Box::new(to_array(prev.matrix())),
                last: Box::new(to_array(prev.matrix())),
            });
        }
        let next = integrate_fim(scene, phases, variant, next_nodes)?;
        let change = (next.matrix() - prev.matrix()).norm() / next.matrix().norm();
        if change < quadrature.refinement {
            return Ok(FimAssembly {
                fim: next,
                nodes: next_nodes,
                relative_change: change,
            });
        }
        if 2 * next_nodes - 1 > quadrature.max_nodes + 1 {
            return Err(CrbError::NonConvergent {
                nodes: next_nodes,
                relative_change: change,
                tolerance: quadrature.refinement,
                previous: Box::new(to_array(prev.matrix())),
                last: Box::new(to_array(next.matrix())),
            });
        }
        prev = next;
        nodes = next_nodes;
    }
}

/// `F / 2^e` with `e = floor(log2(trace F))`. Dividing by a power of two is
/// exact, so `F` and `F / 2` normalize to the same matrix bit for bit and the
/// bounds below scale exactly with the noise level.
fn power_of_two_normalized(fim: &Fim) -> (Matrix6<f64>, f64) {
    let trace = fim.matrix().trace();
    if !(trace > 0.0 && trace.is_finite()) {
        return (*fim.matrix(), 1.0);
    }
    let scale = 2f64.powi(trace.log2().floor() as i32);
    (fim.matrix() / scale, scale)
}

/// Position error bound `sqrt(trace([F^-1]_xx) / 3)`; with a known
/// orientation only `F_xx` is inverted.
pub fn peb(fim: &Fim, known_orientation: bool) -> Result<f64> {
    let (m, scale) = power_of_two_normalized(fim);
    let crb = if known_orientation {
        linalg::invert_spd(&DMatrix::from_fn(3, 3, |i, j| m[(i, j)]))?.inverse
    } else {
        linalg::marginal_crb(&DMatrix::from_fn(6, 6, |i, j| m[(i, j)]), &[0, 1, 2])?.inverse
    };
    Ok((crb.trace() / 3.0 / scale).sqrt())
}

/// Orientation error bound of one Euler angle; with a known position only
/// `F_gamma_gamma` is inverted.
pub fn oeb(fim: &Fim, axis: Axis, known_position: bool) -> Result<f64> {
    let k = axis.index();
    let (m, scale) = power_of_two_normalized(fim);
    let var = if known_position {
        linalg::invert_spd(&DMatrix::from_fn(3, 3, |i, j| m[(3 + i, 3 + j)]))?.inverse[(k, k)]
    } else {
        linalg::marginal_crb(&DMatrix::from_fn(6, 6, |i, j| m[(i, j)]), &[3 + k])?.inverse[(0, 0)]
    };
    Ok((var / scale).sqrt())
}

/// RMS bandwidth of a flat spectrum around the carrier: `sqrt(f0^2 + B^2 / 12)`.
pub fn effective_bandwidth(f0: f64, bandwidth: f64) -> f64 {
    (f0 * f0 + bandwidth * bandwidth / 12.0).sqrt()
}
