//! Delays, radar-equation path loss, transmit spectrum, RIS reflection
//! coefficient and the noiseless per-channel model vector `a(f, theta | Phi)`.
//!
//! Frequencies `f` are base-band offsets from the carrier, in Hz.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{CrbError, Result};
use crate::geometry::{self, local_direction, Pose, RisLattice, SphericalDirection, TerminalGeometry};
use crate::{Complex, Vec3, SPEED_OF_LIGHT};

const TWO_PI: f64 = 2.0 * PI;

/// Carrier, band, power and noise description of the sensing signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    /// Carrier frequency, Hz.
    pub f0: f64,
    /// Occupied bandwidth, Hz.
    pub bandwidth: f64,
    /// Transmit power, W.
    pub tx_power: f64,
    /// One-sided noise power spectral density, W/Hz.
    pub noise_psd: f64,
    /// Observation time, s. Signal energy is `tx_power * integration_time`.
    pub integration_time: f64,
}

impl SignalSpec {
    pub const DEFAULT_INTEGRATION_TIME: f64 = 1e-3;

    pub fn new(
        f0: f64,
        bandwidth: f64,
        tx_power: f64,
        noise_psd: f64,
        integration_time: f64,
    ) -> Result<Self> {
        let s = Self {
            f0,
            bandwidth,
            tx_power,
            noise_psd,
            integration_time,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("f0", self.f0 > 0.0),
            ("bandwidth", self.bandwidth > 0.0 && self.bandwidth < 2.0 * self.f0),
            ("tx_power", self.tx_power > 0.0),
            ("noise_psd", self.noise_psd > 0.0),
            ("integration_time", self.integration_time > 0.0),
        ];
        for (key, ok) in checks {
            if !ok {
                return Err(CrbError::InvalidInput(format!(
                    "signal.{key} out of range in {self:?}"
                )));
            }
        }
        if ![self.f0, self.bandwidth, self.tx_power, self.noise_psd, self.integration_time]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(CrbError::InvalidInput(format!("non-finite signal parameter in {self:?}")));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f0
    }

    pub fn energy(&self) -> f64 {
        self.tx_power * self.integration_time
    }

    pub fn with_bandwidth(mut self, bandwidth: f64) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn in_band(&self, f: f64) -> bool {
        f.abs() <= 0.5 * self.bandwidth
    }
}

/// `10^((dBm - 30) / 10)`: dBm to W (or dBm/Hz to W/Hz).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wavefront {
    /// Exact spherical wavefront: per-element, per-antenna delays.
    NearField,
    /// Planar wavefront: delays linearised around the phase centers.
    FarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    /// RIS response evaluated at every frequency of the band.
    Wideband,
    /// RIS response frozen at the carrier.
    Narrowband,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelVariant {
    pub wavefront: Wavefront,
    pub band: Band,
}

impl ModelVariant {
    pub const NF_WB: Self = Self::new(Wavefront::NearField, Band::Wideband);
    pub const NF_NB: Self = Self::new(Wavefront::NearField, Band::Narrowband);
    pub const FF_WB: Self = Self::new(Wavefront::FarField, Band::Wideband);
    pub const FF_NB: Self = Self::new(Wavefront::FarField, Band::Narrowband);
    pub const ALL: [Self; 4] = [Self::NF_WB, Self::NF_NB, Self::FF_WB, Self::FF_NB];

    pub const fn new(wavefront: Wavefront, band: Band) -> Self {
        Self { wavefront, band }
    }

    /// Short label such as `nf-wb`.
    pub fn label(&self) -> &'static str {
        match (self.wavefront, self.band) {
            (Wavefront::NearField, Band::Wideband) => "nf-wb",
            (Wavefront::NearField, Band::Narrowband) => "nf-nb",
            (Wavefront::FarField, Band::Wideband) => "ff-wb",
            (Wavefront::FarField, Band::Narrowband) => "ff-nb",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.label() == s)
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for Wavefront {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wavefront::NearField => "near-field",
            Wavefront::FarField => "far-field",
        })
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Wideband => "wideband",
            Band::Narrowband => "narrowband",
        })
    }
}

/// The physical setup: signal, terminal, RIS lattice and its true pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub signal: SignalSpec,
    pub terminal: TerminalGeometry,
    pub lattice: RisLattice,
    pub pose: Pose,
    /// Residual phase `delta` of the reflectivity, radians (known, fixed).
    pub residual_phase: f64,
}

impl Scene {
    pub fn new(signal: SignalSpec, terminal: TerminalGeometry, lattice: RisLattice, pose: Pose) -> Self {
        Self {
            signal,
            terminal,
            lattice,
            pose,
            residual_phase: 0.0,
        }
    }

    pub fn with_pose(&self, pose: Pose) -> Self {
        Self { pose, ..self.clone() }
    }

    /// Checks signal ranges and that no antenna coincides with the RIS
    /// phase center or any element.
    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.pose.validate()?;
        let elements = geometry::element_positions(&self.pose, &self.lattice);
        let centers = [self.terminal.tx_phase_center(), self.terminal.rx_phase_center()];
        let antennas = self
            .terminal
            .tx_positions()
            .iter()
            .chain(self.terminal.rx_positions())
            .chain(centers.iter());
        for a in antennas {
            if (a - self.pose.position).norm() == 0.0 || elements.iter().any(|e| (a - e).norm() == 0.0) {
                return Err(CrbError::Domain(format!(
                    "antenna at {a:?} coincides with the RIS"
                )));
            }
        }
        Ok(())
    }

    pub fn reflectivity(&self) -> Result<Reflectivity> {
        let mut r = path_loss(&self.pose, &self.terminal, &self.lattice, &self.signal)?;
        r.residual_phase = self.residual_phase;
        r.rho = Complex::from_polar(r.rho.norm(), self.residual_phase);
        Ok(r)
    }
}

/// Exact element delays, `L x NM`, row-major by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDelays {
    pub num_channels: usize,
    pub num_elements: usize,
    /// Tx antenna to element, s.
    pub tau_in: Vec<f64>,
    /// Element to Rx antenna, s.
    pub tau_out: Vec<f64>,
}

impl ExactDelays {
    pub fn tau_in(&self, l: usize, nm: usize) -> f64 {
        self.tau_in[l * self.num_elements + nm]
    }

    pub fn tau_out(&self, l: usize, nm: usize) -> f64 {
        self.tau_out[l * self.num_elements + nm]
    }

    pub fn round_trip(&self, l: usize, nm: usize) -> f64 {
        self.tau_in(l, nm) + self.tau_out(l, nm)
    }
}

/// Planar-wavefront decomposition of the delays into a macroscopic part,
/// a terminal excess per channel and an RIS excess per element.
///
/// The RIS directions `xi_in` / `xi_out` are the local-frame directions
/// of propagation from the Tx phase center to the RIS and from the Rx
/// phase center to the RIS, so that `p_nm . u(xi) / c` is the extra path of
/// element `(n, m)`. `zeta_t` / `zeta_r` are the same directions in the
/// global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldDelays {
    pub tau_in_0: f64,
    pub tau_out_0: f64,
    pub dtau_in_l: Vec<f64>,
    pub dtau_out_l: Vec<f64>,
    pub dtau_in_nm: Vec<f64>,
    pub dtau_out_nm: Vec<f64>,
    pub xi_in: SphericalDirection,
    pub xi_out: SphericalDirection,
    pub zeta_t: SphericalDirection,
    pub zeta_r: SphericalDirection,
}

impl FarFieldDelays {
    /// Linearised round-trip delay of channel `l` through element `nm`.
    pub fn recomposed(&self, l: usize, nm: usize) -> (f64, f64) {
        (
            self.tau_in_0 + self.dtau_in_l[l] + self.dtau_in_nm[nm],
            self.tau_out_0 + self.dtau_out_l[l] + self.dtau_out_nm[nm],
        )
    }
}

fn distance(a: &Vec3, b: &Vec3, what: &str) -> Result<f64> {
    let r = (a - b).norm();
    if r > 0.0 {
        Ok(r)
    } else {
        Err(CrbError::Domain(format!("{what}: coincident points at {a:?}")))
    }
}

pub fn exact_delays(pose: &Pose, lattice: &RisLattice, terminal: &TerminalGeometry) -> Result<ExactDelays> {
    let elements = geometry::element_positions(pose, lattice);
    let num_elements = elements.len();
    let num_channels = terminal.num_channels();
    let mut tau_in = Vec::with_capacity(num_channels * num_elements);
    let mut tau_out = Vec::with_capacity(num_channels * num_elements);
    for l in 0..num_channels {
        let (xt, xr) = terminal.channel_positions(l);
        for e in &elements {
            tau_in.push(distance(e, &xt, "Tx antenna and RIS element")? / SPEED_OF_LIGHT);
            tau_out.push(distance(&xr, e, "Rx antenna and RIS element")? / SPEED_OF_LIGHT);
        }
    }
    Ok(ExactDelays {
        num_channels,
        num_elements,
        tau_in,
        tau_out,
    })
}

/// Planar-RIS excess delay `(d / c)(n sin(phi) cos(theta) + m sin(phi) sin(theta))`.
pub fn excess_delay(dir: SphericalDirection, n: i64, m: i64, spacing: f64) -> f64 {
    let sp = dir.phi.sin();
    let (st, ct) = dir.theta.sin_cos();
    spacing / SPEED_OF_LIGHT * (n as f64 * sp * ct + m as f64 * sp * st)
}

pub fn ff_decomposition(pose: &Pose, lattice: &RisLattice, terminal: &TerminalGeometry) -> Result<FarFieldDelays> {
    let x = pose.position;
    let xt = terminal.tx_phase_center();
    let xr = terminal.rx_phase_center();
    let r_in = distance(&x, &xt, "Tx phase center and RIS")?;
    let r_out = distance(&xr, &x, "Rx phase center and RIS")?;
    let u_t = (x - xt) / r_in;
    let u_r = (x - xr) / r_out;

    let (dtau_in_l, dtau_out_l) = (0..terminal.num_channels())
        .map(|l| {
            let (a_t, a_r) = terminal.channel_positions(l);
            (
                -(a_t - xt).dot(&u_t) / SPEED_OF_LIGHT,
                -(a_r - xr).dot(&u_r) / SPEED_OF_LIGHT,
            )
        })
        .unzip();

    let xi_in = local_direction(pose, &(x - xt))?;
    let xi_out = local_direction(pose, &(x - xr))?;
    let d = lattice.spacing;
    let (dtau_in_nm, dtau_out_nm) = lattice
        .indices()
        .map(|(n, m)| (excess_delay(xi_in, n, m, d), excess_delay(xi_out, n, m, d)))
        .unzip();

    Ok(FarFieldDelays {
        tau_in_0: r_in / SPEED_OF_LIGHT,
        tau_out_0: r_out / SPEED_OF_LIGHT,
        dtau_in_l,
        dtau_out_l,
        dtau_in_nm,
        dtau_out_nm,
        xi_in,
        xi_out,
        zeta_t: SphericalDirection::from_vector(&u_t)?,
        zeta_r: SphericalDirection::from_vector(&u_r)?,
    })
}

/// Complex reflectivity `rho` (path loss and residual phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflectivity {
    pub rho: Complex,
    pub residual_phase: f64,
}

/// Radar-equation amplitude
/// `|rho| = sqrt(c^2 Gamma / ((4 pi)^3 f0^2 r_T^2 r_R^2))` with zero residual phase.
pub fn path_loss(
    pose: &Pose,
    terminal: &TerminalGeometry,
    lattice: &RisLattice,
    signal: &SignalSpec,
) -> Result<Reflectivity> {
    let r_t = distance(&pose.position, &terminal.tx_phase_center(), "Tx phase center and RIS")?;
    let r_r = distance(&terminal.rx_phase_center(), &pose.position, "Rx phase center and RIS")?;
    let mag2 = SPEED_OF_LIGHT * SPEED_OF_LIGHT * lattice.gamma_elem
        / ((4.0 * PI).powi(3) * signal.f0 * signal.f0 * r_t * r_t * r_r * r_r);
    Ok(Reflectivity {
        rho: Complex::new(mag2.sqrt(), 0.0),
        residual_phase: 0.0,
    })
}

/// Gradient of `log|rho|` with respect to the RIS position.
pub fn log_path_loss_gradient(position: &Vec3, terminal: &TerminalGeometry) -> Vec3 {
    let dt = position - terminal.tx_phase_center();
    let dr = position - terminal.rx_phase_center();
    -dt / dt.norm_squared() - dr / dr.norm_squared()
}

/// Flat transmit spectrum: `|G(f)|^2 = E / B` in band, zero outside.
pub fn spectrum(signal: &SignalSpec, f: f64) -> Complex {
    if signal.in_band(f) {
        Complex::new((signal.energy() / signal.bandwidth).sqrt(), 0.0)
    } else {
        Complex::new(0.0, 0.0)
    }
}

/// `beta(f | Phi) = rho sum_nm exp(j Phi_nm) exp(-j 2 pi (f0 + f)(dtau_in_nm + dtau_out_nm))`.
pub fn reflection_coefficient(f: f64, f0: f64, phases: &[f64], ff: &FarFieldDelays, rho: Complex) -> Complex {
    let w = TWO_PI * (f0 + f);
    let sum: Complex = phases
        .iter()
        .zip(ff.dtau_in_nm.iter().zip(&ff.dtau_out_nm))
        .map(|(phi, (ti, to))| Complex::cis(phi - w * (ti + to)))
        .sum();
    rho * sum
}

/// Precomputed forward model for one scene, phase profile and variant.
///
/// Construction does the per-element geometry once; [`ForwardModel::evaluate`]
/// is then cheap for narrowband and far-field variants.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    variant: ModelVariant,
    signal: SignalSpec,
    rho: Complex,
    tau_0: f64,
    kind: ModelKind,
}

#[derive(Debug, Clone)]
enum ModelKind {
    NearWide {
        phases: Vec<f64>,
        delays: ExactDelays,
    },
    /// Per-channel element sums frozen at the carrier.
    NearNarrow { carrier_sums: Vec<Complex> },
    FarWide {
        phases: Vec<f64>,
        ff: FarFieldDelays,
    },
    FarNarrow {
        ff: FarFieldDelays,
        beta0: Complex,
    },
}

impl ForwardModel {
    pub fn new(scene: &Scene, phases: &[f64], variant: ModelVariant) -> Result<Self> {
        if phases.len() != scene.lattice.len() {
            return Err(CrbError::InvalidInput(format!(
                "phase profile has {} entries, lattice has {}",
                phases.len(),
                scene.lattice.len()
            )));
        }
        let rho = scene.reflectivity()?.rho;
        let f0 = scene.signal.f0;
        let ff = ff_decomposition(&scene.pose, &scene.lattice, &scene.terminal)?;
        let tau_0 = ff.tau_in_0 + ff.tau_out_0;
        let kind = match (variant.wavefront, variant.band) {
            (Wavefront::NearField, Band::Wideband) => ModelKind::NearWide {
                phases: phases.to_vec(),
                delays: exact_delays(&scene.pose, &scene.lattice, &scene.terminal)?,
            },
            (Wavefront::NearField, Band::Narrowband) => {
                let delays = exact_delays(&scene.pose, &scene.lattice, &scene.terminal)?;
                let carrier_sums = (0..delays.num_channels)
                    .map(|l| near_field_sum(phases, &delays, l, f0))
                    .collect();
                ModelKind::NearNarrow { carrier_sums }
            }
            (Wavefront::FarField, Band::Wideband) => ModelKind::FarWide {
                phases: phases.to_vec(),
                ff,
            },
            (Wavefront::FarField, Band::Narrowband) => {
                let beta0 = reflection_coefficient(0.0, f0, phases, &ff, rho);
                ModelKind::FarNarrow { ff, beta0 }
            }
        };
        Ok(Self {
            variant,
            signal: scene.signal,
            rho,
            tau_0,
            kind,
        })
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    /// Noiseless observation `a(f)`, one entry per channel. Zero out of band.
    pub fn evaluate(&self, f: f64) -> Vec<Complex> {
        let g = spectrum(&self.signal, f);
        let f0 = self.signal.f0;
        match &self.kind {
            ModelKind::NearWide { phases, delays } => (0..delays.num_channels)
                .map(|l| self.rho * g * near_field_sum(phases, delays, l, f0 + f))
                .collect(),
            ModelKind::NearNarrow { carrier_sums } => {
                let envelope = self.rho * g * Complex::cis(-TWO_PI * f * self.tau_0);
                carrier_sums.iter().map(|s| envelope * s).collect()
            }
            ModelKind::FarWide { phases, ff } => {
                let beta = reflection_coefficient(f, f0, phases, ff, self.rho);
                let w = TWO_PI * (f0 + f);
                ff.dtau_in_l
                    .iter()
                    .zip(&ff.dtau_out_l)
                    .map(|(ti, to)| g * Complex::cis(-w * (self.tau_0 + ti + to)) * beta)
                    .collect()
            }
            ModelKind::FarNarrow { ff, beta0 } => {
                let macro_phase = Complex::cis(-TWO_PI * (f0 + f) * self.tau_0);
                ff.dtau_in_l
                    .iter()
                    .zip(&ff.dtau_out_l)
                    .map(|(ti, to)| g * macro_phase * Complex::cis(-TWO_PI * f0 * (ti + to)) * beta0)
                    .collect()
            }
        }
    }
}

/// `sum_nm exp(j Phi_nm) exp(-j 2 pi freq (tau_in + tau_out))` for channel `l`.
fn near_field_sum(phases: &[f64], delays: &ExactDelays, l: usize, freq: f64) -> Complex {
    let w = TWO_PI * freq;
    let base = l * delays.num_elements;
    let ti = &delays.tau_in[base..base + delays.num_elements];
    let to = &delays.tau_out[base..base + delays.num_elements];
    phases
        .iter()
        .zip(ti.iter().zip(to))
        .map(|(phi, (a, b))| Complex::cis(phi - w * (a + b)))
        .sum()
}

/// One-shot evaluation of the model vector; see [`ForwardModel`].
pub fn model_vector(f: f64, scene: &Scene, phases: &[f64], variant: ModelVariant) -> Result<Vec<Complex>> {
    Ok(ForwardModel::new(scene, phases, variant)?.evaluate(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{antenna_grid, EulerAngles};
    use crate::phase_config::{configure_ff, configure_nf};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    pub(crate) fn paper_like_scene(n: usize, rx_side: usize) -> Scene {
        let signal = SignalSpec::new(78.5e9, 1e9, dbm_to_watts(23.0), dbm_to_watts(-173.0), 1e-3).unwrap();
        let lambda = signal.wavelength();
        let rx = antenna_grid(Vec3::zeros(), Vec3::y(), Vec3::z(), rx_side, rx_side, lambda / 2.0);
        let terminal = TerminalGeometry::all_pairs(vec![Vec3::zeros()], rx).unwrap();
        let lattice = RisLattice::with_flat_plate_rcs(n, n, lambda / 2.0, lambda).unwrap();
        let pose = Pose::new(Vec3::new(5.0, 0.0, -5.5), EulerAngles::ZERO);
        Scene::new(signal, terminal, lattice, pose)
    }

    #[test]
    fn exact_delay_of_origin_element() {
        let lattice = RisLattice::new(2, 2, 0.01, 1.0).unwrap();
        let terminal = TerminalGeometry::all_pairs(vec![Vec3::zeros()], vec![Vec3::zeros()]).unwrap();
        let pose = Pose::new(Vec3::new(5.0, 0.0, -5.5), EulerAngles::ZERO);
        let d = exact_delays(&pose, &lattice, &terminal).unwrap();
        let i00 = lattice.flat_index(0, 0).unwrap();
        assert_relative_eq!(d.tau_in(0, i00), 55.25f64.sqrt() / SPEED_OF_LIGHT, max_relative = 1e-15);
        assert_relative_eq!(d.tau_in(0, i00), 2.4794e-8, max_relative = 1e-4);
        // Collocated Tx and Rx: both legs equal.
        for nm in 0..4 {
            assert_eq!(d.tau_in(0, nm), d.tau_out(0, nm));
        }
    }

    #[test]
    fn delays_are_translation_invariant() {
        let scene = paper_like_scene(4, 2);
        let shift = Vec3::new(-3.0, 12.5, 0.25);
        let a = exact_delays(&scene.pose, &scene.lattice, &scene.terminal).unwrap();
        let moved = Pose::new(scene.pose.position + shift, scene.pose.orientation);
        let b = exact_delays(&moved, &scene.lattice, &scene.terminal.translated(shift)).unwrap();
        for (x, y) in a.tau_in.iter().zip(&b.tau_in).chain(a.tau_out.iter().zip(&b.tau_out)) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn coincident_geometry_is_a_domain_error() {
        let lattice = RisLattice::new(2, 2, 0.01, 1.0).unwrap();
        let terminal = TerminalGeometry::all_pairs(vec![Vec3::zeros()], vec![Vec3::x()]).unwrap();
        let pose = Pose::new(Vec3::zeros(), EulerAngles::ZERO);
        assert!(matches!(exact_delays(&pose, &lattice, &terminal), Err(CrbError::Domain(_))));
        let pose = Pose::new(Vec3::new(0.0, 0.0, 0.0), EulerAngles::ZERO);
        assert!(ff_decomposition(&pose, &lattice, &terminal).is_err());
    }

    #[test]
    fn excess_delay_examples() {
        let broadside = SphericalDirection { phi: 0.0, theta: 0.7 };
        for (n, m) in [(1, 0), (-3, 2), (5, 5)] {
            assert_eq!(excess_delay(broadside, n, m, 0.01), 0.0);
        }
        let along_x = SphericalDirection { phi: FRAC_PI_2, theta: 0.0 };
        assert_relative_eq!(excess_delay(along_x, 1, 0, 0.01), 0.01 / SPEED_OF_LIGHT, max_relative = 1e-15);
    }

    #[test]
    fn far_field_recomposition_within_fresnel_bound() {
        let scene = paper_like_scene(52, 20);
        let exact = exact_delays(&scene.pose, &scene.lattice, &scene.terminal).unwrap();
        let ff = ff_decomposition(&scene.pose, &scene.lattice, &scene.terminal).unwrap();
        let range = ff.tau_in_0 * SPEED_OF_LIGHT;
        let aperture = scene.lattice.aperture().0;
        let fresnel = aperture * aperture / (2.0 * range * SPEED_OF_LIGHT);
        let mut worst: f64 = 0.0;
        for l in 0..exact.num_channels {
            for nm in 0..exact.num_elements {
                let (ti, to) = ff.recomposed(l, nm);
                worst = worst
                    .max((ti - exact.tau_in(l, nm)).abs())
                    .max((to - exact.tau_out(l, nm)).abs());
            }
        }
        assert!(worst < 2.0 * fresnel, "worst {worst:e} vs bound {fresnel:e}");
    }

    #[test]
    fn far_field_error_decays_with_range() {
        let base = paper_like_scene(8, 4);
        let worst = |scale: f64| {
            let pose = Pose::new(base.pose.position * scale, base.pose.orientation);
            let exact = exact_delays(&pose, &base.lattice, &base.terminal).unwrap();
            let ff = ff_decomposition(&pose, &base.lattice, &base.terminal).unwrap();
            let mut w: f64 = 0.0;
            for l in 0..exact.num_channels {
                for nm in 0..exact.num_elements {
                    let (ti, _) = ff.recomposed(l, nm);
                    w = w.max((ti - exact.tau_in(l, nm)).abs());
                }
            }
            w
        };
        let ratio = worst(1.0) / worst(10.0);
        assert!((ratio - 10.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn path_loss_examples() {
        let scene = paper_like_scene(52, 1);
        let rho = path_loss(&scene.pose, &scene.terminal, &scene.lattice, &scene.signal).unwrap();
        assert_relative_eq!(rho.rho.norm(), 5.25e-9, max_relative = 2e-3);
        assert_eq!(rho.rho.im, 0.0);

        let far = Pose::new(scene.pose.position * 2.0, scene.pose.orientation);
        let rho_far = path_loss(&far, &scene.terminal, &scene.lattice, &scene.signal).unwrap();
        assert_relative_eq!(rho.rho.norm() / rho_far.rho.norm(), 4.0, max_relative = 1e-12);

        let mut lattice = scene.lattice;
        lattice.gamma_elem *= 9.0;
        let rho9 = path_loss(&scene.pose, &scene.terminal, &lattice, &scene.signal).unwrap();
        assert_relative_eq!(rho9.rho.norm() / rho.rho.norm(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn spectrum_examples() {
        let s = SignalSpec::new(78.5e9, 1e9, 0.19953, 1e-20, 1e-3).unwrap();
        assert_relative_eq!(spectrum(&s, 0.0).norm_sqr(), 1.9953e-13, max_relative = 1e-12);
        assert_relative_eq!(spectrum(&s, 0.5e9).norm_sqr(), 1.9953e-13, max_relative = 1e-12);
        assert_eq!(spectrum(&s, 0.6e9), Complex::new(0.0, 0.0));
    }

    #[test]
    fn signal_validation() {
        assert!(SignalSpec::new(1e9, 2e9, 1.0, 1.0, 1.0).is_err());
        assert!(SignalSpec::new(1e9, 1e8, 0.0, 1.0, 1.0).is_err());
        assert!(SignalSpec::new(1e9, 1e8, 1.0, 1.0, -1.0).is_err());
        assert_relative_eq!(dbm_to_watts(23.0), 0.199526, max_relative = 1e-5);
        assert_relative_eq!(dbm_to_watts(-173.0), 5.0119e-21, max_relative = 1e-4);
    }

    #[test]
    fn reflection_coefficient_examples() {
        let scene = paper_like_scene(52, 20);
        let rho = scene.reflectivity().unwrap().rho;
        let ff = ff_decomposition(&scene.pose, &scene.lattice, &scene.terminal).unwrap();
        let nm = scene.lattice.len() as f64;
        let phases = configure_ff(&scene.pose, &scene.lattice, &scene.terminal, scene.signal.f0).unwrap();
        let b0 = reflection_coefficient(0.0, scene.signal.f0, phases.phases(), &ff, rho);
        assert_relative_eq!(b0.re, rho.re * nm, max_relative = 1e-12);
        assert!(b0.im.abs() < 1e-12 * b0.re);

        let b_edge = reflection_coefficient(5e9, scene.signal.f0, phases.phases(), &ff, rho);
        assert!(b_edge.norm() < b0.norm());

        // Zero excess delays: frequency-flat response.
        let mut flat = ff.clone();
        flat.dtau_in_nm.iter_mut().for_each(|v| *v = 0.0);
        flat.dtau_out_nm.iter_mut().for_each(|v| *v = 0.0);
        let zeros = vec![0.0; scene.lattice.len()];
        for f in [-3e8, 0.0, 4.2e8] {
            let b = reflection_coefficient(f, scene.signal.f0, &zeros, &flat, rho);
            assert_relative_eq!(b.re, rho.re * nm, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_element_magnitude() {
        // Lattices are at least 2x2; collapse one onto a point so that it acts
        // as a single scatterer of four times the amplitude.
        let mut scene = paper_like_scene(2, 1);
        scene.lattice.spacing = 1e-12;
        let phases = configure_nf(&scene.pose, &scene.lattice, &scene.terminal, scene.signal.f0).unwrap();
        let rho = scene.reflectivity().unwrap().rho;
        for f in [-4e8, 0.0, 1e8, 5e8] {
            let a = model_vector(f, &scene, phases.phases(), ModelVariant::NF_WB).unwrap();
            let g = spectrum(&scene.signal, f);
            assert_relative_eq!(a[0].norm(), 4.0 * (rho * g).norm(), max_relative = 1e-9);
        }
    }

    #[test]
    fn near_field_bands_agree_at_carrier() {
        let scene = paper_like_scene(8, 4);
        let phases = configure_nf(&scene.pose, &scene.lattice, &scene.terminal, scene.signal.f0).unwrap();
        let wb = model_vector(0.0, &scene, phases.phases(), ModelVariant::NF_WB).unwrap();
        let nb = model_vector(0.0, &scene, phases.phases(), ModelVariant::NF_NB).unwrap();
        assert_eq!(wb, nb);
    }

    #[test]
    fn out_of_band_is_zero() {
        let scene = paper_like_scene(4, 2);
        let phases = configure_nf(&scene.pose, &scene.lattice, &scene.terminal, scene.signal.f0).unwrap();
        for v in ModelVariant::ALL {
            let a = model_vector(0.7e9, &scene, phases.phases(), v).unwrap();
            assert!(a.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn near_and_far_models_agree_at_long_range() {
        let mut scene = paper_like_scene(52, 4);
        let aperture = scene.lattice.aperture().0 * 2f64.sqrt();
        let fraunhofer = 2.0 * aperture * aperture / scene.signal.wavelength();
        let dir = scene.pose.position.normalize();
        scene.pose.position = dir * (100.0 * fraunhofer);
        let phases = configure_ff(&scene.pose, &scene.lattice, &scene.terminal, scene.signal.f0).unwrap();
        for f in [-4e8, 0.0, 3e8] {
            let nf = model_vector(f, &scene, phases.phases(), ModelVariant::NF_WB).unwrap();
            let ff = model_vector(f, &scene, phases.phases(), ModelVariant::FF_WB).unwrap();
            for (a, b) in nf.iter().zip(&ff) {
                assert!((a - b).norm() < 0.01 * b.norm(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn monostatic_swap_preserves_magnitudes() {
        let scene = paper_like_scene(8, 2);
        let tx = scene.terminal.rx_positions().to_vec();
        let terminal = TerminalGeometry::all_pairs(tx.clone(), tx).unwrap();
        let scene = Scene { terminal, ..scene };
        let phases = configure_nf(&scene.pose, &scene.lattice, &scene.terminal, scene.signal.f0).unwrap();
        let swapped = Scene {
            terminal: scene.terminal.swapped(),
            ..scene.clone()
        };
        let a = model_vector(2e8, &scene, phases.phases(), ModelVariant::NF_WB).unwrap();
        let b = model_vector(2e8, &swapped, phases.phases(), ModelVariant::NF_WB).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x.norm(), y.norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn model_is_continuous_in_position() {
        let scene = paper_like_scene(8, 4);
        let phases = configure_nf(&scene.pose, &scene.lattice, &scene.terminal, scene.signal.f0).unwrap();
        let a = model_vector(1e8, &scene, phases.phases(), ModelVariant::NF_WB).unwrap();
        let mut moved = scene.clone();
        moved.pose.position += Vec3::new(1e-9, -1e-9, 1e-9);
        let b = model_vector(1e8, &moved, phases.phases(), ModelVariant::NF_WB).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-4 * x.norm());
        }
    }

    #[test]
    fn beta_bounded_by_coherent_sum() {
        let scene = paper_like_scene(16, 2);
        let rho = scene.reflectivity().unwrap().rho;
        let ff = ff_decomposition(&scene.pose, &scene.lattice, &scene.terminal).unwrap();
        let nm = scene.lattice.len() as f64;
        let arbitrary: Vec<f64> = (0..scene.lattice.len()).map(|k| (k as f64 * 0.37).sin() * 3.0).collect();
        for f in [-5e8, -1e8, 0.0, 2e8, 5e8] {
            let b = reflection_coefficient(f, scene.signal.f0, &arbitrary, &ff, rho);
            assert!(b.norm() <= rho.norm() * nm * (1.0 + 1e-12));
        }
    }
}
