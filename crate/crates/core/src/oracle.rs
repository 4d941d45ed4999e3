//! Brute-force references for the FIM pipeline.
//!
//! * [`fd_model_jacobian`]: central differences of the forward model with a
//!   sweep over step sizes, keeping the step whose Richardson extrapolants
//!   agree best.
//! * [`trapezoid_fim`]: composite trapezoid rule on a uniform frequency grid,
//!   single-threaded, with no node doubling.
//! * [`jacobian_agreement`]: analytic (near-field) or chain-rule (far-field)
//!   vs finite-difference Jacobians over a grid of frequencies and poses.

use nalgebra::Matrix6;

use crate::channel::{ModelVariant, Scene, Wavefront};
use crate::error::{CrbError, Result};
use crate::fim::{far_field_jacobian, model_jacobian, Fim, FiniteDifferenceJacobian, JacobianMethod, ModelJacobian, FD_CONSISTENCY_TOL};
use crate::geometry::Pose;
use crate::Complex;

pub const POSITION_STEPS: [f64; 3] = [1e-4, 1e-5, 1e-6];
pub const ANGLE_STEPS: [f64; 3] = [1e-5, 1e-6, 1e-7];
pub const MIN_TRAPEZOID_POINTS: usize = 16;

/// Worst disagreement found by an oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub max_relative_error: f64,
    /// Frequency, pose index and parameter index of the worst case.
    pub location: (f64, usize, usize),
    pub comparisons: usize,
    /// Every finite-difference reference met the Richardson tolerance.
    pub converged: bool,
}

impl OracleReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.converged && self.max_relative_error < tol
    }
}

/// Richardson central differences of an arbitrary model `theta -> a`,
/// `h`, `h/2`, `h/4` per parameter. Returns the Jacobian (rows per output)
/// and the worst relative disagreement between the two extrapolants.
pub fn richardson_jacobian<F>(model: F, theta: [f64; 6], steps: [f64; 6]) -> (Vec<[Complex; 6]>, f64)
where
    F: Fn([f64; 6]) -> Vec<Complex>,
{
    let mut rows: Vec<[Complex; 6]> = Vec::new();
    let mut worst: f64 = 0.0;
    for p in 0..6 {
        let d: Vec<Vec<Complex>> = (0..3)
            .map(|s| {
                let h = steps[p] / f64::from(1u32 << s);
                let mut tp = theta;
                let mut tm = theta;
                tp[p] += h;
                tm[p] -= h;
                model(tp).iter().zip(model(tm)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            })
            .collect();
        if rows.is_empty() {
            rows = vec![[Complex::new(0.0, 0.0); 6]; d[0].len()];
        }
        let (mut diff2, mut norm2) = (0.0, 0.0);
        for (l, row) in rows.iter_mut().enumerate() {
            let r1 = (4.0 * d[1][l] - d[0][l]) / 3.0;
            let r2 = (4.0 * d[2][l] - d[1][l]) / 3.0;
            diff2 += (r1 - r2).norm_sqr();
            norm2 += r2.norm_sqr();
            row[p] = r2;
        }
        if norm2 > 0.0 {
            worst = worst.max((diff2 / norm2).sqrt());
        }
    }
    (rows, worst)
}

/// Step-swept finite-difference Jacobian of one scene: every column takes
/// the step from [`POSITION_STEPS`] or [`ANGLE_STEPS`] whose Richardson
/// extrapolants agree best.
pub struct FdOracle {
    candidates: Vec<FiniteDifferenceJacobian>,
}

impl FdOracle {
    pub fn new(scene: &Scene, phases: &[f64], variant: ModelVariant) -> Result<Self> {
        let candidates = POSITION_STEPS
            .iter()
            .zip(ANGLE_STEPS)
            .map(|(hp, ha)| FiniteDifferenceJacobian::new(scene, phases, variant, *hp, ha))
            .collect::<Result<_>>()?;
        Ok(Self { candidates })
    }

    /// Jacobian at `f`, the per-column disagreement of the chosen step, and
    /// whether every column converged (disagreement below
    /// [`FD_CONSISTENCY_TOL`]).
    pub fn at(&self, f: f64) -> (ModelJacobian, [f64; 6], bool) {
        let runs: Vec<(ModelJacobian, [f64; 6])> = self.candidates.iter().map(|c| c.at_columns(f)).collect();
        let mut jac = runs[0].0.clone();
        let mut chosen = [f64::INFINITY; 6];
        for k in 0..6 {
            let best = (0..runs.len())
                .min_by(|&a, &b| runs[a].1[k].total_cmp(&runs[b].1[k]))
                .expect("non-empty sweep");
            chosen[k] = runs[best].1[k];
            for (row, src) in jac.rows.iter_mut().zip(&runs[best].0.rows) {
                row[k] = src[k];
            }
        }
        let converged = chosen.iter().all(|d| *d < FD_CONSISTENCY_TOL);
        (jac, chosen, converged)
    }
}

/// One-shot [`FdOracle`] evaluation. Zero outside the band.
pub fn fd_model_jacobian(f: f64, scene: &Scene, phases: &[f64], variant: ModelVariant) -> Result<(ModelJacobian, bool)> {
    if !scene.signal.in_band(f) {
        return Ok((ModelJacobian::zeros(f, scene.terminal.num_channels()), true));
    }
    let (jac, _, converged) = FdOracle::new(scene, phases, variant)?.at(f);
    Ok((jac, converged))
}

/// Compares the Jacobians used by the FIM (analytic for near-field,
/// chain-rule for far-field) against [`fd_model_jacobian`] at every
/// `(frequency, pose)` pair.
pub fn jacobian_agreement(
    scene: &Scene,
    phases_for: impl Fn(&Scene) -> Result<Vec<f64>>,
    variant: ModelVariant,
    frequencies: &[f64],
    poses: &[Pose],
) -> Result<OracleReport> {
    let mut report = OracleReport {
        max_relative_error: 0.0,
        location: (0.0, 0, 0),
        comparisons: 0,
        converged: true,
    };
    for (ip, pose) in poses.iter().enumerate() {
        let s = scene.with_pose(*pose);
        let phases = phases_for(&s)?;
        for &f in frequencies {
            let an = match variant.wavefront {
                Wavefront::NearField => model_jacobian(f, &s, &phases, variant, JacobianMethod::Analytic)?,
                Wavefront::FarField => far_field_jacobian(f, &s, &phases, variant)?,
            };
            let (fd, converged) = fd_model_jacobian(f, &s, &phases, variant)?;
            report.converged &= converged;
            let (err, col) = an.max_relative_column_error(&fd);
            report.comparisons += 1;
            if err > report.max_relative_error || err.is_nan() {
                report.max_relative_error = err;
                report.location = (f, ip, col);
            }
        }
    }
    Ok(report)
}

/// FIM by the composite trapezoid rule on `points` equispaced frequencies
/// spanning `[-B/2, B/2]`, with [`FdOracle`] Jacobians for every variant.
pub fn trapezoid_fim(scene: &Scene, phases: &[f64], variant: ModelVariant, points: usize) -> Result<Fim> {
    if points < MIN_TRAPEZOID_POINTS {
        return Err(CrbError::InvalidInput(format!(
            "trapezoid rule needs at least {MIN_TRAPEZOID_POINTS} points, got {points}"
        )));
    }
    scene.validate()?;
    let oracle = FdOracle::new(scene, phases, variant)?;
    let b = scene.signal.bandwidth;
    let intervals = points - 1;
    let h = b / intervals as f64;
    let mut total = Matrix6::zeros();
    for i in 0..points {
        let f = if i == intervals { 0.5 * b } else { -0.5 * b + i as f64 * h };
        let w = if i == 0 || i == intervals { 0.5 * h } else { h };
        total += oracle.at(f).0.gram() * w;
    }
    Ok(Fim::from_matrix(total * (2.0 / scene.signal.noise_psd)))
}

/// Relative Frobenius distance `|A - B| / |B|`.
pub fn relative_distance(a: &Fim, b: &Fim) -> f64 {
    (a.matrix() - b.matrix()).norm() / b.matrix().norm()
}
