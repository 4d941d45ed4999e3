//! Oracle suite run on the size-reduced version of a scenario.

use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use ris_crb::fim::assemble_fim;
use ris_crb::oracle::{jacobian_agreement, relative_distance, trapezoid_fim, OracleReport};
use ris_crb::phase_config::configure_nf;
use ris_crb::{EulerAngles, ModelVariant, Pose, Scene, Vec3};

use crate::error::Result;
use crate::scenario::Scenario;

pub const JACOBIAN_TOL: f64 = 1e-6;
pub const FIM_TOL: f64 = 1e-4;
pub const RANDOM_FREQUENCIES: usize = 20;
pub const RANDOM_POSES: usize = 10;
pub const TRAPEZOID_POINTS: usize = 4097;
const SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone)]
pub struct JacobianCheck {
    pub variant: ModelVariant,
    pub report: OracleReport,
}

#[derive(Debug, Clone)]
pub struct FimCheck {
    pub variant: ModelVariant,
    pub relative_error: f64,
    pub quadrature_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub scenario: String,
    pub channels: usize,
    pub elements: usize,
    pub jacobian: Vec<JacobianCheck>,
    pub fim: Vec<FimCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.jacobian.iter().all(|c| c.report.passes(JACOBIAN_TOL))
            && self.fim.iter().all(|c| c.relative_error < FIM_TOL)
    }

    pub fn failed_checks(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.jacobian {
            if !c.report.passes(JACOBIAN_TOL) {
                out.push(format!("jacobian {}", c.variant));
            }
        }
        for c in &self.fim {
            if !(c.relative_error < FIM_TOL) {
                out.push(format!("fim {}", c.variant));
            }
        }
        out
    }

    /// Structured text block, one `key = value` line per field.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[oracle]");
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "elements = {}", self.elements);
        let _ = writeln!(s, "channels = {}", self.channels);
        for c in &self.jacobian {
            let r = &c.report;
            let _ = writeln!(s, "[oracle.jacobian.{}]", c.variant);
            let _ = writeln!(s, "max_relative_error = {:e}", r.max_relative_error);
            let _ = writeln!(
                s,
                "location = {{ frequency = {:e}, pose = {}, parameter = {} }}",
                r.location.0, r.location.1, r.location.2
            );
            let _ = writeln!(s, "comparisons = {}", r.comparisons);
            let _ = writeln!(s, "converged = {}", r.converged);
            let _ = writeln!(s, "tolerance = {JACOBIAN_TOL:e}");
            let _ = writeln!(s, "passed = {}", r.passes(JACOBIAN_TOL));
        }
        for c in &self.fim {
            let _ = writeln!(s, "[oracle.fim.{}]", c.variant);
            let _ = writeln!(s, "relative_frobenius_error = {:e}", c.relative_error);
            let _ = writeln!(s, "quadrature_nodes = {}", c.quadrature_nodes);
            let _ = writeln!(s, "trapezoid_points = {TRAPEZOID_POINTS}");
            let _ = writeln!(s, "tolerance = {FIM_TOL:e}");
            let _ = writeln!(s, "passed = {}", c.relative_error < FIM_TOL);
        }
        s
    }
}

/// Random in-band frequencies and poses around the scenario pose, from a
/// fixed seed.
pub fn random_probes(scene: &Scene, frequencies: usize, poses: usize) -> (Vec<f64>, Vec<Pose>) {
    let mut rng = StdRng::seed_from_u64(SEED);
    let half = 0.5 * scene.signal.bandwidth;
    let freqs = (0..frequencies).map(|_| rng.random_range(-half..half)).collect();
    let base = scene.pose;
    let poses = (0..poses)
        .map(|_| {
            let dx = Vec3::from_fn(|_, _| rng.random_range(-0.5..0.5));
            let a = base.orientation.to_array();
            let g = EulerAngles::from_array(std::array::from_fn(|k| a[k] + rng.random_range(-0.3..0.3)));
            Pose::new(base.position + dx, g)
        })
        .collect();
    (freqs, poses)
}

/// Runs the oracle suite on `scenario.reduced()`: the Jacobians behind each
/// FIM vs finite differences, then the quadrature FIM vs the trapezoid
/// reference, for all four variants.
pub fn run_validation(scenario: &Scenario) -> Result<ValidationReport> {
    let small = scenario.reduced()?;
    let scene = small.scene();
    let (freqs, poses) = random_probes(&scene, RANDOM_FREQUENCIES, RANDOM_POSES);
    let phases_for = |s: &Scene| Ok(configure_nf(&s.pose, &s.lattice, &s.terminal, s.signal.f0)?.phases().to_vec());

    let mut jacobian = Vec::new();
    for variant in ModelVariant::ALL {
        let report = jacobian_agreement(&scene, phases_for, variant, &freqs, &poses)?;
        jacobian.push(JacobianCheck { variant, report });
    }

    let mut fim = Vec::new();
    for variant in ModelVariant::ALL {
        let phases = small.phases()?;
        let assembled = assemble_fim(&scene, phases.phases(), variant, &small.quadrature)?;
        let reference = trapezoid_fim(&scene, phases.phases(), variant, TRAPEZOID_POINTS)?;
        fim.push(FimCheck {
            variant,
            relative_error: relative_distance(&assembled.fim, &reference),
            quadrature_nodes: assembled.nodes,
        });
    }

    Ok(ValidationReport {
        scenario: small.name.clone(),
        channels: scene.terminal.num_channels(),
        elements: scene.lattice.len(),
        jacobian,
        fim,
    })
}
