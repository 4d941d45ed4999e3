//! Single evaluations and parameter sweeps.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use ris_crb::fim::{assemble_fim, oeb, peb, Axis};
use ris_crb::linalg::condition_number;
use ris_crb::{CrbError, Fim, ModelVariant};

use crate::error::Result;
use crate::scenario::Scenario;

/// Which parameters are treated as known when bounding the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Conditioning {
    /// All six pose parameters unknown.
    Full,
    KnownOrientation,
    KnownPosition,
}

impl Conditioning {
    pub const ALL: [Self; 3] = [Self::Full, Self::KnownOrientation, Self::KnownPosition];

    pub fn label(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::KnownOrientation => "known-orientation",
            Self::KnownPosition => "known-position",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == s)
    }
}

impl fmt::Display for Conditioning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One line of output. Bounds that do not apply to the conditioning, or
/// that failed, are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub variant: ModelVariant,
    pub conditioning: Conditioning,
    pub peb: Option<f64>,
    pub oeb: [Option<f64>; 3],
    /// Scaled condition number of the matrix that was inverted: the full
    /// FIM, `F_xx` or `F_gamma_gamma`.
    pub fim_cond: Option<f64>,
}

/// A bound that could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub sweep_value: f64,
    pub variant: ModelVariant,
    pub conditioning: Option<Conditioning>,
    pub quantity: String,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cond = self.conditioning.map_or("-", Conditioning::label);
        write!(
            f,
            "sweep_value={:e} {} {} {}: {}",
            self.sweep_value, self.variant, cond, self.quantity, self.message
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<Failure>,
}

impl SweepResult {
    fn extend(&mut self, other: SweepResult) {
        self.rows.extend(other.rows);
        self.failures.extend(other.failures);
    }
}

fn block(fim: &Fim, offset: usize) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| fim.matrix()[(offset + i, offset + j)])
}

/// Bounds derived from an already assembled FIM.
pub fn bounds_from_fim(
    fim: &Fim,
    sweep_value: f64,
    variant: ModelVariant,
    conditioning: Conditioning,
) -> (ResultRow, Vec<Failure>) {
    let mut failures = Vec::new();
    let mut keep = |quantity: &str, r: std::result::Result<f64, CrbError>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            failures.push(Failure {
                sweep_value,
                variant,
                conditioning: Some(conditioning),
                quantity: quantity.to_string(),
                message: e.to_string(),
            });
            None
        }
    };
    let (peb_v, oeb_v, cond) = match conditioning {
        Conditioning::Full => (
            keep("peb", peb(fim, false)),
            Axis::ALL.map(|a| keep(&format!("oeb_{}", axis_name(a)), oeb(fim, a, false))),
            fim.condition_number(),
        ),
        Conditioning::KnownOrientation => (
            keep("peb", peb(fim, true)),
            [None; 3],
            condition_number(&block(fim, 0)),
        ),
        Conditioning::KnownPosition => (
            None,
            Axis::ALL.map(|a| keep(&format!("oeb_{}", axis_name(a)), oeb(fim, a, true))),
            condition_number(&block(fim, 3)),
        ),
    };
    let row = ResultRow {
        sweep_value,
        variant,
        conditioning,
        peb: peb_v,
        oeb: oeb_v,
        fim_cond: cond.is_finite().then_some(cond),
    };
    (row, failures)
}

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::X => "x",
        Axis::Y => "y",
        Axis::Z => "z",
    }
}

/// Assembles the FIM of `scenario` for one model variant.
pub fn scenario_fim(scenario: &Scenario, variant: ModelVariant) -> std::result::Result<Fim, CrbError> {
    let scene = scenario.scene();
    let phases = match scenario.phases() {
        Ok(p) => p,
        Err(crate::error::CliError::Numerical(e)) => return Err(e),
        Err(e) => return Err(CrbError::InvalidInput(e.to_string())),
    };
    Ok(assemble_fim(&scene, phases.phases(), variant, &scenario.quadrature)?.fim)
}

/// Evaluates every `(variant, conditioning)` combination at one setting,
/// with the FIM supplied by `fim_for`. Rows follow the order of `variants`
/// then `conditionings`. An assembly failure is recorded once per variant
/// and leaves its rows empty.
pub fn evaluate_with<F>(
    sweep_value: f64,
    variants: &[ModelVariant],
    conditionings: &[Conditioning],
    fim_for: F,
) -> SweepResult
where
    F: Fn(ModelVariant) -> std::result::Result<Fim, CrbError> + Sync,
{
    let mut out = SweepResult::default();
    for &variant in variants {
        match fim_for(variant) {
            Ok(fim) => {
                for &c in conditionings {
                    let (row, failures) = bounds_from_fim(&fim, sweep_value, variant, c);
                    out.rows.push(row);
                    out.failures.extend(failures);
                }
            }
            Err(e) => {
                out.failures.push(Failure {
                    sweep_value,
                    variant,
                    conditioning: None,
                    quantity: "fim".to_string(),
                    message: e.to_string(),
                });
                out.rows.extend(conditionings.iter().map(|&conditioning| ResultRow {
                    sweep_value,
                    variant,
                    conditioning,
                    peb: None,
                    oeb: [None; 3],
                    fim_cond: None,
                }));
            }
        }
    }
    out
}

/// One row for the scenario's own variant and conditioning, with the FIM
/// supplied by `fim_for` (used to inject known matrices).
pub fn run_single_with<F>(scenario: &Scenario, fim_for: F) -> SweepResult
where
    F: Fn(ModelVariant) -> std::result::Result<Fim, CrbError> + Sync,
{
    evaluate_with(scenario.signal.bandwidth, &[scenario.variant], &[scenario.conditioning], fim_for)
}

/// One row for the scenario's variant and conditioning. The sweep value is
/// the bandwidth. Failed bounds are listed in `failures`.
pub fn run_single(scenario: &Scenario) -> SweepResult {
    run_single_with(scenario, |v| scenario_fim(scenario, v))
}

/// Rows for every bandwidth, variant and conditioning, in that nesting
/// order. Settings are evaluated in parallel; output order does not depend
/// on completion order.
pub fn sweep_bandwidth(
    scenario: &Scenario,
    bandwidths: &[f64],
    variants: &[ModelVariant],
    conditionings: &[Conditioning],
) -> Result<SweepResult> {
    let points = bandwidths
        .iter()
        .map(|&b| Ok((b, scenario.with_bandwidth(b)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(run_grid(&points, variants, conditionings))
}

/// Rows for every side length at one bandwidth. The sweep value is the
/// requested side in meters; the lattice is the largest even square that
/// fits in it.
pub fn sweep_ris_size(
    scenario: &Scenario,
    sides: &[f64],
    bandwidth: f64,
    variants: &[ModelVariant],
    conditionings: &[Conditioning],
) -> Result<SweepResult> {
    let base = scenario.with_bandwidth(bandwidth)?;
    let points = sides
        .iter()
        .map(|&s| Ok((s, base.with_side(s)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(run_grid(&points, variants, conditionings))
}

fn run_grid(points: &[(f64, Scenario)], variants: &[ModelVariant], conditionings: &[Conditioning]) -> SweepResult {
    let jobs: Vec<(usize, ModelVariant)> = (0..points.len())
        .flat_map(|i| variants.iter().map(move |&v| (i, v)))
        .collect();
    let parts: Vec<SweepResult> = jobs
        .par_iter()
        .map(|&(i, v)| {
            let (value, s) = &points[i];
            evaluate_with(*value, &[v], conditionings, |v| scenario_fim(s, v))
        })
        .collect();
    let mut out = SweepResult::default();
    for p in parts {
        out.extend(p);
    }
    out
}

/// Parses `all` or a comma-separated list of variant labels.
pub fn parse_variants(s: &str) -> Option<Vec<ModelVariant>> {
    if s.trim() == "all" {
        return Some(ModelVariant::ALL.to_vec());
    }
    s.split(',').map(|v| ModelVariant::from_label(v.trim())).collect()
}

/// Parses `all` or a comma-separated list of conditioning labels.
pub fn parse_conditionings(s: &str) -> Option<Vec<Conditioning>> {
    if s.trim() == "all" {
        return Some(Conditioning::ALL.to_vec());
    }
    s.split(',').map(|c| Conditioning::from_label(c.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix6;

    #[test]
    fn labels_round_trip() {
        for c in Conditioning::ALL {
            assert_eq!(Conditioning::from_label(c.label()), Some(c));
        }
        assert_eq!(parse_variants("all").unwrap().len(), 4);
        assert_eq!(parse_variants("nf-wb, ff-nb").unwrap(), vec![ModelVariant::NF_WB, ModelVariant::FF_NB]);
        assert!(parse_variants("nf-wb,xx").is_none());
        assert_eq!(parse_conditionings("known-position").unwrap(), vec![Conditioning::KnownPosition]);
    }

    #[test]
    fn scaled_identity_gives_reciprocal_root() {
        let k = 16.0;
        let fim = Fim::from_matrix(Matrix6::identity() * k);
        for c in Conditioning::ALL {
            let (row, failures) = bounds_from_fim(&fim, 1.0, ModelVariant::NF_WB, c);
            assert!(failures.is_empty());
            assert_eq!(row.fim_cond, Some(1.0));
            for v in row.peb.iter().chain(row.oeb.iter().flatten()) {
                assert!((v - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn singular_bounds_are_recorded() {
        let mut m = Matrix6::identity();
        m[(5, 5)] = 0.0;
        let fim = Fim::from_matrix(m);
        let (row, failures) = bounds_from_fim(&fim, 2.0, ModelVariant::FF_NB, Conditioning::Full);
        assert_eq!(row.peb, Some(1.0));
        assert_eq!(row.oeb[2], None);
        assert_eq!(row.fim_cond, None);
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].quantity, "oeb_z");
    }
}
