//! Scenario files.
//!
//! A scenario is a TOML document with the sections `signal`, `terminal`,
//! `pose`, `lattice`, `quadrature` and `sweep`, plus the top-level keys
//! `variant`, `phase_mode` and `conditioning`:
//!
//! ```toml
//! name = "demo"
//! variant = "nf-wb"            # nf-wb | nf-nb | ff-wb | ff-nb
//! phase_mode = "near-field"    # near-field | far-field | { external = "phases.txt" }
//! conditioning = "full"        # full | known-orientation | known-position
//!
//! [signal]
//! f0 = "78.5G"                 # numbers or strings with an SI prefix
//! bandwidth = 1e9
//! tx_power_dbm = 23            # or tx_power (W)
//! noise_psd_dbm_hz = -173      # or noise_psd (W/Hz)
//! integration_time = 1e-3      # optional
//!
//! [terminal]
//! tx = [[0, 0, 0]]
//! [terminal.rx_grid]           # or rx = [[x, y, z], ...]
//! center = [0, 0, 0]
//! axis_u = [0, 1, 0]
//! axis_v = [0, 0, 1]
//! rows = 20
//! cols = 20
//! spacing = "half-wavelength"
//!
//! [pose]
//! position = [5, 0, -5.5]
//! orientation = [0, 0, 0]      # psi_x, psi_y, psi_z in rad
//!
//! [lattice]
//! side = 0.1                   # or n and m (both even)
//! spacing = "half-wavelength"
//! # gamma_elem = 1e-6          # defaults to the flat-plate value 4 pi d^4 / lambda^2
//!
//! [quadrature]
//! nodes = 129
//! refinement = 1e-8
//! max_nodes = 16384
//!
//! [sweep]
//! bandwidths = [1e9, 2e9]
//! sides = [0.05, 0.1]
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use ris_crb::channel::dbm_to_watts;
use ris_crb::geometry::antenna_grid;
use ris_crb::phase_config::{configure_ff, configure_nf};
use ris_crb::{
    EulerAngles, ModelVariant, PhaseConfig, Pose, QuadratureSpec, RisLattice, Scene, SignalSpec, TerminalGeometry,
    Vec3,
};
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, Result};
use crate::sweep::Conditioning;

pub const BUNDLED: [(&str, &str); 3] = [
    ("paper_fig2a", include_str!("../scenarios/paper_fig2a.toml")),
    ("paper_fig2b", include_str!("../scenarios/paper_fig2b.toml")),
    ("paper_fig3", include_str!("../scenarios/paper_fig3.toml")),
];

/// How the RIS phase profile is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSource {
    NearField,
    FarField,
    External(PathBuf),
}

/// Rectangular antenna grid as written in the scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub center: Vec3,
    pub axis_u: Vec3,
    pub axis_v: Vec3,
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

impl GridSpec {
    pub fn positions(&self) -> Vec<Vec3> {
        antenna_grid(self.center, self.axis_u, self.axis_v, self.rows, self.cols, self.spacing)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSpec {
    pub bandwidths: Vec<f64>,
    pub sides: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub signal: SignalSpec,
    pub terminal: TerminalGeometry,
    pub tx_grid: Option<GridSpec>,
    pub rx_grid: Option<GridSpec>,
    pub pose: Pose,
    pub lattice: RisLattice,
    /// Explicit per-element RCS; `None` means the flat-plate value.
    pub gamma_elem: Option<f64>,
    pub variant: ModelVariant,
    pub phase_mode: PhaseSource,
    pub quadrature: QuadratureSpec,
    pub conditioning: Conditioning,
    pub sweep: SweepSpec,
}

impl Scenario {
    pub fn scene(&self) -> Scene {
        Scene::new(self.signal, self.terminal.clone(), self.lattice.clone(), self.pose)
    }

    /// Phase profile shared by every model variant.
    pub fn phases(&self) -> Result<PhaseConfig> {
        let f0 = self.signal.f0;
        let cfg = match &self.phase_mode {
            PhaseSource::NearField => configure_nf(&self.pose, &self.lattice, &self.terminal, f0)?,
            PhaseSource::FarField => configure_ff(&self.pose, &self.lattice, &self.terminal, f0)?,
            PhaseSource::External(path) => PhaseConfig::load(path, &self.lattice)?,
        };
        Ok(cfg)
    }

    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        let mut s = self.clone();
        s.signal = self.signal.with_bandwidth(bandwidth);
        s.signal.validate()?;
        Ok(s)
    }

    /// Square lattice of side `side` with the scenario's element spacing.
    pub fn with_side(&self, side: f64) -> Result<Self> {
        let mut s = self.clone();
        let lattice = RisLattice::from_side(side, self.lattice.spacing, self.signal.wavelength())?;
        s.lattice = match self.gamma_elem {
            Some(g) => RisLattice::new(lattice.n_count, lattice.m_count, lattice.spacing, g)?,
            None => lattice,
        };
        Ok(s)
    }

    /// Same geometry on a small instance: an 8x8 lattice and, when the
    /// receive array is a grid, a 4x4 grid with the same center, axes and
    /// spacing. Used to certify the FIM pipeline against the oracles.
    pub fn reduced(&self) -> Result<Self> {
        let mut s = self.clone();
        let gamma = self.lattice.gamma_elem;
        s.lattice = RisLattice::new(8, 8, self.lattice.spacing, gamma)?;
        let shrink = |g: &Option<GridSpec>| {
            g.as_ref().map(|g| GridSpec {
                rows: g.rows.min(4),
                cols: g.cols.min(4),
                ..g.clone()
            })
        };
        s.tx_grid = shrink(&self.tx_grid);
        s.rx_grid = shrink(&self.rx_grid);
        let tx = s.tx_grid.as_ref().map_or_else(|| self.terminal.tx_positions().to_vec(), GridSpec::positions);
        let rx = s.rx_grid.as_ref().map_or_else(|| self.terminal.rx_positions().to_vec(), GridSpec::positions);
        s.terminal = TerminalGeometry::all_pairs(tx, rx)?;
        if matches!(s.phase_mode, PhaseSource::External(_)) {
            s.phase_mode = PhaseSource::NearField;
        }
        Ok(s)
    }

    /// Side length of the (square) RIS aperture.
    pub fn side(&self) -> f64 {
        self.lattice.aperture().0
    }
}

/// Loads a scenario from disk, or a bundled one by name (`paper_fig2a`, ...).
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    if !path.exists() {
        if let Some(text) = bundled(&path.to_string_lossy()) {
            return parse_scenario(text, &path.to_string_lossy(), Path::new("."));
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario(&text, &path.display().to_string(), base)
}

pub fn bundled(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".toml").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == stem).map(|(_, t)| *t)
}

/// Parses scenario text. `origin` names the source in diagnostics and
/// relative external phase files are resolved against `base_dir`.
pub fn parse_scenario(text: &str, origin: &str, base_dir: &Path) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    Builder { text, origin }.build(raw, base_dir)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NumValue {
    Float(f64),
    Text(String),
}

type Num = Spanned<NumValue>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    variant: Option<Spanned<String>>,
    phase_mode: Option<Spanned<RawPhaseMode>>,
    conditioning: Option<Spanned<String>>,
    signal: RawSignal,
    terminal: RawTerminal,
    pose: RawPose,
    lattice: Spanned<RawLattice>,
    quadrature: Option<RawQuadrature>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawPhaseMode {
    Named(String),
    External { external: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    f0: Num,
    bandwidth: Num,
    tx_power: Option<Num>,
    tx_power_dbm: Option<Num>,
    noise_psd: Option<Num>,
    noise_psd_dbm_hz: Option<Num>,
    integration_time: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    center: Spanned<Vec<NumValue>>,
    axis_u: Spanned<Vec<NumValue>>,
    axis_v: Spanned<Vec<NumValue>>,
    rows: Spanned<i64>,
    cols: Spanned<i64>,
    spacing: Num,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerminal {
    tx: Option<Spanned<Vec<Vec<NumValue>>>>,
    rx: Option<Spanned<Vec<Vec<NumValue>>>>,
    tx_grid: Option<Spanned<RawGrid>>,
    rx_grid: Option<Spanned<RawGrid>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    position: Spanned<Vec<NumValue>>,
    orientation: Option<Spanned<Vec<NumValue>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    n: Option<Spanned<i64>>,
    m: Option<Spanned<i64>>,
    side: Option<Num>,
    spacing: Num,
    gamma_elem: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuadrature {
    nodes: Option<Spanned<i64>>,
    refinement: Option<Num>,
    max_nodes: Option<Spanned<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    bandwidths: Option<Spanned<Vec<NumValue>>>,
    sides: Option<Spanned<Vec<NumValue>>>,
}

/// `"78.5G"`, `"1e9"`, `"35 m"`-style prefixes: p n u m k M G T.
pub fn parse_si(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Some(v);
    }
    let (num, prefix) = t.split_at(t.len() - t.chars().last()?.len_utf8());
    let scale = match prefix {
        "p" => 1e-12,
        "n" => 1e-9,
        "u" | "µ" => 1e-6,
        "m" => 1e-3,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        "T" => 1e12,
        _ => return None,
    };
    num.trim().parse::<f64>().ok().map(|v| v * scale)
}

struct Builder<'a> {
    text: &'a str,
    origin: &'a str,
}

impl Builder<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text[..end].bytes().filter(|b| *b == b'\n').count() + 1
    }

    fn invalid(&self, span: Range<usize>, key: &str, message: impl Into<String>) -> CliError {
        CliError::Validation {
            path: self.origin.to_string(),
            line: self.line(span),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn value(&self, v: &NumValue, span: Range<usize>, key: &str, wavelength: Option<f64>) -> Result<f64> {
        let x = match v {
            NumValue::Float(x) => Some(*x),
            NumValue::Text(t) if t.trim() == "half-wavelength" => match wavelength {
                Some(l) => Some(l / 2.0),
                None => return Err(self.invalid(span, key, "\"half-wavelength\" is not allowed here")),
            },
            NumValue::Text(t) => parse_si(t),
        };
        match x {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(self.invalid(span, key, format!("expected a number, got {v:?}"))),
        }
    }

    fn num(&self, n: &Num, key: &str) -> Result<f64> {
        self.value(n.get_ref(), n.span(), key, None)
    }

    fn positive(&self, n: &Num, key: &str, wavelength: Option<f64>) -> Result<f64> {
        let v = self.value(n.get_ref(), n.span(), key, wavelength)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.invalid(n.span(), key, format!("must be positive, got {v}")))
        }
    }

    fn vec3(&self, v: &Spanned<Vec<NumValue>>, key: &str) -> Result<Vec3> {
        let items = v.get_ref();
        if items.len() != 3 {
            return Err(self.invalid(v.span(), key, format!("expected 3 components, got {}", items.len())));
        }
        let c = items
            .iter()
            .map(|x| self.value(x, v.span(), key, None))
            .collect::<Result<Vec<_>>>()?;
        Ok(Vec3::new(c[0], c[1], c[2]))
    }

    fn count(&self, v: &Spanned<i64>, key: &str, even: bool) -> Result<usize> {
        let n = *v.get_ref();
        if n < 1 {
            return Err(self.invalid(v.span(), key, format!("must be at least 1, got {n}")));
        }
        if even && n % 2 != 0 {
            return Err(self.invalid(v.span(), key, format!("must be even, got {n}")));
        }
        Ok(n as usize)
    }

    fn grid(&self, g: &Spanned<RawGrid>, key: &str, wavelength: f64) -> Result<GridSpec> {
        let r = g.get_ref();
        let spec = GridSpec {
            center: self.vec3(&r.center, &format!("{key}.center"))?,
            axis_u: self.vec3(&r.axis_u, &format!("{key}.axis_u"))?,
            axis_v: self.vec3(&r.axis_v, &format!("{key}.axis_v"))?,
            rows: self.count(&r.rows, &format!("{key}.rows"), false)?,
            cols: self.count(&r.cols, &format!("{key}.cols"), false)?,
            spacing: self.positive(&r.spacing, &format!("{key}.spacing"), Some(wavelength))?,
        };
        for (axis, name) in [(&spec.axis_u, "axis_u"), (&spec.axis_v, "axis_v")] {
            if axis.norm() == 0.0 {
                return Err(self.invalid(g.span(), &format!("{key}.{name}"), "axis must be nonzero"));
            }
        }
        if spec.axis_u.cross(&spec.axis_v).norm() < 1e-12 * spec.axis_u.norm() * spec.axis_v.norm() {
            return Err(self.invalid(g.span(), key, "axis_u and axis_v must not be parallel"));
        }
        Ok(GridSpec {
            axis_u: spec.axis_u.normalize(),
            axis_v: spec.axis_v.normalize(),
            ..spec
        })
    }

    fn antennas(
        &self,
        list: &Option<Spanned<Vec<Vec<NumValue>>>>,
        grid: &Option<Spanned<RawGrid>>,
        key: &str,
        wavelength: f64,
    ) -> Result<(Vec<Vec3>, Option<GridSpec>)> {
        match (list, grid) {
            (Some(_), Some(g)) => Err(self.invalid(g.span(), key, format!("give either terminal.{key} or terminal.{key}_grid"))),
            (Some(l), None) => {
                let pts = l
                    .get_ref()
                    .iter()
                    .map(|p| self.vec3(&Spanned::new(l.span(), p.clone()), &format!("terminal.{key}")))
                    .collect::<Result<Vec<_>>>()?;
                if pts.is_empty() {
                    return Err(self.invalid(l.span(), &format!("terminal.{key}"), "needs at least one antenna"));
                }
                Ok((pts, None))
            }
            (None, Some(g)) => {
                let spec = self.grid(g, &format!("terminal.{key}_grid"), wavelength)?;
                Ok((spec.positions(), Some(spec)))
            }
            (None, None) => Err(CliError::Validation {
                path: self.origin.to_string(),
                line: 1,
                key: format!("terminal.{key}"),
                message: format!("missing; give terminal.{key} or terminal.{key}_grid"),
            }),
        }
    }

    fn list(&self, v: &Spanned<Vec<NumValue>>, key: &str) -> Result<Vec<f64>> {
        v.get_ref()
            .iter()
            .map(|x| {
                let y = self.value(x, v.span(), key, None)?;
                if y > 0.0 {
                    Ok(y)
                } else {
                    Err(self.invalid(v.span(), key, format!("values must be positive, got {y}")))
                }
            })
            .collect()
    }

    fn build(&self, raw: RawScenario, base_dir: &Path) -> Result<Scenario> {
        // Signal.
        let s = &raw.signal;
        let f0 = self.positive(&s.f0, "signal.f0", None)?;
        let wavelength = ris_crb::SPEED_OF_LIGHT / f0;
        let bandwidth = self.positive(&s.bandwidth, "signal.bandwidth", None)?;
        if bandwidth >= 2.0 * f0 {
            return Err(self.invalid(s.bandwidth.span(), "signal.bandwidth", format!("must be below 2 f0 = {:e} Hz", 2.0 * f0)));
        }
        let tx_power = match (&s.tx_power, &s.tx_power_dbm) {
            (Some(w), None) => self.positive(w, "signal.tx_power", None)?,
            (None, Some(dbm)) => dbm_to_watts(self.num(dbm, "signal.tx_power_dbm")?),
            (Some(w), Some(_)) => return Err(self.invalid(w.span(), "signal.tx_power", "give tx_power or tx_power_dbm, not both")),
            (None, None) => return Err(self.invalid(s.f0.span(), "signal.tx_power", "missing (tx_power or tx_power_dbm)")),
        };
        let noise_psd = match (&s.noise_psd, &s.noise_psd_dbm_hz) {
            (Some(w), None) => self.positive(w, "signal.noise_psd", None)?,
            (None, Some(dbm)) => dbm_to_watts(self.num(dbm, "signal.noise_psd_dbm_hz")?),
            (Some(w), Some(_)) => return Err(self.invalid(w.span(), "signal.noise_psd", "give noise_psd or noise_psd_dbm_hz, not both")),
            (None, None) => return Err(self.invalid(s.f0.span(), "signal.noise_psd", "missing (noise_psd or noise_psd_dbm_hz)")),
        };
        let integration_time = match &s.integration_time {
            Some(t) => self.positive(t, "signal.integration_time", None)?,
            None => SignalSpec::DEFAULT_INTEGRATION_TIME,
        };
        let signal = SignalSpec::new(f0, bandwidth, tx_power, noise_psd, integration_time)?;

        // Terminal.
        let t = &raw.terminal;
        let (tx, tx_grid) = self.antennas(&t.tx, &t.tx_grid, "tx", wavelength)?;
        let (rx, rx_grid) = self.antennas(&t.rx, &t.rx_grid, "rx", wavelength)?;
        let terminal = TerminalGeometry::all_pairs(tx, rx)?;

        // Pose.
        let position = self.vec3(&raw.pose.position, "pose.position")?;
        let orientation = match &raw.pose.orientation {
            Some(o) => self.vec3(o, "pose.orientation")?,
            None => Vec3::zeros(),
        };
        let pose = Pose::new(position, EulerAngles::new(orientation.x, orientation.y, orientation.z));

        // Lattice.
        let l = raw.lattice.get_ref();
        let spacing = self.positive(&l.spacing, "lattice.spacing", Some(wavelength))?;
        let (n, m) = match (&l.side, &l.n, &l.m) {
            (Some(side), None, None) => {
                let side_v = self.positive(side, "lattice.side", None)?;
                let n = ris_crb::geometry::elements_for_side(side_v, spacing);
                if n == 0 {
                    return Err(self.invalid(side.span(), "lattice.side", format!("smaller than two element spacings ({:e} m)", 2.0 * spacing)));
                }
                (n, n)
            }
            (None, Some(n), Some(m)) => (self.count(n, "lattice.n", true)?, self.count(m, "lattice.m", true)?),
            _ => return Err(self.invalid(raw.lattice.span(), "lattice", "give either side, or both n and m")),
        };
        let gamma_elem = match &l.gamma_elem {
            Some(g) => Some(self.positive(g, "lattice.gamma_elem", None)?),
            None => None,
        };
        let lattice = match gamma_elem {
            Some(g) => RisLattice::new(n, m, spacing, g)?,
            None => RisLattice::with_flat_plate_rcs(n, m, spacing, wavelength)?,
        };

        let variant = match &raw.variant {
            Some(v) => ModelVariant::from_label(v.get_ref().trim()).ok_or_else(|| {
                self.invalid(v.span(), "variant", format!("unknown variant {:?} (nf-wb, nf-nb, ff-wb, ff-nb)", v.get_ref()))
            })?,
            None => ModelVariant::NF_WB,
        };

        let phase_mode = match &raw.phase_mode {
            None => PhaseSource::NearField,
            Some(p) => match p.get_ref() {
                RawPhaseMode::Named(name) => match name.trim() {
                    "near-field" | "nf" => PhaseSource::NearField,
                    "far-field" | "ff" => PhaseSource::FarField,
                    other => {
                        return Err(self.invalid(p.span(), "phase_mode", format!("unknown phase mode {other:?} (near-field, far-field, {{ external = \"file\" }})")))
                    }
                },
                RawPhaseMode::External { external } => {
                    let path = base_dir.join(external);
                    if !path.is_file() {
                        return Err(self.invalid(p.span(), "phase_mode.external", format!("file {} does not exist", path.display())));
                    }
                    PhaseSource::External(path)
                }
            },
        };

        let conditioning = match &raw.conditioning {
            Some(c) => Conditioning::from_label(c.get_ref().trim()).ok_or_else(|| {
                self.invalid(c.span(), "conditioning", format!("unknown conditioning {:?} (full, known-orientation, known-position)", c.get_ref()))
            })?,
            None => Conditioning::Full,
        };

        let mut quadrature = QuadratureSpec::default();
        if let Some(q) = &raw.quadrature {
            if let Some(n) = &q.nodes {
                quadrature.nodes = self.count(n, "quadrature.nodes", false)?;
                if quadrature.nodes < 2 {
                    return Err(self.invalid(n.span(), "quadrature.nodes", "must be at least 2"));
                }
            }
            if let Some(r) = &q.refinement {
                quadrature.refinement = self.positive(r, "quadrature.refinement", None)?;
            }
            if let Some(n) = &q.max_nodes {
                quadrature.max_nodes = self.count(n, "quadrature.max_nodes", false)?;
            }
        }

        let mut sweep = SweepSpec::default();
        if let Some(sw) = &raw.sweep {
            if let Some(b) = &sw.bandwidths {
                sweep.bandwidths = self.list(b, "sweep.bandwidths")?;
                if let Some(bad) = sweep.bandwidths.iter().find(|b| **b >= 2.0 * f0) {
                    return Err(self.invalid(b.span(), "sweep.bandwidths", format!("{bad:e} Hz is not below 2 f0")));
                }
            }
            if let Some(s) = &sw.sides {
                sweep.sides = self.list(s, "sweep.sides")?;
                if let Some(bad) = sweep.sides.iter().find(|s| **s < 2.0 * spacing) {
                    return Err(self.invalid(s.span(), "sweep.sides", format!("{bad} m is smaller than two element spacings")));
                }
            }
        }

        let scenario = Scenario {
            name: raw.name.unwrap_or_else(|| "scenario".to_string()),
            signal,
            terminal,
            tx_grid,
            rx_grid,
            pose,
            lattice,
            gamma_elem,
            variant,
            phase_mode,
            quadrature,
            conditioning,
            sweep,
        };
        scenario.scene().validate().map_err(|e| self.invalid(raw.pose.position.span(), "pose.position", e.to_string()))?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn si_prefixes() {
        assert_eq!(parse_si("78.5G"), Some(78.5e9));
        assert_eq!(parse_si(" 10M "), Some(10e6));
        assert_eq!(parse_si("1e-3"), Some(1e-3));
        assert_eq!(parse_si("5 m"), Some(5e-3));
        assert_eq!(parse_si("GHz"), None);
        assert_eq!(parse_si(""), None);
    }

    #[test]
    fn bundled_scenarios_parse() {
        for (name, text) in BUNDLED {
            let s = parse_scenario(text, name, Path::new(".")).unwrap();
            assert_eq!(s.signal.f0, 78.5e9, "{name}");
            assert_eq!(s.terminal.num_channels(), 400, "{name}");
            assert_eq!(s.pose.position, Vec3::new(5.0, 0.0, -5.5), "{name}");
        }
    }
}
