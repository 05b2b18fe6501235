//! Scenario files: one TOML document per run, SI units throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::is_power_of_two;
use crate::params::PhysParams;

/// Bumped whenever a preset or the scenario schema changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Gaussian,
    Bessel,
    LaguerreGauss,
    ShapePreserving,
    ShapePreservingFlat,
}

impl InitialKind {
    pub fn label(self) -> &'static str {
        match self {
            InitialKind::Gaussian => "gaussian",
            InitialKind::Bessel => "bessel",
            InitialKind::LaguerreGauss => "laguerre-gauss",
            InitialKind::ShapePreserving => "shape-preserving",
            InitialKind::ShapePreservingFlat => "shape-preserving-flat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    /// V
    pub voltage: f64,
    /// A
    pub current: f64,
    /// m
    pub aperture_radius: f64,
    pub l: u32,
}

impl BeamSpec {
    pub fn params(&self) -> Result<PhysParams> {
        PhysParams::new(self.voltage, self.current, self.l, self.aperture_radius)
    }
}

/// Ties a beam to the shape-preserving solution whose charge-`l` profile has
/// effective width `width`: that fixes kT, and the beam is matched to the
/// width of the shape-preserving profile with the beam's own charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchSpec {
    pub l: u32,
    /// m
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub kind: InitialKind,
    /// Target effective width at launch (m).
    pub width: Option<f64>,
    /// Transverse wavenumber (1/m) for Bessel and shape-preserving beams;
    /// overrides `width`.
    pub kt: Option<f64>,
    #[serde(rename = "match")]
    pub match_to: Option<MatchSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    /// Grid side in units of the aperture radius.
    pub box_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationSpec {
    /// Include the self-consistent potential (multi-electron beam).
    pub nonlinear: bool,
    /// Step in ζ; derived from the launch width when absent.
    pub dzeta: Option<f64>,
    /// m; derived from aperture and width when absent.
    pub z_max: Option<f64>,
    pub record_stride: usize,
    pub absorber: bool,
    /// Stop once the width passes this multiple of `√2·w(0)`.
    pub stop_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Noise power relative to beam power.
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Width,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Sample values along the axis (m for widths).
    pub values: Vec<f64>,
    pub families: Vec<InitialKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub version: u32,
    pub beam: BeamSpec,
    pub initial: InitialSpec,
    pub grid: GridSpec,
    pub propagation: PropagationSpec,
    pub noise: NoiseSpec,
    pub sweep: Option<SweepSpec>,
}

impl Scenario {
    /// Parse and validate a scenario file. Missing or invalid fields are all
    /// reported at once.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        raw.into_scenario()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        check_common(self, &mut bad);
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(bad))
        }
    }
}

fn check_common(s: &Scenario, bad: &mut Vec<String>) {
    if s.name.trim().is_empty() {
        bad.push("name (empty)".into());
    }
    if let Err(e) = s.beam.params() {
        bad.push(format!("beam ({e})"));
    }
    let init = &s.initial;
    let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
    if !positive(init.width) {
        bad.push("initial.width (must be > 0)".into());
    }
    if !positive(init.kt) {
        bad.push("initial.kt (must be > 0)".into());
    }
    let sized = init.width.is_some() || init.kt.is_some() || init.match_to.is_some();
    let sweeps_width = s.sweep.as_ref().is_some_and(|w| w.axis == SweepAxis::Width);
    match init.kind {
        InitialKind::ShapePreservingFlat => {
            if s.beam.l != 0 {
                bad.push("beam.l (the flat solution carries no angular momentum)".into());
            }
        }
        InitialKind::Gaussian | InitialKind::LaguerreGauss if init.kt.is_some() => {
            bad.push("initial.kt (not used by Gaussian beams; give initial.width)".into());
        }
        _ if !sized && !sweeps_width => bad.push("initial.width or initial.kt or initial.match".into()),
        _ => {}
    }
    if let Some(m) = init.match_to {
        if !(m.width > 0.0 && m.width.is_finite()) {
            bad.push("initial.match.width (must be > 0)".into());
        }
    }
    if !is_power_of_two(s.grid.n) {
        bad.push(format!("grid.n ({} is not a power of two)", s.grid.n));
    }
    // the aperture must sit inside the absorbing frame
    if !(s.grid.box_factor >= 2.5 && s.grid.box_factor.is_finite()) {
        bad.push(format!("grid.box_factor ({} < 2.5)", s.grid.box_factor));
    }
    let p = &s.propagation;
    if !positive(p.dzeta) {
        bad.push("propagation.dzeta (must be > 0)".into());
    }
    if !positive(p.z_max) {
        bad.push("propagation.z_max (must be > 0)".into());
    }
    if p.record_stride == 0 {
        bad.push("propagation.record_stride (must be >= 1)".into());
    }
    if !p.stop_factor.is_none_or(|f| f >= 1.0) {
        bad.push("propagation.stop_factor (must be >= 1)".into());
    }
    if !(s.noise.ratio >= 0.0 && s.noise.ratio.is_finite()) {
        bad.push("noise.ratio (must be >= 0)".into());
    }
    if let Some(sw) = &s.sweep {
        if sw.values.is_empty() || sw.values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            bad.push("sweep.values (need positive values)".into());
        }
        if sw.families.is_empty() {
            bad.push("sweep.families (empty)".into());
        }
        if sw.families.contains(&InitialKind::ShapePreservingFlat) {
            bad.push("sweep.families (the flat solution has a single width)".into());
        }
    }
}

// Everything optional so that a missing field becomes a list entry rather
// than the first serde error.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    version: Option<u32>,
    beam: Option<RawBeam>,
    initial: Option<RawInitial>,
    grid: Option<RawGrid>,
    propagation: Option<RawPropagation>,
    noise: Option<RawNoise>,
    sweep: Option<SweepSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    voltage: Option<f64>,
    current: Option<f64>,
    aperture_radius: Option<f64>,
    l: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    kind: Option<InitialKind>,
    width: Option<f64>,
    kt: Option<f64>,
    #[serde(rename = "match")]
    match_to: Option<MatchSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Option<usize>,
    box_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPropagation {
    nonlinear: Option<bool>,
    dzeta: Option<f64>,
    z_max: Option<f64>,
    record_stride: Option<usize>,
    absorber: Option<bool>,
    stop_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    ratio: Option<f64>,
    seed: Option<u64>,
}

impl RawScenario {
    fn into_scenario(self) -> Result<Scenario> {
        let mut missing = Vec::new();
        let mut need = |name: &str, present: bool| {
            if !present {
                missing.push(name.to_string());
            }
        };
        let beam = self.beam.unwrap_or_default();
        let initial = self.initial.unwrap_or_default();
        let grid = self.grid.unwrap_or_default();
        need("name", self.name.is_some());
        need("beam.voltage", beam.voltage.is_some());
        need("beam.current", beam.current.is_some());
        need("beam.aperture_radius", beam.aperture_radius.is_some());
        need("initial.kind", initial.kind.is_some());
        need("grid.n", grid.n.is_some());
        if !missing.is_empty() {
            return Err(Error::Schema(missing));
        }
        let prop = self.propagation.unwrap_or_default();
        let noise = self.noise.unwrap_or_default();
        let scenario = Scenario {
            name: self.name.unwrap_or_default(),
            version: self.version.unwrap_or(SCHEMA_VERSION),
            beam: BeamSpec {
                voltage: beam.voltage.unwrap_or_default(),
                current: beam.current.unwrap_or_default(),
                aperture_radius: beam.aperture_radius.unwrap_or_default(),
                l: beam.l.unwrap_or(0),
            },
            initial: InitialSpec {
                kind: initial.kind.unwrap_or(InitialKind::Gaussian),
                width: initial.width,
                kt: initial.kt,
                match_to: initial.match_to,
            },
            grid: GridSpec {
                n: grid.n.unwrap_or_default(),
                box_factor: grid.box_factor.unwrap_or(4.0),
            },
            propagation: PropagationSpec {
                nonlinear: prop.nonlinear.unwrap_or(true),
                dzeta: prop.dzeta,
                z_max: prop.z_max,
                record_stride: prop.record_stride.unwrap_or(5),
                absorber: prop.absorber.unwrap_or(true),
                stop_factor: prop.stop_factor.or(Some(1.05)),
            },
            noise: NoiseSpec {
                ratio: noise.ratio.unwrap_or(0.0),
                seed: noise.seed.unwrap_or(1),
            },
            sweep: self.sweep,
        };
        if scenario.version != SCHEMA_VERSION {
            return Err(Error::Schema(vec![format!(
                "version ({} is not the supported {SCHEMA_VERSION})",
                scenario.version
            )]));
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "custom"
[beam]
voltage = 20e3
current = 50e-6
aperture_radius = 140e-9
[initial]
kind = "bessel"
width = 8e-9
[grid]
n = 128
"#;

    #[test]
    fn empty_file_lists_every_missing_field() {
        match Scenario::from_toml("") {
            Err(Error::Schema(fields)) => {
                for f in ["name", "beam.voltage", "beam.current", "beam.aperture_radius", "initial.kind", "grid.n"] {
                    assert!(fields.iter().any(|x| x == f), "{f} missing from {fields:?}");
                }
            }
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_fills_defaults() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.beam.l, 0);
        assert_eq!(s.grid.box_factor, 4.0);
        assert!(s.propagation.nonlinear && s.propagation.absorber);
        assert_eq!(s.propagation.stop_factor, Some(1.05));
        assert_eq!(s.noise.ratio, 0.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        let back = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn invalid_values_are_collected() {
        let text = MINIMAL.replace("n = 128", "n = 100\nbox_factor = 1.0").replace("width = 8e-9", "width = -1.0");
        match Scenario::from_toml(&text) {
            Err(Error::Schema(fields)) => {
                assert_eq!(fields.len(), 3, "{fields:?}");
            }
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_and_wrong_versions_are_rejected() {
        assert!(matches!(Scenario::from_toml(&format!("{MINIMAL}\n[extra]\nx = 1")), Err(Error::Parse(_))));
        let text = format!("version = 99\n{MINIMAL}");
        assert!(matches!(Scenario::from_toml(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn flat_solution_requires_zero_charge() {
        let text = MINIMAL.replace("kind = \"bessel\"", "kind = \"shape-preserving-flat\"").replace("[initial]", "[initial]\n").replace("aperture_radius = 140e-9", "aperture_radius = 140e-9\nl = 1");
        assert!(matches!(Scenario::from_toml(&text), Err(Error::Schema(_))));
    }
}
