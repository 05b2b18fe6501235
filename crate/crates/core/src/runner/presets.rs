//! Built-in scenario sets. Presets are fixed per [`SCHEMA_VERSION`]; change
//! the version when any value here changes meaning.

use crate::error::{Error, Result};

use super::scenario::{
    BeamSpec, GridSpec, InitialKind, InitialSpec, MatchSpec, NoiseSpec, PropagationSpec, Scenario, SweepAxis,
    SweepSpec, SCHEMA_VERSION,
};

pub const VOLTAGE: f64 = 20e3;
pub const CURRENT: f64 = 50e-6;
pub const LOW_CURRENT: f64 = 5e-6;
pub const APERTURE: f64 = 140e-9;
pub const WIDE_APERTURE: f64 = 420e-9;
/// Launch width of the comparison runs.
pub const WIDTH: f64 = 8e-9;
/// Launch width of the aperture comparison at the lower current.
pub const LOW_CURRENT_WIDTH: f64 = 16e-9;
/// Seeds of the noisy shape-preserving runs.
pub const NOISE_SEEDS: [u64; 3] = [1, 2, 3];
/// Charges of the profile set.
pub const PROFILE_CHARGES: [u32; 4] = [0, 1, 3, 5];
/// Charges of the mask set.
pub const MASK_CHARGES: [u32; 3] = [0, 1, 3];

/// Grid resolution class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Fast,
    Full,
}

impl Profile {
    pub fn grid(self) -> usize {
        match self {
            Profile::Fast => 256,
            Profile::Full => 512,
        }
    }
}

/// Names accepted by [`scenarios`].
pub const NAMES: [&str; 5] = ["fig3", "fig3-noise", "fig4", "fig5", "supp3"];

/// Scenario set of a named preset.
pub fn scenarios(name: &str, profile: Profile) -> Result<Vec<Scenario>> {
    match name {
        "fig3" => Ok(fig3(profile)),
        "fig3-noise" => Ok(fig3_noise(profile)),
        "fig4" => Ok(vec![fig4(profile)]),
        "fig5" => Ok(fig5(profile)),
        "supp3" => Ok(supp3(profile)),
        other => Err(Error::config(format!("unknown preset {other:?}; known: {}", NAMES.join(", ")))),
    }
}

fn base(name: &str, kind: InitialKind, profile: Profile) -> Scenario {
    Scenario {
        name: name.into(),
        version: SCHEMA_VERSION,
        beam: BeamSpec { voltage: VOLTAGE, current: CURRENT, aperture_radius: APERTURE, l: 0 },
        initial: InitialSpec { kind, width: Some(WIDTH), kt: None, match_to: None },
        grid: GridSpec { n: profile.grid(), box_factor: 4.0 },
        propagation: PropagationSpec {
            nonlinear: true,
            dzeta: None,
            z_max: None,
            record_stride: 5,
            absorber: true,
            stop_factor: Some(1.05),
        },
        noise: NoiseSpec { ratio: 0.0, seed: 1 },
        sweep: None,
    }
}

fn single(mut s: Scenario) -> Scenario {
    s.propagation.nonlinear = false;
    s
}

/// Gaussian and Bessel beams with and without space charge, the
/// shape-preserving beam, and the shape-preserving beam under noise.
pub fn fig3(profile: Profile) -> Vec<Scenario> {
    use InitialKind::*;
    let mut noisy = base("fig3f-shape-preserving-noise", ShapePreserving, profile);
    noisy.noise = NoiseSpec { ratio: 1.0, seed: NOISE_SEEDS[0] };
    vec![
        single(base("fig3a-gaussian-single", Gaussian, profile)),
        single(base("fig3b-bessel-single", Bessel, profile)),
        base("fig3c-gaussian-multi", Gaussian, profile),
        base("fig3d-bessel-multi", Bessel, profile),
        base("fig3e-shape-preserving", ShapePreserving, profile),
        noisy,
    ]
}

/// The noisy shape-preserving run over every seed in [`NOISE_SEEDS`].
pub fn fig3_noise(profile: Profile) -> Vec<Scenario> {
    NOISE_SEEDS
        .iter()
        .map(|&seed| {
            let mut s = base(&format!("fig3f-noise-seed{seed}"), InitialKind::ShapePreserving, profile);
            s.noise = NoiseSpec { ratio: 1.0, seed };
            s
        })
        .collect()
}

/// Widths of the sweep in meters.
pub fn fig4_widths(profile: Profile) -> Vec<f64> {
    let nm: &[f64] = match profile {
        Profile::Fast => &[1.0, 2.0, 4.0, 8.0],
        Profile::Full => &[1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.0, 8.5],
    };
    nm.iter().map(|w| w * 1e-9).collect()
}

/// Range and main-lobe current against width for the shape-preserving and
/// Bessel families.
pub fn fig4(profile: Profile) -> Scenario {
    let mut s = base("fig4-width-sweep", InitialKind::ShapePreserving, profile);
    s.initial.width = None;
    // narrow points refine the grid further, see run_sweep
    s.grid.box_factor = 2.5;
    s.sweep = Some(SweepSpec {
        axis: SweepAxis::Width,
        values: fig4_widths(profile),
        families: vec![InitialKind::ShapePreserving, InitialKind::Bessel],
    });
    s
}

/// Charge-one beams tied to the charge-zero shape-preserving solution of
/// the comparison runs.
pub fn fig5(profile: Profile) -> Vec<Scenario> {
    use InitialKind::*;
    [("fig5a-laguerre-gauss", LaguerreGauss), ("fig5b-bessel", Bessel), ("fig5c-shape-preserving", ShapePreserving)]
        .into_iter()
        .map(|(name, kind)| {
            let mut s = base(name, kind, profile);
            s.beam.l = 1;
            s.initial.width = None;
            s.initial.match_to = Some(MatchSpec { l: 0, width: WIDTH });
            s
        })
        .collect()
}

/// Three families through two apertures at the lower current.
pub fn supp3(profile: Profile) -> Vec<Scenario> {
    use InitialKind::*;
    let mut out = Vec::new();
    for (tag, radius) in [("140nm", APERTURE), ("420nm", WIDE_APERTURE)] {
        for (fam, kind) in [("gaussian", Gaussian), ("bessel", Bessel), ("shape-preserving", ShapePreserving)] {
            let mut s = base(&format!("supp3-{fam}-{tag}"), kind, profile);
            s.beam.current = LOW_CURRENT;
            s.beam.aperture_radius = radius;
            s.initial.width = Some(LOW_CURRENT_WIDTH);
            s.grid.box_factor = 2.5;
            out.push(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates_and_round_trips() {
        for profile in [Profile::Fast, Profile::Full] {
            for name in NAMES {
                for s in scenarios(name, profile).unwrap() {
                    s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
                    assert_eq!(s.version, SCHEMA_VERSION);
                    let back = Scenario::from_toml(&s.to_toml().unwrap()).unwrap();
                    assert_eq!(back, s);
                }
            }
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<String> = NAMES
            .iter()
            .flat_map(|n| scenarios(n, Profile::Fast).unwrap())
            .map(|s| s.name)
            .collect();
        let total = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), total);
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert!(matches!(scenarios("fig9", Profile::Fast), Err(Error::Config(_))));
    }
}
