use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ebeam::error::{Error, Result};
use ebeam::field::{winding_number, Field2D};
use ebeam::metrics::{describe_range, nondiffraction_range, LobeTracker, PropagationTrace};
use ebeam::params::bohr_to_meters;
use ebeam::runner::presets::{self, Profile};
use ebeam::runner::{run_mask_pipeline, run_set, run_sweep, solve_profiles, MaskJob, ProfileSetSpec, RunSummary, Scenario};

#[derive(Parser)]
#[command(name = "ebeam", version, about = "Shape-preserving multi-electron beam simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct ProfileFlags {
    /// Small grids (default)
    #[arg(long, conflicts_with = "full")]
    fast: bool,
    /// Production grids
    #[arg(long)]
    full: bool,
}

impl ProfileFlags {
    fn profile(self) -> Profile {
        if self.full {
            Profile::Full
        } else {
            Profile::Fast
        }
    }
}

#[derive(Args)]
struct Source {
    /// Scenario file (TOML)
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in scenario set
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve radial profiles of several charges at a shared kT
    Solve {
        #[arg(long)]
        out: PathBuf,
        /// Width of the charge-zero beam fixing kT (nm)
        #[arg(long, default_value_t = presets::WIDTH * 1e9)]
        width_nm: f64,
        /// Beam current (A)
        #[arg(long, default_value_t = presets::CURRENT)]
        current: f64,
        /// Acceleration voltage (V)
        #[arg(long, default_value_t = presets::VOLTAGE)]
        voltage: f64,
        /// Aperture radius (nm)
        #[arg(long, default_value_t = presets::APERTURE * 1e9)]
        aperture_nm: f64,
        #[arg(long, value_delimiter = ',', default_values_t = presets::PROFILE_CHARGES)]
        charges: Vec<u32>,
        /// Skip the kT = 0 profile
        #[arg(long)]
        no_flat: bool,
    },
    /// Propagate a scenario or every scenario of a preset
    Propagate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        /// Override the noise seed
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[command(flatten)]
        profile: ProfileFlags,
    },
    /// Run a width sweep
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[command(flatten)]
        profile: ProfileFlags,
    },
    /// Synthesize and verify holographic masks
    Mask {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = presets::MASK_CHARGES)]
        charges: Vec<u32>,
        /// Mask grid side (defaults to four times the propagation grid)
        #[arg(long)]
        n: Option<usize>,
        /// Carrier offset in target radii
        #[arg(long)]
        carrier_ratio: Option<f64>,
        #[command(flatten)]
        profile: ProfileFlags,
    },
    /// Summarize a bundle directory, a trace CSV or a raw field
    Report { path: PathBuf },
    /// Write the built-in scenarios as TOML files
    Presets {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        profile: ProfileFlags,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn load(source: &Source, profile: Profile) -> Result<Vec<Scenario>> {
    match (&source.scenario, &source.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            Ok(vec![Scenario::from_toml(&text).map_err(|e| e.context(path.display().to_string()))?])
        }
        (None, Some(name)) => presets::scenarios(name, profile),
        (None, None) => Err(Error::config("give --scenario or --preset")),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve { out, width_nm, current, voltage, aperture_nm, charges, no_flat } => {
            let spec = ProfileSetSpec {
                voltage,
                current,
                aperture_radius: aperture_nm * 1e-9,
                width: width_nm * 1e-9,
                charges,
                include_flat: !no_flat,
            };
            let (summary, _) = solve_profiles(&spec, Some(&out))?;
            for p in &summary.profiles {
                println!(
                    "{:>5}  kT = {:.6e} 1/m  width = {:.4} nm  lobes = {}  main-lobe fraction = {:.4}",
                    p.label,
                    p.kt,
                    p.main_lobe_width * 1e9,
                    p.lobe_count,
                    p.main_lobe_fraction
                );
            }
        }
        Command::Propagate { source, out, seed, threads, profile } => {
            let mut scenarios = load(&source, profile.profile())?;
            if scenarios.iter().any(|s| s.sweep.is_some()) {
                return Err(Error::config("scenario has a sweep section; use the sweep verb"));
            }
            if let Some(seed) = seed {
                scenarios.iter_mut().for_each(|s| s.noise.seed = seed);
            }
            for s in run_set(&scenarios, Some(&out), threads)? {
                print_summary(&s);
            }
        }
        Command::Sweep { source, out, threads, profile } => {
            for s in load(&source, profile.profile())? {
                let dir = out.join(&s.name);
                let r = run_sweep(&s, Some(&dir), threads)?;
                for p in &r.points {
                    match &p.error {
                        None => println!(
                            "{:<18} w = {:>7.3} nm  L_d = {:>12} m  lobe current = {:.4e} A",
                            p.family.label(),
                            p.width * 1e9,
                            describe_range(p.ld_m.unwrap_or(f64::INFINITY), p.z_reached.unwrap_or(f64::NAN)),
                            p.main_lobe_current.unwrap_or(f64::NAN)
                        ),
                        Some(e) => println!("{:<18} w = {:>7.3} nm  failed: {e}", p.family.label(), p.width * 1e9),
                    }
                }
                println!("maximal width: {:.4} nm", r.maximal_width * 1e9);
                match r.critical_width {
                    Some(w) => println!("critical width: {:.3} nm", w * 1e9),
                    None => println!("critical width: not bracketed by the sweep"),
                }
            }
        }
        Command::Mask { out, charges, n, carrier_ratio, profile } => {
            for l in charges {
                let mut job = MaskJob::preset(l, profile.profile());
                if let Some(n) = n {
                    job.n = n;
                }
                job.carrier_ratio = carrier_ratio;
                let r = run_mask_pipeline(&job, Some(&out.join(format!("l{l}"))))?;
                println!(
                    "l = {l}: fidelity {:.4} (median threshold {:.4}), fork count {}, winding {}",
                    r.optimized.fidelity_plus, r.median.fidelity_plus, r.optimized.fork_charge, r.optimized.winding_plus
                );
            }
        }
        Command::Report { path } => report(&path)?,
        Command::Presets { out, profile } => {
            ebeam::io::create_dir(&out)?;
            for name in presets::NAMES {
                for s in presets::scenarios(name, profile.profile())? {
                    let path = out.join(format!("{}.toml", s.name));
                    std::fs::write(&path, s.to_toml()?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                }
            }
        }
    }
    Ok(())
}

fn print_summary(s: &RunSummary) {
    println!(
        "{:<32} L_d = {:>12} m  w0 = {:.3} nm  lobes = {:>3}  lobe current = {:.4e} A",
        s.name,
        describe_range(s.ld_m.unwrap_or(f64::INFINITY), s.z_reached),
        s.initial_width * 1e9,
        s.lobe_count,
        s.main_lobe_current
    );
}

fn report(path: &Path) -> Result<()> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())));
    if path.is_dir() {
        let summary: RunSummary = serde_json::from_str(&read(&path.join("summary.json"))?)?;
        print_summary(&summary);
        let trace = PropagationTrace::read_csv(&read(&path.join("trace.csv"))?)?;
        println!("{} trace rows, z reached {:.4e} m", trace.len(), trace.z_max);
    } else if path.extension().is_some_and(|e| e == "csv") {
        let trace = PropagationTrace::read_csv(&read(path)?)?;
        let ld = nondiffraction_range(&trace)?;
        println!("L_d = {} m over {} rows", describe_range(ld, trace.z_max), trace.len());
    } else {
        let field = Field2D::read_raw(path)?;
        let snap = LobeTracker::default().measure(&field)?;
        println!(
            "n = {}  width = {:.4} nm  main-lobe radius = {:.4} nm  main-lobe fraction = {:.4}  winding = {}",
            field.n,
            bohr_to_meters(snap.width) * 1e9,
            bohr_to_meters(snap.lobe_radius) * 1e9,
            snap.lobe_fraction,
            winding_number(&field, snap.width)
        );
    }
    Ok(())
}
