//! `cmc` — command-line front end for the H^2 x R CMC surface toolkit.
//!
//! Subcommands generate Delaunay surfaces, solve the horizontal
//! Killing-graph Dirichlet problem, evaluate fluxes and Alexandrov traces,
//! and run the built-in verification suite. All data outputs are plain
//! CSV/JSON with fixed formatting: identical inputs produce byte-identical
//! files.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cmc_h2r::alexandrov::{
    alexandrov_trace, alexandrov_trace_with_foliation, check_monotone_structure, check_usc,
    detect_symmetry_plane, FoliationSpec, MonotoneClass,
};
use cmc_h2r::delaunay::{
    integrate_profile, neck_bulge_radii, period, DelaunayParams, Period, DEFAULT_STEP,
};
use cmc_h2r::flux::{flux_rotational, flux_sliced, KillingDirection};
use cmc_h2r::geom::PointH2;
use cmc_h2r::io;
use cmc_h2r::killing_graph::{gradient_bound, solve_dirichlet, SolveError, SolveOpts};
use cmc_h2r::surface::{
    area_between_rotational, area_between_sliced, slice_rotational, RotationalSurface,
};

#[derive(Parser)]
#[command(
    name = "cmc",
    about = "Constant-mean-curvature surface toolkit for H^2 x R",
    version,
    after_help = "Environment: CMC_THREADS caps internal parallelism (default: all cores)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    /// Vertical Killing field d_z
    Z,
    /// Horizontal Killing field d_s
    S,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Delaunay surface profile and report its invariants
    Delaunay {
        /// Mean curvature H (must exceed 1/2)
        #[arg(long = "h")]
        h: f64,
        /// Flux parameter tau in (0, tau_max(H)]
        #[arg(long)]
        tau: f64,
        /// Number of periods of height to cover (cylinder: height units)
        #[arg(long, default_value_t = 1.0)]
        periods: f64,
        /// Arc-length integration step
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Write the profile CSV (t,z,rho,sigma) here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the rotational surface JSON here
        #[arg(long)]
        surface_out: Option<PathBuf>,
        /// Write a sliced surface JSON here (uses --slices and --points)
        #[arg(long)]
        sliced_out: Option<PathBuf>,
        /// Number of slices for --sliced-out
        #[arg(long, default_value_t = 200)]
        slices: usize,
        /// Points per circle for --sliced-out
        #[arg(long, default_value_t = 512)]
        points: usize,
    },
    /// Solve the Killing-graph Dirichlet problem on a masked grid
    Solve {
        /// Domain/boundary JSON description
        #[arg(long)]
        domain: PathBuf,
        /// Mean curvature H0 of the graph equation
        #[arg(long, default_value_t = 0.0)]
        h0: f64,
        /// Residual max-norm tolerance
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the solution CSV (r,z,u) here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the flux functional at a height
    Flux {
        /// Surface JSON (sliced or rotational)
        #[arg(long)]
        surface: PathBuf,
        /// Killing direction
        #[arg(long, value_enum)]
        dir: Direction,
        /// Evaluation height (a slice height for sliced surfaces)
        #[arg(long, allow_negative_numbers = true)]
        height: f64,
        /// Mean curvature H0 for the cap term of sliced surfaces
        #[arg(long, default_value_t = 0.0)]
        h0: f64,
    },
    /// Compute the Alexandrov trace and structural reports
    Alexandrov {
        /// Sliced surface JSON
        #[arg(long)]
        surface: PathBuf,
        /// Contact tolerance
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Write the trace CSV (z,alpha,provenance) here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional translation-foliation descriptor JSON
        #[arg(long)]
        foliation: Option<PathBuf>,
    },
    /// Evaluate the interior gradient bound for nonnegative solutions
    GradBound {
        /// r-coordinate of the disk center
        #[arg(long, allow_negative_numbers = true)]
        rp: f64,
        /// z-coordinate of the disk center
        #[arg(long, allow_negative_numbers = true)]
        zp: f64,
        /// Disk radius R
        #[arg(long, allow_negative_numbers = true)]
        radius: f64,
        /// Mean curvature H0 of the equation
        #[arg(long)]
        h0cmc: f64,
        /// Solution value at the center
        #[arg(long)]
        height: f64,
    },
    /// Lateral area of a surface between two heights
    Area {
        /// Surface JSON (sliced or rotational)
        #[arg(long)]
        surface: PathBuf,
        /// Lower height
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        /// Upper height
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
    },
    /// Run the full verification suite and print pass/fail per item
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn load_surface(path: &PathBuf) -> Result<io::Surface, String> {
    io::parse_surface_json(&read_file(path)?).map_err(|e| e.to_string())
}

fn run(cmd: Command) -> Result<ExitCode, String> {
    match cmd {
        Command::Delaunay {
            h,
            tau,
            periods,
            step,
            out,
            surface_out,
            sliced_out,
            slices,
            points,
        } => {
            let params = DelaunayParams::new(h, tau).map_err(|e| e.to_string())?;
            let per = period(&params);
            let z_span = match per {
                Period::Cylinder => periods.max(1e-3),
                Period::Value(p) => p * periods.max(1e-3),
            };
            let profile = integrate_profile(&params, PointH2::new(0.0, 0.0), z_span, step)
                .map_err(|e| e.to_string())?;
            let (rho_min, rho_max) = neck_bulge_radii(&params);
            println!("rho_min = {}", io::fmt_g17(rho_min));
            println!("rho_max = {}", io::fmt_g17(rho_max));
            match per {
                Period::Cylinder => println!("period = CYLINDER"),
                Period::Value(p) => println!("period = {}", io::fmt_g17(p)),
            }
            println!(
                "flux = {}",
                io::fmt_g17(std::f64::consts::TAU * params.tau())
            );
            if let Some(path) = out {
                write_file(&path, &io::profile_to_csv(&profile))?;
            }
            let surf = RotationalSurface::new(profile);
            if let Some(path) = surface_out {
                write_file(&path, &io::rotational_surface_to_json(&surf))?;
            }
            if let Some(path) = sliced_out {
                let (z0, z1) = (surf.profile.z_min(), surf.profile.z_max());
                let heights: Vec<f64> = (0..slices)
                    .map(|k| z0 + (z1 - z0) * (k as f64 + 0.5) / slices as f64)
                    .collect();
                let sliced =
                    slice_rotational(&surf, &heights, points).map_err(|e| e.to_string())?;
                write_file(&path, &io::sliced_surface_to_json(&sliced))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            domain,
            h0,
            tol,
            out,
        } => {
            let (dom, bc) =
                io::parse_domain_json(&read_file(&domain)?).map_err(|e| e.to_string())?;
            let opts = SolveOpts {
                tol,
                ..SolveOpts::default()
            };
            match solve_dirichlet(&dom, &bc, h0, &opts) {
                Ok(sol) => {
                    println!(
                        "converged: residual = {}, iterations = {}",
                        io::fmt_g17(sol.residual_norm),
                        sol.iterations
                    );
                    if let Some(path) = out {
                        write_file(&path, &io::solution_to_csv(&dom, &sol.u))?;
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ SolveError::NonConvergence { .. }) | Err(e @ SolveError::Singular) => {
                    eprintln!("non-convergence: {e}");
                    Ok(ExitCode::from(2))
                }
                Err(SolveError::Invalid(e)) => Err(e.to_string()),
            }
        }
        Command::Flux {
            surface,
            dir,
            height,
            h0,
        } => {
            let dir = match dir {
                Direction::Z => KillingDirection::Vertical,
                Direction::S => KillingDirection::Horizontal,
            };
            let result = match load_surface(&surface)? {
                io::Surface::Rotational(surf) => {
                    flux_rotational(&surf, dir, height).map_err(|e| e.to_string())?
                }
                io::Surface::Sliced(surf) => {
                    flux_sliced(&surf, dir, height, h0).map_err(|e| e.to_string())?
                }
            };
            println!("{}", io::to_json_string(&result));
            Ok(ExitCode::SUCCESS)
        }
        Command::Alexandrov {
            surface,
            tol,
            out,
            foliation,
        } => {
            let surf = match load_surface(&surface)? {
                io::Surface::Sliced(s) => s,
                io::Surface::Rotational(_) => {
                    return Err("alexandrov needs a sliced surface; generate one with \
                         `cmc delaunay --sliced-out ...`"
                        .to_string())
                }
            };
            let fol = match foliation {
                Some(path) => {
                    io::parse_foliation_json(&read_file(&path)?).map_err(|e| e.to_string())?
                }
                None => FoliationSpec { shift_s: 0.0 },
            };
            let trace = if fol.shift_s == 0.0 {
                alexandrov_trace(&surf, tol).map_err(|e| e.to_string())?
            } else {
                alexandrov_trace_with_foliation(&surf, &fol, tol).map_err(|e| e.to_string())?
            };
            let usc = check_usc(&trace, tol);
            println!(
                "usc: {}",
                if usc.passed() {
                    "pass".to_string()
                } else {
                    format!("violations at indices {:?}", usc.violations)
                }
            );
            match check_monotone_structure(&trace, tol) {
                Ok(MonotoneClass::Monotone) => println!("structure: MONOTONE"),
                Ok(MonotoneClass::DownUp { valley }) => {
                    println!("structure: DOWN_UP (valley index {valley})")
                }
                Ok(MonotoneClass::Violation { indices }) => {
                    println!("structure: VIOLATION at indices {indices:?}")
                }
                Err(e) => println!("structure: not classified ({e})"),
            }
            let sym = detect_symmetry_plane(&surf, &trace, 2.0 * tol);
            match sym.plane {
                Some(t) => println!("symmetry plane: s = {}", io::fmt_g17(t)),
                None => match sym.failing_slice {
                    Some(j) => println!("symmetry plane: none (slice {j} breaks reflection)"),
                    None => println!("symmetry plane: none (trace not constant)"),
                },
            }
            if let Some(path) = out {
                write_file(&path, &io::trace_to_csv(&trace))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GradBound {
            rp,
            zp,
            radius,
            h0cmc,
            height,
        } => {
            let bound = gradient_bound(rp, zp, radius, h0cmc, height).map_err(|e| e.to_string())?;
            println!("{}", io::fmt_g17(bound));
            Ok(ExitCode::SUCCESS)
        }
        Command::Area { surface, from, to } => {
            let area = match load_surface(&surface)? {
                io::Surface::Rotational(surf) => {
                    area_between_rotational(&surf, from, to).map_err(|e| e.to_string())?
                }
                io::Surface::Sliced(surf) => {
                    area_between_sliced(&surf, from, to).map_err(|e| e.to_string())?
                }
            };
            println!("{}", io::fmt_g17(area));
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let results = cmc_h2r::checks::run_all();
            let mut failures = 0usize;
            for (k, r) in results.iter().enumerate() {
                let status = if r.passed { "PASS" } else { "FAIL" };
                println!("[{status}] {:>2}. {} — {}", k + 1, r.name, r.detail);
                if !r.passed {
                    failures += 1;
                }
            }
            if failures == 0 {
                println!("all {} checks passed", results.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{failures} of {} checks failed", results.len());
                Ok(ExitCode::from(1))
            }
        }
    }
}
