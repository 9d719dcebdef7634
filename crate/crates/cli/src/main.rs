//! `mloop` — command-line interface to the momentum-loop turbulence toolkit.
//!
//! Every run is reproducible bit-exactly from its metadata sidecar: the
//! seed, the full configuration echo, and the version string are written
//! next to each data file, and results are independent of `--workers`.
//!
//! Exit codes: 0 success, 2 validation/input error, 3 numerical-failure
//! diagnostics (integrator step underflow, non-converged quadrature).

mod config;

use clap::{Parser, Subcommand, ValueEnum};
use config::Config;
use mloop_core::euler::{EnsembleSampler, PairMeasure};
use mloop_core::init_measure::{
    contour_noise_contraction, gaussian_limit_check, w_measure, KernelProfile, NoiseParams,
};
use mloop_core::loops::{make_fourier_momentum_loop, SpatialLoop};
use mloop_core::mle::{explosion_residual, fixed_point_residual, integrate_mle};
use mloop_core::number_theory::{empirical_cot_dist, totient_sieve, CotDistLaw};
use mloop_core::observables::{loop_functional_mc, vorticity_npoint, CorrelatorRequest};
use mloop_core::rng::{stream_rng, Stream};
use mloop_core::rotation::{calibration_report, exact_psi_rotation, mc_psi_rotation};
use mloop_core::vec3::{AntisymMatrix, Rotation, Vec3};
use mloop_core::{io as mio, Error};
use rand_distr::Distribution;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const VERSION_STRING: &str = concat!("mloop ", env!("CARGO_PKG_VERSION"));

#[derive(Parser)]
#[command(name = "mloop", version, about = "Momentum-loop turbulence toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output directory, or a .csv/.json path naming the primary artifact.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Run seed; overrides any seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: MLOOP_WORKERS or all cores). Results are
    /// identical for any value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Primary data format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Momentum-loop equation: integration, fixed-point and blow-up checks.
    Mle {
        #[command(subcommand)]
        cmd: MleCmd,
    },
    /// Star-polygon ensemble sampling.
    Ensemble {
        #[command(subcommand)]
        cmd: EnsembleCmd,
    },
    /// Totients and the cotangent-squared distribution law.
    Nt {
        #[command(subcommand)]
        cmd: NtCmd,
    },
    /// Monte Carlo observables over the ensemble.
    Obs {
        #[command(subcommand)]
        cmd: ObsCmd,
    },
    /// The exactly solvable uniform-rotation flow.
    Rotation {
        #[command(subcommand)]
        cmd: RotationCmd,
    },
    /// Noisy initial data and the single-link measure.
    Init {
        #[command(subcommand)]
        cmd: InitCmd,
    },
}

#[derive(Subcommand)]
enum MleCmd {
    /// Integrate the flow from a configured initial loop.
    Integrate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fixed-point residuals of a stored ensemble sample.
    FixedPoint {
        #[arg(long)]
        sample: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Scan random real profiles for the blow-up equation's lower bound.
    NoExplosionScan {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Vertices per scanned profile.
        #[arg(long, default_value_t = 8)]
        loop_size: usize,
    },
}

#[derive(Subcommand)]
enum EnsembleCmd {
    /// Draw samples and write one JSON file per sample.
    Sample {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        qmax: u64,
        #[arg(long)]
        count: u64,
    },
}

#[derive(Subcommand)]
enum NtCmd {
    /// Histogram of X = cot²(πp/q)/N² over coprime pairs q < N.
    Cotdist {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 64)]
        bins: usize,
    },
    /// CSV table of φ and Φ up to a limit.
    Totient {
        #[arg(long)]
        max: u64,
    },
}

#[derive(Subcommand)]
enum ObsCmd {
    /// Monte Carlo loop functional at time t.
    Psi {
        #[arg(long = "loop", value_name = "FILE")]
        loop_file: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// n-point vorticity correlator at the given points.
    Vort2pt {
        /// Correlation point "x,y,z"; repeat for each point.
        #[arg(long = "r", required = true)]
        points: Vec<String>,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
}

#[derive(Subcommand)]
enum RotationCmd {
    /// Covariance calibration plus MC-vs-exact loop functional report.
    Verify {
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Rotation generator component φ_xy.
        #[arg(long, default_value_t = 0.1)]
        phi: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
}

#[derive(Subcommand)]
enum InitCmd {
    /// Single-link measure of a sampled configuration plus its Gaussian
    /// large-N fit.
    Wmeasure {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Contour noise contraction of a stored loop.
    NoiseContract {
        #[arg(long = "loop", value_name = "FILE")]
        loop_file: PathBuf,
        #[arg(long)]
        r0: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
}

/// Where the primary artifact and its sidecar go.
struct OutPaths {
    primary: PathBuf,
    meta: PathBuf,
}

fn out_paths(out: &Path, default_name: &str) -> Result<OutPaths, Error> {
    let is_file = out
        .extension()
        .map(|e| e == "csv" || e == "json")
        .unwrap_or(false);
    if is_file {
        let dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(&dir)?;
        }
        let meta = out.with_extension("meta.json");
        Ok(OutPaths {
            primary: out.to_path_buf(),
            meta,
        })
    } else {
        std::fs::create_dir_all(out)?;
        Ok(OutPaths {
            primary: out.join(default_name),
            meta: out.join("run.json"),
        })
    }
}

fn write_meta(paths: &OutPaths, seed: u64, workers: usize, config: serde_json::Value) -> Result<(), Error> {
    let argv: Vec<String> = std::env::args().collect();
    mio::write_meta(
        &paths.meta,
        &mio::RunMeta {
            tool: "mloop",
            version: VERSION_STRING,
            command: argv.join(" "),
            seed,
            workers,
            config,
        },
    )
}

fn parse_point(s: &str) -> Result<Vec3, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::invalid(format!("r: expected \"x,y,z\", got \"{s}\"")));
    }
    let mut v = Vec3::ZERO;
    for (i, p) in parts.iter().enumerate() {
        v.0[i] = p
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("r: component \"{p}\" is not a number")))?;
    }
    Ok(v)
}

fn read_spatial(path: &Path) -> Result<SpatialLoop, Error> {
    match mio::read_loop(path)? {
        mio::AnyLoop::Spatial(c) => Ok(c),
        mio::AnyLoop::Momentum(_) => Err(Error::invalid(
            "loop: expected a real spatial loop, found a complex momentum loop",
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli
        .workers
        .or_else(|| {
            std::env::var("MLOOP_WORKERS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    if workers > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match run(&cli, workers) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Integration { .. } | Error::QuadratureAccuracy { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: &Cli, workers: usize) -> Result<ExitCode, Error> {
    match &cli.command {
        Cmd::Mle { cmd } => run_mle(cli, cmd, workers),
        Cmd::Ensemble { cmd } => run_ensemble(cli, cmd, workers),
        Cmd::Nt { cmd } => run_nt(cli, cmd, workers),
        Cmd::Obs { cmd } => run_obs(cli, cmd, workers),
        Cmd::Rotation { cmd } => run_rotation(cli, cmd, workers),
        Cmd::Init { cmd } => run_init(cli, cmd, workers),
    }
}

fn run_mle(cli: &Cli, cmd: &MleCmd, workers: usize) -> Result<ExitCode, Error> {
    match cmd {
        MleCmd::Integrate { config } => {
            let cfg = Config::from_path(config)?;
            let params = cfg.sim_params(cli.seed)?;
            let t_end = cfg.f64_or("t_end", 1.0)?;
            let save_points = cfg.usize_or("save_points", 16)?;
            let init = cfg.get("init").unwrap_or("fourier");
            let p0 = if let Some(path) = init.strip_prefix("file:") {
                match mio::read_loop(Path::new(path))? {
                    mio::AnyLoop::Momentum(p) => p,
                    mio::AnyLoop::Spatial(_) => {
                        return Err(Error::invalid(
                            "init: expected a complex momentum loop file",
                        ))
                    }
                }
            } else if init == "fourier" {
                make_fourier_momentum_loop(
                    params.seed,
                    params.n,
                    cfg.usize_or("modes", 6)?,
                    cfg.f64_or("decay", 2.0)?,
                    cfg.f64_or("amplitude", 1.0)?,
                    cfg.f64_or("imag_fraction", 0.5)?,
                )?
            } else {
                return Err(Error::invalid(format!(
                    "init: expected \"fourier\" or \"file:<path>\", got \"{init}\""
                )));
            };
            let paths = out_paths(&cli.out, "trajectory.csv")?;
            let traj = integrate_mle(&p0, &params, t_end, save_points)?;
            mio::trajectory_csv(&paths.primary, &traj)?;
            let mut echo = cfg.echo();
            echo["outcome"] = json!(format!("{:?}", traj.outcome));
            echo["accepted_steps"] = json!(traj.accepted);
            echo["rejected_steps"] = json!(traj.rejected);
            write_meta(&paths, params.seed, workers, echo)?;
            if traj.completed() {
                println!(
                    "integrated to t = {t_end}: {} accepted / {} rejected steps -> {}",
                    traj.accepted,
                    traj.rejected,
                    paths.primary.display()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("integration stopped early: {:?}", traj.outcome);
                Ok(ExitCode::from(3))
            }
        }
        MleCmd::FixedPoint { sample, gamma } => {
            let s = mio::read_sample(sample)?;
            let f = s.momentum_loop();
            let rep = fixed_point_residual(&f, *gamma);
            let paths = out_paths(&cli.out, "fixed_point.json")?;
            mio::write_json(
                &paths.primary,
                &json!({
                    "gamma": gamma,
                    "n": f.n(),
                    "max_vector": rep.max_vector,
                    "max_side": rep.max_side,
                    "max_bracket": rep.max_bracket,
                    "mean_vector": rep.mean_vector,
                    "max_overall": rep.max_overall(),
                }),
            )?;
            write_meta(&paths, 0, workers, json!({"sample": sample.display().to_string()}))?;
            println!("max residual {:.3e} (gamma = {gamma})", rep.max_overall());
            Ok(ExitCode::SUCCESS)
        }
        MleCmd::NoExplosionScan {
            trials,
            gamma,
            loop_size,
        } => {
            if *trials == 0 {
                return Err(Error::invalid("trials: must be > 0"));
            }
            let seed = cli.seed.unwrap_or(0);
            let normal = rand_distr::StandardNormal;
            let mut min_max_residual = f64::INFINITY;
            let mut min_a = f64::INFINITY;
            for trial in 0..*trials {
                let mut rng = stream_rng(seed, Stream::ExplosionScan, trial);
                let vertices: Vec<mloop_core::vec3::CVec3> = (0..*loop_size)
                    .map(|_| {
                        let mut v = Vec3::ZERO;
                        for i in 0..3 {
                            let g: f64 = normal.sample(&mut rng);
                            v.0[i] = g;
                        }
                        v.to_complex()
                    })
                    .collect();
                let f = mloop_core::loops::MomentumLoop::new(vertices, true)?;
                let rep = explosion_residual(&f, *gamma);
                min_max_residual = min_max_residual.min(rep.max_residual);
                min_a = min_a.min(rep.min_a);
            }
            let paths = out_paths(&cli.out, "no_explosion_scan.json")?;
            mio::write_json(
                &paths.primary,
                &json!({
                    "trials": trials,
                    "gamma": gamma,
                    "loop_size": loop_size,
                    "seed": seed,
                    "min_a": min_a,
                    "residual_lower_bound": min_max_residual,
                }),
            )?;
            write_meta(&paths, seed, workers, json!({"trials": trials, "gamma": gamma}))?;
            println!(
                "scanned {trials} profiles: min a = {min_a:.6}, residual lower bound {min_max_residual:.3e}"
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_ensemble(cli: &Cli, cmd: &EnsembleCmd, workers: usize) -> Result<ExitCode, Error> {
    match cmd {
        EnsembleCmd::Sample { n, qmax, count } => {
            let seed = cli.seed.unwrap_or(0);
            let sampler = EnsembleSampler::new(*n, *qmax, seed, PairMeasure::CoprimeUniform)?;
            std::fs::create_dir_all(&cli.out)?;
            for i in 0..*count {
                let s = sampler.sample(i);
                let path = cli.out.join(format!("sample_{i:06}.json"));
                mio::write_json(&path, &mio::sample_to_json(&s))?;
            }
            let redraws = sampler
                .infeasible_redraws
                .load(std::sync::atomic::Ordering::Relaxed);
            let paths = out_paths(&cli.out, "unused")?;
            write_meta(
                &paths,
                seed,
                workers,
                json!({"n": n, "qmax": qmax, "count": count, "infeasible_redraws": redraws}),
            )?;
            println!("wrote {count} samples to {}", cli.out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_nt(cli: &Cli, cmd: &NtCmd, workers: usize) -> Result<ExitCode, Error> {
    match cmd {
        NtCmd::Cotdist { n, bins } => {
            // Enough branches for every nonzero X down to the smallest
            // cot²(πp/q)/N² the enumeration can produce.
            let branches = (2 * n * n / 3).clamp(1000, 2_000_000);
            let law = CotDistLaw::new(branches)?;
            let emp = empirical_cot_dist(*n, *bins, &law)?;
            let paths = out_paths(&cli.out, "cotdist.csv")?;
            let rows: Vec<Vec<f64>> = (0..*bins)
                .map(|b| {
                    vec![
                        emp.bin_edges[b],
                        emp.bin_edges[b + 1],
                        emp.counts[b] as f64,
                        emp.weighted_mass[b],
                        emp.law_mass[b],
                    ]
                })
                .collect();
            mio::write_csv(
                &paths.primary,
                &["x_lo", "x_hi", "count", "weighted_mass", "law_mass"],
                &rows,
            )?;
            write_meta(
                &paths,
                0,
                workers,
                json!({
                    "n": n, "bins": bins, "pairs": emp.pair_count,
                    "ks_weighted": emp.ks_weighted,
                    "atom_weight": law.atom_weight(),
                }),
            )?;
            println!(
                "{} pairs, weighted KS distance {:.5} -> {}",
                emp.pair_count,
                emp.ks_weighted,
                paths.primary.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        NtCmd::Totient { max } => {
            let table = totient_sieve(*max)?;
            let paths = out_paths(&cli.out, "totient.csv")?;
            let file = std::fs::File::create(&paths.primary)?;
            use std::io::Write;
            let mut w = std::io::BufWriter::new(file);
            writeln!(w, "n,phi,Phi").map_err(Error::Io)?;
            for i in 1..=*max {
                writeln!(w, "{},{},{}", i, table.phi(i), table.phi_sum(i)).map_err(Error::Io)?;
            }
            drop(w);
            write_meta(&paths, 0, workers, json!({"max": max}))?;
            println!("wrote totients up to {max} -> {}", paths.primary.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_obs(cli: &Cli, cmd: &ObsCmd, workers: usize) -> Result<ExitCode, Error> {
    match cmd {
        ObsCmd::Psi {
            loop_file,
            t,
            config,
            samples,
        } => {
            let c = read_spatial(loop_file)?;
            let cfg = Config::from_path(config)?;
            let params = cfg.sim_params(cli.seed)?;
            let qmax = cfg.u64_or("qmax", (params.n as u64 - 1).min(16))?;
            let sampler =
                EnsembleSampler::new(params.n as u64, qmax, params.seed, PairMeasure::CoprimeUniform)?;
            let est = loop_functional_mc(&c, *t, &params, &sampler, *samples)?;
            let paths = out_paths(&cli.out, "psi.csv")?;
            match cli.format {
                Format::Csv => mio::write_csv(
                    &paths.primary,
                    &["t", "re", "im", "stderr_re", "stderr_im", "n_samples"],
                    &[vec![
                        *t,
                        est.mean.re,
                        est.mean.im,
                        est.stderr[0],
                        est.stderr[1],
                        *samples as f64,
                    ]],
                )?,
                Format::Json => mio::write_json(
                    &paths.primary.with_extension("json"),
                    &json!({
                        "t": t, "re": est.mean.re, "im": est.mean.im,
                        "stderr": est.stderr, "n_samples": samples,
                    }),
                )?,
            }
            write_meta(&paths, params.seed, workers, cfg.echo())?;
            println!(
                "psi({t}) = {:.6} {:+.6}i ± ({:.1e}, {:.1e})",
                est.mean.re, est.mean.im, est.stderr[0], est.stderr[1]
            );
            Ok(ExitCode::SUCCESS)
        }
        ObsCmd::Vort2pt {
            points,
            t,
            config,
            samples,
        } => {
            let pts: Result<Vec<Vec3>, Error> = points.iter().map(|s| parse_point(s)).collect();
            let pts = pts?;
            let cfg = Config::from_path(config)?;
            let params = cfg.sim_params(cli.seed)?;
            let qmax = cfg.u64_or("qmax", (params.n as u64 - 1).min(16))?;
            let req = CorrelatorRequest {
                points: pts.clone(),
                t: *t,
                params,
                q_max: qmax,
                n_samples: *samples,
                theta_resolution: None,
            };
            let est = vorticity_npoint(&req)?;
            let paths = out_paths(&cli.out, "vorticity_correlator.csv")?;
            let n_pts = pts.len();
            let sep = if n_pts >= 2 {
                (pts[1] - pts[0]).norm()
            } else {
                0.0
            };
            let mut rows = Vec::new();
            for flat in 0..est.len() {
                let mut idx = flat;
                let mut comps = vec![0.0; n_pts];
                for slot in (0..n_pts).rev() {
                    comps[slot] = (idx % 3) as f64;
                    idx /= 3;
                }
                let mut row = vec![sep];
                row.extend(comps);
                row.extend([
                    est.mean[flat].re,
                    est.mean[flat].im,
                    est.stderr[flat][0],
                    est.stderr[flat][1],
                ]);
                rows.push(row);
            }
            let mut header = vec!["separation".to_string()];
            header.extend((0..n_pts).map(|i| format!("axis_{i}")));
            header.extend(
                ["re", "im", "stderr_re", "stderr_im"]
                    .iter()
                    .map(|s| s.to_string()),
            );
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            mio::write_csv(&paths.primary, &header_refs, &rows)?;
            write_meta(&paths, req.params.seed, workers, cfg.echo())?;
            println!(
                "{}-point correlator at separation {sep:.4} -> {}",
                n_pts,
                paths.primary.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_rotation(cli: &Cli, cmd: &RotationCmd, workers: usize) -> Result<ExitCode, Error> {
    match cmd {
        RotationCmd::Verify { n, phi, samples } => {
            let seed = cli.seed.unwrap_or(1);
            let gen = AntisymMatrix::new(*phi, 0.0, 0.0);
            let cal = calibration_report(&gen, *n);
            let c = mloop_core::loops::make_circle_loop(1.0, *n, &Rotation::identity())?;
            let exact = exact_psi_rotation(&c, &gen);
            let mc = mc_psi_rotation(&c, &gen, *n, *samples, seed)?;
            let paths = out_paths(&cli.out, "rotation_verify.json")?;
            let sigmas = (mc.mean - exact).norm() / mc.stderr_norm().max(1e-300);
            mio::write_json(
                &paths.primary,
                &json!({
                    "exact": [exact.re, exact.im],
                    "mc": [mc.mean.re, mc.mean.im],
                    "stderr": mc.stderr,
                    "deviation_sigmas": sigmas,
                    "covariance_max_err": cal.max_err_calibrated,
                    "covariance_err_at_unit_scale": cal.max_err_literal,
                    "calibration_scale": cal.scale,
                    "n": n, "phi": phi, "samples": samples, "seed": seed,
                }),
            )?;
            write_meta(&paths, seed, workers, json!({"n": n, "phi": phi}))?;
            println!(
                "exact {:.6}{:+.6}i vs mc {:.6}{:+.6}i ({sigmas:.2} sigma); covariance err {:.2e} at scale {:.4}",
                exact.re, exact.im, mc.mean.re, mc.mean.im, cal.max_err_calibrated, cal.scale
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_init(cli: &Cli, cmd: &InitCmd, workers: usize) -> Result<ExitCode, Error> {
    match cmd {
        InitCmd::Wmeasure { config, n } => {
            let cfg = Config::from_path(config)?;
            let m0 = cfg.f64_or("m0", 1.0)?;
            let seed = cli.seed.unwrap_or(cfg.u64_or("seed", 0)?);
            let spread_lo = cfg.f64_or("spread_lo", 0.02)?;
            let spread_hi = cfg.f64_or("spread_hi", 0.1)?;
            let configs = cfg.usize_or("configs", 16)?;
            let fit = gaussian_limit_check(*n, m0, seed, (spread_lo, spread_hi), configs)?;
            // One representative configuration for the raw density value.
            let normal = rand_distr::StandardNormal;
            let mut rng = stream_rng(seed, Stream::WMeasure, 1_000_000);
            let pts: Vec<Vec3> = (0..*n)
                .map(|_| {
                    let mut v = Vec3::ZERO;
                    for i in 0..3 {
                        let g: f64 = normal.sample(&mut rng);
                        v.0[i] = 0.05 * m0 * g;
                    }
                    v
                })
                .collect();
            let w = w_measure(&pts, m0, 1e-7)?;
            let paths = out_paths(&cli.out, "wmeasure.json")?;
            mio::write_json(
                &paths.primary,
                &json!({
                    "n": n, "m0": m0,
                    "gaussian_fit_correlation": fit.correlation,
                    "configs": fit.n_configs,
                    "spread_range": [spread_lo, spread_hi],
                    "sample_ln_w": w.ln_value,
                    "sample_rel_err_bound": w.rel_err_bound,
                    "converged": w.converged,
                }),
            )?;
            write_meta(&paths, seed, workers, cfg.echo())?;
            println!(
                "N = {n}: Gaussian-limit correlation {:.4}; sample ln W = {:.6}",
                fit.correlation, w.ln_value
            );
            if w.converged {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "quadrature did not reach tolerance: bound {:.2e}",
                    w.rel_err_bound
                );
                Ok(ExitCode::from(3))
            }
        }
        InitCmd::NoiseContract {
            loop_file,
            r0,
            sigma,
        } => {
            let c = read_spatial(loop_file)?;
            let noise = NoiseParams {
                sigma: *sigma,
                r0: *r0,
                profile: KernelProfile::Gaussian,
            };
            let rep = contour_noise_contraction(&c, &noise, 16.0)?;
            let paths = out_paths(&cli.out, "noise_contract.json")?;
            mio::write_json(
                &paths.primary,
                &json!({
                    "value": rep.value,
                    "limit_m0_perimeter": rep.limit,
                    "perimeter": rep.perimeter,
                    "relative_deviation": (rep.value - rep.limit).abs() / rep.limit.abs().max(1e-300),
                    "warning_r0_vs_curvature": rep.warning,
                }),
            )?;
            write_meta(&paths, 0, workers, json!({"r0": r0, "sigma": sigma}))?;
            if let Some((r0v, rc)) = rep.warning {
                eprintln!("warning: r0 = {r0v} is not small against the curvature radius {rc:.3}");
            }
            println!(
                "contraction {:.6e} vs m0|C| = {:.6e}",
                rep.value, rep.limit
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
