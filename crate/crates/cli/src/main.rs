//! `isoperim`: command-line front end.
//!
//! Results go to stdout as JSON; every number carries its provenance.
//! Exit status is 0 on success, 1 for bad input and 2 for numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use isoperim::curvature::{curvature, MEAN_CONVENTION};
use isoperim::distances::{
    hausdorff_distance, hausdorff_to_model, lipschitz_distance_to_sphere, preiss_distance, DiscreteMeasure, SampledSet, DEFAULT_MAX_ATOMS,
};
use isoperim::exec;
use isoperim::experiments::{assess, run_sweep, sphere_measure};
use isoperim::io::{self, RunManifest};
use isoperim::measures::{annulus_concentration, fit_sphere, fraenkel_asymmetry, FitMethod};
use isoperim::sampling::SamplerConfig;
use isoperim::spectral::{laplace_spectrum, DEFAULT_TOL};
use isoperim::{isoperimetric_summary, Error, Vec3};

#[derive(Parser)]
#[command(name = "isoperim", version, about = "Quantitative isoperimetric stability on discrete domains")]
struct Cli {
    /// Cap on worker threads; 1 is the reproducibility mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for sampled estimates; overrides ISOPERIM_SEED and config seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh from a family config.
    Gen {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Deficit, model sphere, asymmetry and annulus concentration.
    Measure {
        mesh: PathBuf,
        #[arg(long, default_value = "boundary")]
        fit: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.1])]
        alphas: Vec<f64>,
    },
    /// Discrete mean and principal curvatures with L^p aggregates.
    Curvature {
        mesh: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0, 4.0])]
        p: Vec<f64>,
    },
    /// Low Laplace–Beltrami spectrum and the Chavel deficit.
    Spectrum {
        mesh: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Distances between boundaries, or to the model sphere.
    Distance {
        #[command(subcommand)]
        kind: DistanceKind,
    },
    /// Run a family sweep and write samples.csv, results.json, manifest.json.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Summarize a sweep directory; verdicts are recomputed from the records.
    Report {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum DistanceKind {
    /// Hausdorff distance between two boundaries, or to the model sphere
    /// when only one is given.
    Hausdorff {
        a: PathBuf,
        b: Option<PathBuf>,
        /// Sampling spacing for mesh–mesh distances (default: 1% of the diagonal).
        #[arg(long)]
        h: Option<f64>,
        #[command(flatten)]
        fit: FitArg,
    },
    /// Log-dilation distance of the radial projection onto the model sphere.
    Lipschitz {
        mesh: PathBuf,
        #[command(flatten)]
        fit: FitArg,
    },
    /// Preiss distance between two boundary measures, or to the model
    /// sphere measure when only one is given.
    Preiss {
        a: PathBuf,
        b: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        terms: u32,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.0, 0.0])]
        origin: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_ATOMS)]
        max_atoms: usize,
        /// Refinement level of the model sphere (or circle) measure.
        #[arg(long, default_value_t = 4)]
        sphere_level: u32,
        #[command(flatten)]
        fit: FitArg,
    },
}

#[derive(Args)]
struct FitArg {
    #[arg(long, default_value = "boundary")]
    fit: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn exact(v: f64) -> Value {
    json!({ "value": v, "provenance": "exact" })
}

fn bounded(v: f64, err: f64) -> Value {
    json!({ "value": v, "provenance": "exact", "error_bound": err })
}

fn sampled(v: f64, se: f64) -> Value {
    if se == 0.0 {
        exact(v)
    } else {
        json!({ "value": v, "provenance": "sampled", "standard_error": se })
    }
}

type Res<T> = isoperim::Result<T>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli.threads;
    match exec::with_threads(threads, || run(cli)) {
        Ok(out) => {
            if let Some(v) = out {
                // a closed pipe (e.g. `| head`) is not an error worth a panic
                let text = serde_json::to_string_pretty(&v).expect("JSON values serialize");
                let _ = writeln!(std::io::stdout(), "{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::NonConvergence { iterations, residual, .. } = &e {
                eprintln!("  iterations: {iterations}, residual: {residual:e}");
            }
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn sampler(seed: Option<u64>) -> Res<SamplerConfig> {
    let mut s = SamplerConfig::default();
    if let Some(seed) = io::resolve_seed(seed, None)? {
        s.seed = seed;
    }
    Ok(s)
}

fn run(cli: Cli) -> Res<Option<Value>> {
    let seed = cli.seed;
    match cli.command {
        Command::Gen { config, output } => {
            let cfg = io::read_generator_config(&config)?;
            let mesh = cfg.generate()?;
            io::write_mesh(&output, &mesh)?;
            Ok(Some(json!({
                "output": output,
                "vertices": mesh.vertices().len(),
                "elements": mesh.num_elements(),
            })))
        }
        Command::Measure { mesh, fit, alphas } => {
            let m = io::read_mesh(&mesh)?;
            let s = sampler(seed)?;
            let summary = isoperimetric_summary(&m)?;
            let f = fit_sphere(&m, fit.parse::<FitMethod>()?, &s)?;
            let a = fraenkel_asymmetry(&m, &s)?;
            let conc = annulus_concentration(&m, &f, &alphas)?;
            Ok(Some(json!({
                "mesh": mesh,
                "dim": m.dim().ambient(),
                "volume": exact(summary.volume),
                "perimeter": exact(summary.perimeter),
                "iso_ratio": exact(summary.iso_ratio),
                "deficit": exact(summary.deficit),
                "volume_radius": exact(summary.radius),
                "components": summary.component_count,
                "fit": {
                    "method": f.method,
                    "center": f.center.map(exact),
                    "radius": exact(f.radius),
                    "l1_boundary_gap": exact(f.l1_boundary_gap),
                },
                "asymmetry": sampled(a.value, a.standard_error),
                "asymmetry_center": a.center,
                "seed": s.seed,
                "concentration": conc.rows.iter().map(|r| json!({
                    "alpha": r.alpha,
                    "eta": exact(r.eta),
                    "outside_fraction": exact(r.outside_fraction),
                })).collect::<Vec<_>>(),
            })))
        }
        Command::Curvature { mesh, p } => {
            let m = io::read_mesh(&mesh)?;
            let field = curvature(&m, &p)?;
            let mut h: Vec<f64> = field.mean.clone();
            h.sort_by(f64::total_cmp);
            let median = if h.is_empty() { f64::NAN } else { h[h.len() / 2] };
            let norms: Vec<Value> = p
                .iter()
                .map(|q| {
                    let a = field.aggregate(*q).expect("requested p");
                    json!({
                        "p": q,
                        "mean": exact(a.mean),
                        "second_fundamental_form": exact(a.second_fundamental_form),
                        "budget": exact(a.budget),
                    })
                })
                .collect();
            Ok(Some(json!({
                "mesh": mesh,
                "mean_convention": MEAN_CONVENTION,
                "perimeter": exact(field.perimeter),
                "median_mean_curvature": exact(median),
                "max_mean_curvature": exact(field.mean_norm(f64::INFINITY)),
                "low_confidence_vertices": field.low_confidence.len(),
                "norms": norms,
            })))
        }
        Command::Spectrum { mesh, k, tol } => {
            let m = io::read_mesh(&mesh)?;
            let r = laplace_spectrum(&m, k, tol)?;
            Ok(Some(json!({
                "mesh": mesh,
                "lambda1": exact(r.lambda1),
                "eigenvalues": r.eigenvalues.iter().map(|v| exact(*v)).collect::<Vec<_>>(),
                "multiplicity": r.eigen_multiplicity_estimate,
                "chavel_bound": exact(r.chavel_bound),
                "gamma": exact(r.gamma),
                "rho_omega": exact(r.rho_omega),
                "coordinate_rayleigh": exact(r.coordinate_rayleigh),
                "iterations": r.iterations,
                "residual": r.residual,
            })))
        }
        Command::Distance { kind } => distance(kind, seed),
        Command::Sweep { config, output } => {
            let (mut cfg, text) = io::read_sweep_config(&config)?;
            cfg.seed = io::resolve_seed(seed, cfg.seed)?;
            let mut manifest = RunManifest::new("sweep", text.as_bytes(), cfg.seed, cli.threads);
            manifest.inputs.push(config.clone());
            let result = run_sweep(&cfg)?;
            io::write_sweep(&output, &cfg, &result, &mut manifest)?;
            Ok(Some(json!({
                "output": output,
                "samples": result.samples.len(),
                "failed": result.failed,
                "discarded": result.discarded,
                "checks": result.checks.iter().map(|c| json!({
                    "check": c.check,
                    "variant": c.variant,
                    "verdict": c.verdict,
                })).collect::<Vec<_>>(),
            })))
        }
        Command::Report { dir, format } => report(&dir, format),
    }
}

fn fit_of(m: &isoperim::BoundaryMesh, fit: &FitArg, seed: Option<u64>) -> Res<isoperim::measures::SphereFit> {
    fit_sphere(m, fit.fit.parse::<FitMethod>()?, &sampler(seed)?)
}

fn distance(kind: DistanceKind, seed: Option<u64>) -> Res<Option<Value>> {
    match kind {
        DistanceKind::Hausdorff { a, b, h, fit } => {
            let ma = io::read_mesh(&a)?;
            match b {
                None => {
                    let f = fit_of(&ma, &fit, seed)?;
                    let d = hausdorff_to_model(&ma, &f, &[])?;
                    Ok(Some(json!({
                        "kind": "hausdorff_to_model",
                        "value": bounded(d.value, d.error_bound),
                        "directed": d.directed,
                        "model_radius": f.radius,
                    })))
                }
                Some(b) => {
                    let mb = io::read_mesh(&b)?;
                    let diag = ma.bbox_diagonal().max(mb.bbox_diagonal());
                    let h = h.unwrap_or(1e-2 * diag);
                    let d = hausdorff_distance(&SampledSet::from_mesh(&ma, h)?, &SampledSet::from_mesh(&mb, h)?)?;
                    Ok(Some(json!({
                        "kind": "hausdorff",
                        "value": bounded(d.value, d.error_bound),
                        "directed": d.directed,
                    })))
                }
            }
        }
        DistanceKind::Lipschitz { mesh, fit } => {
            let m = io::read_mesh(&mesh)?;
            let f = fit_of(&m, &fit, seed)?;
            let l = lipschitz_distance_to_sphere(&m, &f)?;
            Ok(Some(json!({
                "kind": "lipschitz",
                "value": exact(l.value),
                "dilation": exact(l.dilation),
                "inverse_dilation": exact(l.inverse_dilation),
                "mesh_size": l.mesh_size,
            })))
        }
        DistanceKind::Preiss { a, b, terms, origin, max_atoms, sphere_level, fit } => {
            if origin.len() != 3 {
                return Err(Error::InvalidArgument("--origin needs three comma-separated numbers".into()));
            }
            let ma = io::read_mesh(&a)?;
            let mu = DiscreteMeasure::from_boundary(&ma)?;
            let nu = match b {
                Some(b) => DiscreteMeasure::from_boundary(&io::read_mesh(&b)?)?,
                None => sphere_measure(ma.dim(), &fit_of(&ma, &fit, seed)?, sphere_level)?,
            };
            let r = preiss_distance(&nu, &mu, terms, &Vec3::new(origin[0], origin[1], origin[2]), max_atoms)?;
            Ok(Some(json!({
                "kind": "preiss",
                "value": bounded(r.value, r.upper_bound - r.value),
                "upper_bound": r.upper_bound,
                "f_values": r.f_values.iter().map(|v| exact(*v)).collect::<Vec<_>>(),
                "origin": r.origin,
                "atoms": r.atoms,
            })))
        }
    }
}

fn report(dir: &Path, format: Format) -> Res<Option<Value>> {
    let doc = io::read_sweep(dir)?;
    let recomputed = assess(&doc.config, &doc.result.samples);
    if recomputed != doc.result.checks {
        return Err(Error::InvalidArgument(format!(
            "{}: stored verdicts differ from those recomputed from the records",
            dir.display()
        )));
    }
    match format {
        Format::Json => Ok(Some(json!({
            "family": doc.result.family,
            "manifest": doc.manifest,
            "samples": doc.result.samples.len(),
            "failed": doc.result.failed,
            "discarded": doc.result.discarded,
            "fits": doc.result.fits.iter().map(|f| json!({
                "x": f.x,
                "y": f.y,
                "correction": f.correction,
                "slope": f.fit.as_ref().map(|e| json!({
                    "value": e.slope,
                    "provenance": "fitted",
                    "stderr": e.stderr,
                    "interval95": f.interval,
                })),
                "log_constant": f.fit.as_ref().map(|e| e.intercept),
                "error": f.error,
            })).collect::<Vec<_>>(),
            "checks": recomputed,
        }))),
        Format::Csv => {
            let mut out = String::from("check,variant,verdict,c_fit,growth,spread,margin,evaluated,skipped,witness_sample\n");
            let num = |v: Option<f64>| v.map(io::fmt_f64).unwrap_or_default();
            for c in &recomputed {
                let (verdict, witness) = match &c.verdict {
                    isoperim::experiments::Verdict::Holds => ("holds", String::new()),
                    isoperim::experiments::Verdict::Violated { witness } => ("violated", witness.sample.to_string()),
                    isoperim::experiments::Verdict::Inconclusive { .. } => ("inconclusive", String::new()),
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    c.check,
                    c.variant.clone().unwrap_or_default(),
                    verdict,
                    num(c.c_fit),
                    num(c.growth),
                    num(c.spread),
                    num(c.margin),
                    c.evaluated,
                    c.skipped,
                    witness
                ));
            }
            let _ = std::io::stdout().write_all(out.as_bytes());
            Ok(None)
        }
    }
}
