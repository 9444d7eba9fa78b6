use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use stokes_eig::config::RunConfig;
use stokes_eig::detsweep::{sweep, EigenReport, RootStatus};
use stokes_eig::eigenfield::{eval_eigenfield, EigenfieldOptions, GridSpec};
use stokes_eig::potentials::KernelContext;
use stokes_eig::reference::{annulus_dirichlet_roots, disk_neumann_roots, TranscendentalRoots};
use stokes_eig::Error;

/// Overrides the output directory of every subcommand except an explicit `--out`.
const OUT_ENV: &str = "STOKES_EIG_OUT";

#[derive(Parser)]
#[command(name = "stokes-eig", version, about = "Dirichlet eigenvalues of the planar Stokes operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the configured k-intervals and write roots.json, intervals/ and summary.csv.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print analytic eigenvalues as CSV.
    Reference {
        #[command(subcommand)]
        kind: ReferenceKind,
    },
    /// Evaluate one accepted eigenfunction of a sweep on a grid.
    Eigenfield {
        roots: PathBuf,
        /// Position among the accepted roots, in increasing k.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value_t = 101)]
        nx: usize,
        #[arg(long, default_value_t = 101)]
        ny: usize,
        /// `xmin,xmax,ymin,ymax`; defaults to the padded bounding box of the boundary.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        bounds: Option<Vec<f64>>,
        /// Mask radius in local panel lengths.
        #[arg(long, default_value_t = EigenfieldOptions::default().near_factor)]
        near_factor: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ReferenceKind {
    /// Radially symmetric Dirichlet family of the annulus r1 < r < r2.
    Annulus {
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = 1.7)]
        r2: f64,
        #[arg(long)]
        kmin: f64,
        #[arg(long)]
        kmax: f64,
    },
    /// Radial Neumann eigenvalues of the unit disk.
    DiskNeumann {
        #[arg(long)]
        kmin: f64,
        #[arg(long)]
        kmax: f64,
    },
}

/// Contents of `roots.json`.
#[derive(Serialize, Deserialize)]
struct RootsFile {
    config: RunConfig,
    num_nodes: usize,
    reports: Vec<EigenReport>,
}

/// Exit status with a message for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::Geometry(_) | Error::Domain(_) => 1,
            Error::FitFailed { .. } => 2,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 3, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { code: 3, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { config, out } => cmd_sweep(&config, out),
        Command::Reference { kind } => cmd_reference(kind),
        Command::Eigenfield { roots, index, nx, ny, bounds, near_factor, out } => {
            cmd_eigenfield(&roots, index, nx, ny, bounds, near_factor, out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn resolve_out(flag: Option<PathBuf>, fallback: impl FnOnce() -> PathBuf) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(fallback)
}

fn set_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // only fails when a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn cmd_sweep(path: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let config = RunConfig::from_json(&text)?;
    set_threads(config.threads);
    let out = resolve_out(out, || config.output_dir.clone().unwrap_or_else(|| PathBuf::from("stokes-eig-out")));

    let panels = config.panels()?;
    let template = config.template()?;
    let result = sweep(&template, &panels, &config.intervals(), &config.sweep_options())?;

    fs::create_dir_all(out.join("intervals"))?;
    for d in &result.intervals {
        fs::write(out.join("intervals").join(format!("interval_{:03}.json", d.id)), serde_json::to_string_pretty(d)?)?;
    }
    let summary = fs::File::create(out.join("summary.csv"))?;
    write_summary(summary, &result.reports)?;
    let file = RootsFile { config, num_nodes: panels.num_nodes(), reports: result.reports };
    fs::write(out.join("roots.json"), serde_json::to_string_pretty(&file)?)?;

    let accepted = file.reports.iter().filter(|r| r.status == RootStatus::Accepted).count();
    println!(
        "{accepted} accepted of {} roots over {} intervals; N = {}; output in {}",
        file.reports.len(),
        result.intervals.len(),
        file.num_nodes,
        out.display()
    );
    let failed: Vec<String> = result
        .intervals
        .iter()
        .filter(|d| !d.converged)
        .map(|d| format!("[{}, {}]", d.a, d.b))
        .collect();
    if !failed.is_empty() {
        return Err(Failure { code: 2, message: format!("fit did not converge on {}", failed.join(", ")) });
    }
    Ok(())
}

fn write_summary(mut w: impl Write, reports: &[EigenReport]) -> std::io::Result<()> {
    writeln!(w, "k_root,k_cheb_re,k_cheb_im,sigma_min,sigma_2,error_estimate,interval,status,possible_double")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.k_root,
            r.k_cheb.re,
            r.k_cheb.im,
            opt(r.sigma_min),
            opt(r.sigma_2),
            r.error_estimate,
            r.interval,
            status,
            r.possible_double
        )?;
    }
    Ok(())
}

fn cmd_reference(kind: ReferenceKind) -> Result<(), Failure> {
    let roots = match kind {
        ReferenceKind::Annulus { r1, r2, kmin, kmax } => annulus_dirichlet_roots(r1, r2, kmin, kmax)?,
        ReferenceKind::DiskNeumann { kmin, kmax } => disk_neumann_roots(kmin, kmax)?,
    };
    print_roots(&roots);
    Ok(())
}

fn print_roots(r: &TranscendentalRoots) {
    println!("index,k,residual");
    for (i, (k, res)) in r.roots.iter().zip(&r.residuals).enumerate() {
        println!("{i},{k:.16},{res:e}");
    }
}

fn cmd_eigenfield(
    roots: &Path,
    index: usize,
    nx: usize,
    ny: usize,
    bounds: Option<Vec<f64>>,
    near_factor: f64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let text = fs::read_to_string(roots).map_err(|e| Failure::input(format!("cannot read {}: {e}", roots.display())))?;
    let file: RootsFile = serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", roots.display())))?;
    set_threads(file.config.threads);
    let accepted: Vec<&EigenReport> = file.reports.iter().filter(|r| r.status == RootStatus::Accepted).collect();
    let report = accepted
        .get(index)
        .ok_or_else(|| Failure::input(format!("index {index} out of range: {} accepted roots", accepted.len())))?;

    let panels = file.config.panels()?;
    if report.null_density.len() != 2 * panels.num_nodes() {
        return Err(Failure::input("stored density does not match the rebuilt discretization"));
    }
    let ctx = KernelContext::new(report.k_root.into(), file.config.eta, file.config.formulation)?;
    let grid = match bounds {
        Some(b) => GridSpec { xmin: b[0], xmax: b[1], ymin: b[2], ymax: b[3], nx, ny },
        None => {
            let g = GridSpec::around(&panels, nx, ny, 0.0);
            let pad = 0.02 * (g.xmax - g.xmin).max(g.ymax - g.ymin);
            GridSpec::around(&panels, nx, ny, pad)
        }
    };
    let opts = EigenfieldOptions { near_factor, ..Default::default() };
    let field = eval_eigenfield(&ctx, &panels, &report.null_density, &grid, &opts)?;

    let out = resolve_out(out, || roots.parent().map(Path::to_path_buf).unwrap_or_default());
    fs::create_dir_all(&out)?;
    let stem = format!("eigenfield_{index:03}");
    field.write_csv(std::io::BufWriter::new(fs::File::create(out.join(format!("{stem}.csv")))?))?;
    let meta = serde_json::json!({
        "index": index,
        "k": report.k_root,
        "formulation": file.config.formulation,
        "grid": grid,
        "near_factor": near_factor,
        "phase": field.phase,
        "scale": field.scale,
        "masked_fraction": field.masked_fraction(),
    });
    fs::write(out.join(format!("{stem}.json")), serde_json::to_string_pretty(&meta)?)?;
    println!("k = {}; wrote {}", report.k_root, out.join(format!("{stem}.csv")).display());
    Ok(())
}
