use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::SymmetricEigen;

use sbpt_core::driver::{self, Manifest, Problem, RunOptions};
use sbpt_core::eigensolver::DEFAULT_DENSE_LIMIT;
use sbpt_core::integrals::{freeze_core, IntegralSet};
use sbpt_core::qubitmap::{jordan_wigner, taper, TaperingPlan};
use sbpt_core::sbpt::{Method, SbptOptions};
use sbpt_core::sci::{self, SciOptions};
use sbpt_core::symmetry::GroupingFile;
use sbpt_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sbpt",
    version,
    about = "Symmetry-partitioned perturbation theory driver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-point energy
    Run(RunArgs),
    /// Every point of a manifest, written as CSV (plus JSON next to it)
    Scan(ScanArgs),
    /// Selected CI from a manifest's selection point, evaluated across the scan
    Sci(SciArgs),
    /// Orbital, qubit and configuration counts for a set of groupings
    Resources(ResourceArgs),
    /// Tapers the qubit Hamiltonian and checks it against the projected spectrum
    TaperVerify(TaperArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Correction(s) to compute: uc, sc, en
    #[arg(long = "method", value_parser = parse_method)]
    methods: Vec<Method>,
    /// Largest sector diagonalized densely for the uncontracted correction
    #[arg(long, default_value_t = DEFAULT_DENSE_LIMIT)]
    dense_limit: usize,
    /// Regularize near-singular denominators instead of failing
    #[arg(long)]
    regularize_intruders: bool,
}

impl SolverFlags {
    fn options(&self) -> SbptOptions {
        SbptOptions {
            dense_limit: self.dense_limit,
            regularize_intruders: self.regularize_intruders,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    fcidump: PathBuf,
    #[arg(long)]
    grouping: PathBuf,
    /// Comma-separated spatial orbitals to freeze (0-based)
    #[arg(long, value_delimiter = ',')]
    frozen: Vec<usize>,
    #[arg(long, default_value = "point")]
    tag: String,
    #[arg(long, allow_hyphen_values = true)]
    ref_energy: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Output JSON file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// Worker threads (0 picks the number of cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Keep going after a failed point
    #[arg(long)]
    continue_on_error: bool,
    /// Leave the wall_ms column empty so reruns are byte-identical
    #[arg(long)]
    omit_timing: bool,
    /// Output CSV file (stdout when omitted); JSON goes to the same stem
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SciArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    /// Keep every reference-sector determinant regardless of eps2
    #[arg(long)]
    keep_reference: bool,
    #[arg(long, default_value_t = DEFAULT_DENSE_LIMIT)]
    dense_limit: usize,
    #[arg(long)]
    regularize_intruders: bool,
    /// Selection export file (JSON); the energy table goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ResourceArgs {
    /// Resource spec file listing an FCIDUMP and named groupings
    #[arg(long, conflicts_with_all = ["fcidump", "grouping"])]
    spec: Option<PathBuf>,
    #[arg(long)]
    fcidump: Option<PathBuf>,
    /// Grouping file(s); the file stem names the row
    #[arg(long)]
    grouping: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    frozen: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TaperArgs {
    #[arg(long)]
    fcidump: PathBuf,
    #[arg(long)]
    grouping: PathBuf,
    #[arg(long, value_delimiter = ',')]
    frozen: Vec<usize>,
    /// Map only the symmetry-preserving part (required when the grouping is augmented)
    #[arg(long)]
    reference_only: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Tapered Pauli Hamiltonian export
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).map_err(|e| e.to_string())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let problem = Problem::load(&a.fcidump, &a.frozen, &a.grouping)?;
    let opts = RunOptions {
        sbpt: a.solver.options(),
        omit_timing: false,
    };
    let rec = driver::run_point(&a.tag, &problem, &a.solver.methods, a.ref_energy, &opts)?;
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&rec)?)?;
    Ok(())
}

fn cmd_scan(a: ScanArgs) -> Result<bool> {
    let manifest = Manifest::load(&a.manifest)?;
    let methods = if a.solver.methods.is_empty() {
        manifest.methods.clone()
    } else {
        a.solver.methods.clone()
    };
    let opts = RunOptions {
        sbpt: a.solver.options(),
        omit_timing: a.omit_timing,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers)
        .build()
        .map_err(|e| Error::Usage(e.to_string()))?;
    let results = pool.install(|| driver::run_scan(&manifest, &methods, &opts));
    let mut rows = Vec::new();
    let mut ok = true;
    for r in results {
        match r {
            Ok(rec) => rows.push(rec),
            Err(e) if a.continue_on_error => {
                eprintln!("error: {e}");
                ok = false;
            }
            Err(e) => return Err(e),
        }
    }
    driver::write_csv(output(a.out.as_deref())?, &rows)?;
    if let Some(p) = &a.out {
        std::fs::write(
            p.with_extension("json"),
            serde_json::to_string_pretty(&rows)? + "\n",
        )?;
    }
    Ok(ok)
}

fn cmd_sci(a: SciArgs) -> Result<()> {
    let manifest = Manifest::load(&a.manifest)?;
    let settings = manifest.sci.clone();
    let eps1 = a.eps1.or(settings.as_ref().map(|s| s.eps1)).unwrap_or(0.0);
    let eps2 = a.eps2.or(settings.as_ref().map(|s| s.eps2)).unwrap_or(0.0);
    let point_tag = settings
        .map(|s| s.selection_point)
        .unwrap_or_else(|| manifest.points[0].tag.clone());
    let point = manifest.point(&point_tag)?;
    let opts = SbptOptions {
        dense_limit: a.dense_limit,
        regularize_intruders: a.regularize_intruders,
        ..Default::default()
    };
    let problem = Problem::load(&point.fcidump, &manifest.frozen, &manifest.grouping)?;
    let (res, reference, perts) = problem.solve(&[Method::Sc], &opts)?;
    let sc = &res.second_order[&Method::Sc];
    let sel = sci::select(
        &reference,
        &perts,
        sc,
        &SciOptions {
            eps1,
            eps2,
            filter_reference: !a.keep_reference,
        },
        &point_tag,
    );
    eprintln!(
        "selected {} determinants in {} irreps at {point_tag}",
        sel.selected_dets.len(),
        sel.n_irreps(&reference, &perts)
    );
    if let Some(p) = &a.out {
        sel.to_export().write(p)?;
    }
    let mut out = io::stdout().lock();
    writeln!(out, "tag,e_sci,ref_energy,error_mEh,n_det")?;
    for p in &manifest.points {
        let ints = freeze_core(&IntegralSet::from_path(&p.fcidump)?, &manifest.frozen)?;
        let e = sci::sci_energy(&sel.selected_dets, &ints, &opts.davidson)?;
        let err = p
            .reference_energy
            .map(|r| format!("{:.6}", (e - r) * 1000.0))
            .unwrap_or_default();
        let r = p
            .reference_energy
            .map(|r| format!("{r:.10}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{e:.10},{r},{err},{}",
            p.tag,
            sel.selected_dets.len()
        )?;
    }
    Ok(())
}

fn cmd_resources(a: ResourceArgs) -> Result<()> {
    let rows = match (&a.spec, &a.fcidump) {
        (Some(spec), _) => driver::ResourceSpec::load(spec)?.report()?,
        (None, Some(f)) => {
            let spec = driver::ResourceSpec {
                fcidump: f.clone(),
                frozen: a.frozen.clone(),
                rows: a
                    .grouping
                    .iter()
                    .map(|g| driver::ResourceSpecRow {
                        name: g
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_default(),
                        grouping: g.clone(),
                    })
                    .collect(),
            };
            spec.report()?
        }
        (None, None) => return Err(Error::Usage("pass --spec or --fcidump".into())),
    };
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "name,n_orbitals,n_qubits,n_det")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.name, r.n_orbitals, r.n_qubits, r.n_det)?;
    }
    Ok(())
}

fn sorted_eigenvalues(m: nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn cmd_taper(a: TaperArgs) -> Result<bool> {
    let ints = freeze_core(&IntegralSet::from_path(&a.fcidump)?, &a.frozen)?;
    let problem = Problem::new(ints, &GroupingFile::from_path(&a.grouping)?)?;
    let part = &problem.partition;
    let n = problem.integrals.n_spin_orbitals();
    let ph = if a.reference_only {
        jordan_wigner(&part.ref_terms, part.core_energy, n)?
    } else {
        jordan_wigner(part.all_terms(), part.core_energy, n)?
    };
    let plan = TaperingPlan::from_model(&problem.model, &problem.target)?;
    let tapered = taper(&ph, &plan)?;
    let states = plan.sector_states();
    let projected = sorted_eigenvalues(ph.matrix_on(&states)?);
    let reduced = sorted_eigenvalues(tapered.dense_matrix()?);
    let dev = if projected.len() == reduced.len() {
        projected
            .iter()
            .zip(&reduced)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    println!(
        "qubits {} -> {}, pauli terms {} -> {}, sector dim {}, max eigenvalue deviation {dev:.3e}",
        ph.n_qubits,
        tapered.n_qubits,
        ph.len(),
        tapered.len(),
        states.len()
    );
    if let Some(p) = &a.out {
        std::fs::write(p, tapered.export())?;
    }
    Ok(dev <= a.tol)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Scan(a) => cmd_scan(a),
        Command::Sci(a) => cmd_sci(a).map(|_| true),
        Command::Resources(a) => cmd_resources(a).map(|_| true),
        Command::TaperVerify(a) => cmd_taper(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
