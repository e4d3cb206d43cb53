//! Command-line front end: builds the coupling matrices, solves the
//! periodic family, assembles the potential chain and verifies the pinned
//! Landau level, persisting JSON/CSV artifacts between stages.

mod artifacts;

use anyhow::{bail, Context, Result};
use artifacts::*;
use clap::{Args, Parser, Subcommand};
use landau::chain::{build_chain, cross_check_systems};
use landau::cmatrix::CMatrixBundle;
use landau::family;
use landau::pendulum;
use landau::rep;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "landau", about = "Periodic potentials pinning a Landau level", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coupling matrix, factorisation, spectrum and nonresonance verdict.
    Cmatrix(CmatrixArgs),
    /// Pendulum period map: one orbit or a sampled curve.
    Period(PeriodArgs),
    /// Solve the periodic family at one epsilon.
    Family(FamilyArgs),
    /// Sweep epsilon and tabulate (eps, tau, B_eff, residual).
    FamilySweep(FamilySweepArgs),
    /// Build and verify the potential chain from a family artifact.
    Chain(ChainArgs),
    /// Fiber eigenvalue scan of the chain potential across quasimomenta.
    Band(BandArgs),
    /// Constructive eigenfunction and its Hamiltonian residual.
    Eigfun(EigfunArgs),
    /// Run every stage in order, persisting artifacts to a directory.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct CmatrixArgs {
    /// Chain length m (positive).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    /// Field-strength scale.
    #[arg(long, default_value_t = 1.0)]
    b0: f64,
    /// Index (0-based, ascending) of the eigenvalue to select; defaults to
    /// the largest, for which the nonresonance condition is vacuous.
    #[arg(long)]
    eig_index: Option<usize>,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PeriodArgs {
    /// Initial slope of the orbit through zero.
    #[arg(long)]
    alpha: f64,
    /// Field strength.
    #[arg(long)]
    b: f64,
    /// Sample a log-spaced curve (alpha_min alpha_max count) as CSV
    /// instead of solving a single orbit.
    #[arg(long, num_args = 3, value_names = ["A_MIN", "A_MAX", "N"])]
    curve: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    #[arg(long, default_value_t = 1.0)]
    b0: f64,
    /// Expansion parameter.
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    eig_index: Option<usize>,
    /// Convergence tolerance on the summed increment.
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FamilySweepArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    #[arg(long, default_value_t = 1.0)]
    b0: f64,
    /// Epsilon grid as start stop count.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "N"])]
    eps_grid: Vec<f64>,
    #[arg(long)]
    eig_index: Option<usize>,
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    /// Family artifact to build the chain from.
    #[arg(long)]
    from_family: PathBuf,
    /// Membership-condition tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Also write a CSV sampling of V to this path.
    #[arg(long)]
    samples_out: Option<PathBuf>,
    /// Samples per period for the CSV export.
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BandArgs {
    #[arg(long)]
    from_chain: PathBuf,
    /// Number of quasimomentum samples in [0, ω).
    #[arg(long, default_value_t = 16)]
    kn: usize,
    /// Landau levels retained (levels 0..=N).
    #[arg(long, default_value_t = 40)]
    levels: usize,
    /// Channel radius P (channels −P..=P).
    #[arg(long, default_value_t = 10)]
    channels: usize,
    /// CSV of (k, lambda_near, deviation).
    #[arg(long)]
    csv_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EigfunArgs {
    #[arg(long)]
    from_chain: PathBuf,
    /// Quasimomentum of the seed state.
    #[arg(long, default_value_t = 0.0)]
    k0: f64,
    #[arg(long, default_value_t = 40)]
    levels: usize,
    #[arg(long, default_value_t = 10)]
    channels: usize,
    /// Cap on the correction-solve residual before the truncation is
    /// declared insufficient.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON config; values given here override command-line flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..), default_value_t = 1)]
    m: u32,
    #[arg(long, default_value_t = 1.0)]
    b0: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long)]
    eig_index: Option<usize>,
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    chain_tol: f64,
    #[arg(long, default_value_t = 16)]
    kn: usize,
    #[arg(long, default_value_t = 40)]
    levels: usize,
    #[arg(long, default_value_t = 10)]
    channels: usize,
    #[arg(long, default_value_t = 1e-4)]
    eigfun_tol: f64,
    /// Directory for the stage artifacts.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

/// Pipeline configuration; any field present overrides the flag value.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    m: Option<u32>,
    b0: Option<f64>,
    eps: Option<f64>,
    eig_index: Option<usize>,
    tol: Option<f64>,
    chain_tol: Option<f64>,
    kn: Option<usize>,
    levels: Option<usize>,
    channels: Option<usize>,
    eigfun_tol: Option<f64>,
    out_dir: Option<PathBuf>,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn validated_bundle(m: u32, b0: f64, eig_index: Option<usize>) -> Result<CMatrixBundle> {
    if b0 <= 0.0 {
        bail!("invalid argument: b0 must be positive (got {b0})");
    }
    let bundle = CMatrixBundle::new(m as usize, b0, eig_index)?;
    if !bundle.nonresonance.satisfied {
        bail!(
            "eigenvalue index {} violates the nonresonance condition; pick another",
            bundle.chosen_index
        );
    }
    Ok(bundle)
}

fn run_cmatrix(args: &CmatrixArgs) -> Result<()> {
    let bundle = CMatrixBundle::new(args.m as usize, args.b0, args.eig_index)?;
    emit(&args.out, &to_json(&CMatrixArtifact::from_bundle(&bundle))?)
}

fn run_period(args: &PeriodArgs) -> Result<()> {
    if let Some(curve) = &args.curve {
        let (a_min, a_max, n) = (curve[0], curve[1], curve[2] as usize);
        if !(a_min > 0.0 && a_max > a_min && n >= 2) {
            bail!("invalid argument: curve expects 0 < A_MIN < A_MAX and N >= 2");
        }
        let mut csv = String::from("alpha,t_alpha\n");
        for i in 0..n {
            let alpha = a_min * (a_max / a_min).powf(i as f64 / (n - 1) as f64);
            let t = pendulum::period_integral(alpha, args.b)?;
            csv.push_str(&format!("{alpha},{t}\n"));
        }
        return emit(&args.out, &csv);
    }
    let sol = pendulum::solve(args.alpha, args.b)?;
    let artifact = PeriodArtifact {
        schema: SCHEMA.into(),
        alpha: sol.alpha,
        b: sol.b,
        u_plus: sol.u_plus,
        u_minus: sol.u_minus,
        t_alpha: sol.t_alpha,
    };
    emit(&args.out, &to_json(&artifact)?)
}

fn solve_family_artifact(args: &FamilyArgs) -> Result<FamilyArtifact> {
    let bundle = validated_bundle(args.m, args.b0, args.eig_index)?;
    let sol = family::iterate_family(args.eps, &bundle, args.tol, args.max_iter)?;
    let residual = family::residual_check(&sol, &bundle);
    let radius = family::empirical_radius(&bundle);
    let tau_mu = family::tau_mu_direct(&bundle)?;
    let closed = family::tau_footnote(&bundle);
    Ok(FamilyArtifact::new(
        &bundle, &sol, residual, radius, tau_mu, closed,
    ))
}

fn run_family(args: &FamilyArgs) -> Result<()> {
    let artifact = solve_family_artifact(args)?;
    emit(&args.out, &to_json(&artifact)?)
}

fn run_family_sweep(args: &FamilySweepArgs) -> Result<()> {
    let (start, stop, n) = (args.eps_grid[0], args.eps_grid[1], args.eps_grid[2] as usize);
    if n < 2 {
        bail!("invalid argument: eps grid needs at least 2 points");
    }
    let bundle = validated_bundle(args.m, args.b0, args.eig_index)?;
    let mut csv = String::from("eps,tau,b_eff,residual,iterations,status\n");
    for i in 0..n {
        let eps = start + (stop - start) * i as f64 / (n - 1) as f64;
        match family::iterate_family(eps, &bundle, args.tol, args.max_iter) {
            Ok(sol) => {
                let res = family::residual_check(&sol, &bundle);
                csv.push_str(&format!(
                    "{eps},{},{},{res},{},ok\n",
                    sol.tau, sol.b_eff, sol.iterations
                ));
            }
            Err(err) => {
                let kind = match err {
                    family::FamilyError::NoContraction { .. } => "no-contraction",
                    family::FamilyError::MaxIterations { .. } => "max-iterations",
                    _ => "error",
                };
                csv.push_str(&format!("{eps},nan,nan,nan,0,{kind}\n"));
            }
        }
    }
    emit(&args.out, &csv)
}

fn chain_from_family(path: &Path, tol: f64) -> Result<(ChainArtifact, bool)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let fam: FamilyArtifact = serde_json::from_str(&text)?;
    let mut chain = build_chain(&fam.v, fam.b_eff)?;
    chain.report = landau::chain::verify_conditions(&chain, tol);
    let systems = cross_check_systems(&chain.u, chain.b)?;
    let pass = chain.report.pass;
    Ok((ChainArtifact::from_chain(&chain, systems), pass))
}

fn run_chain(args: &ChainArgs) -> Result<()> {
    let (artifact, _) = chain_from_family(&args.from_family, args.tol)?;
    if let Some(path) = &args.samples_out {
        let mut csv = String::from("t,v\n");
        let period = artifact.v.period();
        for i in 0..args.samples {
            let t = i as f64 / args.samples as f64 * period;
            csv.push_str(&format!("{t},{}\n", artifact.v.evaluate(t)));
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    emit(&args.out, &to_json(&artifact)?)
}

fn load_chain(path: &Path) -> Result<ChainArtifact> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn run_band(args: &BandArgs) -> Result<()> {
    let chain = load_chain(&args.from_chain)?;
    let h = rep::fiber_matrix(0.0, &chain.v, chain.b, args.levels, args.channels);
    let defect = rep::hermiticity_defect(&h);
    let scan = rep::flat_band_scan(
        &chain.v,
        chain.b,
        chain.m,
        args.kn,
        args.levels,
        args.channels,
    );
    if let Some(path) = &args.csv_out {
        let mut csv = String::from("k,lambda_near,deviation\n");
        for p in &scan.points {
            csv.push_str(&format!("{},{},{}\n", p.k, p.lambda, p.deviation));
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    let artifact = BandArtifact {
        schema: SCHEMA.into(),
        m: chain.m,
        b: chain.b,
        levels: args.levels,
        channels: args.channels,
        k_samples: args.kn,
        hermiticity_defect: defect,
        scan,
    };
    emit(&args.out, &to_json(&artifact)?)
}

fn run_eigfun(args: &EigfunArgs) -> Result<()> {
    let chain = load_chain(&args.from_chain)?.into_chain();
    let ef = rep::build_eigenfunction(&chain, args.k0, args.levels, args.channels, args.tol)?;
    let amplitudes = (0..=args.levels)
        .map(|n| {
            (-(args.channels as i32)..=args.channels as i32)
                .map(|p| {
                    let a = ef.state.amp(n, p);
                    [a.re, a.im]
                })
                .collect()
        })
        .collect();
    let artifact = EigenfunctionArtifact {
        schema: SCHEMA.into(),
        m: chain.m,
        b: chain.b,
        k0: args.k0,
        levels: args.levels,
        channels: args.channels,
        rho: ef.rho,
        kernel_residual: ef.kernel_residual,
        dropped_norm_sq: ef.dropped_norm_sq,
        norm: ef.state.norm(),
        amplitudes,
    };
    emit(&args.out, &to_json(&artifact)?)
}

fn run_pipeline(args: &PipelineArgs) -> Result<()> {
    let mut m = args.m;
    let mut b0 = args.b0;
    let mut eps = args.eps;
    let mut eig_index = args.eig_index;
    let mut tol = args.tol;
    let mut chain_tol = args.chain_tol;
    let mut kn = args.kn;
    let mut levels = args.levels;
    let mut channels = args.channels;
    let mut eigfun_tol = args.eigfun_tol;
    let mut out_dir = args.out_dir.clone();
    if let Some(path) = &args.config {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).context("parsing config")?;
        if let Some(v) = cfg.m {
            if v == 0 {
                bail!("invalid argument: field 'm' must be at least 1");
            }
            m = v;
        }
        if let Some(v) = cfg.b0 {
            b0 = v;
        }
        if let Some(v) = cfg.eps {
            eps = v;
        }
        if cfg.eig_index.is_some() {
            eig_index = cfg.eig_index;
        }
        if let Some(v) = cfg.tol {
            tol = v;
        }
        if let Some(v) = cfg.chain_tol {
            chain_tol = v;
        }
        if let Some(v) = cfg.kn {
            kn = v;
        }
        if let Some(v) = cfg.levels {
            levels = v;
        }
        if let Some(v) = cfg.channels {
            channels = v;
        }
        if let Some(v) = cfg.eigfun_tol {
            eigfun_tol = v;
        }
        if let Some(v) = cfg.out_dir {
            out_dir = v;
        }
    }
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let bundle = validated_bundle(m, b0, eig_index).context("stage cmatrix")?;
    emit(
        &Some(out_dir.join("cmatrix.json")),
        &to_json(&CMatrixArtifact::from_bundle(&bundle))?,
    )?;
    println!(
        "cmatrix: m={m}, lambda={}, omega={}, nonresonance ok",
        bundle.lambda(),
        bundle.omega
    );

    let fam_args = FamilyArgs {
        m,
        b0,
        eps,
        eig_index,
        tol,
        max_iter: 200,
        out: None,
    };
    let fam = solve_family_artifact(&fam_args).context("stage family")?;
    emit(&Some(out_dir.join("family.json")), &to_json(&fam)?)?;
    println!(
        "family: eps={eps}, tau={}, B_eff={}, residual={:.3e} ({} iterations)",
        fam.tau, fam.b_eff, fam.residual, fam.iterations
    );

    let (chain_art, chain_pass) =
        chain_from_family(&out_dir.join("family.json"), chain_tol).context("stage chain")?;
    emit(&Some(out_dir.join("chain.json")), &to_json(&chain_art)?)?;
    let mut csv = String::from("t,v\n");
    for i in 0..256 {
        let t = i as f64 / 256.0 * chain_art.v.period();
        csv.push_str(&format!("{t},{}\n", chain_art.v.evaluate(t)));
    }
    fs::write(out_dir.join("potential.csv"), csv)?;
    println!(
        "chain: res_c={:.3e}, V0={:.3e}, pass={}",
        chain_art.report.res_c, chain_art.report.v0, chain_pass
    );
    if !chain_pass {
        bail!("stage chain: membership conditions failed tolerance {chain_tol}");
    }

    if chain_art.v.norm_l1() <= 1e-12 {
        println!(
            "pipeline: constant potential (eps = {eps} gives V = 0); \
             band and eigenfunction stages are not informative and were skipped"
        );
        return Ok(());
    }

    let band_args = BandArgs {
        from_chain: out_dir.join("chain.json"),
        kn,
        levels,
        channels,
        csv_out: Some(out_dir.join("band.csv")),
        out: Some(out_dir.join("band.json")),
    };
    run_band(&band_args).context("stage band")?;
    let band: BandArtifact = serde_json::from_str(&fs::read_to_string(out_dir.join("band.json"))?)?;
    println!(
        "band: target={}, max deviation={:.3e}, flatness={:.3e}, verified={}",
        band.scan.target, band.scan.max_deviation, band.scan.flatness, band.scan.verified
    );
    if !band.scan.verified {
        bail!(
            "stage band: nearest eigenvalue strayed {:.3e} from the target (guard {:.3e})",
            band.scan.max_deviation,
            band.scan.guard
        );
    }

    let eig_args = EigfunArgs {
        from_chain: out_dir.join("chain.json"),
        k0: 0.0,
        levels,
        channels,
        tol: eigfun_tol,
        out: Some(out_dir.join("eigfun.json")),
    };
    run_eigfun(&eig_args).context("stage eigfun")?;
    let ef: EigenfunctionArtifact =
        serde_json::from_str(&fs::read_to_string(out_dir.join("eigfun.json"))?)?;
    println!(
        "eigfun: rho={:.3e}, kernel residual={:.3e}",
        ef.rho, ef.kernel_residual
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Cmatrix(args) => run_cmatrix(args),
        Command::Period(args) => run_period(args),
        Command::Family(args) => run_family(args),
        Command::FamilySweep(args) => run_family_sweep(args),
        Command::Chain(args) => run_chain(args),
        Command::Band(args) => run_band(args),
        Command::Eigfun(args) => run_eigfun(args),
        Command::Pipeline(args) => run_pipeline(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
