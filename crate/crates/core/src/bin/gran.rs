//! Command-line surface: direction inference on pair files, synthetic data
//! generation, the benchmark harness, the cumulant-asymmetry lab sweeps,
//! decision-rate curves, and residual diagnostics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gran::asymmetry::{
    self, cn_grid, determinant_identity_check, gram_charlier_energy, nonsymmetric_norm_grid,
    projected_shrinkage_check, symmetric_norm_grid, MixingMatrix,
};
use gran::error::{Error, Result};
use gran::inference::{infer_direction, InferenceConfig, InferenceMethod};
use gran::pairfile::{load_pair, save_pair};
use gran::rate_curve::decision_rate_curve;
use gran::rng;
use gran::synthetic::{
    generate, residual_diagnostics, run_benchmark, CauseDistribution, Mechanism,
    NoiseDistribution, SyntheticSpec,
};

#[derive(Parser)]
#[command(
    name = "gran",
    about = "Causal direction inference from the Gaussianity of kernel regression residuals",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Gran,
    #[value(name = "gran-star")]
    GranStar,
    Grk4,
    Grent,
}

impl From<MethodArg> for InferenceMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Gran => InferenceMethod::Gran,
            MethodArg::GranStar => InferenceMethod::GranStar,
            MethodArg::Grk4 => InferenceMethod::Grk4,
            MethodArg::Grent => InferenceMethod::Grent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    M1,
    M2,
    M3,
    M4,
}

impl From<MechanismArg> for Mechanism {
    fn from(m: MechanismArg) -> Self {
        match m {
            MechanismArg::M1 => Mechanism::M1,
            MechanismArg::M2 => Mechanism::M2,
            MechanismArg::M3 => Mechanism::M3,
            MechanismArg::M4 => Mechanism::M4,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CauseArg {
    P1,
    P2,
    P3,
}

impl From<CauseArg> for CauseDistribution {
    fn from(c: CauseArg) -> Self {
        match c {
            CauseArg::P1 => CauseDistribution::P1,
            CauseArg::P2 => CauseDistribution::P2,
            CauseArg::P3 => CauseDistribution::P3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Gg,
    Laplace,
    Gauss,
    Bimodal,
}

impl From<NoiseArg> for NoiseDistribution {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Gg => NoiseDistribution::GeneralizedGaussian,
            NoiseArg::Laplace => NoiseDistribution::Laplace,
            NoiseArg::Gauss => NoiseDistribution::Gaussian,
            NoiseArg::Bimodal => NoiseDistribution::Bimodal,
        }
    }
}

#[derive(Args)]
struct InferArgs {
    /// Pair file: two whitespace-separated numeric columns, '#' comments.
    #[arg(long)]
    pair: PathBuf,
    #[arg(long, value_enum, default_value = "gran")]
    method: MethodArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid points per hyper-parameter.
    #[arg(long, default_value_t = 10)]
    grid_size: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Emit the full decision record as JSON (full float precision).
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismArg,
    #[arg(long, value_enum)]
    cause: CauseArg,
    #[arg(long, value_enum)]
    noise: NoiseArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Mechanisms to run; defaults to all four.
    #[arg(long, value_enum, value_delimiter = ',')]
    mechanism: Vec<MechanismArg>,
    /// Cause distributions; defaults to all three.
    #[arg(long, value_enum, value_delimiter = ',')]
    cause: Vec<CauseArg>,
    /// Noise distributions; defaults to all four.
    #[arg(long, value_enum, value_delimiter = ',')]
    noise: Vec<NoiseArg>,
    #[arg(long, value_enum, default_value = "gran")]
    method: MethodArg,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Desk-scale default; the full reproduction uses 10.
    #[arg(long, default_value_t = 5)]
    grid_size: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    /// CSV of `correct,confidence` rows (header optional).
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismArg,
    #[arg(long, value_enum)]
    cause: CauseArg,
    #[arg(long, value_enum)]
    noise: NoiseArg,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "gran")]
    method: MethodArg,
    #[arg(long, default_value_t = 5)]
    grid_size: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Points in the pre-image prediction curve.
    #[arg(long, default_value_t = 60)]
    grid_points: usize,
    /// Prefix for the emitted CSV files.
    #[arg(long)]
    out_prefix: String,
}

#[derive(Subcommand)]
enum LabCommand {
    /// Scalar cumulant factor c_n over a coefficient grid.
    Cn {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2, 3, 4, 5, 6, 7, 8])]
        orders: Vec<u32>,
        #[arg(long, default_value_t = -0.99, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 0.99)]
        max: f64,
        #[arg(long, default_value_t = 199)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Operator norms of the cumulant relation matrices over a grid.
    Mn {
        #[arg(long, value_delimiter = ',', default_values_t = vec![3u32, 4, 5, 6])]
        orders: Vec<u32>,
        #[arg(long, allow_hyphen_values = true)]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
        #[arg(long, default_value_t = 39)]
        points: usize,
        /// Sweep singular values with random orthogonal factors instead of
        /// eigenvalues of a symmetric matrix.
        #[arg(long)]
        nonsymmetric: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Determinant identity det(I - AA^T) = det(I - A^T A) on random draws.
    Detcheck {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 5])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated expansion of the energy distance over a cumulant grid.
    GramCharlier {
        #[arg(long, default_value_t = 2.0)]
        k3_max: f64,
        #[arg(long, default_value_t = 2.0)]
        k4_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cumulant shrinkage projected on the first principal component,
    /// for random symmetric matrices.
    Projection {
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![3u32, 4])]
        orders: Vec<u32>,
        #[arg(long, default_value_t = 0.05)]
        eig_min: f64,
        #[arg(long, default_value_t = 0.95)]
        eig_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Command {
    /// Infer the causal direction of a pair file.
    Infer(InferArgs),
    /// Generate a synthetic cause-effect pair file.
    Gen(GenArgs),
    /// Run the synthetic benchmark over mechanism/cause/noise cells.
    Bench(BenchArgs),
    /// Numerical sweeps for the cumulant-asymmetry analysis.
    Lab {
        #[command(subcommand)]
        command: LabCommand,
    },
    /// Accuracy-versus-decision-rate curve from scored results.
    Curve(CurveArgs),
    /// Residual diagnostics for one seeded synthetic run.
    Diagnose(DiagnoseArgs),
}

/// Six significant digits for CSV output.
fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=8).contains(&exp) {
        format!("{x:.5e}")
    } else {
        format!("{:.*}", (5 - exp).max(0) as usize, x)
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn cmd_infer(args: InferArgs) -> Result<()> {
    let pf = load_pair(&args.pair)?;
    if let Some(warning) = pf.tie_warning() {
        eprintln!("warning: {warning}");
    }
    let cfg = InferenceConfig {
        method: args.method.into(),
        grid_size: args.grid_size,
        folds: args.folds,
        seed: args.seed,
        ..Default::default()
    };
    let decision = infer_direction(&pf.pair, &cfg)?;
    let mut out = std::io::stdout().lock();
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&decision).expect("serializable"))?;
    } else {
        writeln!(out, "pair: {} (n={})", pf.path.display(), decision.n)?;
        writeln!(out, "method: {}  seed: {}", cfg.method.as_str(), args.seed)?;
        writeln!(out, "direction: {}", decision.direction.as_str())?;
        writeln!(out, "confidence: {}", fmt6(decision.confidence))?;
        writeln!(
            out,
            "G_xtilde: {}  G_ytilde: {}",
            fmt6(decision.g_xtilde),
            fmt6(decision.g_ytilde)
        )?;
        for (name, report) in [
            ("xtilde->y", &decision.branch_xtilde.forward),
            ("y->xtilde", &decision.branch_xtilde.reverse),
            ("ytilde->x", &decision.branch_ytilde.forward),
            ("x->ytilde", &decision.branch_ytilde.reverse),
        ] {
            writeln!(
                out,
                "fit {name}: gamma={} tau={} cv={} statistic={}",
                fmt6(report.gamma),
                fmt6(report.tau),
                fmt6(report.cv_score),
                fmt6(report.statistic)
            )?;
        }
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let spec = SyntheticSpec {
        mechanism: args.mechanism.into(),
        cause: args.cause.into(),
        noise: args.noise.into(),
        n: args.n,
        seed: args.seed,
    };
    let pair = generate(&spec)?;
    save_pair(&args.out, &pair)?;
    eprintln!(
        "wrote {} rows ({}/{}/{}, seed {}) to {}",
        spec.n,
        spec.mechanism.as_str(),
        spec.cause.as_str(),
        spec.noise.as_str(),
        spec.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let mechanisms: Vec<Mechanism> = if args.mechanism.is_empty() {
        Mechanism::ALL.to_vec()
    } else {
        args.mechanism.iter().map(|&m| m.into()).collect()
    };
    let causes: Vec<CauseDistribution> = if args.cause.is_empty() {
        CauseDistribution::ALL.to_vec()
    } else {
        args.cause.iter().map(|&c| c.into()).collect()
    };
    let noises: Vec<NoiseDistribution> = if args.noise.is_empty() {
        NoiseDistribution::ALL.to_vec()
    } else {
        args.noise.iter().map(|&n| n.into()).collect()
    };
    let cfg = InferenceConfig {
        method: args.method.into(),
        grid_size: args.grid_size,
        folds: args.folds,
        seed: args.seed,
        ..Default::default()
    };
    let mut out = open_out(&args.out)?;
    writeln!(out, "mechanism,cause,noise,method,n,reps,accuracy,undecided")?;
    for &mech in &mechanisms {
        for &cause in &causes {
            for &noise in &noises {
                let spec =
                    SyntheticSpec { mechanism: mech, cause, noise, n: args.n, seed: args.seed };
                eprintln!(
                    "bench {}/{}/{}: {} reps at n={}",
                    mech.as_str(),
                    cause.as_str(),
                    noise.as_str(),
                    args.reps,
                    args.n
                );
                let result = run_benchmark(&spec, args.reps, &cfg)?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    mech.as_str(),
                    cause.as_str(),
                    noise.as_str(),
                    cfg.method.as_str(),
                    args.n,
                    args.reps,
                    fmt6(result.accuracy),
                    result.undecided
                )?;
                out.flush()?;
            }
        }
    }
    Ok(())
}

fn cmd_lab(command: LabCommand) -> Result<()> {
    match command {
        LabCommand::Cn { orders, min, max, points, out } => {
            let mut w = open_out(&out)?;
            writeln!(w, "n,w,c_n")?;
            for row in cn_grid(&orders, min, max, points)? {
                writeln!(w, "{},{},{}", row.n, fmt6(row.w), fmt6(row.value))?;
            }
            w.flush()?;
        }
        LabCommand::Mn { orders, min, max, points, nonsymmetric, seed, out } => {
            let mut w = open_out(&out)?;
            if nonsymmetric {
                let (lo, hi) = (min.unwrap_or(0.05), max.unwrap_or(0.95));
                writeln!(w, "n,sigma1,sigma2,op_norm,ratio2")?;
                for row in nonsymmetric_norm_grid(&orders, lo, hi, points, seed)? {
                    writeln!(
                        w,
                        "{},{},{},{},{}",
                        row.n,
                        fmt6(row.sigma1),
                        fmt6(row.sigma2),
                        fmt6(row.op_norm),
                        fmt6(row.ratio2)
                    )?;
                }
            } else {
                let (lo, hi) = (min.unwrap_or(-0.95), max.unwrap_or(0.95));
                writeln!(w, "n,lambda1,lambda2,op_norm")?;
                for row in symmetric_norm_grid(&orders, lo, hi, points)? {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        row.n,
                        fmt6(row.lambda1),
                        fmt6(row.lambda2),
                        fmt6(row.op_norm)
                    )?;
                }
            }
            w.flush()?;
        }
        LabCommand::Detcheck { samples, dims, seed, out } => {
            let mut w = open_out(&out)?;
            writeln!(w, "sample,d,det_causal,det_anticausal,rel_diff")?;
            let mut rng = rng::stream(seed, rng::tag::LAB);
            let mut max_rel: f64 = 0.0;
            let mut index = 0usize;
            for _ in 0..samples {
                for &d in &dims {
                    let a = MixingMatrix::random_nonsymmetric(d, (0.01, 0.99), &mut rng)?;
                    let (det_c, det_ct) = determinant_identity_check(&a);
                    let rel = (det_c - det_ct).abs() / det_c.abs().max(det_ct.abs());
                    max_rel = max_rel.max(rel);
                    writeln!(w, "{},{},{},{},{:.3e}", index, d, fmt6(det_c), fmt6(det_ct), rel)?;
                    index += 1;
                }
            }
            w.flush()?;
            eprintln!("max relative difference: {max_rel:.3e}");
        }
        LabCommand::GramCharlier { k3_max, k4_max, points, out } => {
            let mut w = open_out(&out)?;
            writeln!(w, "kappa3,kappa4,energy")?;
            for &k3 in &asymmetry::linspace(-k3_max, k3_max, points) {
                for &k4 in &asymmetry::linspace(-k4_max, k4_max, points) {
                    writeln!(
                        w,
                        "{},{},{}",
                        fmt6(k3),
                        fmt6(k4),
                        fmt6(gram_charlier_energy(k3, k4))
                    )?;
                }
            }
            w.flush()?;
        }
        LabCommand::Projection { samples, dim, orders, eig_min, eig_max, seed, out } => {
            let mut w = open_out(&out)?;
            writeln!(w, "sample,order,eigenvalue,skipped")?;
            let mut rng = rng::stream(seed, rng::tag::LAB);
            for i in 0..samples {
                let a = MixingMatrix::random_symmetric(dim, (eig_min, eig_max), &mut rng)?;
                for &n in &orders {
                    match projected_shrinkage_check(&a, n)? {
                        Some(c) => writeln!(w, "{i},{n},{},0", fmt6(c))?,
                        None => writeln!(w, "{i},{n},,1")?,
                    }
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_curve(args: CurveArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.results)?;
    let mut results = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected `correct,confidence`, found {} fields", fields.len()),
            });
        }
        let correct = match fields[0] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                if idx == 0 {
                    continue; // header row
                }
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("not a boolean flag: {other:?}"),
                });
            }
        };
        let confidence: f64 = fields[1].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("not a number: {:?}", fields[1]),
        })?;
        results.push((correct, confidence));
    }
    let curve = decision_rate_curve(&results)?;
    let mut w = open_out(&args.out)?;
    writeln!(w, "threshold,decision_fraction,accuracy")?;
    for p in &curve.points {
        writeln!(w, "{},{},{}", fmt6(p.threshold), fmt6(p.decision_fraction), fmt6(p.accuracy))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let spec = SyntheticSpec {
        mechanism: args.mechanism.into(),
        cause: args.cause.into(),
        noise: args.noise.into(),
        n: args.n,
        seed: args.seed,
    };
    let cfg = InferenceConfig {
        method: args.method.into(),
        grid_size: args.grid_size,
        folds: args.folds,
        seed: args.seed,
        ..Default::default()
    };
    let record = residual_diagnostics(&spec, &cfg, args.grid_points)?;
    for (side, diag) in [("causal", &record.causal), ("anticausal", &record.anticausal)] {
        let prefix = format!("{}_{side}", args.out_prefix);
        let mut w = BufWriter::new(File::create(format!("{prefix}_preimage.csv"))?);
        writeln!(w, "regressor,preimage")?;
        for &(g, p) in &diag.preimage_curve {
            writeln!(w, "{},{}", fmt6(g), fmt6(p))?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(format!("{prefix}_z.csv"))?);
        writeln!(w, "index,z")?;
        for (i, &z) in diag.z.iter().enumerate() {
            writeln!(w, "{i},{}", fmt6(z))?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(format!("{prefix}_hist.csv"))?);
        writeln!(w, "bin_center,count")?;
        for &(c, n) in &diag.histogram {
            writeln!(w, "{},{n}", fmt6(c))?;
        }
        w.flush()?;
    }
    let mut w = BufWriter::new(File::create(format!("{}_summary.csv", args.out_prefix))?);
    writeln!(w, "direction,energy_statistic,gamma,tau,fit_mean,fit_sd")?;
    for (side, diag) in [("causal", &record.causal), ("anticausal", &record.anticausal)] {
        writeln!(
            w,
            "{side},{},{},{},{},{}",
            fmt6(diag.energy_statistic),
            fmt6(diag.gamma),
            fmt6(diag.tau),
            fmt6(diag.gaussian_fit.0),
            fmt6(diag.gaussian_fit.1)
        )?;
    }
    w.flush()?;
    eprintln!(
        "causal energy statistic {} vs anticausal {}",
        fmt6(record.causal.energy_statistic),
        fmt6(record.anticausal.energy_statistic)
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Infer(args) => cmd_infer(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Lab { command } => cmd_lab(command),
        Command::Curve(args) => cmd_curve(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    }
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        // A closed consumer is not an error.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {
            std::process::ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(e.exit_code() as u8)
        }
    }
}
