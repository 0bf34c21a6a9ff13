use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use v2vchan::container::{
    kfield_summary, read_ctf, read_kfield_csv, read_json, write_cir, write_ctf, write_json,
    write_kfield_csv, FitReport, GmmDeltas, SynthSidecar,
};
use v2vchan::error::{Error, Result};
use v2vchan::fitting::{empirical_cdf, fit_bimodal_gmm, gmm_cdf, Cdf};
use v2vchan::kfactor::sliding_k;
use v2vchan::scenario::{builtin_profiles, find_profile, ScenarioProfile};
use v2vchan::subband::{align_first_tap, remove_large_scale, subband_transform};
use v2vchan::synth::{synthesize, SynthSpec, DEFAULT_N, DEFAULT_NC};

/// Synthesize, process, and fit non-stationary V2V fading experiments.
#[derive(Parser)]
#[command(name = "v2vchan", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic channel transfer function with known K trajectory.
    Synth(SynthArgs),
    /// Run the estimation pipeline on a CTF file, producing a K field.
    Process(ProcessArgs),
    /// Pool K fields and fit the bi-modal Gaussian mixture.
    Fit(FitArgs),
    /// Tabulate fit results in catalog order.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario name from the builtin catalog.
    #[arg(long)]
    scenario: String,
    /// Length of the synthesized recording in seconds.
    #[arg(long)]
    duration_s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ProcessArgs {
    /// CTF file produced by `synth`.
    input: PathBuf,
    /// Scenario name; sets the estimation windows S_K and S_LS.
    #[arg(long)]
    scenario: String,
    /// Delay bins per sub-band.
    #[arg(long, default_value_t = 33)]
    nc: usize,
    /// Number of sub-bands.
    #[arg(long, default_value_t = 24)]
    q: usize,
    /// Sliding-window advance in snapshots; defaults to S_K / 10.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Debug)]
enum InvalidKPolicy {
    /// Drop windows where the moment equations had no Rician solution.
    Exclude,
    /// Keep them as K = -60 dB, below every catalog component mean.
    Floor,
}

const FLOOR_K_DB: f64 = -60.0;

#[derive(Args)]
struct FitArgs {
    /// One or more K-field CSV files to pool.
    #[arg(required = true)]
    fields: Vec<PathBuf>,
    /// Scenario whose catalog row the fit is compared against.
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum, default_value_t = InvalidKPolicy::Floor)]
    invalid_k: InvalidKPolicy,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Fit JSON files; rows appear in catalog order, unknown scenarios last.
    #[arg(required = true)]
    fits: Vec<PathBuf>,
}

fn lookup_scenario(name: &str) -> Result<ScenarioProfile> {
    find_profile(name).ok_or_else(|| {
        let names: Vec<String> =
            builtin_profiles().into_iter().map(|p| format!("  {}", p.name)).collect();
        Error::InvalidArgument(format!(
            "unknown scenario '{name}'; valid names:\n{}",
            names.join("\n")
        ))
    })
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let profile = lookup_scenario(&args.scenario)?;
    if !args.duration_s.is_finite() || args.duration_s <= 0.0 {
        return Err(Error::InvalidArgument("duration must be positive".into()));
    }
    let spec = SynthSpec::new(profile.clone(), args.duration_s, args.seed);
    let (ctf, ktraj) = synthesize(&spec, DEFAULT_N, DEFAULT_NC)?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_ctf(&args.out_dir.join("ctf.bin"), &ctf)?;
    let sidecar = SynthSidecar {
        scenario: profile,
        seed: args.seed,
        duration_s: args.duration_s,
        snapshots: ctf.s,
        tail_pdp: spec.tail_pdp.clone(),
        k_trajectory: ktraj,
    };
    write_json(&args.out_dir.join("truth.json"), &sidecar)?;
    eprintln!("wrote {} snapshots x {} bins", ctf.s, ctf.n);
    Ok(())
}

fn cmd_process(args: &ProcessArgs) -> Result<()> {
    let profile = lookup_scenario(&args.scenario)?;
    let ctf = read_ctf(&args.input)?;
    let cir = subband_transform(&ctf, args.nc, args.q)?;
    let (aligned, _report) = align_first_tap(&cir, profile.s_ls)?;
    let normalized = remove_large_scale(&aligned, profile.s_ls)?;
    let stride = match args.stride {
        Some(0) => return Err(Error::InvalidArgument("stride must be at least 1".into())),
        Some(s) => s,
        None => (profile.s_k / 10).max(1),
    };
    let mut field = sliding_k(&normalized, 0, profile.s_k, stride)?;
    // window centers are reported in the CTF's own time base; large-scale
    // removal cropped s_ls/2 snapshots from the front
    for c in &mut field.window_centers {
        *c += profile.s_ls / 2;
    }
    std::fs::create_dir_all(&args.out_dir)?;
    write_cir(&args.out_dir.join("cir.bin"), &normalized)?;
    write_kfield_csv(&args.out_dir.join("kfield.csv"), &field)?;
    write_json(&args.out_dir.join("kfield_summary.json"), &kfield_summary(&field))?;
    eprintln!("wrote {} windows x {} sub-bands", field.rows, field.q);
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let profile = lookup_scenario(&args.scenario)?;
    let mut pool = Vec::new();
    for path in &args.fields {
        for row in read_kfield_csv(path)? {
            if row.valid && row.k_db.is_finite() {
                pool.push(row.k_db);
            } else if args.invalid_k == InvalidKPolicy::Floor {
                pool.push(FLOOR_K_DB);
            }
        }
    }
    if pool.is_empty() {
        return Err(Error::InsufficientData("no usable K samples in the pooled fields".into()));
    }
    let fit = fit_bimodal_gmm(&pool)?;
    let p = fit.params;
    let r = profile.gmm;
    let report = FitReport {
        scenario: profile.name.clone(),
        n: pool.len(),
        w: p.w,
        mu1_db: p.mu1_db,
        sigma1_db: p.sigma1_db,
        mu2_db: p.mu2_db,
        sigma2_db: p.sigma2_db,
        epsilon: fit.epsilon,
        iterations: fit.iterations,
        flags: fit.flags.clone(),
        reference: r,
        deltas: GmmDeltas {
            w: p.w - r.w,
            mu1_db: p.mu1_db - r.mu1_db,
            sigma1_db: p.sigma1_db - r.sigma1_db,
            mu2_db: p.mu2_db - r.mu2_db,
            sigma2_db: p.sigma2_db - r.sigma2_db,
        },
    };
    std::fs::create_dir_all(&args.out_dir)?;
    write_json(&args.out_dir.join("fit.json"), &report)?;
    write_cdf_plot(&args.out_dir.join("cdf.csv"), &pool, &fit.params)?;
    eprintln!("fit {} samples, epsilon {:.4}", pool.len(), fit.epsilon);
    Ok(())
}

/// Plot data: empirical vs fitted mixture CDF over the pooled K samples.
fn write_cdf_plot(path: &Path, pool: &[f64], params: &v2vchan::scenario::GmmParams) -> Result<()> {
    use std::io::Write;
    let emp = empirical_cdf(pool)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "k_db,empirical_cdf,fitted_cdf")?;
    let mut last = f64::NAN;
    for &k in emp.samples() {
        if k == last {
            continue;
        }
        last = k;
        writeln!(w, "{k},{},{}", emp.cdf(k), gmm_cdf(params, k))?;
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let catalog: Vec<String> = builtin_profiles().into_iter().map(|p| p.name).collect();
    let mut rows: Vec<FitReport> = Vec::new();
    for path in &args.fits {
        match read_json::<FitReport>(path) {
            Ok(r) => rows.push(r),
            Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
        }
    }
    let rank = |name: &str| catalog.iter().position(|c| c == name).unwrap_or(catalog.len());
    rows.sort_by_key(|r| rank(&r.scenario));
    println!(
        "{:<44} {:>6} {:>7} {:>6} {:>7} {:>6} {:>7} {:>8}",
        "scenario", "w", "mu1", "s1", "mu2", "s2", "eps", "n"
    );
    for r in &rows {
        println!(
            "{:<44} {:>6.2} {:>7.1} {:>6.1} {:>7.1} {:>6.1} {:>7.3} {:>8}",
            r.scenario, r.w, r.mu1_db, r.sigma1_db, r.mu2_db, r.sigma2_db, r.epsilon, r.n
        );
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("V2V_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("bad V2V_THREADS value '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

fn run() -> Result<()> {
    init_threads()?;
    let cli = Cli::parse();
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Process(a) => cmd_process(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
