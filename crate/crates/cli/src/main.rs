use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phonon_core::dispersion::{caustic_slice, verify_lemma_bounds, DispersionModel};
use phonon_core::harness::{
    reproduce_fig1, reproduce_fig2, run_convergence_suite, write_pgm, ExperimentConfig,
    InitialFamily,
};
use phonon_core::lattice::{
    evolve_leapfrog, evolve_spectral, from_normal_mode, read_snapshot, to_normal_mode,
    write_snapshot, write_snapshot_csv,
};
use phonon_core::multiscale::{
    energy_equality_report, estimate_mu, estimate_muh, MeasureHistogram,
};
use phonon_core::transport::verify_limit;
use phonon_core::wigner::{wigner_pair_with, AdmissibleTestFunction, PairingOptions};

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Harmonic-lattice experiments: spectral dynamics, Wigner pairings,
/// multiscale measures and transport limits.
#[derive(Parser)]
#[command(name = "phonon", version)]
struct Cli {
    /// Experiment configuration (JSON); supplies the stencil, cells and test
    /// function where a subcommand needs them.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve an initial-data family and write a snapshot.
    Simulate(SimulateArgs),
    #[command(subcommand)]
    Wigner(WignerCmd),
    #[command(subcommand)]
    Multiscale(MultiscaleCmd),
    #[command(subcommand)]
    Transport(TransportCmd),
    #[command(subcommand)]
    Dispersion(DispersionCmd),
    /// Reproduce the point-source figures.
    Figures(FiguresArgs),
    /// Convergence sweep over the configured grid.
    Suite(SuiteArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Spectral,
    Leapfrog,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "point_source")]
    family: String,
    #[arg(long = "N", default_value_t = 32)]
    n: usize,
    /// Lattice time.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value = "spectral")]
    method: Method,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long)]
    stencil: Option<String>,
    /// `.csv` writes a text grid, anything else the binary snapshot.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum WignerCmd {
    /// Pair a snapshot with a test function.
    Pair {
        #[arg(long)]
        state: PathBuf,
        /// JSON term list; the default suite symbol when omitted.
        #[arg(long)]
        symbol: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        pmax: usize,
        #[arg(long)]
        stencil: Option<String>,
    },
}

#[derive(Subcommand)]
enum MultiscaleCmd {
    /// Histogram estimates of μ and μ^H and the energy balance.
    Decompose {
        #[arg(long)]
        family: String,
        #[arg(long = "N", default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 0.0625)]
        rho: f64,
        #[arg(long = "M", default_value_t = 8.0)]
        m_cut: f64,
        /// JSON report; histogram CSV and PGM files go next to it.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum TransportCmd {
    /// Lattice pairing against the transport-limit prediction over N.
    Verify {
        #[arg(long)]
        family: String,
        /// Carrier of the packet family.
        #[arg(long, value_delimiter = ',')]
        k0: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long = "N", value_delimiter = ',', default_value = "32,64,128")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 6)]
        pmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DispersionCmd {
    /// Check the acoustic conditions of a stencil.
    Certify {
        #[arg(long)]
        stencil: Option<String>,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
    },
    /// Caustic points of the k₃-integrated flow on the plane x₃ = 0.
    Caustics {
        #[arg(long, default_value_t = 0.95)]
        t: f64,
        #[arg(long, default_value_t = 2048)]
        resolution: usize,
        #[arg(long)]
        stencil: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical constants of the dispersion inequalities.
    Lemma {
        /// Largest sample count; stability is judged against half of it.
        #[arg(long, default_value_t = 1e5)]
        samples: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        stencil: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Fig1,
    Fig2,
    All,
}

#[derive(Args)]
struct FiguresArgs {
    #[arg(long, value_enum, default_value = "all")]
    which: Figure,
    #[arg(long, default_value = "figures")]
    out: PathBuf,
    /// White cut-off of the heatmaps relative to the maximum.
    #[arg(long, default_value_t = 1e-6)]
    cutoff: f64,
}

#[derive(Args)]
struct SuiteArgs {
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() -> AnyResult<()> {
    if let Ok(v) = std::env::var("PHONON_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| format!("PHONON_THREADS={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

struct Ctx {
    config: ExperimentConfig,
}

impl Ctx {
    fn load(path: Option<&Path>) -> AnyResult<Self> {
        let config = match path {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        Ok(Self { config })
    }

    fn dispersion(&self, stencil: Option<&str>) -> AnyResult<DispersionModel> {
        Ok(match stencil {
            Some(s) => ExperimentConfig {
                stencil: s.into(),
                ..self.config.clone()
            }
            .dispersion()?,
            None => self.config.dispersion()?,
        })
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> AnyResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn verdict(ok: bool, what: &str) -> bool {
    println!("{} {what}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> AnyResult<bool> {
    let disp = ctx.dispersion(a.stencil.as_deref())?;
    let family = InitialFamily::by_name(&a.family)?;
    let s0 = family.build_initial(a.n, &disp)?;
    let s1 = match a.method {
        Method::Spectral => from_normal_mode(
            &evolve_spectral(&to_normal_mode(&s0, &disp)?, &disp, a.t)?,
            &disp,
        )?,
        Method::Leapfrog => {
            let steps = (a.t / a.dt).round() as usize;
            evolve_leapfrog(&s0, disp.stencil(), a.t / steps.max(1) as f64, steps)?
        }
    };
    if a.out.extension().is_some_and(|e| e == "csv") {
        write_snapshot_csv(&a.out, &s1, a.t)?;
    } else {
        write_snapshot(&a.out, &s1, a.t)?;
    }
    let h0 = phonon_core::lattice::hamiltonian(&s0, disp.stencil())?;
    let h1 = phonon_core::lattice::hamiltonian(&s1, disp.stencil())?;
    println!("energy {h0:.12e} -> {h1:.12e}");
    Ok(true)
}

fn wigner(ctx: &Ctx, cmd: WignerCmd) -> AnyResult<bool> {
    let WignerCmd::Pair {
        state,
        symbol,
        pmax,
        stencil,
    } = cmd;
    let disp = ctx.dispersion(stencil.as_deref())?;
    let (header, s) = read_snapshot(&state)?;
    let a: AdmissibleTestFunction = match symbol {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => ctx.config.symbol.clone(),
    };
    let r = wigner_pair_with(
        &to_normal_mode(&s, &disp)?,
        &a,
        pmax,
        PairingOptions::default(),
    )?;
    println!(
        "{}",
        serde_json::json!({ "n": header.n, "time": header.time, "pmax": pmax, "result": r })
    );
    Ok(true)
}

fn marginal_pgm(path: &Path, h: &MeasureHistogram, cells: usize) -> AnyResult<()> {
    // x-marginal summed over x₃
    let x = h.x_marginal();
    let mut plane = vec![0.0; cells * cells];
    for (i, w) in x.iter().enumerate() {
        plane[i / (cells * cells) * cells + (i / cells) % cells] += w;
    }
    let max = plane.iter().cloned().fold(0.0, f64::max);
    let px: Vec<u8> = plane
        .iter()
        .map(|v| {
            if max > 0.0 {
                (255.0 * (1.0 - v.max(0.0) / max)).round() as u8
            } else {
                255
            }
        })
        .collect();
    write_pgm(path, cells, cells, &px)?;
    Ok(())
}

fn multiscale(ctx: &Ctx, cmd: MultiscaleCmd) -> AnyResult<bool> {
    let MultiscaleCmd::Decompose {
        family,
        n,
        rho,
        m_cut,
        out,
    } = cmd;
    let disp = ctx.config.dispersion()?;
    let cells = &ctx.config.cells;
    let fam = InitialFamily::by_name(&family)?;
    let mode = fam.build_mode(n, &disp)?;
    let phi = fam.phi0(n)?;
    let mu = estimate_mu(&mode, rho, cells)?;
    let muh = estimate_muh(&mode, rho, Some(m_cut), &phi, cells)?;
    let report = energy_equality_report(&mode, rho, m_cut, &phi, cells)?;
    write_json(&out, &report)?;
    let dir = out
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    for (name, h) in [("mu", &mu), ("muh", &muh)] {
        h.write_csv(std::io::BufWriter::new(std::fs::File::create(
            dir.join(format!("{name}.csv")),
        )?))?;
        marginal_pgm(&dir.join(format!("{name}_x.pgm")), h, cells.x_cells)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    let floor = -0.02 * report.total;
    Ok(verdict(
        mu.min_weight() >= floor && muh.min_weight() >= floor,
        "histogram cells nonnegative within 2% of the mass",
    ))
}

fn transport(ctx: &Ctx, cmd: TransportCmd) -> AnyResult<bool> {
    let TransportCmd::Verify {
        family,
        k0,
        t,
        n,
        pmax,
        out,
    } = cmd;
    let disp = ctx.config.dispersion()?;
    let fam = match k0 {
        Some(k) if family == "packet" => {
            let k: [f64; 3] = k.try_into().map_err(|_| "--k0 takes three components")?;
            InitialFamily::packet(k)
        }
        Some(_) => return Err("--k0 applies to the packet family only".into()),
        None => InitialFamily::by_name(&family)?,
    };
    let n_max = *n.iter().max().ok_or("--N is empty")?;
    let limit = fam.known_limit(n_max)?;
    let table = verify_limit(
        |m| fam.build_mode(m, &disp),
        &limit,
        &disp,
        &ctx.config.symbol,
        t,
        &n,
        None,
        pmax,
        PairingOptions::default(),
    )?;
    let mut csv =
        String::from("N,t,lhs_re,lhs_im,rhs_re,rhs_im,abs_error,rel_error,truncation_bound\n");
    for r in &table.rows {
        csv += &format!(
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.n,
            r.t,
            r.lhs.re,
            r.lhs.im,
            r.rhs.re,
            r.rhs.im,
            r.abs_error,
            r.rel_error,
            r.truncation_error_bound
        );
    }
    match out {
        Some(p) => std::fs::write(p, &csv)?,
        None => print!("{csv}"),
    }
    let last = table.last().map_or(f64::INFINITY, |r| r.rel_error);
    Ok(verdict(
        table.monotone() && last <= 0.1,
        &format!("error decreasing in N, {last:.3} relative at N={n_max}"),
    ))
}

fn dispersion(ctx: &Ctx, cmd: DispersionCmd) -> AnyResult<bool> {
    match cmd {
        DispersionCmd::Certify {
            stencil,
            resolution,
        } => {
            let cert = ctx
                .dispersion(stencil.as_deref())?
                .certify_acoustic(resolution);
            println!("{}", serde_json::to_string_pretty(&cert)?);
            Ok(verdict(cert.passed, "acoustic conditions"))
        }
        DispersionCmd::Caustics {
            t,
            resolution,
            stencil,
            out,
        } => {
            let pts = caustic_slice(&ctx.dispersion(stencil.as_deref())?, t, resolution);
            let mut csv = String::from("x1,x2,k1,k2,k3\n");
            for p in &pts {
                csv += &format!("{},{},{},{},{}\n", p.x[0], p.x[1], p.k[0], p.k[1], p.k[2]);
            }
            std::fs::write(&out, csv)?;
            println!("{} caustic points", pts.len());
            Ok(true)
        }
        DispersionCmd::Lemma {
            samples,
            seed,
            stencil,
            out,
        } => {
            if samples.is_nan() || samples < 2.0 {
                return Err(format!("--samples {samples}").into());
            }
            let big = samples.round() as usize;
            let r = verify_lemma_bounds(
                &ctx.dispersion(stencil.as_deref())?,
                &[big / 2, big],
                &[1.0 / 32.0, 1.0 / 64.0],
                seed,
            );
            match out {
                Some(p) => write_json(&p, &r)?,
                None => println!("{}", serde_json::to_string_pretty(&r)?),
            }
            Ok(verdict(
                r.stable(0.05),
                "constants change by at most 5% under doubling",
            ))
        }
    }
}

fn figures(ctx: &Ctx, a: FiguresArgs) -> AnyResult<bool> {
    let disp = ctx.config.dispersion()?;
    let mut ok = true;
    if matches!(a.which, Figure::Fig2 | Figure::All) {
        let r = reproduce_fig2(&disp, 1.0 / 70.0, 160, Some(&a.out))?;
        let within = r.fraction_within[r.fraction_within.len() - 1];
        ok &= verdict(
            within >= 0.99,
            &format!("fig2: {within:.6} of the energy within 1.1 t"),
        );
        ok &= verdict(
            r.energy_drift <= 1e-12,
            &format!("fig2: energy drift {:.1e}", r.energy_drift),
        );
    }
    if matches!(a.which, Figure::Fig1 | Figure::All) {
        let r = reproduce_fig1(&disp, 1.0 / 128.0, 256, a.cutoff, Some(&a.out))?;
        let front = r.front_radius[r.front_radius.len() - 1];
        ok &= verdict(
            (front - 0.95).abs() <= 0.05 * 0.95,
            &format!("fig1: front radius {front:.4}"),
        );
        ok &= verdict(
            r.caustic_alignment >= 0.8,
            &format!(
                "fig1: {:.3} of the brightest cells near a caustic",
                r.caustic_alignment
            ),
        );
        ok &= verdict(
            r.symmetry_error <= 1e-9,
            &format!("fig1: symmetry error {:.1e}", r.symmetry_error),
        );
    }
    Ok(ok)
}

fn suite(ctx: &Ctx, a: SuiteArgs) -> AnyResult<bool> {
    let mut config = ctx.config.clone();
    if let Some(out) = a.out {
        config.output_dir = out;
    }
    let r = run_convergence_suite(&config, true)?;
    println!(
        "{} rows, monotone fraction {:.3}, finest relative error {:.3}",
        r.rows.len(),
        r.monotone_fraction,
        r.finest_rel_error
    );
    Ok(verdict(r.passed, "convergence suite"))
}

fn run(cli: Cli) -> AnyResult<bool> {
    init_threads()?;
    let ctx = Ctx::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Wigner(c) => wigner(&ctx, c),
        Command::Multiscale(c) => multiscale(&ctx, c),
        Command::Transport(c) => transport(&ctx, c),
        Command::Dispersion(c) => dispersion(&ctx, c),
        Command::Figures(a) => figures(&ctx, a),
        Command::Suite(a) => suite(&ctx, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
