//! `roombem` command-line front end.

mod commands;
mod exit;
mod formats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CompareRequest, DiagnosticsRequest, MeshRequest, Run, Terms};
use exit::{CliError, ExitKind};
use formats::{
    parse_point, parse_points, GridSpec, ImpedanceSpec, Keyword, MethodSpec, OutputFormat,
    RunConfig, WindowKind,
};

#[derive(Parser)]
#[command(
    name = "roombem",
    version,
    about = "Boundary-integral room acoustics in state-space form"
)]
struct Cli {
    /// Worker threads for frequency-parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a shoebox mesh or inspect a mesh file.
    Mesh(MeshArgs),
    /// Solve the scene over a frequency grid or list and write the transfer function.
    Sweep(RunArgs),
    /// Produce room impulse responses from a scene or a stored transfer function.
    Rir {
        #[command(flatten)]
        run: RunArgs,
        /// Transfer-function CSV written by `sweep` (skips solving).
        #[arg(long)]
        transfer: Option<PathBuf>,
    },
    /// Compare against the image-source model on shoebox and plate scenes.
    CompareIsm {
        #[command(flatten)]
        run: RunArgs,
        /// Maximum image order.
        #[arg(long, default_value_t = 1)]
        orders: usize,
        /// Which part of the response to compare.
        #[arg(long, value_enum, default_value_t = Terms::Full)]
        terms: Terms,
        /// Wall reflection coefficient for the image model (default: from the wall impedance).
        #[arg(long, allow_negative_numbers = true)]
        reflection: Option<f64>,
    },
    /// Dump Markov parameters, observability/controllability matrices and solutions.
    Diagnostics {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated frequencies in Hz.
        #[arg(long, value_delimiter = ',', required = true)]
        freqs: Vec<f64>,
        /// Also write little-endian binary matrices.
        #[arg(long)]
        binary: bool,
    },
}

#[derive(Args)]
struct MeshArgs {
    /// Room dimensions `Lx,Ly,Lz` in metres.
    #[arg(long, value_delimiter = ',')]
    shoebox: Option<Vec<f64>>,
    /// Target element edge length in metres.
    #[arg(long)]
    edge: Option<f64>,
    /// Wall impedance in Pa·s/m, or `rigid`.
    #[arg(long, default_value = "rigid")]
    impedance: String,
    /// Mesh file to inspect.
    #[arg(long)]
    inspect: Option<PathBuf>,
    /// JSON impedance map for `--inspect`.
    #[arg(long)]
    impedance_map: Option<PathBuf>,
    #[arg(long, default_value = "shoebox.mesh")]
    out: PathBuf,
}

#[derive(Args, Default)]
struct RunArgs {
    /// JSON run config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON scene file.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Sample rate in Hz.
    #[arg(long)]
    fs: Option<f64>,
    /// FFT length (even).
    #[arg(long)]
    nfft: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodSpec>,
    /// Neumann series order. For `diagnostics`, the number of Markov blocks
    /// (default min(N, 256)).
    #[arg(long = "K")]
    order: Option<usize>,
    /// Gauss degree for far-field element pairs.
    #[arg(long)]
    quad_order: Option<usize>,
    /// Near-field threshold in multiples of the larger element diameter.
    #[arg(long)]
    near_field: Option<f64>,
    /// Levels of near-field subdivision.
    #[arg(long)]
    near_field_levels: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Output formats, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Option<Vec<OutputFormat>>,
    /// Bins above this frequency are left at zero.
    #[arg(long)]
    band_limit: Option<f64>,
    /// Frequency list start in Hz (with --fmax and --fstep, replaces the grid).
    #[arg(long, requires_all = ["fmax", "fstep"])]
    fmin: Option<f64>,
    #[arg(long, requires_all = ["fmin", "fstep"])]
    fmax: Option<f64>,
    #[arg(long, requires_all = ["fmin", "fmax"])]
    fstep: Option<f64>,
    /// Accept meshes below the minimum elements per wavelength.
    #[arg(long)]
    allow_coarse: bool,
    /// Source position `x,y,z`.
    #[arg(long, allow_negative_numbers = true)]
    source: Option<String>,
    /// Receiver positions `x,y,z;x,y,z;...`.
    #[arg(long, allow_negative_numbers = true)]
    receivers: Option<String>,
    #[arg(long, value_enum)]
    window: Option<WindowKind>,
    /// Raised-cosine roll-off as a fraction of the band.
    #[arg(long)]
    rolloff: Option<f64>,
}

fn frequency_list(fmin: f64, fmax: f64, fstep: f64) -> Result<Vec<f64>, CliError> {
    if !(fstep > 0.0 && fmin > 0.0 && fmax >= fmin) {
        return Err(CliError::new(
            ExitKind::Usage,
            "need 0 < fmin <= fmax and fstep > 0",
        ));
    }
    let count = ((fmax - fmin) / fstep + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| fmin + i as f64 * fstep).collect())
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(scene) = &self.scene {
            cfg.scene = scene.clone();
        }
        match (self.fs, self.nfft, cfg.grid) {
            (Some(fs), Some(nfft), _) => cfg.grid = Some(GridSpec { fs, nfft }),
            (Some(fs), None, Some(g)) => cfg.grid = Some(GridSpec { fs, nfft: g.nfft }),
            (None, Some(nfft), Some(g)) => cfg.grid = Some(GridSpec { fs: g.fs, nfft }),
            (None, None, _) => {}
            _ => {
                return Err(CliError::new(
                    ExitKind::Usage,
                    "--fs and --nfft must be given together",
                ))
            }
        }
        if let Some(m) = self.method {
            cfg.solver.method = m;
        }
        if let Some(k) = self.order {
            cfg.solver.order = k;
        }
        if let Some(q) = self.quad_order {
            cfg.solver.quadrature_order = q;
        }
        if let Some(t) = self.near_field {
            cfg.solver.near_field_threshold = t;
        }
        if let Some(l) = self.near_field_levels {
            cfg.solver.near_field_levels = l;
        }
        if let Some(dir) = &self.out_dir {
            cfg.outputs.directory = dir.clone();
        }
        if let Some(f) = &self.format {
            cfg.outputs.formats = f.clone();
        }
        if let Some(b) = self.band_limit {
            cfg.band_limit_hz = Some(b);
        }
        if let (Some(lo), Some(hi), Some(step)) = (self.fmin, self.fmax, self.fstep) {
            cfg.frequencies = Some(frequency_list(lo, hi, step)?);
        }
        cfg.allow_coarse_mesh |= self.allow_coarse;
        if let Some(src) = &self.source {
            cfg.source = Some(parse_point(src)?);
        }
        if let Some(rcv) = &self.receivers {
            cfg.receivers = Some(parse_points(rcv)?);
        }
        if let Some(w) = self.window {
            cfg.window = w;
        }
        if let Some(r) = self.rolloff {
            cfg.rolloff = r;
        }
        Ok(cfg)
    }

    fn prepare(&self) -> Result<Run, CliError> {
        Run::prepare(self.config()?)
    }
}

fn parse_impedance(text: &str) -> Result<ImpedanceSpec, CliError> {
    if text.eq_ignore_ascii_case("rigid") {
        return Ok(ImpedanceSpec::Keyword(Keyword::Rigid));
    }
    text.parse::<f64>().map(ImpedanceSpec::Value).map_err(|_| {
        CliError::new(
            ExitKind::Usage,
            format!("impedance must be a number or `rigid`, got `{text}`"),
        )
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::new(ExitKind::Usage, e.to_string()))?;
    }
    match cli.command {
        Command::Mesh(args) => commands::cmd_mesh(&MeshRequest {
            shoebox: match args.shoebox.as_deref() {
                None => None,
                Some(&[x, y, z]) => Some([x, y, z]),
                Some(_) => return Err(CliError::new(ExitKind::Usage, "--shoebox takes Lx,Ly,Lz")),
            },
            edge: args.edge,
            impedance: parse_impedance(&args.impedance)?,
            inspect: args.inspect,
            impedance_map: args.impedance_map,
            out: args.out,
        }),
        Command::Sweep(args) => commands::cmd_sweep(&args.prepare()?),
        Command::Rir { run, transfer } => match transfer {
            Some(path) => commands::cmd_rir(None, Some(&path), &run.config()?),
            None => {
                let prepared = run.prepare()?;
                commands::cmd_rir(Some(&prepared), None, &prepared.config)
            }
        },
        Command::CompareIsm {
            run,
            orders,
            terms,
            reflection,
        } => commands::cmd_compare_ism(
            &run.prepare()?,
            &CompareRequest {
                orders,
                terms,
                reflection,
            },
        ),
        Command::Diagnostics { run, freqs, binary } => commands::cmd_diagnostics(
            &run.prepare()?,
            &DiagnosticsRequest {
                frequencies: freqs,
                // --K sets the number of Markov blocks here; default min(N, 256)
                blocks: run.order,
                binary,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitKind::Usage.code())
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.code())
        }
    }
}
