use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hfofdm::config::{dump_config, parse_config};
use hfofdm::error::{Error, Failure, Stage, StageExt};
use hfofdm::formats::{read_iq, write_iq, write_latents};
use hfofdm::pipeline::{apply_channel, loopback, receive, transmit, ChannelSpec, LatentInput};
use hfofdm::sweep::{parse_grid, run_sweep, write_csv, SweepConfig, SweepError, MIN_FRAMES};
use hfofdm::telemetry::write_telemetry;
use hfofdm_core::metrics::latent_rmse;
use hfofdm_core::receiver::RxOutput;
use hfofdm_core::{ChannelKind, FrameLayout, ModemConfig};

/// OFDM modem for continuous-valued latent vectors over simulated HF
/// channels.
#[derive(Parser)]
#[command(version, args_conflicts_with_subcommands = false)]
struct Cli {
    /// Print all settings and derived constants, then exit.
    #[arg(long, global = true)]
    dump_config: bool,

    /// key = value configuration file, applied before the flags below.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    n_carriers: Option<usize>,
    #[arg(long, global = true)]
    symbol_rate: Option<u32>,
    #[arg(long, global = true)]
    sample_rate: Option<u32>,
    /// Cyclic prefix length, seconds.
    #[arg(long, global = true)]
    cp_duration: Option<f64>,
    #[arg(long, global = true)]
    payload_symbols_per_frame: Option<usize>,
    #[arg(long, global = true)]
    latents_per_frame: Option<usize>,
    #[arg(long, global = true)]
    latent_dim: Option<usize>,
    #[arg(long, global = true)]
    carrier_base_freq: Option<f64>,
    #[arg(long, global = true)]
    pilot_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Latents to IQ.
    Tx {
        #[command(flatten)]
        latents: LatentArgs,
        #[command(flatten)]
        tx: TxArgs,
        /// Output IQ file (.iqf32).
        #[arg(short, long)]
        output: PathBuf,
    },
    /// IQ through the channel simulator.
    Chan {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        chan: ChanArgs,
    },
    /// IQ to latents.
    Rx {
        #[arg(short, long)]
        input: PathBuf,
        /// Output latent file (.f32).
        #[arg(short, long)]
        output: PathBuf,
        /// JSON-lines telemetry file.
        #[arg(long)]
        telemetry: Option<PathBuf>,
    },
    /// tx, chan and rx in one process; prints the latent RMSE.
    Loopback {
        #[command(flatten)]
        latents: LatentArgs,
        #[command(flatten)]
        tx: TxArgs,
        #[command(flatten)]
        chan: ChanArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        telemetry: Option<PathBuf>,
    },
    /// Metrics over a grid of channels and noise levels, as CSV.
    Sweep {
        /// Entries `channel:start[:stop:step]` separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = MIN_FRAMES)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        latent_scale: f64,
        #[command(flatten)]
        tx: TxArgs,
        /// CSV output; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct LatentArgs {
    /// Latent file (.f32); otherwise Gaussian latents are generated.
    #[arg(long, conflicts_with_all = ["latent_seed", "latent_count", "latent_scale"])]
    latent_in: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    latent_seed: u64,
    #[arg(long, default_value_t = 100)]
    latent_count: usize,
    #[arg(long, default_value_t = 1.0)]
    latent_scale: f64,
}

impl LatentArgs {
    fn input(&self) -> LatentInput {
        match &self.latent_in {
            Some(p) => LatentInput::File(p.clone()),
            None => LatentInput::Generated { seed: self.latent_seed, count: self.latent_count, scale: self.latent_scale },
        }
    }
}

#[derive(Args)]
struct TxArgs {
    /// Apply the ctanh amplitude bottleneck.
    #[arg(long)]
    bottleneck: bool,
    /// Bottleneck drive gain.
    #[arg(long, default_value_t = 1.0, requires = "bottleneck", allow_negative_numbers = true)]
    drive: f64,
}

impl TxArgs {
    fn drive(&self) -> Result<Option<f64>, Error> {
        if !self.bottleneck {
            return Ok(None);
        }
        if !(self.drive.is_finite() && self.drive > 0.0) {
            return Err(usage(Stage::Tx, "--drive must be positive"));
        }
        Ok(Some(self.drive))
    }
}

#[derive(Args)]
struct ChanArgs {
    /// Symbol energy to noise density ratio, dB; noiseless when absent.
    #[arg(long = "EqN0", allow_negative_numbers = true)]
    eq_n0: Option<f64>,
    #[arg(long, default_value = "awgn")]
    channel: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    freq_offset: f64,
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Reference symbol magnitude for the noise level.
    #[arg(long, default_value_t = 1.0)]
    aq: f64,
}

impl ChanArgs {
    fn spec(&self) -> Result<ChannelSpec, Error> {
        let kind: ChannelKind = self.channel.parse().map_err(|_| usage(Stage::Chan, "--channel must be awgn or mpp"))?;
        if !(self.aq.is_finite() && self.aq > 0.0) {
            return Err(usage(Stage::Chan, "--aq must be positive"));
        }
        if self.eq_n0.is_some_and(|v| !v.is_finite()) {
            return Err(usage(Stage::Chan, "--EqN0 must be finite"));
        }
        Ok(ChannelSpec {
            kind,
            eq_n0_db: self.eq_n0,
            freq_offset_hz: self.freq_offset,
            gain: self.gain,
            seed: self.seed,
            a_q: self.aq,
        })
    }
}

fn usage(stage: Stage, msg: &str) -> Error {
    Error::new(stage, Failure::Usage(msg.into()))
}

fn layout(cli: &Cli) -> Result<FrameLayout, Error> {
    let mut cfg = ModemConfig::default();
    if let Some(p) = &cli.config {
        let text = fs::read_to_string(p).stage(Stage::Config)?;
        cfg = parse_config(&text, cfg).stage(Stage::Config)?;
    }
    let o = &cli.overrides;
    macro_rules! apply {
        ($($f:ident),*) => { $(if let Some(v) = o.$f { cfg.$f = v; })* };
    }
    apply!(n_carriers, symbol_rate, sample_rate, cp_duration, payload_symbols_per_frame, latents_per_frame, latent_dim, carrier_base_freq, pilot_seed);
    cfg.validate().stage(Stage::Config)
}

fn telemetry_to(path: &Path, out: &RxOutput) -> Result<(), Error> {
    let f = fs::File::create(path).stage(Stage::Rx)?;
    write_telemetry(BufWriter::new(f), out).stage(Stage::Rx)
}

fn run(cli: Cli) -> Result<(), Error> {
    let layout = layout(&cli)?;
    if cli.dump_config {
        print!("{}", dump_config(&layout));
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(usage(Stage::Config, "no subcommand given (see --help)"));
    };
    match command {
        Command::Tx { latents, tx, output } => {
            let drive = tx.drive()?;
            let z = latents.input().load(&layout)?;
            let x = transmit(&layout, &z, drive)?;
            write_iq(&output, &x).stage(Stage::Tx)
        }
        Command::Chan { input, output, chan } => {
            let spec = chan.spec()?;
            let x = read_iq(&input).stage(Stage::Chan)?;
            let y = apply_channel(&layout, &x, &spec)?;
            write_iq(&output, &y).stage(Stage::Chan)
        }
        Command::Rx { input, output, telemetry } => {
            let y = read_iq(&input).stage(Stage::Rx)?;
            let out = receive(&layout, &y)?;
            write_latents(&output, &out.latents).stage(Stage::Rx)?;
            if let Some(t) = telemetry {
                telemetry_to(&t, &out)?;
            }
            Ok(())
        }
        Command::Loopback { latents, tx, chan, output, telemetry } => {
            let drive = tx.drive()?;
            let spec = chan.spec()?;
            let z = latents.input().load(&layout)?;
            let out = loopback(&layout, &z, drive, &spec)?;
            if let Some(p) = output {
                write_latents(&p, &out.latents).stage(Stage::Rx)?;
            }
            if let Some(t) = telemetry {
                telemetry_to(&t, &out)?;
            }
            println!("latents={}", z.len());
            println!("frames={}", out.equalized.len());
            println!("frame_start={}", out.sync.frame_start);
            println!("freq_offset_hz={:.4}", out.sync.coarse_freq);
            println!("latent_rmse={:.6e}", latent_rmse(&z, &out.latents));
            Ok(())
        }
        Command::Sweep { grid, frames, seed, latent_scale, tx, output } => {
            let grid = parse_grid(&grid).map_err(SweepError::from).stage(Stage::Sweep)?;
            let cfg = SweepConfig { frames, seed, latent_scale, drive: tx.drive()? };
            let points = run_sweep(&layout, &grid, &cfg).stage(Stage::Sweep)?;
            match output {
                Some(p) => {
                    let f = fs::File::create(&p).stage(Stage::Sweep)?;
                    write_csv(BufWriter::new(f), &points, &layout).stage(Stage::Sweep)
                }
                None => write_csv(io::stdout().lock(), &points, &layout).stage(Stage::Sweep),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(hfofdm::error::exit::CONFIG as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
