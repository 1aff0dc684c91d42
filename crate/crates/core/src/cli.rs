//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or format, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::chaos::{integrate, sampled_component, IntegratorConfig};
use crate::cipher::{
    decrypt_bytes, decrypt_image, encrypt_bytes_with, encrypt_image_with, CipherEnvelope, Payload,
    DEFAULT_ROUNDS,
};
use crate::dynamics::{
    bifurcation_sweep_with, complexity_map_with, lyapunov, lyapunov_spectrum, zero_one, ParamRange,
    COMPLEXITY_STRIDE, ZERO_ONE_STRIDE,
};
use crate::error::{Error, Result};
use crate::image::ImageRGB;
use crate::io::{
    format_hex, load_image, parse_modbus_hex, read_envelope, save_image, write_csv_file,
    write_envelope,
};
use crate::keystream::{Key, KeystreamGenerator};
use crate::metrics::{
    analyze, key_sensitivity_report_with, AnalysisConfig, PsnrMode, SsimConfig, DEFAULT_PAIRS,
    DEFAULT_PAIR_SEED,
};
use crate::nist::{bits_from_keystream, run_battery_with, BatteryConfig, DEFAULT_BITS};
use crate::par::Execution;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "memchaos", version, about = "Memristive chaotic cipher and analysis tools")]
struct Cli {
    /// Run sweeps on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct KeyArg {
    /// Key file: 13 numbers (x1..x7, alpha, beta, r, d, a, b).
    #[arg(long, env = "MEMCHAOS_KEY")]
    key: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encrypt a PNG or PPM image into an envelope.
    EncryptImage {
        #[command(flatten)]
        key: KeyArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        rounds: u8,
        /// Also write the cipher planes as an L x L image.
        #[arg(long)]
        preview: Option<PathBuf>,
    },
    /// Decrypt an image envelope.
    DecryptImage {
        #[command(flatten)]
        key: KeyArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypt raw bytes (a file, or a hex frame such as a Modbus request).
    EncryptData {
        #[command(flatten)]
        key: KeyArg,
        #[arg(long = "in", conflicts_with = "hex", required_unless_present = "hex")]
        input: Option<PathBuf>,
        /// Octets like "0x13 0x04 0x00".
        #[arg(long)]
        hex: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        rounds: u8,
    },
    /// Decrypt a byte envelope; prints hex when no --out is given.
    DecryptData {
        #[command(flatten)]
        key: KeyArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Security statistics of an image or an image envelope.
    Analyze(AnalyzeArgs),
    /// Lyapunov spectrum, bifurcation, 0-1 test, complexity map, trajectory.
    Dynamics(DynamicsArgs),
    /// Randomness tests on keystream bits.
    Nist {
        #[arg(long, env = "MEMCHAOS_KEY")]
        key: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BITS)]
        bits: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Dump raw keystream bytes.
    Keystream {
        #[command(flatten)]
        key: KeyArg,
        #[arg(long)]
        bytes: usize,
        /// Binary output file; hex on stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Image to compare against for PSNR and SSIM.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PAIRS)]
    pairs: usize,
    #[arg(long, default_value_t = DEFAULT_PAIR_SEED)]
    seed: u64,
    /// PSNR as 20 log10(255 / MSE).
    #[arg(long)]
    psnr_literal: bool,
    /// SSIM with c3 = c1 / 2.
    #[arg(long)]
    ssim_compat: bool,
    /// Run the key-sensitivity experiment with this key (input is the plaintext).
    #[arg(long)]
    sensitivity_key: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    /// Initial state and parameters; canonical when omitted.
    #[arg(long)]
    key: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    lyapunov: bool,
    #[arg(long, default_value_t = lyapunov::DEFAULT_TOTAL_STEPS)]
    lyapunov_steps: usize,
    #[arg(long)]
    bifurcation: bool,
    #[arg(long = "zero-one")]
    zero_one: bool,
    #[arg(long)]
    complexity: bool,
    #[arg(long)]
    trajectory: bool,
    /// Samples per run (trajectory rows, bifurcation window, series length).
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 5.0)]
    alpha_lo: f64,
    #[arg(long, default_value_t = 15.0)]
    alpha_hi: f64,
    #[arg(long, default_value_t = 101)]
    alpha_n: usize,
    #[arg(long, default_value_t = 0.5)]
    d_lo: f64,
    #[arg(long, default_value_t = 2.0)]
    d_hi: f64,
    #[arg(long, default_value_t = 21)]
    d_n: usize,
}

fn read_key(path: &Path) -> Result<Key> {
    Key::from_text(&fs::read_to_string(path)?)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else if matches!(e, Error::InvalidParameter(_)) {
        EXIT_USAGE
    } else {
        EXIT_IO
    }
}

/// Parses `args` (including the program name) and runs one command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match run(cli.command, exec) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn envelope_preview(env: &CipherEnvelope) -> Result<ImageRGB> {
    let side = env.header.side;
    let planes = [env.planes[0].clone(), env.planes[1].clone(), env.planes[2].clone()];
    ImageRGB::new(side, side, planes)
}

/// Image files load directly; image envelopes are viewed as L x L images.
fn load_analysis_input(path: &Path) -> Result<ImageRGB> {
    let mut magic = [0u8; 4];
    let is_envelope = fs::File::open(path)
        .and_then(|mut f| std::io::Read::read_exact(&mut f, &mut magic))
        .is_ok()
        && magic == crate::cipher::envelope::MAGIC;
    if !is_envelope {
        return load_image(path);
    }
    let env = read_envelope(path)?;
    match env.header.payload {
        Payload::Image { .. } => envelope_preview(&env),
        Payload::Bytes { .. } => Err(Error::Format {
            field: "kind",
            reason: "analyze needs an image envelope".into(),
        }),
    }
}

fn run(cmd: Command, exec: Execution) -> Result<()> {
    match cmd {
        Command::EncryptImage {
            key,
            input,
            out,
            rounds,
            preview,
        } => {
            let key = read_key(&key.key)?;
            let img = load_image(&input)?;
            let env = encrypt_image_with(&img, &key, rounds)?;
            write_envelope(&env, &out)?;
            if let Some(p) = preview {
                save_image(&envelope_preview(&env)?, &p)?;
            }
        }
        Command::DecryptImage { key, input, out } => {
            let key = read_key(&key.key)?;
            let env = read_envelope(&input)?;
            save_image(&decrypt_image(&env, &key)?, &out)?;
        }
        Command::EncryptData {
            key,
            input,
            hex,
            out,
            rounds,
        } => {
            let key = read_key(&key.key)?;
            let data = match (input, hex) {
                (Some(p), _) => fs::read(p)?,
                (None, Some(h)) => parse_modbus_hex(&h)?.into_bytes(),
                (None, None) => unreachable!("clap requires one input"),
            };
            let env = encrypt_bytes_with(&data, &key, rounds)?;
            write_envelope(&env, &out)?;
            println!("{}", format_hex(&env.planes[0]));
        }
        Command::DecryptData { key, input, out } => {
            let key = read_key(&key.key)?;
            let env = read_envelope(&input)?;
            let data = decrypt_bytes(&env, &key)?;
            match out {
                Some(p) => crate::io::atomic_write(&p, |w| Ok(w.write_all(&data)?))?,
                None => println!("{}", format_hex(&data)),
            }
        }
        Command::Analyze(a) => run_analyze(a, exec)?,
        Command::Dynamics(d) => run_dynamics(d, exec)?,
        Command::Nist { key, bits, out_dir } => {
            let key = match key {
                Some(p) => read_key(&p)?,
                None => Key::canonical(),
            };
            let mut g = KeystreamGenerator::new(&key)?;
            let seq = bits_from_keystream(&mut g, bits)?;
            let results = run_battery_with(exec, &seq, &BatteryConfig::default())?;
            println!("{:<22} {:>10}  result", "test", "p-value");
            for r in &results {
                println!(
                    "{:<22} {:>10.6}  {}",
                    r.name,
                    r.p_value,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            fs::create_dir_all(&out_dir)?;
            write_csv_file(&out_dir.join("nist.csv"), |w| crate::nist::write_csv(&results, w))?;
        }
        Command::Keystream { key, bytes, out } => {
            let key = read_key(&key.key)?;
            let mut g = KeystreamGenerator::new(&key)?;
            let mut buf = vec![0u8; bytes];
            g.fill(&mut buf)?;
            match out {
                Some(p) => crate::io::atomic_write(&p, |w| Ok(w.write_all(&buf)?))?,
                None => println!("{}", format_hex(&buf)),
            }
        }
    }
    Ok(())
}

fn run_analyze(a: AnalyzeArgs, exec: Execution) -> Result<()> {
    let img = load_analysis_input(&a.input)?;
    let reference = a.reference.as_deref().map(load_image).transpose()?;
    let cfg = AnalysisConfig {
        n_pairs: a.pairs,
        seed: a.seed,
        psnr_mode: if a.psnr_literal {
            PsnrMode::Literal
        } else {
            PsnrMode::Standard
        },
        ssim: if a.ssim_compat {
            SsimConfig::compat()
        } else {
            SsimConfig::standard()
        },
    };
    let report = analyze(&img, reference.as_ref(), &cfg)?;
    let mut json = serde_json::to_value(&report).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    if let Some(kp) = &a.sensitivity_key {
        let key = read_key(kp)?;
        let sens = key_sensitivity_report_with(exec, &img, &key, a.epsilon)?;
        json["key_sensitivity"] =
            serde_json::to_value(&sens).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json).map_err(|e| Error::InvalidParameter(e.to_string()))?
    );
    fs::create_dir_all(&a.out_dir)?;
    for (h, ch) in report.histogram.iter().zip(["r", "g", "b"]) {
        write_csv_file(&a.out_dir.join(format!("histogram_{ch}.csv")), |w| h.write_csv(w))?;
    }
    Ok(())
}

fn run_dynamics(d: DynamicsArgs, exec: Execution) -> Result<()> {
    let key = match &d.key {
        Some(p) => read_key(p)?,
        None => Key::canonical(),
    };
    if !(d.lyapunov || d.bifurcation || d.zero_one || d.complexity || d.trajectory) {
        return Err(Error::InvalidParameter(
            "choose at least one of --lyapunov, --bifurcation, --zero-one, --complexity, --trajectory"
                .into(),
        ));
    }
    fs::create_dir_all(&d.out_dir)?;
    let cfg = IntegratorConfig::with_samples(d.samples);
    let (s0, p) = (key.init, key.params);
    if d.trajectory {
        let t = integrate(&s0, &p, &cfg)?;
        write_csv_file(&d.out_dir.join("trajectory.csv"), |w| t.write_csv(w))?;
    }
    if d.lyapunov {
        let spec = lyapunov_spectrum(&p, &s0, &cfg, lyapunov::DEFAULT_RENORM_INTERVAL, d.lyapunov_steps)?;
        for (i, v) in spec.exponents.iter().enumerate() {
            println!("LE{} = {v:+.6}", i + 1);
        }
        write_csv_file(&d.out_dir.join("lyapunov.csv"), |w| spec.write_csv(w))?;
    }
    if d.bifurcation {
        let range = ParamRange::new(d.alpha_lo, d.alpha_hi, d.alpha_n)?;
        let data = bifurcation_sweep_with(exec, range, &p, &s0, &cfg)?;
        write_csv_file(&d.out_dir.join("bifurcation.csv"), |w| data.write_csv(w))?;
    }
    if d.zero_one {
        let x1 = sampled_component(&s0, &p, &cfg, ZERO_ONE_STRIDE, 0)?;
        let r = zero_one::zero_one_test_with(exec, &x1, zero_one::DEFAULT_FREQUENCIES, DEFAULT_PAIR_SEED)?;
        println!("K = {:.4}", r.k);
        write_csv_file(&d.out_dir.join("zero_one.csv"), |w| r.write_csv(w))?;
    }
    if d.complexity {
        let alpha = ParamRange::new(d.alpha_lo, d.alpha_hi, d.alpha_n)?;
        let dr = ParamRange::new(d.d_lo, d.d_hi, d.d_n)?;
        let map = complexity_map_with(exec, alpha, dr, &p, &s0, &cfg, COMPLEXITY_STRIDE)?;
        write_csv_file(&d.out_dir.join("complexity_map.csv"), |w| map.write_csv(w))?;
    }
    Ok(())
}
