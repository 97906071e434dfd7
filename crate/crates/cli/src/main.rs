// SPDX-License-Identifier: Apache-2.0

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rc4hw::activity::compare_gating;
use rc4hw::hw::{format_trace, rc4_hw_encrypt, run_traced, trace_rc4, CycleReport, PrgaUnit};
use rc4hw::randomness::corpus::{read_corpus, write_corpus, CANONICAL_BITS, CANONICAL_SAMPLES};
use rc4hw::randomness::suite::parse_pvalue_lines;
use rc4hw::randomness::{generate_corpus, run_suite, SuiteConfig, TestKind};
use rc4hw::rc4::{keystream, Rc4Key, Rc4State};
use rc4hw::transport::{self, Endpoint, Role, SessionConfig};

const DEFAULT_KEY_HEX: &str = "4b6579";

#[derive(Parser)]
#[command(name = "rc4hw", version, about = "RC4 coprocessor model and analysis tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print keystream octets as lowercase hex.
    Keystream {
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long)]
        bytes: usize,
        #[arg(long, value_enum, default_value_t = EngineArg::Reference)]
        engine: EngineArg,
    },
    /// XOR input with the keystream (encrypts and decrypts).
    Encrypt {
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long, value_enum, default_value_t = EngineArg::Reference)]
        engine: EngineArg,
        #[command(flatten)]
        io: IoArgs,
        /// Print the ciphertext as hex instead of raw octets.
        #[arg(long)]
        hex: bool,
    },
    /// Per-edge trace of the hardware model.
    Trace {
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long)]
        bytes: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Clock counts for an n-byte run.
    Cycles {
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long)]
        bytes: usize,
    },
    /// Switching activity with and without clock gating.
    Power {
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long, default_value_t = 1000)]
        bytes: usize,
        #[arg(long)]
        csv: bool,
    },
    /// Write a keystream corpus to a directory.
    Corpus {
        #[arg(long, default_value_t = CANONICAL_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = CANONICAL_BITS)]
        bits: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the statistical suite and print the report.
    Nist(NistArgs),
    /// Encrypt input and stream it to the peer.
    Send {
        #[command(flatten)]
        endpoint: EndpointArgs,
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long, value_enum, default_value_t = EngineArg::Reference)]
        engine: EngineArg,
        /// Defaults to standard input.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Receive and decrypt a stream from the peer.
    Recv {
        #[command(flatten)]
        endpoint: EndpointArgs,
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long, value_enum, default_value_t = EngineArg::Reference)]
        engine: EngineArg,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct KeyArgs {
    /// Key as hex (1 to 256 octets).
    #[arg(long, value_parser = parse_key_hex, conflicts_with = "key_file")]
    key_hex: Option<Rc4Key>,
    /// File whose raw contents are the key.
    #[arg(long)]
    key_file: Option<PathBuf>,
}

#[derive(Args)]
struct IoArgs {
    /// Defaults to standard input.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Defaults to standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct EndpointArgs {
    #[arg(long, value_name = "ADDR")]
    listen: Option<String>,
    #[arg(long, value_name = "ADDR")]
    connect: Option<String>,
}

#[derive(Args)]
struct NistArgs {
    #[arg(long, default_value_t = CANONICAL_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = CANONICAL_BITS)]
    bits: usize,
    /// Read samples from a corpus directory instead of generating them.
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    /// Extra `test_name,sample_index,p_value` lines from other tools.
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 128)]
    block_len: usize,
    #[arg(long, default_value_t = 16)]
    serial_m: usize,
    #[arg(long, default_value_t = 10)]
    apen_m: usize,
    /// Comma-separated subset of the built-in tests.
    #[arg(long, value_delimiter = ',', value_parser = parse_test_kind)]
    tests: Option<Vec<TestKind>>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Reference,
    Hw,
}

impl From<EngineArg> for transport::Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Reference => transport::Engine::Reference,
            EngineArg::Hw => transport::Engine::HardwareModel,
        }
    }
}

fn parse_key_hex(s: &str) -> Result<Rc4Key, String> {
    Rc4Key::from_hex(s).map_err(|e| e.to_string())
}

fn parse_test_kind(s: &str) -> Result<TestKind, String> {
    TestKind::from_name(s).ok_or_else(|| {
        let names: Vec<_> = TestKind::ALL.iter().map(|t| t.name()).collect();
        format!("unknown test {s:?} (expected one of {})", names.join(", "))
    })
}

type BoxError = Box<dyn std::error::Error>;

impl KeyArgs {
    fn resolve(&self) -> Result<Rc4Key, BoxError> {
        if let Some(key) = &self.key_hex {
            return Ok(key.clone());
        }
        if let Some(path) = &self.key_file {
            let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            return Ok(Rc4Key::new(bytes).map_err(|e| format!("{}: {e}", path.display()))?);
        }
        Ok(Rc4Key::from_hex(DEFAULT_KEY_HEX)?)
    }
}

impl EndpointArgs {
    fn endpoint(&self) -> Endpoint {
        match (&self.listen, &self.connect) {
            (Some(a), _) => Endpoint::Listen(a.clone()),
            (None, Some(a)) => Endpoint::Connect(a.clone()),
            (None, None) => unreachable!("clap requires one of --listen/--connect"),
        }
    }
}

fn open_input(path: Option<&Path>) -> io::Result<Box<dyn Read>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p)?)),
        None => Box::new(io::stdin().lock()),
    })
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn hw_keystream(key: &Rc4Key, n: usize) -> Result<Vec<u8>, BoxError> {
    let mut prga = PrgaUnit::for_key(key)?;
    let mut out = vec![0u8; n];
    prga.fill(&mut out)?;
    Ok(out)
}

fn run(command: Command) -> Result<(), BoxError> {
    let mut stdout = io::stdout().lock();
    match command {
        Command::Keystream { key, bytes, engine } => {
            let key = key.resolve()?;
            let ks = match engine {
                EngineArg::Reference => keystream(&key, bytes),
                EngineArg::Hw => hw_keystream(&key, bytes)?,
            };
            writeln!(stdout, "{}", hex::encode(ks))?;
        }
        Command::Encrypt { key, engine, io, hex } => {
            let key = key.resolve()?;
            let mut data = Vec::new();
            open_input(io.input.as_deref())?.read_to_end(&mut data)?;
            let out = match engine {
                EngineArg::Reference => Rc4State::new(&key).xor_cipher(&data),
                EngineArg::Hw if data.is_empty() => Vec::new(),
                EngineArg::Hw => rc4_hw_encrypt(&key, &data)?.0,
            };
            let mut sink = open_output(io.output.as_deref())?;
            if hex {
                writeln!(sink, "{}", hex::encode(out))?;
            } else {
                sink.write_all(&out)?;
            }
            sink.flush()?;
        }
        Command::Trace { key, bytes, output } => {
            let events = trace_rc4(&key.resolve()?, bytes)?;
            let mut sink = open_output(output.as_deref())?;
            sink.write_all(format_trace(&events).as_bytes())?;
            sink.flush()?;
        }
        Command::Cycles { key, bytes } => {
            let run = run_traced(&key.resolve()?, bytes, |_| {})?;
            let report: CycleReport = run.cycles;
            write!(stdout, "{}", report.to_text())?;
        }
        Command::Power { key, bytes, csv } => {
            let cmp = compare_gating(&key.resolve()?, bytes)?;
            write!(stdout, "{}", if csv { cmp.to_csv() } else { cmp.to_table() })?;
        }
        Command::Corpus { samples, bits, out_dir } => {
            let corpus = generate_corpus(samples, bits)?;
            write_corpus(&out_dir, &corpus)?;
            writeln!(stdout, "wrote {samples} samples of {bits} bits to {}", out_dir.display())?;
        }
        Command::Nist(args) => {
            let corpus = match &args.corpus_dir {
                Some(dir) => read_corpus(dir)?,
                None => generate_corpus(args.samples, args.bits)?,
            };
            let external = match &args.external {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    parse_pvalue_lines(&text).map_err(|e| format!("{}: {e}", path.display()))?
                }
                None => Vec::new(),
            };
            let config = SuiteConfig {
                alpha: args.alpha,
                block_len: args.block_len,
                serial_m: args.serial_m,
                apen_m: args.apen_m,
                tests: args.tests.unwrap_or_else(|| TestKind::ALL.to_vec()),
            };
            let report = run_suite(&corpus, &config, &external)?;
            let mut sink = open_output(args.output.as_deref())?;
            sink.write_all(report.to_text().as_bytes())?;
            sink.flush()?;
        }
        Command::Send { endpoint, key, engine, input } => {
            let endpoint = endpoint.endpoint();
            let config =
                SessionConfig { role: Role::Sender, endpoint, key: key.resolve()?, engine: engine.into() };
            let mut source = open_input(input.as_deref())?;
            let mut stream = config.endpoint.open()?;
            let mut session = transport::handshake(&mut stream, config)?;
            let sent = transport::send_stream(&mut session, &mut stream, &mut source)?;
            eprintln!("sent {sent} octets");
        }
        Command::Recv { endpoint, key, engine, output } => {
            let endpoint = endpoint.endpoint();
            let config =
                SessionConfig { role: Role::Receiver, endpoint, key: key.resolve()?, engine: engine.into() };
            let mut sink = open_output(output.as_deref())?;
            let mut stream = config.endpoint.open()?;
            let mut session = transport::handshake(&mut stream, config)?;
            let got = transport::recv_stream(&mut session, &mut stream, &mut sink)?;
            eprintln!("received {got} octets");
        }
    }
    stdout.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rc4hw: {e}");
            ExitCode::from(2)
        }
    }
}
