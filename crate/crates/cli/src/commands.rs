use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use diamond_core::diamond::{DiamondKeyState, InitialSecret, SchemeConfig, SchemeId};
use diamond_core::fse::FseKeyState;
use diamond_core::famac::FamacKeyState;
use diamond_core::session::transport::{FrameSink, FrameSource, StreamSink, StreamSource};
use diamond_core::session::{self, wire_bytes, BatchEnvelope, Receiver, Sender, SessionHello};
use diamond_core::{AggMode, Error};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sha2::{Digest, Sha256};

use crate::bench::{self, BenchOptions};
use crate::energy::{self, EnergyModel};
use crate::keyfile::KeyFile;
use crate::vectors;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "diamond", version, about = "Forward-secure aggregate authenticated encryption")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a key file holding a scheme configuration and fresh seeds.
    Keygen(KeygenArgs),
    /// Seal records and send them as batch envelopes.
    Send(SendArgs),
    /// Verify and decrypt batch envelopes.
    Recv(RecvArgs),
    /// Time offline/online phases over a scheme × msg_len × batch grid (CSV).
    Bench(BenchArgs),
    /// Estimate energy per AuthEnc operation.
    Energy(EnergyArgs),
    /// Print canonical test vectors.
    Vectors,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RecordFormat {
    /// One record per line.
    Lines,
    /// 4-byte big-endian length before each record.
    LengthPrefixed,
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long)]
    scheme: SchemeId,
    /// Key lifetime in messages.
    #[arg(long)]
    n: u64,
    /// Epoch size (messages per aggregate tag).
    #[arg(long)]
    b: u64,
    #[arg(long)]
    msg_len: usize,
    /// Aggregation mode: hash, xor or addq.
    #[arg(long)]
    agg: Option<AggMode>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("dest").required(true).args(["connect", "out"]))]
pub struct SendArgs {
    #[arg(long)]
    key: PathBuf,
    /// Record source; stdin when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lines")]
    format: RecordFormat,
    /// TCP address of a listening receiver.
    #[arg(long)]
    connect: Option<String>,
    /// Write frames to a file instead.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    precompute_depth: usize,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("src").required(true).args(["listen", "input"]))]
pub struct RecvArgs {
    #[arg(long)]
    key: PathBuf,
    /// Accept one TCP connection on this address.
    #[arg(long)]
    listen: Option<String>,
    /// Read frames from a file.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Plaintext destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lines")]
    format: RecordFormat,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<SchemeId>>,
    #[arg(long, value_delimiter = ',')]
    msg_lens: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    batches: Option<Vec<u64>>,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Operations per run, rounded up to whole epochs.
    #[arg(long, default_value_t = 1000)]
    ops: u64,
    /// Sender precompute depth for the E2E rows.
    #[arg(long, default_value_t = 0)]
    precompute_depth: usize,
    /// Print the storage model (closed form and measured) instead of timings.
    #[arg(long)]
    storage: bool,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    /// Use a fixed cycle count instead of timing the host.
    #[arg(long)]
    cycles: Option<f64>,
    /// Bytes on the air per operation; defaults to the amortized envelope size.
    #[arg(long)]
    wire_bytes: Option<u64>,
    /// Clock used to convert wall time into cycles.
    #[arg(long)]
    cpu_hz: Option<f64>,
    #[arg(long, default_value = "diamond1")]
    scheme: SchemeId,
    #[arg(long, default_value_t = 64)]
    msg_len: usize,
    #[arg(long, default_value_t = 64)]
    batch: u64,
    #[arg(long, default_value_t = 2000)]
    ops: u64,
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Send(a) => send(a),
        Command::Recv(a) => recv(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Energy(a) => energy_cmd(a),
        Command::Vectors => vectors_cmd(),
    }
}

/// Seeded from `DIAMOND_SEED` when set, otherwise from the OS.
fn rng() -> StdRng {
    match std::env::var("DIAMOND_SEED") {
        Ok(seed) => StdRng::from_seed(Sha256::digest(seed.as_bytes()).into()),
        Err(_) => StdRng::from_entropy(),
    }
}

fn keygen(a: KeygenArgs) -> Result<(), CliError> {
    let mut config = SchemeConfig::new(a.scheme, a.n, a.b, a.msg_len)?;
    if let Some(agg) = a.agg {
        config = config.with_agg_mode(agg);
    }
    session::check_session_config(&config)?;
    let kf = KeyFile { config, secret: InitialSecret::generate(&mut rng()) };
    kf.write(&a.out)?;
    println!("{}", kf.fingerprint());
    Ok(())
}

fn read_records(mut input: impl Read, format: RecordFormat) -> io::Result<Vec<Vec<u8>>> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    match format {
        RecordFormat::Lines => {
            if data.is_empty() {
                return Ok(Vec::new());
            }
            if data.last() == Some(&b'\n') {
                data.pop();
            }
            Ok(data.split(|&c| c == b'\n').map(<[u8]>::to_vec).collect())
        }
        RecordFormat::LengthPrefixed => {
            let mut out = Vec::new();
            let mut rest = &data[..];
            while !rest.is_empty() {
                if rest.len() < 4 {
                    return Err(io::Error::new(io::ErrorKind::InvalidData, "truncated length prefix"));
                }
                let len = u32::from_be_bytes(rest[..4].try_into().unwrap()) as usize;
                let body = rest.get(4..4 + len).ok_or_else(|| {
                    io::Error::new(io::ErrorKind::InvalidData, "record shorter than its length prefix")
                })?;
                out.push(body.to_vec());
                rest = &rest[4 + len..];
            }
            Ok(out)
        }
    }
}

fn write_record(out: &mut impl Write, record: &[u8], format: RecordFormat) -> io::Result<()> {
    match format {
        RecordFormat::Lines => {
            out.write_all(record)?;
            out.write_all(b"\n")
        }
        RecordFormat::LengthPrefixed => {
            out.write_all(&(record.len() as u32).to_be_bytes())?;
            out.write_all(record)
        }
    }
}

fn send(a: SendArgs) -> Result<(), CliError> {
    let kf = KeyFile::read(&a.key)?;
    let records = match &a.input {
        Some(path) => read_records(File::open(path)?, a.format)?,
        None => read_records(io::stdin().lock(), a.format)?,
    };
    let mut sink: Box<dyn FrameSink> = match (&a.connect, &a.out) {
        (Some(addr), _) => Box::new(StreamSink(BufWriter::new(TcpStream::connect(addr)?))),
        (None, Some(path)) => Box::new(StreamSink(BufWriter::new(File::create(path)?))),
        (None, None) => unreachable!("clap requires a destination"),
    };

    let ctr: u128 = rng().gen();
    let mut tx = Sender::new(kf.config, &kf.secret, ctr)?.with_depth(a.precompute_depth);
    tx.precompute()?;
    sink.send_frame(&tx.hello().encode())?;

    let (mut envelopes, mut bytes) = (0u64, 0u64);
    let mut emit = |env: BatchEnvelope, sink: &mut Box<dyn FrameSink>| -> Result<(), CliError> {
        let frame = env.encode()?;
        bytes += frame.len() as u64;
        envelopes += 1;
        sink.send_frame(&frame)?;
        Ok(())
    };
    for r in &records {
        if let Some(env) = tx.step(r)? {
            emit(env, &mut sink)?;
        }
    }
    if let Some(env) = tx.flush()? {
        emit(env, &mut sink)?;
    }
    sink.flush()?;
    eprintln!("sent {} records in {envelopes} envelopes ({bytes} bytes)", records.len());
    Ok(())
}

fn recv(a: RecvArgs) -> Result<(), CliError> {
    let kf = KeyFile::read(&a.key)?;
    let mut source: Box<dyn FrameSource> = match (&a.listen, &a.input) {
        (Some(addr), _) => {
            let listener = TcpListener::bind(addr)?;
            eprintln!("listening on {}", listener.local_addr()?);
            let (stream, _) = listener.accept()?;
            Box::new(StreamSource::new(BufReader::new(stream)))
        }
        (None, Some(path)) => Box::new(StreamSource::new(BufReader::new(File::open(path)?))),
        (None, None) => unreachable!("clap requires a source"),
    };
    let mut out: Box<dyn Write> = match &a.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };

    let hello = source
        .recv_frame()?
        .ok_or_else(|| Error::Malformed { offset: 0, reason: "stream ended before the hello".into() })?;
    let mut rx = Receiver::accept(kf.config, &kf.secret, &SessionHello::decode(&hello)?)?;

    let (mut envelopes, mut rejected, mut records) = (0u64, 0u64, 0u64);
    let result = loop {
        let frame = match source.recv_frame() {
            Ok(Some(f)) => f,
            Ok(None) => break Ok(()),
            Err(e) => break Err(e.into()),
        };
        let env = match BatchEnvelope::decode(&frame) {
            Ok(env) => env,
            Err(e) => break Err(e.into()),
        };
        envelopes += 1;
        match rx.step(&env) {
            Ok(plain) => {
                for p in &plain {
                    write_record(&mut out, p, a.format)?;
                }
                records += plain.len() as u64;
            }
            Err(Error::AuthenticationFailed) => {
                rejected += 1;
                eprintln!("rejected epoch starting at period {}", env.epoch_start);
            }
            Err(e) => break Err(CliError::from(e)),
        }
    };
    out.flush()?;
    result?;
    eprintln!("received {records} records from {envelopes} envelopes");
    if rejected > 0 {
        return Err(CliError::Rejected { rejected, envelopes });
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<(), CliError> {
    let schemes = a.schemes.unwrap_or_else(|| SchemeId::ALL.to_vec());
    let msg_lens = a.msg_lens.unwrap_or_else(|| bench::DEFAULT_MSG_LENS.to_vec());
    let batches = a.batches.unwrap_or_else(bench::default_batches);
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());

    if a.storage {
        writeln!(out, "{}", bench::STORAGE_HEADER)?;
        for &s in &schemes {
            for &m in &msg_lens {
                for &b in &batches {
                    writeln!(out, "{}", bench::storage_row(s, m, b)?.csv_row())?;
                }
            }
        }
        out.flush()?;
        return Ok(());
    }

    if a.runs == 0 || a.ops == 0 {
        return Err(CliError::Usage("--runs and --ops must be positive".into()));
    }
    let opts = BenchOptions { runs: a.runs, ops: a.ops, e2e_depth: Some(a.precompute_depth) };
    writeln!(out, "{}", bench::CSV_HEADER)?;
    for &s in &schemes {
        for &m in &msg_lens {
            for &b in &batches {
                for row in bench::measure(s, m, b, &opts)? {
                    writeln!(out, "{}", row.csv_row())?;
                }
                out.flush()?;
            }
        }
    }
    Ok(())
}

/// Median wall time per call of `f` over `ops` calls, five runs.
fn time_ns(ops: u64, mut f: impl FnMut() -> Result<(), Error>) -> Result<f64, Error> {
    let mut samples = Vec::new();
    for _ in 0..5 {
        let t = Instant::now();
        for _ in 0..ops {
            f()?;
        }
        samples.push(t.elapsed().as_nanos() as f64 / ops as f64);
    }
    samples.sort_by(f64::total_cmp);
    Ok(samples[2])
}

fn energy_cmd(a: EnergyArgs) -> Result<(), CliError> {
    let cpu_hz = a.cpu_hz.or_else(energy::host_cpu_hz).unwrap_or(energy::FALLBACK_CPU_HZ);
    if !(cpu_hz.is_finite() && cpu_hz > 0.0) {
        return Err(CliError::Usage("--cpu-hz must be positive".into()));
    }
    let model = EnergyModel::new(cpu_hz);

    let (source, phases, wire) = if let Some(cycles) = a.cycles {
        if !(cycles.is_finite() && cycles >= 0.0) {
            return Err(CliError::Usage("--cycles must be non-negative".into()));
        }
        ("supplied", vec![("cpu", cycles)], a.wire_bytes.unwrap_or(0))
    } else {
        if a.ops == 0 {
            return Err(CliError::Usage("--ops must be positive".into()));
        }
        let ops = a.ops.div_ceil(a.batch) * a.batch;
        let config = SchemeConfig::new(a.scheme, ops, a.batch, a.msg_len)?;
        let secret = InitialSecret { fse_seed: [1; 16], prf_seed: [2; 16], uh_seed: [3; 16] };

        let opts = BenchOptions { runs: 5, ops, e2e_depth: None };
        let online = bench::measure(a.scheme, a.msg_len, a.batch, &opts)?
            .into_iter()
            .find(|r| r.phase == bench::Phase::Online)
            .map_or(0.0, |r| r.ns_per_op);
        let (fse_ns, famac_ns) = if config.profile().integrated_gcm {
            let mut st = DiamondKeyState::from_secret(config, &secret, 0)?;
            let ns = time_ns(ops, || {
                if st.offline_period() > ops {
                    st = DiamondKeyState::from_secret(config, &secret, 0)?;
                }
                st.authenc_offline().map(drop)
            })?;
            (ns, 0.0)
        } else {
            let mut fse = FseKeyState::from_seed(config.fse_params(), &secret.fse_seed, 0)?;
            let fse_ns = time_ns(ops, || {
                if fse.is_exhausted() {
                    fse = FseKeyState::from_seed(config.fse_params(), &secret.fse_seed, 0)?;
                }
                fse.enc_offline().map(drop)
            })?;
            let mut mac = FamacKeyState::from_seeds(config.famac_params(), &secret.prf_seed, &secret.uh_seed)?;
            let famac_ns = time_ns(ops, || {
                if mac.is_exhausted() {
                    mac = FamacKeyState::from_seeds(config.famac_params(), &secret.prf_seed, &secret.uh_seed)?;
                }
                mac.sign_offline().map(drop)
            })?;
            (fse_ns, famac_ns)
        };
        let wire = a.wire_bytes.unwrap_or_else(|| {
            wire_bytes(a.batch, a.batch, a.msg_len, config.agg_mode).div_ceil(a.batch)
        });
        (
            "host-estimate",
            vec![
                ("online", model.cycles_for_ns(online)),
                ("offline_fse", model.cycles_for_ns(fse_ns)),
                ("offline_famac", model.cycles_for_ns(famac_ns)),
            ],
            wire,
        )
    };

    println!("{}", energy::REPORT_HEADER);
    for row in energy::report(&model, &phases, wire) {
        println!("{}", energy::format_row(&row, source));
    }
    if source != "supplied" {
        eprintln!("estimate from host timings at cpu_hz={cpu_hz:.0}");
    }
    Ok(())
}

fn vectors_cmd() -> Result<(), CliError> {
    println!("name,expected,computed,status");
    let mut failed = 0;
    for v in vectors::standard()?.into_iter().chain(vectors::schemes()?) {
        let status = match v.expected {
            None => "-",
            Some(_) if v.passes() => "ok",
            Some(_) => {
                failed += 1;
                "FAIL"
            }
        };
        println!("{},{},{},{}", v.name, v.expected.unwrap_or(""), v.computed, status);
    }
    if failed > 0 {
        return Err(CliError::Check(format!("{failed} vectors did not match")));
    }
    Ok(())
}
