//! Timing harness behind `diamond bench`.
//!
//! Every (scheme, msg_len, batch) point is timed as the median of several
//! runs. Each run seals a whole number of epochs: all offline work first,
//! then the online phase, then batch verification on a fresh receiver.

use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use diamond_core::diamond::storage;
use diamond_core::diamond::{DiamondKeyState, InitialSecret, SchemeConfig, SchemeId};
use diamond_core::famac::aggregate;
use diamond_core::primitives::chain::LABEL_FSE;
use diamond_core::primitives::{FprgState, HashChain, KeyUpdatePolicy};
use diamond_core::session::{self, BatchEnvelope, Receiver, Sender};
use diamond_core::{Error, Result};

pub const CSV_HEADER: &str = "scheme,msg_len,batch,phase,ns_per_op,bytes_storage";
pub const DEFAULT_MSG_LENS: [usize; 3] = [16, 64, 128];

pub fn default_batches() -> Vec<u64> {
    (0..=10).map(|k| 1u64 << k).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Offline,
    Online,
    Total,
    AverdecOnline,
    E2e,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Offline => "OFFLINE",
            Phase::Online => "ONLINE",
            Phase::Total => "TOTAL",
            Phase::AverdecOnline => "AVERDEC_ONLINE",
            Phase::E2e => "E2E",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scheme: SchemeId,
    pub msg_len: usize,
    pub batch: u64,
    pub phase: Phase,
    pub ns_per_op: f64,
    /// Operations per run.
    pub ops: u64,
    pub bytes_storage: usize,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.1},{}",
            self.scheme, self.msg_len, self.batch, self.phase, self.ns_per_op, self.bytes_storage
        )
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub runs: usize,
    pub ops: u64,
    /// Sender precompute depth for the E2E phase; `None` skips E2E.
    pub e2e_depth: Option<usize>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { runs: 5, ops: 1000, e2e_depth: Some(0) }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

const SECRET: InitialSecret = InitialSecret { fse_seed: [0x11; 16], prf_seed: [0x22; 16], uh_seed: [0x33; 16] };

struct RunTimes {
    offline: f64,
    online: f64,
    averdec: f64,
}

fn one_run(config: SchemeConfig, msg: &[u8]) -> Result<RunTimes> {
    let ops = config.n as usize;
    let mut tx = DiamondKeyState::from_secret(config, &SECRET, 0)?;
    let mut rx = DiamondKeyState::from_secret(config, &SECRET, 0)?;

    let t = Instant::now();
    let mut pres = Vec::with_capacity(ops);
    for _ in 0..ops {
        pres.push(tx.authenc_offline()?);
    }
    let offline = t.elapsed().as_nanos() as f64;

    let t = Instant::now();
    let mut batches = Vec::with_capacity(ops / config.b as usize);
    for chunk in pres.chunks_mut(config.b as usize) {
        let mut acc = None;
        let mut cts = Vec::with_capacity(chunk.len());
        for pre in chunk {
            let (ct, tag) = tx.authenc_online(pre, msg)?;
            acc = Some(aggregate(acc, &tag, config.agg_mode, config.b)?);
            cts.push(ct);
        }
        batches.push((cts, acc.expect("non-empty epoch")));
    }
    let online = t.elapsed().as_nanos() as f64;

    let mut averdec = 0.0;
    for (cts, agg) in &batches {
        let pre = rx.averdec_offline(cts.len() as u64)?;
        let t = Instant::now();
        black_box(rx.averdec_online(pre, cts, agg)?);
        averdec += t.elapsed().as_nanos() as f64;
    }
    Ok(RunTimes { offline, online, averdec })
}

fn e2e_run(config: SchemeConfig, depth: usize) -> Result<f64> {
    let mut tx = Sender::new(config, &SECRET, 0)?.with_depth(depth);
    tx.precompute()?;
    let mut rx = Receiver::accept(config, &SECRET, tx.hello())?;
    let record = vec![0x42u8; session::max_payload(config.msg_len)];
    let t = Instant::now();
    for _ in 0..config.n {
        if let Some(env) = tx.step(&record)? {
            let frame = env.encode()?;
            black_box(rx.step(&BatchEnvelope::decode(&frame)?)?);
        }
    }
    Ok(t.elapsed().as_nanos() as f64)
}

/// Times one grid point. `ops` is rounded up to a whole number of epochs.
pub fn measure(scheme: SchemeId, msg_len: usize, batch: u64, opts: &BenchOptions) -> Result<Vec<BenchRecord>> {
    if opts.runs == 0 || opts.ops == 0 {
        return Err(Error::InvalidArgument("runs and ops must be positive".into()));
    }
    let ops = opts.ops.div_ceil(batch) * batch;
    let config = SchemeConfig::new(scheme, ops, batch, msg_len)?;
    let bytes_storage = storage::bytes_per_epoch(&config);
    let msg = vec![0x5au8; msg_len];

    let mut off = Vec::new();
    let mut on = Vec::new();
    let mut tot = Vec::new();
    let mut ver = Vec::new();
    for _ in 0..opts.runs {
        let r = one_run(config, &msg)?;
        let n = ops as f64;
        off.push(r.offline / n);
        on.push(r.online / n);
        tot.push((r.offline + r.online) / n);
        ver.push(r.averdec / n);
    }
    let record = |phase, ns_per_op| BenchRecord { scheme, msg_len, batch, phase, ns_per_op, ops, bytes_storage };
    let mut out = vec![
        record(Phase::Offline, median(off)),
        record(Phase::Online, median(on)),
        record(Phase::Total, median(tot)),
        record(Phase::AverdecOnline, median(ver)),
    ];
    if let Some(depth) = opts.e2e_depth {
        if session::check_session_config(&config).is_ok() {
            let mut e2e = Vec::new();
            for _ in 0..opts.runs {
                e2e.push(e2e_run(config, depth)? / ops as f64);
            }
            out.push(record(Phase::E2e, median(e2e)));
        }
    }
    Ok(out)
}

/// Median nanoseconds per key update for a chain policy over `iters` updates.
pub fn key_update_ns(policy: KeyUpdatePolicy, iters: u64, runs: usize) -> Result<f64> {
    let mut samples = Vec::with_capacity(runs);
    for _ in 0..runs {
        let ns = match policy {
            KeyUpdatePolicy::Fprg => {
                let mut c = FprgState::new([7; 16], iters, 16)?;
                let t = Instant::now();
                for _ in 0..iters {
                    black_box(c.update()?);
                }
                t.elapsed()
            }
            KeyUpdatePolicy::Sha256 => {
                let mut c = HashChain::new(&[7; 16], LABEL_FSE, iters, 16)?;
                let t = Instant::now();
                for _ in 0..iters {
                    black_box(c.update()?);
                }
                t.elapsed()
            }
        };
        samples.push(ns.as_nanos() as f64 / iters as f64);
    }
    Ok(median(samples))
}

/// One line of the storage report: closed form next to a measured epoch.
pub struct StorageRow {
    pub scheme: SchemeId,
    pub msg_len: usize,
    pub batch: u64,
    pub formula: usize,
    pub measured: usize,
}

pub const STORAGE_HEADER: &str = "scheme,msg_len,batch,bytes_per_period,formula_bytes,measured_bytes";

pub fn storage_row(scheme: SchemeId, msg_len: usize, batch: u64) -> Result<StorageRow> {
    let config = SchemeConfig::new(scheme, batch, batch, msg_len)?;
    Ok(StorageRow {
        scheme,
        msg_len,
        batch,
        formula: storage::bytes_per_epoch(&config),
        measured: storage::measure_epoch(&config)?,
    })
}

impl StorageRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.scheme,
            self.msg_len,
            self.batch,
            self.formula / self.batch as usize,
            self.formula,
            self.measured
        )
    }
}
