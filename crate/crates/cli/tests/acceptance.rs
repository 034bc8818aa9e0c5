//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::VecDeque;
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use diamond_cli::bench::{self, BenchOptions, Phase};
use diamond_cli::energy::EnergyModel;
use diamond_cli::vectors;
use diamond_core::diamond::storage;
use diamond_core::diamond::{DiamondKeyState, InitialSecret, SchemeConfig, SchemeId};
use diamond_core::famac::{aggregate, AggMode};
use diamond_core::primitives::counters;
use diamond_core::primitives::KeyUpdatePolicy;
use diamond_core::reference::ReferenceSender;
use diamond_core::session::{self, wire_bytes, BatchEnvelope, Receiver, Sender, SessionHello};
use diamond_core::Error;
use rand::rngs::StdRng;
use rand::{Rng, RngCore, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn random_secret(rng: &mut impl RngCore) -> InitialSecret {
    let mut s = InitialSecret { fse_seed: [0; 16], prf_seed: [0; 16], uh_seed: [0; 16] };
    rng.fill_bytes(&mut s.fse_seed);
    rng.fill_bytes(&mut s.prf_seed);
    rng.fill_bytes(&mut s.uh_seed);
    s
}

fn within(limit: Duration, t: Instant, what: &str) -> Result<(), String> {
    let took = t.elapsed();
    ensure!(took < limit, "{what} took {took:?}, limit {limit:?}");
    Ok(())
}

fn c1_reference_vectors() -> Outcome {
    let t = Instant::now();
    let vs = vectors::standard().map_err(|e| e.to_string())?;
    for v in &vs {
        ensure!(v.passes(), "{} computed {} expected {:?}", v.name, v.computed, v.expected);
    }
    within(Duration::from_secs(1), t, "vector suite")?;
    Ok(format!("{} vectors bit-exact in {:?}", vs.len(), t.elapsed()))
}

fn c2_end_to_end() -> Outcome {
    let t = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xc2);
    let mut configs = 0;
    for id in SchemeId::ALL {
        for mode in AggMode::ALL {
            for b in [1u64, 2, 16, 1024] {
                for m in [16usize, 64, 128] {
                    let cfg = SchemeConfig::new(id, 1000.max(b), b, m).unwrap().with_agg_mode(mode);
                    let secret = random_secret(&mut rng);
                    let mut tx = Sender::new(cfg, &secret, rng.gen()).unwrap();
                    let mut rx = Receiver::accept(cfg, &secret, tx.hello()).unwrap();
                    let records: Vec<Vec<u8>> = (0..1000)
                        .map(|_| (0..rng.gen_range(0..=session::max_payload(m))).map(|_| rng.gen()).collect())
                        .collect();
                    let mut out = Vec::new();
                    let mut deliver = |env: BatchEnvelope| -> Result<(), String> {
                        let frame = env.encode().map_err(|e| e.to_string())?;
                        let env = BatchEnvelope::decode(&frame).map_err(|e| e.to_string())?;
                        out.extend(rx.step(&env).map_err(|e| format!("{id} {mode} b={b} m={m}: {e}"))?);
                        Ok(())
                    };
                    for r in &records {
                        if let Some(env) = tx.step(r).unwrap() {
                            deliver(env)?;
                        }
                    }
                    if let Some(env) = tx.flush().unwrap() {
                        deliver(env)?;
                    }
                    ensure!(out == records, "{id} {mode} b={b} m={m}: plaintexts differ");
                    configs += 1;
                }
            }
        }
    }
    within(Duration::from_secs(60), t, "round-trip grid")?;
    Ok(format!("{configs} configurations × 1000 messages, zero rejects, {:?}", t.elapsed()))
}

fn c3_tamper() -> Outcome {
    let t = Instant::now();
    let secret = InitialSecret { fse_seed: [0xa1; 16], prf_seed: [0xb2; 16], uh_seed: [0xc3; 16] };
    let mut flips = 0u64;
    for id in SchemeId::ALL {
        for mode in AggMode::ALL {
            let cfg = SchemeConfig::new(id, 4, 4, 16).unwrap().with_agg_mode(mode);
            let mut tx = Sender::new(cfg, &secret, 99).unwrap();
            let hello: SessionHello = tx.hello().clone();
            let mut env = None;
            for i in 0..4u8 {
                env = tx.step(&[i; 12]).unwrap();
            }
            let env = env.unwrap();
            let mut rx = Receiver::accept(cfg, &secret, &hello).unwrap();
            ensure!(rx.step(&env).is_ok(), "{id} {mode}: untampered batch rejected");

            let ct_bits = env.ciphertexts.len() * 16 * 8;
            let tag_bits = env.agg_tag.len() * 8;
            ensure!(ct_bits == 512, "{id}: expected 512 ciphertext bits, got {ct_bits}");
            for bit in 0..ct_bits + tag_bits {
                let mut bad = env.clone();
                if bit < ct_bits {
                    bad.ciphertexts[bit / 128][(bit % 128) / 8] ^= 1 << (bit % 8);
                } else {
                    let j = bit - ct_bits;
                    bad.agg_tag[j / 8] ^= 1 << (j % 8);
                }
                let mut rx = Receiver::accept(cfg, &secret, &hello).unwrap();
                match rx.step(&bad) {
                    Err(Error::AuthenticationFailed) => {}
                    Ok(p) => return Err(format!("{id} {mode} bit {bit}: released {} plaintexts", p.len())),
                    Err(e) => return Err(format!("{id} {mode} bit {bit}: unexpected {e}")),
                }
                flips += 1;
            }
        }
    }
    within(Duration::from_secs(10), t, "tamper sweep")?;
    Ok(format!("{flips} single-bit flips rejected, none released plaintext, {:?}", t.elapsed()))
}

fn c4_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xc4);
    for id in SchemeId::ALL {
        let cfg = SchemeConfig::new(id, 1000, 16, 64).unwrap();
        let secret = random_secret(&mut rng);
        let ctr: u128 = rng.gen();
        let mut state = DiamondKeyState::from_secret(cfg, &secret, ctr).unwrap();
        let mut oracle = ReferenceSender::new(cfg, &secret, ctr);
        let mut queue = VecDeque::new();
        for i in 0..1000 {
            while queue.len() < 8 && state.offline_period() <= cfg.n {
                queue.push_back(state.authenc_offline().unwrap());
            }
            let msg: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
            let mut pre = queue.pop_front().unwrap();
            let (ct, tag) = state.authenc_online(&mut pre, &msg).unwrap();
            let (rct, rtag) = oracle.seal(&msg);
            ensure!(ct == rct && tag.value == rtag, "{id}: message {i} differs from the reference");
        }
    }
    Ok("pipelined output bit-identical to the single-phase reference, 1000 messages × 5 schemes".into())
}

fn c5_online_cost() -> Outcome {
    for id in SchemeId::ALL.into_iter().filter(|id| !id.profile().integrated_gcm) {
        for mode in AggMode::ALL {
            let cfg = SchemeConfig::new(id, 64, 16, 100).unwrap().with_agg_mode(mode);
            let secret = InitialSecret { fse_seed: [1; 16], prf_seed: [2; 16], uh_seed: [3; 16] };
            let mut tx = DiamondKeyState::from_secret(cfg, &secret, 5).unwrap();
            let mut rx = DiamondKeyState::from_secret(cfg, &secret, 5).unwrap();
            for _ in 0..4 {
                let mut acc = None;
                let mut cts = Vec::new();
                for i in 0..16u8 {
                    let mut pre = tx.authenc_offline().unwrap();
                    let ((ct, tag), calls) = counters::measure(|| tx.authenc_online(&mut pre, &[i; 100]).unwrap());
                    ensure!(calls.prf == 0 && calls.uh == 1, "{id} {mode}: authenc online made {calls:?}");
                    acc = Some(aggregate(acc, &tag, mode, 16).unwrap());
                    cts.push(ct);
                }
                let pre = rx.averdec_offline(16).unwrap();
                let agg = acc.unwrap();
                let (plain, calls) = counters::measure(|| rx.averdec_online(pre, &cts, &agg));
                ensure!(plain.is_ok(), "{id} {mode}: batch rejected");
                ensure!(calls.prf == 0 && calls.uh == 16, "{id} {mode}: averdec online made {calls:?}");
            }
        }
    }
    Ok("online PRF calls = 0, uh_eval = 1 per message (faae1 exempt: GCM keystream is message-time work)".into())
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

fn nonzero_chunks(bufs: &[Vec<u8>]) -> Vec<Vec<u8>> {
    bufs.iter()
        .flat_map(|b| b.chunks(16).filter(|c| c.len() == 16 && c.iter().any(|&x| x != 0)).map(<[u8]>::to_vec))
        .collect()
}

fn c6_forward_security() -> Outcome {
    for id in SchemeId::ALL {
        let cfg = SchemeConfig::new(id, 128, 4, 64).unwrap();
        let secret = InitialSecret { fse_seed: [0x61; 16], prf_seed: [0x62; 16], uh_seed: [0x63; 16] };

        let mut st = DiamondKeyState::from_secret(cfg, &secret, 17).unwrap();
        let mut seen: Vec<Vec<u8>> = nonzero_chunks(&[secret.fse_seed.to_vec(), secret.prf_seed.to_vec(), secret.uh_seed.to_vec()]);
        for p in 1..=100 {
            seen.extend(nonzero_chunks(&st.retained_secrets()));
            let mut pre = st.authenc_offline().unwrap();
            let mut buf = Vec::new();
            pre.encode_into(&mut buf);
            seen.extend(nonzero_chunks(&[buf]));
            st.authenc_online(&mut pre, &[0; 64]).unwrap();
            let now = st.retained_secrets();
            for old in &seen {
                ensure!(!now.iter().any(|r| contains(r, old)), "{id}: sender retains a secret from period ≤ {p}");
            }
        }

        let mut tx = DiamondKeyState::from_secret(cfg, &secret, 17).unwrap();
        let mut rx = DiamondKeyState::from_secret(cfg, &secret, 17).unwrap();
        let mut seen: Vec<Vec<u8>> = Vec::new();
        for epoch in 0..25 {
            let mut acc = None;
            let mut cts = Vec::new();
            for _ in 0..4 {
                let (c, t) = tx.authenc(&[epoch as u8; 64]).unwrap();
                acc = Some(aggregate(acc, &t, cfg.agg_mode, 4).unwrap());
                cts.push(c);
            }
            seen.extend(nonzero_chunks(&rx.retained_secrets()));
            rx.averdec(&cts, &acc.unwrap()).unwrap();
            let now = rx.retained_secrets();
            for old in &seen {
                ensure!(!now.iter().any(|r| contains(r, old)), "{id}: receiver retains a secret from epoch {epoch}");
            }
        }
    }
    Ok("no prior key, seed, keystream block or mask survives, 100 periods × 5 schemes".into())
}

fn c7_storage() -> Outcome {
    let mut notes = Vec::new();
    for id in [SchemeId::Diamond1, SchemeId::Graphene1] {
        for (m, reference) in [(16usize, 60 * 1024), (128, 175 * 1024)] {
            let cfg = SchemeConfig::new(id, 1024, 1024, m).unwrap();
            let formula = storage::bytes_per_epoch(&cfg);
            let measured = storage::measure_epoch(&cfg).map_err(|e| e.to_string())?;
            ensure!(formula == measured, "{id} m={m}: formula {formula} != measured {measured}");
            let ratio = measured as f64 / reference as f64;
            ensure!((0.5..=1.5).contains(&ratio), "{id} m={m}: {measured} B is {ratio:.2}× the reference {reference} B");
            notes.push(format!("{id} m={m}: {measured} B ({ratio:.2}×)"));
        }
    }
    Ok(notes.join("; "))
}

fn c8_key_update_trend() -> Outcome {
    let fprg = bench::key_update_ns(KeyUpdatePolicy::Fprg, 200_000, 7).map_err(|e| e.to_string())?;
    let sha = bench::key_update_ns(KeyUpdatePolicy::Sha256, 200_000, 7).map_err(|e| e.to_string())?;
    let ratio = sha / fprg;
    ensure!(ratio >= 1.1, "FPRG update {fprg:.1} ns vs SHA-256 update {sha:.1} ns: ratio {ratio:.2} < 1.1");

    let opts = BenchOptions { runs: 5, ops: 1000, e2e_depth: None };
    let mut rows = 0;
    let mut offline_at_64 = [0.0f64; 2];
    for id in [SchemeId::Diamond1, SchemeId::Diamond2, SchemeId::Graphene1, SchemeId::Graphene2] {
        for m in bench::DEFAULT_MSG_LENS {
            for b in bench::default_batches() {
                let recs = bench::measure(id, m, b, &opts).map_err(|e| e.to_string())?;
                let get = |p: Phase| recs.iter().find(|r| r.phase == p).unwrap().ns_per_op;
                let (on, tot) = (get(Phase::Online), get(Phase::Total));
                ensure!(on < tot, "{id} m={m} b={b}: ONLINE {on:.1} ns ≥ TOTAL {tot:.1} ns");
                if m == 64 && b == 1024 {
                    match id {
                        SchemeId::Diamond1 => offline_at_64[0] = get(Phase::Offline),
                        SchemeId::Graphene1 => offline_at_64[1] = get(Phase::Offline),
                        _ => {}
                    }
                }
                rows += 1;
            }
        }
    }
    let [d1, g1] = offline_at_64;
    ensure!(d1 < g1, "diamond1 OFFLINE {d1:.1} ns ≥ graphene1 OFFLINE {g1:.1} ns at m=64");
    Ok(format!(
        "update {fprg:.1} ns (FPRG) vs {sha:.1} ns (SHA-256), {ratio:.2}×; ONLINE < TOTAL on {rows} rows; \
         OFFLINE m=64 diamond1 {d1:.0} ns vs graphene1 {g1:.0} ns"
    ))
}

fn c9_bandwidth() -> Outcome {
    let (n, b, m) = (4096u64, 64u64, 64usize);
    let expected = n.div_ceil(b) * (20 + 16) + n * m as u64;
    let secret = InitialSecret { fse_seed: [9; 16], prf_seed: [8; 16], uh_seed: [7; 16] };
    for mode in [AggMode::Xor, AggMode::AddQ] {
        ensure!(wire_bytes(n, b, m, mode) == expected, "{mode}: formula {} != {expected}", wire_bytes(n, b, m, mode));
        let cfg = SchemeConfig::new(SchemeId::Diamond1, n, b, m).unwrap().with_agg_mode(mode);
        let mut tx = Sender::new(cfg, &secret, 0).unwrap();
        let mut wire = 0u64;
        for i in 0..n {
            if let Some(env) = tx.step(&i.to_be_bytes()).unwrap() {
                wire += env.encode().unwrap().len() as u64;
            }
        }
        ensure!(wire == expected, "{mode}: measured {wire} != {expected}");
    }
    Ok(format!("{expected} bytes = ⌈n/b⌉·36 + n·m, measured on the wire (xor, addq)"))
}

fn energy_line(out: &str, phase: &str) -> Option<f64> {
    out.lines().find(|l| l.starts_with(&format!("{phase},")))?.rsplit(',').next()?.parse().ok()
}

/// Integer oracle in units of 10⁻⁵ μJ: 4.07 nJ = 407 units, 0.168 μJ = 16800 units.
fn energy_oracle(cycles: u64, wire_bytes: u64) -> f64 {
    (cycles as u128 * 407 + wire_bytes as u128 * 8 * 16800) as f64 / 1e5
}

fn six_sig_equal(a: f64, b: f64) -> bool {
    if b == 0.0 {
        return a == 0.0;
    }
    ((a - b) / b).abs() < 5e-7
}

fn c10_energy() -> Outcome {
    let cases = [(0u64, 1u64), (1_000_000, 0), (123_456_789, 4321), (16_000_000, 264_448)];
    let model = EnergyModel::new(16e6);
    for (cycles, bytes) in cases {
        let expect = energy_oracle(cycles, bytes);
        let lib = model.total_uj(cycles as f64, bytes);
        ensure!(six_sig_equal(lib, expect), "library: cycles={cycles} bytes={bytes} gave {lib}, expected {expect}");

        let out = Command::new(env!("CARGO_BIN_EXE_diamond"))
            .args(["energy", "--cycles", &cycles.to_string(), "--wire-bytes", &bytes.to_string(), "--cpu-hz", "16e6"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "energy exited with {}", out.status);
        let stdout = String::from_utf8_lossy(&out.stdout);
        let total = energy_line(&stdout, "total").ok_or_else(|| format!("no total row in {stdout:?}"))?;
        ensure!(six_sig_equal(total, expect), "binary: cycles={cycles} bytes={bytes} printed {total}, expected {expect}");
    }
    ensure!(energy_oracle(0, 1) == 1.344, "8 bits on the air should cost 1.344 μJ");
    ensure!(energy_oracle(1_000_000, 0) == 4070.0, "10⁶ cycles should cost 4.07 mJ");
    Ok("cmd_energy matches the integer oracle to 6 significant figures on 4 fixed inputs".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 reference vectors", c1_reference_vectors),
        ("2 end-to-end soundness", c2_end_to_end),
        ("3 tamper rejection", c3_tamper),
        ("4 offline/online oracle", c4_oracle),
        ("5 online-phase cost", c5_online_cost),
        ("6 forward-security mechanics", c6_forward_security),
        ("7 storage model", c7_storage),
        ("8 key-update trend", c8_key_update_trend),
        ("9 bandwidth formula", c9_bandwidth),
        ("10 energy arithmetic", c10_energy),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| {
                let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
                Err(format!("panicked: {}", msg.unwrap_or_default()))
            });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
