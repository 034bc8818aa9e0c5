use std::time::{Duration, Instant};

use criterion::{black_box, criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use diamond_core::diamond::{DiamondKeyState, InitialSecret, SchemeConfig, SchemeId};
use diamond_core::famac::aggregate;

const LIFETIME: u64 = 1 << 16;

fn secret() -> InitialSecret {
    InitialSecret { fse_seed: [1; 16], prf_seed: [2; 16], uh_seed: [3; 16] }
}

fn fresh(id: SchemeId, m: usize, b: u64) -> DiamondKeyState {
    DiamondKeyState::from_secret(SchemeConfig::new(id, LIFETIME, b, m).unwrap(), &secret(), 0).unwrap()
}

fn phases(c: &mut Criterion) {
    for m in [16usize, 64, 128] {
        let mut g = c.benchmark_group(format!("authenc/m={m}"));
        g.throughput(Throughput::Bytes(m as u64));
        let msg = vec![0x5au8; m];
        for id in SchemeId::ALL {
            g.bench_function(BenchmarkId::new("offline", id), |bch| {
                let mut st = fresh(id, m, 1);
                bch.iter(|| {
                    if st.offline_period() > LIFETIME {
                        st = fresh(id, m, 1);
                    }
                    st.authenc_offline().unwrap()
                })
            });
            // Offline work happens outside the timed region, one lifetime at a time.
            g.bench_function(BenchmarkId::new("online", id), |bch| {
                bch.iter_custom(|iters| {
                    let mut total = Duration::ZERO;
                    let mut left = iters;
                    while left > 0 {
                        let k = left.min(LIFETIME);
                        let mut st = fresh(id, m, 1);
                        let mut pres: Vec<_> = (0..k).map(|_| st.authenc_offline().unwrap()).collect();
                        let t = Instant::now();
                        for pre in &mut pres {
                            black_box(st.authenc_online(pre, &msg).unwrap());
                        }
                        total += t.elapsed();
                        left -= k;
                    }
                    total
                })
            });
        }
        g.finish();
    }
}

fn batch_verify(c: &mut Criterion) {
    let mut g = c.benchmark_group("averdec");
    for b in [1u64, 16, 256, 1024] {
        g.throughput(Throughput::Elements(b));
        for id in SchemeId::ALL {
            g.bench_function(BenchmarkId::new(id.to_string(), b), |bch| {
                bch.iter_batched(
                    || {
                        let mut tx = fresh(id, 64, b);
                        let mut acc = None;
                        let mut cts = Vec::new();
                        for _ in 0..b {
                            let (ct, tag) = tx.authenc(&[7; 64]).unwrap();
                            acc = Some(aggregate(acc, &tag, tx.config().agg_mode, b).unwrap());
                            cts.push(ct);
                        }
                        let mut rx = fresh(id, 64, b);
                        let pre = rx.averdec_offline(b).unwrap();
                        (rx, pre, cts, acc.unwrap())
                    },
                    |(mut rx, pre, cts, agg)| rx.averdec_online(pre, &cts, &agg).unwrap(),
                    BatchSize::LargeInput,
                )
            });
        }
    }
    g.finish();
}

criterion_group!(benches, phases, batch_verify);
criterion_main!(benches);
