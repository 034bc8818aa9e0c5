use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use diamond_core::primitives::chain::LABEL_FSE;
use diamond_core::primitives::{hash_eval, prf_eval, uh_eval, FprgState, HashChain, PrfSpec, UhSpec};

fn prf(c: &mut Criterion) {
    let mut g = c.benchmark_group("prf");
    g.bench_function("aes128", |b| b.iter(|| prf_eval(PrfSpec::AES128, black_box(&[1; 16]), &[2; 16]).unwrap()));
    g.bench_function("chacha20", |b| b.iter(|| prf_eval(PrfSpec::CHACHA20, black_box(&[1; 32]), &[2; 16]).unwrap()));
    g.finish();
}

fn universal_hash(c: &mut Criterion) {
    let mut g = c.benchmark_group("uh");
    for len in [16usize, 64, 128, 1024] {
        let msg = vec![0xabu8; len];
        g.throughput(Throughput::Bytes(len as u64));
        g.bench_with_input(BenchmarkId::new("ghash", len), &msg, |b, m| b.iter(|| uh_eval(UhSpec::GHASH, &[3; 16], m)));
        g.bench_with_input(BenchmarkId::new("poly1305", len), &msg, |b, m| {
            b.iter(|| uh_eval(UhSpec::POLY1305, &[3; 16], m))
        });
    }
    g.finish();
}

/// One key update per iteration; the chain is rebuilt when it runs out.
fn key_update(c: &mut Criterion) {
    const LIFETIME: u64 = 1 << 20;
    let mut g = c.benchmark_group("key_update");
    g.bench_function("fprg", |b| {
        let mut chain = FprgState::new([9; 16], LIFETIME, 16).unwrap();
        b.iter(|| {
            if chain.is_exhausted() {
                chain = FprgState::new([9; 16], LIFETIME, 16).unwrap();
            }
            black_box(chain.update().unwrap());
        })
    });
    g.bench_function("sha256_chain", |b| {
        let mut chain = HashChain::new(&[9; 16], LABEL_FSE, LIFETIME, 16).unwrap();
        b.iter(|| {
            if chain.is_exhausted() {
                chain = HashChain::new(&[9; 16], LABEL_FSE, LIFETIME, 16).unwrap();
            }
            black_box(chain.update().unwrap());
        })
    });
    g.bench_function("sha256", |b| b.iter(|| hash_eval(black_box(&[9; 17]))));
    g.finish();
}

criterion_group!(benches, prf, universal_hash, key_update);
criterion_main!(benches);
