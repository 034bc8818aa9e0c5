use std::io::Cursor;
use std::net::{TcpListener, TcpStream};
use std::thread;

use diamond_core::diamond::{InitialSecret, SchemeConfig, SchemeId};
use diamond_core::famac::AggMode;
use diamond_core::session::transport::{channel, FrameSink, FrameSource, StreamSink, StreamSource};
use diamond_core::session::{wire_bytes, BatchEnvelope, Receiver, Sender, SessionHello};
use diamond_core::Error;
use rand::{Rng, SeedableRng};

fn secret() -> InitialSecret {
    InitialSecret { fse_seed: [0x10; 16], prf_seed: [0x20; 16], uh_seed: [0x30; 16] }
}

#[test]
fn soak_10k_messages_every_scheme() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(42);
    for id in SchemeId::ALL {
        let cfg = SchemeConfig::new(id, 10_000, 32, 64).unwrap();
        let mut tx = Sender::new(cfg, &secret(), rng.gen()).unwrap().with_depth(8);
        let (mut sink, mut source) = channel();
        sink.send_frame(&tx.hello().encode()).unwrap();

        let records: Vec<Vec<u8>> = (0..10_000)
            .map(|_| (0..rng.gen_range(0..=60)).map(|_| rng.gen()).collect())
            .collect();
        let producer = {
            let records = records.clone();
            thread::spawn(move || {
                for r in &records {
                    if let Some(env) = tx.step(r).unwrap() {
                        sink.send_frame(&env.encode().unwrap()).unwrap();
                    }
                }
                if let Some(env) = tx.flush().unwrap() {
                    sink.send_frame(&env.encode().unwrap()).unwrap();
                }
            })
        };

        let hello = SessionHello::decode(&source.recv_frame().unwrap().unwrap()).unwrap();
        let mut rx = Receiver::accept(cfg, &secret(), &hello).unwrap();
        let mut out = Vec::new();
        let mut wire = 0u64;
        while let Some(frame) = source.recv_frame().unwrap() {
            wire += frame.len() as u64;
            out.extend(rx.step(&BatchEnvelope::decode(&frame).unwrap()).unwrap());
        }
        producer.join().unwrap();
        assert_eq!(out, records, "{id}");
        assert_eq!(wire, wire_bytes(10_000, 32, 64, AggMode::Xor));
    }
}

#[test]
fn tcp_transport_roundtrip() {
    let cfg = SchemeConfig::new(SchemeId::Diamond2, 256, 16, 32).unwrap().with_agg_mode(AggMode::Hash);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut src = StreamSource::new(stream);
        let hello = SessionHello::decode(&src.recv_frame().unwrap().unwrap()).unwrap();
        let mut rx = Receiver::accept(cfg, &secret(), &hello).unwrap();
        let mut out = Vec::new();
        while let Some(frame) = src.recv_frame().unwrap() {
            out.extend(rx.step(&BatchEnvelope::decode(&frame).unwrap()).unwrap());
        }
        out
    });

    let mut tx = Sender::new(cfg, &secret(), 7).unwrap();
    let mut sink = StreamSink(TcpStream::connect(addr).unwrap());
    sink.send_frame(&tx.hello().encode()).unwrap();
    let records: Vec<Vec<u8>> = (0..200u32).map(|i| format!("reading {i}").into_bytes()).collect();
    for r in &records {
        if let Some(env) = tx.step(r).unwrap() {
            sink.send_frame(&env.encode().unwrap()).unwrap();
        }
    }
    if let Some(env) = tx.flush().unwrap() {
        sink.send_frame(&env.encode().unwrap()).unwrap();
    }
    drop(sink);
    assert_eq!(server.join().unwrap(), records);
}

#[test]
fn mixed_valid_and_invalid_envelopes_never_stall() {
    let cfg = SchemeConfig::new(SchemeId::Graphene2, 64, 4, 16).unwrap();
    let mut tx = Sender::new(cfg, &secret(), 3).unwrap();
    let mut rx = Receiver::accept(cfg, &secret(), tx.hello()).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(9);
    let mut delivered = 0;
    for epoch in 0..16u64 {
        let mut env = None;
        for k in 0..4u8 {
            env = tx.step(&[k; 8]).unwrap();
        }
        let mut env = env.unwrap();
        let tamper = rng.gen_bool(0.5);
        if tamper {
            let j = rng.gen_range(0..env.ciphertexts.len());
            env.ciphertexts[j][rng.gen_range(0..16)] ^= 1 << rng.gen_range(0..8);
        }
        match rx.step(&env) {
            Ok(p) => {
                assert!(!tamper);
                delivered += p.len();
            }
            Err(Error::AuthenticationFailed) => assert!(tamper),
            Err(e) => panic!("{e}"),
        }
        assert_eq!(rx.expected_epoch(), 4 * (epoch + 1) + 1);
    }
    assert!(delivered > 0);
}

#[test]
fn file_transport_replay() {
    let cfg = SchemeConfig::new(SchemeId::Faae1, 40, 8, 20).unwrap();
    let mut tx = Sender::new(cfg, &secret(), 0).unwrap();
    let mut sink = StreamSink(Vec::new());
    sink.send_frame(&tx.hello().encode()).unwrap();
    for i in 0..20u8 {
        if let Some(env) = tx.step(&[i; 3]).unwrap() {
            sink.send_frame(&env.encode().unwrap()).unwrap();
        }
    }
    sink.send_frame(&tx.flush().unwrap().unwrap().encode().unwrap()).unwrap();

    let mut src = StreamSource::new(Cursor::new(sink.0));
    let hello = SessionHello::decode(&src.recv_frame().unwrap().unwrap()).unwrap();
    let mut rx = Receiver::accept(cfg, &secret(), &hello).unwrap();
    let first = BatchEnvelope::decode(&src.recv_frame().unwrap().unwrap()).unwrap();
    assert_eq!(rx.step(&first).unwrap().len(), 8);
    assert!(matches!(rx.step(&first), Err(Error::Desync { expected: 9, got: 1 })));
    let mut n = 8;
    while let Some(frame) = src.recv_frame().unwrap() {
        n += rx.step(&BatchEnvelope::decode(&frame).unwrap()).unwrap().len();
    }
    assert_eq!(n, 20);
}
