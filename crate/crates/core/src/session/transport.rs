//! Frame transports: in-process channels and byte streams (TCP, files).
//!
//! Frames are self-delimiting: a hello has a fixed length and an envelope
//! header declares its body length, so stream transports need no extra
//! framing.

use std::io::{self, Read, Write};
use std::sync::mpsc;

use super::wire::{EnvelopeHeader, ENVELOPE_HEADER_LEN, ENVELOPE_MAGIC, HELLO_LEN, HELLO_MAGIC};
use crate::{Error, Result};

/// Upper bound on a single frame read from a stream.
pub const MAX_FRAME_LEN: usize = 1 << 28;

pub trait FrameSink {
    fn send_frame(&mut self, frame: &[u8]) -> Result<()>;

    fn flush(&mut self) -> Result<()> {
        Ok(())
    }
}

pub trait FrameSource {
    /// Next frame, or `None` once the peer is done.
    fn recv_frame(&mut self) -> Result<Option<Vec<u8>>>;
}

pub struct ChannelSink(mpsc::Sender<Vec<u8>>);
pub struct ChannelSource(mpsc::Receiver<Vec<u8>>);

/// Unbounded in-process frame queue.
pub fn channel() -> (ChannelSink, ChannelSource) {
    let (tx, rx) = mpsc::channel();
    (ChannelSink(tx), ChannelSource(rx))
}

impl FrameSink for ChannelSink {
    fn send_frame(&mut self, frame: &[u8]) -> Result<()> {
        self.0
            .send(frame.to_vec())
            .map_err(|_| Error::Io(io::Error::new(io::ErrorKind::BrokenPipe, "receiver dropped")))
    }
}

impl FrameSource for ChannelSource {
    fn recv_frame(&mut self) -> Result<Option<Vec<u8>>> {
        Ok(self.0.recv().ok())
    }
}

pub struct StreamSink<W: Write>(pub W);

impl<W: Write> FrameSink for StreamSink<W> {
    fn send_frame(&mut self, frame: &[u8]) -> Result<()> {
        self.0.write_all(frame)?;
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.0.flush()?;
        Ok(())
    }
}

pub struct StreamSource<R: Read> {
    inner: R,
    offset: usize,
}

impl<R: Read> StreamSource<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    /// Fills `buf`; returns the number of bytes read before EOF.
    fn fill(&mut self, buf: &mut [u8]) -> Result<usize> {
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(k) => got += k,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += got;
        Ok(got)
    }

    fn fill_exact(&mut self, buf: &mut [u8]) -> Result<()> {
        let got = self.fill(buf)?;
        if got < buf.len() {
            return Err(Error::Malformed {
                offset: self.offset,
                reason: format!("stream ended {} bytes into a frame part of {}", got, buf.len()),
            });
        }
        Ok(())
    }
}

impl<R: Read> FrameSource for StreamSource<R> {
    fn recv_frame(&mut self) -> Result<Option<Vec<u8>>> {
        let start = self.offset;
        let mut frame = vec![0u8; 4];
        match self.fill(&mut frame)? {
            0 => return Ok(None),
            4 => {}
            _ => {
                return Err(Error::Malformed { offset: self.offset, reason: "truncated frame magic".into() })
            }
        }
        if frame[..] == HELLO_MAGIC {
            frame.resize(HELLO_LEN, 0);
            self.fill_exact(&mut frame[4..])?;
        } else if frame[..] == ENVELOPE_MAGIC {
            frame.resize(ENVELOPE_HEADER_LEN, 0);
            self.fill_exact(&mut frame[4..])?;
            let header = EnvelopeHeader::decode(&frame).map_err(|e| match e {
                Error::Malformed { offset, reason } => Error::Malformed { offset: start + offset, reason },
                other => other,
            })?;
            let body = header.body_len();
            if body > MAX_FRAME_LEN {
                return Err(Error::Malformed {
                    offset: start + 15,
                    reason: format!("declared frame of {body} bytes exceeds limit"),
                });
            }
            frame.resize(ENVELOPE_HEADER_LEN + body, 0);
            self.fill_exact(&mut frame[ENVELOPE_HEADER_LEN..])?;
        } else {
            return Err(Error::Malformed { offset: start, reason: "unknown frame magic".into() });
        }
        Ok(Some(frame))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diamond::SchemeId;
    use crate::famac::AggMode;
    use crate::session::wire::{BatchEnvelope, SessionHello};

    #[test]
    fn stream_splits_concatenated_frames() {
        let hello = SessionHello {
            scheme: SchemeId::Diamond1,
            agg_mode: AggMode::Hash,
            n: 8,
            b: 4,
            msg_len: 3,
            ctr: 5,
            tag: [1; 16],
        };
        let env = BatchEnvelope {
            scheme: SchemeId::Diamond1,
            agg_mode: AggMode::Hash,
            epoch_start: 1,
            msg_len: 3,
            ciphertexts: vec![vec![1, 2, 3], vec![4, 5, 6]],
            agg_tag: vec![7; 32],
        };
        let mut sink = StreamSink(Vec::new());
        sink.send_frame(&hello.encode()).unwrap();
        sink.send_frame(&env.encode().unwrap()).unwrap();
        sink.send_frame(&env.encode().unwrap()).unwrap();
        let bytes = sink.0;

        let mut src = StreamSource::new(&bytes[..]);
        assert_eq!(SessionHello::decode(&src.recv_frame().unwrap().unwrap()).unwrap(), hello);
        for _ in 0..2 {
            assert_eq!(BatchEnvelope::decode(&src.recv_frame().unwrap().unwrap()).unwrap(), env);
        }
        assert!(src.recv_frame().unwrap().is_none());

        let mut cut = StreamSource::new(&bytes[..bytes.len() - 1]);
        cut.recv_frame().unwrap();
        cut.recv_frame().unwrap();
        assert!(matches!(cut.recv_frame(), Err(Error::Malformed { .. })));

        let mut junk = StreamSource::new(&b"XXXXjunk"[..]);
        assert!(matches!(junk.recv_frame(), Err(Error::Malformed { offset: 0, .. })));
    }

    #[test]
    fn channel_delivers_in_order() {
        let (mut tx, mut rx) = channel();
        tx.send_frame(b"one").unwrap();
        tx.send_frame(b"two").unwrap();
        drop(tx);
        assert_eq!(rx.recv_frame().unwrap().unwrap(), b"one");
        assert_eq!(rx.recv_frame().unwrap().unwrap(), b"two");
        assert!(rx.recv_frame().unwrap().is_none());
    }
}
