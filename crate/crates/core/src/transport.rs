// SPDX-License-Identifier: Apache-2.0

//! Encrypted one-way byte stream between two endpoints.
//!
//! Wire format: a 5-octet hello (`RC4S` plus a version octet) sent by the
//! sender and echoed by the receiver, then frames of a 4-octet big-endian
//! length followed by that many ciphertext octets. A zero-length frame ends
//! the stream. The keystream comes from either the reference cipher or the
//! hardware model; XOR happens here.

use std::io::{self, ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

use thiserror::Error;

use crate::hw::{HwError, PrgaUnit};
use crate::rc4::{Rc4Key, Rc4State};

pub const MAGIC: [u8; 4] = *b"RC4S";
pub const VERSION: u8 = 0x01;
pub const HELLO: [u8; 5] = [MAGIC[0], MAGIC[1], MAGIC[2], MAGIC[3], VERSION];
pub const MAX_FRAME_LEN: usize = 65_536;
pub const FRAME_HEADER_LEN: usize = 4;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("protocol error: frame length {0} exceeds {MAX_FRAME_LEN}")]
    FrameTooLarge(u32),
    #[error("unsupported protocol version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("connection closed mid-stream after {recovered} plaintext octets")]
    Truncated { recovered: u64 },
    #[error("write failed after {sent} payload octets: {source}")]
    WriteFailed {
        sent: u64,
        #[source]
        source: io::Error,
    },
    #[error("transport error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Hardware(#[from] HwError),
}

pub type Result<T, E = TransportError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Sender,
    Receiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Reference,
    HardwareModel,
}

/// Which side opens the connection. Independent of [`Role`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Listen(String),
    Connect(String),
}

impl Endpoint {
    /// Opens the byte stream: accepts one peer or connects to one.
    pub fn open(&self) -> io::Result<TcpStream> {
        match self {
            Endpoint::Listen(addr) => TcpListener::bind(addr)?.accept().map(|(s, _)| s),
            Endpoint::Connect(addr) => TcpStream::connect(addr),
        }
    }

    pub fn address(&self) -> &str {
        match self {
            Endpoint::Listen(a) | Endpoint::Connect(a) => a,
        }
    }

    /// Resolves the address, so bad host names fail before any I/O.
    pub fn resolve(&self) -> io::Result<std::net::SocketAddr> {
        self.address()
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| io::Error::new(ErrorKind::InvalidInput, "address resolves to nothing"))
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub role: Role,
    pub endpoint: Endpoint,
    pub key: Rc4Key,
    pub engine: Engine,
}

/// The keystream generator behind a session.
#[derive(Debug)]
pub enum CipherState {
    Reference(Box<Rc4State>),
    Hardware(Box<PrgaUnit>),
}

impl CipherState {
    pub fn new(key: &Rc4Key, engine: Engine) -> Result<Self> {
        Ok(match engine {
            Engine::Reference => CipherState::Reference(Box::new(Rc4State::new(key))),
            Engine::HardwareModel => CipherState::Hardware(Box::new(PrgaUnit::for_key(key)?)),
        })
    }

    /// XORs the next `data.len()` keystream octets into `data`.
    pub fn apply(&mut self, data: &mut [u8]) -> Result<()> {
        match self {
            CipherState::Reference(s) => s.apply_keystream(data),
            CipherState::Hardware(p) => {
                for b in data {
                    *b ^= p.next_byte()?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct Session {
    pub config: SessionConfig,
    cipher: CipherState,
    bytes_transferred: u64,
}

impl Session {
    /// A live session without any wire exchange (the KSA runs here).
    pub fn new(config: SessionConfig) -> Result<Self> {
        let cipher = CipherState::new(&config.key, config.engine)?;
        Ok(Self { config, cipher, bytes_transferred: 0 })
    }

    pub fn bytes_transferred(&self) -> u64 {
        self.bytes_transferred
    }

    fn expect_role(&self, role: Role) -> Result<()> {
        if self.config.role != role {
            return Err(TransportError::Protocol(format!(
                "{:?} session cannot act as {:?}",
                self.config.role, role
            )));
        }
        Ok(())
    }
}

/// Checks a received hello.
pub fn check_hello(hello: &[u8; 5]) -> Result<()> {
    if hello[..4] != MAGIC {
        return Err(TransportError::Protocol(format!("bad magic {:02x?}", &hello[..4])));
    }
    if hello[4] != VERSION {
        return Err(TransportError::UnsupportedVersion(hello[4]));
    }
    Ok(())
}

fn read_hello(stream: &mut impl Read) -> Result<[u8; 5]> {
    let mut hello = [0u8; 5];
    stream.read_exact(&mut hello).map_err(|e| {
        if e.kind() == ErrorKind::UnexpectedEof {
            TransportError::Protocol("connection closed during handshake".into())
        } else {
            TransportError::Io(e)
        }
    })?;
    Ok(hello)
}

/// Exchanges hellos, then runs the KSA once.
pub fn handshake<S: Read + Write>(stream: &mut S, config: SessionConfig) -> Result<Session> {
    match config.role {
        Role::Sender => {
            stream.write_all(&HELLO)?;
            stream.flush()?;
            check_hello(&read_hello(stream)?)?;
        }
        Role::Receiver => {
            let hello = read_hello(stream)?;
            check_hello(&hello)?;
            stream.write_all(&hello)?;
            stream.flush()?;
        }
    }
    Session::new(config)
}

pub fn encode_frame_header(len: usize) -> Result<[u8; FRAME_HEADER_LEN]> {
    if len > MAX_FRAME_LEN {
        return Err(TransportError::FrameTooLarge(u32::try_from(len).unwrap_or(u32::MAX)));
    }
    Ok((len as u32).to_be_bytes())
}

pub fn decode_frame_header(header: [u8; FRAME_HEADER_LEN]) -> Result<usize> {
    let len = u32::from_be_bytes(header);
    if len as usize > MAX_FRAME_LEN {
        return Err(TransportError::FrameTooLarge(len));
    }
    Ok(len as usize)
}

/// Header plus payload.
pub fn encode_frame(payload: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + payload.len());
    out.extend_from_slice(&encode_frame_header(payload.len())?);
    out.extend_from_slice(payload);
    Ok(out)
}

/// Splits a complete wire image into frame payloads, up to and excluding the
/// end marker. Returns the payloads and the octets consumed.
pub fn decode_frames(wire: &[u8]) -> Result<(Vec<&[u8]>, usize)> {
    let mut frames = Vec::new();
    let mut pos = 0;
    let mut recovered = 0u64;
    loop {
        let Some(header) = wire.get(pos..pos + FRAME_HEADER_LEN) else {
            return Err(TransportError::Truncated { recovered });
        };
        let len = decode_frame_header(header.try_into().expect("4 octets"))?;
        pos += FRAME_HEADER_LEN;
        if len == 0 {
            return Ok((frames, pos));
        }
        let Some(payload) = wire.get(pos..pos + len) else {
            recovered += (wire.len() - pos) as u64;
            return Err(TransportError::Truncated { recovered });
        };
        frames.push(payload);
        recovered += len as u64;
        pos += len;
    }
}

/// Fills `buf` from `source` until full or end of input.
fn read_chunk(source: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Encrypts `source` into full-size frames and ends with the marker.
pub fn send_stream(
    session: &mut Session,
    stream: &mut impl Write,
    source: &mut impl Read,
) -> Result<u64> {
    session.expect_role(Role::Sender)?;
    let mut buf = vec![0u8; MAX_FRAME_LEN];
    let mut sent = 0u64;
    loop {
        let len = read_chunk(source, &mut buf)?;
        let header = encode_frame_header(len)?;
        if len > 0 {
            session.cipher.apply(&mut buf[..len])?;
        }
        let write = stream.write_all(&header).and_then(|_| stream.write_all(&buf[..len]));
        write.map_err(|source| TransportError::WriteFailed { sent, source })?;
        if len == 0 {
            break;
        }
        sent += len as u64;
        session.bytes_transferred += len as u64;
    }
    stream.flush().map_err(|source| TransportError::WriteFailed { sent, source })?;
    Ok(sent)
}

/// Reads exactly `buf.len()` octets; returns how many arrived before EOF.
fn read_full(stream: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    read_chunk(stream, buf)
}

/// Decrypts frames into `sink` until the end marker.
pub fn recv_stream(
    session: &mut Session,
    stream: &mut impl Read,
    sink: &mut impl Write,
) -> Result<u64> {
    session.expect_role(Role::Receiver)?;
    let mut buf = vec![0u8; MAX_FRAME_LEN];
    let mut recovered = 0u64;
    loop {
        let mut header = [0u8; FRAME_HEADER_LEN];
        if read_full(stream, &mut header)? < FRAME_HEADER_LEN {
            return Err(TransportError::Truncated { recovered });
        }
        let len = decode_frame_header(header)?;
        if len == 0 {
            break;
        }
        let got = read_full(stream, &mut buf[..len])?;
        session.cipher.apply(&mut buf[..got])?;
        sink.write_all(&buf[..got])?;
        recovered += got as u64;
        session.bytes_transferred += got as u64;
        if got < len {
            sink.flush()?;
            return Err(TransportError::Truncated { recovered });
        }
    }
    sink.flush()?;
    Ok(recovered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    /// In-memory duplex: reads from `input`, records writes.
    struct Pipe {
        input: Cursor<Vec<u8>>,
        output: Vec<u8>,
    }

    impl Pipe {
        fn new(input: &[u8]) -> Self {
            Self { input: Cursor::new(input.to_vec()), output: Vec::new() }
        }
    }

    impl Read for Pipe {
        fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
            self.input.read(buf)
        }
    }

    impl Write for Pipe {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            self.output.write(buf)
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    fn config(role: Role, key: &str, engine: Engine) -> SessionConfig {
        SessionConfig {
            role,
            endpoint: Endpoint::Connect("127.0.0.1:0".into()),
            key: Rc4Key::new(key.as_bytes()).unwrap(),
            engine,
        }
    }

    #[test]
    fn hello_bytes() {
        assert_eq!(HELLO, [0x52, 0x43, 0x34, 0x53, 0x01]);
        let mut pipe = Pipe::new(&HELLO);
        let s = handshake(&mut pipe, config(Role::Sender, "Key", Engine::Reference)).unwrap();
        assert_eq!(pipe.output, HELLO);
        assert_eq!(s.bytes_transferred(), 0);

        let mut pipe = Pipe::new(&HELLO);
        handshake(&mut pipe, config(Role::Receiver, "Key", Engine::Reference)).unwrap();
        assert_eq!(pipe.output, HELLO);
    }

    #[test]
    fn hello_rejections() {
        let mut pipe = Pipe::new(&[0x00, 0x43, 0x34, 0x53, 0x01]);
        let r = handshake(&mut pipe, config(Role::Receiver, "Key", Engine::Reference));
        assert!(matches!(r, Err(TransportError::Protocol(_))));
        assert!(pipe.output.is_empty());

        let mut pipe = Pipe::new(&[0x52, 0x43, 0x34, 0x53, 0x02]);
        let r = handshake(&mut pipe, config(Role::Receiver, "Key", Engine::Reference));
        assert!(matches!(r, Err(TransportError::UnsupportedVersion(2))));

        let mut pipe = Pipe::new(&[0x52, 0x43]);
        let r = handshake(&mut pipe, config(Role::Sender, "Key", Engine::Reference));
        assert!(matches!(r, Err(TransportError::Protocol(_))));
    }

    #[test]
    fn plaintext_frame() {
        let mut s = Session::new(config(Role::Sender, "Key", Engine::HardwareModel)).unwrap();
        let mut wire = Vec::new();
        let n = send_stream(&mut s, &mut wire, &mut &b"Plaintext"[..]).unwrap();
        assert_eq!(n, 9);
        assert_eq!(
            wire,
            [0, 0, 0, 9, 0xBB, 0xF3, 0x16, 0xE8, 0xD9, 0x40, 0xAF, 0x0A, 0xD3, 0, 0, 0, 0]
        );
        assert_eq!(s.bytes_transferred(), 9);
    }

    #[test]
    fn framing_of_70000() {
        let data = vec![7u8; 70_000];
        let mut s = Session::new(config(Role::Sender, "Key", Engine::Reference)).unwrap();
        let mut wire = Vec::new();
        send_stream(&mut s, &mut wire, &mut data.as_slice()).unwrap();
        let (frames, used) = decode_frames(&wire).unwrap();
        assert_eq!(frames.iter().map(|f| f.len()).collect::<Vec<_>>(), [65_536, 4_464]);
        assert_eq!(used, wire.len());

        let mut r = Session::new(config(Role::Receiver, "Key", Engine::Reference)).unwrap();
        let mut out = Vec::new();
        assert_eq!(recv_stream(&mut r, &mut wire.as_slice(), &mut out).unwrap(), 70_000);
        assert_eq!(out, data);
    }

    #[test]
    fn empty_stream() {
        let mut s = Session::new(config(Role::Sender, "Key", Engine::Reference)).unwrap();
        let mut wire = Vec::new();
        assert_eq!(send_stream(&mut s, &mut wire, &mut io::empty()).unwrap(), 0);
        assert_eq!(wire, [0, 0, 0, 0]);
        let mut r = Session::new(config(Role::Receiver, "Key", Engine::Reference)).unwrap();
        let mut out = Vec::new();
        assert_eq!(recv_stream(&mut r, &mut wire.as_slice(), &mut out).unwrap(), 0);
        assert!(out.is_empty());
    }

    #[test]
    fn truncation_and_oversize() {
        let mut r = Session::new(config(Role::Receiver, "Key", Engine::Reference)).unwrap();
        let mut out = Vec::new();
        let wire = [0, 0, 0, 9, 0xBB, 0xF3, 0x16];
        match recv_stream(&mut r, &mut &wire[..], &mut out) {
            Err(TransportError::Truncated { recovered }) => assert_eq!(recovered, 3),
            other => panic!("{other:?}"),
        }
        assert_eq!(out, b"Pla");

        let mut r = Session::new(config(Role::Receiver, "Key", Engine::Reference)).unwrap();
        let wire = [0, 1, 0, 1];
        assert!(matches!(
            recv_stream(&mut r, &mut &wire[..], &mut Vec::new()),
            Err(TransportError::FrameTooLarge(65_537))
        ));
        assert!(encode_frame(&vec![0; 65_537]).is_err());
        assert_eq!(decode_frame_header([0, 1, 0, 0]).unwrap(), 65_536);
    }

    #[test]
    fn roles_are_enforced() {
        let mut s = Session::new(config(Role::Sender, "Key", Engine::Reference)).unwrap();
        assert!(recv_stream(&mut s, &mut io::empty(), &mut Vec::new()).is_err());
        let mut r = Session::new(config(Role::Receiver, "Key", Engine::Reference)).unwrap();
        assert!(send_stream(&mut r, &mut Vec::new(), &mut io::empty()).is_err());
    }

    #[test]
    fn mismatched_keys_garble() {
        let data = vec![0x55u8; 64];
        let mut s = Session::new(config(Role::Sender, "Key", Engine::Reference)).unwrap();
        let mut wire = Vec::new();
        send_stream(&mut s, &mut wire, &mut data.as_slice()).unwrap();
        let mut r = Session::new(config(Role::Receiver, "Kez", Engine::Reference)).unwrap();
        let mut out = Vec::new();
        recv_stream(&mut r, &mut wire.as_slice(), &mut out).unwrap();
        assert_ne!(out, data);
    }
}
