// SPDX-License-Identifier: Apache-2.0

mod common;

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use proptest::prelude::*;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rc4hw::rc4::Rc4Key;
use rc4hw::transport::{
    decode_frames, handshake, recv_stream, send_stream, Endpoint, Engine, Role, Session,
    SessionConfig, TransportError, HELLO,
};

fn config(role: Role, key: &[u8], engine: Engine) -> SessionConfig {
    SessionConfig {
        role,
        endpoint: Endpoint::Connect("127.0.0.1:0".into()),
        key: Rc4Key::new(key.to_vec()).unwrap(),
        engine,
    }
}

/// Sends `data` over a real TCP loopback; returns what the receiver wrote.
fn loopback(data: &[u8], send_key: &[u8], recv_key: &[u8], engine: Engine) -> Vec<u8> {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let recv_key = recv_key.to_vec();
    let receiver = thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut session = handshake(&mut stream, config(Role::Receiver, &recv_key, engine)).unwrap();
        let mut out = Vec::new();
        let n = recv_stream(&mut session, &mut stream, &mut out).unwrap();
        assert_eq!(n as usize, out.len());
        assert_eq!(session.bytes_transferred(), n);
        out
    });
    let mut stream = TcpStream::connect(addr).unwrap();
    let mut session = handshake(&mut stream, config(Role::Sender, send_key, engine)).unwrap();
    let sent = send_stream(&mut session, &mut stream, &mut &data[..]).unwrap();
    assert_eq!(sent as usize, data.len());
    receiver.join().unwrap()
}

fn random_payload(len: usize, seed: u64) -> Vec<u8> {
    let mut data = vec![0u8; len];
    ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut data);
    data
}

#[test]
fn round_trips_over_tcp() {
    for engine in [Engine::Reference, Engine::HardwareModel] {
        for len in [0, 1, 9, 65_536, 70_000] {
            let data = random_payload(len, len as u64);
            assert_eq!(loopback(&data, b"shared key", b"shared key", engine), data, "{engine:?} {len}");
        }
    }
}

#[test]
fn one_mebibyte() {
    let data = random_payload(1 << 20, 99);
    assert_eq!(loopback(&data, b"0123456789abcdef", b"0123456789abcdef", Engine::Reference), data);
}

#[test]
fn wrong_key_garbles() {
    let data = random_payload(4096, 5);
    let out = loopback(&data, b"key one", b"key two", Engine::Reference);
    assert_eq!(out.len(), data.len());
    assert_ne!(out, data);
}

#[test]
fn handshake_bytes_on_the_wire() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let peer = thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut hello = [0u8; 5];
        stream.read_exact(&mut hello).unwrap();
        stream.write_all(&hello).unwrap();
        hello
    });
    let mut stream = TcpStream::connect(addr).unwrap();
    handshake(&mut stream, config(Role::Sender, b"Key", Engine::Reference)).unwrap();
    assert_eq!(peer.join().unwrap(), [0x52, 0x43, 0x34, 0x53, 0x01]);
    assert_eq!(HELLO, [0x52, 0x43, 0x34, 0x53, 0x01]);
}

#[test]
fn peer_with_other_version() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let peer = thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        stream.write_all(&[0x52, 0x43, 0x34, 0x53, 0x07]).unwrap();
    });
    let mut stream = TcpStream::connect(addr).unwrap();
    let r = handshake(&mut stream, config(Role::Receiver, b"Key", Engine::Reference));
    assert!(matches!(r, Err(TransportError::UnsupportedVersion(7))));
    peer.join().unwrap();
}

fn wire_for(data: &[u8], engine: Engine) -> Vec<u8> {
    let mut s = Session::new(config(Role::Sender, b"equivalence", engine)).unwrap();
    let mut wire = Vec::new();
    send_stream(&mut s, &mut wire, &mut &data[..]).unwrap();
    wire
}

/// Reader that hands out at most `step` octets per call.
struct Dribble<'a> {
    data: &'a [u8],
    step: usize,
}

impl Read for Dribble<'_> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let k = self.step.min(buf.len()).min(self.data.len());
        buf[..k].copy_from_slice(&self.data[..k]);
        self.data = &self.data[k..];
        Ok(k)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn engines_put_identical_bytes_on_the_wire(data in prop::collection::vec(any::<u8>(), 0..3000)) {
        prop_assert_eq!(wire_for(&data, Engine::Reference), wire_for(&data, Engine::HardwareModel));
    }

    #[test]
    fn chunking_does_not_change_the_ciphertext(data in prop::collection::vec(any::<u8>(), 0..5000), step in 1usize..700) {
        let mut s = Session::new(config(Role::Sender, b"equivalence", Engine::Reference)).unwrap();
        let mut wire = Vec::new();
        send_stream(&mut s, &mut wire, &mut Dribble { data: &data, step }).unwrap();
        prop_assert_eq!(&wire, &wire_for(&data, Engine::Reference));

        let (frames, used) = decode_frames(&wire).unwrap();
        prop_assert_eq!(used, wire.len());
        let ct: Vec<u8> = frames.concat();
        let expect = rc4hw::rc4::Rc4State::new(&Rc4Key::new(b"equivalence".to_vec()).unwrap()).xor_cipher(&data);
        prop_assert_eq!(ct, expect);

        let mut r = Session::new(config(Role::Receiver, b"equivalence", Engine::HardwareModel)).unwrap();
        let mut out = Vec::new();
        recv_stream(&mut r, &mut Dribble { data: &wire, step }, &mut out).unwrap();
        prop_assert_eq!(out, data);
    }

    #[test]
    fn truncated_wire_reports_recovered_octets(data in prop::collection::vec(any::<u8>(), 1..3000), cut in any::<prop::sample::Index>()) {
        let wire = wire_for(&data, Engine::Reference);
        let cut = cut.index(wire.len() - 4);
        let mut r = Session::new(config(Role::Receiver, b"equivalence", Engine::Reference)).unwrap();
        let mut out = Vec::new();
        match recv_stream(&mut r, &mut &wire[..cut], &mut out) {
            Err(TransportError::Truncated { recovered }) => {
                prop_assert_eq!(recovered as usize, out.len());
                prop_assert_eq!(&out[..], &data[..out.len()]);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }
}
