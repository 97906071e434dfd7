// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;
use rc4hw::rc4::Rc4Key;
use rc4hw::transport::{decode_frames, recv_stream, Endpoint, Engine, Role, Session, SessionConfig};

fuzz_target!(|data: &[u8]| {
    let decoded = decode_frames(data).map(|(frames, _)| frames.iter().map(|f| f.len() as u64).sum::<u64>());
    let config = SessionConfig {
        role: Role::Receiver,
        endpoint: Endpoint::Connect("127.0.0.1:0".into()),
        key: Rc4Key::new(b"fuzz".to_vec()).unwrap(),
        engine: Engine::Reference,
    };
    let mut session = Session::new(config).unwrap();
    let mut out = Vec::new();
    let received = recv_stream(&mut session, &mut &data[..], &mut out);
    match (decoded, received) {
        (Ok(total), Ok(n)) => assert_eq!(total, n),
        (Err(_), Err(_)) => {}
        (d, r) => panic!("slice decoder {d:?}, stream decoder {r:?}"),
    }
});
