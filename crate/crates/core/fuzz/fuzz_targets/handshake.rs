// SPDX-License-Identifier: Apache-2.0

#![no_main]

use std::io::{Cursor, Read, Write};

use libfuzzer_sys::fuzz_target;
use rc4hw::rc4::Rc4Key;
use rc4hw::transport::{handshake, Endpoint, Engine, Role, SessionConfig, HELLO};

struct Peer {
    input: Cursor<Vec<u8>>,
    output: Vec<u8>,
}

impl Read for Peer {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        self.input.read(buf)
    }
}

impl Write for Peer {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.output.write(buf)
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fuzz_target!(|data: &[u8]| {
    for role in [Role::Sender, Role::Receiver] {
        let config = SessionConfig {
            role,
            endpoint: Endpoint::Connect("127.0.0.1:0".into()),
            key: Rc4Key::new(b"fuzz".to_vec()).unwrap(),
            engine: Engine::Reference,
        };
        let mut peer = Peer { input: Cursor::new(data.to_vec()), output: Vec::new() };
        let ok = handshake(&mut peer, config).is_ok();
        assert_eq!(ok, data.len() >= 5 && data[..5] == HELLO);
    }
});
