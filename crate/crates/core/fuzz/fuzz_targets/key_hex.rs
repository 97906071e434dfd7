// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;
use rc4hw::hw::prga_run;
use rc4hw::rc4::{keystream, Rc4Key};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(key) = Rc4Key::from_hex(text) {
        assert!((1..=256).contains(&key.len()));
        assert_eq!(Rc4Key::from_hex(&key.to_hex()).unwrap(), key);
        assert_eq!(prga_run(&key, 16).unwrap().0, keystream(&key, 16));
    }
});
