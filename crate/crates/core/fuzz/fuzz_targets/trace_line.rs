// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;
use rc4hw::hw::{format_trace, parse_trace};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(events) = parse_trace(text) {
        let again = parse_trace(&format_trace(&events)).expect("formatted trace parses");
        assert_eq!(again, events);
    }
});
