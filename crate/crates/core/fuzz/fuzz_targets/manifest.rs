// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;
use rc4hw::randomness::corpus::{parse_manifest, ManifestEntry};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entries) = parse_manifest(text) {
        for e in entries {
            let again: ManifestEntry = e.to_string().parse().expect("formatted entry parses");
            assert_eq!(again, e);
        }
    }
});
