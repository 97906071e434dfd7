// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;
use rc4hw::randomness::suite::parse_pvalue_lines;
use rc4hw::randomness::{run_suite, SuiteConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pvalues) = parse_pvalue_lines(text) {
        assert!(pvalues.iter().all(|p| (0.0..=1.0).contains(&p.value)));
        if !pvalues.is_empty() {
            let report = run_suite(&[], &SuiteConfig::default(), &pvalues).expect("external-only suite");
            let _ = report.to_text();
        }
    }
});
