//! The sectioned figure-data reader must never panic.
#![no_main]

use libfuzzer_sys::fuzz_target;
use speclab_core::experiments::parse_sections;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_sections(text);
    }
});
