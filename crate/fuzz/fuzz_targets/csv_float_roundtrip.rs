//! Rendered floats parse back within ten significant digits and are stable.
#![no_main]

use libfuzzer_sys::fuzz_target;
use speclab_core::experiments::format_float;

fuzz_target!(|bits: u64| {
    let x = f64::from_bits(bits);
    let text = format_float(x);
    if !x.is_finite() {
        return;
    }
    let back: f64 = text.parse().expect("rendered float parses");
    assert!((back - x).abs() <= x.abs() * 5e-10, "{x} -> {text}");
    assert_eq!(format_float(back), text);
});
