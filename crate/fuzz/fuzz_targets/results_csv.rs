//! Any table the reader accepts renders back to text it parses identically.
#![no_main]

use libfuzzer_sys::fuzz_target;
use speclab_core::experiments::{from_csv_str, to_csv_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(records) = from_csv_str(text) else { return };
    let rendered = to_csv_string(&records).expect("accepted records render");
    let again = from_csv_str(&rendered).expect("rendered table parses");
    assert_eq!(to_csv_string(&again).unwrap(), rendered);
});
