#![no_main]

use dsmetric::io::{parse_manifold, Source};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_manifold(text, Source::inline("fuzz"));
});
