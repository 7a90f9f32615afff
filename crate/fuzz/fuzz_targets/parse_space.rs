#![no_main]

use dsmetric::io::{parse_space, SpaceDoc};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_space(text, "fuzz") {
        // Whatever parses must serialize and parse back.
        let again = serde_json::to_string(&SpaceDoc::from_space(&s)).unwrap();
        let back = parse_space(&again, "fuzz").expect("emitted space reparses");
        assert_eq!(back.len(), s.len());
    }
});
