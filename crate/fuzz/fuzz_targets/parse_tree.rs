#![no_main]

use dsmetric::io::parse_tree;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_tree(text, "fuzz") {
        let again = serde_json::to_string(&t.to_nested()).unwrap();
        assert_eq!(parse_tree(&again, "fuzz").expect("emitted tree reparses"), t);
    }
});
