#![no_main]

use dsmetric::io::{parse_relation, RelationDoc, Source};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_relation(text, Source::inline("fuzz")) {
        let again = serde_json::to_string(&RelationDoc::new(&f)).unwrap();
        let back = parse_relation(&again, Source::inline("fuzz")).expect("emitted relation reparses");
        assert_eq!(back.pairs(), f.pairs());
    }
});
