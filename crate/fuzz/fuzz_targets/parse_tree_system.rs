#![no_main]

use dsmetric::io::parse_tree_system;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((tree, map)) = parse_tree_system(text, "fuzz") {
        assert_eq!(map.space().len(), tree.leaf_count());
    }
});
