#![no_main]

use contact_homology::formats::parse_class;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(g) = parse_class(data) {
        let again = parse_class(&format!("{},{}", g.m, g.l)).unwrap();
        assert_eq!(g, again);
    }
});
