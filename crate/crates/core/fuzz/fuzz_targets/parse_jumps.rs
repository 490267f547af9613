#![no_main]

use contact_homology::formats::parse_jumps;
use contact_homology::stability::evaluate;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(d) = parse_jumps(data) {
        let _ = evaluate(&d, 16);
    }
});
