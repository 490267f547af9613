#![no_main]

use contact_homology::formats::parse_sampled;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(h) = parse_sampled(data) {
        for i in 0..8 {
            let z = i as f64;
            assert!(h.value(z).is_finite());
            assert!(h.derivative(z) > 0.0);
        }
    }
});
