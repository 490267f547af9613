#![no_main]

use contact_homology::formats::parse_family_with;
use contact_homology::Error;
use libfuzzer_sys::fuzz_target;

// Input is a descriptor line followed by the contents served for any table path.
fuzz_target!(|data: &str| {
    let (desc, table) = data.split_once('\n').unwrap_or((data, ""));
    let load = |_: &str| -> Result<String, Error> { Ok(table.to_string()) };
    if let Ok(f) = parse_family_with(desc, load) {
        assert!(f.validate().is_ok());
        assert!(f.fiber_advance().is_finite());
    }
});
