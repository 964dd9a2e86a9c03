#![no_main]
use libfuzzer_sys::fuzz_target;
use scbrauer::verdict::{check_conductor, InertialDescriptor};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(d) = InertialDescriptor::from_json_str(s) {
        for p in [2, 3, 5, 7] {
            let _ = d.validate(p);
        }
        for n in 0..10 {
            let _ = check_conductor(&d, n);
        }
    }
});
