#![no_main]
use libfuzzer_sys::fuzz_target;
use scbrauer::newform::{from_json_str, to_json_string};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = from_json_str(s) {
        assert_eq!(from_json_str(&to_json_string(&f)).unwrap(), f);
    }
});
