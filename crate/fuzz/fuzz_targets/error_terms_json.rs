#![no_main]
use libfuzzer_sys::fuzz_target;
use scbrauer::verdict::ErrorTermData;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(e) = ErrorTermData::from_json_str(s) {
        let _ = e.validate();
    }
});
