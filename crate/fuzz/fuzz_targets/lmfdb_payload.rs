#![no_main]
use libfuzzer_sys::fuzz_target;
use scbrauer::newform::{from_json_str, to_json_string};
use scbrauer_lmfdb::ingest::newform_from_payload;

fuzz_target!(|data: &[u8]| {
    let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) else {
        return;
    };
    if let Ok(f) = newform_from_payload(&v) {
        f.validate().unwrap();
        assert_eq!(from_json_str(&to_json_string(&f)).unwrap(), f);
    }
});
