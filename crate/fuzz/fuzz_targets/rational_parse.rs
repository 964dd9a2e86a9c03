#![no_main]
use libfuzzer_sys::fuzz_target;
use scbrauer::arith::{format_rational, parse_rational};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(x) = parse_rational(s) {
        assert_eq!(parse_rational(&format_rational(&x)).unwrap(), x);
    }
});
