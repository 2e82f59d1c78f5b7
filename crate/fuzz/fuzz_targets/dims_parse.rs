#![no_main]

use helmadr_cli::config::parse_dims;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((n1, n2)) = parse_dims(text) {
        assert!(n1 > 0 && n2 > 0);
        assert_eq!(parse_dims(&format!("{n1}x{n2}")), Ok((n1, n2)));
    }
});
