#![no_main]

use helmadr::io::Metadata;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Metadata::parse(text) {
        assert_eq!(Metadata::parse(&m.render()).unwrap(), m);
    }
});
