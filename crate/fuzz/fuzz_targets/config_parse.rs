#![no_main]

use helmadr_cli::config::{from_settings, parse_config_text, Command};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(settings) = parse_config_text(text) {
        let _ = from_settings(Command::Eikonal, &settings);
    }
});
