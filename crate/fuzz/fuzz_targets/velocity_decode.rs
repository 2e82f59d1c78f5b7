#![no_main]

use std::path::Path;

use helmadr::io::{decode_f64_le, medium_from_velocity_bytes};
use helmadr::GridSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&shape, bytes)) = data.split_first() else { return };
    let n1 = 5 + (shape & 0x0f) as usize;
    let n2 = 5 + (shape >> 4) as usize;
    let path = Path::new("fuzz.f64");
    let decoded = decode_f64_le(bytes, bytes.len() / 8, path);
    assert_eq!(decoded.is_ok(), bytes.len() % 8 == 0);
    let grid = GridSpec::new(n1, n2, 1.0, 1.0).unwrap();
    if let Ok(m) = medium_from_velocity_bytes(&grid, bytes, path) {
        assert!(m.kappa_sq().values().iter().all(|k| *k > 0.0 && k.is_finite()));
    }
});
