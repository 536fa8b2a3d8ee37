#![no_main]

use libfuzzer_sys::fuzz_target;
use qdeform::serial::{structure_from_str, structure_to_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(s) = structure_from_str(text) else {
        return;
    };
    let out = structure_to_string(&s).expect("valid structure serializes");
    let back = structure_from_str(&out).expect("serialized structure reloads");
    assert_eq!(back.bivector(), s.bivector());
    let _ = s.jacobi_residual();
});
