#![no_main]

use libfuzzer_sys::fuzz_target;
use photonet::model::NetworkSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = NetworkSpec::from_json(text) {
        assert!(spec.validate().passed());
        let _ = spec.drive_vector(spec.grid.t0);
    }
});
