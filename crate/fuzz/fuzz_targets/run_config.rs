#![no_main]

use libfuzzer_sys::fuzz_target;
use photonet_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = RunConfig::from_json(text) else {
        return;
    };
    // Resolving reads `spec_path` from disk and expands the full product; keep both bounded.
    let points: usize = config.sweep.iter().map(|a| a.values.len().max(1)).product();
    if config.spec_path.is_none() && points <= 64 {
        if let Ok(resolved) = config.resolve() {
            assert_eq!(resolved.points.len(), points);
        }
    }
});
