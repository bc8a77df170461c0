#![no_main]

use jcm_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

// Arbitrary config text must parse or fail with a config error, never panic.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Err(e) = RunConfig::parse(text) {
            assert!(matches!(e.exit_code(), 2 | 4), "{e}");
        }
    }
});
