#![no_main]

use jcm_cli::{RunConfig, Shots};
use libfuzzer_sys::fuzz_target;

// `--shots` values: accepted ones print back to themselves and mean the same
// thing inside a config file.
fuzz_target!(|data: &[u8]| {
    let Ok(arg) = std::str::from_utf8(data) else { return };
    let Ok(shots) = arg.parse::<Shots>() else { return };
    assert_eq!(shots.to_string().parse::<Shots>(), Ok(shots));
    let value = match shots {
        Shots::Ideal => "\"ideal\"".to_string(),
        Shots::Count(n) => n.to_string(),
    };
    let cfg = RunConfig::parse(&format!("[measurement]\nshots = {value}\n")).expect("accepted shot budget is a valid config");
    assert_eq!(cfg.measurement.shots, shots);
});
