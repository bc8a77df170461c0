#![no_main]

use jcm_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::parse(text) else { return };
    let echo = cfg.echo();
    let back = RunConfig::parse(&echo).expect("echo of a valid config parses");
    assert_eq!(back, cfg);
    assert_eq!(back.echo(), echo);
});
