#![no_main]

use libfuzzer_sys::fuzz_target;

// The config parser must never panic on arbitrary input, and any config it
// accepts must survive a render → parse round trip unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = nfield::parse_config(text) else {
        return;
    };
    let rendered = nfield::render(&cfg);
    match nfield::parse_config(&rendered) {
        Ok(reparsed) => assert_eq!(reparsed, cfg, "render/parse round trip changed the config"),
        Err(e) => panic!("rendered config failed to parse: {e}\n{rendered}"),
    }
});
