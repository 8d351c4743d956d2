#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsom::config::{parse_config, parse_resolved, resolved_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Anything accepted must survive the JSON echo unchanged.
    if let Ok(scenario) = parse_config(text) {
        let echo = resolved_json(&scenario).to_string();
        assert_eq!(parse_resolved(&echo).expect("echo reparses"), scenario);
    }
});
