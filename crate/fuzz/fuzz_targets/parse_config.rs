#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parawork_cli::parse_config(text) {
        // anything accepted serializes back to an accepted config
        let again = parawork_cli::config::to_json(&cfg);
        parawork_cli::parse_config(&again).expect("serialized config parses");
    }
});
