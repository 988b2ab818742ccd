#![no_main]

use libfuzzer_sys::fuzz_target;
use resnet_rs::cli_io::{emit_spec, parse_spec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_spec(text) {
        let again = parse_spec(&emit_spec(&spec)).expect("emitted spec parses");
        assert_eq!(again, spec);
    }
});
