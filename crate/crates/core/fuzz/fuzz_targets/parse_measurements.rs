#![no_main]

use libfuzzer_sys::fuzz_target;
use resnet_rs::cli_io::parse_measurements;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_measurements(text) {
        assert!(!rows.is_empty());
        for r in rows {
            assert!(r.top1 > 0.0 && r.top1 < 100.0);
            assert!(r.params_m > 0.0 && r.flops_b > 0.0 && r.resolution > 0);
            assert!(r.tpu_ms.map_or(true, |v| v > 0.0) && r.v100_s.map_or(true, |v| v > 0.0));
        }
    }
});
