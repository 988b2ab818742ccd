#![no_main]

use libfuzzer_sys::fuzz_target;
use resnet_rs::augment::{decode_ppm, encode_ppm};

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_ppm(data) {
        assert_eq!(decode_ppm(&encode_ppm(&img)).expect("re-encoded image decodes"), img);
    }
});
