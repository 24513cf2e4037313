#![no_main]

use fdm_core::io::{decode_checkpoint, encode_checkpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = decode_checkpoint(data) {
        let bytes = encode_checkpoint(&params).expect("decoded checkpoint re-encodes");
        assert_eq!(decode_checkpoint(&bytes).expect("round trip"), params);
    }
});
