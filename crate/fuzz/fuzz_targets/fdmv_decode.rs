#![no_main]

use fdm_core::io::{decode_videos, encode_videos};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(videos) = decode_videos(data) {
        let bytes = encode_videos(&videos).expect("decoded videos re-encode");
        let again = decode_videos(&bytes).expect("round trip");
        assert_eq!(again.len(), videos.len());
        for (a, b) in again.iter().zip(&videos) {
            assert_eq!(a.dim(), b.dim());
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
});
