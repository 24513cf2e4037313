#![no_main]

use fdm_core::io::KeyValues;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(kv) = KeyValues::parse(text) {
        let again = KeyValues::parse(&kv.to_text()).expect("serialized settings parse");
        assert_eq!(again, kv);
    }
});
