#![no_main]

use fdm_core::schemes::{render_svg, SamplingScheme};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(scheme) = SamplingScheme::from_json(text) else {
        return;
    };
    // bound the work done on huge declared sizes
    if scheme.n > 1 << 16 {
        return;
    }
    let valid = scheme.validate().is_ok();
    if valid {
        let _ = render_svg(&scheme);
    }
    let again = SamplingScheme::from_json(&scheme.to_json()).expect("round trip");
    assert_eq!(again, scheme);
    assert_eq!(again.validate().is_ok(), valid);
});
