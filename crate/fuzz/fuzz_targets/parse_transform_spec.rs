#![no_main]

use libfuzzer_sys::fuzz_target;
use wave_equiv::transform::TransformSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = TransformSpec::from_json(text) {
        let b = spec.binding().expect("validated spec binds");
        let pt = spec.transformation();
        let _ = pt.apply(&b, &[0.1, 0.2, 0.3, 0.4, 0.1, -0.2, 0.3, 0.5, 0.6, 0.7], spec.eps);
    }
});
