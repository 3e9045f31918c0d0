#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(e) = wave_equiv::parse(text) {
        let printed = e.to_string();
        let again = wave_equiv::parse(&printed).expect("printed form parses");
        assert_eq!(again, e, "{text:?} -> {printed:?}");
    }
});
