#![no_main]

use libfuzzer_sys::fuzz_target;
use wave_equiv::family::FamilyMember;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = FamilyMember::parse_text(text) {
        let again = FamilyMember::parse_text(&m.to_text()).expect("rendered member parses");
        assert_eq!(again, m);
    }
});
