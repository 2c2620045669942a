#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(phi) = qfdef::parse_formula(src) {
        let printed = phi.to_string();
        let again = qfdef::parse_formula(&printed).expect("printed formula reparses");
        assert_eq!(again.to_string(), printed);
    }
});
