#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = qfdef::parse_term(src) {
        let printed = t.to_string();
        assert_eq!(
            qfdef::parse_term(&printed).expect("printed term reparses"),
            t
        );
    }
});
