#![no_main]

use libfuzzer_sys::fuzz_target;
use qfdef::preprocess::decompose;
use qfdef::Relation;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(r) = Relation::from_json(src) {
        assert_eq!(Relation::from_json(&r.to_json()).expect("reloads"), r);
        if r.arity() <= 8 {
            assert_eq!(decompose(&r).reassemble(), r);
        }
    }
});
