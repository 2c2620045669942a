#![no_main]

use libfuzzer_sys::fuzz_target;
use qfdef::Algebra;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(alg) = Algebra::from_json(src) {
        let back = Algebra::from_json(&alg.to_json()).expect("serialized algebra reloads");
        assert_eq!(back.size(), alg.size());
        assert_eq!(back.operations(), alg.operations());
        // small algebras: closure of the first element must itself be closed
        if alg.size() <= 64 {
            let s = alg.sg(&[0]).expect("nonempty");
            assert!(alg.is_subuniverse(&s));
        }
    }
});
