#![no_main]

use libfuzzer_sys::fuzz_target;
use qfdef::oracle::graph_star;
use qfdef::Graph;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = Graph::from_json(src) {
        let back = Graph::from_json(&g.to_json()).expect("reloads");
        assert!(back.edges().eq(g.edges()));
        if g.vertex_count() <= 32 {
            let star = graph_star(&g);
            assert_eq!(star.algebra.size(), g.vertex_count() + 2);
        }
    }
});
