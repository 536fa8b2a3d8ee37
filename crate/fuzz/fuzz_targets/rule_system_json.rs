#![no_main]

use libfuzzer_sys::fuzz_target;
use qdeform::ncalg::{NCPoly, RewriteSystem, Strategy};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(sys) = RewriteSystem::from_json_str(text) else {
        return;
    };
    // Reverse-ordered words exercise every rule; reduction must terminate.
    let word: Vec<String> = sys.alphabet().iter().rev().take(4).cloned().collect();
    let f = NCPoly::term(qdeform::scalar::Scalar::from_int(1), word);
    let nf = sys.normal_form_with(&f, Strategy::Leftmost).expect("alphabet words reduce");
    for (w, _) in nf.terms() {
        assert!(w.len() <= f.degree());
    }
});
