#![no_main]

use libfuzzer_sys::fuzz_target;
use qdeform::expr::{parse_expr, parse_poly};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(ast) = parse_expr(text) else {
        return;
    };
    // Whatever parses must print to something that parses the same way.
    let again = parse_expr(&ast.to_string()).expect("printed AST reparses");
    assert_eq!(again.to_string(), ast.to_string());
    if let Ok(poly) = ast.lower() {
        let back = parse_poly(&poly.to_string()).expect("printed polynomial reparses");
        assert_eq!(back, poly);
    }
});
