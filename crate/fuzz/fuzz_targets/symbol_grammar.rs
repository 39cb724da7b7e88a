#![no_main]

use kinsmooth::symbol_library::parse_symbol;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_symbol(src) {
        let text = s.to_string();
        let back = parse_symbol(&text).expect("printed symbol parses");
        assert_eq!(back.to_string(), text);
    }
});
