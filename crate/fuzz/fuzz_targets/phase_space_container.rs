#![no_main]

use kinsmooth::velocity_average::PhaseSpaceData;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = PhaseSpaceData::from_bytes(data) {
        let bytes = f.to_bytes();
        let g = PhaseSpaceData::from_bytes(&bytes).expect("re-encoded data decodes");
        assert_eq!(g.to_bytes(), bytes);
    }
});
