#![no_main]

use kinsmooth::spectral_grid::SpaceTimeField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = SpaceTimeField::from_bytes(data) {
        let bytes = f.to_bytes();
        let g = SpaceTimeField::from_bytes(&bytes).expect("re-encoded field decodes");
        assert_eq!(g.to_bytes(), bytes);
    }
});
