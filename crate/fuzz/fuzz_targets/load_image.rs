#![no_main]

use libfuzzer_sys::fuzz_target;
use schemnet_core::raster::load_image;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = load_image(data) {
        assert_eq!(img.data().len(), img.width() * img.height());
    }
});
