//! Replays the checked-in fuzz seeds through the same entry points as the
//! fuzz targets, so stable builds catch regressions on them too.

use std::path::PathBuf;

use schemnet_core::config::Config;
use schemnet_core::detect::{ingest_detections, DetectionDoc};
use schemnet_core::netlist::{parse_netlist, parse_spice_value};
use schemnet_core::pipeline::{effective_overrides, Override};
use schemnet_core::raster::load_image;
use schemnet_core::text::label::parse_value;
use schemnet_core::text::OcrDoc;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    assert!(!v.is_empty(), "no seeds for {target}");
    v
}

#[test]
fn image_seeds_decode() {
    for (name, bytes) in seeds("load_image") {
        let img = load_image(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(img.data().len(), img.width() * img.height(), "{name}");
    }
}

#[test]
fn detection_seeds_ingest_to_a_fixed_point() {
    for (name, bytes) in seeds("detections") {
        let doc = DetectionDoc::from_json(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        let ing = ingest_detections(&doc, None).unwrap();
        let again = ingest_detections(&DetectionDoc::from_components(&ing.components, doc.image.width, doc.image.height), None).unwrap();
        assert_eq!(again.components, ing.components, "{name}");
    }
}

#[test]
fn ocr_seeds_parse() {
    for (name, bytes) in seeds("ocr") {
        OcrDoc::from_json(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn netlist_seeds_round_trip() {
    for (name, bytes) in seeds("netlist") {
        let n = parse_netlist(std::str::from_utf8(&bytes).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_netlist(&n.to_spice()).unwrap(), n, "{name}");
    }
}

#[test]
fn config_seeds_apply_and_echo() {
    for (name, bytes) in seeds("config") {
        let mut cfg = Config::default();
        cfg.apply_text(std::str::from_utf8(&bytes).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        let mut echo = Config::default();
        echo.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(echo, cfg, "{name}");
    }
}

#[test]
fn override_seeds_parse() {
    for (name, bytes) in seeds("overrides") {
        let log: Vec<Override> = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(effective_overrides(&log).len() <= log.len());
    }
}

#[test]
fn value_label_seeds() {
    for (name, bytes) in seeds("value_label") {
        let s = std::str::from_utf8(&bytes).unwrap();
        // not every seed is a valid label; none may panic
        let _ = parse_value(s);
        let _ = parse_spice_value(s);
        let _ = name;
    }
}
