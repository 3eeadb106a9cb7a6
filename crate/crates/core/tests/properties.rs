//! Invariants checked on generated inputs.

mod oracle;

use proptest::prelude::*;

use schemnet_core::config::Config;
use schemnet_core::detect::{concordance_from_counts, ingest_detections, Component, ComponentType, DetectionDoc};
use schemnet_core::eval::{f1, match_detections};
use schemnet_core::geom::BBox;
use schemnet_core::netlist::{netlists_equivalent, parse_netlist, EquivOptions, Multiplier, SpiceValue};
use schemnet_core::raster::{label_components, BinaryImage, Connectivity};
use schemnet_core::synth::prng::SplitMix64;
use schemnet_core::text::label::{format_value, parse_value};
use schemnet_core::text::{bind_text, TextBox};

fn ctype() -> impl Strategy<Value = ComponentType> {
    prop::sample::select(ComponentType::ALL.to_vec())
}

fn counts() -> impl Strategy<Value = std::collections::BTreeMap<ComponentType, usize>> {
    prop::collection::btree_map(ctype(), 0usize..6, 0..6)
}

fn comp_boxes() -> impl Strategy<Value = Vec<(ComponentType, BBox)>> {
    prop::collection::vec((ctype(), 0i32..80, 0i32..80, 4i32..30, 4i32..30).prop_map(|(t, x, y, w, h)| (t, BBox::new(x, y, w, h))), 0..8)
}

fn comps(v: &[(ComponentType, BBox)]) -> Vec<Component> {
    v.iter().enumerate().map(|(id, &(ctype, bbox))| Component { id, ctype, bbox, confidence: 1.0, terminals: vec![] }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn labeling_matches_flood_fill(w in 1usize..24, h in 1usize..24, density in 0u64..=100, seed: u64, eight: bool) {
        let mut rng = SplitMix64::new(seed);
        let bits = oracle::random_bits(&mut rng, w, h, density);
        let img = BinaryImage::from_bits(w, h, bits.clone()).unwrap();
        let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
        let got = label_components(&img, conn);
        prop_assert_eq!(got.labels(), &oracle::flood_labels(&bits, w, h, eight)[..]);
    }

    #[test]
    fn relabeled_netlists_are_equivalent(seed: u64) {
        let mut rng = SplitMix64::new(seed);
        let a = oracle::random_netlist(&mut rng, 7);
        let b = oracle::relabel(&a, &mut rng);
        prop_assert!(netlists_equivalent(&a, &b, EquivOptions::default()).unwrap().equivalent);
    }

    #[test]
    fn equivalence_agrees_with_brute_force(seed: u64, values: bool) {
        let mut rng = SplitMix64::new(seed);
        let a = oracle::random_netlist(&mut rng, 6);
        let b = if rng.chance(1, 2) { oracle::mutate(&oracle::relabel(&a, &mut rng), &mut rng) } else { oracle::relabel(&a, &mut rng) };
        let opts = if values { EquivOptions::default() } else { EquivOptions::STRUCTURE };
        prop_assert_eq!(netlists_equivalent(&a, &b, opts).unwrap().equivalent, oracle::brute_equivalent(&a, &b, values));
    }

    #[test]
    fn spice_text_round_trips(seed: u64) {
        let mut rng = SplitMix64::new(seed);
        let n = oracle::random_netlist(&mut rng, 8);
        prop_assert_eq!(parse_netlist(&n.to_spice()).unwrap(), n);
    }

    #[test]
    fn concordance_is_symmetric_and_bounded(a in counts(), b in counts()) {
        let ab = concordance_from_counts(&a, &b).score;
        prop_assert_eq!(ab, concordance_from_counts(&b, &a).score);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(concordance_from_counts(&a, &a).score, 1.0);
        prop_assert!(concordance_from_counts(&a, &a).flags.is_empty());
    }

    // labels have no femto or tera: `f` would read as farads
    #[test]
    fn value_labels_round_trip(
        m in 1u32..1000,
        dec in 0u32..3,
        mult in prop::sample::select(Multiplier::ALL[1..9].to_vec()),
        unit in prop::sample::select(vec!["", "Ω", "F", "H", "V", "A"]),
    ) {
        let mantissa = f64::from(m) / 10f64.powi(dec as i32);
        let v = SpiceValue::new(mantissa, mult);
        let back = parse_value(&format_value(&v, unit)).unwrap();
        prop_assert!(back.approx_eq(&v), "{:?} -> {:?}", v, back);
    }

    #[test]
    fn ingest_is_a_fixed_point(boxes in comp_boxes()) {
        let doc = DetectionDoc::from_components(&comps(&boxes), 200, 200);
        let once = ingest_detections(&doc, Some((200, 200))).unwrap();
        let again = ingest_detections(&DetectionDoc::from_components(&once.components, 200, 200), Some((200, 200))).unwrap();
        prop_assert_eq!(once.components, again.components);
    }

    #[test]
    fn binding_ignores_text_order(boxes in comp_boxes(), seed: u64) {
        let cs = comps(&boxes);
        let mut rng = SplitMix64::new(seed);
        let strings = ["R1", "C2", "10k", "4.7u", "Q1", "QNPN", "V3", "5"];
        let texts: Vec<TextBox> = (0..rng.index(8))
            .map(|id| TextBox {
                id,
                string: rng.pick(&strings).to_string(),
                bbox: BBox::new(rng.index(100) as i32, rng.index(100) as i32, 20, 14),
                confidence: 1.0,
            })
            .collect();
        let mut shuffled = texts.clone();
        rng.shuffle(&mut shuffled);
        let a = bind_text(&cs, &texts, 1.5);
        let b = bind_text(&cs, &shuffled, 1.5);
        prop_assert_eq!(a.bindings, b.bindings);
        prop_assert_eq!(a.flags, b.flags);
    }

    #[test]
    fn matching_accounts_for_every_box(gold in comp_boxes(), pred in comp_boxes(), t in 0.1f64..=1.0) {
        let (g, p) = (comps(&gold), comps(&pred));
        let m = match_detections(&g, &p, t);
        prop_assert_eq!(m.tp() + m.fn_(), g.len());
        prop_assert_eq!(m.tp() + m.fp(), p.len());
        for x in &m.matches {
            prop_assert!(x.iou >= t);
            prop_assert_eq!(g[x.gold].ctype, p[x.pred].ctype);
        }
    }

    #[test]
    fn f1_lies_between_precision_and_recall(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let f = f1(p, r);
        prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
    }

    #[test]
    fn config_echo_round_trips(radius in 0usize..4, band in 0i32..9, bind in 0.5f64..4.0, four: bool) {
        let c = Config::layered(None, [
            ("close_radius", radius.to_string().as_str()),
            ("band", band.to_string().as_str()),
            ("bind_factor", bind.to_string().as_str()),
            ("connectivity", if four { "4" } else { "8" }),
        ]).unwrap();
        prop_assert_eq!(Config::layered(Some(&c.to_text()), []).unwrap(), c);
    }
}
