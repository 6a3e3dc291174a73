mod support;

use adprov::adaptation::{self, extract_change_events, validate_adaptation};
use adprov::xes::{parse_xes, serialize_xes, validate_log, AttributeValue, EventLog, XesError};
use proptest::prelude::*;
use support::*;

#[test]
fn shopping_log_has_one_trace_of_three_events() {
    let log = shopping_log();
    assert_eq!(log.traces.len(), 1);
    assert_eq!(
        log.traces[0].activities(),
        vec!["Add item to cart", "Go to cart", "Checkout"]
    );
    let ext = log.extension(adaptation::PREFIX).expect("adaptation extension declared");
    assert_eq!(ext.uri, adaptation::EXTENSION_URI);
    assert!(validate_log(&log).is_empty());
    assert!(validate_adaptation(&log).is_empty());
}

#[test]
fn shopping_fixture_is_already_canonical() {
    assert_eq!(serialize_xes(&shopping_log()).unwrap(), SHOPPING_XES);
}

#[test]
fn empty_log_round_trips() {
    let text = serialize_xes(&EventLog::default()).unwrap();
    assert_eq!(parse_xes(&text).unwrap(), EventLog::default());
}

#[test]
fn serializer_refuses_invalid_logs() {
    let mut log = shopping_log();
    log.traces[0].events[0].attributes[0].value = AttributeValue::Int(3);
    match serialize_xes(&log) {
        Err(XesError::Invalid(v)) => assert!(!v.is_empty()),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn parse_errors_carry_positions() {
    match parse_xes("<log>\n  <trace>\n    <event>\n  </trace>\n</log>") {
        Err(XesError::Xml { line, .. }) => assert!(line >= 3),
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_after_serialize_is_identity(seed in any::<u64>()) {
        let log = random_log(&mut rng(seed), 6, 12);
        prop_assert!(validate_log(&log).is_empty());
        let text = serialize_xes(&log).unwrap();
        let back = parse_xes(&text).unwrap();
        prop_assert_eq!(&back, &log);
        prop_assert_eq!(serialize_xes(&back).unwrap(), text);
    }

    #[test]
    fn annotated_logs_round_trip_with_their_changes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let log = random_log(&mut r, 4, 8);
        let changes = random_changes(&mut r, &log, 6);
        let annotated = adaptation::annotate_log(&log, &changes).unwrap();
        let back = parse_xes(&serialize_xes(&annotated).unwrap()).unwrap();
        prop_assert_eq!(extract_change_events(&back).unwrap(), extract_change_events(&annotated).unwrap());
    }
}
