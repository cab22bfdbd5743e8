use proptest::prelude::*;
use serde_json::{json, Value};
use simlive_core::wire::{decode, decode_bytes, encode, Dict, Id, MessageType, Uri, WampMessage};

fn expected_message(e: &Value) -> WampMessage {
    let id = |k: &str| Id::new(e[k].as_u64().unwrap()).unwrap();
    let uri = |k: &str| Uri::new(e[k].as_str().unwrap()).unwrap();
    let dict = |k: &str| e[k].as_object().unwrap().clone();
    let args = || e.get("args").map(|a| a.as_array().unwrap().clone());
    let kwargs = || e.get("kwargs").map(|a| a.as_object().unwrap().clone());
    match e["type"].as_str().unwrap() {
        "HELLO" => WampMessage::Hello {
            realm: uri("realm"),
            details: dict("details"),
        },
        "WELCOME" => WampMessage::Welcome {
            session: id("session"),
            details: dict("details"),
        },
        "ABORT" => WampMessage::Abort {
            details: dict("details"),
            reason: uri("reason"),
        },
        "GOODBYE" => WampMessage::Goodbye {
            details: dict("details"),
            reason: uri("reason"),
        },
        "ERROR" => WampMessage::Error {
            request_type: MessageType::from_code(e["request_type"].as_u64().unwrap()).unwrap(),
            request: id("request"),
            details: dict("details"),
            error: uri("error"),
            args: args(),
            kwargs: kwargs(),
        },
        "SUBSCRIBE" => WampMessage::Subscribe {
            request: id("request"),
            options: dict("options"),
            topic: uri("topic"),
        },
        "SUBSCRIBED" => WampMessage::Subscribed {
            request: id("request"),
            subscription: id("subscription"),
        },
        "UNSUBSCRIBE" => WampMessage::Unsubscribe {
            request: id("request"),
            subscription: id("subscription"),
        },
        "UNSUBSCRIBED" => WampMessage::Unsubscribed {
            request: id("request"),
        },
        "EVENT" => WampMessage::Event {
            subscription: id("subscription"),
            publication: id("publication"),
            details: dict("details"),
            args: args(),
            kwargs: kwargs(),
        },
        "CALL" => WampMessage::Call {
            request: id("request"),
            options: dict("options"),
            procedure: uri("procedure"),
            args: args(),
            kwargs: kwargs(),
        },
        "RESULT" => WampMessage::Result {
            request: id("request"),
            details: dict("details"),
            args: args(),
            kwargs: kwargs(),
        },
        other => panic!("unknown type {other}"),
    }
}

#[test]
fn golden_corpus_decodes_and_reencodes() {
    let corpus: Vec<Value> =
        serde_json::from_str(include_str!("data/golden.json")).expect("corpus parses");
    assert!(corpus.len() >= 30);
    let mut seen = std::collections::HashSet::new();
    for entry in &corpus {
        let name = entry["name"].as_str().unwrap();
        let frame = entry["frame"].as_str().unwrap();
        let msg = decode(frame).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(msg, expected_message(&entry["expect"]), "{name}");
        let canonical = entry["canonical"].as_str().unwrap_or(frame);
        assert_eq!(encode(&msg).unwrap(), canonical, "{name}");
        seen.insert(msg.message_type());
    }
    assert_eq!(seen.len(), 12, "corpus covers every message type");
}

fn arb_id() -> impl Strategy<Value = Id> {
    prop_oneof![
        1u64..1000,
        1u64..=simlive_core::wire::MAX_ID,
        Just(simlive_core::wire::MAX_ID)
    ]
    .prop_map(|n| Id::new(n).unwrap())
}

fn arb_uri() -> impl Strategy<Value = Uri> {
    "[a-z0-9_]{1,8}(\\.[a-z0-9_]{1,8}){0,3}".prop_map(|s| Uri::new(s).unwrap())
}

fn arb_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::from),
        any::<i64>().prop_map(Value::from),
        (-1e9f64..1e9).prop_map(|f| json!(f)),
        ".{0,12}".prop_map(Value::from),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            prop::collection::vec(("[a-z]{1,6}", inner), 0..4)
                .prop_map(|kv| Value::Object(kv.into_iter().collect())),
        ]
    })
}

fn arb_dict() -> impl Strategy<Value = Dict> {
    prop::collection::vec(("[a-z_]{1,8}", arb_value()), 0..3)
        .prop_map(|kv| kv.into_iter().collect())
}

fn arb_payload() -> impl Strategy<Value = (Option<Vec<Value>>, Option<Dict>)> {
    prop_oneof![
        Just((None, None)),
        prop::collection::vec(arb_value(), 0..4).prop_map(|a| (Some(a), None)),
        (prop::collection::vec(arb_value(), 0..4), arb_dict())
            .prop_map(|(a, k)| (Some(a), Some(k))),
    ]
}

fn arb_message() -> impl Strategy<Value = WampMessage> {
    prop_oneof![
        (arb_uri(), arb_dict()).prop_map(|(realm, details)| WampMessage::Hello { realm, details }),
        (arb_id(), arb_dict())
            .prop_map(|(session, details)| WampMessage::Welcome { session, details }),
        (arb_dict(), arb_uri())
            .prop_map(|(details, reason)| WampMessage::Abort { details, reason }),
        (arb_dict(), arb_uri())
            .prop_map(|(details, reason)| WampMessage::Goodbye { details, reason }),
        (
            prop::sample::select(vec![
                MessageType::Subscribe,
                MessageType::Unsubscribe,
                MessageType::Call
            ]),
            arb_id(),
            arb_dict(),
            arb_uri(),
            arb_payload()
        )
            .prop_map(|(request_type, request, details, error, (args, kwargs))| {
                WampMessage::Error {
                    request_type,
                    request,
                    details,
                    error,
                    args,
                    kwargs,
                }
            }),
        (arb_id(), arb_dict(), arb_uri()).prop_map(|(request, options, topic)| {
            WampMessage::Subscribe {
                request,
                options,
                topic,
            }
        }),
        (arb_id(), arb_id()).prop_map(|(request, subscription)| WampMessage::Subscribed {
            request,
            subscription
        }),
        (arb_id(), arb_id()).prop_map(|(request, subscription)| WampMessage::Unsubscribe {
            request,
            subscription
        }),
        arb_id().prop_map(|request| WampMessage::Unsubscribed { request }),
        (arb_id(), arb_id(), arb_dict(), arb_payload()).prop_map(
            |(subscription, publication, details, (args, kwargs))| WampMessage::Event {
                subscription,
                publication,
                details,
                args,
                kwargs
            }
        ),
        (arb_id(), arb_dict(), arb_uri(), arb_payload()).prop_map(
            |(request, options, procedure, (args, kwargs))| WampMessage::Call {
                request,
                options,
                procedure,
                args,
                kwargs
            }
        ),
        (arb_id(), arb_dict(), arb_payload()).prop_map(|(request, details, (args, kwargs))| {
            WampMessage::Result {
                request,
                details,
                args,
                kwargs,
            }
        }),
    ]
}

proptest! {
    #[test]
    fn decode_inverts_encode(msg in arb_message()) {
        let text = encode(&msg).unwrap();
        prop_assert!(!text.ends_with(char::is_whitespace));
        let arr: Vec<Value> = serde_json::from_str(&text).unwrap();
        prop_assert!(!arr.iter().skip(1).any(Value::is_null), "absent fields never appear as null");
        let back = decode(&text).unwrap();
        prop_assert_eq!(&back, &msg);
        prop_assert_eq!(encode(&back).unwrap(), text);
    }

    #[test]
    fn decode_is_total_on_bytes(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
        let _ = decode_bytes(&bytes);
    }

    #[test]
    fn decode_is_total_on_json_arrays(v in prop::collection::vec(arb_value(), 0..8), code in 0u64..60) {
        let mut items = vec![json!(code)];
        items.extend(v);
        let _ = decode(&Value::Array(items).to_string());
    }
}
