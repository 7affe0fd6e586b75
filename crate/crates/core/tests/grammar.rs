use geocmd_core::command::{
    parse_call, serialize_call, Arg, CartoProperty, DrawShape, GeometryKind, GisCall, GisFunction,
    NumberLiteral, ParseError,
};
use proptest::prelude::*;

fn number() -> impl Strategy<Value = NumberLiteral> {
    (
        any::<bool>(),
        0u32..100_000,
        proptest::option::of(0u32..10_000),
        0usize..5,
    )
        .prop_map(|(neg, int, frac, width)| {
            let mut s = String::new();
            if neg {
                s.push('-');
            }
            s.push_str(&int.to_string());
            if let Some(f) = frac {
                s.push('.');
                s.push_str(&format!("{f:0width$}", width = width.max(1)));
            }
            NumberLiteral::new(s).unwrap()
        })
}

/// Strings admissible inside single quotes: no quote characters.
fn text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 _./:()\\[\\],-]{0,24}"
}

fn call() -> impl Strategy<Value = GisCall> {
    prop_oneof![
        (text(), number(), number()).prop_map(|(label, a, b)| GisCall::AddMarker {
            label,
            coords: [a, b]
        }),
        text().prop_map(|name| GisCall::AddLayer { name }),
        (prop::sample::select(GeometryKind::ALL), text())
            .prop_map(|(geometry, filename)| GisCall::AddVector { geometry, filename }),
        text().prop_map(|url| GisCall::AddWms { url }),
        (
            prop::sample::select(CartoProperty::ALL),
            text(),
            proptest::option::of(text())
        )
            .prop_map(|(property, color, extra)| GisCall::Cartography {
                property,
                color,
                extra
            }),
        prop::sample::select(DrawShape::ALL).prop_map(|shape| GisCall::Draw { shape }),
        (number(), number()).prop_map(|(a, b)| GisCall::Move { a, b }),
        (number(), number(), number(), number()).prop_map(|(a, b, c, d)| GisCall::MoveToExtent {
            a,
            b,
            c,
            d
        }),
        (1u32..1000).prop_map(|levels| GisCall::ZoomIn { levels }),
        (1u32..1000).prop_map(|levels| GisCall::ZoomOut { levels }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn parse_inverts_serialize(c in call()) {
        let text = serialize_call(&c);
        prop_assert_eq!(parse_call(&text)?, c);
    }

    #[test]
    fn canonical_text_is_a_fixed_point(c in call()) {
        let once = serialize_call(&c);
        let twice = serialize_call(&parse_call(&once)?);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn extra_whitespace_does_not_change_meaning(c in call()) {
        // The rewrite below must not touch quoted text.
        prop_assume!(c.args().iter().all(|a| !matches!(a, Arg::Str(s) if s.contains(',') || s.contains('('))));
        let spaced = serialize_call(&c).replace(", ", " ,  ").replacen('(', " ( ", 1);
        prop_assert_eq!(parse_call(&spaced)?, c);
    }

    #[test]
    fn wrong_arity_is_rejected(c in call()) {
        let mut args = c.args();
        let expected = args.len();
        args.pop();
        let err = GisCall::from_args(c.function(), args.clone()).unwrap_err();
        let is_arity = matches!(err, ParseError::ArityMismatch { expected: e, found, .. } if e == expected && found == expected - 1);
        prop_assert!(is_arity);
        args.push(Arg::Null);
        args.push(Arg::Null);
        let is_arity = matches!(GisCall::from_args(c.function(), args), Err(ParseError::ArityMismatch { .. }));
        prop_assert!(is_arity);
    }

    #[test]
    fn unknown_names_are_rejected(name in "[A-Za-z]{1,12}", c in call()) {
        prop_assume!(GisFunction::ALL.iter().all(|f| f.as_str() != name));
        let text = serialize_call(&c);
        let renamed = format!("{name}{}", &text[text.find('(').unwrap()..]);
        prop_assert_eq!(parse_call(&renamed), Err(ParseError::UnknownFunction(name)));
    }
}
