//! The GIS function-call grammar: typed AST, parser and canonical serializer.
//!
//! Canonical form is `Name(arg1, arg2, ...)`: one space after each comma,
//! single-quoted strings, `null` unquoted, coordinate pairs as `[n1, n2]` and
//! numeric literals reproduced exactly as written.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("{function} takes {expected} argument(s), found {found}")]
    ArityMismatch {
        function: GisFunction,
        expected: usize,
        found: usize,
    },
    #[error("{function} argument {position}: expected {expected}, found {found}")]
    TypeMismatch {
        function: GisFunction,
        position: usize,
        expected: &'static str,
        found: String,
    },
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

/// The ten function identifiers, in inventory order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GisFunction {
    AddMarker,
    AddLayer,
    AddVector,
    AddWMS,
    Cartography,
    Draw,
    Move,
    MoveToExtent,
    ZoomIn,
    ZoomOut,
}

impl GisFunction {
    pub const ALL: [GisFunction; 10] = [
        GisFunction::AddMarker,
        GisFunction::AddLayer,
        GisFunction::AddVector,
        GisFunction::AddWMS,
        GisFunction::Cartography,
        GisFunction::Draw,
        GisFunction::Move,
        GisFunction::MoveToExtent,
        GisFunction::ZoomIn,
        GisFunction::ZoomOut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GisFunction::AddMarker => "AddMarker",
            GisFunction::AddLayer => "AddLayer",
            GisFunction::AddVector => "AddVector",
            GisFunction::AddWMS => "AddWMS",
            GisFunction::Cartography => "Cartography",
            GisFunction::Draw => "Draw",
            GisFunction::Move => "Move",
            GisFunction::MoveToExtent => "MoveToExtent",
            GisFunction::ZoomIn => "ZoomIn",
            GisFunction::ZoomOut => "ZoomOut",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GisFunction::AddLayer
            | GisFunction::AddWMS
            | GisFunction::Draw
            | GisFunction::ZoomIn
            | GisFunction::ZoomOut => 1,
            GisFunction::AddMarker | GisFunction::AddVector | GisFunction::Move => 2,
            GisFunction::Cartography => 3,
            GisFunction::MoveToExtent => 4,
        }
    }
}

impl fmt::Display for GisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GisFunction {
    type Err = ParseError;

    /// Case-sensitive: function names double as class labels.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GisFunction::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| ParseError::UnknownFunction(s.to_string()))
    }
}

/// A decimal literal kept exactly as written so serialization never
/// re-formats a digit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NumberLiteral(String);

impl NumberLiteral {
    pub fn new(text: impl Into<String>) -> Result<Self, ParseError> {
        let text = text.into();
        if is_number_literal(&text) {
            Ok(NumberLiteral(text))
        } else {
            Err(ParseError::Syntax {
                offset: 0,
                message: format!("`{text}` is not a decimal literal"),
            })
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn value(&self) -> f64 {
        // The literal grammar is a subset of what f64 parsing accepts.
        self.0.parse().expect("validated decimal literal")
    }
}

impl fmt::Display for NumberLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for NumberLiteral {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NumberLiteral::new(s)
    }
}

/// `-?[0-9]+(\.[0-9]+)?`
fn is_number_literal(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let all_digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    all_digits(int) && frac.is_none_or(all_digits)
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            /// Case-insensitive lookup.
            pub fn parse(s: &str) -> Option<Self> {
                Self::ALL.iter().copied().find(|v| v.as_str().eq_ignore_ascii_case(s))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(
    /// Vector geometry; canonical form is lowercase.
    GeometryKind {
        Point => "point",
        Line => "line",
        Polyline => "polyline",
        Polygon => "polygon",
    }
);

keyword_enum!(
    /// Drawing tool; canonical form is capitalized.
    DrawShape {
        Point => "Point",
        Line => "Line",
        Polygon => "Polygon",
    }
);

keyword_enum!(
    CartoProperty {
        Background => "background",
        Fill => "fill",
        Stroke => "stroke",
    }
);

/// One translated map command.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GisCall {
    AddMarker {
        label: String,
        coords: [NumberLiteral; 2],
    },
    AddLayer {
        name: String,
    },
    AddVector {
        geometry: GeometryKind,
        filename: String,
    },
    AddWms {
        url: String,
    },
    Cartography {
        property: CartoProperty,
        color: String,
        extra: Option<String>,
    },
    Draw {
        shape: DrawShape,
    },
    Move {
        a: NumberLiteral,
        b: NumberLiteral,
    },
    MoveToExtent {
        a: NumberLiteral,
        b: NumberLiteral,
        c: NumberLiteral,
        d: NumberLiteral,
    },
    ZoomIn {
        levels: u32,
    },
    ZoomOut {
        levels: u32,
    },
}

/// An untyped argument as it appears in call syntax.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Str(String),
    Num(NumberLiteral),
    Null,
    Pair(NumberLiteral, NumberLiteral),
}

impl Arg {
    fn describe(&self) -> String {
        match self {
            Arg::Str(s) => format!("string '{s}'"),
            Arg::Num(n) => format!("number {n}"),
            Arg::Null => "null".to_string(),
            Arg::Pair(a, b) => format!("pair [{a}, {b}]"),
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Str(s) => write!(f, "'{s}'"),
            Arg::Num(n) => write!(f, "{n}"),
            Arg::Null => f.write_str("null"),
            Arg::Pair(a, b) => write!(f, "[{a}, {b}]"),
        }
    }
}

impl GisCall {
    pub fn function(&self) -> GisFunction {
        match self {
            GisCall::AddMarker { .. } => GisFunction::AddMarker,
            GisCall::AddLayer { .. } => GisFunction::AddLayer,
            GisCall::AddVector { .. } => GisFunction::AddVector,
            GisCall::AddWms { .. } => GisFunction::AddWMS,
            GisCall::Cartography { .. } => GisFunction::Cartography,
            GisCall::Draw { .. } => GisFunction::Draw,
            GisCall::Move { .. } => GisFunction::Move,
            GisCall::MoveToExtent { .. } => GisFunction::MoveToExtent,
            GisCall::ZoomIn { .. } => GisFunction::ZoomIn,
            GisCall::ZoomOut { .. } => GisFunction::ZoomOut,
        }
    }

    /// The class label used by the classifiers.
    pub fn function_name(&self) -> &'static str {
        self.function().as_str()
    }

    /// Positional arguments in canonical form.
    pub fn args(&self) -> Vec<Arg> {
        let s = |v: &str| Arg::Str(v.to_string());
        let n = |v: &NumberLiteral| Arg::Num(v.clone());
        match self {
            GisCall::AddMarker { label, coords } => {
                vec![s(label), Arg::Pair(coords[0].clone(), coords[1].clone())]
            }
            GisCall::AddLayer { name } => vec![s(name)],
            GisCall::AddVector { geometry, filename } => vec![s(geometry.as_str()), s(filename)],
            GisCall::AddWms { url } => vec![s(url)],
            GisCall::Cartography {
                property,
                color,
                extra,
            } => vec![
                s(property.as_str()),
                s(color),
                extra.as_deref().map_or(Arg::Null, s),
            ],
            GisCall::Draw { shape } => vec![s(shape.as_str())],
            GisCall::Move { a, b } => vec![n(a), n(b)],
            GisCall::MoveToExtent { a, b, c, d } => vec![n(a), n(b), n(c), n(d)],
            GisCall::ZoomIn { levels } | GisCall::ZoomOut { levels } => {
                vec![Arg::Num(NumberLiteral(levels.to_string()))]
            }
        }
    }

    /// Builds a typed call from a function and its untyped arguments,
    /// checking arity and per-position types.
    pub fn from_args(function: GisFunction, args: Vec<Arg>) -> Result<GisCall, ParseError> {
        if args.len() != function.arity() {
            return Err(ParseError::ArityMismatch {
                function,
                expected: function.arity(),
                found: args.len(),
            });
        }
        let mut checker = ArgChecker {
            function,
            args: args.into_iter().enumerate(),
        };
        let call = match function {
            GisFunction::AddMarker => {
                let label = checker.string()?;
                let (x, y) = checker.pair()?;
                GisCall::AddMarker {
                    label,
                    coords: [x, y],
                }
            }
            GisFunction::AddLayer => GisCall::AddLayer {
                name: checker.string()?,
            },
            GisFunction::AddVector => GisCall::AddVector {
                geometry: checker.keyword(GeometryKind::parse, "geometry kind")?,
                filename: checker.string()?,
            },
            GisFunction::AddWMS => GisCall::AddWms {
                url: checker.string()?,
            },
            GisFunction::Cartography => GisCall::Cartography {
                property: checker.keyword(CartoProperty::parse, "cartographic property")?,
                color: checker.string()?,
                extra: checker.string_or_null()?,
            },
            GisFunction::Draw => GisCall::Draw {
                shape: checker.keyword(DrawShape::parse, "draw shape")?,
            },
            GisFunction::Move => GisCall::Move {
                a: checker.number()?,
                b: checker.number()?,
            },
            GisFunction::MoveToExtent => GisCall::MoveToExtent {
                a: checker.number()?,
                b: checker.number()?,
                c: checker.number()?,
                d: checker.number()?,
            },
            GisFunction::ZoomIn => GisCall::ZoomIn {
                levels: checker.levels()?,
            },
            GisFunction::ZoomOut => GisCall::ZoomOut {
                levels: checker.levels()?,
            },
        };
        Ok(call)
    }
}

struct ArgChecker {
    function: GisFunction,
    args: std::iter::Enumerate<std::vec::IntoIter<Arg>>,
}

impl ArgChecker {
    fn next(&mut self) -> (usize, Arg) {
        // Arity was checked before any argument is consumed.
        self.args.next().expect("arity checked")
    }

    fn mismatch(&self, position: usize, expected: &'static str, found: &Arg) -> ParseError {
        ParseError::TypeMismatch {
            function: self.function,
            position,
            expected,
            found: found.describe(),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.next() {
            (_, Arg::Str(s)) => Ok(s),
            (i, other) => Err(self.mismatch(i, "string", &other)),
        }
    }

    fn string_or_null(&mut self) -> Result<Option<String>, ParseError> {
        match self.next() {
            (_, Arg::Str(s)) => Ok(Some(s)),
            (_, Arg::Null) => Ok(None),
            (i, other) => Err(self.mismatch(i, "string or null", &other)),
        }
    }

    fn keyword<T>(
        &mut self,
        parse: fn(&str) -> Option<T>,
        expected: &'static str,
    ) -> Result<T, ParseError> {
        let (i, arg) = self.next();
        match &arg {
            Arg::Str(s) => parse(s).ok_or_else(|| self.mismatch(i, expected, &arg)),
            _ => Err(self.mismatch(i, expected, &arg)),
        }
    }

    fn number(&mut self) -> Result<NumberLiteral, ParseError> {
        match self.next() {
            (_, Arg::Num(n)) => Ok(n),
            (i, other) => Err(self.mismatch(i, "number", &other)),
        }
    }

    fn pair(&mut self) -> Result<(NumberLiteral, NumberLiteral), ParseError> {
        match self.next() {
            (_, Arg::Pair(a, b)) => Ok((a, b)),
            (i, other) => Err(self.mismatch(i, "coordinate pair", &other)),
        }
    }

    fn levels(&mut self) -> Result<u32, ParseError> {
        let (i, arg) = self.next();
        if let Arg::Num(n) = &arg {
            if let Ok(v) = n.as_str().parse::<u32>() {
                if v >= 1 {
                    return Ok(v);
                }
            }
        }
        Err(self.mismatch(i, "positive integer", &arg))
    }
}

impl fmt::Display for GisCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.function_name())?;
        for (i, arg) in self.args().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for GisCall {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_call(s)
    }
}

/// Canonical string form of a call.
pub fn serialize_call(call: &GisCall) -> String {
    call.to_string()
}

/// Parses a call string such as `AddMarker('University', [-73.1888, 122.889])`.
pub fn parse_call(text: &str) -> Result<GisCall, ParseError> {
    let (name, args) = parse_syntax(text)?;
    let function: GisFunction = name.parse()?;
    GisCall::from_args(function, args)
}

/// Syntactic pass only: returns the raw name and untyped arguments.
pub fn parse_syntax(text: &str) -> Result<(String, Vec<Arg>), ParseError> {
    let mut cur = Cursor { src: text, pos: 0 };
    cur.skip_ws();
    let name = cur.ident()?;
    cur.skip_ws();
    cur.expect(b'(')?;
    cur.skip_ws();
    let mut args = Vec::new();
    if cur.peek() == Some(b')') {
        cur.pos += 1;
    } else {
        loop {
            args.push(cur.arg()?);
            cur.skip_ws();
            match cur.peek() {
                Some(b',') => {
                    cur.pos += 1;
                    cur.skip_ws();
                }
                Some(b')') => {
                    cur.pos += 1;
                    break;
                }
                _ => return Err(cur.error("expected `,` or `)`")),
            }
        }
    }
    cur.skip_ws();
    if cur.pos != text.len() {
        return Err(cur.error("trailing input after `)`"));
    }
    Ok((name.to_string(), args))
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn error(&self, message: &str) -> ParseError {
        let found = match self.src[self.pos..].chars().next() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        };
        ParseError::Syntax {
            offset: self.pos,
            message: format!("{message}, found {found}"),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", b as char)))
        }
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn ident(&mut self) -> Result<&'a str, ParseError> {
        if !self
            .peek()
            .is_some_and(|b| b.is_ascii_alphabetic() || b == b'_')
        {
            return Err(self.error("expected function name"));
        }
        Ok(self.take_while(|b| b.is_ascii_alphanumeric() || b == b'_'))
    }

    fn number(&mut self) -> Result<NumberLiteral, ParseError> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        if self.take_while(|b| b.is_ascii_digit()).is_empty() {
            return Err(self.error("expected digits"));
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            if self.take_while(|b| b.is_ascii_digit()).is_empty() {
                return Err(self.error("expected digits after `.`"));
            }
        }
        Ok(NumberLiteral(self.src[start..self.pos].to_string()))
    }

    fn arg(&mut self) -> Result<Arg, ParseError> {
        match self.peek() {
            Some(b'\'') => {
                self.pos += 1;
                let body = self.take_while(|b| b != b'\'');
                self.expect(b'\'')?;
                Ok(Arg::Str(body.to_string()))
            }
            Some(b'[') => {
                self.pos += 1;
                self.skip_ws();
                let a = self.number()?;
                self.skip_ws();
                self.expect(b',')?;
                self.skip_ws();
                let b = self.number()?;
                self.skip_ws();
                self.expect(b']')?;
                Ok(Arg::Pair(a, b))
            }
            Some(b'-' | b'0'..=b'9') => self.number().map(Arg::Num),
            Some(b'n') if self.src[self.pos..].starts_with("null") => {
                self.pos += 4;
                if self
                    .peek()
                    .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
                {
                    return Err(self.error("unexpected identifier character after `null`"));
                }
                Ok(Arg::Null)
            }
            _ => Err(self.error("expected argument")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(s: &str) -> NumberLiteral {
        NumberLiteral::new(s).unwrap()
    }

    #[test]
    fn parses_zoom_out() {
        assert_eq!(
            parse_call("ZoomOut(2)").unwrap(),
            GisCall::ZoomOut { levels: 2 }
        );
    }

    #[test]
    fn parses_marker_with_pair() {
        let call = parse_call("AddMarker('University', [-73.1888, 122.889])").unwrap();
        assert_eq!(
            call,
            GisCall::AddMarker {
                label: "University".into(),
                coords: [num("-73.1888"), num("122.889")],
            }
        );
    }

    #[test]
    fn missing_argument_is_arity_mismatch() {
        assert!(matches!(
            parse_call("ZoomIn()"),
            Err(ParseError::ArityMismatch {
                expected: 1,
                found: 0,
                ..
            })
        ));
    }

    #[test]
    fn serializes_canonically() {
        let carto = GisCall::Cartography {
            property: CartoProperty::Background,
            color: "ivory".into(),
            extra: None,
        };
        assert_eq!(
            serialize_call(&carto),
            "Cartography('background', 'ivory', null)"
        );
        let extent = GisCall::MoveToExtent {
            a: num("62.2585"),
            b: num("-120.3652"),
            c: num("63.8833"),
            d: num("-3.3906"),
        };
        assert_eq!(
            serialize_call(&extent),
            "MoveToExtent(62.2585, -120.3652, 63.8833, -3.3906)"
        );
    }

    #[test]
    fn function_names() {
        assert_eq!(GisCall::ZoomOut { levels: 2 }.function_name(), "ZoomOut");
        let wms = GisCall::AddWms {
            url: "https://example.activity/wms".into(),
        };
        assert_eq!(wms.function_name(), "AddWMS");
        assert_eq!(
            GisCall::Draw {
                shape: DrawShape::Line
            }
            .function_name(),
            "Draw"
        );
    }

    #[test]
    fn all_prompt_examples_round_trip() {
        for text in [
            "ZoomOut(2)",
            "AddWMS('https://example.activity/wms')",
            "AddVector('point', 'point_zones_NY_kpn.kml')",
            "AddMarker('University', [-73.1888, 122.889])",
            "MoveToExtent(62.2585, -120.3652, 63.8833, -3.3906)",
            "AddLayer('OpenMallMap')",
            "Move(40.5267, -79.4892)",
            "Draw('Line')",
            "Cartography('background', 'ivory', null)",
            "ZoomIn(7)",
        ] {
            assert_eq!(serialize_call(&parse_call(text).unwrap()), text);
        }
    }

    #[test]
    fn whitespace_is_tolerated() {
        let call = parse_call("  AddMarker ( 'A' ,[ 1 ,2.5 ] )  ").unwrap();
        assert_eq!(serialize_call(&call), "AddMarker('A', [1, 2.5])");
    }

    #[test]
    fn enum_arguments_are_case_insensitive() {
        assert_eq!(
            serialize_call(&parse_call("Draw('line')").unwrap()),
            "Draw('Line')"
        );
        assert_eq!(
            serialize_call(&parse_call("AddVector('POLYGON', 'a.kml')").unwrap()),
            "AddVector('polygon', 'a.kml')"
        );
        assert_eq!(
            serialize_call(&parse_call("Cartography('Stroke', 'red', 'dashed')").unwrap()),
            "Cartography('stroke', 'red', 'dashed')"
        );
    }

    #[test]
    fn function_names_are_case_sensitive() {
        assert_eq!(
            parse_call("zoomout(2)"),
            Err(ParseError::UnknownFunction("zoomout".into()))
        );
        assert_eq!(
            parse_call("Zoom(2)"),
            Err(ParseError::UnknownFunction("Zoom".into()))
        );
    }

    #[test]
    fn type_mismatches() {
        assert!(matches!(
            parse_call("Move('a', 2)"),
            Err(ParseError::TypeMismatch { position: 0, .. })
        ));
        assert!(matches!(
            parse_call("ZoomIn(0)"),
            Err(ParseError::TypeMismatch { .. })
        ));
        assert!(matches!(
            parse_call("ZoomIn(1.5)"),
            Err(ParseError::TypeMismatch { .. })
        ));
        assert!(matches!(
            parse_call("Draw('circle')"),
            Err(ParseError::TypeMismatch { .. })
        ));
        assert!(matches!(
            parse_call("AddLayer(null)"),
            Err(ParseError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn syntax_errors() {
        for bad in [
            "AddLayer('Bob's')",
            "AddLayer('open",
            "ZoomIn(2",
            "ZoomIn 2)",
            "ZoomIn(2))",
            "AddMarker('a', [1, 2)",
            "Move(1., 2)",
            "Move(--1, 2)",
            "Cartography('fill', 'red', nullx)",
            "",
            "(2)",
        ] {
            assert!(
                matches!(parse_call(bad), Err(ParseError::Syntax { .. })),
                "{bad:?} -> {:?}",
                parse_call(bad)
            );
        }
    }

    #[test]
    fn coordinates_are_not_range_checked() {
        assert!(parse_call("Move(500.0, -999)").is_ok());
    }

    #[test]
    fn number_literal_keeps_text() {
        let n = num("-0.5000");
        assert_eq!(n.as_str(), "-0.5000");
        assert_eq!(n.value(), -0.5);
        assert!(NumberLiteral::new("1e5").is_err());
        assert!(NumberLiteral::new("+1").is_err());
        assert!(NumberLiteral::new(".5").is_err());
    }
}
