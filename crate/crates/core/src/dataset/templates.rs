//! Seeded template generator for the query corpus.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, Sample};
use crate::command::{CartoProperty, DrawShape, GeometryKind, GisCall, GisFunction, NumberLiteral};

pub const TEMPLATE_MIN_PER_FUNCTION: usize = 15;

const ADD_MARKER: &[&str] = &[
    "Add marker '{label}' at location {x}, {y}!",
    "Show a marker at {x}, {y} with {label} as label",
    "Show marker at {x}, {y} '{label}' is label",
    "Place a marker named '{label}' at {x}, {y}",
    "Drop a pin at [{x}, {y}] labeled '{label}'",
    "Put a '{label}' marker on {x}, {y}",
    "Mark {x}, {y} with a marker called '{label}'",
    "Add a point of interest '{label}' at {x}, {y}",
    "Create a placemark '{label}' at coordinates {x}, {y}.",
    "Pin '{label}' at {x} {y}",
    "I'd like a marker at {x}, {y} with {label} as the label",
    "Set a marker labeled '{label}' at ({x}, {y})",
    "Add a marker at {x}, {y} and call it '{label}'",
    "Highlight '{label}' with a marker at {x}, {y}",
    "New marker: '{label}' at {x}, {y}",
    "Stick a pin named '{label}' on {x}, {y}",
];

const ADD_LAYER: &[&str] = &[
    "Switch to the {layer} layer.",
    "Switch to the {layer} layer for {purpose}.",
    "Add the {layer} layer to the map",
    "Show the {layer} layer",
    "Enable the {layer} layer",
    "Turn on the {layer} layer",
    "Display the {layer} basemap",
    "Use the {layer} basemap for {purpose}",
    "Change the basemap to '{layer}'",
    "Load layer '{layer}'",
    "Add a layer called {layer}",
    "Add a new layer named {layer} for {purpose}",
    "I want the {layer} layer on the map",
    "Put the {layer} base map on",
    "Activate the {layer} map layer",
    "Bring up the {layer} layer",
    "Set '{layer}' as the active layer",
];

const ADD_VECTOR: &[&str] = &[
    "Load the {geom} vector using {file}!",
    "Load {file} as a {geom} vector layer",
    "Add the {geom} vector file {file}",
    "Open vector data {file} with {geom} features",
    "Import {geom} features from {file}",
    "Display the {geom} shapefile {file}",
    "Show {geom} vectors from {file}",
    "Add vector layer {file} ({geom})",
    "Load {file}, it contains {geom} geometry",
    "Bring the {geom} data in {file} onto the map",
    "Visualize {file} as {geom} vector data",
    "Read {geom} vector features from {file}.",
    "Put the {geom} file {file} on the map",
    "Load a {geom} vector dataset: {file}",
    "I need the {geom} vectors stored in {file}",
    "Render {file} using {geom} geometry",
];

const ADD_WMS: &[&str] = &[
    "Show the {topic} map from WMS URL <{url}>",
    "Add a WMS layer from {url}",
    "Load the WMS service at {url}",
    "Connect to the web map service {url}",
    "Add WMS {url} to the map",
    "Display {topic} data from the WMS endpoint {url}.",
    "Fetch the WMS layer at <{url}>",
    "Add this WMS: {url}",
    "Overlay the {topic} WMS from {url}",
    "Pull {topic} imagery from WMS {url}",
    "Use {url} as a WMS source",
    "Bring in the web map service at {url}!",
    "Import WMS layer {url}",
    "I want to see the {topic} WMS at {url}",
    "Open the {topic} WMS: {url}",
    "Stream WMS tiles from {url}.",
];

const CARTOGRAPHY: &[&str] = &[
    "Set the {prop} color to {color}.",
    "Change the {prop} colour to {color}",
    "Make the {prop} {color}",
    "Use {color} for the {prop}",
    "Paint the {prop} {color}",
    "I want a {color} {prop}",
    "Switch the {prop} color to {color}",
    "Set {prop} to {color}",
    "Can the {prop} be {color}?",
    "Update the {prop} color: {color}",
    "Color the {prop} {color}",
    "Give the map a {color} {prop}",
    "Apply a {color} {prop} color",
    "Turn the {prop} {color}",
    "Change {prop} to {color}",
    "Let's make the {prop} {color}",
];

/// Stroke templates that also carry a line style (the third argument).
const STROKE_STYLE: &[&str] = &[
    "Make the stroke {style} and {color}",
    "Set a {style} {color} stroke",
    "Change the stroke to {color} with a {style} style",
    "Use a {style} stroke in {color}",
    "Stroke style {style}, color {color}",
    "Give the stroke a {style} {color} look",
];

const DRAW: &[&str] = &[
    "Draw a {shape} on the map!",
    "Draw a {shape}",
    "Start drawing a {shape}",
    "I want to draw a {shape}",
    "Let me draw a {shape} on the map",
    "Enable {shape} drawing mode",
    "Sketch a {shape}",
    "Activate the {shape} drawing tool",
    "Can I draw a {shape} here?",
    "Begin sketching a {shape} feature",
    "Switch to {shape} draw mode",
    "Draw {shape} geometry",
    "Let's sketch a {shape}",
    "Give me the {shape} drawing tool",
    "Time to draw a {shape}!",
    "Open the {shape} sketch tool",
];

const MOVE: &[&str] = &[
    "Can we go to {x}, {y}?",
    "Move the map to {x}, {y}",
    "Pan to {x}, {y}",
    "Center the map on {x}, {y}.",
    "Take me to {x}, {y}",
    "Navigate to coordinates {x}, {y}",
    "Go to {x} {y}",
    "Fly to {x}, {y}!",
    "Recenter the view at {x}, {y}",
    "Jump to location {x}, {y}",
    "Shift the view to {x}, {y}",
    "Let's go to {x}, {y}",
    "Move over to {x}, {y}",
    "Pan the map over to {x}, {y}.",
    "Focus the map on {x}, {y}",
    "Centre the map at {x}, {y}",
];

const MOVE_TO_EXTENT: &[&str] = &[
    "Set map bounds from {x1}, {y1} to {x2}, {y2}.",
    "Zoom to the extent {x1}, {y1}, {x2}, {y2}",
    "Fit the view to the bounding box {x1}, {y1}, {x2}, {y2}",
    "Set the extent to {x1}, {y1}, {x2}, {y2}",
    "Show the area between {x1}, {y1} and {x2}, {y2}",
    "Frame the map from {x1}, {y1} to {x2}, {y2}",
    "Restrict the view to bounds {x1}, {y1}, {x2}, {y2}",
    "Use the bbox {x1}, {y1}, {x2}, {y2}",
    "Move to the extent [{x1}, {y1}, {x2}, {y2}]",
    "Adjust the map extent to {x1}, {y1}, {x2}, {y2}",
    "Set the map boundaries to {x1}, {y1} and {x2}, {y2}",
    "Fit to extent from {x1}, {y1} to {x2}, {y2}.",
    "Display the bounding box from {x1}, {y1} to {x2}, {y2}",
    "Map extent: {x1}, {y1}, {x2}, {y2}",
    "Show everything within bounds {x1}, {y1} to {x2}, {y2}",
    "I need the extent {x1}, {y1}, {x2}, {y2} on screen",
];

const ZOOM_IN: &[&str] = &[
    "Zoom in by {n} levels to focus on the details.",
    "Zoom in {n} levels",
    "Zoom in by {n}",
    "Zoom into the map by {n} levels",
    "Increase the zoom by {n} levels",
    "Magnify the map {n} levels",
    "Get {n} levels closer",
    "Zoom in {n} steps",
    "I'd like to zoom in by {n} levels",
    "Can you zoom in {n} levels?",
    "Bring the map {n} levels closer",
    "Zoom the map in by {n}",
    "Increase zoom level by {n}",
    "Zoom in by {n} levels for more detail",
    "Push the zoom in {n} levels",
    "Let's zoom in {n} levels",
];

const ZOOM_OUT: &[&str] = &[
    "I'd like to zoom out by {n} levels",
    "Zoom out by {n} levels",
    "Zoom out {n} levels",
    "Zoom out by {n}",
    "Decrease the zoom by {n} levels",
    "Pull back {n} levels",
    "Zoom the map out by {n}",
    "Reduce zoom level by {n}",
    "Can you zoom out {n} levels?",
    "Zoom out {n} steps to see more",
    "Back out {n} zoom levels",
    "Go {n} levels further out",
    "Widen the view by {n} zoom levels",
    "Zoom out by {n} levels to see the whole region",
    "Let's zoom out {n} levels",
    "Shrink the map view by {n} levels",
];

/// Politeness openers; skipped for templates that already open with a
/// question or first-person phrase.
const PREFIXES: &[&str] = &[
    "",
    "Please ",
    "Hey, ",
    "Could you ",
    "Kindly ",
    "OK, ",
    "Hi, ",
    "Quick one: ",
    "Go ahead and ",
    "I need you to ",
];

const NO_PREFIX_OPENERS: &[&str] = &[
    "I ", "I'd", "Can ", "Could ", "Let's ", "Let ", "Time ", "New ", "Map ", "Stroke ",
];

const LABELS: &[&str] = &[
    "University",
    "Madrid",
    "Portugal",
    "Library",
    "Museum",
    "Hospital",
    "Stadium",
    "Airport",
    "Harbor",
    "Cafe",
    "School",
    "Bakery",
    "Station",
    "Lighthouse",
    "Campsite",
    "Bridge",
    "Castle",
    "Market",
    "Park",
    "Office",
    "Home",
    "Warehouse",
    "Clinic",
    "Temple",
    "Zoo",
    "Theater",
    "Pharmacy",
    "Hotel",
    "Beach",
    "Summit",
    "Vineyard",
    "Observatory",
];

const LAYERS: &[&str] = &[
    "OpenMallMap",
    "OpenStreetMap",
    "OpenTopoMap",
    "Satellite",
    "Terrain",
    "Watercolor",
    "DarkMatter",
    "Positron",
    "Toner",
    "HumanitarianOSM",
    "CycleMap",
    "TransportMap",
    "Hillshade",
    "NightLights",
    "Bathymetry",
    "LandCover",
    "Geology",
    "Population",
    "Hydrography",
    "Railways",
    "Buildings",
    "Parcels",
    "Elevation",
    "Vegetation",
];

const PURPOSES: &[&str] = &[
    "retail therapy",
    "a better overview",
    "trip planning",
    "my presentation",
    "field work",
    "the report",
];

const COLORS: &[&str] = &[
    "ivory",
    "red",
    "blue",
    "green",
    "yellow",
    "orange",
    "purple",
    "black",
    "white",
    "gray",
    "teal",
    "navy",
    "maroon",
    "olive",
    "lime",
    "cyan",
    "magenta",
    "pink",
    "brown",
    "beige",
    "salmon",
    "coral",
    "crimson",
    "gold",
    "silver",
    "indigo",
    "violet",
    "turquoise",
    "khaki",
    "lavender",
];

const STROKE_STYLES: &[&str] = &["dashed", "dotted", "solid"];

const WMS_TOPICS: &[&str] = &[
    "seismic activity",
    "flood risk",
    "land cover",
    "rainfall",
    "wildfire",
    "soil type",
    "air quality",
    "snow depth",
];

const WMS_HOSTS: &[&str] = &[
    "example.activity",
    "maps.example.org",
    "geo.example.net",
    "ows.example.com",
    "data.example.gov",
    "tiles.example.io",
];

const WMS_PATHS: &[&str] = &[
    "wms",
    "geoserver/wms",
    "ows",
    "service/wms",
    "mapserv",
    "wms/v1",
    "cgi-bin/wms",
];

const AREAS: &[&str] = &[
    "NY", "LA", "paris", "berlin", "tokyo", "lagos", "lima", "oslo", "delhi", "cairo", "sydney",
    "quebec",
];

const THEMES: &[&str] = &[
    "zones",
    "roads",
    "parcels",
    "rivers",
    "parks",
    "wells",
    "trails",
    "districts",
    "stations",
    "lakes",
    "sensors",
    "borders",
];

const EXTENSIONS: &[&str] = &["kml", "geojson", "shp", "gpx"];

fn templates_for(function: GisFunction) -> &'static [&'static str] {
    match function {
        GisFunction::AddMarker => ADD_MARKER,
        GisFunction::AddLayer => ADD_LAYER,
        GisFunction::AddVector => ADD_VECTOR,
        GisFunction::AddWMS => ADD_WMS,
        GisFunction::Cartography => CARTOGRAPHY,
        GisFunction::Draw => DRAW,
        GisFunction::Move => MOVE,
        GisFunction::MoveToExtent => MOVE_TO_EXTENT,
        GisFunction::ZoomIn => ZOOM_IN,
        GisFunction::ZoomOut => ZOOM_OUT,
    }
}

/// Number of query templates shipped for a function.
pub fn template_count(function: GisFunction) -> usize {
    let extra = if function == GisFunction::Cartography {
        STROKE_STYLE.len()
    } else {
        0
    };
    templates_for(function).len() + extra
}

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty word list")
}

/// A decimal with four fractional digits, uniform over `[-bound, bound]`.
fn coordinate<R: Rng>(rng: &mut R, bound: i64) -> NumberLiteral {
    let scaled = rng.gen_range(-bound * 10_000..=bound * 10_000);
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    NumberLiteral::new(format!("{sign}{}.{:04}", abs / 10_000, abs % 10_000))
        .expect("well-formed coordinate")
}

fn fill(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (name, value) in slots {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    debug_assert!(!out.contains('{'), "unfilled slot in `{out}`");
    out
}

fn with_prefix<R: Rng>(rng: &mut R, query: String) -> String {
    let prefix = pick(rng, PREFIXES);
    if prefix.is_empty() || NO_PREFIX_OPENERS.iter().any(|o| query.starts_with(o)) {
        return query;
    }
    let mut chars = query.chars();
    let first = chars.next().map(|c| c.to_ascii_lowercase());
    format!(
        "{prefix}{}{}",
        first.into_iter().collect::<String>(),
        chars.as_str()
    )
}

/// Samples parameters and a template for one function.
fn draw_one<R: Rng>(rng: &mut R, function: GisFunction) -> (String, GisCall) {
    let template = pick(rng, templates_for(function));
    let (query, call) = match function {
        GisFunction::AddMarker => {
            let label = pick(rng, LABELS).to_string();
            let (x, y) = (coordinate(rng, 180), coordinate(rng, 90));
            let q = fill(
                template,
                &[
                    ("label", label.clone()),
                    ("x", x.to_string()),
                    ("y", y.to_string()),
                ],
            );
            (
                q,
                GisCall::AddMarker {
                    label,
                    coords: [x, y],
                },
            )
        }
        GisFunction::AddLayer => {
            let name = pick(rng, LAYERS).to_string();
            let purpose = pick(rng, PURPOSES).to_string();
            let q = fill(template, &[("layer", name.clone()), ("purpose", purpose)]);
            (q, GisCall::AddLayer { name })
        }
        GisFunction::AddVector => {
            let geometry = *GeometryKind::ALL.choose(rng).expect("non-empty");
            let code: String = (0..3).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
            let filename = format!(
                "{}_{}_{}.{}",
                pick(rng, THEMES),
                pick(rng, AREAS),
                code,
                pick(rng, EXTENSIONS)
            );
            let q = fill(
                template,
                &[("geom", geometry.to_string()), ("file", filename.clone())],
            );
            (q, GisCall::AddVector { geometry, filename })
        }
        GisFunction::AddWMS => {
            let url = format!("https://{}/{}", pick(rng, WMS_HOSTS), pick(rng, WMS_PATHS));
            let topic = pick(rng, WMS_TOPICS).to_string();
            let q = fill(template, &[("url", url.clone()), ("topic", topic)]);
            (q, GisCall::AddWms { url })
        }
        GisFunction::Cartography => {
            let color = pick(rng, COLORS).to_string();
            // One draw in six carries a stroke style.
            if rng.gen_ratio(1, 6) {
                let style = pick(rng, STROKE_STYLES).to_string();
                let t = pick(rng, STROKE_STYLE);
                let q = fill(t, &[("style", style.clone()), ("color", color.clone())]);
                let call = GisCall::Cartography {
                    property: CartoProperty::Stroke,
                    color,
                    extra: Some(style),
                };
                (q, call)
            } else {
                let property = *CartoProperty::ALL.choose(rng).expect("non-empty");
                let q = fill(
                    template,
                    &[("prop", property.to_string()), ("color", color.clone())],
                );
                let call = GisCall::Cartography {
                    property,
                    color,
                    extra: None,
                };
                (q, call)
            }
        }
        GisFunction::Draw => {
            let shape = *DrawShape::ALL.choose(rng).expect("non-empty");
            let shown = if rng.gen_bool(0.5) {
                shape.as_str().to_string()
            } else {
                shape.as_str().to_lowercase()
            };
            (fill(template, &[("shape", shown)]), GisCall::Draw { shape })
        }
        GisFunction::Move => {
            let (a, b) = (coordinate(rng, 180), coordinate(rng, 90));
            let q = fill(template, &[("x", a.to_string()), ("y", b.to_string())]);
            (q, GisCall::Move { a, b })
        }
        GisFunction::MoveToExtent => {
            let (a, b) = (coordinate(rng, 180), coordinate(rng, 90));
            let (c, d) = (coordinate(rng, 180), coordinate(rng, 90));
            let q = fill(
                template,
                &[
                    ("x1", a.to_string()),
                    ("y1", b.to_string()),
                    ("x2", c.to_string()),
                    ("y2", d.to_string()),
                ],
            );
            (q, GisCall::MoveToExtent { a, b, c, d })
        }
        GisFunction::ZoomIn | GisFunction::ZoomOut => {
            let levels = rng.gen_range(1..=10u32);
            let q = fill(template, &[("n", levels.to_string())]);
            let call = if function == GisFunction::ZoomIn {
                GisCall::ZoomIn { levels }
            } else {
                GisCall::ZoomOut { levels }
            };
            (q, call)
        }
    };
    (with_prefix(rng, query), call)
}

/// Generates `per_function` unique samples for each of the ten functions.
///
/// Output is a pure function of `(seed, per_function)`. Ids are assigned in
/// generation order; functions are emitted in inventory order.
pub fn generate(seed: u64, per_function: usize) -> Result<Vec<Sample>, DatasetError> {
    if per_function == 0 {
        return Err(DatasetError::InvalidArgument(
            "per_function must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<String> = HashSet::new();
    let mut samples = Vec::with_capacity(per_function * GisFunction::ALL.len());
    let budget = per_function * 100 + 1_000;
    for function in GisFunction::ALL {
        let mut produced = 0;
        let mut attempts = 0;
        while produced < per_function {
            if attempts == budget {
                return Err(DatasetError::TemplateExhaustion {
                    function,
                    requested: per_function,
                    produced,
                });
            }
            attempts += 1;
            let (query, call) = draw_one(&mut rng, function);
            let query = query.trim().to_string();
            if !seen.insert(query.clone()) {
                continue;
            }
            samples.push(Sample {
                id: samples.len() as u64,
                function: function.as_str().to_string(),
                query,
                call: call.to_string(),
            });
            produced += 1;
        }
    }
    Ok(samples)
}
