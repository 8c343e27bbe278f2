//! Built-in configurations reproducing the reference scenarios and gain-plane
//! analyses. The TOML sources live in `presets/` and are compiled in.

use crate::config::{parse_config, ParsedConfig};
use crate::error::Result;

pub const PRESETS: [(&str, &str); 7] = [
    (
        "gain_plane_d2",
        include_str!("../presets/gain_plane_d2.toml"),
    ),
    (
        "gain_plane_d3",
        include_str!("../presets/gain_plane_d3.toml"),
    ),
    (
        "straight_approach",
        include_str!("../presets/straight_approach.toml"),
    ),
    (
        "circular_road",
        include_str!("../presets/circular_road.toml"),
    ),
    ("cosine_road", include_str!("../presets/cosine_road.toml")),
    (
        "cosine_offset_gain",
        include_str!("../presets/cosine_offset_gain.toml"),
    ),
    (
        "cosine_positive_feedback",
        include_str!("../presets/cosine_positive_feedback.toml"),
    ),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load_preset(name: &str) -> Option<Result<ParsedConfig>> {
    preset_text(name).map(|t| parse_config(t, None))
}
