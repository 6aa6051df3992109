//! The attribute inventory of the brain-based componential norms: 65
//! neurobiologically motivated attributes grouped into 14 domains.

/// Attribute count of the full norms.
pub const ATTRIBUTE_COUNT: usize = 65;

/// Domain count of the full norms.
pub const DOMAIN_COUNT: usize = 14;

/// Word count of the published norms (434 nouns, 62 verbs, 39 adjectives).
pub const NORM_WORD_COUNT: usize = 535;

/// Number of gold clusters in the data-driven category solution.
pub const GOLD_CLUSTER_COUNT: usize = 28;

/// `(domain, attributes)` in canonical column order.
pub const DOMAINS: [(&str, &[&str]); DOMAIN_COUNT] = [
    (
        "Vision",
        &[
            "Vision",
            "Bright",
            "Dark",
            "Color",
            "Pattern",
            "Large",
            "Small",
            "Motion",
            "Biomotion",
            "Fast",
            "Slow",
            "Shape",
            "Complexity",
            "Face",
            "Body",
        ],
    ),
    ("Somatic", &["Touch", "Temperature", "Texture", "Weight", "Pain"]),
    (
        "Audition",
        &["Audition", "Loud", "Low", "High", "Sound", "Music", "Speech"],
    ),
    ("Gustation", &["Taste"]),
    ("Olfaction", &["Smell"]),
    ("Motor", &["Head", "UpperLimb", "LowerLimb", "Practice"]),
    (
        "Spatial",
        &["Landmark", "Path", "Scene", "Near", "Toward", "Away", "Number"],
    ),
    ("Temporal", &["Time", "Duration", "Long", "Short"]),
    ("Causal", &["Caused", "Consequential"]),
    ("Social", &["Social", "Human", "Communication", "Self"]),
    ("Cognition", &["Cognition"]),
    (
        "Emotion",
        &[
            "Benefit",
            "Harm",
            "Pleasant",
            "Unpleasant",
            "Happy",
            "Sad",
            "Angry",
            "Disgusted",
            "Fearful",
            "Surprised",
        ],
    ),
    ("Drive", &["Drive", "Needs"]),
    ("Attention", &["Attention", "Arousal"]),
];

/// All 65 attribute names in canonical order.
pub fn attribute_names() -> Vec<&'static str> {
    DOMAINS.iter().flat_map(|(_, attrs)| attrs.iter().copied()).collect()
}

/// Domain of a canonical attribute, if it is one.
pub fn domain_of(attribute: &str) -> Option<&'static str> {
    DOMAINS
        .iter()
        .find(|(_, attrs)| attrs.contains(&attribute))
        .map(|(domain, _)| *domain)
}
