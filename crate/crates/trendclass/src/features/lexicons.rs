//! Lexicon tables backing the content and sentiment feature families:
//! POS tags, happiness, valence/arousal/dominance, polarity, and emoticons.
//!
//! Files are tab-separated, one entry per line, UTF-8. Lookups are
//! case-insensitive; words missing from a lexicon contribute nothing.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight POS tags whose distributions become content features.
/// Wh-pronouns are folded into `Pronoun`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Verb,
    Noun,
    Adjective,
    Modal,
    Predeterminer,
    Interjection,
    Adverb,
    Pronoun,
}

/// All tags in registry order.
pub const POS_TAGS: [PosTag; 8] = [
    PosTag::Verb,
    PosTag::Noun,
    PosTag::Adjective,
    PosTag::Modal,
    PosTag::Predeterminer,
    PosTag::Interjection,
    PosTag::Adverb,
    PosTag::Pronoun,
];

impl PosTag {
    pub fn name(self) -> &'static str {
        match self {
            PosTag::Verb => "verb",
            PosTag::Noun => "noun",
            PosTag::Adjective => "adjective",
            PosTag::Modal => "modal",
            PosTag::Predeterminer => "predeterminer",
            PosTag::Interjection => "interjection",
            PosTag::Adverb => "adverb",
            PosTag::Pronoun => "pronoun",
        }
    }

    fn parse(s: &str) -> Option<PosTag> {
        Some(match s {
            "verb" => PosTag::Verb,
            "noun" => PosTag::Noun,
            "adjective" => PosTag::Adjective,
            "modal" => PosTag::Modal,
            "predeterminer" => PosTag::Predeterminer,
            "interjection" => PosTag::Interjection,
            "adverb" => PosTag::Adverb,
            // wh-pronouns fold into pronouns
            "pronoun" | "wh-pronoun" => PosTag::Pronoun,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// Immutable lexicon bundle shared by feature extraction and the synthetic
/// generator.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub pos: HashMap<String, PosTag>,
    pub happiness: HashMap<String, f64>,
    pub valence: HashMap<String, f64>,
    pub arousal: HashMap<String, f64>,
    pub dominance: HashMap<String, f64>,
    pub polarity: HashMap<String, (Polarity, f64)>,
    pub emoticons: HashMap<String, Polarity>,
}

fn parse_err(name: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: name.into(),
        line,
        message: msg.into(),
    }
}

fn lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// Parse a `word TAB tag` POS lexicon.
pub fn parse_pos_lexicon(content: &str) -> Result<HashMap<String, PosTag>> {
    let mut map = HashMap::new();
    for (n, line) in lines(content) {
        let mut parts = line.split('\t');
        let word = parts.next().unwrap_or("");
        let tag = parts
            .next()
            .ok_or_else(|| parse_err("pos", n, "missing tag column"))?;
        let tag = PosTag::parse(tag.trim())
            .ok_or_else(|| parse_err("pos", n, format!("unknown tag {tag:?}")))?;
        map.insert(word.trim().to_lowercase(), tag);
    }
    Ok(map)
}

/// Parse a `word TAB value` lexicon of real-valued scores.
pub fn parse_score_lexicon(content: &str, name: &str) -> Result<HashMap<String, f64>> {
    let mut map = HashMap::new();
    for (n, line) in lines(content) {
        let mut parts = line.split('\t');
        let word = parts.next().unwrap_or("");
        let value = parts
            .next()
            .ok_or_else(|| parse_err(name, n, "missing value column"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| parse_err(name, n, format!("bad value: {e}")))?;
        if !value.is_finite() {
            return Err(parse_err(name, n, "value must be finite"));
        }
        map.insert(word.trim().to_lowercase(), value);
    }
    Ok(map)
}

/// Parse a `word TAB valence TAB arousal TAB dominance` lexicon.
#[allow(clippy::type_complexity)]
pub fn parse_vad_lexicon(
    content: &str,
) -> Result<(
    HashMap<String, f64>,
    HashMap<String, f64>,
    HashMap<String, f64>,
)> {
    let (mut v, mut a, mut d) = (HashMap::new(), HashMap::new(), HashMap::new());
    for (n, line) in lines(content) {
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(parse_err("vad", n, "expected 4 tab-separated columns"));
        }
        let word = parts[0].trim().to_lowercase();
        let vals: Vec<f64> = parts[1..]
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err("vad", n, format!("bad value: {e}")))?;
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(parse_err("vad", n, "values must be finite"));
        }
        v.insert(word.clone(), vals[0]);
        a.insert(word.clone(), vals[1]);
        d.insert(word, vals[2]);
    }
    Ok((v, a, d))
}

/// Parse a `word TAB positive|negative TAB strength` polarity lexicon.
pub fn parse_polarity_lexicon(content: &str) -> Result<HashMap<String, (Polarity, f64)>> {
    let mut map = HashMap::new();
    for (n, line) in lines(content) {
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(parse_err("polarity", n, "expected 3 tab-separated columns"));
        }
        let polarity = match parts[1].trim() {
            "positive" => Polarity::Positive,
            "negative" => Polarity::Negative,
            other => {
                return Err(parse_err(
                    "polarity",
                    n,
                    format!("unknown polarity {other:?}"),
                ))
            }
        };
        let strength: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|e| parse_err("polarity", n, format!("bad strength: {e}")))?;
        if !strength.is_finite() || strength < 0.0 {
            return Err(parse_err(
                "polarity",
                n,
                "strength must be finite and non-negative",
            ));
        }
        map.insert(parts[0].trim().to_lowercase(), (polarity, strength));
    }
    Ok(map)
}

/// Parse a `token TAB positive|negative` emoticon table.
pub fn parse_emoticon_lexicon(content: &str) -> Result<HashMap<String, Polarity>> {
    let mut map = HashMap::new();
    for (n, line) in lines(content) {
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 2 {
            return Err(parse_err(
                "emoticons",
                n,
                "expected 2 tab-separated columns",
            ));
        }
        let polarity = match parts[1].trim() {
            "positive" => Polarity::Positive,
            "negative" => Polarity::Negative,
            other => {
                return Err(parse_err(
                    "emoticons",
                    n,
                    format!("unknown polarity {other:?}"),
                ))
            }
        };
        map.insert(parts[0].trim().to_lowercase(), polarity);
    }
    Ok(map)
}

impl Lexicons {
    /// Raw `(name, contents)` pairs of the bundled lexicon files, e.g. for
    /// provenance hashing.
    pub fn bundled_sources() -> [(&'static str, &'static str); 5] {
        [
            ("pos.tsv", include_str!("../../data/pos.tsv")),
            ("happiness.tsv", include_str!("../../data/happiness.tsv")),
            ("vad.tsv", include_str!("../../data/vad.tsv")),
            ("polarity.tsv", include_str!("../../data/polarity.tsv")),
            ("emoticons.tsv", include_str!("../../data/emoticons.tsv")),
        ]
    }

    /// The lexicon bundle shipped with the crate.
    pub fn bundled() -> Lexicons {
        let pos = parse_pos_lexicon(include_str!("../../data/pos.tsv")).expect("bundled pos.tsv");
        let happiness = parse_score_lexicon(include_str!("../../data/happiness.tsv"), "happiness")
            .expect("bundled happiness.tsv");
        let (valence, arousal, dominance) =
            parse_vad_lexicon(include_str!("../../data/vad.tsv")).expect("bundled vad.tsv");
        let polarity = parse_polarity_lexicon(include_str!("../../data/polarity.tsv"))
            .expect("bundled polarity.tsv");
        let emoticons = parse_emoticon_lexicon(include_str!("../../data/emoticons.tsv"))
            .expect("bundled emoticons.tsv");
        Lexicons {
            pos,
            happiness,
            valence,
            arousal,
            dominance,
            polarity,
            emoticons,
        }
    }

    /// Load a lexicon bundle from a directory containing `pos.tsv`,
    /// `happiness.tsv`, `vad.tsv`, `polarity.tsv`, and `emoticons.tsv`.
    pub fn load_dir(dir: &Path) -> Result<Lexicons> {
        let read = |name: &str| -> Result<String> {
            std::fs::read_to_string(dir.join(name)).map_err(|source| Error::Io {
                path: dir.join(name),
                source,
            })
        };
        let pos = parse_pos_lexicon(&read("pos.tsv")?)?;
        let happiness = parse_score_lexicon(&read("happiness.tsv")?, "happiness")?;
        let (valence, arousal, dominance) = parse_vad_lexicon(&read("vad.tsv")?)?;
        let polarity = parse_polarity_lexicon(&read("polarity.tsv")?)?;
        let emoticons = parse_emoticon_lexicon(&read("emoticons.tsv")?)?;
        Ok(Lexicons {
            pos,
            happiness,
            valence,
            arousal,
            dominance,
            polarity,
            emoticons,
        })
    }

    pub fn pos_tag(&self, word: &str) -> Option<PosTag> {
        self.pos.get(&word.to_lowercase()).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lexicons_load() {
        let lex = Lexicons::bundled();
        assert!(lex.pos.len() > 100);
        assert!(!lex.happiness.is_empty());
        assert!(!lex.polarity.is_empty());
        assert_eq!(lex.emoticons.get(":)"), Some(&Polarity::Positive));
        // every tag is represented
        for tag in POS_TAGS {
            assert!(lex.pos.values().any(|&t| t == tag), "missing tag {tag:?}");
        }
    }

    #[test]
    fn lookups_are_case_insensitive() {
        let lex = Lexicons::bundled();
        assert_eq!(lex.pos_tag("TIME"), Some(PosTag::Noun));
    }

    #[test]
    fn wh_pronoun_folds_into_pronoun() {
        let map = parse_pos_lexicon("which\twh-pronoun\n").unwrap();
        assert_eq!(map.get("which"), Some(&PosTag::Pronoun));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_pos_lexicon("word\tnotatag\n").is_err());
        assert!(parse_score_lexicon("word\tNaN\n", "t").is_err());
        assert!(parse_vad_lexicon("word\t1.0\t2.0\n").is_err());
        assert!(parse_polarity_lexicon("word\tmeh\t0.5\n").is_err());
        assert!(parse_emoticon_lexicon(":)\t\n").is_err());
    }
}
