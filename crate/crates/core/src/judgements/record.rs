use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::JudgementError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// One participant's choice between two renditions of the same image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseJudgement {
    pub session_id: String,
    pub image_id: String,
    pub left_variant: String,
    pub right_variant: String,
    pub chosen: Side,
    pub is_verification: bool,
    pub timestamp: DateTime<Utc>,
}

impl PairwiseJudgement {
    pub fn winner(&self) -> &str {
        match self.chosen {
            Side::Left => &self.left_variant,
            Side::Right => &self.right_variant,
        }
    }

    pub fn loser(&self) -> &str {
        match self.chosen {
            Side::Left => &self.right_variant,
            Side::Right => &self.left_variant,
        }
    }
}

pub const JUDGEMENT_CSV_HEADER: [&str; 7] = [
    "session_id",
    "image_id",
    "left_variant",
    "right_variant",
    "chosen",
    "is_verification",
    "timestamp",
];

#[derive(Serialize, Deserialize)]
struct JudgementRow {
    session_id: String,
    image_id: String,
    left_variant: String,
    right_variant: String,
    chosen: Side,
    is_verification: bool,
    timestamp: String,
}

pub fn write_judgements<W: Write>(judgements: &[PairwiseJudgement], writer: W) -> Result<(), JudgementError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(JUDGEMENT_CSV_HEADER)?;
    for j in judgements {
        w.serialize(JudgementRow {
            session_id: j.session_id.clone(),
            image_id: j.image_id.clone(),
            left_variant: j.left_variant.clone(),
            right_variant: j.right_variant.clone(),
            chosen: j.chosen,
            is_verification: j.is_verification,
            timestamp: j.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_judgements<R: Read>(reader: R) -> Result<Vec<PairwiseJudgement>, JudgementError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (line, row) in r.deserialize().enumerate() {
        let row: JudgementRow = row?;
        if row.left_variant == row.right_variant {
            return Err(JudgementError::SelfComparison(row.left_variant));
        }
        let timestamp = DateTime::parse_from_rfc3339(&row.timestamp)
            .map_err(|e| {
                JudgementError::Io(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("row {}: bad timestamp '{}': {e}", line + 2, row.timestamp),
                ))
            })?
            .with_timezone(&Utc);
        out.push(PairwiseJudgement {
            session_id: row.session_id,
            image_id: row.image_id,
            left_variant: row.left_variant,
            right_variant: row.right_variant,
            chosen: row.chosen,
            is_verification: row.is_verification,
            timestamp,
        });
    }
    Ok(out)
}

/// Correct answers for verification pairs, keyed by image and unordered
/// variant pair. The answer is a variant name, so it holds regardless of
/// which side each variant was shown on.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerificationKey {
    entries: BTreeMap<(String, String, String), String>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

pub const VERIFICATION_KEY_CSV_HEADER: [&str; 4] = ["image_id", "variant_a", "variant_b", "correct_variant"];

#[derive(Serialize, Deserialize)]
struct KeyRow {
    image_id: String,
    variant_a: String,
    variant_b: String,
    correct_variant: String,
}

impl VerificationKey {
    pub fn insert(&mut self, image_id: &str, a: &str, b: &str, correct: &str) -> Result<(), JudgementError> {
        if correct != a && correct != b {
            return Err(JudgementError::BadKeyEntry {
                image_id: image_id.into(),
                correct: correct.into(),
            });
        }
        let (x, y) = ordered(a, b);
        self.entries.insert((image_id.to_owned(), x, y), correct.to_owned());
        Ok(())
    }

    pub fn correct_variant(&self, image_id: &str, a: &str, b: &str) -> Option<&str> {
        let (x, y) = ordered(a, b);
        self.entries.get(&(image_id.to_owned(), x, y)).map(String::as_str)
    }

    /// Side that shows the correct variant in `j`, if `j`'s pair is keyed.
    pub fn correct_side(&self, j: &PairwiseJudgement) -> Option<Side> {
        let correct = self.correct_variant(&j.image_id, &j.left_variant, &j.right_variant)?;
        Some(if correct == j.left_variant {
            Side::Left
        } else {
            Side::Right
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn write_verification_key<W: Write>(key: &VerificationKey, writer: W) -> Result<(), JudgementError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(VERIFICATION_KEY_CSV_HEADER)?;
    for ((image_id, a, b), correct) in &key.entries {
        w.serialize(KeyRow {
            image_id: image_id.clone(),
            variant_a: a.clone(),
            variant_b: b.clone(),
            correct_variant: correct.clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_verification_key<R: Read>(reader: R) -> Result<VerificationKey, JudgementError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut key = VerificationKey::default();
    for row in r.deserialize() {
        let row: KeyRow = row?;
        key.insert(&row.image_id, &row.variant_a, &row.variant_b, &row.correct_variant)?;
    }
    Ok(key)
}
