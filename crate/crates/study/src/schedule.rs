use std::collections::HashMap;

use chrono::{DateTime, Utc};
use inpaint_eval_core::judgements::Side;
use inpaint_eval_core::GROUND_TRUTH;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::StudyConfig;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAssignment {
    pub pair_id: String,
    pub image_id: String,
    pub left_variant: String,
    pub right_variant: String,
    pub is_verification: bool,
    /// Side showing ground truth; set only for verification pairs.
    pub correct_side: Option<Side>,
}

impl PairAssignment {
    pub fn variant(&self, side: Side) -> &str {
        match side {
            Side::Left => &self.left_variant,
            Side::Right => &self.right_variant,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub schedule: Vec<PairAssignment>,
    /// Index of the next unanswered pair.
    pub cursor: usize,
    pub created_at: DateTime<Utc>,
    pub completed: bool,
}

/// One image and an unordered variant pair, `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Combo {
    pub image_id: String,
    pub a: String,
    pub b: String,
}

impl Combo {
    pub fn new(image_id: &str, x: &str, y: &str) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        Combo {
            image_id: image_id.into(),
            a: a.into(),
            b: b.into(),
        }
    }
}

/// Global presentation counters over every (image, variant pair) combo.
#[derive(Clone, Debug)]
pub struct Scheduler {
    combos: Vec<Combo>,
    counts: Vec<u64>,
    index: HashMap<Combo, usize>,
}

fn token<R: Rng>(rng: &mut R) -> String {
    format!("{:032x}", rng.gen::<u128>())
}

impl Scheduler {
    pub fn new(config: &StudyConfig) -> Self {
        let mut variants = config.variants_under_test.clone();
        variants.sort();
        let mut combos = Vec::new();
        for entry in &config.manifest.entries {
            for (i, a) in variants.iter().enumerate() {
                for b in &variants[i + 1..] {
                    combos.push(Combo::new(&entry.image_id, a, b));
                }
            }
        }
        let index = combos.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        Scheduler {
            counts: vec![0; combos.len()],
            combos,
            index,
        }
    }

    pub fn count(&self, combo: &Combo) -> Option<u64> {
        self.index.get(combo).map(|&i| self.counts[i])
    }

    pub fn counts(&self) -> impl Iterator<Item = (&Combo, u64)> {
        self.combos.iter().zip(self.counts.iter().copied())
    }

    /// Counts a regular assignment as presented. Verification pairs and
    /// pairs outside the current combo set are ignored.
    pub fn record(&mut self, a: &PairAssignment) {
        if a.is_verification {
            return;
        }
        if let Some(&i) = self
            .index
            .get(&Combo::new(&a.image_id, &a.left_variant, &a.right_variant))
        {
            self.counts[i] += 1;
        }
    }

    /// Draws a session schedule without touching the counters; call
    /// [`Scheduler::record`] once the session is committed.
    pub fn build_session<R: Rng>(&self, config: &StudyConfig, rng: &mut R, created_at: DateTime<Utc>) -> Session {
        let session_id = token(rng);
        let mut counts = self.counts.clone();
        let mut regular = Vec::with_capacity(config.pairs_per_session);
        let mut least = Vec::new();
        for _ in 0..config.pairs_per_session {
            let min = counts.iter().copied().min().unwrap_or(0);
            least.clear();
            least.extend((0..counts.len()).filter(|&i| counts[i] == min));
            let pick = least[rng.gen_range(0..least.len())];
            counts[pick] += 1;
            let c = &self.combos[pick];
            let (left, right) = if rng.gen::<bool>() { (&c.a, &c.b) } else { (&c.b, &c.a) };
            regular.push(PairAssignment {
                pair_id: token(rng),
                image_id: c.image_id.clone(),
                left_variant: left.clone(),
                right_variant: right.clone(),
                is_verification: false,
                correct_side: None,
            });
        }

        let entries = &config.manifest.entries;
        let n_ver = config.verification_pairs_per_session;
        // Distinct images while there are enough of them.
        let images: Vec<usize> = if n_ver <= entries.len() {
            sample(rng, entries.len(), n_ver).into_vec()
        } else {
            (0..n_ver).map(|_| rng.gen_range(0..entries.len())).collect()
        };
        let total = config.total_pairs();
        let mut positions = sample(rng, total, n_ver).into_vec();
        positions.sort_unstable();

        let mut verification: Vec<_> = images
            .into_iter()
            .map(|i| {
                let weak = config.verification_weak_variant.clone();
                let gt_left = rng.gen::<bool>();
                let (left, right, side) = if gt_left {
                    (GROUND_TRUTH.to_string(), weak, Side::Left)
                } else {
                    (weak, GROUND_TRUTH.to_string(), Side::Right)
                };
                PairAssignment {
                    pair_id: token(rng),
                    image_id: entries[i].image_id.clone(),
                    left_variant: left,
                    right_variant: right,
                    is_verification: true,
                    correct_side: Some(side),
                }
            })
            .collect();
        verification.reverse();
        let mut regular = regular.into_iter();
        let mut schedule = Vec::with_capacity(total);
        let mut next_ver = positions.into_iter().peekable();
        for k in 0..total {
            if next_ver.peek() == Some(&k) {
                next_ver.next();
                schedule.push(verification.pop().expect("one verification per position"));
            } else {
                schedule.push(regular.next().expect("regular pairs fill the rest"));
            }
        }
        Session {
            session_id,
            schedule,
            cursor: 0,
            created_at,
            completed: false,
        }
    }
}
