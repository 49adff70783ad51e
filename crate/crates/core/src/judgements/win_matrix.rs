use std::collections::BTreeSet;

use super::PairwiseJudgement;

/// Pairwise win counts of one image: `wins[i][j]` is how often variant `i`
/// was preferred over variant `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WinMatrix {
    pub image_id: String,
    pub variants: Vec<String>,
    pub wins: Vec<Vec<u64>>,
}

impl WinMatrix {
    /// Zero counts over the given variants, sorted.
    pub fn empty(image_id: impl Into<String>, variants: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let variants: BTreeSet<String> = variants.into_iter().map(Into::into).collect();
        let m = variants.len();
        Self {
            image_id: image_id.into(),
            variants: variants.into_iter().collect(),
            wins: vec![vec![0; m]; m],
        }
    }

    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn index_of(&self, variant: &str) -> Option<usize> {
        self.variants.binary_search_by(|v| v.as_str().cmp(variant)).ok()
    }

    pub fn record(&mut self, winner: &str, loser: &str) {
        let (i, j) = (
            self.index_of(winner).expect("known variant"),
            self.index_of(loser).expect("known variant"),
        );
        self.wins[i][j] += 1;
    }

    /// Comparisons between `i` and `j` in either direction.
    pub fn comparisons(&self, i: usize, j: usize) -> u64 {
        self.wins[i][j] + self.wins[j][i]
    }

    pub fn total(&self) -> u64 {
        self.wins.iter().flatten().sum()
    }
}

/// Counts wins for `image_id`; judgements of other images are ignored.
/// The side a variant was shown on does not matter.
pub fn build_win_matrix(judgements: &[PairwiseJudgement], image_id: &str) -> WinMatrix {
    let relevant: Vec<&PairwiseJudgement> = judgements.iter().filter(|j| j.image_id == image_id).collect();
    let mut matrix = WinMatrix::empty(
        image_id,
        relevant
            .iter()
            .flat_map(|j| [j.left_variant.as_str(), j.right_variant.as_str()]),
    );
    for j in relevant {
        matrix.record(j.winner(), j.loser());
    }
    matrix
}
