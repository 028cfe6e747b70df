//! Rule-based engagement indicator and score over a stream of predicted
//! expressions watched against content of a known genre.

use core::fmt;
use core::str::FromStr;

use crate::expression::ExpressionLabel;

const K: usize = ExpressionLabel::COUNT;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngagementError {
    #[error("prediction stream is empty")]
    EmptyStream,
    #[error("content length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("{changes} changes exceed what {predictions} predictions allow")]
    TooManyChanges { changes: u64, predictions: u64 },
    #[error("no expressions were counted")]
    ZeroTotal,
    #[error("mixed-genre content has no single score; use the distribution")]
    MixedGenre,
    #[error("unknown genre {0:?}")]
    UnknownGenre(alloc::string::String),
}

/// Content genre. Genres 0–3 pair with the expression of the same index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GenreId {
    Comedy,
    Tragedy,
    Anger,
    Horror,
    Mixed,
}

impl GenreId {
    pub const ALL: [GenreId; 5] = [GenreId::Comedy, GenreId::Tragedy, GenreId::Anger, GenreId::Horror, GenreId::Mixed];

    /// Genre id k; `None` for mixed content.
    pub fn index(self) -> Option<usize> {
        match self {
            GenreId::Comedy => Some(0),
            GenreId::Tragedy => Some(1),
            GenreId::Anger => Some(2),
            GenreId::Horror => Some(3),
            GenreId::Mixed => None,
        }
    }

    pub fn from_index(k: usize) -> Option<Self> {
        Self::ALL.get(k).copied().filter(|g| *g != GenreId::Mixed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GenreId::Comedy => "comedy",
            GenreId::Tragedy => "tragedy",
            GenreId::Anger => "anger",
            GenreId::Horror => "horror",
            GenreId::Mixed => "mixed",
        }
    }

    /// Expression the genre is meant to evoke.
    pub fn expression(self) -> Option<ExpressionLabel> {
        self.index().and_then(ExpressionLabel::from_index)
    }
}

impl fmt::Display for GenreId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GenreId {
    type Err = EngagementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|g| g.as_str() == lower)
            .ok_or_else(|| EngagementError::UnknownGenre(s.into()))
    }
}

/// Counts gathered over one viewing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionStats {
    /// Expression counts by [`ExpressionLabel::index`].
    pub counts: [u64; K],
    /// Number of expression changes.
    pub changes: u64,
    /// Content length, minutes.
    pub length_min: f64,
}

impl SessionStats {
    pub fn new(counts: [u64; K], changes: u64, length_min: f64) -> Result<Self, EngagementError> {
        let s = Self { counts, changes, length_min };
        s.validate()?;
        Ok(s)
    }

    /// Counts and change count of a prediction stream.
    pub fn from_labels(labels: &[ExpressionLabel], length_min: f64) -> Result<Self, EngagementError> {
        let changes = change_count(labels)?;
        let mut counts = [0u64; K];
        labels.iter().for_each(|l| counts[l.index()] += 1);
        Self::new(counts, changes, length_min)
    }

    pub fn validate(&self) -> Result<(), EngagementError> {
        if !(self.length_min.is_finite() && self.length_min > 0.0) {
            return Err(EngagementError::InvalidLength(self.length_min));
        }
        let total = self.total();
        if total > 0 && self.changes > total - 1 {
            return Err(EngagementError::TooManyChanges { changes: self.changes, predictions: total });
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the most frequent expression. Ties go to the genre's own
    /// index when it is among the maxima, then to neutral, then to the
    /// lowest index.
    pub fn dominant(&self, genre: GenreId) -> usize {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let is_max = |i: usize| self.counts[i] == max;
        match genre.index() {
            Some(k) if is_max(k) => k,
            _ if is_max(1) => 1,
            _ => (0..K).find(|&i| is_max(i)).unwrap_or(0),
        }
    }
}

/// Number of adjacent unequal pairs.
pub fn change_count(labels: &[ExpressionLabel]) -> Result<u64, EngagementError> {
    if labels.is_empty() {
        return Err(EngagementError::EmptyStream);
    }
    Ok(labels.windows(2).filter(|w| w[0] != w[1]).count() as u64)
}

/// Rule that decided the indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Rule {
    /// The dominant expression matches the genre.
    DominantMatchesGenre,
    /// Neutral dominates but the genre's expression beats the average of
    /// the others.
    GenreAboveAverage,
    /// Neutral dominates but expressions change often.
    FrequentChanges,
    /// None of the above.
    NotEngaged,
    /// Mixed content; no indicator.
    Mixed,
}

impl Rule {
    pub fn number(self) -> u8 {
        match self {
            Rule::DominantMatchesGenre => 1,
            Rule::GenreAboveAverage => 2,
            Rule::FrequentChanges => 3,
            Rule::NotEngaged => 4,
            Rule::Mixed => 5,
        }
    }
}

/// Changes per minute above which a neutral viewer still counts as engaged.
pub const CHANGE_RATE_THRESHOLD: f64 = 0.3;

/// Engagement indicator: `Some(true)` / `Some(false)`, or `None` for mixed
/// content. Rules are tried in order and the first match decides.
pub fn indicator(stats: &SessionStats, genre: GenreId) -> (Option<bool>, Rule) {
    let Some(k) = genre.index() else {
        return (None, Rule::Mixed);
    };
    let e = stats.counts.map(|c| c as f64);
    let top = stats.dominant(genre);
    if top == k {
        return (Some(true), Rule::DominantMatchesGenre);
    }
    if top == 1 {
        let avg = if k == 1 { e.iter().sum::<f64>() / 4.0 } else { (e[0] + e[2] + e[3]) / 3.0 };
        if e[k] > avg {
            return (Some(true), Rule::GenreAboveAverage);
        }
        if stats.changes as f64 > CHANGE_RATE_THRESHOLD * stats.length_min {
            return (Some(true), Rule::FrequentChanges);
        }
    }
    (Some(false), Rule::NotEngaged)
}

/// Engagement score in percent and whether its denominator was zero.
///
/// For tragedy the share of neutral among all expressions; otherwise the
/// share of the genre's expression among the non-neutral ones.
pub fn score(stats: &SessionStats, genre: GenreId) -> Result<(f64, bool), EngagementError> {
    let k = genre.index().ok_or(EngagementError::MixedGenre)?;
    let e = stats.counts;
    let den = if k == 1 { e.iter().sum::<u64>() } else { e[0] + e[2] + e[3] };
    if den == 0 {
        return Ok((0.0, true));
    }
    Ok(((100.0 * e[k] as f64 / den as f64).clamp(0.0, 100.0), false))
}

/// Percentage of each expression.
pub fn mixed_distribution(stats: &SessionStats) -> Result<[f64; K], EngagementError> {
    let total = stats.total();
    if total == 0 {
        return Err(EngagementError::ZeroTotal);
    }
    Ok(stats.counts.map(|c| 100.0 * c as f64 / total as f64))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EngagementReport {
    pub genre: GenreId,
    pub stats: SessionStats,
    pub indicator: Option<bool>,
    pub rule: Rule,
    pub rule_fired: u8,
    /// `None` for mixed content.
    pub score: Option<f64>,
    /// Percentage per expression; `None` when nothing was counted.
    pub distribution: Option<[f64; K]>,
    /// The score's denominator was zero.
    pub degenerate: bool,
}

impl EngagementReport {
    pub fn new(stats: &SessionStats, genre: GenreId) -> Result<Self, EngagementError> {
        stats.validate()?;
        let (ind, rule) = indicator(stats, genre);
        let (score, degenerate) = match genre {
            GenreId::Mixed => (None, false),
            g => {
                let (s, d) = score(stats, g)?;
                (Some(s), d)
            }
        };
        Ok(Self {
            genre,
            stats: *stats,
            indicator: ind,
            rule,
            rule_fired: rule.number(),
            score,
            distribution: mixed_distribution(stats).ok(),
            degenerate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ExpressionLabel::*;

    fn st(counts: [u64; 4], changes: u64, l: f64) -> SessionStats {
        SessionStats::new(counts, changes, l).unwrap()
    }

    #[test]
    fn worked_indicator_examples() {
        assert_eq!(indicator(&st([10, 2, 1, 0], 0, 1.0), GenreId::Comedy), (Some(true), Rule::DominantMatchesGenre));
        assert_eq!(indicator(&st([3, 20, 1, 1], 1, 30.0), GenreId::Comedy), (Some(true), Rule::GenreAboveAverage));
        assert_eq!(indicator(&st([0, 50, 0, 0], 2, 5.0), GenreId::Horror), (Some(true), Rule::FrequentChanges));
        assert_eq!(indicator(&st([5, 30, 0, 0], 1, 30.0), GenreId::Anger), (Some(false), Rule::NotEngaged));
        assert_eq!(indicator(&st([5, 30, 0, 0], 1, 30.0), GenreId::Mixed), (None, Rule::Mixed));
    }

    #[test]
    fn worked_score_examples() {
        let (s, d) = score(&st([10, 5, 1, 0], 0, 1.0), GenreId::Comedy).unwrap();
        assert!((s - 1000.0 / 11.0).abs() < 1e-12 && !d);
        assert_eq!(score(&st([0, 10, 0, 0], 0, 1.0), GenreId::Tragedy).unwrap(), (100.0, false));
        assert_eq!(score(&st([0, 10, 0, 0], 0, 1.0), GenreId::Anger).unwrap(), (0.0, true));
        assert_eq!(score(&st([0, 10, 0, 0], 0, 1.0), GenreId::Mixed), Err(EngagementError::MixedGenre));
    }

    #[test]
    fn tie_prefers_genre_then_neutral() {
        assert_eq!(st([5, 5, 0, 0], 0, 1.0).dominant(GenreId::Comedy), 0);
        assert_eq!(st([5, 5, 5, 0], 0, 1.0).dominant(GenreId::Horror), 1);
        assert_eq!(st([0, 1, 5, 5], 0, 1.0).dominant(GenreId::Comedy), 2);
    }

    #[test]
    fn changes() {
        assert_eq!(change_count(&[Happy, Happy, Happy]).unwrap(), 0);
        assert_eq!(change_count(&[Happy, Surprise, Happy, Surprise]).unwrap(), 3);
        assert_eq!(change_count(&[]), Err(EngagementError::EmptyStream));
        assert!(SessionStats::new([1, 1, 0, 0], 2, 1.0).is_err());
        assert!(SessionStats::new([1, 1, 0, 0], 1, 0.0).is_err());
    }

    #[test]
    fn distribution() {
        assert_eq!(mixed_distribution(&st([1, 1, 1, 1], 0, 1.0)).unwrap(), [25.0; 4]);
        assert_eq!(mixed_distribution(&st([0, 10, 0, 0], 0, 1.0)).unwrap(), [0.0, 100.0, 0.0, 0.0]);
        assert_eq!(mixed_distribution(&st([0; 4], 0, 1.0)), Err(EngagementError::ZeroTotal));
    }

    #[test]
    fn genre_parsing() {
        assert_eq!("Horror".parse::<GenreId>().unwrap(), GenreId::Horror);
        assert!("drama".parse::<GenreId>().is_err());
        assert_eq!(GenreId::from_index(4), None);
        assert_eq!(GenreId::Anger.expression(), Some(Angry));
    }

    proptest! {
        #[test]
        fn scaling_counts_changes_nothing(
            counts in proptest::array::uniform4(0u64..200),
            changes in 0u64..50,
            l in 0.5f64..120.0,
            factor in 1u64..20,
            k in 0usize..5,
        ) {
            let total: u64 = counts.iter().sum();
            prop_assume!(total > changes);
            let g = GenreId::ALL[k];
            let a = st(counts, changes, l);
            let b = st(counts.map(|c| c * factor), changes, l);
            prop_assert_eq!(indicator(&a, g), indicator(&b, g));
            if g != GenreId::Mixed {
                let (sa, _) = score(&a, g).unwrap();
                let (sb, _) = score(&b, g).unwrap();
                prop_assert!((sa - sb).abs() < 1e-9);
                prop_assert!((0.0..=100.0).contains(&sa));
            } else {
                prop_assert_eq!(indicator(&a, g).0, None);
            }
        }

        #[test]
        fn distribution_sums_to_100(counts in proptest::array::uniform4(0u64..1000)) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let d = mixed_distribution(&st(counts, 0, 1.0)).unwrap();
            prop_assert!((d.iter().sum::<f64>() - 100.0).abs() < 0.01);
        }
    }
}
