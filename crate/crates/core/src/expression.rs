use core::fmt;
use core::str::FromStr;

/// The four expression classes. Sadness and a neutral face are treated as one
/// class.
///
/// [`index`](Self::index) follows the engagement-rule convention:
/// 0 = Happy, 1 = Sad/Neutral, 2 = Angry, 3 = Surprise. That index pairs each
/// class with the genre of the same id (comedy, tragedy, anger, horror).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ExpressionLabel {
    Happy,
    SadNeutral,
    Angry,
    Surprise,
}

impl ExpressionLabel {
    pub const COUNT: usize = 4;

    /// All labels in index order.
    pub const ALL: [ExpressionLabel; 4] = [
        ExpressionLabel::Happy,
        ExpressionLabel::SadNeutral,
        ExpressionLabel::Angry,
        ExpressionLabel::Surprise,
    ];

    pub const fn index(self) -> usize {
        match self {
            ExpressionLabel::Happy => 0,
            ExpressionLabel::SadNeutral => 1,
            ExpressionLabel::Angry => 2,
            ExpressionLabel::Surprise => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            ExpressionLabel::Happy => "happy",
            ExpressionLabel::SadNeutral => "sad_neutral",
            ExpressionLabel::Angry => "angry",
            ExpressionLabel::Surprise => "surprise",
        }
    }
}

impl fmt::Display for ExpressionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown expression label")]
pub struct ParseLabelError;

impl FromStr for ExpressionLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let matches = |name: &str| s.eq_ignore_ascii_case(name);
        if matches("happy") || matches("happiness") {
            Ok(ExpressionLabel::Happy)
        } else if matches("sad_neutral")
            || matches("sad")
            || matches("neutral")
            || matches("sadness")
            || matches("sadneutral")
        {
            Ok(ExpressionLabel::SadNeutral)
        } else if matches("angry") || matches("anger") {
            Ok(ExpressionLabel::Angry)
        } else if matches("surprise") || matches("surprised") {
            Ok(ExpressionLabel::Surprise)
        } else {
            Err(ParseLabelError)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        for (i, l) in ExpressionLabel::ALL.iter().enumerate() {
            assert_eq!(l.index(), i);
            assert_eq!(ExpressionLabel::from_index(i), Some(*l));
            assert_eq!(l.as_str().parse::<ExpressionLabel>(), Ok(*l));
        }
        assert_eq!(ExpressionLabel::from_index(4), None);
    }

    #[test]
    fn parses_aliases() {
        assert_eq!("Neutral".parse(), Ok(ExpressionLabel::SadNeutral));
        assert_eq!("anger".parse(), Ok(ExpressionLabel::Angry));
        assert!("bored".parse::<ExpressionLabel>().is_err());
    }
}
