//! System Usability Scale scoring and group means.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SusError {
    #[error("question {question} has answer {value}; answers must be 1 to 5")]
    OutOfRange { question: usize, value: u8 },
    #[error("no responses")]
    Empty,
}

/// Answers to Q1..Q10, each 1 (strongly disagree) to 5 (strongly agree).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SusResponse {
    answers: [u8; 10],
}

impl SusResponse {
    pub fn new(answers: [u8; 10]) -> Result<Self, SusError> {
        if let Some(i) = answers.iter().position(|a| !(1..=5).contains(a)) {
            return Err(SusError::OutOfRange { question: i + 1, value: answers[i] });
        }
        Ok(Self { answers })
    }

    pub fn answers(&self) -> &[u8; 10] {
        &self.answers
    }

    /// 2.5 · Σ [(odd − 1) + (5 − even)], in [0, 100] and a multiple of 2.5.
    pub fn score(&self) -> f64 {
        let sum: u32 = self
            .answers
            .iter()
            .enumerate()
            .map(|(i, &a)| if i % 2 == 0 { a as u32 - 1 } else { 5 - a as u32 })
            .sum();
        2.5 * sum as f64
    }
}

pub fn sus_score(r: &SusResponse) -> f64 {
    r.score()
}

/// Demographic attribute to group by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GroupBy {
    Age,
    Gender,
    Profession,
    Country,
}

impl GroupBy {
    pub const ALL: [GroupBy; 4] = [GroupBy::Age, GroupBy::Gender, GroupBy::Profession, GroupBy::Country];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Age => "age",
            GroupBy::Gender => "gender",
            GroupBy::Profession => "profession",
            GroupBy::Country => "country",
        }
    }
}

/// A response with optional demographics.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Respondent {
    pub age: Option<String>,
    pub gender: Option<String>,
    pub profession: Option<String>,
    pub country: Option<String>,
}

impl Respondent {
    pub fn attribute(&self, by: GroupBy) -> Option<&str> {
        match by {
            GroupBy::Age => self.age.as_deref(),
            GroupBy::Gender => self.gender.as_deref(),
            GroupBy::Profession => self.profession.as_deref(),
            GroupBy::Country => self.country.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupMean {
    pub group: String,
    pub count: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SusSummary {
    pub count: usize,
    pub overall_mean: f64,
    pub group_by: Option<GroupBy>,
    /// Sorted by group name. Respondents without the attribute are grouped
    /// under "unknown".
    pub groups: Vec<GroupMean>,
}

pub fn aggregate(responses: &[(SusResponse, Respondent)], group_by: Option<GroupBy>) -> Result<SusSummary, SusError> {
    if responses.is_empty() {
        return Err(SusError::Empty);
    }
    let overall_mean = responses.iter().map(|(r, _)| r.score()).sum::<f64>() / responses.len() as f64;
    let groups = match group_by {
        None => Vec::new(),
        Some(by) => {
            let mut acc: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
            for (r, who) in responses {
                let e = acc.entry(who.attribute(by).unwrap_or("unknown")).or_default();
                e.0 += 1;
                e.1 += r.score();
            }
            acc.into_iter()
                .map(|(g, (count, sum))| GroupMean { group: g.into(), count, mean: sum / count as f64 })
                .collect()
        }
    };
    Ok(SusSummary { count: responses.len(), overall_mean, group_by, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(a: [u8; 10]) -> SusResponse {
        SusResponse::new(a).unwrap()
    }

    #[test]
    fn boundary_patterns() {
        assert_eq!(r([5, 1, 5, 1, 5, 1, 5, 1, 5, 1]).score(), 100.0);
        assert_eq!(r([3; 10]).score(), 50.0);
        assert_eq!(r([1, 5, 1, 5, 1, 5, 1, 5, 1, 5]).score(), 0.0);
        assert_eq!(SusResponse::new([3, 3, 0, 3, 3, 3, 3, 3, 3, 3]), Err(SusError::OutOfRange { question: 3, value: 0 }));
        assert!(SusResponse::new([6; 10]).is_err());
    }

    #[test]
    fn group_means() {
        let who = |age: &str| Respondent { age: Some(age.into()), ..Respondent::default() };
        let a = r([3; 10]);
        let b = r([5, 1, 5, 1, 5, 1, 5, 1, 5, 1]);
        let c = r([4, 2, 4, 2, 4, 2, 4, 2, 4, 2]);
        let s = aggregate(&[(a, who("18-24")), (b, who("25-34")), (c, who("18-24"))], Some(GroupBy::Age)).unwrap();
        assert_eq!(s.count, 3);
        assert!((s.overall_mean - (50.0 + 100.0 + 75.0) / 3.0).abs() < 1e-12);
        assert_eq!(s.groups[0], GroupMean { group: "18-24".into(), count: 2, mean: 62.5 });
        assert_eq!(s.groups[1].mean, 100.0);
        let single = aggregate(&[(a, Respondent::default())], Some(GroupBy::Country)).unwrap();
        assert_eq!(single.groups[0].group, "unknown");
        assert_eq!(single.groups[0].mean, 50.0);
        assert_eq!(aggregate(&[], None), Err(SusError::Empty));
    }

    proptest! {
        #[test]
        fn multiple_of_2_5_and_monotone(
            answers in proptest::array::uniform10(1u8..=5),
            q in 0usize..10,
        ) {
            let base = r(answers);
            let s = base.score();
            prop_assert!((0.0..=100.0).contains(&s));
            prop_assert_eq!((s / 2.5).fract(), 0.0);
            if answers[q] < 5 {
                let mut up = answers;
                up[q] += 1;
                let t = r(up).score();
                if q % 2 == 0 { prop_assert!(t >= s) } else { prop_assert!(t <= s) }
            }
        }
    }
}
