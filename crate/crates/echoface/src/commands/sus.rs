use std::path::Path;

use anyhow::{Context, Result};
use echoface_core::sus::{aggregate, GroupBy};

use super::Outcome;
use crate::config::Settings;
use crate::formats;

/// Scores every questionnaire and writes `sus_summary.json`.
pub fn run(settings: &Settings, input: &Path, group_by: Option<GroupBy>) -> Result<Outcome> {
    let rows = formats::read_sus(input)?;
    let parsed = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.parse().with_context(|| format!("{}: response {}", input.display(), i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let summary = aggregate(&parsed, group_by)?;
    let path = settings.out_dir()?.join("sus_summary.json");
    formats::write_json(&path, formats::SUS_SUMMARY, &summary)?;
    for (i, (r, _)) in parsed.iter().enumerate() {
        println!("response {}: {}", i + 1, r.score());
    }
    println!("mean SUS over {} responses: {:.2}", summary.count, summary.overall_mean);
    for g in &summary.groups {
        println!("  {}: {:.2} (n = {})", g.group, g.mean, g.count);
    }
    Ok(Outcome::Success)
}
