//! The guide's code blocks, run as doc-tests.

#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/forecasting.md")]
pub mod forecasting {}

#[doc = include_str!("../../../book/src/tariff.md")]
pub mod tariff {}

#[doc = include_str!("../../../book/src/dispatch.md")]
pub mod dispatch {}

#[doc = include_str!("../../../book/src/plant.md")]
pub mod plant {}

#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

/// Chapters compiled above, in book order.
pub const CHAPTERS: [&str; 8] = [
    "introduction.md",
    "data.md",
    "forecasting.md",
    "tariff.md",
    "dispatch.md",
    "plant.md",
    "scenarios.md",
    "cli.md",
];

#[cfg(test)]
mod tests {
    use super::CHAPTERS;

    #[test]
    fn summary_lists_exactly_the_compiled_chapters() {
        let summary = include_str!("../../../book/src/SUMMARY.md");
        let linked: Vec<&str> = summary
            .lines()
            .filter_map(|l| l.split_once("](").map(|(_, rest)| rest.trim_end_matches(')')))
            .collect();
        assert_eq!(linked, CHAPTERS);
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../book/src");
        let mut on_disk: Vec<String> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.ends_with(".md") && n != "SUMMARY.md")
            .collect();
        on_disk.sort();
        let mut listed: Vec<String> = CHAPTERS.iter().map(|s| s.to_string()).collect();
        listed.sort();
        assert_eq!(on_disk, listed);
    }
}
