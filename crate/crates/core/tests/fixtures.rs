use std::path::PathBuf;

use banditroute::evalkit::{baseline_tsv, heterogeneity_matrix};
use banditroute::{load_dataset, parse_label, Label};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn parse_label_parity_fixture() {
    let text = std::fs::read_to_string(fixture("parse_label_parity.tsv")).unwrap();
    let mut n = 0;
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.splitn(3, '\t').collect();
        let completion: String = serde_json::from_str(cells[2]).unwrap();
        let expected: Label = cells[1].parse().unwrap();
        assert_eq!(parse_label(&completion), expected, "{}: {completion:?}", cells[0]);
        n += 1;
    }
    assert_eq!(n, 50);
}

#[test]
fn baseline_matches_golden() {
    let ds = load_dataset(fixture("tiny.jsonl")).unwrap();
    let golden = std::fs::read_to_string(fixture("golden/tiny_baseline.tsv")).unwrap();
    assert_eq!(baseline_tsv(&ds).unwrap(), golden);
}

#[test]
fn hetero_fixture_is_exact() {
    let ds = load_dataset(fixture("hetero_fixture.jsonl")).unwrap();
    assert_eq!(heterogeneity_matrix(&ds), vec![vec![0, 1], vec![1, 0]]);
}

#[test]
fn tiny_fixture_carries_text() {
    let ds = load_dataset(fixture("tiny.jsonl")).unwrap();
    assert_eq!(ds.len(), 8);
    assert_eq!(ds.encoder(), Some("hand-written"));
    assert!(ds.records().iter().all(|r| r.text.is_some()));
}
