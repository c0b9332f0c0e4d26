use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use refnet_core::corpus::{AuthorRecord, AuthorTable, MatchPolicy};
use refnet_core::dataset::{
    apply_temporal_filter, restrict_to_validated, summarize, ReferenceSet, Variant,
};
use refnet_core::matcher::ReferenceRecord;

mod common;

fn authors(lives: &[(i32, i32)]) -> AuthorTable {
    let records = lives
        .iter()
        .enumerate()
        .map(|(i, &(b, d))| AuthorRecord {
            author_id: format!("a{i:02}"),
            display_name: format!("Author {i}"),
            match_name: format!("Name{i}"),
            birth_year: b,
            death_year: d,
            policy: MatchPolicy::Normal,
        })
        .collect();
    AuthorTable::from_records(records).unwrap()
}

fn record(from: usize, to: usize, offset: usize) -> ReferenceRecord {
    ReferenceRecord {
        citing_author_id: format!("a{from:02}"),
        cited_author_id: format!("a{to:02}"),
        text_id: format!("pg{from}"),
        offset,
        context: "ctx".into(),
    }
}

#[test]
fn thousand_random_records_leave_no_anachronism() {
    let mut rng = common::rng(11);
    let lives: Vec<(i32, i32)> = (0..30)
        .map(|_| {
            let b = rng.random_range(-500..1900);
            (b, b + rng.random_range(20..90))
        })
        .collect();
    let table = authors(&lives);
    let records: Vec<_> = (0..1000)
        .map(|i| {
            let from = rng.random_range(0..30);
            let mut to = rng.random_range(0..29);
            if to >= from {
                to += 1;
            }
            record(from, to, i)
        })
        .collect();
    let set = ReferenceSet::expanded(records, &table).unwrap();
    let filtered = apply_temporal_filter(&set, &table).unwrap();
    assert_eq!(filtered.variant, Variant::Filtered);
    let year = |id: &str| table.get(id).unwrap();
    let bad = filtered
        .records
        .iter()
        .filter(|r| year(&r.cited_author_id).birth_year >= year(&r.citing_author_id).death_year)
        .count();
    assert_eq!(bad, 0);
    // Everything dropped was an anachronism.
    let kept: BTreeSet<_> = filtered.records.iter().map(|r| r.offset).collect();
    for r in set.records.iter().filter(|r| !kept.contains(&r.offset)) {
        assert!(year(&r.cited_author_id).birth_year >= year(&r.citing_author_id).death_year);
    }
    assert!(filtered.records.len() < set.records.len());
    let again = apply_temporal_filter(&filtered, &table).unwrap();
    assert_eq!(again.records, filtered.records);
}

#[test]
fn birth_in_death_year_is_dropped() {
    let table = authors(&[(1600, 1650), (1650, 1700), (1649, 1700)]);
    let set = ReferenceSet::expanded(vec![record(0, 1, 0), record(0, 2, 1)], &table).unwrap();
    let f = apply_temporal_filter(&set, &table).unwrap();
    assert_eq!(f.records, vec![record(0, 2, 1)]);
}

#[test]
fn main_restriction_and_summary() {
    let table = authors(&[(1, 80), (2, 90), (3, 70)]);
    let set = ReferenceSet::expanded(
        vec![
            record(0, 1, 0),
            record(1, 0, 1),
            record(2, 0, 2),
            record(0, 1, 3),
        ],
        &table,
    )
    .unwrap();
    let validated: BTreeSet<String> = ["a00", "a01"].map(String::from).into();
    let main = restrict_to_validated(&set, &validated, &table).unwrap();
    assert_eq!(main.records.len(), 3);
    assert_eq!(main.author_universe, validated);
    let s = summarize(&main);
    assert_eq!(s.total_references, 3);
    assert_eq!(s.per_author["a00"].outgoing, 2);
    assert_eq!(s.per_author["a01"].incoming, 2);
    let unknown: BTreeSet<String> = ["zz".to_string()].into();
    assert!(restrict_to_validated(&set, &unknown, &table).is_err());
    assert!(restrict_to_validated(&set, &BTreeSet::new(), &table).is_err());
}

proptest! {
    #[test]
    fn filter_is_a_subset_and_idempotent(
        lives in prop::collection::vec((-300i32..1900, 1i32..100), 2..12),
        picks in prop::collection::vec((0usize..100, 0usize..100), 0..200),
    ) {
        let lives: Vec<_> = lives.into_iter().map(|(b, span)| (b, b + span)).collect();
        let n = lives.len();
        let table = authors(&lives);
        let records: Vec<_> = picks
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| a % n != b % n)
            .map(|(i, (a, b))| record(a % n, b % n, i))
            .collect();
        let set = ReferenceSet::expanded(records, &table).unwrap();
        let once = apply_temporal_filter(&set, &table).unwrap();
        let twice = apply_temporal_filter(&once, &table).unwrap();
        prop_assert_eq!(&once.records, &twice.records);
        prop_assert!(once.records.iter().all(|r| set.records.contains(r)));
        for r in &once.records {
            let cited = table.get(&r.cited_author_id).unwrap();
            let citing = table.get(&r.citing_author_id).unwrap();
            prop_assert!(cited.birth_year < citing.death_year);
        }
    }
}
