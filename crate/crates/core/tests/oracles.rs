//! Randomized equivalence against brute-force oracles.

mod support;

use support::*;

#[test]
fn suffix_array_matches_naive_sort() {
    let stats = suffix_array_suite(0x5a, 1000).unwrap();
    assert_eq!(stats.instances, 1000);
}

#[test]
fn fm_index_matches_naive_scan() {
    let stats = fm_index_suite(0xf3, 1000).unwrap();
    assert_eq!(stats.instances, 1000);
}

#[test]
fn trie_matches_prefix_filter() {
    let stats = trie_suite(0x77, 1000).unwrap();
    assert_eq!(stats.instances, 1000);
}

#[test]
fn inverse_bwt_oracle_is_sound() {
    // the oracle itself, on a text whose BWT is known by hand: CABAC
    let bwt = ids(&[5, 5, 4, 3, 3, 1]);
    assert_eq!(inverse_bwt(&bwt), ids(&[5, 3, 4, 3, 5]));
}

#[test]
fn brute_doc_allowed_agrees_with_constraint_on_samples() {
    let mut r = rng(9);
    for _ in 0..200 {
        let docs = random_docs(&mut r, 3, 4, 30);
        let d = &docs[0];
        let s = rand::RngExt::random_range(&mut r, 0..d.len());
        let e = rand::RngExt::random_range(&mut r, s..=d.len());
        assert!(constraint_agrees(&docs, &d[s..e]));
    }
}
