//! Every runnable example still runs and shows what it claims to.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));
        }
    };
}

example!(alpha_sweep);
example!(build_and_load);
example!(bwt_cabac);
example!(constrained_beam);
example!(evaluate);
example!(fm_successors);
example!(remote_scorer);
example!(sprl_recall);
example!(title_trie);

#[test]
fn bwt_cabac_columns() {
    assert_eq!(
        bwt_cabac::run_example(),
        ("CCBAA$".to_string(), "$AABCC".to_string())
    );
}

#[test]
fn title_trie_testament() {
    assert_eq!(title_trie::run_example(), vec!["##ary", "and"]);
}

#[test]
fn fm_successor_sets() {
    let (after_the, after_greece) = fm_successors::run_example();
    assert_eq!(after_the, vec!["christ", "Greece", "Johan"]);
    assert_eq!(after_greece, vec!["part", "G", "U"]);
}

#[test]
fn constrained_beam_yields_corpus_titles() {
    let ranked = constrained_beam::run_example();
    assert_eq!(ranked.len(), 5);
    assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
}

#[test]
fn build_and_load_round_trips() {
    assert_eq!(build_and_load::run_example().documents, 10);
}

#[test]
fn evaluate_report() {
    let r = evaluate::run_example();
    assert_eq!((r.r_precision_mean, r.in_context_rate), (50.0, 50.0));
}

#[test]
fn alpha_sweep_rows() {
    assert_eq!(alpha_sweep::run_example().len(), 6);
}

#[test]
fn remote_scorer_recall() {
    assert!(!remote_scorer::run_example().references.is_empty());
}

#[test]
fn sprl_recall_is_perfect() {
    let r = sprl_recall::run_example();
    assert_eq!((r.r_precision_mean, r.in_context_rate), (100.0, 100.0));
}
