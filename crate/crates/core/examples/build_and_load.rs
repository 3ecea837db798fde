// Build artifacts from a JSON-lines corpus, write them to disk and load them
// back.

use mindref::store::MANIFEST_FILE;
use mindref::{Artifacts, Corpus};

pub fn run_example() -> mindref::store::BuildSummary {
    let fixture = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/kilt_sample.jsonl"
    );
    let corpus = Corpus::ingest_path(fixture.as_ref()).expect("fixture ingests");
    let artifacts = Artifacts::build(corpus).expect("artifacts build");

    let dir = tempfile::tempdir().expect("temp dir");
    let summary = artifacts.save(dir.path()).expect("artifacts save");
    println!(
        "documents: {}\nvocabulary size: {}\nindex bytes: {}",
        summary.documents, summary.vocab_size, summary.index_bytes
    );
    let manifest =
        std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).expect("manifest written");
    println!("manifest: {} bytes", manifest.len());

    let loaded = Artifacts::load(dir.path()).expect("artifacts load");
    assert_eq!(loaded.corpus, artifacts.corpus);
    assert_eq!(loaded.trie.node_count(), artifacts.trie.node_count());
    for doc in loaded.corpus.documents().iter().take(3) {
        println!(
            "{:>5}  {:<28} {} tokens",
            doc.doc_id,
            doc.title,
            doc.body_tokens.len()
        );
    }
    summary
}

#[allow(dead_code)]
fn main() {
    run_example();
}
