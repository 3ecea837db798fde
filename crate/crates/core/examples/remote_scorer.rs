// Serve a scorer over HTTP and run recall against it; results match the
// in-process scorer exactly.

use mindref::scorer::ScorerServer;
use mindref::synthetic::{SyntheticCorpus, SyntheticSpec};
use mindref::{
    Artifacts, Codec, Corpus, MindRefConfig, NGramScorer, Pipeline, Recall, RemoteScorer,
};

pub fn run_example() -> Recall {
    let synthetic = SyntheticCorpus::generate(SyntheticSpec {
        documents: 10,
        tokens_per_doc: 150,
        ..SyntheticSpec::default()
    });
    let artifacts = Artifacts::build(Corpus::ingest(synthetic.records.clone()).expect("ingests"))
        .expect("builds");
    let local = NGramScorer::for_corpus(&artifacts.corpus);
    let hash = artifacts.corpus.codec().vocab_hash();

    let server =
        ScorerServer::spawn(local.clone(), hash.clone(), "127.0.0.1:0").expect("server binds");
    println!("scorer listening at {}", server.url());
    let remote = RemoteScorer::new(server.url(), hash);

    let config = MindRefConfig {
        beam1: 5,
        beam2: 5,
        prefix_len: 8,
        ..MindRefConfig::default()
    };
    let query = &synthetic.excerpt_queries(1, 10, 3)[0];
    let over_http = Pipeline::new(&artifacts, &remote, config.clone())
        .and_then(|p| p.recall(&query.query))
        .expect("remote recall");
    let in_process = Pipeline::new(&artifacts, &local, config)
        .and_then(|p| p.recall(&query.query))
        .expect("local recall");
    assert_eq!(over_http, in_process);

    for r in &over_http.references {
        println!(
            "{:.4}  {}  starts at token {}",
            r.combined, r.doc_id, r.start
        );
    }
    println!("expected {} at {}", query.doc_id, query.start);
    over_http
}

#[allow(dead_code)]
fn main() {
    run_example();
}
