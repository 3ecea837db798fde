// End-to-end recall on a seeded synthetic corpus: each query is a verbatim
// excerpt of one document; prints per-query hits and the overall
// R-Precision / Answer-in-Context.

use std::time::Instant;

use mindref::cli::{evaluate_records, recall_batch, GoldRecord, QueryRecord};
use mindref::synthetic::{SyntheticCorpus, SyntheticSpec};
use mindref::{Artifacts, ContextMetric, Corpus, MindRefConfig, NGramScorer};

pub fn run_example() -> mindref::EvalReport {
    let synthetic = SyntheticCorpus::generate(SyntheticSpec::default());
    let corpus = Corpus::ingest(synthetic.records.clone()).expect("synthetic corpus ingests");
    let artifacts = Artifacts::build(corpus).expect("artifacts build");
    let scorer = NGramScorer::for_corpus(&artifacts.corpus);

    let excerpts = synthetic.excerpt_queries(100, 12, 11);
    let queries: Vec<QueryRecord> = excerpts
        .iter()
        .map(|q| QueryRecord {
            id: q.id.clone(),
            query: q.query.clone(),
        })
        .collect();
    let gold: Vec<GoldRecord> = excerpts
        .iter()
        .map(|q| GoldRecord {
            id: Some(q.id.clone()),
            item: q.eval_item(),
        })
        .collect();

    let started = Instant::now();
    let records = recall_batch(&artifacts, &scorer, &MindRefConfig::default(), &queries, 4)
        .expect("recall succeeds");
    let report =
        evaluate_records(&records, &gold, ContextMetric::Answer).expect("gold is evaluable");
    for (q, r) in excerpts.iter().zip(&records).take(5) {
        let top = &r.references[0];
        println!(
            "{} gold={} got={} start={} (excerpt at {})",
            q.id, q.doc_id, top.doc_id, top.start, q.start
        );
    }
    let misses: Vec<_> = excerpts
        .iter()
        .zip(&records)
        .filter(|(q, r)| r.references[0].doc_id != q.doc_id)
        .map(|(q, _)| q.id.clone())
        .collect();
    println!("misses: {misses:?}");
    print!("{}", report.to_table());
    println!("{} queries in {:.1?}", records.len(), started.elapsed());
    report
}

#[allow(dead_code)]
fn main() {
    run_example();
}
