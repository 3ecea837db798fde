// Sweep the stage mixing weight over a synthetic corpus and print CSV rows.

use mindref::cli::{sweep, GoldRecord, SweepAxis, SweepRow, SWEEP_CSV_HEADER};
use mindref::synthetic::{SyntheticCorpus, SyntheticSpec};
use mindref::{Artifacts, ContextMetric, Corpus, MindRefConfig, NGramScorer};

pub fn run_example() -> Vec<SweepRow> {
    let synthetic = SyntheticCorpus::generate(SyntheticSpec {
        documents: 20,
        tokens_per_doc: 200,
        ..SyntheticSpec::default()
    });
    let artifacts = Artifacts::build(Corpus::ingest(synthetic.records.clone()).expect("ingests"))
        .expect("builds");
    let scorer = NGramScorer::for_corpus(&artifacts.corpus);
    let gold: Vec<GoldRecord> = synthetic
        .excerpt_queries(20, 10, 5)
        .iter()
        .map(|q| GoldRecord {
            id: Some(q.id.clone()),
            item: q.eval_item(),
        })
        .collect();

    let values: Vec<String> = ["0.0", "0.5", "0.8", "0.9", "0.95", "1.0"]
        .map(String::from)
        .to_vec();
    let rows = sweep(
        &artifacts,
        &scorer,
        &MindRefConfig::default(),
        &gold,
        SweepAxis::Alpha,
        &values,
        ContextMetric::Answer,
        4,
    )
    .expect("sweep runs");
    println!("{SWEEP_CSV_HEADER}");
    for row in &rows {
        println!("{}", row.to_csv());
    }
    rows
}

#[allow(dead_code)]
fn main() {
    run_example();
}
