// Scoring recall output against gold: R-Precision over pages and
// answer-in-context over the top passage.

use mindref::eval::{aggregate, score_item, Prediction};
use mindref::{ContextMetric, EvalItem, EvalReport};

fn item(query: &str, pages: &[&str], answers: &[&str]) -> EvalItem {
    EvalItem {
        query: query.into(),
        gold_provenance: pages.iter().map(|s| s.to_string()).collect(),
        gold_answers: answers.iter().map(|s| s.to_string()).collect(),
        ..EvalItem::default()
    }
}

fn predicted(pages: &[&str], passage: &str) -> Prediction {
    Prediction {
        doc_ids: pages.iter().map(|s| s.to_string()).collect(),
        top_passage: Some(passage.into()),
    }
}

pub fn run_example() -> EvalReport {
    let cases = [
        (
            item(
                "who wrote casino royale",
                &["Ian Fleming"],
                &["Ian Fleming"],
            ),
            predicted(
                &["Ian Fleming", "YG Entertainment"],
                "Casino Royale is a novel by IAN FLEMING.",
            ),
        ),
        (
            // two gold pages: precision in the top two is one half
            item(
                "what connects suffix arrays and the bwt",
                &["Suffix array", "Burrows-Wheeler transform"],
                &[],
            ),
            predicted(
                &["Suffix array", "Knuth-Morris-Pratt"],
                "A suffix array is a sorted array.",
            ),
        ),
        (
            item(
                "largest exchange in africa",
                &["Johannesburg Stock Exchange"],
                &["Johannesburg"],
            ),
            predicted(
                &["Greece GDP warrants"],
                "Warrants pay out if growth exceeds a threshold.",
            ),
        ),
    ];
    let rows = cases
        .iter()
        .map(|(gold, pred)| score_item(gold, pred))
        .collect();
    let report = aggregate(rows, ContextMetric::Answer).expect("items are evaluable");
    print!("{}", report.to_table());
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    report
}

#[allow(dead_code)]
fn main() {
    run_example();
}
