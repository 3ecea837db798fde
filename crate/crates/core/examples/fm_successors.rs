// Successor sets under the union of several documents' FM-indexes, as used
// to constrain passage-prefix decoding.

use std::sync::Arc;

use mindref::{BwtIndex, Codec, DocSetConstraint, PieceCodec, TokenId};

pub fn run_example() -> (Vec<String>, Vec<String>) {
    let codec = PieceCodec::new([
        "The",
        "christ",
        "##ening",
        "was",
        "held",
        "in",
        "Greece",
        "part",
        "of",
        "the",
        "museum",
        "G",
        "##DP",
        "warrants",
        "are",
        "not",
        "technically",
        "bonds",
        "as",
        "investors",
        "do",
        "Johan",
        "##nesburg",
        "office",
        "reported",
        "U",
        "##K",
        "deal",
    ]);
    let docs = [
        (
            "museum",
            "The christening was held in The Greece part of the museum",
        ),
        (
            "warrants",
            "The Greece GDP warrants are not technically bonds as investors do",
        ),
        (
            "office",
            "The Johannesburg office reported The Greece UK deal",
        ),
    ];
    let constraint = DocSetConstraint::new(
        docs.iter()
            .map(|(id, text)| {
                (
                    id.to_string(),
                    Arc::new(BwtIndex::build(&codec.encode(text)).expect("indexes")),
                )
            })
            .collect(),
    )
    .expect("reversed indexes");

    let show = |c: &DocSetConstraint| -> Vec<String> {
        c.allowed_successors()
            .iter()
            .map(|&t| codec.surface(t).unwrap_or("?").to_string())
            .collect()
    };
    let id = |s: &str| codec.token_id(s).expect("known piece");

    let after_the = constraint.advance(id("The"));
    let after_greece = after_the.advance(id("Greece"));
    let (a, b) = (show(&after_the), show(&after_greece));
    println!(
        "after \"The\":        {a:?}  live in {:?}",
        after_the.live_documents()
    );
    println!(
        "after \"The Greece\": {b:?}  live in {:?}",
        after_greece.live_documents()
    );
    let gdp = after_greece.advance(id("G")).advance(id("##DP"));
    println!(
        "after \"The Greece GDP\": {:?} live in {:?}",
        show(&gdp),
        gdp.live_documents()
    );
    println!(
        "\"The museum\" is live: {}",
        constraint
            .advance(id("The"))
            .advance(id("museum"))
            .is_live()
    );
    assert!(!after_greece.advance(TokenId(9999)).is_live());
    (a, b)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
