// Title prefix tree: which tokens may follow a partial title, first with a
// subword codec, then with the corpus word codec.

use mindref::{Codec, Corpus, PieceCodec, SourceRecord, TitleTrie, TokenId};

pub fn run_example() -> Vec<String> {
    let pieces = PieceCodec::new(["Testament", "##ary", "and", "Capacity", "Covenant"]);
    let titles = ["Testamentary Capacity", "Testament and Covenant"];
    let trie = TitleTrie::from_titles(titles.iter().map(|t| (pieces.encode(t), t.to_string())))
        .expect("titles are distinct");
    let next: Vec<String> = trie
        .allowed_next(&pieces.encode("Testament"))
        .iter()
        .map(|&t| pieces.surface(t).unwrap_or("?").to_string())
        .collect();
    println!("after \"Testament\": {next:?}");

    // word-level titles straight from a corpus; nested titles offer END too
    let corpus = Corpus::ingest(
        [
            ("a", "Ian Fleming"),
            ("b", "Ian Fleming bibliography"),
            ("c", "Ian Thorpe"),
        ]
        .map(|(id, title)| SourceRecord {
            id: id.into(),
            title: title.into(),
            text: vec![format!("About {title}.")],
        }),
    )
    .expect("corpus ingests");
    let trie = TitleTrie::build(&corpus).expect("trie builds");
    for prefix in ["Ian", "Ian Fleming"] {
        let allowed: Vec<String> = trie
            .allowed_next(&corpus.encode(prefix))
            .iter()
            .map(|&t| {
                if t == TokenId::END {
                    "<end>".into()
                } else {
                    corpus.codec().surface(t).unwrap_or("?").to_string()
                }
            })
            .collect();
        println!("after {prefix:?}: {allowed:?}");
    }
    println!(
        "{} nodes, {} titles, depth {}",
        trie.node_count(),
        trie.terminal_count(),
        trie.max_depth()
    );
    next
}

#[allow(dead_code)]
fn main() {
    run_example();
}
