// Beam search restricted to corpus titles, scored by the n-gram stand-in.

use mindref::{
    constrained_beam_search, BeamConfig, Codec, Corpus, MindRefConfig, NGramScorer, TitleTrie,
};

pub fn run_example() -> Vec<(String, f64)> {
    let corpus = Corpus::ingest_reader(std::io::Cursor::new(include_str!(
        "../tests/fixtures/kilt_sample.jsonl"
    )))
    .expect("fixture ingests");
    let trie = TitleTrie::build(&corpus).expect("trie builds");
    let scorer = NGramScorer::for_corpus(&corpus);
    let template = MindRefConfig::default()
        .title_prompt()
        .expect("builtin template");
    let prompt = template.render_tokens(
        corpus.codec(),
        "which stock exchange is the largest in Africa",
    );

    let config = BeamConfig::new(5, trie.max_depth() + 1).expect("positive sizes");
    let out =
        constrained_beam_search(&scorer, &prompt, trie.cursor(), &config).expect("search runs");
    let ranked: Vec<(String, f64)> = out
        .ranked
        .iter()
        .map(|s| {
            (
                corpus
                    .codec()
                    .decode(&s.tokens)
                    .expect("title tokens decode"),
                s.score,
            )
        })
        .collect();
    for (title, score) in &ranked {
        println!("{score:>9.4}  {title}");
    }
    println!(
        "{} scorer calls, {} dead hypotheses",
        out.scorer_calls, out.dead_ends
    );
    ranked
}

#[allow(dead_code)]
fn main() {
    run_example();
}
