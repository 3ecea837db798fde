// Burrows-Wheeler transform of "CABAC": rotation table, L and F columns,
// backward search and locate.

use mindref::{BwtIndex, TokenId};

fn letter(t: TokenId) -> char {
    match t {
        TokenId::SENTINEL => '$',
        TokenId(id) => (b'A' + (id - 3) as u8) as char,
    }
}

fn symbols(s: &str) -> Vec<TokenId> {
    s.bytes().map(|b| TokenId(3 + (b - b'A') as u32)).collect()
}

pub fn run_example() -> (String, String) {
    let text = symbols("CABAC");
    let index = BwtIndex::build_forward(&text).expect("CABAC indexes");

    let mut full = text.clone();
    full.push(TokenId::SENTINEL);
    println!("F . . . . L");
    for &start in index.suffix_array().as_slice() {
        let row: String = (0..full.len())
            .map(|i| letter(full[(start as usize + i) % full.len()]))
            .collect();
        println!(
            "{}",
            row.chars().map(String::from).collect::<Vec<_>>().join(" ")
        );
    }

    let l: String = index.bwt().iter().map(|&t| letter(t)).collect();
    let f: String = index.f_column().iter().map(|&t| letter(t)).collect();
    println!("L = {l}");
    println!("F = {f}");

    let a_rows = index.backward_search(&symbols("A"));
    println!(
        "rows starting with A: {}..{} (width {})",
        a_rows.lo,
        a_rows.hi,
        a_rows.width()
    );
    println!(
        "AC occurs at {:?}, BA at {:?}",
        index.locate_all(&symbols("AC")),
        index.locate_all(&symbols("BA"))
    );
    (l, f)
}

#[allow(dead_code)]
fn main() {
    run_example();
}
