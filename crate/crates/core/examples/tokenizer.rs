//! Learn a frequent-substring vocabulary from SMILES and tokenize with it.

use trimodal_dti::tokenizer::{detokenize, tokenize, train_vocab};

pub fn run_example() -> trimodal_dti::Result<()> {
    let corpus: Vec<String> = [
        "CC(=O)Oc1ccccc1C(=O)O",
        "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
        "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
        "COc1ccc2[nH]cc(CCN)c2c1",
        "CC(=O)Nc1ccc(O)cc1",
        "c1ccccc1O",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let vocab = train_vocab(&corpus, 64, 2)?;
    println!("vocabulary: {} tokens, {} merges", vocab.len(), vocab.merges().len());
    for (a, b) in vocab.merges().iter().take(8) {
        println!("  merge {a:?} + {b:?}");
    }
    let s = "CC(=O)Nc1ccccc1";
    let t = tokenize(s, &vocab, 32)?;
    let pieces: Vec<&str> = t.token_ids.iter().map(|&i| vocab.token(i).unwrap_or("?")).collect();
    println!("{s} -> {pieces:?}");
    println!("round trip: {}", detokenize(&t, &vocab));
    Ok(())
}

#[allow(dead_code)]
fn main() -> trimodal_dti::Result<()> {
    run_example()
}
