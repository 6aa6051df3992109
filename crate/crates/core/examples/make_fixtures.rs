//! Regenerates the files under `tests/fixtures`.
//!
//! `cargo run -p normprobe --example make_fixtures -- crates/core/tests/fixtures`

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use normprobe::data::{save_embeddings, EmbeddingSpace};
use normprobe::synth;

fn main() -> normprobe::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "tests/fixtures".into()));
    std::fs::create_dir_all(&dir).expect("fixture directory");
    let (space, norms) = synth::fixture(40, 8, 12, 5, 0.05, 2024)?;

    // The last three norm words have no vector.
    let keep: Vec<usize> = (0..space.len()).filter(|&i| !(37..40).contains(&i)).collect();
    let vocab = keep.iter().map(|&i| space.vocab()[i].clone()).collect();
    let vectors = space.vectors().select_rows(keep.iter());
    save_embeddings(&EmbeddingSpace::new(vocab, vectors)?, &dir.join("embeddings.txt"), true)?;

    let create = |name: &str| BufWriter::new(File::create(dir.join(name)).expect("fixture file"));
    norms.write_tsv(create("norms.tsv")).expect("norms");
    norms.write_domain_tsv(create("domains.tsv")).expect("domains");
    norms.write_cluster_tsv(create("clusters.tsv")).expect("clusters");

    let (_, small) = synth::fixture(10, 0, 6, 2, 0.05, 7)?;
    small.write_tsv(create("norms_small.tsv")).expect("small norms");
    Ok(())
}
