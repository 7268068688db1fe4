//! Writes the six-class labeled corpus with its manifest.
//!
//! cargo run --release --example generate_corpus -- [out_dir] [seed]

use debris_edge::experiments::{generate_dataset, GenSpec, MANIFEST_FILE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("debris_edge_corpus"), Into::into);
    let seed = args.next().map_or(Ok(7), |s| s.parse())?;
    let spec = GenSpec { seed, ..GenSpec::default() };
    let entries = generate_dataset(&spec, &out)?;
    let per_class: Vec<usize> = spec
        .classes
        .iter()
        .map(|c| entries.iter().filter(|e| &e.label == c).count())
        .collect();
    println!("{} images in {}", entries.len(), out.display());
    println!("{:?} -> {per_class:?}", spec.classes);
    println!("first entry: {}", serde_json::to_string(&entries[0])?);
    println!("manifest: {}", out.join(MANIFEST_FILE).display());
    Ok(())
}
