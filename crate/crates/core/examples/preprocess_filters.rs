//! Renders one synthetic scene and runs it through the filter chain used
//! before segmentation. Writes every stage as a PNM file.
//!
//! cargo run --release --example preprocess_filters

use debris_edge::experiments::{render_scene, GenSpec};
use debris_edge::imaging::{
    adjust_contrast_brightness, gaussian_blur, median_filter, otsu_threshold, threshold, to_grayscale,
    write_pnm_file, Filter, Threshold,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("debris_edge_filters");
    std::fs::create_dir_all(&out)?;
    let spec = GenSpec::default();
    let (scene, boxes) = render_scene(&spec, 0, &mut ChaCha8Rng::seed_from_u64(3));
    println!("scene {}x{}, labeled object at {:?}", scene.width(), scene.height(), boxes[0]);

    let gray = to_grayscale(&scene);
    let smooth = median_filter(&gray, 3)?;
    let blurred = gaussian_blur(&smooth, 1.0)?;
    let boosted = adjust_contrast_brightness(&blurred, 1.4, -20.0)?;
    let cut = otsu_threshold(&boosted)?;
    let mask = threshold(&boosted, Threshold::Value(cut))?;
    println!("otsu cut {cut}");
    for (name, img) in [("scene.ppm", &scene), ("gray.pgm", &gray), ("blurred.pgm", &blurred), ("mask.pgm", &mask)] {
        write_pnm_file(out.join(name), img)?;
    }

    // The same chain as data, the way pipeline configs carry it.
    let chain = vec![
        Filter::Grayscale,
        Filter::Median { kernel_size: 3 },
        Filter::Gaussian { sigma: 1.0 },
        Filter::Threshold { threshold: Threshold::Otsu },
    ];
    println!("{}", serde_json::to_string(&chain)?);
    let mut img = scene.clone();
    for f in &chain {
        img = f.apply(&img)?;
    }
    let foreground = img.pixels().iter().filter(|&&p| p == 255).count();
    println!("foreground {:.1}%", 100.0 * foreground as f64 / img.pixels().len() as f64);
    println!("wrote stages to {}", out.display());
    Ok(())
}
