//! Shape descriptors for the labeled object of a few synthetic scenes:
//! HOG, Hu moments and Harris corners, then a PCA projection of the HOG
//! vectors.

use debris_edge::experiments::{render_scene, GenSpec};
use debris_edge::features::{
    harris_keypoints, hog_descriptor, hog_length, hu_moments, pca_apply, pca_fit, HogParams,
};
use debris_edge::imaging::{object_scale_normalize, threshold, to_grayscale, Threshold};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GenSpec::default();
    let hog = HogParams::default();
    println!("HOG length for 64x128: {}", hog_length(64, 128, &hog)?);

    let mut descriptors = Vec::new();
    for k in 0..12 {
        let class = k % spec.classes.len();
        let (scene, boxes) = render_scene(&spec, class, &mut ChaCha8Rng::seed_from_u64(k as u64));
        let window = to_grayscale(&object_scale_normalize(&scene, &boxes[0], 0.6, 64, 64)?);
        let h = hog_descriptor(&window, &hog)?;
        let hu = hu_moments(&threshold(&window, Threshold::Otsu)?)?;
        let corners = harris_keypoints(&window, 20)?;
        println!(
            "{:<10} hog {} values, hu1 {:.3e}, hu2 {:.3e}, {} corners",
            spec.classes[class],
            h.values.len(),
            hu.values[0],
            hu.values[1],
            corners.points.len()
        );
        descriptors.push(h);
    }

    let basis = pca_fit(&descriptors, 3)?;
    let share: f64 = basis.explained_variance.iter().sum::<f64>() / basis.total_variance;
    println!("3 components keep {:.1}% of the variance", 100.0 * share);
    let projected = pca_apply(&basis, &descriptors[0])?;
    println!("first scene in PCA space: {:.3?}", projected.values);
    Ok(())
}
