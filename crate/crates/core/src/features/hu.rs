use super::{DescriptorKind, FeatureError, FeatureVector, Result};
use crate::imaging::Image;

/// Raw image moment `sum x^p y^q I(x, y)` over pixel indices.
pub fn raw_moment(img: &Image, p: u32, q: u32) -> f64 {
    let mut acc = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = img.get(x, y, 0) as f64;
            if v != 0.0 {
                acc += (x as f64).powi(p as i32) * (y as f64).powi(q as i32) * v;
            }
        }
    }
    acc
}

/// The seven Hu invariants of the intensity distribution.
///
/// The first six are invariant to translation, scale, rotation and
/// reflection. The seventh changes sign under reflection.
pub fn hu_moments(img: &Image) -> Result<FeatureVector> {
    if img.channels() != 1 {
        return Err(FeatureError::NotGray(img.channels()));
    }
    let m00 = raw_moment(img, 0, 0);
    if m00 == 0.0 {
        return Err(FeatureError::ZeroMass);
    }
    let xc = raw_moment(img, 1, 0) / m00;
    let yc = raw_moment(img, 0, 1) / m00;

    // Central moments up to order 3.
    let mut mu = [[0.0f64; 4]; 4];
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = img.get(x, y, 0) as f64;
            if v == 0.0 {
                continue;
            }
            let dx = x as f64 - xc;
            let dy = y as f64 - yc;
            let mut px = 1.0;
            for p in mu.iter_mut() {
                let mut term = px * v;
                for slot in p.iter_mut() {
                    *slot += term;
                    term *= dy;
                }
                px *= dx;
            }
        }
    }
    let eta = |p: usize, q: usize| mu[p][q] / m00.powf(1.0 + (p + q) as f64 / 2.0);
    let (n20, n02, n11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (n30, n03, n21, n12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));

    let a = n30 + n12;
    let b = n21 + n03;
    let h1 = n20 + n02;
    let h2 = (n20 - n02).powi(2) + 4.0 * n11 * n11;
    let h3 = (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2);
    let h4 = a * a + b * b;
    let h5 = (n30 - 3.0 * n12) * a * (a * a - 3.0 * b * b)
        + (3.0 * n21 - n03) * b * (3.0 * a * a - b * b);
    let h6 = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
    let h7 = (3.0 * n21 - n03) * a * (a * a - 3.0 * b * b)
        - (n30 - 3.0 * n12) * b * (3.0 * a * a - b * b);
    Ok(FeatureVector::new(
        vec![h1, h2, h3, h4, h5, h6, h7],
        DescriptorKind::Hu,
    ))
}
