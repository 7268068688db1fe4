//! HOG features of object crops classified with k-nearest neighbours and
//! a one-vs-rest linear SVM, scored with a confusion matrix.

use debris_edge::classifiers::{
    classification_metrics, confusion_matrix, knn_classify, svm_predict, svm_train, LabeledVectors,
};
use debris_edge::experiments::{render_scene, GenSpec};
use debris_edge::features::{hog_descriptor, HogParams};
use debris_edge::imaging::{object_scale_normalize, to_grayscale};
use debris_edge::neuralnet::split_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GenSpec {
        per_class: 30,
        ..GenSpec::default()
    };
    let hog = HogParams::default();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for k in 0..spec.total() {
        let class = k % spec.classes.len();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        rng.set_stream(k as u64);
        let (scene, boxes) = render_scene(&spec, class, &mut rng);
        let crop = to_grayscale(&object_scale_normalize(&scene, &boxes[0], 0.6, 64, 64)?);
        features.push(hog_descriptor(&crop, &hog)?);
        labels.push(class);
    }
    let data = LabeledVectors::from_features(features, labels, spec.classes.clone())?;
    let (tr, te) = split_indices(data.len(), 0.7, 11)?;
    let (train, test) = (data.subset(&tr), data.subset(&te));

    let model = svm_train(&train, 1e-3, 30, 11)?;
    let mut knn_pred = Vec::new();
    let mut svm_pred = Vec::new();
    for v in test.vectors() {
        knn_pred.push(knn_classify(&train, v, 5)?);
        svm_pred.push(svm_predict(&model, v)?.0);
    }
    for (name, pred) in [("knn", &knn_pred), ("svm", &svm_pred)] {
        let cm = confusion_matrix(test.labels(), pred, data.classes())?;
        let m = classification_metrics(&cm)?;
        println!("{name}: accuracy {:.3}, macro F1 {:.3?}", m.accuracy, m.macro_f1);
        print!("{}", cm.to_csv(data.class_names()));
    }
    Ok(())
}
