//! Trains every classifier on PCA features and reports held-out accuracy.

use terasense::bench::{kfold_split, synthesize_dataset, synthetic_materials, Snr};
use terasense::classify::ClassifierSpec;
use terasense::features::ExtractorSpec;
use terasense::preprocess::{apply_rows, Preprocessing};

fn main() -> terasense::Result<()> {
    let lib = synthetic_materials(20, 430, (0.2e12, 2.5e12), 0)?;
    let mut data = synthesize_dataset(&lib, 50, Snr::Db(10.0), 1)?;
    data.x = apply_rows(
        &data.x,
        &[Preprocessing::SavitzkyGolay { half_width: 5, degree: 3 }, Preprocessing::Minmax],
    )?;
    let fold = &kfold_split(&data.labels, 5, 2)?[0];
    let (train, test) = (data.subset(&fold.train), data.subset(&fold.test));
    let pca = ExtractorSpec::Pca { components: 10 }.fit(&train)?;
    let (f_train, f_test) = (pca.transform(&train.x)?, pca.transform(&test.x)?);

    for spec in ClassifierSpec::all_defaults() {
        let model = spec.fit(&f_train, &train.labels, data.n_classes())?;
        let predicted = model.predict_matrix(&f_test)?;
        let hits = predicted.iter().zip(&test.labels).filter(|(p, l)| p == l).count();
        println!("{:>5}: {hits}/{} correct at 10 dB", spec.name(), test.labels.len());
    }
    Ok(())
}
