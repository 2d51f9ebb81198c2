//! PCA, PLS, t-SNE and NMF on noisy observations of the synthetic material set.

use terasense::bench::{synthesize_dataset, synthetic_materials, Snr};
use terasense::features::{nmf_fit, pca_fit, pls_fit, tsne_embed, NmfConfig, TsneConfig};
use terasense::preprocess::{apply_rows, Preprocessing};

fn main() -> terasense::Result<()> {
    let lib = synthetic_materials(20, 430, (0.2e12, 2.5e12), 0)?;
    let mut data = synthesize_dataset(&lib, 50, Snr::Db(20.0), 1)?;
    data.x = apply_rows(
        &data.x,
        &[Preprocessing::SavitzkyGolay { half_width: 5, degree: 3 }, Preprocessing::Minmax],
    )?;

    let pca = pca_fit(&data.x, 10)?;
    let explained = pca.cumulative_explained();
    println!("PCA: first 10 components explain {:.1}% of the variance", 100.0 * explained[9]);

    let pls = pls_fit(&data.x, &data.one_hot(), 10)?;
    let fitted = pls.predict(&data.x)?;
    let hits = (0..data.n_samples())
        .filter(|&r| fitted.row(r).transpose().imax() == data.labels[r])
        .count();
    println!("PLS: 10 latent variables, {hits}/{} training spectra closest to their own class", data.n_samples());

    let every_fifth: Vec<usize> = (0..data.n_samples()).step_by(5).collect();
    let small = data.subset(&every_fifth);
    let tsne = tsne_embed(&small.x, &TsneConfig::default())?;
    println!("t-SNE: {} points embedded in 2-D, final KL {:.3}", small.n_samples(), tsne.final_kl);

    let nmf = nmf_fit(&data.x, &NmfConfig::default())?;
    println!(
        "NMF: rank {}, objective {:.3} -> {:.3}",
        nmf.rank(),
        nmf.objective[0],
        nmf.final_objective()
    );
    Ok(())
}
