//! Property tests for the invariants each module promises.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use terasense::bench::{emit_results_csv, run_sweep, synthetic_materials, Snr, SweepPlan};
use terasense::classify::{argmax, gnb_fit, grnn_fit, knn_fit, svm_fit, Classifier, ClassifierSpec, KnnConfig, SvmConfig};
use terasense::fds::{allocate_carriers, measure_channel, CarrierPlan, CarrierStrategy, ProfileSpec};
use terasense::features::{
    kl_divergence, nmf_fit, pca_fit, pls_fit, tsne_embed, Dataset, ExtractorSpec, NmfConfig, TsneConfig,
};
use terasense::physics::{
    format_hitran_record, lorentz_halfwidth, molecular_absorption, parse_hitran, path_gain, GasSpecies, LineDatabase,
    LineRecord, MediumState, PhysicalConstants,
};
use terasense::preprocess::{minmax, savitzky_golay, snv, SgWindow};
use terasense::spectroscopy::{
    absorption_from_extinction, fresnel_normal, fresnel_oblique, invert_reflection, invert_transmission,
    transmission_forward,
};
use terasense::Error;

const HZ_PER_CM: f64 = 100.0 * 299_792_458.0;

fn line_strategy() -> impl Strategy<Value = LineRecord> {
    (
        1.0..60.0f64,
        -26.0..-18.0f64,
        0.01..0.15f64,
        0.05..0.6f64,
        0.3..0.99f64,
        -0.009..0.009f64,
        1u8..5,
    )
        .prop_map(|(nu, log_s, ga, gs, n, delta, iso)| LineRecord {
            molecule_id: 1,
            isotopologue_id: iso,
            resonance: nu * HZ_PER_CM,
            strength: 10f64.powf(log_s),
            air_broadening: ga * HZ_PER_CM / 101_325.0,
            self_broadening: gs * HZ_PER_CM / 101_325.0,
            temperature_exponent: n,
            pressure_shift: delta * HZ_PER_CM / 101_325.0,
        })
}

fn medium(species: Vec<GasSpecies>, p: f64, t: f64) -> MediumState {
    MediumState::new(species, p, t, 3.0).unwrap()
}

fn series(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, len)
}

// physics ------------------------------------------------------------------

proptest! {
    #[test]
    fn absorption_is_non_negative(
        lines in prop::collection::vec(line_strategy(), 1..6),
        q in 0.0..1.0f64,
        p in 1e3..3e5f64,
        t in 150.0..400.0f64,
        f in 1e9..5e12f64,
    ) {
        let consts = PhysicalConstants::default();
        let k = molecular_absorption(f, &medium(vec![GasSpecies::new("X", q, lines)], p, t), &consts).unwrap();
        prop_assert!(k >= 0.0 && k.is_finite());
    }

    #[test]
    fn absorption_adds_over_species(
        a in prop::collection::vec(line_strategy(), 1..4),
        b in prop::collection::vec(line_strategy(), 1..4),
        qa in 0.0..0.5f64,
        qb in 0.0..0.5f64,
        f in 1e10..3e12f64,
    ) {
        let consts = PhysicalConstants::default();
        let (ga, gb) = (GasSpecies::new("A", qa, a), GasSpecies::new("B", qb, b));
        let both = molecular_absorption(f, &medium(vec![ga.clone(), gb.clone()], 101_325.0, 296.0), &consts).unwrap();
        let ka = molecular_absorption(f, &medium(vec![ga], 101_325.0, 296.0), &consts).unwrap();
        let kb = molecular_absorption(f, &medium(vec![gb], 101_325.0, 296.0), &consts).unwrap();
        prop_assert_eq!(both, ka + kb);
    }

    #[test]
    fn path_gain_falls_with_distance(
        lines in prop::collection::vec(line_strategy(), 1..4),
        q in 0.0..0.1f64,
        f in 5e10..2e12f64,
        d in 0.1..50.0f64,
        extra in 1e-3..50.0f64,
    ) {
        let consts = PhysicalConstants::default();
        let m = medium(vec![GasSpecies::new("X", q, lines)], 101_325.0, 296.0);
        let near = path_gain(f, &m.with_path_length(d), &consts).unwrap().norm();
        let far = path_gain(f, &m.with_path_length(d + extra), &consts).unwrap().norm();
        // Inside a strong line the attenuation underflows to zero for both distances.
        prop_assume!(near > 1e-290);
        prop_assert!(far < near);
    }

    #[test]
    fn halfwidth_is_affine_in_mixing_ratio(
        line in line_strategy(),
        q in 0.0..1.0f64,
        p in 1e3..3e5f64,
        t in 150.0..400.0f64,
    ) {
        let consts = PhysicalConstants::default();
        let w = |q| lorentz_halfwidth(&line, q, p, t, &consts).unwrap();
        let blend = (1.0 - q) * w(0.0) + q * w(1.0);
        prop_assert!((w(q) - blend).abs() <= 1e-12 * w(q).abs());
    }

    #[test]
    fn line_record_survives_fixed_width_roundtrip(line in line_strategy()) {
        let consts = PhysicalConstants::default();
        let text = format_hitran_record(&line, &consts);
        prop_assert_eq!(text.len(), 160);
        let back = parse_hitran(&text, &consts).unwrap().remove(0);
        // Column precision: 6 decimals of cm⁻¹, 4 significant digits, 4/3/2/6 decimals.
        let cm = |v: f64| v / HZ_PER_CM;
        let atm = |v: f64| v * 101_325.0 / HZ_PER_CM;
        prop_assert_eq!(back.molecule_id, line.molecule_id);
        prop_assert_eq!(back.isotopologue_id, line.isotopologue_id);
        prop_assert!((cm(back.resonance) - cm(line.resonance)).abs() <= 5e-7 + 1e-12);
        prop_assert!((back.strength - line.strength).abs() <= 5e-4 * line.strength);
        prop_assert!((atm(back.air_broadening) - atm(line.air_broadening)).abs() <= 5e-5 + 1e-12);
        prop_assert!((atm(back.self_broadening) - atm(line.self_broadening)).abs() <= 5e-4 + 1e-12);
        prop_assert!((back.temperature_exponent - line.temperature_exponent).abs() <= 5e-3 + 1e-12);
        prop_assert!((atm(back.pressure_shift) - atm(line.pressure_shift)).abs() <= 5e-7 + 1e-12);
        // A second pass is exact: the text is already at column precision.
        prop_assert_eq!(format_hitran_record(&back, &consts), text);
    }
}

// spectroscopy --------------------------------------------------------------

proptest! {
    #[test]
    fn reflection_roundtrip(n in 1.0001..10.0f64, chi in 0.0..1.0f64) {
        let r = fresnel_normal(n, chi).unwrap();
        let back = invert_reflection(r.reflectance, r.phase).unwrap();
        prop_assert!((back.refractive_index - n).abs() <= 1e-9 * n);
        prop_assert!((back.extinction - chi).abs() <= 1e-9 * chi.max(1e-3));
    }

    #[test]
    fn transmission_roundtrip(
        n in 1.0001..10.0f64,
        chi in 0.0..1.0f64,
        d in 1e-5..2e-3f64,
        f in 1e11..3e12f64,
    ) {
        let t = transmission_forward(n, chi, d, f).unwrap();
        prop_assume!(t.norm() > 1e-250);
        let delay = 2.0 * std::f64::consts::PI * f * d * (n - 1.0) / 299_792_458.0;
        let turn = 2.0 * std::f64::consts::PI;
        let phase = t.arg() + turn * ((delay - t.arg()) / turn).round();
        let inv = invert_transmission(t.norm(), phase, d, f).unwrap();
        prop_assert!((inv.constants.refractive_index - n).abs() <= 1e-9 * n);
        prop_assert!((inv.constants.extinction - chi).abs() <= 1e-9 * chi.max(1e-3));
        let k = absorption_from_extinction(f, inv.constants.extinction);
        prop_assert!((inv.absorption_coefficient - k).abs() <= 8.0 * f64::EPSILON * k.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn oblique_reduces_to_normal_incidence(n in 0.1..10.0f64, chi in 0.0..1.0f64) {
        let normal = fresnel_normal(n, chi).unwrap().reflectivity;
        let oblique = fresnel_oblique(Complex64::new(n, chi), 1.0, 0.0).unwrap();
        prop_assert!((oblique.r_s - normal).norm() <= 4.0 * f64::EPSILON);
        prop_assert!((oblique.r_p - normal).norm() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn passive_reflectivity_is_bounded(n in 1e-3..50.0f64, chi in 0.0..50.0f64) {
        prop_assert!(fresnel_normal(n, chi).unwrap().coefficient <= 1.0);
    }
}

// preprocessing -------------------------------------------------------------

proptest! {
    #[test]
    fn snv_ignores_positive_affine_maps(x in series(40), a in 0.01..100.0f64, b in -50.0..50.0f64) {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        for (p, q) in snv(&x).unwrap().iter().zip(snv(&y).unwrap()) {
            prop_assert!((p - q).abs() <= 1e-10);
        }
    }

    #[test]
    fn minmax_ignores_positive_affine_maps(x in series(40), a in 0.01..100.0f64, b in -50.0..50.0f64) {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        for (p, q) in minmax(&x).unwrap().iter().zip(minmax(&y).unwrap()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn savitzky_golay_is_linear(
        x in series(50),
        y in series(50),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        half in 1usize..7,
        degree in 0usize..4,
    ) {
        let w = SgWindow::new(half, degree.min(2 * half)).unwrap();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (sx, sy, sm) = (savitzky_golay(&x, w).unwrap(), savitzky_golay(&y, w).unwrap(), savitzky_golay(&mix, w).unwrap());
        for i in 0..50 {
            prop_assert!((sm[i] - (a * sx[i] + b * sy[i])).abs() <= 1e-10);
        }
    }

    #[test]
    fn savitzky_golay_keeps_polynomials(coeffs in prop::collection::vec(-2.0..2.0f64, 1..5), half in 2usize..8) {
        let degree = coeffs.len() - 1;
        let w = SgWindow::new(half, degree).unwrap();
        let xs: Vec<f64> = (0..40).map(|i| -1.0 + i as f64 / 20.0).collect();
        let poly: Vec<f64> = xs.iter().map(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)).collect();
        for (s, p) in savitzky_golay(&poly, w).unwrap().iter().zip(&poly) {
            prop_assert!((s - p).abs() <= 1e-10);
        }
    }
}

// features ------------------------------------------------------------------

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = DMatrix<f64>> {
    (rows, cols).prop_flat_map(|(m, n)| {
        prop::collection::vec(-3.0..3.0f64, m * n).prop_map(move |v| DMatrix::from_vec(m, n, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pca_keeps_total_variance(x in matrix(3..12, 2..8)) {
        let p = (x.nrows() - 1).min(x.ncols());
        let model = pca_fit(&x, p).unwrap();
        let sum: f64 = model.eigenvalues.iter().sum();
        prop_assert!((sum - model.total_variance).abs() <= 1e-8 * model.total_variance.max(1.0));
        let scores = model.transform(&x).unwrap();
        for c in 0..scores.ncols() {
            prop_assert!(scores.column(c).mean().abs() <= 1e-10);
        }
    }

    #[test]
    fn nmf_objective_never_rises(x in matrix(3..15, 3..15), rank in 1usize..4, seed in 0u64..1000) {
        let x = x.map(f64::abs);
        let cfg = NmfConfig { components: rank, iterations: 60, seed, ..NmfConfig::default() };
        let model = nmf_fit(&x, &cfg).unwrap();
        for w in model.objective.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pls_rejects_a_constant_target(x in matrix(4..10, 2..6), level in -5.0..5.0f64) {
        let y = DMatrix::from_element(x.nrows(), 1, level);
        prop_assert!(matches!(pls_fit(&x, &y, 1), Err(Error::Degenerate(_))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tsne_improves_on_its_starting_point(x in matrix(12..20, 3..6), seed in 0u64..100) {
        let cfg = TsneConfig { seed, ..TsneConfig::default() };
        let model = tsne_embed(&x, &cfg).unwrap();
        let m = x.nrows();
        let d2 = DMatrix::from_fn(m, m, |i, j| (x.row(i) - x.row(j)).norm_squared());
        let cond = terasense::features::conditional_affinities(&d2, cfg.perplexity).unwrap().conditional;
        let p = (&cond + cond.transpose()) / (2.0 * m as f64);
        let start = DMatrix::from_fn(m, 2, |i, j| 1e-4 * (((i * 7 + j * 3 + seed as usize) % 11) as f64 - 5.0));
        prop_assert!(kl_divergence(&p, &model.embedding) < kl_divergence(&p, &start));
    }
}

// classifiers ---------------------------------------------------------------

fn labelled(classes: usize) -> impl Strategy<Value = (DMatrix<f64>, Vec<usize>)> {
    (2usize..5).prop_flat_map(move |per| {
        let m = classes * per;
        prop::collection::vec(-4.0..4.0f64, m * 3).prop_map(move |v| {
            let x = DMatrix::from_vec(m, 3, v);
            let labels = (0..m).map(|i| i % classes).collect();
            (x, labels)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grnn_scores_are_convex_weights((x, labels) in labelled(3), q in prop::collection::vec(-6.0..6.0f64, 3), spread in 0.05..20.0f64) {
        let model = grnn_fit(&x, &labels, 3, spread).unwrap();
        let s = model.scores(&q).unwrap();
        prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gnb_never_yields_nan((x, labels) in labelled(3), q in prop::collection::vec(-1e3..1e3f64, 3)) {
        let model = gnb_fit(&x, &labels, 3).unwrap();
        prop_assert!(model.log_joint(&q).unwrap().iter().all(|v| !v.is_nan()));
        prop_assert!(model.scores(&q).unwrap().iter().all(|v| !v.is_nan()));
    }

    #[test]
    fn svm_builds_one_model_per_pair(k in 2usize..7) {
        let labels: Vec<usize> = (0..3 * k).map(|i| i % k).collect();
        let x = DMatrix::from_fn(3 * k, 2, |r, c| (labels[r] as f64) * (c as f64 + 1.0) + 0.01 * r as f64);
        let model = svm_fit(&x, &labels, k, &SvmConfig { epochs: 5, ..SvmConfig::default() }).unwrap();
        prop_assert_eq!(model.pairs.len(), k * (k - 1) / 2);
    }

    #[test]
    fn knn_with_every_neighbour_equidistant_picks_the_majority(labels in prop::collection::vec(0usize..3, 2..12)) {
        // Training points at ±1 around the query at 0.
        let x = DMatrix::from_fn(labels.len(), 1, |r, _| if r % 2 == 0 { 1.0 } else { -1.0 });
        let cfg = KnnConfig { k: labels.len(), ..KnnConfig::default() };
        let model = knn_fit(&x, &labels, 3, &cfg).unwrap();
        let mut counts = [0.0; 3];
        for &l in &labels {
            counts[l] += 1.0;
        }
        prop_assert_eq!(model.predict(&[0.0]).unwrap(), argmax(&counts));
    }

    #[test]
    fn prediction_is_argmax_under_monotone_maps((x, labels) in labelled(3), q in prop::collection::vec(-4.0..4.0f64, 3)) {
        for spec in [ClassifierSpec::Gnb, ClassifierSpec::Grnn { spread: 1.0 }, ClassifierSpec::Lda { ridge: 1e-3 }] {
            let model = spec.fit(&x, &labels, 3).unwrap();
            let qm = DMatrix::from_row_slice(1, 3, &q);
            let scores: Vec<f64> = model.scores_matrix(&qm).unwrap().row(0).iter().copied().collect();
            let predicted = model.predict_matrix(&qm).unwrap()[0];
            let squashed: Vec<f64> = scores.iter().map(|s| s.atan() * 3.0 + 1.0).collect();
            prop_assert_eq!(predicted, argmax(&scores));
            prop_assert_eq!(predicted, argmax(&squashed));
        }
    }
}

// sweep and sensing -------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sweep_is_bitwise_reproducible(seed in 0u64..1000) {
        let lib = synthetic_materials(4, 60, (0.2e12, 2.5e12), seed).unwrap();
        let plan = SweepPlan {
            extractors: vec![ExtractorSpec::Pca { components: 3 }],
            classifiers: vec![ClassifierSpec::Svm(SvmConfig::default()), ClassifierSpec::Knn(KnnConfig::default())],
            snr_db: vec![Snr::Db(0.0), Snr::Db(15.0)],
            per_class: 10,
            folds: 3,
            repetitions: 2,
            seed,
            ..SweepPlan::default()
        };
        let csv = || {
            let mut buf = Vec::new();
            emit_results_csv(&run_sweep(&lib, &plan).unwrap(), &mut buf).unwrap();
            buf
        };
        prop_assert_eq!(csv(), csv());
    }

    #[test]
    fn carrier_allocation_is_deterministic(seed in any::<u64>(), count in 5usize..60) {
        let consts = PhysicalConstants::default();
        let db = LineDatabase::builtin(&consts);
        for plan in [
            CarrierPlan::new(CarrierStrategy::Random, count, (0.1e12, 1e12)),
            CarrierPlan::resonant("H2O", count, (0.1e12, 1e12)),
        ] {
            let a = allocate_carriers(&plan, &db, 101_325.0, seed).unwrap();
            let b = allocate_carriers(&plan, &db, 101_325.0, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.carriers.len(), count);
        }
    }

    #[test]
    fn noiseless_channel_is_positive_and_below_spreading(profile in 0usize..3, count in 5usize..80) {
        let consts = PhysicalConstants::default();
        let db = LineDatabase::builtin(&consts);
        let spec = &ProfileSpec::defaults()[profile];
        let medium = spec.medium(&db).unwrap();
        let plan = allocate_carriers(&CarrierPlan::new(CarrierStrategy::Uniform, count, (0.1e12, 1e12)), &db, 101_325.0, 0).unwrap();
        let gains = measure_channel(&plan, &medium, Snr::Noiseless, 0, &consts).unwrap();
        for (g, f) in gains.iter().zip(&plan.carriers) {
            let spreading = consts.c() / (4.0 * std::f64::consts::PI * f * medium.path_length);
            // Equality up to rounding where no line reaches the carrier.
            prop_assert!(*g > 0.0 && *g <= spreading * (1.0 + 1e-12));
        }
    }
}

#[test]
fn extractors_are_unchanged_by_transform() {
    let lib = synthetic_materials(4, 80, (0.2e12, 2.5e12), 5).unwrap();
    let data = terasense::bench::synthesize_dataset(&lib, 8, Snr::Db(10.0), 2).unwrap();
    let x = data.x.map(|v| v.abs());
    let train = Dataset::new(x.clone(), data.labels.clone(), data.class_names.clone(), None).unwrap();
    let unseen = x.map(|v| v * 1.1 + 0.01);
    for spec in [
        ExtractorSpec::None,
        ExtractorSpec::Pca { components: 3 },
        ExtractorSpec::Pls { components: 3 },
        ExtractorSpec::Tsne(TsneConfig { iterations: 100, placement_iterations: 20, ..TsneConfig::default() }),
        ExtractorSpec::Nmf(NmfConfig { components: 3, iterations: 50, ..NmfConfig::default() }),
    ] {
        let fitted = spec.fit(&train).unwrap();
        let before = serde_json::to_string(&fitted).unwrap();
        fitted.transform(&unseen).unwrap();
        fitted.training_features(&train.x).unwrap();
        assert_eq!(before, serde_json::to_string(&fitted).unwrap(), "{} changed state", spec.name());
    }
}

#[test]
fn success_and_rmsec_move_oppositely() {
    let lib = synthetic_materials(6, 120, (0.2e12, 2.5e12), 8).unwrap();
    let plan = SweepPlan {
        extractors: vec![ExtractorSpec::Pca { components: 5 }],
        classifiers: vec![ClassifierSpec::Lda { ridge: 1e-6 }],
        snr_db: (-6..=6).map(|i| Snr::Db(5.0 * i as f64)).collect(),
        per_class: 20,
        folds: 5,
        repetitions: 3,
        ..SweepPlan::default()
    };
    let result = run_sweep(&lib, &plan).unwrap();
    let curve = result.curve("pca", "lda");
    let rank = |v: Vec<f64>| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let rs = rank(curve.iter().map(|c| c.success_rate_mean).collect());
    let re = rank(curve.iter().map(|c| c.rmsec).collect());
    let n = rs.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = rs.iter().zip(&re).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let var: f64 = rs.iter().map(|a| (a - mean).powi(2)).sum();
    assert!(cov / var < 0.0, "rank correlation {}", cov / var);
}
