use proptest::prelude::*;

use pdbclean_core::corrupt::{corrupt, NoiseConfig, NoiseLevel};
use pdbclean_core::loss::{jsd, jsd_slices};
use pdbclean_core::pdb::{devectorize, vectorize, Pmf};
use pdbclean_core::quantize::{expected_value, pmf_from_value, uniform_bins};
use pdbclean_core::synth::{generate_ground_truth, ChainSpec};

fn pmf(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..1.0, k).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

fn pmf_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..12).prop_flat_map(|k| (pmf(k), pmf(k)))
}

proptest! {
    #[test]
    fn jsd_is_symmetric_and_bounded((p, q) in pmf_pair()) {
        let d = jsd_slices(&p, &q);
        prop_assert!((d - jsd_slices(&q, &p)).abs() < 1e-12);
        prop_assert!((-1e-12..=std::f64::consts::LN_2 + 1e-12).contains(&d));
        prop_assert!(jsd_slices(&p, &p).abs() < 1e-12);
    }

    #[test]
    fn jsd_accepts_validated_pmfs((p, q) in pmf_pair()) {
        let d = jsd(&Pmf::new(p.clone()).unwrap(), &Pmf::new(q.clone()).unwrap()).unwrap();
        prop_assert_eq!(d, jsd_slices(&p, &q));
    }

    #[test]
    fn corruption_keeps_cells_on_the_simplex(
        sigma in 0.0f64..0.5,
        missing in 0.0f64..0.6,
        k in 2usize..20,
        seed in any::<u64>(),
    ) {
        let gt = generate_ground_truth(&ChainSpec::new(3, k, 40, seed)).unwrap();
        let cfg = NoiseConfig { sigma: NoiseLevel::PerCategory(sigma), missing_prob: missing, seed };
        let (noisy, mask) = corrupt(&gt, &cfg).unwrap();
        for i in 0..noisy.len() {
            for j in 0..3 {
                let c = noisy.cell(i, j).probs();
                prop_assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(c.iter().all(|&v| (0.0..=1.0).contains(&v)));
                if mask.get(i, j) {
                    prop_assert!(noisy.cell(i, j).is_uniform());
                }
            }
        }
    }

    #[test]
    fn vectorize_round_trips(k in 2usize..9, seed in any::<u64>()) {
        let gt = generate_ground_truth(&ChainSpec::new(4, k, 5, seed)).unwrap();
        for r in gt.records() {
            let v = vectorize(r, gt.schema()).unwrap();
            prop_assert_eq!(v.len(), gt.schema().width());
            prop_assert_eq!(&devectorize(&v, gt.schema()).unwrap(), r);
        }
    }

    #[test]
    fn crisp_value_lands_in_its_bin(lo in -100.0f64..100.0, width in 0.1f64..100.0, k in 2usize..50, t in 0.0f64..=1.0) {
        let rule = uniform_bins(lo, lo + width, k).unwrap();
        let x = lo + t * width;
        let p = pmf_from_value(x, &rule).unwrap();
        let b = p.argmax();
        prop_assert!(rule.edges()[b] <= x + 1e-9 && x - 1e-9 <= rule.edges()[b + 1]);
        prop_assert_eq!(expected_value(&p, &rule), rule.centers()[b]);
    }
}
