use afb_core::features::{compute_frame_features, sharpness_map, FeatureError};
use afb_core::imaging::{BinaryMask, GrayImage};
use proptest::prelude::*;

const W: usize = 16;
const H: usize = 12;

fn image(v: Vec<f64>) -> GrayImage {
    GrayImage::from_vec(W, H, v).unwrap()
}

fn mask(v: Vec<bool>) -> BinaryMask {
    BinaryMask::from_vec(W, H, v).unwrap()
}

/// Welford mean and population variance.
fn stats(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for v in values {
        n += 1.0;
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    (mean, m2 / n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn features_match_a_naive_recomputation(
        grad in prop::collection::vec(0.0f64..2.0, W * H),
        intensity in prop::collection::vec(0.0f64..1.0, W * H),
        edges in prop::collection::vec(any::<bool>(), W * H),
        fore in prop::collection::vec(prop::bool::weighted(0.8), W * H),
        over in prop::collection::vec(prop::bool::weighted(0.2), W * H),
    ) {
        let over: Vec<bool> = over.iter().zip(&fore).map(|(o, f)| *o && *f).collect();
        let inf: Vec<bool> = fore.iter().zip(&over).map(|(f, o)| *f && !*o).collect();
        let i_i = image(intensity.clone());
        let phi = sharpness_map(&i_i).unwrap();
        let got = compute_frame_features(
            &image(grad.clone()), &i_i, &phi, &mask(edges.clone()), &mask(inf.clone()), &mask(fore.clone()), &mask(over.clone()),
        );
        let sel: Vec<usize> = (0..W * H).filter(|&i| inf[i]).collect();
        if sel.is_empty() {
            prop_assert!(matches!(got, Err(FeatureError::EmptyInformativeRegion) | Err(FeatureError::EmptyForeground)));
            return Ok(());
        }
        let f = got.unwrap();

        // Sharpness by direct neighbour scan with edge replication.
        let at = |x: isize, y: isize| intensity[y.clamp(0, H as isize - 1) as usize * W + x.clamp(0, W as isize - 1) as usize];
        let sharp: Vec<f64> = (0..W * H).map(|i| {
            let (x, y) = ((i % W) as isize, (i / W) as isize);
            let mut m = 0.0f64;
            for (dx, dy) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
                m = m.max((at(x, y) - at(x + dx, y + dy)).abs());
            }
            m
        }).collect();

        let (alpha, beta) = stats(sel.iter().map(|&i| grad[i]));
        let (rho, _) = stats(sel.iter().map(|&i| intensity[i]));
        let (epsilon, zeta) = stats(sel.iter().map(|&i| sharp[i]));
        let gamma = sel.iter().filter(|&&i| edges[i]).count() as f64 / sel.len() as f64;
        let eta = over.iter().filter(|&&o| o).count() as f64 / fore.iter().filter(|&&o| o).count() as f64;
        let tol = 1e-12;
        prop_assert!((f.alpha - alpha).abs() < tol);
        prop_assert!((f.beta - beta).abs() < tol);
        prop_assert!((f.gamma - gamma).abs() < tol);
        prop_assert!((f.rho - rho).abs() < tol);
        prop_assert!((f.epsilon - epsilon).abs() < tol);
        prop_assert!((f.zeta - zeta).abs() < tol);
        prop_assert!((f.eta - eta).abs() < tol);
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let g = image(vec![0.0; W * H]);
    let m = mask(vec![true; W * H]);
    let small = BinaryMask::full(W - 1, H).unwrap();
    assert!(compute_frame_features(&g, &g, &g, &m, &m, &m, &small).is_err());
    let none = mask(vec![false; W * H]);
    assert!(matches!(
        compute_frame_features(&g, &g, &g, &m, &m, &none, &none),
        Err(FeatureError::EmptyForeground)
    ));
}
