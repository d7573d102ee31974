//! Transform-matrix invariants at 32-bit: column stochasticity of P and the
//! convex-hull property of distilled pixels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsd::tensor::Tensor;
use tsd::train::seeded_rng;
use tsd::tsd::{compute_transform, distill, TsdWeights};

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f32> {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-1.0..1.0f32)).collect();
    Tensor::from_vec(shape, data).unwrap()
}

#[test]
fn p_is_column_stochastic_and_distill_stays_in_hull() {
    let mut rng = seeded_rng(31);
    for _ in 0..1000 {
        let t = rng.gen_range(2..=8);
        let t_s = rng.gen_range(1..=t);
        let (h, w, c) = (
            rng.gen_range(1..=4),
            rng.gen_range(1..=4),
            rng.gen_range(1..=3),
        );
        let f = rand_tensor(&mut rng, &[t, h, w, c]);
        let weights = TsdWeights {
            w_alpha: rand_tensor(&mut rng, &[3, 3, 3, c, c]),
            w_beta: rand_tensor(&mut rng, &[1, 1, 1, t, t_s]),
            w_gamma: rand_tensor(&mut rng, &[3, 3, 3, c, c]),
        };
        let p = compute_transform(&f, &weights).unwrap();
        for s in p.column_sums() {
            assert!((s - 1.0).abs() <= 1e-6, "column sum {s}");
        }
        assert!(p.values().data().iter().all(|&v| v >= 0.0));

        // distilled pixels stay inside the per-pixel hull of input frames
        let x = rand_tensor(&mut rng, &[t, h, w, c]);
        let y = distill(&x, &p).unwrap();
        let frame = h * w * c;
        for k in 0..frame {
            let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
            for i in 0..t {
                let v = x.data()[i * frame + k];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            for j in 0..t_s {
                let v = y.data()[j * frame + k];
                assert!(
                    v >= lo - 1e-5 && v <= hi + 1e-5,
                    "pixel {k} frame {j}: {v} outside [{lo}, {hi}]"
                );
            }
        }
    }
}
