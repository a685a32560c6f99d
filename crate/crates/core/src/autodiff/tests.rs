use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradcheck::{check_gradients, FD_STEP};
use super::*;

fn t64(shape: &[usize], data: Vec<f64>) -> Tensor<f64> {
    Tensor::new(shape, data).unwrap()
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    t64(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Direct nested-loop cross-correlation with zero padding.
fn naive_conv(x: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
    let (c, h, w) = x.chw().unwrap();
    let (o, ks) = (k.shape()[0], k.shape()[2]);
    let p = (ks / 2) as isize;
    let mut out = vec![0.0; o * h * w];
    for oc in 0..o {
        for y in 0..h {
            for xx in 0..w {
                let mut acc = b.data()[oc];
                for ic in 0..c {
                    for ky in 0..ks {
                        for kx in 0..ks {
                            let sy = y as isize + ky as isize - p;
                            let sx = xx as isize + kx as isize - p;
                            if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                continue;
                            }
                            acc += k.data()[((oc * c + ic) * ks + ky) * ks + kx]
                                * x.data()[(ic * h + sy as usize) * w + sx as usize];
                        }
                    }
                }
                out[(oc * h + y) * w + xx] = acc;
            }
        }
    }
    out
}

#[test]
fn conv_identity_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let img = random(&[1, 5, 7], &mut rng);
    let mut tape = Tape::new();
    let x = tape.constant(img.clone());
    let k = tape.constant(t64(&[1, 1, 1, 1], vec![1.0]));
    let b = tape.constant(t64(&[1], vec![0.0]));
    let y = tape.conv2d(x, k, b).unwrap();
    assert_eq!(tape.value(y), &img);
}

#[test]
fn conv_all_ones_on_constant_field() {
    let c = 0.7;
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::full(&[1, 6, 6], c));
    let k = tape.constant(Tensor::full(&[1, 1, 3, 3], 1.0));
    let b = tape.constant(t64(&[1], vec![0.0]));
    let y = tape.conv2d(x, k, b).unwrap();
    let out = tape.value(y).data();
    for yy in 1..5 {
        for xx in 1..5 {
            assert!((out[yy * 6 + xx] - 9.0 * c).abs() < 1e-12);
        }
    }
    // Corners see four in-bounds taps.
    assert!((out[0] - 4.0 * c).abs() < 1e-12);
}

#[test]
fn conv_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random(&[1, 5, 5], &mut rng);
    let k = random(&[2, 1, 3, 3], &mut rng);
    let b = random(&[2], &mut rng);
    let mut tape = Tape::new();
    let (vx, vk, vb) = (
        tape.constant(x.clone()),
        tape.constant(k.clone()),
        tape.constant(b.clone()),
    );
    let y = tape.conv2d(vx, vk, vb).unwrap();
    let oracle = naive_conv(&x, &k, &b);
    for (a, e) in tape.value(y).data().iter().zip(&oracle) {
        assert!((a - e).abs() < 1e-6);
    }

    // Multi-channel, 5×5 kernels.
    let x = random(&[3, 6, 4], &mut rng);
    let k = random(&[2, 3, 5, 5], &mut rng);
    let b = random(&[2], &mut rng);
    let mut tape = Tape::new();
    let (vx, vk, vb) = (
        tape.constant(x.clone()),
        tape.constant(k.clone()),
        tape.constant(b.clone()),
    );
    let y = tape.conv2d(vx, vk, vb).unwrap();
    for (a, e) in tape.value(y).data().iter().zip(&naive_conv(&x, &k, &b)) {
        assert!((a - e).abs() < 1e-9);
    }
}

#[test]
fn conv_rejects_channel_mismatch() {
    let mut tape = Tape::<f64>::new();
    let x = tape.constant(Tensor::zeros(&[2, 4, 4]));
    let k = tape.constant(Tensor::zeros(&[1, 3, 3, 3]));
    let b = tape.constant(Tensor::zeros(&[1]));
    let err = tape.conv2d(x, k, b).unwrap_err();
    assert!(err.to_string().contains("2 channels"), "{err}");

    let k_even = tape.constant(Tensor::zeros(&[1, 2, 2, 2]));
    assert!(tape.conv2d(x, k_even, b).is_err());
}

#[test]
fn maxpool_small_cases() {
    let mut tape = Tape::new();
    let x = tape.constant(t64(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]));
    let y = tape.maxpool2x2(x).unwrap();
    assert_eq!(tape.value(y).data(), &[4.0]);

    let c = tape.constant(Tensor::full(&[2, 4, 6], 0.25));
    let y = tape.maxpool2x2(c).unwrap();
    assert_eq!(tape.value(y), &Tensor::full(&[2, 2, 3], 0.25));

    let odd = tape.constant(Tensor::zeros(&[1, 3, 4]));
    assert!(tape.maxpool2x2(odd).is_err());
}

#[test]
fn maxpool_matches_window_oracle_and_routes_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(&[1, 8, 8], &mut rng);
    let mut tape = Tape::new();
    let vx = tape.param(x.clone());
    let y = tape.maxpool2x2(vx).unwrap();
    let mut expected_pos = Vec::new();
    for oy in 0..4 {
        for ox in 0..4 {
            let cells = [
                (2 * oy) * 8 + 2 * ox,
                (2 * oy) * 8 + 2 * ox + 1,
                (2 * oy + 1) * 8 + 2 * ox,
                (2 * oy + 1) * 8 + 2 * ox + 1,
            ];
            let best = *cells
                .iter()
                .max_by(|a, b| x.data()[**a].partial_cmp(&x.data()[**b]).unwrap())
                .unwrap();
            assert_eq!(tape.value(y).data()[oy * 4 + ox], x.data()[best]);
            expected_pos.push(best);
        }
    }
    let zero = tape.constant(Tensor::zeros(&[1, 4, 4]));
    let loss = tape.mean_abs_diff(y, zero).unwrap();
    let grads = tape.backward(loss).unwrap();
    let g = grads.get(vx).unwrap();
    for (i, &gv) in g.data().iter().enumerate() {
        if expected_pos.contains(&i) {
            assert!(gv != 0.0);
        } else {
            assert_eq!(gv, 0.0);
        }
    }

    let report = check_gradients(&[x], FD_STEP, |tape, v| {
        let p = tape.maxpool2x2(v[0])?;
        let z = tape.constant(Tensor::full(&[1, 4, 4], 2.0));
        tape.mean_abs_diff(p, z)
    })
    .unwrap();
    assert!(report.max_rel_error < 1e-3, "{report:?}");
}

#[test]
fn maxpool_tie_goes_to_first_row_major() {
    let mut tape = Tape::new();
    let x = tape.param(t64(&[1, 2, 2], vec![0.0, 5.0, 5.0, 5.0]));
    let y = tape.maxpool2x2(x).unwrap();
    let z = tape.constant(Tensor::zeros(&[1, 1, 1]));
    let loss = tape.mean_abs_diff(y, z).unwrap();
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn upsample_replicates() {
    let mut tape = Tape::new();
    let x = tape.constant(t64(&[1, 1, 1], vec![1.0]));
    let y = tape.upsample2x_nearest(x).unwrap();
    assert_eq!(tape.value(y).data(), &[1.0, 1.0, 1.0, 1.0]);

    let x = tape.constant(t64(&[1, 1, 2], vec![1.0, 2.0]));
    let y = tape.upsample2x_nearest(x).unwrap();
    assert_eq!(tape.value(y).shape(), &[1, 2, 4]);
    assert_eq!(tape.value(y).data(), &[1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0]);
}

#[test]
fn pool_of_upsampled_constant_is_identity() {
    let mut tape = Tape::new();
    let c = Tensor::full(&[3, 4, 2], -0.4);
    let x = tape.constant(c.clone());
    let up = tape.upsample2x_nearest(x).unwrap();
    let down = tape.maxpool2x2(up).unwrap();
    assert_eq!(tape.value(down), &c);
}

#[test]
fn upsample_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = random(&[1, 3, 3], &mut rng);
    let target = random(&[1, 6, 6], &mut rng);
    let report = check_gradients(&[x], FD_STEP, |tape, v| {
        let up = tape.upsample2x_nearest(v[0])?;
        let t = tape.constant(target.clone());
        tape.mean_abs_diff(up, t)
    })
    .unwrap();
    assert!(report.max_rel_error < 1e-3, "{report:?}");
}

#[test]
fn activation_values() {
    let mut tape = Tape::new();
    let x = tape.constant(t64(&[3], vec![0.0, -1.0, 2.0]));
    let s = tape.activation(x, Activation::Sigmoid);
    let l = tape.activation(x, Activation::LeakyRelu);
    assert_eq!(tape.value(s).data()[0], 0.5);
    assert!((tape.value(l).data()[1] + 0.1).abs() < 1e-15);
    assert_eq!(tape.value(l).data()[2], 2.0);
    assert!(sigmoid(-800.0f64).is_finite() && sigmoid(800.0f64) == 1.0);
}

#[test]
fn activation_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in [Activation::LeakyRelu, Activation::Sigmoid] {
        let x = random(&[2, 3, 3], &mut rng);
        let target = random(&[2, 3, 3], &mut rng).map(|v| v * 3.0);
        let report = check_gradients(&[x], FD_STEP, |tape, v| {
            let a = tape.activation(v[0], kind);
            let t = tape.constant(target.clone());
            tape.mean_abs_diff(a, t)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-3, "{kind:?}: {report:?}");
    }
}

#[test]
fn mean_abs_diff_cases() {
    let mut tape = Tape::new();
    let a = tape.constant(t64(&[2], vec![0.0, 0.0]));
    let b = tape.constant(t64(&[2], vec![1.0, 0.0]));
    let d = tape.mean_abs_diff(a, b).unwrap();
    assert_eq!(tape.value(d).item(), 0.5);
    let same = tape.mean_abs_diff(a, a).unwrap();
    assert_eq!(tape.value(same).item(), 0.0);

    let c = tape.constant(t64(&[3], vec![0.0; 3]));
    assert!(tape.mean_abs_diff(a, c).is_err());
}

#[test]
fn mean_abs_diff_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let a = random(&[4, 4], &mut rng);
    let b = random(&[4, 4], &mut rng);
    let mut oracle = 0.0;
    for i in 0..16 {
        oracle += (a.data()[i] - b.data()[i]).abs();
    }
    oracle /= 16.0;
    let mut tape = Tape::new();
    let (va, vb) = (tape.constant(a.clone()), tape.constant(b.clone()));
    let d = tape.mean_abs_diff(va, vb).unwrap();
    assert!((tape.value(d).item() - oracle).abs() < 1e-9);

    let report = check_gradients(&[a, b], FD_STEP, |tape, v| tape.mean_abs_diff(v[0], v[1])).unwrap();
    assert!(report.max_rel_error < 1e-3, "{report:?}");
}

#[test]
fn abs_scalar_cases() {
    let mut tape = Tape::new();
    let x = tape.param(Tensor::scalar(-0.3));
    let y = tape.abs(x).unwrap();
    assert_eq!(tape.value(y).item(), 0.3);

    let z = tape.param(Tensor::scalar(0.0));
    let ay = tape.abs(z).unwrap();
    assert_eq!(tape.value(ay).item(), 0.0);
    let g = tape.backward(ay).unwrap();
    assert_eq!(g.get(z).unwrap().item(), 0.0);

    let report = check_gradients(&[Tensor::scalar(0.7)], FD_STEP, |tape, v| tape.abs(v[0])).unwrap();
    assert!(report.max_rel_error < 1e-9, "{report:?}");

    let m = tape.constant(Tensor::zeros(&[2]));
    assert!(tape.abs(m).is_err());
}

#[test]
fn backward_sign_over_n() {
    let mut tape = Tape::new();
    let w = tape.param(t64(&[2], vec![2.0, -2.0]));
    let unused = tape.param(t64(&[3], vec![1.0, 2.0, 3.0]));
    let zero = tape.constant(Tensor::zeros(&[2]));
    let loss = tape.mean_abs_diff(w, zero).unwrap();
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.get(w).unwrap().data(), &[0.5, -0.5]);
    assert_eq!(grads.get(unused).unwrap().data(), &[0.0, 0.0, 0.0]);
    assert!(grads.get(zero).is_none());
}

#[test]
fn backward_accumulates_over_fan_out() {
    // loss = |x| + |x| + 3·|x|  →  d/dx = 5·sign(x)
    let mut tape = Tape::new();
    let x = tape.param(Tensor::scalar(-1.5));
    let a = tape.abs(x).unwrap();
    let b = tape.abs(x).unwrap();
    let c = tape.scale(a, 3.0).unwrap();
    let s = tape.add(a, b).unwrap();
    let loss = tape.add(s, c).unwrap();
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.get(x).unwrap().item(), -5.0);
}

#[test]
fn backward_rejects_non_scalar_root() {
    let mut tape = Tape::new();
    let x = tape.param(Tensor::<f64>::zeros(&[2]));
    assert!(tape.backward(x).is_err());
}

#[test]
fn conv_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random(&[2, 4, 6], &mut rng);
    let k = random(&[3, 2, 3, 3], &mut rng);
    let b = random(&[3], &mut rng);
    let target = random(&[3, 4, 6], &mut rng).map(|v| v * 4.0);
    let report = check_gradients(&[x, k, b], FD_STEP, |tape, v| {
        let y = tape.conv2d(v[0], v[1], v[2])?;
        let t = tape.constant(target.clone());
        tape.mean_abs_diff(y, t)
    })
    .unwrap();
    assert!(report.max_rel_error < 1e-3, "{report:?}");
}

#[test]
fn replay_is_bit_identical() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = random(&[1, 8, 8], &mut rng).cast::<f32>();
        let k = random(&[4, 1, 3, 3], &mut rng).cast::<f32>();
        let b = random(&[4], &mut rng).cast::<f32>();
        let mut tape = Tape::new();
        let (vx, vk, vb) = (tape.param(x), tape.param(k), tape.param(b));
        let y = tape.conv2d(vx, vk, vb).unwrap();
        let y = tape.activation(y, Activation::LeakyRelu);
        let y = tape.maxpool2x2(y).unwrap();
        let z = tape.constant(Tensor::zeros(&[4, 4, 4]));
        let loss = tape.mean_abs_diff(y, z).unwrap();
        let g = tape.backward(loss).unwrap();
        (tape.value(loss).item().to_bits(), g.get(vk).unwrap().clone())
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn same_padding_preserves_spatial_dims(
        k in prop::sample::select(vec![1usize, 3, 5, 7]),
        h in 1usize..9,
        w in 1usize..9,
        c in 1usize..3,
        o in 1usize..3,
    ) {
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Tensor::zeros(&[c, h, w]));
        let kv = tape.constant(Tensor::zeros(&[o, c, k, k]));
        let b = tape.constant(Tensor::zeros(&[o]));
        let y = tape.conv2d(x, kv, b).unwrap();
        prop_assert_eq!(tape.value(y).shape(), &[o, h, w]);
    }

    #[test]
    fn forward_outputs_finite(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random(&[1, 4, 4], &mut rng).map(|v| v * 50.0);
        let mut tape = Tape::new();
        let vx = tape.constant(x);
        let s = tape.activation(vx, Activation::Sigmoid);
        let l = tape.activation(vx, Activation::LeakyRelu);
        prop_assert!(tape.value(s).all_finite());
        prop_assert!(tape.value(l).all_finite());
    }
}
