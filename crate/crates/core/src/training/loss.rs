//! The two CR training objectives. `‖·‖` is the mean absolute difference
//! over pixels.

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// `‖κ11−κ21‖ + ‖κ12−κ22‖ + |‖κ11−κ12‖ − δ| + |‖κ21−κ22‖ − δ|`
///
/// `k11`/`k12` are image-generator CRs of the two frames, `k21`/`k22` the
/// depth-generator CRs, `delta` the frames' Chebyshev score.
pub fn double_siamese_on_tape<T: Real>(
    tape: &mut Tape<T>,
    k11: Var,
    k12: Var,
    k21: Var,
    k22: Var,
    delta: T,
) -> Result<Var> {
    let cross1 = tape.mean_abs_diff(k11, k21)?;
    let cross2 = tape.mean_abs_diff(k12, k22)?;
    let d = tape.constant(Tensor::scalar(delta));
    let img_pair = tape.mean_abs_diff(k11, k12)?;
    let img_gap = tape.sub(img_pair, d)?;
    let img_term = tape.abs(img_gap)?;
    let depth_pair = tape.mean_abs_diff(k21, k22)?;
    let depth_gap = tape.sub(depth_pair, d)?;
    let depth_term = tape.abs(depth_gap)?;
    let cross = tape.add(cross1, cross2)?;
    let siamese = tape.add(img_term, depth_term)?;
    tape.add(cross, siamese)
}

/// `‖κ1−κ2‖ + ‖κ1−κ_edge‖ + ‖κ2−κ_edge‖`
pub fn common_edges_on_tape<T: Real>(tape: &mut Tape<T>, k1: Var, k2: Var, edge: Var) -> Result<Var> {
    let a = tape.mean_abs_diff(k1, k2)?;
    let b = tape.mean_abs_diff(k1, edge)?;
    let c = tape.mean_abs_diff(k2, edge)?;
    let ab = tape.add(a, b)?;
    tape.add(ab, c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiameseBatchItem<T> {
    pub k11: Tensor<T>,
    pub k12: Tensor<T>,
    pub k21: Tensor<T>,
    pub k22: Tensor<T>,
    pub delta: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgesBatchItem<T> {
    pub k1: Tensor<T>,
    pub k2: Tensor<T>,
    pub edge: Tensor<T>,
}

fn same_shapes<T: Real>(ts: &[&Tensor<T>]) -> Result<()> {
    let first = ts[0].shape();
    if ts.iter().any(|t| t.shape() != first) {
        let shapes: Vec<_> = ts.iter().map(|t| t.shape().to_vec()).collect();
        return Err(Error::shape(format!("CR shapes differ: {shapes:?}")));
    }
    Ok(())
}

pub fn double_siamese_loss<T: Real>(item: &SiameseBatchItem<T>) -> Result<T> {
    same_shapes(&[&item.k11, &item.k12, &item.k21, &item.k22])?;
    if !(item.delta >= T::zero() && item.delta <= T::one()) {
        return Err(Error::invalid(format!(
            "delta must lie in [0, 1], got {:?}",
            item.delta
        )));
    }
    let mut tape = Tape::new();
    let v: Vec<Var> = [&item.k11, &item.k12, &item.k21, &item.k22]
        .into_iter()
        .map(|t| tape.constant(t.clone()))
        .collect();
    let loss = double_siamese_on_tape(&mut tape, v[0], v[1], v[2], v[3], item.delta)?;
    Ok(tape.value(loss).item())
}

pub fn common_edges_loss<T: Real>(item: &EdgesBatchItem<T>) -> Result<T> {
    same_shapes(&[&item.k1, &item.k2, &item.edge])?;
    let mut tape = Tape::new();
    let (a, b, e) = (
        tape.constant(item.k1.clone()),
        tape.constant(item.k2.clone()),
        tape.constant(item.edge.clone()),
    );
    let loss = common_edges_on_tape(&mut tape, a, b, e)?;
    Ok(tape.value(loss).item())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn t(v: &[f64]) -> Tensor<f64> {
        Tensor::new(&[v.len()], v.to_vec()).unwrap()
    }

    fn rand4x4(rng: &mut ChaCha8Rng) -> Tensor<f64> {
        Tensor::new(&[1, 4, 4], (0..16).map(|_| rng.random()).collect()).unwrap()
    }

    fn mad(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
        let s: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).sum();
        s / a.len() as f64
    }

    #[test]
    fn siamese_zero_cases() {
        let k = t(&[0.3, 0.7]);
        let item = SiameseBatchItem {
            k11: k.clone(),
            k12: k.clone(),
            k21: k.clone(),
            k22: k,
            delta: 0.0,
        };
        assert_eq!(double_siamese_loss(&item).unwrap(), 0.0);

        let item = SiameseBatchItem {
            k11: t(&[0.5]),
            k12: t(&[0.1]),
            k21: t(&[0.5]),
            k22: t(&[0.1]),
            delta: 0.4,
        };
        assert!(double_siamese_loss(&item).unwrap().abs() < 1e-15);
    }

    #[test]
    fn edges_cases() {
        let k = t(&[0.2, 0.9, 0.0]);
        let item = EdgesBatchItem {
            k1: k.clone(),
            k2: k.clone(),
            edge: k,
        };
        assert_eq!(common_edges_loss(&item).unwrap(), 0.0);

        let item = EdgesBatchItem {
            k1: t(&[0.2]),
            k2: t(&[0.4]),
            edge: t(&[1.0]),
        };
        assert!((common_edges_loss(&item).unwrap() - 1.6).abs() < 1e-12);
    }

    #[test]
    fn random_items_match_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (a, b, c, d) = (
            rand4x4(&mut rng),
            rand4x4(&mut rng),
            rand4x4(&mut rng),
            rand4x4(&mut rng),
        );
        let delta = 0.3;
        let oracle = mad(&a, &c) + mad(&b, &d) + (mad(&a, &b) - delta).abs() + (mad(&c, &d) - delta).abs();
        let item = SiameseBatchItem {
            k11: a.clone(),
            k12: b.clone(),
            k21: c.clone(),
            k22: d,
            delta,
        };
        assert!((double_siamese_loss(&item).unwrap() - oracle).abs() < 1e-9);

        let oracle = mad(&a, &b) + mad(&a, &c) + mad(&b, &c);
        let item = EdgesBatchItem { k1: a, k2: b, edge: c };
        assert!((common_edges_loss(&item).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn rejects_mismatched_shapes_and_bad_delta() {
        let item = SiameseBatchItem {
            k11: t(&[0.1]),
            k12: t(&[0.1, 0.2]),
            k21: t(&[0.1]),
            k22: t(&[0.1]),
            delta: 0.1,
        };
        assert!(double_siamese_loss(&item).is_err());
        let item = SiameseBatchItem {
            k12: t(&[0.1]),
            delta: 1.5,
            ..item
        };
        assert!(double_siamese_loss(&item).is_err());
        let item = EdgesBatchItem {
            k1: t(&[0.1]),
            k2: t(&[0.1]),
            edge: t(&[0.1, 0.0]),
        };
        assert!(common_edges_loss(&item).is_err());
    }

    proptest! {
        #[test]
        fn siamese_nonnegative_and_pair_symmetric(seed in any::<u64>(), delta in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b, c, d) = (rand4x4(&mut rng), rand4x4(&mut rng), rand4x4(&mut rng), rand4x4(&mut rng));
            let item = SiameseBatchItem { k11: a.clone(), k12: b.clone(), k21: c.clone(), k22: d.clone(), delta };
            let swapped = SiameseBatchItem { k11: b, k12: a, k21: d, k22: c, delta };
            let l = double_siamese_loss(&item).unwrap();
            prop_assert!(l >= 0.0);
            prop_assert!((l - double_siamese_loss(&swapped).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn siamese_zero_iff_conditions(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (rand4x4(&mut rng), rand4x4(&mut rng));
            let delta = mad(&a, &b);
            let zero = SiameseBatchItem { k11: a.clone(), k12: b.clone(), k21: a.clone(), k22: b.clone(), delta };
            prop_assert!(double_siamese_loss(&zero).unwrap().abs() < 1e-9);
            // Breaking any one condition makes the loss positive.
            let shifted = if delta > 0.5 { delta - 0.05 } else { delta + 0.05 };
            let off = SiameseBatchItem { delta: shifted, ..zero.clone() };
            prop_assert!(double_siamese_loss(&off).unwrap() > 1e-9);
            let c = rand4x4(&mut rng);
            let cross = SiameseBatchItem { k21: c, ..zero };
            prop_assert!(double_siamese_loss(&cross).unwrap() > 1e-9);
        }

        #[test]
        fn edges_nonnegative_and_generator_symmetric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b, e) = (rand4x4(&mut rng), rand4x4(&mut rng), rand4x4(&mut rng));
            let l = common_edges_loss(&EdgesBatchItem { k1: a.clone(), k2: b.clone(), edge: e.clone() }).unwrap();
            let r = common_edges_loss(&EdgesBatchItem { k1: b, k2: a, edge: e }).unwrap();
            prop_assert!(l >= 0.0);
            prop_assert!((l - r).abs() < 1e-12);
        }
    }
}
