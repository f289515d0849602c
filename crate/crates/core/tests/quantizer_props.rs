use proptest::prelude::*;
use qcadmm_core::linalg::norm2;
use qcadmm_core::quantizer::{quantize_scalar, quantize_vector, QuantizerConfig};

fn q(delta: f64) -> QuantizerConfig {
    QuantizerConfig::new(delta).unwrap()
}

proptest! {
    // boundary rule rounds up: error = Q(y) − y lands in (−Δ/2, Δ/2]
    #[test]
    fn scalar_error_interval(y in -1e6f64..1e6, delta in prop::sample::select(vec![0.1, 0.25, 1.0, 2.5, 10.0])) {
        let qc = q(delta);
        let e = quantize_scalar(y, &qc).unwrap() - y;
        prop_assert!(e > -delta / 2.0 - 1e-12);
        prop_assert!(e <= delta / 2.0 + 1e-12);
    }

    #[test]
    fn idempotent(y in -1e6f64..1e6, delta in prop::sample::select(vec![0.1, 1.0, 2.5])) {
        let qc = q(delta);
        let once = quantize_scalar(y, &qc).unwrap();
        let twice = quantize_scalar(once, &qc).unwrap();
        prop_assert_eq!(once.to_bits(), twice.to_bits());
    }

    #[test]
    fn monotone(a in -1e5f64..1e5, b in -1e5f64..1e5, delta in prop::sample::select(vec![0.1, 1.0, 2.5])) {
        let qc = q(delta);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize_scalar(lo, &qc).unwrap() <= quantize_scalar(hi, &qc).unwrap());
    }

    #[test]
    fn vector_error_bound(w in prop::collection::vec(-1e4f64..1e4, 1..40), delta in prop::sample::select(vec![0.1, 1.0, 2.5])) {
        let qc = q(delta);
        let (w_q, e) = quantize_vector(&w, &qc).unwrap();
        prop_assert_eq!(w_q.len(), w.len());
        let bound = 0.5 * delta * (w.len() as f64).sqrt();
        prop_assert!(norm2(&e) <= bound + 1e-12);
        for (eq, (wq, wi)) in e.iter().zip(w_q.iter().zip(&w)) {
            prop_assert_eq!(*eq, wq - wi);
        }
    }

    #[test]
    fn zero_delta_identity(w in prop::collection::vec(-1e6f64..1e6, 1..20)) {
        let (w_q, e) = quantize_vector(&w, &QuantizerConfig::identity()).unwrap();
        prop_assert_eq!(w_q, w);
        prop_assert!(e.iter().all(|&v| v == 0.0));
    }
}
