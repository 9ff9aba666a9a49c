//! Analytic head gradients against central finite differences of an
//! independent, deliberately naive forward pass.

mod common;

use common::gradcheck::{analytic, batch, check, instance};
use common::oracle::{self, erf};

#[test]
fn gradients_match_finite_differences() {
    let s = check(20);
    for (name, (e32, e64)) in ["w1", "b1", "w2", "b2"].iter().zip(s.layer32.iter().zip(&s.layer64)) {
        assert!(*e64 < 1e-6, "{name} 64-bit rel err {e64:e}");
        assert!(*e32 < 1e-3, "{name} 32-bit rel err {e32:e}");
    }
    assert!(s.end64 < 1e-6 && s.end32 < 1e-3, "end-to-end {:e} / {:e}", s.end32, s.end64);
}

#[test]
fn longhand_backprop_agrees() {
    // The per-scalar oracle backprop and the library agree to rounding.
    for seed in [3, 4] {
        let inst = instance(seed);
        let o = oracle::grads(&inst.params, &batch(&inst));
        let a = analytic::<f64>(&inst);
        for (x, y) in a.concat().iter().zip(o.tensors().concat()) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}

#[test]
fn oracle_erf_sanity() {
    assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-14);
    assert!((erf(-1.0) + 0.842_700_792_949_714_9).abs() < 1e-14);
    assert!((erf(3.5) - 0.999_999_256_901_627_7).abs() < 1e-14);
}
