use proptest::prelude::*;
use std::collections::BTreeMap;
use walkpot::exit::exit_upper;
use walkpot::kernel::potential_kernel;
use walkpot::{IncrementLaw, TailModel};

// Mean-zero laws on {-2..2}: a mass at -2 balanced by 2a at 1, b at 2 by 2b at -1,
// plus symmetric and lazy parts.
fn law_from(a: f64, b: f64, s: f64, r: f64) -> IncrementLaw {
    let total = 3.0 * a + 3.0 * b + 2.0 * s + r;
    let mut core = BTreeMap::new();
    core.insert(-2, a / total);
    core.insert(-1, (2.0 * b + s) / total);
    core.insert(0, r / total);
    core.insert(1, (2.0 * a + s) / total);
    core.insert(2, b / total);
    core.retain(|_, p| *p > 0.0);
    IncrementLaw::build(&core, TailModel::None, TailModel::None).unwrap()
}

fn weights() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0..1.0f64, 0.0..1.0f64, 0.05..1.0f64, 0.0..0.5f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exit_probability_is_monotone_and_reflects((a, b, s, r) in weights(), n in 3i64..40) {
        let law = law_from(a, b, s, r);
        let up = exit_upper(&law, n).unwrap();
        let down = exit_upper(&law.reflect(), n).unwrap();
        for x in 1..n {
            let p = up.get(x).value;
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
            if x > 1 {
                prop_assert!(p + 1e-12 >= up.get(x - 1).value);
            }
            // exiting the top from x is exiting the bottom from n - x after reflection
            prop_assert!((p + down.get(n - x).value - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn potential_kernel_is_harmonic_off_origin((a, b, s, r) in weights()) {
        let law = law_from(a, b, s, r);
        let pt = potential_kernel(&law, 256, 1e-10).unwrap();
        prop_assert!(pt.a(0).abs() <= 1e-10);
        for x in -20i64..=20 {
            let pa: f64 = (-2i64..=2).map(|j| law.pmf(j) * pt.a(x + j)).sum();
            let target = pt.a(x) + if x == 0 { 1.0 } else { 0.0 };
            prop_assert!((pa - target).abs() <= 1e-8, "x={} {} vs {}", x, pa, target);
        }
    }
}
