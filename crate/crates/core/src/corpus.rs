//! Named laws used by the tests, the acceptance suite and the command line.

use crate::increment::{IncrementLaw, Side, TailModel};
use crate::special::hurwitz_zeta;
use std::collections::BTreeMap;

fn finite(pairs: &[(i64, f64)]) -> IncrementLaw {
    let core: BTreeMap<i64, f64> = pairs.iter().cloned().collect();
    IncrementLaw::build(&core, TailModel::None, TailModel::None).expect("corpus law")
}

pub fn srw() -> IncrementLaw {
    finite(&[(-1, 0.5), (1, 0.5)])
}

/// Finite variance, skewed, jumps of both signs larger than one.
pub fn asym_a() -> IncrementLaw {
    finite(&[(-3, 0.1), (-1, 0.4), (1, 0.3), (2, 0.2)])
}

pub fn asym_b() -> IncrementLaw {
    finite(&[(-4, 0.1), (-1, 0.4), (1, 0.2), (2, 0.3)])
}

/// Downward jumps of size one only; variance 2.
pub fn left_continuous() -> IncrementLaw {
    finite(&[(-1, 2.0 / 3.0), (2, 1.0 / 3.0)])
}

/// Power left tail of index 1.5, bounded upward jumps.
pub fn heavy15() -> IncrementLaw {
    IncrementLaw::balanced_tail(&BTreeMap::from([(1, 0.9), (2, 0.1)]), Side::Left, 1.5, 1).expect("corpus law")
}

pub fn heavy18() -> IncrementLaw {
    IncrementLaw::balanced_tail(&BTreeMap::from([(1, 0.8), (3, 0.2)]), Side::Left, 1.8, 1).expect("corpus law")
}

/// Reflection of [`heavy15`]: heavy right tail, so `E Z` is infinite.
pub fn heavy_right15() -> IncrementLaw {
    heavy15().reflect()
}

/// Left tail of index 2 (infinite variance, logarithmic truncated second moment).
pub fn tail2() -> IncrementLaw {
    IncrementLaw::balanced_tail(&BTreeMap::from([(1, 0.9), (2, 0.1)]), Side::Left, 2.0, 1).expect("corpus law")
}

/// Left tail of index 1.5 and right tail of index 1.8: `E Z` finite while
/// `a(-x)` is unbounded.
pub fn both_heavy() -> IncrementLaw {
    let right_amp = 0.05;
    let right = TailModel::power(1.8, right_amp, 2);
    let (mr, er) = (right_amp * hurwitz_zeta(2.8, 2.0), right_amp * hurwitz_zeta(1.8, 2.0));
    let left_amp = er / hurwitz_zeta(1.5, 2.0);
    let ml = left_amp * hurwitz_zeta(2.5, 2.0);
    let half = 0.5 * (1.0 - mr - ml);
    let core = BTreeMap::from([(-1, half), (1, half)]);
    IncrementLaw::build(&core, TailModel::power(1.5, left_amp, 2), right).expect("corpus law")
}

/// Every corpus law with its name.
pub fn all() -> Vec<(&'static str, IncrementLaw)> {
    vec![
        ("srw", srw()),
        ("asym_a", asym_a()),
        ("asym_b", asym_b()),
        ("left_continuous", left_continuous()),
        ("heavy15", heavy15()),
        ("heavy18", heavy18()),
        ("heavy_right15", heavy_right15()),
        ("tail2", tail2()),
        ("both_heavy", both_heavy()),
    ]
}

pub fn by_name(name: &str) -> Option<IncrementLaw> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, l)| l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_laws_are_centred() {
        for (name, l) in all() {
            let m = l.moments();
            assert!(m.mean.abs() < 1e-12, "{name}");
        }
        assert!(left_continuous().is_left_continuous());
        assert!(!both_heavy().moments().finite_variance());
    }
}
