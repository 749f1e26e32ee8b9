use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::BTreeMap;
use walkpot::exit::exit_upper;
use walkpot::{IncrementLaw, TailModel};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact Gaussian elimination of `(I - Q) h = b` on `1..N-1`.
fn exact_exit(pmf: &[(i64, BigRational)], n: i64) -> Vec<BigRational> {
    let m = (n - 1) as usize;
    let p = |d: i64| {
        pmf.iter()
            .find(|(k, _)| *k == d)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(BigRational::zero)
    };
    let mut a = vec![vec![BigRational::zero(); m + 1]; m];
    for i in 0..m {
        let x = i as i64 + 1;
        for j in 0..m {
            let y = j as i64 + 1;
            let d = if i == j { BigRational::one() } else { BigRational::zero() };
            a[i][j] = d - p(y - x);
        }
        a[i][m] = pmf
            .iter()
            .filter(|(k, _)| x + k >= n)
            .fold(BigRational::zero(), |s, (_, v)| s + v);
    }
    for k in 0..m {
        let piv = (k..m).find(|&r| !a[r][k].is_zero()).unwrap();
        a.swap(k, piv);
        for r in 0..m {
            if r != k && !a[r][k].is_zero() {
                let f = &a[r][k] / &a[k][k];
                for c in k..=m {
                    let t = &f * &a[k][c];
                    a[r][c] -= t;
                }
            }
        }
    }
    (0..m).map(|i| &a[i][m] / &a[i][i]).collect()
}

#[test]
fn exit_upper_matches_exact_rational_solution() {
    let exact_pmf = vec![(-2, q(1, 5)), (-1, q(1, 5)), (1, q(3, 5))];
    let core: BTreeMap<i64, f64> = exact_pmf.iter().map(|(k, v)| (*k, v.to_f64().unwrap())).collect();
    let law = IncrementLaw::build(&core, TailModel::None, TailModel::None).unwrap();
    let sol = exit_upper(&law, 6).unwrap();
    let exact = exact_exit(&exact_pmf, 6);
    for (i, h) in exact.iter().enumerate() {
        let x = i as i64 + 1;
        let got = sol.get(x);
        assert!(got.agrees_with(h.to_f64().unwrap(), 1e-15), "x={x}: {got:?} vs {h}");
        assert!(got.err < 1e-13);
    }
}
