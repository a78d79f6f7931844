//! Certificate coefficients against an independent path count.

use std::collections::HashMap;

use hsdfactor::opalgebra::{expand_laplace_power, sandwich_holds};
use hsdfactor::scalar::qi;
use hsdfactor::weights::Weight;

fn count(lo: &[i64], hi: &[i64], memo: &mut HashMap<Vec<i64>, i64>) -> i64 {
    if lo == hi {
        return 1;
    }
    if let Some(c) = memo.get(lo) {
        return *c;
    }
    let mut total = 0;
    for i in 0..lo.len() {
        let mut next = lo.to_vec();
        next[i] += 1;
        if next[i] <= hi[i] && next.windows(2).all(|p| p[0] >= p[1]) {
            total += count(&next, hi, memo);
        }
    }
    memo.insert(lo.to_vec(), total);
    total
}

fn dominant(n: usize, max: i64) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                let top = p.last().copied().unwrap_or(max);
                (0..=top).map(move |e| [p.clone(), vec![e]].concat())
            })
            .collect();
    }
    out
}

#[test]
fn coefficients_are_signed_path_counts() {
    for n in 1..=3 {
        for mu in dominant(n, 2) {
            let cert = expand_laplace_power(&Weight::new(mu.clone()), mu[0] as usize + 1).unwrap();
            for (lambda, c) in &cert.coefficients {
                let d: i64 = mu.iter().zip(&lambda.entries).map(|(a, b)| a - b).sum();
                let paths = count(&lambda.entries, &mu, &mut HashMap::new());
                let expected = if d % 2 == 0 { -qi(paths) } else { qi(paths) };
                assert_eq!(c, &expected, "mu {mu:?} lambda {lambda}");
            }
        }
    }
}

#[test]
fn top_coefficient_is_minus_one() {
    for mu in [vec![0], vec![1, 0], vec![2, 1], vec![2, 2, 1]] {
        let w = Weight::new(mu.clone());
        let cert = expand_laplace_power(&w, mu[0] as usize + 1).unwrap();
        assert_eq!(cert.coefficients[&w], qi(-1));
        assert!(sandwich_holds(&cert).unwrap());
    }
}

#[test]
fn higher_powers_stay_in_box() {
    let mu = Weight::new(vec![2, 1]);
    for p in 3..=5 {
        let cert = expand_laplace_power(&mu, p).unwrap();
        assert!(cert.residual.is_zero());
        assert_eq!(cert.support().len(), 4);
    }
}
