//! Acceptance suite: one line per criterion, exact arithmetic throughout.
//! Runs as a plain binary so the summary is always printed.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use hsdfactor::clifford::gamma_rep;
use hsdfactor::hsd::{
    explicit_hsd, kernel_basis, twistor_inversion, verify_corollary, verify_factorization_numeric, verify_identities,
    verify_induction_dims,
};
use hsdfactor::linalg::DenseMatrix;
use hsdfactor::opalgebra::{
    canonical_path_operator, certificate_is_sound, expand_laplace_power, normal_form, verify_path_independence,
};
use hsdfactor::polyspace::{apply, homogeneous_basis, laplace, OperatorSpec, Var};
use hsdfactor::repthy::{casimir_projectors, simplicial_monogenic_basis, weyl_dim, DEFAULT_CAP};
use hsdfactor::scalar::GaussRat;
use hsdfactor::weights::{Direction, Weight};

fn w(e: &[i64]) -> Weight {
    Weight::new(e.to_vec())
}

/// Dominant integral weights of rank `n` with entries in `0..=max`.
fn dominant(n: usize, max: i64) -> Vec<Weight> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                let top = p.last().copied().unwrap_or(max);
                (0..=top).map(move |e| {
                    let mut q = p.clone();
                    q.push(e);
                    q
                })
            })
            .collect();
    }
    out.into_iter().map(Weight::new).collect()
}

fn below(nu: &Weight, mu: &Weight) -> bool {
    nu.entries.iter().zip(&mu.entries).all(|(a, b)| a <= b)
}

fn box_member(mu: &Weight, lambda: &Weight) -> bool {
    let n = mu.entries.len();
    (0..n).all(|i| {
        let floor = if i + 1 < n { mu.entries[i + 1] } else { 0 };
        lambda.entries[i] <= mu.entries[i] && lambda.entries[i] >= floor
    })
}

/// Number of dominant unit-step paths from `nu` up to `mu`, by memoized recursion.
fn path_count(nu: &[i64], mu: &[i64], memo: &mut HashMap<Vec<i64>, u64>) -> u64 {
    if nu == mu {
        return 1;
    }
    if let Some(c) = memo.get(nu) {
        return *c;
    }
    let mut total = 0;
    for i in 0..nu.len() {
        let mut next = nu.to_vec();
        next[i] += 1;
        let dominant = next.windows(2).all(|p| p[0] >= p[1]);
        if next[i] <= mu[i] && dominant {
            total += path_count(&next, mu, memo);
        }
    }
    memo.insert(nu.to_vec(), total);
    total
}

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion_1() -> Outcome {
    let mut pairs = 0;
    let mut failures = Vec::new();
    for n in 1..=3 {
        for mu in dominant(n, 3) {
            for nu in dominant(n, 3).into_iter().filter(|nu| below(nu, &mu)) {
                let r = verify_path_independence(&nu, &mu, DEFAULT_CAP).expect("enumeration");
                let expected = path_count(&nu.entries, &mu.entries, &mut HashMap::new());
                pairs += 1;
                if !r.pass || r.path_count as u64 != expected {
                    failures.push(format!("{nu}->{mu}"));
                }
            }
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("{pairs} pairs, failures {failures:?}") }
}

fn criterion_2() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for n in 1..=3 {
        for mu in dominant(n, 3) {
            for lambda in dominant(n, 3).into_iter().filter(|l| below(l, &mu)) {
                let expect_zero = !box_member(&mu, &lambda);
                for dir in [Direction::Forward, Direction::Reverse] {
                    let nf = normal_form(&canonical_path_operator(&lambda, &mu, dir).expect("path"));
                    checked += 1;
                    if nf.is_zero() != expect_zero {
                        failures.push(format!("{lambda} {mu} {dir:?}"));
                    }
                }
            }
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("{checked} operators, failures {failures:?}") }
}

fn criterion_3() -> Outcome {
    let mut certificates = 0;
    let mut failures = Vec::new();
    let mut residuals = Vec::new();
    for n in 1..=3 {
        for mu in dominant(n, 2) {
            let first = mu.entries[0] as usize;
            for p in [first + 1, first + 2] {
                let cert = expand_laplace_power(&mu, p).expect("expansion terminates");
                certificates += 1;
                let support_ok = cert.support().iter().all(|l| box_member(&mu, l));
                let sound = certificate_is_sound(&cert).expect("re-expansion");
                if !cert.residual.is_zero() || !support_ok || !sound {
                    failures.push(format!("{mu} p={p}"));
                }
            }
            if first > 0 {
                let cert = expand_laplace_power(&mu, first).expect("expansion terminates");
                residuals.push(format!("{mu}:{}", cert.residual.len()));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{certificates} certificates, failures {failures:?}; residual sizes at p = mu_1: {}", residuals.join(" ")),
    }
}

fn criterion_4() -> Outcome {
    let mut failures = Vec::new();
    let mut genuine_square = false;
    let mut checks = 0;
    for (l, m) in [(vec![0], 3), (vec![1], 3), (vec![2], 3), (vec![1], 5), (vec![1, 1], 5)] {
        let r = verify_identities(&w(&l), m, 3).expect("identities");
        checks += r.checks.len();
        if !r.pass {
            failures.push(format!("{l:?} m={m}"));
        }
        genuine_square |= r.checks.iter().any(|c| c.identity == 3);
    }
    Outcome {
        pass: failures.is_empty() && genuine_square,
        detail: format!("{checks} matrix identities, distance-2 check present: {genuine_square}, failures {failures:?}"),
    }
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (mu, m, degree) in [(vec![1], 3, 4), (vec![1], 3, 5), (vec![1, 0], 5, 4)] {
        let r = verify_factorization_numeric(&w(&mu), 2, m, degree).expect("numeric factorization");
        pass &= r.pass;
        let ratios: Vec<String> = r.ratios.iter().map(|x| format!("{}:{}", x.lambda, x.ratio)).collect();
        lines.push(format!("{mu:?} m={m} degree {degree} {} scalars [{}]", r.pass, ratios.join(" ")));
    }
    Outcome { pass, detail: lines.join("; ") }
}

fn criterion_6() -> Outcome {
    let op = explicit_hsd(&w(&[1]), 3).expect("R_1");
    let mut elements = 0;
    let mut biharmonic = true;
    let mut some_not_harmonic = false;
    for h in 0..=3 {
        for f in kernel_basis(&op, h).expect("kernel") {
            elements += 1;
            let lf = laplace(Var::X, &f).expect("laplace");
            some_not_harmonic |= !lf.is_zero();
            biharmonic &= laplace(Var::X, &lf).expect("laplace").is_zero();
        }
    }
    let report = verify_corollary(&w(&[1]), 3, 3).expect("corollary");
    Outcome {
        pass: biharmonic && some_not_harmonic && report.pass,
        detail: format!("{elements} kernel elements, all biharmonic {biharmonic}, bound attained {some_not_harmonic}"),
    }
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut inversions = 0;
    for k in 0..=2u32 {
        for h in 0..=3u32 {
            let r = verify_induction_dims(k, h, 3).expect("induction");
            // Spherical monogenics in R^3: dim M_h = 2(h + 1).
            let classical = k != 0 || r.dim_kernel == 2 * (h as usize + 1);
            if !r.pass || !classical {
                failures.push(format!("k={k} h={h}"));
            }
            if k >= 1 && h >= 1 {
                let lower = kernel_basis(&explicit_hsd(&w(&[i64::from(k) - 1]), 3).expect("R"), h as usize - 1).expect("kernel");
                for g in &lower {
                    let inv = twistor_inversion(g, h, k, 3).expect("inversion succeeds");
                    let dx = apply(&OperatorSpec::Dirac(Var::X), &inv.f).expect("apply");
                    let ug = apply(&OperatorSpec::VectorMult(Var::U(1)), &g.widen(1)).expect("apply");
                    let du = apply(&OperatorSpec::Dirac(Var::U(1)), &inv.f).expect("apply");
                    if dx != ug || !du.is_zero() {
                        failures.push(format!("inversion k={k} h={h}"));
                    }
                    inversions += 1;
                }
            }
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("12 (k, h) cases, {inversions} inversions, failures {failures:?}") }
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for l in [vec![0], vec![1], vec![2], vec![1, 1], vec![2, 1]] {
        let lambda = w(&l);
        let mut padded = l.clone();
        padded.resize(2, 0);
        let weyl = weyl_dim(&Weight::spin(padded), 5).expect("weyl");
        let realized = simplicial_monogenic_basis(&lambda, 5, DEFAULT_CAP).expect("basis").dim();
        pass &= weyl == realized as u128;
        lines.push(format!("{l:?}:{realized}/{weyl}"));
    }
    let fixed = simplicial_monogenic_basis(&w(&[1]), 5, DEFAULT_CAP).unwrap().dim() == 16
        && simplicial_monogenic_basis(&w(&[2, 1]), 5, DEFAULT_CAP).unwrap().dim() == 64;
    Outcome { pass: pass && fixed, detail: format!("realized/Weyl {}", lines.join(" ")) }
}

fn criterion_9() -> Outcome {
    let mut failures = Vec::new();
    for (l, m) in [(vec![0], 3), (vec![1], 3), (vec![2], 3), (vec![1], 5), (vec![1, 1], 5), (vec![2, 1], 5)] {
        let ps = casimir_projectors(&w(&l), m).expect("projectors");
        if !ps.check().expect("checks").all() {
            failures.push(format!("projectors {l:?} m={m}"));
        }
    }
    for m in [3, 5, 7] {
        let rep = gamma_rep(m).expect("gammas");
        let d = rep.spinor_dim();
        for a in 1..=m {
            for b in 1..=m {
                let ac = rep.gamma(a).mul(rep.gamma(b)).add(&rep.gamma(b).mul(rep.gamma(a)));
                let expected = if a == b { DenseMatrix::identity(d).scale(&GaussRat::int(-2)) } else { DenseMatrix::zeros(d, d) };
                if ac != expected {
                    failures.push(format!("gamma m={m} ({a},{b})"));
                }
            }
        }
    }
    let mut components = 0;
    for (m, k, degrees) in [(3, 0, 0..=4u32), (5, 0, 0..=3), (3, 1, 0..=3)] {
        for h in degrees {
            let degs: Vec<u32> = if k == 0 { vec![h] } else { vec![h, 1] };
            for f in homogeneous_basis(m, k, &degs).expect("basis") {
                let dd = apply(&OperatorSpec::Dirac(Var::X), &apply(&OperatorSpec::Dirac(Var::X), &f).unwrap()).unwrap();
                let neg_lap = laplace(Var::X, &f).unwrap().scale(&GaussRat::int(-1));
                if dd != neg_lap {
                    failures.push(format!("dirac square m={m} h={h}"));
                }
            }
            components += 1;
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("6 projector sets, gammas m=3,5,7, {components} components, failures {failures:?}") }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("path independence", criterion_1),
        ("box vanishing", criterion_2),
        ("factorization certificates", criterion_3),
        ("operator identities", criterion_4),
        ("numeric theorem", criterion_5),
        ("corollary and sharpness", criterion_6),
        ("induction principle", criterion_7),
        ("dimension oracles", criterion_8),
        ("structural exactness", criterion_9),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        all &= out.pass;
        println!(
            "criterion {} ({name}): {} [{:.1}s] {}",
            i + 1,
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
