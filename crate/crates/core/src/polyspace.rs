//! Spinor-valued polynomials in `x, u_1, …, u_k` and the first-order
//! invariant building blocks acting on them.
//!
//! Coordinates are laid out as `x_1..x_m, u_{1,1}..u_{1,m}, …`; a term key is
//! the full exponent vector over these `(k+1)·m` coordinates.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;

use num_traits::{One, Zero};

use crate::clifford::{gamma_rep, GammaRep};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Echelon, SparseMatrix, SparseVec};
use crate::scalar::{q, GaussRat, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    /// Dummy variable `u_p`, 1-based.
    U(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X => write!(f, "x"),
            Var::U(p) => write!(f, "u{p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperatorSpec {
    /// `Σ_i γ_i ∂_{var,i}`.
    Dirac(Var),
    /// `Σ_i γ_i var_i ·`.
    VectorMult(Var),
    /// `Σ_i a_i ∂_{b,i}`, written `⟨a, ∂_b⟩`.
    MixedEuler(Var, Var),
    /// `Σ_i var_i ∂_{var,i}`.
    Euler(Var),
    /// `Σ_i ∂²_{var,i}`.
    Laplace(Var),
    /// `Σ_i ∂_{a,i} ∂_{b,i}`.
    InnerDerivative(Var, Var),
    /// `var_a ∂_{var,b} - var_b ∂_{var,a}` (1-based `a`, `b`).
    Angular(Var, usize, usize),
    /// `γ_a γ_b / 2` acting on the spinor factor.
    SpinorBivector(usize, usize),
    /// `γ_a` acting on the spinor factor.
    Gamma(usize),
    /// `∂_{var,i}`.
    Partial(Var, usize),
    /// Multiplication by the coordinate `var_i`.
    Coordinate(Var, usize),
    /// Composition, rightmost applied first; the empty list is the identity.
    Compose(Vec<OperatorSpec>),
    ScalarMix(Vec<(Q, OperatorSpec)>),
}

impl OperatorSpec {
    pub fn identity() -> Self {
        OperatorSpec::Compose(Vec::new())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinorPoly {
    pub m: usize,
    pub k: usize,
    pub width: usize,
    terms: BTreeMap<Vec<u32>, Vec<GaussRat>>,
}

impl SpinorPoly {
    pub fn zero(m: usize, k: usize) -> Self {
        Self { m, k, width: spinor_width(m), terms: BTreeMap::new() }
    }

    /// `x^exponents ⊗ spinor`.
    pub fn monomial(m: usize, k: usize, exponents: Vec<u32>, spinor: Vec<GaussRat>) -> Self {
        assert_eq!(exponents.len(), (k + 1) * m, "exponent vector length");
        assert_eq!(spinor.len(), spinor_width(m), "spinor length");
        let mut p = Self::zero(m, k);
        p.add_term(exponents, &spinor, &GaussRat::one());
        p
    }

    /// Spinor unit `e_s` times a monomial.
    pub fn unit(m: usize, k: usize, exponents: Vec<u32>, s: usize) -> Self {
        let mut spinor = vec![GaussRat::zero(); spinor_width(m)];
        spinor[s] = GaussRat::one();
        Self::monomial(m, k, exponents, spinor)
    }

    pub fn nvars(&self) -> usize {
        (self.k + 1) * self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Vec<GaussRat>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, exponents: Vec<u32>, spinor: &[GaussRat], factor: &GaussRat) {
        if factor.is_zero() {
            return;
        }
        let entry = self.terms.entry(exponents.clone()).or_insert_with(|| vec![GaussRat::zero(); spinor.len()]);
        for (e, s) in entry.iter_mut().zip(spinor) {
            e.add_mul(factor, s);
        }
        if entry.iter().all(Zero::is_zero) {
            self.terms.remove(&exponents);
        }
    }

    fn check_same_space(&self, other: &SpinorPoly) -> Result<()> {
        if self.m != other.m || self.k != other.k {
            return Err(Error::InvalidArgument(format!(
                "polynomials over (m={}, k={}) and (m={}, k={})",
                self.m, self.k, other.m, other.k
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &SpinorPoly) -> Result<SpinorPoly> {
        self.axpy(&GaussRat::one(), other)
    }

    pub fn sub(&self, other: &SpinorPoly) -> Result<SpinorPoly> {
        self.axpy(&-GaussRat::one(), other)
    }

    /// `self + factor · other`.
    pub fn axpy(&self, factor: &GaussRat, other: &SpinorPoly) -> Result<SpinorPoly> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        for (e, s) in &other.terms {
            out.add_term(e.clone(), s, factor);
        }
        Ok(out)
    }

    pub fn scale(&self, factor: &GaussRat) -> SpinorPoly {
        let mut out = Self::zero(self.m, self.k);
        for (e, s) in &self.terms {
            out.add_term(e.clone(), s, factor);
        }
        out
    }

    /// Total degree in one variable group, if homogeneous there.
    pub fn degree_in(&self, var: Var) -> Option<u32> {
        let range = var_range(self.m, var);
        let mut degrees = self.terms.keys().map(|e| e[range.clone()].iter().sum::<u32>());
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    /// Largest total degree in one variable group (0 for the zero polynomial).
    pub fn max_degree_in(&self, var: Var) -> u32 {
        let range = var_range(self.m, var);
        self.terms.keys().map(|e| e[range.clone()].iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Product `x^alpha · self` for an x-exponent `alpha`.
    pub fn times_x_monomial(&self, alpha: &[u32]) -> SpinorPoly {
        assert_eq!(alpha.len(), self.m);
        let mut out = Self::zero(self.m, self.k);
        for (e, s) in &self.terms {
            let mut ne = e.clone();
            for (a, b) in ne.iter_mut().zip(alpha) {
                *a += b;
            }
            out.add_term(ne, s, &GaussRat::one());
        }
        out
    }

    /// Re-embeds into a space with more dummy variables; new variables are absent.
    pub fn widen(&self, k: usize) -> SpinorPoly {
        assert!(k >= self.k);
        let mut out = Self::zero(self.m, k);
        for (e, s) in &self.terms {
            let mut ne = e.clone();
            ne.resize((k + 1) * self.m, 0);
            out.add_term(ne, s, &GaussRat::one());
        }
        out
    }

    fn partial(&self, c: usize) -> SpinorPoly {
        let mut out = Self::zero(self.m, self.k);
        for (e, s) in &self.terms {
            if e[c] > 0 {
                let mut ne = e.clone();
                ne[c] -= 1;
                out.add_term(ne, s, &GaussRat::int(i64::from(e[c])));
            }
        }
        out
    }

    fn mul_coordinate(&self, c: usize) -> SpinorPoly {
        let mut out = Self::zero(self.m, self.k);
        for (e, s) in &self.terms {
            let mut ne = e.clone();
            ne[c] += 1;
            out.add_term(ne, s, &GaussRat::one());
        }
        out
    }

    fn left_mul(&self, mat: &DenseMatrix) -> SpinorPoly {
        let mut out = Self::zero(self.m, self.k);
        for (e, s) in &self.terms {
            out.add_term(e.clone(), &mat.mul_vec(s), &GaussRat::one());
        }
        out
    }
}

impl fmt::Display for SpinorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names: Vec<String> = (0..self.nvars())
            .map(|c| {
                let (group, i) = (c / self.m, c % self.m + 1);
                if group == 0 { format!("x{i}") } else { format!("u{group}_{i}") }
            })
            .collect();
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, s)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0)
                    .map(|(c, p)| if *p == 1 { names[c].clone() } else { format!("{}^{p}", names[c]) })
                    .collect();
                let spinor: Vec<String> = s.iter().map(ToString::to_string).collect();
                format!("[{}]{}", spinor.join(","), if mono.is_empty() { String::new() } else { format!("·{}", mono.join("")) })
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

pub fn spinor_width(m: usize) -> usize {
    1 << ((m - 1) / 2)
}

fn var_range(m: usize, var: Var) -> std::ops::Range<usize> {
    let group = match var {
        Var::X => 0,
        Var::U(p) => p,
    };
    group * m..(group + 1) * m
}

fn coordinate(m: usize, k: usize, var: Var, i: usize) -> Result<usize> {
    if let Var::U(p) = var {
        if p == 0 || p > k {
            return Err(Error::IndexOutOfRange(format!("u{p} with k = {k}")));
        }
    }
    if i == 0 || i > m {
        return Err(Error::IndexOutOfRange(format!("{var}_{i} with m = {m}")));
    }
    Ok(var_range(m, var).start + i - 1)
}

thread_local! {
    static GAMMA_CACHE: RefCell<HashMap<usize, Rc<GammaRep>>> = RefCell::new(HashMap::new());
}

/// Cached gamma matrices for dimension `m`.
pub fn gammas(m: usize) -> Result<Rc<GammaRep>> {
    if let Some(rep) = GAMMA_CACHE.with(|c| c.borrow().get(&m).cloned()) {
        return Ok(rep);
    }
    let rep = Rc::new(gamma_rep(m)?);
    GAMMA_CACHE.with(|c| c.borrow_mut().insert(m, rep.clone()));
    Ok(rep)
}

fn gamma_index(m: usize, a: usize) -> Result<usize> {
    if a == 0 || a > m {
        return Err(Error::IndexOutOfRange(format!("gamma_{a} with m = {m}")));
    }
    Ok(a)
}

/// Exact action of an operator on a spinor-valued polynomial.
pub fn apply(spec: &OperatorSpec, f: &SpinorPoly) -> Result<SpinorPoly> {
    let (m, k) = (f.m, f.k);
    let sum = |terms: Vec<SpinorPoly>| -> Result<SpinorPoly> {
        terms.iter().try_fold(SpinorPoly::zero(m, k), |acc, t| acc.add(t))
    };
    match spec {
        OperatorSpec::Dirac(var) => {
            let rep = gammas(m)?;
            let parts = (1..=m)
                .map(|i| Ok(f.partial(coordinate(m, k, *var, i)?).left_mul(rep.gamma(i))))
                .collect::<Result<Vec<_>>>()?;
            sum(parts)
        }
        OperatorSpec::VectorMult(var) => {
            let rep = gammas(m)?;
            let parts = (1..=m)
                .map(|i| Ok(f.mul_coordinate(coordinate(m, k, *var, i)?).left_mul(rep.gamma(i))))
                .collect::<Result<Vec<_>>>()?;
            sum(parts)
        }
        OperatorSpec::MixedEuler(a, b) => {
            let parts = (1..=m)
                .map(|i| Ok(f.partial(coordinate(m, k, *b, i)?).mul_coordinate(coordinate(m, k, *a, i)?)))
                .collect::<Result<Vec<_>>>()?;
            sum(parts)
        }
        OperatorSpec::Euler(var) => apply(&OperatorSpec::MixedEuler(*var, *var), f),
        OperatorSpec::Laplace(var) => apply(&OperatorSpec::InnerDerivative(*var, *var), f),
        OperatorSpec::InnerDerivative(a, b) => {
            let parts = (1..=m)
                .map(|i| Ok(f.partial(coordinate(m, k, *b, i)?).partial(coordinate(m, k, *a, i)?)))
                .collect::<Result<Vec<_>>>()?;
            sum(parts)
        }
        OperatorSpec::Angular(var, a, b) => {
            let (ca, cb) = (coordinate(m, k, *var, *a)?, coordinate(m, k, *var, *b)?);
            f.partial(cb).mul_coordinate(ca).sub(&f.partial(ca).mul_coordinate(cb))
        }
        OperatorSpec::SpinorBivector(a, b) => {
            let rep = gammas(m)?;
            let mat = rep.gamma(gamma_index(m, *a)?).mul(rep.gamma(gamma_index(m, *b)?));
            Ok(f.left_mul(&mat).scale(&GaussRat::real(q(1, 2))))
        }
        OperatorSpec::Gamma(a) => Ok(f.left_mul(gammas(m)?.gamma(gamma_index(m, *a)?))),
        OperatorSpec::Partial(var, i) => Ok(f.partial(coordinate(m, k, *var, *i)?)),
        OperatorSpec::Coordinate(var, i) => Ok(f.mul_coordinate(coordinate(m, k, *var, *i)?)),
        OperatorSpec::Compose(list) => list.iter().rev().try_fold(f.clone(), |acc, s| apply(s, &acc)),
        OperatorSpec::ScalarMix(list) => {
            let mut out = SpinorPoly::zero(m, k);
            for (c, s) in list {
                out = out.axpy(&GaussRat::real(c.clone()), &apply(s, f)?)?;
            }
            Ok(out)
        }
    }
}

/// `Σ_i ∂²_{var,i} f` (positive sign; `∂_x² = -Δ`).
pub fn laplace(var: Var, f: &SpinorPoly) -> Result<SpinorPoly> {
    apply(&OperatorSpec::Laplace(var), f)
}

/// Exponent vectors of total degree `degree` in `nvars` variables,
/// lexicographically descending.
pub fn monomials(nvars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
    }
    if nvars == 0 {
        return if degree == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    rec(0, degree, &mut vec![0; nvars], &mut out);
    out
}

/// Number of monomials of a given degree in `nvars` variables.
pub fn monomial_count(nvars: usize, degree: u32) -> usize {
    let (n, d) = (nvars as u128, degree as u128);
    if nvars == 0 {
        return usize::from(degree == 0);
    }
    // binomial(n + d - 1, d)
    let mut acc: u128 = 1;
    for i in 0..d {
        acc = acc * (n + i) / (i + 1);
    }
    acc as usize
}

/// Monomial ⊗ spinor-unit basis of the component with degree `degrees[0]`
/// in `x` and `degrees[p]` in `u_p`; index `= monomial_index · 2^n + s`.
pub fn homogeneous_basis(m: usize, k: usize, degrees: &[u32]) -> Result<Vec<SpinorPoly>> {
    if degrees.len() != k + 1 {
        return Err(Error::InvalidArgument(format!("expected {} degrees, got {}", k + 1, degrees.len())));
    }
    let width = spinor_width(m);
    let mut exps: Vec<Vec<u32>> = vec![Vec::new()];
    for &d in degrees {
        let group = monomials(m, d);
        exps = exps
            .iter()
            .flat_map(|prefix| {
                group.iter().map(move |g| {
                    let mut e = prefix.clone();
                    e.extend_from_slice(g);
                    e
                })
            })
            .collect();
    }
    Ok(exps
        .into_iter()
        .flat_map(|e| (0..width).map(move |s| SpinorPoly::unit(m, k, e.clone(), s)))
        .collect())
}

/// Coordinates of polynomials in a fixed finite basis.
pub struct SpanSolver {
    keys: HashMap<(Vec<u32>, usize), usize>,
    mode: SpanMode,
}

enum SpanMode {
    /// Basis element `i` is the unit at key `i`.
    Units,
    General(Echelon),
}

impl SpanSolver {
    pub fn new(basis: &[SpinorPoly]) -> Self {
        let is_unit = |p: &SpinorPoly| {
            p.len() == 1 && {
                let (_, s) = p.terms().next().expect("one term");
                s.iter().filter(|v| !v.is_zero()).count() == 1 && s.iter().any(|v| v.is_one())
            }
        };
        let mut keys = HashMap::new();
        if basis.iter().all(is_unit) {
            for (i, p) in basis.iter().enumerate() {
                let (e, s) = p.terms().next().expect("one term");
                let pos = s.iter().position(|v| !v.is_zero()).expect("unit");
                keys.insert((e.clone(), pos), i);
            }
            if keys.len() == basis.len() {
                return Self { keys, mode: SpanMode::Units };
            }
            keys.clear();
        }
        for p in basis {
            for (e, s) in p.terms() {
                for (pos, v) in s.iter().enumerate() {
                    if !v.is_zero() {
                        let next = keys.len();
                        keys.entry((e.clone(), pos)).or_insert(next);
                    }
                }
            }
        }
        let mut ech = Echelon::with_tracking(keys.len());
        for p in basis {
            ech.insert(Self::encode(&keys, p).expect("basis keys registered"));
        }
        Self { keys, mode: SpanMode::General(ech) }
    }

    fn encode(keys: &HashMap<(Vec<u32>, usize), usize>, p: &SpinorPoly) -> Option<SparseVec> {
        let mut v: Vec<(usize, GaussRat)> = Vec::new();
        for (e, s) in p.terms() {
            for (pos, x) in s.iter().enumerate() {
                if !x.is_zero() {
                    v.push((*keys.get(&(e.clone(), pos))?, x.clone()));
                }
            }
        }
        v.sort_by_key(|(i, _)| *i);
        Some(v)
    }

    /// Coordinates of `p`, or `None` if it leaves the span.
    pub fn coordinates(&self, p: &SpinorPoly) -> Option<SparseVec> {
        let v = Self::encode(&self.keys, p)?;
        match &self.mode {
            SpanMode::Units => Some(v),
            SpanMode::General(ech) => ech.solve(&v),
        }
    }
}

/// Exact matrix of an operator between two finite bases.
#[derive(Clone, Debug)]
pub struct LinOpMatrix {
    pub domain: Vec<SpinorPoly>,
    pub codomain: Vec<SpinorPoly>,
    pub matrix: SparseMatrix,
}

impl LinOpMatrix {
    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    /// Polynomials spanning the kernel.
    pub fn kernel(&self) -> Vec<SpinorPoly> {
        self.matrix.nullspace().iter().map(|v| combine(&self.domain, v)).collect()
    }
}

/// `Σ_i v_i · basis_i`.
pub fn combine(basis: &[SpinorPoly], v: &SparseVec) -> SpinorPoly {
    let first = &basis[0];
    v.iter().fold(SpinorPoly::zero(first.m, first.k), |acc, (i, c)| {
        acc.axpy(c, &basis[*i]).expect("same space")
    })
}

/// Matrix of `spec` from `domain` to `codomain`; fails if an image leaves the
/// codomain span.
pub fn operator_matrix(spec: &OperatorSpec, domain: &[SpinorPoly], codomain: &[SpinorPoly]) -> Result<LinOpMatrix> {
    let solver = SpanSolver::new(codomain);
    let mut columns = Vec::with_capacity(domain.len());
    for (j, f) in domain.iter().enumerate() {
        let image = apply(spec, f)?;
        let col = solver
            .coordinates(&image)
            .ok_or_else(|| Error::SpanViolation(format!("image of domain element {j} under {spec:?}")))?;
        columns.push(col);
    }
    Ok(LinOpMatrix {
        domain: domain.to_vec(),
        codomain: codomain.to_vec(),
        matrix: SparseMatrix::from_columns(codomain.len(), &columns),
    })
}

/// Coefficient vectors `v` with `Σ v_j · domain_j` annihilated by every spec.
pub fn joint_kernel(specs: &[OperatorSpec], domain: &[SpinorPoly]) -> Result<Vec<SparseVec>> {
    let mut keys: HashMap<(usize, Vec<u32>, usize), usize> = HashMap::new();
    let mut rows: Vec<SparseVec> = Vec::new();
    for (j, f) in domain.iter().enumerate() {
        for (si, spec) in specs.iter().enumerate() {
            for (e, s) in apply(spec, f)?.terms() {
                for (pos, v) in s.iter().enumerate() {
                    if v.is_zero() {
                        continue;
                    }
                    let next = keys.len();
                    let r = *keys.entry((si, e.clone(), pos)).or_insert(next);
                    if r == rows.len() {
                        rows.push(Vec::new());
                    }
                    rows[r].push((j, v.clone()));
                }
            }
        }
    }
    let mut ech = Echelon::new(domain.len());
    for row in rows {
        ech.insert(row);
    }
    Ok(ech.nullspace())
}
