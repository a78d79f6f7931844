//! Higher spin Dirac and twistor operators as exact matrices.
//!
//! Every operator here is first order with constant coefficients in `x`:
//! `Σ_i ∂_{x_i} ⊗ A_i` for fibre matrices `A_i`. On the degree-`h` component
//! of `P(x) ⊗ F` the index of `x^α ⊗ f_j` is `α_index · dim F + j`, with
//! monomials ordered as in [`crate::polyspace::monomials`].

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{solve_affine, DenseMatrix, Echelon, SparseMatrix, SparseVec};
use crate::opalgebra::{expand_laplace_power, FactorizationCertificate, OperatorWord, Symbol};
use crate::polyspace::{
    apply, homogeneous_basis, joint_kernel, laplace, monomial_count, monomials, operator_matrix, OperatorSpec,
    SpanSolver, SpinorPoly, Var,
};
use crate::repthy::{
    casimir_projectors, intertwiner, pad, rank_for, simplicial_monogenic_basis, ProjectorSet, DEFAULT_CAP,
};
use crate::scalar::{q, q_to_string, GaussRat, Q};
use crate::weights::{manhattan_distance, Weight};

fn n_monomials(m: usize, degree: i64) -> usize {
    if degree < 0 { 0 } else { monomial_count(m, degree as u32) }
}

fn monomial_index(m: usize, degree: i64) -> (Vec<Vec<u32>>, HashMap<Vec<u32>, usize>) {
    if degree < 0 {
        return (Vec::new(), HashMap::new());
    }
    let list = monomials(m, degree as u32);
    let index = list.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
    (list, index)
}

/// Matrix of `Σ_i ∂_{x_i} ⊗ A_i` from degree `h` to degree `h - 1`.
pub fn first_order_matrix(m: usize, symbols: &[DenseMatrix], h: i64) -> SparseMatrix {
    let (d_out, d_in) = (symbols[0].rows(), symbols[0].cols());
    let rows_n = n_monomials(m, h - 1) * d_out;
    let cols_n = n_monomials(m, h) * d_in;
    if rows_n == 0 || cols_n == 0 {
        return SparseMatrix::zeros(rows_n, cols_n);
    }
    let nonzero: Vec<Vec<(usize, usize, GaussRat)>> = symbols
        .iter()
        .map(|a| {
            let mut v = Vec::new();
            for r in 0..a.rows() {
                for (c, x) in a.sparse_row(r) {
                    v.push((r, c, x));
                }
            }
            v
        })
        .collect();
    let (src, _) = monomial_index(m, h);
    let (_, dst) = monomial_index(m, h - 1);
    let mut rows: Vec<BTreeMap<usize, GaussRat>> = vec![BTreeMap::new(); rows_n];
    for (a, alpha) in src.iter().enumerate() {
        for i in 0..m {
            if alpha[i] == 0 {
                continue;
            }
            let mut beta = alpha.clone();
            beta[i] -= 1;
            let b = dst[&beta];
            let f = GaussRat::int(i64::from(alpha[i]));
            for (r, c, x) in &nonzero[i] {
                *rows[b * d_out + r].entry(a * d_in + c).or_insert_with(GaussRat::zero) += &(x * &f);
            }
        }
    }
    SparseMatrix::from_rows(cols_n, rows.into_iter().map(|r| r.into_iter().filter(|(_, v)| !v.is_zero()).collect()).collect())
}

/// Matrix of `Δ_x ⊗ I_d` from degree `h` to degree `h - 2`.
pub fn laplace_matrix(m: usize, d: usize, h: i64) -> SparseMatrix {
    let rows_n = n_monomials(m, h - 2) * d;
    let cols_n = n_monomials(m, h) * d;
    if rows_n == 0 || cols_n == 0 {
        return SparseMatrix::zeros(rows_n, cols_n);
    }
    let (src, _) = monomial_index(m, h);
    let (_, dst) = monomial_index(m, h - 2);
    let mut rows: Vec<BTreeMap<usize, GaussRat>> = vec![BTreeMap::new(); rows_n];
    for (a, alpha) in src.iter().enumerate() {
        for i in 0..m {
            if alpha[i] < 2 {
                continue;
            }
            let mut beta = alpha.clone();
            beta[i] -= 2;
            let b = dst[&beta];
            let f = GaussRat::int(i64::from(alpha[i]) * i64::from(alpha[i] - 1));
            for j in 0..d {
                *rows[b * d + j].entry(a * d + j).or_insert_with(GaussRat::zero) += &f;
            }
        }
    }
    SparseMatrix::from_rows(cols_n, rows.into_iter().map(|r| r.into_iter().collect()).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Construction {
    /// Closed formula on simplicial monogenics.
    Explicit(OperatorSpec),
    /// `p_κ ∘ (id ⊗ ∂_x) ∘ r_ι` inside `V_λ ⊗ S`.
    Projector { ambient: Weight },
}

/// A first-order invariant operator between `S_ι`- and `S_κ`-valued functions.
#[derive(Clone, Debug)]
pub struct HsdOperator {
    pub m: usize,
    /// Spin-shifted weights.
    pub target: Weight,
    pub source: Weight,
    pub construction: Construction,
    pub fibre_in: Vec<SpinorPoly>,
    pub fibre_out: Vec<SpinorPoly>,
    /// `A_1 … A_m`, each `dim fibre_out × dim fibre_in`.
    pub symbols: Vec<DenseMatrix>,
}

impl HsdOperator {
    pub fn is_hsd(&self) -> bool {
        self.target == self.source
    }

    pub fn matrix(&self, h: i64) -> SparseMatrix {
        first_order_matrix(self.m, &self.symbols, h)
    }

    pub fn is_zero(&self) -> bool {
        self.symbols.iter().all(DenseMatrix::is_zero)
    }

    pub fn domain_dim(&self, h: i64) -> usize {
        n_monomials(self.m, h) * self.fibre_in.len()
    }
}

/// Polynomial from coordinates on the degree-`h` component over `fibre`.
fn assemble(m: usize, fibre: &[SpinorPoly], h: u32, v: &SparseVec) -> SpinorPoly {
    let mons = monomials(m, h);
    let d = fibre.len();
    let (mm, k) = (fibre[0].m, fibre[0].k);
    let mut out = SpinorPoly::zero(mm, k);
    for (idx, c) in v {
        let piece = fibre[idx % d].times_x_monomial(&mons[idx / d]);
        out = out.axpy(c, &piece).expect("same space");
    }
    out
}

fn projection_factor(var: Var, denominator: i64) -> OperatorSpec {
    OperatorSpec::ScalarMix(vec![
        (Q::one(), OperatorSpec::identity()),
        (q(1, denominator), OperatorSpec::Compose(vec![OperatorSpec::VectorMult(var), OperatorSpec::Dirac(var)])),
    ])
}

/// The closed formulas `R_k = (1 + u∂_u/(2k+m-2))∂_x` and
/// `R_{k,l} = (1 + u_1∂_1/(2k+m-2))(1 + u_2∂_2/(2l+m-4))∂_x`.
pub fn explicit_hsd(lambda: &Weight, m: usize) -> Result<HsdOperator> {
    let n = rank_for(m)?;
    let lambda = pad(lambda, n)?;
    if lambda.entries.iter().skip(2).any(|e| *e != 0) {
        return Err(Error::UnsupportedShape(lambda));
    }
    let space = simplicial_monogenic_basis(&lambda, m, DEFAULT_CAP)?;
    let k = lambda.entries[0];
    let l = lambda.entries.get(1).copied().unwrap_or(0);
    let mut factors = Vec::new();
    if space.k >= 1 {
        factors.push(projection_factor(Var::U(1), 2 * k + m as i64 - 2));
    }
    if space.k >= 2 {
        let den = 2 * l + m as i64 - 4;
        if den == 0 {
            return Err(Error::VanishingDenominator(lambda));
        }
        factors.push(projection_factor(Var::U(2), den));
    }
    let mut symbols = Vec::with_capacity(m);
    for i in 1..=m {
        let mut chain = factors.clone();
        chain.push(OperatorSpec::Gamma(i));
        symbols.push(operator_matrix(&OperatorSpec::Compose(chain), &space.basis, &space.basis)?.matrix.to_dense());
    }
    let mut full = factors;
    full.push(OperatorSpec::Dirac(Var::X));
    Ok(HsdOperator {
        m,
        target: lambda.shifted(),
        source: lambda.shifted(),
        construction: Construction::Explicit(OperatorSpec::Compose(full)),
        fibre_in: space.basis.clone(),
        fibre_out: space.basis,
        symbols,
    })
}

/// The block decomposition of the twisted Dirac operator on `V_λ ⊗ S`.
#[derive(Clone, Debug)]
pub struct GenericFamily {
    pub projectors: ProjectorSet,
    /// All pairs of summands at distance at most 1.
    pub operators: Vec<HsdOperator>,
    /// Whether every block between summands at distance ≥ 2 vanishes.
    pub far_blocks_vanish: bool,
}

impl GenericFamily {
    pub fn get(&self, target: &Weight, source: &Weight) -> Option<&HsdOperator> {
        self.operators.iter().find(|o| &o.target == target && &o.source == source)
    }

    pub fn weights(&self) -> Vec<Weight> {
        self.projectors.summands.iter().map(|s| s.weight.clone()).collect()
    }
}

fn block_symbols(ps: &ProjectorSet, target: usize, source: usize) -> Vec<DenseMatrix> {
    let (t, s) = (&ps.summands[target], &ps.summands[source]);
    ps.gammas.iter().map(|g| t.coords.mul(g).mul(&s.basis)).collect()
}

/// `T_{κι} = p_κ ∘ (id ⊗ ∂_x) ∘ r_ι` for every pair of summands of `V_λ ⊗ S`.
pub fn generic_twistor_hsd(lambda: &Weight, m: usize) -> Result<GenericFamily> {
    let ps = casimir_projectors(lambda, m)?;
    let mut operators = Vec::new();
    let mut far_blocks_vanish = true;
    for (ti, t) in ps.summands.iter().enumerate() {
        for (si, s) in ps.summands.iter().enumerate() {
            let symbols = block_symbols(&ps, ti, si);
            if t.code.hamming(&s.code) >= 2 {
                far_blocks_vanish &= symbols.iter().all(DenseMatrix::is_zero);
                continue;
            }
            operators.push(HsdOperator {
                m,
                target: t.weight.clone(),
                source: s.weight.clone(),
                construction: Construction::Projector { ambient: ps.lambda.clone() },
                fibre_in: s.polys(&ps.ambient),
                fibre_out: t.polys(&ps.ambient),
                symbols,
            });
        }
    }
    Ok(GenericFamily { projectors: ps, operators, far_blocks_vanish })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    /// 1: `-Δ_κ = Σ T_{κω}T_{ωκ}`; 2: `T_{κι}R_ι + R_κT_{κι} = 0`; 3: squares.
    pub identity: u8,
    pub target: Weight,
    pub source: Weight,
    pub degree: usize,
    /// Number of products summed.
    pub terms: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub lambda: Weight,
    pub m: usize,
    pub degrees: Vec<usize>,
    pub summands: Vec<Weight>,
    pub far_blocks_vanish: bool,
    pub checks: Vec<IdentityCheck>,
    pub pass: bool,
}

/// Exact matrix checks of identities (1), (2), (3) on x-degrees `2..=max_degree`.
pub fn verify_identities(lambda: &Weight, m: usize, max_degree: usize) -> Result<IdentityReport> {
    let fam = generic_twistor_hsd(lambda, m)?;
    let weights = fam.weights();
    let dist = |a: &Weight, b: &Weight| manhattan_distance(a, b).expect("same rank");
    let mut checks = Vec::new();
    let degrees: Vec<usize> = (2..=max_degree).collect();
    for &h in &degrees {
        let hh = h as i64;
        let product = |t: &Weight, w: &Weight, s: &Weight| -> Option<SparseMatrix> {
            let a = fam.get(t, w)?;
            let b = fam.get(w, s)?;
            Some(a.matrix(hh - 1).mul(&b.matrix(hh)))
        };
        for kappa in &weights {
            let d = fam.projectors.summand(kappa).expect("summand").1.dim();
            let lhs = laplace_matrix(m, d, hh).scale(&-GaussRat::one());
            let mut rhs = SparseMatrix::zeros(lhs.rows(), lhs.cols());
            let mut terms = 0;
            for omega in weights.iter().filter(|w| dist(kappa, w) <= 1) {
                if let Some(p) = product(kappa, omega, kappa) {
                    rhs = rhs.add(&p);
                    terms += 1;
                }
            }
            checks.push(IdentityCheck { identity: 1, target: kappa.clone(), source: kappa.clone(), degree: h, terms, pass: lhs == rhs });
        }
        for kappa in &weights {
            for iota in &weights {
                match dist(kappa, iota) {
                    1 => {
                        let (Some(a), Some(b)) = (product(kappa, iota, iota), product(kappa, kappa, iota)) else {
                            continue;
                        };
                        checks.push(IdentityCheck {
                            identity: 2,
                            target: kappa.clone(),
                            source: iota.clone(),
                            degree: h,
                            terms: 2,
                            pass: a.add(&b).is_zero(),
                        });
                    }
                    2 => {
                        let mut sum: Option<SparseMatrix> = None;
                        let mut terms = 0;
                        for omega in weights.iter().filter(|w| dist(kappa, w) == 1 && dist(w, iota) == 1) {
                            if let Some(p) = product(kappa, omega, iota) {
                                sum = Some(match sum {
                                    Some(acc) => acc.add(&p),
                                    None => p,
                                });
                                terms += 1;
                            }
                        }
                        if let Some(s) = sum {
                            checks.push(IdentityCheck {
                                identity: 3,
                                target: kappa.clone(),
                                source: iota.clone(),
                                degree: h,
                                terms,
                                pass: s.is_zero(),
                            });
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    let pass = fam.far_blocks_vanish && checks.iter().all(|c| c.pass);
    Ok(IdentityReport {
        lambda: fam.projectors.lambda.clone(),
        m,
        degrees,
        summands: weights,
        far_blocks_vanish: fam.far_blocks_vanish,
        checks,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AgreementReport {
    pub lambda: Weight,
    pub m: usize,
    /// Generic symbol divided by explicit symbol, when proportional.
    pub ratio: Option<String>,
    pub degrees: Vec<usize>,
    pub pass: bool,
}

/// Compares the closed formula for `R_λ` with the projector construction on
/// the top summand of `V_λ ⊗ S`, which is spanned by the same polynomials.
pub fn compare_explicit_generic(lambda: &Weight, m: usize, max_degree: usize) -> Result<AgreementReport> {
    let explicit = explicit_hsd(lambda, m)?;
    let fam = generic_twistor_hsd(lambda, m)?;
    let generic = fam.get(&explicit.target, &explicit.source).ok_or_else(|| Error::Inconsistent("missing HSD block".into()))?;
    let solver = SpanSolver::new(&generic.fibre_in);
    let cols = explicit
        .fibre_in
        .iter()
        .map(|f| solver.coordinates(f).ok_or_else(|| Error::SpanViolation("explicit fibre outside top summand".into())))
        .collect::<Result<Vec<_>>>()?;
    let d = generic.fibre_in.len();
    let change = DenseMatrix::from_columns(d, &cols);
    let inverse = change.inverse().ok_or_else(|| Error::Inconsistent("fibre bases differ".into()))?;
    let moved: Vec<DenseMatrix> = explicit.symbols.iter().map(|a| change.mul(a).mul(&inverse)).collect();

    let mut ratio: Option<GaussRat> = None;
    'find: for (g, e) in generic.symbols.iter().zip(&moved) {
        for r in 0..d {
            for c in 0..d {
                if !e[(r, c)].is_zero() {
                    ratio = Some(&g[(r, c)] / &e[(r, c)]);
                    break 'find;
                }
            }
        }
    }
    let degrees: Vec<usize> = (1..=max_degree).collect();
    let pass = match &ratio {
        Some(r) if !r.is_zero() => {
            let symbols_ok = generic.symbols.iter().zip(&moved).all(|(g, e)| *g == e.scale(r));
            let moved_op = HsdOperator { symbols: moved.clone(), ..generic.clone() };
            symbols_ok && degrees.iter().all(|&h| generic.matrix(h as i64) == moved_op.matrix(h as i64).scale(r))
        }
        _ => false,
    };
    Ok(AgreementReport { lambda: fam.projectors.lambda.clone(), m, ratio: ratio.map(|r| r.to_string()), degrees, pass })
}

/// Polynomial basis of `ker_h` of an operator on its value space.
pub fn kernel_basis(op: &HsdOperator, h: usize) -> Result<Vec<SpinorPoly>> {
    let needed = op.domain_dim(h as i64);
    if needed > DEFAULT_CAP {
        return Err(Error::ResourceCap { what: format!("ker_{h} on {}", op.source), needed, cap: DEFAULT_CAP });
    }
    let mat = op.matrix(h as i64);
    let ns = if mat.rows() == 0 {
        (0..needed).map(|i| vec![(i, GaussRat::one())]).collect()
    } else {
        mat.nullspace()
    };
    Ok(ns.iter().map(|v| assemble(op.m, &op.fibre_in, h as u32, v)).collect())
}

/// Minimal `p` with `Δ^p f = 0`; `Some(0)` for the zero polynomial, `None`
/// if the search bound `⌈deg/2⌉ + 1` is exhausted.
pub fn polyharmonic_order(f: &SpinorPoly) -> Result<Option<usize>> {
    if f.is_zero() {
        return Ok(Some(0));
    }
    let bound = (f.max_degree_in(Var::X) as usize).div_ceil(2) + 1;
    let mut g = f.clone();
    for p in 1..=bound {
        g = laplace(Var::X, &g)?;
        if g.is_zero() {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// `R_k` as a differential operator on polynomials with one dummy variable.
fn rarita_schwinger_spec(k: u32, m: usize) -> OperatorSpec {
    OperatorSpec::Compose(vec![projection_factor(Var::U(1), 2 * i64::from(k) + m as i64 - 2), OperatorSpec::Dirac(Var::X)])
}

fn dummy_count(k: u32) -> usize {
    usize::from(k > 0)
}

/// `M_{h,k}`: `(h,k)`-homogeneous polynomials monogenic in `x` and in `u`.
pub fn double_monogenic_basis(h: u32, k: u32, m: usize) -> Result<Vec<SpinorPoly>> {
    let kv = dummy_count(k);
    let degrees: Vec<u32> = if kv == 1 { vec![h, k] } else { vec![h] };
    let domain = homogeneous_basis(m, kv, &degrees)?;
    let mut specs = vec![OperatorSpec::Dirac(Var::X)];
    if kv == 1 {
        specs.push(OperatorSpec::Dirac(Var::U(1)));
    }
    Ok(joint_kernel(&specs, &domain)?.iter().map(|v| crate::polyspace::combine(&domain, v)).collect())
}

fn explicit_rarita_schwinger(k: u32, m: usize) -> Result<HsdOperator> {
    explicit_hsd(&Weight::new(vec![i64::from(k)]), m)
}

#[derive(Clone, Debug)]
pub struct TwistorInversion {
    /// Canonical solution: free coordinates of the solve set to zero.
    pub f: SpinorPoly,
    /// Dimension of the solution space of the homogeneous system, which is
    /// `dim M_{h,k}`: the solution is unique only modulo double monogenics.
    pub ambiguity_dim: usize,
}

/// Solves `∂_x f = u g`, `∂_u f = 0` for `f` of degree `(h, k)` given
/// `g ∈ ker_{h-1} R_{k-1}`.
pub fn twistor_inversion(g: &SpinorPoly, h: u32, k: u32, m: usize) -> Result<TwistorInversion> {
    if h == 0 || k == 0 {
        return Err(Error::InvalidArgument("twistor inversion needs h ≥ 1 and k ≥ 1".into()));
    }
    if g.m != m || g.k > 1 {
        return Err(Error::InvalidArgument("g must live in one dummy variable at the same m".into()));
    }
    let g = g.widen(1);
    if !g.is_zero() && (g.degree_in(Var::X) != Some(h - 1) || g.degree_in(Var::U(1)) != Some(k - 1)) {
        return Err(Error::InvalidArgument(format!("g must be ({}, {})-homogeneous", h - 1, k - 1)));
    }
    let in_kernel = apply(&OperatorSpec::Dirac(Var::U(1)), &g)?.is_zero()
        && apply(&rarita_schwinger_spec(k - 1, m), &g)?.is_zero();
    if !in_kernel {
        return Err(Error::Inconsistent(format!("g is not in ker_{} R_{}", h - 1, k - 1)));
    }
    let domain = homogeneous_basis(m, 1, &[h, k])?;
    let cod_x = homogeneous_basis(m, 1, &[h - 1, k])?;
    let cod_u = homogeneous_basis(m, 1, &[h, k - 1])?;
    let ax = operator_matrix(&OperatorSpec::Dirac(Var::X), &domain, &cod_x)?.matrix;
    let au = operator_matrix(&OperatorSpec::Dirac(Var::U(1)), &domain, &cod_u)?.matrix;
    let mut rows: Vec<SparseVec> = (0..ax.rows()).map(|r| ax.row(r).clone()).collect();
    rows.extend((0..au.rows()).map(|r| au.row(r).clone()));
    let stacked = SparseMatrix::from_rows(domain.len(), rows);
    let rhs_poly = apply(&OperatorSpec::VectorMult(Var::U(1)), &g)?;
    let rhs = SpanSolver::new(&cod_x)
        .coordinates(&rhs_poly)
        .ok_or_else(|| Error::SpanViolation("u·g outside the (h-1, k) component".into()))?;
    let (particular, homogeneous) =
        solve_affine(&stacked, &rhs).ok_or_else(|| Error::Inconsistent("∂_x f = u g has no solution".into()))?;
    Ok(TwistorInversion { f: crate::polyspace::combine(&domain, &particular), ambiguity_dim: homogeneous.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct InductionReport {
    pub k: u32,
    pub h: u32,
    pub m: usize,
    pub dim_kernel: usize,
    pub dim_double_monogenic: usize,
    pub dim_lower_kernel: usize,
    pub dims_pass: bool,
    /// Inversions of a basis of `ker_{h-1} R_{k-1}` all solved, lie in
    /// `ker_h R_k`, and are independent modulo `M_{h,k}`.
    pub inversion_pass: bool,
    pub ambiguity_dims: Vec<usize>,
    pub pass: bool,
}

/// `dim ker_h R_k = dim M_{h,k} + dim ker_{h-1} R_{k-1}`, plus the inversion
/// map realizing the second summand.
pub fn verify_induction_dims(k: u32, h: u32, m: usize) -> Result<InductionReport> {
    let rk = explicit_rarita_schwinger(k, m)?;
    let kernel = kernel_basis(&rk, h as usize)?;
    let doubles = double_monogenic_basis(h, k, m)?;
    let lower: Vec<SpinorPoly> = if k == 0 || h == 0 {
        Vec::new()
    } else {
        kernel_basis(&explicit_rarita_schwinger(k - 1, m)?, (h - 1) as usize)?
    };
    let dims_pass = kernel.len() == doubles.len() + lower.len();

    let mut inversion_pass = true;
    let mut ambiguity_dims = Vec::new();
    if !lower.is_empty() {
        let widen = |p: &SpinorPoly| p.widen(1);
        let mut span: Vec<SpinorPoly> = doubles.iter().map(widen).collect();
        let spec = rarita_schwinger_spec(k, m);
        for g in &lower {
            let inv = twistor_inversion(g, h, k, m)?;
            ambiguity_dims.push(inv.ambiguity_dim);
            inversion_pass &= inv.ambiguity_dim == doubles.len();
            inversion_pass &= apply(&spec, &inv.f)?.is_zero();
            span.push(inv.f);
        }
        inversion_pass &= independent(&span);
    }
    Ok(InductionReport {
        k,
        h,
        m,
        dim_kernel: kernel.len(),
        dim_double_monogenic: doubles.len(),
        dim_lower_kernel: lower.len(),
        dims_pass,
        inversion_pass,
        ambiguity_dims,
        pass: dims_pass && inversion_pass,
    })
}

fn independent(polys: &[SpinorPoly]) -> bool {
    let mut keys: HashMap<(Vec<u32>, usize), usize> = HashMap::new();
    let encoded: Vec<SparseVec> = polys
        .iter()
        .map(|p| {
            let mut v: SparseVec = Vec::new();
            for (e, s) in p.terms() {
                for (pos, x) in s.iter().enumerate() {
                    if !x.is_zero() {
                        let next = keys.len();
                        v.push((*keys.entry((e.clone(), pos)).or_insert(next), x.clone()));
                    }
                }
            }
            v.sort_by_key(|(i, _)| *i);
            v
        })
        .collect();
    let mut ech = Echelon::new(keys.len());
    encoded.into_iter().all(|v| ech.insert(v))
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    pub lambda: Weight,
    pub m: usize,
    pub bound: usize,
    /// `(degree, kernel dimension, maximal polyharmonic order)`.
    pub per_degree: Vec<(usize, usize, usize)>,
    pub bound_holds: bool,
    pub sharp: bool,
    pub pass: bool,
}

/// Every kernel element of `R_λ` up to degree `max_degree` is
/// `(λ_1 + 1)`-polyharmonic, and some element attains the bound.
pub fn verify_corollary(lambda: &Weight, m: usize, max_degree: usize) -> Result<CorollaryReport> {
    let op = explicit_hsd(lambda, m)?;
    let bound = lambda.first() as usize + 1;
    let mut per_degree = Vec::new();
    let mut bound_holds = true;
    let mut sharp = false;
    for h in 0..=max_degree {
        let basis = kernel_basis(&op, h)?;
        let mut worst = 0;
        for f in &basis {
            match polyharmonic_order(f)? {
                Some(p) => {
                    worst = worst.max(p);
                    bound_holds &= p <= bound;
                    sharp |= p == bound;
                }
                None => bound_holds = false,
            }
        }
        per_degree.push((h, basis.len(), worst));
    }
    Ok(CorollaryReport { lambda: op.source.integral(), m, bound, per_degree, bound_holds, sharp, pass: bound_holds && sharp })
}

/// Numeric realizations of the symbols of a certificate.
struct Realizer {
    m: usize,
    mu: Weight,
    ambients: BTreeMap<Weight, ProjectorSet>,
    intertwiners: BTreeMap<(Weight, Weight), (DenseMatrix, DenseMatrix)>,
}

impl Realizer {
    fn new(mu: &Weight, m: usize) -> Self {
        Self { m, mu: mu.clone(), ambients: BTreeMap::new(), intertwiners: BTreeMap::new() }
    }

    fn ambient(&mut self, lambda: &Weight) -> Result<&ProjectorSet> {
        if !self.ambients.contains_key(lambda) {
            self.ambients.insert(lambda.clone(), casimir_projectors(lambda, self.m)?);
        }
        Ok(&self.ambients[lambda])
    }

    fn in_top_ambient(&mut self, kappa: &Weight) -> Result<bool> {
        let mu = self.mu.clone();
        Ok(self.ambient(&mu)?.summand(&kappa.shifted()).is_some())
    }

    /// Ambient hosting the canonical realization of `S_κ`.
    fn home(&mut self, kappa: &Weight) -> Result<Weight> {
        Ok(if self.in_top_ambient(kappa)? { self.mu.clone() } else { kappa.clone() })
    }

    /// `(J, J^{-1})` carrying `S_κ` realized in `ambient` to its home.
    fn transfer_home(&mut self, kappa: &Weight, ambient: &Weight) -> Result<(DenseMatrix, DenseMatrix)> {
        let home = self.home(kappa)?;
        let key = (kappa.clone(), ambient.clone());
        if let Some(j) = self.intertwiners.get(&key) {
            return Ok(j.clone());
        }
        let pair = if &home == ambient {
            let d = self.ambient(ambient)?.summand(&kappa.shifted()).expect("summand").1.dim();
            (DenseMatrix::identity(d), DenseMatrix::identity(d))
        } else {
            let from = self.ambient(ambient)?.summand(&kappa.shifted()).expect("summand").1.generators.clone();
            let to = self.ambient(&home)?.summand(&kappa.shifted()).expect("summand").1.generators.clone();
            let j = intertwiner(&from, &to)?;
            let inv = j.inverse().ok_or_else(|| Error::Inconsistent("singular intertwiner".into()))?;
            (j, inv)
        };
        self.intertwiners.insert(key, pair.clone());
        Ok(pair)
    }

    fn dim(&mut self, kappa: &Weight) -> Result<usize> {
        let home = self.home(kappa)?;
        Ok(self.ambient(&home)?.summand(&kappa.shifted()).expect("summand").1.dim())
    }

    /// Fibre symbol of a first-order symbol in home coordinates.
    fn symbols(&mut self, symbol: &Symbol) -> Result<Vec<DenseMatrix>> {
        let (target, source) = (symbol.target().integral(), symbol.source().integral());
        let ambient = if self.in_top_ambient(&target)? && self.in_top_ambient(&source)? {
            self.mu.clone()
        } else if crate::weights::bruhat_leq(&source, &target)? {
            target.clone()
        } else {
            source.clone()
        };
        let ps = self.ambient(&ambient)?;
        let (ti, _) = ps.summand(&target.shifted()).ok_or_else(|| Error::Inconsistent(format!("{target} not in V_{ambient} ⊗ S")))?;
        let (si, _) = ps.summand(&source.shifted()).ok_or_else(|| Error::Inconsistent(format!("{source} not in V_{ambient} ⊗ S")))?;
        let raw = block_symbols(ps, ti, si);
        let (jt, _) = self.transfer_home(&target, &ambient)?;
        let (_, js_inv) = self.transfer_home(&source, &ambient)?;
        Ok(raw.iter().map(|a| jt.mul(a).mul(&js_inv)).collect())
    }

    /// Matrix of a word on the degree-`h` component.
    fn word_matrix(&mut self, word: &OperatorWord, h: i64) -> Result<SparseMatrix> {
        let mut degree = h;
        let d0 = self.dim(&word.source.integral())?;
        let mut acc = SparseMatrix::identity(n_monomials(self.m, h) * d0);
        for symbol in word.symbols.iter().rev() {
            let step = match symbol {
                Symbol::Laplace { at } => {
                    let d = self.dim(&at.integral())?;
                    let mat = laplace_matrix(self.m, d, degree);
                    degree -= 2;
                    mat
                }
                _ => {
                    let symbols = self.symbols(symbol)?;
                    let mat = first_order_matrix(self.m, &symbols, degree);
                    degree -= 1;
                    mat
                }
            };
            acc = step.mul(&acc);
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizationRatio {
    pub lambda: Weight,
    pub coefficient: String,
    /// Scalar multiplying the certificate term in the numeric realization.
    pub ratio: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationReport {
    pub mu: Weight,
    pub power: usize,
    pub m: usize,
    pub solve_degree: usize,
    pub degrees: Vec<(usize, bool)>,
    pub ratios: Vec<NormalizationRatio>,
    pub ratios_all_one: bool,
    pub solvable: bool,
    pub pass: bool,
}

fn flatten(mat: &SparseMatrix) -> SparseVec {
    let cols = mat.cols();
    let mut out: SparseVec = mat.entries().map(|((r, c), v)| (r * cols + c, v.clone())).collect();
    out.sort_by_key(|(i, _)| *i);
    out
}

/// Lowest weight touched by a word; identifies its certificate group.
fn bottom(word: &OperatorWord) -> Weight {
    word.symbols
        .iter()
        .flat_map(|s| [s.source().clone(), s.target().clone()])
        .chain([word.source.clone()])
        .min_by_key(|w| w.entries.iter().sum::<i64>())
        .expect("nonempty")
        .integral()
}

/// Instantiates `Δ_μ^p = R_μ A R_μ` numerically: one scalar per certificate
/// group is solved on degree `2p`, then equality is checked exactly on
/// `degree` as well.
pub fn verify_factorization_numeric(mu: &Weight, power: usize, m: usize, degree: usize) -> Result<FactorizationReport> {
    let mu = pad(mu, rank_for(m)?)?;
    if power as i64 <= mu.first() {
        return Err(Error::PowerTooSmall { power, first: mu.first() });
    }
    if degree < 2 * power {
        return Err(Error::DegreeTooSmall { degree, needed: 2 * power });
    }
    let cert: FactorizationCertificate = expand_laplace_power(&mu, power)?;
    if !cert.residual.is_zero() {
        return Err(Error::Inconsistent("certificate has a residual".into()));
    }
    let mut realizer = Realizer::new(&mu, m);
    let r_mu = OperatorWord::from_symbols(vec![Symbol::hsd(&mu)])?;

    let mut groups: BTreeMap<Weight, Vec<(OperatorWord, Q)>> = BTreeMap::new();
    for (w, c) in cert.middle.terms() {
        let full = r_mu.compose(w)?.compose(&r_mu)?;
        groups.entry(bottom(w)).or_default().push((full, c.clone()));
    }
    let d_mu = realizer.dim(&mu)?;
    let group_matrix = |realizer: &mut Realizer, terms: &[(OperatorWord, Q)], h: i64| -> Result<SparseMatrix> {
        let mut acc: Option<SparseMatrix> = None;
        for (w, c) in terms {
            let mat = realizer.word_matrix(w, h)?.scale(&GaussRat::real(c.clone()));
            acc = Some(match acc {
                Some(a) => a.add(&mat),
                None => mat,
            });
        }
        Ok(acc.expect("nonempty group"))
    };
    let lap_power = |h: i64| -> SparseMatrix {
        let mut acc = SparseMatrix::identity(n_monomials(m, h) * d_mu);
        for j in 0..power as i64 {
            acc = laplace_matrix(m, d_mu, h - 2 * j).mul(&acc);
        }
        acc
    };

    let solve_degree = 2 * power;
    let h0 = solve_degree as i64;
    let keys: Vec<Weight> = groups.keys().cloned().collect();
    let mut ech = Echelon::with_tracking(n_monomials(m, 0) * d_mu * n_monomials(m, h0) * d_mu);
    let mut independent = true;
    for key in &keys {
        independent &= ech.insert(flatten(&group_matrix(&mut realizer, &groups[key], h0)?));
    }
    let solution = ech.solve(&flatten(&lap_power(h0)));
    let solvable = independent && solution.is_some();
    let x: Vec<GaussRat> = match &solution {
        Some(v) => (0..keys.len()).map(|i| v.iter().find(|(j, _)| *j == i).map_or_else(GaussRat::zero, |(_, c)| c.clone())).collect(),
        None => vec![GaussRat::zero(); keys.len()],
    };

    let mut checked = vec![solve_degree];
    if degree != solve_degree {
        checked.push(degree);
    }
    let mut degrees = Vec::new();
    for &h in &checked {
        let ok = if solvable {
            let mut total = SparseMatrix::zeros(n_monomials(m, h as i64 - h0) * d_mu, n_monomials(m, h as i64) * d_mu);
            for (key, xi) in keys.iter().zip(&x) {
                total = total.add(&group_matrix(&mut realizer, &groups[key], h as i64)?.scale(xi));
            }
            total == lap_power(h as i64)
        } else {
            false
        };
        degrees.push((h, ok));
    }
    let ratios: Vec<NormalizationRatio> = keys
        .iter()
        .zip(&x)
        .map(|(k, xi)| NormalizationRatio {
            lambda: k.clone(),
            coefficient: q_to_string(&cert.coefficients[k]),
            ratio: xi.to_string(),
        })
        .collect();
    let ratios_all_one = solvable && x.iter().all(|v| v.is_one());
    let pass = solvable && degrees.iter().all(|(_, ok)| *ok);
    Ok(FactorizationReport { mu, power, m, solve_degree, degrees, ratios, ratios_all_one, solvable, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(e: &[i64]) -> Weight {
        Weight::new(e.to_vec())
    }

    #[test]
    fn explicit_coefficients() {
        let r = explicit_hsd(&w(&[1]), 3).unwrap();
        let Construction::Explicit(OperatorSpec::Compose(parts)) = &r.construction else { panic!() };
        let OperatorSpec::ScalarMix(mix) = &parts[0] else { panic!() };
        assert_eq!(mix[1].0, q(1, 3));
        let r = explicit_hsd(&w(&[1, 1]), 5).unwrap();
        let Construction::Explicit(OperatorSpec::Compose(parts)) = &r.construction else { panic!() };
        let dens: Vec<Q> = parts[..2]
            .iter()
            .map(|p| match p {
                OperatorSpec::ScalarMix(mix) => mix[1].0.clone(),
                _ => panic!(),
            })
            .collect();
        assert_eq!(dens, vec![q(1, 5), q(1, 3)]);
        assert!(matches!(explicit_hsd(&w(&[1, 1, 1]), 7), Err(Error::UnsupportedShape(_))));
    }

    #[test]
    fn r_zero_is_dirac() {
        let r = explicit_hsd(&w(&[0]), 3).unwrap();
        let gam = crate::polyspace::gammas(3).unwrap();
        for i in 0..3 {
            assert_eq!(&r.symbols[i], gam.gamma(i + 1));
        }
    }

    #[test]
    fn explicit_preserves_values() {
        for (l, m, h) in [(vec![1], 3, 2), (vec![2], 3, 1), (vec![1, 1], 5, 1)] {
            let r = explicit_hsd(&w(&l), m).unwrap();
            let Construction::Explicit(spec) = &r.construction else { panic!() };
            let space = simplicial_monogenic_basis(&w(&l), m, DEFAULT_CAP).unwrap();
            for f in r.fibre_in.iter().take(4) {
                let g = apply(spec, &f.times_x_monomial(&{
                    let mut a = vec![0; m];
                    a[0] = h;
                    a
                }))
                .unwrap();
                for c in &space.constraints {
                    assert!(apply(c, &g).unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn generic_family_for_vector() {
        let fam = generic_twistor_hsd(&w(&[1]), 5).unwrap();
        assert_eq!(fam.operators.len(), 4);
        assert!(fam.operators.iter().all(|o| !o.is_zero()));
        let fam0 = generic_twistor_hsd(&w(&[0]), 5).unwrap();
        assert_eq!(fam0.operators.len(), 1);
    }

    #[test]
    fn identities_small() {
        let r = verify_identities(&w(&[1]), 3, 2).unwrap();
        assert!(r.pass, "{r:?}");
        let r = verify_identities(&w(&[0]), 3, 2).unwrap();
        assert!(r.pass);
        assert_eq!(r.checks.len(), 1);
    }

    #[test]
    fn explicit_matches_generic() {
        for (l, m) in [(vec![1], 3), (vec![2], 3), (vec![1], 5)] {
            let r = compare_explicit_generic(&w(&l), m, 2).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn kernels_and_orders() {
        let r0 = explicit_hsd(&w(&[0]), 3).unwrap();
        let doubles = double_monogenic_basis(2, 0, 3).unwrap();
        assert_eq!(kernel_basis(&r0, 2).unwrap().len(), doubles.len());
        assert_eq!(kernel_basis(&r0, 0).unwrap().len(), 2);
        let f = SpinorPoly::unit(3, 0, vec![1, 1, 0], 0);
        assert_eq!(polyharmonic_order(&f).unwrap(), Some(1));
        let sq = SpinorPoly::unit(3, 0, vec![2, 0, 0], 0)
            .add(&SpinorPoly::unit(3, 0, vec![0, 2, 0], 0))
            .unwrap();
        assert_eq!(polyharmonic_order(&sq).unwrap(), Some(2));
        assert_eq!(polyharmonic_order(&SpinorPoly::zero(3, 0)).unwrap(), Some(0));
    }

    #[test]
    fn inversion_of_constant_spinor() {
        let g = SpinorPoly::unit(3, 0, vec![0, 0, 0], 0);
        let inv = twistor_inversion(&g, 1, 1, 3).unwrap();
        let dx = apply(&OperatorSpec::Dirac(Var::X), &inv.f).unwrap();
        let ug = apply(&OperatorSpec::VectorMult(Var::U(1)), &g.widen(1)).unwrap();
        assert_eq!(dx, ug);
        assert!(apply(&OperatorSpec::Dirac(Var::U(1)), &inv.f).unwrap().is_zero());
        assert_eq!(inv.f.degree_in(Var::X), Some(1));
        let zero = twistor_inversion(&SpinorPoly::zero(3, 0), 1, 1, 3).unwrap();
        assert!(zero.f.is_zero());
        let bad = SpinorPoly::unit(3, 0, vec![1, 0, 0], 0);
        assert!(matches!(twistor_inversion(&bad, 2, 1, 3), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn induction_small() {
        for (k, h) in [(0, 2), (1, 1)] {
            let r = verify_induction_dims(k, h, 3).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn twistor_maps_kernels() {
        let fam = generic_twistor_hsd(&w(&[1]), 3).unwrap();
        let (top, low) = (Weight::spin(vec![1]), Weight::spin(vec![0]));
        let t = fam.get(&top, &low).unwrap();
        let r_low = fam.get(&low, &low).unwrap();
        let r_top = fam.get(&top, &top).unwrap();
        let h = 2;
        for v in r_low.matrix(h).nullspace() {
            let image = t.matrix(h).mul_vec(&v);
            assert!(r_top.matrix(h - 1).mul_vec(&image).is_empty());
        }
    }

    #[test]
    fn theorem_for_dirac() {
        let r = verify_factorization_numeric(&w(&[0]), 1, 3, 2).unwrap();
        assert!(r.pass && r.ratios_all_one, "{r:?}");
        assert!(matches!(verify_factorization_numeric(&w(&[1]), 1, 3, 4), Err(Error::PowerTooSmall { .. })));
        assert!(matches!(verify_factorization_numeric(&w(&[1]), 2, 3, 3), Err(Error::DegreeTooSmall { .. })));
    }

    #[test]
    fn theorem_for_rarita_schwinger() {
        let r = verify_factorization_numeric(&w(&[1]), 2, 3, 5).unwrap();
        assert!(r.pass, "{r:?}");
        // In V_(1) ⊗ S the block R_0 is c·∂_x, and identities (1), (2) force
        // the (0)-group scalar to be 1/c².
        let fam = generic_twistor_hsd(&w(&[1]), 3).unwrap();
        let low = Weight::spin(vec![0]);
        let r0 = fam.get(&low, &low).unwrap();
        let sq = r0.matrix(1).mul(&r0.matrix(2));
        let lap = laplace_matrix(3, r0.fibre_in.len(), 2);
        let (pos, l) = lap.entries().next().map(|(p, v)| (p, v.clone())).unwrap();
        let c2 = -&(&sq.get(pos.0, pos.1) / &l);
        assert_eq!(sq, lap.scale(&-c2.clone()));
        let by_lambda: BTreeMap<_, _> = r.ratios.iter().map(|x| (x.lambda.clone(), x.ratio.clone())).collect();
        assert_eq!(by_lambda[&w(&[0])], c2.inv().to_string());
        assert_eq!(by_lambda[&w(&[1])], "1");
    }
}
