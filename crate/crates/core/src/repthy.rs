//! Concrete realizations of `B_n` representations on polynomial spaces.
//!
//! `S_λ` is realized by simplicial monogenics in dummy variables and
//! `V_λ ⊗ S` by simplicial harmonics tensored with spinors. The quadratic
//! Casimir splits the latter into the summands `S_κ`, `κ' ∈ Λ_λ`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Echelon, SparseVec};
use crate::polyspace::{combine, homogeneous_basis, joint_kernel, operator_matrix, OperatorSpec, SpinorPoly, Var};
use crate::scalar::{qi, GaussRat, Q};
use crate::weights::{summand_weights, SignCode, Weight};

/// Default cap on the dimension of a homogeneous component we are willing to
/// eliminate over.
pub const DEFAULT_CAP: usize = 20_000;

/// `n = (m-1)/2` for odd `m ≥ 3`.
pub fn rank_for(m: usize) -> Result<usize> {
    if m < 3 || m.is_multiple_of(2) {
        return Err(Error::InvalidDimension(m));
    }
    Ok((m - 1) / 2)
}

/// Pads a weight with zero entries to rank `n`.
pub fn pad(w: &Weight, n: usize) -> Result<Weight> {
    if w.rank() > n {
        return Err(Error::RankMismatch(w.rank(), n));
    }
    let mut out = w.clone();
    out.entries.resize(n, 0);
    Ok(out)
}

/// Weyl dimension of the `B_n` module with highest weight `w`, `n = (m-1)/2`.
pub fn weyl_dim(w: &Weight, m: usize) -> Result<u128> {
    let n = rank_for(m)?;
    let w = pad(w, n)?;
    if !w.is_dominant() {
        return Err(Error::NotDominant(w));
    }
    // Doubled coordinates of w + ρ and ρ, with ρ_i = (m - 2i)/2.
    let shifted: Vec<i64> = w.doubled().iter().enumerate().map(|(i, d)| d + (m as i64 - 2 * (i as i64 + 1))).collect();
    let rho: Vec<i64> = (0..n).map(|i| m as i64 - 2 * (i as i64 + 1)).collect();
    let mut num = Q::one();
    let mut den = Q::one();
    for i in 0..n {
        num *= qi(shifted[i]);
        den *= qi(rho[i]);
        for j in i + 1..n {
            num *= qi(shifted[i] - shifted[j]) * qi(shifted[i] + shifted[j]);
            den *= qi(rho[i] - rho[j]) * qi(rho[i] + rho[j]);
        }
    }
    let value = num / den;
    assert!(value.is_integer(), "Weyl dimension must be integral");
    Ok(u128::try_from(value.to_integer()).expect("positive dimension"))
}

/// `⟨κ', κ' + 2ρ⟩` for a weight of rank `n = (m-1)/2`.
pub fn casimir_eigenvalue(w: &Weight, m: usize) -> Result<Q> {
    let n = rank_for(m)?;
    let w = pad(w, n)?;
    let total: i64 = w
        .doubled()
        .iter()
        .enumerate()
        .map(|(i, d)| d * (d + 2 * m as i64 - 4 * (i as i64 + 1)))
        .sum();
    Ok(Q::new(total.into(), 4.into()))
}

#[derive(Clone, Debug)]
pub struct RealizedSpace {
    /// Spin-shifted for `S_λ`, integral for `V_λ ⊗ S`; padded to rank `n`.
    pub label: Weight,
    pub m: usize,
    /// Number of dummy variables.
    pub k: usize,
    /// `[x-degree, λ_1, …, λ_k]`.
    pub degrees: Vec<u32>,
    pub basis: Vec<SpinorPoly>,
    /// The operators whose joint kernel defines the space.
    pub constraints: Vec<OperatorSpec>,
}

impl RealizedSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Whether every basis element is annihilated by every constraint.
    pub fn satisfies_constraints(&self) -> Result<bool> {
        for f in &self.basis {
            for c in &self.constraints {
                if !crate::polyspace::apply(c, f)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn depth(lambda: &Weight) -> usize {
    lambda.entries.iter().take_while(|e| **e > 0).count()
}

fn realize(lambda: &Weight, m: usize, cap: usize, constraints: Vec<OperatorSpec>, label: Weight) -> Result<RealizedSpace> {
    let k = depth(lambda);
    let degrees: Vec<u32> = std::iter::once(0).chain(lambda.entries[..k].iter().map(|e| *e as u32)).collect();
    let needed = crate::polyspace::spinor_width(m)
        * degrees[1..].iter().map(|d| crate::polyspace::monomial_count(m, *d)).product::<usize>();
    if needed > cap {
        return Err(Error::ResourceCap { what: format!("component for {lambda} at m = {m}"), needed, cap });
    }
    let domain = homogeneous_basis(m, k, &degrees)?;
    let kernel = joint_kernel(&constraints, &domain)?;
    let basis = kernel.iter().map(|v| combine(&domain, v)).collect();
    Ok(RealizedSpace { label, m, k, degrees, basis, constraints })
}

fn check_integral_dominant(lambda: &Weight, m: usize) -> Result<Weight> {
    if lambda.spin_shift {
        return Err(Error::NotIntegral(lambda.clone()));
    }
    let lambda = pad(lambda, rank_for(m)?)?;
    if !lambda.is_dominant() {
        return Err(Error::NotDominant(lambda));
    }
    Ok(lambda)
}

/// `S_λ`: spinor-valued polynomials of degree `λ_p` in `u_p`, annihilated by
/// every `∂_{u_p}` and every `⟨u_p, ∂_{u_q}⟩`, `p < q`.
pub fn simplicial_monogenic_basis(lambda: &Weight, m: usize, cap: usize) -> Result<RealizedSpace> {
    let lambda = check_integral_dominant(lambda, m)?;
    let k = depth(&lambda);
    let mut constraints: Vec<OperatorSpec> = (1..=k).map(|p| OperatorSpec::Dirac(Var::U(p))).collect();
    for p in 1..=k {
        for q in p + 1..=k {
            constraints.push(OperatorSpec::MixedEuler(Var::U(p), Var::U(q)));
        }
    }
    realize(&lambda, m, cap, constraints, lambda.shifted())
}

/// `V_λ ⊗ S`: harmonic in each `u_p`, with `⟨u_p, ∂_{u_q}⟩` (`p < q`) and
/// `⟨∂_{u_p}, ∂_{u_q}⟩` vanishing, tensored with the spinor space.
pub fn simplicial_harmonic_basis(lambda: &Weight, m: usize, cap: usize) -> Result<RealizedSpace> {
    let lambda = check_integral_dominant(lambda, m)?;
    let k = depth(&lambda);
    let mut constraints: Vec<OperatorSpec> = (1..=k).map(|p| OperatorSpec::Laplace(Var::U(p))).collect();
    for p in 1..=k {
        for q in p + 1..=k {
            constraints.push(OperatorSpec::MixedEuler(Var::U(p), Var::U(q)));
            constraints.push(OperatorSpec::InnerDerivative(Var::U(p), Var::U(q)));
        }
    }
    realize(&lambda, m, cap, constraints, lambda.clone())
}

/// Generator `L_ab = Σ_p (u_{p,a}∂_{u_{p,b}} - u_{p,b}∂_{u_{p,a}}) - γ_aγ_b/2`.
pub fn so_generator(k: usize, a: usize, b: usize) -> OperatorSpec {
    let mut parts: Vec<(Q, OperatorSpec)> = (1..=k).map(|p| (Q::one(), OperatorSpec::Angular(Var::U(p), a, b))).collect();
    parts.push((-Q::one(), OperatorSpec::SpinorBivector(a, b)));
    OperatorSpec::ScalarMix(parts)
}

/// Matrices of an operator preserving a realized space, in its basis.
pub fn action_matrix(spec: &OperatorSpec, space: &RealizedSpace) -> Result<DenseMatrix> {
    Ok(operator_matrix(spec, &space.basis, &space.basis)?.matrix.to_dense())
}

/// All `L_ab`, `a < b`, on a realized space.
pub fn so_action(space: &RealizedSpace) -> Result<Vec<((usize, usize), DenseMatrix)>> {
    let mut out = Vec::new();
    for a in 1..=space.m {
        for b in a + 1..=space.m {
            out.push(((a, b), action_matrix(&so_generator(space.k, a, b), space)?));
        }
    }
    Ok(out)
}

/// `-Σ_{a<b} L_ab²`, which acts on `S_κ` by `⟨κ', κ'+2ρ⟩`.
pub fn casimir(generators: &[((usize, usize), DenseMatrix)]) -> DenseMatrix {
    let d = generators.first().map_or(0, |g| g.1.rows());
    let mut c = DenseMatrix::zeros(d, d);
    for (_, l) in generators {
        c = c.sub(&l.mul(l));
    }
    c
}

/// One isotypic summand `S_κ ⊂ V_λ ⊗ S`.
#[derive(Clone, Debug)]
pub struct Summand {
    pub weight: Weight,
    pub code: SignCode,
    pub eigenvalue: Q,
    pub projector: DenseMatrix,
    /// Columns span the image of the projector (`d_F × d_κ`).
    pub basis: DenseMatrix,
    /// `E` with `E · basis = I` and `basis · E = projector` (`d_κ × d_F`).
    pub coords: DenseMatrix,
    /// Generators restricted to the summand, `E L_ab B`.
    pub generators: Vec<DenseMatrix>,
}

impl Summand {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// Basis polynomials of the summand inside the ambient realization.
    pub fn polys(&self, ambient: &RealizedSpace) -> Vec<SpinorPoly> {
        (0..self.dim()).map(|c| combine(&ambient.basis, &self.basis.column(c))).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ProjectorSet {
    pub lambda: Weight,
    pub m: usize,
    pub ambient: RealizedSpace,
    pub generators: Vec<((usize, usize), DenseMatrix)>,
    /// Left multiplication by `γ_i` on the fibre, `i = 1..m`.
    pub gammas: Vec<DenseMatrix>,
    pub casimir: DenseMatrix,
    pub summands: Vec<Summand>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProjectorChecks {
    pub idempotent: bool,
    pub orthogonal: bool,
    pub complete: bool,
    pub casimir_invariant: bool,
    pub dims_match_weyl: bool,
}

impl ProjectorChecks {
    pub fn all(&self) -> bool {
        self.idempotent && self.orthogonal && self.complete && self.casimir_invariant && self.dims_match_weyl
    }
}

impl ProjectorSet {
    pub fn summand(&self, weight: &Weight) -> Option<(usize, &Summand)> {
        self.summands.iter().enumerate().find(|(_, s)| &s.weight == weight)
    }

    pub fn fibre_dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn check(&self) -> Result<ProjectorChecks> {
        let d = self.fibre_dim();
        let idempotent = self.summands.iter().all(|s| s.projector.mul(&s.projector) == s.projector);
        let orthogonal = self.summands.iter().enumerate().all(|(i, a)| {
            self.summands.iter().skip(i + 1).all(|b| a.projector.mul(&b.projector).is_zero() && b.projector.mul(&a.projector).is_zero())
        });
        let total = self.summands.iter().fold(DenseMatrix::zeros(d, d), |acc, s| acc.add(&s.projector));
        let complete = total == DenseMatrix::identity(d);
        let casimir_invariant = self.generators.iter().all(|(_, l)| self.casimir.commutator(l).is_zero());
        let mut dims_match_weyl = true;
        for s in &self.summands {
            dims_match_weyl &= weyl_dim(&s.weight, self.m)? == s.dim() as u128;
        }
        Ok(ProjectorChecks { idempotent, orthogonal, complete, casimir_invariant, dims_match_weyl })
    }
}

/// Spectral projectors of the Casimir on `V_λ ⊗ S`, one per dominant
/// `κ' ∈ Λ_λ`, by Lagrange interpolation over the distinct eigenvalues.
pub fn casimir_projectors(lambda: &Weight, m: usize) -> Result<ProjectorSet> {
    casimir_projectors_capped(lambda, m, DEFAULT_CAP)
}

pub fn casimir_projectors_capped(lambda: &Weight, m: usize, cap: usize) -> Result<ProjectorSet> {
    let ambient = simplicial_harmonic_basis(lambda, m, cap)?;
    let lambda = ambient.label.clone();
    let generators = so_action(&ambient)?;
    let gammas = (1..=m).map(|i| action_matrix(&OperatorSpec::Gamma(i), &ambient)).collect::<Result<Vec<_>>>()?;
    let c = casimir(&generators);
    let d = ambient.dim();

    let weights = summand_weights(&lambda);
    let eigen: Vec<Q> = weights.iter().map(|(w, _)| casimir_eigenvalue(w, m)).collect::<Result<_>>()?;
    for i in 0..weights.len() {
        for j in i + 1..weights.len() {
            if eigen[i] == eigen[j] {
                return Err(Error::EigenvalueCollision(weights[i].0.clone(), weights[j].0.clone()));
            }
        }
    }
    // The Casimir must be annihilated by the product over all eigenvalues.
    let mut annihilator = DenseMatrix::identity(d);
    for e in &eigen {
        annihilator = annihilator.mul(&c.sub(&DenseMatrix::identity(d).scale(&GaussRat::real(e.clone()))));
    }
    if !annihilator.is_zero() {
        return Err(Error::Inconsistent(format!("Casimir on V_{lambda} ⊗ S has eigenvalues outside Λ_λ")));
    }

    let mut summands = Vec::new();
    for (i, (w, code)) in weights.iter().enumerate() {
        let mut p = DenseMatrix::identity(d);
        for (j, e) in eigen.iter().enumerate() {
            if i != j {
                let factor = GaussRat::real(Q::one() / (&eigen[i] - e));
                p = p.mul(&c.sub(&DenseMatrix::identity(d).scale(&GaussRat::real(e.clone())))).scale(&factor);
            }
        }
        let (basis, coords) = adapted_basis(&p);
        let restricted = generators.iter().map(|(_, l)| coords.mul(l).mul(&basis)).collect();
        summands.push(Summand {
            weight: w.clone(),
            code: code.clone(),
            eigenvalue: eigen[i].clone(),
            projector: p,
            basis,
            coords,
            generators: restricted,
        });
    }
    Ok(ProjectorSet { lambda, m, ambient, generators, gammas, casimir: c, summands })
}

/// Column basis `B` of the image of a projector and coordinates `E` with
/// `B E = P`, `E B = I`.
fn adapted_basis(p: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let d = p.rows();
    let mut ech = Echelon::with_tracking(d);
    let mut chosen: Vec<SparseVec> = Vec::new();
    for c in 0..p.cols() {
        let col = p.column(c);
        if ech.insert(col.clone()) {
            chosen.push(col);
        }
    }
    // Re-solve against the chosen columns only (their insertion order is 0..r).
    let mut sel = Echelon::with_tracking(d);
    for col in &chosen {
        sel.insert(col.clone());
    }
    let basis = DenseMatrix::from_columns(d, &chosen);
    let coord_cols: Vec<SparseVec> =
        (0..p.cols()).map(|c| sel.solve(&p.column(c)).expect("column lies in the image")).collect();
    let coords = DenseMatrix::from_columns(chosen.len(), &coord_cols);
    (basis, coords)
}

/// The intertwiner `J` with `J a_g = b_g J` for every generator, unique up to
/// scale by Schur's lemma.
pub fn intertwiner(a: &[DenseMatrix], b: &[DenseMatrix]) -> Result<DenseMatrix> {
    let (da, db) = (a[0].rows(), b[0].rows());
    let idx = |r: usize, c: usize| r * da + c;
    let mut ech = Echelon::new(db * da);
    for (ag, bg) in a.iter().zip(b) {
        for r in 0..db {
            for c in 0..da {
                let mut row: std::collections::BTreeMap<usize, GaussRat> = std::collections::BTreeMap::new();
                for k in 0..da {
                    let v = &ag[(k, c)];
                    if !v.is_zero() {
                        *row.entry(idx(r, k)).or_insert_with(GaussRat::zero) += v;
                    }
                }
                for k in 0..db {
                    let v = &bg[(r, k)];
                    if !v.is_zero() {
                        *row.entry(idx(k, c)).or_insert_with(GaussRat::zero) -= v;
                    }
                }
                ech.insert(row.into_iter().filter(|(_, v)| !v.is_zero()).collect());
            }
        }
    }
    let ns = ech.nullspace();
    if ns.len() != 1 {
        return Err(Error::Inconsistent(format!("intertwiner space has dimension {}", ns.len())));
    }
    let mut j = DenseMatrix::zeros(db, da);
    for (i, v) in &ns[0] {
        j[(i / da, i % da)] = v.clone();
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn w(e: &[i64]) -> Weight {
        Weight::new(e.to_vec())
    }

    #[test]
    fn weyl_dimensions() {
        assert_eq!(weyl_dim(&Weight::spin(vec![0, 0]), 5).unwrap(), 4);
        assert_eq!(weyl_dim(&Weight::spin(vec![1, 0]), 5).unwrap(), 16);
        assert_eq!(weyl_dim(&Weight::spin(vec![2, 1]), 5).unwrap(), 64);
        assert_eq!(weyl_dim(&w(&[1]), 5).unwrap(), 5);
        assert_eq!(weyl_dim(&w(&[1, 1]), 5).unwrap(), 10);
        assert_eq!(weyl_dim(&Weight::spin(vec![3]), 3).unwrap(), 8);
        assert!(matches!(weyl_dim(&w(&[0, 1]), 5), Err(Error::NotDominant(_))));
    }

    #[test]
    fn casimir_values() {
        assert_eq!(casimir_eigenvalue(&Weight::spin(vec![1, 0]), 5).unwrap(), q(15, 2));
        assert_eq!(casimir_eigenvalue(&Weight::spin(vec![0, 0]), 5).unwrap(), q(5, 2));
    }

    #[test]
    fn monogenic_dims() {
        let s = simplicial_monogenic_basis(&w(&[1]), 5, DEFAULT_CAP).unwrap();
        assert_eq!(s.dim(), 16);
        assert!(s.satisfies_constraints().unwrap());
        assert_eq!(simplicial_monogenic_basis(&w(&[0]), 5, DEFAULT_CAP).unwrap().dim(), 4);
        assert_eq!(simplicial_monogenic_basis(&w(&[0]), 3, DEFAULT_CAP).unwrap().dim(), 2);
        let s11 = simplicial_monogenic_basis(&w(&[1, 1]), 5, DEFAULT_CAP).unwrap();
        assert_eq!(s11.dim() as u128, weyl_dim(&Weight::spin(vec![1, 1]), 5).unwrap());
        assert!(matches!(
            simplicial_monogenic_basis(&w(&[3]), 5, 10),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn harmonic_fibre_dims() {
        for (l, m) in [(vec![1], 3), (vec![2], 3), (vec![1], 5), (vec![1, 1], 5)] {
            let f = simplicial_harmonic_basis(&w(&l), m, DEFAULT_CAP).unwrap();
            let spinor = crate::polyspace::spinor_width(m) as u128;
            assert_eq!(f.dim() as u128, weyl_dim(&w(&l), m).unwrap() * spinor, "{l:?} {m}");
        }
    }

    #[test]
    fn projectors_for_vector_times_spinor() {
        let ps = casimir_projectors(&w(&[1]), 5).unwrap();
        assert_eq!(ps.summands.len(), 2);
        assert_eq!(ps.summands[0].eigenvalue, q(15, 2));
        assert_eq!(ps.summands[0].dim(), 16);
        assert_eq!(ps.summands[1].eigenvalue, q(5, 2));
        assert!(ps.check().unwrap().all());
    }

    #[test]
    fn projectors_trivial_and_rank_two() {
        let ps = casimir_projectors(&w(&[0]), 3).unwrap();
        assert_eq!(ps.summands.len(), 1);
        assert_eq!(ps.summands[0].projector, DenseMatrix::identity(2));
        let ps = casimir_projectors(&w(&[1, 1]), 5).unwrap();
        assert_eq!(ps.summands.len(), 3);
        assert_eq!(ps.summands.iter().map(Summand::dim).sum::<usize>(), 40);
        assert!(ps.check().unwrap().all());
    }

    #[test]
    fn top_summand_is_monogenic() {
        let ps = casimir_projectors(&w(&[2]), 3).unwrap();
        let top = &ps.summands[0];
        assert_eq!(top.weight, Weight::spin(vec![2]));
        for f in top.polys(&ps.ambient) {
            assert!(crate::polyspace::apply(&OperatorSpec::Dirac(Var::U(1)), &f).unwrap().is_zero());
        }
    }

    #[test]
    fn intertwiner_between_realizations() {
        let a = casimir_projectors(&w(&[1]), 3).unwrap();
        let b = casimir_projectors(&w(&[0]), 3).unwrap();
        let (_, low) = a.summand(&Weight::spin(vec![0])).unwrap();
        let j = intertwiner(&low.generators, &b.summands[0].generators).unwrap();
        assert_eq!(j.rows(), 2);
        assert!(j.inverse().is_some());
    }
}
