//! Clifford algebra `C_m` with `e_p e_q + e_q e_p = -2 δ_pq`, and a concrete
//! spinor representation for odd `m = 2n + 1`.
//!
//! The spinor space is realized as column vectors acted on by gamma matrices
//! rather than as a minimal left ideal; the module structure is the same and
//! the standard basis is convenient for exact linear algebra.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Echelon, SparseVec};
use crate::scalar::{q, GaussRat};

/// Sparse multivector keyed by blade bitmask (bit `i-1` set means `e_i`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordElement {
    m: usize,
    blades: BTreeMap<u64, GaussRat>,
}

impl CliffordElement {
    pub fn zero(m: usize) -> Self {
        assert!(m < 64, "at most 63 generators");
        Self { m, blades: BTreeMap::new() }
    }

    pub fn scalar(m: usize, value: GaussRat) -> Self {
        let mut e = Self::zero(m);
        e.add_term(0, value);
        e
    }

    /// The generator `e_i` (1-based).
    pub fn basis_vector(m: usize, i: usize) -> Self {
        Self::blade(m, &[i]).expect("index checked by caller")
    }

    /// The product `e_{i_1} … e_{i_k}` for strictly increasing indices.
    pub fn blade(m: usize, indices: &[usize]) -> Result<Self> {
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("blade indices must be strictly increasing".into()));
        }
        let mut mask = 0u64;
        for &i in indices {
            if i == 0 || i > m {
                return Err(Error::IndexOutOfRange(format!("e_{i} in C_{m}")));
            }
            mask |= 1 << (i - 1);
        }
        let mut e = Self::zero(m);
        e.add_term(mask, GaussRat::one());
        Ok(e)
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.blades.is_empty()
    }

    pub fn coefficient(&self, indices: &[usize]) -> GaussRat {
        let mask = indices.iter().fold(0u64, |acc, i| acc | 1 << (i - 1));
        self.blades.get(&mask).cloned().unwrap_or_else(GaussRat::zero)
    }

    /// Blades of grade `k` only.
    pub fn grade(&self, k: u32) -> Self {
        let blades = self.blades.iter().filter(|(b, _)| b.count_ones() == k).map(|(b, v)| (*b, v.clone())).collect();
        Self { m: self.m, blades }
    }

    fn add_term(&mut self, mask: u64, value: GaussRat) {
        if value.is_zero() {
            return;
        }
        let entry = self.blades.entry(mask).or_insert_with(GaussRat::zero);
        *entry += &value;
        if entry.is_zero() {
            self.blades.remove(&mask);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::RankMismatch(self.m, other.m));
        }
        let mut out = self.clone();
        for (b, v) in &other.blades {
            out.add_term(*b, v.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, factor: &GaussRat) -> Self {
        let mut out = Self::zero(self.m);
        for (b, v) in &self.blades {
            out.add_term(*b, v * factor);
        }
        out
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        clifford_product(self, other)
    }
}

/// Sign of `e_A e_B` relative to `e_{A Δ B}`: reordering swaps plus one
/// factor `-1` for every repeated generator.
fn blade_product_sign(a: u64, b: u64) -> i64 {
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        rest &= rest - 1;
        // generators of a with larger index than `bit` must move past it
        swaps += (a >> (bit + 1)).count_ones();
    }
    let squares = (a & b).count_ones();
    if (swaps + squares).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn clifford_product(a: &CliffordElement, b: &CliffordElement) -> Result<CliffordElement> {
    if a.m != b.m {
        return Err(Error::RankMismatch(a.m, b.m));
    }
    let mut out = CliffordElement::zero(a.m);
    for (ba, va) in &a.blades {
        for (bb, vb) in &b.blades {
            let sign = GaussRat::int(blade_product_sign(*ba, *bb));
            out.add_term(ba ^ bb, &(va * vb) * &sign);
        }
    }
    Ok(out)
}

impl fmt::Display for CliffordElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blades.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .blades
            .iter()
            .map(|(b, v)| {
                if *b == 0 {
                    return format!("({v})");
                }
                let idx: Vec<String> = (0..64).filter(|i| b >> i & 1 == 1).map(|i| (i + 1).to_string()).collect();
                format!("({v})e{}", idx.join(""))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Gamma matrices `γ_1 … γ_m` of size `2^n` with `γ_iγ_j + γ_jγ_i = -2δ_ij`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaRep {
    pub m: usize,
    pub generators: Vec<DenseMatrix>,
}

impl GammaRep {
    pub fn rank(&self) -> usize {
        (self.m - 1) / 2
    }

    pub fn spinor_dim(&self) -> usize {
        1 << self.rank()
    }

    /// `γ_a` with 1-based index.
    pub fn gamma(&self, a: usize) -> &DenseMatrix {
        &self.generators[a - 1]
    }

    /// Image of a Clifford element under the representation.
    pub fn represent(&self, e: &CliffordElement) -> Result<DenseMatrix> {
        if e.m != self.m {
            return Err(Error::RankMismatch(e.m, self.m));
        }
        let d = self.spinor_dim();
        let mut out = DenseMatrix::zeros(d, d);
        for (mask, v) in &e.blades {
            let mut mat = DenseMatrix::identity(d);
            for i in 0..self.m {
                if mask >> i & 1 == 1 {
                    mat = mat.mul(&self.generators[i]);
                }
            }
            out = out.add(&mat.scale(v));
        }
        Ok(out)
    }
}

/// Jordan–Wigner construction: Hermitian Pauli strings `Γ_a` squaring to the
/// identity, multiplied by `i` so that they square to `-1`.
pub fn gamma_rep(m: usize) -> Result<GammaRep> {
    if m < 3 || m.is_multiple_of(2) {
        return Err(Error::InvalidDimension(m));
    }
    let n = (m - 1) / 2;
    let zero = GaussRat::zero();
    let one = GaussRat::one();
    let i = GaussRat::i();
    let pauli_x = DenseMatrix::from_rows(vec![vec![zero.clone(), one.clone()], vec![one.clone(), zero.clone()]]);
    let pauli_y = DenseMatrix::from_rows(vec![vec![zero.clone(), -&i], vec![i.clone(), zero.clone()]]);
    let pauli_z = DenseMatrix::from_rows(vec![vec![one.clone(), zero.clone()], vec![zero.clone(), -&one]]);
    let id2 = DenseMatrix::identity(2);

    let string = |factors: Vec<&DenseMatrix>| -> DenseMatrix {
        factors.into_iter().fold(DenseMatrix::identity(1), |acc, f| acc.kron(f))
    };
    let mut generators = Vec::with_capacity(m);
    for k in 0..n {
        for middle in [&pauli_x, &pauli_y] {
            let mut factors = vec![&pauli_z; k];
            factors.push(middle);
            factors.extend(std::iter::repeat_n(&id2, n - k - 1));
            generators.push(string(factors).scale(&i));
        }
    }
    generators.push(string(vec![&pauli_z; n]).scale(&i));
    Ok(GammaRep { m, generators })
}

/// `G_ab = γ_a γ_b / 2` for `a < b`, keyed by the 1-based pair.
pub fn spin_generators(rep: &GammaRep) -> Vec<((usize, usize), DenseMatrix)> {
    let half = GaussRat::real(q(1, 2));
    let mut out = Vec::new();
    for a in 1..=rep.m {
        for b in a + 1..=rep.m {
            out.push(((a, b), rep.gamma(a).mul(rep.gamma(b)).scale(&half)));
        }
    }
    out
}

fn flatten(m: &DenseMatrix) -> SparseVec {
    let cols = m.cols();
    (0..m.rows()).flat_map(|r| m.sparse_row(r).into_iter().map(move |(c, v)| (r * cols + c, v))).collect()
}

/// Whether all pairwise commutators of `mats` lie in their span.
pub fn closes_under_bracket(mats: &[DenseMatrix]) -> bool {
    let Some(first) = mats.first() else { return true };
    let mut span = Echelon::new(first.rows() * first.cols());
    for m in mats {
        span.insert(flatten(m));
    }
    mats.iter()
        .enumerate()
        .all(|(i, a)| mats[i + 1..].iter().all(|b| span.contains(&flatten(&a.commutator(b)))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(m: usize, idx: &[usize]) -> CliffordElement {
        CliffordElement::blade(m, idx).unwrap()
    }

    #[test]
    fn defining_relations() {
        let m = 3;
        let e1 = CliffordElement::basis_vector(m, 1);
        let e2 = CliffordElement::basis_vector(m, 2);
        assert_eq!(e1.product(&e1).unwrap(), CliffordElement::scalar(m, GaussRat::int(-1)));
        assert_eq!(e1.product(&e2).unwrap(), e(m, &[1, 2]));
        assert_eq!(e2.product(&e1).unwrap(), e(m, &[1, 2]).scale(&GaussRat::int(-1)));
        let e21 = e2.product(&e1).unwrap();
        assert_eq!(e(m, &[1, 2]).product(&e21).unwrap(), CliffordElement::scalar(m, GaussRat::one()));
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            CliffordElement::basis_vector(3, 1).product(&CliffordElement::basis_vector(5, 1)),
            Err(Error::RankMismatch(3, 5))
        );
    }

    fn check_anticommutators(rep: &GammaRep) {
        let d = rep.spinor_dim();
        for a in 1..=rep.m {
            for b in 1..=rep.m {
                let ac = rep.gamma(a).mul(rep.gamma(b)).add(&rep.gamma(b).mul(rep.gamma(a)));
                let expected = if a == b { DenseMatrix::identity(d).scale(&GaussRat::int(-2)) } else { DenseMatrix::zeros(d, d) };
                assert_eq!(ac, expected, "anticommutator ({a},{b}) for m={}", rep.m);
                if a != b {
                    assert!(rep.gamma(a).mul(rep.gamma(b)).trace().is_zero());
                }
            }
        }
    }

    #[test]
    fn gamma_reps_satisfy_clifford_relations() {
        let r3 = gamma_rep(3).unwrap();
        assert_eq!(r3.generators.len(), 3);
        assert_eq!(r3.spinor_dim(), 2);
        check_anticommutators(&r3);
        let r5 = gamma_rep(5).unwrap();
        assert_eq!(r5.generators.len(), 5);
        assert_eq!(r5.spinor_dim(), 4);
        check_anticommutators(&r5);
        check_anticommutators(&gamma_rep(7).unwrap());
        assert_eq!(gamma_rep(4), Err(Error::InvalidDimension(4)));
    }

    #[test]
    fn representation_is_multiplicative() {
        let rep = gamma_rep(5).unwrap();
        let a = e(5, &[1, 3]).add(&CliffordElement::scalar(5, GaussRat::int(2))).unwrap();
        let b = e(5, &[2, 3, 5]).add(&e(5, &[4])).unwrap();
        let ab = rep.represent(&a.product(&b).unwrap()).unwrap();
        assert_eq!(ab, rep.represent(&a).unwrap().mul(&rep.represent(&b).unwrap()));
    }

    fn so_bracket(gens: &BTreeMap<(usize, usize), DenseMatrix>, a: usize, b: usize) -> DenseMatrix {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => gens[&(a, b)].clone(),
            std::cmp::Ordering::Greater => gens[&(b, a)].scale(&GaussRat::int(-1)),
            std::cmp::Ordering::Equal => {
                let d = gens.values().next().unwrap().rows();
                DenseMatrix::zeros(d, d)
            }
        }
    }

    #[test]
    fn spin_generators_satisfy_so_relations() {
        for m in [3, 5] {
            let rep = gamma_rep(m).unwrap();
            let list = spin_generators(&rep);
            assert_eq!(list.len(), m * (m - 1) / 2);
            let mats: Vec<DenseMatrix> = list.iter().map(|x| x.1.clone()).collect();
            assert!(closes_under_bracket(&mats));
            let gens: BTreeMap<_, _> = list.into_iter().collect();
            // [G_ab, G_cd] = -δ_bc G_ad + δ_ac G_bd + δ_bd G_ac - δ_ad G_bc
            let d = |x: usize, y: usize| if x == y { 1 } else { 0 };
            for (&(a, b), gab) in &gens {
                for (&(c, dd), gcd) in &gens {
                    let mut rhs = so_bracket(&gens, a, dd).scale(&GaussRat::int(-d(b, c)));
                    rhs = rhs.add(&so_bracket(&gens, b, dd).scale(&GaussRat::int(d(a, c))));
                    rhs = rhs.add(&so_bracket(&gens, a, c).scale(&GaussRat::int(d(b, dd))));
                    rhs = rhs.add(&so_bracket(&gens, b, c).scale(&GaussRat::int(-d(a, dd))));
                    assert_eq!(gab.commutator(gcd), rhs);
                }
            }
        }
        let rep = gamma_rep(3).unwrap();
        let gens: BTreeMap<_, _> = spin_generators(&rep).into_iter().collect();
        assert_eq!(gens[&(1, 2)].commutator(&gens[&(1, 3)]), gens[&(2, 3)]);
    }

    use proptest::prelude::*;

    fn element(m: usize) -> impl Strategy<Value = CliffordElement> {
        proptest::collection::vec((0u64..(1 << m), -3i64..=3, -3i64..=3), 0..5).prop_map(move |terms| {
            let mut e = CliffordElement::zero(m);
            for (mask, re, im) in terms {
                e.add_term(mask, GaussRat::new(q(re, 1), q(im, 2)));
            }
            e
        })
    }

    proptest! {
        #[test]
        fn product_is_associative(a in element(4), b in element(4), c in element(4)) {
            let left = a.product(&b).unwrap().product(&c).unwrap();
            let right = a.product(&b.product(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
