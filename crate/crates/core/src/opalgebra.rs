//! Formal operator algebra over twistor, higher spin Dirac and Laplace symbols.
//!
//! Words are compositions read right to left: the rightmost symbol acts
//! first. All symbol weights are spin-shifted. Twistor symbols in a word are
//! the raw generators; the normalization sign of a path operator lives in the
//! coefficient, so raw rewriting signs and normalization signs meet only in
//! the coefficient arithmetic.
//!
//! Rewrite rules (all monomial, coefficient ±1 or zero):
//! * `T_{κθ}T_{θι} → -T_{κω}T_{ωι}` for a twistor square, sorting monotone
//!   runs towards non-decreasing change order; zero when the alternate
//!   intermediate weight is not dominant.
//! * `T_{κι}R_ι → -R_κT_{κι}`: higher spin Dirac symbols move left.
//! * Laplace symbols are central and collect at the left.
//! * `R_κ² → -Δ_κ - Σ T_{κω}T_{ωκ}` is only applied on request.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{q_to_string, qi, Q};
use crate::weights::{
    bruhat_leq, canonical_path, in_box, manhattan_distance, weight_box, Direction, Path, Weight,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Symbol {
    Twistor { target: Weight, source: Weight },
    Hsd { at: Weight },
    Laplace { at: Weight },
}

impl Symbol {
    /// Twistor between the spin-shifted companions of two integral weights.
    pub fn twistor(target: &Weight, source: &Weight) -> Self {
        Symbol::Twistor { target: target.shifted(), source: source.shifted() }
    }

    pub fn hsd(at: &Weight) -> Self {
        Symbol::Hsd { at: at.shifted() }
    }

    pub fn laplace(at: &Weight) -> Self {
        Symbol::Laplace { at: at.shifted() }
    }

    pub fn target(&self) -> &Weight {
        match self {
            Symbol::Twistor { target, .. } => target,
            Symbol::Hsd { at } | Symbol::Laplace { at } => at,
        }
    }

    pub fn source(&self) -> &Weight {
        match self {
            Symbol::Twistor { source, .. } => source,
            Symbol::Hsd { at } | Symbol::Laplace { at } => at,
        }
    }

    fn weights(&self) -> Vec<&Weight> {
        match self {
            Symbol::Twistor { target, source } => vec![target, source],
            Symbol::Hsd { at } | Symbol::Laplace { at } => vec![at],
        }
    }

    fn is_dominant(&self) -> bool {
        self.weights().iter().all(|w| w.is_dominant())
    }

    /// For a twistor, `(0-based coordinate, +1 up / -1 down)`.
    fn step(&self) -> Option<(usize, i64)> {
        match self {
            Symbol::Twistor { target, source } => source.unit_step_to(target),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Twistor { target, source } => write!(f, "T[{target}<-{source}]"),
            Symbol::Hsd { at } => write!(f, "R[{at}]"),
            Symbol::Laplace { at } => write!(f, "L[{at}]"),
        }
    }
}

/// A composable word; the empty word is the identity at `source == target`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperatorWord {
    pub symbols: Vec<Symbol>,
    pub source: Weight,
    pub target: Weight,
}

impl OperatorWord {
    pub fn identity(at: &Weight) -> Self {
        Self { symbols: Vec::new(), source: at.clone(), target: at.clone() }
    }

    pub fn from_symbols(symbols: Vec<Symbol>) -> Result<Self> {
        let first = symbols.first().ok_or_else(|| Error::InvalidArgument("empty symbol list".into()))?;
        let target = first.target().clone();
        let source = symbols.last().expect("nonempty").source().clone();
        for pair in symbols.windows(2) {
            if pair[0].source() != pair[1].target() {
                return Err(Error::InvalidArgument(format!("{} cannot follow {}", pair[0], pair[1])));
            }
        }
        Ok(Self { symbols, source, target })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &OperatorWord) -> Result<OperatorWord> {
        if self.source != other.target {
            return Err(Error::InvalidArgument(format!(
                "cannot compose word ending at {} with word starting at {}",
                self.source, other.target
            )));
        }
        let mut symbols = self.symbols.clone();
        symbols.extend(other.symbols.iter().cloned());
        Ok(OperatorWord { symbols, source: other.source.clone(), target: self.target.clone() })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            return write!(f, "I[{}]", self.source);
        }
        let parts: Vec<String> = self.symbols.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Exact rational combination of words with common endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorExpr {
    pub source: Weight,
    pub target: Weight,
    terms: BTreeMap<OperatorWord, Q>,
}

impl OperatorExpr {
    pub fn zero(source: &Weight, target: &Weight) -> Self {
        Self { source: source.clone(), target: target.clone(), terms: BTreeMap::new() }
    }

    pub fn identity(at: &Weight) -> Self {
        Self::from_word(OperatorWord::identity(at), Q::one())
    }

    pub fn from_word(word: OperatorWord, coefficient: Q) -> Self {
        let mut e = Self::zero(&word.source, &word.target);
        e.add_term(word, coefficient);
        e
    }

    pub fn terms(&self) -> impl Iterator<Item = (&OperatorWord, &Q)> {
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

    pub fn coefficient(&self, word: &OperatorWord) -> Q {
        self.terms.get(word).cloned().unwrap_or_else(Q::zero)
    }

    /// The single term of a monomial expression.
    pub fn as_monomial(&self) -> Option<(&OperatorWord, &Q)> {
        (self.terms.len() == 1).then(|| self.terms.iter().next().expect("one term"))
    }

    fn add_term(&mut self, word: OperatorWord, coefficient: Q) {
        if coefficient.is_zero() {
            return;
        }
        let entry = self.terms.entry(word.clone()).or_insert_with(Q::zero);
        *entry += coefficient;
        if entry.is_zero() {
            self.terms.remove(&word);
        }
    }

    pub fn add(&self, other: &OperatorExpr) -> Result<OperatorExpr> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::InvalidArgument(format!(
                "cannot add expressions {}->{} and {}->{}",
                self.source, self.target, other.source, other.target
            )));
        }
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &OperatorExpr) -> Result<OperatorExpr> {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, factor: &Q) -> OperatorExpr {
        let mut out = Self::zero(&self.source, &self.target);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c * factor);
        }
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &OperatorExpr) -> Result<OperatorExpr> {
        if self.source != other.target {
            return Err(Error::InvalidArgument(format!(
                "cannot compose {}->{} after {}->{}",
                self.source, self.target, other.source, other.target
            )));
        }
        let mut out = Self::zero(&other.source, &self.target);
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(w1.compose(w2)?, c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn power(&self, exponent: usize) -> Result<OperatorExpr> {
        let mut out = Self::identity(&self.source);
        for _ in 0..exponent {
            out = out.compose(self)?;
        }
        Ok(out)
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(w, c)| format!("({c}) {w}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

struct Term<'a>(&'a OperatorWord, &'a Q);

impl Serialize for Term<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Term", 2)?;
        s.serialize_field("coefficient", &q_to_string(self.1))?;
        s.serialize_field("word", &self.0.symbols)?;
        s.end()
    }
}

impl Serialize for OperatorExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("OperatorExpr", 3)?;
        s.serialize_field("source", &self.source)?;
        s.serialize_field("target", &self.target)?;
        let terms: Vec<Term<'_>> = self.terms.iter().map(|(w, c)| Term(w, c)).collect();
        s.serialize_field("terms", &terms)?;
        s.end()
    }
}

/// Serializes a `Weight -> Q` table as a list of `{weight, value}` records.
pub struct CoefficientTable<'a>(pub &'a BTreeMap<Weight, Q>);

impl Serialize for CoefficientTable<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = serializer.serialize_map(Some(self.0.len()))?;
        for (w, c) in self.0 {
            let key: Vec<String> = w.entries.iter().map(ToString::to_string).collect();
            m.serialize_entry(&key.join(","), &q_to_string(c))?;
        }
        m.end()
    }
}

/// Builds a single-symbol expression, or the zero expression when some weight
/// is not dominant.
pub fn make_symbol(symbol: Symbol) -> Result<OperatorExpr> {
    let weights = symbol.weights();
    let rank = weights[0].rank();
    for w in &weights {
        if w.rank() != rank {
            return Err(Error::RankMismatch(rank, w.rank()));
        }
        if !w.spin_shift {
            return Err(Error::SpinMismatch);
        }
    }
    if let Symbol::Twistor { target, source } = &symbol {
        if manhattan_distance(target, source)? != 1 {
            return Err(Error::InvalidTwistor { target: target.clone(), from: source.clone() });
        }
    }
    if !symbol.is_dominant() {
        return Ok(OperatorExpr::zero(symbol.source(), symbol.target()));
    }
    let word = OperatorWord::from_symbols(vec![symbol])?;
    Ok(OperatorExpr::from_word(word, Q::one()))
}

/// Normalization sign `s(μ, p) = (-1)^(μ_{p+1} + … + μ_n)` applied to the raw
/// generator `T_{μ+ε_p ← μ}` (and to its reverse). `p` is 1-based.
pub fn normalization_sign(mu: &Weight, p: usize) -> Result<i64> {
    if p == 0 || p > mu.rank() {
        return Err(Error::IndexOutOfRange(format!("coordinate {p} for rank {}", mu.rank())));
    }
    if !mu.is_dominant() {
        return Err(Error::NotDominant(mu.clone()));
    }
    let up = mu.raised(p - 1);
    if !up.is_dominant() {
        return Err(Error::NotDominant(up));
    }
    let tail: i64 = mu.entries[p..].iter().sum();
    Ok(if tail % 2 == 0 { 1 } else { -1 })
}

/// Composition of normalized twistors along a path (or reverse path).
pub fn path_operator(path: &Path) -> Result<OperatorExpr> {
    let lower = path.lower().integral();
    let upper = path.upper().integral();
    if path.is_empty() {
        return Ok(OperatorExpr::identity(&lower.shifted()));
    }
    let mut sign = 1;
    let mut up_symbols = Vec::with_capacity(path.len());
    for (k, &c) in path.changes.iter().enumerate() {
        let from = path.nodes[k].integral();
        let to = path.nodes[k + 1].integral();
        if from.raised(c - 1) != to {
            return Err(Error::InvalidArgument(format!("path step {from} -> {to} does not match change {c}")));
        }
        sign *= normalization_sign(&from, c)?;
        up_symbols.push((from, to));
    }
    let symbols: Vec<Symbol> = match path.direction {
        Direction::Forward => up_symbols.iter().rev().map(|(from, to)| Symbol::twistor(to, from)).collect(),
        Direction::Reverse => up_symbols.iter().map(|(from, to)| Symbol::twistor(from, to)).collect(),
    };
    let word = OperatorWord::from_symbols(symbols)?;
    debug_assert!(match path.direction {
        Direction::Forward => word.source == lower.shifted() && word.target == upper.shifted(),
        Direction::Reverse => word.source == upper.shifted() && word.target == lower.shifted(),
    });
    Ok(OperatorExpr::from_word(word, qi(sign)))
}

/// The normalized path operator `P_{upper←lower}` (forward) or
/// `P_{lower←upper}` (reverse) along the canonical path.
pub fn canonical_path_operator(lower: &Weight, upper: &Weight, direction: Direction) -> Result<OperatorExpr> {
    let mut path = canonical_path(lower, upper)?;
    path.direction = direction;
    path_operator(&path)
}

fn node_at(lower: &Weight, changes: &[usize], k: usize) -> Weight {
    let mut w = lower.clone();
    for &c in &changes[..k] {
        w.entries[c - 1] += 1;
    }
    w
}

/// First adjacent pair of distinct changes whose alternate intermediate is
/// not dominant: `(position, node before, alternate)`.
fn zero_corner(lower: &Weight, changes: &[usize]) -> Option<(usize, Weight, Weight)> {
    for j in 1..changes.len() {
        let before = node_at(lower, changes, j - 1);
        let (c1, c2) = (changes[j - 1], changes[j]);
        if c1 != c2 {
            let alternate = before.raised(c2 - 1);
            if !alternate.is_dominant() {
                return Some((j - 1, before, alternate));
            }
        }
    }
    None
}

/// The rerouting that exposes a vanishing twistor square between
/// `lower ≼ upper`: through `λ_- → λ_0 → λ_+`, raising coordinate `i` and
/// then `i+1` from a weight whose entries `i, i+1` agree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reroute {
    /// 1-based coordinate `i`.
    pub index: usize,
    pub lambda_minus: Weight,
    pub lambda_zero: Weight,
    pub lambda_plus: Weight,
    /// `λ_- + ε_{i+1}`, never dominant.
    pub alternate: Weight,
    pub path: Path,
}

/// Finds `i` with `lower_i < upper_{i+1}` and `upper_{i+1} > upper_{i+2}`
/// (`upper_{n+1} := 0`) and builds the rerouted path; `None` if no such `i`.
pub fn find_vanishing_reroute(lower: &Weight, upper: &Weight) -> Option<Reroute> {
    let n = upper.rank();
    let u = |k: usize| if k < n { upper.entries[k] } else { 0 };
    let i = (0..n.saturating_sub(1)).find(|&i| lower.entries[i] < u(i + 1) && u(i + 1) > u(i + 2))?;
    let mut minus = upper.clone();
    minus.entries[i] = u(i + 1) - 1;
    minus.entries[i + 1] = u(i + 1) - 1;
    let zero = minus.raised(i);
    let plus = zero.raised(i + 1);
    let alternate = minus.raised(i + 1);
    let first = canonical_path(lower, &minus).ok()?;
    let last = canonical_path(&plus, upper).ok()?;
    let mut changes = first.changes.clone();
    changes.push(i + 1);
    changes.push(i + 2);
    changes.extend(last.changes.iter().copied());
    let path = Path::from_changes(lower, &changes).ok()?;
    Some(Reroute { index: i + 1, lambda_minus: minus, lambda_zero: zero, lambda_plus: plus, alternate, path })
}

enum RunOutcome {
    Zero,
    Canonical { sign: i64, lower: Weight, changes: Vec<usize> },
}

/// Normalizes one monotone twistor run given as a path from `lower` upward.
fn normalize_run(lower: &Weight, changes: &[usize]) -> RunOutcome {
    let mut ch = changes.to_vec();
    if zero_corner(lower, &ch).is_some() {
        return RunOutcome::Zero;
    }
    let mut sign = 1;
    let mut swapped = true;
    while swapped {
        swapped = false;
        for j in 1..ch.len() {
            if ch[j] < ch[j - 1] {
                let before = node_at(lower, &ch, j - 1);
                if !before.raised(ch[j] - 1).is_dominant() {
                    return RunOutcome::Zero;
                }
                ch.swap(j - 1, j);
                sign = -sign;
                swapped = true;
            }
        }
    }
    let upper = node_at(lower, &ch, ch.len());
    if find_vanishing_reroute(lower, &upper).is_some() {
        return RunOutcome::Zero;
    }
    RunOutcome::Canonical { sign, lower: lower.clone(), changes: ch }
}

fn push_run(out: &mut Vec<Symbol>, lower: &Weight, changes: &[usize], up: bool) {
    let nodes: Vec<Weight> = (0..=changes.len()).map(|k| node_at(lower, changes, k)).collect();
    if up {
        for k in (0..changes.len()).rev() {
            out.push(Symbol::twistor(&nodes[k + 1], &nodes[k]));
        }
    } else {
        for k in 0..changes.len() {
            out.push(Symbol::twistor(&nodes[k], &nodes[k + 1]));
        }
    }
}

/// Normal form of a single word: `±word'` or zero.
pub fn normal_form_word(word: &OperatorWord) -> Option<(i64, OperatorWord)> {
    if word.symbols.iter().any(|s| !s.is_dominant()) || !word.source.is_dominant() || !word.target.is_dominant() {
        return None;
    }
    let mut sign = 1i64;
    let mut laplace = 0usize;
    let mut hsd = 0usize;
    let mut twistors: Vec<Symbol> = Vec::new();
    for s in &word.symbols {
        match s {
            Symbol::Laplace { .. } => laplace += 1,
            // Moving left past every twistor already seen flips the sign once per twistor.
            Symbol::Hsd { .. } => {
                hsd += 1;
                if twistors.len() % 2 == 1 {
                    sign = -sign;
                }
            }
            Symbol::Twistor { .. } => twistors.push(s.clone()),
        }
    }
    let mut out: Vec<Symbol> = Vec::with_capacity(word.len());
    out.extend(std::iter::repeat_n(Symbol::Laplace { at: word.target.clone() }, laplace));
    out.extend(std::iter::repeat_n(Symbol::Hsd { at: word.target.clone() }, hsd));

    // Split into maximal monotone runs.
    let mut k = 0;
    while k < twistors.len() {
        let (_, dir) = twistors[k].step().expect("twistor symbols are unit steps");
        let mut end = k + 1;
        while end < twistors.len() && twistors[end].step().expect("unit step").1 == dir {
            end += 1;
        }
        let run = &twistors[k..end];
        let (lower, changes) = if dir > 0 {
            let lower = run.last().expect("nonempty").source().integral();
            let changes = run.iter().rev().map(|s| s.step().expect("unit step").0 + 1).collect::<Vec<_>>();
            (lower, changes)
        } else {
            let lower = run[0].target().integral();
            let changes = run.iter().map(|s| s.step().expect("unit step").0 + 1).collect::<Vec<_>>();
            (lower, changes)
        };
        match normalize_run(&lower, &changes) {
            RunOutcome::Zero => return None,
            RunOutcome::Canonical { sign: s, lower, changes } => {
                sign *= s;
                push_run(&mut out, &lower, &changes, dir > 0);
            }
        }
        k = end;
    }
    Some((sign, OperatorWord { symbols: out, source: word.source.clone(), target: word.target.clone() }))
}

/// Confluent normal form of an expression.
pub fn normal_form(e: &OperatorExpr) -> OperatorExpr {
    let mut out = OperatorExpr::zero(&e.source, &e.target);
    for (w, c) in &e.terms {
        if let Some((sign, nw)) = normal_form_word(w) {
            out.add_term(nw, c * qi(sign));
        }
    }
    out
}

/// Identity (1) for `V_κ ⊗ S` with `κ'` on top: every neighbour is `κ - ε_i`.
/// Returns `-Δ_κ - Σ_i T_{κ←κ-ε_i}T_{κ-ε_i←κ}` as the value of `R_κ²`.
pub fn hsd_square(kappa: &Weight) -> OperatorExpr {
    let k = kappa.integral();
    let at = k.shifted();
    let mut out = OperatorExpr::zero(&at, &at);
    let lap = OperatorWord::from_symbols(vec![Symbol::laplace(&k)]).expect("single symbol");
    out.add_term(lap, -Q::one());
    for i in 0..k.rank() {
        let below = k.lowered(i);
        if below.is_dominant() {
            let w = OperatorWord::from_symbols(vec![Symbol::twistor(&k, &below), Symbol::twistor(&below, &k)])
                .expect("composable");
            out.add_term(w, -Q::one());
        }
    }
    out
}

/// Replaces the first adjacent `R_κ R_κ` (Laplace symbols ignored, being
/// central) in every word via [`hsd_square`].
pub fn eliminate_hsd_square(e: &OperatorExpr) -> Result<OperatorExpr> {
    let mut out = OperatorExpr::zero(&e.source, &e.target);
    for (w, c) in &e.terms {
        let laplace = w.symbols.iter().filter(|s| matches!(s, Symbol::Laplace { .. })).count();
        let rest: Vec<Symbol> = w.symbols.iter().filter(|s| !matches!(s, Symbol::Laplace { .. })).cloned().collect();
        let pos = rest.windows(2).position(|p| matches!((&p[0], &p[1]), (Symbol::Hsd { .. }, Symbol::Hsd { .. })));
        let Some(pos) = pos else {
            out.add_term(w.clone(), c.clone());
            continue;
        };
        let kappa = rest[pos].target().clone();
        let lap_prefix: Vec<Symbol> = std::iter::repeat_n(Symbol::Laplace { at: w.target.clone() }, laplace).collect();
        for (mid, mc) in hsd_square(&kappa).terms() {
            let mut symbols = lap_prefix.clone();
            symbols.extend(rest[..pos].iter().cloned());
            symbols.extend(mid.symbols.iter().cloned());
            symbols.extend(rest[pos + 2..].iter().cloned());
            let word = OperatorWord { symbols, source: w.source.clone(), target: w.target.clone() };
            out.add_term(word, c * mc);
        }
    }
    Ok(out)
}

/// Moves the outermost `R` symbols of every word inwards with identity (2):
/// the left one through the leading raising twistors (`R_κT_{κι} → -T_{κι}R_ι`),
/// the right one through the trailing lowering twistors, so both meet at the
/// bottom weight of a `P Δ^j P` word.
pub fn push_hsd_inward(e: &OperatorExpr) -> OperatorExpr {
    let mut out = OperatorExpr::zero(&e.source, &e.target);
    for (w, c) in &e.terms {
        let mut symbols = w.symbols.clone();
        let mut sign = 1i64;
        if matches!(symbols.first(), Some(Symbol::Hsd { .. })) {
            let mut k = 0;
            while k + 1 < symbols.len() && symbols[k + 1].step().is_some_and(|(_, d)| d > 0) {
                let t = symbols[k + 1].clone();
                symbols[k] = t;
                symbols[k + 1] = Symbol::Hsd { at: symbols[k].source().clone() };
                sign = -sign;
                k += 1;
            }
        }
        if matches!(symbols.last(), Some(Symbol::Hsd { .. })) && symbols.len() > 1 {
            let mut k = symbols.len() - 1;
            while k >= 1 && symbols[k - 1].step().is_some_and(|(_, d)| d < 0) {
                let t = symbols[k - 1].clone();
                symbols[k] = t;
                symbols[k - 1] = Symbol::Hsd { at: symbols[k].target().clone() };
                sign = -sign;
                k -= 1;
            }
        }
        let word = OperatorWord { symbols, source: w.source.clone(), target: w.target.clone() };
        out.add_term(word, c * qi(sign));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PathNormalForm {
    pub changes: Vec<usize>,
    pub direction: Direction,
    pub normal_form: OperatorExpr,
}

#[derive(Clone, Debug, Serialize)]
pub struct PathIndependenceReport {
    pub lower: Weight,
    pub upper: Weight,
    pub path_count: usize,
    pub truncated: bool,
    pub forward: Vec<PathNormalForm>,
    pub reverse: Vec<PathNormalForm>,
    pub forward_pass: bool,
    pub reverse_pass: bool,
    pub pass: bool,
}

/// Normal forms of every path operator between `ν ≼ μ`, in both
/// orientations; passes when each orientation yields one normal form.
pub fn verify_path_independence(nu: &Weight, mu: &Weight, cap: usize) -> Result<PathIndependenceReport> {
    let enumeration = crate::weights::enumerate_paths(nu, mu, cap)?;
    let mut forward = Vec::new();
    let mut reverse = Vec::new();
    for path in &enumeration.paths {
        forward.push(PathNormalForm {
            changes: path.changes.clone(),
            direction: Direction::Forward,
            normal_form: normal_form(&path_operator(path)?),
        });
        let rev = path.reversed();
        reverse.push(PathNormalForm {
            changes: rev.changes.clone(),
            direction: Direction::Reverse,
            normal_form: normal_form(&path_operator(&rev)?),
        });
    }
    let all_equal = |v: &[PathNormalForm]| v.windows(2).all(|p| p[0].normal_form == p[1].normal_form);
    let forward_pass = all_equal(&forward);
    let reverse_pass = all_equal(&reverse);
    Ok(PathIndependenceReport {
        lower: nu.clone(),
        upper: mu.clone(),
        path_count: enumeration.paths.len(),
        truncated: enumeration.truncated,
        forward,
        reverse,
        forward_pass,
        reverse_pass,
        pass: forward_pass && reverse_pass && !enumeration.truncated,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VanishingTrace {
    pub mu: Weight,
    pub lambda: Weight,
    pub reroute: Reroute,
    /// Sign relating the rerouted operator to the canonical one via swaps.
    pub reroute_to_canonical_sign: i64,
    pub swaps: usize,
    /// Normal form of the square `T_{λ+←λ0}T_{λ0←λ-}`, which must vanish.
    pub corner_vanishes: bool,
    pub forward_zero: bool,
    pub reverse_zero: bool,
}

/// Shows `P_{μ←λ}` and `P_{λ←μ}` vanish for `λ ≼ μ` outside the box by routing
/// through a square whose alternate corner is not dominant.
pub fn vanish_outside_box(mu: &Weight, lambda: &Weight) -> Result<VanishingTrace> {
    if !bruhat_leq(lambda, mu)? {
        return Err(Error::NotBruhatOrdered { lower: lambda.clone(), upper: mu.clone() });
    }
    weight_box(mu)?;
    if in_box(mu, lambda) {
        return Err(Error::InsideBox { mu: mu.clone(), lambda: lambda.clone() });
    }
    let reroute = find_vanishing_reroute(lambda, mu)
        .ok_or_else(|| Error::InvalidArgument(format!("no vanishing square between {lambda} and {mu}")))?;

    // Sort the rerouted change sequence into canonical order, counting swaps.
    let mut ch = reroute.path.changes.clone();
    let mut swaps = 0;
    let mut swapped = true;
    while swapped {
        swapped = false;
        for j in 1..ch.len() {
            if ch[j] < ch[j - 1] {
                ch.swap(j - 1, j);
                swaps += 1;
                swapped = true;
            }
        }
    }
    debug_assert_eq!(ch, canonical_path(lambda, mu)?.changes);

    let corner = OperatorWord::from_symbols(vec![
        Symbol::twistor(&reroute.lambda_plus, &reroute.lambda_zero),
        Symbol::twistor(&reroute.lambda_zero, &reroute.lambda_minus),
    ])?;
    let corner_vanishes = normal_form_word(&corner).is_none();
    let forward_zero = normal_form(&canonical_path_operator(lambda, mu, Direction::Forward)?).is_zero();
    let reverse_zero = normal_form(&canonical_path_operator(lambda, mu, Direction::Reverse)?).is_zero();
    Ok(VanishingTrace {
        mu: mu.clone(),
        lambda: lambda.clone(),
        reroute,
        reroute_to_canonical_sign: if swaps % 2 == 0 { 1 } else { -1 },
        swaps,
        corner_vanishes,
        forward_zero,
        reverse_zero,
    })
}

/// Certificate for `Δ_μ^p = R_μ [Σ c(μ,λ) P_{μ←λ} Δ_λ^{p-|μ,λ|-1} P_{λ←μ}] R_μ + residual`.
#[derive(Clone, Debug)]
pub struct FactorizationCertificate {
    pub mu: Weight,
    pub power: usize,
    pub coefficients: BTreeMap<Weight, Q>,
    /// Unsandwiched coefficients per expansion depth: the constants picked up
    /// while expanding, before the final regrouping.
    pub layers: Vec<BTreeMap<Weight, Q>>,
    pub middle: OperatorExpr,
    pub residual: OperatorExpr,
}

impl FactorizationCertificate {
    /// `R_μ ∘ middle ∘ R_μ`.
    pub fn sandwiched(&self) -> Result<OperatorExpr> {
        let r = make_symbol(Symbol::hsd(&self.mu))?;
        r.compose(&self.middle)?.compose(&r)
    }

    /// `R_μ ∘ middle ∘ R_μ + residual`.
    pub fn assembled(&self) -> Result<OperatorExpr> {
        self.sandwiched()?.add(&self.residual)
    }

    pub fn support(&self) -> Vec<Weight> {
        self.coefficients.keys().cloned().collect()
    }
}

impl Serialize for FactorizationCertificate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("FactorizationCertificate", 6)?;
        s.serialize_field("mu", &self.mu)?;
        s.serialize_field("power", &self.power)?;
        s.serialize_field("coefficients", &CoefficientTable(&self.coefficients))?;
        let layers: Vec<CoefficientTable<'_>> = self.layers.iter().map(CoefficientTable).collect();
        s.serialize_field("layers", &layers)?;
        s.serialize_field("middle", &self.middle)?;
        s.serialize_field("residual", &self.residual)?;
        s.end()
    }
}

fn laplace_power(at: &Weight, exponent: usize) -> OperatorExpr {
    if exponent == 0 {
        return OperatorExpr::identity(&at.shifted());
    }
    let word = OperatorWord::from_symbols(vec![Symbol::laplace(at); exponent]).expect("composable");
    OperatorExpr::from_word(word, Q::one())
}

/// Coefficient of the single word in `normal_form(e)` relative to the normal
/// form of `reference`; `None` if `e` vanishes.
fn ratio_of_normal_forms(e: &OperatorExpr, reference: &OperatorExpr) -> Result<Option<Q>> {
    let ne = normal_form(e);
    if ne.is_zero() {
        return Ok(None);
    }
    let nr = normal_form(reference);
    let ((we, ce), (wr, cr)) = match (ne.as_monomial(), nr.as_monomial()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidArgument("expected monomial normal forms".into())),
    };
    if we != wr {
        return Err(Error::InvalidArgument(format!("normal forms differ: {we} vs {wr}")));
    }
    Ok(Some(ce / cr))
}

/// Expands `Δ_μ^p` by identity (1) at the bottom of every open branch, moving
/// HSD symbols out through path operators with identity (2) and normalizing
/// twistor chains with identity (3).
pub fn expand_laplace_power(mu: &Weight, power: usize) -> Result<FactorizationCertificate> {
    if mu.spin_shift {
        return Err(Error::NotIntegral(mu.clone()));
    }
    if !mu.is_dominant() {
        return Err(Error::NotDominant(mu.clone()));
    }
    if power == 0 {
        return Err(Error::InvalidArgument("power must be positive".into()));
    }
    let top = mu.shifted();
    let r_mu = make_symbol(Symbol::hsd(mu))?;
    let mut coefficients: BTreeMap<Weight, Q> = BTreeMap::new();
    let mut layers: Vec<BTreeMap<Weight, Q>> = Vec::new();
    let mut middle = OperatorExpr::zero(&top, &top);
    let mut current: BTreeMap<Weight, Q> = BTreeMap::from([(mu.clone(), Q::one())]);

    for depth in 0..power {
        layers.push(current.clone());
        let remaining = power - depth; // Laplace power still attached to this layer
        let mut next: BTreeMap<Weight, Q> = BTreeMap::new();
        for (lambda, u) in &current {
            let up = canonical_path_operator(lambda, mu, Direction::Forward)?;
            let down = canonical_path_operator(lambda, mu, Direction::Reverse)?;

            // −R_λ² term, then move both R_λ out to R_μ.
            let r_lambda = make_symbol(Symbol::hsd(lambda))?;
            let inner = r_lambda.compose(&laplace_power(lambda, remaining - 1))?.compose(&r_lambda)?;
            let open = up.compose(&inner)?.compose(&down)?;
            let core = up.compose(&laplace_power(lambda, remaining - 1))?.compose(&down)?;
            let closed = r_mu.compose(&core)?.compose(&r_mu)?;
            let sign = ratio_of_normal_forms(&open, &closed)?
                .ok_or_else(|| Error::InvalidArgument(format!("path operator to {lambda} vanished")))?;
            let c = -(u * &sign);
            *coefficients.entry(lambda.clone()).or_insert_with(Q::zero) += &c;
            middle = middle.add(&core.scale(&c))?;

            // −Σ T T terms open the next layer.
            for i in 0..lambda.rank() {
                let below = lambda.lowered(i);
                if !below.is_dominant() {
                    continue;
                }
                let left = up.compose(&make_symbol(Symbol::twistor(lambda, &below))?)?;
                let right = make_symbol(Symbol::twistor(&below, lambda))?.compose(&down)?;
                let p_up = canonical_path_operator(&below, mu, Direction::Forward)?;
                let p_down = canonical_path_operator(&below, mu, Direction::Reverse)?;
                let (Some(kl), Some(kr)) = (ratio_of_normal_forms(&left, &p_up)?, ratio_of_normal_forms(&right, &p_down)?)
                else {
                    continue;
                };
                *next.entry(below).or_insert_with(Q::zero) -= u * kl * kr;
            }
        }
        next.retain(|_, v| !v.is_zero());
        current = next;
    }
    coefficients.retain(|_, v| !v.is_zero());

    let mut residual = OperatorExpr::zero(&top, &top);
    for (lambda, u) in &current {
        let up = canonical_path_operator(lambda, mu, Direction::Forward)?;
        let down = canonical_path_operator(lambda, mu, Direction::Reverse)?;
        residual = residual.add(&up.compose(&down)?.scale(u))?;
    }
    if !current.is_empty() {
        layers.push(current);
    }
    Ok(FactorizationCertificate { mu: mu.clone(), power, coefficients, layers, middle, residual })
}

/// Substitutes the certificate back: pushes both `R_μ` inward, replaces the
/// resulting `R_λ²` by identity (1) and normalizes.
pub fn reexpand_certificate(cert: &FactorizationCertificate) -> Result<OperatorExpr> {
    let pushed = push_hsd_inward(&cert.sandwiched()?);
    let expanded = eliminate_hsd_square(&pushed)?;
    Ok(normal_form(&expanded.add(&cert.residual)?))
}

/// Whether re-expansion reproduces `Δ_μ^p` exactly.
pub fn certificate_is_sound(cert: &FactorizationCertificate) -> Result<bool> {
    let target = normal_form(&laplace_power(&cert.mu, cert.power));
    Ok(reexpand_certificate(cert)? == target)
}

/// Every sandwiched term starts and ends with `R_μ`, and moving both `R_μ`
/// inward agrees with `P R_λ Δ R_λ P` in normal form.
pub fn sandwich_holds(cert: &FactorizationCertificate) -> Result<bool> {
    let r_top = Symbol::hsd(&cert.mu);
    let sandwiched = cert.sandwiched()?;
    let shape_ok = sandwiched
        .terms()
        .all(|(w, _)| w.symbols.first() == Some(&r_top) && w.symbols.last() == Some(&r_top));
    let moved = push_hsd_inward(&sandwiched);
    Ok(shape_ok && normal_form(&moved) == normal_form(&sandwiched))
}

/// `(-1)^(|μ,λ|+1)` times the number of dominant paths from λ to μ: the
/// coefficients this module's conventions produce.
pub fn predicted_coefficient(mu: &Weight, lambda: &Weight) -> Result<Q> {
    let d = manhattan_distance(mu, lambda)?;
    let count = crate::weights::count_paths(lambda, mu)?;
    let value = Q::from_integer(num_bigint::BigInt::from(count));
    Ok(if d % 2 == 0 { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{enumerate_paths, Weight};
    use num_traits::Signed;

    fn w(e: &[i64]) -> Weight {
        Weight::new(e.to_vec())
    }

    fn tw(t: &[i64], s: &[i64]) -> Symbol {
        Symbol::twistor(&w(t), &w(s))
    }

    fn word(symbols: Vec<Symbol>) -> OperatorExpr {
        OperatorExpr::from_word(OperatorWord::from_symbols(symbols).unwrap(), Q::one())
    }

    #[test]
    fn make_symbol_cases() {
        assert_eq!(make_symbol(tw(&[1, 0], &[0, 0])).unwrap().len(), 1);
        assert!(make_symbol(tw(&[1, 2], &[1, 1])).unwrap().is_zero());
        assert_eq!(make_symbol(Symbol::hsd(&w(&[3]))).unwrap().len(), 1);
        assert!(matches!(make_symbol(tw(&[2, 0], &[0, 0])), Err(Error::InvalidTwistor { .. })));
    }

    #[test]
    fn normalization_signs() {
        assert_eq!(normalization_sign(&w(&[0, 0]), 1).unwrap(), 1);
        assert_eq!(normalization_sign(&w(&[1, 0]), 2).unwrap(), 1);
        assert_eq!(normalization_sign(&w(&[1, 1]), 1).unwrap(), -1);
        assert!(matches!(normalization_sign(&w(&[1, 1]), 2), Err(Error::NotDominant(_))));
    }

    /// Oracle: under raw anticommuting squares, normalized generators commute
    /// on every dominant square of rank 2 and 3 with entries ≤ 3.
    #[test]
    fn normalized_squares_commute() {
        for rank in 2..=3 {
            let mut stack = vec![vec![]];
            let mut bases = Vec::new();
            while let Some(v) = stack.pop() {
                if v.len() == rank {
                    bases.push(Weight::new(v));
                    continue;
                }
                for e in 0..=3 {
                    let mut nv: Vec<i64> = v.clone();
                    nv.push(e);
                    stack.push(nv);
                }
            }
            for base in bases.into_iter().filter(Weight::is_dominant) {
                for a in 0..rank {
                    for b in a + 1..rank {
                        let theta = base.raised(a);
                        let omega = base.raised(b);
                        let top = theta.raised(b);
                        if !(theta.is_dominant() && omega.is_dominant() && top.is_dominant()) {
                            continue;
                        }
                        let s1 = normalization_sign(&base, a + 1).unwrap() * normalization_sign(&theta, b + 1).unwrap();
                        let s2 = normalization_sign(&base, b + 1).unwrap() * normalization_sign(&omega, a + 1).unwrap();
                        // raw relation: T T (via θ) = -T T (via ω)
                        assert_eq!(s1, -s2, "square at {base} in directions {a},{b}");
                    }
                }
            }
        }
    }

    #[test]
    fn identity_three_sorts_chains() {
        // changes (2,1) starting at (1,0): (1,0)->(1,1)->(2,1)
        let e = word(vec![tw(&[2, 1], &[1, 1]), tw(&[1, 1], &[1, 0])]);
        let nf = normal_form(&e);
        let expected = OperatorWord::from_symbols(vec![tw(&[2, 1], &[2, 0]), tw(&[2, 0], &[1, 0])]).unwrap();
        assert_eq!(nf.coefficient(&expected), qi(-1));
        // with normalization: P along changes (2,1) has sign s((1,0),2) s((1,1),1) = 1·(-1)
        let p = Path::from_changes(&w(&[1, 0]), &[2, 1]).unwrap();
        let canonical = Path::from_changes(&w(&[1, 0]), &[1, 2]).unwrap();
        assert_eq!(normal_form(&path_operator(&p).unwrap()), normal_form(&path_operator(&canonical).unwrap()));
    }

    #[test]
    fn zero_convention_kills_squares() {
        let e = word(vec![tw(&[2, 2], &[2, 1]), tw(&[2, 1], &[1, 1])]);
        assert!(normal_form(&e).is_zero());
    }

    #[test]
    fn identity_two_moves_hsd_left() {
        let e = word(vec![Symbol::hsd(&w(&[1])), tw(&[1], &[0])]);
        let f = word(vec![tw(&[1], &[0]), Symbol::hsd(&w(&[0]))]);
        assert_eq!(normal_form(&e), normal_form(&f).scale(&qi(-1)));
    }

    #[test]
    fn laplace_is_central() {
        let e = word(vec![tw(&[1], &[0]), Symbol::laplace(&w(&[0]))]);
        let f = word(vec![Symbol::laplace(&w(&[1])), tw(&[1], &[0])]);
        assert_eq!(normal_form(&e), normal_form(&f));
    }

    #[test]
    fn empty_path_is_identity() {
        let p = canonical_path(&w(&[1, 0]), &w(&[1, 0])).unwrap();
        assert_eq!(path_operator(&p).unwrap(), OperatorExpr::identity(&Weight::spin(vec![1, 0])));
    }

    #[test]
    fn canonical_path_operator_sign() {
        let p = canonical_path_operator(&w(&[0, 0]), &w(&[2, 1]), Direction::Forward).unwrap();
        let (word, c) = p.as_monomial().unwrap();
        assert_eq!(word.symbols, vec![tw(&[2, 1], &[2, 0]), tw(&[2, 0], &[1, 0]), tw(&[1, 0], &[0, 0])]);
        assert_eq!(c.abs(), Q::one());
    }

    #[test]
    fn path_independence_small_cases() {
        let r = verify_path_independence(&w(&[1, 0]), &w(&[2, 1]), 100).unwrap();
        assert!(r.pass);
        assert_eq!(r.path_count, 2);
        let r = verify_path_independence(&w(&[0]), &w(&[3]), 100).unwrap();
        assert!(r.pass);
        assert_eq!(r.path_count, 1);
        let r = verify_path_independence(&w(&[0, 0]), &w(&[2, 2]), 100).unwrap();
        assert!(r.pass);
        for p in enumerate_paths(&w(&[0, 0]), &w(&[2, 2]), 100).unwrap().paths {
            assert!(p.nodes.iter().all(Weight::is_dominant));
        }
    }

    #[test]
    fn vanishing_traces() {
        let t = vanish_outside_box(&w(&[2, 2]), &w(&[1, 1])).unwrap();
        assert!(t.corner_vanishes && t.forward_zero && t.reverse_zero);
        assert_eq!(t.reroute.alternate, w(&[1, 2]));
        let t = vanish_outside_box(&w(&[3, 2]), &w(&[1, 0])).unwrap();
        assert!(t.corner_vanishes && t.forward_zero && t.reverse_zero);
        assert!(matches!(vanish_outside_box(&w(&[2, 2, 0]), &w(&[2, 1, 0])), Err(Error::InsideBox { .. })));
    }

    #[test]
    fn dirac_factorizes_laplace() {
        let cert = expand_laplace_power(&w(&[0, 0]), 1).unwrap();
        assert_eq!(cert.coefficients, BTreeMap::from([(w(&[0, 0]), qi(-1))]));
        assert!(cert.residual.is_zero());
        assert!(certificate_is_sound(&cert).unwrap());
    }

    #[test]
    fn rarita_schwinger_square() {
        let mu = w(&[1, 0]);
        let cert = expand_laplace_power(&mu, 2).unwrap();
        assert_eq!(cert.coefficients, BTreeMap::from([(w(&[0, 0]), qi(1)), (w(&[1, 0]), qi(-1))]));
        assert!(cert.residual.is_zero());
        assert!(certificate_is_sound(&cert).unwrap());
        assert!(sandwich_holds(&cert).unwrap());
        let expected_middle = word(vec![Symbol::laplace(&mu)])
            .scale(&qi(-1))
            .add(&word(vec![tw(&[1, 0], &[0, 0]), tw(&[0, 0], &[1, 0])]))
            .unwrap();
        assert_eq!(normal_form(&cert.middle), normal_form(&expected_middle));
    }

    #[test]
    fn residual_when_power_not_large_enough() {
        let cert = expand_laplace_power(&w(&[1, 0]), 1).unwrap();
        assert!(!cert.residual.is_zero());
        assert!(certificate_is_sound(&cert).unwrap());
    }

    #[test]
    fn coefficients_count_paths() {
        for mu in [w(&[2, 1]), w(&[2, 2, 1]), w(&[3])] {
            let p = mu.first() as usize + 1;
            let cert = expand_laplace_power(&mu, p).unwrap();
            for (lambda, c) in &cert.coefficients {
                assert_eq!(c, &predicted_coefficient(&mu, lambda).unwrap(), "{mu} {lambda}");
            }
            assert_eq!(cert.support(), {
                let mut b = weight_box(&mu).unwrap();
                b.sort();
                b
            });
        }
    }
}
