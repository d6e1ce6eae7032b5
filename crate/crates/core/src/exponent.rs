//! Exact van der Corput exponent-pair calculus.
//!
//! Pairs are generated from the trivial pair `(0, 1)` by the A-process
//! `(κ, λ) ↦ (κ/(2κ+2), 1/2 + λ/(2κ+2))` and the B-process
//! `(κ, λ) ↦ (λ − 1/2, κ + 1/2)`. A word such as `A^3BABABABABABAB` is read as
//! operator composition, so the rightmost letter acts on `(0, 1)` first.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Exponents fixed by the Type I / Type II analysis, all as powers of `X`.
pub mod constants {
    use crate::rational::Rational;

    /// `H = X^{38687/2666036}`, the truncation of the sawtooth expansion.
    pub fn h_exponent() -> Rational {
        Rational::new(38687, 2666036)
    }

    /// Largest Type I length `M ≪ X^{1371705/2666036}`.
    pub fn type_i_m_exponent() -> Rational {
        Rational::new(1371705, 2666036)
    }

    /// Target saving for every bilinear piece.
    pub fn theta() -> Rational {
        Rational::new(2627349, 2666036)
    }

    /// Type II differencing length `Q = X^{38687/1333018} (log X)^{-1}`.
    pub fn type_ii_q_exponent() -> Rational {
        Rational::new(38687, 1333018)
    }

    /// Lower end of the dyadic range, `P^{9449/10000} ≪ X ≪ P`.
    pub fn x_lower_exponent() -> Rational {
        Rational::new(9449, 10000)
    }

    /// Upper limit of the admissible range of `c`.
    pub fn c_max() -> Rational {
        Rational::new(4109054, 1999527)
    }

    /// Parameters of the Heath-Brown decomposition, `3 < U < V < Z < X`.
    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct HeathBrownParams {
        pub u: Rational,
        pub v: Rational,
        pub z: Rational,
    }

    pub fn heath_brown() -> HeathBrownParams {
        HeathBrownParams {
            u: Rational::new(38687, 1333018),
            v: Rational::new(11958325, 23994324),
            z: Rational::new(1294331, 2666036),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ExponentPair {
    pub kappa: Rational,
    pub lambda: Rational,
}

impl ExponentPair {
    pub fn new(kappa: Rational, lambda: Rational) -> ExponentPair {
        ExponentPair { kappa, lambda }
    }

    pub fn trivial() -> ExponentPair {
        ExponentPair::new(Rational::zero(), Rational::one())
    }

    /// `0 ≤ κ ≤ 1/2 ≤ λ ≤ 1` and `κ + λ ≤ 1`.
    pub fn is_admissible(&self) -> bool {
        let half = Rational::half();
        self.kappa >= Rational::zero()
            && self.kappa <= half
            && self.lambda >= half
            && self.lambda <= Rational::one()
            && &self.kappa + &self.lambda <= Rational::one()
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.kappa, self.lambda)
    }
}

impl fmt::Debug for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn apply_a(p: &ExponentPair) -> ExponentPair {
    let denom = &p.kappa * Rational::integer(2) + Rational::integer(2);
    ExponentPair {
        kappa: &p.kappa / &denom,
        lambda: Rational::half() + &p.lambda / &denom,
    }
}

pub fn apply_b(p: &ExponentPair) -> ExponentPair {
    ExponentPair {
        kappa: &p.lambda - Rational::half(),
        lambda: &p.kappa + Rational::half(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Process {
    A,
    B,
}

impl Process {
    pub fn apply(self, p: &ExponentPair) -> ExponentPair {
        match self {
            Process::A => apply_a(p),
            Process::B => apply_b(p),
        }
    }

    fn letter(self) -> char {
        match self {
            Process::A => 'A',
            Process::B => 'B',
        }
    }
}

/// A word over `{A, B}`, stored left to right as written.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcessWord {
    ops: Vec<Process>,
}

impl ProcessWord {
    pub fn new(ops: Vec<Process>) -> ProcessWord {
        ProcessWord { ops }
    }

    pub fn empty() -> ProcessWord {
        ProcessWord::default()
    }

    pub fn ops(&self) -> &[Process] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `self` followed by `other`, i.e. `self ∘ other`.
    pub fn concat(&self, other: &ProcessWord) -> ProcessWord {
        let mut ops = self.ops.clone();
        ops.extend_from_slice(&other.ops);
        ProcessWord { ops }
    }

    fn prepend(&self, op: Process) -> ProcessWord {
        let mut ops = Vec::with_capacity(self.ops.len() + 1);
        ops.push(op);
        ops.extend_from_slice(&self.ops);
        ProcessWord { ops }
    }

    /// Run-length form, e.g. `A^3BABABABABABAB`.
    pub fn compact(&self) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < self.ops.len() {
            let op = self.ops[i];
            let run = self.ops[i..].iter().take_while(|&&o| o == op).count();
            out.push(op.letter());
            if run > 1 {
                out.push_str(&format!("^{run}"));
            }
            i += run;
        }
        out
    }

    /// Applies the word to `start`, innermost (rightmost) operator first.
    pub fn apply_to(&self, start: &ExponentPair) -> ExponentPair {
        self.ops
            .iter()
            .rev()
            .fold(start.clone(), |p, op| op.apply(&p))
    }
}

impl fmt::Display for ProcessWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            write!(f, "{}", op.letter())?;
        }
        Ok(())
    }
}

impl fmt::Debug for ProcessWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProcessWord({self})")
    }
}

impl Serialize for ProcessWord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for ProcessWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<ProcessWord> {
        parse_word(s)
    }
}

/// Parses `A`/`B` tokens with optional `^k` repetition and an optional
/// trailing `(0,1)`. Whitespace is ignored.
pub fn parse_word(s: &str) -> Result<ProcessWord> {
    let chars: Vec<(usize, char)> = s.char_indices().filter(|(_, ch)| !ch.is_whitespace()).collect();
    let mut ops = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, ch) = chars[i];
        let op = match ch {
            'A' => Process::A,
            'B' => Process::B,
            '(' => {
                let rest: String = chars[i..].iter().map(|&(_, ch)| ch).collect();
                if rest == "(0,1)" {
                    break;
                }
                return Err(Error::Parse {
                    position: pos,
                    message: format!("expected trailing \"(0,1)\", found {rest:?}"),
                });
            }
            other => {
                return Err(Error::Parse {
                    position: pos,
                    message: format!("unexpected character {other:?}"),
                })
            }
        };
        i += 1;
        let mut count = 1usize;
        if i < chars.len() && chars[i].1 == '^' {
            let caret = chars[i].0;
            i += 1;
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err(Error::Parse {
                    position: caret,
                    message: "expected digits after '^'".into(),
                });
            }
            let digits: String = chars[start..i].iter().map(|&(_, ch)| ch).collect();
            count = digits.parse().map_err(|_| Error::Parse {
                position: chars[start].0,
                message: format!("exponent {digits:?} out of range"),
            })?;
            if count > 1 << 16 {
                return Err(Error::Parse {
                    position: chars[start].0,
                    message: format!("exponent {count} too large"),
                });
            }
        }
        ops.extend(std::iter::repeat(op).take(count));
    }
    Ok(ProcessWord { ops })
}

/// Evaluates a word on the trivial pair `(0, 1)`.
pub fn eval_word(w: &ProcessWord) -> ExponentPair {
    w.apply_to(&ExponentPair::trivial())
}

/// Exponents of `H`, `M` and the target bound in a Type I estimate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeIConstraint {
    pub h0: Rational,
    pub m0: Rational,
    pub theta: Rational,
}

impl TypeIConstraint {
    /// Requires `0 < h0 < m0 < 1` and `1/2 < θ < 1`.
    pub fn new(h0: Rational, m0: Rational, theta: Rational) -> Result<TypeIConstraint> {
        let ok = h0.is_positive()
            && h0 < m0
            && m0 < Rational::one()
            && theta > Rational::half()
            && theta < Rational::one();
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "type I constraint needs 0 < h0 < m0 < 1 and 1/2 < theta < 1, got h0={h0} m0={m0} theta={theta}"
            )));
        }
        Ok(TypeIConstraint { h0, m0, theta })
    }

    /// Constraint values for five prime variables.
    pub fn standard() -> TypeIConstraint {
        TypeIConstraint {
            h0: constants::h_exponent(),
            m0: constants::type_i_m_exponent(),
            theta: constants::theta(),
        }
    }

    /// Builds a constraint without validating the ranges, for exploring
    /// degenerate settings.
    pub fn unchecked(h0: Rational, m0: Rational, theta: Rational) -> TypeIConstraint {
        TypeIConstraint { h0, m0, theta }
    }
}

/// Exponent of `X` in `H^κ X^{κc+λ−κ} M^{κ+1−λ}` with `H = X^{h0}`,
/// `M = X^{m0}`.
pub fn type_i_exponent(p: &ExponentPair, c: &Rational, cons: &TypeIConstraint) -> Rational {
    let k = &p.kappa;
    let l = &p.lambda;
    k * &cons.h0 + k * c + l - k + (k + Rational::one() - l) * &cons.m0
}

/// Solves `type_i_exponent(p, c, cons) = θ` for `c`.
pub fn max_c_type_i(p: &ExponentPair, cons: &TypeIConstraint) -> Result<Rational> {
    if p.kappa.is_zero() {
        return Err(Error::DegeneratePair);
    }
    let k = &p.kappa;
    let l = &p.lambda;
    let numer = &cons.theta - k * &cons.h0 - l + k - (k + Rational::one() - l) * &cons.m0;
    Ok(numer / k)
}

/// Type II saving `1 − q0/2` from a differencing length `Q = X^{q0}`.
pub fn type_ii_theta(q0: &Rational) -> Rational {
    Rational::one() - q0 / Rational::integer(2)
}

/// Worst-case exponent of the tail term `X^{1−c} τ^{−1}` over the dyadic
/// range `X ≥ P^{x_lower}`, with `τ = P^{1−c}` (ε dropped).
pub fn type_i_tail_exponent(c: &Rational, x_lower: &Rational) -> Result<Rational> {
    let inv = x_lower.recip()?;
    Ok((c - Rational::one()) * (inv - Rational::one()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintReport {
    pub pair: ExponentPair,
    pub word: ProcessWord,
    pub c_max: Rational,
    pub theta: Rational,
    pub binding_terms: Vec<(String, Rational)>,
}

impl ConstraintReport {
    /// Every term is at most θ and at least one equals it.
    pub fn is_consistent(&self) -> bool {
        self.c_max > 1
            && self.binding_terms.iter().all(|(_, e)| e <= &self.theta)
            && self.binding_terms.iter().any(|(_, e)| e == &self.theta)
    }
}

/// Derives the admissible range of `c` for a word: solves the Type I main
/// term for `c`, then evaluates the tail term and the Type II saving at
/// that `c`.
pub fn derive_threshold(
    word: &ProcessWord,
    cons: &TypeIConstraint,
    q0: &Rational,
    x_lower: &Rational,
) -> Result<ConstraintReport> {
    let pair = eval_word(word);
    let c_max = max_c_type_i(&pair, cons)?;
    let binding_terms = vec![
        ("type-I H^k X^(kc+l-k) M^(k+1-l)".to_string(), type_i_exponent(&pair, &c_max, cons)),
        ("type-I X^(1-c)/tau".to_string(), type_i_tail_exponent(&c_max, x_lower)?),
        ("type-II X Q^(-1/2)".to_string(), type_ii_theta(q0)),
    ];
    Ok(ConstraintReport {
        pair,
        word: word.clone(),
        c_max,
        theta: cons.theta.clone(),
        binding_terms,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub word: ProcessWord,
    pub pair: ExponentPair,
    pub value: Rational,
    /// Distinct pairs visited.
    pub visited: usize,
}

pub const MAX_SEARCH_LEN: usize = 24;

/// Breadth-first search over A/B words of length `≤ max_word_len` for the
/// word minimising `objective`.
///
/// Each distinct pair is kept once, with its shortest and then
/// lexicographically smallest word; A and B are injective, so extending
/// only those canonical words reaches every pair with its canonical word.
/// Pairs on which the objective returns `None` are skipped. Ties in the
/// objective are broken by word length, then lexicographically (`A < B`).
pub fn search_optimal_pair<F>(objective: F, max_word_len: usize) -> Result<SearchResult>
where
    F: Fn(&ExponentPair) -> Option<Rational>,
{
    if max_word_len > MAX_SEARCH_LEN {
        return Err(Error::InvalidArgument(format!(
            "max_word_len {max_word_len} exceeds {MAX_SEARCH_LEN}"
        )));
    }
    let start = ExponentPair::trivial();
    let mut seen: HashSet<ExponentPair> = HashSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![(ProcessWord::empty(), start)];
    let mut best: Option<(Rational, ProcessWord, ExponentPair)> = None;
    let consider = |word: &ProcessWord, pair: &ExponentPair, best: &mut Option<(Rational, ProcessWord, ExponentPair)>| {
        if let Some(value) = objective(pair) {
            let better = match best {
                None => true,
                Some((bv, bw, _)) => {
                    (&value, word.len(), word) < (&*bv, bw.len(), &*bw)
                }
            };
            if better {
                *best = Some((value, word.clone(), pair.clone()));
            }
        }
    };
    consider(&frontier[0].0, &frontier[0].1, &mut best);
    for _ in 0..max_word_len {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        // Frontier is sorted lexicographically; prepending A before B keeps
        // the first word reaching each new pair the smallest one.
        for op in [Process::A, Process::B] {
            for (word, pair) in &frontier {
                let q = op.apply(pair);
                assert!(q.is_admissible(), "search produced inadmissible pair {q}");
                if seen.insert(q.clone()) {
                    next.push((word.prepend(op), q));
                }
            }
        }
        next.sort_by(|a, b| a.0.cmp(&b.0));
        for (word, pair) in &next {
            consider(word, pair, &mut best);
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let visited = seen.len();
    let (value, word, pair) = best.ok_or_else(|| {
        Error::InvalidArgument("objective undefined on every visited pair".into())
    })?;
    Ok(SearchResult {
        word,
        pair,
        value,
        visited,
    })
}

/// Searches for the word maximising the Type I threshold of `c`.
pub fn search_max_c(cons: &TypeIConstraint, max_word_len: usize) -> Result<SearchResult> {
    let mut res = search_optimal_pair(|p| max_c_type_i(p, cons).ok().map(|c| -c), max_word_len)?;
    res.value = -res.value;
    Ok(res)
}
