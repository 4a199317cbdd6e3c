//! Presentations of free products of cyclic and free groups, and words in them.
//!
//! A [`Presentation`] is an ordered list of factors, each `C_q` (cyclic of
//! order `q ≥ 2`) or `F_r` (free of rank `r ≥ 1`). A [`Word`] is kept in
//! normal form: a sequence of syllables in pairwise-distinct adjacent factors,
//! cyclic exponents reduced mod `q` and nonzero, free subwords freely reduced.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// One factor of a free product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FactorSpec {
    /// Cyclic group of order `q ≥ 2`.
    Cyclic { order: u32 },
    /// Free group of rank `r ≥ 1`.
    Free { rank: u32 },
}

impl FactorSpec {
    pub fn generator_count(&self) -> usize {
        match self {
            FactorSpec::Cyclic { .. } => 1,
            FactorSpec::Free { rank } => *rank as usize,
        }
    }
}

/// A free product of cyclic and free groups with named generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    factors: Vec<FactorSpec>,
    /// Generator names, one list per factor; all names distinct.
    gen_names: Vec<Vec<String>>,
}

impl Presentation {
    /// Builds a presentation with default generator names `a, b, c, …`
    /// assigned in order: one per cyclic factor, `r` per free factor.
    pub fn new(factors: Vec<FactorSpec>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Parse("a presentation needs at least one factor".into()));
        }
        let total: usize = factors.iter().map(|f| f.generator_count()).sum();
        if total > 26 {
            return Err(Error::Parse("more than 26 generators; name them yourself".into()));
        }
        for f in &factors {
            match f {
                FactorSpec::Cyclic { order } if *order < 2 => {
                    return Err(Error::Parse(format!("cyclic factor order {order} < 2")))
                }
                FactorSpec::Free { rank } if *rank < 1 => {
                    return Err(Error::Parse("free factor of rank 0".into()))
                }
                _ => {}
            }
        }
        let mut names = Vec::new();
        let mut next = b'a';
        for f in &factors {
            let mut these = Vec::new();
            for _ in 0..f.generator_count() {
                these.push((next as char).to_string());
                next += 1;
            }
            names.push(these);
        }
        Ok(Presentation { factors, gen_names: names })
    }

    /// Parses a group spec like `C2*C3` or `C2*C2*F1`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for part in text.split('*') {
            let part = part.trim();
            let (kind, num) = part.split_at(if part.is_empty() { 0 } else { 1 });
            let n: u32 = num
                .parse()
                .map_err(|_| Error::Parse(format!("bad factor `{part}`")))?;
            match kind {
                "C" | "c" => factors.push(FactorSpec::Cyclic { order: n }),
                "F" | "f" => factors.push(FactorSpec::Free { rank: n }),
                _ => return Err(Error::Parse(format!("bad factor `{part}`"))),
            }
        }
        Presentation::new(factors)
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> FactorSpec {
        self.factors[i]
    }

    /// Order of the cyclic factor `i`; panics on free factors.
    pub fn order(&self, i: usize) -> u32 {
        match self.factors[i] {
            FactorSpec::Cyclic { order } => order,
            FactorSpec::Free { .. } => panic!("factor {i} is free"),
        }
    }

    pub fn generator_name(&self, factor: usize, generator: usize) -> &str {
        &self.gen_names[factor][generator]
    }

    /// Finds `(factor, generator-within-factor)` by name.
    pub fn lookup_generator(&self, name: &str) -> Option<(usize, usize)> {
        for (i, names) in self.gen_names.iter().enumerate() {
            if let Some(g) = names.iter().position(|n| n == name) {
                return Some((i, g));
            }
        }
        None
    }

    /// The lcm of the cyclic factor orders; 1 if the group is torsion-free.
    pub fn m(&self) -> u64 {
        let mut m: u64 = 1;
        for f in &self.factors {
            if let FactorSpec::Cyclic { order } = f {
                m = num::integer::lcm(m, *order as u64);
            }
        }
        m
    }

    pub fn to_spec_string(&self) -> String {
        self.factors
            .iter()
            .map(|f| match f {
                FactorSpec::Cyclic { order } => format!("C{order}"),
                FactorSpec::Free { rank } => format!("F{rank}"),
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// One letter of a free-factor subword: a generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub gen: u32,
    pub inverse: bool,
}

impl Letter {
    pub fn inverted(self) -> Letter {
        Letter { gen: self.gen, inverse: !self.inverse }
    }
}

/// One syllable of a word in normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Syllable {
    /// `x^exp` in a cyclic factor, `1 ≤ exp ≤ q-1`.
    Cyclic { factor: usize, exp: u32 },
    /// A nonempty freely reduced word in one free factor's generators.
    Free { factor: usize, letters: Vec<Letter> },
}

impl Syllable {
    pub fn factor(&self) -> usize {
        match self {
            Syllable::Cyclic { factor, .. } | Syllable::Free { factor, .. } => *factor,
        }
    }

    fn inverted(&self, p: &Presentation) -> Syllable {
        match self {
            Syllable::Cyclic { factor, exp } => {
                let q = p.order(*factor);
                Syllable::Cyclic { factor: *factor, exp: q - exp }
            }
            Syllable::Free { factor, letters } => Syllable::Free {
                factor: *factor,
                letters: letters.iter().rev().map(|l| l.inverted()).collect(),
            },
        }
    }

    /// In-factor product `self · rhs`; `None` if it cancels to the identity.
    fn merged(&self, rhs: &Syllable, p: &Presentation) -> Option<Syllable> {
        debug_assert_eq!(self.factor(), rhs.factor());
        match (self, rhs) {
            (Syllable::Cyclic { factor, exp: a }, Syllable::Cyclic { exp: b, .. }) => {
                let q = p.order(*factor);
                let e = (a + b) % q;
                (e != 0).then_some(Syllable::Cyclic { factor: *factor, exp: e })
            }
            (Syllable::Free { factor, letters: a }, Syllable::Free { letters: b, .. }) => {
                let mut out = a.clone();
                for &l in b {
                    if out.last() == Some(&l.inverted()) {
                        out.pop();
                    } else {
                        out.push(l);
                    }
                }
                (!out.is_empty()).then_some(Syllable::Free { factor: *factor, letters: out })
            }
            _ => unreachable!("merged called across kinds"),
        }
    }
}

/// How the canonical word of `Γ` spells a given element: one element of
/// [`ElementClass`] per word, after cyclic reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementClass {
    Trivial,
    /// Conjugate of `x^exp` inside cyclic factor `factor`.
    Torsion { factor: usize, exp: u32 },
    /// `root^power` with `root` a non-power, after cyclic reduction.
    Infinite { root: Word, power: u32 },
}

/// A word in normal form over a fixed presentation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    syllables: Vec<Syllable>,
}

impl Word {
    pub fn identity() -> Word {
        Word { syllables: Vec::new() }
    }

    /// Normalizes an arbitrary syllable sequence.
    pub fn from_syllables(raw: Vec<Syllable>, p: &Presentation) -> Word {
        let mut out: Vec<Syllable> = Vec::with_capacity(raw.len());
        for s in raw {
            push_normalized(&mut out, s, p);
        }
        Word { syllables: out }
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn mul(&self, rhs: &Word, p: &Presentation) -> Word {
        let mut out = self.syllables.clone();
        for s in rhs.syllables.iter().cloned() {
            push_normalized(&mut out, s, p);
        }
        Word { syllables: out }
    }

    pub fn inverse(&self, p: &Presentation) -> Word {
        Word {
            syllables: self.syllables.iter().rev().map(|s| s.inverted(p)).collect(),
        }
    }

    pub fn power(&self, k: i64, p: &Presentation) -> Word {
        let base = if k < 0 { self.inverse(p) } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base, p);
        }
        out
    }

    /// Cyclic reduction: returns `(w', c)` with `self = c · w' · c⁻¹`, where
    /// `w'` is cyclically reduced (including inside a single free syllable).
    pub fn cyclic_reduce(&self, p: &Presentation) -> (Word, Word) {
        let mut w = self.clone();
        let mut conj = Word::identity();
        while w.len() >= 2 && w.syllables[0].factor() == w.syllables[w.len() - 1].factor() {
            let first = w.syllables[0].clone();
            let last = w.syllables[w.len() - 1].clone();
            let middle = w.syllables[1..w.len() - 1].to_vec();
            let mut rest = middle;
            if let Some(m) = last.merged(&first, p) {
                rest.push(m);
            }
            conj = conj.mul(&Word { syllables: vec![first] }, p);
            w = Word::from_syllables(rest, p);
        }
        // A single free syllable may still be cyclically unreduced internally.
        if w.len() == 1 {
            if let Syllable::Free { factor, letters } = &w.syllables[0] {
                let factor = *factor;
                let mut letters = letters.clone();
                let mut pre = Vec::new();
                while letters.len() >= 2 && *letters.last().unwrap() == letters[0].inverted() {
                    pre.push(letters.remove(0));
                    letters.pop();
                }
                if !pre.is_empty() {
                    conj = conj.mul(
                        &Word { syllables: vec![Syllable::Free { factor, letters: pre }] },
                        p,
                    );
                    w = Word::from_syllables(
                        if letters.is_empty() {
                            vec![]
                        } else {
                            vec![Syllable::Free { factor, letters }]
                        },
                        p,
                    );
                }
            }
        }
        (w, conj)
    }

    /// Classifies the element: trivial, torsion, or `root^power` with the
    /// root a non-power. The root is reported for the cyclic reduction.
    pub fn classify(&self, p: &Presentation) -> ElementClass {
        let (w, _) = self.cyclic_reduce(p);
        if w.is_empty() {
            return ElementClass::Trivial;
        }
        if w.len() == 1 {
            match &w.syllables[0] {
                Syllable::Cyclic { factor, exp } => {
                    return ElementClass::Torsion { factor: *factor, exp: *exp }
                }
                Syllable::Free { factor, letters } => {
                    let n = letters.len();
                    for period in crate::numutil::divisors(n as u64) {
                        let period = period as usize;
                        if (0..n).all(|i| letters[i] == letters[i % period]) {
                            let root = Word {
                                syllables: vec![Syllable::Free {
                                    factor: *factor,
                                    letters: letters[..period].to_vec(),
                                }],
                            };
                            return ElementClass::Infinite { root, power: (n / period) as u32 };
                        }
                    }
                    unreachable!("period n always matches");
                }
            }
        }
        let n = w.len();
        for period in crate::numutil::divisors(n as u64) {
            let period = period as usize;
            if (0..n).all(|i| w.syllables[i] == w.syllables[i % period]) {
                let root = Word { syllables: w.syllables[..period].to_vec() };
                return ElementClass::Infinite { root, power: (n / period) as u32 };
            }
        }
        unreachable!("period n always matches");
    }

    /// Renders the word in the grammar accepted by [`parse_word`].
    pub fn format(&self, p: &Presentation) -> String {
        if self.is_empty() {
            return "1".into();
        }
        let mut parts = Vec::new();
        for s in &self.syllables {
            match s {
                Syllable::Cyclic { factor, exp } => {
                    let name = p.generator_name(*factor, 0);
                    if *exp == 1 {
                        parts.push(name.to_string());
                    } else {
                        parts.push(format!("{name}^{exp}"));
                    }
                }
                Syllable::Free { factor, letters } => {
                    let mut i = 0;
                    while i < letters.len() {
                        let l = letters[i];
                        let mut run = 1;
                        while i + run < letters.len() && letters[i + run] == l {
                            run += 1;
                        }
                        let name = p.generator_name(*factor, l.gen as usize);
                        let exp = if l.inverse { -(run as i64) } else { run as i64 };
                        let mut s = String::new();
                        if exp == 1 {
                            write!(s, "{name}").unwrap();
                        } else {
                            write!(s, "{name}^{exp}").unwrap();
                        }
                        parts.push(s);
                        i += run;
                    }
                }
            }
        }
        parts.join("*")
    }
}

fn push_normalized(out: &mut Vec<Syllable>, s: Syllable, p: &Presentation) {
    match out.last() {
        Some(last) if last.factor() == s.factor() => {
            let last = out.pop().unwrap();
            match last.merged(&s, p) {
                Some(m) => out.push(m),
                None => {} // cancelled; previous syllables stay normalized
            }
        }
        _ => out.push(s),
    }
    // A cancellation can expose a new same-factor adjacency.
    while out.len() >= 2 {
        let n = out.len();
        if out[n - 2].factor() != out[n - 1].factor() {
            break;
        }
        let b = out.pop().unwrap();
        let a = out.pop().unwrap();
        if let Some(m) = a.merged(&b, p) {
            out.push(m);
            break;
        }
    }
}

/// Parses a word over `p`. Grammar: generator names, `^` integer exponents
/// (possibly negative), `*` or whitespace separators, parentheses with
/// exponents, e.g. `a*b^-1*(a*b)^2`.
pub fn parse_word(text: &str, p: &Presentation) -> Result<Word> {
    let tokens = tokenize(text)?;
    let mut pos = 0;
    let w = parse_sequence(&tokens, &mut pos, p, 0)?;
    if pos != tokens.len() {
        return Err(Error::Parse(format!("unexpected trailing `{:?}`", tokens[pos])));
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Int(i64),
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == '*' || c == '.' {
            i += 1;
        } else if c.is_ascii_alphabetic() {
            let mut name = String::new();
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                name.push(chars[i]);
                i += 1;
            }
            // Single-letter generators may be juxtaposed, e.g. `ab` = `a*b`.
            for ch in name.chars() {
                out.push(Token::Ident(ch.to_string()));
            }
        } else if c == '^' {
            out.push(Token::Caret);
            i += 1;
        } else if c == '(' {
            out.push(Token::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Token::RParen);
            i += 1;
        } else if c == '-' || c.is_ascii_digit() {
            let mut num = String::new();
            num.push(c);
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                num.push(chars[i]);
                i += 1;
            }
            let n: i64 = num.parse().map_err(|_| Error::Parse(format!("bad exponent `{num}`")))?;
            out.push(Token::Int(n));
        } else {
            return Err(Error::Parse(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

fn parse_sequence(tokens: &[Token], pos: &mut usize, p: &Presentation, depth: usize) -> Result<Word> {
    let mut word = Word::identity();
    loop {
        match tokens.get(*pos) {
            None => break,
            Some(Token::RParen) if depth > 0 => break,
            Some(Token::Ident(name)) => {
                *pos += 1;
                let (factor, gen) = p
                    .lookup_generator(name)
                    .ok_or_else(|| Error::UnknownGenerator(name.clone()))?;
                let exp = parse_exponent(tokens, pos)?;
                let base = match p.factor(factor) {
                    FactorSpec::Cyclic { order } => {
                        let e = exp.rem_euclid(order as i64) as u32;
                        if e == 0 {
                            Word::identity()
                        } else {
                            Word { syllables: vec![Syllable::Cyclic { factor, exp: e }] }
                        }
                    }
                    FactorSpec::Free { .. } => {
                        let letter = Letter { gen: gen as u32, inverse: exp < 0 };
                        let letters = vec![letter; exp.unsigned_abs() as usize];
                        if letters.is_empty() {
                            Word::identity()
                        } else {
                            Word { syllables: vec![Syllable::Free { factor, letters }] }
                        }
                    }
                };
                word = word.mul(&base, p);
            }
            // `1` denotes the identity.
            Some(Token::Int(1)) => {
                *pos += 1;
            }
            Some(Token::LParen) => {
                *pos += 1;
                let inner = parse_sequence(tokens, pos, p, depth + 1)?;
                match tokens.get(*pos) {
                    Some(Token::RParen) => *pos += 1,
                    _ => return Err(Error::Parse("unbalanced parentheses".into())),
                }
                let exp = parse_exponent(tokens, pos)?;
                word = word.mul(&inner.power(exp, p), p);
            }
            Some(t) => return Err(Error::Parse(format!("unexpected token `{t:?}`"))),
        }
    }
    Ok(word)
}

fn parse_exponent(tokens: &[Token], pos: &mut usize) -> Result<i64> {
    if tokens.get(*pos) == Some(&Token::Caret) {
        *pos += 1;
        match tokens.get(*pos) {
            Some(Token::Int(n)) => {
                *pos += 1;
                Ok(*n)
            }
            other => Err(Error::Parse(format!("expected integer exponent, got `{other:?}`"))),
        }
    } else {
        Ok(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2c3() -> Presentation {
        Presentation::parse("C2*C3").unwrap()
    }

    fn f2() -> Presentation {
        Presentation::parse("F2").unwrap()
    }

    #[test]
    fn parse_normalizes_inverse_exponents() {
        let p = c2c3();
        let w = parse_word("a*b*a*b^-1", &p).unwrap();
        assert_eq!(
            w.syllables(),
            &[
                Syllable::Cyclic { factor: 0, exp: 1 },
                Syllable::Cyclic { factor: 1, exp: 1 },
                Syllable::Cyclic { factor: 0, exp: 1 },
                Syllable::Cyclic { factor: 1, exp: 2 },
            ]
        );
    }

    #[test]
    fn squares_die_in_c2() {
        let p = Presentation::parse("C2").unwrap();
        assert!(parse_word("a^2", &p).unwrap().is_trivial());
    }

    #[test]
    fn free_syllables_merge() {
        let p = f2();
        let w = parse_word("a*a*b", &p).unwrap();
        assert_eq!(w.len(), 1);
        match &w.syllables()[0] {
            Syllable::Free { letters, .. } => assert_eq!(letters.len(), 3),
            _ => panic!(),
        }
        assert_eq!(w.format(&p), "a^2*b");
    }

    #[test]
    fn cyclic_reduce_conjugate() {
        let p = c2c3();
        let w = parse_word("b*a*b^-1", &p).unwrap();
        let (core, conj) = w.cyclic_reduce(&p);
        assert_eq!(core, parse_word("a", &p).unwrap());
        assert_eq!(conj, parse_word("b", &p).unwrap());
        // Round trip: w = conj · core · conj⁻¹.
        assert_eq!(conj.mul(&core, &p).mul(&conj.inverse(&p), &p), w);
    }

    #[test]
    fn cyclic_reduce_fixes_reduced_words() {
        let p = c2c3();
        let w = parse_word("a*b*a*b^-1", &p).unwrap();
        let (core, conj) = w.cyclic_reduce(&p);
        assert_eq!(core, w);
        assert!(conj.is_trivial());
    }

    #[test]
    fn cyclic_reduce_inside_free_syllable() {
        let p = f2();
        let w = parse_word("a*b*a^-1", &p).unwrap();
        let (core, conj) = w.cyclic_reduce(&p);
        assert_eq!(core, parse_word("b", &p).unwrap());
        assert_eq!(conj, parse_word("a", &p).unwrap());
    }

    #[test]
    fn classify_powers() {
        let p = Presentation::parse("C2*C2").unwrap();
        let w = parse_word("(a*b)^3", &p).unwrap();
        match w.classify(&p) {
            ElementClass::Infinite { root, power } => {
                assert_eq!(root, parse_word("a*b", &p).unwrap());
                assert_eq!(power, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classify_syllable_period() {
        let p = Presentation::parse("C4*C2").unwrap();
        let w = parse_word("a^2*b*a^2*b", &p).unwrap();
        match w.classify(&p) {
            ElementClass::Infinite { root, power } => {
                assert_eq!(root, parse_word("a^2*b", &p).unwrap());
                assert_eq!(power, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classify_torsion() {
        let p = Presentation::parse("C4").unwrap();
        let w = parse_word("a^3", &p).unwrap();
        assert_eq!(w.classify(&p), ElementClass::Torsion { factor: 0, exp: 3 });
    }

    #[test]
    fn classify_free_root() {
        let p = f2();
        let w = parse_word("(a*b)^4", &p).unwrap();
        match w.classify(&p) {
            ElementClass::Infinite { root, power } => {
                assert_eq!(root, parse_word("a*b", &p).unwrap());
                assert_eq!(power, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn m_is_lcm_of_cyclic_orders() {
        assert_eq!(c2c3().m(), 6);
        assert_eq!(f2().m(), 1);
        assert_eq!(Presentation::parse("C2*C2*F1").unwrap().m(), 2);
    }

    #[test]
    fn power_concatenates() {
        let p = Presentation::parse("C2*C2").unwrap();
        let ab = parse_word("a*b", &p).unwrap();
        assert_eq!(ab.power(2, &p), parse_word("a*b*a*b", &p).unwrap());
        assert!(ab.mul(&ab.inverse(&p), &p).is_trivial());
        assert_eq!(ab.power(-1, &p), ab.inverse(&p));
    }

    #[test]
    fn trivial_factor_rejected() {
        assert!(Presentation::parse("C1*C3").is_err());
        assert!(Presentation::parse("F0").is_err());
    }

    #[test]
    fn format_parse_roundtrip() {
        let p = Presentation::parse("C2*C5*F2").unwrap();
        for text in ["a*b^3*c*d^-2*a", "(a*b)^2", "c^3*b*c^-1", "b^4*a*b^4"] {
            let w = parse_word(text, &p).unwrap();
            let again = parse_word(&w.format(&p), &p).unwrap();
            assert_eq!(w, again, "roundtrip of `{text}`");
        }
    }
}
