//! Graph families and structural vertex addresses.
//!
//! Vertices are named by reduced edge-words read from the root. Tree-like
//! families use a single word; Diestel–Leader graphs and the Cartesian product
//! use a pair of words; free products use an alternating list of factor
//! addresses. Every family lists the neighbors of a vertex in a fixed order and
//! the position in that order is the edge label.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rng::{combine, mix64};
use crate::weight::LogWeight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Up(u8),
    Down(u8),
    Edge(u8),
}

impl Step {
    fn code(self) -> u64 {
        match self {
            Step::Up(i) => 0x100 | i as u64,
            Step::Down(i) => 0x200 | i as u64,
            Step::Edge(i) => 0x300 | i as u64,
        }
    }
}

pub type Word = SmallVec<[Step; 16]>;

/// Appends `s`, cancelling an immediate backtrack.
///
/// The vertex reached by an `Up` step sees its predecessor as `Down(0)`, the
/// vertex reached by a `Down` step sees it as `Up(0)`, and in unoriented trees
/// `Edge(0)` always points back.
pub fn push_step(word: &mut Word, s: Step) {
    if let Some(&last) = word.last() {
        let back = matches!(
            (last, s),
            (Step::Up(_), Step::Down(0)) | (Step::Down(_), Step::Up(0)) | (Step::Edge(_), Step::Edge(0))
        );
        if back {
            word.pop();
            return;
        }
    }
    word.push(s);
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Addr {
    Word(Word),
    Pair(Word, Word),
    /// Alternating `(side, factor address)` components; side 0 is the left factor.
    Free(Vec<(u8, Addr)>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Oriented tree: `r` up-neighbors at ratio `s/r`, `s` down-neighbors at `r/s`.
    OrientedTree { r: u8, s: u8 },
    Grandparent { k: u8 },
    DiestelLeader { k: u8, l: u8 },
    CartesianGPTree { k: u8, d: u8 },
    FreeProduct(Box<Family>, Box<Family>),
    UnimodularTree { d: u8 },
}

fn word_len(w: &Word) -> u32 {
    w.len() as u32
}

/// Net number of `Up` steps.
fn height(w: &Word) -> i32 {
    w.iter()
        .map(|s| match s {
            Step::Up(_) => 1,
            Step::Down(_) => -1,
            Step::Edge(_) => 0,
        })
        .sum()
}

/// Number of `(Up, Down)` steps of a reduced `T_{1,k}` word, which always reads
/// `Up^c` followed by downs.
fn up_down(w: &Word) -> (u32, u32) {
    let c = w.iter().take_while(|s| matches!(s, Step::Up(_))).count() as u32;
    (c, w.len() as u32 - c)
}

fn canonical_oriented(w: &Word) -> Word {
    let mut out = Word::new();
    let mut prev: Option<Step> = None;
    for &s in w {
        let c = match (prev, s) {
            (None, Step::Up(_)) => Step::Up(0),
            (None, Step::Down(_)) => Step::Down(0),
            (Some(Step::Up(_)), Step::Up(_)) => Step::Up(0),
            (Some(Step::Up(_)), Step::Down(_)) => Step::Down(1),
            (Some(Step::Down(_)), Step::Up(_)) => Step::Up(1),
            (Some(Step::Down(_)), Step::Down(_)) => Step::Down(0),
            (_, other) => other,
        };
        out.push(c);
        prev = Some(s);
    }
    out
}

fn canonical_unoriented(w: &Word) -> Word {
    w.iter()
        .enumerate()
        .map(|(i, _)| Step::Edge(if i == 0 { 0 } else { 1 }))
        .collect()
}

fn orbit_oriented(w: &Word, r: u64, s: u64) -> BigUint {
    let mut n = BigUint::one();
    let mut prev: Option<Step> = None;
    for &st in w {
        let f = match (prev, st) {
            (None, Step::Up(_)) | (Some(Step::Up(_)), Step::Up(_)) => r,
            (None, Step::Down(_)) | (Some(Step::Down(_)), Step::Down(_)) => s,
            (Some(Step::Up(_)), Step::Down(_)) => s - 1,
            (Some(Step::Down(_)), Step::Up(_)) => r - 1,
            _ => 1,
        };
        n *= f;
        prev = Some(st);
    }
    n
}

fn orbit_unoriented(w: &Word, d: u64) -> BigUint {
    let mut n = BigUint::one();
    for i in 0..w.len() {
        n *= if i == 0 { d } else { d - 1 };
    }
    n
}

fn word_key(seed: u64, w: &Word) -> u64 {
    w.iter().fold(mix64(seed ^ w.len() as u64), |h, s| combine(h, s.code()))
}

impl Family {
    pub fn tree(r: u8, s: u8) -> Family {
        Family::OrientedTree { r, s }
    }
    pub fn gp(k: u8) -> Family {
        Family::Grandparent { k }
    }
    pub fn dl(k: u8, l: u8) -> Family {
        Family::DiestelLeader { k, l }
    }
    pub fn ut(d: u8) -> Family {
        Family::UnimodularTree { d }
    }
    pub fn cartesian(k: u8, d: u8) -> Family {
        Family::CartesianGPTree { k, d }
    }
    pub fn free(a: Family, b: Family) -> Family {
        Family::FreeProduct(Box::new(a), Box::new(b))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parse(format!("{self}: {m}")));
        match self {
            Family::OrientedTree { r, s } if !(1 <= *r && r < s) => bad("need 1 <= r < s"),
            Family::Grandparent { k } if *k < 2 => bad("need k >= 2"),
            Family::DiestelLeader { k, l } if *k < 2 || *l < 2 => bad("need k, l >= 2"),
            Family::CartesianGPTree { k, d } if *k < 2 || *d < 3 => bad("need k >= 2, d >= 3"),
            Family::UnimodularTree { d } if *d < 3 => bad("need d >= 3"),
            Family::FreeProduct(a, b) => {
                a.validate()?;
                b.validate()
            }
            _ if self.degree() > 250 => bad("degree too large"),
            _ => Ok(()),
        }
    }

    pub fn degree(&self) -> usize {
        match *self {
            Family::OrientedTree { r, s } => (r + s) as usize,
            Family::Grandparent { k } => 2 + k as usize + (k as usize).pow(2),
            Family::DiestelLeader { k, l } => (k + l) as usize,
            Family::CartesianGPTree { k, d } => Family::gp(k).degree() + d as usize,
            Family::FreeProduct(ref a, ref b) => a.degree() + b.degree(),
            Family::UnimodularTree { d } => d as usize,
        }
    }

    pub fn root(&self) -> Addr {
        match self {
            Family::DiestelLeader { .. } | Family::CartesianGPTree { .. } => {
                Addr::Pair(Word::new(), Word::new())
            }
            Family::FreeProduct(..) => Addr::Free(Vec::new()),
            _ => Addr::Word(Word::new()),
        }
    }

    /// Weight ratio `w^x(y)` of the neighbor reached through each label.
    pub fn label_ratios(&self) -> Vec<LogWeight> {
        match *self {
            Family::OrientedTree { r, s } => {
                let up = LogWeight::from_ratio(s as u64, r as u64);
                let mut v = vec![up.clone(); r as usize];
                v.extend(std::iter::repeat(up.inv()).take(s as usize));
                v
            }
            Family::Grandparent { k } => {
                let k = k as u64;
                let mut v = vec![LogWeight::from_ratio(k, 1), LogWeight::from_ratio(k * k, 1)];
                v.extend(std::iter::repeat(LogWeight::from_ratio(1, k)).take(k as usize));
                v.extend(std::iter::repeat(LogWeight::from_ratio(1, k * k)).take((k * k) as usize));
                v
            }
            Family::DiestelLeader { k, l } => {
                let a = LogWeight::from_ratio(l as u64, k as u64);
                let mut v = vec![a.clone(); k as usize];
                v.extend(std::iter::repeat(a.inv()).take(l as usize));
                v
            }
            Family::CartesianGPTree { k, d } => {
                let mut v = Family::gp(k).label_ratios();
                v.extend(std::iter::repeat(LogWeight::one()).take(d as usize));
                v
            }
            Family::FreeProduct(ref a, ref b) => {
                let mut v = a.label_ratios();
                v.extend(b.label_ratios());
                v
            }
            Family::UnimodularTree { d } => vec![LogWeight::one(); d as usize],
        }
    }

    /// Primes appearing in weights, increasing.
    pub fn primes(&self) -> Vec<u32> {
        let mut ps: Vec<u32> = self
            .label_ratios()
            .iter()
            .flat_map(|w| w.doubled().iter().map(|t| t.0).collect::<Vec<_>>())
            .collect();
        ps.sort_unstable();
        ps.dedup();
        ps
    }

    pub fn is_unimodular(&self) -> bool {
        self.label_ratios().iter().all(|w| w.is_one())
    }

    /// Adjacent vertices always lie at distances from the root differing by one.
    pub fn is_bipartite(&self) -> bool {
        match self {
            Family::Grandparent { .. } | Family::CartesianGPTree { .. } => false,
            Family::FreeProduct(a, b) => a.is_bipartite() && b.is_bipartite(),
            _ => true,
        }
    }

    /// Neighbors of `a` in label order.
    pub fn neighbors(&self, a: &Addr, out: &mut Vec<Addr>) {
        out.clear();
        match (self, a) {
            (Family::UnimodularTree { d }, Addr::Word(w)) => {
                for i in 0..*d {
                    let mut n = w.clone();
                    push_step(&mut n, Step::Edge(i));
                    out.push(Addr::Word(n));
                }
            }
            (Family::OrientedTree { r, s }, Addr::Word(w)) => {
                for i in 0..*r {
                    let mut n = w.clone();
                    push_step(&mut n, Step::Up(i));
                    out.push(Addr::Word(n));
                }
                for j in 0..*s {
                    let mut n = w.clone();
                    push_step(&mut n, Step::Down(j));
                    out.push(Addr::Word(n));
                }
            }
            (Family::Grandparent { k }, Addr::Word(w)) => {
                gp_neighbors(*k, w, |n| out.push(Addr::Word(n)));
            }
            (Family::DiestelLeader { k, l }, Addr::Pair(x, y)) => {
                for j in 0..*k {
                    let (mut nx, mut ny) = (x.clone(), y.clone());
                    push_step(&mut nx, Step::Down(j));
                    push_step(&mut ny, Step::Up(0));
                    out.push(Addr::Pair(nx, ny));
                }
                for j in 0..*l {
                    let (mut nx, mut ny) = (x.clone(), y.clone());
                    push_step(&mut nx, Step::Up(0));
                    push_step(&mut ny, Step::Down(j));
                    out.push(Addr::Pair(nx, ny));
                }
            }
            (Family::CartesianGPTree { k, d }, Addr::Pair(x, y)) => {
                gp_neighbors(*k, x, |n| out.push(Addr::Pair(n, y.clone())));
                for i in 0..*d {
                    let mut n = y.clone();
                    push_step(&mut n, Step::Edge(i));
                    out.push(Addr::Pair(x.clone(), n));
                }
            }
            (Family::FreeProduct(fa, fb), Addr::Free(comps)) => {
                let mut buf = Vec::new();
                for (side, f) in [(0u8, fa), (1u8, fb)] {
                    let froot = f.root();
                    match comps.last() {
                        Some((s, inner)) if *s == side => {
                            f.neighbors(inner, &mut buf);
                            for n in buf.drain(..) {
                                let mut c = comps.clone();
                                if n == froot {
                                    c.pop();
                                } else {
                                    c.last_mut().unwrap().1 = n;
                                }
                                out.push(Addr::Free(c));
                            }
                        }
                        _ => {
                            f.neighbors(&froot, &mut buf);
                            for n in buf.drain(..) {
                                let mut c = comps.clone();
                                c.push((side, n));
                                out.push(Addr::Free(c));
                            }
                        }
                    }
                }
            }
            _ => panic!("address {a} does not belong to {self}"),
        }
    }

    /// Checks that `a` is a reduced address of this family.
    pub fn contains(&self, a: &Addr) -> bool {
        let reduced = |w: &Word| {
            let mut r = Word::new();
            for &s in w {
                push_step(&mut r, s);
            }
            r == *w
        };
        let oriented = |w: &Word, r: u8, s: u8| {
            reduced(w)
                && w.iter().all(|st| match *st {
                    Step::Up(i) => i < r,
                    Step::Down(j) => j < s,
                    Step::Edge(_) => false,
                })
        };
        let unoriented =
            |w: &Word, d: u8| reduced(w) && w.iter().all(|st| matches!(*st, Step::Edge(i) if i < d));
        match (self, a) {
            (Family::UnimodularTree { d }, Addr::Word(w)) => unoriented(w, *d),
            (Family::OrientedTree { r, s }, Addr::Word(w)) => oriented(w, *r, *s),
            (Family::Grandparent { k }, Addr::Word(w)) => oriented(w, 1, *k),
            (Family::DiestelLeader { k, l }, Addr::Pair(x, y)) => {
                oriented(x, 1, *k) && oriented(y, 1, *l) && height(x) + height(y) == 0
            }
            (Family::CartesianGPTree { k, d }, Addr::Pair(x, y)) => oriented(x, 1, *k) && unoriented(y, *d),
            (Family::FreeProduct(fa, fb), Addr::Free(comps)) => {
                comps.windows(2).all(|p| p[0].0 != p[1].0)
                    && comps.iter().all(|(s, c)| {
                        let f = if *s == 0 { fa } else { fb };
                        *s <= 1 && *c != f.root() && f.contains(c)
                    })
            }
            _ => false,
        }
    }

    /// Weight of `a` relative to the root.
    pub fn log_weight(&self, a: &Addr) -> LogWeight {
        match (self, a) {
            (Family::UnimodularTree { .. }, _) => LogWeight::one(),
            (Family::OrientedTree { r, s }, Addr::Word(w)) => {
                LogWeight::from_ratio(*s as u64, *r as u64).pow(height(w))
            }
            (Family::Grandparent { k }, Addr::Word(w)) => LogWeight::from_ratio(*k as u64, 1).pow(height(w)),
            (Family::DiestelLeader { k, l }, Addr::Pair(x, _)) => {
                LogWeight::from_ratio(*l as u64, *k as u64).pow(-height(x))
            }
            (Family::CartesianGPTree { k, .. }, Addr::Pair(x, _)) => {
                LogWeight::from_ratio(*k as u64, 1).pow(height(x))
            }
            (Family::FreeProduct(fa, fb), Addr::Free(comps)) => {
                comps.iter().fold(LogWeight::one(), |acc, (s, c)| {
                    let f = if *s == 0 { fa } else { fb };
                    acc.mul(&f.log_weight(c))
                })
            }
            _ => panic!("address {a} does not belong to {self}"),
        }
    }

    /// Graph distance from the root.
    pub fn distance(&self, a: &Addr) -> u32 {
        match (self, a) {
            (Family::UnimodularTree { .. } | Family::OrientedTree { .. }, Addr::Word(w)) => word_len(w),
            (Family::Grandparent { .. }, Addr::Word(w)) => gp_distance(w),
            (Family::DiestelLeader { .. }, Addr::Pair(x, y)) => {
                word_len(x) + word_len(y) - height(x).unsigned_abs()
            }
            (Family::CartesianGPTree { .. }, Addr::Pair(x, y)) => gp_distance(x) + word_len(y),
            (Family::FreeProduct(fa, fb), Addr::Free(comps)) => comps
                .iter()
                .map(|(s, c)| if *s == 0 { fa.distance(c) } else { fb.distance(c) })
                .sum(),
            _ => panic!("address {a} does not belong to {self}"),
        }
    }

    /// Representative of the orbit of `a` under the root stabilizer.
    pub fn canonical(&self, a: &Addr) -> Addr {
        match (self, a) {
            (Family::UnimodularTree { .. }, Addr::Word(w)) => Addr::Word(canonical_unoriented(w)),
            (Family::OrientedTree { .. } | Family::Grandparent { .. }, Addr::Word(w)) => {
                Addr::Word(canonical_oriented(w))
            }
            (Family::DiestelLeader { .. }, Addr::Pair(x, y)) => {
                Addr::Pair(canonical_oriented(x), canonical_oriented(y))
            }
            (Family::CartesianGPTree { .. }, Addr::Pair(x, y)) => {
                Addr::Pair(canonical_oriented(x), canonical_unoriented(y))
            }
            (Family::FreeProduct(fa, fb), Addr::Free(comps)) => Addr::Free(
                comps
                    .iter()
                    .map(|(s, c)| (*s, if *s == 0 { fa.canonical(c) } else { fb.canonical(c) }))
                    .collect(),
            ),
            _ => panic!("address {a} does not belong to {self}"),
        }
    }

    /// Size of the root-stabilizer orbit of `a`.
    pub fn orbit_size(&self, a: &Addr) -> BigUint {
        match (self, a) {
            (Family::UnimodularTree { d }, Addr::Word(w)) => orbit_unoriented(w, *d as u64),
            (Family::OrientedTree { r, s }, Addr::Word(w)) => orbit_oriented(w, *r as u64, *s as u64),
            (Family::Grandparent { k }, Addr::Word(w)) => orbit_oriented(w, 1, *k as u64),
            (Family::DiestelLeader { k, l }, Addr::Pair(x, y)) => {
                orbit_oriented(x, 1, *k as u64) * orbit_oriented(y, 1, *l as u64)
            }
            (Family::CartesianGPTree { k, d }, Addr::Pair(x, y)) => {
                orbit_oriented(x, 1, *k as u64) * orbit_unoriented(y, *d as u64)
            }
            (Family::FreeProduct(fa, fb), Addr::Free(comps)) => comps
                .iter()
                .map(|(s, c)| if *s == 0 { fa.orbit_size(c) } else { fb.orbit_size(c) })
                .product(),
            _ => panic!("address {a} does not belong to {self}"),
        }
    }

    /// Stable 64-bit key of an address; identical across runs and platforms.
    pub fn stable_key(&self, a: &Addr) -> u64 {
        addr_key(a)
    }

    /// Generator of the weights one step "up": the smallest neighbor ratio above 1.
    pub fn unit_ratio(&self) -> Option<LogWeight> {
        self.label_ratios()
            .into_iter()
            .filter(|w| w.ln() > 0.0)
            .min_by(|a, b| a.cmp_value(b))
    }
}

fn gp_distance(w: &Word) -> u32 {
    let (c, b) = up_down(w);
    c.div_ceil(2) + b.div_ceil(2)
}

fn gp_neighbors(k: u8, w: &Word, mut emit: impl FnMut(Word)) {
    let mut p = w.clone();
    push_step(&mut p, Step::Up(0));
    let mut g = p.clone();
    push_step(&mut g, Step::Up(0));
    emit(p);
    emit(g);
    for j in 0..k {
        let mut c = w.clone();
        push_step(&mut c, Step::Down(j));
        emit(c);
    }
    for j in 0..k {
        for i in 0..k {
            let mut c = w.clone();
            push_step(&mut c, Step::Down(j));
            push_step(&mut c, Step::Down(i));
            emit(c);
        }
    }
}

pub fn addr_key(a: &Addr) -> u64 {
    match a {
        Addr::Word(w) => word_key(1, w),
        Addr::Pair(x, y) => combine(word_key(2, x), word_key(3, y)),
        Addr::Free(comps) => comps
            .iter()
            .fold(mix64(4 ^ comps.len() as u64), |h, (s, c)| combine(combine(h, *s as u64), addr_key(c))),
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::OrientedTree { r, s } => write!(f, "tree({r},{s})"),
            Family::Grandparent { k } => write!(f, "gp({k})"),
            Family::DiestelLeader { k, l } => write!(f, "dl({k},{l})"),
            Family::CartesianGPTree { k, d } => write!(f, "gpxt({k},{d})"),
            Family::FreeProduct(a, b) => write!(f, "free({a},{b})"),
            Family::UnimodularTree { d } => write!(f, "ut({d})"),
        }
    }
}

/// Splits `s` at top-level commas.
fn split_args(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

impl FromStr for Family {
    type Err = Error;

    /// Compact descriptors: `tree(2,3)`, `gp(2)`, `dl(2,3)`, `gpxt(2,3)`,
    /// `ut(3)` and `free(gp(3),gp(4))`.
    fn from_str(s: &str) -> Result<Family> {
        let s = s.trim();
        let err = || Error::Parse(format!("bad family descriptor `{s}`"));
        let open = s.find('(').ok_or_else(err)?;
        if !s.ends_with(')') {
            return Err(err());
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let inner = &s[open + 1..s.len() - 1];
        let args = split_args(inner);
        let nums = || -> Result<Vec<u8>> {
            args.iter().map(|a| a.parse::<u8>().map_err(|_| err())).collect()
        };
        let fam = match (name.as_str(), args.len()) {
            ("tree" | "t" | "oriented", 2) => {
                let n = nums()?;
                Family::tree(n[0], n[1])
            }
            ("gp" | "grandparent", 1) => Family::gp(nums()?[0]),
            ("dl" | "diestel-leader", 2) => {
                let n = nums()?;
                Family::dl(n[0], n[1])
            }
            ("gpxt" | "cartesian", 2) => {
                let n = nums()?;
                Family::cartesian(n[0], n[1])
            }
            ("ut" | "regular", 1) => Family::ut(nums()?[0]),
            ("free", 2) => Family::free(args[0].parse()?, args[1].parse()?),
            _ => return Err(err()),
        };
        fam.validate()?;
        Ok(fam)
    }
}

fn fmt_word(w: &Word, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if w.is_empty() {
        return write!(f, "-");
    }
    for (i, s) in w.iter().enumerate() {
        if i > 0 {
            write!(f, ".")?;
        }
        match s {
            Step::Up(j) => write!(f, "u{j}")?,
            Step::Down(j) => write!(f, "d{j}")?,
            Step::Edge(j) => write!(f, "e{j}")?,
        }
    }
    Ok(())
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Addr::Word(w) => fmt_word(w, f),
            Addr::Pair(x, y) => {
                write!(f, "(")?;
                fmt_word(x, f)?;
                write!(f, "|")?;
                fmt_word(y, f)?;
                write!(f, ")")
            }
            Addr::Free(comps) => {
                write!(f, "[")?;
                for (i, (s, c)) in comps.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}:{c}")?;
                }
                write!(f, "]")
            }
        }
    }
}

fn parse_word(s: &str) -> Result<Word> {
    let s = s.trim();
    if s == "-" {
        return Ok(Word::new());
    }
    s.split('.')
        .map(|tok| {
            let err = || Error::Parse(format!("bad step `{tok}`"));
            let (head, num) = tok.split_at(1.min(tok.len()));
            let j: u8 = num.parse().map_err(|_| err())?;
            match head {
                "u" => Ok(Step::Up(j)),
                "d" => Ok(Step::Down(j)),
                "e" => Ok(Step::Edge(j)),
                _ => Err(err()),
            }
        })
        .collect()
}

impl FromStr for Addr {
    type Err = Error;

    /// Text form: `u0.d1` for words (`-` is the empty word), `(x|y)` for pairs
    /// and `[0:a,1:b]` for free-product components.
    fn from_str(s: &str) -> Result<Addr> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let (x, y) = inner
                .split_once('|')
                .ok_or_else(|| Error::Parse(format!("bad pair `{s}`")))?;
            return Ok(Addr::Pair(parse_word(x)?, parse_word(y)?));
        }
        if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            if inner.trim().is_empty() {
                return Ok(Addr::Free(Vec::new()));
            }
            let comps = split_args(inner)
                .into_iter()
                .map(|c| {
                    let (side, rest) = c
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("bad component `{c}`")))?;
                    let side: u8 = side.trim().parse().map_err(|_| Error::Parse(format!("bad side `{side}`")))?;
                    Ok((side, rest.parse()?))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Addr::Free(comps));
        }
        Ok(Addr::Word(parse_word(s)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, VecDeque};

    fn all_families() -> Vec<Family> {
        vec![
            Family::tree(2, 3),
            Family::tree(1, 2),
            Family::gp(2),
            Family::gp(3),
            Family::dl(2, 3),
            Family::ut(3),
            Family::cartesian(2, 3),
            Family::free(Family::gp(2), Family::ut(3)),
        ]
    }

    fn bfs(f: &Family, radius: u32) -> HashMap<Addr, u32> {
        let mut seen = HashMap::new();
        let mut q = VecDeque::new();
        seen.insert(f.root(), 0);
        q.push_back(f.root());
        let mut buf = Vec::new();
        while let Some(a) = q.pop_front() {
            let d = seen[&a];
            if d == radius {
                continue;
            }
            f.neighbors(&a, &mut buf);
            for n in buf.clone() {
                if !seen.contains_key(&n) {
                    seen.insert(n.clone(), d + 1);
                    q.push_back(n);
                }
            }
        }
        seen
    }

    #[test]
    fn degrees_and_neighbor_counts() {
        for f in all_families() {
            let mut buf = Vec::new();
            f.neighbors(&f.root(), &mut buf);
            assert_eq!(buf.len(), f.degree(), "{f}");
            assert_eq!(f.label_ratios().len(), f.degree());
            let mut dedup = buf.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), buf.len(), "{f} is simple");
        }
        assert_eq!(Family::gp(2).degree(), 8);
        assert_eq!(Family::cartesian(2, 4).degree(), 12);
    }

    #[test]
    fn neighbor_relation_is_symmetric_and_ratios_match_weights() {
        for f in all_families() {
            let ball = bfs(&f, 3);
            let ratios = f.label_ratios();
            let mut buf = Vec::new();
            let mut back = Vec::new();
            for a in ball.keys() {
                assert!(f.contains(a), "{f} {a}");
                f.neighbors(a, &mut buf);
                let wa = f.log_weight(a);
                for (lab, n) in buf.iter().enumerate() {
                    assert_eq!(f.log_weight(n), wa.mul(&ratios[lab]), "{f} {a} -> {n}");
                    f.neighbors(n, &mut back);
                    assert!(back.contains(a), "{f}: {n} does not see {a}");
                }
            }
        }
    }

    #[test]
    fn distance_formula_matches_bfs() {
        for f in all_families() {
            let r = if f.degree() > 10 { 3 } else { 5 };
            for (a, d) in bfs(&f, r) {
                assert_eq!(f.distance(&a), d, "{f} {a}");
            }
        }
    }

    #[test]
    fn orbit_sizes_partition_spheres() {
        for f in all_families() {
            let ball = bfs(&f, 4);
            let mut per_rep: HashMap<Addr, u64> = HashMap::new();
            for a in ball.keys() {
                *per_rep.entry(f.canonical(a)).or_default() += 1;
            }
            for (rep, n) in per_rep {
                assert_eq!(f.canonical(&rep), rep);
                assert_eq!(f.orbit_size(&rep), BigUint::from(n), "{f} {rep}");
            }
        }
    }

    #[test]
    fn descriptors_round_trip() {
        for f in all_families() {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("tree(3,2)".parse::<Family>().is_err());
        assert!("gp(1)".parse::<Family>().is_err());
        assert!("ut(2)".parse::<Family>().is_err());
        assert!("nope(3)".parse::<Family>().is_err());
    }

    #[test]
    fn addresses_round_trip_through_text() {
        for f in all_families() {
            for a in bfs(&f, 2).keys() {
                let s = a.to_string();
                assert_eq!(&s.parse::<Addr>().unwrap(), a, "{s}");
            }
        }
        assert!("x1".parse::<Addr>().is_err());
    }

    #[test]
    fn unit_ratios() {
        assert_eq!(Family::tree(2, 3).unit_ratio(), Some(LogWeight::from_ratio(3, 2)));
        assert_eq!(Family::gp(2).unit_ratio(), Some(LogWeight::from_ratio(2, 1)));
        assert_eq!(Family::ut(4).unit_ratio(), None);
        assert!(Family::ut(4).is_unimodular());
        assert!(!Family::dl(2, 3).is_unimodular());
        assert!(Family::dl(3, 3).is_unimodular());
    }
}
