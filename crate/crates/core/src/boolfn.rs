//! Boolean functions of N solids, evaluated on binary, ternary and
//! surface-augmented indicator vectors.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Largest supported arity (packing limit).
pub const MAX_ARITY: usize = 256;
/// Arity up to which a full truth table is compiled.
pub const TABLE_ARITY: usize = 16;
/// Undefined slots up to which ternary evaluation is made exact by enumerating completions.
const EXACT_COMPLETION_LIMIT: usize = 6;

const WORDS: usize = MAX_ARITY * 2 / 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Trit {
    Zero,
    One,
    Undefined,
}

impl Trit {
    pub fn from_bool(b: bool) -> Trit {
        if b {
            Trit::One
        } else {
            Trit::Zero
        }
    }

    pub fn to_bool(self) -> Option<bool> {
        match self {
            Trit::Zero => Some(false),
            Trit::One => Some(true),
            Trit::Undefined => None,
        }
    }

    fn not(self) -> Trit {
        match self {
            Trit::Zero => Trit::One,
            Trit::One => Trit::Zero,
            Trit::Undefined => Trit::Undefined,
        }
    }
}

/// Per-solid state of a point or a cell. `Surface` only occurs on points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Zero = 0,
    One = 1,
    Undefined = 2,
    Surface = 3,
}

impl Slot {
    fn from_code(c: u64) -> Slot {
        match c & 3 {
            0 => Slot::Zero,
            1 => Slot::One,
            2 => Slot::Undefined,
            _ => Slot::Surface,
        }
    }

    pub fn from_bool(b: bool) -> Slot {
        if b {
            Slot::One
        } else {
            Slot::Zero
        }
    }

    pub fn trit(self) -> Trit {
        match self {
            Slot::Zero => Trit::Zero,
            Slot::One => Trit::One,
            _ => Trit::Undefined,
        }
    }
}

impl From<Trit> for Slot {
    fn from(t: Trit) -> Slot {
        match t {
            Trit::Zero => Slot::Zero,
            Trit::One => Slot::One,
            Trit::Undefined => Slot::Undefined,
        }
    }
}

/// N slots of 2 bits, packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IndicatorVector {
    len: u16,
    words: [u64; WORDS],
}

impl IndicatorVector {
    pub fn filled(len: usize, s: Slot) -> Self {
        assert!(len <= MAX_ARITY, "arity {len} exceeds {MAX_ARITY}");
        let mut v = IndicatorVector { len: len as u16, words: [0; WORDS] };
        if s != Slot::Zero {
            for i in 0..len {
                v.set(i, s);
            }
        }
        v
    }

    pub fn from_slots(slots: &[Slot]) -> Self {
        let mut v = IndicatorVector::filled(slots.len(), Slot::Zero);
        for (i, &s) in slots.iter().enumerate() {
            v.set(i, s);
        }
        v
    }

    pub fn from_trits(trits: &[Trit]) -> Self {
        let mut v = IndicatorVector::filled(trits.len(), Slot::Zero);
        for (i, &t) in trits.iter().enumerate() {
            v.set(i, t.into());
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> Slot {
        debug_assert!(i < self.len());
        Slot::from_code(self.words[i / 32] >> ((i % 32) * 2))
    }

    #[inline]
    pub fn set(&mut self, i: usize, s: Slot) {
        debug_assert!(i < self.len());
        let sh = (i % 32) * 2;
        let w = &mut self.words[i / 32];
        *w = (*w & !(3u64 << sh)) | ((s as u64) << sh);
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// Number of slots holding `s`, by word-parallel bit counting.
    pub fn count(&self, s: Slot) -> usize {
        let lo_pat = if s as u64 & 1 == 1 { u64::MAX } else { 0 };
        let hi_pat = if s as u64 & 2 == 2 { u64::MAX } else { 0 };
        const LO: u64 = 0x5555_5555_5555_5555;
        let mut n = 0;
        let full = self.len() / 32;
        for w in 0..=full.min(WORDS - 1) {
            let x = self.words[w];
            let lo = !(x ^ lo_pat) & LO;
            let hi = !((x >> 1) ^ hi_pat) & LO;
            let mut m = lo & hi;
            if w == full {
                let rem = self.len() % 32;
                m &= if rem == 0 { 0 } else { (1u64 << (rem * 2)) - 1 };
            }
            n += m.count_ones() as usize;
        }
        n
    }

    /// Slots holding `s`, ascending.
    pub fn positions(&self, s: Slot) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.get(i) == s)
    }

    /// Binary assignment from the 0/1 slots (other slots read as 0).
    pub fn ones(&self) -> Bits {
        let mut b = Bits::default();
        for i in self.positions(Slot::One) {
            b.set(i, true);
        }
        b
    }
}

impl fmt::Debug for IndicatorVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.slots().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            let c = match s {
                Slot::Zero => '0',
                Slot::One => '1',
                Slot::Undefined => 'u',
                Slot::Surface => 's',
            };
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A binary assignment to up to `MAX_ARITY` inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bits([u64; MAX_ARITY / 64]);

impl Bits {
    pub fn from_bools(b: &[bool]) -> Bits {
        let mut r = Bits::default();
        for (i, &x) in b.iter().enumerate() {
            r.set(i, x);
        }
        r
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        if v {
            self.0[i / 64] |= 1 << (i % 64);
        } else {
            self.0[i / 64] &= !(1 << (i % 64));
        }
    }

    #[inline]
    fn low(&self) -> u64 {
        self.0[0]
    }
}

/// Classification vector: f at the 2^order assignments of the flipped slots.
///
/// Position `p` encodes the flipped values with the first flipped slot as the most
/// significant bit; `f` at position `p` is bit `p` of `bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassVec {
    pub order: u8,
    pub bits: u8,
}

impl ClassVec {
    #[inline]
    pub fn get(&self, p: usize) -> bool {
        self.bits >> p & 1 == 1
    }

    pub fn len(&self) -> usize {
        1 << self.order
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Build from values listed in position order, e.g. `[b00, b01, b10, b11]`.
    pub fn from_values(v: &[bool]) -> ClassVec {
        let order = v.len().trailing_zeros() as u8;
        assert_eq!(1usize << order, v.len(), "length must be 2, 4 or 8");
        let mut bits = 0u8;
        for (p, &x) in v.iter().enumerate() {
            bits |= (x as u8) << p;
        }
        ClassVec { order, bits }
    }

    pub fn values(&self) -> Vec<bool> {
        (0..self.len()).map(|p| self.get(p)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoolFnError {
    ArityMismatch { expected: usize, got: usize },
    /// A surface slot that is not being flipped.
    SurfaceBitOutsideFlipSet { slot: usize },
    /// A flipped slot that is not a surface slot, or a non-binary fixed slot.
    BadProbe { slot: usize },
    InputOutOfRange { index: usize, arity: usize },
    BadThreshold { k: usize, args: usize },
    Syntax { pos: usize, msg: String },
    IndexOverflow { pos: usize, index: usize },
}

impl fmt::Display for BoolFnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolFnError::ArityMismatch { expected, got } => {
                write!(f, "expected {expected} inputs, got {got}")
            }
            BoolFnError::SurfaceBitOutsideFlipSet { slot } => {
                write!(f, "slot {slot} is on a surface but not flipped")
            }
            BoolFnError::BadProbe { slot } => write!(f, "slot {slot} cannot be probed"),
            BoolFnError::InputOutOfRange { index, arity } => {
                write!(f, "input {index} out of range for arity {arity}")
            }
            BoolFnError::BadThreshold { k, args } => {
                write!(f, "min{k} needs between 1 and {args} as threshold")
            }
            BoolFnError::Syntax { pos, msg } => write!(f, "syntax error at {pos}: {msg}"),
            BoolFnError::IndexOverflow { pos, index } => {
                write!(f, "input index {index} at {pos} exceeds the supported {MAX_ARITY}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BoolFnError {}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(bool),
    Input(usize),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Xor(Vec<Expr>),
    /// True when at least `k` arguments are true.
    AtLeast(usize, Vec<Expr>),
}

impl Expr {
    fn max_input(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Input(i) => Some(*i),
            Expr::Not(e) => e.max_input(),
            Expr::And(v) | Expr::Or(v) | Expr::Xor(v) | Expr::AtLeast(_, v) => {
                v.iter().filter_map(|e| e.max_input()).max()
            }
        }
    }

    fn check(&self) -> Result<(), BoolFnError> {
        match self {
            Expr::AtLeast(k, v) => {
                if *k < 1 || *k > v.len() {
                    return Err(BoolFnError::BadThreshold { k: *k, args: v.len() });
                }
                v.iter().try_for_each(|e| e.check())
            }
            Expr::Not(e) => e.check(),
            Expr::And(v) | Expr::Or(v) | Expr::Xor(v) => v.iter().try_for_each(|e| e.check()),
            _ => Ok(()),
        }
    }

    fn eval_bits(&self, b: &Bits) -> bool {
        match self {
            Expr::Const(c) => *c,
            Expr::Input(i) => b.get(*i),
            Expr::Not(e) => !e.eval_bits(b),
            Expr::And(v) => v.iter().all(|e| e.eval_bits(b)),
            Expr::Or(v) => v.iter().any(|e| e.eval_bits(b)),
            Expr::Xor(v) => v.iter().fold(false, |acc, e| acc ^ e.eval_bits(b)),
            Expr::AtLeast(k, v) => {
                let mut n = 0;
                for e in v {
                    if e.eval_bits(b) {
                        n += 1;
                        if n >= *k {
                            return true;
                        }
                    }
                }
                false
            }
        }
    }

    /// Kleene evaluation: sound (a definite answer holds for every completion) and
    /// exact when every input occurs at most once.
    fn eval_kleene(&self, iv: &IndicatorVector) -> Trit {
        match self {
            Expr::Const(c) => Trit::from_bool(*c),
            Expr::Input(i) => iv.get(*i).trit(),
            Expr::Not(e) => e.eval_kleene(iv).not(),
            Expr::And(v) => {
                let mut r = Trit::One;
                for e in v {
                    match e.eval_kleene(iv) {
                        Trit::Zero => return Trit::Zero,
                        Trit::Undefined => r = Trit::Undefined,
                        Trit::One => {}
                    }
                }
                r
            }
            Expr::Or(v) => {
                let mut r = Trit::Zero;
                for e in v {
                    match e.eval_kleene(iv) {
                        Trit::One => return Trit::One,
                        Trit::Undefined => r = Trit::Undefined,
                        Trit::Zero => {}
                    }
                }
                r
            }
            Expr::Xor(v) => {
                let mut acc = false;
                for e in v {
                    match e.eval_kleene(iv).to_bool() {
                        Some(x) => acc ^= x,
                        None => return Trit::Undefined,
                    }
                }
                Trit::from_bool(acc)
            }
            Expr::AtLeast(k, v) => {
                let (mut ones, mut maybe) = (0, 0);
                for e in v {
                    match e.eval_kleene(iv) {
                        Trit::One => ones += 1,
                        Trit::Undefined => maybe += 1,
                        Trit::Zero => {}
                    }
                }
                if ones >= *k {
                    Trit::One
                } else if ones + maybe < *k {
                    Trit::Zero
                } else {
                    Trit::Undefined
                }
            }
        }
    }

    fn shifted(&self, by: usize) -> Expr {
        self.remapped(&|i| i + by)
    }

    fn remapped(&self, m: &dyn Fn(usize) -> usize) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Input(i) => Expr::Input(m(*i)),
            Expr::Not(e) => Expr::Not(Box::new(e.remapped(m))),
            Expr::And(v) => Expr::And(v.iter().map(|e| e.remapped(m)).collect()),
            Expr::Or(v) => Expr::Or(v.iter().map(|e| e.remapped(m)).collect()),
            Expr::Xor(v) => Expr::Xor(v.iter().map(|e| e.remapped(m)).collect()),
            Expr::AtLeast(k, v) => Expr::AtLeast(*k, v.iter().map(|e| e.remapped(m)).collect()),
        }
    }
}

/// A boolean function of `arity` solids.
///
/// Binary evaluation costs one table lookup for arity ≤ 16 and a tree walk
/// (linear in the expression size) otherwise.
#[derive(Clone, Debug)]
pub struct BoolFn {
    arity: usize,
    expr: Expr,
    table: Option<Vec<u64>>,
}

impl PartialEq for BoolFn {
    fn eq(&self, o: &Self) -> bool {
        self.arity == o.arity && self.expr == o.expr
    }
}

impl BoolFn {
    pub fn new(arity: usize, expr: Expr) -> Result<BoolFn, BoolFnError> {
        if arity == 0 || arity > MAX_ARITY {
            return Err(BoolFnError::ArityMismatch { expected: MAX_ARITY, got: arity });
        }
        if let Some(i) = expr.max_input() {
            if i >= arity {
                return Err(BoolFnError::InputOutOfRange { index: i, arity });
            }
        }
        expr.check()?;
        let mut f = BoolFn { arity, expr, table: None };
        if arity <= TABLE_ARITY {
            let n = 1usize << arity;
            let mut t = vec![0u64; n.div_ceil(64)];
            for idx in 0..n {
                let mut b = Bits::default();
                b.0[0] = idx as u64;
                if f.expr.eval_bits(&b) {
                    t[idx / 64] |= 1 << (idx % 64);
                }
            }
            f.table = Some(t);
        }
        Ok(f)
    }

    fn inputs(n: usize) -> Vec<Expr> {
        (0..n).map(Expr::Input).collect()
    }

    pub fn input(i: usize, arity: usize) -> BoolFn {
        BoolFn::new(arity, Expr::Input(i)).expect("input index below arity")
    }

    pub fn union(n: usize) -> BoolFn {
        BoolFn::new(n, Expr::Or(Self::inputs(n))).expect("valid union")
    }

    pub fn intersection(n: usize) -> BoolFn {
        BoolFn::new(n, Expr::And(Self::inputs(n))).expect("valid intersection")
    }

    /// The first solid minus all the others.
    pub fn difference(n: usize) -> BoolFn {
        let mut v = vec![Expr::Input(0)];
        v.extend((1..n).map(|i| Expr::Not(Box::new(Expr::Input(i)))));
        BoolFn::new(n, Expr::And(v)).expect("valid difference")
    }

    pub fn xor(n: usize) -> BoolFn {
        BoolFn::new(n, Expr::Xor(Self::inputs(n))).expect("valid xor")
    }

    /// Points inside at least `k` of the `n` solids.
    pub fn min_k(k: usize, n: usize) -> Result<BoolFn, BoolFnError> {
        BoolFn::new(n, Expr::AtLeast(k, Self::inputs(n)))
    }

    /// Function given by its truth table: bit `idx` is f at the assignment whose
    /// input `i` is bit `i` of `idx`.
    pub fn from_truth_table(arity: usize, table: &[bool]) -> BoolFn {
        assert_eq!(table.len(), 1 << arity);
        let minterms = table
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(idx, _)| {
                Expr::And(
                    (0..arity)
                        .map(|i| {
                            if idx >> i & 1 == 1 {
                                Expr::Input(i)
                            } else {
                                Expr::Not(Box::new(Expr::Input(i)))
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        BoolFn::new(arity, Expr::Or(minterms)).expect("valid truth table")
    }

    pub fn complement(&self) -> BoolFn {
        BoolFn::new(self.arity, Expr::Not(Box::new(self.expr.clone()))).expect("same inputs")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn has_table(&self) -> bool {
        self.table.is_some()
    }

    #[inline]
    pub fn eval_bits(&self, b: &Bits) -> bool {
        match &self.table {
            Some(t) => {
                let idx = (b.low() & ((1u64 << self.arity) - 1).max(1)) as usize;
                t[idx / 64] >> (idx % 64) & 1 == 1
            }
            None => self.expr.eval_bits(b),
        }
    }

    /// Tree evaluation, bypassing the table.
    pub fn eval_tree(&self, b: &Bits) -> bool {
        self.expr.eval_bits(b)
    }

    pub fn eval_binary(&self, bits: &[bool]) -> Result<bool, BoolFnError> {
        self.check_len(bits.len())?;
        Ok(self.eval_bits(&Bits::from_bools(bits)))
    }

    fn check_len(&self, got: usize) -> Result<(), BoolFnError> {
        if got != self.arity {
            return Err(BoolFnError::ArityMismatch { expected: self.arity, got });
        }
        Ok(())
    }

    pub fn eval_ternary(&self, trits: &[Trit]) -> Result<Trit, BoolFnError> {
        self.check_len(trits.len())?;
        Ok(self.eval_cell(&IndicatorVector::from_trits(trits)))
    }

    /// Ternary evaluation of a cell indicator (no surface slots).
    ///
    /// Kleene rules first; an undefined answer is refined by enumerating all
    /// completions when at most a handful of slots are undefined.
    pub fn eval_cell(&self, iv: &IndicatorVector) -> Trit {
        let t = self.expr.eval_kleene(iv);
        if t != Trit::Undefined {
            return t;
        }
        let nu = iv.count(Slot::Undefined);
        if nu > EXACT_COMPLETION_LIMIT {
            return t;
        }
        self.eval_by_completion(iv)
    }

    /// Exact ternary value by enumerating every completion of the undefined slots.
    pub fn eval_by_completion(&self, iv: &IndicatorVector) -> Trit {
        let free: Vec<usize> = iv.positions(Slot::Undefined).collect();
        let base = iv.ones();
        let mut seen = [false; 2];
        for m in 0u64..(1u64 << free.len()) {
            let mut b = base;
            for (k, &i) in free.iter().enumerate() {
                b.set(i, m >> k & 1 == 1);
            }
            seen[self.eval_bits(&b) as usize] = true;
            if seen[0] && seen[1] {
                return Trit::Undefined;
            }
        }
        Trit::from_bool(seen[1])
    }

    /// f at all assignments of the flipped surface slots, other slots fixed.
    pub fn flip_probe(&self, base: &IndicatorVector, flip: &[usize]) -> Result<ClassVec, BoolFnError> {
        self.check_len(base.len())?;
        for (i, s) in base.slots().enumerate() {
            let flipped = flip.contains(&i);
            match (s, flipped) {
                (Slot::Surface, false) => return Err(BoolFnError::SurfaceBitOutsideFlipSet { slot: i }),
                (Slot::Surface, true) | (Slot::Zero, false) | (Slot::One, false) => {}
                _ => return Err(BoolFnError::BadProbe { slot: i }),
            }
        }
        let order = flip.len();
        if order == 0 || order > 3 {
            return Err(BoolFnError::BadProbe { slot: flip.first().copied().unwrap_or(0) });
        }
        let mut b = base.ones();
        let mut bits = 0u8;
        for p in 0..(1usize << order) {
            for (k, &i) in flip.iter().enumerate() {
                b.set(i, p >> (order - 1 - k) & 1 == 1);
            }
            bits |= (self.eval_bits(&b) as u8) << p;
        }
        Ok(ClassVec { order: order as u8, bits })
    }

    /// Rename input `i` to `map[i]` in a function of the given arity.
    pub fn remap_inputs(&self, map: &[usize], arity: usize) -> Result<BoolFn, BoolFnError> {
        BoolFn::new(arity, self.expr.remapped(&|i| map[i]))
    }

    /// Express as a binary CSG tree where possible (no constants, negations only
    /// as subtracted terms).
    pub fn to_csg_tree(&self) -> Option<CsgTree> {
        expr_to_tree(&self.expr)
    }
}

fn fold_tree(mut items: Vec<CsgTree>, op: fn(Box<CsgTree>, Box<CsgTree>) -> CsgTree) -> Option<CsgTree> {
    if items.is_empty() {
        return None;
    }
    let first = items.remove(0);
    Some(items.into_iter().fold(first, |acc, t| op(Box::new(acc), Box::new(t))))
}

fn expr_to_tree(e: &Expr) -> Option<CsgTree> {
    match e {
        Expr::Const(_) | Expr::Not(_) => None,
        Expr::Input(i) => Some(CsgTree::Leaf(*i)),
        Expr::And(v) => {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for x in v {
                match x {
                    Expr::Not(inner) => neg.push(expr_to_tree(inner)?),
                    other => pos.push(expr_to_tree(other)?),
                }
            }
            let p = fold_tree(pos, CsgTree::Inter)?;
            match fold_tree(neg, CsgTree::Union) {
                Some(n) => Some(CsgTree::Diff(Box::new(p), Box::new(n))),
                None => Some(p),
            }
        }
        Expr::Or(v) => fold_tree(v.iter().map(expr_to_tree).collect::<Option<_>>()?, CsgTree::Union),
        Expr::Xor(v) => fold_tree(v.iter().map(expr_to_tree).collect::<Option<_>>()?, CsgTree::Xor),
        Expr::AtLeast(k, v) => {
            let args: Vec<CsgTree> = v.iter().map(expr_to_tree).collect::<Option<_>>()?;
            let mut terms = Vec::new();
            for combo in combinations(args.len(), *k) {
                let parts = combo.iter().map(|&i| args[i].clone()).collect();
                terms.push(fold_tree(parts, CsgTree::Inter)?);
            }
            fold_tree(terms, CsgTree::Union)
        }
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        while i > 0 && c[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        c[i - 1] += 1;
        for j in i..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Binary CSG tree over input indices.
#[derive(Clone, Debug, PartialEq)]
pub enum CsgTree {
    Leaf(usize),
    Union(Box<CsgTree>, Box<CsgTree>),
    Inter(Box<CsgTree>, Box<CsgTree>),
    Diff(Box<CsgTree>, Box<CsgTree>),
    Xor(Box<CsgTree>, Box<CsgTree>),
}

impl CsgTree {
    pub fn leaf(i: usize) -> Box<CsgTree> {
        Box::new(CsgTree::Leaf(i))
    }

    pub fn eval(&self, b: &[bool]) -> bool {
        match self {
            CsgTree::Leaf(i) => b[*i],
            CsgTree::Union(l, r) => l.eval(b) || r.eval(b),
            CsgTree::Inter(l, r) => l.eval(b) && r.eval(b),
            CsgTree::Diff(l, r) => l.eval(b) && !r.eval(b),
            CsgTree::Xor(l, r) => l.eval(b) ^ r.eval(b),
        }
    }

    pub fn max_leaf(&self) -> usize {
        match self {
            CsgTree::Leaf(i) => *i,
            CsgTree::Union(l, r) | CsgTree::Inter(l, r) | CsgTree::Diff(l, r) | CsgTree::Xor(l, r) => {
                l.max_leaf().max(r.max_leaf())
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            CsgTree::Leaf(_) => 1,
            CsgTree::Union(l, r) | CsgTree::Inter(l, r) | CsgTree::Diff(l, r) | CsgTree::Xor(l, r) => {
                l.leaf_count() + r.leaf_count()
            }
        }
    }

    fn to_expr(&self) -> Expr {
        let pair = |l: &CsgTree, r: &CsgTree| vec![l.to_expr(), r.to_expr()];
        match self {
            CsgTree::Leaf(i) => Expr::Input(*i),
            CsgTree::Union(l, r) => Expr::Or(pair(l, r)),
            CsgTree::Inter(l, r) => Expr::And(pair(l, r)),
            CsgTree::Diff(l, r) => Expr::And(vec![l.to_expr(), Expr::Not(Box::new(r.to_expr()))]),
            CsgTree::Xor(l, r) => Expr::Xor(pair(l, r)),
        }
    }
}

/// One function of all leaves; arity is one more than the largest leaf index.
pub fn from_csg_tree(tree: &CsgTree) -> BoolFn {
    BoolFn::new(tree.max_leaf() + 1, tree.to_expr()).expect("tree leaves define the arity")
}

/// min-2 of `n` inputs as a union of all pairwise intersections.
pub fn expand_min2_binary(n: usize) -> CsgTree {
    assert!(n >= 2, "min-2 needs at least two inputs");
    let pairs = combinations(n, 2)
        .into_iter()
        .map(|c| CsgTree::Inter(CsgTree::leaf(c[0]), CsgTree::leaf(c[1])))
        .collect();
    fold_tree(pairs, CsgTree::Union).expect("at least one pair")
}

// ---------------------------------------------------------------------------
// Expression parser

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Input(usize),
    MinK(usize),
    Union,
    Inter,
    Range,
    LParen,
    RParen,
    Comma,
    Or,
    And,
    Minus,
    Caret,
    Tilde,
    End,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, BoolFnError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let number = |i: &mut usize| -> Option<usize> {
        let start = *i;
        while *i < b.len() && b[*i].is_ascii_digit() {
            *i += 1;
        }
        if *i == start {
            return None;
        }
        text[start..*i].parse().ok()
    };
    while i < b.len() {
        let c = b[i];
        let pos = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            b'|' => Some(Tok::Or),
            b'&' => Some(Tok::And),
            b'-' => Some(Tok::Minus),
            b'^' => Some(Tok::Caret),
            b'~' => Some(Tok::Tilde),
            _ => None,
        };
        if let Some(t) = single {
            out.push((pos, t));
            i += 1;
            continue;
        }
        if c == b'.' && b.get(i + 1) == Some(&b'.') {
            out.push((pos, Tok::Range));
            i += 2;
            continue;
        }
        if c == b'P' || c == b'p' {
            i += 1;
            let n = number(&mut i).ok_or(BoolFnError::Syntax { pos, msg: "expected input number".into() })?;
            if n >= MAX_ARITY {
                return Err(BoolFnError::IndexOverflow { pos, index: n });
            }
            out.push((pos, Tok::Input(n)));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < b.len() && b[i].is_ascii_alphabetic() {
                i += 1;
            }
            let word = &text[start..i];
            let t = match word {
                "union" => Tok::Union,
                "inter" => Tok::Inter,
                "min" => {
                    let k = number(&mut i).ok_or(BoolFnError::Syntax { pos, msg: "min needs a threshold, e.g. min2".into() })?;
                    Tok::MinK(k)
                }
                _ => return Err(BoolFnError::Syntax { pos, msg: alloc::format!("unknown word '{word}'") }),
            };
            out.push((pos, t));
            continue;
        }
        return Err(BoolFnError::Syntax { pos, msg: alloc::format!("unexpected character '{}'", c as char) });
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: &str) -> Result<T, BoolFnError> {
        Err(BoolFnError::Syntax { pos: self.pos(), msg: msg.to_string() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), BoolFnError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(what)
        }
    }

    // Lowest precedence: union and difference, left-associative.
    fn parse_or(&mut self) -> Result<Expr, BoolFnError> {
        let mut lhs = self.parse_xor()?;
        loop {
            match self.peek() {
                Tok::Or => {
                    self.bump();
                    let rhs = self.parse_xor()?;
                    lhs = Expr::Or(vec![lhs, rhs]);
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.parse_xor()?;
                    lhs = Expr::And(vec![lhs, Expr::Not(Box::new(rhs))]);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_xor(&mut self) -> Result<Expr, BoolFnError> {
        let mut lhs = self.parse_and()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            let rhs = self.parse_and()?;
            lhs = Expr::Xor(vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, BoolFnError> {
        let mut lhs = self.parse_unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Expr::And(vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, BoolFnError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Tilde => Ok(Expr::Not(Box::new(self.parse_unary()?))),
            Tok::Input(i) => {
                if *self.peek() == Tok::Range {
                    return self.err("ranges are only allowed inside argument lists");
                }
                Ok(Expr::Input(i))
            }
            Tok::LParen => {
                let e = self.parse_or()?;
                self.expect(Tok::RParen, "expected ')'")?;
                Ok(e)
            }
            Tok::Union => Ok(Expr::Or(self.parse_args()?)),
            Tok::Inter => Ok(Expr::And(self.parse_args()?)),
            Tok::MinK(k) => {
                let args = self.parse_args()?;
                if k < 1 || k > args.len() {
                    return Err(BoolFnError::Syntax {
                        pos,
                        msg: alloc::format!("min{k} over {} arguments", args.len()),
                    });
                }
                Ok(Expr::AtLeast(k, args))
            }
            Tok::End => Err(BoolFnError::Syntax { pos, msg: "unexpected end of expression".into() }),
            _ => Err(BoolFnError::Syntax { pos, msg: "expected an operand".into() }),
        }
    }

    fn parse_args(&mut self) -> Result<Vec<Expr>, BoolFnError> {
        self.expect(Tok::LParen, "expected '('")?;
        let mut args = Vec::new();
        loop {
            if let (Tok::Input(a), Tok::Range) = (self.peek().clone(), &self.toks[self.at + 1].1) {
                self.bump();
                self.bump();
                let pos = self.pos();
                match self.bump() {
                    Tok::Input(b) if b >= a => args.extend((a..=b).map(Expr::Input)),
                    _ => return Err(BoolFnError::Syntax { pos, msg: "bad range end".into() }),
                }
            } else {
                args.push(self.parse_or()?);
            }
            match self.bump() {
                Tok::Comma => continue,
                Tok::RParen => break,
                _ => {
                    self.at -= 1;
                    return self.err("expected ',' or ')'");
                }
            }
        }
        Ok(args)
    }
}

/// Parse the expression language, e.g. `union(P0..P24) - union(P25..P49)`.
pub fn parse_expr(text: &str) -> Result<BoolFn, BoolFnError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let e = p.parse_or()?;
    if *p.peek() != Tok::End {
        return p.err("unexpected trailing input");
    }
    let arity = e.max_input().map(|i| i + 1).ok_or(BoolFnError::Syntax { pos: 0, msg: "no inputs".into() })?;
    BoolFn::new(arity, e)
}

/// `f` over the inputs of `g` shifted past `f`'s inputs; used to combine sub-functions.
pub fn combine(op: fn(Vec<Expr>) -> Expr, f: &BoolFn, g: &BoolFn) -> BoolFn {
    let e = op(vec![f.expr.clone(), g.expr.shifted(f.arity)]);
    BoolFn::new(f.arity + g.arity, e).expect("disjoint inputs")
}
