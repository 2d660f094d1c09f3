//! Dense discrete factors.
//!
//! Tables are laid out row-major over the scope: the first scope variable is
//! the most significant index, the last varies fastest.

use super::{BnError, VarId};

/// Where a factor came from. Only informational; arithmetic ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Cpt,
    Evidence,
    VirtualEvidence,
    PredicateBacked,
    /// Product or marginal produced during elimination.
    Potential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
    kind: FactorKind,
}

impl Factor {
    pub fn new(
        scope: Vec<VarId>,
        cards: Vec<usize>,
        values: Vec<f64>,
        kind: FactorKind,
    ) -> Result<Self, BnError> {
        if scope.len() != cards.len() {
            return Err(BnError::Structural(format!(
                "scope has {} variables but {} cardinalities",
                scope.len(),
                cards.len()
            )));
        }
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(BnError::Structural(format!("variable {v} repeated in scope")));
            }
        }
        if cards.iter().any(|&c| c == 0) {
            return Err(BnError::Structural("zero cardinality in scope".into()));
        }
        let expected: usize = cards.iter().product();
        if expected != values.len() {
            return Err(BnError::Structural(format!(
                "table has {} entries, scope requires {expected}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(BnError::Structural(format!("invalid table entry {bad}")));
        }
        Ok(Self { scope, cards, values, kind })
    }

    /// Scalar factor with no scope.
    pub fn scalar(value: f64) -> Self {
        Self { scope: Vec::new(), cards: Vec::new(), values: vec![value], kind: FactorKind::Potential }
    }

    pub fn unary(var: VarId, values: Vec<f64>, kind: FactorKind) -> Result<Self, BnError> {
        let card = values.len();
        Self::new(vec![var], vec![card], values, kind)
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.scope.contains(&var)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Value at a full assignment given in scope order.
    pub fn value_at(&self, assignment: &[usize]) -> f64 {
        debug_assert_eq!(assignment.len(), self.scope.len());
        let mut idx = 0;
        for (a, c) in assignment.iter().zip(&self.cards) {
            idx = idx * c + a;
        }
        self.values[idx]
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.cards.len()];
        for i in (0..self.cards.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    /// Stride of each `target` variable inside this factor (0 when absent).
    fn strides_for(&self, target: &[VarId]) -> Vec<usize> {
        let own = self.strides();
        target
            .iter()
            .map(|v| self.scope.iter().position(|s| s == v).map_or(0, |p| own[p]))
            .collect()
    }

    pub fn product(&self, other: &Factor) -> Result<Factor, BnError> {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (v, &c) in other.scope.iter().zip(&other.cards) {
            match scope.iter().position(|s| s == v) {
                Some(p) if cards[p] != c => {
                    return Err(BnError::CardinalityMismatch { var: *v, left: cards[p], right: c })
                }
                Some(_) => {}
                None => {
                    scope.push(*v);
                    cards.push(c);
                }
            }
        }
        let sa = self.strides_for(&scope);
        let sb = other.strides_for(&scope);
        let n: usize = cards.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut assign = vec![0usize; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..n {
            values.push(self.values[ia] * other.values[ib]);
            for d in (0..scope.len()).rev() {
                assign[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if assign[d] < cards[d] {
                    break;
                }
                ia -= sa[d] * cards[d];
                ib -= sb[d] * cards[d];
                assign[d] = 0;
            }
        }
        Ok(Factor { scope, cards, values, kind: FactorKind::Potential })
    }

    /// Sums `var` out of the factor.
    pub fn marginalize(&self, var: VarId) -> Result<Factor, BnError> {
        let pos = self
            .scope
            .iter()
            .position(|&v| v == var)
            .ok_or(BnError::NotInScope(var))?;
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let out_len: usize = cards.iter().product();
        let mut out = vec![0.0; out_len];
        // Strides of the output expressed over the input scope.
        let mut out_strides = vec![0usize; self.scope.len()];
        let mut acc = 1;
        for d in (0..self.scope.len()).rev() {
            if d != pos {
                out_strides[d] = acc;
                acc *= self.cards[d];
            }
        }
        let mut assign = vec![0usize; self.scope.len()];
        let mut io = 0usize;
        for &v in &self.values {
            out[io] += v;
            for d in (0..self.scope.len()).rev() {
                assign[d] += 1;
                io += out_strides[d];
                if assign[d] < self.cards[d] {
                    break;
                }
                io -= out_strides[d] * self.cards[d];
                assign[d] = 0;
            }
        }
        Ok(Factor { scope, cards, values: out, kind: FactorKind::Potential })
    }

    /// Fixes `var` to `state`, dropping it from the scope.
    pub fn restrict(&self, var: VarId, state: usize) -> Result<Factor, BnError> {
        let pos = self
            .scope
            .iter()
            .position(|&v| v == var)
            .ok_or(BnError::NotInScope(var))?;
        if state >= self.cards[pos] {
            return Err(BnError::StateOutOfRange { var, state, cardinality: self.cards[pos] });
        }
        let strides = self.strides();
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let out_len: usize = cards.iter().product();
        let mut values = Vec::with_capacity(out_len);
        let block = strides[pos];
        let span = block * self.cards[pos];
        for o in 0..self.values.len() / span {
            let start = o * span + state * block;
            values.extend_from_slice(&self.values[start..start + block]);
        }
        Ok(Factor { scope, cards, values, kind: self.kind })
    }

    /// True when the table does not change as `var` varies.
    pub fn is_constant_along(&self, var: VarId) -> bool {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else { return true };
        let block = self.strides()[pos];
        let span = block * self.cards[pos];
        self.values.chunks(span).all(|chunk| {
            let first = &chunk[..block];
            chunk.chunks(block).skip(1).all(|c| c == first)
        })
    }

    /// Sums out everything except `var`.
    pub fn marginal(&self, var: VarId) -> Result<Vec<f64>, BnError> {
        let pos = self.scope.iter().position(|&v| v == var).ok_or(BnError::NotInScope(var))?;
        let block = self.strides()[pos];
        let card = self.cards[pos];
        let mut out = vec![0.0; card];
        for (i, v) in self.values.iter().enumerate() {
            out[(i / block) % card] += v;
        }
        Ok(out)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn scale_by(&mut self, k: f64) {
        self.values.iter_mut().for_each(|v| *v *= k);
    }

    /// Normalized copy; `None` when the total mass is zero.
    pub fn normalized(&self) -> Option<Factor> {
        let total = self.sum();
        if total <= 0.0 {
            return None;
        }
        let values = self.values.iter().map(|v| v / total).collect();
        Some(Factor { values, ..self.clone() })
    }
}
