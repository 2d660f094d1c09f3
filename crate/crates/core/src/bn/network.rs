use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use super::{BnError, Factor, FactorKind, VarId};

/// Deterministic CPT rule: parent states (in parent order) to child state.
pub type Rule = Arc<dyn Fn(&[usize]) -> usize + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub labels: Vec<String>,
}

impl Variable {
    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }
}

/// Conditional distribution of a variable given its parents.
#[derive(Clone)]
pub enum Cpt {
    /// Dense table over `parents ++ [child]`, child fastest. Each child
    /// slice sums to one.
    Table { parents: Vec<VarId>, values: Vec<f64> },
    /// Deterministic CPT generated on demand from a rule.
    Deterministic { parents: Vec<VarId>, rule: Rule },
}

impl fmt::Debug for Cpt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cpt::Table { parents, values } => f
                .debug_struct("Table")
                .field("parents", parents)
                .field("len", &values.len())
                .finish(),
            Cpt::Deterministic { parents, .. } => {
                f.debug_struct("Deterministic").field("parents", parents).finish()
            }
        }
    }
}

impl Cpt {
    pub fn parents(&self) -> &[VarId] {
        match self {
            Cpt::Table { parents, .. } | Cpt::Deterministic { parents, .. } => parents,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Cpt::Deterministic { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Hard(usize),
    Likelihood(Vec<f64>),
}

#[derive(Debug, Clone, Default)]
pub struct Network {
    vars: Vec<Variable>,
    cpts: Vec<Cpt>,
    index: HashMap<String, VarId>,
    evidence: BTreeMap<VarId, Evidence>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.vars[id.0].labels.len()
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id.0]
    }

    pub fn id(&self, name: &str) -> Result<VarId, BnError> {
        self.index.get(name).copied().ok_or_else(|| BnError::UnknownVariable(name.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len()).map(VarId)
    }

    pub fn evidence(&self) -> &BTreeMap<VarId, Evidence> {
        &self.evidence
    }

    fn check_labels(name: &str, labels: &[String]) -> Result<(), BnError> {
        if labels.len() < 2 {
            return Err(BnError::Structural(format!("`{name}` needs at least two states")));
        }
        Ok(())
    }

    fn check_parents(&self, parents: &[VarId]) -> Result<(), BnError> {
        for (i, p) in parents.iter().enumerate() {
            if p.0 >= self.vars.len() {
                return Err(BnError::Structural(format!("parent {p} does not exist yet")));
            }
            if parents[..i].contains(p) {
                return Err(BnError::Structural(format!("parent {p} listed twice")));
            }
        }
        Ok(())
    }

    fn validate_table(
        &self,
        name: &str,
        parents: &[VarId],
        card: usize,
        values: &[f64],
    ) -> Result<(), BnError> {
        let rows: usize = parents.iter().map(|&p| self.cardinality(p)).product();
        if values.len() != rows * card {
            return Err(BnError::Structural(format!(
                "CPT of `{name}` has {} entries, expected {}",
                values.len(),
                rows * card
            )));
        }
        for row in values.chunks(card) {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(BnError::Structural(format!("CPT of `{name}` has invalid entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(BnError::Structural(format!(
                    "CPT row of `{name}` sums to {s}, expected 1"
                )));
            }
        }
        Ok(())
    }

    fn push(&mut self, name: &str, labels: Vec<String>, cpt: Cpt) -> Result<VarId, BnError> {
        if self.index.contains_key(name) {
            return Err(BnError::Structural(format!("duplicate variable `{name}`")));
        }
        let id = VarId(self.vars.len());
        self.vars.push(Variable { name: name.to_string(), labels });
        self.cpts.push(cpt);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Adds a variable with a dense CPT (`values` laid out parents-major,
    /// child fastest).
    pub fn add_table(
        &mut self,
        name: &str,
        labels: &[&str],
        parents: &[VarId],
        values: Vec<f64>,
    ) -> Result<VarId, BnError> {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        Self::check_labels(name, &labels)?;
        self.check_parents(parents)?;
        self.validate_table(name, parents, labels.len(), &values)?;
        self.push(name, labels, Cpt::Table { parents: parents.to_vec(), values })
    }

    /// Adds a variable whose state is a deterministic function of its parents.
    pub fn add_deterministic(
        &mut self,
        name: &str,
        labels: &[&str],
        parents: &[VarId],
        rule: Rule,
    ) -> Result<VarId, BnError> {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        Self::check_labels(name, &labels)?;
        self.check_parents(parents)?;
        self.push(name, labels, Cpt::Deterministic { parents: parents.to_vec(), rule })
    }

    /// Replaces the CPT of a root variable with a new prior.
    pub fn set_prior(&mut self, var: VarId, prior: Vec<f64>) -> Result<(), BnError> {
        if !self.cpts[var.0].parents().is_empty() {
            return Err(BnError::Structural(format!(
                "`{}` is not a root",
                self.vars[var.0].name
            )));
        }
        let name = self.vars[var.0].name.clone();
        self.validate_table(&name, &[], self.cardinality(var), &prior)?;
        self.cpts[var.0] = Cpt::Table { parents: Vec::new(), values: prior };
        Ok(())
    }

    pub fn set_evidence(&mut self, var: VarId, state: usize) -> Result<(), BnError> {
        let card = self.cardinality(var);
        if state >= card {
            return Err(BnError::StateOutOfRange { var, state, cardinality: card });
        }
        self.evidence.insert(var, Evidence::Hard(state));
        Ok(())
    }

    pub fn set_virtual_evidence(&mut self, var: VarId, likelihood: Vec<f64>) -> Result<(), BnError> {
        let card = self.cardinality(var);
        if likelihood.len() != card {
            return Err(BnError::InvalidEvidence(format!(
                "likelihood has {} entries, `{}` has {card} states",
                likelihood.len(),
                self.vars[var.0].name
            )));
        }
        if likelihood.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(BnError::InvalidEvidence("likelihood entries must be finite and >= 0".into()));
        }
        if likelihood.iter().all(|&v| v == 0.0) {
            return Err(BnError::InvalidEvidence(format!(
                "all-zero likelihood for `{}`",
                self.vars[var.0].name
            )));
        }
        self.evidence.insert(var, Evidence::Likelihood(likelihood));
        Ok(())
    }

    pub fn clear_evidence(&mut self, var: VarId) {
        self.evidence.remove(&var);
    }

    pub fn clear_all_evidence(&mut self) {
        self.evidence.clear();
    }

    /// P(var = state | parents = parent_states), straight from the CPT.
    pub fn conditional(&self, var: VarId, parent_states: &[usize], state: usize) -> f64 {
        match &self.cpts[var.0] {
            Cpt::Table { values, .. } => {
                let card = self.cardinality(var);
                let parents = self.cpts[var.0].parents();
                let mut row = 0;
                for (p, s) in parents.iter().zip(parent_states) {
                    row = row * self.cardinality(*p) + s;
                }
                values[row * card + state]
            }
            Cpt::Deterministic { rule, .. } => {
                if rule(parent_states) == state {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// The CPT of `var` as a factor over `parents ++ [var]`, with every
    /// variable in `known` fixed and dropped from the scope.
    pub fn cpt_factor(&self, var: VarId, known: &HashMap<VarId, usize>) -> Factor {
        let cpt = &self.cpts[var.0];
        let mut family: Vec<VarId> = cpt.parents().to_vec();
        family.push(var);
        let free: Vec<VarId> = family.iter().copied().filter(|v| !known.contains_key(v)).collect();
        let cards: Vec<usize> = free.iter().map(|&v| self.cardinality(v)).collect();
        let n: usize = cards.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut full: Vec<usize> = family.iter().map(|v| known.get(v).copied().unwrap_or(0)).collect();
        let free_pos: Vec<usize> =
            free.iter().map(|v| family.iter().position(|f| f == v).unwrap()).collect();
        let mut assign = vec![0usize; free.len()];
        let n_par = family.len() - 1;
        for _ in 0..n {
            for (k, &p) in free_pos.iter().enumerate() {
                full[p] = assign[k];
            }
            values.push(self.conditional(var, &full[..n_par], full[n_par]));
            for d in (0..free.len()).rev() {
                assign[d] += 1;
                if assign[d] < cards[d] {
                    break;
                }
                assign[d] = 0;
            }
        }
        let kind = if cpt.is_deterministic() { FactorKind::PredicateBacked } else { FactorKind::Cpt };
        Factor::new(free, cards, values, kind).expect("CPT factor shape is consistent")
    }

    /// Removes every variable with id >= `len`, along with its evidence.
    pub fn truncate(&mut self, len: usize) {
        for v in self.vars.drain(len..) {
            self.index.remove(&v.name);
        }
        self.cpts.truncate(len);
        self.evidence.retain(|k, _| k.0 < len);
    }

    /// Children lists for every variable.
    pub fn children(&self) -> Vec<Vec<VarId>> {
        let mut ch = vec![Vec::new(); self.vars.len()];
        for (i, cpt) in self.cpts.iter().enumerate() {
            for p in cpt.parents() {
                ch[p.0].push(VarId(i));
            }
        }
        ch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_cpt_rows() {
        let mut net = Network::new();
        assert!(net.add_table("x", &["a", "b"], &[], vec![0.3, 0.6]).is_err());
        assert!(net.add_table("x", &["a"], &[], vec![1.0]).is_err());
        let x = net.add_table("x", &["a", "b"], &[], vec![0.3, 0.7]).unwrap();
        assert!(net.add_table("x", &["a", "b"], &[], vec![0.3, 0.7]).is_err());
        assert!(net.add_table("y", &["a", "b"], &[VarId(5)], vec![0.5; 4]).is_err());
        assert!(net.add_table("y", &["a", "b"], &[x], vec![0.5; 4]).is_ok());
    }

    #[test]
    fn evidence_validation() {
        let mut net = Network::new();
        let x = net.add_table("x", &["a", "b"], &[], vec![0.3, 0.7]).unwrap();
        assert!(matches!(net.set_evidence(x, 2), Err(BnError::StateOutOfRange { .. })));
        assert!(matches!(
            net.set_virtual_evidence(x, vec![0.0, 0.0]),
            Err(BnError::InvalidEvidence(_))
        ));
        assert!(net.set_virtual_evidence(x, vec![0.0, 1.0, 1.0]).is_err());
        net.set_evidence(x, 0).unwrap();
        net.set_evidence(x, 1).unwrap();
        assert_eq!(net.evidence().get(&x), Some(&Evidence::Hard(1)));
    }

    #[test]
    fn deterministic_factor_is_one_hot() {
        let mut net = Network::new();
        let a = net.add_table("a", &["f", "t"], &[], vec![0.5, 0.5]).unwrap();
        let b = net.add_table("b", &["f", "t"], &[], vec![0.5, 0.5]).unwrap();
        let and = net
            .add_deterministic("and", &["f", "t"], &[a, b], Arc::new(|s| s[0] & s[1]))
            .unwrap();
        let f = net.cpt_factor(and, &HashMap::new());
        assert_eq!(f.kind(), FactorKind::PredicateBacked);
        for row in f.values().chunks(2) {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
            assert!(row.iter().all(|&v| v == 0.0 || v == 1.0));
        }
        let known: HashMap<VarId, usize> = [(a, 1)].into_iter().collect();
        let r = net.cpt_factor(and, &known);
        assert_eq!(r.scope(), &[b, and]);
        assert_eq!(r.values(), &[1.0, 0.0, 0.0, 1.0]);
    }
}
