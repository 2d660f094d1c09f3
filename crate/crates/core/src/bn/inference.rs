use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{BnError, Cpt, Distribution, Evidence, Factor, FactorKind, Network, VarId};

/// Variable elimination ordering strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum EliminationOrder {
    /// Greedy min-fill, ties broken by the lowest variable id.
    MinFill,
    /// Explicit order. Variables missing from the list are eliminated
    /// afterwards in id order; listed variables that are not present are
    /// ignored.
    Sequence(Vec<VarId>),
}

/// Largest joint table built over the queried variables of one component.
/// Queries that do not fit get their own elimination pass.
const JOINT_CAP: usize = 1 << 20;
/// Largest number of unknown-parent assignments enumerated when propagating
/// through a deterministic node.
const PROPAGATION_CAP: usize = 1 << 14;
/// Largest number of cutset assignments enumerated.
pub const CUTSET_CAP: usize = 1 << 12;

/// Evidence folded into the network: the remaining factors only range over
/// variables whose value is still unknown.
struct Reduced {
    known: HashMap<VarId, usize>,
    factors: Vec<Factor>,
    /// Natural log of the constants absorbed while reducing.
    log_scale: f64,
}

/// Result of one exact pass: log evidence mass and normalized marginals.
struct Pass {
    log_mass: f64,
    marginals: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, PartialEq)]
enum Agree {
    Unset,
    Value(usize),
    Conflict,
}

impl Network {
    fn hard_evidence(&self) -> HashMap<VarId, usize> {
        self.evidence()
            .iter()
            .filter_map(|(v, e)| match e {
                Evidence::Hard(s) => Some((*v, *s)),
                Evidence::Likelihood(_) => None,
            })
            .collect()
    }

    /// Deduces values through deterministic nodes, forwards from parents and
    /// backwards from observed children. Returns the nodes whose CPT factor
    /// is identically one under the deduced values.
    fn propagate_determinism(&self, known: &mut HashMap<VarId, usize>) -> Result<Vec<bool>, BnError> {
        let children = self.children();
        let mut resolved = vec![false; self.len()];
        let mut queued = vec![true; self.len()];
        let mut queue: Vec<VarId> = self.ids().collect();
        queue.reverse();
        while let Some(var) = queue.pop() {
            queued[var.0] = false;
            if resolved[var.0] {
                continue;
            }
            let Cpt::Deterministic { parents, rule } = self.cpt(var) else { continue };
            let free: Vec<usize> = (0..parents.len()).filter(|&k| !known.contains_key(&parents[k])).collect();
            let cards: Vec<usize> = free.iter().map(|&k| self.cardinality(parents[k])).collect();
            let total = cards.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c).filter(|&n| n <= PROPAGATION_CAP));
            let Some(total) = total else { continue };
            let observed = known.get(&var).copied();
            let mut states: Vec<usize> = parents.iter().map(|p| known.get(p).copied().unwrap_or(0)).collect();
            let mut assign = vec![0usize; free.len()];
            let mut first = None;
            let mut constant = true;
            let mut consistent = 0usize;
            let mut agree = vec![Agree::Unset; free.len()];
            for _ in 0..total {
                for (k, &pos) in free.iter().enumerate() {
                    states[pos] = assign[k];
                }
                let out = rule(&states);
                match first {
                    None => first = Some(out),
                    Some(f) if f != out => constant = false,
                    _ => {}
                }
                if observed == Some(out) {
                    consistent += 1;
                    for (k, a) in agree.iter_mut().enumerate() {
                        *a = match *a {
                            Agree::Unset => Agree::Value(assign[k]),
                            Agree::Value(v) if v == assign[k] => Agree::Value(v),
                            _ => Agree::Conflict,
                        };
                    }
                }
                for d in (0..free.len()).rev() {
                    assign[d] += 1;
                    if assign[d] < cards[d] {
                        break;
                    }
                    assign[d] = 0;
                }
            }
            let mut newly = Vec::new();
            match observed {
                None => {
                    if constant {
                        let value = first.expect("at least one assignment");
                        known.insert(var, value);
                        resolved[var.0] = true;
                        newly.push(var);
                    }
                }
                Some(obs) => {
                    if consistent == 0 {
                        let v = self.variable(var);
                        let msg = if free.is_empty() {
                            format!(
                                "`{}` is determined as `{}` by its parents but observed as `{}`",
                                v.name,
                                v.labels[first.expect("one assignment")],
                                v.labels[obs]
                            )
                        } else {
                            format!("no parent state of `{}` yields observed `{}`", v.name, v.labels[obs])
                        };
                        return Err(BnError::Contradiction(msg));
                    }
                    if consistent == total {
                        resolved[var.0] = true;
                    } else {
                        for (k, a) in agree.iter().enumerate() {
                            if let Agree::Value(s) = *a {
                                known.insert(parents[free[k]], s);
                                newly.push(parents[free[k]]);
                            }
                        }
                    }
                }
            }
            for v in newly {
                for w in std::iter::once(v).chain(children[v.0].iter().copied()) {
                    if !queued[w.0] && !resolved[w.0] {
                        queued[w.0] = true;
                        queue.push(w);
                    }
                }
            }
        }
        Ok(resolved)
    }

    fn relevant(&self, seeds: impl IntoIterator<Item = VarId>, resolved: &[bool]) -> Vec<bool> {
        let mut keep = vec![false; self.len()];
        let mut stack: Vec<VarId> = seeds.into_iter().collect();
        while let Some(v) = stack.pop() {
            if keep[v.0] || resolved[v.0] {
                continue;
            }
            keep[v.0] = true;
            stack.extend(self.cpt(v).parents().iter().copied());
        }
        keep
    }

    fn reduce(&self, queries: &[VarId], extra: &[(VarId, usize)]) -> Result<Reduced, BnError> {
        let mut known = self.hard_evidence();
        for &(v, s) in extra {
            if known.insert(v, s).is_some_and(|old| old != s) {
                return Err(BnError::Contradiction(format!(
                    "conditioning value for `{}` conflicts with its evidence",
                    self.variable(v).name
                )));
            }
        }
        let resolved = self.propagate_determinism(&mut known)?;
        let seeds = queries
            .iter()
            .copied()
            .chain(known.keys().copied())
            .chain(self.evidence().keys().copied());
        let keep = self.relevant(seeds, &resolved);
        let mut factors = Vec::new();
        let mut log_scale = 0.0;
        // Resolved variables carry no factor, but a likelihood on their
        // fixed state still scales the evidence mass.
        for (var, ev) in self.evidence() {
            if let (false, Some(&s), Evidence::Likelihood(lik)) = (keep[var.0], known.get(var), ev) {
                log_scale += lik[s].ln();
            }
        }
        let mut unknown = BTreeSet::new();
        for var in self.ids().filter(|v| keep[v.0]) {
            if !known.contains_key(&var) {
                unknown.insert(var);
            }
            let f = self.cpt_factor(var, &known);
            if f.scope().is_empty() {
                log_scale += f.values()[0].ln();
            } else {
                factors.push(simplify(f)?);
            }
            if let Some(Evidence::Likelihood(lik)) = self.evidence().get(&var) {
                match known.get(&var) {
                    Some(&s) => log_scale += lik[s].ln(),
                    None => factors.push(
                        Factor::unary(var, lik.clone(), FactorKind::VirtualEvidence)
                            .expect("likelihood validated on insertion"),
                    ),
                }
            }
        }
        if log_scale == f64::NEG_INFINITY {
            return Err(BnError::Contradiction(
                "observed states have zero probability under their CPTs".into(),
            ));
        }
        let mut free = unknown;
        for f in &factors {
            for v in f.scope() {
                free.remove(v);
            }
        }
        for v in &free {
            log_scale += (self.cardinality(*v) as f64).ln();
        }
        factors.retain(|f| !f.scope().is_empty() || {
            log_scale += f.values()[0].ln();
            false
        });
        Ok(Reduced { known, factors, log_scale })
    }

    fn exact_pass(
        &self,
        queries: &[VarId],
        extra: &[(VarId, usize)],
        order: &EliminationOrder,
    ) -> Result<Pass, BnError> {
        let reduced = self.reduce(queries, extra)?;
        let mut marginals: Vec<Vec<f64>> = Vec::with_capacity(queries.len());
        for &q in queries {
            let card = self.cardinality(q);
            marginals.push(match reduced.known.get(&q) {
                Some(&s) => {
                    let mut p = vec![0.0; card];
                    p[s] = 1.0;
                    p
                }
                None => vec![1.0 / card as f64; card],
            });
        }
        let mut log_mass = reduced.log_scale;
        for component in components(reduced.factors) {
            let vars: BTreeSet<VarId> = component.iter().flat_map(|f| f.scope().iter().copied()).collect();
            let local: Vec<usize> = (0..queries.len())
                .filter(|&i| vars.contains(&queries[i]) && !reduced.known.contains_key(&queries[i]))
                .collect();
            // Deterministic queries that are functions of earlier joint
            // queries are read off the joint table; the remaining leading
            // queries that fit under the cap share one joint pass.
            let mut size = 1usize;
            let mut joint_part = Vec::new();
            let mut functional = Vec::new();
            let mut single_part = Vec::new();
            for &i in &local {
                let q = queries[i];
                let keep: BTreeSet<VarId> = joint_part.iter().map(|&j| queries[j]).collect();
                if !keep.is_empty() && self.cpt(q).is_deterministic() && self.function_of(q, &keep, &reduced.known) {
                    functional.push(i);
                    continue;
                }
                match size.checked_mul(self.cardinality(q)).filter(|&n| n <= JOINT_CAP) {
                    Some(n) if single_part.is_empty() => {
                        size = n;
                        joint_part.push(i);
                    }
                    _ => single_part.push(i),
                }
            }
            let keep: BTreeSet<VarId> = joint_part.iter().map(|&i| queries[i]).collect();
            let (rest, log) = eliminate(component.clone(), &keep, order)?;
            let joint = multiply_all(rest)?;
            let mass = joint.sum();
            log_mass += log + mass.ln();
            if mass > 0.0 {
                for &i in &joint_part {
                    let m = joint.marginal(queries[i])?;
                    marginals[i] = m.iter().map(|x| x / mass).collect();
                }
                if !functional.is_empty() {
                    let targets: Vec<VarId> = functional.iter().map(|&i| queries[i]).collect();
                    let found = self.functional_marginals(&joint, &targets, &reduced.known);
                    for (&i, m) in functional.iter().zip(found) {
                        marginals[i] = m.iter().map(|x| x / mass).collect();
                    }
                }
                for &i in &single_part {
                    let single = BTreeSet::from([queries[i]]);
                    let (rest, _) = eliminate(component.clone(), &single, order)?;
                    let f = multiply_all(rest)?;
                    let total = f.sum();
                    marginals[i] = f.marginal(queries[i])?.iter().map(|x| x / total).collect();
                }
            }
        }
        Ok(Pass { log_mass, marginals })
    }

    /// True when `var` is fixed by `leaves` and known values through
    /// deterministic CPTs alone.
    fn function_of(&self, var: VarId, leaves: &BTreeSet<VarId>, known: &HashMap<VarId, usize>) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![var];
        while let Some(v) = stack.pop() {
            if known.contains_key(&v) || leaves.contains(&v) || !seen.insert(v) {
                continue;
            }
            match self.cpt(v) {
                Cpt::Deterministic { parents, .. } => stack.extend(parents.iter().copied()),
                Cpt::Table { .. } => return false,
            }
        }
        true
    }

    /// Unnormalized marginals of deterministic `targets` obtained by
    /// evaluating their rules on every entry of `joint`.
    fn functional_marginals(
        &self,
        joint: &Factor,
        targets: &[VarId],
        known: &HashMap<VarId, usize>,
    ) -> Vec<Vec<f64>> {
        enum Src {
            Known(usize),
            Leaf(usize),
            Node(usize),
        }
        struct Step<'a> {
            inputs: Vec<Src>,
            rule: &'a super::network::Rule,
            /// Highest joint axis this step depends on, if any.
            depth: Option<usize>,
        }
        fn compile<'a>(
            net: &'a Network,
            v: VarId,
            scope: &[VarId],
            known: &HashMap<VarId, usize>,
            memo: &mut HashMap<VarId, usize>,
            steps: &mut Vec<Step<'a>>,
        ) -> Src {
            if let Some(&s) = known.get(&v) {
                return Src::Known(s);
            }
            if let Some(p) = scope.iter().position(|&x| x == v) {
                return Src::Leaf(p);
            }
            if let Some(&k) = memo.get(&v) {
                return Src::Node(k);
            }
            let Cpt::Deterministic { parents, rule } = net.cpt(v) else {
                unreachable!("checked by function_of")
            };
            let inputs: Vec<Src> = parents.iter().map(|&p| compile(net, p, scope, known, memo, steps)).collect();
            let depth = inputs
                .iter()
                .filter_map(|s| match *s {
                    Src::Known(_) => None,
                    Src::Leaf(p) => Some(p),
                    Src::Node(k) => steps[k].depth,
                })
                .max();
            steps.push(Step { inputs, rule, depth });
            memo.insert(v, steps.len() - 1);
            Src::Node(steps.len() - 1)
        }
        let scope = joint.scope();
        let cards = joint.cards();
        let mut memo = HashMap::new();
        let mut steps = Vec::new();
        let outputs: Vec<Src> =
            targets.iter().map(|&t| compile(self, t, scope, known, &mut memo, &mut steps)).collect();
        let mut out: Vec<Vec<f64>> = targets.iter().map(|&t| vec![0.0; self.cardinality(t)]).collect();
        let mut assign = vec![0usize; scope.len()];
        let mut values = vec![0usize; steps.len()];
        let mut buf = Vec::new();
        // Steps are re-evaluated only when an axis they depend on changed.
        let mut first = true;
        let mut dirty = 0usize;
        for &w in joint.values() {
            if w > 0.0 {
                for k in 0..steps.len() {
                    let stale = match steps[k].depth {
                        Some(d) => d >= dirty,
                        None => first,
                    };
                    if stale {
                        buf.clear();
                        buf.extend(steps[k].inputs.iter().map(|s| match *s {
                            Src::Known(x) => x,
                            Src::Leaf(p) => assign[p],
                            Src::Node(j) => values[j],
                        }));
                        values[k] = (steps[k].rule)(&buf);
                    }
                }
                first = false;
                dirty = usize::MAX;
                for (acc, s) in out.iter_mut().zip(&outputs) {
                    let state = match *s {
                        Src::Known(x) => x,
                        Src::Leaf(p) => assign[p],
                        Src::Node(j) => values[j],
                    };
                    acc[state] += w;
                }
            }
            for d in (0..cards.len()).rev() {
                dirty = dirty.min(d);
                assign[d] += 1;
                if assign[d] < cards[d] {
                    break;
                }
                assign[d] = 0;
            }
        }
        out
    }

    fn distributions(&self, queries: &[VarId], marginals: Vec<Vec<f64>>) -> Vec<Distribution> {
        queries
            .iter()
            .zip(marginals)
            .map(|(&var, probabilities)| Distribution {
                var,
                name: self.variable(var).name.clone(),
                probabilities,
            })
            .collect()
    }

    fn zero_mass(&self, queries: &[VarId]) -> BnError {
        let names: Vec<&str> = queries.iter().map(|q| self.variable(*q).name.as_str()).collect();
        BnError::Contradiction(format!(
            "evidence has zero joint probability (while querying {})",
            names.join(", ")
        ))
    }

    /// Exact marginal of `query` given all evidence on the network.
    pub fn posterior(&self, query: VarId) -> Result<Distribution, BnError> {
        self.posterior_with_order(query, &EliminationOrder::MinFill)
    }

    pub fn posterior_with_order(
        &self,
        query: VarId,
        order: &EliminationOrder,
    ) -> Result<Distribution, BnError> {
        let pass = self.exact_pass(&[query], &[], order)?;
        if pass.log_mass == f64::NEG_INFINITY {
            return Err(self.zero_mass(&[query]));
        }
        Ok(self.distributions(&[query], pass.marginals).remove(0))
    }

    /// Marginals for several variables from one elimination pass per
    /// connected component.
    pub fn posteriors(&self, queries: &[VarId]) -> Result<Vec<Distribution>, BnError> {
        self.posteriors_conditioned(queries, &[])
    }

    /// Like [`Network::posteriors`], but sums over every joint state of
    /// `cutset` explicitly. Conditioning on a few widely shared variables
    /// can split the network into independent parts.
    pub fn posteriors_conditioned(
        &self,
        queries: &[VarId],
        cutset: &[VarId],
    ) -> Result<Vec<Distribution>, BnError> {
        for &q in queries.iter().chain(cutset) {
            if q.0 >= self.len() {
                return Err(BnError::UnknownVariable(q.to_string()));
            }
        }
        if cutset.is_empty() {
            let pass = self.exact_pass(queries, &[], &EliminationOrder::MinFill)?;
            if pass.log_mass == f64::NEG_INFINITY {
                return Err(self.zero_mass(queries));
            }
            return Ok(self.distributions(queries, pass.marginals));
        }
        let cards: Vec<usize> = cutset.iter().map(|&v| self.cardinality(v)).collect();
        let total: usize = cards.iter().product();
        if total > CUTSET_CAP {
            return Err(BnError::EnumerationCap { size: total as f64, cap: CUTSET_CAP as f64 });
        }
        let mut passes = Vec::new();
        let mut assign = vec![0usize; cutset.len()];
        for _ in 0..total {
            let extra: Vec<(VarId, usize)> = cutset.iter().copied().zip(assign.iter().copied()).collect();
            match self.exact_pass(queries, &extra, &EliminationOrder::MinFill) {
                Ok(p) if p.log_mass > f64::NEG_INFINITY => passes.push(p),
                Ok(_) | Err(BnError::Contradiction(_)) => {}
                Err(e) => return Err(e),
            }
            for d in (0..cutset.len()).rev() {
                assign[d] += 1;
                if assign[d] < cards[d] {
                    break;
                }
                assign[d] = 0;
            }
        }
        let Some(top) = passes.iter().map(|p| p.log_mass).reduce(f64::max) else {
            return Err(self.zero_mass(queries));
        };
        let mut out: Vec<Vec<f64>> = queries.iter().map(|&q| vec![0.0; self.cardinality(q)]).collect();
        let mut weight_sum = 0.0;
        for p in &passes {
            let w = (p.log_mass - top).exp();
            weight_sum += w;
            for (acc, m) in out.iter_mut().zip(&p.marginals) {
                for (a, x) in acc.iter_mut().zip(m) {
                    *a += w * x;
                }
            }
        }
        for acc in &mut out {
            acc.iter_mut().for_each(|a| *a /= weight_sum);
        }
        Ok(self.distributions(queries, out))
    }

    /// Probability of all hard and virtual evidence (likelihood-weighted).
    pub fn evidence_probability(&self) -> Result<f64, BnError> {
        self.log_evidence_probability().map(f64::exp)
    }

    /// Natural log of [`Network::evidence_probability`], which may
    /// underflow for large networks.
    pub fn log_evidence_probability(&self) -> Result<f64, BnError> {
        match self.exact_pass(&[], &[], &EliminationOrder::MinFill) {
            Ok(p) => Ok(p.log_mass),
            Err(BnError::Contradiction(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }
}

/// Drops every axis along which the factor is constant.
fn simplify(mut f: Factor) -> Result<Factor, BnError> {
    for v in f.scope().to_vec() {
        if f.scope().len() > 1 && f.is_constant_along(v) {
            f = f.restrict(v, 0)?;
        }
    }
    Ok(f)
}

/// Splits factors into groups with pairwise disjoint variable sets.
fn components(factors: Vec<Factor>) -> Vec<Vec<Factor>> {
    let mut parent: BTreeMap<VarId, VarId> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<VarId, VarId>, v: VarId) -> VarId {
        let p = *parent.entry(v).or_insert(v);
        if p == v {
            return v;
        }
        let root = find(parent, p);
        parent.insert(v, root);
        root
    }
    for f in &factors {
        let s = f.scope();
        let a = find(&mut parent, s[0]);
        for &v in &s[1..] {
            let b = find(&mut parent, v);
            if a != b {
                parent.insert(b, a);
            }
        }
    }
    let mut groups: BTreeMap<VarId, Vec<Factor>> = BTreeMap::new();
    for f in factors {
        let root = find(&mut parent, f.scope()[0]);
        groups.entry(root).or_default().push(f);
    }
    groups.into_values().collect()
}

/// Product of all factors. Factors whose scope is covered by another are
/// folded into it first, so the largest tables are only swept a few times.
fn multiply_all(mut factors: Vec<Factor>) -> Result<Factor, BnError> {
    factors.sort_by_key(|f| std::cmp::Reverse(f.len()));
    let mut merged: Vec<Factor> = Vec::with_capacity(factors.len());
    for f in factors {
        match merged.iter_mut().find(|m| f.scope().iter().all(|v| m.contains(*v))) {
            Some(m) => *m = m.product(&f)?,
            None => merged.push(f),
        }
    }
    merged.into_iter().rev().try_fold(Factor::scalar(1.0), |acc, f| acc.product(&f))
}

/// Adjacency of the interaction graph induced by factor scopes.
fn interaction_graph(factors: &[Factor]) -> BTreeMap<VarId, BTreeSet<VarId>> {
    let mut adj: BTreeMap<VarId, BTreeSet<VarId>> = BTreeMap::new();
    for f in factors {
        for &a in f.scope() {
            let entry = adj.entry(a).or_default();
            for &b in f.scope() {
                if a != b {
                    entry.insert(b);
                }
            }
        }
    }
    adj
}

fn fill_in(adj: &BTreeMap<VarId, BTreeSet<VarId>>, v: VarId) -> usize {
    let nb: Vec<VarId> = adj[&v].iter().copied().collect();
    let mut fill = 0;
    for i in 0..nb.len() {
        for j in i + 1..nb.len() {
            if !adj[&nb[i]].contains(&nb[j]) {
                fill += 1;
            }
        }
    }
    fill
}

/// Greedy min-fill order over every variable not in `keep`.
pub(crate) fn min_fill_order(factors: &[Factor], keep: &BTreeSet<VarId>) -> Vec<VarId> {
    let mut adj = interaction_graph(factors);
    let mut scores: BTreeMap<VarId, usize> =
        adj.keys().filter(|v| !keep.contains(v)).map(|&v| (v, fill_in(&adj, v))).collect();
    let mut order = Vec::with_capacity(scores.len());
    while let Some((&best, _)) = scores.iter().min_by_key(|(v, s)| (**s, **v)) {
        scores.remove(&best);
        let nb: Vec<VarId> = adj.remove(&best).unwrap_or_default().into_iter().collect();
        for &a in &nb {
            let set = adj.get_mut(&a).expect("neighbor present");
            set.remove(&best);
            for &b in &nb {
                if a != b {
                    set.insert(b);
                }
            }
        }
        // Fill scores change for the neighbors and their neighbors.
        let mut touched: BTreeSet<VarId> = nb.iter().copied().collect();
        for a in &nb {
            touched.extend(adj[a].iter().copied());
        }
        for t in touched {
            if let Some(s) = scores.get_mut(&t) {
                *s = fill_in(&adj, t);
            }
        }
        order.push(best);
    }
    order
}

/// Sum-product elimination of every variable not in `keep`. Returns the
/// remaining factors and the log of the scale divided out along the way.
fn eliminate(
    mut factors: Vec<Factor>,
    keep: &BTreeSet<VarId>,
    order: &EliminationOrder,
) -> Result<(Vec<Factor>, f64), BnError> {
    let sequence = match order {
        EliminationOrder::MinFill => min_fill_order(&factors, keep),
        EliminationOrder::Sequence(seq) => {
            let present: BTreeSet<VarId> =
                factors.iter().flat_map(|f| f.scope().iter().copied()).collect();
            let mut out: Vec<VarId> = seq
                .iter()
                .copied()
                .filter(|v| present.contains(v) && !keep.contains(v))
                .collect();
            let listed: BTreeSet<VarId> = out.iter().copied().collect();
            out.extend(present.into_iter().filter(|v| !listed.contains(v) && !keep.contains(v)));
            out
        }
    };
    let mut log = 0.0;
    for var in sequence {
        let (bucket, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.contains(var));
        factors = rest;
        if bucket.is_empty() {
            continue;
        }
        let mut it = bucket.into_iter();
        let first = it.next().expect("non-empty bucket");
        let product = it.try_fold(first, |acc, f| acc.product(&f))?;
        let mut reduced = product.marginalize(var)?;
        let top = reduced.max_value();
        if top > 0.0 && !(1e-100..=1e100).contains(&top) {
            reduced.scale_by(1.0 / top);
            log += top.ln();
        }
        factors.push(reduced);
    }
    Ok((factors, log))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn chain() -> (Network, VarId, VarId, VarId) {
        let mut net = Network::new();
        let x = net.add_table("x", &["0", "1"], &[], vec![0.3, 0.7]).unwrap();
        let y = net.add_table("y", &["0", "1"], &[x], vec![0.1, 0.9, 0.5, 0.5]).unwrap();
        let z = net.add_table("z", &["0", "1"], &[y], vec![0.8, 0.2, 0.25, 0.75]).unwrap();
        (net, x, y, z)
    }

    #[test]
    fn root_without_evidence_is_prior() {
        let (net, x, _, _) = chain();
        let p = net.posterior(x).unwrap();
        assert!((p.prob(0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn hard_evidence_on_self() {
        let (mut net, x, _, _) = chain();
        net.set_evidence(x, 0).unwrap();
        assert_eq!(net.posterior(x).unwrap().probabilities, vec![1.0, 0.0]);
    }

    #[test]
    fn leaf_evidence_updates_parent() {
        let mut net = Network::new();
        let x = net.add_table("x", &["0", "1"], &[], vec![0.3, 0.7]).unwrap();
        let y = net.add_table("y", &["0", "1"], &[x], vec![0.1, 0.9, 0.5, 0.5]).unwrap();
        net.set_evidence(y, 1).unwrap();
        // P(x=0 | y=1) = 0.3*0.9 / (0.27 + 0.35)
        let p = net.posterior(x).unwrap();
        assert!((p.prob(0) - 0.27 / 0.62).abs() < 1e-12);
    }

    #[test]
    fn chain_with_evidence_on_tail() {
        let (mut net, x, _, z) = chain();
        net.set_evidence(z, 1).unwrap();
        // P(z=1|x=0) = 0.1*0.2 + 0.9*0.75 = 0.695; P(z=1|x=1) = 0.5*0.2 + 0.5*0.75 = 0.475
        let num0 = 0.3 * 0.695;
        let num1 = 0.7 * 0.475;
        let p = net.posterior(x).unwrap();
        assert!((p.prob(0) - num0 / (num0 + num1)).abs() < 1e-12);
    }

    #[test]
    fn virtual_evidence_cases() {
        let mut net = Network::new();
        let x = net.add_table("x", &["0", "1"], &[], vec![0.5, 0.5]).unwrap();
        net.set_virtual_evidence(x, vec![0.2, 0.8]).unwrap();
        let p = net.posterior(x).unwrap();
        assert!((p.prob(1) - 0.8).abs() < 1e-12);

        let (mut net, x, _, z) = chain();
        let before = net.posterior(x).unwrap();
        net.set_virtual_evidence(z, vec![1.0, 1.0]).unwrap();
        let after = net.posterior(x).unwrap();
        for (a, b) in before.probabilities.iter().zip(&after.probabilities) {
            assert!((a - b).abs() < 1e-12);
        }

        let (mut hard, _, y, z) = chain();
        let (mut soft, _, _, _) = chain();
        hard.set_evidence(z, 0).unwrap();
        soft.set_virtual_evidence(z, vec![1.0, 0.0]).unwrap();
        let a = hard.posterior(y).unwrap();
        let b = soft.posterior(y).unwrap();
        assert!((a.prob(0) - b.prob(0)).abs() < 1e-12);
    }

    #[test]
    fn and_gate_marginal() {
        let mut net = Network::new();
        let a = net.add_table("a", &["f", "t"], &[], vec![0.4, 0.6]).unwrap();
        let b = net.add_table("b", &["f", "t"], &[], vec![0.7, 0.3]).unwrap();
        let out = net
            .add_deterministic("out", &["f", "t"], &[a, b], Arc::new(|s| s[0] & s[1]))
            .unwrap();
        assert!((net.posterior(out).unwrap().prob(1) - 0.18).abs() < 1e-12);
    }

    #[test]
    fn contradiction_is_reported() {
        let mut net = Network::new();
        let a = net.add_table("a", &["f", "t"], &[], vec![1.0, 0.0]).unwrap();
        let b = net.add_deterministic("b", &["f", "t"], &[a], Arc::new(|s| s[0])).unwrap();
        net.set_evidence(b, 1).unwrap();
        assert!(matches!(net.posterior(a), Err(BnError::Contradiction(_))));

        // Determined directly from evidence.
        let mut net = Network::new();
        let a = net.add_table("a", &["f", "t"], &[], vec![0.5, 0.5]).unwrap();
        let b = net.add_deterministic("b", &["f", "t"], &[a], Arc::new(|s| s[0])).unwrap();
        net.set_evidence(a, 0).unwrap();
        net.set_evidence(b, 1).unwrap();
        let err = net.posterior(a).unwrap_err();
        assert!(matches!(err, BnError::Contradiction(ref m) if m.contains("determined")));

        // Constant rule with a zero likelihood on its only value.
        let mut net = Network::new();
        let a = net.add_table("a", &["f", "t"], &[], vec![0.5, 0.5]).unwrap();
        let b = net.add_deterministic("b", &["f", "t"], &[a], Arc::new(|_| 1)).unwrap();
        net.set_virtual_evidence(b, vec![1.0, 0.0]).unwrap();
        assert!(matches!(net.posterior(a), Err(BnError::Contradiction(_))));
    }

    #[test]
    fn min_fill_prefers_leaves_then_low_ids() {
        // Star centered on 0: eliminating the center first would fill.
        let f = |a, b| {
            Factor::new(vec![VarId(a), VarId(b)], vec![2, 2], vec![1.0; 4], FactorKind::Cpt)
                .unwrap()
        };
        let factors = vec![f(0, 1), f(0, 2), f(0, 3)];
        let order = min_fill_order(&factors, &BTreeSet::new());
        assert_eq!(order, vec![VarId(1), VarId(2), VarId(0), VarId(3)]);
    }
}
