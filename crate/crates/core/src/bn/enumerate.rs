use super::{BnError, Distribution, Evidence, Network, VarId};

pub const DEFAULT_ENUMERATION_CAP: f64 = 1e7;

/// Marginal of `query` by summing the full joint distribution.
///
/// Reads CPT entries one at a time through [`Network::conditional`], so it
/// shares no code with factor arithmetic or elimination. Only suitable for
/// small networks; `cap` bounds the joint state space.
pub fn joint_enumerate_oracle(
    net: &Network,
    query: VarId,
    cap: f64,
) -> Result<Distribution, BnError> {
    let cards: Vec<usize> = net.ids().map(|v| net.cardinality(v)).collect();
    let size: f64 = cards.iter().map(|&c| c as f64).product();
    if size > cap {
        return Err(BnError::EnumerationCap { size, cap });
    }
    let parents: Vec<Vec<usize>> =
        net.ids().map(|v| net.cpt(v).parents().iter().map(|p| p.0).collect()).collect();
    let evidence: Vec<Option<&Evidence>> = net.ids().map(|v| net.evidence().get(&v)).collect();

    let n = cards.len();
    let mut acc = vec![0.0; net.cardinality(query)];
    let mut assign = vec![0usize; n];
    let mut parent_states = Vec::new();
    'outer: loop {
        let mut weight = 1.0;
        for v in 0..n {
            match evidence[v] {
                Some(Evidence::Hard(s)) if *s != assign[v] => {
                    weight = 0.0;
                    break;
                }
                Some(Evidence::Likelihood(l)) => weight *= l[assign[v]],
                _ => {}
            }
            parent_states.clear();
            parent_states.extend(parents[v].iter().map(|&p| assign[p]));
            weight *= net.conditional(VarId(v), &parent_states, assign[v]);
            if weight == 0.0 {
                break;
            }
        }
        acc[assign[query.0]] += weight;

        for d in (0..n).rev() {
            assign[d] += 1;
            if assign[d] < cards[d] {
                continue 'outer;
            }
            assign[d] = 0;
        }
        break;
    }
    let total: f64 = acc.iter().sum();
    if total <= 0.0 {
        return Err(BnError::Contradiction("joint enumeration found zero mass".into()));
    }
    Ok(Distribution {
        var: query,
        name: net.variable(query).name.clone(),
        probabilities: acc.into_iter().map(|a| a / total).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_returns_prior() {
        let mut net = Network::new();
        let x = net.add_table("x", &["a", "b", "c"], &[], vec![0.2, 0.3, 0.5]).unwrap();
        let d = joint_enumerate_oracle(&net, x, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(d.probabilities, vec![0.2, 0.3, 0.5]);
    }

    #[test]
    fn cap_is_enforced() {
        let mut net = Network::new();
        let x = net.add_table("x", &["a", "b"], &[], vec![0.5, 0.5]).unwrap();
        net.add_table("y", &["a", "b"], &[], vec![0.5, 0.5]).unwrap();
        assert!(matches!(joint_enumerate_oracle(&net, x, 3.0), Err(BnError::EnumerationCap { .. })));
    }
}
