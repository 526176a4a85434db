use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::transactions::Transaction;
use super::MiningError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequentItemset {
    pub items: Vec<String>,
    pub count: u64,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    /// Fraction of transactions holding antecedent and consequent together.
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RuleMining {
    pub transactions: usize,
    pub itemsets: Vec<FrequentItemset>,
    pub rules: Vec<AssociationRule>,
}

fn check_fraction(name: &str, v: f64) -> Result<(), MiningError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(MiningError::Threshold(format!("{name} must lie in (0, 1], got {v}")))
    }
}

/// Level-wise frequent itemsets: an itemset is frequent when
/// `count / n >= min_support`.
pub fn frequent_itemsets(transactions: &[Transaction], min_support: f64) -> Result<Vec<FrequentItemset>, MiningError> {
    check_fraction("min_support", min_support)?;
    Ok(Apriori::run(transactions, min_support).itemsets())
}

/// All rules `A → C` over frequent itemsets meeting both thresholds, ordered
/// by support, then confidence (both descending), then items.
pub fn mine_association_rules(
    transactions: &[Transaction],
    min_support: f64,
    min_confidence: f64,
) -> Result<Vec<AssociationRule>, MiningError> {
    Ok(mine(transactions, min_support, min_confidence)?.rules)
}

/// Itemsets and rules in one pass.
pub fn mine(transactions: &[Transaction], min_support: f64, min_confidence: f64) -> Result<RuleMining, MiningError> {
    check_fraction("min_support", min_support)?;
    check_fraction("min_confidence", min_confidence)?;
    let run = Apriori::run(transactions, min_support);
    let rules = run.rules(min_confidence);
    Ok(RuleMining { transactions: transactions.len(), itemsets: run.itemsets(), rules })
}

struct Apriori {
    n: usize,
    items: Vec<String>,
    /// Frequent itemsets as sorted item ids, with their counts.
    counts: HashMap<Vec<u32>, u64>,
}

impl Apriori {
    fn run(transactions: &[Transaction], min_support: f64) -> Self {
        let n = transactions.len();
        let items: Vec<String> =
            transactions.iter().flat_map(|t| t.items.iter()).collect::<BTreeSet<_>>().into_iter().cloned().collect();
        let ids: BTreeMap<&str, u32> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
        let encoded: Vec<Vec<u32>> =
            transactions.iter().map(|t| t.items.iter().map(|s| ids[s.as_str()]).collect()).collect();
        let frequent = |count: u64| n > 0 && count as f64 / n as f64 >= min_support;

        let mut counts = HashMap::new();
        let mut singles = vec![0u64; items.len()];
        for t in &encoded {
            for &i in t {
                singles[i as usize] += 1;
            }
        }
        let mut level: Vec<Vec<u32>> = (0..items.len() as u32)
            .filter(|&i| frequent(singles[i as usize]))
            .map(|i| vec![i])
            .collect();
        for set in &level {
            counts.insert(set.clone(), singles[set[0] as usize]);
        }

        while !level.is_empty() {
            let candidates = join_and_prune(&level, &counts);
            let mut tallies = vec![0u64; candidates.len()];
            for t in &encoded {
                for (c, tally) in candidates.iter().zip(tallies.iter_mut()) {
                    if is_subset(c, t) {
                        *tally += 1;
                    }
                }
            }
            level = Vec::new();
            for (c, tally) in candidates.into_iter().zip(tallies) {
                if frequent(tally) {
                    counts.insert(c.clone(), tally);
                    level.push(c);
                }
            }
        }
        Self { n, items, counts }
    }

    fn names(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.items[i as usize].clone()).collect()
    }

    fn support(&self, count: u64) -> f64 {
        count as f64 / self.n as f64
    }

    fn itemsets(&self) -> Vec<FrequentItemset> {
        let mut out: Vec<FrequentItemset> = self
            .counts
            .iter()
            .map(|(ids, &count)| FrequentItemset { items: self.names(ids), count, support: self.support(count) })
            .collect();
        out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.items.cmp(&b.items)));
        out
    }

    fn rules(&self, min_confidence: f64) -> Vec<AssociationRule> {
        let mut out = Vec::new();
        for (set, &count) in self.counts.iter().filter(|(s, _)| s.len() >= 2) {
            let k = set.len();
            for mask in 1..(1u64 << k) - 1 {
                let (antecedent, consequent): (Vec<(usize, u32)>, Vec<(usize, u32)>) =
                    set.iter().copied().enumerate().partition(|(i, _)| mask & (1 << i) != 0);
                let antecedent: Vec<u32> = antecedent.into_iter().map(|(_, id)| id).collect();
                let consequent: Vec<u32> = consequent.into_iter().map(|(_, id)| id).collect();
                let confidence = count as f64 / self.counts[&antecedent] as f64;
                if confidence < min_confidence {
                    continue;
                }
                let support = self.support(count);
                out.push(AssociationRule {
                    antecedent: self.names(&antecedent),
                    consequent: self.names(&consequent),
                    support,
                    confidence,
                    lift: confidence / self.support(self.counts[&consequent]),
                });
            }
        }
        out.sort_by(rule_order);
        out
    }
}

fn rule_order(a: &AssociationRule, b: &AssociationRule) -> Ordering {
    b.support
        .total_cmp(&a.support)
        .then_with(|| b.confidence.total_cmp(&a.confidence))
        .then_with(|| a.antecedent.cmp(&b.antecedent))
        .then_with(|| a.consequent.cmp(&b.consequent))
}

/// Join itemsets sharing all but their last item, keeping candidates whose
/// every one-smaller subset is frequent.
fn join_and_prune(level: &[Vec<u32>], frequent: &HashMap<Vec<u32>, u64>) -> Vec<Vec<u32>> {
    let mut sorted = level.to_vec();
    sorted.sort();
    let mut out = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        let k = a.len();
        for b in &sorted[i + 1..] {
            if a[..k - 1] != b[..k - 1] {
                break;
            }
            let mut c = a.clone();
            c.push(b[k - 1]);
            let all_frequent = (0..c.len()).all(|skip| {
                let sub: Vec<u32> =
                    c.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &x)| x).collect();
                frequent.contains_key(&sub)
            });
            if all_frequent {
                out.push(c);
            }
        }
    }
    out
}

/// Both slices sorted ascending.
fn is_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.by_ref().any(|b| b == s))
}
