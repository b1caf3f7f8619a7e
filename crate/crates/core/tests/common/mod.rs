//! Random small networks and a brute-force joint-table oracle.
#![allow(dead_code, clippy::needless_range_loop)]

use bnrisk::model::{Cpt, DagStructure, Network, VariableKind, VariableSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random DAG with random CPTs. Declaration order is shuffled relative
/// to the generating topological order, and about one entry in ten is an
/// exact zero so impossible evidence occurs.
pub fn random_network(seed: u64, max_vars: usize, max_states: usize) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_vars);
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_states)).collect();
    // parents drawn from earlier nodes in generating order
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 1..n {
        for i in 0..j {
            if parents[j].len() < 3 && rng.random::<f64>() < 0.35 {
                parents[j].push(i);
            }
        }
    }
    let mut declared: Vec<usize> = (0..n).collect();
    declared.shuffle(&mut rng);
    let name = |i: usize| format!("V{i}");
    let variables: Vec<VariableSpec> = declared
        .iter()
        .map(|&i| {
            let states: Vec<String> = (0..cards[i]).map(|s| format!("s{s}")).collect();
            let refs: Vec<&str> = states.iter().map(String::as_str).collect();
            VariableSpec::new(name(i), &refs, VariableKind::Game)
        })
        .collect();
    let position = |i: usize| declared.iter().position(|&d| d == i).unwrap();
    let mut edges = Vec::new();
    let mut cpts = Vec::new();
    for j in 0..n {
        let mut pa = parents[j].clone();
        pa.sort_by_key(|&p| position(p));
        for &p in &pa {
            edges.push((name(p), name(j)));
        }
        let rows: usize = pa.iter().map(|&p| cards[p]).product();
        let table = (0..rows)
            .map(|_| {
                let mut row: Vec<f64> = (0..cards[j])
                    .map(|_| if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random::<f64>() + 0.01 })
                    .collect();
                if row.iter().all(|&x| x == 0.0) {
                    row[0] = 1.0;
                }
                let z: f64 = row.iter().sum();
                row.iter().map(|x| x / z).collect()
            })
            .collect();
        let names: Vec<String> = pa.iter().map(|&p| name(p)).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        cpts.push(Cpt::new(name(j), &refs, table));
    }
    let dag = DagStructure::new(variables.iter().map(|v| v.name.clone()).collect(), edges).unwrap();
    Network::new(variables, dag, cpts).unwrap()
}

/// The full joint distribution, indexed like the network's variables
/// (last variable fastest).
pub struct JointTable {
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

impl JointTable {
    pub fn of(network: &Network) -> Self {
        let cards: Vec<usize> = (0..network.len()).map(|i| network.cardinality(i)).collect();
        let size: usize = cards.iter().product();
        let mut state = vec![0usize; cards.len()];
        let mut values = Vec::with_capacity(size);
        for _ in 0..size {
            // chain rule straight off the CPT rows
            let mut p = 1.0;
            for i in 0..network.len() {
                let cpt = network.cpt(i);
                let mut row = 0;
                for pn in &cpt.parents {
                    let pi = network.index_of(pn).unwrap();
                    row = row * cards[pi] + state[pi];
                }
                p *= cpt.rows[row][state[i]];
            }
            values.push(p);
            for d in (0..cards.len()).rev() {
                state[d] += 1;
                if state[d] < cards[d] {
                    break;
                }
                state[d] = 0;
            }
        }
        JointTable { cards, values }
    }

    fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut state = vec![0usize; self.cards.len()];
        for &v in &self.values {
            f(&state, v);
            for d in (0..self.cards.len()).rev() {
                state[d] += 1;
                if state[d] < self.cards[d] {
                    break;
                }
                state[d] = 0;
            }
        }
    }

    pub fn probability(&self, evidence: &[(usize, usize)]) -> f64 {
        let mut total = 0.0;
        self.for_each(|s, v| {
            if evidence.iter().all(|&(i, x)| s[i] == x) {
                total += v;
            }
        });
        total
    }

    /// `None` when the evidence is impossible.
    pub fn posterior(&self, target: usize, evidence: &[(usize, usize)]) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.cards[target]];
        self.for_each(|s, v| {
            if evidence.iter().all(|&(i, x)| s[i] == x) {
                out[s[target]] += v;
            }
        });
        let z: f64 = out.iter().sum();
        (z > 0.0).then(|| out.iter().map(|x| x / z).collect())
    }
}

/// Exhaustive maximum of `P(target = ts | evidence)` over evidence sets of
/// `k` pool variables, with every set within `1e-12` of it (as sorted
/// (variable, state) index lists in pool order).
pub fn brute_force_max(
    joint: &JointTable,
    target: usize,
    ts: usize,
    pool: &[usize],
    k: usize,
) -> (Option<f64>, Vec<Vec<(usize, usize)>>) {
    let mut all: Vec<(Vec<(usize, usize)>, f64)> = Vec::new();
    let mut subset: Vec<usize> = Vec::new();
    fn rec(
        start: usize,
        k: usize,
        pool: &[usize],
        subset: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if subset.len() == k {
            out.push(subset.clone());
            return;
        }
        for i in start..pool.len() {
            subset.push(i);
            rec(i + 1, k, pool, subset, out);
            subset.pop();
        }
    }
    let mut subsets = Vec::new();
    rec(0, k, pool, &mut subset, &mut subsets);
    for s in subsets {
        let vars: Vec<usize> = s.iter().map(|&p| pool[p]).collect();
        let total: usize = vars.iter().map(|&v| joint.cards[v]).product();
        for mut c in 0..total {
            let mut ev = vec![(0, 0); k];
            for j in (0..k).rev() {
                let card = joint.cards[vars[j]];
                ev[j] = (vars[j], c % card);
                c /= card;
            }
            if let Some(p) = joint.posterior(target, &ev) {
                all.push((ev, p[ts]));
            }
        }
    }
    let max = all.iter().map(|a| a.1).fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))));
    let ties = match max {
        Some(m) => all.into_iter().filter(|a| a.1 >= m - 1e-12).map(|a| a.0).collect(),
        None => Vec::new(),
    };
    (max, ties)
}
