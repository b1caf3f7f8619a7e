/// A non-negative table over the Cartesian product of its scope's states,
/// laid out row-major with the last scope variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(scope.len(), cards.len());
        assert_eq!(cards.iter().product::<usize>(), values.len());
        debug_assert!({
            let mut s = scope.clone();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        });
        Factor { scope, cards, values }
    }

    /// The empty-scope factor with value 1.
    pub fn unit() -> Self {
        Factor {
            scope: Vec::new(),
            cards: Vec::new(),
            values: vec![1.0],
        }
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.scope.len()];
        for i in (0..self.scope.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    /// Value at a full assignment of the scope, given in scope order.
    pub fn value_at(&self, states: &[usize]) -> f64 {
        let idx = states
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&s, &c)| acc * c + s);
        self.values[idx]
    }

    /// Pointwise product; the result's scope is `self`'s scope followed by
    /// the variables only `other` mentions.
    pub fn product(&self, other: &Factor) -> Factor {
        if other.scope.is_empty() {
            let k = other.values[0];
            return Factor {
                scope: self.scope.clone(),
                cards: self.cards.clone(),
                values: self.values.iter().map(|v| v * k).collect(),
            };
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(c);
            }
        }
        let stride_in = |f: &Factor| -> Vec<usize> {
            let s = f.strides();
            scope
                .iter()
                .map(|v| f.scope.iter().position(|x| x == v).map_or(0, |i| s[i]))
                .collect()
        };
        let sa = stride_in(self);
        let sb = stride_in(other);
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0usize; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            // odometer over the result scope, last variable fastest
            for d in (0..scope.len()).rev() {
                counter[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if counter[d] < cards[d] {
                    break;
                }
                ia -= sa[d] * cards[d];
                ib -= sb[d] * cards[d];
                counter[d] = 0;
            }
        }
        Factor { scope, cards, values }
    }

    /// Sums `var` out of the factor. No-op if `var` is not in scope.
    pub fn sum_out(&self, var: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let card = self.cards[pos];
        let inner: usize = self.cards[pos + 1..].iter().product();
        let outer: usize = self.cards[..pos].iter().product();
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = (o * card + s) * inner;
                let dst = &mut values[o * inner..(o + 1) * inner];
                for (d, v) in dst.iter_mut().zip(&self.values[base..base + inner]) {
                    *d += v;
                }
            }
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        Factor { scope, cards, values }
    }

    /// Restricts the factor to `var = state`, dropping `var` from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let card = self.cards[pos];
        let inner: usize = self.cards[pos + 1..].iter().product();
        let outer: usize = self.cards[..pos].iter().product();
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * card + state) * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        Factor { scope, cards, values }
    }

    /// Reorders the table so its scope equals `order` (a permutation of the
    /// current scope).
    pub fn permuted(&self, order: &[usize]) -> Factor {
        assert_eq!(order.len(), self.scope.len());
        if order == self.scope.as_slice() {
            return self.clone();
        }
        let positions: Vec<usize> = order
            .iter()
            .map(|v| {
                self.scope
                    .iter()
                    .position(|x| x == v)
                    .expect("permuted: variable not in scope")
            })
            .collect();
        let old_strides = self.strides();
        let cards: Vec<usize> = positions.iter().map(|&p| self.cards[p]).collect();
        let strides: Vec<usize> = positions.iter().map(|&p| old_strides[p]).collect();
        let mut values = Vec::with_capacity(self.values.len());
        let mut counter = vec![0usize; order.len()];
        let mut idx = 0usize;
        for _ in 0..self.values.len() {
            values.push(self.values[idx]);
            for d in (0..order.len()).rev() {
                counter[d] += 1;
                idx += strides[d];
                if counter[d] < cards[d] {
                    break;
                }
                idx -= strides[d] * cards[d];
                counter[d] = 0;
            }
        }
        Factor {
            scope: order.to_vec(),
            cards,
            values,
        }
    }
}
