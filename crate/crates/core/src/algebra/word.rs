//! Reduced words over presented generators.

/// Freely reduced word: factors (generator index, nonzero exponent) with no
/// adjacent equal generators. The empty word is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<(usize, i64)>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn generator(g: usize) -> Self {
        Word(vec![(g, 1)])
    }

    pub fn power(g: usize, e: i64) -> Self {
        if e == 0 {
            Word::identity()
        } else {
            Word(vec![(g, e)])
        }
    }

    pub fn from_factors(factors: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut w = Word::identity();
        for (g, e) in factors {
            w.push(g, e);
        }
        w
    }

    pub fn factors(&self) -> &[(usize, i64)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    fn push(&mut self, g: usize, e: i64) {
        if e == 0 {
            return;
        }
        match self.0.last_mut() {
            Some((lg, le)) if *lg == g => {
                *le += e;
                if *le == 0 {
                    self.0.pop();
                }
            }
            _ => self.0.push((g, e)),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &(g, e) in &other.0 {
            w.push(g, e);
        }
        w
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&(g, e)| (g, -e)).collect())
    }

    /// Exponent sum of a generator (image in the abelianization).
    pub fn exponent_sum(&self, g: usize) -> i64 {
        self.0.iter().filter(|&&(h, _)| h == g).map(|&(_, e)| e).sum()
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.0.iter().map(|&(g, _)| g).max()
    }
}
