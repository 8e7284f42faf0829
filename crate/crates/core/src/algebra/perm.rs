//! Permutations in one-line form.

use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Perm {
    map: Vec<usize>,
}

impl Perm {
    /// One-line form: `map[i]` is the image of `i`.
    pub fn new(map: Vec<usize>) -> Option<Perm> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &x in &map {
            if x >= n || seen[x] {
                return None;
            }
            seen[x] = true;
        }
        Some(Perm { map })
    }

    pub fn identity(n: usize) -> Perm {
        Perm {
            map: (0..n).collect(),
        }
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Perm {
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(a, b);
        Perm { map }
    }

    /// Adjacent transposition (i, i+1), the i-th Coxeter generator of S_n.
    pub fn adjacent(n: usize, i: usize) -> Perm {
        Perm::transposition(n, i, i + 1)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &x)| i == x)
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// Composition acting right-to-left: (self * other)(i) = self(other(i)).
    pub fn compose(&self, other: &Perm) -> Perm {
        debug_assert_eq!(self.len(), other.len());
        Perm {
            map: (0..self.len()).map(|i| self.apply(other.apply(i))).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut map = vec![0; self.len()];
        for (i, &x) in self.map.iter().enumerate() {
            map[x] = i;
        }
        Perm { map }
    }

    /// Sign of the permutation: +1 or -1.
    pub fn sign(&self) -> i32 {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut sign = 1;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.map[i];
                len += 1;
            }
            if len % 2 == 0 {
                sign = -sign;
            }
        }
        sign
    }

    pub fn random<R: Rng>(rng: &mut R, n: usize) -> Perm {
        let mut map: Vec<usize> = (0..n).collect();
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            map.swap(i, j);
        }
        Perm { map }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_of_cycles() {
        assert_eq!(Perm::identity(4).sign(), 1);
        assert_eq!(Perm::transposition(4, 0, 2).sign(), -1);
        // 3-cycle = product of two transpositions
        let c3 = Perm::transposition(3, 0, 1).compose(&Perm::transposition(3, 1, 2));
        assert_eq!(c3.sign(), 1);
    }

    #[test]
    fn compose_inverse() {
        let p = Perm::new(vec![2, 0, 3, 1]).unwrap();
        assert!(p.compose(&p.inverse()).is_identity());
        assert!(p.inverse().compose(&p).is_identity());
    }

    #[test]
    fn compose_order() {
        // (self * other)(i) = self(other(i))
        let a = Perm::transposition(3, 0, 1);
        let b = Perm::transposition(3, 1, 2);
        let ab = a.compose(&b);
        assert_eq!(ab.apply(2), a.apply(b.apply(2)));
        assert_eq!(ab.apply(2), 0);
    }
}
