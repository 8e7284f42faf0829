//! Characters of presented groups and their classification.
//!
//! A character is determined by a unit phase per generator subject to the
//! abelianized relations; the solution set is computed by integer
//! diagonalization of the relation exponent matrix.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::algebra::word::Word;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GroupPresentation {
    pub generators: Vec<String>,
    /// Relator words, each equal to the identity in the group.
    pub relations: Vec<Word>,
}

impl GroupPresentation {
    pub fn new(generators: Vec<String>, relations: Vec<Word>) -> Result<Self> {
        let p = GroupPresentation {
            generators,
            relations,
        };
        for r in &p.relations {
            if let Some(g) = r.max_generator() {
                if g >= p.generators.len() {
                    return Err(Error::Presentation(format!(
                        "relation references generator index {g}, but only {} generators declared",
                        p.generators.len()
                    )));
                }
            }
        }
        Ok(p)
    }

    /// Coxeter presentation of the symmetric group S_n on adjacent
    /// transpositions s_1 .. s_{n-1}.
    pub fn symmetric(n: usize) -> Self {
        let gens = (1..n).map(|i| format!("s{i}")).collect();
        let mut rels = Vec::new();
        let k = n - 1;
        for i in 0..k {
            rels.push(Word::power(i, 2));
        }
        rels.extend(braid_relators(k));
        GroupPresentation {
            generators: gens,
            relations: rels,
        }
    }

    /// Artin presentation of the braid group B_n.
    pub fn braid(n: usize) -> Self {
        let gens = (1..n).map(|i| format!("sigma{i}")).collect();
        GroupPresentation {
            generators: gens,
            relations: braid_relators(n - 1),
        }
    }
}

fn braid_relators(k: usize) -> Vec<Word> {
    let mut rels = Vec::new();
    for i in 0..k.saturating_sub(1) {
        // s_i s_{i+1} s_i s_{i+1}^-1 s_i^-1 s_{i+1}^-1
        rels.push(Word::from_factors([
            (i, 1),
            (i + 1, 1),
            (i, 1),
            (i + 1, -1),
            (i, -1),
            (i + 1, -1),
        ]));
    }
    for i in 0..k {
        for j in i + 2..k {
            rels.push(Word::from_factors([(i, 1), (j, 1), (i, -1), (j, -1)]));
        }
    }
    rels
}

/// One-dimensional unitary representation: a unit phase per generator.
#[derive(Debug, Clone)]
pub struct Character {
    pub generators: Vec<String>,
    pub phases: Vec<Complex64>,
}

impl Character {
    pub fn from_angles(generators: Vec<String>, angles: &[f64]) -> Self {
        let phases = angles.iter().map(|&a| Complex64::cis(a)).collect();
        Character { generators, phases }
    }

    /// Single-generator character of the deck group Z.
    pub fn cyclic(beta: f64) -> Self {
        Character::from_angles(vec!["a".into()], &[beta])
    }

    pub fn trivial(generators: Vec<String>) -> Self {
        let phases = vec![Complex64::new(1.0, 0.0); generators.len()];
        Character { generators, phases }
    }

    pub fn phase(&self, name: &str) -> Result<Complex64> {
        self.generators
            .iter()
            .position(|g| g == name)
            .map(|i| self.phases[i])
            .ok_or_else(|| Error::UnknownGenerator(name.into()))
    }

    /// Extends to the whole group by the homomorphism law.
    pub fn eval(&self, w: &Word) -> Result<Complex64> {
        let mut z = Complex64::new(1.0, 0.0);
        for &(g, e) in w.factors() {
            if g >= self.phases.len() {
                return Err(Error::UnknownGenerator(format!("generator #{g}")));
            }
            z *= self.phases[g].powi(e as i32);
        }
        Ok(z)
    }

    /// Deck-group evaluation for the exemplar geometries (deck group Z,
    /// single generator).
    pub fn eval_deck(&self, sigma: crate::geometry::DeckElement) -> Result<Complex64> {
        self.eval(&Word::power(0, sigma.0))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.phases.iter().all(|z| (z.norm() - 1.0).abs() < tol)
    }

    pub fn satisfies(&self, p: &GroupPresentation, tol: f64) -> bool {
        p.relations.iter().all(|r| match self.eval(r) {
            Ok(z) => (z - Complex64::new(1.0, 0.0)).norm() < tol,
            Err(_) => false,
        })
    }
}

/// Parameterization of the character variety of a finite presentation.
///
/// `characters` are the torsion representatives (the full list when
/// `free_directions` is empty); each free direction contributes a free angle
/// beta with per-generator coefficients.
#[derive(Debug, Clone)]
pub struct CharacterFamily {
    pub generators: Vec<String>,
    pub characters: Vec<Character>,
    pub free_directions: Vec<Vec<i64>>,
}

impl CharacterFamily {
    pub fn is_finite(&self) -> bool {
        self.free_directions.is_empty()
    }

    /// Character at the given torsion representative and free angles.
    pub fn at(&self, rep: usize, params: &[f64]) -> Character {
        let base = &self.characters[rep];
        let mut angles: Vec<f64> = base
            .phases
            .iter()
            .map(|z| z.arg())
            .collect();
        for (dir, &beta) in self.free_directions.iter().zip(params) {
            for (a, &c) in angles.iter_mut().zip(dir) {
                *a += c as f64 * beta;
            }
        }
        Character::from_angles(self.generators.clone(), &angles)
    }
}

/// Solves the abelianized relation system over generator phases.
pub fn classify_characters(p: &GroupPresentation) -> Result<CharacterFamily> {
    let g = p.generators.len();
    let r = p.relations.len();
    for rel in &p.relations {
        if let Some(m) = rel.max_generator() {
            if m >= g {
                return Err(Error::Presentation(
                    "relation references undeclared generator".into(),
                ));
            }
        }
    }
    // Exponent matrix: rows = relations, cols = generators.
    let mut m = vec![vec![0i64; g]; r];
    for (i, rel) in p.relations.iter().enumerate() {
        for j in 0..g {
            m[i][j] = rel.exponent_sum(j);
        }
    }
    let (diag, v) = diagonalize(&mut m, g);
    let rank = diag.len();

    // phi_i is constrained to 2*pi*k/d_i for i < rank, free beyond.
    let mut torsion_orders = Vec::new();
    for &d in &diag {
        torsion_orders.push(d.unsigned_abs());
    }
    let count: u64 = torsion_orders.iter().map(|&d| d.max(1)).product();
    if count > 4096 {
        return Err(Error::Presentation(format!(
            "torsion character count {count} exceeds enumeration limit"
        )));
    }

    let mut characters = Vec::new();
    let mut indices = vec![0u64; rank];
    loop {
        let mut angles = vec![0.0; g];
        for (i, &ki) in indices.iter().enumerate() {
            let d = torsion_orders[i].max(1);
            let phi = TAU * ki as f64 / d as f64;
            for gg in 0..g {
                angles[gg] += v[gg][i] as f64 * phi;
            }
        }
        characters.push(Character::from_angles(p.generators.clone(), &angles));
        // odometer over torsion indices
        let mut carry = true;
        for i in (0..rank).rev() {
            if !carry {
                break;
            }
            indices[i] += 1;
            if indices[i] < torsion_orders[i].max(1) {
                carry = false;
            } else {
                indices[i] = 0;
            }
        }
        if carry {
            break;
        }
    }

    let free_directions: Vec<Vec<i64>> = (rank..g)
        .map(|i| (0..g).map(|gg| v[gg][i]).collect())
        .collect();

    Ok(CharacterFamily {
        generators: p.generators.clone(),
        characters,
        free_directions,
    })
}

/// Diagonalizes an integer matrix by unimodular row and column operations,
/// tracking the column transform V so that theta = V phi maps the decoupled
/// variables back to generator angles. Returns the nonzero diagonal and V.
fn diagonalize(m: &mut [Vec<i64>], g: usize) -> (Vec<i64>, Vec<Vec<i64>>) {
    let r = m.len();
    let mut v: Vec<Vec<i64>> = (0..g)
        .map(|i| (0..g).map(|j| i64::from(i == j)).collect())
        .collect();
    let mut t = 0;
    while t < r.min(g) {
        // pivot: minimal nonzero |entry| in the trailing block
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..r {
            for j in t..g {
                if m[i][j] != 0
                    && pivot.is_none_or(|(pi, pj)| m[i][j].abs() < m[pi][pj].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        m.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        for row in v.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..r {
                if m[i][t] != 0 {
                    let q = m[i][t].div_euclid(m[t][t]);
                    for j in 0..g {
                        m[i][j] -= q * m[t][j];
                    }
                    if m[i][t] != 0 {
                        m.swap(t, i);
                        clean = false;
                    }
                }
            }
            for j in t + 1..g {
                if m[t][j] != 0 {
                    let q = m[t][j].div_euclid(m[t][t]);
                    for row in m.iter_mut() {
                        let sub = q * row[t];
                        row[j] -= sub;
                    }
                    for row in v.iter_mut() {
                        let sub = q * row[t];
                        row[j] -= sub;
                    }
                    if m[t][j] != 0 {
                        for row in m.iter_mut() {
                            row.swap(t, j);
                        }
                        for row in v.iter_mut() {
                            row.swap(t, j);
                        }
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        t += 1;
    }
    let mut diag = Vec::new();
    for i in 0..t {
        if m[i][i] != 0 {
            diag.push(m[i][i].abs());
        }
    }
    (diag, v)
}
