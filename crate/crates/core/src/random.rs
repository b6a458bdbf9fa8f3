//! Seeded sampling of symplectic matrices and wave-packet parameters.
//!
//! Matrices are words in the generators `J`, `V_R`, `M_L`, so they are
//! symplectic by construction. The stream comes from xoshiro256++ seeded
//! through SplitMix64, which makes every draw reproducible from a `u64`.

use rand::{Rng, RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::linalg::{RMat, RVec};
use crate::symplectic::{product_of_generators, Generator, NormalizedPair, SymplecticMatrix};
use crate::C64;

/// Parameter ranges for random generator words.
#[derive(Clone, Copy, Debug)]
pub struct Profile {
    /// Entries of `R` in `V_R` are uniform in `(-shear, shear)`.
    pub shear: f64,
    /// `L = rotation · diag(exp(s_j))` with `s_j` uniform in `(-log_stretch, log_stretch)`.
    pub log_stretch: f64,
    pub min_factors: usize,
    pub max_factors: usize,
    /// Packet centers have entries uniform in `(-center, center)`.
    pub center: f64,
    pub hbar: (f64, f64),
}

impl Profile {
    /// Moderate squeezing, suited to grid-based checks.
    pub fn mild() -> Self {
        Profile { shear: 0.5, log_stretch: 0.3, min_factors: 2, max_factors: 4, center: 1.0, hbar: (1.0, 1.0) }
    }

    /// Wider spread, for coefficient-level and quadrature checks.
    pub fn broad() -> Self {
        Profile { shear: 1.5, log_stretch: 0.7, min_factors: 3, max_factors: 6, center: 2.0, hbar: (0.25, 1.5) }
    }
}

/// A random symplectic matrix together with the word that produced it.
#[derive(Clone, Debug)]
pub struct GeneratedSymplectic {
    pub word: Vec<Generator>,
    pub matrix: SymplecticMatrix,
}

pub struct Sampler {
    rng: Xoshiro256PlusPlus,
    pub profile: Profile,
}

impl Sampler {
    pub fn new(seed: u64, profile: Profile) -> Self {
        Sampler { rng: Xoshiro256PlusPlus::seed_from_u64(seed), profile }
    }

    pub fn rng(&mut self) -> &mut impl Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn symmetric(&mut self, d: usize, a: f64) -> RMat {
        let mut r = RMat::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = self.uniform(-a, a);
                r[(i, j)] = v;
                r[(j, i)] = v;
            }
        }
        r
    }

    /// Product of Givens rotations with uniform angles.
    pub fn rotation(&mut self, d: usize) -> RMat {
        let mut m = RMat::identity(d, d);
        for i in 0..d {
            for j in i + 1..d {
                let t = self.uniform(-std::f64::consts::PI, std::f64::consts::PI);
                let mut g = RMat::identity(d, d);
                g[(i, i)] = t.cos();
                g[(j, j)] = t.cos();
                g[(i, j)] = -t.sin();
                g[(j, i)] = t.sin();
                m = g * m;
            }
        }
        m
    }

    pub fn generator(&mut self, d: usize) -> Generator {
        match self.index(3) {
            0 => Generator::J,
            1 => Generator::Shear(self.symmetric(d, self.profile.shear)),
            _ => {
                let rot = self.rotation(d);
                let a = self.profile.log_stretch;
                let diag = RVec::from_iterator(d, (0..d).map(|_| self.uniform(-a, a).exp()));
                Generator::Dilation(rot * RMat::from_diagonal(&diag))
            }
        }
    }

    pub fn symplectic(&mut self, d: usize) -> GeneratedSymplectic {
        let k = self.rng.random_range(self.profile.min_factors..=self.profile.max_factors);
        let word: Vec<Generator> = (0..k).map(|_| self.generator(d)).collect();
        let matrix = product_of_generators(d, &word).expect("sampled generators are valid");
        GeneratedSymplectic { word, matrix }
    }

    pub fn vector(&mut self, d: usize, a: f64) -> RVec {
        RVec::from_iterator(d, (0..d).map(|_| self.uniform(-a, a)))
    }

    pub fn complex_vector(&mut self, d: usize, a: f64) -> Vec<C64> {
        (0..d).map(|_| C64::new(self.uniform(-a, a), self.uniform(-a, a))).collect()
    }

    pub fn hbar(&mut self) -> f64 {
        let (lo, hi) = self.profile.hbar;
        if lo == hi {
            lo
        } else {
            self.uniform(lo, hi)
        }
    }

    /// A full parameter set: random `S`, center and `ħ`.
    pub fn pair(&mut self, d: usize) -> (NormalizedPair, GeneratedSymplectic) {
        let g = self.symplectic(d);
        let c = self.profile.center;
        let q = self.vector(d, c);
        let p = self.vector(d, c);
        let hbar = self.hbar();
        let pair = NormalizedPair::from_symplectic(&g.matrix).with_center(q, p).with_hbar(hbar);
        (pair, g)
    }

    pub fn symplectic_matrix(&mut self, d: usize) -> SymplecticMatrix {
        self.symplectic(d).matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::check_symplectic;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Sampler::new(7, Profile::broad());
        let mut b = Sampler::new(7, Profile::broad());
        for d in 1..4 {
            assert_eq!(a.symplectic_matrix(d), b.symplectic_matrix(d));
        }
    }

    #[test]
    fn thousand_random_matrices_are_symplectic() {
        let mut s = Sampler::new(11, Profile::broad());
        for k in 0..1000 {
            let d = 1 + k % 3;
            let m = s.symplectic_matrix(d);
            let c = check_symplectic(m.matrix(), 1e-9).unwrap();
            assert!(c.ok, "residual {}", c.residual);
        }
    }
}
