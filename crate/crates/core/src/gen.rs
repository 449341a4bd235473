//! Seeded generator of random MEAS-free terms.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::term::*;

pub struct TermGen {
    rng: ChaCha8Rng,
    pub max_depth: usize,
}

impl TermGen {
    pub fn new(seed: u64) -> Self {
        TermGen { rng: ChaCha8Rng::seed_from_u64(seed), max_depth: 4 }
    }

    fn below(&mut self, n: u64) -> u64 {
        self.rng.next_u64() % n
    }

    fn angle(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * TAU
    }

    fn leaf(&mut self) -> T {
        match self.below(5) {
            0 => id(),
            1 => not(),
            2 => swap(),
            3 => phase(self.angle()),
            _ => rot(self.angle()),
        }
    }

    pub fn term(&mut self) -> T {
        let d = self.max_depth;
        self.at(d)
    }

    fn at(&mut self, depth: usize) -> T {
        if depth == 0 || self.below(4) == 0 {
            return self.leaf();
        }
        match self.below(4) {
            0 => compo(self.at(depth - 1), self.at(depth - 1)),
            1 => branch(self.at(depth - 1), self.at(depth - 1)),
            2 => {
                let th = 1 + self.below(4) as usize;
                switch(th, self.at(depth - 1), self.at(depth - 1))
            }
            _ => {
                let k = 1 + self.below(2) as usize;
                let t = k + self.below(2) as usize;
                let mut fs: Vec<Rec> = (0..1usize << k).map(|_| if self.below(3) == 0 { Rec::Id } else { Rec::SelfRef }).collect();
                if !fs.contains(&Rec::SelfRef) {
                    fs[0] = Rec::SelfRef;
                }
                let (g, h, p) = (self.at(depth - 1), self.at(depth - 1), self.at(depth - 1));
                kqrec(k, t, g, h, p, fs)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_terms_are_valid() {
        let mut g = TermGen::new(3);
        for _ in 0..200 {
            let t = g.term();
            assert!(validate(&t).iter().all(|d| d.severity != Severity::Error), "{t:?}");
            assert!(is_meas_free(&t));
        }
    }

    #[test]
    fn deterministic() {
        let (mut x, mut y) = (TermGen::new(9), TermGen::new(9));
        for _ in 0..5 {
            assert_eq!(dc(&x.term()).total, dc(&y.term()).total);
        }
    }
}
