//! Fixed-width player sets.

use core::fmt;

/// Largest player count a [`Coalition`] can hold.
pub const MAX_PLAYERS: usize = 256;

const WORDS: usize = MAX_PLAYERS / 64;

/// A set of players, stored as a fixed-width bit-set keyed by player index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition([u64; WORDS]);

impl Coalition {
    pub const fn empty() -> Self {
        Coalition([0; WORDS])
    }

    /// The grand coalition `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS, "coalition holds at most {MAX_PLAYERS} players");
        let mut words = [0u64; WORDS];
        for (w, word) in words.iter_mut().enumerate() {
            let lo = w * 64;
            if n >= lo + 64 {
                *word = u64::MAX;
            } else if n > lo {
                *word = (1u64 << (n - lo)) - 1;
            }
        }
        Coalition(words)
    }

    /// Builds a coalition from the low 64 players encoded in `mask`.
    pub const fn from_mask(mask: u64) -> Self {
        let mut words = [0u64; WORDS];
        words[0] = mask;
        Coalition(words)
    }

    pub fn singleton(player: usize) -> Self {
        let mut c = Self::empty();
        c.insert(player);
        c
    }

    /// Low 64 bits; exact whenever every member is below 64.
    pub const fn low_mask(&self) -> u64 {
        self.0[0]
    }

    #[inline]
    pub fn contains(&self, player: usize) -> bool {
        player < MAX_PLAYERS && self.0[player / 64] >> (player % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, player: usize) {
        assert!(player < MAX_PLAYERS, "player {player} out of range");
        self.0[player / 64] |= 1 << (player % 64);
    }

    #[inline]
    pub fn remove(&mut self, player: usize) {
        if player < MAX_PLAYERS {
            self.0[player / 64] &= !(1 << (player % 64));
        }
    }

    #[must_use]
    pub fn with(mut self, player: usize) -> Self {
        self.insert(player);
        self
    }

    #[must_use]
    pub fn without(mut self, player: usize) -> Self {
        self.remove(player);
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    #[must_use]
    pub fn union(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(other.0.iter()) {
            *a |= b;
        }
        out
    }

    #[must_use]
    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(other.0.iter()) {
            *a &= b;
        }
        out
    }

    #[must_use]
    pub fn difference(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(other.0.iter()) {
            *a &= !b;
        }
        out
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a & !b == 0)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> Members {
        Members { words: self.0, word: 0 }
    }

    /// Smallest member, if any.
    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }
}

impl FromIterator<usize> for Coalition {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut c = Coalition::empty();
        for p in iter {
            c.insert(p);
        }
        c
    }
}

impl<'a> FromIterator<&'a usize> for Coalition {
    fn from_iter<I: IntoIterator<Item = &'a usize>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Ascending iterator over the members of a [`Coalition`].
pub struct Members {
    words: [u64; WORDS],
    word: usize,
}

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.word < WORDS {
            let w = self.words[self.word];
            if w != 0 {
                let bit = w.trailing_zeros() as usize;
                self.words[self.word] &= w - 1;
                return Some(self.word * 64 + bit);
            }
            self.word += 1;
        }
        None
    }
}
