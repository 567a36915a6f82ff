//! Exact Shapley values, max-to-mean ratios and structural checks.
//!
//! Exhaustive routines tabulate `v` over all `2^n` coalitions once and then
//! work on bit masks, so they are limited to [`MAX_EXHAUSTIVE`] players;
//! the property checks are quadratic in `2^n` and limited to
//! [`MAX_PROPERTY_CHECK`].

use alloc::vec;
use alloc::vec::Vec;

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{ClosedForm, Game};
use crate::math::binomial;

pub const MAX_EXHAUSTIVE: usize = 20;
pub const MAX_PROPERTY_CHECK: usize = 12;

/// Relative tolerance for structural comparisons of utility values.
pub const UTILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyReport {
    pub phi: Vec<f64>,
    pub u_max: Vec<f64>,
    pub gamma_per_player: Vec<f64>,
    pub gamma: f64,
    /// True when the values came from the game's closed form.
    pub closed_form: bool,
}

impl ShapleyReport {
    fn assemble(phi: Vec<f64>, u_max: Vec<f64>, closed_form: bool) -> Self {
        let gamma_per_player: Vec<f64> = phi.iter().zip(&u_max).map(|(&p, &u)| ratio(u, p)).collect();
        let gamma = gamma_per_player.iter().copied().fold(0.0, f64::max);
        ShapleyReport { phi, u_max, gamma_per_player, gamma, closed_form }
    }
}

/// `u / phi` with the convention `0/0 = 1`.
fn ratio(u: f64, phi: f64) -> f64 {
    let scale = u.abs().max(phi.abs());
    if scale == 0.0 || (u.abs() <= 1e-12 * scale.max(1.0) && phi.abs() <= 1e-12 * scale.max(1.0)) {
        1.0
    } else if phi == 0.0 {
        f64::INFINITY
    } else {
        u / phi
    }
}

fn check_exhaustive<G: Game + ?Sized>(game: &G, what: &'static str, limit: usize) -> Result<usize> {
    let n = game.players();
    if n > limit {
        return Err(Error::TooManyPlayers { what, players: n, limit });
    }
    Ok(n)
}

fn tabulate<G: Game + ?Sized>(game: &G, n: usize) -> Vec<f64> {
    (0..1u64 << n).map(|m| game.value(&Coalition::from_mask(m))).collect()
}

/// Shapley values, maximum marginal contributions and max-to-mean ratios.
///
/// Uses the game's closed form when it has one; otherwise evaluates the
/// subset form of the Shapley value exhaustively (at most 20 players).
pub fn shapley_exact<G: Game + ?Sized>(game: &G) -> Result<ShapleyReport> {
    match game.closed_form() {
        Some(ClosedForm { phi, u_max }) => Ok(ShapleyReport::assemble(phi, u_max, true)),
        None => shapley_exhaustive(game),
    }
}

/// Same as [`shapley_exact`], with [`ShapleyReport::gamma`] being the quantity of interest.
pub fn gamma<G: Game + ?Sized>(game: &G) -> Result<ShapleyReport> {
    shapley_exact(game)
}

/// Exhaustive evaluation, ignoring any closed form.
pub fn shapley_exhaustive<G: Game + ?Sized>(game: &G) -> Result<ShapleyReport> {
    let n = check_exhaustive(game, "exact Shapley values", MAX_EXHAUSTIVE)?;
    let table = tabulate(game, n);
    let weights: Vec<f64> = (0..n.max(1)).map(|k| 1.0 / (n as f64 * binomial(n - 1, k))).collect();
    let mut phi = vec![0.0; n];
    let mut u_max = vec![0.0; n];
    for i in 0..n {
        let bit = 1usize << i;
        let (mut sum, mut best) = (0.0f64, f64::NEG_INFINITY);
        for mask in 0..1usize << n {
            if mask & bit != 0 {
                continue;
            }
            let mu = table[mask | bit] - table[mask];
            sum += weights[mask.count_ones() as usize] * mu;
            best = best.max(mu);
        }
        phi[i] = sum;
        u_max[i] = best;
    }
    Ok(ShapleyReport::assemble(phi, u_max, false))
}

/// `U_j`: expected marginal contribution of `player` given rank `j`
/// (1 = least preferable), i.e. the mean of `mu_player(S)` over all
/// predecessor sets of size `j - 1`.
pub fn rank_expectation<G: Game + ?Sized>(game: &G, player: usize, rank: usize) -> Result<f64> {
    let n = check_exhaustive(game, "rank expectations", MAX_EXHAUSTIVE)?;
    if player >= n {
        return Err(Error::UnknownPlayer { player, players: n });
    }
    if rank == 0 || rank > n {
        return Err(Error::RankOutOfRange { rank, players: n });
    }
    let bit = 1u64 << player;
    let size = (rank - 1) as u32;
    let mut sum = 0.0;
    for mask in 0..1u64 << n {
        if mask & bit == 0 && mask.count_ones() == size {
            sum += game.value(&Coalition::from_mask(mask | bit)) - game.value(&Coalition::from_mask(mask));
        }
    }
    Ok(sum / binomial(n - 1, rank - 1))
}

/// Expected reward of `honest` when the players in `pinned` always occupy
/// the least preferable ranks and everyone else is ordered uniformly.
pub fn pinned_expectation<G: Game + ?Sized>(game: &G, honest: usize, pinned: &Coalition) -> Result<f64> {
    let n = check_exhaustive(game, "pinned expectations", MAX_EXHAUSTIVE)?;
    if honest >= n {
        return Err(Error::UnknownPlayer { player: honest, players: n });
    }
    if pinned.contains(honest) {
        return Err(Error::PlayerInCoalition { player: honest });
    }
    let pinned_mask = pinned.low_mask() & ((1u64 << n) - 1);
    let free: Vec<usize> = (0..n).filter(|&p| p != honest && pinned_mask >> p & 1 == 0).collect();
    let m = free.len();
    // Weight of a predecessor set S among the free players: |S|!(m-|S|)!/(m+1)!
    let weights: Vec<f64> = (0..=m).map(|k| 1.0 / ((m + 1) as f64 * binomial(m, k))).collect();
    let mut sum = 0.0;
    for sub in 0..1u64 << m {
        let mut mask = pinned_mask;
        for (b, &p) in free.iter().enumerate() {
            if sub >> b & 1 == 1 {
                mask |= 1 << p;
            }
        }
        let mu = game.value(&Coalition::from_mask(mask | 1 << honest)) - game.value(&Coalition::from_mask(mask));
        sum += weights[sub.count_ones() as usize] * mu;
    }
    Ok(sum)
}

/// `v(S) <= v(T)` whenever `S ⊆ T` (at most 12 players).
pub fn is_monotone<G: Game + ?Sized>(game: &G) -> Result<bool> {
    let n = check_exhaustive(game, "the monotonicity check", MAX_PROPERTY_CHECK)?;
    let table = tabulate(game, n);
    let tol = UTILITY_TOL * scale(&table);
    Ok((0..1usize << n).all(|mask| (0..n).all(|i| mask >> i & 1 == 1 || table[mask | 1 << i] + tol >= table[mask])))
}

/// `v(S) + v(T) <= v(S ∪ T) + v(S ∩ T)` for every pair (at most 12 players).
pub fn is_supermodular<G: Game + ?Sized>(game: &G) -> Result<bool> {
    Ok(supermodularity_witness(game)?.is_none())
}

/// First pair `(S, T)` violating supermodularity, if any.
pub fn supermodularity_witness<G: Game + ?Sized>(game: &G) -> Result<Option<(Coalition, Coalition)>> {
    let n = check_exhaustive(game, "the supermodularity check", MAX_PROPERTY_CHECK)?;
    let table = tabulate(game, n);
    let tol = UTILITY_TOL * scale(&table);
    for s in 0..1usize << n {
        for t in s + 1..1usize << n {
            if table[s] + table[t] > table[s | t] + table[s & t] + tol {
                return Ok(Some((Coalition::from_mask(s as u64), Coalition::from_mask(t as u64))));
            }
        }
    }
    Ok(None)
}

/// Checks that swapping two members of any declared class never changes
/// the utility (at most 12 players).
pub fn verify_symmetry<G: Game + ?Sized>(game: &G, classes: &[Vec<usize>]) -> Result<bool> {
    let n = check_exhaustive(game, "the symmetry check", MAX_PROPERTY_CHECK)?;
    let table = tabulate(game, n);
    let tol = UTILITY_TOL * scale(&table);
    for class in classes {
        if class.iter().any(|&p| p >= n) {
            return Err(Error::UnknownPlayer { player: *class.iter().max().unwrap_or(&0), players: n });
        }
        // Adjacent transpositions generate every permutation of the class.
        for pair in class.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            for mask in 0..1usize << n {
                let (ha, hb) = (mask >> a & 1, mask >> b & 1);
                if ha != hb {
                    let swapped = mask ^ (1 << a) ^ (1 << b);
                    if (table[mask] - table[swapped]).abs() > tol {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

fn scale(table: &[f64]) -> f64 {
    table.iter().fold(1.0f64, |acc, v| acc.max(v.abs()))
}
