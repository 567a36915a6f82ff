//! Coalitional games and utility oracles.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::coalition::{Coalition, MAX_PLAYERS};
use crate::error::{Error, Result};

/// Analytically known Shapley values and maximum marginal contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub phi: Vec<f64>,
    pub u_max: Vec<f64>,
}

/// A coalitional game `(N, v)` with players `0..n`.
///
/// `value` must be finite and non-negative for every coalition and safe to
/// call concurrently.
pub trait Game: Send + Sync {
    fn players(&self) -> usize;

    fn value(&self, coalition: &Coalition) -> f64;

    /// Partition of the players into interchangeable classes, if declared.
    fn symmetry_classes(&self) -> Option<Vec<Vec<usize>>> {
        None
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        None
    }

    /// Partition of `N \ {honest}` such that `mu_honest(P)` only depends on
    /// how many members of each class `P` contains. Used to compress the
    /// optimal-adversary state space.
    ///
    /// Defaults to the declared symmetry classes with `honest` removed.
    fn honest_view_classes(&self, honest: usize) -> Option<Vec<Vec<usize>>> {
        let classes = self.symmetry_classes()?;
        Some(
            classes
                .into_iter()
                .map(|c| c.into_iter().filter(|&p| p != honest).collect::<Vec<_>>())
                .filter(|c| !c.is_empty())
                .collect(),
        )
    }

    fn grand_coalition(&self) -> Coalition {
        Coalition::full(self.players())
    }
}

impl<G: Game + ?Sized> Game for &G {
    fn players(&self) -> usize {
        (**self).players()
    }
    fn value(&self, coalition: &Coalition) -> f64 {
        (**self).value(coalition)
    }
    fn symmetry_classes(&self) -> Option<Vec<Vec<usize>>> {
        (**self).symmetry_classes()
    }
    fn closed_form(&self) -> Option<ClosedForm> {
        (**self).closed_form()
    }
    fn honest_view_classes(&self, honest: usize) -> Option<Vec<Vec<usize>>> {
        (**self).honest_view_classes(honest)
    }
}

impl<G: Game + ?Sized> Game for Box<G> {
    fn players(&self) -> usize {
        (**self).players()
    }
    fn value(&self, coalition: &Coalition) -> f64 {
        (**self).value(coalition)
    }
    fn symmetry_classes(&self) -> Option<Vec<Vec<usize>>> {
        (**self).symmetry_classes()
    }
    fn closed_form(&self) -> Option<ClosedForm> {
        (**self).closed_form()
    }
    fn honest_view_classes(&self, honest: usize) -> Option<Vec<Vec<usize>>> {
        (**self).honest_view_classes(honest)
    }
}

/// `mu_i(S) = v(S + i) - v(S)`; rejects `i` in `S`.
pub fn marginal_contribution<G: Game + ?Sized>(game: &G, player: usize, set: &Coalition) -> Result<f64> {
    let n = game.players();
    if player >= n {
        return Err(Error::UnknownPlayer { player, players: n });
    }
    if set.contains(player) {
        return Err(Error::PlayerInCoalition { player });
    }
    Ok(game.value(&set.with(player)) - game.value(set))
}

/// Utility given as an explicit table over all `2^n` coalitions, indexed by
/// bit mask. Limited to 20 players.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGame {
    n: usize,
    values: Vec<f64>,
    classes: Option<Vec<Vec<usize>>>,
}

impl TableGame {
    pub const MAX_PLAYERS: usize = 20;

    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n > Self::MAX_PLAYERS {
            return Err(Error::TooManyPlayers { what: "a tabulated game", players: n, limit: Self::MAX_PLAYERS });
        }
        if values.len() != 1 << n {
            return Err(Error::InvalidParameter(format!(
                "a {n}-player table needs {} entries, got {}",
                1usize << n,
                values.len()
            )));
        }
        if let Some((mask, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidUtility { mask: mask as u64, value });
        }
        Ok(TableGame { n, values, classes: None })
    }

    /// Tabulates any game with at most 20 players.
    pub fn tabulate<G: Game + ?Sized>(game: &G) -> Result<Self> {
        let n = game.players();
        if n > Self::MAX_PLAYERS {
            return Err(Error::TooManyPlayers { what: "a tabulated game", players: n, limit: Self::MAX_PLAYERS });
        }
        let values = (0..1u64 << n).map(|m| game.value(&Coalition::from_mask(m))).collect();
        let mut t = Self::new(n, values)?;
        t.classes = game.symmetry_classes();
        Ok(t)
    }

    pub fn with_symmetry_classes(mut self, classes: Vec<Vec<usize>>) -> Self {
        self.classes = Some(classes);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Game for TableGame {
    fn players(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: &Coalition) -> f64 {
        self.values[coalition.low_mask() as usize]
    }

    fn symmetry_classes(&self) -> Option<Vec<Vec<usize>>> {
        self.classes.clone()
    }
}

/// A game defined by a closure. Non-negativity is the caller's business.
pub struct FnGame<F> {
    n: usize,
    utility: F,
}

impl<F> FnGame<F>
where
    F: Fn(&Coalition) -> f64 + Send + Sync,
{
    pub fn new(n: usize, utility: F) -> Self {
        assert!(n <= MAX_PLAYERS);
        FnGame { n, utility }
    }
}

impl<F> Game for FnGame<F>
where
    F: Fn(&Coalition) -> f64 + Send + Sync,
{
    fn players(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: &Coalition) -> f64 {
        (self.utility)(coalition)
    }
}

/// The game `v'(S) = v(S ∪ fixed)`: players in `fixed` always count as
/// already present. This is what perpetual punishment does to the players
/// that remain active.
pub struct WithFixed<G> {
    pub inner: G,
    pub fixed: Coalition,
}

impl<G: Game> Game for WithFixed<G> {
    fn players(&self) -> usize {
        self.inner.players()
    }

    fn value(&self, coalition: &Coalition) -> f64 {
        self.inner.value(&coalition.union(&self.fixed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn marginal_contribution_rejects_members() {
        let g = TableGame::new(2, vec![0.0, 1.0, 1.0, 3.0]).unwrap();
        let s = Coalition::singleton(1);
        assert_eq!(marginal_contribution(&g, 0, &s).unwrap(), 2.0);
        assert_eq!(marginal_contribution(&g, 1, &s), Err(Error::PlayerInCoalition { player: 1 }));
        assert!(matches!(marginal_contribution(&g, 7, &s), Err(Error::UnknownPlayer { .. })));
    }

    #[test]
    fn table_rejects_negative_and_wrong_length() {
        assert!(matches!(TableGame::new(1, vec![0.0, -1.0]), Err(Error::InvalidUtility { mask: 1, .. })));
        assert!(TableGame::new(2, vec![0.0; 3]).is_err());
        assert!(TableGame::new(21, vec![]).is_err());
    }

    #[test]
    fn equal_utilities_give_zero_marginal() {
        let g = FnGame::new(3, |_: &Coalition| 4.0);
        assert_eq!(marginal_contribution(&g, 2, &Coalition::from_mask(0b011)).unwrap(), 0.0);
    }

    #[test]
    fn fixed_players_are_always_present() {
        let g = TableGame::new(2, vec![0.0, 0.0, 0.0, 5.0]).unwrap();
        let w = WithFixed { inner: &g, fixed: Coalition::singleton(1) };
        assert_eq!(w.value(&Coalition::singleton(0)), 5.0);
        assert_eq!(w.value(&Coalition::empty()), 0.0);
    }
}
