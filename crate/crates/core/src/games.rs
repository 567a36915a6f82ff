//! Named game constructions and random workload generators.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::coalition::{Coalition, MAX_PLAYERS};
use crate::error::{Error, Result};
use crate::game::{ClosedForm, Game, TableGame};
use crate::hypergraph::Hypergraph;
use crate::math::binomial;

fn check_size(what: &'static str, n: usize) -> Result<()> {
    if n > MAX_PLAYERS {
        return Err(Error::TooManyPlayers { what, players: n, limit: MAX_PLAYERS });
    }
    Ok(())
}

/// Two special players: `v(S) = 2` iff both belong to `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGame {
    n: usize,
    honest: usize,
    partner: usize,
}

impl PairGame {
    pub fn honest(&self) -> usize {
        self.honest
    }

    pub fn partner(&self) -> usize {
        self.partner
    }
}

pub fn make_pair_game(n: usize, honest: usize, partner: usize) -> Result<PairGame> {
    check_size("the pair game", n)?;
    if honest >= n || partner >= n {
        return Err(Error::UnknownPlayer { player: honest.max(partner), players: n });
    }
    if honest == partner {
        return Err(Error::InvalidParameter("the two special players must differ".into()));
    }
    Ok(PairGame { n, honest, partner })
}

impl Game for PairGame {
    fn players(&self) -> usize {
        self.n
    }

    fn value(&self, s: &Coalition) -> f64 {
        if s.contains(self.honest) && s.contains(self.partner) {
            2.0
        } else {
            0.0
        }
    }

    fn symmetry_classes(&self) -> Option<Vec<Vec<usize>>> {
        let rest: Vec<usize> = (0..self.n).filter(|&p| p != self.honest && p != self.partner).collect();
        let mut classes = vec![vec![self.honest], vec![self.partner]];
        if !rest.is_empty() {
            classes.push(rest);
        }
        Some(classes)
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        let mut phi = vec![0.0; self.n];
        let mut u_max = vec![0.0; self.n];
        for p in [self.honest, self.partner] {
            phi[p] = 1.0;
            u_max[p] = 2.0;
        }
        Some(ClosedForm { phi, u_max })
    }
}

/// The monotone game maximizing the max-to-mean ratio: `v(S) = 1` iff `S`
/// strictly contains `S0 = {0, .., floor((n-1)/2) - 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxGammaGame {
    n: usize,
    core: Coalition,
}

impl MaxGammaGame {
    pub fn core_set(&self) -> Coalition {
        self.core
    }
}

pub fn make_max_gamma_game(n: usize) -> Result<MaxGammaGame> {
    check_size("the max-gamma game", n)?;
    if n == 0 {
        return Err(Error::InvalidParameter("the max-gamma game needs at least one player".into()));
    }
    Ok(MaxGammaGame { n, core: Coalition::full((n - 1) / 2) })
}

impl Game for MaxGammaGame {
    fn players(&self) -> usize {
        self.n
    }

    fn value(&self, s: &Coalition) -> f64 {
        if self.core.is_subset(s) && s.len() > self.core.len() {
            1.0
        } else {
            0.0
        }
    }

    fn symmetry_classes(&self) -> Option<Vec<Vec<usize>>> {
        let core: Vec<usize> = self.core.iter().collect();
        let rest: Vec<usize> = (core.len()..self.n).collect();
        Some(if core.is_empty() { vec![rest] } else { vec![core, rest] })
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        let (n, s) = (self.n, self.core.len());
        let outside = 1.0 / (n as f64 * binomial(n - 1, s));
        // Efficiency fixes the share of the core members.
        let inside = if s == 0 { 0.0 } else { (1.0 - (n - s) as f64 * outside) / s as f64 };
        let phi = (0..n).map(|p| if p < s { inside } else { outside }).collect();
        Some(ClosedForm { phi, u_max: vec![1.0; n] })
    }
}

/// The supermodular game behind the `nC/(10 eps)` lower bound for SeqPerm.
///
/// Player 0 is the honest player `i*`, `Q = {1, .., n/2}`, and with
/// `alpha = 2n(n-1)/(3n-2)`:
/// `v(N) = 2 alpha`, `v(N \ {q}) = alpha` for `q` in `{i*} ∪ Q`, and 0
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundGame {
    n: usize,
    q: Coalition,
    alpha: f64,
}

pub fn make_lb_game(n: usize) -> Result<LowerBoundGame> {
    check_size("the lower-bound game", n)?;
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("the lower-bound game needs an even n >= 4, got {n}")));
    }
    let (num, den) = (2 * n * (n - 1), 3 * n - 2);
    Ok(LowerBoundGame {
        n,
        q: (1..=n / 2).collect(),
        alpha: num as f64 / den as f64,
    })
}

impl LowerBoundGame {
    pub const HONEST: usize = 0;

    pub fn honest(&self) -> usize {
        Self::HONEST
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q_set(&self) -> Coalition {
        self.q
    }

    /// Players outside `{i*} ∪ Q`.
    pub fn others(&self) -> Coalition {
        Coalition::full(self.n).difference(&self.q).without(Self::HONEST)
    }

    /// Exact max-to-mean ratio. The maximum is attained by players outside
    /// `{i*} ∪ Q`, whose ratio `4n(n-1)/(5n-2)` exceeds `alpha`; it stays
    /// below `n`.
    pub fn exact_gamma(&self) -> f64 {
        let n = self.n as f64;
        4.0 * n * (n - 1.0) / (5.0 * n - 2.0)
    }

    fn is_special(&self, p: usize) -> bool {
        p == Self::HONEST || self.q.contains(p)
    }
}

impl Game for LowerBoundGame {
    fn players(&self) -> usize {
        self.n
    }

    fn value(&self, s: &Coalition) -> f64 {
        let len = s.len();
        if len == self.n {
            2.0 * self.alpha
        } else if len + 1 == self.n {
            match Coalition::full(self.n).difference(s).first() {
                Some(missing) if self.is_special(missing) => self.alpha,
                _ => 0.0,
            }
        } else {
            0.0
        }
    }

    fn symmetry_classes(&self) -> Option<Vec<Vec<usize>>> {
        Some(vec![vec![Self::HONEST], self.q.iter().collect(), self.others().iter().collect()])
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        let n = self.n as f64;
        // Outsiders earn 2 alpha at the top rank and alpha at the second rank
        // when a special player follows them.
        let outsider_phi = (5.0 * n - 2.0) / (3.0 * n - 2.0);
        let mut phi = Vec::with_capacity(self.n);
        let mut u_max = Vec::with_capacity(self.n);
        for p in 0..self.n {
            if self.is_special(p) {
                phi.push(1.0);
                u_max.push(self.alpha);
            } else {
                phi.push(outsider_phi);
                u_max.push(2.0 * self.alpha);
            }
        }
        Some(ClosedForm { phi, u_max })
    }
}

/// Edge synergy game: `v(S)` is the total weight of hyperedges inside `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynergyGame {
    graph: Hypergraph,
}

pub fn make_synergy_game(graph: Hypergraph) -> SynergyGame {
    SynergyGame { graph }
}

impl SynergyGame {
    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }
}

impl Game for SynergyGame {
    fn players(&self) -> usize {
        self.graph.vertices()
    }

    fn value(&self, s: &Coalition) -> f64 {
        self.graph.edges().iter().filter(|e| e.members.is_subset(s)).map(|e| e.weight).sum()
    }

    fn symmetry_classes(&self) -> Option<Vec<Vec<usize>>> {
        let n = self.graph.vertices();
        let covered = self.graph.edges().iter().fold(Coalition::empty(), |acc, e| acc.union(&e.members));
        let mut classes: Vec<Vec<usize>> = covered.iter().map(|p| vec![p]).collect();
        let isolated: Vec<usize> = (0..n).filter(|&p| !covered.contains(p)).collect();
        if !isolated.is_empty() {
            classes.push(isolated);
        }
        Some(classes)
    }

    fn honest_view_classes(&self, honest: usize) -> Option<Vec<Vec<usize>>> {
        let neighbors = self.graph.neighbors(honest);
        let mut classes: Vec<Vec<usize>> = neighbors.iter().map(|p| vec![p]).collect();
        let rest: Vec<usize> = (0..self.graph.vertices()).filter(|&p| p != honest && !neighbors.contains(p)).collect();
        if !rest.is_empty() {
            classes.push(rest);
        }
        Some(classes)
    }

    fn closed_form(&self) -> Option<ClosedForm> {
        let n = self.graph.vertices();
        let mut phi = vec![0.0; n];
        let mut u_max = vec![0.0; n];
        for e in self.graph.edges() {
            let share = e.weight / e.size() as f64;
            for p in e.members.iter() {
                phi[p] += share;
                u_max[p] += e.weight;
            }
        }
        Some(ClosedForm { phi, u_max })
    }
}

/// Random supermodular game: non-negative random weights on a sparse family
/// of coalitions, `v(S)` summing the weights of every member of the family
/// inside `S`.
pub fn random_supermodular<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> Result<TableGame> {
    if n > TableGame::MAX_PLAYERS {
        return Err(Error::TooManyPlayers { what: "a random game", players: n, limit: TableGame::MAX_PLAYERS });
    }
    let mut values = vec![0.0; 1 << n];
    for v in values.iter_mut().skip(1) {
        if rng.random_bool(density) {
            *v = rng.random::<f64>();
        }
    }
    // Subset-sum (zeta) transform.
    for bit in 0..n {
        for mask in 0..1usize << n {
            if mask >> bit & 1 == 1 {
                values[mask] += values[mask ^ (1 << bit)];
            }
        }
    }
    TableGame::new(n, values)
}

/// Random monotone game: independent uniform values closed upward under
/// inclusion. Usually neither sub- nor supermodular.
pub fn random_monotone<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<TableGame> {
    if n > TableGame::MAX_PLAYERS {
        return Err(Error::TooManyPlayers { what: "a random game", players: n, limit: TableGame::MAX_PLAYERS });
    }
    let mut values = vec![0.0; 1 << n];
    for mask in 1..1usize << n {
        let mut v: f64 = rng.random::<f64>();
        let mut rest = mask;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            v = v.max(values[mask ^ bit]);
            rest ^= bit;
        }
        values[mask] = v;
    }
    TableGame::new(n, values)
}

/// Random weighted simple graph with at least one edge.
pub fn random_simple_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Hypergraph> {
    if n < 2 {
        return Err(Error::InvalidParameter("a simple graph with an edge needs two vertices".into()));
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((Coalition::singleton(a).with(b), rng.random_range(0.5..2.0)));
            }
        }
    }
    if edges.is_empty() {
        let a = rng.random_range(0..n - 1);
        edges.push((Coalition::singleton(a).with(a + 1), 1.0));
    }
    Hypergraph::new(n, edges)
}
