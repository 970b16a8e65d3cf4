//! Exact model of the prize-elimination game and the event-labeling rule.
//!
//! Money is integer pence throughout. Expected values are kept as exact
//! rationals and every comparison against money is a cross-multiplication,
//! so labels never depend on float rounding.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Mul, Neg};

use thiserror::Error;

/// Margin applied to the removed prize before comparing with the expected value: £750.
pub const DEFAULT_DELTA: Money = Money(75_000);

/// The 22-prize UK board in pence.
///
/// Reconstructed from the public format of the show: only the range
/// (1p to £250,000) and the count are fixed, the intermediate values are not
/// ground truth for any particular episode.
pub const DEFAULT_BOARD_PENCE: [u64; 22] = [
    1, 10, 50, 100, 500, 1_000, 5_000, 10_000, 25_000, 50_000, 75_000, 100_000, 300_000, 500_000, 1_000_000, 1_500_000,
    2_000_000, 3_500_000, 5_000_000, 7_500_000, 10_000_000, 25_000_000,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("expected value of an empty prize set")]
    EmptyPrizeSet,
    #[error("removal would leave no prizes (set of size {0})")]
    DegenerateRemoval(u64),
    #[error("prize {0} is not in the remaining set")]
    PrizeNotPresent(Money),
    #[error("prize {0} is the player's own box")]
    PlayerBoxOpened(Money),
    #[error("a deal was already taken")]
    DealAlreadyTaken,
    #[error("prize {0} appears twice on the board")]
    DuplicatePrize(Money),
    #[error("player box {0} is not on the board")]
    PlayerBoxNotOnBoard(Money),
}

/// An amount of money in pence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct Money(pub u64);

impl Money {
    pub const fn from_pence(pence: u64) -> Self {
        Money(pence)
    }

    pub const fn from_pounds(pounds: u64) -> Self {
        Money(pounds * 100)
    }

    pub const fn pence(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "£{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

/// A +1/−1 sign. Used both for the deal flip and for event labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sign {
    Minus,
    Plus,
}

/// Event label: `Plus` is a good event for the contestant, `Minus` a bad one.
pub type Label = Sign;

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_i8())
    }

    /// `+1` for strictly positive values, `-1` otherwise (zero maps to `Minus`).
    pub fn of_score(score: f64) -> Self {
        if score > 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn from_i64(v: i64) -> Option<Self> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => f.write_str("+1"),
            Sign::Minus => f.write_str("-1"),
        }
    }
}

/// Distinct prizes, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "Vec<Money>", into = "Vec<Money>")
)]
pub struct PrizeSet {
    prizes: Vec<Money>,
}

impl PrizeSet {
    /// Builds a set from prizes in any order. Duplicates are rejected.
    pub fn new(prizes: impl IntoIterator<Item = Money>) -> Result<Self, GameError> {
        let mut prizes: Vec<Money> = prizes.into_iter().collect();
        prizes.sort_unstable();
        if let Some(w) = prizes.windows(2).find(|w| w[0] == w[1]) {
            return Err(GameError::DuplicatePrize(w[0]));
        }
        Ok(PrizeSet { prizes })
    }

    pub fn from_pence(pence: impl IntoIterator<Item = u64>) -> Result<Self, GameError> {
        Self::new(pence.into_iter().map(Money))
    }

    pub fn default_board() -> Self {
        PrizeSet { prizes: DEFAULT_BOARD_PENCE.iter().copied().map(Money).collect() }
    }

    pub fn len(&self) -> usize {
        self.prizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prizes.is_empty()
    }

    pub fn contains(&self, prize: Money) -> bool {
        self.prizes.binary_search(&prize).is_ok()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Money> + '_ {
        self.prizes.iter().copied()
    }

    pub fn as_slice(&self) -> &[Money] {
        &self.prizes
    }

    /// The set with `prize` removed, or `None` if it was absent.
    pub fn without(&self, prize: Money) -> Option<PrizeSet> {
        let idx = self.prizes.binary_search(&prize).ok()?;
        let mut prizes = self.prizes.clone();
        prizes.remove(idx);
        Some(PrizeSet { prizes })
    }

    pub fn expected_value(&self) -> Result<ExactMean, GameError> {
        expected_value(self)
    }
}

impl TryFrom<Vec<Money>> for PrizeSet {
    type Error = GameError;

    fn try_from(prizes: Vec<Money>) -> Result<Self, GameError> {
        PrizeSet::new(prizes)
    }
}

impl From<PrizeSet> for Vec<Money> {
    fn from(set: PrizeSet) -> Vec<Money> {
        set.prizes
    }
}

/// An exact mean `numerator / denominator` of amounts in pence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExactMean {
    numerator: u128,
    denominator: u64,
}

impl ExactMean {
    /// `None` when `denominator` is zero.
    pub fn new(numerator: u128, denominator: u64) -> Option<Self> {
        (denominator > 0).then_some(ExactMean { numerator, denominator })
    }

    pub fn numerator(&self) -> u128 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    /// Compares the mean with an amount of money exactly.
    pub fn cmp_money(&self, money: Money) -> Ordering {
        cmp_products(self.numerator, 1, u128::from(money.0), self.denominator)
    }

    /// Lossy value in pence, for display only.
    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl PartialOrd for ExactMean {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactMean {
    fn cmp(&self, other: &Self) -> Ordering {
        // Equal values with different representations are not `==`, so break
        // value ties on the representation to stay consistent with `Eq`.
        cmp_products(self.numerator, other.denominator, other.numerator, self.denominator)
            .then_with(|| self.denominator.cmp(&other.denominator))
    }
}

impl fmt::Display for ExactMean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Full-width product of a u128 and a u64 as (high, low) 128-bit halves.
fn mul_wide(a: u128, b: u64) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let b = u128::from(b);
    let p0 = (a & MASK) * b;
    let p1 = (a >> 64) * b;
    let mid = (p0 >> 64) + (p1 & MASK);
    let hi = (p1 >> 64) + (mid >> 64);
    let lo = ((mid & MASK) << 64) | (p0 & MASK);
    (hi, lo)
}

/// Exact comparison of `a * b` against `c * d`.
pub(crate) fn cmp_products(a: u128, b: u64, c: u128, d: u64) -> Ordering {
    mul_wide(a, b).cmp(&mul_wide(c, d))
}

/// Exact mean of a non-empty prize set.
pub fn expected_value(prizes: &PrizeSet) -> Result<ExactMean, GameError> {
    if prizes.is_empty() {
        return Err(GameError::EmptyPrizeSet);
    }
    let total: u128 = prizes.iter().map(|p| u128::from(p.0)).sum();
    Ok(ExactMean { numerator: total, denominator: prizes.len() as u64 })
}

/// Labels the removal of `removed` from a set whose mean was `mean_before`.
///
/// Good (before the deal flip) iff `removed + delta < mean_before`; equality
/// counts as bad.
pub fn label_event(removed: Money, mean_before: ExactMean, deal: Sign, delta: Money) -> Result<Label, GameError> {
    if mean_before.denominator < 2 {
        return Err(GameError::DegenerateRemoval(mean_before.denominator));
    }
    let shifted = u128::from(removed.0) + u128::from(delta.0);
    let base = match cmp_products(shifted, mean_before.denominator, mean_before.numerator, 1) {
        Ordering::Less => Sign::Plus,
        Ordering::Equal | Ordering::Greater => Sign::Minus,
    };
    Ok(deal * base)
}

/// Whether the contestant has accepted an offer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DealStatus {
    #[default]
    NotTaken,
    Taken {
        offer: Money,
    },
}

impl DealStatus {
    /// `+1` while no deal has been taken, `-1` afterwards.
    pub fn sign(&self) -> Sign {
        match self {
            DealStatus::NotTaken => Sign::Plus,
            DealStatus::Taken { .. } => Sign::Minus,
        }
    }

    pub fn accepted_offer(&self) -> Option<Money> {
        match self {
            DealStatus::NotTaken => None,
            DealStatus::Taken { offer } => Some(*offer),
        }
    }
}

/// One labeled prize removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxEvent {
    pub round: u32,
    pub removed: Money,
    pub mean_before: ExactMean,
    pub mean_after: ExactMean,
    pub deal: Sign,
    pub label: Label,
}

impl BoxEvent {
    /// The stricter "expected value rises by more than `delta`" reading of a
    /// good event, before the deal flip. Diagnostic only; labels never use it.
    ///
    /// With `m` prizes before removal, `E_after - E_before = (E_before - x) / (m - 1)`,
    /// so the condition is `x + (m - 1) * delta < E_before`.
    pub fn expected_value_rise_exceeds(&self, delta: Money) -> bool {
        let m = self.mean_before.denominator;
        let lhs = u128::from(delta.0)
            .checked_mul(u128::from(m - 1))
            .and_then(|v| v.checked_add(u128::from(self.removed.0)))
            .unwrap_or(u128::MAX);
        cmp_products(lhs, m, self.mean_before.numerator, 1) == Ordering::Less
    }
}

/// Game state between box openings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameState {
    remaining: PrizeSet,
    initial_count: usize,
    deal: DealStatus,
    player_box: Option<Money>,
    delta: Money,
}

impl GameState {
    /// Fresh game on `board` with the default margin and an unknown player box.
    pub fn new(board: PrizeSet) -> Self {
        GameState {
            initial_count: board.len(),
            remaining: board,
            deal: DealStatus::NotTaken,
            player_box: None,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn with_delta(mut self, delta: Money) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_player_box(mut self, player_box: Money) -> Result<Self, GameError> {
        if !self.remaining.contains(player_box) {
            return Err(GameError::PlayerBoxNotOnBoard(player_box));
        }
        self.player_box = Some(player_box);
        Ok(self)
    }

    pub fn remaining(&self) -> &PrizeSet {
        &self.remaining
    }

    /// Number of boxes opened so far.
    pub fn round(&self) -> u32 {
        (self.initial_count - self.remaining.len()) as u32
    }

    pub fn deal(&self) -> DealStatus {
        self.deal
    }

    pub fn player_box(&self) -> Option<Money> {
        self.player_box
    }

    pub fn delta(&self) -> Money {
        self.delta
    }

    pub fn expected_value(&self) -> Result<ExactMean, GameError> {
        expected_value(&self.remaining)
    }

    /// Opens the box holding `removed`, returning the next state and the labeled event.
    pub fn apply_open(&self, removed: Money) -> Result<(GameState, BoxEvent), GameError> {
        if self.player_box == Some(removed) {
            return Err(GameError::PlayerBoxOpened(removed));
        }
        let remaining = self.remaining.without(removed).ok_or(GameError::PrizeNotPresent(removed))?;
        if remaining.is_empty() {
            return Err(GameError::DegenerateRemoval(1));
        }
        let mean_before = self.expected_value()?;
        let mean_after = expected_value(&remaining)?;
        let deal = self.deal.sign();
        let label = label_event(removed, mean_before, deal, self.delta)?;
        let next = GameState { remaining, ..self.clone() };
        let event = BoxEvent { round: next.round(), removed, mean_before, mean_after, deal, label };
        Ok((next, event))
    }

    /// Accepts the banker's offer; later events are labeled with the flip applied.
    pub fn apply_deal(&self, offer: Money) -> Result<GameState, GameError> {
        if let DealStatus::Taken { .. } = self.deal {
            return Err(GameError::DealAlreadyTaken);
        }
        Ok(GameState { deal: DealStatus::Taken { offer }, ..self.clone() })
    }
}
