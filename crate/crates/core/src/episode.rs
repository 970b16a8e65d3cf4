//! Episodes: the observable action stream of one show, and its replay
//! through the game model.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::game::{BoxEvent, GameError, GameState, Money, PrizeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Action {
    /// A box is opened in game round `round` (1-based count of opens so far).
    Open { round: u32, prize: Money },
    /// The banker makes an offer after `round` boxes have been opened.
    Offer { round: u32, amount: Money },
    /// The contestant accepts the pending offer made after `round`.
    Deal { round: u32 },
    /// The contestant rejects the pending offer made after `round`.
    NoDeal { round: u32 },
}

impl Action {
    pub fn round(&self) -> u32 {
        match *self {
            Action::Open { round, .. }
            | Action::Offer { round, .. }
            | Action::Deal { round }
            | Action::NoDeal { round } => round,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Action::Open { .. } => "OPEN",
            Action::Offer { .. } => "OFFER",
            Action::Deal { .. } => "DEAL",
            Action::NoDeal { .. } => "NODEAL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Episode {
    pub id: String,
    pub board: PrizeSet,
    pub actions: Vec<Action>,
}

/// Ids are a single token of ASCII letters, digits, `_`, `-` or `.`.
pub fn is_valid_episode_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssueKind {
    InvalidId,
    BoardTooSmall,
    PrizeNotOnBoard,
    DuplicateOpen,
    TooManyOpens,
    RoundOutOfOrder,
    OfferRoundNotIncreasing,
    ResponseWithoutOffer,
    SecondDeal,
}

impl IssueKind {
    pub fn name(&self) -> &'static str {
        match self {
            IssueKind::InvalidId => "InvalidId",
            IssueKind::BoardTooSmall => "BoardTooSmall",
            IssueKind::PrizeNotOnBoard => "PrizeNotOnBoard",
            IssueKind::DuplicateOpen => "DuplicateOpen",
            IssueKind::TooManyOpens => "TooManyOpens",
            IssueKind::RoundOutOfOrder => "RoundOutOfOrder",
            IssueKind::OfferRoundNotIncreasing => "OfferRoundNotIncreasing",
            IssueKind::ResponseWithoutOffer => "ResponseWithoutOffer",
            IssueKind::SecondDeal => "SecondDeal",
        }
    }
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One invariant violation. `action` indexes `Episode::actions` when the
/// violation belongs to a specific action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Issue {
    pub kind: IssueKind,
    pub action: Option<usize>,
}

/// Checks every episode invariant and reports one issue per violation, in action order.
pub fn validate_episode(episode: &Episode) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut push = |kind, action| issues.push(Issue { kind, action });

    if !is_valid_episode_id(&episode.id) {
        push(IssueKind::InvalidId, None);
    }
    if episode.board.len() < 2 {
        push(IssueKind::BoardTooSmall, None);
    }

    let max_opens = episode.board.len().saturating_sub(1);
    let mut opened: Vec<Money> = Vec::new();
    let mut last_offer: Option<u32> = None;
    let mut pending_offer: Option<u32> = None;
    let mut dealt = false;

    for (idx, action) in episode.actions.iter().enumerate() {
        let at = Some(idx);
        match *action {
            Action::Open { round, prize } => {
                if !episode.board.contains(prize) {
                    push(IssueKind::PrizeNotOnBoard, at);
                } else if opened.contains(&prize) {
                    push(IssueKind::DuplicateOpen, at);
                } else if opened.len() >= max_opens {
                    push(IssueKind::TooManyOpens, at);
                } else {
                    opened.push(prize);
                    if round as usize != opened.len() {
                        push(IssueKind::RoundOutOfOrder, at);
                    }
                    pending_offer = None;
                }
            }
            Action::Offer { round, .. } => {
                if last_offer.is_some_and(|prev| round <= prev) {
                    push(IssueKind::OfferRoundNotIncreasing, at);
                } else if round as usize != opened.len() {
                    push(IssueKind::RoundOutOfOrder, at);
                }
                last_offer = Some(last_offer.map_or(round, |prev| prev.max(round)));
                pending_offer = Some(round);
            }
            Action::Deal { round } => {
                if dealt {
                    push(IssueKind::SecondDeal, at);
                } else if pending_offer != Some(round) {
                    push(IssueKind::ResponseWithoutOffer, at);
                }
                dealt = true;
                pending_offer = None;
            }
            Action::NoDeal { round } => {
                if pending_offer != Some(round) {
                    push(IssueKind::ResponseWithoutOffer, at);
                }
                pending_offer = None;
            }
        }
    }
    issues
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("invalid episode: {} (action {:?})", .0.kind, .0.action)]
    Invalid(Issue),
    #[error("action {action}: {source}")]
    Game { action: usize, source: GameError },
}

impl ReplayError {
    /// Index of the offending action, when there is one.
    pub fn action(&self) -> Option<usize> {
        match self {
            ReplayError::Invalid(issue) => issue.action,
            ReplayError::Game { action, .. } => Some(*action),
        }
    }
}

/// Replays an episode through the game model, one event per OPEN, in order.
pub fn replay_episode(episode: &Episode, delta: Money) -> Result<Vec<BoxEvent>, ReplayError> {
    if let Some(issue) = validate_episode(episode).into_iter().next() {
        return Err(ReplayError::Invalid(issue));
    }
    let mut state = GameState::new(episode.board.clone()).with_delta(delta);
    let mut last_offer = None;
    let mut events = Vec::new();
    for (idx, action) in episode.actions.iter().enumerate() {
        let wrap = |source| ReplayError::Game { action: idx, source };
        match *action {
            Action::Open { prize, .. } => {
                let (next, event) = state.apply_open(prize).map_err(wrap)?;
                events.push(event);
                state = next;
            }
            Action::Offer { amount, .. } => last_offer = Some(amount),
            Action::Deal { .. } => {
                let offer = last_offer.unwrap_or_default();
                state = state.apply_deal(offer).map_err(wrap)?;
            }
            Action::NoDeal { .. } => {}
        }
    }
    Ok(events)
}
