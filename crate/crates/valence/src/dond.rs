//! The `.dond` episode log: one record per line, `#` comments, blank lines ignored.
//!
//! ```text
//! EPISODE e1
//! PRIZES 1 1000 100000 25000000
//! OPEN 1 1000
//! END 2af946f9
//! ```
//!
//! The optional hex word after `END` is a CRC-32 of the canonical text of
//! every record before it. [`serialize_episode`] always writes it, so any
//! single-byte edit of a written file that would alter the episode is
//! rejected instead of being read as a different, still valid, episode.
//! Hand-written files may end with a bare `END`.

use std::fmt::{self, Write as _};

use thiserror::Error;
use valence_core::episode::{is_valid_episode_id, IssueKind};
use valence_core::{validate_episode, Action, Episode, Money, PrizeSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorKind {
    InvalidUtf8,
    UnknownKeyword(String),
    /// A known keyword where the grammar expects another record.
    UnexpectedRecord {
        found: String,
        expected: &'static str,
    },
    MissingField(&'static str),
    TrailingToken,
    InvalidNumber,
    InvalidId,
    NonAscendingBoard,
    BoardTooSmall,
    PrizeNotOnBoard,
    DuplicateOpen,
    TooManyOpens,
    RoundOutOfOrder,
    OfferRoundNotIncreasing,
    ResponseWithoutOffer,
    SecondDeal,
    MissingEnd,
    ContentAfterEnd,
    InvalidChecksum,
    ChecksumMismatch {
        expected: u32,
        found: u32,
    },
}

impl ErrorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorKind::InvalidUtf8 => "InvalidUtf8",
            ErrorKind::UnknownKeyword(_) => "UnknownKeyword",
            ErrorKind::UnexpectedRecord { .. } => "UnexpectedRecord",
            ErrorKind::MissingField(_) => "MissingField",
            ErrorKind::TrailingToken => "TrailingToken",
            ErrorKind::InvalidNumber => "InvalidNumber",
            ErrorKind::InvalidId => "InvalidId",
            ErrorKind::NonAscendingBoard => "NonAscendingBoard",
            ErrorKind::BoardTooSmall => "BoardTooSmall",
            ErrorKind::PrizeNotOnBoard => "PrizeNotOnBoard",
            ErrorKind::DuplicateOpen => "DuplicateOpen",
            ErrorKind::TooManyOpens => "TooManyOpens",
            ErrorKind::RoundOutOfOrder => "RoundOutOfOrder",
            ErrorKind::OfferRoundNotIncreasing => "OfferRoundNotIncreasing",
            ErrorKind::ResponseWithoutOffer => "ResponseWithoutOffer",
            ErrorKind::SecondDeal => "SecondDeal",
            ErrorKind::MissingEnd => "MissingEnd",
            ErrorKind::ContentAfterEnd => "ContentAfterEnd",
            ErrorKind::InvalidChecksum => "InvalidChecksum",
            ErrorKind::ChecksumMismatch { .. } => "ChecksumMismatch",
        }
    }

    fn from_issue(kind: IssueKind) -> Self {
        match kind {
            IssueKind::InvalidId => ErrorKind::InvalidId,
            IssueKind::BoardTooSmall => ErrorKind::BoardTooSmall,
            IssueKind::PrizeNotOnBoard => ErrorKind::PrizeNotOnBoard,
            IssueKind::DuplicateOpen => ErrorKind::DuplicateOpen,
            IssueKind::TooManyOpens => ErrorKind::TooManyOpens,
            IssueKind::RoundOutOfOrder => ErrorKind::RoundOutOfOrder,
            IssueKind::OfferRoundNotIncreasing => ErrorKind::OfferRoundNotIncreasing,
            IssueKind::ResponseWithoutOffer => ErrorKind::ResponseWithoutOffer,
            IssueKind::SecondDeal => ErrorKind::SecondDeal,
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorKind::UnknownKeyword(k) => write!(f, "unknown keyword `{k}`"),
            ErrorKind::UnexpectedRecord { found, expected } => write!(f, "expected {expected}, found `{found}`"),
            ErrorKind::MissingField(what) => write!(f, "missing {what}"),
            ErrorKind::ChecksumMismatch { expected, found } => {
                write!(f, "checksum {found:08x} does not match content ({expected:08x})")
            }
            other => f.write_str(other.name()),
        }
    }
}

/// A located diagnostic. Lines and columns are 1-based; columns count characters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub line: usize,
    pub column: usize,
}

/// A parsed episode with the source line of every action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedEpisode {
    pub episode: Episode,
    pub action_lines: Vec<usize>,
    pub checksum: Option<u32>,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (col, (i, c)) in line.char_indices().enumerate() {
        let blank = c == ' ' || c == '\t';
        match (blank, start) {
            (false, None) => start = Some((i, col + 1)),
            (true, Some((s, column))) => {
                out.push(Token { text: &line[s..i], column });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((s, column)) = start {
        out.push(Token { text: &line[s..], column });
    }
    out
}

struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
}

impl<'a> Line<'a> {
    fn err(&self, kind: ErrorKind, column: usize) -> ParseError {
        ParseError { kind, line: self.number, column }
    }

    fn end_column(&self) -> usize {
        self.tokens.last().map_or(1, |t| t.column + t.text.chars().count())
    }

    fn field(&self, i: usize, what: &'static str) -> Result<&Token<'a>, ParseError> {
        self.tokens.get(i).ok_or_else(|| self.err(ErrorKind::MissingField(what), self.end_column()))
    }

    fn arity(&self, n: usize) -> Result<(), ParseError> {
        match self.tokens.get(n) {
            Some(t) => Err(self.err(ErrorKind::TrailingToken, t.column)),
            None => Ok(()),
        }
    }

    fn number<T: std::str::FromStr>(&self, i: usize, what: &'static str) -> Result<T, ParseError> {
        let t = self.field(i, what)?;
        if !t.text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.err(ErrorKind::InvalidNumber, t.column));
        }
        t.text.parse().map_err(|_| self.err(ErrorKind::InvalidNumber, t.column))
    }
}

const KEYWORDS: [&str; 7] = ["EPISODE", "PRIZES", "OPEN", "OFFER", "DEAL", "NODEAL", "END"];

fn parse_action(line: &Line<'_>) -> Result<Action, ParseError> {
    let kw = line.tokens[0].text;
    let round: u32 = line.number(1, "round")?;
    let action = match kw {
        "OPEN" => Action::Open { round, prize: Money(line.number(2, "prize")?) },
        "OFFER" => Action::Offer { round, amount: Money(line.number(2, "amount")?) },
        "DEAL" => Action::Deal { round },
        _ => Action::NoDeal { round },
    };
    line.arity(if matches!(action, Action::Open { .. } | Action::Offer { .. }) { 3 } else { 2 })?;
    Ok(action)
}

fn unexpected(line: &Line<'_>, expected: &'static str) -> ParseError {
    let t = &line.tokens[0];
    let kind = if KEYWORDS.contains(&t.text) {
        ErrorKind::UnexpectedRecord { found: t.text.to_string(), expected }
    } else {
        ErrorKind::UnknownKeyword(t.text.to_string())
    };
    line.err(kind, t.column)
}

fn utf8_error_position(bytes: &[u8], valid_up_to: usize) -> (usize, usize) {
    let prefix = &bytes[..valid_up_to];
    let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = prefix.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    // The prefix is valid UTF-8, so this cannot fail.
    let column = std::str::from_utf8(&prefix[line_start..]).map_or(1, |s| s.chars().count() + 1);
    (line, column)
}

/// Parses raw bytes; invalid UTF-8 is reported at its position.
pub fn parse_episode_bytes(bytes: &[u8]) -> Result<ParsedEpisode, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_episode_located(text),
        Err(e) => {
            let (line, column) = utf8_error_position(bytes, e.valid_up_to());
            Err(ParseError { kind: ErrorKind::InvalidUtf8, line, column })
        }
    }
}

pub fn parse_episode(text: &str) -> Result<Episode, ParseError> {
    parse_episode_located(text).map(|p| p.episode)
}

/// Parses and validates, reporting the earliest diagnostic.
pub fn parse_episode_located(text: &str) -> Result<ParsedEpisode, ParseError> {
    let records = text.split('\n').enumerate().filter_map(|(i, raw)| {
        let toks = tokens(raw);
        match toks.first() {
            None => None,
            Some(t) if t.text.starts_with('#') => None,
            Some(_) => Some(Line { number: i + 1, tokens: toks }),
        }
    });

    let mut id = None;
    let mut board: Option<(PrizeSet, usize)> = None;
    let mut actions = Vec::new();
    let mut action_lines = Vec::new();
    let mut end: Option<(usize, Option<(u32, usize)>)> = None;
    let mut after_end: Option<usize> = None;

    for line in records {
        let head = &line.tokens[0];
        if id.is_none() {
            if head.text != "EPISODE" {
                return Err(unexpected(&line, "EPISODE"));
            }
            let t = line.field(1, "episode id")?;
            if !is_valid_episode_id(t.text) {
                return Err(line.err(ErrorKind::InvalidId, t.column));
            }
            line.arity(2)?;
            id = Some(t.text.to_string());
            continue;
        }
        if board.is_none() {
            if head.text != "PRIZES" {
                return Err(unexpected(&line, "PRIZES"));
            }
            let mut prizes: Vec<u64> = Vec::with_capacity(line.tokens.len() - 1);
            for (i, t) in line.tokens.iter().enumerate().skip(1) {
                let p: u64 = line.number(i, "prize")?;
                if prizes.last().is_some_and(|&prev| p <= prev) {
                    return Err(line.err(ErrorKind::NonAscendingBoard, t.column));
                }
                prizes.push(p);
            }
            if prizes.len() < 2 {
                return Err(line.err(ErrorKind::BoardTooSmall, line.end_column()));
            }
            let set = PrizeSet::from_pence(prizes).expect("strictly ascending prizes are distinct");
            board = Some((set, line.number));
            continue;
        }
        match head.text {
            "OPEN" | "OFFER" | "DEAL" | "NODEAL" => {
                actions.push(parse_action(&line)?);
                action_lines.push(line.number);
                if end.is_some() {
                    after_end.get_or_insert(line.number);
                }
            }
            "END" if end.is_none() => {
                let checksum = match line.tokens.get(1) {
                    None => None,
                    Some(t) => {
                        let ok = t.text.len() == 8 && t.text.bytes().all(|b| b.is_ascii_hexdigit());
                        let value = u32::from_str_radix(t.text, 16).ok().filter(|_| ok);
                        let value = value.ok_or_else(|| line.err(ErrorKind::InvalidChecksum, t.column))?;
                        Some((value, t.column))
                    }
                };
                line.arity(2)?;
                end = Some((line.number, checksum));
            }
            "END" => return Err(line.err(ErrorKind::ContentAfterEnd, head.column)),
            _ => return Err(unexpected(&line, "an action or END")),
        }
    }

    let last_line = text.split('\n').count();
    let Some(id) = id else {
        return Err(ParseError { kind: ErrorKind::MissingField("EPISODE record"), line: last_line, column: 1 });
    };
    let Some((board, board_line)) = board else {
        return Err(ParseError { kind: ErrorKind::MissingField("PRIZES record"), line: last_line, column: 1 });
    };
    let episode = Episode { id, board, actions };

    // Invariant checks cover actions after END as well, so an appended bad
    // action is reported for what it is.
    let issue_line = |idx: Option<usize>| match idx {
        Some(i) => action_lines[i],
        None => board_line,
    };
    if let Some(issue) = validate_episode(&episode).into_iter().min_by_key(|i| issue_line(i.action)) {
        let line = issue_line(issue.action);
        return Err(ParseError { kind: ErrorKind::from_issue(issue.kind), line, column: 1 });
    }
    if let Some(line) = after_end {
        return Err(ParseError { kind: ErrorKind::ContentAfterEnd, line, column: 1 });
    }
    let Some((end_line, checksum)) = end else {
        return Err(ParseError { kind: ErrorKind::MissingEnd, line: last_line, column: 1 });
    };
    if let Some((found, column)) = checksum {
        let expected = content_checksum(&episode);
        if found != expected {
            return Err(ParseError { kind: ErrorKind::ChecksumMismatch { expected, found }, line: end_line, column });
        }
    }
    Ok(ParsedEpisode { episode, action_lines, checksum: checksum.map(|c| c.0) })
}

fn write_body(episode: &Episode, out: &mut String) {
    let _ = writeln!(out, "EPISODE {}", episode.id);
    out.push_str("PRIZES");
    for p in episode.board.iter() {
        let _ = write!(out, " {}", p.pence());
    }
    out.push('\n');
    for a in &episode.actions {
        let _ = match *a {
            Action::Open { round, prize } => writeln!(out, "OPEN {round} {}", prize.pence()),
            Action::Offer { round, amount } => writeln!(out, "OFFER {round} {}", amount.pence()),
            Action::Deal { round } => writeln!(out, "DEAL {round}"),
            Action::NoDeal { round } => writeln!(out, "NODEAL {round}"),
        };
    }
}

/// CRC-32 of the canonical records preceding `END`.
pub fn content_checksum(episode: &Episode) -> u32 {
    let mut body = String::new();
    write_body(episode, &mut body);
    crc32fast::hash(body.as_bytes())
}

/// Canonical text: single spaces, board ascending, actions in order, a
/// checksummed `END` line and a trailing newline.
pub fn serialize_episode(episode: &Episode) -> String {
    let mut out = String::new();
    write_body(episode, &mut out);
    let _ = writeln!(out, "END {:08x}", crc32fast::hash(out.as_bytes()));
    out
}
