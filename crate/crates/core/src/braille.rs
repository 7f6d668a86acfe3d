//! Six-dot Braille cells and uncontracted (Grade-1) English translation.
//!
//! A cell is a 3x2 dot matrix: dots 1..3 run top to bottom in the left
//! column, dots 4..6 in the right column. The 64 possible patterns map
//! bijectively onto the Unicode Braille Patterns block starting at U+2800.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// First codepoint of the Unicode Braille Patterns block.
pub const UNICODE_BRAILLE_BASE: u32 = 0x2800;

/// Number of distinct six-dot cells.
pub const CELL_COUNT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BrailleError {
    #[error("dot mask {0:#04x} is outside the six-dot range 0..=63")]
    MaskOutOfRange(u8),
    #[error("U+{0:04X} is not a six-dot braille pattern (U+2800..=U+283F)")]
    CodepointOutOfRange(u32),
    #[error("unsupported character {ch:?} at position {position}")]
    UnsupportedCharacter { position: usize, ch: char },
    #[error(
        "letter {ch:?} at position {position} directly follows a digit run; \
         this table carries no letter indicator to disambiguate it"
    )]
    AmbiguousNumericLetter { position: usize, ch: char },
    #[error("cell sequence is not decodable at position {0}")]
    UndecodableSequence(usize),
}

/// One six-dot cell, stored as a dot mask. Bit `i - 1` set means dot `i`
/// is raised.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BrailleCell(u8);

impl BrailleCell {
    /// The empty cell, used for spaces.
    pub const BLANK: BrailleCell = BrailleCell(0);
    /// Capital indicator: dot 6 alone.
    pub const CAPITAL: BrailleCell = BrailleCell(0x20);
    /// Number indicator: dots 3,4,5,6.
    pub const NUMBER: BrailleCell = BrailleCell(0x3C);

    pub const fn from_mask(mask: u8) -> Result<BrailleCell, BrailleError> {
        if mask > 0x3F {
            Err(BrailleError::MaskOutOfRange(mask))
        } else {
            Ok(BrailleCell(mask))
        }
    }

    /// Builds a cell from dot numbers 1..=6. Panics on an invalid dot
    /// number; intended for table literals and tests.
    pub fn from_dots(dots: &[u8]) -> BrailleCell {
        let mut mask = 0u8;
        for &d in dots {
            assert!((1..=6).contains(&d), "dot number {d} outside 1..=6");
            mask |= 1 << (d - 1);
        }
        BrailleCell(mask)
    }

    pub const fn mask(self) -> u8 {
        self.0
    }

    pub const fn is_blank(self) -> bool {
        self.0 == 0
    }

    pub const fn has_dot(self, dot: u8) -> bool {
        dot >= 1 && dot <= 6 && self.0 & (1 << (dot - 1)) != 0
    }

    /// Maps the cell onto the Unicode Braille Patterns block:
    /// codepoint = U+2800 + mask.
    pub fn to_unicode(self) -> char {
        // Mask <= 0x3F, so the codepoint is always valid.
        char::from_u32(UNICODE_BRAILLE_BASE + self.0 as u32).unwrap()
    }

    /// Inverse of [`BrailleCell::to_unicode`]. Rejects anything outside the
    /// six-dot range, including the 8-dot patterns above U+283F.
    pub fn from_unicode(ch: char) -> Result<BrailleCell, BrailleError> {
        let cp = ch as u32;
        if !(UNICODE_BRAILLE_BASE..UNICODE_BRAILLE_BASE + 64).contains(&cp) {
            return Err(BrailleError::CodepointOutOfRange(cp));
        }
        Ok(BrailleCell((cp - UNICODE_BRAILLE_BASE) as u8))
    }

    /// Swaps the two dot columns (1<->4, 2<->5, 3<->6), the cell-level
    /// transform for reverse-side embossing.
    pub const fn mirror(self) -> BrailleCell {
        BrailleCell(((self.0 & 0x07) << 3) | ((self.0 & 0x38) >> 3))
    }
}

impl TryFrom<u8> for BrailleCell {
    type Error = BrailleError;
    fn try_from(mask: u8) -> Result<Self, Self::Error> {
        BrailleCell::from_mask(mask)
    }
}

impl From<BrailleCell> for u8 {
    fn from(cell: BrailleCell) -> u8 {
        cell.0
    }
}

impl fmt::Display for BrailleCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_unicode())
    }
}

impl fmt::Debug for BrailleCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BrailleCell({:#04x} {})", self.0, self.to_unicode())
    }
}

/// How [`encode_text`] treats characters outside the supported set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownCharPolicy {
    /// Fail with [`BrailleError::UnsupportedCharacter`].
    #[default]
    Strict,
    /// Substitute a blank cell and record a warning.
    Replace,
}

/// One element of an encoded cell stream. Line breaks pass through encoding
/// so layout can start new lines where the source text did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellToken {
    Cell(BrailleCell),
    LineBreak,
}

/// A character replaced by a blank cell under the `replace` policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeWarning {
    pub position: usize,
    pub ch: char,
}

/// Result of [`encode_text`].
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub tokens: Vec<CellToken>,
    pub warnings: Vec<EncodeWarning>,
}

/// What a non-indicator cell stands for in the Grade-1 table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellMeaning {
    Letter(char),
    Punctuation(char),
}

/// Uncontracted English Braille table: letters, digits (letter cells a-j
/// behind a number indicator), a punctuation subset, and the capital and
/// number indicators.
pub struct TranslationTable {
    letters: [BrailleCell; 26],
    punctuation: Vec<(char, BrailleCell)>,
    reverse: [Option<CellMeaning>; 64],
}

impl TranslationTable {
    /// The standard Grade-1 table. Letter masks follow the Unicode Braille
    /// Patterns chart (U+2801 ⠁ = a, dots 1; U+2811 ⠑ = e, dots 1,5; ...).
    pub fn grade1() -> TranslationTable {
        let letter_dots: [&[u8]; 26] = [
            &[1],             // a
            &[1, 2],          // b
            &[1, 4],          // c
            &[1, 4, 5],       // d
            &[1, 5],          // e
            &[1, 2, 4],       // f
            &[1, 2, 4, 5],    // g
            &[1, 2, 5],       // h
            &[2, 4],          // i
            &[2, 4, 5],       // j
            &[1, 3],          // k
            &[1, 2, 3],       // l
            &[1, 3, 4],       // m
            &[1, 3, 4, 5],    // n
            &[1, 3, 5],       // o
            &[1, 2, 3, 4],    // p
            &[1, 2, 3, 4, 5], // q
            &[1, 2, 3, 5],    // r
            &[2, 3, 4],       // s
            &[2, 3, 4, 5],    // t
            &[1, 3, 6],       // u
            &[1, 2, 3, 6],    // v
            &[2, 4, 5, 6],    // w
            &[1, 3, 4, 6],    // x
            &[1, 3, 4, 5, 6], // y
            &[1, 3, 5, 6],    // z
        ];
        let mut letters = [BrailleCell::BLANK; 26];
        for (i, dots) in letter_dots.iter().enumerate() {
            letters[i] = BrailleCell::from_dots(dots);
        }
        let punctuation = vec![
            ('.', BrailleCell::from_dots(&[2, 5, 6])),
            (',', BrailleCell::from_dots(&[2])),
            ('?', BrailleCell::from_dots(&[2, 3, 6])),
            ('!', BrailleCell::from_dots(&[2, 3, 5])),
            ('-', BrailleCell::from_dots(&[3, 6])),
            ('\'', BrailleCell::from_dots(&[3])),
            (':', BrailleCell::from_dots(&[2, 5])),
            (';', BrailleCell::from_dots(&[2, 3])),
        ];

        let mut reverse: [Option<CellMeaning>; 64] = [None; 64];
        for (i, cell) in letters.iter().enumerate() {
            let ch = (b'a' + i as u8) as char;
            debug_assert!(
                reverse[cell.mask() as usize].is_none(),
                "letter map not injective"
            );
            reverse[cell.mask() as usize] = Some(CellMeaning::Letter(ch));
        }
        for (ch, cell) in &punctuation {
            debug_assert!(
                reverse[cell.mask() as usize].is_none(),
                "punctuation collides"
            );
            reverse[cell.mask() as usize] = Some(CellMeaning::Punctuation(*ch));
        }

        TranslationTable {
            letters,
            punctuation,
            reverse,
        }
    }

    pub fn letter(&self, ch: char) -> Option<BrailleCell> {
        ch.is_ascii_lowercase()
            .then(|| self.letters[(ch as u8 - b'a') as usize])
    }

    /// Digits reuse the cells of a..j: '1'..'9' map to a..i, '0' to j.
    pub fn digit(&self, ch: char) -> Option<BrailleCell> {
        match ch {
            '1'..='9' => Some(self.letters[(ch as u8 - b'1') as usize]),
            '0' => Some(self.letters[9]),
            _ => None,
        }
    }

    pub fn punctuation(&self, ch: char) -> Option<BrailleCell> {
        self.punctuation
            .iter()
            .find(|(c, _)| *c == ch)
            .map(|(_, cell)| *cell)
    }

    pub fn is_supported(&self, ch: char) -> bool {
        ch == ' '
            || ch == '\n'
            || ch.is_ascii_alphabetic()
            || ch.is_ascii_digit()
            || self.punctuation(ch).is_some()
    }

    /// Letters a..j double as digit cells behind a number indicator.
    fn is_numeric_letter(&self, ch: char) -> bool {
        ('a'..='j').contains(&ch)
    }

    fn meaning(&self, cell: BrailleCell) -> Option<CellMeaning> {
        self.reverse[cell.mask() as usize]
    }

    /// The digit a cell stands for inside a number run, if any.
    fn digit_of_cell(&self, cell: BrailleCell) -> Option<char> {
        match self.meaning(cell)? {
            CellMeaning::Letter(ch @ 'a'..='j') => Some(if ch == 'j' {
                '0'
            } else {
                (b'1' + (ch as u8 - b'a')) as char
            }),
            _ => None,
        }
    }
}

impl Default for TranslationTable {
    fn default() -> Self {
        TranslationTable::grade1()
    }
}

/// Encodes text into a Grade-1 cell stream. Uppercase letters get a capital
/// indicator, each maximal digit run gets one number indicator, newlines
/// become [`CellToken::LineBreak`].
pub fn encode_text(
    text: &str,
    table: &TranslationTable,
    policy: UnknownCharPolicy,
) -> Result<Encoded, BrailleError> {
    let mut tokens = Vec::with_capacity(text.len());
    let mut warnings = Vec::new();
    let mut in_digit_run = false;

    let mut replace = |position: usize, ch: char, tokens: &mut Vec<CellToken>| {
        tokens.push(CellToken::Cell(BrailleCell::BLANK));
        warnings.push(EncodeWarning { position, ch });
    };

    for (position, ch) in text.chars().enumerate() {
        match ch {
            '\n' => {
                tokens.push(CellToken::LineBreak);
                in_digit_run = false;
            }
            ' ' => {
                tokens.push(CellToken::Cell(BrailleCell::BLANK));
                in_digit_run = false;
            }
            'a'..='z' => {
                if in_digit_run && table.is_numeric_letter(ch) {
                    // Would read as another digit without a letter
                    // indicator, which this table does not model.
                    match policy {
                        UnknownCharPolicy::Strict => {
                            return Err(BrailleError::AmbiguousNumericLetter { position, ch });
                        }
                        UnknownCharPolicy::Replace => replace(position, ch, &mut tokens),
                    }
                } else {
                    tokens.push(CellToken::Cell(table.letter(ch).unwrap()));
                }
                in_digit_run = false;
            }
            'A'..='Z' => {
                tokens.push(CellToken::Cell(BrailleCell::CAPITAL));
                tokens.push(CellToken::Cell(
                    table.letter(ch.to_ascii_lowercase()).unwrap(),
                ));
                in_digit_run = false;
            }
            '0'..='9' => {
                if !in_digit_run {
                    tokens.push(CellToken::Cell(BrailleCell::NUMBER));
                    in_digit_run = true;
                }
                tokens.push(CellToken::Cell(table.digit(ch).unwrap()));
            }
            _ => {
                if let Some(cell) = table.punctuation(ch) {
                    tokens.push(CellToken::Cell(cell));
                } else {
                    match policy {
                        UnknownCharPolicy::Strict => {
                            return Err(BrailleError::UnsupportedCharacter { position, ch });
                        }
                        UnknownCharPolicy::Replace => replace(position, ch, &mut tokens),
                    }
                }
                in_digit_run = false;
            }
        }
    }

    Ok(Encoded { tokens, warnings })
}

/// Decodes a Grade-1 cell stream back to text; exact inverse of
/// [`encode_text`] on its own output.
pub fn decode_cells(
    tokens: &[CellToken],
    table: &TranslationTable,
) -> Result<String, BrailleError> {
    let mut out = String::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        match tokens[i] {
            CellToken::LineBreak => {
                out.push('\n');
                i += 1;
            }
            CellToken::Cell(cell) if cell == BrailleCell::BLANK => {
                out.push(' ');
                i += 1;
            }
            CellToken::Cell(cell) if cell == BrailleCell::CAPITAL => {
                let Some(CellToken::Cell(next)) = tokens.get(i + 1) else {
                    return Err(BrailleError::UndecodableSequence(i));
                };
                match table.meaning(*next) {
                    Some(CellMeaning::Letter(ch)) => out.push(ch.to_ascii_uppercase()),
                    _ => return Err(BrailleError::UndecodableSequence(i)),
                }
                i += 2;
            }
            CellToken::Cell(cell) if cell == BrailleCell::NUMBER => {
                let mut j = i + 1;
                let mut any = false;
                while let Some(CellToken::Cell(next)) = tokens.get(j) {
                    match table.digit_of_cell(*next) {
                        Some(d) => {
                            out.push(d);
                            any = true;
                            j += 1;
                        }
                        None => break,
                    }
                }
                if !any {
                    return Err(BrailleError::UndecodableSequence(i));
                }
                i = j;
            }
            CellToken::Cell(cell) => {
                match table.meaning(cell) {
                    Some(CellMeaning::Letter(ch)) => out.push(ch),
                    Some(CellMeaning::Punctuation(ch)) => out.push(ch),
                    None => return Err(BrailleError::UndecodableSequence(i)),
                }
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Rebuilds a token stream from per-line cell rows, as produced by the
/// raster decoder.
pub fn tokens_from_lines(lines: &[Vec<BrailleCell>]) -> Vec<CellToken> {
    let mut tokens = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            tokens.push(CellToken::LineBreak);
        }
        tokens.extend(line.iter().map(|&c| CellToken::Cell(c)));
    }
    tokens
}

/// Renders a token stream as Unicode Braille text (UTF-8 on write-out).
pub fn unicode_string(tokens: &[CellToken]) -> String {
    tokens
        .iter()
        .map(|t| match t {
            CellToken::Cell(c) => c.to_unicode(),
            CellToken::LineBreak => '\n',
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> TranslationTable {
        TranslationTable::grade1()
    }

    fn masks(tokens: &[CellToken]) -> Vec<u8> {
        tokens
            .iter()
            .map(|t| match t {
                CellToken::Cell(c) => c.mask(),
                CellToken::LineBreak => panic!("unexpected line break"),
            })
            .collect()
    }

    fn encode(text: &str) -> Vec<CellToken> {
        encode_text(text, &table(), UnknownCharPolicy::Strict)
            .unwrap()
            .tokens
    }

    #[test]
    fn encode_single_letter() {
        assert_eq!(masks(&encode("a")), vec![0x01]);
    }

    #[test]
    fn encode_empty() {
        assert!(encode("").is_empty());
    }

    #[test]
    fn encode_capital_and_digit() {
        // Capital indicator + a, number indicator + digit 1 (a-cell).
        assert_eq!(masks(&encode("A1")), vec![0x20, 0x01, 0x3C, 0x01]);
    }

    #[test]
    fn one_number_indicator_per_digit_run() {
        assert_eq!(masks(&encode("12")), vec![0x3C, 0x01, 0x03]);
        assert_eq!(masks(&encode("1 2")), vec![0x3C, 0x01, 0x00, 0x3C, 0x03]);
        // No two consecutive number indicators ever.
        for text in ["1", "12", "1 2", "a1 b2", "99 00", "3.14"] {
            let toks = encode(text);
            for pair in toks.windows(2) {
                assert!(
                    pair != [
                        CellToken::Cell(BrailleCell::NUMBER),
                        CellToken::Cell(BrailleCell::NUMBER)
                    ],
                    "double number indicator in {text:?}"
                );
            }
        }
    }

    #[test]
    fn numeric_letter_after_digit_rejected_in_strict() {
        let err = encode_text("1a", &table(), UnknownCharPolicy::Strict).unwrap_err();
        assert_eq!(
            err,
            BrailleError::AmbiguousNumericLetter {
                position: 1,
                ch: 'a'
            }
        );
        // k..z right after a digit is fine: the cell is not a digit cell.
        assert_eq!(masks(&encode("1k")), vec![0x3C, 0x01, 0x05]);
        // Uppercase A after a digit is fine: the capital indicator ends the run.
        assert_eq!(masks(&encode("1A")), vec![0x3C, 0x01, 0x20, 0x01]);
    }

    #[test]
    fn unsupported_character_policies() {
        let err = encode_text("é", &table(), UnknownCharPolicy::Strict).unwrap_err();
        assert_eq!(
            err,
            BrailleError::UnsupportedCharacter {
                position: 0,
                ch: 'é'
            }
        );

        let enc = encode_text("a é", &table(), UnknownCharPolicy::Replace).unwrap();
        assert_eq!(masks(&enc.tokens), vec![0x01, 0x00, 0x00]);
        assert_eq!(
            enc.warnings,
            vec![EncodeWarning {
                position: 2,
                ch: 'é'
            }]
        );
    }

    #[test]
    fn unicode_bijection_all_64() {
        let mut seen = std::collections::HashSet::new();
        for mask in 0u8..64 {
            let cell = BrailleCell::from_mask(mask).unwrap();
            let ch = cell.to_unicode();
            let cp = ch as u32;
            assert!((0x2800..=0x283F).contains(&cp));
            assert!(seen.insert(cp), "codepoint collision at mask {mask}");
            assert_eq!(BrailleCell::from_unicode(ch).unwrap(), cell);
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn unicode_examples() {
        assert_eq!(BrailleCell::BLANK.to_unicode(), '\u{2800}');
        assert_eq!(BrailleCell::from_mask(17).unwrap().to_unicode(), '\u{2811}'); // e
        assert_eq!(BrailleCell::from_mask(63).unwrap().to_unicode(), '\u{283F}');
        assert_eq!(BrailleCell::from_unicode('\u{2811}').unwrap().mask(), 17);
        assert_eq!(
            BrailleCell::from_unicode('\u{28FF}').unwrap_err(),
            BrailleError::CodepointOutOfRange(0x28FF)
        );
    }

    #[test]
    fn mask_range_checked() {
        assert!(BrailleCell::from_mask(63).is_ok());
        assert_eq!(
            BrailleCell::from_mask(64).unwrap_err(),
            BrailleError::MaskOutOfRange(64)
        );
    }

    #[test]
    fn mirror_swaps_columns() {
        assert_eq!(BrailleCell::BLANK.mirror(), BrailleCell::BLANK);
        // dots 1,5 -> dots 4,2
        assert_eq!(BrailleCell(0x11).mirror(), BrailleCell(0x0A));
        assert_eq!(BrailleCell(0x3F).mirror(), BrailleCell(0x3F));
    }

    #[test]
    fn mirror_matches_dot_permutation_oracle() {
        // Independent oracle: move each dot through the 1<->4, 2<->5, 3<->6
        // permutation one dot at a time.
        for mask in 0u8..64 {
            let cell = BrailleCell::from_mask(mask).unwrap();
            let mut expect = 0u8;
            for dot in 1u8..=6 {
                if cell.has_dot(dot) {
                    let swapped = if dot <= 3 { dot + 3 } else { dot - 3 };
                    expect |= 1 << (swapped - 1);
                }
            }
            assert_eq!(cell.mirror().mask(), expect, "mask {mask:#04x}");
            assert_eq!(cell.mirror().mirror(), cell, "involution at {mask:#04x}");
        }
    }

    #[test]
    fn decode_examples() {
        let t = table();
        assert_eq!(
            decode_cells(&[CellToken::Cell(BrailleCell(0x01))], &t).unwrap(),
            "a"
        );
        assert_eq!(decode_cells(&[], &t).unwrap(), "");
        assert_eq!(
            decode_cells(&[CellToken::Cell(BrailleCell::CAPITAL)], &t).unwrap_err(),
            BrailleError::UndecodableSequence(0)
        );
        // Dangling number indicator.
        assert_eq!(
            decode_cells(&[CellToken::Cell(BrailleCell::NUMBER)], &t).unwrap_err(),
            BrailleError::UndecodableSequence(0)
        );
        // A cell with no reverse mapping (all six dots) in letter position.
        assert_eq!(
            decode_cells(&[CellToken::Cell(BrailleCell(0x3F))], &t).unwrap_err(),
            BrailleError::UndecodableSequence(0)
        );
        // Capital indicator in front of punctuation is not a word.
        let comma = t.punctuation(',').unwrap();
        assert_eq!(
            decode_cells(
                &[
                    CellToken::Cell(BrailleCell::CAPITAL),
                    CellToken::Cell(comma)
                ],
                &t
            )
            .unwrap_err(),
            BrailleError::UndecodableSequence(0)
        );
    }

    #[test]
    fn round_trip_fixed_corpus() {
        let t = table();
        for text in [
            "hello world",
            "Hello, World!",
            "abc xyz",
            "The answer is 42.",
            "line one\nline two",
            "MIXED case AND 100 digits",
            "punct: .,?!-';",
            "1A2B3C",
            "",
        ] {
            let enc = encode_text(text, &t, UnknownCharPolicy::Strict).unwrap();
            assert_eq!(
                decode_cells(&enc.tokens, &t).unwrap(),
                text,
                "round trip of {text:?}"
            );
        }
    }

    #[test]
    fn unicode_string_renders_cells_and_breaks() {
        let enc = encode_text("ab\ncd", &table(), UnknownCharPolicy::Strict).unwrap();
        assert_eq!(unicode_string(&enc.tokens), "⠁⠃\n⠉⠙");
    }

    #[test]
    fn letter_map_is_injective() {
        let t = table();
        let mut seen = std::collections::HashSet::new();
        for ch in 'a'..='z' {
            assert!(
                seen.insert(t.letter(ch).unwrap().mask()),
                "duplicate cell for {ch}"
            );
        }
    }

    #[test]
    fn letter_masks_match_unicode_chart() {
        // Spot-check against the published Unicode Braille Patterns chart:
        // the codepoint name encodes the dot set.
        let t = table();
        let expect = [
            ('a', '⠁'),
            ('b', '⠃'),
            ('c', '⠉'),
            ('e', '⠑'),
            ('j', '⠚'),
            ('m', '⠍'),
            ('s', '⠎'),
            ('w', '⠺'),
            ('z', '⠵'),
        ];
        for (ch, braille) in expect {
            assert_eq!(t.letter(ch).unwrap().to_unicode(), braille, "letter {ch}");
        }
    }
}
